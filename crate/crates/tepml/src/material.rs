//! Thermoelastic medium constants, characteristic wavenumbers and the PML
//! admissibility conditions.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const I: C64 = C64::new(0.0, 1.0);

/// Constants of the isotropic thermoelastic medium plus the frequency.
///
/// `omega` is complex so that the imaginary-frequency coercivity probe can
/// reuse the same assembly code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub rho: f64,
    pub lame_lambda: f64,
    pub lame_mu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub kappa: f64,
    pub omega: C64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        let finite = [
            self.rho,
            self.lame_lambda,
            self.lame_mu,
            self.gamma,
            self.eta,
            self.kappa,
            self.omega.re,
            self.omega.im,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite material constant");
        }
        if self.rho <= 0.0 {
            return bad("rho must be positive");
        }
        if self.lame_mu <= 0.0 {
            return bad("mu must be positive");
        }
        if 3.0 * self.lame_lambda + 2.0 * self.lame_mu <= 0.0 {
            return bad("3 lambda + 2 mu must be positive");
        }
        if self.kappa <= 0.0 {
            return bad("kappa must be positive");
        }
        // Zero coupling is the decoupled limit and stays representable.
        if self.gamma < 0.0 || self.eta < 0.0 {
            return bad("gamma and eta must be non-negative");
        }
        if self.omega.norm() == 0.0 {
            return bad("omega must be nonzero");
        }
        Ok(())
    }

    /// λ + 2µ.
    pub fn p_modulus(&self) -> f64 {
        self.lame_lambda + 2.0 * self.lame_mu
    }

    /// q = iω/κ.
    pub fn q(&self) -> C64 {
        I * self.omega / self.kappa
    }

    /// Squared compressional wavenumber ρω²/(λ+2µ).
    pub fn kp2(&self) -> C64 {
        self.rho * self.omega * self.omega / self.p_modulus()
    }

    pub fn with_omega(mut self, omega: C64) -> Self {
        self.omega = omega;
        self
    }
}

/// (γ, η) from the expansion coefficient, reference temperature and
/// thermal conductivity.
pub fn derive_coupling(
    alpha_t: f64,
    t0: f64,
    lambda0: f64,
    lame_lambda: f64,
    lame_mu: f64,
) -> Result<(f64, f64)> {
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidParameter(format!("thermal conductivity {lambda0} must be positive")));
    }
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("reference temperature {t0} must be positive")));
    }
    let gamma = (3.0 * lame_lambda + 2.0 * lame_mu) * alpha_t;
    Ok((gamma, t0 * gamma / lambda0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveNumbers {
    pub kp: C64,
    pub q: C64,
    pub l1: C64,
    pub l2: C64,
    pub l3: C64,
    /// min(Re λ₁, Re λ₂, Re λ₃).
    pub cap_lambda: f64,
}

impl WaveNumbers {
    pub fn all(&self) -> [C64; 3] {
        [self.l1, self.l2, self.l3]
    }
}

/// Square root with Re ≥ 0, taking Im > 0 on the cut.
pub fn principal_sqrt(z: C64) -> C64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

/// Solves t² − S t + P = 0 for t = λ² and returns the principal roots,
/// labelled by ascending |λ²|.
pub fn characteristic_roots(params: &MaterialParams) -> Result<WaveNumbers> {
    params.validate()?;
    let w = params.omega;
    let kp2 = params.kp2();
    let q = params.q();
    let s = q + I * w * params.gamma * params.eta / params.p_modulus() + kp2;
    let p = q * kp2;

    // Cancellation-free pair: larger-magnitude root first, the other via Vieta.
    let disc = (s * s - 4.0 * p).sqrt();
    let big = if (s + disc).norm() >= (s - disc).norm() {
        0.5 * (s + disc)
    } else {
        0.5 * (s - disc)
    };
    let small = if big.norm() > 0.0 { p / big } else { C64::new(0.0, 0.0) };
    let (t1, t2) = (small, big);

    let scale = t1.norm().max(t2.norm());
    let gap = (t1 - t2).norm();
    if !(gap >= 1e-10 * scale) {
        return Err(Error::DegenerateRoots { gap, scale });
    }
    let l1 = principal_sqrt(t1);
    let l2 = principal_sqrt(t2);
    for (name, l) in [("l1", l1), ("l2", l2)] {
        if !(l.re > 0.0) {
            return Err(Error::RootSelection(format!("{name} = {l} has non-positive real part")));
        }
    }
    let l3 = w * (params.rho / params.lame_mu).sqrt();
    let cap_lambda = l1.re.min(l2.re).min(l3.re);
    Ok(WaveNumbers {
        kp: principal_sqrt(kp2),
        q,
        l1,
        l2,
        l3,
        cap_lambda,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub pass: bool,
    /// Left side minus right side; positive means room to spare.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub zeta: f64,
    pub alpha0: f64,
    pub entries: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintCheck> {
        self.entries.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.entries.iter().filter(|c| !c.pass)
    }
}

impl std::fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "constraints at zeta = {}, alpha0 = {}:", self.zeta, self.alpha0)?;
        for c in &self.entries {
            let tag = if c.pass { "ok  " } else { "FAIL" };
            writeln!(f, "  {tag} {:<16} slack {:+.6e}", c.name, c.slack)?;
        }
        Ok(())
    }
}

/// Evaluates the five conditions under which the truncated PML problem is
/// known to be uniquely solvable.
pub fn check_pml_constraints(params: &MaterialParams, zeta: f64, alpha0: f64) -> ConstraintReport {
    let (lam, mu, g) = (params.lame_lambda, params.lame_mu, params.gamma);
    let pm = params.p_modulus();
    let ge = |name: &str, slack: f64| ConstraintCheck {
        name: name.to_string(),
        pass: slack >= 0.0,
        slack,
    };
    let alpha_max = if g > 0.0 {
        (lam + mu) / (2.0 * g * pm)
    } else {
        f64::INFINITY
    };
    let ratio = if params.eta > 0.0 {
        params.rho * g * g / (params.eta * params.eta)
    } else {
        f64::INFINITY
    };
    let alpha_slack = alpha_max - alpha0;
    let entries = vec![
        ge("zeta_shear", zeta - (pm / mu).sqrt()),
        ge("coupling_ratio", ratio - 1.0),
        ge("zeta_coupling", zeta * zeta - 1.0 - 2.0 * g * zeta),
        ge("zeta_sqrt3", zeta - 3f64.sqrt()),
        ConstraintCheck {
            name: "alpha0_bound".to_string(),
            pass: alpha_slack > 0.0,
            slack: alpha_slack,
        },
    ];
    ConstraintReport { zeta, alpha0, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(omega: f64) -> MaterialParams {
        MaterialParams {
            rho: 1.0,
            lame_lambda: 1.0,
            lame_mu: 1.0,
            gamma: 1.0,
            eta: 1.0,
            kappa: 1.0,
            omega: C64::new(omega, 0.0),
        }
    }

    #[test]
    fn coupling_substitution() {
        assert_eq!(derive_coupling(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), (5.0, 5.0));
        assert_eq!(derive_coupling(0.0, 1.0, 1.0, 1.0, 1.0).unwrap(), (0.0, 0.0));
        let (g, e) = derive_coupling(2e-5, 300.0, 2.0, 5e9, 3e9).unwrap();
        assert!((g - 4.2e5).abs() < 1e-6 * 4.2e5);
        assert!((e - 6.3e7).abs() < 1e-6 * 6.3e7);
        assert!(derive_coupling(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(derive_coupling(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn unit_medium_quadratic() {
        let p = unit(1.0);
        let w = characteristic_roots(&p).unwrap();
        let s = C64::new(1.0 / 3.0, 4.0 / 3.0);
        let prod = C64::new(0.0, 1.0 / 3.0);
        let (a, b) = (w.l1 * w.l1, w.l2 * w.l2);
        assert!((a + b - s).norm() < 1e-13);
        assert!((a * b - prod).norm() < 1e-13);
        assert!(a.norm() <= b.norm());
        // Principal roots from a separate 40-digit polynomial solve.
        let l1 = C64::new(0.502_225_632_574_357_01, 0.015_485_709_376_740_798);
        let l2 = C64::new(0.837_146_754_589_202_35, 0.787_065_520_910_243_55);
        assert!((w.l1 - l1).norm() < 1e-13, "{}", w.l1);
        assert!((w.l2 - l2).norm() < 1e-13, "{}", w.l2);
    }

    #[test]
    fn decoupled_limit_factors() {
        let mut p = unit(1.5);
        p.gamma = 0.0;
        let w = characteristic_roots(&p).unwrap();
        let kp = C64::new(1.5 / 3f64.sqrt(), 0.0);
        let th = principal_sqrt(p.q());
        let (a, b) = if w.l1.norm() < w.l2.norm() { (w.l1, w.l2) } else { (w.l2, w.l1) };
        let (ea, eb) = if kp.norm() < th.norm() { (kp, th) } else { (th, kp) };
        assert!((a - ea).norm() < 1e-14 && (b - eb).norm() < 1e-14);
    }

    #[test]
    fn shear_wavenumber() {
        let mut p = unit(2.0);
        p.rho = 1.0;
        p.lame_mu = 1.0;
        let w = characteristic_roots(&p).unwrap();
        assert!((w.l3 - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(w.cap_lambda > 0.0);
    }

    #[test]
    fn imaginary_axis_root_is_rejected() {
        // At ω = i the compressional root sits on the cut: Re λ = 0.
        let p = unit(1.0).with_omega(C64::new(0.0, 1.0));
        assert!(matches!(characteristic_roots(&p), Err(Error::RootSelection(_))));
    }

    #[test]
    fn constraint_examples() {
        let mut p = unit(1.0);
        p.rho = 9.0;
        let r = check_pml_constraints(&p, 3.0, 0.1);
        assert!(r.all_pass(), "{r}");
        assert!((r.get("zeta_coupling").unwrap().slack - 2.0).abs() < 1e-14);

        let r = check_pml_constraints(&p, 1.0, 0.1);
        assert!(!r.get("zeta_sqrt3").unwrap().pass);
        assert!(!r.get("zeta_shear").unwrap().pass);

        let edge = (p.lame_lambda + p.lame_mu) / (2.0 * p.gamma * p.p_modulus());
        let r = check_pml_constraints(&p, 3.0, edge);
        assert!(!r.get("alpha0_bound").unwrap().pass);
        assert_eq!(r.failures().count(), 1);
    }
}
