use proptest::prelude::*;
use tepml::material::principal_sqrt;
use tepml::{characteristic_roots, check_pml_constraints, MaterialParams, PmlProfile, C64};

fn medium() -> impl Strategy<Value = MaterialParams> {
    (0.5..5.0f64, 0.5..5.0f64, 0.0..1.0f64, 0.1..5.0f64, 0.01..2.0f64, 0.01..2.0f64, 0.1..10.0f64).prop_map(
        |(rho, mu, lam_frac, kappa, gamma, eta, omega)| MaterialParams {
            rho,
            lame_mu: mu,
            // spans 3λ + 2µ > 0 including negative λ
            lame_lambda: -2.0 * mu / 3.0 + 0.05 + lam_frac * 5.0,
            gamma,
            eta,
            kappa,
            omega: C64::new(omega, 0.0),
        },
    )
}

fn profile() -> impl Strategy<Value = PmlProfile> {
    (
        prop::array::uniform3(0.3..2.0f64),
        prop::array::uniform3(0.5..2.0f64),
        prop::array::uniform3(0.05..1.0f64),
        0.0..2.0f64,
        1.0..4.0f64,
    )
        .prop_map(|(l, d, frac, alpha0, zeta)| {
            let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let lbar = std::array::from_fn(|j| l[j] + frac[j] * dmin / 2.0);
            PmlProfile::new(l, d, lbar, alpha0, zeta).unwrap()
        })
}

/// Point on the surface of the box with half-widths `half`, from a face index and two coordinates in [-1, 1].
fn on_box(half: [f64; 3], face: usize, u: f64, v: f64) -> [f64; 3] {
    let axis = face % 3;
    let side = if face < 3 { 1.0 } else { -1.0 };
    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut p = [0.0; 3];
    p[axis] = side * half[axis];
    p[b] = u * half[b];
    p[c] = v * half[c];
    p
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vieta_and_root_signs(p in medium()) {
        let w = characteristic_roots(&p).unwrap();
        let (t1, t2) = (w.l1 * w.l1, w.l2 * w.l2);
        let q = p.q();
        let s = q + C64::new(0.0, 1.0) * p.omega * p.gamma * p.eta / p.p_modulus() + p.kp2();
        prop_assert!(rel(t1 + t2, s) < 1e-12);
        prop_assert!(rel(t1 * t2, q * p.kp2()) < 1e-12);
        for l in [w.l1, w.l2] {
            prop_assert!(l.re > 0.0 && l.im > 0.0, "{l}");
        }
        prop_assert!(w.cap_lambda > 0.0);
        prop_assert!(t1.norm() <= t2.norm());
    }

    #[test]
    fn weak_coupling_approaches_decoupled_roots(p in medium()) {
        let weak = MaterialParams { gamma: 1e-8, ..p };
        let w = characteristic_roots(&weak).unwrap();
        let kp = principal_sqrt(p.kp2());
        let th = principal_sqrt(p.q());
        // labels follow |λ²|, so match as a set
        let (a, b) = if kp.norm() <= th.norm() { (kp, th) } else { (th, kp) };
        prop_assert!(rel(w.l1, a) < 1e-6 && rel(w.l2, b) < 1e-6);
    }

    #[test]
    fn zeta_conditions_are_monotone(p in medium(), zeta in 0.5..5.0f64, bump in 0.0..3.0f64) {
        let lo = check_pml_constraints(&p, zeta, 0.1);
        let hi = check_pml_constraints(&p, zeta + bump, 0.1);
        for name in ["zeta_shear", "zeta_coupling", "zeta_sqrt3"] {
            if lo.get(name).unwrap().pass {
                prop_assert!(hi.get(name).unwrap().pass, "{name}");
            }
        }
    }

    #[test]
    fn alpha_is_even_and_monotone(prof in profile(), axis in 0..3usize, t in 0.0..4.0f64, dt in 0.0..0.5f64) {
        prop_assert_eq!(prof.alpha(axis, t), prof.alpha(axis, -t));
        prop_assert!(prof.alpha(axis, t + dt) >= prof.alpha(axis, t));
        let a = prof.alpha_antiderivative(axis, t);
        prop_assert_eq!(a, -prof.alpha_antiderivative(axis, -t));
    }

    #[test]
    fn antiderivative_differentiates_to_alpha(prof in profile(), axis in 0..3usize, t in -4.0..4.0f64) {
        let h = 1e-5;
        let fd = (prof.alpha_antiderivative(axis, t + h) - prof.alpha_antiderivative(axis, t - h)) / (2.0 * h);
        let w = prof.lbar[axis] - prof.l[axis];
        // centred difference error ~ h² α''' and α''' scales like α₀/w³
        let tol = 1e-8 + 50.0 * h * h * prof.alpha0 / w.powi(3);
        prop_assert!((fd - prof.alpha(axis, t)).abs() < tol, "{fd} vs {}", prof.alpha(axis, t));
    }

    #[test]
    fn matrices_are_consistent(prof in profile(), x in prop::array::uniform3(-4.0..4.0f64)) {
        let m = prof.pml_matrices(x);
        let s = prof.stretch(x).s;
        prop_assert!(rel(m.j, s[0] * s[1] * s[2]) < 1e-14);
        for j in 0..3 {
            prop_assert!(rel(m.k[j], m.a[j] * m.b[j]) < 1e-14);
            if x[j].abs() <= prof.l[j] {
                prop_assert_eq!(s[j], C64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn stretching_is_scale_invariant_for_r0(prof in profile(), c in 0.1..10.0f64) {
        let scaled = PmlProfile::new(prof.l.map(|v| v * c), prof.d.map(|v| v * c), prof.lbar.map(|v| v * c), prof.alpha0, prof.zeta).unwrap();
        prop_assert!((scaled.r0_constant() - prof.r0_constant()).abs() < 1e-14);
    }

    #[test]
    fn distance_sandwich_on_boundary_pairs(
        prof in profile(),
        fx in 0..6usize, ux in -1.0..1.0f64, vx in -1.0..1.0f64,
        fy in 0..6usize, uy in -1.0..1.0f64, vy in -1.0..1.0f64,
    ) {
        let x = on_box(prof.outer(), fx, ux, vx);
        let y = on_box(prof.l, fy, uy, vy);
        let r = ((x[0]-y[0]).powi(2) + (x[1]-y[1]).powi(2) + (x[2]-y[2]).powi(2)).sqrt();
        let d = prof.complex_distance(x, y).unwrap();
        let eps = 1e-12 * r;
        prop_assert!(d.norm() >= r - eps);
        prop_assert!(d.norm() <= prof.distance_stretch_bound() * r + eps);
        let lb = prof.im_distance_lower_bound(x, y).unwrap();
        prop_assert!(d.im >= lb - eps);
        prop_assert!(lb >= prof.r0_constant() * prof.alpha0 * prof.d_min() - eps);
    }

    #[test]
    fn fields_are_continuous_across_joins(prof in profile(), axis in 0..3usize, which in 0..2usize) {
        let t = if which == 0 { prof.l[axis] } else { prof.lbar[axis] };
        let h = 1e-9;
        let (a, b) = (prof.alpha(axis, t - h), prof.alpha(axis, t + h));
        prop_assert!((a - b).abs() < 1e-6 * prof.alpha0.max(1e-300) + 1e-12);
        let mut x = [0.0; 3];
        x[axis] = t - h;
        let sa = prof.stretch(x);
        x[axis] = t + h;
        let sb = prof.stretch(x);
        prop_assert!((sa.xt[axis] - sb.xt[axis]).norm() <= 2.0 * h * (1.0 + prof.z().norm() * prof.alpha0) + 1e-14);
    }
}

#[test]
fn alpha_is_c2_at_the_joins() {
    let prof = PmlProfile::half_ramp([1.0; 3], [1.0; 3], 1.0, 2.0).unwrap();
    let h = 1e-3;
    for t in [prof.l[0], prof.lbar[0]] {
        let f = |s: f64| prof.alpha(0, s);
        let left = (f(t) - 2.0 * f(t - h) + f(t - 2.0 * h)) / (h * h);
        let right = (f(t + 2.0 * h) - 2.0 * f(t + h) + f(t)) / (h * h);
        assert!((left - right).abs() < 1e-4, "{t}: {left} vs {right}");
    }
}
