use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use tepml::fundsol::{apply_r, identity_point, max_abs, y_seeded};
use tepml::{f_lambda_derivs, MaterialParams, PmlProfile, ThermoelasticKernel, C64};

fn medium(gamma: f64) -> MaterialParams {
    MaterialParams {
        rho: 1.0,
        lame_lambda: 1.0,
        lame_mu: 1.0,
        gamma,
        eta: 0.2,
        kappa: 1.0,
        omega: C64::new(2.0, 0.0),
    }
}

fn kernel() -> ThermoelasticKernel {
    ThermoelasticKernel::new(&medium(0.2)).unwrap()
}

fn random_dir(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

fn rel(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / scale
}

#[test]
fn f_derivs_small_cases() {
    let f = f_lambda_derivs(C64::new(0.0, 0.0), C64::new(2.0, 0.0), 2).unwrap();
    assert!((f[0] - 0.5).norm() < 1e-15);
    assert!((f[1] + 0.25).norm() < 1e-15);
    assert!((f[2] - 0.25).norm() < 1e-15);
    let f = f_lambda_derivs(C64::new(1.0, 0.0), C64::new(PI, 0.0), 0).unwrap();
    assert!((f[0] + 1.0 / PI).norm() < 1e-15);
    assert!(f_lambda_derivs(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 1).is_err());
}

#[test]
fn f_derivs_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let lam = C64::new(rng.random_range(0.1..3.0), rng.random_range(0.0..1.0));
        let z = C64::new(rng.random_range(0.3..3.0), rng.random_range(0.0..1.5));
        let h = 1e-5 * z.norm();
        let f = f_lambda_derivs(lam, z, 3).unwrap();
        let fp = f_lambda_derivs(lam, z + h, 3).unwrap();
        let fm = f_lambda_derivs(lam, z - h, 3).unwrap();
        for n in 0..3 {
            let fd = (fp[n] - fm[n]) / (2.0 * h);
            assert!((fd - f[n + 1]).norm() <= 1e-7 * f[n + 1].norm().max(1e-3), "n = {n}");
        }
    }
}

#[test]
fn f_derivs_blow_up_no_faster_than_inverse_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let lam = C64::new(1.3, 0.4);
    let mut worst = [0.0f64; 4];
    for _ in 0..1000 {
        let r = rng.random_range(1e-4..1.0f64);
        let t = rng.random_range(0.0..PI);
        let z = C64::from_polar(r, t);
        let f = f_lambda_derivs(lam, z, 3).unwrap();
        for n in 0..4 {
            worst[n] = worst[n].max(f[n].norm() * r.powi(n as i32 + 1));
        }
    }
    // |P_n| ≤ Σ|coeffs| ≤ 1, 2, 5, 16 on the unit disk, |e^{iλz}| ≤ e^{|λ|}.
    let growth = lam.norm().exp();
    for (n, bound) in [1.0, 2.0, 5.0, 16.0].into_iter().enumerate() {
        assert!(worst[n] <= bound * growth * 1.0001, "n = {n}: {}", worst[n]);
    }
}

#[test]
fn elastic_block_symmetric_and_thermal_corner() {
    let k = kernel();
    let phi = k.eval_phi([0.3, -0.7, 0.5]).unwrap().m;
    for i in 0..3 {
        for j in 0..3 {
            assert!((phi[i][j] - phi[j][i]).norm() < 1e-15);
        }
    }
    let x = [0.6, 0.0, 0.8];
    let phi = k.eval_phi(x).unwrap().m;
    let i = C64::new(0.0, 1.0);
    let c = &k.coeffs;
    let expect = c.beta[0] * (i * k.waves.l1).exp() + c.beta[1] * (i * k.waves.l2).exp();
    assert!((phi[3][3] - expect).norm() < 1e-15);
}

#[test]
fn coefficients_closed_forms() {
    let p = medium(0.2);
    let k = ThermoelasticKernel::new(&p).unwrap();
    let c = &k.coeffs;
    assert_eq!(c.beta[2], C64::new(0.0, 0.0));
    assert_eq!(c.gamma[2], C64::new(0.0, 0.0));
    assert!((c.alpha[2] + 1.0 / (2.0 * PI * 4.0)).norm() < 1e-16);
    let gap = k.waves.l2 * k.waves.l2 - k.waves.l1 * k.waves.l1;
    assert!((c.gamma[0] + 1.0 / (2.0 * PI * 3.0 * gap)).norm() < 1e-15);
    assert!((c.gamma[1] - 1.0 / (2.0 * PI * 3.0 * gap)).norm() < 1e-15);
}

#[test]
fn radial_template_matches_direct_formula() {
    let k = kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let r = rng.random_range(0.2..5.0);
        let x = random_dir(&mut rng).map(|c| c * r);
        let direct = k.eval_phi(x).unwrap().m;
        let radial = k.phi_radial(x.map(C64::from));
        let scale = max_abs(&direct);
        for i in 0..4 {
            for j in 0..4 {
                assert!(rel(direct[i][j], radial[i][j], scale) < 1e-10, "({i},{j})");
            }
        }
    }
}

/// Elastic Green's tensor written out independently.
fn pure_elastic(p: &MaterialParams, x: [f64; 3]) -> [[C64; 3]; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let w2 = p.omega * p.omega;
    let ks = p.omega * (p.rho / p.lame_mu).sqrt();
    let kp = p.omega * (p.rho / p.p_modulus()).sqrt();
    let i = C64::new(0.0, 1.0);
    let hess = |k: C64, a: usize, b: usize| {
        let e = (i * k * r).exp();
        let g1 = e * (i * k * r - 1.0) / (r * r);
        let g2 = e * (-k * k * r * r - 2.0 * i * k * r + 2.0) / (r * r * r);
        let dab = if a == b { 1.0 } else { 0.0 };
        x[a] * x[b] / (r * r) * g2 + (dab / r - x[a] * x[b] / r.powi(3)) * g1
    };
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let dab = if a == b { 1.0 } else { 0.0 };
            dab * (i * ks * r).exp() / (2.0 * PI * p.lame_mu * r)
                + (hess(ks, a, b) - hess(kp, a, b)) / (2.0 * PI * p.rho * w2)
        })
    })
}

#[test]
fn vanishing_coupling_gives_elastic_tensor() {
    let p = medium(1e-10);
    let k = ThermoelasticKernel::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = random_dir(&mut rng).map(|c| c * rng.random_range(0.5..3.0));
        let phi = k.eval_phi(x).unwrap().m;
        let el = pure_elastic(&p, x);
        let scale = max_abs(&phi);
        for a in 0..3 {
            assert!(phi[a][3].norm() < 1e-9 * scale);
            for b in 0..3 {
                assert!(rel(phi[a][b], el[a][b], scale) < 1e-8, "({a},{b})");
            }
        }
    }
}

/// Worst residual over the sample and, per point, the largest over the four
/// columns.
fn residual_sample(k: &ThermoelasticKernel, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = [0.1, -0.2, 0.05];
    let (mut worst, mut weakest_point) = (0.0f64, f64::INFINITY);
    for _ in 0..50 {
        let r = rng.random_range(0.5..4.0);
        let d = random_dir(&mut rng);
        let x = std::array::from_fn(|a| y0[a] + r * d[a]);
        let at_point = (0..4).map(|c| k.pde_residual(x, y0, c, 1e-3).unwrap()).fold(0.0, f64::max);
        worst = worst.max(at_point);
        weakest_point = weakest_point.min(at_point);
    }
    (worst, weakest_point)
}

#[test]
fn every_column_solves_the_system() {
    let (worst, _) = residual_sample(&kernel(), 5);
    assert!(worst < 1e-5, "worst residual {worst:.3e}");
}

#[test]
fn perturbed_wavenumber_is_detected() {
    let p = medium(0.2);
    let mut w = tepml::characteristic_roots(&p).unwrap();
    w.l1 *= 1.01;
    let bad = ThermoelasticKernel::from_waves(&p, &w);
    let (worst, weakest_point) = residual_sample(&bad, 5);
    assert!(worst > 1e-2, "worst residual {worst:.3e}");
    assert!(weakest_point > 1e-4, "undetected at some point: {weakest_point:.3e}");
    assert!(kernel().pde_residual([0.005, 0.0, 0.0], [0.0; 3], 0, 1e-3).is_err());
}

/// Adjoint traction of row k of Φ(x − ·) at y, by central differences.
fn dl_by_differences(k: &ThermoelasticKernel, x: [f64; 3], y: [f64; 3], nu: [f64; 3], h: f64) -> [[C64; 4]; 4] {
    let phi = |y: [f64; 3]| k.eval_phi([x[0] - y[0], x[1] - y[1], x[2] - y[2]]).unwrap().m;
    let mut grad = [[[C64::new(0.0, 0.0); 3]; 4]; 4];
    for b in 0..3 {
        let mut yp = y;
        let mut ym = y;
        yp[b] += h;
        ym[b] -= h;
        let (fp, fm) = (phi(yp), phi(ym));
        for kk in 0..4 {
            for a in 0..4 {
                grad[kk][a][b] = (fp[kk][a] - fm[kk][a]) / (2.0 * h);
            }
        }
    }
    let phi0 = phi(y);
    let p = &k.params;
    let iwe = C64::new(0.0, 1.0) * p.omega * p.eta;
    std::array::from_fn(|kk| {
        let g = &grad[kk];
        let div = g[0][0] + g[1][1] + g[2][2];
        std::array::from_fn(|i| {
            if i == 3 {
                (0..3).map(|b| g[3][b] * nu[b]).sum()
            } else {
                let mut t = p.lame_lambda * div * nu[i] - iwe * phi0[kk][3] * nu[i];
                for b in 0..3 {
                    t += p.lame_mu * (g[i][b] + g[b][i]) * nu[b];
                }
                t
            }
        })
    })
}

#[test]
fn double_layer_kernel_matches_differences() {
    let k = kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let y = random_dir(&mut rng);
        let x = random_dir(&mut rng).map(|c| c * 2.5);
        let nu = random_dir(&mut rng);
        let an = k.apply_stress_operator(x, y, nu, None).unwrap().m;
        let fd = dl_by_differences(&k, x, y, nu, 1e-5);
        let scale = max_abs(&an);
        for a in 0..4 {
            for b in 0..4 {
                assert!(rel(an[a][b], fd[a][b], scale) < 1e-6, "({a},{b})");
            }
        }
    }
}

#[test]
fn thermal_corner_of_double_layer() {
    let k = kernel();
    let (x, y) = ([1.7, 0.4, -0.3], [1.0, 0.2, 0.1]);
    let d = k.apply_stress_operator(x, y, [1.0, 0.0, 0.0], None).unwrap().m;
    let r = ((0.7f64).powi(2) + 0.04 + 0.16).sqrt();
    let mut expect = C64::new(0.0, 0.0);
    for l in 0..2 {
        let f = f_lambda_derivs(k.waves.all()[l], C64::from(r), 1).unwrap();
        expect += k.coeffs.beta[l] * f[1];
    }
    expect *= -(x[0] - y[0]) / r;
    assert!((d[3][3] - expect).norm() < 1e-14 * expect.norm().max(1.0));
}

#[test]
fn stretched_kernel_without_absorption_is_plain() {
    let k = kernel();
    let flat = PmlProfile::new([1.0; 3], [1.0; 3], [1.5; 3], 0.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = random_dir(&mut rng).map(|c| c * 1.9);
        let y = random_dir(&mut rng).map(|c| c * 0.9);
        let a = k.eval_phi_stretched(x, y, &flat).unwrap().m;
        let b = k.eval_phi([x[0] - y[0], x[1] - y[1], x[2] - y[2]]).unwrap().m;
        let scale = max_abs(&b);
        for i in 0..4 {
            for j in 0..4 {
                assert!(rel(a[i][j], b[i][j], scale) < 1e-12);
            }
        }
        let nu = random_dir(&mut rng);
        let a = k.apply_stress_operator(x, y, nu, Some(&flat)).unwrap().m;
        let b = k.apply_stress_operator(x, y, nu, None).unwrap().m;
        assert!(max_abs(&std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))) < 1e-12 * max_abs(&b));
    }
}

#[test]
fn stretched_double_layer_matches_differences_on_the_interface() {
    let k = kernel();
    let p = PmlProfile::new([1.0; 3], [1.0; 3], [1.5; 3], 1.0, 2.0).unwrap();
    let x = [1.8, 0.3, -1.6];
    let y = [1.0, 0.2, -0.5];
    let nu = [1.0, 0.0, 0.0];
    let an = k.apply_stress_operator(x, y, nu, Some(&p)).unwrap().m;
    let phi = |y: [f64; 3]| k.eval_phi_stretched(x, y, &p).unwrap().m;
    let h = 1e-5;
    let mut yp = y;
    let mut ym = y;
    yp[0] += h;
    ym[0] -= h;
    let (fp, fm) = (phi(yp), phi(ym));
    // Thermal corner: ∂_ν of Φ̃_k4 in y.
    for kk in 0..4 {
        let fd = (fp[kk][3] - fm[kk][3]) / (2.0 * h);
        assert!((fd - an[kk][3]).norm() < 1e-6 * max_abs(&an));
    }
    // On the interface the stretched seeds reduce to the plain ones.
    let ys = identity_point(y);
    let xs = p.stretch(x);
    let seeded = y_seeded(&xs, &p.stretch(y));
    let plain = y_seeded(&xs, &ys);
    for a in 0..3 {
        assert_eq!(seeded[a].d, plain[a].d);
    }
}

#[test]
fn traction_examples() {
    let p = medium(0.2);
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let nu = [0.6, 0.0, 0.8];
    let id = [[one, z, z], [z, one, z], [z, z, one], [z, z, z]];
    let out = apply_r([z; 4], id, nu, &p);
    for i in 0..3 {
        assert!((out[i] - 5.0 * nu[i]).norm() < 1e-15);
    }
    let out = apply_r([z, z, z, one], [[z; 3]; 4], nu, &p);
    for i in 0..3 {
        assert!((out[i] + 0.2 * nu[i]).norm() < 1e-15);
    }
    assert_eq!(out[3], z);
    let out = apply_r([z; 4], [[z; 3], [z; 3], [z; 3], [one, z, z]], nu, &p);
    assert!((out[3] - 0.6).norm() < 1e-15);
}
