use calderon_core::faddeev::*;
use calderon_core::field::{FaddeevKernel, GridSpec};
use calderon_core::phantom::*;
use num_complex::Complex64 as C;

fn bump(t: f64, r: f64, n: usize) -> Potential<f64> {
    PhantomRecipe::radial_bump(t, [0.0, 0.0], r, GridRecipe { s: 2.1, n, offset: false })
        .potential()
        .unwrap()
}

fn born(v: &Potential<f64>, lam: C) -> C {
    // Independent quadrature of ∫ e^{2i(x₁λ₁ - x₂λ₂)} v dA.
    let g = v.grid();
    let mut acc = C::new(0.0, 0.0);
    for (k, vv) in v.field.values().iter().enumerate() {
        let z = g.node_at(k);
        acc += C::from_polar(1.0, 2.0 * (z.re * lam.re - z.im * lam.im)) * vv.re;
    }
    acc * g.cell_area()
}

#[test]
fn zero_potential() {
    let g = GridSpec::centered(2.1, 64, false).unwrap();
    let v = Potential::<f64>::zero(g, 4).unwrap();
    let mu = solve_mu(&v, C::new(3.0, -1.0), 1e-8).unwrap();
    assert!(mu.values().iter().all(|&m| m == C::new(1.0, 0.0)));
    assert_eq!(scattering_direct(&v, C::new(3.0, -1.0), &FaddeevConfig::default()).unwrap(), C::new(0.0, 0.0));
    let lg = GridSpec::centered(8.0, 8, true).unwrap();
    assert!(scattering_grid(&v, &lg, &FaddeevConfig::default()).unwrap().is_zero());
}

#[test]
fn krylov_matches_damped_fixed_point() {
    let v = bump(0.5, 0.5, 256);
    let lam = C::new(2.0, 1.0);
    let tol = 1e-8;
    let mu = solve_mu(&v, lam, tol).unwrap();
    let kernel = FaddeevKernel::new(v.grid(), lam, None).unwrap();
    let omega = 0.5;
    let mut x = vec![C::new(1.0, 0.0); v.grid().len()];
    for _ in 0..1000 {
        let src: Vec<C> = x.iter().zip(v.field.values()).map(|(a, b)| a * b.re).collect();
        let conv = kernel.apply(&src);
        let mut step: f64 = 0.0;
        for (xi, ci) in x.iter_mut().zip(conv) {
            let d = (C::new(1.0, 0.0) - ci - *xi) * omega;
            step = step.max(d.norm());
            *xi += d;
        }
        if step < 1e-14 {
            break;
        }
    }
    let diff = x.iter().zip(mu.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff <= 10.0 * tol, "fixed point vs Krylov: {diff:e}");
}

#[test]
fn mu_minus_one_decays_like_inverse_lambda() {
    let v = bump(0.5, 0.5, 256);
    let dir = C::from_polar(1.0, 0.6);
    let (mut xs, mut ys) = (vec![], vec![]);
    let mut sup_mu: f64 = 0.0;
    for r in [8.0f64, 16.0, 32.0, 64.0] {
        let mu = solve_mu(&v, dir * r, 1e-8).unwrap();
        let dev = mu.values().iter().map(|m| (m - 1.0).norm()).fold(0.0, f64::max);
        sup_mu = sup_mu.max(mu.sup_norm());
        xs.push(r.ln());
        ys.push(dev.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");
    assert!(sup_mu < 10.0, "sup |μ| = {sup_mu}");
}

#[test]
fn born_limit_is_first_order_in_t() {
    let lam = C::new(2.0, 1.0);
    let dev = |t: f64| {
        let v = bump(t, 0.5, 256);
        let h = scattering_direct(&v, lam, &FaddeevConfig::default()).unwrap();
        (h / born(&v, lam) - 1.0).norm()
    };
    let (d1, d2) = (dev(0.01), dev(0.02));
    assert!(d1 < 1e-2, "{d1}");
    assert!((d2 / d1 - 2.0).abs() < 0.2, "deviation ratio {}", d2 / d1);
}

#[test]
fn decay_envelope_and_small_lambda() {
    let v = bump(0.5, 0.5, 256);
    let m = v.m;
    let bound_c = 8.0 * std::f64::consts::PI.powi(2) * norm_hat_m(&v.field, m);
    let cfg = FaddeevConfig::default();
    let dir = C::from_polar(1.0, 0.3);
    let radii = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut violated_at: f64 = 0.0;
    for r in radii {
        let h = scattering_direct(&v, dir * r, &cfg).unwrap();
        if h.norm() > bound_c * (1.0 + 4.0 * r * r).powf(-(m as f64) / 2.0) {
            violated_at = r;
        }
    }
    // A finite R exists within the sampled range.
    assert!(violated_at < 16.0, "envelope violated at |λ| = {violated_at}");

    let small: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&r| scattering_direct(&v, dir * r, &cfg).unwrap().norm())
        .collect();
    assert!(small.windows(2).all(|w| w[1] < w[0]), "{small:?}");
    let eps = (small[0] / small[3]).ln() / 8f64.ln();
    assert!(eps > 0.0, "fitted exponent {eps}");
}

#[test]
fn amplitude_is_stable_under_z_refinement() {
    for lam in [C::new(0.3, 0.2), C::new(1.0, 0.5), C::new(2.0, 1.0), C::new(-3.0, 2.0)] {
        let a = scattering_direct(&bump(0.5, 0.8, 256), lam, &FaddeevConfig::default()).unwrap();
        let b = scattering_direct(&bump(0.5, 0.8, 512), lam, &FaddeevConfig::default()).unwrap();
        let rel = (a - b).norm() / b.norm();
        assert!(rel <= 1e-3, "λ = {lam}: {rel:e}");
    }
}

#[test]
fn sweep_is_deterministic_and_persists() {
    let v = bump(0.5, 0.5, 128);
    let lg = GridSpec::centered(4.0, 8, true).unwrap();
    let cfg = FaddeevConfig::default();
    let par = scattering_grid(&v, &lg, &cfg).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| scattering_grid(&v, &lg, &cfg).unwrap());
    assert_eq!(par.field.values(), serial.field.values());
    for (k, h) in par.field.values().iter().enumerate() {
        assert_eq!(*h, scattering_direct(&v, lg.node_at(k), &cfg).unwrap());
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.cgrid");
    let mut amp = par.clone();
    amp.phantom_recipe = Some(PhantomRecipe::radial_bump(0.5, [0.0, 0.0], 0.5, GridRecipe { s: 2.1, n: 128, offset: false }));
    amp.save(&path).unwrap();
    let back = ScatteringAmplitude::<f64>::load(&path).unwrap();
    assert_eq!(back.field.values(), amp.field.values());
    assert_eq!(back.meta(), amp.meta());
}

#[test]
fn lambda_grid_must_avoid_origin() {
    let g = GridSpec::centered(8.0, 8, false).unwrap();
    assert!(ScatteringAmplitude::<f64>::zeros(g, 4, Provenance::Direct).is_err());
}
