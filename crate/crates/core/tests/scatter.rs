use calderon_core::faddeev::*;
use calderon_core::field::{ComplexField, GridSpec};
use calderon_core::forward::*;
use calderon_core::phantom::*;
use calderon_core::scatter::*;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};

const NB: usize = 16;

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn bump(t: f64, r: f64) -> Potential<f64> {
    PhantomRecipe::radial_bump(t, [0.0, 0.0], r, GridRecipe { s: 2.1, n: 256, offset: false })
        .potential()
        .unwrap()
}

fn laplace() -> BoundaryOperator<f64> {
    BoundaryOperator::laplace(NB, OperatorKind::Schrodinger)
}

fn random_op(seed: u64, scale: f64) -> BoundaryOperator<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = 2 * NB + 1;
    let m = (0..d * d).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale).collect();
    BoundaryOperator::new(NB, OperatorKind::Schrodinger, m).unwrap()
}

#[test]
fn trace_of_constant_mu_is_the_plane_wave() {
    let g = GridSpec::centered(2.1, 64, false).unwrap();
    let one = ComplexField::constant(g, C::new(1.0, 0.0));
    let t0 = boundary_trace_psi(&one, C::new(0.0, 0.0), NB).unwrap();
    for k in -(NB as i64)..=NB as i64 {
        let want = if k == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
        assert!((t0.mode(k) - want).norm() < 1e-14);
    }
    for lam in [C::new(0.7, -0.2), C::new(-1.5, 1.0), C::new(0.0, 2.0)] {
        let tr = boundary_trace_psi(&one, lam, NB).unwrap();
        for k in -(NB as i64)..=NB as i64 {
            let want = if k >= 0 { (C::i() * lam).powu(k as u32) / factorial(k as u32) } else { C::new(0.0, 0.0) };
            assert!((tr.mode(k) - want).norm() < 1e-8, "λ = {lam}, k = {k}");
        }
    }
    let small = GridSpec::centered(1.0, 64, false).unwrap();
    assert!(boundary_trace_psi(&ComplexField::constant(small, C::new(1.0, 0.0)), C::new(0.0, 0.0), NB).is_err());
}

#[test]
fn trace_interpolation_converges() {
    let f = |z: C| C::new((z.re.sin() * (2.0 * z.im).cos()).exp(), 0.3 * z.re * z.im);
    let lam = C::new(0.5, 0.25);
    let pts = circle_points::<f64>(NB);
    let exact = BoundaryFunction::from_samples(
        &pts.iter().map(|&z| (C::i() * z * lam).exp() * f(z)).collect::<Vec<_>>(),
        NB,
    )
    .unwrap();
    let err = |n: usize| {
        let g = GridSpec::centered(2.1, n, false).unwrap();
        let mu = ComplexField::from_fn(g, f).unwrap();
        let tr = boundary_trace_psi(&mu, lam, NB).unwrap();
        tr.coeffs().iter().zip(exact.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(64), err(128));
    assert!(e1 / e2 >= 2.0, "{e1:e} -> {e2:e}");
}

#[test]
fn identical_operators_give_zero() {
    let phi0 = laplace();
    let tr = born_trace(C::new(1.0, 2.0), NB).unwrap();
    assert_eq!(h_from_dtn(&phi0, &phi0, C::new(1.0, 2.0), &tr).unwrap(), C::new(0.0, 0.0));
    let lg = GridSpec::centered(8.0, 8, true).unwrap();
    let h = h_grid_from_dtn(&phi0, &phi0, &lg, &PsiSource::Born, 4).unwrap();
    assert!(h.is_zero());
    assert_eq!(h.provenance, Provenance::FromDtnBorn);
    let other = BoundaryOperator::laplace(NB + 1, OperatorKind::Schrodinger);
    assert!(h_from_dtn(&other, &phi0, C::new(1.0, 2.0), &tr).is_err());
}

#[test]
fn pairing_is_linear_in_the_operator() {
    let phi0 = laplace();
    let a = random_op(1, 1e-3).add_scaled(&phi0, 1.0).unwrap();
    let b = random_op(2, 1e-3);
    let ab = a.add_scaled(&b, 1.0).unwrap();
    let b0 = phi0.add_scaled(&b, 1.0).unwrap();
    for lam in [C::new(0.3, 0.4), C::new(-2.0, 1.0)] {
        let tr = born_trace(lam, NB).unwrap();
        let lhs = h_from_dtn(&ab, &phi0, lam, &tr).unwrap() - h_from_dtn(&a, &phi0, lam, &tr).unwrap();
        let rhs = h_from_dtn(&b0, &phi0, lam, &tr).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }
}

#[test]
fn oracle_identity_matches_direct_amplitude() {
    let v = bump(0.5, 0.8);
    let phi = dtn_schrodinger(&v, &ForwardConfig::default()).unwrap();
    let phi0 = laplace();
    let cfg = FaddeevConfig::default();
    let lams = [C::new(0.2, 0.1), C::new(1.0, 0.5), C::new(-3.0, 2.0), C::new(0.0, 4.0), C::new(2.8, -2.8)];
    let source = PsiSource::Oracle { v: &v, cfg };
    let from_dtn = h_from_dtn_at(&phi, &phi0, &lams, &source).unwrap();
    for (lam, h) in lams.iter().zip(from_dtn) {
        let d = scattering_direct(&v, *lam, &cfg).unwrap();
        let rel = (h - d).norm() / d.norm();
        assert!(rel <= 3e-2, "λ = {lam}: {h} vs {d} ({rel:e})");

        // Pairing with the conjugated plane wave e^{-iz̄λ̄} instead of e^{iz̄λ̄}
        // is far off: the identity is bilinear.
        let tr = source.trace(*lam, NB).unwrap();
        let mut conj_pair = C::new(0.0, 0.0);
        for j in 0..=NB as i64 {
            let a = (C::i() * lam).powu(j as u32) / factorial(j as u32);
            let row: C = (-(NB as i64)..=NB as i64).map(|k| (phi.get(j, k) - phi0.get(j, k)) * tr.mode(k)).sum();
            conj_pair += a.conj() * row;
        }
        conj_pair *= 2.0 * std::f64::consts::PI;
        assert!((conj_pair - d).norm() / d.norm() > 0.5);
    }
}

#[test]
fn born_mode_matches_fourier_transform_for_weak_potentials() {
    let lam = C::new(1.0, 0.5);
    let dev = |t: f64| {
        let v = bump(t, 0.5);
        let phi = dtn_schrodinger(&v, &ForwardConfig::default()).unwrap();
        let h = h_from_dtn(&phi, &laplace(), lam, &born_trace(lam, NB).unwrap()).unwrap();
        let g = v.grid();
        let ft: C = v
            .field
            .values()
            .iter()
            .enumerate()
            .map(|(k, vv)| {
                let z = g.node_at(k);
                C::from_polar(vv.re * g.cell_area(), 2.0 * (z.re * lam.re - z.im * lam.im))
            })
            .sum();
        (h / ft - 1.0).norm()
    };
    let (d1, d2) = (dev(0.01), dev(0.02));
    assert!(d1 < 5e-2, "{d1}");
    assert!(d2 / d1 > 1.5 && d2 / d1 < 2.5, "{d1:e} {d2:e}");
}

#[test]
fn perturbation_growth_is_at_most_exponential() {
    let phi0 = laplace();
    let e = random_op(7, 1.0);
    let delta = 1e-6;
    let scale = delta / op_norm_h12_hm12(&e, &random_op(7, 0.0)).unwrap();
    let pert = phi0.add_scaled(&e, scale).unwrap();
    let (mut xs, mut ys) = (vec![], vec![]);
    for r in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        let worst = (0..8)
            .map(|a| {
                let lam = C::from_polar(r, a as f64 * std::f64::consts::PI / 4.0 + 0.1);
                let tr = born_trace(lam, NB).unwrap();
                (h_from_dtn(&pert, &phi0, lam, &tr).unwrap()).norm()
            })
            .fold(0.0, f64::max);
        xs.push(r);
        ys.push(worst.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope <= 2.5, "log-error slope {slope}");
}
