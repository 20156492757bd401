mod common;

use calderon_core::dbar::*;
use calderon_core::faddeev::*;
use calderon_core::field::{ComplexField, GridSpec};
use calderon_core::phantom::*;
use num_complex::Complex64 as C;
use std::sync::OnceLock;

const Z0: C = C::new(0.2, 0.1);

struct Sweep {
    h: ScatteringAmplitude<f64>,
    mu_forward: Vec<C>,
}

fn sweep(n_lambda: usize) -> Sweep {
    let v: Potential<f64> = PhantomRecipe::radial_bump(0.5, [0.0, 0.0], 0.8, GridRecipe { s: 2.1, n: 128, offset: false })
        .potential()
        .unwrap();
    let lg = GridSpec::centered(4.0, n_lambda, true).unwrap();
    let mut sw = scattering_sweep(&v, &lg, &FaddeevConfig::default(), &[Z0]).unwrap();
    Sweep { h: sw.amplitude, mu_forward: sw.probes.remove(0) }
}

fn fine() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| sweep(32))
}

fn zgrid() -> GridSpec<f64> {
    GridSpec::centered(1.5, 16, false).unwrap()
}

fn sigma_error(sig: &Conductivity<f64>) -> f64 {
    let g = sig.grid();
    (0..g.len())
        .filter(|&k| g.node_at(k).norm() <= 1.0)
        .map(|k| (sig.field.values()[k].re - common::bump_sigma(g.node_at(k).norm(), 0.8, 0.5)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn zero_amplitude_is_the_identity() {
    let lg = GridSpec::centered(8.0, 16, true).unwrap();
    let h = ScatteringAmplitude::<f64>::zeros(lg, 4, Provenance::Direct).unwrap();
    let s = solve_mu_from_h(&h, Z0, &DbarConfig::default()).unwrap();
    assert_eq!(s.iterations, 0);
    assert!(s.values.values().iter().all(|&m| m == C::new(1.0, 0.0)));
    let rec = Reconstruction::new(&h, &zgrid(), &DbarConfig::default()).unwrap();
    assert!(rec.sigma().unwrap().field.values().iter().all(|&x| x == C::new(1.0, 0.0)));
    assert!(rec.v_explicit().unwrap().is_zero());
    assert!(rec.v_asymptotic().unwrap().is_zero());
}

#[test]
fn round_trip_matches_forward_faddeev_functions() {
    let sw = fine();
    let s = solve_mu_from_h(&sw.h, Z0, &DbarConfig::default()).unwrap();
    assert!(s.residual <= DbarConfig::default().residual_tol);
    let num: f64 = s.values.values().iter().zip(&sw.mu_forward).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = sw.mu_forward.iter().map(|b| b.norm_sqr()).sum();
    let rel = (num / den).sqrt();
    assert!(rel <= 3e-2, "relative L² distance {rel:e}");
}

#[test]
fn slices_do_not_depend_on_solve_order() {
    let h = &fine().h;
    let solver = DbarSolver::new(h, DbarConfig::default()).unwrap();
    let z1 = C::new(-0.4, 0.3);
    let (a1, a2) = (solver.solve(Z0).unwrap(), solver.solve(z1).unwrap());
    let (b2, b1) = (solver.solve(z1).unwrap(), solver.solve(Z0).unwrap());
    assert_eq!(a1.values.values(), b1.values.values());
    assert_eq!(a2.values.values(), b2.values.values());
}

#[test]
fn residual_above_tolerance_is_an_error() {
    let cfg = DbarConfig { residual_tol: 1e-9, ..Default::default() };
    assert!(solve_mu_from_h(&fine().h, Z0, &cfg).is_err());
    let small = GridSpec::centered(1.0, 16, false).unwrap();
    assert!(reconstruct_sigma(&fine().h, &small, &DbarConfig::default()).is_err());
}

#[test]
fn sigma_error_does_not_grow_under_lambda_refinement() {
    let coarse = sweep(16);
    let cfg = DbarConfig::default();
    let e_coarse = sigma_error(&reconstruct_sigma(&coarse.h, &zgrid(), &cfg).unwrap());
    let e_fine = sigma_error(&reconstruct_sigma(&fine().h, &zgrid(), &cfg).unwrap());
    assert!(e_fine <= 1.1 * e_coarse, "{e_coarse} -> {e_fine}");
}

#[test]
fn both_v_formulas_agree_and_mu_normalizes() {
    let rec = Reconstruction::new(&fine().h, &zgrid(), &DbarConfig::default()).unwrap();
    let (ve, va) = (rec.v_explicit().unwrap(), rec.v_asymptotic().unwrap());
    let diff = ve.field.max_abs_diff(&va.field).unwrap();
    assert!(diff <= 0.1 * ve.field.sup_norm(), "{diff} vs {}", ve.field.sup_norm());
    let c = rec.outer_ring_constant();
    assert!(c.is_finite() && c > 0.0);
    assert!(rec.max_residual() <= DbarConfig::default().residual_tol);
}

#[test]
fn weak_gaussian_pins_the_measure_constant() {
    // h = ∫ e_λ v dA for v = t exp(-|z|²/w²), μ ≈ 1.
    let (t, w) = (0.01, 0.4);
    let lg = GridSpec::centered(8.0, 64, true).unwrap();
    let h = ComplexField::from_fn(lg, |l| C::new(t * std::f64::consts::PI * w * w * (-w * w * l.norm_sqr()).exp(), 0.0)).unwrap();
    let h = ScatteringAmplitude::new(h, 4, Provenance::Direct).unwrap();
    let zg = zgrid();
    let rec = Reconstruction::new(&h, &zg, &DbarConfig::default()).unwrap();
    for v in [rec.v_explicit().unwrap(), rec.v_asymptotic().unwrap()] {
        let err = (0..zg.len())
            .filter(|&k| zg.node_at(k).norm() <= 1.0)
            .map(|k| (v.field.values()[k].re - t * (-zg.node_at(k).norm_sqr() / (w * w)).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 0.05 * t, "relative error {}", err / t);
    }
}
