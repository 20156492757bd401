use calderon_core::field::{
    apply_multiplier, dbar_residual, faddeev_convolve, solid_cauchy, ComplexField, FaddeevKernel,
    GridSpec,
};
use num_complex::Complex64 as C;

fn bump(z: C, c: C, rho: f64) -> f64 {
    let t = (z - c).norm_sqr() / (rho * rho);
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t)).exp()
    }
}

#[test]
fn solid_cauchy_of_unit_disk_matches_direct_quadrature() {
    let g = GridSpec::centered(4.0, 512, false).unwrap();
    let f = ComplexField::from_real_fn(g, |z| if z.norm() < 1.0 { 1.0 } else { 0.0 }).unwrap();
    let u = solid_cauchy(&f).unwrap();
    let h2 = g.cell_area();
    for &pi in &[224usize, 256, 288] {
        for &pj in &[232usize, 256, 280] {
            let z = g.node(pi, pj);
            assert!(z.norm() < 0.75);
            // direct O(n²) sum per probe, skipping the self cell (odd kernel)
            let mut direct = C::new(0.0, 0.0);
            for k in 0..g.len() {
                let w = g.node_at(k);
                if k != pi * 512 + pj && w.norm() < 1.0 {
                    direct += h2 / (std::f64::consts::PI * (z - w));
                }
            }
            let got = u.get(pi, pj);
            let rel = (got - direct).norm() / direct.norm().max(1e-3);
            assert!(rel < 1e-2, "z={z} fft={got} direct={direct}");
            assert!((got - z.conj()).norm() < 1e-2 * z.norm().max(0.1), "z={z} got={got}");
        }
    }
}

#[test]
fn solid_cauchy_is_linear_and_inverts_dbar() {
    let g = GridSpec::centered(2.0, 128, true).unwrap();
    let f = ComplexField::from_fn(g, |z| C::new(bump(z, C::new(0.2, 0.1), 0.8), 0.3 * bump(z, C::new(0.0, 0.0), 0.6))).unwrap();
    let k = ComplexField::from_fn(g, |z| C::new(0.0, bump(z, C::new(-0.3, 0.2), 0.5))).unwrap();
    let a = C::new(1.5, -0.25);
    let b = C::new(-0.7, 2.0);
    let lhs = solid_cauchy(&f.axpby(a, &k, b).unwrap()).unwrap();
    let rhs = solid_cauchy(&f).unwrap().axpby(a, &solid_cauchy(&k).unwrap(), b).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
    let zero = solid_cauchy(&ComplexField::zeros(g)).unwrap();
    assert_eq!(zero.sup_norm(), 0.0);
    let u = solid_cauchy(&f).unwrap();
    assert!(dbar_residual(&u, &f).unwrap() <= 10.0 * g.cell());
}

// Apply -Δ - 4iλ∂̄ spectrally on the padded box and compare with f on the
// inner half of the original grid.
fn faddeev_residual(lambda: C, g: GridSpec<f64>) -> f64 {
    let f = ComplexField::from_fn(g, |z| C::new(bump(z, C::new(0.1, -0.05), 0.9), 0.5 * bump(z, C::new(-0.2, 0.1), 0.6))).unwrap();
    let kern = FaddeevKernel::new(&g, lambda, None).unwrap();
    let mut u = kern.apply_padded(f.values());
    let pg = kern.padded_grid();
    apply_multiplier(kern.fft(), &mut u, pg.cell(), |x1, x2| {
        C::new(x1 * x1 + x2 * x2, 0.0) + lambda * C::new(x1, x2) * 2.0
    });
    let big = pg.n_side;
    let n = g.n_side;
    let (mut num, mut den) = (0.0, 0.0);
    for i in n / 4..3 * n / 4 {
        for j in n / 4..3 * n / 4 {
            num += (u[i * big + j] - f.get(i, j)).norm_sqr();
            den += f.get(i, j).norm_sqr();
        }
    }
    (num / den).sqrt()
}

#[test]
fn faddeev_convolution_inverts_the_operator() {
    let g = GridSpec::centered(2.1, 256, false).unwrap();
    for lambda in [C::new(0.0, 0.0), C::new(0.05, 0.0), C::new(2.0, 1.0), C::new(-7.5, 3.0), C::new(16.0, 0.0), C::new(-30.0, 20.0), C::new(0.0, -64.0)] {
        let r = faddeev_residual(lambda, g);
        assert!(r <= 1e-6, "λ={lambda}: residual {r:e}");
    }
}

#[test]
fn faddeev_convolution_zero_and_linear() {
    let g = GridSpec::centered(2.1, 64, true).unwrap();
    let z = faddeev_convolve(C::new(3.0, 1.0), &ComplexField::zeros(g)).unwrap();
    assert_eq!(z.sup_norm(), 0.0);
}

#[test]
fn faddeev_convolution_decays_like_inverse_lambda() {
    let g = GridSpec::centered(2.1, 256, false).unwrap();
    let f = ComplexField::from_real_fn(g, |z| bump(z, C::new(0.0, 0.0), 0.8)).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..7 {
        let l = 8.0 * 2f64.powf(k as f64 / 2.0);
        let u = faddeev_convolve(C::new(l, 0.0), &f).unwrap();
        xs.push(l.ln());
        ys.push(u.sup_norm().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.2, "slope {slope}");
}

// Second-order finite-difference residual of the discrete solution
// shrinks by about 4 when the grid is refined.
#[test]
fn faddeev_convolution_converges_under_refinement() {
    let lambda = C::new(1.5, -0.5);
    let mut res = Vec::new();
    for n in [128usize, 256] {
        let g = GridSpec::centered(2.1, n, false).unwrap();
        let f = ComplexField::from_real_fn(g, |z| bump(z, C::new(0.0, 0.0), 0.8)).unwrap();
        let u = faddeev_convolve(lambda, &f).unwrap();
        let h = g.cell();
        let mut worst: f64 = 0.0;
        for i in n / 4..3 * n / 4 {
            for j in n / 4..3 * n / 4 {
                let lap = (u.get(i + 1, j) + u.get(i - 1, j) + u.get(i, j + 1) + u.get(i, j - 1) - u.get(i, j) * 4.0) / (h * h);
                let dbar = ((u.get(i, j + 1) - u.get(i, j - 1)) + C::i() * (u.get(i + 1, j) - u.get(i - 1, j))) / (4.0 * h);
                let lu = -lap - C::new(0.0, 4.0) * lambda * dbar;
                worst = worst.max((lu - f.get(i, j)).norm());
            }
        }
        res.push(worst);
    }
    assert!(res[0] / res[1] >= 3.5, "{res:?}");
}

#[test]
fn convolutions_are_deterministic() {
    let g = GridSpec::centered(2.1, 64, true).unwrap();
    let f = ComplexField::from_real_fn(g, |z| bump(z, C::new(0.1, 0.0), 0.7)).unwrap();
    let a = faddeev_convolve(C::new(2.0, 3.0), &f).unwrap();
    let b = faddeev_convolve(C::new(2.0, 3.0), &f).unwrap();
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}
