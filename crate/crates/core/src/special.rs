//! Special functions needed by the convolution kernels.
//!
//! Everything here is evaluated in `f64` and cast by callers; kernel tables
//! are built once per spectral parameter so the cost is irrelevant.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Scaled exponential integral `e^x E1(x)` on the principal branch
/// (cut along the negative real axis).
pub fn scaled_e1(x: Complex64) -> Complex64 {
    let r = x.norm();
    assert!(r > 0.0, "scaled_e1 is singular at the origin");
    if r >= ASYMPTOTIC_RADIUS {
        scaled_e1_asymptotic(x)
    } else if r < 2.0 || r + x.re < SERIES_LIMIT {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_cf(x)
    }
}

/// Exponential integral `E1(x)`.
pub fn e1(x: Complex64) -> Complex64 {
    let r = x.norm();
    if r < 2.0 || (r + x.re < SERIES_LIMIT && r < 700.0) {
        e1_series(x)
    } else {
        (-x).exp() * scaled_e1(x)
    }
}

/// `E1(y)` for real positive `y`, in real arithmetic; underflows to zero.
pub fn e1_real(y: f64) -> f64 {
    assert!(y > 0.0);
    if y > 700.0 {
        return 0.0;
    }
    if y <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..60 {
            term *= -y / n as f64;
            let add = term / n as f64;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        return -EULER_GAMMA - y.ln() - sum;
    }
    // Modified Lentz, as in the complex case.
    let tiny = 1e-300;
    let mut b = y + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-y).exp()
}

// The power series loses accuracy to cancellation as |x| + Re x grows;
// below this bound it agrees with the continued fraction to < 1e-12
// relative, and the continued fraction converges quickly beyond it.
const SERIES_LIMIT: f64 = 9.0;

// Beyond this radius the optimally truncated asymptotic series is accurate
// to ~1e-17 relative, including next to the branch cut, where the Stokes
// term is of size e^{-|x|}.
const ASYMPTOTIC_RADIUS: f64 = 40.0;

fn scaled_e1_asymptotic(x: Complex64) -> Complex64 {
    let inv = 1.0 / x;
    let mut term = inv;
    let mut sum = inv;
    let mut k = 1.0;
    loop {
        let next = -term * inv * k;
        if next.norm() >= term.norm() || next.norm() <= 1e-18 * sum.norm() {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum
}

fn e1_series(x: Complex64) -> Complex64 {
    // E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!)
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 1usize;
    loop {
        term *= -x * (1.0 / n as f64);
        let add = term * (1.0 / n as f64);
        sum += add;
        if add.norm_sqr() <= 1e-34 * sum.norm_sqr() || n > 4000 {
            break;
        }
        n += 1;
    }
    -EULER_GAMMA - x.ln() - sum
}

fn scaled_e1_cf(x: Complex64) -> Complex64 {
    // Modified Lentz on E1(x) = e^{-x} / (x+1 - 1/(x+3 - 4/(x+5 - ...)))
    let tiny = Complex64::new(1e-300, 0.0);
    let small = |z: Complex64| z.re.abs() + z.im.abs() < 1e-300;
    let mut b = x + 1.0;
    let mut c = Complex64::new(1.0 / 1e-300, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..20_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if small(d) {
            d = tiny;
        }
        c = b + an / c;
        if small(c) {
            c = tiny;
        }
        d = d.inv();
        let del = c * d;
        h *= del;
        if (del - 1.0).norm_sqr() < 1e-32 {
            break;
        }
    }
    h
}

/// Fundamental solution of `-Δ - 4iλ ∂/∂z̄` that decays at infinity
/// (Faddeev's Green's function), evaluated at `z != 0`.
///
/// With `w = iλz`: `g = (1/4π) [F(-w) + e^{-2i Im w} conj F(-w)]`, where
/// `F(x) = e^x E1(x)`. For `λ = 0` this reduces to `-(1/2π) ln|z|`.
pub fn faddeev_green(lambda: Complex64, z: Complex64) -> Complex64 {
    if lambda.norm() == 0.0 {
        return Complex64::new(-z.norm().ln() / (2.0 * PI), 0.0);
    }
    let w = Complex64::i() * lambda * z;
    let f = scaled_e1(-w);
    let phase = Complex64::from_polar(1.0, -2.0 * w.im);
    (f + phase * f.conj()) / (4.0 * PI)
}

/// Gaussian-screened logarithmic kernel `S(r) = E1(r²/a²) / 4π`. Its
/// Fourier transform is `(1 - exp(-a²|ξ|²/4)) / |ξ|²`, and `-ΔS = δ - ρ_a`
/// with `ρ_a` the normalized Gaussian of width `a`.
pub fn screened_log(r: f64, a: f64) -> f64 {
    e1_real(r * r / (a * a)) / (4.0 * PI)
}

/// Smooth remainder `g_λ(z) - e^{-iλz} S(|z|)`; analytic in `(x, y)`.
pub fn faddeev_remainder(lambda: Complex64, z: Complex64, a: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        let l = lambda.norm();
        return if l == 0.0 {
            Complex64::new((EULER_GAMMA - 2.0 * a.ln()) / (4.0 * PI), 0.0)
        } else {
            Complex64::new(-(0.5 * EULER_GAMMA + (l * a).ln()) / (2.0 * PI), 0.0)
        };
    }
    let plane = (-Complex64::i() * lambda * z).exp();
    faddeev_green(lambda, z) - plane * screened_log(r, a)
}

/// Smooth remainder of the Cauchy kernel, `(1 - e^{-r²/a²}) / (π z)`.
pub fn cauchy_remainder(z: Complex64, a: f64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let damp = -(-r2 / (a * a)).exp_m1();
    z.conj() * (damp / (PI * r2))
}

/// Cutoff equal to 1 well inside `r_mid - half_width` and 0 well beyond
/// `r_mid + half_width`. Built from `erfc` so its spectrum is Gaussian.
pub fn soft_cutoff(r: f64, r_mid: f64, half_width: f64) -> f64 {
    let delta = half_width / 4.5;
    0.5 * libm::erfc((r - r_mid) / delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Reference values from mpmath.expint(1, x) at 30 digits.
    #[test]
    fn e1_matches_reference_values() {
        let cases = [
            (c(0.5, 0.0), c(0.559_773_594_776_160_81, 0.0)),
            (c(3.0, 0.0), c(0.013_048_381_094_197_037, 0.0)),
            (c(1.0, 1.0), c(2.816_244_519_814_183_3e-4, -0.179_324_535_039_358_94)),
            (c(-2.0, 0.5), c(-4.725_749_944_798_861_7, -1.332_341_852_814_199_7)),
            (c(0.0, 10.0), c(0.045_456_433_004_455_373, 0.087_551_267_423_977_43)),
            (c(-20.0, 3.0), c(24_171_587.218_951_08, 7_456_212.526_029_359_8)),
            (c(15.0, -12.0), c(1.525_851_595_169_144_4e-8, 1.212_917_816_759_310_7e-9)),
            (c(-150.0, 34.0), c(6.471_220_433_438_143_1e62, 6.425_907_871_465_981_2e62)),
            (c(40.0, 1.0), c(5.385_476_503_753_944_4e-20, -8.855_642_691_945_691_3e-20)),
        ];
        for (x, want) in cases {
            let got = e1(x);
            assert!(
                (got - want).norm() <= 1e-12 * want.norm(),
                "E1({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn scaled_e1_matches_reference_values_at_large_argument() {
        let cases = [
            (c(-45.0, 0.5), c(-0.022_736_662_902_810_382, -2.586_589_788_878_640e-4)),
            (c(-45.0, -0.5), c(-0.022_736_662_902_810_382, 2.586_589_788_878_640e-4)),
            (c(3.0, -60.0), c(1.105_139_333_854_084_1e-3, 0.016_588_463_449_387_224)),
            (c(-30.0, 25.0), c(-0.019_771_206_365_188_318, -0.017_068_478_468_445_754)),
            (c(0.0, 45.0), c(4.923_781_305_706_370_7e-4, -0.022_200_402_534_119_263)),
            (c(60.0, -2.0), c(0.016_380_083_064_489_339, 5.373_272_874_549_361_6e-4)),
        ];
        for (x, want) in cases {
            let got = scaled_e1(x);
            assert!((got - want).norm() <= 1e-13 * want.norm(), "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn real_e1_matches_reference_values() {
        let cases = [
            (0.01, 4.037_929_576_538_113_8),
            (0.7, 0.373_768_843_233_509_18),
            (1.3, 0.135_450_957_849_129_13),
            (5.0, 1.148_295_591_275_325_8e-3),
            (25.0, 5.348_899_755_340_216_6e-13),
            (55.0, 2.321_396_656_266_892_5e-26),
        ];
        for (y, want) in cases {
            let got = e1_real(y);
            assert!((got - want).abs() <= 1e-13 * want, "E1({y}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_and_continued_fraction_agree_on_overlap() {
        for &(re, im) in &[(2.5, 0.3), (3.0, -2.0), (1.0, 4.0), (0.2, 6.0)] {
            let x = c(re, im);
            let a = x.exp() * e1_series(x);
            let b = scaled_e1_cf(x);
            assert!((a - b).norm() < 1e-11 * b.norm(), "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn faddeev_green_satisfies_operator_by_finite_differences() {
        // (-Δ - 4iλ ∂̄) g = 0 away from the origin.
        let lambda = c(1.3, -0.7);
        let eps = 1e-3;
        for &z in &[c(0.7, 0.2), c(-0.4, 1.1), c(2.0, -1.5)] {
            let g = |dz: Complex64| faddeev_green(lambda, z + dz);
            let gx = (g(c(eps, 0.0)) - g(c(-eps, 0.0))) / (2.0 * eps);
            let gy = (g(c(0.0, eps)) - g(c(0.0, -eps))) / (2.0 * eps);
            let lap = (g(c(eps, 0.0)) + g(c(-eps, 0.0)) + g(c(0.0, eps)) + g(c(0.0, -eps))
                - 4.0 * g(c(0.0, 0.0)))
                / (eps * eps);
            let dbar = 0.5 * (gx + Complex64::i() * gy);
            let res = -lap - 4.0 * Complex64::i() * lambda * dbar;
            assert!(res.norm() < 1e-4, "residual {res} at {z}");
        }
    }

    #[test]
    fn faddeev_green_has_unit_log_singularity_and_decays() {
        let lambda = c(0.8, 0.4);
        let z = c(1e-6, 0.0);
        let g = faddeev_green(lambda, z);
        let log_part = -z.norm().ln() / (2.0 * PI);
        assert!((g.re - log_part).abs() < 1.0);
        let far = faddeev_green(lambda, c(300.0, 200.0));
        assert!(far.norm() < 1e-3);
    }

    #[test]
    fn remainder_is_continuous_at_origin() {
        let a = 0.2;
        for &lambda in &[c(0.0, 0.0), c(2.0, 1.0), c(-0.3, 0.05)] {
            let at0 = faddeev_remainder(lambda, c(0.0, 0.0), a);
            let near = faddeev_remainder(lambda, c(1e-5, -2e-5), a);
            assert!((at0 - near).norm() < 1e-3, "{lambda}: {at0} vs {near}");
        }
    }
}
