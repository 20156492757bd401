//! Restarted GMRES over complex vectors.
//!
//! In [`Linearity::Real`] mode the operator only has to be real-linear
//! (e.g. it may involve complex conjugation): vectors are treated as
//! elements of `R^{2n}` with inner product `Re <x, y>`, so all Krylov
//! coefficients are real.

use crate::scalar::Real;
use num_complex::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearity {
    Complex,
    Real,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig<T> {
    pub restart: usize,
    pub max_iter: usize,
    /// Target for `‖b - Ax‖ / ‖b‖`.
    pub tol: T,
    pub linearity: Linearity,
}

impl<T: Real> Default for GmresConfig<T> {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iter: 500,
            tol: T::lit(1e-8),
            linearity: Linearity::Complex,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome<T: Real> {
    pub x: Vec<Complex<T>>,
    pub iterations: usize,
    /// Relative residual of the returned iterate.
    pub residual: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>], lin: Linearity) -> Complex<T> {
    let mut s = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        s = s + x.conj() * y;
    }
    match lin {
        Linearity::Complex => s,
        Linearity::Real => Complex::new(s.re, T::zero()),
    }
}

fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
}

/// Solve `A x = b` with right preconditioner `M⁻¹` (pass the identity
/// closure when unpreconditioned), starting from `x0`.
pub fn gmres<T, A, M>(
    apply: A,
    precond: M,
    b: &[Complex<T>],
    x0: Vec<Complex<T>>,
    cfg: &GmresConfig<T>,
) -> GmresOutcome<T>
where
    T: Real,
    A: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
    M: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    let n = b.len();
    let zero = Complex::new(T::zero(), T::zero());
    let lin = cfg.linearity;
    let bnorm = norm(b);
    assert_eq!(x0.len(), n, "initial guess size");
    if bnorm == T::zero() {
        return GmresOutcome { x: vec![zero; n], iterations: 0, residual: T::zero(), converged: true };
    }
    let mut x = x0;
    let residual_of = |x: &[Complex<T>]| -> Vec<Complex<T>> {
        let ax = apply(x);
        b.iter().zip(&ax).map(|(p, q)| p - q).collect()
    };
    let mut r = residual_of(&x);
    let mut rel = norm(&r) / bnorm;
    let mut iters = 0;
    let mut stalls = 0;
    let m = cfg.restart.max(1);
    while rel > cfg.tol && iters < cfg.max_iter {
        let cycle_start = rel;
        let beta = norm(&r);
        let mut v: Vec<Vec<Complex<T>>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|c| c / beta).collect());
        let mut hess: Vec<Vec<Complex<T>>> = Vec::with_capacity(m);
        let mut cs: Vec<T> = Vec::with_capacity(m);
        let mut sn: Vec<Complex<T>> = Vec::with_capacity(m);
        let mut g = vec![Complex::new(beta, T::zero())];
        let mut k = 0;
        while k < m && iters < cfg.max_iter {
            let z = precond(&v[k]);
            let mut w = apply(&z);
            let mut col = vec![zero; k + 2];
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let hij = dot(vj, &w, lin);
                    col[j] = col[j] + hij;
                    for (wi, vi) in w.iter_mut().zip(vj) {
                        *wi = *wi - vi * hij;
                    }
                }
            }
            let hnext = norm(&w);
            col[k + 1] = Complex::new(hnext, T::zero());
            for j in 0..k {
                let (c, s) = (cs[j], sn[j]);
                let a = col[j];
                let bb = col[j + 1];
                col[j] = a * c + s * bb;
                col[j + 1] = -s.conj() * a + bb * c;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let rr = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if rr == T::zero() {
                (T::one(), zero)
            } else if a.norm() == T::zero() {
                (T::zero(), Complex::new(T::one(), T::zero()))
            } else {
                let phase = a / a.norm();
                (a.norm() / rr, phase * bb.conj() / rr)
            };
            col[k] = a * c + s * bb;
            col[k + 1] = zero;
            cs.push(c);
            sn.push(s);
            let gk = g[k];
            g[k] = gk * c;
            g.push(-s.conj() * gk);
            hess.push(col);
            iters += 1;
            k += 1;
            rel = g[k].norm() / bnorm;
            if rel <= cfg.tol || hnext <= T::epsilon() * beta {
                break;
            }
            v.push(w.iter().map(|c| c / hnext).collect());
        }
        // back substitution on the k×k triangle
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k {
                acc = acc - hess[j][i] * y[j];
            }
            y[i] = if hess[i][i].norm() == T::zero() { zero } else { acc / hess[i][i] };
        }
        let mut upd = vec![zero; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, vj) in upd.iter_mut().zip(&v[j]) {
                *u = *u + vj * yj;
            }
        }
        let dx = precond(&upd);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi = *xi + di;
        }
        r = residual_of(&x);
        let true_rel = norm(&r) / bnorm;
        // the recurrence can drift below the attainable accuracy; give up
        // after two cycles without real progress
        if true_rel >= T::lit(0.999) * cycle_start {
            stalls += 1;
        } else {
            stalls = 0;
        }
        rel = true_rel;
        if stalls >= 2 {
            break;
        }
    }
    GmresOutcome {
        converged: rel <= cfg.tol,
        x,
        iterations: iters,
        residual: rel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use rand::{Rng, SeedableRng};

    fn random_matrix(n: usize, seed: u64) -> Vec<C> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n * n)
            .map(|k| {
                let d = if k % (n + 1) == 0 { 4.0 } else { 0.0 };
                C::new(d + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
            })
            .collect()
    }

    fn matvec(a: &[C], x: &[C]) -> Vec<C> {
        let n = x.len();
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn solves_complex_system() {
        let n = 40;
        let a = random_matrix(n, 3);
        let xt: Vec<C> = (0..n).map(|k| C::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let b = matvec(&a, &xt);
        let cfg = GmresConfig { restart: 10, tol: 1e-12, ..Default::default() };
        let out = gmres(|x| matvec(&a, x), |x| x.to_vec(), &b, vec![C::new(0.0, 0.0); n], &cfg);
        assert!(out.converged, "{}", out.residual);
        let err = out.x.iter().zip(&xt).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn solves_real_linear_conjugate_system() {
        // x + K conj(x) = b is real-linear but not complex-linear
        let n = 30;
        let k = random_matrix(n, 7).iter().map(|v| v * 0.05).collect::<Vec<_>>();
        let op = |x: &[C]| -> Vec<C> {
            let cx: Vec<C> = x.iter().map(|v| v.conj()).collect();
            let kx = matvec(&k, &cx);
            x.iter().zip(&kx).map(|(p, q)| p + q).collect()
        };
        let xt: Vec<C> = (0..n).map(|j| C::new((j as f64).sin(), (j as f64).cos())).collect();
        let b = op(&xt);
        let cfg = GmresConfig { tol: 1e-12, linearity: Linearity::Real, ..Default::default() };
        let out = gmres(op, |x| x.to_vec(), &b, vec![C::new(0.0, 0.0); n], &cfg);
        assert!(out.converged);
        let err = out.x.iter().zip(&xt).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn exact_initial_guess_returns_untouched() {
        let b = vec![C::new(1.0, 0.0); 5];
        let cfg = GmresConfig::default();
        let out = gmres(|x| x.to_vec(), |x| x.to_vec(), &b, b.clone(), &cfg);
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|v| *v == C::new(1.0, 0.0)));
    }

    #[test]
    fn singular_system_reports_failure() {
        let b = vec![C::new(1.0, 0.0), C::new(1.0, 0.0)];
        let out = gmres(|x| vec![x[0], C::new(0.0, 0.0)], |x| x.to_vec(), &b, vec![C::new(0.0, 0.0); 2], &GmresConfig::default());
        assert!(!out.converged);
    }
}
