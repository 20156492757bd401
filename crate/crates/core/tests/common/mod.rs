#![allow(dead_code)]

// Closed-form v = Δσ^{1/2}/σ^{1/2} for σ = 1 + t·exp(1 - 1/(1 - r²/R²)),
// derived by hand and cross-checked against a CAS.
pub fn bump_potential(r: f64, rad: f64, t: f64) -> f64 {
    let s = r * r / (rad * rad);
    if s >= 1.0 {
        return 0.0;
    }
    let e = (1.0 - 1.0 / (1.0 - s)).exp();
    let phi = -1.0 / ((1.0 - s) * (1.0 - s));
    let dphi = -2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
    let ds = 2.0 * r / (rad * rad);
    let sig = 1.0 + t * e;
    let s1 = t * e * phi * ds;
    let s2 = t * (e * phi * phi * ds * ds + e * dphi * ds * ds + e * phi * 2.0 / (rad * rad));
    let radial = if r > 0.0 { s1 / (2.0 * r * sig) } else { t * e * phi / (rad * rad * sig) };
    s2 / (2.0 * sig) - s1 * s1 / (4.0 * sig * sig) + radial
}

pub fn bump_sigma(r: f64, rad: f64, t: f64) -> f64 {
    let s = r * r / (rad * rad);
    if s >= 1.0 {
        1.0
    } else {
        1.0 + t * (1.0 - 1.0 / (1.0 - s)).exp()
    }
}
