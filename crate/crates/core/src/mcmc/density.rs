use std::f64::consts::PI;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(x)` that maps 0 to −∞ without a NaN for `0 · ln 0` callers.
pub fn xlogy(count: f64, p: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * p.ln()
    }
}

pub fn normal_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - 0.5 * d * d / variance
}

/// Log density of a bivariate normal with standard deviations `sd` and correlation `rho`.
pub fn bivariate_normal_ln_pdf(x: [f64; 2], mean: [f64; 2], sd: [f64; 2], rho: f64) -> f64 {
    let z0 = (x[0] - mean[0]) / sd[0];
    let z1 = (x[1] - mean[1]) / sd[1];
    let one_minus = 1.0 - rho * rho;
    let q = (z0 * z0 - 2.0 * rho * z0 * z1 + z1 * z1) / one_minus;
    -(2.0 * PI).ln() - sd[0].ln() - sd[1].ln() - 0.5 * one_minus.ln() - 0.5 * q
}

/// Half-Cauchy (Student t with one degree of freedom folded at 0).
pub fn half_cauchy_ln_pdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = x / scale;
    (2.0 / (PI * scale)).ln() - (1.0 + r * r).ln()
}
