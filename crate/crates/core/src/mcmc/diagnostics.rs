use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Potential scale reduction factor of one scalar parameter.
///
/// `R̂ = √(((n − 1)/n · W + B/n) / W)` where `W` is the mean within-chain
/// variance and `B` is `n` times the variance of the chain means. Returns
/// `Ok(None)` when `W = 0`.
pub fn gelman_rubin<C: AsRef<[f64]>>(chains: &[C]) -> Result<Option<f64>> {
    if chains.len() < 2 {
        return Err(Error::InvalidConfig(
            "the scale reduction factor needs at least two chains".into(),
        ));
    }
    let n = chains[0].as_ref().len();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "chains need at least two draws".into(),
        ));
    }
    if let Some(c) = chains.iter().find(|c| c.as_ref().len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: c.as_ref().len(),
        });
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c.as_ref())).collect();
    let within = chains
        .iter()
        .map(|c| sample_variance(c.as_ref()))
        .sum::<f64>()
        / chains.len() as f64;
    if within <= 0.0 {
        return Ok(None);
    }
    let nf = n as f64;
    let between = nf * sample_variance(&means);
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok(Some((pooled / within).sqrt()))
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
