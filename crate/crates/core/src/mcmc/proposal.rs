use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar random-walk proposal whose log scale is tuned in batches during burn-in.
#[derive(Debug, Clone)]
pub struct AdaptiveProposal {
    log_scale: f64,
    batch_tried: u32,
    batch_accepted: u32,
    batches: u32,
    pub tried: u64,
    pub accepted: u64,
}

/// Acceptance rate targeted for one-dimensional updates.
pub const TARGET_ACCEPTANCE: f64 = 0.44;

impl AdaptiveProposal {
    pub fn new(scale: f64) -> Self {
        AdaptiveProposal {
            log_scale: scale.ln(),
            batch_tried: 0,
            batch_accepted: 0,
            batches: 0,
            tried: 0,
            accepted: 0,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale() * rng.sample::<f64, _>(StandardNormal)
    }

    pub fn record(&mut self, accepted: bool) {
        self.batch_tried += 1;
        self.tried += 1;
        if accepted {
            self.batch_accepted += 1;
            self.accepted += 1;
        }
    }

    /// Ends a batch: moves the log scale by at most `min(0.05, 1/√batches)`
    /// toward the target rate. The step size vanishes as batches accumulate.
    pub fn adapt(&mut self) {
        if self.batch_tried == 0 {
            return;
        }
        self.batches += 1;
        let rate = f64::from(self.batch_accepted) / f64::from(self.batch_tried);
        let step = (1.0 / f64::from(self.batches).sqrt()).min(0.05);
        if rate > TARGET_ACCEPTANCE {
            self.log_scale += step;
        } else {
            self.log_scale -= step;
        }
        self.log_scale = self.log_scale.clamp(-12.0, 3.0);
        self.batch_tried = 0;
        self.batch_accepted = 0;
    }

    pub fn reset_counts(&mut self) {
        self.tried = 0;
        self.accepted = 0;
        self.batch_tried = 0;
        self.batch_accepted = 0;
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.tried > 0).then(|| self.accepted as f64 / self.tried as f64)
    }
}

/// Metropolis accept/reject for a symmetric proposal.
pub fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// One random-walk step on a scalar with log target `target`.
/// Returns the accepted value and its log target, or `None` on rejection.
pub fn rw_step<R, F>(
    rng: &mut R,
    proposal: &mut AdaptiveProposal,
    x: f64,
    log_target_x: f64,
    mut target: F,
) -> Option<(f64, f64)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
{
    let y = x + proposal.increment(rng);
    let log_target_y = target(y);
    let ok = log_target_y > f64::NEG_INFINITY && accept(rng, log_target_y - log_target_x);
    proposal.record(ok);
    ok.then_some((y, log_target_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adaptation_hits_target() {
        // standard normal target
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut prop = AdaptiveProposal::new(0.01);
        let mut x = 0.0;
        let mut lp = 0.0;
        for i in 0..40_000 {
            if let Some(next) = rw_step(&mut rng, &mut prop, x, lp, |y| -0.5 * y * y) {
                (x, lp) = next;
            }
            if i % 50 == 49 {
                prop.adapt();
            }
        }
        let rate = prop.accepted as f64 / prop.tried as f64;
        assert!(prop.scale() > 1.0 && prop.scale() < 4.0, "{}", prop.scale());
        assert!(rate > 0.3, "{rate}");
    }

    #[test]
    fn never_accepts_outside_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut prop = AdaptiveProposal::new(1.0);
        for _ in 0..100 {
            let step = rw_step(&mut rng, &mut prop, 0.5, 0.0, |y| {
                if y > 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            });
            if let Some((x, _)) = step {
                assert!(x > 0.0);
            }
        }
    }
}
