use rand::Rng;
use rand_distr::StandardNormal;

/// Standard deviation of the relative error that gives `E|ε| = target_mape`
/// for a zero-mean Gaussian.
pub fn noise_sigma(target_mape: f64) -> f64 {
    target_mape * (std::f64::consts::PI / 2.0).sqrt()
}

/// Multiplicative Gaussian noise: `value·(1+ε)`, clamped to `range`.
///
/// A zero target returns the input untouched and draws nothing from `rng`.
pub fn apply_noise<R: Rng + ?Sized>(
    true_value: f64,
    target_mape: f64,
    range: (f64, f64),
    rng: &mut R,
) -> f64 {
    debug_assert!((0.0..1.0).contains(&target_mape));
    if target_mape == 0.0 {
        return true_value;
    }
    let eps: f64 = rng.sample::<f64, _>(StandardNormal) * noise_sigma(target_mape);
    (true_value * (1.0 + eps)).clamp(range.0, range.1)
}
