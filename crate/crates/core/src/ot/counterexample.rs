use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::se2::angle_distance;

/// Rotation by π is not an optimal transport map on the circle.
///
/// Transports `μ = ½δ_ε + ½δ_{2π−ε}` onto its rotation by π. Returns the cost
/// of the rotation coupling and the cost of the optimal coupling, found by
/// enumerating both couplings of the two-point problem.
pub fn so2_counterexample(epsilon_angle: f64, p: f64) -> Result<(f64, f64)> {
    if !(epsilon_angle > 0.0 && epsilon_angle <= PI / 2.0) {
        return Err(Error::bad_config(format!(
            "epsilon_angle must lie in (0, π/2], got {epsilon_angle}"
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::bad_config(format!("exponent p must be positive, got {p}")));
    }
    let sources = [epsilon_angle, 2.0 * PI - epsilon_angle];
    let targets = sources.map(|s| s + PI);
    let cost = |i: usize, j: usize| angle_distance(sources[i], targets[j]).powf(p);
    let translation = 0.5 * cost(0, 0) + 0.5 * cost(1, 1);
    let swapped = 0.5 * cost(0, 1) + 0.5 * cost(1, 0);
    let optimal = translation.min(swapped);
    debug_assert!(optimal < translation);
    Ok((translation, optimal))
}
