use crate::{Error, Result};

/// Step schedule: the rate halves after every tenth of the run.
///
/// `lr0 · 0.5^floor(10·iteration / total_iterations)`
pub fn learning_rate(iteration: u64, total_iterations: u64, lr0: f64) -> Result<f64> {
    if total_iterations == 0 {
        return Err(Error::Invalid("total_iterations must be positive".into()));
    }
    if iteration >= total_iterations {
        return Err(Error::Invalid(format!(
            "iteration {iteration} is past the end of a {total_iterations}-iteration run"
        )));
    }
    if !(lr0.is_finite() && lr0 > 0.0) {
        return Err(Error::Invalid(format!("lr0 must be finite and > 0, got {lr0}")));
    }
    let halvings = (10 * u128::from(iteration)) / u128::from(total_iterations);
    Ok(lr0 * 0.5f64.powi(halvings as i32))
}
