use crate::{ActionLabel, Error, Result};

/// Average classification accuracy: fraction of positions where the
/// prediction equals the label.
pub fn aca(predictions: &[ActionLabel], labels: &[ActionLabel]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("aca needs at least one prediction"));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}
