use super::Parameters;
use crate::{Error, Result};

/// Central finite-difference gradient of `loss` at `params`:
/// `(L(θ + δ) − L(θ − δ)) / 2δ` for every coordinate.
pub fn finite_difference_gradient<P, F>(params: &P, step: f64, mut loss: F) -> Result<P>
where
    P: Parameters + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {step}")));
    }
    let mut grads = params.zeros_like();
    let mut probe = params.clone();
    for k in 0..params.num_coords() {
        let mut orig = 0.0;
        probe.update_coord(k, &mut |v| {
            orig = *v;
            *v = orig + step;
        });
        let plus = loss(&probe)?;
        probe.update_coord(k, &mut |v| *v = orig - step);
        let minus = loss(&probe)?;
        probe.update_coord(k, &mut |v| *v = orig);
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {k}")));
        }
        let g = (plus - minus) / (2.0 * step);
        grads.update_coord(k, &mut |v| *v = g);
    }
    Ok(grads)
}
