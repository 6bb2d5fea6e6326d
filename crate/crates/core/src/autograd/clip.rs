use super::Parameters;
use crate::{Error, Result};

const CLIP_SLACK: f64 = 1e-12;

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradients<P: Parameters>(grads: &mut P, max_norm: f64) -> Result<f64> {
    if !(max_norm > 0.0) {
        return Err(Error::InvalidInput(format!("max_norm must be positive, got {max_norm}")));
    }
    let mut bad = None;
    grads.visit(&mut |name, _, d| {
        if bad.is_none() && d.iter().any(|v| !v.is_finite()) {
            bad = Some(name.to_string());
        }
    });
    if let Some(name) = bad {
        return Err(Error::NonFinite(format!("gradient buffer {name}")));
    }
    let norm = grads.global_norm();
    // A clipped buffer re-measures within rounding of `max_norm`; the slack
    // keeps a second clip from rescaling it again.
    if norm > max_norm * (1.0 + CLIP_SLACK) {
        grads.scale_all(max_norm / norm);
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellParams;
    use crate::math::Rng;
    use proptest::prelude::*;

    fn with_norm(norm: f64) -> CellParams {
        let mut g = CellParams::zeros(2, 2);
        g.w_rec[0].set(0, 0, norm * 0.6);
        g.bias[3][1] = norm * 0.8;
        g
    }

    #[test]
    fn below_threshold_is_untouched() {
        let mut g = with_norm(4.0);
        let before = g.clone();
        let norm = clip_gradients(&mut g, 5.0).unwrap();
        assert!((norm - 4.0).abs() < 1e-12);
        assert_eq!(g, before);
    }

    #[test]
    fn double_norm_halves_every_entry() {
        let mut g = with_norm(10.0);
        let before = g.clone();
        clip_gradients(&mut g, 5.0).unwrap();
        for (a, b) in g.to_flat().iter().zip(before.to_flat()) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_is_an_error() {
        let mut g = with_norm(1.0);
        g.gate.bias = f64::INFINITY;
        assert!(matches!(clip_gradients(&mut g, 5.0), Err(Error::NonFinite(msg)) if msg.contains("gate_b")));
    }

    proptest! {
        #[test]
        fn clipped_norm_and_idempotence(seed in any::<u64>(), spread in 0.01f64..10.0) {
            let g = CellParams::uniform(3, 3, -spread, spread, &mut Rng::new(seed)).unwrap();
            let pre = g.global_norm();
            let mut once = g.clone();
            clip_gradients(&mut once, 5.0).unwrap();
            prop_assert!((once.global_norm() - pre.min(5.0)).abs() < 1e-12);
            let mut twice = once.clone();
            clip_gradients(&mut twice, 5.0).unwrap();
            prop_assert_eq!(
                once.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                twice.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
