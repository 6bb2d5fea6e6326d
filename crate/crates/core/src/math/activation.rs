//! Elementwise nonlinearities. The derivative maps return the diagonal of the
//! corresponding Jacobian as a vector.

use super::Vector;

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(v: &[f64]) -> Vector {
    v.iter().map(|&x| sigmoid_scalar(x)).collect()
}

pub fn tanh_vec(v: &[f64]) -> Vector {
    v.iter().map(|x| x.tanh()).collect()
}

/// σ'(x) = σ(x)(1 − σ(x))
pub fn sigmoid_deriv(v: &[f64]) -> Vector {
    v.iter()
        .map(|&x| {
            let s = sigmoid_scalar(x);
            s * (1.0 - s)
        })
        .collect()
}

/// tanh'(x) = 1 − tanh²(x)
pub fn tanh_deriv(v: &[f64]) -> Vector {
    v.iter()
        .map(|x| {
            let t = x.tanh();
            1.0 - t * t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert!(sigmoid(&[0.0; 3]).iter().all(|&v| v == 0.5));
        assert!(tanh_deriv(&[0.0; 3]).iter().all(|&v| v == 1.0));
        assert_eq!(sigmoid_deriv(&[0.0])[0], 0.25);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let xs = [-2.0, 0.3, 4.0];
        let h = 1e-6;
        let ds = sigmoid_deriv(&xs);
        let dt = tanh_deriv(&xs);
        for (k, &x) in xs.iter().enumerate() {
            let fd_s = (sigmoid_scalar(x + h) - sigmoid_scalar(x - h)) / (2.0 * h);
            let fd_t = ((x + h).tanh() - (x - h).tanh()) / (2.0 * h);
            assert!((ds[k] - fd_s).abs() < 1e-8, "sigmoid' at {x}");
            assert!((dt[k] - fd_t).abs() < 1e-8, "tanh' at {x}");
        }
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        let s = sigmoid(&[-800.0, 800.0]);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 1.0);
        assert!(s.is_finite());
    }
}
