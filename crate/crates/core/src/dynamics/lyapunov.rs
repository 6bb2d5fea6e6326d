use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::map::AutonomousMap;
use crate::math::{qr_decompose, Matrix, Rng, Vector};
use crate::{Error, Result};

/// A Liapunov exponent estimate.
///
/// Maps that annihilate perturbations exactly (for example a map that is
/// constant in `h`) have exponent −∞; that case is reported as
/// [`LyapunovEstimate::ExactConvergence`] instead of a non-finite number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovEstimate {
    Finite(f64),
    ExactConvergence,
}

impl LyapunovEstimate {
    pub fn finite(self) -> Option<f64> {
        match self {
            LyapunovEstimate::Finite(v) => Some(v),
            LyapunovEstimate::ExactConvergence => None,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            LyapunovEstimate::Finite(v) => v < 0.0,
            LyapunovEstimate::ExactConvergence => true,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, LyapunovEstimate::Finite(v) if v > 0.0)
    }

    /// Total order with the sentinel below every finite value.
    pub fn cmp_desc(a: &Self, b: &Self) -> std::cmp::Ordering {
        use LyapunovEstimate::*;
        match (a, b) {
            (Finite(x), Finite(y)) => y.total_cmp(x),
            (Finite(_), ExactConvergence) => std::cmp::Ordering::Less,
            (ExactConvergence, Finite(_)) => std::cmp::Ordering::Greater,
            (ExactConvergence, ExactConvergence) => std::cmp::Ordering::Equal,
        }
    }
}

const EXACT_TAG: &str = "exact_convergence";

impl Serialize for LyapunovEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LyapunovEstimate::Finite(v) => s.serialize_f64(*v),
            LyapunovEstimate::ExactConvergence => s.serialize_str(EXACT_TAG),
        }
    }
}

impl<'de> Deserialize<'de> for LyapunovEstimate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LyapunovEstimate::Finite(v)),
            Raw::Tag(t) if t == EXACT_TAG => Ok(LyapunovEstimate::ExactConvergence),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unknown Liapunov tag {t:?}"))),
        }
    }
}

/// Largest Liapunov exponent from two nearby trajectories.
///
/// The second trajectory starts at `h0 + delta0·e` for a random unit
/// direction `e`. After every step the separation is rescaled back to
/// `delta0` and its log growth accumulated; the result is the mean log growth
/// per step.
pub fn lyapunov_direct(
    map: &AutonomousMap<'_>,
    h0: &[f64],
    delta0: f64,
    tau: usize,
    rng: &mut Rng,
) -> Result<LyapunovEstimate> {
    if !(delta0 > 0.0) {
        return Err(Error::InvalidInput(format!("delta0 must be positive, got {delta0}")));
    }
    if tau == 0 {
        return Err(Error::InvalidInput("tau must be at least 1".into()));
    }
    let n = map.units();
    if h0.len() != n {
        return Err(Error::dims("lyapunov_direct", n, h0.len()));
    }
    let dir = rng.unit_vector(n);
    let mut a = Vector::from(h0);
    let mut b = a.clone();
    b.axpy(delta0, &dir);
    let mut log_growth = 0.0;
    for _ in 0..tau {
        a = map.apply(&a)?;
        let next_b = map.apply(&b)?;
        let sep = next_b.sub(&a);
        let dist = sep.norm();
        if dist == 0.0 {
            return Ok(LyapunovEstimate::ExactConvergence);
        }
        log_growth += (dist / delta0).ln();
        b = a.clone();
        b.axpy(delta0 / dist, &sep);
    }
    Ok(LyapunovEstimate::Finite(log_growth / tau as f64))
}

/// Full Liapunov spectrum by the Jacobian-product (QR) method.
///
/// Along the trajectory `h(k+1) = g(h(k))`, the accumulated tangent basis is
/// re-orthonormalised every step; exponent `k` is the mean of `ln|R_kk|`.
/// Returned in descending order, sentinels last.
pub fn lyapunov_spectrum(map: &AutonomousMap<'_>, h0: &[f64], tau: usize) -> Result<Vec<LyapunovEstimate>> {
    if tau == 0 {
        return Err(Error::InvalidInput("tau must be at least 1".into()));
    }
    let n = map.units();
    if h0.len() != n {
        return Err(Error::dims("lyapunov_spectrum", n, h0.len()));
    }
    let mut q = Matrix::identity(n);
    let mut h = Vector::from(h0);
    let mut sums = vec![0.0; n];
    let mut collapsed = vec![false; n];
    for _ in 0..tau {
        let jac = map.jacobian(&h)?;
        let (q_next, r) = qr_decompose(&jac.matmul(&q)?);
        for k in 0..n {
            let rkk = r.get(k, k).abs();
            if rkk == 0.0 {
                collapsed[k] = true;
            } else if !collapsed[k] {
                sums[k] += rkk.ln();
            }
        }
        q = q_next;
        h = map.apply(&h)?;
    }
    let mut out: Vec<LyapunovEstimate> = (0..n)
        .map(|k| {
            if collapsed[k] {
                LyapunovEstimate::ExactConvergence
            } else {
                LyapunovEstimate::Finite(sums[k] / tau as f64)
            }
        })
        .collect();
    out.sort_by(LyapunovEstimate::cmp_desc);
    Ok(out)
}
