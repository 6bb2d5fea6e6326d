use serde::{Deserialize, Serialize};

use crate::cell::{CellParams, Gate};
use crate::math::{principal_singular_value, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use crate::{Error, Result};

/// Principal singular values of the recurrent matrices and the margin
/// `1 − (σ_j + ¼σ_i + ¼σ_f + ¼σ_o)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub sigma_j: f64,
    pub sigma_i: f64,
    pub sigma_f: f64,
    pub sigma_o: f64,
    pub margin: f64,
    pub holds: bool,
}

impl ConditionReport {
    pub fn from_sigmas(sigma_j: f64, sigma_i: f64, sigma_f: f64, sigma_o: f64) -> Self {
        let margin = 1.0 - weighted_sum(sigma_j, sigma_i, sigma_f, sigma_o);
        ConditionReport {
            sigma_j,
            sigma_i,
            sigma_f,
            sigma_o,
            margin,
            holds: margin > 0.0,
        }
    }

    /// `σ_j + ¼σ_i + ¼σ_f + ¼σ_o`
    pub fn weighted_sum(&self) -> f64 {
        weighted_sum(self.sigma_j, self.sigma_i, self.sigma_f, self.sigma_o)
    }
}

fn weighted_sum(j: f64, i: f64, f: f64, o: f64) -> f64 {
    j + 0.25 * i + 0.25 * f + 0.25 * o
}

/// Evaluates the spectral condition on a layer's recurrent weights.
///
/// If power iteration fails for a gate, the error carries the report built
/// from the estimates available at that point.
pub fn check_condition(params: &CellParams, tol: f64) -> Result<ConditionReport> {
    let mut sigmas = [0.0; 4];
    for g in Gate::ALL {
        match principal_singular_value(params.rec(g), tol, SPECTRAL_MAX_ITER) {
            Ok(s) => sigmas[g.index()] = s,
            Err(Error::NonConvergence { last_estimate, .. }) => {
                sigmas[g.index()] = last_estimate;
                let partial = ConditionReport::from_sigmas(sigmas[0], sigmas[1], sigmas[2], sigmas[3]);
                return Err(Error::PartialCondition {
                    gate: g.name(),
                    report: Box::new(partial),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ConditionReport::from_sigmas(sigmas[0], sigmas[1], sigmas[2], sigmas[3]))
}

/// Scales all four recurrent matrices by one common factor so the condition
/// margin becomes `target_margin`. Other parameters are untouched.
///
/// Negative targets are allowed and push the layer outside the guaranteed
/// region.
pub fn spectral_rescale(params: &CellParams, target_margin: f64) -> Result<CellParams> {
    if !(target_margin < 1.0) || !target_margin.is_finite() {
        return Err(Error::InvalidInput(format!("target margin must be finite and below 1, got {target_margin}")));
    }
    let report = check_condition(params, SPECTRAL_TOL)?;
    let sum = report.weighted_sum();
    if sum == 0.0 {
        return Err(Error::InvalidInput("recurrent weights are all zero; cannot rescale".into()));
    }
    let s = (1.0 - target_margin) / sum;
    let mut out = params.clone();
    for m in &mut out.w_rec {
        m.scale_in_place(s);
    }
    Ok(out)
}
