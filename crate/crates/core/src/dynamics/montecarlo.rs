//! Random-draw experiments on the frozen-input map.

use serde::{Deserialize, Serialize};

use super::{check_condition, iterate_map, lyapunov_direct, lyapunov_spectrum, spectral_rescale};
use super::{AutonomousMap, LyapunovEstimate};
use crate::cell::{CellParams, Gate};
use crate::math::{uniform_init, Rng, SPECTRAL_TOL};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSpec {
    pub units: usize,
    /// Rescale the recurrent weights to this margin; `None` keeps the raw draw.
    pub margin: Option<f64>,
    /// Recurrent weights are drawn from `±weight_range` before rescaling.
    pub weight_range: f64,
    /// Input weights and the gate input weights are drawn from `±input_range`.
    pub input_range: f64,
    /// Biases of `j`, `f` and the iteration gate are drawn from `±bias_range`.
    pub bias_range: f64,
    /// Biases of the input and output gates are drawn from this interval.
    pub open_gate_bias: (f64, f64),
    /// Steps used by both Liapunov estimators.
    pub tau: usize,
    pub converge_steps: usize,
    pub converge_tol: f64,
    pub delta0: f64,
    /// Number of leading spectrum entries kept in a record.
    pub spectrum_head: usize,
}

impl Default for DrawSpec {
    fn default() -> Self {
        DrawSpec {
            units: 8,
            margin: Some(0.5),
            weight_range: 1.0,
            input_range: 0.3,
            bias_range: 1.0,
            open_gate_bias: (1.0, 4.0),
            tau: 200,
            converge_steps: 1000,
            converge_tol: 1e-9,
            delta0: 1e-8,
            spectrum_head: 3,
        }
    }
}

/// One line of Liapunov output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub seed: u64,
    pub margin: f64,
    pub converged: bool,
    pub steps: usize,
    pub lambda_max: LyapunovEstimate,
    pub spectrum_head: Vec<LyapunovEstimate>,
}

/// Analyses the map of `params` frozen at `(x, c0)` starting from `h0`.
pub fn analyze_map(
    params: &CellParams,
    x: &[f64],
    c0: &[f64],
    h0: &[f64],
    spec: &DrawSpec,
    seed: u64,
    rng: &mut Rng,
) -> Result<DrawRecord> {
    let report = check_condition(params, SPECTRAL_TOL)?;
    let map = AutonomousMap::new(params, x, c0)?;
    let traj = iterate_map(&map, h0, spec.converge_steps, spec.converge_tol)?;
    let lambda_max = lyapunov_direct(&map, h0, spec.delta0, spec.tau, rng)?;
    let mut spectrum = lyapunov_spectrum(&map, h0, spec.tau)?;
    spectrum.truncate(spec.spectrum_head);
    Ok(DrawRecord {
        seed,
        margin: report.margin,
        converged: traj.converged,
        steps: traj.steps(),
        lambda_max,
        spectrum_head: spectrum,
    })
}

/// Random layer parameters following `spec`.
///
/// `W_rec_j` keeps its full scale while the other three recurrent matrices
/// are shrunk by independent `U(0, 1)` factors, and the input and output
/// gates are biased open. Both choices keep the drawn maps away from the
/// saturated, trivially contracting corner of parameter space.
pub fn random_params(spec: &DrawSpec, rng: &mut Rng) -> Result<CellParams> {
    let n = spec.units;
    let w = spec.weight_range;
    let r = spec.input_range;
    let b = spec.bias_range;
    let mut params = CellParams::uniform(n, n, -w, w, rng)?;
    for g in Gate::ALL {
        let k = g.index();
        if g != Gate::J {
            params.w_rec[k].scale_in_place(rng.unit());
        }
        params.w_in[k] = uniform_init(n, n, -r, r, rng)?;
        params.bias[k] = match g {
            Gate::I | Gate::O => rng.uniform_vec(n, spec.open_gate_bias.0, spec.open_gate_bias.1),
            Gate::J | Gate::F => rng.uniform_vec(n, -b, b),
        };
    }
    params.gate.w_x = rng.uniform_vec(n, -r, r);
    params.gate.bias = rng.uniform(-b, b);
    if let Some(m) = spec.margin {
        params = spectral_rescale(&params, m)?;
    }
    Ok(params)
}

/// [`random_params`] plus random `x, c0, h0 ∈ (−1, 1)ⁿ`, all from the
/// stream `seed ⊕ index`.
pub fn random_draw(base_seed: u64, index: u64, spec: &DrawSpec) -> Result<DrawRecord> {
    let seed = base_seed ^ index;
    let mut rng = Rng::new(seed);
    let params = random_params(spec, &mut rng)?;
    frozen_point_draw(&params, seed, &mut rng, spec)
}

/// Analyses fixed `params` (rescaled to `spec.margin` if set) at a random
/// `x, c0, h0 ∈ (−1, 1)ⁿ` drawn from the stream `seed ⊕ index`.
/// `spec.units` is ignored.
pub fn params_draw(params: &CellParams, base_seed: u64, index: u64, spec: &DrawSpec) -> Result<DrawRecord> {
    let seed = base_seed ^ index;
    let mut rng = Rng::new(seed);
    let params = match spec.margin {
        Some(m) => spectral_rescale(params, m)?,
        None => params.clone(),
    };
    frozen_point_draw(&params, seed, &mut rng, spec)
}

fn frozen_point_draw(params: &CellParams, seed: u64, rng: &mut Rng, spec: &DrawSpec) -> Result<DrawRecord> {
    let n = params.units();
    let x = rng.uniform_vec(params.input_dim(), -1.0, 1.0);
    let c0 = rng.uniform_vec(n, -1.0, 1.0);
    let h0 = rng.uniform_vec(n, -1.0, 1.0);
    analyze_map(params, &x, &c0, &h0, spec, seed, rng)
}
