use serde::{Deserialize, Serialize};

use super::params::{CellParams, Gate};
use super::trace::{IterationRecord, IterationTrace};
use crate::math::{sigmoid_scalar, Vector};
use crate::{Error, Result};

/// Carried per-layer state.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vector,
    pub c: Vector,
}

impl CellState {
    pub fn zeros(units: usize) -> Self {
        CellState {
            h: Vector::zeros(units),
            c: Vector::zeros(units),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationMode {
    /// Run exactly `fixed_iterations`; the gate still blends but never halts.
    Fixed,
    /// Stop once the gate falls below the current threshold.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub mode: IterationMode,
    pub fixed_iterations: usize,
    pub max_iterations: usize,
    pub threshold_base: f64,
    pub threshold_step: f64,
    pub threshold_cap: f64,
    pub residual: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            mode: IterationMode::Adaptive,
            fixed_iterations: 1,
            max_iterations: 8,
            threshold_base: 0.5,
            threshold_step: 0.1,
            threshold_cap: 0.95,
            residual: true,
        }
    }
}

impl IterationConfig {
    pub fn fixed(iterations: usize, residual: bool) -> Self {
        IterationConfig {
            mode: IterationMode::Fixed,
            fixed_iterations: iterations,
            max_iterations: iterations.max(1),
            residual,
            ..IterationConfig::default()
        }
    }

    pub fn adaptive(max_iterations: usize, residual: bool) -> Self {
        IterationConfig {
            mode: IterationMode::Adaptive,
            max_iterations,
            residual,
            ..IterationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.mode == IterationMode::Fixed && self.fixed_iterations == 0 {
            return Err(Error::Config("fixed_iterations must be at least 1".into()));
        }
        if self.fixed_iterations > self.max_iterations {
            return Err(Error::Config(format!(
                "fixed_iterations ({}) exceeds max_iterations ({})",
                self.fixed_iterations, self.max_iterations
            )));
        }
        if !(self.threshold_base > 0.0 && self.threshold_base < 1.0) {
            return Err(Error::Config(format!("threshold_base {} not in (0, 1)", self.threshold_base)));
        }
        if !(self.threshold_step >= 0.0) {
            return Err(Error::Config(format!("threshold_step {} is negative", self.threshold_step)));
        }
        if !(self.threshold_cap < 1.0 && self.threshold_base <= self.threshold_cap) {
            return Err(Error::Config(format!(
                "threshold_cap {} must lie in [threshold_base, 1)",
                self.threshold_cap
            )));
        }
        Ok(())
    }

    /// Halting threshold for iteration `tau` (1-based).
    pub fn threshold(&self, tau: usize) -> f64 {
        let ramp = self.threshold_base + (tau.saturating_sub(1)) as f64 * self.threshold_step;
        ramp.min(self.threshold_cap)
    }

    /// Upper bound on the iterations a single step can run.
    pub fn iteration_limit(&self) -> usize {
        match self.mode {
            IterationMode::Fixed => self.fixed_iterations,
            IterationMode::Adaptive => self.max_iterations,
        }
    }
}

/// Values produced by one pass through the gate cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutputs {
    pub pre: [Vector; 4],
    pub j: Vector,
    pub i: Vector,
    pub f: Vector,
    pub c: Vector,
    pub o: Vector,
    pub tanh_c: Vector,
    pub h_next: Vector,
}

/// `C_φ = W_in_φ·x + b_φ` for every gate.
pub fn precompute_constants(params: &CellParams, x: &[f64]) -> Result<[Vector; 4]> {
    if x.len() != params.input_dim() {
        return Err(Error::dims("precompute_constants", params.input_dim(), x.len()));
    }
    let n = params.units();
    Ok(std::array::from_fn(|g| {
        let mut out = Vector::zeros(n);
        params.w_in[g].matvec_into(x, &mut out);
        for (o, b) in out.iter_mut().zip(params.bias[g].iter()) {
            *o += b;
        }
        out
    }))
}

/// One evaluation of the LSTM update at hidden state `h` with the input
/// constants and `c0` held fixed.
pub fn cell_iteration(params: &CellParams, consts: &[Vector; 4], c0: &[f64], h: &[f64]) -> Result<IterationOutputs> {
    let n = params.units();
    if c0.len() != n {
        return Err(Error::dims("cell_iteration(c0)", n, c0.len()));
    }
    if h.len() != n {
        return Err(Error::dims("cell_iteration(h)", n, h.len()));
    }
    if let Some(c) = consts.iter().find(|c| c.dim() != n) {
        return Err(Error::dims("cell_iteration(consts)", n, c.dim()));
    }
    Ok(cell_iteration_unchecked(params, consts, c0, h))
}

pub(crate) fn cell_iteration_unchecked(params: &CellParams, consts: &[Vector; 4], c0: &[f64], h: &[f64]) -> IterationOutputs {
    let n = params.units();
    let pre: [Vector; 4] = std::array::from_fn(|g| {
        let mut a = Vector::zeros(n);
        params.w_rec[g].matvec_into(h, &mut a);
        for (v, c) in a.iter_mut().zip(consts[g].iter()) {
            *v += c;
        }
        a
    });
    let j: Vector = pre[Gate::J.index()].iter().map(|v| v.tanh()).collect();
    let i: Vector = pre[Gate::I.index()].iter().map(|&v| sigmoid_scalar(v)).collect();
    let f: Vector = pre[Gate::F.index()].iter().map(|&v| sigmoid_scalar(v)).collect();
    let c: Vector = (0..n).map(|k| f[k] * c0[k] + i[k] * j[k]).collect();
    let o: Vector = pre[Gate::O.index()].iter().map(|&v| sigmoid_scalar(v)).collect();
    let tanh_c: Vector = c.iter().map(|v| v.tanh()).collect();
    let h_next: Vector = o.iter().zip(tanh_c.iter()).map(|(a, b)| a * b).collect();
    IterationOutputs {
        pre,
        j,
        i,
        f,
        c,
        o,
        tanh_c,
        h_next,
    }
}

/// Scalar iteration gate over the input, the fresh hidden state and the
/// internal gate values.
pub fn iteration_gate(params: &CellParams, x: &[f64], h: &[f64], i: &[f64], j: &[f64], f: &[f64]) -> Result<f64> {
    let n = params.units();
    if x.len() != params.input_dim() {
        return Err(Error::dims("iteration_gate(x)", params.input_dim(), x.len()));
    }
    for v in [h, i, j, f] {
        if v.len() != n {
            return Err(Error::dims("iteration_gate", n, v.len()));
        }
    }
    Ok(iteration_gate_unchecked(params, x, h, i, j, f).1)
}

/// Returns `(pre-activation, p)`.
pub(crate) fn iteration_gate_unchecked(params: &CellParams, x: &[f64], h: &[f64], i: &[f64], j: &[f64], f: &[f64]) -> (f64, f64) {
    let g = &params.gate;
    let z = g.w_x.dot(x) + g.w_h.dot(h) + g.w_i.dot(i) + g.w_j.dot(j) + g.w_f.dot(f) + g.bias;
    (z, sigmoid_scalar(z))
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub y: Vector,
    pub next: CellState,
    pub trace: IterationTrace,
}

fn check_step_shapes(params: &CellParams, cfg: &IterationConfig, x: &[f64], prev: &CellState) -> Result<()> {
    cfg.validate()?;
    let n = params.units();
    let d = params.input_dim();
    if cfg.residual && d != n {
        return Err(Error::Config(format!(
            "residual output needs input dim == units (got {d} vs {n})"
        )));
    }
    if x.len() != d {
        return Err(Error::dims("cell_step(x)", d, x.len()));
    }
    if prev.h.dim() != n {
        return Err(Error::dims("cell_step(h)", n, prev.h.dim()));
    }
    if prev.c.dim() != n {
        return Err(Error::dims("cell_step(c)", n, prev.c.dim()));
    }
    Ok(())
}

/// One timestep of the iterative cell.
///
/// The hidden state starts at `prev.h`; `prev.c` and the input constants stay
/// fixed for every iteration. Each iteration blends the fresh candidate into
/// the running state with weight `p`.
pub fn cell_step(params: &CellParams, cfg: &IterationConfig, x: &[f64], prev: &CellState) -> Result<StepOutput> {
    check_step_shapes(params, cfg, x, prev)?;
    let consts = precompute_constants(params, x)?;
    let limit = cfg.iteration_limit();
    let mut iterations = Vec::with_capacity(limit);
    let mut h = prev.h.clone();
    for tau in 1..=limit {
        let out = cell_iteration_unchecked(params, &consts, &prev.c, &h);
        let (gate_pre, p) = iteration_gate_unchecked(params, x, &out.h_next, &out.i, &out.j, &out.f);
        let threshold = cfg.threshold(tau);
        let blended: Vector = out
            .h_next
            .iter()
            .zip(h.iter())
            .map(|(hc, hp)| p * hc + (1.0 - p) * hp)
            .collect();
        let halt = tau == limit || (cfg.mode == IterationMode::Adaptive && p < threshold);
        iterations.push(IterationRecord {
            pre: out.pre,
            j: out.j,
            i: out.i,
            f: out.f,
            o: out.o,
            c: out.c,
            tanh_c: out.tanh_c,
            h_cand: out.h_next,
            gate_pre,
            p,
            threshold,
            h: blended.clone(),
            halt,
        });
        h = blended;
        if halt {
            break;
        }
    }
    let c = iterations.last().expect("at least one iteration").c.clone();
    let y = if cfg.residual { h.add(x) } else { h.clone() };
    let trace = IterationTrace {
        x: Vector::from(x),
        c0: prev.c.clone(),
        h0: prev.h.clone(),
        consts,
        residual: cfg.residual,
        iterations,
    };
    Ok(StepOutput {
        y,
        next: CellState { h, c },
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub ys: Vec<Vector>,
    pub final_state: CellState,
    pub traces: Vec<IterationTrace>,
}

/// Runs [`cell_step`] over a sequence, threading the state. When `masks` is
/// given, `masks[t]` multiplies `xs[t]` elementwise before the step.
pub fn layer_forward(
    params: &CellParams,
    cfg: &IterationConfig,
    xs: &[Vector],
    init: &CellState,
    masks: Option<&[Vector]>,
) -> Result<LayerOutput> {
    if let Some(m) = masks {
        if m.len() != xs.len() {
            return Err(Error::dims("layer_forward(masks)", xs.len(), m.len()));
        }
    }
    let mut state = init.clone();
    let mut ys = Vec::with_capacity(xs.len());
    let mut traces = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        let step = match masks {
            Some(m) => {
                if m[t].dim() != x.dim() {
                    return Err(Error::dims("layer_forward(mask)", x.dim(), m[t].dim()));
                }
                cell_step(params, cfg, &x.hadamard(&m[t]), &state)?
            }
            None => cell_step(params, cfg, x, &state)?,
        };
        ys.push(step.y);
        traces.push(step.trace);
        state = step.next;
    }
    Ok(LayerOutput {
        ys,
        final_state: state,
        traces,
    })
}
