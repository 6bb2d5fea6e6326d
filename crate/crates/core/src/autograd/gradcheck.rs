//! Randomised comparison of [`layer_backward`] against central differences.

use std::collections::BTreeMap;

use serde::Serialize;

use super::backward::{layer_backward, BackpropPlan, StateGrad};
use super::fd::finite_difference_gradient;
use super::Parameters;
use crate::cell::{layer_forward, CellParams, CellState, IterationConfig, IterationMode};
use crate::math::{Rng, Vector};
use crate::{Error, Result};

/// A small sequence problem whose "parameters" are the layer weights, the
/// inputs and the initial state, so one finite-difference sweep covers all
/// of them.
#[derive(Debug, Clone)]
pub struct LayerProblem {
    pub params: CellParams,
    pub xs: Vec<Vector>,
    pub init: CellState,
    pub cfg: IterationConfig,
    /// Loss is `Σ_t (r_t·y_t + ¼|y_t|²) + r_h·h_T + r_c·c_T`.
    pub probe_ys: Vec<Vector>,
    pub probe_h: Vector,
    pub probe_c: Vector,
}

impl Parameters for LayerProblem {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.params.visit_prefixed("", f);
        for (t, x) in self.xs.iter().enumerate() {
            f(&format!("x{t}"), &[x.dim()], x);
        }
        f("h0", &[self.init.h.dim()], &self.init.h);
        f("c0", &[self.init.c.dim()], &self.init.c);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.params.visit_prefixed_mut("", f);
        for (t, x) in self.xs.iter_mut().enumerate() {
            let d = x.dim();
            f(&format!("x{t}"), &[d], x);
        }
        let n = self.init.h.dim();
        f("h0", &[n], &mut self.init.h);
        f("c0", &[n], &mut self.init.c);
    }

    fn zeros_like(&self) -> Self {
        LayerProblem {
            params: self.params.zeros_like(),
            xs: self.xs.iter().map(|x| Vector::zeros(x.dim())).collect(),
            init: CellState::zeros(self.init.h.dim()),
            cfg: self.cfg.clone(),
            probe_ys: self.probe_ys.clone(),
            probe_h: self.probe_h.clone(),
            probe_c: self.probe_c.clone(),
        }
    }
}

impl LayerProblem {
    pub fn loss(&self) -> Result<f64> {
        let out = layer_forward(&self.params, &self.cfg, &self.xs, &self.init, None)?;
        let mut loss = 0.0;
        for (y, r) in out.ys.iter().zip(&self.probe_ys) {
            loss += r.dot(y) + 0.25 * y.dot(y);
        }
        loss += self.probe_h.dot(&out.final_state.h) + self.probe_c.dot(&out.final_state.c);
        Ok(loss)
    }

    /// Analytic gradient of [`LayerProblem::loss`] in the same layout.
    pub fn analytic_gradient(&self) -> Result<LayerProblem> {
        let out = layer_forward(&self.params, &self.cfg, &self.xs, &self.init, None)?;
        let grad_ys: Vec<Vector> = out
            .ys
            .iter()
            .zip(&self.probe_ys)
            .map(|(y, r)| {
                let mut g = r.clone();
                g.axpy(0.5, y);
                g
            })
            .collect();
        let grad_final = StateGrad {
            h: self.probe_h.clone(),
            c: self.probe_c.clone(),
        };
        let mut grads = self.zeros_like();
        let plan = BackpropPlan {
            verify_replay: true,
            ..BackpropPlan::new(self.xs.len().max(1))?
        };
        let lg = layer_backward(&self.params, &out.traces, &grad_ys, &grad_final, &mut grads.params, &plan)?;
        grads.xs = lg.grad_xs;
        grads.init = CellState {
            h: lg.grad_init.h,
            c: lg.grad_init.c,
        };
        Ok(grads)
    }

    /// Smallest `|p − θ|` over every halting comparison that could change
    /// the iteration count, or `∞` when none can.
    pub fn halting_gap(&self) -> Result<f64> {
        if self.cfg.mode == IterationMode::Fixed {
            return Ok(f64::INFINITY);
        }
        let out = layer_forward(&self.params, &self.cfg, &self.xs, &self.init, None)?;
        let mut gap = f64::INFINITY;
        for trace in &out.traces {
            for (k, rec) in trace.iterations.iter().enumerate() {
                if k + 1 < self.cfg.max_iterations {
                    gap = gap.min((rec.p - rec.threshold).abs());
                }
            }
        }
        Ok(gap)
    }

    /// Random problem. `combo` selects (adaptive, residual) from its low two
    /// bits.
    pub fn random(rng: &mut Rng, combo: usize, max_units: usize, max_timesteps: usize, max_iterations: usize) -> Result<Self> {
        let adaptive = combo & 1 == 1;
        let residual = combo & 2 == 2;
        let n = 2 + (rng.next_u64() as usize) % max_units.max(2).saturating_sub(1);
        let d = if residual { n } else { 1 + (rng.next_u64() as usize) % max_units.max(1) };
        let steps = 1 + (rng.next_u64() as usize) % max_timesteps.max(1);
        let iters = 1 + (rng.next_u64() as usize) % max_iterations.max(1);
        let cfg = if adaptive {
            IterationConfig {
                threshold_base: 0.3,
                threshold_step: 0.2,
                ..IterationConfig::adaptive(max_iterations.max(1), residual)
            }
        } else {
            IterationConfig::fixed(iters, residual)
        };
        let mut params = CellParams::uniform(n, d, -0.8, 0.8, rng)?;
        if adaptive {
            params.gate.bias = rng.uniform(0.0, 2.0);
        }
        let xs = (0..steps).map(|_| rng.uniform_vec(d, -1.0, 1.0)).collect();
        let init = CellState {
            h: rng.uniform_vec(n, -0.9, 0.9),
            c: rng.uniform_vec(n, -1.0, 1.0),
        };
        let y_dim = n;
        Ok(LayerProblem {
            params,
            xs,
            init,
            cfg,
            probe_ys: (0..steps).map(|_| rng.uniform_vec(y_dim, -1.0, 1.0)).collect(),
            probe_h: rng.uniform_vec(n, -1.0, 1.0),
            probe_c: rng.uniform_vec(n, -1.0, 1.0),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSpec {
    pub models: usize,
    pub max_units: usize,
    pub max_timesteps: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub step: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        GradcheckSpec {
            models: 20,
            max_units: 8,
            max_timesteps: 3,
            max_iterations: 3,
            seed: 0,
            step: 1e-5,
            rel_tol: 1e-5,
            abs_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordError {
    pub model: usize,
    pub buffer: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GroupError {
    pub coords: usize,
    pub failures: usize,
    /// Largest relative error among coordinates whose absolute error exceeds
    /// the floor (the others pass on the floor alone).
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub passed: bool,
    pub models: usize,
    pub coords: usize,
    /// Worst relative error among coordinates whose absolute error exceeds
    /// the floor.
    pub worst: Option<CoordError>,
    /// Keyed by buffer name; inputs collapse to `x`.
    pub groups: BTreeMap<String, GroupError>,
    pub failures: Vec<CoordError>,
}

impl GradcheckReport {
    pub fn worst_rel_err(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |w| w.rel_err)
    }

    /// Buffers with at least one failing coordinate.
    pub fn failing_buffers(&self) -> Vec<&str> {
        self.groups
            .iter()
            .filter(|(_, g)| g.failures > 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn group_name(buffer: &str) -> String {
    if buffer.starts_with('x') && buffer[1..].chars().all(|c| c.is_ascii_digit()) {
        "x".to_string()
    } else {
        buffer.to_string()
    }
}

/// Runs the randomised gradient check.
///
/// `corrupt` names a parameter buffer whose analytic gradient is perturbed
/// after the backward pass; it exists so the harness can be shown to fail.
pub fn run_gradcheck(spec: &GradcheckSpec, corrupt: Option<&str>) -> Result<GradcheckReport> {
    if spec.models == 0 || spec.max_units == 0 || spec.max_timesteps == 0 || spec.max_iterations == 0 {
        return Err(Error::InvalidInput("gradcheck sizes must be positive".into()));
    }
    let mut groups: BTreeMap<String, GroupError> = BTreeMap::new();
    let mut worst: Option<CoordError> = None;
    let mut failures = Vec::new();
    let mut coords = 0;

    for model in 0..spec.models {
        let mut rng = Rng::derived(spec.seed, model as u64);
        let problem = loop {
            let p = LayerProblem::random(&mut rng, model, spec.max_units, spec.max_timesteps, spec.max_iterations)?;
            if p.halting_gap()? > 1e-3 {
                break p;
            }
        };
        let mut analytic = problem.analytic_gradient()?;
        if let Some(name) = corrupt {
            let mut hit = false;
            analytic.visit_mut(&mut |buf, _, d| {
                if buf == name {
                    d.iter_mut().for_each(|v| *v += 1e-2);
                    hit = true;
                }
            });
            if !hit {
                return Err(Error::InvalidInput(format!("no gradient buffer named {name}")));
            }
        }
        let numeric = finite_difference_gradient(&problem, spec.step, |p| p.loss())?;

        let a = analytic.to_flat();
        let nm = numeric.to_flat();
        coords += a.len();
        for (k, (&av, &nv)) in a.iter().zip(&nm).enumerate() {
            let (buffer, index) = analytic.locate(k).expect("coordinate in range");
            let abs_err = (av - nv).abs();
            let scale = av.abs().max(nv.abs());
            let rel_err = if scale > 0.0 { abs_err / scale } else { 0.0 };
            let above_floor = abs_err > spec.abs_floor;
            let failed = above_floor && rel_err >= spec.rel_tol;
            let group = groups.entry(group_name(&buffer)).or_default();
            group.coords += 1;
            group.max_abs_err = group.max_abs_err.max(abs_err);
            if above_floor {
                group.max_rel_err = group.max_rel_err.max(rel_err);
            }
            let err = CoordError {
                model,
                buffer,
                index,
                analytic: av,
                numeric: nv,
                abs_err,
                rel_err,
            };
            if failed {
                group.failures += 1;
                if failures.len() < 32 {
                    failures.push(err.clone());
                }
            }
            if above_floor && worst.as_ref().map_or(true, |w| rel_err > w.rel_err) {
                worst = Some(err);
            }
        }
    }
    let passed = groups.values().all(|g| g.failures == 0);
    Ok(GradcheckReport {
        passed,
        models: spec.models,
        coords,
        worst,
        groups,
        failures,
    })
}
