use crate::cell::{CellParams, Gate, IterationTrace};
use crate::math::Vector;
use crate::{Error, Result};

/// Gradient with respect to a carried [`CellState`](crate::cell::CellState).
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrad {
    pub h: Vector,
    pub c: Vector,
}

impl StateGrad {
    pub fn zeros(units: usize) -> Self {
        StateGrad {
            h: Vector::zeros(units),
            c: Vector::zeros(units),
        }
    }
}

/// How the blend `h = p·h̃ + (1 − p)·h_prev` is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlendMode {
    /// Gradients flow through `p` and both blend operands. The halting
    /// decision itself is treated as fixed structure.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackpropPlan {
    pub unroll_length: usize,
    pub blend: BlendMode,
    /// Replay every trace against the parameters before differentiating it.
    pub verify_replay: bool,
}

impl BackpropPlan {
    pub fn new(unroll_length: usize) -> Result<Self> {
        if unroll_length == 0 {
            return Err(Error::Config("unroll_length must be at least 1".into()));
        }
        Ok(BackpropPlan {
            unroll_length,
            blend: BlendMode::Full,
            verify_replay: false,
        })
    }
}

#[derive(Debug, Clone)]
pub struct StepGrads {
    pub grad_x: Vector,
    pub grad_prev: StateGrad,
}

/// Reverse pass of one recorded timestep.
///
/// Parameter gradients are accumulated into `grads`; the gradients with
/// respect to the step input and the incoming state are returned. The trace
/// is replayed against `params` first.
pub fn cell_step_backward(
    trace: &IterationTrace,
    params: &CellParams,
    grad_y: &[f64],
    grad_next: &StateGrad,
    grads: &mut CellParams,
) -> Result<StepGrads> {
    trace.replay(params)?;
    check_shapes(trace, params, grad_y, grad_next, grads)?;
    Ok(step_backward_unchecked(trace, params, grad_y, grad_next, grads))
}

fn check_shapes(
    trace: &IterationTrace,
    params: &CellParams,
    grad_y: &[f64],
    grad_next: &StateGrad,
    grads: &CellParams,
) -> Result<()> {
    let n = params.units();
    let y_dim = if trace.residual { params.input_dim() } else { n };
    if grad_y.len() != y_dim {
        return Err(Error::dims("cell_step_backward(grad_y)", y_dim, grad_y.len()));
    }
    if grad_next.h.dim() != n || grad_next.c.dim() != n {
        return Err(Error::dims("cell_step_backward(grad_next)", n, grad_next.h.dim()));
    }
    if grads.units() != n || grads.input_dim() != params.input_dim() {
        return Err(Error::dims("cell_step_backward(grads)", n, grads.units()));
    }
    if trace.is_empty() {
        return Err(Error::Integrity("trace has no iterations".into()));
    }
    Ok(())
}

pub(crate) fn step_backward_unchecked(
    trace: &IterationTrace,
    params: &CellParams,
    grad_y: &[f64],
    grad_next: &StateGrad,
    grads: &mut CellParams,
) -> StepGrads {
    let n = params.units();
    let d = params.input_dim();
    let x = &trace.x;
    let c0 = &trace.c0;
    let gp = &params.gate;

    let mut grad_x = Vector::zeros(d);
    // y = h_T (+ x)
    let mut gh: Vector = grad_next.h.add(grad_y);
    if trace.residual {
        grad_x.axpy(1.0, grad_y);
    }
    let mut grad_c0 = Vector::zeros(n);
    let mut grad_consts: [Vector; 4] = std::array::from_fn(|_| Vector::zeros(n));

    let mut gh_cand = Vector::zeros(n);
    let mut ga: [Vector; 4] = std::array::from_fn(|_| Vector::zeros(n));
    let last = trace.len() - 1;

    for k in (0..trace.len()).rev() {
        let rec = &trace.iterations[k];
        let h_prev = trace.h_in(k);
        let p = rec.p;

        // h = p·h̃ + (1 − p)·h_prev
        let mut grad_p = 0.0;
        let mut gh_prev = Vector::zeros(n);
        for u in 0..n {
            grad_p += gh[u] * (rec.h_cand[u] - h_prev[u]);
            gh_cand[u] = p * gh[u];
            gh_prev[u] = (1.0 - p) * gh[u];
        }

        // p = σ(z), z = w_x·x + w_h·h̃ + w_i·i + w_j·j + w_f·f + b
        let gz = grad_p * p * (1.0 - p);
        let g = &mut grads.gate;
        g.bias += gz;
        g.w_x.axpy(gz, x);
        g.w_h.axpy(gz, &rec.h_cand);
        g.w_i.axpy(gz, &rec.i);
        g.w_j.axpy(gz, &rec.j);
        g.w_f.axpy(gz, &rec.f);
        grad_x.axpy(gz, &gp.w_x);
        gh_cand.axpy(gz, &gp.w_h);

        for u in 0..n {
            // h̃ = o ⊙ tanh(c)
            let tc = rec.tanh_c[u];
            let go = gh_cand[u] * tc;
            let mut gc = gh_cand[u] * rec.o[u] * (1.0 - tc * tc);
            if k == last {
                gc += grad_next.c[u];
            }
            // c = f ⊙ c0 + i ⊙ j
            let gf = gc * c0[u] + gz * gp.w_f[u];
            let gi = gc * rec.j[u] + gz * gp.w_i[u];
            let gj = gc * rec.i[u] + gz * gp.w_j[u];
            grad_c0[u] += gc * rec.f[u];

            let (j, i, f, o) = (rec.j[u], rec.i[u], rec.f[u], rec.o[u]);
            ga[Gate::J.index()][u] = gj * (1.0 - j * j);
            ga[Gate::I.index()][u] = gi * i * (1.0 - i);
            ga[Gate::F.index()][u] = gf * f * (1.0 - f);
            ga[Gate::O.index()][u] = go * o * (1.0 - o);
        }

        for g in 0..4 {
            grads.w_rec[g].add_outer(&ga[g], h_prev);
            params.w_rec[g].transpose_matvec_acc(&ga[g], &mut gh_prev);
            grad_consts[g].axpy(1.0, &ga[g]);
        }
        gh = gh_prev;
    }

    // C = W_in·x + b
    for g in 0..4 {
        grads.w_in[g].add_outer(&grad_consts[g], x);
        grads.bias[g].axpy(1.0, &grad_consts[g]);
        params.w_in[g].transpose_matvec_acc(&grad_consts[g], &mut grad_x);
    }

    StepGrads {
        grad_x,
        grad_prev: StateGrad { h: gh, c: grad_c0 },
    }
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    /// Gradient with respect to each (masked) step input.
    pub grad_xs: Vec<Vector>,
    pub grad_init: StateGrad,
}

/// Backpropagation through a recorded sequence of steps.
///
/// `grad_ys[t]` is the upstream gradient of step `t`'s output and
/// `grad_final` the gradient arriving at the final state (zero under
/// truncated BPTT).
pub fn layer_backward(
    params: &CellParams,
    traces: &[IterationTrace],
    grad_ys: &[Vector],
    grad_final: &StateGrad,
    grads: &mut CellParams,
    plan: &BackpropPlan,
) -> Result<LayerGrads> {
    if grad_ys.len() != traces.len() {
        return Err(Error::dims("layer_backward(grad_ys)", traces.len(), grad_ys.len()));
    }
    let mut grad_state = grad_final.clone();
    let mut grad_xs = vec![Vector::default(); traces.len()];
    for t in (0..traces.len()).rev() {
        let step = if plan.verify_replay {
            cell_step_backward(&traces[t], params, &grad_ys[t], &grad_state, grads)?
        } else {
            check_shapes(&traces[t], params, &grad_ys[t], &grad_state, grads)?;
            step_backward_unchecked(&traces[t], params, &grad_ys[t], &grad_state, grads)
        };
        grad_xs[t] = step.grad_x;
        grad_state = step.grad_prev;
    }
    Ok(LayerGrads {
        grad_xs,
        grad_init: grad_state,
    })
}
