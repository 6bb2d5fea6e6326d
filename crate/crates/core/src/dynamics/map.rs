use crate::cell::{precompute_constants, CellParams, Gate};
use crate::cell::IterationOutputs;
use crate::math::{Matrix, Vector};
use crate::{Error, Result};

/// The hidden-state update with the input and cell state frozen:
/// `g(h) = o(h) ⊙ tanh(f(h) ⊙ c0 + i(h) ⊙ j(h))`.
///
/// No iteration gate, blending or residual is involved.
#[derive(Debug, Clone)]
pub struct AutonomousMap<'a> {
    params: &'a CellParams,
    x: Vector,
    c0: Vector,
    consts: [Vector; 4],
}

/// States visited by [`iterate_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `h(0), …, h(τ_end)`.
    pub states: Vec<Vector>,
    pub converged: bool,
    /// `|h(τ_end) − h(τ_end − 1)|∞`
    pub final_residual: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory is never empty")
    }
}

impl<'a> AutonomousMap<'a> {
    pub fn new(params: &'a CellParams, x: &[f64], c0: &[f64]) -> Result<Self> {
        params.validate()?;
        if c0.len() != params.units() {
            return Err(Error::dims("AutonomousMap(c0)", params.units(), c0.len()));
        }
        let consts = precompute_constants(params, x)?;
        Ok(AutonomousMap {
            params,
            x: Vector::from(x),
            c0: Vector::from(c0),
            consts,
        })
    }

    pub fn params(&self) -> &CellParams {
        self.params
    }

    pub fn units(&self) -> usize {
        self.params.units()
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn c0(&self) -> &Vector {
        &self.c0
    }

    fn check(&self, h: &[f64], op: &'static str) -> Result<()> {
        if h.len() != self.units() {
            return Err(Error::dims(op, self.units(), h.len()));
        }
        Ok(())
    }

    fn eval(&self, h: &[f64]) -> IterationOutputs {
        crate::cell::cell_iteration(self.params, &self.consts, &self.c0, h).expect("dimensions checked by caller")
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vector> {
        self.check(h, "apply_map")?;
        Ok(self.eval(h).h_next)
    }

    /// `∂g/∂h` at `h`:
    ///
    /// ```text
    /// diag(tanh(c) ⊙ σ'(a_o)) W_o
    ///   + diag(o ⊙ (1 − tanh²c) ⊙ c0 ⊙ σ'(a_f)) W_f
    ///   + diag(o ⊙ (1 − tanh²c) ⊙ j ⊙ σ'(a_i)) W_i
    ///   + diag(o ⊙ (1 − tanh²c) ⊙ i ⊙ (1 − j²)) W_j
    /// ```
    pub fn jacobian(&self, h: &[f64]) -> Result<Matrix> {
        self.check(h, "jacobian_g")?;
        let out = self.eval(h);
        let n = self.units();
        let mut d_o = Vector::zeros(n);
        let mut d_f = Vector::zeros(n);
        let mut d_i = Vector::zeros(n);
        let mut d_j = Vector::zeros(n);
        for k in 0..n {
            let tc = out.tanh_c[k];
            let dc = out.o[k] * (1.0 - tc * tc);
            d_o[k] = tc * out.o[k] * (1.0 - out.o[k]);
            d_f[k] = dc * self.c0[k] * out.f[k] * (1.0 - out.f[k]);
            d_i[k] = dc * out.j[k] * out.i[k] * (1.0 - out.i[k]);
            d_j[k] = dc * out.i[k] * (1.0 - out.j[k] * out.j[k]);
        }
        let p = self.params;
        let mut jac = p.rec(Gate::O).scale_rows(&d_o);
        for (g, diag) in [(Gate::F, &d_f), (Gate::I, &d_i), (Gate::J, &d_j)] {
            jac = jac.add(&p.rec(g).scale_rows(diag))?;
        }
        Ok(jac)
    }
}

/// One evaluation of the frozen-input map.
pub fn apply_map(map: &AutonomousMap<'_>, h: &[f64]) -> Result<Vector> {
    map.apply(h)
}

/// Analytic Jacobian of [`apply_map`].
pub fn jacobian_g(map: &AutonomousMap<'_>, h: &[f64]) -> Result<Matrix> {
    map.jacobian(h)
}

/// Iterates the map from `h0` until successive states differ by less than
/// `tol` in the max norm, or `tau_max` steps have run.
pub fn iterate_map(map: &AutonomousMap<'_>, h0: &[f64], tau_max: usize, tol: f64) -> Result<Trajectory> {
    if tau_max == 0 {
        return Err(Error::InvalidInput("tau_max must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    map.check(h0, "iterate_map")?;
    let mut states = vec![Vector::from(h0)];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..tau_max {
        let prev = states.last().expect("non-empty");
        let next = map.eval(prev).h_next;
        residual = next.max_abs_diff(prev);
        states.push(next);
        if residual < tol {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        states,
        converged,
        final_residual: residual,
    })
}
