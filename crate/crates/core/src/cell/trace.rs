use super::params::CellParams;
use super::step::{cell_iteration_unchecked, iteration_gate_unchecked, precompute_constants};
use crate::math::Vector;
use crate::{Error, Result};

/// Intermediates of one within-timestep iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Gate pre-activations `W_rec·h + C`, indexed by gate.
    pub pre: [Vector; 4],
    pub j: Vector,
    pub i: Vector,
    pub f: Vector,
    pub o: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    /// Candidate state `o ⊙ tanh(c)` before blending.
    pub h_cand: Vector,
    pub gate_pre: f64,
    pub p: f64,
    pub threshold: f64,
    /// Blended state `p·h_cand + (1 − p)·h_prev`.
    pub h: Vector,
    pub halt: bool,
}

/// Everything one timestep computed, enough to replay it exactly and to
/// backpropagate through it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub x: Vector,
    pub c0: Vector,
    pub h0: Vector,
    /// Input-dependent constants `W_in·x + b`, indexed by gate.
    pub consts: [Vector; 4],
    pub residual: bool,
    pub iterations: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Hidden state entering iteration `k` (0-based).
    pub fn h_in(&self, k: usize) -> &Vector {
        if k == 0 {
            &self.h0
        } else {
            &self.iterations[k - 1].h
        }
    }

    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("trace has at least one iteration")
    }

    /// Re-runs the recorded forward pass against `params` and checks every
    /// intermediate bit for bit.
    pub fn replay(&self, params: &CellParams) -> Result<()> {
        if self.iterations.is_empty() {
            return Err(Error::Integrity("trace has no iterations".into()));
        }
        let n = params.units();
        if self.x.dim() != params.input_dim() || self.h0.dim() != n || self.c0.dim() != n {
            return Err(Error::Integrity("trace shapes do not match parameters".into()));
        }
        let consts = precompute_constants(params, &self.x)?;
        if consts != self.consts {
            return Err(Error::Integrity("input constants differ on replay".into()));
        }
        for (k, rec) in self.iterations.iter().enumerate() {
            let h_in = self.h_in(k);
            let out = cell_iteration_unchecked(params, &self.consts, &self.c0, h_in);
            let (gate_pre, p) = iteration_gate_unchecked(params, &self.x, &out.h_next, &out.i, &out.j, &out.f);
            let same = out.pre == rec.pre
                && out.j == rec.j
                && out.i == rec.i
                && out.f == rec.f
                && out.o == rec.o
                && out.c == rec.c
                && out.h_next == rec.h_cand
                && gate_pre.to_bits() == rec.gate_pre.to_bits()
                && p.to_bits() == rec.p.to_bits();
            if !same {
                return Err(Error::Integrity(format!("iteration {} differs on replay", k + 1)));
            }
            let last = k + 1 == self.iterations.len();
            if rec.halt != last {
                return Err(Error::Integrity(format!("halt flag inconsistent at iteration {}", k + 1)));
            }
        }
        Ok(())
    }
}
