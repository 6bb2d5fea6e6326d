use crate::math::{uniform_init, Matrix, Rng, Vector};
use crate::{Error, Result};

/// The four LSTM gates, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Candidate value (tanh).
    J,
    /// Input gate.
    I,
    /// Forget gate.
    F,
    /// Output gate.
    O,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::J, Gate::I, Gate::F, Gate::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::J => "j",
            Gate::I => "i",
            Gate::F => "f",
            Gate::O => "o",
        }
    }
}

/// Weights of the scalar iteration gate
/// `p = σ(w_x·x + w_h·h + w_i·i + w_j·j + w_f·f + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationGateParams {
    pub w_x: Vector,
    pub w_h: Vector,
    pub w_i: Vector,
    pub w_j: Vector,
    pub w_f: Vector,
    pub bias: f64,
}

/// Parameters of one iterative LSTM layer with `n` units and input size `d`.
///
/// `w_rec`, `w_in` and `bias` are indexed by [`Gate::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub w_rec: [Matrix; 4],
    pub w_in: [Matrix; 4],
    pub bias: [Vector; 4],
    pub gate: IterationGateParams,
}

impl CellParams {
    pub fn zeros(units: usize, input_dim: usize) -> Self {
        CellParams {
            w_rec: std::array::from_fn(|_| Matrix::zeros(units, units)),
            w_in: std::array::from_fn(|_| Matrix::zeros(units, input_dim)),
            bias: std::array::from_fn(|_| Vector::zeros(units)),
            gate: IterationGateParams {
                w_x: Vector::zeros(input_dim),
                w_h: Vector::zeros(units),
                w_i: Vector::zeros(units),
                w_j: Vector::zeros(units),
                w_f: Vector::zeros(units),
                bias: 0.0,
            },
        }
    }

    /// Every entry i.i.d. uniform on `[lo, hi)`.
    pub fn uniform(units: usize, input_dim: usize, lo: f64, hi: f64, rng: &mut Rng) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("init range [{lo}, {hi}) is empty")));
        }
        let mut p = CellParams::zeros(units, input_dim);
        for g in 0..4 {
            p.w_rec[g] = uniform_init(units, units, lo, hi, rng)?;
            p.w_in[g] = uniform_init(units, input_dim, lo, hi, rng)?;
            p.bias[g] = rng.uniform_vec(units, lo, hi);
        }
        p.gate.w_x = rng.uniform_vec(input_dim, lo, hi);
        p.gate.w_h = rng.uniform_vec(units, lo, hi);
        p.gate.w_i = rng.uniform_vec(units, lo, hi);
        p.gate.w_j = rng.uniform_vec(units, lo, hi);
        p.gate.w_f = rng.uniform_vec(units, lo, hi);
        p.gate.bias = rng.uniform(lo, hi);
        Ok(p)
    }

    pub fn units(&self) -> usize {
        self.w_rec[0].rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_in[0].cols()
    }

    pub fn rec(&self, g: Gate) -> &Matrix {
        &self.w_rec[g.index()]
    }

    /// Checks that every buffer agrees with `units()` and `input_dim()`.
    pub fn validate(&self) -> Result<()> {
        let n = self.units();
        let d = self.input_dim();
        for g in Gate::ALL {
            let k = g.index();
            if self.w_rec[k].shape() != (n, n) {
                return Err(Error::dims("CellParams::w_rec", n * n, self.w_rec[k].data().len()));
            }
            if self.w_in[k].shape() != (n, d) {
                return Err(Error::dims("CellParams::w_in", n * d, self.w_in[k].data().len()));
            }
            if self.bias[k].dim() != n {
                return Err(Error::dims("CellParams::bias", n, self.bias[k].dim()));
            }
        }
        let gp = &self.gate;
        if gp.w_x.dim() != d {
            return Err(Error::dims("CellParams::gate.w_x", d, gp.w_x.dim()));
        }
        for v in [&gp.w_h, &gp.w_i, &gp.w_j, &gp.w_f] {
            if v.dim() != n {
                return Err(Error::dims("CellParams::gate", n, v.dim()));
            }
        }
        Ok(())
    }
}
