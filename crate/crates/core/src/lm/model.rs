use super::batch::Window;
use super::config::dropout_mask;
use crate::autograd::{layer_backward, BackpropPlan, Parameters, StateGrad};
use crate::cell::{layer_forward, CellParams, CellState, IterationConfig, IterationTrace};
use crate::dynamics::spectral_rescale;
use crate::math::{uniform_init, Matrix, Rng, Vector};
use crate::{Error, Result};

/// Embedding → stacked iterative layers → softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    /// `V × n`, row `k` embeds token `k`.
    pub embedding: Matrix,
    pub layers: Vec<CellParams>,
    /// `V × n`
    pub softmax_w: Matrix,
    pub softmax_b: Vector,
}

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

/// Forward results for one window, with everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct WindowPass {
    /// Mean negative log-likelihood (natural log) per target.
    pub loss: f64,
    pub nll_sum: f64,
    pub targets: usize,
    /// Iterations run summed over lanes, layers and timesteps.
    pub iterations: usize,
    /// Number of (lane, layer, timestep) cell steps.
    pub cell_steps: usize,
    lanes: Vec<LaneCache>,
}

#[derive(Debug, Clone)]
struct LaneCache {
    tokens: Vec<usize>,
    targets: Vec<usize>,
    /// `masks[l][t]` multiplies the input of layer `l`; `masks[layers]` the
    /// softmax input. Empty in evaluation.
    masks: Vec<Vec<Vector>>,
    traces: Vec<Vec<IterationTrace>>,
    /// Softmax inputs after dropout.
    top: Vec<Vector>,
    probs: Vec<Vector>,
}

impl WindowPass {
    pub fn mean_iterations(&self) -> f64 {
        self.iterations as f64 / self.cell_steps.max(1) as f64
    }

    /// Traces of `layer` for `lane`, one per timestep.
    pub fn traces(&self, lane: usize, layer: usize) -> &[IterationTrace] {
        &self.lanes[lane].traces[layer]
    }
}

impl LanguageModel {
    pub fn zeros(vocab: usize, units: usize, layers: usize) -> Self {
        LanguageModel {
            embedding: Matrix::zeros(vocab, units),
            layers: (0..layers).map(|_| CellParams::zeros(units, units)).collect(),
            softmax_w: Matrix::zeros(vocab, units),
            softmax_b: Vector::zeros(vocab),
        }
    }

    /// Every parameter drawn from `U(−range, range)`; with `margin`, each
    /// layer is then spectrally rescaled to that convergence margin.
    pub fn uniform(
        vocab: usize,
        units: usize,
        layers: usize,
        range: f64,
        margin: Option<f64>,
        rng: &mut Rng,
    ) -> Result<Self> {
        if vocab == 0 || units == 0 || layers == 0 {
            return Err(Error::InvalidInput("model sizes must be positive".into()));
        }
        let embedding = uniform_init(vocab, units, -range, range, rng)?;
        let mut cells = Vec::with_capacity(layers);
        for _ in 0..layers {
            let mut p = CellParams::uniform(units, units, -range, range, rng)?;
            if let Some(m) = margin {
                p = spectral_rescale(&p, m)?;
            }
            cells.push(p);
        }
        let softmax_w = uniform_init(vocab, units, -range, range, rng)?;
        let softmax_b = rng.uniform_vec(vocab, -range, range);
        Ok(LanguageModel {
            embedding,
            layers: cells,
            softmax_w,
            softmax_b,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn units(&self) -> usize {
        self.embedding.cols()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// `V·n + L·(4(n² + n·n + n) + (n + 4n + 1)) + n·V + V`
    pub fn parameter_count(vocab: usize, units: usize, layers: usize) -> usize {
        let n = units;
        let cell = 4 * (n * n + n * n + n) + (n + 4 * n + 1);
        vocab * n + layers * cell + n * vocab + vocab
    }

    pub fn zero_states(&self, lanes: usize) -> Vec<Vec<CellState>> {
        vec![vec![CellState::zeros(self.units()); self.num_layers()]; lanes]
    }

    /// Runs one window. `states[b][l]` is read as the incoming state of
    /// lane `b`, layer `l` and overwritten with its outgoing state.
    pub fn forward_window(
        &self,
        cfg: &IterationConfig,
        window: &Window,
        states: &mut [Vec<CellState>],
        phase: Phase,
        keep_prob: f64,
        rng: &mut Rng,
    ) -> Result<WindowPass> {
        let b = window.batch_size();
        let u = window.len();
        let n = self.units();
        let v = self.vocab_size();
        let layers = self.num_layers();
        if states.len() != b {
            return Err(Error::dims("forward_window(states)", b, states.len()));
        }
        let mut lanes = Vec::with_capacity(b);
        let mut nll_sum = 0.0;
        let mut iterations = 0;
        for lane in 0..b {
            let tokens = &window.inputs[lane];
            let targets = &window.targets[lane];
            if tokens.len() != u || targets.len() != u {
                return Err(Error::dims("forward_window(lane)", u, tokens.len().min(targets.len())));
            }
            if let Some(&bad) = tokens.iter().chain(targets).find(|&&t| t >= v) {
                return Err(Error::InvalidInput(format!("token id {bad} outside vocabulary of {v}")));
            }
            if states[lane].len() != layers {
                return Err(Error::dims("forward_window(layers)", layers, states[lane].len()));
            }
            let masks: Vec<Vec<Vector>> = match phase {
                Phase::Eval => Vec::new(),
                Phase::Train => (0..=layers)
                    .map(|_| (0..u).map(|_| dropout_mask(n, keep_prob, rng)).collect())
                    .collect::<Result<_>>()?,
            };
            let mut xs: Vec<Vector> = tokens.iter().map(|&t| Vector::from(self.embedding.row(t))).collect();
            let mut traces = Vec::with_capacity(layers);
            for (l, params) in self.layers.iter().enumerate() {
                let m = masks.get(l).map(Vec::as_slice);
                let out = layer_forward(params, cfg, &xs, &states[lane][l], m)?;
                states[lane][l] = out.final_state;
                iterations += out.traces.iter().map(IterationTrace::len).sum::<usize>();
                traces.push(out.traces);
                xs = out.ys;
            }
            let top: Vec<Vector> = match masks.get(layers) {
                Some(m) => xs.iter().zip(m).map(|(x, mk)| x.hadamard(mk)).collect(),
                None => xs,
            };
            let mut probs = Vec::with_capacity(u);
            for (h, &target) in top.iter().zip(targets) {
                let (p, nll) = self.softmax_nll(h, target);
                nll_sum += nll;
                probs.push(p);
            }
            lanes.push(LaneCache {
                tokens: tokens.clone(),
                targets: targets.clone(),
                masks,
                traces,
                top,
                probs,
            });
        }
        let count = b * u;
        let loss = nll_sum / count as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("window loss {loss}")));
        }
        Ok(WindowPass {
            loss,
            nll_sum,
            targets: count,
            iterations,
            cell_steps: count * layers,
            lanes,
        })
    }

    /// Softmax distribution over the vocabulary and `−ln p[target]`.
    pub fn softmax_nll(&self, h: &[f64], target: usize) -> (Vector, f64) {
        let mut logits = Vector::zeros(self.vocab_size());
        self.softmax_w.matvec_into(h, &mut logits);
        for (z, b) in logits.iter_mut().zip(self.softmax_b.iter()) {
            *z += b;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted_target = logits[target] - max;
        let mut sum = 0.0;
        for z in logits.iter_mut() {
            *z = (*z - max).exp();
            sum += *z;
        }
        let nll = sum.ln() - shifted_target;
        for z in logits.iter_mut() {
            *z /= sum;
        }
        (logits, nll)
    }

    /// Accumulates `∂loss/∂θ` for `pass.loss` into `grads`. Gradients do not
    /// flow into the states carried in from the previous window.
    pub fn backward_window(&self, pass: &WindowPass, grads: &mut LanguageModel) -> Result<()> {
        let layers = self.num_layers();
        let n = self.units();
        let scale = 1.0 / pass.targets as f64;
        for lane in &pass.lanes {
            let u = lane.tokens.len();
            let plan = BackpropPlan::new(u)?;
            let mut grad_ys: Vec<Vector> = Vec::with_capacity(u);
            for t in 0..u {
                let mut g = lane.probs[t].scale(scale);
                g[lane.targets[t]] -= scale;
                grads.softmax_w.add_outer(&g, &lane.top[t]);
                grads.softmax_b.axpy(1.0, &g);
                let mut gh = Vector::zeros(n);
                self.softmax_w.transpose_matvec_acc(&g, &mut gh);
                if let Some(m) = lane.masks.get(layers) {
                    gh = gh.hadamard(&m[t]);
                }
                grad_ys.push(gh);
            }
            for l in (0..layers).rev() {
                let lg = layer_backward(
                    &self.layers[l],
                    &lane.traces[l],
                    &grad_ys,
                    &StateGrad::zeros(n),
                    &mut grads.layers[l],
                    &plan,
                )?;
                grad_ys = match lane.masks.get(l) {
                    Some(m) => lg.grad_xs.iter().zip(m).map(|(g, mk)| g.hadamard(mk)).collect(),
                    None => lg.grad_xs,
                };
            }
            for (t, g) in grad_ys.iter().enumerate() {
                let row = lane.tokens[t];
                let n = g.dim();
                let data = grads.embedding.data_mut();
                for (w, gv) in data[row * n..(row + 1) * n].iter_mut().zip(g.iter()) {
                    *w += gv;
                }
            }
        }
        Ok(())
    }

    /// `½·l2·Σ|W_rec|²` added to `grads` as `l2·W_rec`.
    pub fn add_l2_gradient(&self, l2: f64, grads: &mut LanguageModel) {
        if l2 == 0.0 {
            return;
        }
        for (p, g) in self.layers.iter().zip(&mut grads.layers) {
            for k in 0..4 {
                for (gv, pv) in g.w_rec[k].data_mut().iter_mut().zip(p.w_rec[k].data()) {
                    *gv += l2 * pv;
                }
            }
        }
    }
}

impl Parameters for LanguageModel {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f("embedding", &[self.embedding.rows(), self.embedding.cols()], self.embedding.data());
        for (l, p) in self.layers.iter().enumerate() {
            p.visit_prefixed(&format!("layer{l}."), f);
        }
        f("softmax_w", &[self.softmax_w.rows(), self.softmax_w.cols()], self.softmax_w.data());
        f("softmax_b", &[self.softmax_b.dim()], &self.softmax_b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let (r, c) = (self.embedding.rows(), self.embedding.cols());
        f("embedding", &[r, c], self.embedding.data_mut());
        for (l, p) in self.layers.iter_mut().enumerate() {
            p.visit_prefixed_mut(&format!("layer{l}."), f);
        }
        let (r, c) = (self.softmax_w.rows(), self.softmax_w.cols());
        f("softmax_w", &[r, c], self.softmax_w.data_mut());
        let v = self.softmax_b.dim();
        f("softmax_b", &[v], &mut self.softmax_b);
    }

    fn zeros_like(&self) -> Self {
        LanguageModel::zeros(self.vocab_size(), self.units(), self.num_layers())
    }
}
