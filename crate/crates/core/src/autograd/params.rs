use crate::cell::{CellParams, Gate};

/// A named collection of flat `f64` buffers.
///
/// Parameter sets and their gradients share the same type; the visit order
/// is fixed, which makes flattening, clipping and checkpoint layout
/// deterministic.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64]));
    /// Same shapes, all zeros.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_coords(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, d| n += d.len());
        n
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_coords());
        self.visit(&mut |_, _, d| out.extend_from_slice(d));
        out
    }

    fn copy_from_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        self.visit_mut(&mut |_, _, d| {
            d.copy_from_slice(&flat[pos..pos + d.len()]);
            pos += d.len();
        });
        assert_eq!(pos, flat.len(), "flat buffer length");
    }

    /// `self += s · other` (same layout).
    fn add_scaled(&mut self, s: f64, other: &Self)
    where
        Self: Sized,
    {
        let flat = other.to_flat();
        let mut pos = 0;
        self.visit_mut(&mut |_, _, d| {
            for v in d.iter_mut() {
                *v += s * flat[pos];
                pos += 1;
            }
        });
    }

    fn scale_all(&mut self, s: f64) {
        self.visit_mut(&mut |_, _, d| d.iter_mut().for_each(|v| *v *= s));
    }

    /// Global L2 norm over every buffer, accumulated in visit order.
    fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.visit(&mut |_, _, d| {
            for v in d {
                acc += v * v;
            }
        });
        acc.sqrt()
    }

    /// `(name, shape)` of every buffer in visit order.
    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, shape, _| out.push((name.to_string(), shape.to_vec())));
        out
    }

    /// Locates flat coordinate `index` as `(buffer name, offset in buffer)`.
    fn locate(&self, index: usize) -> Option<(String, usize)> {
        let mut pos = 0;
        let mut found = None;
        self.visit(&mut |name, _, d| {
            if found.is_none() && index < pos + d.len() {
                found = Some((name.to_string(), index - pos));
            }
            pos += d.len();
        });
        found
    }

    /// Applies `f` to flat coordinate `index`.
    fn update_coord(&mut self, index: usize, f: &mut dyn FnMut(&mut f64)) {
        let mut pos = 0;
        let mut done = false;
        self.visit_mut(&mut |_, _, d| {
            if !done && index < pos + d.len() {
                f(&mut d[index - pos]);
                done = true;
            }
            pos += d.len();
        });
        assert!(done, "coordinate {index} out of range");
    }
}

impl CellParams {
    /// Visits the layer's buffers with `prefix` prepended to every name.
    pub fn visit_prefixed(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        let n = self.units();
        let d = self.input_dim();
        for g in Gate::ALL {
            let k = g.index();
            f(&format!("{prefix}w_rec_{}", g.name()), &[n, n], self.w_rec[k].data());
            f(&format!("{prefix}w_in_{}", g.name()), &[n, d], self.w_in[k].data());
            f(&format!("{prefix}b_{}", g.name()), &[n], &self.bias[k]);
        }
        let gp = &self.gate;
        f(&format!("{prefix}gate_w_x"), &[d], &gp.w_x);
        f(&format!("{prefix}gate_w_h"), &[n], &gp.w_h);
        f(&format!("{prefix}gate_w_i"), &[n], &gp.w_i);
        f(&format!("{prefix}gate_w_j"), &[n], &gp.w_j);
        f(&format!("{prefix}gate_w_f"), &[n], &gp.w_f);
        f(&format!("{prefix}gate_b"), &[1], std::slice::from_ref(&gp.bias));
    }

    pub fn visit_prefixed_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let n = self.units();
        let d = self.input_dim();
        for g in Gate::ALL {
            let k = g.index();
            f(&format!("{prefix}w_rec_{}", g.name()), &[n, n], self.w_rec[k].data_mut());
            f(&format!("{prefix}w_in_{}", g.name()), &[n, d], self.w_in[k].data_mut());
            f(&format!("{prefix}b_{}", g.name()), &[n], &mut self.bias[k]);
        }
        let gp = &mut self.gate;
        f(&format!("{prefix}gate_w_x"), &[d], &mut gp.w_x);
        f(&format!("{prefix}gate_w_h"), &[n], &mut gp.w_h);
        f(&format!("{prefix}gate_w_i"), &[n], &mut gp.w_i);
        f(&format!("{prefix}gate_w_j"), &[n], &mut gp.w_j);
        f(&format!("{prefix}gate_w_f"), &[n], &mut gp.w_f);
        f(&format!("{prefix}gate_b"), &[1], std::slice::from_mut(&mut gp.bias));
    }
}

impl Parameters for CellParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.visit_prefixed("", f)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.visit_prefixed_mut("", f)
    }

    fn zeros_like(&self) -> Self {
        CellParams::zeros(self.units(), self.input_dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;

    #[test]
    fn cell_parameter_count() {
        let p = CellParams::zeros(4, 3);
        // 4 gates × (n² + n·d + n) + gate (d + 4n + 1)
        assert_eq!(p.num_coords(), 4 * (16 + 12 + 4) + (3 + 16 + 1));
        assert_eq!(p.layout().len(), 4 * 3 + 6);
    }

    #[test]
    fn flat_round_trip_and_locate() {
        let p = CellParams::uniform(3, 2, -1.0, 1.0, &mut Rng::new(2)).unwrap();
        let mut q = p.zeros_like();
        q.copy_from_flat(&p.to_flat());
        assert_eq!(p, q);
        assert_eq!(p.locate(0), Some(("w_rec_j".to_string(), 0)));
        assert_eq!(p.locate(p.num_coords() - 1), Some(("gate_b".to_string(), 0)));
        assert_eq!(p.locate(p.num_coords()), None);
        q.update_coord(p.num_coords() - 1, &mut |v| *v = 7.0);
        assert_eq!(q.gate.bias, 7.0);
    }
}
