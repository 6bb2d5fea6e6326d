use super::{Matrix, Rng, Vector};
use crate::{Error, Result};

/// Seed of the fixed start vector used by power iteration.
const POWER_START_SEED: u64 = 0x5eed_0f_5167;

/// Largest singular value of `m` by power iteration on `mᵀm`.
///
/// The start vector is drawn from a fixed seed, so the result depends only on
/// `m`. Iteration stops once the relative change of the estimate drops below
/// `tol`.
pub fn principal_singular_value(m: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidInput("principal_singular_value of an empty matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("principal_singular_value input".into()));
    }
    let mut v = Rng::new(POWER_START_SEED).unit_vector(m.cols());
    let mut w = vec![0.0; m.rows()];
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        m.matvec_into(&v, &mut w);
        let next = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if next == 0.0 {
            return Ok(0.0);
        }
        let mut u = Vector::zeros(m.cols());
        m.transpose_matvec_acc(&w, &mut u);
        let un = u.norm();
        if un == 0.0 {
            return Ok(next);
        }
        v = u.scale(1.0 / un);
        if (next - sigma).abs() <= tol * next {
            return Ok(next);
        }
        sigma = next;
    }
    Err(Error::NonConvergence {
        last_estimate: sigma,
        iterations: max_iter,
    })
}

/// Matrix with i.i.d. entries uniform on `[lo, hi)`.
pub fn uniform_init(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Result<Matrix> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("uniform_init needs lo < hi, got [{lo}, {hi})")));
    }
    Ok(Matrix::from_fn(rows, cols, |_, _| rng.uniform(lo, hi)))
}

/// Householder QR of a square matrix: returns `(Q, R)` with `Q` orthogonal
/// and `R` upper triangular such that `Q·R = m`.
pub fn qr_decompose(m: &Matrix) -> (Matrix, Matrix) {
    let n = m.rows();
    assert_eq!(n, m.cols(), "qr_decompose expects a square matrix");
    let mut r = m.clone();
    let mut q = Matrix::identity(n);
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let norm = (k..n).map(|i| r.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r.get(k, k) > 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i < k { 0.0 } else { r.get(i, k) };
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R ← (I − 2vvᵀ/vᵀv) R
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i] * r.get(i, j)).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..n {
                r.set(i, j, r.get(i, j) - s * v[i]);
            }
        }
        // Q ← Q (I − 2vvᵀ/vᵀv)
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| q.get(i, j) * v[j]).sum();
            let s = 2.0 * dot / vnorm2;
            for j in k..n {
                q.set(i, j, q.get(i, j) - s * v[j]);
            }
        }
        for i in k + 1..n {
            r.set(i, k, 0.0);
        }
    }
    (q, r)
}
