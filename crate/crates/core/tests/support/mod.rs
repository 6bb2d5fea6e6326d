//! Reference implementations used as oracles by the integration tests. None
//! of this goes through the crate's own linear algebra.

#![allow(dead_code)]

use iterlstm_core::cell::CellParams;

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `W x` with a plain left-to-right sum.
pub fn naive_matvec(rows: usize, cols: usize, data: &[f64], x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            let mut s = 0.0;
            for c in 0..cols {
                s += data[r * cols + c] * x[c];
            }
            s
        })
        .collect()
}

/// Textbook LSTM step with gates in the order j, i, f, o:
/// `c' = σ(f)·c + σ(i)·tanh(j)`, `h' = σ(o)·tanh(c')`.
pub fn vanilla_lstm_step(p: &CellParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = p.units();
    let d = p.input_dim();
    let pre: Vec<Vec<f64>> = (0..4)
        .map(|g| {
            let wx = naive_matvec(n, d, p.w_in[g].data(), x);
            let wh = naive_matvec(n, n, p.w_rec[g].data(), h);
            (0..n).map(|k| wh[k] + (wx[k] + p.bias[g][k])).collect()
        })
        .collect();
    let mut h_new = vec![0.0; n];
    let mut c_new = vec![0.0; n];
    for k in 0..n {
        let j = pre[0][k].tanh();
        let i = sig(pre[1][k]);
        let f = sig(pre[2][k]);
        let o = sig(pre[3][k]);
        c_new[k] = f * c[k] + i * j;
        h_new[k] = o * c_new[k].tanh();
    }
    (h_new, c_new)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(n: usize, sym: &[f64]) -> Vec<f64> {
    let mut a = sym.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|k| a[k * n + k]).collect()
}

/// Largest singular value of a square matrix: the square root of the top
/// eigenvalue of `MᵀM`.
pub fn sigma_max(n: usize, m: &[f64]) -> f64 {
    let mut mtm = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += m[k * n + i] * m[k * n + j];
            }
            mtm[i * n + j] = s;
        }
    }
    jacobi_eigenvalues(n, &mtm).into_iter().fold(0.0, f64::max).sqrt()
}

/// `ln|det M|` by Gaussian elimination with partial pivoting.
pub fn log_abs_det(n: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut acc = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap();
        if a[piv * n + col] == 0.0 {
            return f64::NEG_INFINITY;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
        }
        let d = a[col * n + col];
        acc += d.abs().ln();
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
        }
    }
    acc
}

/// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
pub fn write_corpus(dir: &std::path::Path, train: &str, valid: &str, test: &str) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("train.txt"), train).unwrap();
    std::fs::write(dir.join("valid.txt"), valid).unwrap();
    std::fs::write(dir.join("test.txt"), test).unwrap();
}
