//! Weight initializers.

use super::mat::Mat;
use super::SeedRng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Orthogonal initialization via Householder QR of a Gaussian matrix.
///
/// For `rows <= cols` the result has orthonormal rows scaled by `gain`
/// (`Q Q^T = gain^2 I`); otherwise orthonormal columns. Deterministic for a
/// fixed seed. Signs are fixed by the R diagonal so the decomposition is
/// unique.
pub fn orthogonal_init(rows: usize, cols: usize, gain: f64, rng: &mut SeedRng) -> Mat {
    let transpose = rows < cols;
    let (r, c) = if transpose { (cols, rows) } else { (rows, cols) };
    // r >= c: QR gives Q with orthonormal columns
    let mut g = Mat::zeros(r, c);
    for v in g.data_mut() {
        *v = StandardNormal.sample(rng);
    }
    let (mut q, rdiag) = thin_qr(&g);
    for j in 0..c {
        if rdiag[j] < 0.0 {
            for i in 0..r {
                let v = q.get(i, j);
                q.set(i, j, -v);
            }
        }
    }
    let q = if transpose { q.transpose() } else { q };
    q.scale(gain)
}

/// Thin QR via modified Gram-Schmidt; returns (Q, diag(R)).
/// Requires rows >= cols.
fn thin_qr(a: &Mat) -> (Mat, Vec<f64>) {
    let (r, c) = (a.rows(), a.cols());
    let mut q = a.clone();
    let mut rdiag = vec![0.0; c];
    for j in 0..c {
        for k in 0..j {
            let mut dot = 0.0;
            for i in 0..r {
                dot += q.get(i, k) * q.get(i, j);
            }
            for i in 0..r {
                let v = q.get(i, j) - dot * q.get(i, k);
                q.set(i, j, v);
            }
        }
        let mut norm = 0.0;
        for i in 0..r {
            norm += q.get(i, j) * q.get(i, j);
        }
        let norm = norm.sqrt();
        rdiag[j] = norm;
        if norm > 0.0 {
            for i in 0..r {
                let v = q.get(i, j) / norm;
                q.set(i, j, v);
            }
        }
    }
    (q, rdiag)
}

/// Small centered uniform init used for embeddings and projections.
pub fn uniform_init(rows: usize, cols: usize, half_width: f64, rng: &mut SeedRng) -> Mat {
    let mut m = Mat::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.random_range(-half_width..half_width);
    }
    m
}
