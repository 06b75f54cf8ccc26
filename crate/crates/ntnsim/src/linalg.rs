//! Complex linear-algebra helpers for multi-user precoding: zero-forcing
//! pseudo-inverses, dominant-eigenvector extraction from stacked channel
//! rows, and null-space projections.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative diagonal loading applied when the Gram matrix is rank deficient.
pub const DIAG_LOADING_REL: f64 = 1e-6;

/// Zero-forcing directions for stacked user rows.
///
/// `rows` is `k x n` (one row per user, `n` transmit ports). Returns the
/// `n x k` matrix `W = H^H (H H^H)^{-1}` whose columns satisfy
/// `H W = I`, plus a flag indicating that diagonal loading was applied to a
/// rank-deficient Gram matrix.
pub fn zf_directions(rows: &CMat) -> (CMat, bool) {
    let k = rows.nrows();
    assert!(k > 0, "need at least one served user");
    let gram = rows * rows.adjoint();
    let (inv, loaded) = invert_hermitian(&gram);
    (rows.adjoint() * inv, loaded)
}

/// Inverts a Hermitian positive semi-definite matrix via Cholesky, falling
/// back to diagonal loading with `1e-6 * trace` when the factorization
/// fails.
fn invert_hermitian(gram: &CMat) -> (CMat, bool) {
    if let Some(chol) = gram.clone().cholesky() {
        // Rounding can leave a tiny positive pivot where the matrix is
        // actually singular; treat those as rank deficient too.
        let l = chol.l();
        let k = gram.nrows();
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for i in 0..k {
            let d = l[(i, i)].re;
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if dmin > 1e-7 * dmax {
            return (chol.inverse(), false);
        }
    }
    let k = gram.nrows();
    let trace: f64 = (0..k).map(|i| gram[(i, i)].re).sum();
    let eps = DIAG_LOADING_REL * trace.max(f64::MIN_POSITIVE);
    let mut loaded_gram = gram.clone();
    for i in 0..k {
        loaded_gram[(i, i)] += Complex64::new(eps, 0.0);
    }
    let inv = loaded_gram
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| {
            // Pathological input: fall back to heavier loading.
            for i in 0..k {
                loaded_gram[(i, i)] += Complex64::new(trace.max(1.0), 0.0);
            }
            loaded_gram.cholesky().expect("loaded Gram matrix").inverse()
        });
    (inv, true)
}

/// Projects stacked rows onto the orthogonal complement of `span(E)`:
/// `H (I - E E^H)`.
pub fn project_rows_out(rows: &CMat, basis: &CMat) -> CMat {
    if basis.ncols() == 0 {
        return rows.clone();
    }
    rows - (rows * basis) * basis.adjoint()
}

fn fixed_gaussian_matrix(nrows: usize, ncols: usize) -> CMat {
    // Fixed-seed sketch so the whole pipeline stays deterministic.
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee_5eed_cafe);
    CMat::from_fn(nrows, ncols, |_, _| {
        Complex64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    })
}

fn orthonormalize(m: CMat) -> CMat {
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    // Drop numerically null columns so the basis stays well conditioned.
    let mut keep: Vec<usize> = Vec::new();
    let scale = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].norm())
        .fold(0.0f64, f64::max);
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)].norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            keep.push(i);
        }
    }
    if keep.len() == q.ncols() {
        q
    } else {
        let cols: Vec<CVec> = keep.iter().map(|&i| q.column(i).into_owned()).collect();
        CMat::from_columns(&cols)
    }
}

/// Dominant eigenvectors of the covariance `A^H A` of stacked rows `A`.
///
/// Uses a deterministic randomized subspace sketch with two power
/// iterations and a Rayleigh-Ritz step, which is exact for low-rank inputs
/// and accurate for the strongly dominated spectra that interference
/// covariances exhibit. Returns an orthonormal `n x r` basis with
/// `r <= max_vectors`, dropping directions whose Ritz values fall below
/// `1e-12` of the largest.
pub fn dominant_eigenvectors(rows: &CMat, max_vectors: usize) -> CMat {
    let n = rows.ncols();
    if max_vectors == 0 || rows.nrows() == 0 {
        return CMat::zeros(n, 0);
    }
    let l = (max_vectors + 4).min(n).min(rows.nrows().max(1));
    let omega = fixed_gaussian_matrix(n, l);
    let mut y = rows.adjoint() * (rows * &omega);
    for _ in 0..2 {
        y = orthonormalize(y);
        y = rows.adjoint() * (rows * &y);
    }
    let q = orthonormalize(y);
    if q.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let b = rows * &q;
    let small = b.adjoint() * &b; // q^H (A^H A) q
    let eig = small.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let mut cols: Vec<CVec> = Vec::new();
    for &idx in order.iter().take(max_vectors) {
        if eig.eigenvalues[idx] > 1e-12 * lambda_max && eig.eigenvalues[idx] > 0.0 {
            cols.push(&q * eig.eigenvectors.column(idx).into_owned());
        }
    }
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Frobenius norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_rows(k: usize, n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(k, n, |_, _| {
            Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        })
    }

    #[test]
    fn zf_inverts_well_conditioned_rows() {
        let h = random_rows(4, 16, 1);
        let (w, loaded) = zf_directions(&h);
        assert!(!loaded);
        let prod = &h * &w;
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    assert_relative_eq!(prod[(i, j)].re, 1.0, epsilon = 1e-9);
                    assert!(prod[(i, j)].im.abs() < 1e-9);
                } else {
                    assert!(prod[(i, j)].norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zf_loads_rank_deficient_rows() {
        let mut h = random_rows(3, 16, 2);
        let dup = h.row(0).into_owned();
        h.set_row(2, &dup);
        let (w, loaded) = zf_directions(&h);
        assert!(loaded);
        assert!(w.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }

    #[test]
    fn projection_annihilates_basis() {
        let h = random_rows(6, 32, 3);
        let e = dominant_eigenvectors(&random_rows(5, 32, 4), 3);
        let hp = project_rows_out(&h, &e);
        let resid = fro_norm(&(&hp * &e));
        assert!(resid < 1e-10 * fro_norm(&hp).max(1e-30), "residual {resid}");
    }

    #[test]
    fn dominant_eigenvectors_recover_planted_directions() {
        // Two strong planted rows among weak noise.
        let n = 32;
        let mut rows = random_rows(8, n, 5);
        rows *= Complex64::new(0.01, 0.0);
        let strong = random_rows(2, n, 6);
        let rows = CMat::from_fn(10, n, |i, j| {
            if i < 8 {
                rows[(i, j)]
            } else {
                strong[(i - 8, j)] * Complex64::new(10.0, 0.0)
            }
        });
        let e = dominant_eigenvectors(&rows, 2);
        assert_eq!(e.ncols(), 2);
        // Orthonormal basis.
        let gram = e.adjoint() * &e;
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[(i, j)].re, expect, epsilon = 1e-9);
            }
        }
        // The planted rows lie in the recovered span.
        for r in 0..2 {
            let v = strong.row(r).adjoint();
            let proj = &e * (e.adjoint() * &v);
            let resid = (&v - proj).norm() / v.norm();
            assert!(resid < 1e-3, "row {r} residual {resid}");
        }
    }

    #[test]
    fn dominant_eigenvectors_rank_limited() {
        // Rank-1 input: asking for 4 vectors returns 1.
        let row = random_rows(1, 16, 7);
        let stacked = CMat::from_fn(3, 16, |_, j| row[(0, j)]);
        let e = dominant_eigenvectors(&stacked, 4);
        assert_eq!(e.ncols(), 1);
    }

    #[test]
    fn empty_victims_give_empty_basis() {
        let rows = CMat::zeros(0, 16);
        let e = dominant_eigenvectors(&rows, 8);
        assert_eq!(e.ncols(), 0);
        let h = random_rows(2, 16, 8);
        let hp = project_rows_out(&h, &e);
        assert_eq!(hp, h);
    }
}
