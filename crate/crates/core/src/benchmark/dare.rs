use nalgebra::DMatrix;

use crate::{Error, Result};

pub const DARE_TOL: f64 = 1e-10;
pub const DARE_MAX_ITER: usize = 10_000;

fn riccati_map(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let pb = p * b;
    let gain_lhs = r + b.tr_mul(&pb);
    let pa = p * a;
    let chol = gain_lhs.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let k = chol.solve(&pb.tr_mul(a));
    let next = q + a.tr_mul(&pa) - a.tr_mul(&pb) * k;
    Ok((&next + next.transpose()) * 0.5)
}

/// Solves `P = Q + AᵀPA - AᵀPB (R + BᵀPB)⁻¹ BᵀPA` by fixed-point iteration
/// of the Riccati map started at `P = Q`.
pub fn dare_terminal_cost(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::config("DARE dimension mismatch"));
    }
    let mut p = q.clone();
    for _ in 0..DARE_MAX_ITER {
        let next = riccati_map(a, b, q, r, &p)?;
        let diff = (&next - &p).amax();
        p = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= DARE_TOL {
            return Ok(p);
        }
    }
    Err(Error::RiccatiNoConvergence(DARE_MAX_ITER))
}

/// `‖Riccati(P) - P‖∞`.
pub fn dare_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    Ok((riccati_map(a, b, q, r, p)? - p).amax())
}
