//! Group inverse of `A = I - P` and the rank-one updating operator.
//!
//! For an irreducible chain with stationary vector `π`,
//! `A# = (A + e πᵀ)⁻¹ − e πᵀ`. When row `i` of `P` changes by `−δᵀ`, the
//! new stationary vector and group inverse follow from the old ones in
//! `O(n²)` without refactoring anything.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{KrcError, Result};
use crate::spectral::{ScoreVector, TransitionMatrix};

/// Denominators of the update below this magnitude are rejected.
pub const UPDATE_DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupInverse {
    matrix: DMatrix<f64>,
}

/// Residuals of the defining identities, all Frobenius or 2-norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomResiduals {
    /// `‖A A# A − A‖`
    pub aga: f64,
    /// `‖A# A A# − A#‖`
    pub gag: f64,
    /// `‖A A# − A# A‖`
    pub commute: f64,
    /// `‖A# e‖`
    pub row_sums: f64,
    /// `‖πᵀ A#‖`
    pub left_null: f64,
}

impl AxiomResiduals {
    pub fn max(&self) -> f64 {
        [self.aga, self.gag, self.commute, self.row_sums, self.left_null]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

impl GroupInverse {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Column `i` of `A#`.
    pub fn column(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).into_owned()
    }

    /// Checks the group-inverse identities against `A = I − P`.
    pub fn axiom_residuals(&self, p: &TransitionMatrix, pi: &ScoreVector) -> AxiomResiduals {
        let a = p.laplacian();
        let g = &self.matrix;
        let n = a.nrows();
        let aga = (&a * g * &a - &a).norm();
        let gag = (g * &a * g - g).norm();
        let commute = (&a * g - g * &a).norm();
        let e = DVector::from_element(n, 1.0);
        let row_sums = (g * &e).norm();
        let pi = DVector::from_column_slice(pi.scores());
        let left_null = g.tr_mul(&pi).norm();
        AxiomResiduals {
            aga,
            gag,
            commute,
            row_sums,
            left_null,
        }
    }
}

/// `A# = (A + e πᵀ)⁻¹ − e πᵀ` for `A = I − P`.
pub fn group_inverse(p: &TransitionMatrix, pi: &ScoreVector) -> Result<GroupInverse> {
    let n = p.n();
    if pi.len() != n {
        return Err(KrcError::DimensionMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    let e_pi = DMatrix::from_fn(n, n, |_, c| pi.get(c));
    let shifted = p.laplacian() + &e_pi;
    let inv = shifted
        .try_inverse()
        .ok_or(KrcError::SingularGroupInverse)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(KrcError::SingularGroupInverse);
    }
    Ok(GroupInverse { matrix: inv - e_pi })
}

/// Rank-one update after row `i` of `P` becomes `P_i· − δᵀ`.
///
/// With `φᵀ = π_i / (1 + δᵀ A#_{·i}) · δᵀ A#`, the new stationary vector is
/// `π − φ` and the new group inverse is
/// `A# + e φᵀ (A# − (φᵀ A#_{·i} / π_i) I) − A#_{·i} φᵀ / π_i`.
pub fn rank_one_update(
    pi: &ScoreVector,
    ainv: &GroupInverse,
    delta: &[f64],
    i: usize,
) -> Result<(ScoreVector, GroupInverse)> {
    let n = ainv.n();
    if delta.len() != n || pi.len() != n {
        return Err(KrcError::DimensionMismatch {
            expected: n,
            got: delta.len().min(pi.len()),
        });
    }
    if i >= n {
        return Err(KrcError::UnknownItem { item: i, n });
    }
    let scale = delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let sum: f64 = delta.iter().sum();
    if sum.abs() > 1e-12 * scale.max(1.0) {
        return Err(KrcError::UnbalancedPerturbation(sum));
    }
    if scale == 0.0 {
        return Ok((pi.clone(), ainv.clone()));
    }

    let g = &ainv.matrix;
    let delta = DVector::from_column_slice(delta);
    // δᵀ A#, as a column vector
    let d_g = g.tr_mul(&delta);
    let denom = 1.0 + d_g[i];
    if !(denom.abs() >= UPDATE_DENOMINATOR_TOL) {
        return Err(KrcError::SingularUpdate(denom));
    }
    let pi_i = pi.get(i);
    let phi = d_g * (pi_i / denom);

    let new_pi: Vec<f64> = pi
        .scores()
        .iter()
        .zip(phi.iter())
        .map(|(p, f)| p - f)
        .collect();

    let g_col = g.column(i).into_owned();
    let phi_g_col = phi.dot(&g_col);
    // φᵀ A# − (φᵀ A#_{·i} / π_i) φᵀ
    let mut row = g.tr_mul(&phi);
    row.axpy(-phi_g_col / pi_i, &phi, 1.0);

    let mut updated = g.clone();
    for c in 0..n {
        let rc = row[c];
        let pc = phi[c] / pi_i;
        let mut col = updated.column_mut(c);
        for r in 0..n {
            col[r] += rc - g_col[r] * pc;
        }
    }

    let mut next = ScoreVector::from_raw(new_pi);
    if let Some(t) = pi.t() {
        next = next.at(t);
    }
    Ok((next, GroupInverse { matrix: updated }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{stationary, SolverConfig};
    use nalgebra::dmatrix;

    fn tight() -> SolverConfig {
        SolverConfig {
            tol: 1e-15,
            max_iter: 100_000,
        }
    }

    #[test]
    fn flip_chain() {
        let p = TransitionMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let pi = ScoreVector::from_weights(vec![1.0, 1.0]).unwrap();
        let g = group_inverse(&p, &pi).unwrap();
        let expected = dmatrix![0.25, -0.25; -0.25, 0.25];
        assert!((g.matrix() - expected).amax() < 1e-15);
        assert!(g.axiom_residuals(&p, &pi).max() < 1e-14);
    }

    #[test]
    fn rank_one_chain_is_idempotent() {
        let pi = [0.5, 0.2, 0.3];
        let m = DMatrix::from_fn(3, 3, |_, c| pi[c]);
        let p = TransitionMatrix::new(m.clone()).unwrap();
        let s = ScoreVector::from_weights(pi.to_vec()).unwrap();
        let g = group_inverse(&p, &s).unwrap();
        let expected = DMatrix::identity(3, 3) - m;
        assert!((g.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn inconsistent_pi_is_singular_or_wrong() {
        // A + e πᵀ is singular when π sums to zero.
        let p = TransitionMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let pi = ScoreVector::from_raw(vec![0.5, -0.5]);
        assert!(matches!(group_inverse(&p, &pi), Err(KrcError::SingularGroupInverse)));
    }

    #[test]
    fn zero_delta_is_identity() {
        let p = TransitionMatrix::new(dmatrix![0.9, 0.1; 0.2, 0.8]).unwrap();
        let pi = stationary(&p, &tight()).unwrap();
        let g = group_inverse(&p, &pi).unwrap();
        let (pi2, g2) = rank_one_update(&pi, &g, &[0.0, 0.0], 0).unwrap();
        assert_eq!(pi2, pi);
        assert_eq!(g2, g);
    }

    #[test]
    fn two_state_update_matches_rebuild() {
        let p = TransitionMatrix::new(dmatrix![0.9, 0.1; 0.2, 0.8]).unwrap();
        let pi = stationary(&p, &tight()).unwrap();
        let g = group_inverse(&p, &pi).unwrap();
        // row 0 -> [0.8, 0.2], so δ = old − new = [0.1, −0.1]
        let (pi2, g2) = rank_one_update(&pi, &g, &[0.1, -0.1], 0).unwrap();
        assert!((pi2.get(0) - 0.5).abs() < 1e-12);
        assert!((pi2.get(1) - 0.5).abs() < 1e-12);
        let p2 = TransitionMatrix::new(dmatrix![0.8, 0.2; 0.2, 0.8]).unwrap();
        let batch = group_inverse(&p2, &pi2).unwrap();
        assert!((g2.matrix() - batch.matrix()).amax() < 1e-12);
        assert!(g2.axiom_residuals(&p2, &pi2).max() < 1e-12);
    }

    #[test]
    fn unbalanced_delta_rejected() {
        let p = TransitionMatrix::new(dmatrix![0.9, 0.1; 0.2, 0.8]).unwrap();
        let pi = stationary(&p, &tight()).unwrap();
        let g = group_inverse(&p, &pi).unwrap();
        assert!(matches!(
            rank_one_update(&pi, &g, &[0.1, 0.0], 0),
            Err(KrcError::UnbalancedPerturbation(_))
        ));
    }

    #[test]
    fn singular_denominator_rejected() {
        // For a valid row the denominator is π_i / π_new,i ≥ π_i; this δ
        // pushes row 0 out of [0, 1] and zeroes it.
        let p = TransitionMatrix::new(dmatrix![0.5, 0.5; 0.5, 0.5]).unwrap();
        let pi = stationary(&p, &tight()).unwrap();
        let g = group_inverse(&p, &pi).unwrap();
        let err = rank_one_update(&pi, &g, &[-1.0, 1.0], 0);
        assert!(matches!(err, Err(KrcError::SingularUpdate(_))), "{err:?}");
    }
}
