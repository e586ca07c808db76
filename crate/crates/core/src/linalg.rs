//! Dense kernels on the margin set: Gram factorization, pseudoinverse
//! solves, orthogonal-projector products and numerical rank.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative singular-value cutoff used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Relative size below which a projected residual is treated as zero.
const PROJECTION_SNAP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("margin Gram matrix is numerically singular ({size} columns, rank {rank})")]
    SingularGram { size: usize, rank: usize },
}

/// Thin QR factorization `X_M = Q R` of the margin columns. The Gram matrix
/// `X_M^T X_M` equals `R^T R`.
#[derive(Debug, Clone)]
pub struct MarginFactorization {
    margin_indices: Vec<usize>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    condition_estimate: f64,
}

impl MarginFactorization {
    pub fn margin_indices(&self) -> &[usize] {
        &self.margin_indices
    }

    pub fn size(&self) -> usize {
        self.r.nrows()
    }

    /// Estimated 2-norm condition number of the Gram matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `R^T R`, i.e. the Gram matrix reconstructed from the factor.
    pub fn gram(&self) -> DMatrix<f64> {
        self.r.tr_mul(&self.r)
    }

    /// `X_M^* s = (X_M^T X_M)^{-1} X_M^T s`, computed as `R^{-1} Q^T s`.
    pub fn pinv_apply(&self, s: &DVector<f64>) -> DVector<f64> {
        let qts = self.q.tr_mul(s);
        self.r
            .solve_upper_triangular(&qts)
            .expect("R is nonsingular after factorization")
    }

    /// `P_M^⊥ s = s - Q Q^T s`. Exactly zero when the margin columns span
    /// the whole space, and snapped to zero when only rounding is left.
    pub fn project_out(&self, s: &DVector<f64>) -> DVector<f64> {
        if self.q.ncols() == self.q.nrows() {
            return DVector::zeros(s.len());
        }
        let qts = self.q.tr_mul(s);
        let r = s - &self.q * qts;
        if r.norm() <= PROJECTION_SNAP * s.norm() {
            DVector::zeros(s.len())
        } else {
            r
        }
    }
}

/// Factorizes the margin columns with the default rank tolerance.
pub fn gram_factorize(x_m: &DMatrix<f64>) -> Result<MarginFactorization, LinalgError> {
    gram_factorize_with(x_m, (0..x_m.ncols()).collect(), DEFAULT_RANK_TOL)
}

/// Factorizes `x_m` whose columns are the samples `margin_indices`.
///
/// Fails with `SingularGram` when `X_M` does not have numerically full
/// column rank (more margin points than dimensions, replicated points, ...).
pub fn gram_factorize_with(
    x_m: &DMatrix<f64>,
    margin_indices: Vec<usize>,
    tol_rel: f64,
) -> Result<MarginFactorization, LinalgError> {
    let (d, m) = x_m.shape();
    assert!(m >= 1, "margin set must be nonempty");
    assert_eq!(margin_indices.len(), m);
    if m > d {
        return Err(LinalgError::SingularGram { size: m, rank: d });
    }
    let qr = x_m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let sv = r.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin <= tol_rel * smax {
        let rank = sv.iter().filter(|&&s| s > tol_rel * smax).count();
        return Err(LinalgError::SingularGram { size: m, rank });
    }
    let ratio = smax / smin;
    Ok(MarginFactorization {
        margin_indices,
        q,
        r,
        condition_estimate: ratio * ratio,
    })
}

/// `(X_M^T X_M)^{-1} v` via two triangular solves.
pub fn gram_solve(f: &MarginFactorization, v: &DVector<f64>) -> DVector<f64> {
    assert_eq!(v.len(), f.size());
    let y = f
        .r
        .tr_solve_upper_triangular(v)
        .expect("R is nonsingular after factorization");
    f.r
        .solve_upper_triangular(&y)
        .expect("R is nonsingular after factorization")
}

/// `x^T P_M^⊥ s = x^T s - (X_M^T x)^T (X_M^T X_M)^{-1} X_M^T s`.
///
/// With no factorization (empty margin set) the projector is the identity.
pub fn project_residual_dot(
    x: &DVector<f64>,
    f: Option<&MarginFactorization>,
    x_m: &DMatrix<f64>,
    s: &DVector<f64>,
) -> f64 {
    let direct = x.dot(s);
    match f {
        None => direct,
        Some(f) => {
            let xm_x = x_m.tr_mul(x);
            let xm_s = x_m.tr_mul(s);
            direct - xm_x.dot(&gram_solve(f, &xm_s))
        }
    }
}

/// Numerical rank: number of singular values above `tol_rel * sigma_max`.
pub fn rank_of(a: &DMatrix<f64>, tol_rel: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    if !(smax > 0.0) {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rel * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Inverse of a 3x3 matrix via the adjugate.
    fn adjugate_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
        let c = |r: usize, k: usize| {
            let rows: Vec<usize> = (0..3).filter(|&x| x != r).collect();
            let cols: Vec<usize> = (0..3).filter(|&x| x != k).collect();
            let m = a[(rows[0], cols[0])] * a[(rows[1], cols[1])]
                - a[(rows[0], cols[1])] * a[(rows[1], cols[0])];
            if (r + k).is_multiple_of(2) {
                m
            } else {
                -m
            }
        };
        let det: f64 = (0..3).map(|k| a[(0, k)] * c(0, k)).sum();
        DMatrix::from_fn(3, 3, |r, k| c(k, r) / det)
    }

    fn mat(d: usize, m: usize, vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(d, m, vals)
    }

    #[test]
    fn one_by_one_gram() {
        let f = gram_factorize(&mat(2, 1, &[0.0, 2.0])).unwrap();
        assert!((f.gram()[(0, 0)] - 4.0).abs() < 1e-14);
        let z = gram_solve(&f, &DVector::from_vec(vec![1.0]));
        assert!((z[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_columns_solve_identity() {
        let f = gram_factorize(&mat(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.7]);
        let z = gram_solve(&f, &v);
        assert!((z - v).amax() < 1e-14);
        assert!((f.condition_estimate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_columns_are_singular() {
        let err = gram_factorize(&mat(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0])).unwrap_err();
        assert_eq!(err, LinalgError::SingularGram { size: 2, rank: 1 });
    }

    #[test]
    fn too_many_margin_points() {
        let err = gram_factorize(&mat(1, 2, &[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, LinalgError::SingularGram { size: 2, .. }));
    }

    #[test]
    fn solve_matches_adjugate_inverse() {
        let x = mat(
            4,
            3,
            &[
                1.0, 0.2, -0.3, 0.5, //
                0.1, 1.5, 0.4, -0.2, //
                -0.7, 0.3, 0.9, 1.1,
            ],
        );
        let gram = x.tr_mul(&x);
        let f = gram_factorize(&x).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let expected = adjugate_inverse(&gram) * &v;
        let z = gram_solve(&f, &v);
        assert!((z - expected).amax() < 1e-12);
        // reconstruction
        assert!((f.gram() - &gram).norm() <= 1e-10 * gram.norm());
    }

    #[test]
    fn empty_margin_projector_is_identity() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = DVector::from_vec(vec![-1.0, 0.5, 2.0]);
        let xm = DMatrix::zeros(3, 0);
        assert_eq!(project_residual_dot(&x, None, &xm, &s), x.dot(&s));
    }

    #[test]
    fn projector_annihilates_span() {
        let xm = mat(3, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let f = gram_factorize(&xm).unwrap();
        let s = &xm * DVector::from_vec(vec![0.7, -1.3]);
        let x = DVector::from_vec(vec![0.4, 1.0, -2.0]);
        let v = project_residual_dot(&x, Some(&f), &xm, &s);
        assert!(v.abs() <= 1e-12 * x.norm() * s.norm());
        assert!(f.project_out(&s).amax() < 1e-12);
    }

    #[test]
    fn projector_matches_dense_oracle() {
        let xm = mat(
            5,
            2,
            &[0.3, -1.2, 0.8, 0.05, 2.0, 1.1, 0.4, -0.6, 0.9, -0.2],
        );
        let x = DVector::from_vec(vec![0.5, 1.5, -0.3, 0.2, 1.0]);
        let s = DVector::from_vec(vec![-1.0, 0.1, 0.7, 2.2, -0.4]);
        let gram_inv = xm.tr_mul(&xm).try_inverse().unwrap();
        let proj = DMatrix::<f64>::identity(5, 5) - &xm * gram_inv * xm.transpose();
        let expected = x.dot(&(proj * &s));
        let f = gram_factorize(&xm).unwrap();
        let got = project_residual_dot(&x, Some(&f), &xm, &s);
        assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        assert!((x.dot(&f.project_out(&s)) - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn rank_examples() {
        let parallel = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.5, 1.0, 1.5]);
        assert_eq!(rank_of(&parallel, DEFAULT_RANK_TOL), 1);
        let sum = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0]);
        assert_eq!(rank_of(&sum, DEFAULT_RANK_TOL), 2);
        assert_eq!(rank_of(&DMatrix::identity(3, 3), DEFAULT_RANK_TOL), 3);
    }

    fn arb_matrix(d: usize, m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-2.0f64..2.0, d * m)
            .prop_map(move |v| DMatrix::from_column_slice(d, m, &v))
    }

    proptest! {
        #[test]
        fn gram_solve_inverts(x in arb_matrix(5, 3), v in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let f = match gram_factorize(&x) { Ok(f) => f, Err(_) => return Ok(()) };
            prop_assume!(f.condition_estimate() < 1e8);
            let v = DVector::from_vec(v);
            let z = gram_solve(&f, &v);
            let back = x.tr_mul(&x) * z;
            prop_assert!((back - &v).amax() <= 1e-9 * v.amax().max(1e-12));
        }

        #[test]
        fn projector_is_symmetric(x_m in arb_matrix(4, 2), a in arb_matrix(4, 1), b in arb_matrix(4, 1)) {
            let f = match gram_factorize(&x_m) { Ok(f) => f, Err(_) => return Ok(()) };
            prop_assume!(f.condition_estimate() < 1e8);
            let a = a.column(0).into_owned();
            let b = b.column(0).into_owned();
            let ab = project_residual_dot(&a, Some(&f), &x_m, &b);
            let ba = project_residual_dot(&b, Some(&f), &x_m, &a);
            prop_assert!((ab - ba).abs() <= 1e-9 * (a.norm() * b.norm()).max(1e-12));
        }

        #[test]
        fn rank_invariant_under_permutation_and_scaling(
            a in arb_matrix(4, 3),
            scales in proptest::collection::vec(0.1f64..10.0, 4),
            rot in 0usize..4,
        ) {
            let r0 = rank_of(&a, DEFAULT_RANK_TOL);
            let mut b = a.clone();
            for (i, s) in scales.iter().enumerate() {
                b.row_mut(i).scale_mut(*s);
            }
            let rows: Vec<usize> = (0..4).map(|i| (i + rot) % 4).collect();
            let b = b.select_rows(&rows);
            prop_assert_eq!(r0, rank_of(&b, DEFAULT_RANK_TOL));
        }
    }
}
