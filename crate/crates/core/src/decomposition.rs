//! Higher-order SVD (Tucker decomposition), truncation and reconstruction.
//!
//! [`hosvd`] takes the left singular vectors of each unfolding as the factor
//! matrices and projects the tensor onto them to obtain the core. Singular
//! values are sorted in descending order, so the energy of the core
//! concentrates at low indices and truncation keeps the leading block.
//!
//! When a mode is longer than the product of the other two dimensions its
//! unfolding has fewer singular vectors than rows. [`hosvd`] completes such
//! factors to square orthogonal matrices (the matching core slices are zero);
//! [`hosvd_economy`] keeps only the singular vectors and completes lazily in
//! [`TuckerOperator::truncate`] if a rank beyond them is requested.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{Dims, Mode, Tensor3};

#[derive(Clone, Debug)]
pub struct TuckerOperator {
    core: Tensor3,
    factors: [DMatrix<f64>; 3],
    singular_values: [Vec<f64>; 3],
}

fn factorize(t: &Tensor3, complete: bool) -> Result<TuckerOperator> {
    let per_mode: Vec<(DMatrix<f64>, Vec<f64>)> = Mode::ALL
        .par_iter()
        .map(|&mode| {
            let unfolded = t.unfold(mode);
            let (u, s) = linalg::left_singular(&unfolded.matrix)?;
            let u = if complete {
                linalg::complete_basis(&u, t.dim(mode))
            } else {
                u
            };
            Ok((u, s))
        })
        .collect::<Result<_>>()?;
    let mut it = per_mode.into_iter();
    let (u1, s1) = it.next().unwrap();
    let (u2, s2) = it.next().unwrap();
    let (u3, s3) = it.next().unwrap();

    let core = project(t, [&u1, &u2, &u3])?;
    Ok(TuckerOperator {
        core,
        factors: [u1, u2, u3],
        singular_values: [s1, s2, s3],
    })
}

/// `t x_1 U1^T x_2 U2^T x_3 U3^T`, applying the most shrinking mode first.
fn project(t: &Tensor3, factors: [&DMatrix<f64>; 3]) -> Result<Tensor3> {
    let mut order = Mode::ALL;
    order.sort_by(|a, b| {
        let ra = factors[a.index()].ncols() as f64 / t.dim(*a) as f64;
        let rb = factors[b.index()].ncols() as f64 / t.dim(*b) as f64;
        ra.total_cmp(&rb)
    });
    let mut out = t.mode_multiply(&factors[order[0].index()].transpose(), order[0])?;
    for &mode in &order[1..] {
        out = out.mode_multiply(&factors[mode.index()].transpose(), mode)?;
    }
    Ok(out)
}

fn expand(core: &Tensor3, factors: [&DMatrix<f64>; 3]) -> Result<Tensor3> {
    let mut out = core.mode_multiply(factors[2], Mode::Three)?;
    out = out.mode_multiply(factors[1], Mode::Two)?;
    out.mode_multiply(factors[0], Mode::One)
}

/// Full HO-SVD: square orthogonal factors and an `I1 x I2 x I3` core.
pub fn hosvd(t: &Tensor3) -> Result<TuckerOperator> {
    factorize(t, true)
}

/// HO-SVD keeping only the singular vectors of each unfolding, i.e. factors of
/// shape `I_k x min(I_k, prod of other dims)`. Represents the same
/// decomposition as [`hosvd`] with the identically-zero core slices dropped.
pub fn hosvd_economy(t: &Tensor3) -> Result<TuckerOperator> {
    factorize(t, false)
}

impl TuckerOperator {
    pub fn core(&self) -> &Tensor3 {
        &self.core
    }

    pub fn factor(&self, mode: Mode) -> &DMatrix<f64> {
        &self.factors[mode.index()]
    }

    /// Singular values of the mode unfolding of the decomposed tensor.
    pub fn singular_values(&self, mode: Mode) -> &[f64] {
        &self.singular_values[mode.index()]
    }

    /// Dimensions of the decomposed tensor.
    pub fn dims(&self) -> Dims {
        [
            self.factors[0].nrows(),
            self.factors[1].nrows(),
            self.factors[2].nrows(),
        ]
    }

    /// True when every factor is square.
    pub fn is_complete(&self) -> bool {
        self.factors.iter().all(|u| u.is_square())
    }

    /// Reconstruction `C x_1 U1 x_2 U2 x_3 U3`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        expand(
            &self.core,
            [&self.factors[0], &self.factors[1], &self.factors[2]],
        )
    }

    /// Keeps the leading `ranks[k]` components in each mode.
    pub fn truncate(&self, ranks: [usize; 3]) -> Result<TruncatedTucker> {
        let dims = self.dims();
        for mode in Mode::ALL {
            let (r, n) = (ranks[mode.index()], dims[mode.index()]);
            if r == 0 || r > n {
                return Err(Error::RankOutOfRange {
                    mode: mode.number(),
                    rank: r,
                    max: n,
                });
            }
        }
        let factors: [DMatrix<f64>; 3] = std::array::from_fn(|k| {
            let u = &self.factors[k];
            if ranks[k] <= u.ncols() {
                u.columns(0, ranks[k]).clone_owned()
            } else {
                linalg::complete_basis(u, ranks[k])
            }
        });
        let have = self.core.dims();
        let core = Tensor3::from_fn(ranks, |i, j, k| {
            if i < have[0] && j < have[1] && k < have[2] {
                self.core.get(i, j, k)
            } else {
                0.0
            }
        })?;
        Ok(TruncatedTucker {
            core,
            factors,
            ranks,
            original_dims: dims,
        })
    }

    /// Largest normalised scalar product between distinct core slices of a
    /// mode. Zero for an all-orthogonal core.
    ///
    /// The guard term added to each denominator is `1e-6 * ||C||^2`: a dot
    /// product carries round-off of order `1e-16 * ||C||^2`, so slices that
    /// are zero up to round-off do not register as correlated.
    pub fn core_orthogonality_defect(&self, mode: Mode) -> f64 {
        let total = self.core.frobenius_norm();
        if total == 0.0 {
            return 0.0;
        }
        let eps = (1e-6 * total * total).max(f64::MIN_POSITIVE);
        let unfolded = self.core.unfold(mode).matrix;
        let gram = &unfolded * unfolded.transpose();
        let n = gram.nrows();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let denom = gram[(a, a)].sqrt() * gram[(b, b)].sqrt() + eps;
                worst = worst.max(gram[(a, b)].abs() / denom);
            }
        }
        worst
    }

    /// Norms of the core slices along a mode, index 0 first.
    pub fn core_slice_norms(&self, mode: Mode) -> Vec<f64> {
        slice_norms(&self.core, mode)
    }
}

fn slice_norms(t: &Tensor3, mode: Mode) -> Vec<f64> {
    let unfolded = t.unfold(mode).matrix;
    unfolded.row_iter().map(|r| r.norm()).collect()
}

/// A Tucker operator restricted to ranks `(R1, R2, R3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTucker {
    core: Tensor3,
    factors: [DMatrix<f64>; 3],
    ranks: [usize; 3],
    original_dims: Dims,
}

impl TruncatedTucker {
    /// Assembles a truncated operator, checking that the core is
    /// `R1 x R2 x R3` and each factor is `I_k x R_k` with `R_k <= I_k`.
    pub fn new(core: Tensor3, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        let ranks = core.dims();
        for (k, u) in factors.iter().enumerate() {
            if u.ncols() != ranks[k] || u.nrows() < ranks[k] {
                return Err(Error::DimensionMismatch {
                    context: "truncated factor",
                    expected: vec![u.nrows().max(ranks[k]), ranks[k]],
                    actual: vec![u.nrows(), u.ncols()],
                });
            }
        }
        let original_dims = [factors[0].nrows(), factors[1].nrows(), factors[2].nrows()];
        Ok(Self {
            core,
            factors,
            ranks,
            original_dims,
        })
    }

    pub fn core(&self) -> &Tensor3 {
        &self.core
    }

    pub fn factor(&self, mode: Mode) -> &DMatrix<f64> {
        &self.factors[mode.index()]
    }

    pub fn ranks(&self) -> [usize; 3] {
        self.ranks
    }

    pub fn original_dims(&self) -> Dims {
        self.original_dims
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        expand(
            &self.core,
            [&self.factors[0], &self.factors[1], &self.factors[2]],
        )
    }

    pub fn into_parts(self) -> (Tensor3, [DMatrix<f64>; 3]) {
        (self.core, self.factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_tensor(dims: Dims, seed: u64) -> Tensor3 {
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        Tensor3::from_fn(dims, |_, _, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .unwrap()
    }

    fn orthogonality(u: &DMatrix<f64>) -> f64 {
        (u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).norm()
    }

    #[test]
    fn zero_tensor_gives_zero_core() {
        let t = Tensor3::zeros([4, 3, 2]).unwrap();
        let op = hosvd(&t).unwrap();
        assert_eq!(op.core().frobenius_norm(), 0.0);
        assert_eq!(op.reconstruct().unwrap(), t);
        for mode in Mode::ALL {
            assert!(orthogonality(op.factor(mode)) < 1e-12);
            assert_eq!(op.core_orthogonality_defect(mode), 0.0);
            assert!(op.core_slice_norms(mode).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn rank_one_tensor_has_single_core_entry() {
        let a = [0.6, 0.8, 0.0, 0.0];
        let b = [1.0, 2.0, 2.0];
        let c = [3.0, 0.0, 4.0, 0.0, 0.0];
        let t = Tensor3::from_fn([4, 3, 5], |i, j, k| a[i] * b[j] * c[k]).unwrap();
        let op = hosvd(&t).unwrap();
        let expected = 1.0 * 3.0 * 5.0;
        assert!((op.core().get(0, 0, 0).abs() - expected).abs() < 1e-9);
        let rest: f64 = op
            .core()
            .data()
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != 0)
            .map(|(_, x)| x.abs())
            .fold(0.0, f64::max);
        assert!(rest <= 1e-9);
        let norms = op.core_slice_norms(Mode::Three);
        assert!((norms[0] - expected).abs() < 1e-9);
        assert!(norms[1..].iter().all(|&x| x < 1e-9));

        let tt = op.truncate([1, 1, 1]).unwrap();
        let err = t.relative_error(&tt.reconstruct().unwrap()).unwrap();
        assert!(err <= 1e-9);
    }

    #[test]
    fn full_rank_reconstruction() {
        let t = lcg_tensor([5, 3, 7], 1);
        let op = hosvd(&t).unwrap();
        assert!(op.is_complete());
        for mode in Mode::ALL {
            assert!(orthogonality(op.factor(mode)) <= 1e-8 * (t.dim(mode) as f64).sqrt());
        }
        assert!(
            (op.core().frobenius_norm() - t.frobenius_norm()).abs() <= 1e-8 * t.frobenius_norm()
        );
        assert!(t.relative_error(&op.reconstruct().unwrap()).unwrap() <= 1e-9);
        let tt = op.truncate(t.dims()).unwrap();
        assert!(t.relative_error(&tt.reconstruct().unwrap()).unwrap() <= 1e-9);
    }

    #[test]
    fn core_is_all_orthogonal_with_descending_slices() {
        // Mode-1 longer than the other two dims combined exercises completion.
        let t = lcg_tensor([20, 3, 4], 2);
        let op = hosvd(&t).unwrap();
        for mode in Mode::ALL {
            assert!(op.core_orthogonality_defect(mode) <= 1e-8, "{mode}");
            let norms = op.core_slice_norms(mode);
            assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-10));
            for (n, s) in norms.iter().zip(op.singular_values(mode)) {
                assert!((n - s).abs() <= 1e-8 * op.singular_values(mode)[0]);
            }
        }
    }

    #[test]
    fn correlated_slices_have_large_defect() {
        let base = lcg_tensor([3, 3, 1], 3);
        let core = Tensor3::from_fn([3, 3, 2], |i, j, _| base.get(i, j, 0)).unwrap();
        let eye = |n| DMatrix::<f64>::identity(n, n);
        let op = TuckerOperator {
            core,
            factors: [eye(3), eye(3), eye(2)],
            singular_values: [vec![], vec![], vec![]],
        };
        assert!(op.core_orthogonality_defect(Mode::Three) > 0.99);
    }

    #[test]
    fn truncation_pythagoras() {
        let t = lcg_tensor([9, 3, 6], 4);
        let op = hosvd(&t).unwrap();
        for ranks in [[1, 3, 1], [4, 2, 3], [9, 3, 2], [3, 1, 6]] {
            let tt = op.truncate(ranks).unwrap();
            let rec = tt.reconstruct().unwrap();
            let err2 = t.difference(&rec).unwrap().frobenius_norm().powi(2);
            let expected = t.frobenius_norm().powi(2) - tt.core().frobenius_norm().powi(2);
            assert!((err2 - expected).abs() <= 1e-8 * t.frobenius_norm().powi(2));
        }
    }

    #[test]
    fn economy_matches_full_decomposition() {
        let t = lcg_tensor([30, 3, 4], 5);
        let full = hosvd(&t).unwrap();
        let eco = hosvd_economy(&t).unwrap();
        assert_eq!(eco.factor(Mode::One).ncols(), 12);
        for ranks in [[2, 3, 2], [12, 3, 4], [20, 3, 3], [30, 3, 4]] {
            let a = full.truncate(ranks).unwrap().reconstruct().unwrap();
            let b = eco.truncate(ranks).unwrap().reconstruct().unwrap();
            assert!(a.relative_error(&b).unwrap() < 1e-10);
        }
        let wide = eco.truncate([25, 3, 4]).unwrap();
        assert!(orthogonality(wide.factor(Mode::One)) < 1e-12);
    }

    #[test]
    fn truncate_rejects_bad_ranks() {
        let op = hosvd(&lcg_tensor([4, 3, 2], 6)).unwrap();
        assert!(matches!(
            op.truncate([0, 3, 2]),
            Err(Error::RankOutOfRange { mode: 1, .. })
        ));
        assert!(matches!(
            op.truncate([4, 3, 3]),
            Err(Error::RankOutOfRange { mode: 3, .. })
        ));
    }

    #[test]
    fn zero_core_reconstructs_zero() {
        let factors = [
            DMatrix::identity(4, 2),
            DMatrix::identity(3, 3),
            DMatrix::identity(5, 1),
        ];
        let tt = TruncatedTucker::new(Tensor3::zeros([2, 3, 1]).unwrap(), factors).unwrap();
        assert_eq!(
            tt.reconstruct().unwrap(),
            Tensor3::zeros([4, 3, 5]).unwrap()
        );
        assert!(TruncatedTucker::new(
            Tensor3::zeros([2, 3, 2]).unwrap(),
            [
                DMatrix::identity(4, 2),
                DMatrix::identity(3, 3),
                DMatrix::identity(5, 1)
            ]
        )
        .is_err());
    }

    #[test]
    fn error_is_monotone_in_each_rank() {
        let t = lcg_tensor([10, 3, 8], 7);
        let op = hosvd(&t).unwrap();
        let err = |v, f| {
            let rec = op.truncate([v, 3, f]).unwrap().reconstruct().unwrap();
            t.difference(&rec).unwrap().frobenius_norm()
        };
        for v in 1..10 {
            for f in 1..=8 {
                assert!(err(v + 1, f) <= err(v, f) + 1e-10);
            }
        }
        for v in 1..=10 {
            for f in 1..8 {
                assert!(err(v, f + 1) <= err(v, f) + 1e-10);
            }
        }
    }
}
