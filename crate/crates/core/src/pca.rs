//! Key-frame PCA baseline over the frames-as-rows unfolding.
//!
//! Frame `k` becomes row `k` of an `F x JK` data matrix (its column-major
//! `K x J` slice flattened). Rows are centred by their mean; the principal
//! components are the right singular vectors of the centred matrix, and the
//! eigenvalues of the unnormalised scatter matrix are the squared singular
//! values.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{Dims, Tensor3};

/// Retained principal components and per-frame coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    /// `JK x p'`, orthonormal columns.
    pub components: DMatrix<f64>,
    /// `F x p'`.
    pub coefficients: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Eigenvalues of the retained components, non-increasing.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn kept(&self) -> usize {
        self.components.ncols()
    }
}

/// Full decomposition of an animation, truncated on demand.
#[derive(Clone, Debug)]
pub struct PcaDecomposition {
    dims: Dims,
    mean: DVector<f64>,
    /// `JK x r` right singular vectors, `r = min(F, JK)`.
    components: DMatrix<f64>,
    /// `F x r` projections of the centred rows.
    scores: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

fn data_matrix(x: &Tensor3) -> DMatrix<f64> {
    let [k, j, f] = x.dims();
    DMatrix::from_fn(f, k * j, |r, c| x.frame(r)[c])
}

impl PcaDecomposition {
    pub fn new(x: &Tensor3) -> Result<Self> {
        let dims = x.dims();
        let mut data = data_matrix(x);
        let mean = DVector::from_fn(data.ncols(), |c, _| data.column(c).mean());
        for (c, mut col) in data.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mean[c]);
        }
        let (v, sv) = linalg::right_singular(&data)?;
        let scores = &data * &v;
        Ok(Self {
            dims,
            mean,
            components: v,
            eigenvalues: sv.iter().map(|s| s * s).collect(),
            scores,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Largest admissible `p'`, `min(F, JK)`.
    pub fn max_components(&self) -> usize {
        self.components.ncols()
    }

    /// All eigenvalues of the scatter matrix, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn model(&self, p_prime: usize) -> Result<PcaModel> {
        let max = self.max_components();
        if p_prime < 1 || p_prime > max {
            return Err(Error::invalid(format!(
                "component count {p_prime} out of range 1..={max}"
            )));
        }
        Ok(PcaModel {
            components: self.components.columns(0, p_prime).into_owned(),
            coefficients: self.scores.columns(0, p_prime).into_owned(),
            mean: self.mean.clone(),
            eigenvalues: self.eigenvalues[..p_prime].to_vec(),
        })
    }
}

/// Fits a `p'`-component PCA model to the (normalised) animation `x`.
pub fn pca_compress(x: &Tensor3, p_prime: usize) -> Result<PcaModel> {
    PcaDecomposition::new(x)?.model(p_prime)
}

/// Mean plus coefficients times components, refolded to `K x J x F`.
pub fn pca_reconstruct(m: &PcaModel, dims: Dims) -> Result<Tensor3> {
    let [k, j, f] = dims;
    let p = m.kept();
    if m.components.nrows() != k * j || m.mean.len() != k * j || m.coefficients.shape() != (f, p) {
        return Err(Error::DimensionMismatch {
            context: "pca model",
            expected: vec![k * j, f, p],
            actual: vec![
                m.components.nrows(),
                m.coefficients.nrows(),
                m.coefficients.ncols(),
            ],
        });
    }
    let rows = &m.coefficients * m.components.transpose();
    let mut data = Vec::with_capacity(k * j * f);
    for r in 0..f {
        data.extend(rows.row(r).iter().zip(m.mean.iter()).map(|(a, b)| a + b));
    }
    Tensor3::from_vec(dims, data)
}

/// `((K*J + F) * p') / (K*F*J)`; the mean vector is not counted.
pub fn pca_compression_ratio(p_prime: usize, k: usize, frames: usize, j: usize) -> Result<f64> {
    if p_prime == 0 || k == 0 || frames == 0 || j == 0 {
        return Err(Error::invalid("pca counts must be at least 1"));
    }
    Ok(((k * j + frames) * p_prime) as f64 / (k * frames * j) as f64)
}

/// Ratio of the stored mean vector, `J*K / (K*F*J)`.
pub fn pca_mean_overhead(frames: usize) -> f64 {
    1.0 / frames as f64
}
