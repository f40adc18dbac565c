//! Dense three-mode tensors.
//!
//! Every tensor in the crate stores its entries in a single `Vec<f64>` with the
//! mode-1 index varying fastest: entry `(i, j, k)` of an `I1 x I2 x I3` tensor
//! lives at `i + I1 * (j + I2 * k)`. For an animation tensor (`K x 3 x F`) this
//! makes every frame a contiguous column-major `K x 3` block.
//!
//! Unfoldings follow the Kolda–Bader convention: the column index of entry
//! `(i, j, k)` in the mode-`l` unfolding enumerates the remaining indices with
//! the lower-numbered mode varying fastest.
//!
//! | mode | row | column        |
//! |------|-----|---------------|
//! | 1    | `i` | `j + I2 * k`  |
//! | 2    | `j` | `i + I1 * k`  |
//! | 3    | `k` | `i + I1 * j`  |

use std::fmt;

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};

pub type Dims = [usize; 3];

/// One of the three tensor modes. Displayed 1-based, indexed 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Builds a mode from its 1-based number.
    pub fn new(number: usize) -> Result<Self> {
        match number {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(Error::InvalidMode(other)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(number: usize) -> Result<Self> {
        Mode::new(number)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode-{}", self.number())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    data: Vec<f64>,
}

fn check_dims(dims: Dims) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::invalid(format!(
            "tensor dimensions must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        })
    }

    /// Wraps `data` laid out mode-1 fastest. Rejects wrong lengths and
    /// non-finite entries.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                context: "tensor data length",
                expected: vec![len],
                actual: vec![data.len()],
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        check_dims(dims)?;
        let mut data = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::from_vec(dims, data)
    }

    /// Internal constructor for results of arithmetic on valid tensors.
    pub(crate) fn from_parts(dims: Dims, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self, mode: Mode) -> usize {
        self.dims[mode.index()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    /// Frontal slice `k` as a column-major `I1 x I2` block.
    pub fn frame(&self, k: usize) -> &[f64] {
        let n = self.dims[0] * self.dims[1];
        &self.data[n * k..n * (k + 1)]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dims[0] * self.dims[1])
    }

    /// Mode-`l` unfolding (see the module docs for the column order).
    pub fn unfold(&self, mode: Mode) -> UnfoldedMatrix {
        let [n1, n2, n3] = self.dims;
        let matrix = match mode {
            Mode::One => DMatrix::from_column_slice(n1, n2 * n3, &self.data),
            Mode::Two => {
                let mut m = DMatrix::zeros(n2, n1 * n3);
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            m[(j, i + n1 * k)] = self.data[i + n1 * (j + n2 * k)];
                        }
                    }
                }
                m
            }
            Mode::Three => DMatrixView::from_slice(&self.data, n1 * n2, n3).transpose(),
        };
        UnfoldedMatrix { mode, matrix }
    }

    /// Mode-`l` product `self x_l m` with `m` of shape `D x I_l`: the result
    /// has `I_l` replaced by `D` and satisfies `Y_(l) = m * T_(l)`.
    pub fn mode_multiply(&self, m: &DMatrix<f64>, mode: Mode) -> Result<Tensor3> {
        let [n1, n2, n3] = self.dims;
        let contracted = self.dims[mode.index()];
        if m.ncols() != contracted || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "mode product",
                expected: vec![m.nrows().max(1), contracted],
                actual: vec![m.nrows(), m.ncols()],
            });
        }
        let d = m.nrows();
        let (dims, data) = match mode {
            Mode::One => {
                let view = DMatrixView::from_slice(&self.data, n1, n2 * n3);
                let out = m * view;
                ([d, n2, n3], out.data.into())
            }
            Mode::Two => {
                let mt = m.transpose();
                let mut data = vec![0.0; n1 * d * n3];
                for (k, out) in data.chunks_exact_mut(n1 * d).enumerate() {
                    let slice = DMatrixView::from_slice(self.frame(k), n1, n2);
                    let prod = slice * &mt;
                    out.copy_from_slice(prod.as_slice());
                }
                ([n1, d, n3], data)
            }
            Mode::Three => {
                let view = DMatrixView::from_slice(&self.data, n1 * n2, n3);
                let out = view * m.transpose();
                ([n1, n2, d], out.data.into())
            }
        };
        Ok(Tensor3::from_parts(dims, data))
    }

    /// Sub-tensor with the mode-`l` index fixed to `alpha`; that mode keeps
    /// size 1.
    pub fn sub_tensor(&self, mode: Mode, alpha: usize) -> Result<Tensor3> {
        let size = self.dim(mode);
        if alpha >= size {
            return Err(Error::IndexOutOfRange {
                mode: mode.number(),
                index: alpha,
                size,
            });
        }
        let mut dims = self.dims;
        dims[mode.index()] = 1;
        match mode {
            Mode::One => Tensor3::from_fn(dims, |_, j, k| self.get(alpha, j, k)),
            Mode::Two => Tensor3::from_fn(dims, |i, _, k| self.get(i, alpha, k)),
            Mode::Three => Ok(Tensor3::from_parts(dims, self.frame(alpha).to_vec())),
        }
    }

    pub fn inner_product(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other, "inner product")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Entry-wise `self - other`.
    pub fn difference(&self, other: &Tensor3) -> Result<Tensor3> {
        self.check_same_dims(other, "tensor difference")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Tensor3::from_parts(self.dims, data))
    }

    /// `||self - other|| / ||self||`, or the absolute distance when `self` is
    /// zero.
    pub fn relative_error(&self, other: &Tensor3) -> Result<f64> {
        let diff = self.difference(other)?.frobenius_norm();
        let norm = self.frobenius_norm();
        Ok(if norm > 0.0 { diff / norm } else { diff })
    }

    pub(crate) fn check_same_dims(&self, other: &Tensor3, context: &'static str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dims.to_vec(),
                actual: other.dims.to_vec(),
            });
        }
        Ok(())
    }
}

/// A tensor flattened along one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedMatrix {
    pub mode: Mode,
    pub matrix: DMatrix<f64>,
}

impl UnfoldedMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Inverse of [`Tensor3::unfold`].
pub fn fold(m: &UnfoldedMatrix, dims: Dims) -> Result<Tensor3> {
    check_dims(dims)?;
    let [n1, n2, n3] = dims;
    let rows = dims[m.mode.index()];
    let cols = n1 * n2 * n3 / rows;
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::DimensionMismatch {
            context: "fold",
            expected: vec![rows, cols],
            actual: vec![m.rows(), m.cols()],
        });
    }
    let a = &m.matrix;
    let data = match m.mode {
        Mode::One => a.as_slice().to_vec(),
        Mode::Two => {
            let mut data = vec![0.0; n1 * n2 * n3];
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        data[i + n1 * (j + n2 * k)] = a[(j, i + n1 * k)];
                    }
                }
            }
            data
        }
        Mode::Three => a.transpose().as_slice().to_vec(),
    };
    Tensor3::from_vec(dims, data)
}
