use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::ComplexMatrix;

/// Dense row-major complex tensor of arbitrary rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::DimensionMismatch { expected: len, found: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; t.rank()];
        for flat in 0..t.data.len() {
            t.unravel_into(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (r, c) = m.shape();
        Self::from_fn(vec![r, c], |ix| m[(ix[0], ix[1])])
    }

    pub fn from_vec(v: Vec<Complex64>) -> Self {
        Self { shape: vec![v.len()], data: v }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.rank() != 2 {
            return Err(Error::InvalidArgument(format!("expected rank 2, got rank {}", self.rank())));
        }
        Ok(ComplexMatrix::from_row_slice(self.shape[0], self.shape[1], &self.data))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn unravel_into(&self, mut flat: usize, idx: &mut [usize]) {
        for (k, &n) in self.shape.iter().enumerate().rev() {
            idx[k] = flat % n;
            flat /= n;
        }
    }

    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Applies `m` along `axis`: `out[.., i, ..] = Σ_n m[(i, n)] self[.., n, ..]`.
    pub fn contract_axis(&self, axis: usize, m: &DMatrix<f64>) -> Result<Self> {
        if axis >= self.rank() {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
        }
        if m.ncols() != self.shape[axis] {
            return Err(Error::DimensionMismatch { expected: self.shape[axis], found: m.ncols() });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let n_in = self.shape[axis];
        let n_out = m.nrows();
        let mut shape = self.shape.clone();
        shape[axis] = n_out;
        let mut out = vec![Complex64::new(0.0, 0.0); outer * n_out * inner];
        for o in 0..outer {
            for i in 0..n_out {
                for n in 0..n_in {
                    let w = m[(i, n)];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (o * n_in + n) * inner;
                    let dst = (o * n_out + i) * inner;
                    for k in 0..inner {
                        out[dst + k] += self.data[src + k] * w;
                    }
                }
            }
        }
        Ok(Self { shape, data: out })
    }

    /// `max |self - other|`; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch { left: self.shape.clone(), right: other.shape.clone() });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
