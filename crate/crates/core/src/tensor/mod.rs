//! Dense row-major tensors and a reverse-mode autodiff tape.
//!
//! The value type [`Tensor`] is immutable once built and cheap to clone
//! (shared storage), so model parameters can be registered on a fresh tape
//! every iteration without copying. Gradients live on the tape, not on the
//! tensor.

mod check;
mod tape;

pub use check::{finite_diff_check, gradcheck_suite, GradCheckReport};
pub use tape::{Tape, Var};

use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op} expects a rank-2 operand, got shape {shape:?}")]
    NotMatrix { op: &'static str, shape: Vec<usize>
 },
    #[error("{op}: index {index} out of bounds for {bound}")]
    IndexOutOfBounds {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("element count {len} does not match shape {shape:?}")]
    BadElementCount { shape: Vec<usize>, len: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("domain error in {op}: {what}")]
    Domain { op: &'static str, what: String },
    #[error("non-finite values produced by {op}")]
    NonFinite { op: &'static str },
    #[error("degenerate input to {op}: {what}")]
    DegenerateInput { op: &'static str, what: String },
}

/// Dense row-major tensor with shared, immutable storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Arc<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::BadElementCount {
                shape,
                len: data.len(),
            });
        }
        Ok(Self {
            shape,
            data: Arc::new(data),
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: Arc::new(vec![T::ZERO; numel]),
        }
    }

    pub fn filled(shape: Vec<usize>, v: T) -> Self {
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: Arc::new(vec![v; numel]),
        }
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![1],
            data: Arc::new(vec![v]),
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> T) -> Self {
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: Arc::new((0..numel).map(&mut f).collect()),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Mutable access via copy-on-write; sole owners mutate in place.
    pub fn data_mut(&mut self) -> &mut [T] {
        Arc::make_mut(&mut self.data)
    }

    /// Rows of a rank-2 tensor (a rank-1 tensor counts as a single row).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    /// Columns of a rank-2 tensor (a rank-1 tensor is one row of its length).
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[1..].iter().product(),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> T {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Convert elementwise to another precision.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: Arc::new(self.data.iter().map(|v| U::from_f64(v.to_f64())).collect()),
        }
    }

    /// Max |a - b| over all elements; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_f64() * v.to_f64())
            .sum::<f64>()
            .sqrt()
    }
}

/// Multiply two row-major matrices without a tape. Used by evaluation code
/// paths that need raw similarity products.
pub fn matmul_raw<T: Scalar>(
    a: &[T],
    m: usize,
    k: usize,
    b: &[T],
    n: usize,
) -> Vec<T> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = vec![T::ZERO; m * n];
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::ONE,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            T::ZERO,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_element_count_enforced() {
        assert!(Tensor::<f32>::from_vec(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::<f32>::from_vec(vec![2, 3], vec![0.0; 5]),
            Err(TensorError::BadElementCount { .. })
        ));
    }

    #[test]
    fn cheap_clone_shares_storage() {
        let t = Tensor::<f32>::filled(vec![4, 4], 1.5);
        let u = t.clone();
        assert!(std::sync::Arc::ptr_eq(&t.data, &u.data));
    }

    #[test]
    fn cast_roundtrip_small_values() {
        let t = Tensor::<f64>::from_fn(vec![3], |i| i as f64 * 0.25);
        let u: Tensor<f32> = t.cast();
        let back: Tensor<f64> = u.cast();
        assert_eq!(t.max_abs_diff(&back), 0.0);
    }

    #[test]
    fn matmul_raw_identity() {
        let i2 = vec![1.0f32, 0.0, 0.0, 1.0];
        let a = vec![1.0f32, 2.0, 3.0, 4.0];
        assert_eq!(matmul_raw(&i2, 2, 2, &a, 2), a);
    }
}
