//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Everything is written against [`Real`], which is `num_traits::Float` plus
//! the handful of dense linear-algebra kernels the channel decomposition
//! needs. The kernels are implemented for `f32` and `f64` through nalgebra.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::{DMatrix, DVector};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Thin singular value decomposition `m = u * diag(sigma) * v_t`.
#[derive(Debug, Clone)]
pub struct DenseSvd<T: Real> {
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    pub v_t: DMatrix<T>,
}

/// Floating-point scalar usable by the channel model: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Full SVD, or `None` when the iteration fails to converge.
    fn dense_svd(m: DMatrix<Self>) -> Option<DenseSvd<Self>>;

    /// Singular values only (unsorted), or `None` on non-convergence.
    fn singular_values(m: DMatrix<Self>) -> Option<DVector<Self>>;

    /// Eigenvalues of a symmetric matrix (unsorted).
    fn symmetric_eigenvalues(m: DMatrix<Self>) -> DVector<Self>;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).expect("usize representable")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn dense_svd(m: DMatrix<Self>) -> Option<DenseSvd<Self>> {
                let svd = m.try_svd(true, true, <$t>::EPSILON, 0)?;
                Some(DenseSvd {
                    u: svd.u?,
                    sigma: svd.singular_values,
                    v_t: svd.v_t?,
                })
            }

            fn singular_values(m: DMatrix<Self>) -> Option<DVector<Self>> {
                m.try_svd(false, false, <$t>::EPSILON, 0)
                    .map(|svd| svd.singular_values)
            }

            fn symmetric_eigenvalues(m: DMatrix<Self>) -> DVector<Self> {
                m.symmetric_eigenvalues()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Largest absolute entry of `m^T m - I` (or `m m^T - I`, equivalently for square `m`).
pub fn orthogonality_residual<T: Real>(m: &DMatrix<T>) -> T {
    let gram = m.transpose() * m;
    max_abs_diff(&gram, &DMatrix::identity(m.nrows(), m.ncols()))
}
