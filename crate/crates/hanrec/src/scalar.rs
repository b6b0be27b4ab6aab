//! Scalar abstraction: every numeric routine in this crate is generic over
//! [`Scalar`], instantiated as `f32` (fast training) or `f64` (gradient
//! checks, oracle comparisons).

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Send + Sync + Default + std::fmt::Debug + 'static
{
    fn from_f64_val(v: f64) -> Self;
    fn to_f64_val(self) -> f64;

    /// C ← alpha·A·B + beta·C over raw row-major-capable slices.
    ///
    /// Strides are in elements; matrices may alias transposed views of
    /// row-major buffers, which is how the backward pass multiplies by Aᵀ/Bᵀ
    /// without copying.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    fn from_f64_val(v: f64) -> Self {
        v as f32
    }

    fn to_f64_val(self) -> f64 {
        self as f64
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    fn from_f64_val(v: f64) -> Self {
        v
    }

    fn to_f64_val(self) -> f64 {
        self
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}
