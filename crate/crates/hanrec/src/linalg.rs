//! GEMM wrappers over [`Tensor`]. Transposed operands are expressed through
//! strides, so the backward pass never materializes Aᵀ or Bᵀ.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// C = A·B for row-major (m×k)·(k×n). Caller has validated shapes.
pub(crate) fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    let (m, k) = (a.rows(), a.cols());
    let n = b.cols();
    let mut c = Tensor::zeros(vec![m, n]);
    unsafe {
        S::gemm(
            m,
            k,
            n,
            S::one(),
            a.data().as_ptr(),
            k as isize,
            1,
            b.data().as_ptr(),
            n as isize,
            1,
            S::zero(),
            c.data_mut().as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// C += A·Bᵀ where A is (m×k) and B is (n×k); C is (m×n).
pub(crate) fn add_matmul_nt<S: Scalar>(c: &mut Tensor<S>, a: &Tensor<S>, b: &Tensor<S>) {
    let (m, k) = (a.rows(), a.cols());
    let n = b.rows();
    debug_assert_eq!(b.cols(), k);
    debug_assert_eq!((c.rows(), c.cols()), (m, n));
    unsafe {
        S::gemm(
            m,
            k,
            n,
            S::one(),
            a.data().as_ptr(),
            k as isize,
            1,
            b.data().as_ptr(),
            1,
            k as isize,
            S::one(),
            c.data_mut().as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C += Aᵀ·B where A is (k×m) and B is (k×n); C is (m×n).
pub(crate) fn add_matmul_tn<S: Scalar>(c: &mut Tensor<S>, a: &Tensor<S>, b: &Tensor<S>) {
    let (k, m) = (a.rows(), a.cols());
    let n = b.cols();
    debug_assert_eq!(b.rows(), k);
    debug_assert_eq!((c.rows(), c.cols()), (m, n));
    unsafe {
        S::gemm(
            m,
            k,
            n,
            S::one(),
            a.data().as_ptr(),
            1,
            m as isize,
            b.data().as_ptr(),
            n as isize,
            1,
            S::one(),
            c.data_mut().as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
