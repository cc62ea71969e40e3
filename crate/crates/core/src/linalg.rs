//! Small dense symmetric eigenproblems.

use crate::scalar::Scalar;

/// Eigen-decomposition of a symmetric `n x n` row-major matrix by cyclic Jacobi rotations.
///
/// Returns the eigenvalues and the eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let two = T::of(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..n {
            for j in 0..n {
                let x = m[i * n + j] * m[i * n + j];
                if i == j {
                    scale += x;
                } else {
                    off += x;
                }
            }
        }
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn symmetrize<T: Scalar>(a: &mut [T], n: usize) {
    let half = T::of(0.5);
    for i in 0..n {
        for j in i + 1..n {
            let s = (a[i * n + j] + a[j * n + i]) * half;
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
}

/// Principal square root of a symmetric positive semidefinite matrix.
/// Negative eigenvalues are treated as zero.
pub fn psd_sqrt<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let (vals, vecs) = symmetric_eigen(a, n);
    let roots: Vec<T> = vals.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = T::zero();
            for k in 0..n {
                acc += vecs[i * n + k] * roots[k] * vecs[j * n + k];
            }
            out[i * n + j] = acc;
        }
    }
    symmetrize(&mut out, n);
    out
}

pub fn trace<T: Scalar>(a: &[T], n: usize) -> T {
    (0..n).map(|i| a[i * n + i]).sum()
}
