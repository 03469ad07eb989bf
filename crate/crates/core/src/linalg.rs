//! Dense symmetric eigensolver (cyclic Jacobi).
//!
//! The hopping-block Hamiltonians have massively degenerate spectra
//! (eigenvalues are integer multiples of sqrt(2) kappa); nalgebra's
//! QR-iteration SymmetricEigen mis-decomposes some of those blocks, so the
//! eigensolver is kept in-house. Jacobi converges unconditionally for
//! symmetric input and delivers near-machine-precision eigenpairs at the
//! block sizes used here.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Eigenvalues (unsorted) and, optionally, the matching orthonormal
/// eigenvector columns.
pub struct SymmetricEigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<f64>>,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Panics if the input is not square. The symmetric part is what gets
/// diagonalized; callers are expected to pass symmetric input.
pub fn symmetric_eigen(matrix: &DMatrix<f64>, with_vectors: bool) -> SymmetricEigenDecomposition {
    assert_eq!(matrix.nrows(), matrix.ncols(), "matrix must be square");
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut v = if with_vectors {
        Some(DMatrix::<f64>::identity(n, n))
    } else {
        None
    };

    if n <= 1 {
        return SymmetricEigenDecomposition {
            eigenvalues: (0..n).map(|i| a[(i, i)]).collect(),
            eigenvectors: v,
        };
    }

    let frobenius: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = frobenius * 1e-15;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= stop {
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // rotation angle that zeroes a[p][q]
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- J^T A J on rows/cols p and q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[(k, p)];
                        let vkq = vm[(k, q)];
                        vm[(k, p)] = c * vkp - s * vkq;
                        vm[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    SymmetricEigenDecomposition {
        eigenvalues: (0..n).map(|i| a[(i, i)]).collect(),
        eigenvectors: v,
    }
}

/// Eigenvalues of a complex Hermitian matrix via the real symmetric
/// embedding [[Re, -Im], [Im, Re]], whose spectrum is that of the input with
/// every eigenvalue doubled.
pub fn hermitian_eigenvalues(matrix: &DMatrix<Complex64>) -> Vec<f64> {
    assert_eq!(matrix.nrows(), matrix.ncols(), "matrix must be square");
    let n = matrix.nrows();
    let mut embedded = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let x = matrix[(i, j)];
            embedded[(i, j)] = x.re;
            embedded[(i + n, j + n)] = x.re;
            embedded[(i, j + n)] = -x.im;
            embedded[(i + n, j)] = x.im;
        }
    }
    let mut doubled = symmetric_eigen(&embedded, false).eigenvalues;
    doubled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // every eigenvalue appears twice; keep one of each pair
    doubled.into_iter().step_by(2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonalizes_fixed_2x2() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = symmetric_eigen(&m, true);
        let mut vals = eig.eigenvalues.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn reconstructs_degenerate_spectrum_matrix() {
        // A matrix with repeated eigenvalues 1, 1, 4.
        let q = {
            // orthonormal basis from a fixed rotation
            let (c, s) = (0.6f64, 0.8f64);
            DMatrix::from_row_slice(
                3,
                3,
                &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0],
            )
        };
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 4.0]));
        let m = &q * d * q.transpose();
        let eig = symmetric_eigen(&m, true);
        let v = eig.eigenvectors.unwrap();
        let recon = &v
            * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.eigenvalues.clone()))
            * v.transpose();
        let defect = (recon - &m).iter().fold(0.0f64, |w, x| w.max(x.abs()));
        assert!(defect < 1e-13, "reconstruction defect {defect:e}");
    }

    #[test]
    fn random_symmetric_reconstruction_and_orthogonality() {
        // deterministic pseudo-random symmetric matrix
        let n = 40;
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let eig = symmetric_eigen(&m, true);
        let v = eig.eigenvectors.unwrap();
        let ortho = (v.transpose() * &v - DMatrix::<f64>::identity(n, n))
            .iter()
            .fold(0.0f64, |w, x| w.max(x.abs()));
        let recon = (&v
            * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.eigenvalues.clone()))
            * v.transpose()
            - &m)
            .iter()
            .fold(0.0f64, |w, x| w.max(x.abs()));
        assert!(ortho < 1e-13, "orthogonality defect {ortho:e}");
        assert!(recon < 1e-12, "reconstruction defect {recon:e}");
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_y_like() {
        // [[0, -i], [i, 0]] has eigenvalues -1, 1.
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, -1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        let vals = hermitian_eigenvalues(&m);
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-13);
        assert_relative_eq!(vals[1], 1.0, epsilon = 1e-13);
    }
}
