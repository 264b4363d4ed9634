//! Small dense kernels: LU determinant and 4x4 Hermitian helpers.

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMatrix4 = Matrix4<C64>;

/// Determinant of a square row-major matrix by LU factorization with
/// partial pivoting. The input is consumed as scratch space.
pub fn lu_determinant(mut a: Vec<f64>, n: usize) -> f64 {
    assert_eq!(a.len(), n * n, "expected an {n}x{n} matrix");
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        let pivot = a[pivot_row * n + col];
        if pivot == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            det = -det;
        }
        det *= pivot;
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
    }
    det
}

/// Eigenvalues of a Hermitian 4x4 matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix4) -> [f64; 4] {
    let eig = SymmetricEigen::new(*m);
    let mut ev = [0.0; 4];
    for (dst, src) in ev.iter_mut().zip(eig.eigenvalues.iter()) {
        *dst = *src;
    }
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
pub fn hermitian_eigenvalues_2(m: &Matrix2<C64>) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let off = m[(0, 1)].norm();
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + off * off).sqrt();
    [mean - radius, mean + radius]
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

pub fn identity2() -> Matrix2<C64> {
    Matrix2::identity()
}

pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> CMatrix4 {
    CMatrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_small_cases() {
        assert_eq!(lu_determinant(vec![3.0], 1), 3.0);
        assert!((lu_determinant(vec![1.0, 2.0, 3.0, 4.0], 2) + 2.0).abs() < 1e-15);
        // needs a row swap
        assert!((lu_determinant(vec![0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-15);
        assert_eq!(lu_determinant(vec![1.0, 2.0, 2.0, 4.0], 2), 0.0);
        let m = vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        assert!((lu_determinant(m, 3) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_matches_nalgebra() {
        let n = 7;
        let data: Vec<f64> = (0..n * n)
            .map(|k| ((k * 37 + 11) % 17) as f64 / 17.0 - 0.4)
            .collect();
        let reference = nalgebra::DMatrix::from_row_slice(n, n, &data).determinant();
        assert!((lu_determinant(data, n) - reference).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_matches_generic() {
        let m = Matrix2::new(c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0));
        let ev = hermitian_eigenvalues_2(&m);
        let g = SymmetricEigen::new(m).eigenvalues;
        let mut g = [g[0], g[1]];
        g.sort_by(|a, b| a.total_cmp(b));
        assert!((ev[0] - g[0]).abs() < 1e-14 && (ev[1] - g[1]).abs() < 1e-14);
    }
}
