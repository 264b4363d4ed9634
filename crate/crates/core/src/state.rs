//! Two-site reduced density matrix of the chain.
//!
//! Basis order is `|uu>, |ud>, |du>, |dd>` with `sigma^z |u> = |u>`. Built
//! from correlators the matrix is an X-state: real, with nonzero entries only
//! on the diagonal and the anti-diagonal.

use crate::correlators::CorrelatorSet;
use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigenvalues, CMatrix4};
use crate::measures::binary_entropy;

/// Eigenvalues in `[-CLAMP_FLOOR, 0)` are treated as numerical dust.
pub const CLAMP_FLOOR: f64 = 1e-9;
/// Eigenvalues below `-NEGATIVE_LIMIT` reject the state.
pub const NEGATIVE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteState {
    correlators: CorrelatorSet,
    matrix: CMatrix4,
    xi: [f64; 4],
}

fn clamp_spectrum(raw: [f64; 4]) -> Result<[f64; 4]> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_LIMIT {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(raw.map(|x| x.max(0.0)))
}

/// Assembles the state from its correlators, with the closed-form spectrum.
pub fn build_state(c_set: CorrelatorSet) -> Result<TwoSiteState> {
    let CorrelatorSet {
        sz, sxx, syy, szz, ..
    } = c_set;
    for (name, v) in [("sz", sz), ("sxx", sxx), ("syy", syy), ("szz", szz)] {
        if !(v.is_finite() && v.abs() <= 1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "correlator {name} = {v} outside [-1, 1]"
            )));
        }
    }

    let mut m = CMatrix4::zeros();
    m[(0, 0)] = c((1.0 + 2.0 * sz + szz) / 4.0, 0.0);
    m[(1, 1)] = c((1.0 - szz) / 4.0, 0.0);
    m[(2, 2)] = c((1.0 - szz) / 4.0, 0.0);
    m[(3, 3)] = c((1.0 - 2.0 * sz + szz) / 4.0, 0.0);
    m[(0, 3)] = c((sxx - syy) / 4.0, 0.0);
    m[(3, 0)] = m[(0, 3)];
    m[(1, 2)] = c((sxx + syy) / 4.0, 0.0);
    m[(2, 1)] = m[(1, 2)];

    let outer = ((sxx - syy).powi(2) + 4.0 * sz * sz).sqrt();
    let inner = sxx + syy;
    let raw = [
        (1.0 + szz + outer) / 4.0,
        (1.0 + szz - outer) / 4.0,
        (1.0 - szz + inner) / 4.0,
        (1.0 - szz - inner) / 4.0,
    ];

    Ok(TwoSiteState {
        correlators: c_set,
        matrix: m,
        xi: clamp_spectrum(raw)?,
    })
}

impl TwoSiteState {
    /// Wraps an arbitrary two-qubit density matrix. The correlator view is
    /// the Pauli expectations of the matrix, with `sz` averaged over both
    /// sites; the spectrum comes from a Hermitian eigensolver.
    pub fn from_matrix(matrix: CMatrix4, n: usize) -> Result<Self> {
        let herm_err = (matrix - matrix.adjoint())
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if herm_err > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm_err:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let expect = |op: CMatrix4| (matrix * op).trace().re;
        let (x, y, z, id) = (
            linalg::pauli_x(),
            linalg::pauli_y(),
            linalg::pauli_z(),
            linalg::identity2(),
        );
        let sz_a = expect(linalg::kron(&z, &id));
        let sz_b = expect(linalg::kron(&id, &z));
        let correlators = CorrelatorSet::new(
            n,
            0.5 * (sz_a + sz_b),
            expect(linalg::kron(&x, &x)),
            expect(linalg::kron(&y, &y)),
            expect(linalg::kron(&z, &z)),
        );
        let xi = clamp_spectrum(hermitian_eigenvalues(&matrix))?;
        Ok(TwoSiteState {
            correlators,
            matrix,
            xi,
        })
    }

    pub fn correlators(&self) -> &CorrelatorSet {
        &self.correlators
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.matrix
    }

    /// The four eigenvalues, clamped at zero.
    pub fn xi(&self) -> [f64; 4] {
        self.xi
    }

    /// Reduced state of the first site (`site = 0`) or the second (`site = 1`).
    pub fn marginal(&self, site: usize) -> nalgebra::Matrix2<linalg::C64> {
        let m = &self.matrix;
        nalgebra::Matrix2::from_fn(|a, b| {
            (0..2)
                .map(|k| {
                    if site == 0 {
                        m[(2 * a + k, 2 * b + k)]
                    } else {
                        m[(2 * k + a, 2 * k + b)]
                    }
                })
                .sum()
        })
    }

    pub fn is_x_state(&self, tol: f64) -> bool {
        [(0, 1), (0, 2), (1, 3), (2, 3)]
            .iter()
            .all(|&(i, j)| self.matrix[(i, j)].norm() <= tol && self.matrix[(j, i)].norm() <= tol)
    }
}

/// Von Neumann entropy (bits) of one site, `H_bin((1 + sz) / 2)`.
pub fn single_site_entropy(sz: f64) -> f64 {
    binary_entropy((1.0 + sz) / 2.0)
}

/// `-sum xi log2 xi` with `0 log 0 = 0`.
pub fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Von Neumann entropy (bits) of the two-site state.
pub fn joint_entropy(state: &TwoSiteState) -> f64 {
    entropy_bits(&state.xi)
}
