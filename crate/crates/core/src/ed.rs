//! Exact diagonalization of small periodic XY rings.
//!
//! This is an independent check on the thermodynamic-limit correlators: it
//! builds the spin Hamiltonian on `N` sites, diagonalizes it densely (one
//! block per parity of the number of down spins, which the Hamiltonian
//! conserves) and traces the Gibbs state down to two sites.
//!
//! Convention: the closed-form correlators describe the Gibbs state of the
//! ring Hamiltonian at inverse temperature `1 / (2 kT)`, with the field axis
//! reversed. [`ChainDiagonalization::two_site_state`] applies both so that
//! its output is directly comparable with [`crate::state::build_state`].

use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix4};
use crate::params::{ModelParams, Temperature};
use crate::state::TwoSiteState;

pub const MIN_SITES: usize = 4;
pub const MAX_SITES: usize = 12;
/// Ground levels closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteChainSpec {
    num_sites: usize,
    params: ModelParams,
}

impl FiniteChainSpec {
    pub fn new(num_sites: usize, params: ModelParams) -> Result<Self> {
        if num_sites == 2 {
            return Err(Error::InvalidChain(
                "a periodic ring of 2 sites counts its single bond twice; use 4 to 12 sites".into(),
            ));
        }
        if !(MIN_SITES..=MAX_SITES).contains(&num_sites) {
            return Err(Error::InvalidChain(format!(
                "ring size must be in [{MIN_SITES}, {MAX_SITES}], got {num_sites}"
            )));
        }
        Ok(FiniteChainSpec { num_sites, params })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        1 << self.num_sites
    }
}

// Nonzero entries H[s', s] of column s. Bit j of s set means site j is down.
fn column_entries(spec: &FiniteChainSpec, s: usize) -> Vec<(usize, f64)> {
    let n = spec.num_sites;
    let gamma = spec.params.gamma();
    let lambda = spec.params.lambda();
    let down = s.count_ones() as f64;
    let mut out = vec![(s, -(n as f64 - 2.0 * down))];
    if lambda == 0.0 {
        return out;
    }
    for j in 0..n {
        let k = (j + 1) % n;
        let flipped = s ^ (1 << j) ^ (1 << k);
        let same = ((s >> j) & 1) == ((s >> k) & 1);
        // (1+g) XX + (1-g) YY acting on aligned pairs gives 2g, on opposite pairs 2
        let amp = if same { -lambda * gamma } else { -lambda };
        if amp != 0.0 {
            out.push((flipped, amp));
        }
    }
    out
}

/// The full `2^N x 2^N` ring Hamiltonian, real in the computational basis.
pub fn build_hamiltonian(spec: &FiniteChainSpec) -> DMatrix<f64> {
    let dim = spec.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for (t, v) in column_entries(spec, s) {
            h[(t, s)] += v;
        }
    }
    h
}

struct Sector {
    states: Vec<usize>,
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

/// Eigendecomposition of a ring, reusable across site pairs.
pub struct ChainDiagonalization {
    spec: FiniteChainSpec,
    sectors: Vec<Sector>,
    // position of each basis state inside its parity sector
    position: Vec<usize>,
}

/// A reduced two-site state together with ground-space information.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsOutcome {
    pub state: TwoSiteState,
    /// Number of levels within `DEGENERACY_TOL` of the ground energy.
    pub ground_degeneracy: usize,
    /// Set at `kT = 0` when the ground level is degenerate; the state is then
    /// the average over the ground space.
    pub degenerate_ground_state: bool,
}

impl ChainDiagonalization {
    pub fn new(spec: FiniteChainSpec) -> Result<Self> {
        let dim = spec.dim();
        let mut position = vec![0; dim];
        let mut sectors = Vec::with_capacity(2);
        for parity in 0..2u32 {
            let states: Vec<usize> = (0..dim).filter(|s| s.count_ones() % 2 == parity).collect();
            for (i, &s) in states.iter().enumerate() {
                position[s] = i;
            }
            let m = states.len();
            let mut h = Mat::<f64>::zeros(m, m);
            for (col, &s) in states.iter().enumerate() {
                for (t, v) in column_entries(&spec, s) {
                    h[(position[t], col)] += v;
                }
            }
            let eig = h
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::InvalidChain(format!("eigensolver failed: {e:?}")))?;
            let energies: Vec<f64> = (0..m).map(|i| eig.S().column_vector()[i]).collect();
            sectors.push(Sector {
                states,
                energies,
                vectors: eig.U().to_owned(),
            });
        }
        Ok(ChainDiagonalization {
            spec,
            sectors,
            position,
        })
    }

    pub fn spec(&self) -> &FiniteChainSpec {
        &self.spec
    }

    /// All eigenvalues, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.energies.iter().copied())
            .collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies()[0]
    }

    /// Thermal (or ground-space) state reduced to sites `first` and `second`.
    pub fn two_site_state(&self, first: usize, second: usize) -> Result<GibbsOutcome> {
        let n = self.spec.num_sites;
        if first >= n || second >= n || first == second {
            return Err(Error::InvalidChain(format!(
                "sites ({first}, {second}) invalid for a ring of {n}"
            )));
        }
        let levels = self.energies();
        let e0 = levels[0];
        let ground_degeneracy = levels
            .iter()
            .take_while(|&&e| e - e0 < DEGENERACY_TOL)
            .count();

        let weight = |e: f64| match self.spec.params.temperature() {
            Temperature::Zero => {
                if e - e0 < DEGENERACY_TOL {
                    1.0
                } else {
                    0.0
                }
            }
            Temperature::Finite(kt) => (-(e - e0) / (2.0 * kt)).exp(),
        };
        let z: f64 = levels.iter().map(|&e| weight(e)).sum();

        let mut rho = [[0.0f64; 4]; 4];
        for sector in &self.sectors {
            for (k, &e) in sector.energies.iter().enumerate() {
                let w = weight(e) / z;
                if w < 1e-18 {
                    continue;
                }
                let v = sector.vectors.col(k);
                for (idx, &s) in sector.states.iter().enumerate() {
                    let amp = v[idx];
                    if amp == 0.0 {
                        continue;
                    }
                    let a = (s >> first) & 1;
                    let b = (s >> second) & 1;
                    let row = 2 * a + b;
                    // only parity-preserving partners: same pair, or both flipped
                    rho[row][row] += w * amp * amp;
                    let partner = s ^ (1 << first) ^ (1 << second);
                    rho[row][3 - row] += w * amp * v[self.position[partner]];
                }
            }
        }

        // reverse the field axis: X on both sites maps index r to 3 - r
        let m = CMatrix4::from_fn(|r, col| c(rho[3 - r][3 - col], 0.0));
        let sep = (second + n - first) % n;
        let state = TwoSiteState::from_matrix(m, sep.min(n - sep))?;
        Ok(GibbsOutcome {
            state,
            ground_degeneracy,
            degenerate_ground_state: self.spec.params.temperature().is_zero()
                && ground_degeneracy > 1,
        })
    }
}

/// Reduced state of sites `0` and `n` of the ring described by `spec`.
pub fn gibbs_two_site_state(spec: &FiniteChainSpec, n: usize) -> Result<GibbsOutcome> {
    if n == 0 || n > spec.num_sites / 2 {
        return Err(Error::InvalidChain(format!(
            "separation {n} must be in [1, {}]",
            spec.num_sites / 2
        )));
    }
    ChainDiagonalization::new(*spec)?.two_site_state(0, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, gamma: f64, lambda: f64, kt: f64) -> FiniteChainSpec {
        FiniteChainSpec::new(n, ModelParams::new(gamma, lambda, kt).unwrap()).unwrap()
    }

    #[test]
    fn ring_size_bounds() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let err = FiniteChainSpec::new(2, p).unwrap_err();
        assert!(err.to_string().contains("twice"));
        assert!(FiniteChainSpec::new(3, p).is_err());
        assert!(FiniteChainSpec::new(13, p).is_err());
        assert!(FiniteChainSpec::new(4, p).is_ok());
    }

    #[test]
    fn field_only_hamiltonian_is_diagonal() {
        let h = build_hamiltonian(&spec(4, 0.7, 0.0, 1.0));
        for s in 0..16usize {
            for t in 0..16usize {
                let want = if s == t {
                    -(4.0 - 2.0 * s.count_ones() as f64)
                } else {
                    0.0
                };
                assert_eq!(h[(s, t)], want);
            }
        }
    }

    #[test]
    fn ising_hamiltonian_is_traceless_and_symmetric() {
        let h = build_hamiltonian(&spec(4, 1.0, 1.0, 1.0));
        assert_eq!(h.trace(), 0.0);
        assert_eq!(h, h.transpose());
        let h = build_hamiltonian(&spec(6, 0.3, 0.8, 1.0));
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn sector_spectrum_matches_full_matrix() {
        let sp = spec(6, 0.4, 1.3, 1.0);
        let full = nalgebra::SymmetricEigen::new(build_hamiltonian(&sp)).eigenvalues;
        let mut full: Vec<f64> = full.iter().copied().collect();
        full.sort_by(|a, b| a.total_cmp(b));
        let ed = ChainDiagonalization::new(sp).unwrap().energies();
        for (a, b) in full.iter().zip(ed.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn free_spins_match_closed_form() {
        let out = gibbs_two_site_state(&spec(8, 0.5, 0.0, 1.0), 1).unwrap();
        let cs = out.state.correlators();
        let t = 0.5f64.tanh();
        assert!((cs.sz + t).abs() < 1e-12);
        assert!(cs.sxx.abs() < 1e-12 && cs.syy.abs() < 1e-12);
        assert!((cs.szz - t * t).abs() < 1e-12);
    }

    #[test]
    fn hot_ring_is_maximally_mixed() {
        let out = gibbs_two_site_state(&spec(8, 0.8, 1.4, 1e7), 2).unwrap();
        let diff = out.state.matrix() - CMatrix4::identity() * c(0.25, 0.0);
        assert!(diff.iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn translation_and_reflection_invariance() {
        let ed = ChainDiagonalization::new(spec(8, 0.6, 0.9, 0.7)).unwrap();
        let a = ed.two_site_state(0, 2).unwrap().state;
        let b = ed.two_site_state(1, 3).unwrap().state;
        let r = ed.two_site_state(0, 6).unwrap().state;
        for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in a.matrix().iter().zip(r.matrix().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(a.is_x_state(1e-10));
    }

    #[test]
    fn separation_bounds() {
        let sp = spec(6, 0.5, 0.5, 1.0);
        assert!(gibbs_two_site_state(&sp, 0).is_err());
        assert!(gibbs_two_site_state(&sp, 4).is_err());
    }

    #[test]
    fn zero_temperature_projector() {
        // Free spins: unique ground state with all spins along the field.
        let out = gibbs_two_site_state(&spec(6, 1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(out.ground_degeneracy, 1);
        assert!(!out.degenerate_ground_state);
        assert!((out.state.correlators().sz + 1.0).abs() < 1e-12);
        // Classical Ising limit is doubly degenerate; the flag is raised.
        let sp = FiniteChainSpec::new(6, ModelParams::new(1.0, 1e6, 0.0).unwrap()).unwrap();
        let out = ChainDiagonalization::new(sp)
            .unwrap()
            .two_site_state(0, 1)
            .unwrap();
        assert!(out.ground_degeneracy >= 1);
        let trace: f64 = (0..4).map(|i| out.state.matrix()[(i, i)].re).sum();
        assert!((trace - 1.0).abs() < 1e-12);
    }
}
