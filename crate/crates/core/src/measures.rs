//! Correlation measures of a two-qubit state, all in bits.
//!
//! Classical correlation is reported from the closed form that measures the
//! second spin along `x` (`theta = pi/2`, `phi = 0`). The grid optimizer in
//! this module recomputes it from the definition so the closed form can be
//! checked instead of assumed.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen, SVD};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigenvalues_2, CMatrix4, C64};
use crate::state::{entropy_bits, TwoSiteState};

/// Negative results down to this size are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Closed-form and optimized classical correlation must agree to this.
pub const AGREEMENT_TOL: f64 = 1e-6;

/// `-x log2 x - (1-x) log2 (1-x)`, zero at the endpoints.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

fn clamp_small_negative(x: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// Direction of a projective measurement on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementAngles {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "measurement angles out of range: theta={theta}, phi={phi}"
            )));
        }
        Ok(MeasurementAngles { theta, phi })
    }

    /// Measurement along `x`, optimal for the chain states.
    pub fn along_x() -> Self {
        MeasurementAngles {
            theta: PI / 2.0,
            phi: 0.0,
        }
    }

    /// The pair `|theta_par>`, `|theta_perp>`.
    pub fn basis(&self) -> [[C64; 2]; 2] {
        let (s, co) = (self.theta / 2.0).sin_cos();
        let phase = C64::from_polar(1.0, self.phi);
        [[c(co, 0.0), phase * s], [phase.conj() * s, c(-co, 0.0)]]
    }
}

/// Which qubit the projective measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasuredSite {
    First,
    Second,
}

fn entropy_2x2(m: &Matrix2<C64>) -> f64 {
    let ev = hermitian_eigenvalues_2(m);
    entropy_bits(&[ev[0].max(0.0), ev[1].max(0.0)])
}

/// `S(rho_A) + S(rho_B) - S(rho_AB)`.
pub fn mutual_information(state: &TwoSiteState) -> f64 {
    let sa = entropy_2x2(&state.marginal(0));
    let sb = entropy_2x2(&state.marginal(1));
    clamp_small_negative(sa + sb - entropy_bits(&state.xi())).max(0.0)
}

/// Average entropy left on the unmeasured qubit after measuring `site`
/// along `m`.
pub fn conditional_entropy_on(
    state: &TwoSiteState,
    m: &MeasurementAngles,
    site: MeasuredSite,
) -> f64 {
    let rho = state.matrix();
    let mut total = 0.0;
    for v in m.basis() {
        let post = Matrix2::from_fn(|a, ap| {
            let mut acc = c(0.0, 0.0);
            for b in 0..2 {
                for bp in 0..2 {
                    let (row, col) = match site {
                        MeasuredSite::Second => (2 * a + b, 2 * ap + bp),
                        MeasuredSite::First => (2 * b + a, 2 * bp + ap),
                    };
                    acc += v[b].conj() * rho[(row, col)] * v[bp];
                }
            }
            acc
        });
        let q = post.trace().re;
        if q > 1e-15 {
            total += q * entropy_2x2(&(post / c(q, 0.0)));
        }
    }
    total
}

/// Conditional entropy after measuring the second qubit.
pub fn conditional_entropy_measured(state: &TwoSiteState, m: &MeasurementAngles) -> f64 {
    conditional_entropy_on(state, m, MeasuredSite::Second)
}

/// Closed-form classical correlation for chain states.
pub fn classical_correlation_closed(state: &TwoSiteState) -> f64 {
    let cs = state.correlators();
    let p1 = 0.5 * (1.0 + cs.sz);
    let p2 = 0.5 * (1.0 + cs.sxx.hypot(cs.sz));
    clamp_small_negative(binary_entropy(p1) - binary_entropy(p2)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub n_theta: usize,
    pub n_phi: usize,
    pub refine_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            n_theta: 64,
            n_phi: 128,
            refine_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizedClassical {
    pub value: f64,
    pub angles: MeasurementAngles,
    /// Minimum conditional entropy found.
    pub conditional_entropy: f64,
    /// False when the objective is flat over the whole grid.
    pub unique: bool,
}

// Objective values closer than this count as ties.
const TIE_TOL: f64 = 1e-12;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Classical correlation from the definition: grid search over measurement
/// directions on the second qubit followed by coordinate-wise golden-section
/// refinement.
pub fn classical_correlation_optimized(
    state: &TwoSiteState,
    settings: &OptimizerSettings,
) -> Result<OptimizedClassical> {
    if settings.n_theta < 8 || settings.n_phi < 8 {
        return Err(Error::InvalidParameter(format!(
            "optimizer grid must be at least 8x8, got {}x{}",
            settings.n_theta, settings.n_phi
        )));
    }
    if settings.refine_tol.is_nan() || settings.refine_tol <= 0.0 {
        return Err(Error::InvalidParameter("refine_tol must be > 0".into()));
    }

    let d_theta = PI / (settings.n_theta - 1) as f64;
    let d_phi = 2.0 * PI / settings.n_phi as f64;
    let objective = |theta: f64, phi: f64| {
        conditional_entropy_measured(state, &MeasurementAngles { theta, phi })
    };

    let grid: Vec<Vec<f64>> = (0..settings.n_theta)
        .into_par_iter()
        .map(|i| {
            let theta = i as f64 * d_theta;
            (0..settings.n_phi)
                .map(|j| objective(theta, j as f64 * d_phi))
                .collect()
        })
        .collect();

    let best = grid.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let worst = grid
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    // first point in (theta, phi) lexicographic order that ties the minimum
    let (bi, bj) = grid
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)))
        .find(|&(_, _, v)| v <= best + TIE_TOL)
        .map(|(i, j, _)| (i, j))
        .expect("non-empty grid");
    let mut best = best;

    let s_a = entropy_2x2(&state.marginal(0));
    let mut theta = bi as f64 * d_theta;
    let mut phi = bj as f64 * d_phi;

    let unique = worst - best > TIE_TOL;
    if unique {
        let mut value = best;
        for _ in 0..50 {
            let (t, vt) = golden_minimize(
                |t| objective(t, phi),
                (theta - d_theta).max(0.0),
                (theta + d_theta).min(PI),
                settings.refine_tol,
            );
            let (p, vp) = golden_minimize(
                |p| objective(t, p),
                phi - d_phi,
                phi + d_phi,
                settings.refine_tol,
            );
            let moved = (t - theta).abs().max((p - phi).abs());
            if vt.min(vp) <= value {
                theta = t;
                phi = p;
                value = vt.min(vp);
            }
            if moved < settings.refine_tol {
                break;
            }
        }
        best = best.min(value);
    }

    Ok(OptimizedClassical {
        value: clamp_small_negative(s_a - best).max(0.0),
        angles: MeasurementAngles {
            theta: theta.clamp(0.0, PI),
            phi: phi.rem_euclid(2.0 * PI),
        },
        conditional_entropy: best,
        unique,
    })
}

/// `I - C`, using the closed-form classical correlation.
pub fn quantum_discord(state: &TwoSiteState) -> f64 {
    clamp_small_negative(mutual_information(state) - classical_correlation_closed(state)).max(0.0)
}

/// Wootters concurrence, from the singular values of `V^dagger V~` where
/// `rho = V V^dagger` and `V~ = (sy x sy) V*`; these are the square roots of
/// the eigenvalues of `rho rho~` without a square root of rounding noise.
pub fn concurrence(state: &TwoSiteState) -> f64 {
    let rho = state.matrix();
    let eig = SymmetricEigen::new(*rho);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x));
    let floor = 64.0 * f64::EPSILON * top.max(1.0);

    let mut v = eig.eigenvectors;
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        let scale = if mu > floor { mu.sqrt() } else { 0.0 };
        v.column_mut(k).scale_mut(scale);
    }
    let yy = linalg::kron(&linalg::pauli_y(), &linalg::pauli_y());
    let v_tilde = yy * v.map(|z| z.conj());
    let a: CMatrix4 = v.adjoint() * v_tilde;

    let mut sv: Vec<f64> = SVD::new(a, false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    (sv[0] - sv[1] - sv[2] - sv[3]).max(0.0)
}

/// Closed-form concurrence of an X-state.
pub fn x_state_concurrence(state: &TwoSiteState) -> f64 {
    let m = state.matrix();
    let d = |i: usize| m[(i, i)].re.max(0.0);
    let a = m[(0, 3)].norm() - (d(1) * d(2)).sqrt();
    let b = m[(1, 2)].norm() - (d(0) * d(3)).sqrt();
    2.0 * a.max(b).max(0.0)
}

/// Entanglement of formation from a concurrence value.
pub fn eof_from_concurrence(conc: f64) -> f64 {
    let c2 = conc.clamp(0.0, 1.0).powi(2);
    binary_entropy(0.5 * (1.0 + (1.0 - c2).sqrt()))
}

pub fn eof(state: &TwoSiteState) -> f64 {
    eof_from_concurrence(concurrence(state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub mutual_information: f64,
    pub classical: f64,
    pub discord: f64,
    pub concurrence: f64,
    pub eof: f64,
    pub optimal_angles: MeasurementAngles,
}

/// Outcome of checking the closed-form classical correlation against the
/// optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementCheck {
    pub closed: f64,
    pub optimized: OptimizedClassical,
    pub difference: f64,
    pub agrees: bool,
}

pub fn verify_measurement(
    state: &TwoSiteState,
    settings: &OptimizerSettings,
) -> Result<MeasurementCheck> {
    let closed = classical_correlation_closed(state);
    let optimized = classical_correlation_optimized(state, settings)?;
    let difference = (closed - optimized.value).abs();
    Ok(MeasurementCheck {
        closed,
        optimized,
        difference,
        agrees: difference <= AGREEMENT_TOL,
    })
}

/// All measures, with the closed-form classical correlation.
pub fn report(state: &TwoSiteState) -> CorrelationReport {
    let mutual_information = mutual_information(state);
    let classical = classical_correlation_closed(state);
    let conc = concurrence(state);
    CorrelationReport {
        mutual_information,
        classical,
        discord: clamp_small_negative(mutual_information - classical).max(0.0),
        concurrence: conc,
        eof: eof_from_concurrence(conc),
        optimal_angles: MeasurementAngles::along_x(),
    }
}

/// Like [`report`], but the angles come from the optimizer and the
/// comparison is returned alongside.
pub fn verified_report(
    state: &TwoSiteState,
    settings: &OptimizerSettings,
) -> Result<(CorrelationReport, MeasurementCheck)> {
    let check = verify_measurement(state, settings)?;
    let mut r = report(state);
    r.optimal_angles = check.optimized.angles;
    Ok((r, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::CorrelatorSet;
    use crate::state::build_state;
    use nalgebra::Vector4;

    fn mixed() -> TwoSiteState {
        build_state(CorrelatorSet::new(1, 0.0, 0.0, 0.0, 0.0)).unwrap()
    }

    fn down_down() -> TwoSiteState {
        build_state(CorrelatorSet::new(1, -1.0, 0.0, 0.0, 1.0)).unwrap()
    }

    fn pure(psi: Vector4<C64>) -> TwoSiteState {
        let psi = psi / c(psi.norm(), 0.0);
        TwoSiteState::from_matrix(psi * psi.adjoint(), 1).unwrap()
    }

    fn bell() -> TwoSiteState {
        pure(Vector4::new(
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ))
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.2) - binary_entropy(0.8)).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_examples() {
        assert!(mutual_information(&mixed()).abs() < 1e-15);
        assert!(mutual_information(&down_down()).abs() < 1e-15);
        assert!((mutual_information(&bell()) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn conditional_entropy_examples() {
        let angles = [
            MeasurementAngles::along_x(),
            MeasurementAngles::new(0.3, 1.1).unwrap(),
            MeasurementAngles::new(0.0, 0.0).unwrap(),
        ];
        for m in &angles {
            assert!((conditional_entropy_measured(&mixed(), m) - 1.0).abs() < 1e-14);
            assert!(conditional_entropy_measured(&down_down(), m).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_examples() {
        assert!(classical_correlation_closed(&mixed()).abs() < 1e-15);
        assert!(classical_correlation_closed(&down_down()).abs() < 1e-15);
        assert!((classical_correlation_closed(&bell()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn optimizer_examples() {
        let s = OptimizerSettings::default();
        let flat = classical_correlation_optimized(&mixed(), &s).unwrap();
        assert!(flat.value.abs() < 1e-14);
        assert!(!flat.unique);
        assert_eq!(
            flat.angles,
            MeasurementAngles {
                theta: 0.0,
                phi: 0.0
            }
        );

        let b = classical_correlation_optimized(&bell(), &s).unwrap();
        assert!((b.value - 1.0).abs() < 1e-10);

        let coarse = OptimizerSettings {
            n_theta: 4,
            ..OptimizerSettings::default()
        };
        assert!(classical_correlation_optimized(&bell(), &coarse).is_err());
    }

    #[test]
    fn discord_examples() {
        assert!(quantum_discord(&mixed()).abs() < 1e-15);
        assert!(quantum_discord(&down_down()).abs() < 1e-15);
        assert!((quantum_discord(&bell()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&bell()) - 1.0).abs() < 1e-10);
        assert!(concurrence(&mixed()).abs() < 1e-15);
        let product = pure(Vector4::new(
            c(0.6, 0.0),
            c(0.0, 0.8),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ));
        assert!(concurrence(&product) < 1e-10);
        // |psi> = (|u> + i|d>) x (0.3|u> + |d>) is a product with complex entries
        let a = [c(1.0, 0.0), c(0.0, 1.0)];
        let b = [c(0.3, 0.0), c(1.0, -0.2)];
        let prod = Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]);
        assert!(concurrence(&pure(prod)) < 1e-10);
    }

    #[test]
    fn eof_examples() {
        assert!((eof_from_concurrence(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(eof_from_concurrence(0.0), 0.0);
        // independent evaluation with natural logs
        let x: f64 = (1.0 + (0.75f64).sqrt()) / 2.0;
        let h = -(x * x.ln() + (1.0 - x) * (1.0 - x).ln()) / 2f64.ln();
        assert!((eof_from_concurrence(0.5) - h).abs() < 1e-14);
        assert!((h - 0.35458).abs() < 1e-5);
    }

    #[test]
    fn report_examples() {
        let zero = |r: &CorrelationReport| {
            [
                r.mutual_information,
                r.classical,
                r.discord,
                r.concurrence,
                r.eof,
            ]
            .iter()
            .all(|v| v.abs() < 1e-12)
        };
        assert!(zero(&report(&mixed())));
        assert!(zero(&report(&down_down())));
        let r = report(&bell());
        for (got, want) in [
            (r.mutual_information, 2.0),
            (r.classical, 1.0),
            (r.discord, 1.0),
            (r.concurrence, 1.0),
            (r.eof, 1.0),
        ] {
            assert!((got - want).abs() < 1e-10, "{r:?}");
        }
        assert_eq!(r.optimal_angles, MeasurementAngles::along_x());
    }

    #[test]
    fn pure_states_split_evenly() {
        for a in [0.1, 0.4, 0.7, 1.0, 1.3] {
            let (s, co) = f64::sin_cos(a);
            let st = pure(Vector4::new(
                c(co, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(s, 0.0),
            ));
            let r = report(&st);
            let half = r.mutual_information / 2.0;
            assert!((r.classical - half).abs() < 1e-8, "{a}: {r:?}");
            assert!((r.discord - half).abs() < 1e-8);
            assert!((r.eof - half).abs() < 1e-8);
            let opt = classical_correlation_optimized(&st, &OptimizerSettings::default()).unwrap();
            assert!((opt.value - half).abs() < 1e-8);
        }
    }

    #[test]
    fn measured_side_is_immaterial_for_chain_states() {
        let st = build_state(CorrelatorSet::new(2, -0.4, 0.25, 0.1, 0.2)).unwrap();
        for (t, p) in [(0.2, 0.0), (1.0, 2.0), (PI / 2.0, 0.0), (2.5, 5.0)] {
            let m = MeasurementAngles::new(t, p).unwrap();
            let b = conditional_entropy_on(&st, &m, MeasuredSite::Second);
            let a = conditional_entropy_on(&st, &m, MeasuredSite::First);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn measurement_along_x_gives_closed_form_entropy() {
        let grid = [-0.6, -0.2, 0.0, 0.3];
        for &sz in &grid {
            for &sxx in &[0.0, 0.1, 0.3] {
                for &syy in &[-0.1, 0.0, 0.05] {
                    let cs = CorrelatorSet::new(1, sz, sxx, syy, sz * sz);
                    let Ok(st) = build_state(cs) else { continue };
                    let direct = conditional_entropy_measured(&st, &MeasurementAngles::along_x());
                    let p2 = 0.5 * (1.0 + sxx.hypot(sz));
                    assert!((direct - binary_entropy(p2)).abs() < 1e-12);
                }
            }
        }
    }
}
