//! Parameter sweeps, lambda-derivatives and critical-point location.
//!
//! Grid points are independent; they are evaluated on the current rayon pool
//! and assembled in key order, so output does not depend on the pool size.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlators::{correlator_set_cached, CorrelatorSet, GCache};
use crate::error::{Error, Result};
use crate::measures::{report, CorrelationReport};
use crate::params::{ModelParams, QuadratureConfig};
use crate::state::build_state;

pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-3;
/// Peaks below this multiple of the window median are flagged low-contrast.
pub const PROMINENCE_THRESHOLD: f64 = 2.0;

/// Evenly spaced lambda grid including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl LambdaRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let r = LambdaRange { min, max, steps };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min < 0.0 || self.min > self.max
        {
            return Err(Error::InvalidParameter(format!(
                "lambda range [{}, {}] must satisfy 0 <= min <= max",
                self.min, self.max
            )));
        }
        match self.steps {
            0 => Err(Error::InvalidParameter(
                "lambda range is empty (steps = 0)".into(),
            )),
            1 if self.min != self.max => Err(Error::InvalidParameter(
                "a single-step lambda range needs min == max".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / last
                }
            })
            .collect()
    }

    /// Grid spacing, or `None` for a single point.
    pub fn spacing(&self) -> Option<f64> {
        (self.steps > 1).then(|| (self.max - self.min) / (self.steps - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub gamma_values: Vec<f64>,
    pub lambda_range: LambdaRange,
    pub kt_values: Vec<f64>,
    pub distances: Vec<usize>,
    pub derivative_step: f64,
}

fn sorted_unique(mut v: Vec<f64>, name: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidParameter(format!("no {name} values given")));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} value {bad} is not finite"
        )));
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    Ok(v)
}

impl SweepSpec {
    /// Normalizes value lists (sorted, duplicates removed) and checks the
    /// grid invariants.
    pub fn new(
        gamma_values: Vec<f64>,
        lambda_range: LambdaRange,
        kt_values: Vec<f64>,
        distances: Vec<usize>,
        derivative_step: f64,
    ) -> Result<Self> {
        lambda_range.validate()?;
        let gamma_values = sorted_unique(gamma_values, "gamma")?;
        let kt_values = sorted_unique(kt_values, "kT")?;
        let mut distances = distances;
        if distances.is_empty() {
            return Err(Error::InvalidParameter("no separations given".into()));
        }
        distances.sort_unstable();
        distances.dedup();
        if !(derivative_step > 0.0 && derivative_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "derivative step {derivative_step} must be positive"
            )));
        }
        if let Some(spacing) = lambda_range.spacing() {
            if derivative_step >= spacing {
                return Err(Error::StepTooLarge {
                    step: derivative_step,
                    spacing,
                });
            }
        }
        // surface parameter-range errors before any work starts
        for &g in &gamma_values {
            for &kt in &kt_values {
                ModelParams::new(g, lambda_range.min, kt)?;
            }
        }
        Ok(SweepSpec {
            gamma_values,
            lambda_range,
            kt_values,
            distances,
            derivative_step,
        })
    }

    /// All grid points in (gamma, kT, n, lambda) order.
    pub fn points(&self) -> Result<Vec<(ModelParams, usize)>> {
        let lambdas = self.lambda_range.values();
        let mut out = Vec::with_capacity(
            self.gamma_values.len() * self.kt_values.len() * self.distances.len() * lambdas.len(),
        );
        for &g in &self.gamma_values {
            for &kt in &self.kt_values {
                for &n in &self.distances {
                    for &l in &lambdas {
                        out.push((ModelParams::new(g, l, kt)?, n));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: ModelParams,
    pub n: usize,
    pub correlators: CorrelatorSet,
    pub report: CorrelationReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<SweepRow> {
        self.rows
    }
}

fn tag(params: &ModelParams, n: usize, e: Error) -> Error {
    Error::AtPoint {
        gamma: params.gamma(),
        lambda: params.lambda(),
        kt: params.kt(),
        n,
        source: Box::new(e),
    }
}

/// Correlators and measures at one point.
pub fn evaluate_point(
    params: &ModelParams,
    n: usize,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<(CorrelatorSet, CorrelationReport)> {
    let inner = || -> Result<_> {
        let cs = correlator_set_cached(n, params, quad, cache)?;
        let st = build_state(cs)?;
        Ok((cs, report(&st)))
    };
    inner().map_err(|e| tag(params, n, e))
}

pub fn sweep(spec: &SweepSpec, quad: &QuadratureConfig) -> Result<SweepTable> {
    quad.validate()?;
    let points = spec.points()?;
    let cache = GCache::new();
    let results: Vec<Result<SweepRow>> = points
        .par_iter()
        .map(|(params, n)| {
            evaluate_point(params, *n, quad, &cache).map(|(correlators, report)| SweepRow {
                params: *params,
                n: *n,
                correlators,
                report,
            })
        })
        .collect();
    // first failure in key order, so the reported point is deterministic
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Discord,
    Classical,
    Mutual,
}

impl Quantity {
    pub fn of(self, r: &CorrelationReport) -> f64 {
        match self {
            Quantity::Discord => r.discord,
            Quantity::Classical => r.classical,
            Quantity::Mutual => r.mutual_information,
        }
    }
}

/// Central difference of order 1 or 2 at `lambda`, improved by one
/// Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn derivative_wrt_lambda<F>(f: F, lambda: f64, order: u8, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "derivative step {step} must be positive"
        )));
    }
    if lambda - step < 0.0 {
        return Err(Error::StencilOutOfDomain { lambda, step });
    }
    let central = |h: f64| -> Result<f64> {
        match order {
            1 => Ok((f(lambda + h)? - f(lambda - h)?) / (2.0 * h)),
            2 => Ok((f(lambda + h)? - 2.0 * f(lambda)? + f(lambda - h)?) / (h * h)),
            _ => Err(Error::InvalidParameter(format!(
                "derivative order {order} must be 1 or 2"
            ))),
        }
    };
    let coarse = central(step)?;
    let fine = central(step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `lambda -> quantity` at fixed `(gamma, kT, n)`.
pub fn quantity_fn<'a>(
    quantity: Quantity,
    gamma: f64,
    kt: f64,
    n: usize,
    quad: &'a QuadratureConfig,
    cache: &'a GCache,
) -> impl Fn(f64) -> Result<f64> + Sync + 'a {
    move |lambda| {
        let p = ModelParams::new(gamma, lambda, kt)?;
        evaluate_point(&p, n, quad, cache).map(|(_, r)| quantity.of(&r))
    }
}

/// Derivatives at every lambda of a grid, from fresh evaluations.
pub fn derivative_series<F>(f: F, lambdas: &[f64], order: u8, step: f64) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let spacing = lambdas
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    if step >= spacing {
        return Err(Error::StepTooLarge { step, spacing });
    }
    let out: Vec<Result<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| derivative_wrt_lambda(&f, l, order, step).map(|d| (l, d)))
        .collect();
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSettings {
    /// Points of the coarse grid across the window.
    pub grid_points: usize,
    /// Width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            grid_points: 41,
            refine_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakEstimate {
    pub lambda_star: f64,
    /// `|derivative|` at `lambda_star`.
    pub peak: f64,
    /// Peak over the median of `|derivative|` on the grid.
    pub prominence: f64,
    pub low_contrast: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeSample {
    pub lambda: f64,
    pub d_discord: f64,
    pub d_classical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalScan {
    pub gamma: f64,
    pub kt: f64,
    pub n: usize,
    pub step: f64,
    pub series: Vec<DerivativeSample>,
    pub discord: PeakEstimate,
    pub classical: PeakEstimate,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

// Golden-section maximization of g on [a, b].
fn golden_maximize<G: Fn(f64) -> Result<f64>>(
    g: G,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

fn refine_peak<G>(
    g: G,
    grid: &[f64],
    values: &[f64],
    settings: &ScanSettings,
) -> Result<PeakEstimate>
where
    G: Fn(f64) -> Result<f64>,
{
    // first index of the maximum keeps ties deterministic
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut lambda_star, mut peak) = golden_maximize(&g, lo, hi, settings.refine_tol)?;
    if values[best] > peak {
        lambda_star = grid[best];
        peak = values[best];
    }
    let med = median(values.to_vec());
    let prominence = if med > 0.0 { peak / med } else { f64::INFINITY };
    Ok(PeakEstimate {
        lambda_star,
        peak,
        prominence,
        low_contrast: prominence < PROMINENCE_THRESHOLD,
    })
}

/// Locates the maxima of `|dD/dlambda|` and `|dC/dlambda|` inside `window`.
pub fn locate_critical_point(
    gamma: f64,
    kt: f64,
    n: usize,
    window: (f64, f64),
    step: f64,
    quad: &QuadratureConfig,
    settings: &ScanSettings,
) -> Result<CriticalScan> {
    let (lo, hi) = window;
    let points = settings.grid_points.max(3);
    if !(lo < 1.0 && hi > 1.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::WindowTooNarrow { lo, hi });
    }
    let spacing = (hi - lo) / (points - 1) as f64;
    if step >= spacing {
        return Err(Error::StepTooLarge { step, spacing });
    }
    if lo - step < 0.0 {
        return Err(Error::StencilOutOfDomain { lambda: lo, step });
    }
    ModelParams::new(gamma, lo, kt)?;

    let cache = GCache::new();
    let grid = LambdaRange::new(lo, hi, points)?.values();
    let discord = quantity_fn(Quantity::Discord, gamma, kt, n, quad, &cache);
    let classical = quantity_fn(Quantity::Classical, gamma, kt, n, quad, &cache);

    let samples: Vec<Result<DerivativeSample>> = grid
        .par_iter()
        .map(|&l| {
            Ok(DerivativeSample {
                lambda: l,
                d_discord: derivative_wrt_lambda(&discord, l, 1, step)?,
                d_classical: derivative_wrt_lambda(&classical, l, 1, step)?,
            })
        })
        .collect();
    let series = samples.into_iter().collect::<Result<Vec<_>>>()?;

    let abs_d: Vec<f64> = series.iter().map(|s| s.d_discord.abs()).collect();
    let abs_c: Vec<f64> = series.iter().map(|s| s.d_classical.abs()).collect();
    let d_peak = refine_peak(
        |l| derivative_wrt_lambda(&discord, l, 1, step).map(f64::abs),
        &grid,
        &abs_d,
        settings,
    )?;
    let c_peak = refine_peak(
        |l| derivative_wrt_lambda(&classical, l, 1, step).map(f64::abs),
        &grid,
        &abs_c,
        settings,
    )?;

    Ok(CriticalScan {
        gamma,
        kt,
        n,
        step,
        series,
        discord: d_peak,
        classical: c_peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn lambda_range_values() {
        let r = LambdaRange::new(0.0, 2.0, 5).unwrap();
        assert_eq!(r.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(r.spacing(), Some(0.5));
        assert_eq!(LambdaRange::new(0.3, 0.3, 1).unwrap().values(), vec![0.3]);
        assert!(LambdaRange::new(0.0, 1.0, 0).is_err());
        assert!(LambdaRange::new(0.0, 1.0, 1).is_err());
        assert!(LambdaRange::new(1.0, 0.0, 3).is_err());
        assert!(LambdaRange::new(-0.1, 1.0, 3).is_err());
    }

    #[test]
    fn spec_normalizes_and_validates() {
        let r = LambdaRange::new(0.0, 1.0, 11).unwrap();
        let s =
            SweepSpec::new(vec![1.0, 0.0, 1.0], r, vec![0.5, 0.0], vec![2, 1, 2], 1e-3).unwrap();
        assert_eq!(s.gamma_values, vec![0.0, 1.0]);
        assert_eq!(s.kt_values, vec![0.0, 0.5]);
        assert_eq!(s.distances, vec![1, 2]);
        let err = SweepSpec::new(vec![1.0], r, vec![0.0], vec![1], 0.1).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
        assert!(SweepSpec::new(vec![1.5], r, vec![0.0], vec![1], 1e-3).is_err());
        assert!(SweepSpec::new(vec![1.0], r, vec![], vec![1], 1e-3).is_err());
    }

    #[test]
    fn single_point_sweep() {
        let r = LambdaRange::new(0.0, 0.0, 1).unwrap();
        let s = SweepSpec::new(vec![1.0], r, vec![0.0], vec![1], 1e-3).unwrap();
        let t = sweep(&s, &quad()).unwrap();
        assert_eq!(t.len(), 1);
        let rep = t.rows()[0].report;
        assert!(rep.discord.abs() < 1e-12);
        assert!(rep.classical.abs() < 1e-12);
        assert!(rep.mutual_information.abs() < 1e-12);
    }

    #[test]
    fn hot_sweep_washes_out() {
        let r = LambdaRange::new(0.5, 1.5, 3).unwrap();
        let s = SweepSpec::new(vec![0.0, 1.0], r, vec![100.0], vec![1, 2], 1e-3).unwrap();
        let t = sweep(&s, &quad()).unwrap();
        assert_eq!(t.len(), 12);
        for row in t.rows() {
            let r = row.report;
            for v in [
                r.mutual_information,
                r.classical,
                r.discord,
                r.concurrence,
                r.eof,
            ] {
                assert!(v.abs() < 1e-3);
            }
        }
    }

    #[test]
    fn rows_are_in_key_order() {
        let r = LambdaRange::new(0.2, 1.0, 3).unwrap();
        let s = SweepSpec::new(vec![1.0, 0.5], r, vec![1.0, 0.0], vec![2, 1], 1e-3).unwrap();
        let t = sweep(&s, &quad()).unwrap();
        let keys: Vec<(f64, f64, usize, f64)> = t
            .rows()
            .iter()
            .map(|r| (r.params.gamma(), r.params.kt(), r.n, r.params.lambda()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
        assert_eq!(t, sweep(&s, &quad()).unwrap());
    }

    #[test]
    fn errors_name_the_point() {
        let r = LambdaRange::new(0.5, 0.5, 1).unwrap();
        let s = SweepSpec::new(vec![1.0], r, vec![0.0], vec![60], 1e-4).unwrap();
        let err = sweep(&s, &quad()).unwrap_err();
        assert!(matches!(err, Error::AtPoint { n: 60, .. }));
        assert!(err.to_string().contains("lambda=0.5"));
    }

    #[test]
    fn derivative_of_quadratic() {
        let f = |l: f64| Ok(l * l);
        for l in [0.1, 0.7, 1.3] {
            assert!((derivative_wrt_lambda(f, l, 1, 1e-3).unwrap() - 2.0 * l).abs() < 1e-8);
            assert!((derivative_wrt_lambda(f, l, 2, 1e-3).unwrap() - 2.0).abs() < 1e-6);
        }
        assert!(matches!(
            derivative_wrt_lambda(f, 0.0, 1, 1e-3),
            Err(Error::StencilOutOfDomain { .. })
        ));
        assert!(derivative_wrt_lambda(f, 0.5, 3, 1e-3).is_err());
    }

    #[test]
    fn washed_out_derivative_is_flat() {
        let q = quad();
        let cache = GCache::new();
        let f = quantity_fn(Quantity::Discord, 1.0, 100.0, 1, &q, &cache);
        assert!(derivative_wrt_lambda(&f, 1.0, 1, 1e-3).unwrap().abs() < 1e-6);
    }

    #[test]
    fn series_rejects_coarse_step() {
        let f = |l: f64| Ok(l);
        let err = derivative_series(f, &[0.5, 0.51, 0.52], 1, 0.02).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
        let s = derivative_series(f, &[0.5, 0.6], 1, 1e-3).unwrap();
        assert!(s.iter().all(|&(_, d)| (d - 1.0).abs() < 1e-10));
    }

    #[test]
    fn window_must_straddle_one() {
        let s = ScanSettings::default();
        for w in [(1.0, 1.2), (0.8, 1.0), (1.1, 1.3)] {
            let err = locate_critical_point(1.0, 0.0, 1, w, 1e-3, &quad(), &s).unwrap_err();
            assert!(matches!(err, Error::WindowTooNarrow { .. }));
        }
    }

    #[test]
    fn ising_peak_at_critical_line() {
        let s = ScanSettings::default();
        let scan = locate_critical_point(1.0, 0.0, 4, (0.8, 1.2), 1e-3, &quad(), &s).unwrap();
        assert!(
            (scan.discord.lambda_star - 1.0).abs() <= 0.02,
            "{:?}",
            scan.discord
        );
        assert!(
            (scan.classical.lambda_star - 1.0).abs() <= 0.02,
            "{:?}",
            scan.classical
        );
        assert!(!scan.discord.low_contrast);
        assert_eq!(scan.series.len(), s.grid_points);
    }

    #[test]
    fn thermal_peak_is_broadened() {
        let s = ScanSettings::default();
        let scan = locate_critical_point(1.0, 1.0, 1, (0.8, 1.2), 1e-3, &quad(), &s).unwrap();
        assert!(scan.discord.lambda_star >= 0.8 && scan.discord.lambda_star <= 1.2);
        assert!(scan.discord.low_contrast, "{:?}", scan.discord);
    }
}
