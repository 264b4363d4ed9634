//! Thermodynamic-limit magnetization and two-point functions of the XY chain.
//!
//! Everything is built from two Brillouin-zone integrals: the transverse
//! magnetization and the contraction `G_n`. The `xx` and `yy` correlators are
//! `n x n` Toeplitz determinants of `G`, and `zz` is `<sz>^2 - G_n G_{-n}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::linalg::lu_determinant;
use crate::params::{ModelParams, QuadratureConfig, Temperature};
use crate::quadrature::integrate;

/// Largest separation for which Toeplitz determinants are evaluated.
pub const MAX_SEPARATION: usize = 50;

/// Single-site magnetization and the three diagonal two-point functions at
/// separation `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorSet {
    pub n: usize,
    pub sz: f64,
    pub sxx: f64,
    pub syy: f64,
    pub szz: f64,
}

impl CorrelatorSet {
    pub fn new(n: usize, sz: f64, sxx: f64, syy: f64, szz: f64) -> Self {
        CorrelatorSet {
            n,
            sz,
            sxx,
            syy,
            szz,
        }
    }

    pub fn max_abs_diff(&self, other: &CorrelatorSet) -> f64 {
        [
            self.sz - other.sz,
            self.sxx - other.sxx,
            self.syy - other.syy,
            self.szz - other.szz,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Quasiparticle energy `omega_phi`.
pub fn dispersion(phi: f64, params: &ModelParams) -> f64 {
    let anisotropic = params.gamma() * params.lambda() * phi.sin();
    let field = 1.0 + params.lambda() * phi.cos();
    anisotropic.hypot(field) / 2.0
}

/// `tanh(omega / kT)`, with the exact zero-temperature limit.
pub fn thermal_factor(omega: f64, params: &ModelParams) -> f64 {
    match params.temperature() {
        Temperature::Zero => {
            if omega > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Temperature::Finite(kt) => (omega / kt).tanh(),
    }
}

// tanh(omega/kT) / (2 pi omega), continued to omega = 0.
fn spectral_weight(phi: f64, params: &ModelParams) -> f64 {
    let omega = dispersion(phi, params);
    if omega > 0.0 {
        thermal_factor(omega, params) / (2.0 * PI * omega)
    } else {
        match params.temperature() {
            Temperature::Zero => 0.0,
            Temperature::Finite(kt) => 1.0 / (2.0 * PI * kt),
        }
    }
}

// For the XX chain above the saturation field the zero-temperature
// integrands jump where 1 + lambda cos(phi) changes sign.
fn breakpoints(params: &ModelParams) -> Vec<f64> {
    if params.gamma() == 0.0 && params.lambda() > 1.0 {
        vec![(-1.0 / params.lambda()).acos()]
    } else {
        Vec::new()
    }
}

fn magnetization_uncached(params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    let lambda = params.lambda();
    let integrand = |phi: f64| (1.0 + lambda * phi.cos()) * spectral_weight(phi, params);
    let r = integrate(integrand, 0.0, PI, &breakpoints(params), quad)?;
    Ok(-r.value)
}

fn g_uncached(n: i64, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    let lambda = params.lambda();
    let gl = params.gamma() * lambda;
    let nf = n as f64;
    let integrand = |phi: f64| {
        let bracket =
            (nf * phi).cos() * (1.0 + lambda * phi.cos()) - gl * (nf * phi).sin() * phi.sin();
        spectral_weight(phi, params) * bracket
    };
    Ok(integrate(integrand, 0.0, PI, &breakpoints(params), quad)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Quantity {
    Magnetization,
    G(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    quantity: Quantity,
    gamma: u64,
    lambda: u64,
    kt: u64,
    abs_tol: u64,
    rel_tol: u64,
    max_subdivisions: usize,
}

impl CacheKey {
    fn new(quantity: Quantity, p: &ModelParams, q: &QuadratureConfig) -> Self {
        CacheKey {
            quantity,
            gamma: p.gamma().to_bits(),
            lambda: p.lambda().to_bits(),
            kt: p.kt().to_bits(),
            abs_tol: q.abs_tol.to_bits(),
            rel_tol: q.rel_tol.to_bits(),
            max_subdivisions: q.max_subdivisions,
        }
    }
}

/// Memo table for `G_n` and the magnetization, shareable across threads.
///
/// Values are computed outside the lock; concurrent misses on the same key
/// both integrate and the last insert wins, which is harmless because the
/// integrals are deterministic.
#[derive(Debug, Default)]
pub struct GCache {
    entries: Mutex<HashMap<CacheKey, f64>>,
}

impl GCache {
    pub fn new() -> Self {
        GCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(&self, key: CacheKey, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(v) = self.entries.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = compute()?;
        self.entries.lock().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn magnetization(&self, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
        let key = CacheKey::new(Quantity::Magnetization, params, quad);
        self.get_or_compute(key, || magnetization_uncached(params, quad))
    }

    pub fn g(&self, n: i64, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
        let key = CacheKey::new(Quantity::G(n), params, quad);
        self.get_or_compute(key, || g_uncached(n, params, quad))
    }
}

/// Transverse magnetization `<sigma^z>`.
pub fn transverse_magnetization(params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    magnetization_uncached(params, quad)
}

/// The contraction `G_n` for any integer `n`.
pub fn g_function(n: i64, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    g_uncached(n, params, quad)
}

fn check_separation(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidDistance { n })
    } else if n > MAX_SEPARATION {
        Err(Error::DistanceTooLarge {
            n,
            cap: MAX_SEPARATION,
        })
    } else {
        Ok(())
    }
}

// det T with T[i][j] = G_{offset + i - j}
fn toeplitz_determinant(
    n: usize,
    offset: i64,
    params: &ModelParams,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<f64> {
    let mut m = Vec::with_capacity(n * n);
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            m.push(cache.g(offset + i - j, params, quad)?);
        }
    }
    Ok(lu_determinant(m, n))
}

pub fn correlator_xx_cached(
    n: usize,
    params: &ModelParams,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<f64> {
    check_separation(n)?;
    toeplitz_determinant(n, -1, params, quad, cache)
}

pub fn correlator_yy_cached(
    n: usize,
    params: &ModelParams,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<f64> {
    check_separation(n)?;
    toeplitz_determinant(n, 1, params, quad, cache)
}

pub fn correlator_zz_cached(
    n: usize,
    params: &ModelParams,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDistance { n });
    }
    let sz = cache.magnetization(params, quad)?;
    let k = n as i64;
    Ok(sz * sz - cache.g(k, params, quad)? * cache.g(-k, params, quad)?)
}

/// `<sigma_0^x sigma_n^x>`.
pub fn correlator_xx(n: usize, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    correlator_xx_cached(n, params, quad, &GCache::new())
}

/// `<sigma_0^y sigma_n^y>`.
pub fn correlator_yy(n: usize, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    correlator_yy_cached(n, params, quad, &GCache::new())
}

/// `<sigma_0^z sigma_n^z>`.
pub fn correlator_zz(n: usize, params: &ModelParams, quad: &QuadratureConfig) -> Result<f64> {
    correlator_zz_cached(n, params, quad, &GCache::new())
}

/// All correlators at separation `n`, sharing `G_k` for `k` in `[-n, n]`.
pub fn correlator_set_cached(
    n: usize,
    params: &ModelParams,
    quad: &QuadratureConfig,
    cache: &GCache,
) -> Result<CorrelatorSet> {
    check_separation(n)?;
    Ok(CorrelatorSet {
        n,
        sz: cache.magnetization(params, quad)?,
        sxx: correlator_xx_cached(n, params, quad, cache)?,
        syy: correlator_yy_cached(n, params, quad, cache)?,
        szz: correlator_zz_cached(n, params, quad, cache)?,
    })
}

pub fn correlator_set(
    n: usize,
    params: &ModelParams,
    quad: &QuadratureConfig,
) -> Result<CorrelatorSet> {
    correlator_set_cached(n, params, quad, &GCache::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(gamma: f64, lambda: f64, kt: f64) -> ModelParams {
        ModelParams::new(gamma, lambda, kt).unwrap()
    }

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    // At gamma = lambda = 1, kT = 0 the dispersion is cos(phi/2) and the
    // G integrand collapses to cos((n + 1/2) phi) / pi.
    fn g_critical_ising(n: i64) -> f64 {
        2.0 * if n % 2 == 0 { 1.0 } else { -1.0 } / (PI * (2 * n + 1) as f64)
    }

    #[test]
    fn dispersion_examples() {
        assert!((dispersion(0.0, &p(1.0, 1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(dispersion(PI, &p(0.3, 1.0, 0.0)).abs() < 1e-15);
        assert!((dispersion(PI / 2.0, &p(1.0, 1.0, 0.0)) - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_factor_examples() {
        assert_eq!(thermal_factor(0.5, &p(0.5, 1.0, 0.0)), 1.0);
        assert_eq!(thermal_factor(0.0, &p(0.5, 1.0, 0.0)), 0.0);
        assert!(thermal_factor(0.5, &p(0.5, 1.0, 1e12)).abs() < 1e-12);
        assert!((thermal_factor(1.0, &p(0.5, 1.0, 1.0)) - 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn magnetization_examples() {
        for gamma in [0.0, 0.4, 1.0] {
            let sz = transverse_magnetization(&p(gamma, 0.0, 1.0), &quad()).unwrap();
            assert!((sz + 0.5f64.tanh()).abs() < 1e-12);
        }
        let sz = transverse_magnetization(&p(1.0, 1.0, 0.0), &quad()).unwrap();
        assert!((sz + 2.0 / PI).abs() < 1e-10);
        let sz = transverse_magnetization(&p(0.7, 1.3, 1e12), &quad()).unwrap();
        assert!(sz.abs() < 1e-10);
    }

    #[test]
    fn g_examples() {
        let free = p(0.6, 0.0, 1.0);
        assert!((g_function(0, &free, &quad()).unwrap() - 0.5f64.tanh()).abs() < 1e-12);
        for n in [-3, -1, 1, 2, 5] {
            assert!(g_function(n, &free, &quad()).unwrap().abs() < 1e-12);
        }
        let crit = p(1.0, 1.0, 0.0);
        for n in -8..=8 {
            let g = g_function(n, &crit, &quad()).unwrap();
            assert!((g - g_critical_ising(n)).abs() < 1e-10, "n={n}: {g}");
        }
        let hot = p(0.3, 0.8, 1e12);
        assert!(g_function(2, &hot, &quad()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn toeplitz_examples() {
        let crit = p(1.0, 1.0, 0.0);
        let xx1 = correlator_xx(1, &crit, &quad()).unwrap();
        assert!((xx1 - 2.0 / PI).abs() < 1e-10);
        let xx2 = correlator_xx(2, &crit, &quad()).unwrap();
        assert!((xx2 - 16.0 / (3.0 * PI * PI)).abs() < 1e-10);
        let yy1 = correlator_yy(1, &crit, &quad()).unwrap();
        assert!((yy1 + 2.0 / (3.0 * PI)).abs() < 1e-10);
        let yy2 = correlator_yy(2, &crit, &quad()).unwrap();
        assert!((yy2 + 16.0 / (45.0 * PI * PI)).abs() < 1e-10);
        let zz1 = correlator_zz(1, &crit, &quad()).unwrap();
        assert!((zz1 - 16.0 / (3.0 * PI * PI)).abs() < 1e-10);

        for kt in [0.0, 0.5, 2.0] {
            let free = p(0.5, 0.0, kt);
            assert!(correlator_xx(3, &free, &quad()).unwrap().abs() < 1e-12);
            assert!(correlator_yy(2, &free, &quad()).unwrap().abs() < 1e-12);
        }
        let zz = correlator_zz(3, &p(0.5, 0.0, 1.0), &quad()).unwrap();
        assert!((zz - 0.5f64.tanh().powi(2)).abs() < 1e-12);
        assert!(correlator_zz(1, &p(0.5, 0.7, 1e12), &quad()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn separation_bounds() {
        let q = quad();
        let pt = p(0.5, 0.5, 1.0);
        assert!(matches!(
            correlator_xx(0, &pt, &q),
            Err(Error::InvalidDistance { .. })
        ));
        assert!(matches!(
            correlator_yy(51, &pt, &q),
            Err(Error::DistanceTooLarge { n: 51, cap: 50 })
        ));
        assert!(correlator_set(50, &pt, &q).is_ok());
    }

    #[test]
    fn correlator_set_examples() {
        let c = correlator_set(1, &p(0.5, 0.0, 0.0), &quad()).unwrap();
        assert!((c.sz + 1.0).abs() < 1e-12);
        assert!(c.sxx.abs() < 1e-12 && c.syy.abs() < 1e-12);
        assert!((c.szz - 1.0).abs() < 1e-12);

        let c = correlator_set(4, &p(0.5, 1.2, 1e12), &quad()).unwrap();
        assert!(
            c.sz.abs() < 1e-10 && c.sxx.abs() < 1e-10 && c.syy.abs() < 1e-10 && c.szz.abs() < 1e-10
        );

        let c = correlator_set(1, &p(1.0, 1.0, 0.0), &quad()).unwrap();
        let expected = CorrelatorSet::new(
            1,
            -2.0 / PI,
            2.0 / PI,
            -2.0 / (3.0 * PI),
            16.0 / (3.0 * PI * PI),
        );
        assert!(c.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn xx_chain_jump_is_split() {
        // gamma = 0, lambda > 1, kT = 0: integrand is sign(1 + lambda cos phi)/pi.
        let lambda: f64 = 1.7;
        let cut = (-1.0 / lambda).acos();
        let sz = transverse_magnetization(&p(0.0, lambda, 0.0), &quad()).unwrap();
        assert!((sz + (cut - (PI - cut)) / PI).abs() < 1e-13);
        let g1 = g_function(1, &p(0.0, lambda, 0.0), &quad()).unwrap();
        // integral of sign(.) cos(phi) / pi
        let exact = (2.0 * cut.sin()) / PI;
        assert!((g1 - exact).abs() < 1e-13);
    }

    #[test]
    fn cache_is_transparent() {
        let cache = GCache::new();
        let pt = p(0.3, 1.1, 0.2);
        let q = quad();
        let a = correlator_set_cached(3, &pt, &q, &cache).unwrap();
        let filled = cache.len();
        assert_eq!(filled, 1 + 7);
        let b = correlator_set_cached(3, &pt, &q, &cache).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), filled);
        assert_eq!(a, correlator_set(3, &pt, &q).unwrap());
    }
}
