//! Physical parameter points and integration settings.

use crate::error::{Error, Result};

/// Temperature of the chain. Zero temperature is kept symbolic so that
/// `beta = 1/kT` never has to be formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    Finite(f64),
}

impl Temperature {
    pub fn from_kt(kt: f64) -> Result<Self> {
        if kt == 0.0 {
            Ok(Temperature::Zero)
        } else if kt.is_finite() && kt > 0.0 {
            Ok(Temperature::Finite(kt))
        } else {
            Err(Error::InvalidParameter(format!(
                "kT must be finite and >= 0, got {kt}"
            )))
        }
    }

    pub fn kt(self) -> f64 {
        match self {
            Temperature::Zero => 0.0,
            Temperature::Finite(kt) => kt,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Temperature::Zero)
    }
}

/// A point `(gamma, lambda, kT)` of the XY chain phase diagram.
///
/// `gamma` is the anisotropy (0 is the XX chain, 1 the transverse Ising
/// chain) and `lambda` the inverse field strength, critical at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    gamma: f64,
    lambda: f64,
    temperature: Temperature,
}

impl ModelParams {
    pub fn new(gamma: f64, lambda: f64, kt: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(ModelParams {
            gamma,
            lambda,
            temperature: Temperature::from_kt(kt)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kt(&self) -> f64 {
        self.temperature.kt()
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        ModelParams::new(self.gamma, lambda, self.kt())
    }
}

/// Settings for the adaptive quadrature behind every correlator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = QuadratureConfig {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same absolute and relative tolerance, default subdivision cap.
    pub fn with_tolerance(tol: f64) -> Result<Self> {
        QuadratureConfig::new(tol, tol, QuadratureConfig::default().max_subdivisions)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be > 0, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be >= 1".into(),
            ));
        }
        Ok(())
    }
}
