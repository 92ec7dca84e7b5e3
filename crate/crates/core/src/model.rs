//! Chain parameters and the complex dipole-dipole rates of the effective
//! non-Hermitian Hamiltonian.
//!
//! Rates and energies are dimensionless, measured in units of `gamma0`.
//! The bare frequency `omega0` only shifts spectra, so every spectral
//! variable in this crate is the offset `omega - omega0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interaction strength above which the strong-interaction limit forms are used.
pub const STRONG_THRESHOLD: f64 = 1e3;

/// Below this `xi` the real part of `B_x` is taken from its Taylor series.
const SMALL_XI: f64 = 1e-2;

/// Physical configuration of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    /// Atom count `M = N + 1`, odd.
    pub m: usize,
    /// Ratio of the atomic wavelength to the lattice constant.
    pub lambda_over_a: f64,
    /// Dipole angle against the chain axis, radians.
    pub theta: f64,
    /// Bare decay rate; sets the unit of all rates.
    #[serde(default = "one")]
    pub gamma0: f64,
    /// Nearest-neighbour interaction in units of `gamma0`.
    #[serde(default)]
    pub u: f64,
}

fn one() -> f64 {
    1.0
}

/// Interaction regime derived from `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonInteracting,
    Finite,
    Strong,
}

impl ChainParams {
    pub fn new(m: usize, lambda_over_a: f64, theta: f64, u: f64) -> Result<Self> {
        let p = ChainParams { m, lambda_over_a, theta, gamma0: 1.0, u };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 3 || self.m % 2 == 0 {
            return Err(Error::InvalidParameter(format!("M = {} must be odd and >= 3", self.m)));
        }
        if !(self.lambda_over_a > 0.0) || !self.lambda_over_a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_over_a = {} must be positive",
                self.lambda_over_a
            )));
        }
        if !(0.0..=PI / 2.0 + 1e-12).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta = {} outside [0, pi/2]", self.theta)));
        }
        if !(self.gamma0 > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma0 = {} must be positive", self.gamma0)));
        }
        if !(self.u >= 0.0) || !self.u.is_finite() {
            return Err(Error::InvalidParameter(format!("U = {} must be finite and >= 0", self.u)));
        }
        Ok(())
    }

    /// `N = M - 1`.
    pub fn n(&self) -> usize {
        self.m - 1
    }

    /// Half the relative-coordinate range, `N/2`.
    pub fn half_n(&self) -> usize {
        (self.m - 1) / 2
    }

    pub fn regime(&self) -> Regime {
        if self.u == 0.0 {
            Regime::NonInteracting
        } else if self.u >= STRONG_THRESHOLD {
            Regime::Strong
        } else {
            Regime::Finite
        }
    }

    /// `k_at * a = 2 pi / (lambda/a)`.
    pub fn k_at_a(&self) -> f64 {
        2.0 * PI / self.lambda_over_a
    }

    pub fn with_m(&self, m: usize) -> Self {
        ChainParams { m, ..*self }
    }

    pub fn with_u(&self, u: f64) -> Self {
        ChainParams { u, ..*self }
    }

    pub fn with_lambda(&self, lambda_over_a: f64) -> Self {
        ChainParams { lambda_over_a, ..*self }
    }

    /// Nearest-neighbour rate `Gamma_1 / gamma0`.
    pub fn gamma1(&self) -> Complex64 {
        rate(self, 1)
    }
}

/// On-site rate `Gamma_0 / gamma0 = 1 - 2i/pi`.
pub fn gamma_zero() -> Complex64 {
    Complex64::new(1.0, -2.0 / PI)
}

/// `Gamma_x / gamma0` for a site separation `x`.
pub fn coupling_rate(params: &ChainParams, x: i64) -> Result<Complex64> {
    if x < 0 {
        return Err(Error::InvalidArgument(format!("site separation {x} < 0")));
    }
    Ok(rate(params, x as u64))
}

fn rate(params: &ChainParams, x: u64) -> Complex64 {
    if x == 0 {
        return gamma_zero();
    }
    let xi = 2.0 * PI * x as f64 / params.lambda_over_a;
    let (s, c) = params.theta.sin_cos();
    a_term(xi) * (s * s) + b_term(xi) * ((3.0 * c * c - 1.0) / 2.0)
}

/// `A_x = -3i e^{i xi} / (2 xi)`.
pub fn a_term(xi: f64) -> Complex64 {
    Complex64::new(0.0, -3.0) * Complex64::from_polar(1.0, xi) / (2.0 * xi)
}

/// `B_x = 3/xi^3 [sin xi - xi cos xi - i (cos xi + xi sin xi)]`.
pub fn b_term(xi: f64) -> Complex64 {
    let (s, c) = xi.sin_cos();
    let re = if xi < SMALL_XI {
        let x2 = xi * xi;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15120.0
    } else {
        3.0 * (s - xi * c) / (xi * xi * xi)
    };
    let im = -3.0 * (c + xi * s) / (xi * xi * xi);
    Complex64::new(re, im)
}

/// Single-dipole far-field factor `1 - (d.r)^2`. The chain lies on the z axis
/// and the dipole sits in the x-z plane at angle `theta` from it.
///
/// `r_hat` need not be exactly normalised; it is normalised here.
pub fn dipole_pattern(r_hat: [f64; 3], theta: f64) -> f64 {
    let norm = (r_hat[0] * r_hat[0] + r_hat[1] * r_hat[1] + r_hat[2] * r_hat[2]).sqrt();
    let d = [theta.sin(), 0.0, theta.cos()];
    let dot = (d[0] * r_hat[0] + d[1] * r_hat[1] + d[2] * r_hat[2]) / norm;
    (1.0 - dot * dot).max(0.0)
}

/// Unit vector for elevation `beta` and azimuth `phi`.
pub fn direction(beta: f64, phi: f64) -> [f64; 3] {
    [beta.cos() * phi.cos(), beta.cos() * phi.sin(), beta.sin()]
}
