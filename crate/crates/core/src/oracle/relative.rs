use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{hopping, TwoExcKind, TwoExcState, WaveIndex};
use crate::error::{Error, Result};
use crate::model::{gamma_zero, ChainParams};

pub const MIN_DIMENSION: usize = 16;

/// Non-dissipative relative-coordinate problem on `x = 1..=dimension` with
/// hard walls at `x = 0` and `x = dimension + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TridiagonalProblem {
    pub dimension: usize,
    pub hopping: f64,
    /// Interaction on site `x = 1`.
    pub impurity: f64,
    /// Constant diagonal shift.
    pub offset: f64,
}

impl TridiagonalProblem {
    /// Sector `K` of a chain with the collective Lamb shift as offset, so
    /// eigenvalues compare directly with `TwoExcState::re_energy` at
    /// vanishing real rates.
    pub fn for_sector(params: &ChainParams, k_cm: WaveIndex, dimension: usize) -> Self {
        TridiagonalProblem {
            dimension,
            hopping: hopping(params, k_cm),
            impurity: params.u,
            offset: gamma_zero().im,
        }
    }

    fn check(&self) -> Result<()> {
        if self.dimension < MIN_DIMENSION {
            return Err(Error::InvalidArgument(format!(
                "relative problem needs at least {MIN_DIMENSION} sites, got {}",
                self.dimension
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dimension;
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = self.offset;
            if i + 1 < n {
                h[(i, i + 1)] = self.hopping;
                h[(i + 1, i)] = self.hopping;
            }
        }
        h[(0, 0)] += self.impurity;
        h
    }

    /// Upper edge `offset + 2|t|` of the infinite-lattice band.
    pub fn band_top(&self) -> f64 {
        self.offset + 2.0 * self.hopping.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Amplitudes on `x = 1..=dimension`.
    pub vector: Vec<f64>,
}

/// Full spectrum in ascending order.
pub fn diagonalize_relative(problem: &TridiagonalProblem) -> Result<Vec<Eigenpair>> {
    problem.check()?;
    let eig = SymmetricEigen::new(problem.matrix());
    let mut out: Vec<Eigenpair> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &value)| Eigenpair { value, vector: eig.eigenvectors.column(i).iter().copied().collect() })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// Energy split off above the band, if any. Skips the eigenvectors.
pub fn detached_energy(problem: &TridiagonalProblem) -> Result<Option<f64>> {
    problem.check()?;
    let top = problem.band_top();
    let tol = 1e-12 * (1.0 + top.abs());
    Ok(problem.matrix().symmetric_eigenvalues().iter().copied().filter(|&v| v > top + tol).reduce(f64::max))
}

/// Eigenpair split off above the band, if any.
pub fn detached(problem: &TridiagonalProblem) -> Result<Option<Eigenpair>> {
    if detached_energy(problem)?.is_none() {
        return Ok(None);
    }
    let top = problem.band_top();
    let tol = 1e-12 * (1.0 + top.abs());
    Ok(diagonalize_relative(problem)?.into_iter().rev().find(|e| e.value > top + tol))
}

fn truncated(state: &TwoExcState, params: &ChainParams, dimension: usize) -> Vec<Complex64> {
    state.wavefunction(params, dimension).psi[1..].to_vec()
}

fn relative_norm(res: &[Complex64], psi: &[Complex64]) -> Result<f64> {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument("residual of a zero vector".into()));
    }
    Ok(res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / n)
}

/// `||(H - E) psi|| / ||psi||` with the non-dissipative matrix and energy.
pub fn residual(params: &ChainParams, state: &TwoExcState, dimension: usize) -> Result<f64> {
    let problem = TridiagonalProblem::for_sector(params, state.k_cm, dimension);
    problem.check()?;
    let t = problem.hopping;
    let energy = match state.kind {
        TwoExcKind::Scattering { p, .. } => problem.offset + 2.0 * t * p.ka().cos(),
        TwoExcKind::Bound { .. } => problem.offset + params.u + t * t / params.u,
    };
    let psi = truncated(state, params, dimension);
    let at = |x: usize| if x >= 1 && x <= dimension { psi[x - 1] } else { Complex64::new(0.0, 0.0) };
    let res: Vec<Complex64> = (1..=dimension)
        .map(|x| {
            let on = problem.offset + if x == 1 { problem.impurity } else { 0.0 };
            (on - energy) * at(x) + t * (at(x - 1) + at(x + 1))
        })
        .collect();
    relative_norm(&res, &psi)
}

/// Residual of the full non-Hermitian problem: diagonal `-i Gamma_0`,
/// hopping `-i Gamma_1 cos(Ka/2)`, applied to the dissipative eigenvector
/// (`alpha = -i Gamma_1 cos(Ka/2) / U`, or the phase built from the complex
/// hopping) and compared with the complex eigenvalue.
pub fn complex_residual(params: &ChainParams, state: &TwoExcState, dimension: usize) -> Result<f64> {
    if dimension < MIN_DIMENSION {
        return Err(Error::InvalidArgument(format!("relative problem needs at least {MIN_DIMENSION} sites")));
    }
    let i = Complex64::new(0.0, 1.0);
    let c = state.k_cm.half().ka().cos();
    let tt = -i * params.gamma1() * c;
    let diag = -i * gamma_zero();
    let u = params.u;
    let psi: Vec<Complex64> = match state.kind {
        TwoExcKind::Scattering { p, .. } => {
            let e_p = Complex64::from_polar(1.0, p.ka());
            let z = if u == 0.0 { Complex64::new(-1.0, 0.0) } else { -(tt - u * e_p) / (tt - u / e_p) };
            (1..=dimension).map(|x| e_p.powu(x as u32) + z * e_p.powu(x as u32).inv()).collect()
        }
        TwoExcKind::Bound { alpha, .. } => (1..=dimension).map(|x| alpha.powu(x as u32 - 1)).collect(),
    };
    let energy = state.energy();
    let at = |x: usize| if x >= 1 && x <= dimension { psi[x - 1] } else { Complex64::new(0.0, 0.0) };
    let res: Vec<Complex64> = (1..=dimension)
        .map(|x| {
            let on = diag + if x == 1 { Complex64::new(u, 0.0) } else { Complex64::new(0.0, 0.0) };
            (on - energy) * at(x) + tt * (at(x - 1) + at(x + 1))
        })
        .collect();
    relative_norm(&res, &psi)
}
