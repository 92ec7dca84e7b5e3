//! Collective dipole moments `eta_bar`, momentum distributions, branching
//! ratios and the lattice sums over products of `|eta_bar|^2`.
//!
//! Two closed forms are provided. [`eta_closed`] evaluates the finite
//! geometric sums of the truncated transform exactly, so it agrees with
//! [`eta_bruteforce`] to rounding. [`eta_asymptotic`] is the large-`M`
//! reduction with a direct term at `p = q` and a background gated on odd
//! `ell_p - ell_q`; it contains the non-interacting and strong-interaction
//! limits as special cases and is what the figures are built from.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{two_exc_state, Nu, RelativeWavefunction, StateId, TwoExcKind, WaveIndex};
use crate::error::{Error, Result};
use crate::model::{ChainParams, Regime};

/// Which closed form builds a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaForm {
    /// Exact finite-lattice sums.
    Exact,
    /// Large-`M` forms, with the limiting phase and `alpha` in the
    /// non-interacting and strong regimes.
    #[default]
    Asymptotic,
}


/// `sum_{z=1}^{L} e^{2 pi i m z / M}` with `L = (M-1)/2`, `M` odd.
fn geometric(m_int: i64, m: usize) -> Complex64 {
    let mm = m as i64;
    let r = m_int.rem_euclid(mm);
    if r == 0 {
        return Complex64::new(((m - 1) / 2) as f64, 0.0);
    }
    let j = if r > mm / 2 { r - mm } else { r };
    let half = PI * j as f64 / m as f64;
    let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Complex64::new(-0.5, (half.cos() - sign) / (2.0 * half.sin()))
}

fn check_grid(params: &ChainParams, w: &WaveIndex) -> Result<()> {
    if w.m() != params.m {
        return Err(Error::GridMismatch(w.m(), params.m));
    }
    Ok(())
}

/// `eta_bar^{(K nu)}_q` from the exact finite geometric sums.
pub fn eta_closed(params: &ChainParams, id: StateId, q: WaveIndex) -> Result<Complex64> {
    check_grid(params, &q)?;
    let (state, _) = two_exc_state(params, id)?;
    let m = params.m;
    Ok(match state.kind {
        TwoExcKind::Scattering { p, phase } => {
            let d = p.signed() - q.signed();
            let s = p.signed() + q.signed();
            (geometric(d, m) + geometric(s, m) + phase * (geometric(-s, m) + geometric(-d, m))) / m as f64
        }
        TwoExcKind::Bound { alpha_hermitian, .. } => {
            let l = params.half_n() as i32;
            let mut acc = Complex64::new(0.0, 0.0);
            for zeta in [1.0, -1.0] {
                let e = Complex64::from_polar(1.0, -zeta * q.ka());
                let w = e * alpha_hermitian;
                acc += e * (Complex64::new(1.0, 0.0) - w.powi(l)) / (Complex64::new(1.0, 0.0) - w);
            }
            acc / (m as f64).sqrt()
        }
    })
}

/// Large-`M` closed form of `eta_bar^{(K nu)}_q` in the given regime.
pub fn eta_asymptotic(params: &ChainParams, id: StateId, q: WaveIndex, regime: Regime) -> Result<Complex64> {
    check_grid(params, &q)?;
    let m = params.m as f64;
    match id.nu {
        Nu::Scattering(p) => {
            if p.signed() <= 0 {
                return Err(Error::InvalidArgument(format!("p index {} must be > 0", p.signed())));
            }
            let delta = match regime {
                Regime::NonInteracting => PI,
                Regime::Strong => PI + 2.0 * p.ka(),
                Regime::Finite => {
                    let (state, _) = two_exc_state(params, id)?;
                    match state.kind {
                        TwoExcKind::Scattering { phase, .. } => phase.arg(),
                        TwoExcKind::Bound { .. } => unreachable!(),
                    }
                }
            };
            let mi = p.signed() - q.signed().abs();
            if mi == 0 {
                let ph = if regime == Regime::NonInteracting {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, delta)
                };
                Ok((Complex64::new(1.0, 0.0) + ph) / 2.0)
            } else if mi.rem_euclid(2) == 1 {
                let d = 2.0 * PI * mi as f64 / m;
                Ok(Complex64::from_polar(2.0 / m, delta / 2.0) * ((delta - d) / 2.0).sin() / (d / 2.0).sin())
            } else {
                Ok(Complex64::new(0.0, 0.0))
            }
        }
        Nu::Bound => {
            let alpha = match regime {
                Regime::NonInteracting => {
                    return Err(Error::BoundStateAbsent { k_cm: id.k_cm.signed(), hopping: 0.0, u: 0.0 })
                }
                Regime::Strong => 0.0,
                Regime::Finite => {
                    let (state, _) = two_exc_state(params, id)?;
                    match state.kind {
                        TwoExcKind::Bound { alpha_hermitian, .. } => alpha_hermitian,
                        TwoExcKind::Scattering { .. } => unreachable!(),
                    }
                }
            };
            let c = q.ka().cos();
            Ok(Complex64::new(2.0 / m.sqrt() * (c - alpha) / (1.0 - 2.0 * alpha * c + alpha * alpha), 0.0))
        }
    }
}

/// Bound-state `M |eta_bar_q|^2` at a continuous relative wavenumber `qa`.
pub fn bound_profile(qa: f64, alpha: f64) -> f64 {
    let c = qa.cos();
    let v = 2.0 * (c - alpha) / (1.0 - 2.0 * alpha * c + alpha * alpha);
    v * v
}

/// Direct evaluation of the truncated transform
/// `sum_{zeta=+-} sum_{z=1}^{N/2} e^{-i zeta q a z} Psi_z / sqrt(M)`.
pub fn eta_bruteforce(wavefn: &RelativeWavefunction, q: WaveIndex) -> Result<Complex64> {
    let m = q.m();
    let l = (m - 1) / 2;
    if wavefn.psi.len() < l + 1 {
        return Err(Error::InvalidArgument(format!("wavefunction shorter than N/2 + 1 = {}", l + 1)));
    }
    if wavefn.psi[0].norm() != 0.0 {
        return Err(Error::InvalidArgument("Psi_0 must vanish".into()));
    }
    let qa = q.ka();
    let sum: Complex64 = (1..=l).map(|z| wavefn.psi[z] * (2.0 * (qa * z as f64).cos())).sum();
    Ok(sum / (m as f64).sqrt())
}

/// Fully windowed transform of the pair amplitude over the finite lattice:
/// `sum_{|z| <= N} (1 - |z|/M) e^{-i q a z} Psi_|z| / sqrt(M)`.
pub fn eta_windowed(params: &ChainParams, id: StateId, q: WaveIndex) -> Result<Complex64> {
    check_grid(params, &q)?;
    let (state, _) = two_exc_state(params, id)?;
    let n = params.n();
    let wf = state.wavefunction(params, n);
    let m = params.m as f64;
    let qa = q.ka();
    let sum: Complex64 =
        (1..=n).map(|z| wf.psi[z] * (2.0 * (1.0 - z as f64 / m) * (qa * z as f64).cos())).sum();
    Ok(sum / m.sqrt())
}

/// `eta_bar` over the whole `q` grid for one two-excitation state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumDistribution {
    pub id: StateId,
    pub form: EtaForm,
    /// Indexed by `q.ell()`.
    pub eta: Vec<Complex64>,
    /// `|eta|^2`, same indexing.
    pub abs2: Vec<f64>,
}

impl MomentumDistribution {
    pub fn new(params: &ChainParams, id: StateId, form: EtaForm) -> Result<Self> {
        let regime = params.regime();
        let eta = WaveIndex::all(params.m)
            .map(|q| match form {
                EtaForm::Exact => eta_closed(params, id, q),
                EtaForm::Asymptotic => eta_asymptotic(params, id, q, regime),
            })
            .collect::<Result<Vec<_>>>()?;
        let abs2 = eta.iter().map(|z| z.norm_sqr()).collect();
        Ok(MomentumDistribution { id, form, eta, abs2 })
    }

    pub fn at(&self, q: WaveIndex) -> Complex64 {
        self.eta[q.ell()]
    }

    pub fn abs2_at(&self, q: WaveIndex) -> f64 {
        self.abs2[q.ell()]
    }

    /// `Z = sum_q |eta_bar_q|^2`.
    pub fn sum_rule(&self) -> f64 {
        self.abs2.iter().sum()
    }

    /// `|eta_bar|^2` rescaled so that the sum rule `Z = 2` holds exactly.
    pub fn normalized_abs2(&self) -> Vec<f64> {
        let z = self.sum_rule();
        if z == 0.0 {
            return self.abs2.clone();
        }
        self.abs2.iter().map(|v| 2.0 * v / z).collect()
    }
}

/// Branching ratios and partial rates of `|K nu>` into `|k>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchingTable {
    pub id: StateId,
    /// `b_k`, indexed by `k.ell()`.
    pub b: Vec<f64>,
    /// `Gamma^{K nu}_k = b_k Gamma_tot`.
    pub partial: Vec<f64>,
    pub total: f64,
}

/// Branching ratios `b_k = |eta_bar_{K/2-k}|^2 / Z` with `Z` the grid sum,
/// which equals `|eta_bar|^2 / 2` whenever the sum rule holds.
pub fn branching(params: &ChainParams, id: StateId, form: EtaForm) -> Result<BranchingTable> {
    let dist = MomentumDistribution::new(params, id, form)?;
    let (state, _) = two_exc_state(params, id)?;
    Ok(branching_from(&dist, state.decay))
}

pub fn branching_from(dist: &MomentumDistribution, total: f64) -> BranchingTable {
    let m = dist.eta.len();
    let half = dist.id.k_cm.half();
    let norm = dist.normalized_abs2();
    let b: Vec<f64> = WaveIndex::all(m).map(|k| norm[half.sub(&k).ell()] / 2.0).collect();
    let partial = b.iter().map(|v| v * total).collect();
    BranchingTable { id: dist.id, b, partial, total }
}

/// Lattice sums over products of `|eta_bar|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumKind {
    QBg,
    RBg,
    RDir,
    RBs,
    QCross,
    RCross,
    RCrossBs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMode {
    Finite,
    Limit,
}

impl SumKind {
    pub const ALL: [SumKind; 7] =
        [SumKind::QBg, SumKind::RBg, SumKind::RDir, SumKind::RBs, SumKind::QCross, SumKind::RCross, SumKind::RCrossBs];

    pub fn name(&self) -> &'static str {
        match self {
            SumKind::QBg => "Q_bg",
            SumKind::RBg => "R_bg",
            SumKind::RDir => "R_dir",
            SumKind::RBs => "R_BS",
            SumKind::QCross => "Q_cross",
            SumKind::RCross => "R_cross",
            SumKind::RCrossBs => "R_crossBS",
        }
    }
}

/// Lattice sum at relative wavenumber `qa = 2 pi q_index / M`. `M` may be
/// even here; the sums only need the grid, not a chain.
pub fn lattice_sum(kind: SumKind, q_index: i64, m: usize, mode: SumMode) -> f64 {
    let mm = m as i64;
    let mut jq = q_index.rem_euclid(mm);
    if jq > mm / 2 {
        jq -= mm;
    }
    let jq = jq.abs();
    let mf = m as f64;
    let qa = 2.0 * PI * jq as f64 / mf;
    let (sq, cq) = qa.sin_cos();
    let dq0 = if jq == 0 { 1.0 } else { 0.0 };
    match kind {
        SumKind::RDir => return 2.0 * sq.powi(4),
        SumKind::RBs => return 16.0 / (mf * mf) * cq.powi(4),
        SumKind::RCrossBs => return 16.0 / (mf * mf) * cq * cq,
        _ => {}
    }
    if mode == SumMode::Limit {
        return match kind {
            SumKind::QBg => (2.0 - dq0) / 3.0,
            SumKind::RBg => cq.powi(4) * (2.0 - dq0) / 3.0,
            SumKind::QCross | SumKind::RCross => dq0 / 3.0,
            _ => unreachable!(),
        };
    }
    let pref = 32.0 / mf.powi(4);
    let mut acc = 0.0;
    for jp in 1..=mm / 2 {
        let mi = jp - jq;
        if mi.rem_euclid(2) != 1 {
            continue;
        }
        let pa = 2.0 * PI * jp as f64 / mf;
        let d = pa - qa;
        let term = match kind {
            SumKind::QBg => (d / 2.0).tan().powi(-4),
            SumKind::RBg => ((pa + qa) / 2.0).cos().powi(4) / (d / 2.0).sin().powi(4),
            SumKind::QCross | SumKind::RCross => {
                if jp.rem_euclid(2) != 1 {
                    continue;
                }
                let direct = (pa / 2.0).tan().powi(-2);
                let other = if kind == SumKind::QCross {
                    (d / 2.0).tan().powi(-2)
                } else {
                    (1.0 + (pa + qa).cos()) / (1.0 - d.cos())
                };
                direct * other
            }
            _ => unreachable!(),
        };
        acc += term;
    }
    pref * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, u: f64) -> ChainParams {
        ChainParams::new(m, 0.5, PI / 2.0, u).unwrap()
    }

    #[test]
    fn geometric_matches_direct_sum() {
        for m in [3usize, 7, 101] {
            for mi in -(m as i64) - 3..=(m as i64) + 3 {
                let direct: Complex64 = (1..=(m - 1) / 2)
                    .map(|z| Complex64::from_polar(1.0, 2.0 * PI * (mi * z as i64) as f64 / m as f64))
                    .sum();
                assert!((direct - geometric(mi, m)).norm() < 1e-11, "m={m} mi={mi}");
            }
        }
    }

    #[test]
    fn delta_bound_transform() {
        let m = 101;
        let mut psi = vec![Complex64::new(0.0, 0.0); 51];
        psi[1] = Complex64::new(1.0, 0.0);
        let wf = RelativeWavefunction { psi };
        for q in WaveIndex::all(m) {
            let v = eta_bruteforce(&wf, q).unwrap();
            assert!((v.re - 2.0 * q.ka().cos() / (m as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn asymptotic_special_cases() {
        let m = 101;
        let k0 = WaveIndex::zero(m);
        let p = WaveIndex::from_signed(13, m);
        let free = params(m, 0.0);
        assert_eq!(eta_asymptotic(&free, StateId::scattering(k0, p), p, Regime::NonInteracting).unwrap().norm(), 0.0);
        let strong = params(m, 1e6);
        let v = eta_asymptotic(&strong, StateId::scattering(k0, p), p, Regime::Strong).unwrap();
        assert!((v.norm_sqr() - p.ka().sin().powi(2)).abs() < 1e-14);
        for q in WaveIndex::all(m) {
            let b = eta_asymptotic(&strong, StateId::bound(k0), q, Regime::Strong).unwrap();
            assert!((b.norm_sqr() - 4.0 / m as f64 * q.ka().cos().powi(2)).abs() < 1e-15);
            let s = eta_asymptotic(&strong, StateId::scattering(k0, p), q, Regime::Strong).unwrap();
            let mi = p.signed() - q.signed().abs();
            if mi != 0 {
                let d = 2.0 * PI * mi as f64 / m as f64;
                let sum = p.ka() + q.signed().abs() as f64 * 2.0 * PI / m as f64;
                let expect = if mi.rem_euclid(2) == 1 {
                    4.0 / (m * m) as f64 * (1.0 + sum.cos()) / (1.0 - d.cos())
                } else {
                    0.0
                };
                assert!((s.norm_sqr() - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bound_sum_rule_is_exact_in_strong_limit() {
        let p = params(101, 1e6);
        let d = MomentumDistribution::new(&p, StateId::bound(WaveIndex::zero(101)), EtaForm::Asymptotic).unwrap();
        assert!((d.sum_rule() - 2.0).abs() < 1e-12);
        let t = branching_from(&d, 2.0);
        for k in WaveIndex::all(101) {
            assert!((t.b[k.ell()] - 2.0 / 101.0 * k.ka().cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn sums_limits() {
        assert!((lattice_sum(SumKind::QBg, 0, 101, SumMode::Limit) - 1.0 / 3.0).abs() < 1e-15);
        assert!((lattice_sum(SumKind::RDir, 25, 100, SumMode::Finite) - 2.0).abs() < 1e-12);
        let v = lattice_sum(SumKind::QBg, 1250, 10000, SumMode::Finite);
        assert!((v - 2.0 / 3.0).abs() < 1e-3);
    }
}
