//! Spontaneous emission from few-excitation states: closed-form rate
//! dynamics and angle-resolved far-field intensity.
//!
//! Populations follow the exact solution of the Lindblad equation in the
//! eigenbasis. Partial rates are `Gamma^{K nu}_k = b_k Gamma_tot` with the
//! branching ratios normalised over the grid, so probability is conserved
//! exactly; the intensity weight of a two-excitation state towards `k` is
//! `2 b_k`, which is `|eta_bar|^2` whenever the sum rule `Z = 2` holds.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{
    single_dispersion, two_exc_state, DispersionMode, Nu, StateId, TwoExcKind, WaveIndex,
};
use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::momentum::{bound_profile, branching_from, EtaForm, MomentumDistribution};
use crate::model::Regime;

/// Tolerance on the trace of an initial state.
pub const TRACE_TOL: f64 = 1e-10;

/// Decay rates entering the rate equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `Gamma_k = gamma0`, `Gamma_tot = 2 gamma0` (sharp-resonance limit).
    #[default]
    Simplified,
    /// Tight-binding rates of the eigenstates.
    TightBinding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DynamicsConfig {
    pub form: EtaForm,
    pub rates: RateModel,
}

/// Off-diagonal blocks of the density matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Coherences {
    pub two_two: BTreeMap<(StateId, StateId), Complex64>,
    pub one_one: BTreeMap<(usize, usize), Complex64>,
    pub two_one: BTreeMap<(StateId, usize), Complex64>,
    pub two_zero: BTreeMap<StateId, Complex64>,
    pub one_zero: BTreeMap<usize, Complex64>,
}

impl Coherences {
    pub fn is_empty(&self) -> bool {
        self.two_two.is_empty()
            && self.one_one.is_empty()
            && self.two_one.is_empty()
            && self.two_zero.is_empty()
            && self.one_zero.is_empty()
    }
}

/// Density matrix restricted to populations plus optional coherences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityState {
    /// Two-excitation populations. A scattering label stands for one state.
    pub pop2: BTreeMap<StateId, f64>,
    /// Single-excitation populations indexed by `k.ell()`.
    pub pop1: Vec<f64>,
    pub pop0: f64,
    pub coherences: Coherences,
}

impl DensityState {
    pub fn vacuum(m: usize) -> Self {
        DensityState { pop2: BTreeMap::new(), pop1: vec![0.0; m], pop0: 1.0, coherences: Coherences::default() }
    }

    pub fn single(k: WaveIndex) -> Self {
        let mut s = Self::vacuum(k.m());
        s.pop0 = 0.0;
        s.pop1[k.ell()] = 1.0;
        s
    }

    pub fn two(id: StateId) -> Self {
        let mut s = Self::vacuum(id.k_cm.m());
        s.pop0 = 0.0;
        s.pop2.insert(id, 1.0);
        s
    }

    pub fn trace(&self) -> f64 {
        self.pop0 + self.pop1.iter().sum::<f64>() + self.pop2.values().sum::<f64>()
    }

    pub fn min_population(&self) -> f64 {
        self.pop1.iter().chain(self.pop2.values()).fold(self.pop0, |a, &b| a.min(b))
    }
}

/// Decay channels of one two-excitation state.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub total: f64,
    /// `Gamma^{K nu}_k` indexed by `k.ell()`.
    pub partial: Vec<f64>,
    pub re_energy: f64,
}

/// Rates needed to propagate a given set of two-excitation states.
#[derive(Debug, Clone)]
pub struct SpontaneousModel {
    pub params: ChainParams,
    pub config: DynamicsConfig,
    pub gamma_k: Vec<f64>,
    pub energy_k: Vec<f64>,
    pub channels: BTreeMap<StateId, Channel>,
}

impl SpontaneousModel {
    pub fn new(params: &ChainParams, config: DynamicsConfig, states: &[StateId]) -> Result<Self> {
        let m = params.m;
        let singles: Vec<_> =
            WaveIndex::all(m).map(|k| single_dispersion(params, k, DispersionMode::TightBinding)).collect();
        let gamma_k = singles
            .iter()
            .map(|s| match config.rates {
                RateModel::Simplified => 1.0,
                RateModel::TightBinding => s.decay,
            })
            .collect();
        let energy_k = singles.iter().map(|s| s.re_energy).collect();
        let mut channels = BTreeMap::new();
        for &id in states {
            let (state, _) = two_exc_state(params, id)?;
            let total = match config.rates {
                RateModel::Simplified => 2.0,
                RateModel::TightBinding => state.decay,
            };
            let dist = MomentumDistribution::new(params, id, config.form)?;
            let table = branching_from(&dist, total);
            channels.insert(id, Channel { total, partial: table.partial, re_energy: state.re_energy });
        }
        Ok(SpontaneousModel { params: *params, config, gamma_k, energy_k, channels })
    }

    /// Model covering every two-excitation state present in `initial`.
    pub fn for_state(params: &ChainParams, config: DynamicsConfig, initial: &DensityState) -> Result<Self> {
        let mut ids: Vec<StateId> = initial.pop2.keys().copied().collect();
        for (a, b) in initial.coherences.two_two.keys() {
            ids.push(*a);
            ids.push(*b);
        }
        ids.extend(initial.coherences.two_one.keys().map(|(a, _)| *a));
        ids.extend(initial.coherences.two_zero.keys().copied());
        ids.sort();
        ids.dedup();
        Self::new(params, config, &ids)
    }

    fn channel(&self, id: &StateId) -> Result<&Channel> {
        self.channels
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("state {id:?} not covered by the model")))
    }

    /// Intensity weight `2 b_k` of state `id` towards `k`.
    pub fn weight(&self, id: &StateId, k: WaveIndex) -> Result<f64> {
        let c = self.channel(id)?;
        Ok(2.0 * c.partial[k.ell()] / c.total)
    }

    /// Closed-form propagation to time `t`.
    pub fn evolve(&self, initial: &DensityState, t: f64) -> Result<DensityState> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative time {t}")));
        }
        let m = self.params.m;
        if initial.pop1.len() != m {
            return Err(Error::GridMismatch(initial.pop1.len(), m));
        }
        if (initial.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("initial trace {} != 1", initial.trace())));
        }
        let mut pop2 = BTreeMap::new();
        let mut pop1: Vec<f64> = (0..m).map(|k| (-self.gamma_k[k] * t).exp() * initial.pop1[k]).collect();
        for (id, &p0) in &initial.pop2 {
            let c = self.channel(id)?;
            pop2.insert(*id, (-c.total * t).exp() * p0);
            if p0 == 0.0 {
                continue;
            }
            for k in 0..m {
                let g = self.gamma_k[k];
                pop1[k] += c.partial[k] * (-g * t).exp() * rise(c.total - g, t) * p0;
            }
        }
        let pop0 = 1.0 - pop1.iter().sum::<f64>() - pop2.values().sum::<f64>();
        let coherences = self.evolve_coherences(&initial.coherences, t)?;
        Ok(DensityState { pop2, pop1, pop0, coherences })
    }

    fn evolve_coherences(&self, c: &Coherences, t: f64) -> Result<Coherences> {
        let rot = |detuning: f64, decay: f64| Complex64::from_polar((-decay * t).exp(), -detuning * t);
        let mut out = Coherences::default();
        for ((a, b), v) in &c.two_two {
            let (ca, cb) = (self.channel(a)?, self.channel(b)?);
            out.two_two.insert((*a, *b), v * rot(ca.re_energy - cb.re_energy, 0.5 * (ca.total + cb.total)));
        }
        for ((k, kp), v) in &c.one_one {
            let f = rot(self.energy_k[*k] - self.energy_k[*kp], 0.5 * (self.gamma_k[*k] + self.gamma_k[*kp]));
            out.one_one.insert((*k, *kp), v * f);
        }
        for ((a, k), v) in &c.two_one {
            let ca = self.channel(a)?;
            out.two_one.insert((*a, *k), v * rot(ca.re_energy - self.energy_k[*k], 0.5 * (ca.total + self.gamma_k[*k])));
        }
        for (a, v) in &c.two_zero {
            let ca = self.channel(a)?;
            out.two_zero.insert(*a, v * rot(ca.re_energy, 0.5 * ca.total));
        }
        for (k, v) in &c.one_zero {
            out.one_zero.insert(*k, v * rot(self.energy_k[*k], 0.5 * self.gamma_k[*k]));
        }
        Ok(out)
    }

    /// Time derivative of the populations, used by the numerical oracle.
    pub fn rhs(&self, state: &DensityState) -> Result<DensityState> {
        let m = self.params.m;
        let mut d = DensityState::vacuum(m);
        d.pop0 = 0.0;
        for k in 0..m {
            d.pop1[k] = -self.gamma_k[k] * state.pop1[k];
            d.pop0 += self.gamma_k[k] * state.pop1[k];
        }
        for (id, &p) in &state.pop2 {
            let c = self.channel(id)?;
            d.pop2.insert(*id, -c.total * p);
            for k in 0..m {
                d.pop1[k] += c.partial[k] * p;
            }
        }
        Ok(d)
    }
}

/// `(1 - e^{-x t}) / x`, continuous at `x = 0`.
fn rise(x: f64, t: f64) -> f64 {
    if (x * t).abs() < 1e-12 {
        t
    } else {
        -(-x * t).exp_m1() / x
    }
}

/// Closed-form evolution of `initial` to time `t`.
pub fn evolve_spontaneous(
    params: &ChainParams,
    config: DynamicsConfig,
    initial: &DensityState,
    t: f64,
) -> Result<DensityState> {
    SpontaneousModel::for_state(params, config, initial)?.evolve(initial, t)
}

/// Detection angle to grid wavenumber `[k_at sin(beta)]`, with the residual
/// in grid spacings.
pub fn angle_to_k(params: &ChainParams, beta: f64) -> (WaveIndex, f64) {
    WaveIndex::nearest(params.k_at_a() * beta.sin(), params.m)
}

/// Continuous `[k_at a sin(beta)]` reduced to `(-pi, pi]`.
pub fn angle_to_ka(params: &ChainParams, beta: f64) -> f64 {
    let x = params.k_at_a() * beta.sin();
    let r = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// A Bragg direction for wavenumber `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BraggAngle {
    pub beta: f64,
    pub order: i64,
}

/// All elevations with `sin(beta) = k/k_at + n (lambda/a)`, ascending.
pub fn bragg_angles_ka(params: &ChainParams, ka: f64) -> Vec<BraggAngle> {
    let l = params.lambda_over_a;
    let s0 = ka / (2.0 * PI) * l;
    let n_max = ((1.0 + s0.abs()) / l).ceil() as i64 + 1;
    let mut out: Vec<BraggAngle> = (-n_max..=n_max)
        .filter_map(|n| {
            let s = s0 + n as f64 * l;
            (s.abs() <= 1.0 + 1e-12).then(|| BraggAngle { beta: s.clamp(-1.0, 1.0).asin(), order: n })
        })
        .collect();
    out.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    out
}

pub fn bragg_angles(params: &ChainParams, k: WaveIndex) -> Vec<BraggAngle> {
    bragg_angles_ka(params, k.ka())
}

/// Angular width of the detection bin belonging to one grid wavenumber.
pub fn bin_width(params: &ChainParams, beta: f64) -> f64 {
    let ds = params.lambda_over_a / params.m as f64;
    let s = beta.sin();
    ((s + ds / 2.0).clamp(-1.0, 1.0)).asin() - ((s - ds / 2.0).clamp(-1.0, 1.0)).asin()
}

/// Pure initial eigenstate of an emission-pattern calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSource {
    Single(WaveIndex),
    Two(StateId),
}

/// One point of a far-field pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionSample {
    pub beta_det: f64,
    /// `G1 / (xi^2 |w|^2 M)` for discrete patterns, `G1 / (xi^2 |w|^2)` for
    /// the continuous bound-state pattern.
    pub value: f64,
    pub t_ret: f64,
    /// Angular bin width; zero for continuous patterns.
    pub width: f64,
    /// Grid wavenumber `k_bar` of the sample, absent for continuous patterns.
    pub k_bar: Option<WaveIndex>,
    pub order: i64,
}

/// Intensity pattern of a single-excitation or scattering source at every
/// allowed detection angle.
pub fn emission_pattern(
    params: &ChainParams,
    config: DynamicsConfig,
    source: PatternSource,
    t_ret: f64,
) -> Result<Vec<EmissionSample>> {
    let initial = match source {
        PatternSource::Single(k) => DensityState::single(k),
        PatternSource::Two(id) => DensityState::two(id),
    };
    let model = SpontaneousModel::for_state(params, config, &initial)?;
    let now = model.evolve(&initial, t_ret)?;
    let mut out = Vec::new();
    for k in WaveIndex::all(params.m) {
        let mut value = now.pop1[k.ell()];
        for (id, p2) in &now.pop2 {
            value += model.weight(id, k)? * p2;
        }
        for b in bragg_angles(params, k) {
            out.push(EmissionSample {
                beta_det: b.beta,
                value,
                t_ret,
                width: bin_width(params, b.beta),
                k_bar: Some(k),
                order: b.order,
            });
        }
    }
    out.sort_by(|a, b| a.beta_det.total_cmp(&b.beta_det));
    Ok(out)
}

/// Bound-state pattern `M |eta_bar^{BS}_{K/2 - k_bar(beta)}|^2 e^{-t}` at
/// arbitrary angles; in the strong limit `4 cos^2(Ka/2 - [k_at a sin beta])`.
/// Angles where the bound state does not exist are dark.
pub fn bound_pattern(params: &ChainParams, k_cm: WaveIndex, betas: &[f64], t_ret: f64) -> Result<Vec<EmissionSample>> {
    let alpha = match params.regime() {
        Regime::NonInteracting => {
            return Err(Error::BoundStateAbsent { k_cm: k_cm.signed(), hopping: 0.0, u: 0.0 });
        }
        Regime::Strong => Some(0.0),
        Regime::Finite => match two_exc_state(params, StateId::bound(k_cm)) {
            Ok((s, _)) => match s.kind {
                TwoExcKind::Bound { alpha_hermitian, .. } => Some(alpha_hermitian),
                TwoExcKind::Scattering { .. } => unreachable!(),
            },
            Err(Error::BoundStateAbsent { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    let half = k_cm.half().ka();
    let decay = (-t_ret).exp();
    Ok(betas
        .iter()
        .map(|&beta| {
            let value = match alpha {
                Some(a) => bound_profile(half - angle_to_ka(params, beta), a) * decay,
                None => 0.0,
            };
            EmissionSample { beta_det: beta, value, t_ret, width: 0.0, k_bar: None, order: 0 }
        })
        .collect())
}

/// Direct-channel detection wavenumbers `K/2 -+ p` of a scattering state.
pub fn direct_channels(id: StateId) -> Option<[WaveIndex; 2]> {
    match id.nu {
        Nu::Scattering(p) => {
            let h = id.k_cm.half();
            Some([h.sub(&p), h.add(&p)])
        }
        Nu::Bound => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(u: f64) -> ChainParams {
        ChainParams::new(51, 0.5, PI / 2.0, u).unwrap()
    }

    #[test]
    fn single_excitation_decays_exponentially() {
        let p = params(0.0);
        let k = WaveIndex::from_signed(4, 51);
        let s = evolve_spontaneous(&p, DynamicsConfig::default(), &DensityState::single(k), 1.3).unwrap();
        assert!((s.pop1[k.ell()] - (-1.3f64).exp()).abs() < 1e-15);
        assert!((s.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn time_zero_is_identity() {
        let p = params(1e6);
        let id = StateId::scattering(WaveIndex::zero(51), WaveIndex::from_signed(7, 51));
        let init = DensityState::two(id);
        let s = evolve_spontaneous(&p, DynamicsConfig::default(), &init, 0.0).unwrap();
        assert_eq!(s.pop2, init.pop2);
        assert!(s.pop1.iter().all(|&v| v == 0.0));
        assert!(evolve_spontaneous(&p, DynamicsConfig::default(), &init, -1.0).is_err());
    }

    #[test]
    fn two_excitation_feeds_singles() {
        let p = params(1e6);
        let id = StateId::bound(WaveIndex::zero(51));
        let t = 0.7;
        let s = evolve_spontaneous(&p, DynamicsConfig::default(), &DensityState::two(id), t).unwrap();
        assert!((s.pop2[&id] - (-2.0 * t).exp()).abs() < 1e-15);
        for k in WaveIndex::all(51) {
            let eta2 = 4.0 / 51.0 * k.ka().cos().powi(2);
            let expect = eta2 * ((-t).exp() - (-2.0 * t).exp());
            assert!((s.pop1[k.ell()] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn bragg_orders() {
        let p = params(0.0);
        let b: Vec<f64> = bragg_angles(&p, WaveIndex::zero(51)).iter().map(|b| b.beta / PI).collect();
        let expect = [-0.5, -1.0 / 6.0, 0.0, 1.0 / 6.0, 0.5];
        assert_eq!(b.len(), 5);
        for (x, y) in b.iter().zip(expect) {
            assert!((x - y).abs() < 1e-7);
        }
        let wide = p.with_lambda(1e3);
        for k in WaveIndex::all(51) {
            assert_eq!(bragg_angles(&wide, k).len(), usize::from(k.is_zero()));
        }
        let (k, res) = angle_to_k(&p, 0.5f64.asin());
        assert!(k.is_zero() && res.abs() < 1e-9);
    }

    #[test]
    fn bound_pattern_needs_interaction() {
        assert!(bound_pattern(&params(0.0), WaveIndex::zero(51), &[0.0], 0.0).is_err());
        let v = bound_pattern(&params(1e6), WaveIndex::zero(51), &[0.0], 0.0).unwrap();
        assert_eq!(v[0].value, 4.0);
    }
}
