//! Steady states of the chain under weak incoherent plane-wave pumps and the
//! far-field observables built on them.
//!
//! Rates follow the sharp-resonance limit: `Gamma_k = gamma0`,
//! `Gamma_tot = 2 gamma0`, `Gamma^{K nu}_k = gamma0 |eta_bar_{K/2-k}|^2`.
//! Sums over `nu` run over the whole zone of relative wavenumbers, so every
//! scattering label `p > 0` enters with multiplicity two.
//!
//! Closed forms that are quoted for `U = 0` and `U >> gamma0` only return
//! [`Error::InvalidArgument`] at finite `U`; the sum-based routes work for
//! any `U`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::angle_to_k;
use crate::eigen::{sector_states, Nu, StateId, WaveIndex};
use crate::error::{Error, Result};
use crate::model::{ChainParams, Regime};
use crate::momentum::{EtaForm, MomentumDistribution};

/// Largest dimensionless pump rate accepted by the perturbative formulas.
pub const XI_MAX: f64 = 0.05;
/// Above this the perturbative formulas are flagged with a warning.
pub const XI_WARN: f64 = 0.01;
/// Residual gate, in grid spacings, for mapping excitation angles to `k_n`.
pub const PUMP_GRID_TOL: f64 = 1e-6;

const GAMMA_TOT: f64 = 2.0;

/// One plane-wave component of the incoherent drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pump {
    pub k: WaveIndex,
    /// `|P_n|^2` in units of `gamma0`.
    pub rate: f64,
}

impl Pump {
    /// Pump imprinting `[k_L sin(beta_exc)]`; off-grid angles are rejected.
    pub fn from_angle(params: &ChainParams, beta_exc: f64, rate: f64) -> Result<Self> {
        let ka = params.k_at_a() * beta_exc.sin();
        let k = WaveIndex::exact(ka, params.m, PUMP_GRID_TOL)?;
        debug_assert_eq!(k, angle_to_k(params, beta_exc).0);
        Ok(Pump { k, rate })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PumpConfig {
    pub pumps: Vec<Pump>,
}

impl PumpConfig {
    pub fn single(k: WaveIndex, xi: f64) -> Self {
        PumpConfig { pumps: vec![Pump { k, rate: xi }] }
    }

    /// `|P_1|^2 = Xi`, `|P_2|^2 = epsilon^2 Xi`.
    pub fn two(k1: WaveIndex, k2: WaveIndex, xi: f64, epsilon: f64) -> Self {
        PumpConfig { pumps: vec![Pump { k: k1, rate: xi }, Pump { k: k2, rate: epsilon * epsilon * xi }] }
    }

    /// `Xi` of the first pump, zero without pumps.
    pub fn xi(&self) -> f64 {
        self.pumps.first().map_or(0.0, |p| p.rate)
    }

    /// `epsilon^2` of a two-pump configuration.
    pub fn epsilon2(&self) -> Option<f64> {
        match self.pumps.as_slice() {
            [a, b] if a.rate > 0.0 => Some(b.rate / a.rate),
            _ => None,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        for p in &self.pumps {
            if p.k.m() != m {
                return Err(Error::GridMismatch(p.k.m(), m));
            }
            if !(p.rate >= 0.0 && p.rate.is_finite()) {
                return Err(Error::InvalidArgument(format!("pump rate {} must be finite and >= 0", p.rate)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyOrder {
    AnalyticXi2,
    Numeric,
}

/// Stationary occupations. Scattering entries hold the occupation of one
/// label `p`; the label `-p` carries the same value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub m: usize,
    pub n_k: BTreeMap<WaveIndex, f64>,
    pub n_two: BTreeMap<StateId, f64>,
    pub order: SteadyOrder,
}

impl SteadyState {
    fn empty(m: usize, order: SteadyOrder) -> Self {
        SteadyState { m, n_k: BTreeMap::new(), n_two: BTreeMap::new(), order }
    }

    pub fn n_k_at(&self, k: WaveIndex) -> f64 {
        self.n_k.get(&k).copied().unwrap_or(0.0)
    }

    pub fn n_two_at(&self, id: &StateId) -> f64 {
        self.n_two.get(id).copied().unwrap_or(0.0)
    }

    /// Total excited population, counting both labels `+-p`.
    pub fn excited(&self) -> f64 {
        self.n_k.values().sum::<f64>() + self.n_two.iter().map(|(id, v)| id.multiplicity() * v).sum::<f64>()
    }

    /// `N_0 = 1 - sum N`.
    pub fn ground(&self) -> f64 {
        1.0 - self.excited()
    }
}

/// Momentum distributions of every two-excitation state in sector `K`.
pub fn sector_distributions(params: &ChainParams, k_cm: WaveIndex, form: EtaForm) -> Result<Vec<MomentumDistribution>> {
    sector_states(params, k_cm).into_iter().map(|id| MomentumDistribution::new(params, id, form)).collect()
}

/// `sum_nu f(nu)` over the whole zone of relative wavenumbers.
fn nu_sum(dists: &[MomentumDistribution], f: impl Fn(&MomentumDistribution) -> f64) -> f64 {
    dists.iter().map(|d| d.id.multiplicity() * f(d)).sum()
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi >= 0.0 && xi <= XI_MAX) {
        return Err(Error::InvalidArgument(format!("Xi = {xi} outside [0, {XI_MAX}]")));
    }
    if xi > XI_WARN {
        log::warn!("Xi = {xi} above {XI_WARN}; second-order formulas lose accuracy");
    }
    Ok(())
}

fn check_grid(params: &ChainParams, ks: &[WaveIndex]) -> Result<()> {
    for k in ks {
        if k.m() != params.m {
            return Err(Error::GridMismatch(k.m(), params.m));
        }
    }
    Ok(())
}

/// Second-order steady state of a single pump at `k_P`.
pub fn single_pump_steady(params: &ChainParams, k_p: WaveIndex, xi: f64, form: EtaForm) -> Result<SteadyState> {
    check_xi(xi)?;
    check_grid(params, &[k_p])?;
    let dists = sector_distributions(params, k_p.double(), form)?;
    let zero = WaveIndex::zero(params.m);
    let mut s = SteadyState::empty(params.m, SteadyOrder::AnalyticXi2);
    for k in WaveIndex::all(params.m) {
        let lin = if k == k_p { xi } else { 0.0 };
        let q = k_p.sub(&k);
        let quad = 0.5 * xi * xi * nu_sum(&dists, |d| d.abs2_at(q) * d.abs2_at(zero));
        s.n_k.insert(k, lin + quad);
    }
    for d in &dists {
        s.n_two.insert(d.id, 0.5 * xi * xi * d.abs2_at(zero));
    }
    Ok(s)
}

/// Second-order steady state of two pumps with rates `Xi` and `epsilon^2 Xi`.
/// Only the directly driven sectors and wavenumbers are populated.
pub fn two_pump_steady(
    params: &ChainParams,
    k1: WaveIndex,
    k2: WaveIndex,
    xi: f64,
    epsilon: f64,
    form: EtaForm,
) -> Result<SteadyState> {
    check_xi(xi)?;
    check_grid(params, &[k1, k2])?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    let e2 = epsilon * epsilon;
    let zero = WaveIndex::zero(params.m);
    let mut s = SteadyState::empty(params.m, SteadyOrder::AnalyticXi2);
    if k1 == k2 {
        let f = 1.0 + e2;
        let dists = sector_distributions(params, k1.double(), form)?;
        for d in &dists {
            s.n_two.insert(d.id, f * f * 0.5 * xi * xi * d.abs2_at(zero));
        }
        let quad = f * f * 0.5 * xi * xi * nu_sum(&dists, |d| d.abs2_at(zero).powi(2));
        s.n_k.insert(k1, f * xi + quad);
        return Ok(s);
    }
    let d11 = sector_distributions(params, k1.double(), form)?;
    let d22 = sector_distributions(params, k2.double(), form)?;
    let d12 = sector_distributions(params, k1.add(&k2), form)?;
    let q = k1.sub(&k2).half();
    let x2 = xi * xi;
    for d in &d11 {
        s.n_two.insert(d.id, 0.5 * x2 * d.abs2_at(zero));
    }
    for d in &d22 {
        s.n_two.insert(d.id, e2 * e2 * 0.5 * x2 * d.abs2_at(zero));
    }
    for d in &d12 {
        s.n_two.insert(d.id, e2 * x2 * d.abs2_at(q));
    }
    let cross = e2 * x2 * nu_sum(&d12, |d| d.abs2_at(q).powi(2));
    let n1 = xi
        + 0.5 * x2 * nu_sum(&d11, |d| d.abs2_at(zero).powi(2))
        + cross
        + e2 * e2 * 0.5 * x2 * nu_sum(&d22, |d| d.abs2_at(k2.sub(&k1)) * d.abs2_at(zero));
    let n2 = e2 * xi
        + e2 * e2 * 0.5 * x2 * nu_sum(&d22, |d| d.abs2_at(zero).powi(2))
        + cross
        + 0.5 * x2 * nu_sum(&d11, |d| d.abs2_at(k2.sub(&k1)) * d.abs2_at(zero));
    s.n_k.insert(k1, n1);
    s.n_k.insert(k2, n2);
    Ok(s)
}

/// Exact stationary solution of the population rate equations, including
/// pump broadening of `Gamma_k` and depletion of the ground state.
pub fn rate_steady_numeric(params: &ChainParams, config: &PumpConfig, form: EtaForm) -> Result<SteadyState> {
    config.validate(params.m)?;
    let m = params.m;
    if config.pumps.iter().all(|p| p.rate == 0.0) {
        let mut s = SteadyState::empty(m, SteadyOrder::Numeric);
        for k in WaveIndex::all(m) {
            s.n_k.insert(k, 0.0);
        }
        return Ok(s);
    }
    let sectors: Vec<Vec<MomentumDistribution>> = WaveIndex::all(m)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|kk| sector_distributions(params, kk, form))
        .collect::<Result<_>>()?;
    let model = RateSystem::new(params, config, &sectors);
    let n = model.solve()?;
    let mut s = SteadyState::empty(m, SteadyOrder::Numeric);
    for k in WaveIndex::all(m) {
        s.n_k.insert(k, n[k.ell()]);
    }
    for (kk, dists) in WaveIndex::all(m).zip(&sectors) {
        for (d, feeds) in dists.iter().zip(&model.feeds[kk.ell()]) {
            s.n_two.insert(d.id, feeds.iter().map(|&(src, c)| c * n[src]).sum());
        }
    }
    Ok(s)
}

/// Linear structure of the pumped rate equations with `N_{K nu}` expressed
/// through single-excitation occupations.
pub(crate) struct RateSystem {
    m: usize,
    /// `(k.ell(), rate)` for every pump.
    pumps: Vec<(usize, f64)>,
    /// `Gamma~_k`.
    gamma_tilde: Vec<f64>,
    /// Per sector, per state: `N_{K nu} = sum c N_src` as `(src, c)`.
    pub(crate) feeds: Vec<Vec<Vec<(usize, f64)>>>,
    /// Per sector, per state: multiplicity and `Gamma^{K nu}_k` by `k.ell()`.
    pub(crate) decay: Vec<Vec<(f64, Vec<f64>)>>,
    /// Per sector, per state: pump gain coefficients `(src, |P|^2 |eta|^2)`.
    pub(crate) gain: Vec<Vec<Vec<(usize, f64)>>>,
}

impl RateSystem {
    pub(crate) fn new(params: &ChainParams, config: &PumpConfig, sectors: &[Vec<MomentumDistribution>]) -> Self {
        let m = params.m;
        let pumps: Vec<(usize, f64)> = config.pumps.iter().map(|p| (p.k.ell(), p.rate)).collect();
        let mut gamma_tilde = vec![1.0; m];
        let mut feeds = Vec::with_capacity(m);
        let mut decay = Vec::with_capacity(m);
        let mut gain = Vec::with_capacity(m);
        for (kk, dists) in WaveIndex::all(m).zip(sectors) {
            let half = kk.half();
            let mut f_sector = Vec::with_capacity(dists.len());
            let mut d_sector = Vec::with_capacity(dists.len());
            let mut g_sector = Vec::with_capacity(dists.len());
            for d in dists {
                let mult = d.id.multiplicity();
                let mut g = Vec::new();
                for p in &config.pumps {
                    let src = kk.sub(&p.k);
                    let c = p.rate * d.abs2_at(half.sub(&p.k));
                    g.push((src.ell(), c));
                    gamma_tilde[src.ell()] += mult * c;
                }
                f_sector.push(g.iter().map(|&(s, c)| (s, c / GAMMA_TOT)).collect());
                let partial: Vec<f64> = WaveIndex::all(m).map(|k| d.abs2_at(half.sub(&k))).collect();
                d_sector.push((mult, partial));
                g_sector.push(g);
            }
            feeds.push(f_sector);
            decay.push(d_sector);
            gain.push(g_sector);
        }
        RateSystem { m, pumps, gamma_tilde, feeds, decay, gain }
    }

    fn solve(&self) -> Result<Vec<f64>> {
        let m = self.m;
        let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        // Weight of N_src in the total excited population.
        let mut weight = vec![1.0; m];
        for k in 0..m {
            a[(k, k)] = self.gamma_tilde[k];
        }
        for (f_sector, d_sector) in self.feeds.iter().zip(&self.decay) {
            for (feeds, (mult, partial)) in f_sector.iter().zip(d_sector) {
                for &(src, c) in feeds {
                    weight[src] += mult * c;
                    for k in 0..m {
                        a[(k, src)] -= mult * partial[k] * c;
                    }
                }
            }
        }
        for &(k, rate) in &self.pumps {
            rhs[k] += rate;
            for src in 0..m {
                a[(k, src)] += rate * weight[src];
            }
        }
        a.lu().solve(&rhs).map(|v| v.iter().copied().collect()).ok_or(Error::Singular)
    }

    /// Time derivatives `(dN_k, dN_{K nu})` for the population ODE.
    pub(crate) fn rhs(&self, n_k: &[f64], n_two: &[Vec<f64>], d_k: &mut [f64], d_two: &mut [Vec<f64>]) {
        let excited: f64 = n_k.iter().sum::<f64>()
            + n_two
                .iter()
                .zip(&self.decay)
                .map(|(ns, ds)| ns.iter().zip(ds).map(|(v, (mult, _))| mult * v).sum::<f64>())
                .sum::<f64>();
        let ground = 1.0 - excited;
        for k in 0..self.m {
            d_k[k] = -self.gamma_tilde[k] * n_k[k];
        }
        for &(k, rate) in &self.pumps {
            d_k[k] += rate * ground;
        }
        for (s, (ns, ds)) in n_two.iter().zip(&self.decay).enumerate() {
            for (i, (v, (mult, partial))) in ns.iter().zip(ds).enumerate() {
                let feed: f64 = self.gain[s][i].iter().map(|&(src, c)| c * n_k[src]).sum();
                d_two[s][i] = feed - GAMMA_TOT * v;
                for k in 0..self.m {
                    d_k[k] += mult * partial[k] * v;
                }
            }
        }
    }

    pub(crate) fn sector_sizes(&self) -> Vec<usize> {
        self.decay.iter().map(Vec::len).collect()
    }
}

/// Relative deviation of two steady states, split by perturbative order:
/// the directly pumped wavenumbers form the `O(Xi)` block, every other
/// entry the `O(Xi^2)` block. Entries absent from `reference` are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyComparison {
    pub linear: f64,
    pub quadratic: f64,
}

impl SteadyComparison {
    pub fn max(&self) -> f64 {
        self.linear.max(self.quadratic)
    }
}

pub fn compare_steady(reference: &SteadyState, other: &SteadyState, pumped: &[WaveIndex]) -> SteadyComparison {
    let mut lin = (0.0f64, 0.0f64);
    let mut quad = (0.0f64, 0.0f64);
    for (k, &v) in &reference.n_k {
        let acc = if pumped.contains(k) { &mut lin } else { &mut quad };
        acc.0 = acc.0.max((v - other.n_k_at(*k)).abs());
        acc.1 = acc.1.max(v.abs());
    }
    for (id, &v) in &reference.n_two {
        quad.0 = quad.0.max((v - other.n_two_at(id)).abs());
        quad.1 = quad.1.max(v.abs());
    }
    let rel = |(d, s): (f64, f64)| if s > 0.0 { d / s } else { d };
    SteadyComparison { linear: rel(lin), quadratic: rel(quad) }
}

/// `G1 / (xi^2 |w|^2 M)` at detected wavenumber `k_bar` for any steady state.
pub fn g1_steady(params: &ChainParams, steady: &SteadyState, k_bar: WaveIndex, form: EtaForm) -> Result<f64> {
    check_grid(params, &[k_bar])?;
    let mut g = steady.n_k_at(k_bar);
    let mut cache: BTreeMap<WaveIndex, Vec<MomentumDistribution>> = BTreeMap::new();
    for (id, &n) in &steady.n_two {
        if n == 0.0 {
            continue;
        }
        if !cache.contains_key(&id.k_cm) {
            cache.insert(id.k_cm, sector_distributions(params, id.k_cm, form)?);
        }
        let d = cache[&id.k_cm].iter().find(|d| d.id == *id).expect("state of its own sector");
        g += id.multiplicity() * d.abs2_at(id.k_cm.half().sub(&k_bar)) * n;
    }
    Ok(g)
}

fn closed_regime_of(regime: Regime) -> Result<Regime> {
    match regime {
        Regime::Finite => {
            Err(Error::InvalidArgument("closed form holds for U = 0 or U >> gamma0 only".into()))
        }
        r => Ok(r),
    }
}

fn closed_regime(params: &ChainParams) -> Result<Regime> {
    closed_regime_of(params.regime())
}

fn delta(a: WaveIndex, b: WaveIndex) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Single-pump far-field intensity in the many-atom closed form.
pub fn g1_single_closed(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, xi: f64) -> Result<f64> {
    check_grid(params, &[k_p, k_bar])?;
    let d = delta(k_bar, k_p);
    let mut quad = d / 3.0;
    if closed_regime(params)? == Regime::Strong {
        let m = params.m as f64;
        quad += 16.0 / (m * m) * k_bar.sub(&k_p).ka().cos().powi(2);
    }
    Ok(xi * d + xi * xi * quad)
}

/// Single-pump far-field intensity from the momentum-distribution sums.
pub fn g1_single_sums(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, xi: f64, form: EtaForm) -> Result<f64> {
    check_grid(params, &[k_p, k_bar])?;
    let dists = sector_distributions(params, k_p.double(), form)?;
    let zero = WaveIndex::zero(params.m);
    let q = k_p.sub(&k_bar);
    Ok(xi * delta(k_bar, k_p) + xi * xi * nu_sum(&dists, |d| d.abs2_at(zero) * d.abs2_at(q)))
}

/// Emission spectrum `S gamma0 / (2 xi^2 |w|^2 M)` of the single-pump steady
/// state at detuning `omega - omega0` (units of `gamma0`).
pub fn spectrum_single(
    params: &ChainParams,
    k_p: WaveIndex,
    k_bar: WaveIndex,
    xi: f64,
    detuning: f64,
    form: EtaForm,
) -> Result<f64> {
    Ok(spectrum_single_many(params, k_p, k_bar, xi, &[detuning], form)?[0])
}

/// [`spectrum_single`] on a list of detunings, sharing the distributions.
pub fn spectrum_single_many(
    params: &ChainParams,
    k_p: WaveIndex,
    k_bar: WaveIndex,
    xi: f64,
    detunings: &[f64],
    form: EtaForm,
) -> Result<Vec<f64>> {
    check_grid(params, &[k_p, k_bar])?;
    let dists = sector_distributions(params, k_p.double(), form)?;
    let zero = WaveIndex::zero(params.m);
    let q = k_p.sub(&k_bar);
    let x = |d: &MomentumDistribution| d.abs2_at(q) * d.abs2_at(zero);
    let all = nu_sum(&dists, x);
    let scat = nu_sum(&dists, |d| if matches!(d.id.nu, Nu::Scattering(_)) { x(d) } else { 0.0 });
    let bs = all - scat;
    let d = delta(k_bar, k_p);
    let u = params.u;
    Ok(detunings
        .iter()
        .map(|&w| {
            let narrow = 2.0 / ((2.0 * w).powi(2) + 1.0);
            let wide = |c: f64| 1.0 / ((2.0 / 3.0 * (w - c)).powi(2) + 1.0);
            xi * (narrow * (d + 0.5 * xi * all) + xi / 3.0 * (wide(0.0) * scat + wide(u) * bs))
        })
        .collect())
}

/// Spectrum of an arbitrary steady state: each single-excitation level
/// radiates a width-`gamma0` Lorentzian at `omega0`, each two-excitation
/// level a width-`3 gamma0` one at `omega0` (scattering) or `omega0 + U`
/// (bound state).
pub fn spectrum_steady(
    params: &ChainParams,
    steady: &SteadyState,
    k_bar: WaveIndex,
    detunings: &[f64],
    form: EtaForm,
) -> Result<Vec<f64>> {
    check_grid(params, &[k_bar])?;
    let n1 = steady.n_k_at(k_bar);
    let mut terms: Vec<(f64, f64)> = Vec::new();
    let mut cache: BTreeMap<WaveIndex, Vec<MomentumDistribution>> = BTreeMap::new();
    for (id, &n) in &steady.n_two {
        if n == 0.0 {
            continue;
        }
        if !cache.contains_key(&id.k_cm) {
            cache.insert(id.k_cm, sector_distributions(params, id.k_cm, form)?);
        }
        let d = cache[&id.k_cm].iter().find(|d| d.id == *id).expect("state of its own sector");
        let centre = if id.nu == Nu::Bound { params.u } else { 0.0 };
        terms.push((centre, id.multiplicity() * d.abs2_at(id.k_cm.half().sub(&k_bar)) * n));
    }
    Ok(detunings
        .iter()
        .map(|&w| {
            let mut s = 2.0 * n1 / ((2.0 * w).powi(2) + 1.0);
            for &(c, a) in &terms {
                s += 2.0 / 3.0 * a / ((2.0 / 3.0 * (w - c)).powi(2) + 1.0);
            }
            s
        })
        .collect())
}

fn require_bound(params: &ChainParams) -> Result<()> {
    if params.regime() == Regime::NonInteracting {
        return Err(Error::InvalidArgument("no bound-state resonance at U = 0".into()));
    }
    Ok(())
}

/// Bound-state line `S(omega0 + U)` of the single-pump spectrum.
pub fn bound_peak_single(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, xi: f64, form: EtaForm) -> Result<f64> {
    require_bound(params)?;
    check_grid(params, &[k_p, k_bar])?;
    let sector = k_p.double();
    let id = StateId::bound(sector);
    if !sector_states(params, sector).contains(&id) {
        return Ok(0.0);
    }
    let d = MomentumDistribution::new(params, id, form)?;
    let zero = WaveIndex::zero(params.m);
    Ok(xi * xi / 3.0 * d.abs2_at(k_p.sub(&k_bar)) * d.abs2_at(zero))
}

/// Bound-state line at `k_bar` normalised to the line at `k_P`.
pub fn bound_signature(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, form: EtaForm) -> Result<f64> {
    let num = bound_peak_single(params, k_p, k_bar, 1.0, form)?;
    let den = bound_peak_single(params, k_p, k_p, 1.0, form)?;
    if den == 0.0 {
        return Err(Error::BoundStateAbsent { k_cm: k_p.double().signed(), hopping: f64::NAN, u: params.u });
    }
    Ok(num / den)
}

/// Closed forms of the single-pump spectrum at `omega0 + U` and `omega0`.
pub fn bound_peak_single_closed(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, xi: f64) -> Result<f64> {
    require_bound(params)?;
    closed_regime(params)?;
    let m = params.m as f64;
    Ok(xi * xi / 3.0 * 16.0 / (m * m) * k_bar.sub(&k_p).ka().cos().powi(2))
}

pub fn centre_peak_single_closed(params: &ChainParams, k_p: WaveIndex, k_bar: WaveIndex, xi: f64) -> Result<f64> {
    let d = delta(k_bar, k_p);
    let mut v = 2.0 * xi * d + 4.0 / 9.0 * xi * xi * d;
    if closed_regime(params)? == Regime::Strong {
        let m = params.m as f64;
        v += xi * xi * 16.0 / (m * m) * k_bar.sub(&k_p).ka().cos().powi(2);
    }
    Ok(v)
}

/// Momentum sums entering the two-pump observables at `q = (k1 - k2)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPumpSums {
    pub degenerate: bool,
    /// `sum_nu |eta^{(2k1,nu)}_0|^4`.
    pub s11: f64,
    /// `sum_nu |eta^{(k1+k2,nu)}_q|^4`.
    pub s12: f64,
    /// `sum_nu |eta^{(2k2,nu)}_{k2-k1}|^2 |eta^{(2k2,nu)}_0|^2`.
    pub s22: f64,
}

pub fn two_pump_sums(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, form: EtaForm) -> Result<TwoPumpSums> {
    check_grid(params, &[k1, k2])?;
    let zero = WaveIndex::zero(params.m);
    let q = k1.sub(&k2).half();
    let d11 = sector_distributions(params, k1.double(), form)?;
    let d12 = sector_distributions(params, k1.add(&k2), form)?;
    let d22 = sector_distributions(params, k2.double(), form)?;
    Ok(TwoPumpSums {
        degenerate: k1 == k2,
        s11: nu_sum(&d11, |d| d.abs2_at(zero).powi(2)),
        s12: nu_sum(&d12, |d| d.abs2_at(q).powi(2)),
        s22: nu_sum(&d22, |d| d.abs2_at(k2.sub(&k1)) * d.abs2_at(zero)),
    })
}

/// Two-pump intensity at the first detector (`beta_det = beta_1`).
pub fn g1_two_pump(sums: &TwoPumpSums, xi: f64, epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    let dd = if sums.degenerate { 1.0 } else { 0.0 };
    xi * (1.0 + e2 * dd)
        + xi * xi * sums.s11
        + 2.0 * e2 * xi * xi * sums.s12
        + e2 * e2 * 0.5 * xi * xi * (1.0 + dd) * sums.s22
}

/// Relative change of the nonlinear intensity caused by the second pump,
/// from the momentum sums.
pub fn delta_g1_nl_sums(sums: &TwoPumpSums, epsilon: f64) -> f64 {
    let nl = |e: f64| (g1_two_pump(sums, 1.0, e) - (1.0 + e * e * if sums.degenerate { 1.0 } else { 0.0 })) / 1.0;
    (nl(epsilon) - nl(0.0)) / nl(0.0)
}

/// Whether to keep the `1/M^2` bound-state corrections of a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    #[default]
    FiniteM,
    LargeM,
}

/// `delta G_NL / epsilon^2` in closed form as a function of `qa`;
/// `degenerate` marks `k1 = k2`.
pub fn delta_g1_nl_formula(regime: Regime, m: usize, qa: f64, degenerate: bool, epsilon: f64, limit: Limit) -> Result<f64> {
    let regime = closed_regime_of(regime)?;
    if degenerate {
        return Ok(epsilon * epsilon + 2.0);
    }
    let (c4, s4) = (qa.cos().powi(4), qa.sin().powi(4));
    let m2 = (m as f64).powi(2);
    Ok(match (regime, limit) {
        (Regime::NonInteracting, _) => 4.0,
        (_, Limit::FiniteM) => (4.0 / 3.0 * c4 + 4.0 * s4 + 32.0 / m2 * c4) / (1.0 / 3.0 + 16.0 / m2),
        (_, Limit::LargeM) => 4.0 * (c4 + 3.0 * s4) + 96.0 / m2 * c4,
    })
}

/// `delta G_NL / epsilon^2` for grid wavenumbers.
pub fn delta_g1_nl_over_eps2(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, epsilon: f64, limit: Limit) -> Result<f64> {
    check_grid(params, &[k1, k2])?;
    delta_g1_nl_formula(params.regime(), params.m, k1.sub(&k2).half().ka(), k1 == k2, epsilon, limit)
}

/// `delta G_NL` in closed form.
pub fn delta_g1_nl(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, epsilon: f64, limit: Limit) -> Result<f64> {
    Ok(epsilon * epsilon * delta_g1_nl_over_eps2(params, k1, k2, epsilon, limit)?)
}

/// Two-pump bound-state line `S(omega0 + U)` at the first detector.
pub fn bound_peak_two_closed(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, xi: f64, epsilon: f64) -> Result<f64> {
    require_bound(params)?;
    closed_regime(params)?;
    check_grid(params, &[k1, k2])?;
    let e2 = epsilon * epsilon;
    let qa = k1.sub(&k2).half().ka();
    let m2 = (params.m as f64).powi(2);
    Ok(16.0 * xi * xi / (3.0 * m2) * ((1.0 + e2 * e2 * delta(k1, k2)) + 2.0 * e2 * qa.cos().powi(4)))
}

/// Relative change of the two-pump bound-state line caused by the second pump.
pub fn delta_s(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, epsilon: f64) -> Result<f64> {
    let on = bound_peak_two_closed(params, k1, k2, 1.0, epsilon)?;
    let off = bound_peak_two_closed(params, k1, k2, 1.0, 0.0)?;
    Ok((on - off) / off)
}

/// `epsilon^2 (epsilon^2 delta_{q0} + 2 cos^4(qa))`.
pub fn delta_s_formula(qa: f64, degenerate: bool, epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    e2 * (e2 * if degenerate { 1.0 } else { 0.0 } + 2.0 * qa.cos().powi(4))
}

pub fn delta_s_closed(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, epsilon: f64) -> Result<f64> {
    require_bound(params)?;
    check_grid(params, &[k1, k2])?;
    Ok(delta_s_formula(k1.sub(&k2).half().ka(), k1 == k2, epsilon))
}

/// Zero-delay intensity correlation in closed form as a function of `qa`.
pub fn g2_formula(regime: Regime, m: usize, qa: f64, degenerate: bool, limit: Limit) -> Result<f64> {
    let regime = closed_regime_of(regime)?;
    let dq = if degenerate { 1.0 } else { 0.0 };
    let (c4, s4) = (qa.cos().powi(4), qa.sin().powi(4));
    let mut v = dq / 6.0;
    if regime == Regime::NonInteracting {
        v += 2.0 / 3.0 * (1.0 - dq);
    } else {
        v += 2.0 / 3.0 * (1.0 - dq) * (c4 + 3.0 * s4);
        if limit == Limit::FiniteM {
            v += 16.0 / (m as f64).powi(2) * (1.0 - 0.5 * dq) * c4;
        }
    }
    Ok(v)
}

/// Zero-delay intensity correlation for grid wavenumbers.
pub fn g2(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, limit: Limit) -> Result<f64> {
    check_grid(params, &[k1, k2])?;
    g2_formula(params.regime(), params.m, k1.sub(&k2).half().ka(), k1 == k2, limit)
}

/// `g2 = (1 - delta_{q0}/2) sum_nu |eta^{(k1+k2,nu)}_q|^4`.
pub fn g2_sums(params: &ChainParams, k1: WaveIndex, k2: WaveIndex, form: EtaForm) -> Result<f64> {
    check_grid(params, &[k1, k2])?;
    let q = k1.sub(&k2).half();
    let dists = sector_distributions(params, k1.add(&k2), form)?;
    Ok((1.0 - 0.5 * delta(k1, k2)) * nu_sum(&dists, |d| d.abs2_at(q).powi(2)))
}
