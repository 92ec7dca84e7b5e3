//! Single- and two-excitation eigenstates of the tight-binding chain.
//!
//! Wavenumbers live on the discrete grid `ka = 2 pi j / M` with the signed
//! index `j` in `[-N/2, N/2]`; [`WaveIndex`] stores `ell = j + N/2` so that
//! all zone reductions are exact integer arithmetic modulo `M`. Because `M`
//! is odd, halving a wavenumber (`K/2`) is multiplication by the inverse of
//! 2 modulo `M` and stays on the grid.
//!
//! Wavefunction coefficients belong to the non-dissipative problem (real
//! parts of the rates set to zero), while energies and decay rates use the
//! full complex rates.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupling_rate, gamma_zero, ChainParams};

/// Degenerate-denominator threshold for the scattering phase.
pub const PHASE_DENOM_TOL: f64 = 1e-12;

/// A wavenumber on the Brillouin-zone grid of an `M`-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveIndex {
    ell: usize,
    m: usize,
}

impl PartialOrd for WaveIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for WaveIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.m, self.ell).cmp(&(other.m, other.ell))
    }
}

impl WaveIndex {
    /// Index from `ell` in `[0, M)`.
    pub fn new(ell: usize, m: usize) -> Result<Self> {
        if m % 2 == 0 || m < 3 {
            return Err(Error::InvalidParameter(format!("grid size {m} must be odd and >= 3")));
        }
        if ell >= m {
            return Err(Error::InvalidArgument(format!("ell = {ell} outside [0, {m})")));
        }
        Ok(WaveIndex { ell, m })
    }

    /// Index from a signed grid position, reduced into `[-N/2, N/2]`.
    pub fn from_signed(j: i64, m: usize) -> Self {
        let mm = m as i64;
        let half = (mm - 1) / 2;
        let ell = (j + half).rem_euclid(mm) as usize;
        WaveIndex { ell, m }
    }

    pub fn zero(m: usize) -> Self {
        Self::from_signed(0, m)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Signed position `j` in `[-N/2, N/2]`.
    pub fn signed(&self) -> i64 {
        self.ell as i64 - ((self.m as i64 - 1) / 2)
    }

    /// `k a = 2 pi j / M`, in `(-pi, pi)`.
    pub fn ka(&self) -> f64 {
        2.0 * PI * self.signed() as f64 / self.m as f64
    }

    pub fn is_zero(&self) -> bool {
        self.signed() == 0
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.m, other.m, "wavenumbers from different grids");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        Self::from_signed(self.signed() + other.signed(), self.m)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        Self::from_signed(self.signed() - other.signed(), self.m)
    }

    pub fn neg(&self) -> Self {
        Self::from_signed(-self.signed(), self.m)
    }

    pub fn double(&self) -> Self {
        Self::from_signed(2 * self.signed(), self.m)
    }

    /// The unique grid point `h` with `2h = self` modulo the zone.
    pub fn half(&self) -> Self {
        let inv2 = (self.m as i64 + 1) / 2;
        Self::from_signed(self.signed() * inv2, self.m)
    }

    /// Nearest grid point to `ka` (reduced into the zone) and the signed
    /// residual in units of the grid spacing.
    pub fn nearest(ka: f64, m: usize) -> (Self, f64) {
        let x = ka * m as f64 / (2.0 * PI);
        let mm = m as f64;
        let reduced = x - mm * (x / mm).round();
        let j = reduced.round();
        (Self::from_signed(j as i64, m), reduced - j)
    }

    /// Grid point at `ka`, or an off-grid error naming the nearest value when
    /// the residual exceeds `tol` grid spacings.
    pub fn exact(ka: f64, m: usize, tol: f64) -> Result<Self> {
        let (w, res) = Self::nearest(ka, m);
        if res.abs() > tol {
            return Err(Error::OffGrid { requested: ka, nearest: w.ka(), index: w.signed() });
        }
        Ok(w)
    }

    /// Every grid point in ascending `ka`.
    pub fn all(m: usize) -> impl Iterator<Item = WaveIndex> {
        (0..m).map(move |ell| WaveIndex { ell, m })
    }
}

/// Which couplings enter the single-excitation dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    TightBinding,
    FullRange,
}

/// Single-excitation eigenstate `|k>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleExcState {
    pub k: WaveIndex,
    /// `Re E_k - omega0`.
    pub re_energy: f64,
    /// `Gamma_k`.
    pub decay: f64,
}

pub fn single_dispersion(params: &ChainParams, k: WaveIndex, mode: DispersionMode) -> SingleExcState {
    let g0 = gamma_zero();
    let ka = k.ka();
    let (re_energy, decay) = match mode {
        DispersionMode::TightBinding => {
            let g1 = params.gamma1();
            let c = ka.cos();
            (g0.im / 2.0 + g1.im * c, g0.re + 2.0 * g1.re * c)
        }
        DispersionMode::FullRange => {
            let mut im = 0.0;
            let mut re = 0.0;
            for x in 1..=params.half_n() {
                let g = coupling_rate(params, x as i64).expect("x >= 1");
                let c = (ka * x as f64).cos();
                im += g.im * c;
                re += g.re * c;
            }
            (g0.im / 2.0 + im, g0.re + 2.0 * re)
        }
    };
    SingleExcState { k, re_energy, decay }
}

/// Label of a two-excitation state within a centre-of-mass sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nu {
    /// Scattering state with relative wavenumber `p > 0`.
    Scattering(WaveIndex),
    Bound,
}

/// A two-excitation eigenstate `|K nu>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId {
    pub k_cm: WaveIndex,
    pub nu: Nu,
}

impl StateId {
    pub fn scattering(k_cm: WaveIndex, p: WaveIndex) -> Self {
        StateId { k_cm, nu: Nu::Scattering(p) }
    }

    pub fn bound(k_cm: WaveIndex) -> Self {
        StateId { k_cm, nu: Nu::Bound }
    }

    /// How often the state appears in sums over `p` across the full zone:
    /// `p` and `-p` label the same relative wavefunction up to a phase.
    pub fn multiplicity(&self) -> f64 {
        match self.nu {
            Nu::Scattering(_) => 2.0,
            Nu::Bound => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoExcKind {
    Scattering {
        p: WaveIndex,
        /// `e^{i delta_Kp}` of the non-dissipative problem.
        phase: Complex64,
    },
    Bound {
        /// `alpha_K = -i Gamma_1 cos(Ka/2) / U` with the full complex rate.
        alpha: Complex64,
        /// `Im(Gamma_1) cos(Ka/2) / U`, the decay ratio of the wavefunction.
        alpha_hermitian: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoExcState {
    pub k_cm: WaveIndex,
    pub kind: TwoExcKind,
    /// `Re E - 2 omega0`.
    pub re_energy: f64,
    /// `Gamma_tot`.
    pub decay: f64,
}

impl TwoExcState {
    pub fn id(&self) -> StateId {
        match self.kind {
            TwoExcKind::Scattering { p, .. } => StateId::scattering(self.k_cm, p),
            TwoExcKind::Bound { .. } => StateId::bound(self.k_cm),
        }
    }

    /// Complex eigenvalue `Re E - i Gamma_tot / 2` relative to `2 omega0`.
    pub fn energy(&self) -> Complex64 {
        Complex64::new(self.re_energy, -self.decay / 2.0)
    }

    /// Relative wavefunction `Psi_x` for `x = 0..=x_max`.
    pub fn wavefunction(&self, params: &ChainParams, x_max: usize) -> RelativeWavefunction {
        let norm = 1.0 / (params.m as f64).sqrt();
        let psi = (0..=x_max)
            .map(|x| {
                if x == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                match self.kind {
                    TwoExcKind::Scattering { p, phase } => {
                        let arg = p.ka() * x as f64;
                        (Complex64::from_polar(1.0, arg) + phase * Complex64::from_polar(1.0, -arg)) * norm
                    }
                    TwoExcKind::Bound { alpha_hermitian, .. } => {
                        Complex64::new(alpha_hermitian.powi(x as i32 - 1), 0.0)
                    }
                }
            })
            .collect();
        RelativeWavefunction { psi }
    }
}

/// `Psi_x` on the relative coordinate, index `x` starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeWavefunction {
    pub psi: Vec<Complex64>,
}

impl RelativeWavefunction {
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Hopping `t_K = Im(Gamma_1) cos(Ka/2)` of the relative problem.
pub fn hopping(params: &ChainParams, k_cm: WaveIndex) -> f64 {
    params.gamma1().im * k_cm.half().ka().cos()
}

/// `e^{i delta}` for hopping `t`, interaction `u` and relative wavenumber `pa`.
pub fn phase_from(t: f64, u: f64, pa: f64) -> Result<Complex64> {
    let num = Complex64::new(t, 0.0) - Complex64::from_polar(u, pa);
    let den = Complex64::new(t, 0.0) - Complex64::from_polar(u, -pa);
    if den.norm() < PHASE_DENOM_TOL {
        return Err(Error::Degenerate(format!("phase-shift denominator vanishes (t = {t}, U = {u})")));
    }
    if u == 0.0 {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let z = -num / den;
    Ok(z / z.norm())
}

/// Scattering phase shift `e^{i delta_Kp}`.
pub fn phase_shift(params: &ChainParams, k_cm: WaveIndex, p: WaveIndex) -> Result<Complex64> {
    if p.is_zero() {
        return Err(Error::InvalidArgument("relative wavenumber p must be nonzero".into()));
    }
    phase_from(hopping(params, k_cm), params.u, p.ka())
}

fn scattering_energy(params: &ChainParams, k_cm: WaveIndex, p: WaveIndex) -> (f64, f64) {
    let g0 = gamma_zero();
    let g1 = params.gamma1();
    let cc = k_cm.half().ka().cos() * p.ka().cos();
    (g0.im + 2.0 * g1.im * cc, 2.0 * g0.re + 4.0 * g1.re * cc)
}

/// Scattering eigenstate with `p > 0`.
pub fn scattering_state(
    params: &ChainParams,
    k_cm: WaveIndex,
    p: WaveIndex,
) -> Result<(TwoExcState, RelativeWavefunction)> {
    if k_cm.m() != params.m || p.m() != params.m {
        return Err(Error::GridMismatch(k_cm.m().max(p.m()), params.m));
    }
    if p.signed() <= 0 {
        return Err(Error::InvalidArgument(format!("p index {} must be > 0", p.signed())));
    }
    let phase = match phase_shift(params, k_cm, p) {
        Ok(z) => z,
        Err(Error::Degenerate(_)) => Complex64::new(-1.0, 0.0),
        Err(e) => return Err(e),
    };
    let (re_energy, decay) = scattering_energy(params, k_cm, p);
    let state = TwoExcState { k_cm, kind: TwoExcKind::Scattering { p, phase }, re_energy, decay };
    let wf = state.wavefunction(params, params.half_n());
    Ok((state, wf))
}

/// Whether the non-dissipative criterion `|Im(Gamma_1) cos(Ka/2)| < U` holds.
pub fn bound_exists(params: &ChainParams, k_cm: WaveIndex) -> bool {
    params.u > 0.0 && hopping(params, k_cm).abs() < params.u
}

/// Two-body bound state of sector `K`, if it exists.
pub fn bound_state(params: &ChainParams, k_cm: WaveIndex) -> Option<(TwoExcState, RelativeWavefunction)> {
    if !bound_exists(params, k_cm) {
        return None;
    }
    let u = params.u;
    let g1 = params.gamma1();
    let c = k_cm.half().ka().cos();
    let alpha = Complex64::new(0.0, -1.0) * g1 * c / u;
    let alpha_hermitian = g1.im * c / u;
    let g0 = gamma_zero();
    let re_energy = g0.im + u - c * c * (g1.re * g1.re - g1.im * g1.im) / u;
    let decay = 2.0 * g0.re + 4.0 * c * c * g1.re * g1.im / u;
    let state = TwoExcState { k_cm, kind: TwoExcKind::Bound { alpha, alpha_hermitian }, re_energy, decay };
    let wf = state.wavefunction(params, params.half_n());
    Some((state, wf))
}

/// Eigenstate for a label.
pub fn two_exc_state(params: &ChainParams, id: StateId) -> Result<(TwoExcState, RelativeWavefunction)> {
    match id.nu {
        Nu::Scattering(p) => scattering_state(params, id.k_cm, p),
        Nu::Bound => bound_state(params, id.k_cm).ok_or(Error::BoundStateAbsent {
            k_cm: id.k_cm.signed(),
            hopping: hopping(params, id.k_cm),
            u: params.u,
        }),
    }
}

/// All two-excitation labels of sector `K`: scattering states with
/// `p = 1..=N/2` and the bound state when it exists.
pub fn sector_states(params: &ChainParams, k_cm: WaveIndex) -> Vec<StateId> {
    let mut out: Vec<StateId> = (1..=params.half_n() as i64)
        .map(|j| StateId::scattering(k_cm, WaveIndex::from_signed(j, params.m)))
        .collect();
    if bound_exists(params, k_cm) {
        out.push(StateId::bound(k_cm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(u: f64) -> ChainParams {
        ChainParams::new(101, 0.5, PI / 2.0, u).unwrap()
    }

    #[test]
    fn index_round_trip_and_halving() {
        for m in [3usize, 5, 101, 10001] {
            for w in WaveIndex::all(m) {
                let (back, res) = WaveIndex::nearest(w.ka(), m);
                assert_eq!(back, w);
                assert!(res.abs() < 1e-9);
                assert_eq!(w.half().double(), w);
                assert_eq!(w.add(&w.neg()), WaveIndex::zero(m));
            }
        }
    }

    #[test]
    fn nearest_reduces_into_zone() {
        let (w, res) = WaveIndex::nearest(2.0 * PI, 101);
        assert!(w.is_zero() && res.abs() < 1e-12);
        let (w, _) = WaveIndex::nearest(-2.0 * PI + 2.0 * PI * 3.0 / 101.0, 101);
        assert_eq!(w.signed(), 3);
        assert!(WaveIndex::exact(PI / 2.0, 101, 1e-9).is_err());
    }

    #[test]
    fn tight_binding_dispersion() {
        let p = params(0.0);
        let g1 = p.gamma1();
        let k0 = single_dispersion(&p, WaveIndex::zero(101), DispersionMode::TightBinding);
        assert!((k0.decay - (1.0 + 2.0 * g1.re)).abs() < 1e-14);
        let edge = WaveIndex::from_signed(50, 101);
        let ke = single_dispersion(&p, edge, DispersionMode::TightBinding);
        assert!((ke.decay - (1.0 + 2.0 * g1.re * edge.ka().cos())).abs() < 1e-14);
        for j in 1..=50 {
            let a = single_dispersion(&p, WaveIndex::from_signed(j, 101), DispersionMode::TightBinding);
            let b = single_dispersion(&p, WaveIndex::from_signed(-j, 101), DispersionMode::TightBinding);
            assert_eq!(a.decay, b.decay);
        }
    }

    #[test]
    fn phase_limits() {
        let p = params(0.0);
        let k = WaveIndex::from_signed(7, 101);
        let q = WaveIndex::from_signed(11, 101);
        assert_eq!(phase_shift(&p, k, q).unwrap(), Complex64::new(-1.0, 0.0));
        let z = phase_from(0.0, 3.0, 0.4).unwrap();
        assert!((z + Complex64::from_polar(1.0, 0.8)).norm() < 1e-15);
        assert!(matches!(phase_from(0.0, 0.0, 0.4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn scattering_energy_is_sum_of_single_energies() {
        let p = params(3.0);
        for (j1, j2) in [(3i64, -8i64), (20, 5), (-40, 33)] {
            let k1 = WaveIndex::from_signed(j1, 101);
            let k2 = WaveIndex::from_signed(j2, 101);
            let kc = k1.add(&k2);
            let mut rel = k1.sub(&k2).half();
            if rel.signed() < 0 {
                rel = rel.neg();
            }
            let (s, _) = scattering_state(&p, kc, rel).unwrap();
            let e1 = single_dispersion(&p, k1, DispersionMode::TightBinding);
            let e2 = single_dispersion(&p, k2, DispersionMode::TightBinding);
            assert!((s.re_energy - e1.re_energy - e2.re_energy).abs() < 1e-13);
            assert!((s.decay - e1.decay - e2.decay).abs() < 1e-13);
        }
    }

    #[test]
    fn free_scattering_is_a_sine() {
        let p = params(0.0);
        let pw = WaveIndex::from_signed(9, 101);
        let (_, wf) = scattering_state(&p, WaveIndex::zero(101), pw).unwrap();
        for (x, z) in wf.psi.iter().enumerate() {
            let expect = Complex64::new(0.0, 2.0 * (pw.ka() * x as f64).sin() / 101f64.sqrt());
            assert!((z - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn bound_state_properties() {
        assert!(bound_state(&params(0.0), WaveIndex::zero(101)).is_none());
        let strong = params(1e6);
        let (_, wf) = bound_state(&strong, WaveIndex::zero(101)).unwrap();
        assert_eq!(wf.psi[1], Complex64::new(1.0, 0.0));
        assert!(wf.psi[2].norm() < 1e-6);
        let mut last = f64::INFINITY;
        for u in [0.2, 0.5, 1.0, 5.0, 50.0] {
            let (s, _) = bound_state(&params(u), WaveIndex::zero(101)).unwrap();
            if let TwoExcKind::Bound { alpha_hermitian, .. } = s.kind {
                assert!(alpha_hermitian.abs() < 1.0 && alpha_hermitian.abs() < last);
                last = alpha_hermitian.abs();
            }
        }
    }
}
