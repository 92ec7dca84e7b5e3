use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{complex_residual, detached, integrate_pumped, integrate_spontaneous, residual, TridiagonalProblem};
use crate::dynamics::{evolve_spontaneous, DensityState, DynamicsConfig};
use crate::eigen::{bound_state, hopping, scattering_state, single_dispersion, DispersionMode, StateId, WaveIndex};
use crate::error::Result;
use crate::model::{gamma_zero, ChainParams};
use crate::momentum::{eta_bruteforce, eta_closed, eta_windowed, lattice_sum, EtaForm, MomentumDistribution, SumKind, SumMode};
use crate::pumped::{
    compare_steady, g2, g2_sums, rate_steady_numeric, single_pump_steady, spectrum_single_many, two_pump_steady,
    g1_single_sums, Limit, PumpConfig,
};

/// Outcome of one comparison. Ungated checks are reported but never fail
/// the suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub gated: bool,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance, gated: true }
    }

    fn info(name: &str, value: f64, tolerance: f64) -> Self {
        Check { gated: false, ..Self::new(name, value, tolerance) }
    }
}

fn chain(m: usize, u: f64) -> ChainParams {
    ChainParams::new(m, 0.5, PI / 2.0, u).expect("valid chain")
}

fn rates() -> Result<Vec<Check>> {
    let p = chain(51, 0.0);
    let g0 = gamma_zero();
    let g1 = p.gamma1();
    let round3 = |v: f64| (v * 1e3).round() as i64;
    let dev = [(g0.re, 1.0), (g0.im, -0.637), (g1.re, 0.009), (g1.im, -0.119)]
        .iter()
        .filter(|(v, r)| round3(*v) != round3(*r))
        .count() as f64;
    let dicke = ChainParams::new(51, 2.0 * PI / 1e-4, PI / 2.0, 0.0)?;
    let g = single_dispersion(&dicke, WaveIndex::zero(51), DispersionMode::FullRange).decay;
    Ok(vec![
        Check::new("rates: Gamma0, Gamma1 at lambda/a = 0.5, digits off at 3 decimals", dev, 0.0),
        Check::new("rates: Dicke limit Gamma_{k=0} / M - 1", (g / 51.0 - 1.0).abs(), 1e-3),
    ])
}

fn relative() -> Result<Vec<Check>> {
    let p = chain(801, 0.0);
    let t = hopping(&p, WaveIndex::zero(801));
    let mut worst = 0.0f64;
    for ratio in [5.0, 50.0] {
        let u = ratio * t.abs();
        let prob = TridiagonalProblem { dimension: 400, hopping: t, impurity: u, offset: 0.0 };
        let e = detached(&prob)?.map_or(f64::INFINITY, |e| e.value);
        let expect = u + t * t / u;
        worst = worst.max(((e - expect) / expect).abs());
    }
    let free = TridiagonalProblem { dimension: 400, hopping: t, impurity: 0.0, offset: 0.0 };
    let spurious = if detached(&free)?.is_some() { 1.0 } else { 0.0 };

    let strong = chain(401, 5.0);
    let mut bound_res = 0.0f64;
    let mut bound_cres = 0.0f64;
    for j in [-150i64, -40, 0, 77, 200] {
        let (s, _) = bound_state(&strong, WaveIndex::from_signed(j, 401)).expect("bound state at U = 5");
        bound_res = bound_res.max(residual(&strong, &s, 200)?);
        bound_cres = bound_cres.max(complex_residual(&strong, &s, 200)?);
    }
    let scat = |m: usize| -> Result<f64> {
        let p = chain(m, 5.0);
        let k = WaveIndex::from_signed(3, m);
        let mut worst = 0.0f64;
        for j in 1..=(m as i64 - 1) / 2 {
            let (s, _) = scattering_state(&p, k, WaveIndex::from_signed(j, m))?;
            worst = worst.max(residual(&p, &s, (m - 1) / 2)?);
        }
        Ok(worst * ((m - 1) as f64).sqrt())
    };
    let (r1, r2) = (scat(101)?, scat(401)?);
    Ok(vec![
        Check::new("relative: detached eigenvalue vs U + t^2/U (rel)", worst, 1e-6),
        Check::new("relative: no detached eigenvalue at U = 0", spurious, 0.0),
        Check::new("relative: bound-state residual", bound_res, 1e-8),
        Check::new("relative: bound-state residual, dissipative", bound_cres, 1e-8),
        Check::new("relative: scattering residual * sqrt(N), M = 101", r1, 1.0),
        Check::new("relative: scattering residual * sqrt(N), M = 401", r2, 1.0),
    ])
}

fn momentum() -> Result<Vec<Check>> {
    let mut brute = 0.0f64;
    for u in [0.0, 1e6, 5.0] {
        let p = chain(101, u);
        for (jk, jp) in [(0i64, 25i64), (7, 3), (-31, 50), (12, 1)] {
            let k = WaveIndex::from_signed(jk, 101);
            let mut ids = vec![StateId::scattering(k, WaveIndex::from_signed(jp, 101))];
            if u > 0.0 {
                ids.push(StateId::bound(k));
            }
            for id in ids {
                let (s, _) = crate::eigen::two_exc_state(&p, id)?;
                let wf = s.wavefunction(&p, p.n());
                for q in WaveIndex::all(101) {
                    brute = brute.max((eta_closed(&p, id, q)? - eta_bruteforce(&wf, q)?).norm());
                }
            }
        }
    }
    let window = |m: usize| -> Result<f64> {
        let p = chain(m, 5.0);
        let id = StateId::bound(WaveIndex::from_signed(2, m));
        let mut worst = 0.0f64;
        for q in WaveIndex::all(m) {
            worst = worst.max((eta_windowed(&p, id, q)? - eta_closed(&p, id, q)?).norm());
        }
        Ok(worst)
    };
    let w: Vec<f64> = [101usize, 201, 401].iter().map(|&m| window(m)).collect::<Result<_>>()?;
    let scat_window = {
        let p = chain(101, 1e6);
        let id = StateId::scattering(WaveIndex::zero(101), WaveIndex::from_signed(25, 101));
        let mut worst = 0.0f64;
        for q in WaveIndex::all(101) {
            worst = worst.max((eta_windowed(&p, id, q)? - eta_closed(&p, id, q)?).norm());
        }
        worst
    };
    let mut bound_sum = [0.0f64; 2];
    let mut scat_sum = 0.0f64;
    for (i, u) in [1e6, 5.0].into_iter().enumerate() {
        let p = chain(101, u);
        for j in [-40i64, 0, 9, 33] {
            let k = WaveIndex::from_signed(j, 101);
            let d = MomentumDistribution::new(&p, StateId::bound(k), EtaForm::Exact)?;
            bound_sum[i] = bound_sum[i].max((d.sum_rule() - 2.0).abs());
            for jp in (1..=50).step_by(7) {
                let d = MomentumDistribution::new(&p, StateId::scattering(k, WaveIndex::from_signed(jp, 101)), EtaForm::Exact)?;
                scat_sum = scat_sum.max((d.sum_rule() - 2.0).abs() * 101.0);
            }
        }
    }
    let mut sums = 0.0f64;
    let m = 10_000usize;
    for jq in [0i64, 1250, 2500] {
        for kind in [SumKind::QBg, SumKind::QCross, SumKind::RBg, SumKind::RCross] {
            let a = lattice_sum(kind, jq, m, SumMode::Finite);
            let b = lattice_sum(kind, jq, m, SumMode::Limit);
            sums = sums.max((a - b).abs());
        }
    }
    Ok(vec![
        Check::new("momentum: closed vs brute-force transform, M = 101", brute, 1e-10),
        Check::new("momentum: bound windowed vs closed * M, M = 101", w[0] * 101.0, 10.0),
        Check::new("momentum: bound windowed vs closed * M, M = 201", w[1] * 201.0, 10.0),
        Check::new("momentum: bound windowed vs closed * M, M = 401", w[2] * 401.0, 10.0),
        Check::new("momentum: bound windowed error ratio M = 401 / 101", w[2] / w[0], 0.5),
        Check::info("momentum: scattering windowed vs closed, M = 101", scat_window, 10.0 / 101.0),
        Check::new("momentum: bound-state sum rule |Z - 2|, U >> gamma0", bound_sum[0], 1e-12),
        Check::info("momentum: bound-state sum rule |Z - 2|, U = 5", bound_sum[1], 1e-12),
        Check::info("momentum: scattering sum rule M |Z - 2|, M = 101", scat_sum, 5.0),
        Check::new("momentum: lattice sums at M = 10^4 vs limits", sums, 1e-3),
    ])
}

fn dynamics() -> Result<Vec<Check>> {
    let cfg = DynamicsConfig::default();
    let mut worst = 0.0f64;
    let mut trace = 0.0f64;
    for u in [0.0, 1e6] {
        let p = chain(21, u);
        let mut ids = vec![StateId::scattering(WaveIndex::from_signed(4, 21), WaveIndex::from_signed(5, 21))];
        if u > 0.0 {
            ids.push(StateId::bound(WaveIndex::from_signed(-2, 21)));
        }
        for id in ids {
            let init = DensityState::two(id);
            let traj = integrate_spontaneous(&p, cfg, &init, 10.0, 0.002, 500)?;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let exact = evolve_spontaneous(&p, cfg, &init, *t)?;
                let d = s.pop1.iter().zip(&exact.pop1).fold((s.pop0 - exact.pop0).abs(), |a, (x, y)| a.max((x - y).abs()));
                let d2 = (s.pop2[&id] - exact.pop2[&id]).abs();
                worst = worst.max(d).max(d2);
                trace = trace.max((s.trace() - 1.0).abs());
            }
        }
    }
    Ok(vec![
        Check::new("dynamics: rate ODE vs closed form, t <= 10", worst, 1e-8),
        Check::new("dynamics: ODE trace error", trace, 1e-8),
    ])
}

fn pumped() -> Result<Vec<Check>> {
    let xi = 1e-3;
    let cases: Vec<(f64, i64, i64, f64)> =
        vec![(0.0, 3, 3, 0.0), (1e6, 3, 3, 0.0), (5.0, -4, 4, 0.0), (0.0, 2, -5, 0.5), (1e6, 6, 1, 0.8), (5.0, 0, 0, 0.5)];
    let results: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|&(u, j1, j2, e)| -> Result<(f64, f64)> {
            let m = 21;
            let p = chain(m, u);
            let (k1, k2) = (WaveIndex::from_signed(j1, m), WaveIndex::from_signed(j2, m));
            let (analytic, cfg) = if e == 0.0 {
                (single_pump_steady(&p, k1, xi, EtaForm::Asymptotic)?, PumpConfig::single(k1, xi))
            } else {
                (two_pump_steady(&p, k1, k2, xi, e, EtaForm::Asymptotic)?, PumpConfig::two(k1, k2, xi, e))
            };
            let numeric = rate_steady_numeric(&p, &cfg, EtaForm::Asymptotic)?;
            let rel = compare_steady(&analytic, &numeric, &[k1, k2]).max() / xi;
            let ode = integrate_pumped(&p, &cfg, EtaForm::Asymptotic, 50.0, 0.01, usize::MAX)?;
            let last = ode.states.last().expect("final state");
            let c = compare_steady(&numeric, last, &[k1, k2]);
            Ok((rel, c.max()))
        })
        .collect::<Result<_>>()?;
    let rel = results.iter().fold(0.0f64, |a, r| a.max(r.0));
    let ode = results.iter().fold(0.0f64, |a, r| a.max(r.1));
    Ok(vec![
        Check::new("pumped: analytic vs numeric steady state / Xi", rel, 10.0),
        Check::new("pumped: ODE at t = 50 vs numeric steady state (rel)", ode, 1e-6),
    ])
}

fn observables() -> Result<Vec<Check>> {
    let m = 101;
    let mut g2_dev = 0.0f64;
    for u in [0.0, 1e6] {
        let p = chain(m, u);
        for (j1, j2) in [(10i64, 10i64), (6, -8), (26, 0)] {
            let (k1, k2) = (WaveIndex::from_signed(j1, m), WaveIndex::from_signed(j2, m));
            let a = g2(&p, k1, k2, Limit::FiniteM)?;
            let b = g2_sums(&p, k1, k2, EtaForm::Asymptotic)?;
            g2_dev = g2_dev.max((a - b).abs());
        }
    }
    let p = chain(m, 0.0);
    let kp = WaveIndex::from_signed(5, m);
    let n = 200_001;
    let grid: Vec<f64> = (0..n).map(|i| -50.0 + 100.0 * i as f64 / (n - 1) as f64).collect();
    let s = spectrum_single_many(&p, kp, kp, 1e-3, &grid, EtaForm::Asymptotic)?;
    let h = 100.0 / (n - 1) as f64;
    let integral = h * (s.iter().sum::<f64>() - 0.5 * (s[0] + s[n - 1]));
    let g1 = g1_single_sums(&p, kp, kp, 1e-3, EtaForm::Asymptotic)?;
    Ok(vec![
        Check::new("observables: g2 closed form vs momentum sums (M = 101)", g2_dev, 0.05),
        Check::new("observables: spectrum integral / (pi G1) - 1", (integral / (PI * g1) - 1.0).abs(), 0.01),
    ])
}

/// Every oracle comparison, in a fixed order.
pub fn run_all() -> Result<Vec<Check>> {
    let groups: Vec<fn() -> Result<Vec<Check>>> = vec![rates, relative, momentum, dynamics, pumped, observables];
    let out: Vec<Vec<Check>> = groups
        .par_iter()
        .map(|f| {
            let t0 = std::time::Instant::now();
            let r = f();
            log::debug!("verify group finished in {:?}", t0.elapsed());
            r
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}
