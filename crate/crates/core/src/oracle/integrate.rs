use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{DensityState, DynamicsConfig, SpontaneousModel};
use crate::eigen::{StateId, WaveIndex};
use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::momentum::{EtaForm, MomentumDistribution};
use crate::pumped::{sector_distributions, PumpConfig, RateSystem, SteadyOrder, SteadyState};

/// Largest accepted step, in units of `1/gamma0`.
pub const MAX_STEP: f64 = 0.01;

/// Populations sampled along an integration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn steps(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if dt > MAX_STEP {
        return Err(Error::StepTooLarge(dt));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("end time {t_end} must be finite and >= 0")));
    }
    let n = (t_end / dt).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

/// Classical fourth-order Runge-Kutta on a flat state, recording every
/// `stride` steps plus the final point.
fn rk4(
    y0: Vec<f64>,
    n: usize,
    h: f64,
    stride: usize,
    f: impl Fn(&[f64], &mut [f64]),
) -> Vec<(f64, Vec<f64>)> {
    let stride = stride.max(1);
    let len = y0.len();
    let mut y = y0;
    let mut out = vec![(0.0, y.clone())];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut tmp = vec![0.0; len];
    for step in 1..=n {
        f(&y, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % stride == 0 || step == n {
            out.push((step as f64 * h, y.clone()));
        }
    }
    out
}

/// Numerical solution of the spontaneous-emission rate equations.
pub fn integrate_spontaneous(
    params: &ChainParams,
    config: DynamicsConfig,
    initial: &DensityState,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    let (n, h) = steps(t_end, dt)?;
    let model = SpontaneousModel::for_state(params, config, initial)?;
    let m = params.m;
    if initial.pop1.len() != m {
        return Err(Error::GridMismatch(initial.pop1.len(), m));
    }
    let ids: Vec<StateId> = initial.pop2.keys().copied().collect();
    let pack = |s: &DensityState| {
        let mut y = Vec::with_capacity(1 + m + ids.len());
        y.push(s.pop0);
        y.extend_from_slice(&s.pop1);
        y.extend(ids.iter().map(|id| s.pop2[id]));
        y
    };
    let unpack = |y: &[f64]| DensityState {
        pop0: y[0],
        pop1: y[1..=m].to_vec(),
        pop2: ids.iter().zip(&y[m + 1..]).map(|(id, v)| (*id, *v)).collect(),
        coherences: Default::default(),
    };
    let f = |y: &[f64], dy: &mut [f64]| {
        let d = model.rhs(&unpack(y)).expect("states covered by the model");
        dy.copy_from_slice(&pack(&d));
    };
    let samples = rk4(pack(initial), n, h, stride, f);
    Ok(Trajectory {
        times: samples.iter().map(|(t, _)| *t).collect(),
        states: samples.iter().map(|(_, y)| unpack(y)).collect(),
    })
}

/// Pumped occupations sampled along an integration; each snapshot uses the
/// steady-state layout, one entry per scattering label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PumpedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SteadyState>,
}

/// Numerical solution of the pumped rate equations from the vacuum.
pub fn integrate_pumped(
    params: &ChainParams,
    pumps: &PumpConfig,
    form: EtaForm,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<PumpedTrajectory> {
    let (n, h) = steps(t_end, dt)?;
    let m = params.m;
    let sectors: Vec<Vec<MomentumDistribution>> = WaveIndex::all(m)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|kk| sector_distributions(params, kk, form))
        .collect::<Result<_>>()?;
    let system = RateSystem::new(params, pumps, &sectors);
    let sizes = system.sector_sizes();
    let ids: Vec<StateId> = sectors.iter().flatten().map(|d| d.id).collect();
    let split = |y: &[f64]| {
        let mut two = Vec::with_capacity(m);
        let mut at = m;
        for &s in &sizes {
            two.push(y[at..at + s].to_vec());
            at += s;
        }
        two
    };
    let f = |y: &[f64], dy: &mut [f64]| {
        let two = split(y);
        let mut d_two: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
        let (d_k, rest) = dy.split_at_mut(m);
        system.rhs(&y[..m], &two, d_k, &mut d_two);
        for (dst, src) in rest.iter_mut().zip(d_two.iter().flatten()) {
            *dst = *src;
        }
    };
    let y0 = vec![0.0; m + ids.len()];
    let samples = rk4(y0, n, h, stride, f);
    let to_state = |y: &[f64]| SteadyState {
        m,
        n_k: WaveIndex::all(m).zip(&y[..m]).map(|(k, v)| (k, *v)).collect(),
        n_two: ids.iter().zip(&y[m..]).map(|(id, v)| (*id, *v)).collect::<BTreeMap<_, _>>(),
        order: SteadyOrder::Numeric,
    };
    Ok(PumpedTrajectory {
        times: samples.iter().map(|(t, _)| *t).collect(),
        states: samples.iter().map(|(_, y)| to_state(y)).collect(),
    })
}
