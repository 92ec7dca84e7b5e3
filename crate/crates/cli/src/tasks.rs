//! One function per task, each producing a [`Table`].

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Result};
use atomchain::dynamics::{
    angle_to_ka, bound_pattern, bragg_angles, bragg_angles_ka, emission_pattern, DynamicsConfig, PatternSource,
};
use atomchain::eigen::{
    hopping, sector_states, single_dispersion, two_exc_state, DispersionMode, Nu, StateId, TwoExcKind, WaveIndex,
};
use atomchain::model::{coupling_rate, ChainParams};
use atomchain::momentum::{eta_windowed, lattice_sum, EtaForm, MomentumDistribution, SumKind, SumMode};
use atomchain::oracle::run_all;
use atomchain::pumped::{
    bound_signature, delta_g1_nl, delta_g1_nl_formula, delta_s, delta_s_formula, g1_single_closed, g1_single_sums,
    g2, g2_formula, spectrum_single_many, Limit,
};
use log::warn;
use rayon::prelude::*;

use crate::config::{FormName, LimitName, Loaded, ModeName, Sampling, Snap, SumModeName, Task};
use crate::parse::{self, Range, Scalar, Sweep, Wavenumber};
use crate::table::{col, Cell, Column, Table};

const DEFAULT_XI: f64 = 1e-3;
/// Residual below which a requested wavenumber counts as on the grid, in
/// grid spacings.
const GRID_TOL: f64 = 1e-9;

/// A validated run: the chains to sweep over plus the raw config.
pub struct Run<'a> {
    pub loaded: &'a Loaded,
    pub task: Task,
    pub chains: Vec<ChainParams>,
}

fn sweep_or(s: &Option<Sweep>, default: Scalar) -> Sweep {
    s.clone().unwrap_or(Sweep::One(default))
}

fn range(from: f64, to: f64, count: usize) -> Sweep {
    Sweep::Range(Range { from, to, count })
}

impl<'a> Run<'a> {
    pub fn new(loaded: &'a Loaded, task: Task) -> Result<Self> {
        let c = &loaded.config.chain;
        let ms = sweep_or(&c.m, Scalar::Num(101.0))
            .values(|v| {
                let x = parse::plain(v)?;
                if x.fract() != 0.0 || x < 1.0 {
                    bail!("{x} is not a positive integer");
                }
                Ok(x as usize)
            })
            .map_err(|e| loaded.error("m", e))?;
        let lambdas = sweep_or(&c.lambda_over_a, Scalar::Num(0.5)).values(parse::plain).map_err(|e| loaded.error("lambda_over_a", e))?;
        let us = sweep_or(&c.u, Scalar::Num(0.0)).values(parse::interaction).map_err(|e| loaded.error("u", e))?;
        let theta = match &c.theta {
            Some(t) => parse::angle_scalar(t).map_err(|e| loaded.error("theta", e))?,
            None => PI / 2.0,
        };
        let mut chains = Vec::new();
        for &m in &ms {
            for &l in &lambdas {
                for &u in &us {
                    let p = ChainParams { m, lambda_over_a: l, theta, gamma0: 1.0, u };
                    // Lattice sums only need the grid size, which may be even.
                    if task != Task::Sums {
                        p.validate().map_err(|e| loaded.error("chain", e))?;
                    }
                    chains.push(p);
                }
            }
        }
        Ok(Run { loaded, task, chains })
    }

    fn snap(&self) -> Snap {
        self.loaded.config.snap.unwrap_or_default()
    }

    fn form(&self) -> FormName {
        self.loaded.config.form.unwrap_or_default()
    }

    fn eta_form(&self) -> Result<EtaForm> {
        match self.form() {
            FormName::Exact => Ok(EtaForm::Exact),
            FormName::Asymptotic => Ok(EtaForm::Asymptotic),
            FormName::Windowed => Err(self.loaded.error("form", "`windowed` is only available for task `momdist`")),
        }
    }

    fn limit(&self) -> Limit {
        self.loaded.config.limit.unwrap_or(LimitName::LargeM).into()
    }

    /// Grid wavenumber for `ka`, snapped or rejected according to `snap`.
    fn on_grid(&self, key: &str, w: Wavenumber, m: usize) -> Result<WaveIndex> {
        match w {
            Wavenumber::Index(j) => {
                let h = (m as i64 - 1) / 2;
                if j.abs() > h {
                    return Err(self.loaded.error(key, format!("index {j} outside [-{h}, {h}] for M = {m}")));
                }
                Ok(WaveIndex::from_signed(j, m))
            }
            Wavenumber::Ka(ka) => match self.snap() {
                Snap::Exact => WaveIndex::exact(ka, m, GRID_TOL).map_err(|e| self.loaded.error(key, e)),
                Snap::Nearest => {
                    let (w, res) = WaveIndex::nearest(ka, m);
                    if res.abs() > GRID_TOL {
                        warn!(
                            "{key}: ka = {ka:.6} is off the grid for M = {m}; using nearest ka = {:.6} (index {})",
                            w.ka(),
                            w.signed()
                        );
                    }
                    Ok(w)
                }
            },
        }
    }

    fn wavenumber(&self, key: &str, expr: &str, m: usize) -> Result<WaveIndex> {
        let w = parse::wavenumber(expr).map_err(|e| self.loaded.error(key, e))?;
        self.on_grid(key, w, m)
    }

    /// Wavenumber `[k_at a sin(beta)]` imprinted or detected at angle `beta`.
    fn angle_k(&self, key: &str, expr: &str, p: &ChainParams) -> Result<WaveIndex> {
        let beta = parse::angle(expr).map_err(|e| self.loaded.error(key, e))?;
        self.on_grid(key, Wavenumber::Ka(p.k_at_a() * beta.sin()), p.m)
    }

    /// Either a wavenumber key or an angle key, with a default angle.
    fn k_or_angle(&self, k_key: &str, k: &Option<String>, b_key: &str, b: &Option<String>, p: &ChainParams) -> Result<Option<WaveIndex>> {
        match (k, b) {
            (Some(k), _) => self.wavenumber(k_key, k, p.m).map(Some),
            (None, Some(b)) => self.angle_k(b_key, b, p).map(Some),
            (None, None) => Ok(None),
        }
    }

    /// States named by `state`; `K=*` expands to every sector.
    fn states(&self, p: &ChainParams) -> Result<Vec<StateId>> {
        let expr = self.loaded.config.state.as_deref().ok_or_else(|| anyhow!("task `{}` needs `state`", self.task))?;
        let s = parse::state(expr).map_err(|e| self.loaded.error("state", e))?;
        let sectors: Vec<WaveIndex> = match s.k_cm {
            Some(k) => vec![self.on_grid("state", k, p.m)?],
            None => WaveIndex::all(p.m).collect(),
        };
        let nu = match s.p {
            None => Nu::Bound,
            Some(w) => {
                let pw = self.on_grid("state", w, p.m)?;
                if pw.signed() <= 0 {
                    return Err(self.loaded.error("state", format!("relative wavenumber must be positive, got index {}", pw.signed())));
                }
                Nu::Scattering(pw)
            }
        };
        Ok(sectors.into_iter().map(|k_cm| StateId { k_cm, nu }).collect())
    }

    fn state(&self, p: &ChainParams) -> Result<StateId> {
        match self.states(p)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(self.loaded.error("state", format!("task `{}` takes a single sector, not `K=*`", self.task))),
        }
    }

    /// Angles (radians) from a sweep given in fractions of pi.
    fn betas(&self) -> Result<Vec<f64>> {
        let s = self.loaded.config.betas.clone().unwrap_or_else(|| range(-0.5, 0.5, 2001));
        s.values(parse::angle_scalar).map_err(|e| self.loaded.error("betas", e))
    }

    fn beta2(&self, p: &ChainParams) -> Result<f64> {
        match &self.loaded.config.beta2 {
            Some(b) => parse::angle(b).map_err(|e| self.loaded.error("beta2", e)),
            None if p.lambda_over_a <= 1.0 => Ok(p.lambda_over_a.asin()),
            None => Ok(0.0),
        }
    }

    pub fn execute(&self) -> Result<Table> {
        match self.task {
            Task::Rates => self.rates(),
            Task::Dispersion => self.dispersion(),
            Task::Eigen => self.eigen(),
            Task::Momdist => self.momdist(),
            Task::Pattern => self.pattern(),
            Task::Pump1 => self.pump1(),
            Task::Pump2 => self.angle_sweep(false),
            Task::Spectrum => self.spectrum(),
            Task::G2 => self.angle_sweep(true),
            Task::Sums => self.sums(),
            Task::Verify => verify().map(|(t, _)| t),
        }
    }

    /// Run `f` for every chain in parallel and concatenate in sweep order.
    fn per_chain(&self, columns: Vec<Column>, f: impl Fn(&ChainParams) -> Result<Vec<Vec<Cell>>> + Sync) -> Result<Table> {
        let mut all = vec![col("m", "1"), col("lambda_over_a", "1"), col("u", "gamma0")];
        all.extend(columns);
        let blocks: Vec<Vec<Vec<Cell>>> = self.chains.par_iter().map(&f).collect::<Result<_>>()?;
        let mut t = Table::new(self.task, all);
        for (p, rows) in self.chains.iter().zip(blocks) {
            for row in rows {
                let mut full = vec![Cell::from(p.m), Cell::from(p.lambda_over_a), Cell::from(p.u)];
                full.extend(row);
                t.push(full);
            }
        }
        Ok(t)
    }

    fn rates(&self) -> Result<Table> {
        let x_max = self.loaded.config.x_max.unwrap_or(5);
        self.per_chain(vec![col("x", "a"), col("gamma_re", "gamma0"), col("gamma_im", "gamma0")], |p| {
            (0..=x_max as i64)
                .map(|x| {
                    let g = coupling_rate(p, x)?;
                    Ok(vec![x.into(), g.re.into(), g.im.into()])
                })
                .collect()
        })
    }

    fn dispersion(&self) -> Result<Table> {
        let mode: DispersionMode = self.loaded.config.mode.unwrap_or(ModeName::FullRange).into();
        let cols = vec![
            col("branch", "-"),
            col("ka", "pi"),
            col("pa", "pi"),
            col("re_energy", "gamma0"),
            col("decay", "gamma0"),
        ];
        self.per_chain(cols, |p| {
            let mut rows = Vec::new();
            for k in WaveIndex::all(p.m) {
                let s = single_dispersion(p, k, mode);
                rows.push(vec!["single".into(), (k.ka() / PI).into(), Cell::Empty, s.re_energy.into(), s.decay.into()]);
            }
            for k in WaveIndex::all(p.m) {
                for id in sector_states(p, k) {
                    let (s, _) = two_exc_state(p, id)?;
                    let (branch, pa) = match id.nu {
                        Nu::Scattering(pw) => ("scattering", Cell::from(pw.ka() / PI)),
                        Nu::Bound => ("bound", Cell::Empty),
                    };
                    rows.push(vec![branch.into(), (k.ka() / PI).into(), pa, s.re_energy.into(), s.decay.into()]);
                }
            }
            Ok(rows)
        })
    }

    fn eigen(&self) -> Result<Table> {
        let cols = vec![
            col("k_cm", "pi/a"),
            col("nu", "-"),
            col("p", "pi/a"),
            col("hopping", "gamma0"),
            col("re_energy", "gamma0"),
            col("decay", "gamma0"),
            col("phase_re", "1"),
            col("phase_im", "1"),
            col("alpha", "1"),
        ];
        self.per_chain(cols, |p| {
            let sectors: Vec<WaveIndex> = match &self.loaded.config.k_cm {
                Some(k) => vec![self.wavenumber("k_cm", k, p.m)?],
                None => WaveIndex::all(p.m).collect(),
            };
            let mut rows = Vec::new();
            for k in sectors {
                let t = hopping(p, k);
                for id in sector_states(p, k) {
                    let (s, _) = two_exc_state(p, id)?;
                    let (nu, pa, phase, alpha) = match s.kind {
                        TwoExcKind::Scattering { p: pw, phase } => {
                            ("scattering", Cell::from(pw.ka() / PI), Some(phase), Cell::Empty)
                        }
                        TwoExcKind::Bound { alpha_hermitian, .. } => ("bound", Cell::Empty, None, Cell::from(alpha_hermitian)),
                    };
                    rows.push(vec![
                        (k.ka() / PI).into(),
                        nu.into(),
                        pa,
                        t.into(),
                        s.re_energy.into(),
                        s.decay.into(),
                        phase.map(|z| z.re).into(),
                        phase.map(|z| z.im).into(),
                        alpha,
                    ]);
                }
            }
            Ok(rows)
        })
    }

    fn momdist(&self) -> Result<Table> {
        let form = self.form();
        let cols = vec![
            col("k_cm", "pi/a"),
            col("nu", "-"),
            col("p", "pi/a"),
            col("q", "pi/a"),
            col("eta_re", "1"),
            col("eta_im", "1"),
            col("eta_abs2", "1"),
            col("branching", "1"),
        ];
        self.per_chain(cols, |p| {
            let ids = match &self.loaded.config.k_cm {
                Some(k) => sector_states(p, self.wavenumber("k_cm", k, p.m)?),
                None => vec![self.state(p)?],
            };
            let blocks: Vec<Vec<Vec<Cell>>> = ids
                .par_iter()
                .map(|&id| {
                    let eta: Vec<_> = match form {
                        FormName::Windowed => WaveIndex::all(p.m).map(|q| eta_windowed(p, id, q)).collect::<Result<_, _>>()?,
                        FormName::Exact => MomentumDistribution::new(p, id, EtaForm::Exact)?.eta,
                        FormName::Asymptotic => MomentumDistribution::new(p, id, EtaForm::Asymptotic)?.eta,
                    };
                    let z: f64 = eta.iter().map(|e| e.norm_sqr()).sum();
                    let (nu, pa) = match id.nu {
                        Nu::Scattering(pw) => ("scattering", Cell::from(pw.ka() / PI)),
                        Nu::Bound => ("bound", Cell::Empty),
                    };
                    Ok(WaveIndex::all(p.m)
                        .zip(&eta)
                        .map(|(q, e)| {
                            let a2 = e.norm_sqr();
                            vec![
                                (id.k_cm.ka() / PI).into(),
                                nu.into(),
                                pa.clone(),
                                (q.ka() / PI).into(),
                                e.re.into(),
                                e.im.into(),
                                a2.into(),
                                (if z > 0.0 { a2 / z } else { 0.0 }).into(),
                            ]
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            Ok(blocks.into_iter().flatten().collect())
        })
    }

    fn pattern(&self) -> Result<Table> {
        let cfg = DynamicsConfig { form: self.eta_form()?, ..Default::default() };
        let t_ret = self.loaded.config.t_ret.unwrap_or(0.0);
        let cols = vec![
            col("k_cm", "pi/a"),
            col("beta_det", "pi"),
            col("width", "pi"),
            col("k_bar", "pi/a"),
            col("order", "1"),
            col("intensity", "1"),
        ];
        let betas = self.betas()?;
        self.per_chain(cols, |p| {
            let mut rows = Vec::new();
            for id in self.states(p)? {
                let samples = match id.nu {
                    Nu::Bound => bound_pattern(p, id.k_cm, &betas, t_ret)?,
                    Nu::Scattering(_) => emission_pattern(p, cfg, PatternSource::Two(id), t_ret)?,
                };
                rows.extend(samples.iter().map(|s| {
                    vec![
                        (id.k_cm.ka() / PI).into(),
                        (s.beta_det / PI).into(),
                        s.k_bar.map(|_| s.width / PI).into(),
                        s.k_bar.map(|k| k.ka() / PI).into(),
                        s.order.into(),
                        s.value.into(),
                    ]
                }));
            }
            Ok(rows)
        })
    }

    fn pump(&self, p: &ChainParams) -> Result<WaveIndex> {
        let c = &self.loaded.config;
        Ok(self.k_or_angle("k_pump", &c.k_pump, "beta_exc", &c.beta_exc, p)?.unwrap_or(WaveIndex::zero(p.m)))
    }

    fn pump1(&self) -> Result<Table> {
        let form = self.eta_form()?;
        let xi = self.loaded.config.xi.unwrap_or(DEFAULT_XI);
        let cols = vec![
            col("beta_det", "pi"),
            col("k_bar", "pi/a"),
            col("order", "1"),
            col("k_pump", "pi/a"),
            col("g1", "xi^2|w|^2 M"),
            col("g1_closed", "xi^2|w|^2 M"),
            col("bound_signature", "1"),
        ];
        self.per_chain(cols, |p| {
            let kp = self.pump(p)?;
            let mut rows = Vec::new();
            for kb in WaveIndex::all(p.m) {
                let g = g1_single_sums(p, kp, kb, xi, form)?;
                let closed = g1_single_closed(p, kp, kb, xi).ok();
                let sig = if p.u > 0.0 { bound_signature(p, kp, kb, form).ok() } else { None };
                for b in bragg_angles(p, kb) {
                    rows.push(vec![
                        (b.beta / PI).into(),
                        (kb.ka() / PI).into(),
                        b.order.into(),
                        (kp.ka() / PI).into(),
                        g.into(),
                        closed.into(),
                        sig.into(),
                    ]);
                }
            }
            rows.sort_by(|a, b| beta_of(a).total_cmp(&beta_of(b)));
            Ok(rows)
        })
    }

    fn spectrum(&self) -> Result<Table> {
        let form = self.eta_form()?;
        let c = &self.loaded.config;
        let xi = c.xi.unwrap_or(DEFAULT_XI);
        let omega = c.omega.clone().unwrap_or_else(|| range(-50.0, 50.0, 2001));
        let detunings = omega.values(parse::plain).map_err(|e| self.loaded.error("omega", e))?;
        let cols = vec![col("k_pump", "pi/a"), col("k_bar", "pi/a"), col("detuning", "gamma0"), col("spectrum", "2 xi^2|w|^2 M/gamma0")];
        self.per_chain(cols, |p| {
            let kp = self.pump(p)?;
            let kb = self.k_or_angle("k_bar", &c.k_bar, "beta_det", &c.beta_det, p)?.unwrap_or(kp);
            let s = spectrum_single_many(p, kp, kb, xi, &detunings, form)?;
            Ok(detunings
                .iter()
                .zip(s)
                .map(|(&w, v)| vec![(kp.ka() / PI).into(), (kb.ka() / PI).into(), w.into(), v.into()])
                .collect())
        })
    }

    /// `pump2` (`g2 == false`) and `g2` against the first detector angle.
    fn angle_sweep(&self, g2_task: bool) -> Result<Table> {
        let c = &self.loaded.config;
        let limit = self.limit();
        let eps = c.epsilon.unwrap_or(1.0);
        let mut cols = vec![col("beta1", "pi"), col("order", "1"), col("qa", "pi"), col("degenerate", "bool")];
        if g2_task {
            cols.push(col("g2", "1"));
        } else {
            cols.push(col("delta_g1_nl", "1"));
            cols.push(col("delta_s", "1"));
        }
        let sampling = c.sampling.unwrap_or_default();
        let betas = match sampling {
            Sampling::Continuous => self.betas()?,
            Sampling::Grid => Vec::new(),
        };
        self.per_chain(cols, |p| {
            let beta2 = self.beta2(p)?;
            let strong = p.u > 0.0;
            let mut rows: Vec<Vec<Cell>> = Vec::new();
            let mut push = |beta: f64, order: i64, qa: f64, deg: bool, vals: Vec<Cell>| {
                let mut row = vec![(beta / PI).into(), order.into(), (qa / PI).into(), deg.into()];
                row.extend(vals);
                rows.push(row);
            };
            match sampling {
                Sampling::Grid => {
                    let k2 = self.on_grid("beta2", Wavenumber::Ka(p.k_at_a() * beta2.sin()), p.m)?;
                    for k1 in WaveIndex::all(p.m) {
                        let qa = k1.sub(&k2).half().ka();
                        let vals = if g2_task {
                            vec![g2(p, k1, k2, limit)?.into()]
                        } else {
                            let ds = if strong { Some(delta_s(p, k1, k2, eps)?) } else { None };
                            vec![delta_g1_nl(p, k1, k2, eps, limit)?.into(), ds.into()]
                        };
                        for b in bragg_angles(p, k1) {
                            push(b.beta, b.order, qa, k1 == k2, vals.clone());
                        }
                    }
                }
                Sampling::Continuous => {
                    let ka2 = angle_to_ka(p, beta2);
                    let regime = p.regime();
                    let mut eval = |beta: f64, order: i64, deg: bool| -> Result<()> {
                        let d = angle_to_ka(p, beta) - ka2;
                        let qa = if deg { 0.0 } else { (d - 2.0 * PI * (d / (2.0 * PI)).round()) / 2.0 };
                        let vals = if g2_task {
                            vec![g2_formula(regime, p.m, qa, deg, limit)?.into()]
                        } else {
                            let ds = strong.then(|| delta_s_formula(qa, deg, eps));
                            vec![(eps * eps * delta_g1_nl_formula(regime, p.m, qa, deg, eps, limit)?).into(), ds.into()]
                        };
                        push(beta, order, qa, deg, vals);
                        Ok(())
                    };
                    for &b in &betas {
                        eval(b, 0, false)?;
                    }
                    for b in bragg_angles_ka(p, ka2) {
                        eval(b.beta, b.order, true)?;
                    }
                }
            }
            rows.sort_by(|a, b| beta_of(a).total_cmp(&beta_of(b)).then(bool_of(&a[3]).cmp(&bool_of(&b[3]))));
            Ok(rows)
        })
    }

    fn sums(&self) -> Result<Table> {
        let c = &self.loaded.config;
        let modes = c.sum_mode.unwrap_or(SumModeName::Both).modes();
        let qs = c.q.clone().unwrap_or(Sweep::List(vec![Scalar::Num(0.0), Scalar::Num(0.25), Scalar::Num(0.5)]));
        let mut ms: Vec<usize> = self.chains.iter().map(|p| p.m).collect();
        ms.dedup();
        let mut t = Table::new(
            Task::Sums,
            vec![col("m", "1"), col("q_index", "1"), col("qa", "pi"), col("kind", "-"), col("mode", "-"), col("value", "1")],
        );
        for m in ms {
            let idx = qs
                .values(|v| {
                    let w = match v {
                        Scalar::Num(x) => Wavenumber::Ka(x * PI),
                        Scalar::Text(s) => parse::wavenumber(s)?,
                    };
                    Ok(w)
                })
                .map_err(|e| self.loaded.error("q", e))?;
            for w in idx {
                let j = match w {
                    Wavenumber::Index(j) => j,
                    Wavenumber::Ka(ka) => {
                        let x = ka * m as f64 / (2.0 * PI);
                        let j = x.round();
                        if (x - j).abs() > GRID_TOL {
                            match self.snap() {
                                Snap::Exact => {
                                    return Err(self.loaded.error(
                                        "q",
                                        format!("qa = {ka:.6} is off the grid for M = {m}; nearest is {:.6} (index {j})", 2.0 * PI * j / m as f64),
                                    ))
                                }
                                Snap::Nearest => warn!("q: qa = {ka:.6} is off the grid for M = {m}; using index {j}"),
                            }
                        }
                        j as i64
                    }
                };
                let qa = 2.0 * PI * j as f64 / m as f64;
                let vals: Vec<(SumKind, SumMode, f64)> = SumKind::ALL
                    .par_iter()
                    .flat_map_iter(|&kind| modes.iter().map(move |&mode| (kind, mode, lattice_sum(kind, j, m, mode))))
                    .collect();
                for (kind, mode, v) in vals {
                    let mode = match mode {
                        SumMode::Finite => "finite",
                        SumMode::Limit => "limit",
                    };
                    t.push(vec![m.into(), j.into(), (qa / PI).into(), kind.name().into(), mode.into(), v.into()]);
                }
            }
        }
        Ok(t)
    }
}

fn beta_of(row: &[Cell]) -> f64 {
    match row[0] {
        Cell::Num(v) => v,
        _ => f64::NAN,
    }
}

fn bool_of(c: &Cell) -> bool {
    matches!(c, Cell::Bool(true))
}

/// Oracle suite as a table, plus whether every gated check passed.
pub fn verify() -> Result<(Table, bool)> {
    let checks = run_all()?;
    let mut t = Table::new(
        Task::Verify,
        vec![col("check", "-"), col("value", "1"), col("tolerance", "1"), col("gated", "bool"), col("passed", "bool")],
    );
    let mut ok = true;
    for c in checks {
        ok &= c.passed || !c.gated;
        t.push(vec![c.name.as_str().into(), c.value.into(), c.tolerance.into(), c.gated.into(), c.passed.into()]);
    }
    Ok((t, ok))
}
