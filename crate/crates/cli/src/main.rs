//! `atomchain`: tables of few-excitation observables of an atomic chain.

mod config;
mod parse;
mod table;
mod tasks;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Format, FormName, LimitName, Loaded, ModeName, OutputSpec, Sampling, Snap, SumModeName, Task};
use parse::{Scalar, Sweep};

#[derive(Parser)]
#[command(name = "atomchain", version, about = "Few-excitation observables of a 1D chain of two-level atoms")]
struct Cli {
    /// Worker threads for sweeps. Overrides ATOMCHAIN_WORKERS; defaults to
    /// the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the config file.
    Run(TaskArgs),
    /// Complex coupling rates Gamma_x.
    Rates(TaskArgs),
    /// Single- and two-excitation dispersion relations.
    Dispersion(TaskArgs),
    /// Two-excitation eigenstates per centre-of-mass sector.
    Eigen(TaskArgs),
    /// Momentum distributions of relative wavefunctions.
    Momdist(TaskArgs),
    /// Spontaneous emission pattern of a two-excitation eigenstate.
    Pattern(TaskArgs),
    /// Far-field intensity of the single-pump steady state.
    Pump1(TaskArgs),
    /// Two-pump nonlinear response and bound-state signature.
    Pump2(TaskArgs),
    /// Emission spectrum of the single-pump steady state.
    Spectrum(TaskArgs),
    /// Zero-delay intensity correlation of the two-pump setup.
    G2(TaskArgs),
    /// Lattice sums over products of momentum distributions.
    Sums(TaskArgs),
    /// Run the oracle cross-checks; exits nonzero if a gated check fails.
    Verify(TaskArgs),
}

/// Flags shared by every task. Values given here override the config file.
#[derive(Args, Default)]
struct TaskArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Atom count (odd), or a sweep `v1,v2` / `from:to:count`.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// Wavelength over lattice constant, or a sweep.
    #[arg(long = "lambda-over-a", allow_hyphen_values = true)]
    lambda_over_a: Option<String>,
    /// Dipole angle to the chain axis.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Interaction in units of gamma0, `strong`, or a sweep.
    #[arg(long = "U", alias = "u", allow_hyphen_values = true)]
    u: Option<String>,
    /// Two-excitation state, `K=<k>,p=<k>` or `K=<k>,bs`.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// Centre-of-mass wavenumber of a sector.
    #[arg(long = "k-cm", allow_hyphen_values = true)]
    k_cm: Option<String>,
    /// Pump wavenumber.
    #[arg(long = "k-pump", allow_hyphen_values = true)]
    k_pump: Option<String>,
    /// Pump excitation angle.
    #[arg(long = "beta-exc", allow_hyphen_values = true)]
    beta_exc: Option<String>,
    /// Detected wavenumber.
    #[arg(long = "k-bar", allow_hyphen_values = true)]
    k_bar: Option<String>,
    /// Detection angle.
    #[arg(long = "beta-det", allow_hyphen_values = true)]
    beta_det: Option<String>,
    /// Angle of the second pump and detector.
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<String>,
    /// Pump rate in units of gamma0.
    #[arg(long)]
    xi: Option<f64>,
    /// Amplitude ratio of the second pump.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Retarded time in units of 1/gamma0.
    #[arg(long = "t-ret")]
    t_ret: Option<f64>,
    #[arg(long, value_enum)]
    form: Option<FormName>,
    #[arg(long, value_enum)]
    limit: Option<LimitName>,
    /// Single-excitation dispersion.
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long = "sum-mode", value_enum)]
    sum_mode: Option<SumModeName>,
    #[arg(long, value_enum)]
    sampling: Option<Sampling>,
    /// Angle sweep in fractions of pi.
    #[arg(long, allow_hyphen_values = true)]
    betas: Option<String>,
    /// Detuning sweep in units of gamma0.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    /// Relative wavenumbers in fractions of pi/a.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Largest site separation.
    #[arg(long = "x-max")]
    x_max: Option<usize>,
    #[arg(long, value_enum)]
    snap: Option<Snap>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn sweep(flag: &str, s: &Option<String>) -> Result<Option<Sweep>> {
    s.as_deref().map(Sweep::from_cli).transpose().with_context(|| format!("--{flag}"))
}

impl TaskArgs {
    /// Load the config file, if any, and apply the flags on top.
    fn load(&self) -> Result<Loaded> {
        let mut loaded = match &self.config {
            Some(p) => Loaded::from_file(p)?,
            None => Loaded::empty(),
        };
        let c = &mut loaded.config;
        if let Some(v) = sweep("m", &self.m)? {
            c.chain.m = Some(v);
        }
        if let Some(v) = sweep("lambda-over-a", &self.lambda_over_a)? {
            c.chain.lambda_over_a = Some(v);
        }
        if let Some(v) = &self.theta {
            c.chain.theta = Some(Scalar::Text(v.clone()));
        }
        if let Some(v) = sweep("U", &self.u)? {
            c.chain.u = Some(v);
        }
        let set = |dst: &mut Option<String>, src: &Option<String>| {
            if src.is_some() {
                *dst = src.clone();
            }
        };
        set(&mut c.state, &self.state);
        set(&mut c.k_cm, &self.k_cm);
        set(&mut c.k_pump, &self.k_pump);
        set(&mut c.beta_exc, &self.beta_exc);
        set(&mut c.k_bar, &self.k_bar);
        set(&mut c.beta_det, &self.beta_det);
        set(&mut c.beta2, &self.beta2);
        c.xi = self.xi.or(c.xi);
        c.epsilon = self.epsilon.or(c.epsilon);
        c.t_ret = self.t_ret.or(c.t_ret);
        c.form = self.form.or(c.form);
        c.limit = self.limit.or(c.limit);
        c.mode = self.mode.or(c.mode);
        c.sum_mode = self.sum_mode.or(c.sum_mode);
        c.sampling = self.sampling.or(c.sampling);
        c.x_max = self.x_max.or(c.x_max);
        c.snap = self.snap.or(c.snap);
        if let Some(v) = sweep("betas", &self.betas)? {
            c.betas = Some(v);
        }
        if let Some(v) = sweep("omega", &self.omega)? {
            c.omega = Some(v);
        }
        if let Some(v) = sweep("q", &self.q)? {
            c.q = Some(v);
        }
        let out = c.output.get_or_insert_with(OutputSpec::default);
        if self.output.is_some() {
            out.path = self.output.clone();
        }
        if self.format.is_some() {
            out.format = self.format;
        }
        Ok(loaded)
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ATOMCHAIN_WORKERS") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("ATOMCHAIN_WORKERS = `{v}` is not a count"))?)),
        Err(_) => Ok(None),
    }
}

fn output_format(out: &OutputSpec) -> Format {
    out.format.unwrap_or_else(|| match out.path.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "json" => Format::Json,
        _ => Format::Csv,
    })
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = workers(cli.workers)? {
        if n == 0 {
            bail!("worker count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (named, args) = match cli.command {
        Command::Run(a) => (None, a),
        Command::Rates(a) => (Some(Task::Rates), a),
        Command::Dispersion(a) => (Some(Task::Dispersion), a),
        Command::Eigen(a) => (Some(Task::Eigen), a),
        Command::Momdist(a) => (Some(Task::Momdist), a),
        Command::Pattern(a) => (Some(Task::Pattern), a),
        Command::Pump1(a) => (Some(Task::Pump1), a),
        Command::Pump2(a) => (Some(Task::Pump2), a),
        Command::Spectrum(a) => (Some(Task::Spectrum), a),
        Command::G2(a) => (Some(Task::G2), a),
        Command::Sums(a) => (Some(Task::Sums), a),
        Command::Verify(a) => (Some(Task::Verify), a),
    };
    let loaded = args.load()?;
    let task = match (named, loaded.config.task) {
        (Some(a), Some(b)) if a != b => return Err(loaded.error("task", format!("config names `{b}` but the subcommand is `{a}`"))),
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => bail!("no task: name one in the config or use a task subcommand"),
    };
    config::validate(&loaded, task)?;
    let out = loaded.config.output.clone().unwrap_or_default();
    let (table, ok) = if task == Task::Verify {
        tasks::verify()?
    } else {
        (tasks::Run::new(&loaded, task)?.execute()?, true)
    };
    let format = output_format(&out);
    match &out.path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(f);
            table.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(format, &mut w)?;
        }
    }
    if task == Task::Verify {
        let failed = table.rows.len() - table.rows.iter().filter(|r| r[4] == table::Cell::Bool(true)).count();
        eprintln!("verify: {} checks, {} below tolerance, gated suite {}", table.rows.len(), table.rows.len() - failed, if ok { "passed" } else { "FAILED" });
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
