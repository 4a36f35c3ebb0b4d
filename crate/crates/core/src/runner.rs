// SPDX-License-Identifier: Apache-2.0

//! Command-line experiments: argument types, orchestration and output files.
//!
//! Every file written here starts with a provenance record holding the tool
//! version, a timestamp and the full resolved configuration (including the
//! seed), so a run can be repeated from its own output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cd::{cd_sweep, CdConfig};
use crate::dynamics::{evolve_pure, AnnealPath, EvolutionConfig, TrajectoryTable};
use crate::encoding::{basis_label, index_bits, instance_for, readout, verify_instance, FactorInstance, Problem, VerificationReport};
use crate::error::{Error, Result};
use crate::linalg::QuantumState;
use crate::optimize::{optimize_crab, simulate, sweep_t, threshold_time, CostKind, NelderMeadConfig, NoiseMode, OptResult, OptimizerConfig};
use crate::schedule::Schedule;
use crate::spectrum::{min_gap, qsl, spectrum_curve, Pencil, SpectrumCurve, DEFAULT_POINTS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const TOOL: &str = env!("CARGO_PKG_NAME");

/// Smallest basis-state population considered when decoding factors; the
/// bar is raised to twice the uniform level `2/dim` on small registers.
const MIN_CANDIDATE_POPULATION: f64 = 0.05;

/// Default grid for `sweep`, in units of the speed-limit time.
const QSL_MULTIPLES: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

#[derive(Debug, Parser)]
#[command(name = "crabfactor", version, about = "Adiabatic factorization with CRAB-optimized schedules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gap curves along the linear path, minimum gap and speed-limit time.
    Spectrum(SpectrumArgs),
    /// Multi-restart CRAB optimization at one total time.
    Optimize(OptimizeArgs),
    /// Infidelity against total time for CRAB, the linear ramp and CD driving.
    Sweep(SweepArgs),
    /// Optimize, read out the final state and print the factors.
    Factor(FactorArgs),
    /// Brute-force check of an instance's zero-energy assignments.
    Verify(VerifyArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ProblemArgs {
    /// Built-in ω (21, 77, 91, 187, 703, 2479), any other odd semiprime
    /// (direct encoding), or a path to an instance JSON file.
    #[arg(long)]
    pub instance: String,
    /// Transverse-field strength of the initial Hamiltonian.
    #[arg(long, default_value_t = 10.0)]
    pub g: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct OptimizerArgs {
    /// Number of CRAB frequencies.
    #[arg(long = "n-c", default_value_t = 4)]
    pub n_c: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Master seed; a random one is drawn and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dephasing rate per qubit.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Integrator steps per evolution.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// energy or infidelity.
    #[arg(long, default_value = "energy")]
    pub cost: CostKind,
    /// open (optimize the noisy dynamics) or transfer (optimize noiselessly).
    #[arg(long, default_value = "open")]
    pub noise_mode: NoiseMode,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
}

impl OptimizerArgs {
    fn resolve_seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(rand::random)
    }

    /// Requires the seed to be resolved.
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            n_c: self.n_c,
            restarts: self.restarts,
            nelder_mead: NelderMeadConfig {
                max_iterations: self.max_iterations,
                ..NelderMeadConfig::default()
            },
            seed: self.seed.unwrap_or_default(),
            cost: self.cost,
            gamma: self.gamma,
            noise_mode: self.noise_mode,
            steps: self.steps,
        }
    }

    fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            gamma: self.gamma,
            ..EvolutionConfig::with_steps(self.steps)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("--max-iterations must be positive".into()));
        }
        self.config().validate()
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Grid points in s.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Highest level written to the CSV (all when absent).
    #[arg(long)]
    pub levels: Option<usize>,
    /// CSV file for the gap curves.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Total anneal time.
    #[arg(short = 'T', long = "total-time")]
    pub total_time: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Result JSON; traces go next to it as `<stem>_trace.csv` and, for
    /// closed runs, `<stem>_trajectory.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Crab,
    Linear,
    Cd,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crab" => Ok(Self::Crab),
            "linear" => Ok(Self::Linear),
            "cd" => Ok(Self::Cd),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}` (expected crab, linear or cd)"))),
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated subset of crab, linear, cd.
    #[arg(long, value_delimiter = ',', default_value = "crab")]
    pub method: Vec<Method>,
    /// Comma-separated total times; defaults to multiples of the
    /// speed-limit time.
    #[arg(long = "t", value_delimiter = ',')]
    pub times: Vec<f64>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Infidelity defining the threshold time.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    /// Output file: `.json` for full results, anything else for CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct FactorArgs {
    /// ω or a path to an instance JSON file.
    pub instance: String,
    #[arg(short = 'T', long = "total-time")]
    pub total_time: f64,
    #[arg(long, default_value_t = 10.0)]
    pub g: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Built-in or direct instance for a number, otherwise an instance file.
pub fn load_instance(spec: &str) -> Result<FactorInstance> {
    match spec.parse::<u64>() {
        Ok(omega) => instance_for(omega),
        Err(_) => FactorInstance::load(Path::new(spec)),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn problem(spec: &str, g: f64) -> Result<Problem> {
    check_positive("--g", g)?;
    Problem::new(load_instance(spec)?, g)
}

/// 0 success, 1 usage, 2 numerical failure, 3 factorization failure.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_factorization_failure() => 3,
        Error::NoZeroEnergy { .. } => 3,
        Error::InvalidArgument(_)
        | Error::UnsupportedInstance(_)
        | Error::InvalidOmega { .. }
        | Error::UnknownVariable(_)
        | Error::NonPositiveWeight(_)
        | Error::Capacity { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 1,
        _ => 2,
    }
}

#[derive(Serialize)]
struct Provenance<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    timestamp_unix: u64,
    config: &'a C,
}

impl<'a, C: Serialize> Provenance<'a, C> {
    fn new(command: &'static str, config: &'a C) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            config,
        }
    }
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    provenance: Provenance<'a, C>,
    result: &'a R,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<C: Serialize, R: Serialize>(path: &Path, command: &'static str, config: &C, result: &R) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(
        &mut w,
        &Document {
            provenance: Provenance::new(command, config),
            result,
        },
    )?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Opens a CSV file whose first line is `# <provenance JSON>`.
fn csv_with_header<C: Serialize>(path: &Path, command: &'static str, config: &C) -> Result<BufWriter<File>> {
    let mut w = create(path)?;
    writeln!(w, "# {}", serde_json::to_string(&Provenance::new(command, config))?)?;
    Ok(w)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn dominant(state: &QuantumState) -> (usize, f64) {
    state
        .populations()
        .into_iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("state has at least one amplitude")
}

fn is_factorization(omega: u64, (a, b): (u64, u64)) -> bool {
    a.checked_mul(b) == Some(omega) && a != 1 && b != 1
}

/// Marginal readout first. When a bit is ambiguous or the pair does not
/// multiply to `ω`, basis states are tried in decreasing population down to
/// `MIN_CANDIDATE_POPULATION` (or `2/dim`), as a sampled measurement would
/// be checked.
pub fn decode_factors(problem: &Problem, state: &QuantumState) -> Result<(u64, u64)> {
    let inst = &problem.instance;
    let omega = inst.omega();
    let marginal = match readout(state, inst) {
        Ok(pair) => Some(pair),
        Err(e) if e.is_factorization_failure() => None,
        Err(e) => return Err(e),
    };
    if let Some(pair) = marginal.filter(|p| is_factorization(omega, *p)) {
        return Ok(pair);
    }
    let floor = MIN_CANDIDATE_POPULATION.max(2.0 / state.dim() as f64);
    let mut ranked: Vec<(usize, f64)> = state.populations().into_iter().enumerate().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let found = ranked
        .iter()
        .take_while(|(_, p)| *p >= floor)
        .filter_map(|&(k, _)| inst.factors_from_bits(&index_bits(k, inst.n_qubits())).ok())
        .find(|p| is_factorization(omega, *p));
    found.ok_or_else(|| Error::FactorizationFailed {
        omega,
        detail: match marginal {
            Some((a, b)) => format!("read out {a} × {b} and no likely basis state factors ω"),
            None => "ambiguous readout and no likely basis state factors ω".into(),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub omega: u64,
    pub method: &'static str,
    pub n_qubits: usize,
    pub ground_degeneracy: usize,
    pub min_gap: f64,
    pub s_at_min: f64,
    pub t_qsl: f64,
}

pub fn spectrum_report(problem: &Problem, points: usize) -> Result<(SpectrumReport, SpectrumCurve)> {
    let pencil = Pencil::new(problem.h0.matrix().clone(), problem.hp.matrix().clone())?;
    let curve = spectrum_curve(&pencil, points)?;
    let m = min_gap(&pencil, &curve)?;
    Ok((
        SpectrumReport {
            omega: problem.instance.omega(),
            method: problem.instance.method(),
            n_qubits: problem.n_qubits(),
            ground_degeneracy: m.ground_degeneracy,
            min_gap: m.gap,
            s_at_min: m.s,
            t_qsl: qsl(m.gap)?,
        },
        curve,
    ))
}

pub fn cmd_spectrum(args: &SpectrumArgs, out: &mut dyn Write) -> Result<SpectrumReport> {
    let p = problem(&args.problem.instance, args.problem.g)?;
    let (report, curve) = spectrum_report(&p, args.points)?;
    writeln!(
        out,
        "ω = {} ({}, {} qubits)\nΔ_min = {:.4} at s = {:.4}\nT_QSL = {:.4}",
        report.omega, report.method, report.n_qubits, report.min_gap, report.s_at_min, report.t_qsl
    )?;
    if let Some(path) = &args.output {
        let w = csv_with_header(path, "spectrum", args)?;
        curve.write_csv(w, args.levels.unwrap_or(usize::MAX))?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub omega: u64,
    pub method: &'static str,
    pub n_qubits: usize,
    pub targets: Vec<String>,
    pub dominant_state: String,
    pub dominant_population: f64,
    /// `None` when the final state does not decode to a factor pair.
    pub factors: Option<(u64, u64)>,
    pub optimization: OptResult,
}

fn best_state(problem: &Problem, result: &OptResult, evolution: &EvolutionConfig) -> Result<QuantumState> {
    Ok(simulate(problem, &Schedule::crab(result.best_params.clone()), evolution)?.state)
}

pub fn optimize_report(problem: &Problem, total_time: f64, opt: &OptimizerArgs) -> Result<(OptimizeReport, QuantumState)> {
    let result = optimize_crab(problem, total_time, &opt.config())?;
    let state = best_state(problem, &result, &opt.evolution())?;
    let n = problem.n_qubits();
    let (k, pk) = dominant(&state);
    Ok((
        OptimizeReport {
            omega: problem.instance.omega(),
            method: problem.instance.method(),
            n_qubits: n,
            targets: problem.targets.iter().map(|&t| basis_label(t, n)).collect(),
            dominant_state: basis_label(k, n),
            dominant_population: pk,
            factors: decode_factors(problem, &state).ok(),
            optimization: result,
        },
        state,
    ))
}

fn write_trace(path: &Path, args: &OptimizeArgs, result: &OptResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(csv_with_header(path, "optimize", args)?);
    w.write_record(["restart", "iteration", "cost", "infidelity"])?;
    for r in &result.restarts {
        for (i, (c, f)) in r.cost_trace.iter().zip(&r.trace).enumerate() {
            w.write_record([r.index.to_string(), (i + 1).to_string(), c.to_string(), f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, args: &OptimizeArgs, problem: &Problem, result: &OptResult) -> Result<()> {
    let schedule = Schedule::crab(result.best_params.clone());
    let anneal = AnnealPath::new(problem.h0.matrix(), problem.hp.matrix(), &schedule)?;
    let evolution = EvolutionConfig {
        record_trajectory: true,
        record_stride: (args.optimizer.steps / 200).max(1),
        ..EvolutionConfig::with_steps(args.optimizer.steps)
    };
    let psi0 = match problem.initial_state() {
        QuantumState::Pure(v) => v,
        QuantumState::Mixed(_) => unreachable!("initial state is pure"),
    };
    let traj = evolve_pure(&anneal, &psi0, &evolution)?
        .trajectory
        .expect("trajectory was requested");
    let table = TrajectoryTable::new(&traj, &anneal, &problem.targets, problem.dim().min(8) - 1)?;
    table.write_csv(csv_with_header(path, "optimize", args)?)
}

pub fn cmd_optimize(args: &mut OptimizeArgs, out: &mut dyn Write) -> Result<OptimizeReport> {
    check_positive("-T", args.total_time)?;
    args.optimizer.resolve_seed();
    args.optimizer.validate()?;
    let p = problem(&args.problem.instance, args.problem.g)?;
    let (report, _) = optimize_report(&p, args.total_time, &args.optimizer)?;
    let r = &report.optimization;
    writeln!(
        out,
        "ω = {} at T = {} (seed {})\nbest infidelity {:.3e} (restart {}), mean {:.3e} ± {:.1e}, linear ramp {:.4}\ndominant state {} with population {:.4}",
        report.omega,
        r.total_time,
        args.optimizer.seed.unwrap_or_default(),
        r.best_infidelity,
        r.best_restart,
        r.mean_infidelity,
        r.std_infidelity,
        r.linear_infidelity,
        report.dominant_state,
        report.dominant_population,
    )?;
    match report.factors {
        Some((a, b)) => writeln!(out, "factors ({a}, {b})")?,
        None => writeln!(out, "final state does not decode to a factor pair")?,
    }
    if let Some(path) = &args.output {
        write_json(path, "optimize", args, &report)?;
        write_trace(&sibling(path, "trace"), args, r)?;
        if args.optimizer.gamma == 0.0 {
            write_trajectory(&sibling(path, "trajectory"), args, &p, r)?;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub total_time: f64,
    pub crab_best: Option<f64>,
    pub crab_mean: Option<f64>,
    pub crab_std: Option<f64>,
    pub linear: Option<f64>,
    pub cd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub omega: u64,
    pub t_qsl: f64,
    pub threshold: f64,
    /// First swept time at which a CRAB trace drops below the threshold.
    pub threshold_time: Option<f64>,
    pub rows: Vec<SweepRow>,
    pub crab: Vec<OptResult>,
}

pub fn sweep_report(problem: &Problem, times: &[f64], methods: &[Method], opt: &OptimizerArgs, threshold: f64) -> Result<SweepReport> {
    let (spec, _) = spectrum_report(problem, DEFAULT_POINTS)?;
    let times: Vec<f64> = if times.is_empty() {
        QSL_MULTIPLES
            .iter()
            .map(|m| (m * spec.t_qsl * 1e4).round() / 1e4)
            .collect()
    } else {
        times.to_vec()
    };
    for &t in &times {
        check_positive("--t", t)?;
    }
    let evolution = opt.evolution();
    let crab = if methods.contains(&Method::Crab) {
        sweep_t(problem, &times, &opt.config())?
    } else {
        Vec::new()
    };
    let linear = if methods.contains(&Method::Linear) {
        let zero = CdConfig {
            strength: 0.0,
            ..CdConfig::default()
        };
        Some(cd_sweep(problem, &times, &zero, &evolution)?)
    } else {
        None
    };
    let cd = if methods.contains(&Method::Cd) {
        Some(cd_sweep(problem, &times, &CdConfig::default(), &evolution)?)
    } else {
        None
    };
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| SweepRow {
            total_time: t,
            crab_best: crab.get(i).map(|r| r.best_infidelity),
            crab_mean: crab.get(i).map(|r| r.mean_infidelity),
            crab_std: crab.get(i).map(|r| r.std_infidelity),
            linear: linear.as_ref().map(|v| v[i].infidelity),
            cd: cd.as_ref().map(|v| v[i].infidelity),
        })
        .collect();
    Ok(SweepReport {
        omega: problem.instance.omega(),
        t_qsl: spec.t_qsl,
        threshold,
        threshold_time: threshold_time(&crab, threshold),
        rows,
        crab,
    })
}

fn sweep_columns(methods: &[Method]) -> Vec<&'static str> {
    let mut cols = vec!["T"];
    for m in [Method::Crab, Method::Linear, Method::Cd] {
        if methods.contains(&m) {
            match m {
                Method::Crab => cols.extend(["crab_best", "crab_mean", "crab_std"]),
                Method::Linear => cols.push("linear"),
                Method::Cd => cols.push("cd"),
            }
        }
    }
    cols
}

fn sweep_cells(row: &SweepRow) -> Vec<String> {
    [Some(row.total_time), row.crab_best, row.crab_mean, row.crab_std, row.linear, row.cd]
        .into_iter()
        .flatten()
        .map(|v| v.to_string())
        .collect()
}

pub fn cmd_sweep(args: &mut SweepArgs, out: &mut dyn Write) -> Result<SweepReport> {
    if args.method.is_empty() {
        return Err(Error::InvalidArgument("--method needs at least one of crab, linear, cd".into()));
    }
    check_positive("--threshold", args.threshold)?;
    for &t in &args.times {
        check_positive("--t", t)?;
    }
    args.optimizer.resolve_seed();
    args.optimizer.validate()?;
    let p = problem(&args.problem.instance, args.problem.g)?;
    let report = sweep_report(&p, &args.times, &args.method, &args.optimizer, args.threshold)?;
    let cols = sweep_columns(&args.method);
    writeln!(out, "ω = {}, T_QSL = {:.4}", report.omega, report.t_qsl)?;
    writeln!(out, "{}", cols.iter().map(|c| format!("{c:>11}")).collect::<String>())?;
    for row in &report.rows {
        let cells: String = [Some(row.total_time), row.crab_best, row.crab_mean, row.crab_std, row.linear, row.cd]
            .into_iter()
            .flatten()
            .map(|v| format!("{v:>11.4e}"))
            .collect();
        writeln!(out, "{cells}")?;
    }
    if args.method.contains(&Method::Crab) {
        match report.threshold_time {
            Some(t) => writeln!(out, "threshold time (infidelity < {}): {t}", args.threshold)?,
            None => writeln!(out, "no swept time reached infidelity < {}", args.threshold)?,
        }
    }
    if let Some(path) = &args.output {
        if path.extension().is_some_and(|e| e == "json") {
            write_json(path, "sweep", args, &report)?;
        } else {
            let mut w = csv::Writer::from_writer(csv_with_header(path, "sweep", args)?);
            w.write_record(&cols)?;
            for row in &report.rows {
                w.write_record(sweep_cells(row))?;
            }
            w.flush()?;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorReport {
    pub omega: u64,
    pub a: u64,
    pub b: u64,
    pub total_time: f64,
    pub infidelity: f64,
    pub dominant_state: String,
    pub dominant_population: f64,
}

pub fn cmd_factor(args: &mut FactorArgs, out: &mut dyn Write) -> Result<FactorReport> {
    check_positive("-T", args.total_time)?;
    args.optimizer.resolve_seed();
    args.optimizer.validate()?;
    let p = problem(&args.instance, args.g)?;
    let (report, state) = optimize_report(&p, args.total_time, &args.optimizer)?;
    let (a, b) = decode_factors(&p, &state)?;
    let result = FactorReport {
        omega: report.omega,
        a,
        b,
        total_time: args.total_time,
        infidelity: report.optimization.best_infidelity,
        dominant_state: report.dominant_state,
        dominant_population: report.dominant_population,
    };
    writeln!(out, "{} = {} × {}", result.omega, a, b)?;
    if let Some(path) = &args.output {
        write_json(path, "factor", args, &result)?;
    }
    Ok(result)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<VerificationReport> {
    let report = verify_instance(&load_instance(&args.instance)?)?;
    writeln!(
        out,
        "ω = {} ({}, {} qubits), minimum energy {}",
        report.omega, report.method, report.n_qubits, report.min_energy
    )?;
    for s in &report.solutions {
        match s.b {
            Some(b) => writeln!(out, "  {}  a = {}, b = {}", s.label, s.a, b)?,
            None => writeln!(out, "  {}  a = {} does not divide ω", s.label, s.a)?,
        }
    }
    writeln!(
        out,
        "{}",
        if report.is_unique() {
            "unique factorization"
        } else if report.all_factor() {
            "every zero-energy state factors ω"
        } else {
            "some zero-energy states do not factor ω"
        }
    )?;
    if let Some(path) = &args.output {
        write_json(path, "verify", args, &report)?;
    }
    if !report.all_factor() {
        return Err(Error::FactorizationFailed {
            omega: report.omega,
            detail: "a zero-energy assignment is not a factorization".into(),
        });
    }
    Ok(report)
}

/// Runs one parsed command, writing the summary to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(&a, out).map(drop),
        Command::Optimize(mut a) => cmd_optimize(&mut a, out).map(drop),
        Command::Sweep(mut a) => cmd_sweep(&mut a, out).map(drop),
        Command::Factor(mut a) => cmd_factor(&mut a, out).map(drop),
        Command::Verify(a) => cmd_verify(&a, out).map(drop),
    }
}
