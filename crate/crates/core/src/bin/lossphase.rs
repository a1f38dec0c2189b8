//! Command-line front end: single-point solves, sweeps, bound and classical
//! reports, and Monte Carlo validation.
//!
//! Exit status is 0 on success, 1 on a numerical failure and 2 on a usage
//! error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use lossphase::bounds::{
    bound_report, classical_asymptotic_cost_at, classical_cost_lenient, classical_optimal_tau,
    gain_factor_for, minimize_classical_tau, BoundForm, ClassicalEval,
};
use lossphase::eigen::DEFAULT_TOL;
use lossphase::simulator::MonteCarlo;
use lossphase::sweep::{self, format_number, meta_json, Outputs, SweepConfig};
use lossphase::{optimize, CostSpec, Error, LossModel};

/// Seed used by `simulate` when none is given.
const DEFAULT_SEED: u64 = 2013;

#[derive(Parser)]
#[command(name = "lossphase", version, about = "Optimal phase estimation with photon loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal probe state and minimal average cost for one configuration.
    Optimal(OptimalArgs),
    /// Table over photon numbers and losses.
    Sweep(SweepArgs),
    /// Analytic lower bounds and the quantum gain factor.
    Bounds(BoundsArgs),
    /// Coherent-state benchmark with a beam-splitter input.
    Classical(ClassicalArgs),
    /// Monte Carlo run of the optimal measurement.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct LossArgs {
    /// Transmission of both arms.
    #[arg(long, conflicts_with_all = ["eta_a", "eta_b"])]
    eta: Option<f64>,
    /// Transmission of arm a [default: 1].
    #[arg(long)]
    eta_a: Option<f64>,
    /// Transmission of arm b [default: 1].
    #[arg(long)]
    eta_b: Option<f64>,
}

impl LossArgs {
    fn resolve(&self) -> Result<LossModel, Failure> {
        let loss = match self.eta {
            Some(eta) => LossModel::equal(eta),
            None => LossModel::new(self.eta_a.unwrap_or(1.0), self.eta_b.unwrap_or(1.0)),
        };
        Ok(loss?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimalArgs {
    /// Total photon number.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write the optimal amplitudes as CSV (`n,alpha`).
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Photon numbers: `1,2,5`, `1..100` or `log:1..10000[:per_decade]`.
    #[arg(long)]
    n: String,
    /// Equal-arm transmissions [default: 1,0.8,0.6].
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["loss", "eta_a", "eta_b"])]
    eta: Vec<f64>,
    /// Transmission pairs `eta_a:eta_b`, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["eta_a", "eta_b"])]
    loss: Vec<String>,
    /// Single pair, arm a [default: 1].
    #[arg(long)]
    eta_a: Option<f64>,
    /// Single pair, arm b [default: 1].
    #[arg(long)]
    eta_b: Option<f64>,
    /// Column sets, from `optimal,bound,classical,gain`.
    #[arg(long, default_value = "optimal,bound,classical,gain")]
    outputs: String,
    /// Emit the optimal amplitude profiles instead.
    #[arg(long)]
    profile: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; rows already present in it are kept and skipped.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "LOSSPHASE_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Total photon number; not needed with `--gain`.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    loss: LossArgs,
    /// Use the equal-arm bound (needs matching transmissions).
    #[arg(long, conflicts_with = "relaxed")]
    equal_arms: bool,
    /// Use the bound that keeps only the weaker arm's loss.
    #[arg(long)]
    relaxed: bool,
    /// Report only the asymptotic gain factor.
    #[arg(long)]
    gain: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ClassicalArgs {
    /// Mean photon number of the coherent state.
    #[arg(long)]
    n: Option<f64>,
    #[command(flatten)]
    loss: LossArgs,
    /// Beam-splitter transmission into arm a [default: asymptotic optimum].
    #[arg(long, conflicts_with_all = ["tau_opt", "minimize"])]
    tau: Option<f64>,
    /// Use (or, without `--n`, just report) the asymptotically optimal splitting.
    #[arg(long)]
    tau_opt: bool,
    /// Minimize the finite-N cost over the splitting numerically.
    #[arg(long, requires = "n", conflicts_with = "tau_opt")]
    minimize: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// True phase of the run.
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write every estimate, one per line.
    #[arg(long)]
    estimates_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Why a command stopped; decides the exit status.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            // Domain errors at this level come from the arguments.
            Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numeric(format!("i/o error: {e}"))
    }
}

enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Num(x) if *x == 0.0 || (1e-4..1e7).contains(&x.abs()) => x.to_string(),
            Cell::Num(x) => format!("{x:e}"),
            Cell::Empty => "-".into(),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// One-row report shared by the single-point commands.
struct Report {
    config: Value,
    tol: f64,
    seed: Option<u64>,
    fields: Vec<(&'static str, Cell)>,
}

impl Report {
    fn new(config: Value, tol: f64) -> Self {
        Report {
            config,
            tol,
            seed: None,
            fields: Vec::new(),
        }
    }

    fn add(&mut self, key: &'static str, cell: Cell) -> &mut Self {
        self.fields.push((key, cell));
        self
    }

    fn render(&self, format: Format) -> Result<Vec<u8>, Failure> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut buf);
                let header: Vec<&str> = self.fields.iter().map(|(k, _)| *k).collect();
                let row: Vec<String> = self.fields.iter().map(|(_, c)| c.csv()).collect();
                w.write_record(&header).map_err(csv_failure)?;
                w.write_record(&row).map_err(csv_failure)?;
                w.flush()?;
            }
            Format::Json => {
                let row: Map<String, Value> = self
                    .fields
                    .iter()
                    .map(|(k, c)| (k.to_string(), c.json()))
                    .collect();
                let doc = json!({
                    "config": self.config,
                    "rows": [row],
                    "meta": meta_json(self.tol, self.seed),
                });
                write_json(&mut buf, &doc)?;
            }
            Format::Text => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, c) in &self.fields {
                    writeln!(buf, "{k:<width$}  {}", c.text())?;
                }
            }
        }
        Ok(buf)
    }
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Numeric(format!("i/o error: {e}"))
}

fn write_json(out: &mut Vec<u8>, doc: &Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, doc).map_err(|e| Failure::Numeric(e.to_string()))?;
    out.push(b'\n');
    Ok(())
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            // Write beside the target first so an interrupted run never
            // truncates a table that a later resume depends on.
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            {
                let mut f = BufWriter::new(File::create(&tmp)?);
                f.write_all(bytes)?;
                f.flush()?;
            }
            std::fs::rename(&tmp, path)?;
        }
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn loss_json(loss: &LossModel) -> Value {
    json!({ "eta_a": loss.eta_a(), "eta_b": loss.eta_b() })
}

fn cmd_optimal(args: OptimalArgs) -> Result<(), Failure> {
    let loss = args.loss.resolve()?;
    let sol = optimize(args.n, &loss, &CostSpec::sin_squared(), args.tol)?;
    if let Some(path) = &args.state_out {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["n", "alpha"]).map_err(csv_failure)?;
            for (n, &a) in sol.state.amplitudes().iter().enumerate() {
                w.write_record([n.to_string(), format_number(a)]).map_err(csv_failure)?;
            }
            w.flush()?;
        }
        emit(&buf, Some(path))?;
    }
    let config = json!({ "command": "optimal", "N": args.n, "loss": loss_json(&loss), "tol": args.tol });
    let mut r = Report::new(config, args.tol);
    r.add("N", Cell::Int(args.n as u64))
        .add("eta_a", Cell::Num(loss.eta_a()))
        .add("eta_b", Cell::Num(loss.eta_b()))
        .add("lambda_max", Cell::Num(sol.lambda_max))
        .add("cost_opt", Cell::Num(sol.avg_cost))
        .add("dphi_opt", Cell::Num(sol.delta_phi()))
        .add("residual", Cell::Num(sol.residual))
        .add("spectral_gap", Cell::opt(sol.spectral_gap))
        .add("near_degenerate", Cell::Bool(sol.near_degenerate))
        .add("ipr", Cell::Num(sol.state.inverse_participation_ratio()));
    emit(&r.render(args.output.format)?, args.output.out.as_deref())
}

fn sweep_losses(args: &SweepArgs) -> Result<Vec<LossModel>, Failure> {
    if !args.eta.is_empty() {
        return Ok(args.eta.iter().map(|&e| LossModel::equal(e)).collect::<Result<_, _>>()?);
    }
    if !args.loss.is_empty() {
        return args
            .loss
            .iter()
            .map(|pair| {
                let parsed = pair
                    .split_once(':')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
                match parsed {
                    Some((a, b)) => Ok(LossModel::new(a, b)?),
                    None => Err(Failure::Usage(format!("expected eta_a:eta_b, got {pair:?}"))),
                }
            })
            .collect();
    }
    if args.eta_a.is_some() || args.eta_b.is_some() {
        return Ok(vec![LossModel::new(
            args.eta_a.unwrap_or(1.0),
            args.eta_b.unwrap_or(1.0),
        )?]);
    }
    Ok(sweep::default_losses())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let format = match args.format {
        Format::Csv => sweep::TableFormat::Csv,
        Format::Json => sweep::TableFormat::Json,
        Format::Text => return Err(Failure::Usage("sweep writes csv or json".into())),
    };
    if args.jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let n_values = sweep::parse_n_values(&args.n)?;
    let outputs = Outputs::parse(&args.outputs)?;
    let config = SweepConfig::new(n_values, sweep_losses(&args)?, outputs, args.tol)?
        .with_profile(args.profile)
        .with_jobs(args.jobs);

    let mut buf = Vec::new();
    if config.profile {
        let rows = sweep::run_profiles(&config)?;
        report_row_errors(rows.iter().filter(|r| r.error.is_some()).count());
        match format {
            sweep::TableFormat::Csv => sweep::write_profiles_csv(&mut buf, &rows)?,
            sweep::TableFormat::Json => write_json(&mut buf, &sweep::profiles_json(&config, &rows))?,
        }
    } else {
        let existing = match &args.out {
            Some(path) if path.metadata().map(|m| m.len() > 0).unwrap_or(false) => {
                let file = File::open(path)?;
                let read = match format {
                    sweep::TableFormat::Csv => sweep::read_rows_csv(file, &outputs),
                    sweep::TableFormat::Json => sweep::read_rows_json(file, &outputs),
                };
                read.map_err(|e| Failure::Usage(format!("cannot resume from {}: {e}", path.display())))?
            }
            _ => Vec::new(),
        };
        let rows = sweep::resume_sweep(&config, existing)?;
        report_row_errors(rows.iter().filter(|r| r.error.is_some()).count());
        match format {
            sweep::TableFormat::Csv => sweep::write_rows_csv(&mut buf, &rows, &outputs)?,
            sweep::TableFormat::Json => write_json(&mut buf, &sweep::sweep_json(&config, &rows))?,
        }
    }
    emit(&buf, args.out.as_deref())
}

fn report_row_errors(count: usize) {
    if count > 0 {
        eprintln!("warning: {count} row(s) recorded an error");
    }
}

fn bound_form(args: &BoundsArgs, loss: &LossModel) -> BoundForm {
    if args.equal_arms {
        BoundForm::EqualArms
    } else if args.relaxed {
        BoundForm::OneArm
    } else {
        BoundForm::natural(loss)
    }
}

fn form_name(form: BoundForm) -> &'static str {
    match form {
        BoundForm::EqualArms => "equal_arms",
        BoundForm::OneArm => "one_arm",
    }
}

/// Gain cell with an explicit marker when no loss floor exists.
fn gain_cell(loss: &LossModel, form: BoundForm) -> Result<Cell, Failure> {
    match gain_factor_for(loss, form) {
        Ok(g) => Ok(Cell::Num(g)),
        Err(_) if loss.is_lossless() || (form == BoundForm::OneArm && loss.min_eta() == 1.0) => {
            Ok(Cell::Text("unbounded".into()))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Failure> {
    let loss = args.loss.resolve()?;
    let form = bound_form(&args, &loss);
    if form == BoundForm::EqualArms && !loss.is_equal_arms() {
        return Err(Failure::Usage("--equal-arms needs eta_a = eta_b".into()));
    }
    let config = json!({
        "command": "bounds",
        "N": args.n,
        "loss": loss_json(&loss),
        "form": form_name(form),
        "gain_only": args.gain,
    });
    let mut r = Report::new(config, DEFAULT_TOL);
    if args.gain {
        r.add("eta_a", Cell::Num(loss.eta_a()))
            .add("eta_b", Cell::Num(loss.eta_b()))
            .add("form", Cell::Text(form_name(form).into()))
            .add("gain", gain_cell(&loss, form)?);
        return emit(&r.render(args.output.format)?, args.output.out.as_deref());
    }
    let n = args
        .n
        .ok_or_else(|| Failure::Usage("bounds needs --n unless --gain is given".into()))?;
    let rep = bound_report(n, &loss, form)?;
    r.add("N", Cell::Int(n as u64))
        .add("eta_a", Cell::Num(loss.eta_a()))
        .add("eta_b", Cell::Num(loss.eta_b()))
        .add("form", Cell::Text(form_name(form).into()))
        .add("bound_finite", Cell::opt(rep.finite_n_bound))
        .add("dphi_bound", Cell::opt(rep.finite_n_bound.map(f64::sqrt)))
        .add("bound_asymptotic", Cell::opt(rep.asymptotic_bound))
        .add("band_max", Cell::opt(rep.band_max.map(|b| b.value)))
        .add("band_argmax", rep.band_max.map_or(Cell::Empty, |b| Cell::Int(b.argmax_n as u64)))
        .add("majorizer_lambda", Cell::opt(rep.majorizer_lambda))
        .add("cost_classical", Cell::opt(rep.classical_cost))
        .add("tau_classical", Cell::opt(rep.classical_tau))
        .add("gain", gain_cell(&loss, form)?);
    emit(&r.render(args.output.format)?, args.output.out.as_deref())
}

fn cmd_classical(args: ClassicalArgs) -> Result<(), Failure> {
    let loss = args.loss.resolve()?;
    let config = json!({
        "command": "classical",
        "N": args.n,
        "loss": loss_json(&loss),
        "tau": args.tau,
        "tau_opt": args.tau_opt,
        "minimize": args.minimize,
    });
    let mut r = Report::new(config, DEFAULT_TOL);
    let Some(n) = args.n else {
        if !args.tau_opt {
            return Err(Failure::Usage("classical needs --n, or --tau-opt alone".into()));
        }
        r.add("eta_a", Cell::Num(loss.eta_a()))
            .add("eta_b", Cell::Num(loss.eta_b()))
            .add("tau", Cell::Num(classical_optimal_tau(&loss)?));
        return emit(&r.render(args.output.format)?, args.output.out.as_deref());
    };
    let (tau, eval) = if args.minimize {
        let (tau, cost) = minimize_classical_tau(n, &loss, 1e-10)?;
        let eval = ClassicalEval {
            cost,
            degenerate_split: false,
        };
        (tau, eval)
    } else {
        let tau = match args.tau {
            Some(t) => t,
            None => classical_optimal_tau(&loss)?,
        };
        (tau, classical_cost_lenient(n, &loss, tau)?)
    };
    let asymptotic = classical_asymptotic_cost_at(n, &loss, tau).ok();
    let n_cell = if n.fract() == 0.0 && n < 9.0e15 {
        Cell::Int(n as u64)
    } else {
        Cell::Num(n)
    };
    r.add("N", n_cell)
        .add("eta_a", Cell::Num(loss.eta_a()))
        .add("eta_b", Cell::Num(loss.eta_b()))
        .add("tau", Cell::Num(tau))
        .add("cost_classical", Cell::Num(eval.cost))
        .add("dphi_classical", Cell::Num(eval.cost.sqrt()))
        .add("n_cost", Cell::Num(n * eval.cost))
        .add("cost_asymptotic", Cell::opt(asymptotic))
        .add("degenerate_split", Cell::Bool(eval.degenerate_split));
    if eval.degenerate_split {
        eprintln!("warning: all light in one arm; no phase information (cost 2)");
    }
    emit(&r.render(args.output.format)?, args.output.out.as_deref())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let loss = args.loss.resolve()?;
    if !args.phase.is_finite() {
        return Err(Failure::Usage("--phase must be finite".into()));
    }
    let cost = CostSpec::sin_squared();
    let sol = optimize(args.n, &loss, &cost, args.tol)?;
    let mut mc = MonteCarlo::new(args.samples, args.seed).with_true_phase(args.phase);
    if args.estimates_out.is_some() {
        mc = mc.retaining_estimates();
    }
    let res = mc.run(&sol.state, &loss, &cost)?;
    if let (Some(path), Some(est)) = (&args.estimates_out, &res.estimates) {
        let mut buf = Vec::with_capacity(est.len() * 24);
        for &e in est {
            writeln!(buf, "{}", format_number(e))?;
        }
        emit(&buf, Some(path))?;
    }
    let config = json!({
        "command": "simulate",
        "N": args.n,
        "loss": loss_json(&loss),
        "samples": args.samples,
        "seed": args.seed,
        "phase": args.phase,
        "tol": args.tol,
    });
    let mut r = Report::new(config, args.tol);
    r.seed = Some(args.seed);
    r.add("N", Cell::Int(args.n as u64))
        .add("eta_a", Cell::Num(loss.eta_a()))
        .add("eta_b", Cell::Num(loss.eta_b()))
        .add("samples", Cell::Int(res.n_samples as u64))
        .add("seed", Cell::Int(args.seed))
        .add("true_phase", Cell::Num(res.true_phase))
        .add("mean_cost", Cell::Num(res.mean_cost))
        .add("std_error", Cell::Num(res.std_error))
        .add("exact_cost", Cell::Num(res.exact_cost))
        .add("cost_opt", Cell::Num(sol.avg_cost))
        .add("z_score", Cell::Num(res.z_score()));
    emit(&r.render(args.output.format)?, args.output.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimal(a) => cmd_optimal(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Classical(a) => cmd_classical(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
