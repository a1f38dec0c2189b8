//! Sweeps over photon number and loss with order-stable tabular output.
//!
//! Each `(N, loss)` point is an independent solve, so points run on a worker
//! pool and are reassembled by their position in the configuration. Output is
//! therefore byte-identical whatever the worker count.

use std::collections::HashSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bounds::{classical_cost, classical_optimal_tau, finite_n_quantum_bound, gain_factor};
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::optimizer::{optimize, CostSpec};

/// Points per decade of a logarithmic `N` range unless stated otherwise.
pub const DEFAULT_PER_DECADE: usize = 24;

/// Equal-arm transmissions swept when none are given.
pub const DEFAULT_ETAS: [f64; 3] = [1.0, 0.8, 0.6];

pub fn default_losses() -> Vec<LossModel> {
    DEFAULT_ETAS.iter().map(|&e| LossModel::equal(e).unwrap()).collect()
}

/// Full-precision decimal form: 17 significant digits, exact round trip.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses photon numbers from a comma list of integers and inclusive ranges
/// `a..b`, or a logarithmic range `log:a..b[:points_per_decade]`.
pub fn parse_n_values(spec: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    let values = if let Some(rest) = spec.strip_prefix("log:") {
        let (range, per_decade) = match rest.split_once(':') {
            Some((r, k)) => (r, parse_count(k)?),
            None => (rest, DEFAULT_PER_DECADE),
        };
        let (lo, hi) = parse_range(range)?;
        log_spaced(lo, hi, per_decade)?
    } else {
        let mut out = Vec::new();
        for item in spec.split(',') {
            let item = item.trim();
            if item.contains("..") {
                let (lo, hi) = parse_range(item)?;
                out.extend(lo..=hi);
            } else {
                out.push(parse_count(item)?);
            }
        }
        out
    };
    validate_n_values(&values)?;
    Ok(values)
}

fn parse_count(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Domain(format!("not a photon number: {s:?}")))
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Error::Domain(format!("expected a range a..b, got {s:?}")))?;
    let (lo, hi) = (parse_count(lo)?, parse_count(hi)?);
    if lo > hi {
        return Err(Error::Domain(format!("empty range {lo}..{hi}")));
    }
    Ok((lo, hi))
}

/// Rounded `lo * 10^(j / per_decade)` up to `hi`, duplicates removed, both
/// endpoints included.
pub fn log_spaced(lo: usize, hi: usize, per_decade: usize) -> Result<Vec<usize>> {
    if lo == 0 || per_decade == 0 || lo > hi {
        return Err(Error::Domain(format!(
            "log range needs 1 <= lo <= hi and a positive density, got {lo}..{hi}:{per_decade}"
        )));
    }
    let decades = (hi as f64 / lo as f64).log10();
    let steps = (decades * per_decade as f64).ceil() as usize;
    let mut out: Vec<usize> = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let v = (lo as f64 * 10f64.powf(j as f64 / per_decade as f64)).round() as usize;
        let v = v.min(hi);
        if out.last().is_none_or(|&last| v > last) {
            out.push(v);
        }
    }
    if *out.last().unwrap() < hi {
        out.push(hi);
    }
    Ok(out)
}

pub fn validate_n_values(values: &[usize]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain("no photon numbers given".into()));
    }
    if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "photon numbers must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Which column sets a sweep emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Outputs {
    pub optimal: bool,
    pub bound: bool,
    pub classical: bool,
    pub gain: bool,
}

impl Outputs {
    pub fn all() -> Self {
        Outputs {
            optimal: true,
            bound: true,
            classical: true,
            gain: true,
        }
    }

    /// Comma list drawn from `optimal`, `bound`, `classical`, `gain`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut out = Outputs {
            optimal: false,
            bound: false,
            classical: false,
            gain: false,
        };
        for item in list.split(',').map(str::trim) {
            match item {
                "optimal" => out.optimal = true,
                "bound" => out.bound = true,
                "classical" => out.classical = true,
                "gain" => out.gain = true,
                other => return Err(Error::Domain(format!("unknown output {other:?}"))),
            }
        }
        Ok(out)
    }

    /// Header of the scalar table.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = vec!["N", "eta_a", "eta_b"];
        if self.optimal {
            cols.extend(["cost_opt", "dphi_opt"]);
        }
        if self.bound {
            cols.extend(["bound_finite", "dphi_bound"]);
        }
        if self.classical {
            cols.extend(["cost_classical", "dphi_classical"]);
        }
        if self.gain {
            cols.push("gain");
        }
        cols.push("error");
        cols
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs::all()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub losses: Vec<LossModel>,
    pub outputs: Outputs,
    /// Emit optimal amplitude profiles instead of the scalar table.
    pub profile: bool,
    pub tol: f64,
    /// Worker count; `None` lets the pool decide. Never affects the output.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl SweepConfig {
    pub fn new(n_values: Vec<usize>, losses: Vec<LossModel>, outputs: Outputs, tol: f64) -> Result<Self> {
        validate_n_values(&n_values)?;
        if losses.is_empty() {
            return Err(Error::Domain("no loss models given".into()));
        }
        let mut seen = HashSet::new();
        for l in &losses {
            if !seen.insert(loss_key(l)) {
                return Err(Error::Domain(format!(
                    "loss ({}, {}) listed twice",
                    l.eta_a(),
                    l.eta_b()
                )));
            }
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        Ok(SweepConfig {
            n_values,
            losses,
            outputs,
            profile: false,
            tol,
            jobs: None,
        })
    }

    pub fn with_profile(mut self, profile: bool) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_jobs(mut self, jobs: Option<usize>) -> Self {
        self.jobs = jobs;
        self
    }

    fn points(&self) -> Vec<(usize, LossModel)> {
        self.n_values
            .iter()
            .flat_map(|&n| self.losses.iter().map(move |&l| (n, l)))
            .collect()
    }
}

fn loss_key(l: &LossModel) -> (u64, u64) {
    (l.eta_a().to_bits(), l.eta_b().to_bits())
}

/// One `(N, loss)` row. Unrequested and inapplicable entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_total: usize,
    pub eta_a: f64,
    pub eta_b: f64,
    pub cost_opt: Option<f64>,
    pub dphi_opt: Option<f64>,
    pub bound_finite: Option<f64>,
    pub dphi_bound: Option<f64>,
    pub cost_classical: Option<f64>,
    pub dphi_classical: Option<f64>,
    pub gain: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(n_total: usize, eta_a: f64, eta_b: f64) -> Self {
        SweepRow {
            n_total,
            eta_a,
            eta_b,
            cost_opt: None,
            dphi_opt: None,
            bound_finite: None,
            dphi_bound: None,
            cost_classical: None,
            dphi_classical: None,
            gain: None,
            error: None,
        }
    }

    fn number(&self, col: &str) -> Option<f64> {
        match col {
            "eta_a" => Some(self.eta_a),
            "eta_b" => Some(self.eta_b),
            "cost_opt" => self.cost_opt,
            "dphi_opt" => self.dphi_opt,
            "bound_finite" => self.bound_finite,
            "dphi_bound" => self.dphi_bound,
            "cost_classical" => self.cost_classical,
            "dphi_classical" => self.dphi_classical,
            "gain" => self.gain,
            _ => None,
        }
    }

    fn set_number(&mut self, col: &str, v: Option<f64>) {
        let slot = match col {
            "cost_opt" => &mut self.cost_opt,
            "dphi_opt" => &mut self.dphi_opt,
            "bound_finite" => &mut self.bound_finite,
            "dphi_bound" => &mut self.dphi_bound,
            "cost_classical" => &mut self.cost_classical,
            "dphi_classical" => &mut self.dphi_classical,
            "gain" => &mut self.gain,
            _ => return,
        };
        *slot = v;
    }
}

/// Domain errors mean "not defined here" and leave the cell empty; anything
/// else is a failure worth reporting in the row.
fn settle(label: &str, r: Result<f64>, errors: &mut Vec<String>) -> Option<f64> {
    match r {
        Ok(v) if v.is_finite() => Some(v),
        Ok(v) => {
            errors.push(format!("{label}: non-finite value {v}"));
            None
        }
        Err(Error::Domain(_)) => None,
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            None
        }
    }
}

pub fn sweep_point(n_total: usize, loss: &LossModel, outputs: &Outputs, tol: f64) -> SweepRow {
    let mut row = SweepRow::empty(n_total, loss.eta_a(), loss.eta_b());
    let mut errors = Vec::new();
    if outputs.optimal {
        let r = optimize(n_total, loss, &CostSpec::sin_squared(), tol).map(|s| s.avg_cost);
        row.cost_opt = settle("optimal", r, &mut errors);
        row.dphi_opt = row.cost_opt.map(|c| c.max(0.0).sqrt());
    }
    if outputs.bound {
        let r = finite_n_quantum_bound(n_total, loss.min_eta());
        row.bound_finite = settle("bound", r, &mut errors);
        row.dphi_bound = row.bound_finite.map(f64::sqrt);
    }
    if outputs.classical {
        let r = classical_optimal_tau(loss).and_then(|tau| classical_cost(n_total as f64, loss, tau));
        row.cost_classical = settle("classical", r, &mut errors);
        row.dphi_classical = row.cost_classical.map(f64::sqrt);
    }
    if outputs.gain {
        row.gain = settle("gain", gain_factor(loss), &mut errors);
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn run_pool<T, R, F>(items: Vec<T>, jobs: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs == Some(1) {
        return Ok(items.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

/// Computes every row of the sweep, ordered by `N` and then by loss.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    resume_sweep(config, Vec::new())
}

/// Like [`run_sweep`], reusing rows already present in `existing`. Rows that
/// carry an error are recomputed; rows outside the configuration are kept.
pub fn resume_sweep(config: &SweepConfig, existing: Vec<SweepRow>) -> Result<Vec<SweepRow>> {
    let mut done = HashSet::new();
    let mut rows: Vec<SweepRow> = Vec::new();
    for row in existing {
        let in_config = config.n_values.binary_search(&row.n_total).is_ok()
            && config
                .losses
                .iter()
                .any(|l| loss_key(l) == (row.eta_a.to_bits(), row.eta_b.to_bits()));
        if in_config && row.error.is_some() {
            continue;
        }
        if done.insert((row.n_total, row.eta_a.to_bits(), row.eta_b.to_bits())) {
            rows.push(row);
        }
    }
    let todo: Vec<(usize, LossModel)> = config
        .points()
        .into_iter()
        .filter(|(n, l)| !done.contains(&(*n, l.eta_a().to_bits(), l.eta_b().to_bits())))
        .collect();
    let outputs = config.outputs;
    let tol = config.tol;
    rows.extend(run_pool(todo, config.jobs, |(n, l)| sweep_point(n, &l, &outputs, tol))?);
    sort_rows(&mut rows, &config.losses);
    Ok(rows)
}

fn sort_rows(rows: &mut [SweepRow], losses: &[LossModel]) {
    let rank = |r: &SweepRow| {
        losses
            .iter()
            .position(|l| loss_key(l) == (r.eta_a.to_bits(), r.eta_b.to_bits()))
            .unwrap_or(usize::MAX)
    };
    rows.sort_by(|x, y| {
        x.n_total
            .cmp(&y.n_total)
            .then(rank(x).cmp(&rank(y)))
            .then(x.eta_a.total_cmp(&y.eta_a))
            .then(x.eta_b.total_cmp(&y.eta_b))
    });
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[SweepRow], outputs: &Outputs) -> Result<()> {
    let cols = outputs.columns();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&cols).map_err(io_err)?;
    for row in rows {
        let record: Vec<String> = cols
            .iter()
            .map(|&c| match c {
                "N" => row.n_total.to_string(),
                "error" => row.error.clone().unwrap_or_default(),
                _ => row.number(c).map(format_number).unwrap_or_default(),
            })
            .collect();
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_rows_csv<R: Read>(input: R, outputs: &Outputs) -> Result<Vec<SweepRow>> {
    let cols = outputs.columns();
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(io_err)?.iter().map(String::from).collect();
    if header != cols {
        return Err(Error::Validation(format!(
            "existing table has columns [{}], expected [{}]",
            header.join(","),
            cols.join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(io_err)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize| -> Result<Option<f64>> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Validation(format!("bad number {s:?} in column {}", cols[i])))
        };
        let n_total = field(0)
            .parse()
            .map_err(|_| Error::Validation(format!("bad N {:?}", field(0))))?;
        let (eta_a, eta_b) = match (number(1)?, number(2)?) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Validation("row without transmissions".into())),
        };
        let mut row = SweepRow::empty(n_total, eta_a, eta_b);
        for (i, &c) in cols.iter().enumerate().skip(3) {
            if c == "error" {
                row.error = Some(field(i).to_string()).filter(|s| !s.is_empty());
            } else {
                row.set_number(c, number(i)?);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn number_value(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn row_json(row: &SweepRow, cols: &[&str]) -> Value {
    let mut obj = Map::new();
    for &c in cols {
        let v = match c {
            "N" => json!(row.n_total),
            "error" => row.error.clone().map_or(Value::Null, Value::String),
            _ => number_value(row.number(c)),
        };
        obj.insert(c.to_string(), v);
    }
    Value::Object(obj)
}

/// `{config, rows, meta}` document for a sweep.
pub fn sweep_json(config: &SweepConfig, rows: &[SweepRow]) -> Value {
    let cols = config.outputs.columns();
    json!({
        "config": config,
        "rows": rows.iter().map(|r| row_json(r, &cols)).collect::<Vec<_>>(),
        "meta": meta_json(config.tol, None),
    })
}

pub fn meta_json(tol: f64, seed: Option<u64>) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "tol": tol,
        "seed": seed,
    })
}

/// Rows of a previously written sweep document.
pub fn read_rows_json<R: Read>(input: R, outputs: &Outputs) -> Result<Vec<SweepRow>> {
    let doc: Value = serde_json::from_reader(input).map_err(io_err)?;
    let cols = outputs.columns();
    let items = doc
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Validation("existing document has no rows array".into()))?;
    let mut rows = Vec::new();
    for item in items {
        let obj = item
            .as_object()
            .ok_or_else(|| Error::Validation("row is not an object".into()))?;
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut expected = cols.clone();
        expected.sort_unstable();
        let mut got = keys.clone();
        got.sort_unstable();
        if got != expected {
            return Err(Error::Validation(format!(
                "existing row has keys [{}], expected [{}]",
                keys.join(","),
                cols.join(",")
            )));
        }
        let num = |k: &str| obj.get(k).and_then(Value::as_f64);
        let n_total = obj
            .get("N")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Validation("row without N".into()))? as usize;
        let (eta_a, eta_b) = match (num("eta_a"), num("eta_b")) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Validation("row without transmissions".into())),
        };
        let mut row = SweepRow::empty(n_total, eta_a, eta_b);
        for &c in &cols[3..] {
            if c == "error" {
                row.error = obj.get(c).and_then(Value::as_str).map(String::from);
            } else {
                row.set_number(c, num(c));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Optimal amplitudes for one `(N, loss)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub n_total: usize,
    pub eta_a: f64,
    pub eta_b: f64,
    /// `sum_n alpha_n^4`.
    pub ipr: Option<f64>,
    pub amplitudes: Vec<f64>,
    pub error: Option<String>,
}

pub fn profile_point(n_total: usize, loss: &LossModel, tol: f64) -> ProfileRow {
    let mut row = ProfileRow {
        n_total,
        eta_a: loss.eta_a(),
        eta_b: loss.eta_b(),
        ipr: None,
        amplitudes: Vec::new(),
        error: None,
    };
    match optimize(n_total, loss, &CostSpec::sin_squared(), tol) {
        Ok(sol) => {
            row.ipr = Some(sol.state.inverse_participation_ratio());
            row.amplitudes = sol.state.amplitudes().to_vec();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn run_profiles(config: &SweepConfig) -> Result<Vec<ProfileRow>> {
    let tol = config.tol;
    run_pool(config.points(), config.jobs, |(n, l)| profile_point(n, &l, tol))
}

pub const PROFILE_COLUMNS: [&str; 7] = ["N", "eta_a", "eta_b", "ipr", "n", "alpha", "error"];

/// Long format, one line per amplitude; a failed point gets a single line
/// with empty `n` and `alpha`.
pub fn write_profiles_csv<W: Write>(out: W, rows: &[ProfileRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_COLUMNS).map_err(io_err)?;
    for row in rows {
        let head = [
            row.n_total.to_string(),
            format_number(row.eta_a),
            format_number(row.eta_b),
            row.ipr.map(format_number).unwrap_or_default(),
        ];
        if row.amplitudes.is_empty() {
            let mut rec = head.to_vec();
            rec.extend([String::new(), String::new(), row.error.clone().unwrap_or_default()]);
            w.write_record(&rec).map_err(io_err)?;
        }
        for (n, &a) in row.amplitudes.iter().enumerate() {
            let mut rec = head.to_vec();
            rec.extend([n.to_string(), format_number(a), String::new()]);
            w.write_record(&rec).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn profiles_json(config: &SweepConfig, rows: &[ProfileRow]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "N": r.n_total,
                "eta_a": r.eta_a,
                "eta_b": r.eta_b,
                "ipr": r.ipr,
                "alpha": r.amplitudes,
                "error": r.error,
            })
        })
        .collect();
    json!({ "config": config, "rows": rows, "meta": meta_json(config.tol, None) })
}
