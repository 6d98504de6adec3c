//! Command-line front end. Every command produces one table that is written
//! as CSV or as JSON (`{"meta": …, "records": […]}`).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::bethe::{locate_gamma_critical, real_root_count, solve_spectrum};
use crate::error::{Error, Result};
use crate::exceptional::{critical_sweep, SweepEntry};
use crate::metric::equivalent_for;
use crate::model::{ChainSpec, Phase};
use crate::verify::run_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ptchain", version, about = "Exact spectra and metric of the PT-symmetric tight-binding chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bethe-ansatz spectrum at one potential strength.
    Spectrum {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Spectra over an evenly spaced range of potential strengths.
    Sweep {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Report the two coalescing levels and their diagnostics instead.
        #[arg(long)]
        critical: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Phase boundary, analytic and located by root counting.
    Phase {
        #[command(flatten)]
        chain: ChainArgs,
        /// Also classify this potential strength.
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Real-gauged metric matrix.
    Metric {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Couplings of the equivalent Hermitian bipartite Hamiltonian.
    Hermitian {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the invariant suite on every chain up to `--n-max` sites.
    Verify {
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
    /// Hopping amplitude, the energy unit.
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long)]
    pub gamma_min: f64,
    #[arg(long)]
    pub gamma_max: f64,
    #[arg(long)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Root and phase tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// What to compute, after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Spectrum { spec: ChainSpec },
    Sweep { spec: ChainSpec, gammas: Vec<f64>, critical: bool },
    Phase { spec: ChainSpec, gamma: Option<f64> },
    Metric { spec: ChainSpec },
    Hermitian { spec: ChainSpec },
    Verify { n_max: usize, hopping: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub job: Job,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (job, output) = match cli.command {
            Command::Spectrum { chain, gamma, output } => {
                (Job::Spectrum { spec: ChainSpec::new(chain.n, chain.j, gamma)? }, output)
            }
            Command::Sweep { chain, range, critical, output } => {
                let spec = ChainSpec::new(chain.n, chain.j, range.gamma_min.max(0.0))?;
                let gammas = linspace(range.gamma_min, range.gamma_max, range.steps)?;
                (Job::Sweep { spec, gammas, critical }, output)
            }
            Command::Phase { chain, gamma, output } => {
                let spec = ChainSpec::new(chain.n, chain.j, gamma.unwrap_or(0.0))?;
                (Job::Phase { spec, gamma }, output)
            }
            Command::Metric { chain, gamma, output } => {
                (Job::Metric { spec: ChainSpec::new(chain.n, chain.j, gamma)? }, output)
            }
            Command::Hermitian { chain, gamma, output } => {
                (Job::Hermitian { spec: ChainSpec::new(chain.n, chain.j, gamma)? }, output)
            }
            Command::Verify { n_max, j, output } => {
                if n_max < 2 {
                    return Err(Error::InvalidArgument(format!("--n-max must be at least 2, got {n_max}")));
                }
                ChainSpec::new(2, j, 0.0)?;
                (Job::Verify { n_max, hopping: j }, output)
            }
        };
        if !(output.tol > 0.0 && output.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("--tol must be positive, got {}", output.tol)));
        }
        Ok(Self { job, tol: output.tol, format: output.format, out: output.out })
    }
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if min.is_nan() || max.is_nan() || min >= max || steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "gamma range needs min < max and steps >= 2 (got {min}..{max}, {steps} steps)"
        )));
    }
    if min < 0.0 {
        return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {min}")));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i == steps - 1 { max } else { min + h * i as f64 }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) if x.is_finite() => {
                // round-trip through the CSV text so both formats carry the
                // same digits
                json!(format_float(*x).parse::<f64>().unwrap_or(*x))
            }
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros
/// dropped, exponent form outside `[1e-5, 1e12)`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}"))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Set when the command ran but found a violation.
    pub failed: bool,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new(), failed: false }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self, meta: Value) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (k, c) in self.header.iter().zip(row) {
                    m.insert((*k).to_string(), c.json());
                }
                Value::Object(m)
            })
            .collect();
        let doc = json!({ "meta": meta, "records": records });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

const SPECTRUM_HEADER: [&str; 7] = ["gamma", "level_index", "k_re", "k_im", "energy_re", "energy_im", "phase"];

fn spectrum_rows(spec: &ChainSpec, tol: f64) -> Result<Vec<Vec<Cell>>> {
    let sol = solve_spectrum(spec, tol)?;
    Ok(sol
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let k = m.momentum();
            vec![
                Cell::Num(spec.gamma()),
                Cell::Int(i as i64 + 1),
                Cell::Num(k.re),
                Cell::Num(k.im),
                Cell::Num(m.energy.re),
                Cell::Num(m.energy.im),
                Cell::Text(sol.phase.as_str().into()),
            ]
        })
        .collect())
}

fn critical_table(spec: &ChainSpec, gammas: &[f64], tol: f64) -> Result<Table> {
    let mut t = Table::new(vec![
        "gamma",
        "gamma_offset",
        "phase",
        "level1_re",
        "level1_im",
        "level2_re",
        "level2_im",
        "analytic1_re",
        "analytic1_im",
        "analytic2_re",
        "analytic2_im",
        "delta_or_kappa",
        "alpha",
        "coalescence_gap",
        "pt_norm1",
        "pt_norm2",
        "in_window",
    ]);
    for entry in critical_sweep(spec, gammas, tol)? {
        let row = match entry {
            SweepEntry::CriticalBand { gamma } => {
                let mut row = vec![
                    Cell::Num(gamma),
                    Cell::Num(gamma - spec.gamma_critical()),
                    Cell::Text(Phase::Critical.as_str().into()),
                ];
                row.resize(17, Cell::Empty);
                row
            }
            SweepEntry::Report(r) => {
                let analytic = |i: usize, imag: bool| {
                    r.analytic_pair.map_or(Cell::Empty, |p| Cell::Num(if imag { p[i].im } else { p[i].re }))
                };
                vec![
                    Cell::Num(r.gamma),
                    Cell::Num(r.gamma_offset),
                    Cell::Text(r.phase.as_str().into()),
                    Cell::Num(r.two_levels[0].re),
                    Cell::Num(r.two_levels[0].im),
                    Cell::Num(r.two_levels[1].re),
                    Cell::Num(r.two_levels[1].im),
                    analytic(0, false),
                    analytic(0, true),
                    analytic(1, false),
                    analytic(1, true),
                    r.delta_or_kappa.map_or(Cell::Empty, Cell::Num),
                    Cell::Num(r.alpha),
                    Cell::Num(r.coalescence_gap),
                    Cell::Num(r.pt_norms[0].norm()),
                    Cell::Num(r.pt_norms[1].norm()),
                    Cell::Text(r.in_window.to_string()),
                ]
            }
        };
        t.rows.push(row);
    }
    Ok(t)
}

/// Runs one validated job and returns its table.
pub fn execute(config: &RunConfig) -> Result<Table> {
    let tol = config.tol;
    match &config.job {
        Job::Spectrum { spec } => {
            let mut t = Table::new(SPECTRUM_HEADER.to_vec());
            t.rows = spectrum_rows(spec, tol)?;
            Ok(t)
        }
        Job::Sweep { spec, gammas, critical: true } => critical_table(spec, gammas, tol),
        Job::Sweep { spec, gammas, critical: false } => {
            let per_gamma: Vec<Vec<Vec<Cell>>> = gammas
                .par_iter()
                .map(|&g| spectrum_rows(&spec.with_gamma(g)?, tol))
                .collect::<Result<_>>()?;
            let mut t = Table::new(SPECTRUM_HEADER.to_vec());
            t.rows = per_gamma.into_iter().flatten().collect();
            Ok(t)
        }
        Job::Phase { spec, gamma } => {
            let located = locate_gamma_critical(spec.n_sites(), spec.hopping(), tol.max(1e-12))?;
            let mut t = Table::new(vec![
                "n",
                "j",
                "gamma_c",
                "gamma_c_bisection",
                "gamma",
                "phase",
                "real_root_count",
            ]);
            let mut row = vec![
                Cell::Int(spec.n_sites() as i64),
                Cell::Num(spec.hopping()),
                Cell::Num(spec.gamma_critical()),
                Cell::Num(located),
            ];
            match gamma {
                Some(g) => {
                    row.push(Cell::Num(*g));
                    row.push(Cell::Text(spec.phase(tol).as_str().into()));
                    row.push(Cell::Int(real_root_count(spec) as i64));
                }
                None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            t.rows.push(row);
            Ok(t)
        }
        Job::Metric { spec } => {
            let d = crate::metric::decompose(spec)?;
            let n = spec.n_sites();
            let mut t = Table::new(vec!["n", "gamma", "row", "col", "value"]);
            for r in 0..n {
                for c in 0..n {
                    t.rows.push(vec![
                        Cell::Int(n as i64),
                        Cell::Num(spec.gamma()),
                        Cell::Int(r as i64 + 1),
                        Cell::Int(c as i64 + 1),
                        Cell::Num(d.eta_real[(r, c)]),
                    ]);
                }
            }
            Ok(t)
        }
        Job::Hermitian { spec } => {
            let (_, eq) = equivalent_for(spec)?;
            let mut t = Table::new(vec!["n", "gamma", "i", "j", "lambda"]);
            for &(i, j, lambda) in &eq.couplings {
                t.rows.push(vec![
                    Cell::Int(spec.n_sites() as i64),
                    Cell::Num(spec.gamma()),
                    Cell::Int(i as i64),
                    Cell::Int(j as i64),
                    Cell::Num(lambda),
                ]);
            }
            Ok(t)
        }
        Job::Verify { n_max, hopping } => {
            let checks = run_suite(*n_max, *hopping)?;
            let mut t = Table::new(vec!["check", "n", "gamma", "residue", "tolerance", "status"]);
            for c in &checks {
                let status = match (&c.error, c.passed) {
                    (Some(e), _) => format!("ERROR: {}", e.replace(',', ";")),
                    (None, true) => "PASS".into(),
                    (None, false) => "FAIL".into(),
                };
                t.rows.push(vec![
                    Cell::Text(c.name.into()),
                    Cell::Int(c.n_sites as i64),
                    Cell::Num(c.gamma),
                    Cell::Num(c.residue),
                    Cell::Num(c.tolerance),
                    Cell::Text(status),
                ]);
            }
            t.failed = checks.iter().any(|c| !c.passed);
            Ok(t)
        }
    }
}

fn meta(config: &RunConfig) -> Value {
    let (command, spec) = match &config.job {
        Job::Spectrum { spec } => ("spectrum", Some(spec)),
        Job::Sweep { spec, .. } => ("sweep", Some(spec)),
        Job::Phase { spec, .. } => ("phase", Some(spec)),
        Job::Metric { spec } => ("metric", Some(spec)),
        Job::Hermitian { spec } => ("hermitian", Some(spec)),
        Job::Verify { .. } => ("verify", None),
    };
    let spec = spec.map(|s| json!({ "n_sites": s.n_sites(), "hopping": s.hopping(), "gamma": s.gamma() }));
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "spec": spec,
        "tol": config.tol,
    })
}

fn write_output(config: &RunConfig, text: &str) -> io::Result<()> {
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

/// Executes and writes; returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    let table = match execute(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = match config.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(meta(config)),
    };
    if let Err(e) = write_output(config, &text) {
        eprintln!("error: writing output: {e}");
        return EXIT_FAILURE;
    }
    if table.failed {
        eprintln!("error: verification failed");
        return EXIT_FAILURE;
    }
    EXIT_OK
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidSpec(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args`, validates, runs. Usage errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
