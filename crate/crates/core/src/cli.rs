//! Convergence-study front end: configuration, tables, metadata and field
//! dumps.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use log::info;
use rayon::prelude::*;

use crate::coupling::{run, ExchangeMode, RunConfig, Snapshot, DEFAULT_FINAL_TIME};
use crate::error::{Error, Result};
use crate::geometry::{build_fd_grid, build_fe_mesh, DomainSpec, FdGrid, FeMesh, NodeClass};
use crate::material::EpsModel;
use crate::verification::{convergence_table, measure_errors, ConvergenceRow, ErrorSummary, ManufacturedCase};

pub const CSV_HEADER: &str = "l,nel,nno,e1,ratio1,r1,e2,ratio2,r2";

pub const BUILD_ID: &str = match option_env!("FEFD_BUILD_ID") {
    Some(id) => id,
    None => "unknown",
};

/// Time-step rule as a function of the level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `c · 2^-l`
    PowerOfTwo(f64),
    /// `c · h` with `h = 2^-(l+1)`
    Spacing(f64),
    Fixed(f64),
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::PowerOfTwo(0.025)
    }
}

impl TauRule {
    pub fn tau(&self, level: u32) -> f64 {
        match *self {
            TauRule::PowerOfTwo(c) => c / (1u64 << level) as f64,
            TauRule::Spacing(c) => c / (1u64 << (level + 1)) as f64,
            TauRule::Fixed(t) => t,
        }
    }
}

impl FromStr for TauRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed tau rule `{s}` (expected `<c>*2^-l`, `<c>*h` or a number)"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let rule = if let Some(c) = compact.strip_suffix("*2^-l") {
            TauRule::PowerOfTwo(c.parse().map_err(|_| bad())?)
        } else if let Some(c) = compact.strip_suffix("*h") {
            TauRule::Spacing(c.parse().map_err(|_| bad())?)
        } else {
            TauRule::Fixed(compact.parse().map_err(|_| bad())?)
        };
        let c = match rule {
            TauRule::PowerOfTwo(c) | TauRule::Spacing(c) | TauRule::Fixed(c) => c,
        };
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("tau rule `{s}` must be positive")));
        }
        Ok(rule)
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::PowerOfTwo(c) => write!(f, "{c}*2^-l"),
            TauRule::Spacing(c) => write!(f, "{c}*h"),
            TauRule::Fixed(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    DirichletCopy,
    WeakNeumann,
}

impl From<ModeArg> for ExchangeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DirichletCopy => ExchangeMode::DirichletCopy,
            ModeArg::WeakNeumann => ExchangeMode::WeakNeumann,
        }
    }
}

fn parse_mode(s: &str) -> Result<ExchangeMode> {
    ModeArg::from_str(s, false)
        .map(Into::into)
        .map_err(|_| Error::Config(format!("unknown exchange mode `{s}`")))
}

fn mode_name(mode: ExchangeMode) -> &'static str {
    match mode {
        ExchangeMode::DirichletCopy => "dirichlet-copy",
        ExchangeMode::WeakNeumann => "weak-neumann",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub levels: Vec<u32>,
    pub m_values: Vec<u32>,
    pub final_time: f64,
    pub tau_rule: TauRule,
    pub out: PathBuf,
    pub dump_fields: bool,
    pub allow_unstable: bool,
    pub mode: ExchangeMode,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            levels: vec![3, 4, 5, 6],
            m_values: vec![2, 4, 6, 8],
            final_time: DEFAULT_FINAL_TIME,
            tau_rule: TauRule::default(),
            out: PathBuf::from("results"),
            dump_fields: false,
            allow_unstable: false,
            mode: ExchangeMode::default(),
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<u32>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("malformed value `{s}` for `{key}`")))
        })
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("malformed boolean `{value}` for `{key}`"))),
    }
}

impl StudySpec {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "levels" => self.levels = parse_list(key, value)?,
            "m_values" | "m-values" => self.m_values = parse_list(key, value)?,
            "final_time" | "final-time" => {
                self.final_time = value
                    .parse()
                    .map_err(|_| Error::Config(format!("malformed value `{value}` for `{key}`")))?
            }
            "tau_rule" | "tau-rule" => self.tau_rule = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            "dump_fields" | "dump-fields" => self.dump_fields = parse_bool(key, value)?,
            "allow_unstable" | "allow-unstable" => self.allow_unstable = parse_bool(key, value)?,
            "mode" => self.mode = parse_mode(value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            spec.set(key.trim(), value.trim())?;
        }
        Ok(spec)
    }

    pub fn run_config(&self, m: u32, level: u32) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(level, EpsModel::sine(m)?);
        cfg.final_time = self.final_time;
        cfg.tau = self.tau_rule.tau(level);
        cfg.mode = self.mode;
        cfg.allow_unstable = self.allow_unstable;
        Ok(cfg)
    }

    /// Checks the lists, the horizon and the CFL gate at every level.
    /// Returns `τ / τ_max` per level.
    pub fn validate(&self) -> Result<Vec<f64>> {
        if self.levels.is_empty() || self.m_values.is_empty() {
            return Err(Error::Config("levels and m_values must be non-empty".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "levels must be strictly ascending, got {:?}",
                self.levels
            )));
        }
        for &m in &self.m_values {
            EpsModel::sine(m).map_err(|e| Error::Config(e.to_string()))?;
        }
        let m = self.m_values[0];
        self.levels
            .iter()
            .map(|&l| {
                let cfg = self.run_config(m, l)?;
                cfg.steps()?;
                cfg.check_cfl()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StudyTable {
    pub m: u32,
    pub rows: Vec<ConvergenceRow>,
    pub fd_max_errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub tables: Vec<StudyTable>,
    pub cfl_ratios: Vec<f64>,
    pub wall_seconds: f64,
}

impl StudyReport {
    pub fn unstable(&self) -> bool {
        self.cfl_ratios.iter().any(|&r| r > 1.0)
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.5e}")).unwrap_or_default()
}

pub fn table_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            r.nel,
            r.nno,
            fmt_value(Some(r.e1)),
            fmt_value(r.ratio1),
            fmt_value(r.r1),
            fmt_value(Some(r.e2)),
            fmt_value(r.ratio2),
            fmt_value(r.r2),
        );
    }
    out
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Runs every `(m, l)` pair, in parallel, and returns one table per `m`.
pub fn run_study(spec: &StudySpec) -> Result<StudyReport> {
    let cfl_ratios = spec.validate()?;
    let start = Instant::now();
    let jobs: Vec<(u32, u32)> = spec
        .m_values
        .iter()
        .flat_map(|&m| spec.levels.iter().map(move |&l| (m, l)))
        .collect();
    let results: Vec<ErrorSummary> = jobs
        .par_iter()
        .map(|&(m, level)| {
            let wrap = |e: Error| Error::Study {
                m,
                level,
                source: Box::new(e),
            };
            let case = ManufacturedCase::sine(m).map_err(wrap)?;
            let summary = measure_errors(spec.run_config(m, level).map_err(wrap)?, &case).map_err(wrap)?;
            info!("m={m} l={level}: e1={:.4e} e2={:.4e}", summary.e1, summary.e2);
            Ok(summary)
        })
        .collect::<Result<_>>()?;

    let tables = spec
        .m_values
        .iter()
        .zip(results.chunks(spec.levels.len()))
        .map(|(&m, runs)| StudyTable {
            m,
            rows: convergence_table(runs),
            fd_max_errors: runs.iter().map(|r| r.fd_max_error).collect(),
        })
        .collect();
    Ok(StudyReport {
        tables,
        cfl_ratios,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn metadata(spec: &StudySpec, report: &StudyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "build = {BUILD_ID}");
    let _ = writeln!(out, "mode = {}", mode_name(spec.mode));
    let _ = writeln!(out, "final_time = {}", spec.final_time);
    let _ = writeln!(out, "tau_rule = {}", spec.tau_rule);
    let _ = writeln!(out, "unstable = {}", report.unstable());
    for (&l, ratio) in spec.levels.iter().zip(&report.cfl_ratios) {
        let _ = writeln!(
            out,
            "level {l}: tau = {:.6e}, tau/tau_max = {ratio:.4}",
            spec.tau_rule.tau(l)
        );
    }
    for table in &report.tables {
        let fd: Vec<String> = table.fd_max_errors.iter().map(|e| format!("{e:.3e}")).collect();
        let _ = writeln!(out, "m = {}: fd max error per level = [{}]", table.m, fd.join(", "));
    }
    let _ = writeln!(out, "wall_seconds = {:.3}", report.wall_seconds);
    out
}

/// Plain-text field table: `x y |E_h| E1 E2 region exact_E1 exact_E2`, FD
/// lattice nodes outside the hole first, then the FE nodes.
pub fn dump_fields(
    snapshot: &Snapshot,
    grid: &FdGrid,
    mesh: &FeMesh,
    case: &ManufacturedCase,
) -> String {
    let mut out = String::from("# x y |E_h| E1 E2 region exact_E1 exact_E2\n");
    let mut record = |p: [f64; 2], v: [f64; 2], region: &str| {
        let exact = case.exact_field(p, snapshot.time);
        let _ = writeln!(
            out,
            "{:.6} {:.6} {:.6e} {:.6e} {:.6e} {region} {:.6e} {:.6e}",
            p[0],
            p[1],
            v[0].hypot(v[1]),
            v[0],
            v[1],
            exact[0],
            exact[1],
        );
    };
    for k in 0..grid.len() {
        if grid.class(k) != NodeClass::Hole {
            record(grid.coord_of(k), snapshot.fd[k], "FD");
        }
    }
    for (n, &p) in mesh.nodes().iter().enumerate() {
        record(p, [snapshot.fe[2 * n], snapshot.fe[2 * n + 1]], "FE");
    }
    out
}

/// Writes tables, metadata and optional final-time dumps under `spec.out`.
pub fn write_study(spec: &StudySpec, report: &StudyReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&spec.out).map_err(|source| Error::Io {
        path: spec.out.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for table in &report.tables {
        let path = spec.out.join(format!("convergence_m{}.csv", table.m));
        write_atomic(&path, table_csv(&table.rows).as_bytes())?;
        written.push(path);
    }
    let path = spec.out.join("metadata.txt");
    write_atomic(&path, metadata(spec, report).as_bytes())?;
    written.push(path);

    if spec.dump_fields {
        for &m in &spec.m_values {
            for &l in &spec.levels {
                let case = ManufacturedCase::sine(m)?;
                let history = run(spec.run_config(m, l)?, &case)?;
                let snapshot = history.last().ok_or(Error::EmptyHistory)?;
                let dom = DomainSpec::new(l)?;
                let text = dump_fields(snapshot, &build_fd_grid(dom)?, &build_fe_mesh(dom), &case);
                let path = spec.out.join(format!("fields_m{m}_l{l}.txt"));
                write_atomic(&path, text.as_bytes())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Hybrid FE/FD convergence study for the 2D Maxwell manufactured problem.
#[derive(Debug, Parser)]
#[command(name = "fefd", version = BUILD_ID)]
pub struct Args {
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated ascending refinement levels
    #[arg(long)]
    pub levels: Option<String>,
    /// Comma-separated permittivity exponents
    #[arg(long = "m-values")]
    pub m_values: Option<String>,
    #[arg(long = "final-time")]
    pub final_time: Option<f64>,
    /// `<c>*2^-l`, `<c>*h` or a fixed step
    #[arg(long = "tau-rule")]
    pub tau_rule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write final-time field tables for every run
    #[arg(long = "dump-fields")]
    pub dump_fields: bool,
    /// Run even when τ exceeds the CFL limit
    #[arg(long = "allow-unstable")]
    pub allow_unstable: bool,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

impl Args {
    pub fn to_spec(&self) -> Result<StudySpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                StudySpec::parse_config(&text)?
            }
            None => StudySpec::default(),
        };
        if let Some(v) = &self.levels {
            spec.set("levels", v)?;
        }
        if let Some(v) = &self.m_values {
            spec.set("m_values", v)?;
        }
        if let Some(t) = self.final_time {
            spec.final_time = t;
        }
        if let Some(v) = &self.tau_rule {
            spec.set("tau_rule", v)?;
        }
        if let Some(out) = &self.out {
            spec.out = out.clone();
        }
        spec.dump_fields |= self.dump_fields;
        spec.allow_unstable |= self.allow_unstable;
        if let Some(mode) = self.mode {
            spec.mode = mode.into();
        }
        Ok(spec)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_numerical() => 3,
        Error::Study { source, .. } => exit_code(source),
        Error::Config(_)
        | Error::InvalidConfig(_)
        | Error::CflViolation { .. }
        | Error::LevelTooSmall { .. }
        | Error::InvalidDomain(_) => 2,
        _ => 1,
    }
}

/// Runs the study described by `args` and returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    let result = args.to_spec().and_then(|spec| {
        let report = run_study(&spec)?;
        let written = write_study(&spec, &report)?;
        for table in &report.tables {
            println!("m = {}", table.m);
            print!("{}", table_csv(&table.rows));
        }
        for path in written {
            info!("wrote {}", path.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
