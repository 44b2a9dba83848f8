//! Command-line front end: eigenvalue tables, eigenfunction samples and
//! Ψ trajectories for built-in or configured problems.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ccbound::eigfun::Eigenfunction;
use ccbound::mesh::check_tolerance;
use ccbound::problems::{builtin, load_problem, ProblemDef};
use ccbound::shooting::{EigenResult, Solver, SolverOptions};
use clap::{Parser, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

pub const CSV_HEADER: &str = "k,E,multiplicity,err_estimate,newton_iters";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ccbound", version, about = "Bound states of coupled-channel Schrödinger systems")]
pub struct Cli {
    /// Built-in problem: poschl_teller_2ch, poschl_teller_identical_2ch,
    /// woods_saxon (4 channels), woods_saxon_<n>, free_box
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub problem: Option<String>,

    /// TOML problem definition with [problem], [bc] and [potential] tables
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Eigenvalue indices: a list of single values and inclusive ranges,
    /// e.g. `0..9` or `0,1,2,5,10`
    #[arg(long, default_value = "0")]
    pub k: String,

    /// Accuracy tolerance, in [1e-12, 1e-2]
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    /// Initial upper end of the search window
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub emax: f64,

    /// Write normalized eigenfunction samples, one file per index and branch
    #[arg(long)]
    pub eigenfunctions: bool,

    /// Extra samples inside each mesh interval for eigenfunction files
    #[arg(long, default_value_t = 0)]
    pub dense: usize,

    /// Write Ψ_L traced from a to b at this energy
    #[arg(long, allow_negative_numbers = true)]
    pub psi_trace: Option<f64>,

    /// Format of the eigenvalue table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Directory for output files (created if missing); the eigenvalue table
    /// is also written there when given
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Print search traces to stderr
    #[arg(long)]
    pub verbose: bool,
}

/// Parses `0..9`, `3`, `0,1,2,5` and mixtures; returns sorted unique values.
pub fn parse_k_spec(spec: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty entry in index list '{spec}'"));
        }
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad index '{s}' in '{spec}'"));
        match part.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
                if lo > hi {
                    return Err(format!("empty index range '{part}'"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse(part)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// C-style `%.<sig>g`.
pub fn format_g(v: f64, sig: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (sig as i32 - 1 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Serialize)]
struct JsonRow {
    k: usize,
    #[serde(rename = "E")]
    e: f64,
    multiplicity: usize,
    err_estimate: Option<f64>,
    newton_iters: usize,
}

pub fn csv_row(r: &EigenResult) -> String {
    let err = r.err_estimate.map_or_else(|| "nan".to_string(), |e| format_g(e, 2));
    format!("{},{},{},{},{}", r.k, format_g(r.energy, 12), r.multiplicity, err, r.newton_iters)
}

pub fn json_row(r: &EigenResult) -> String {
    let row = JsonRow { k: r.k, e: r.energy, multiplicity: r.multiplicity, err_estimate: r.err_estimate, newton_iters: r.newton_iters };
    serde_json::to_string(&row).expect("plain numeric row serializes")
}

pub fn eigenvalue_table(results: &[EigenResult], format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Csv => {
            s.push_str(CSV_HEADER);
            s.push('\n');
            for r in results {
                s.push_str(&csv_row(r));
                s.push('\n');
            }
        }
        Format::JsonLines => {
            for r in results {
                s.push_str(&json_row(r));
                s.push('\n');
            }
        }
    }
    s
}

pub fn eigenfunction_csv(ef: &Eigenfunction) -> String {
    let n = ef.samples.first().map_or(0, |s| s.y.len());
    let mut s = String::from("x");
    for i in 1..=n {
        write!(s, ",y_{i}").unwrap();
    }
    for i in 1..=n {
        write!(s, ",yp_{i}").unwrap();
    }
    s.push('\n');
    for smp in &ef.samples {
        s.push_str(&format_g(smp.x, 17));
        for v in smp.y.iter().chain(smp.yp.iter()) {
            s.push(',');
            s.push_str(&format_g(*v, 17));
        }
        s.push('\n');
    }
    s
}

pub fn eigenfunction_file_name(problem: &str, k: usize, branch: usize) -> String {
    format!("{problem}_k{k}_m{branch}.csv")
}

pub fn psi_trace_csv(n: usize, rows: &[(f64, Option<ccbound::linalg::SymMatrix>)]) -> String {
    let mut s = String::from("x");
    for i in 1..=n {
        for j in 1..=n {
            write!(s, ",psi_{i}{j}").unwrap();
        }
    }
    s.push('\n');
    for (x, psi) in rows {
        s.push_str(&format_g(*x, 17));
        for i in 0..n {
            for j in 0..n {
                s.push(',');
                s.push_str(&psi.as_ref().map_or_else(|| "nan".to_string(), |p| format_g(p[(i, j)], 17)));
            }
        }
        s.push('\n');
    }
    s
}

/// Everything validated before any computation or file output.
struct Prepared {
    problem: ProblemDef,
    ks: Vec<usize>,
}

fn prepare(cli: &Cli) -> anyhow::Result<Prepared> {
    check_tolerance(cli.tol)?;
    if !cli.emax.is_finite() {
        anyhow::bail!("--emax must be finite");
    }
    if let Some(e) = cli.psi_trace {
        if !e.is_finite() {
            anyhow::bail!("--psi-trace energy must be finite");
        }
    }
    let ks = parse_k_spec(&cli.k).map_err(anyhow::Error::msg)?;
    let problem = match (&cli.problem, &cli.config) {
        (Some(name), None) => builtin(name, None)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            load_problem(&text, path.parent())?
        }
        _ => anyhow::bail!("exactly one of --problem and --config is required"),
    };
    if let Some(dir) = &cli.out_dir {
        if dir.exists() && !dir.is_dir() {
            anyhow::bail!("--out-dir {} exists and is not a directory", dir.display());
        }
    }
    Ok(Prepared { problem, ks })
}

fn write_file(dir: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

/// Runs the command and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prep = match prepare(cli) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let name = prep.problem.name.clone();
    let n = prep.problem.n;
    let options = SolverOptions { tol: cli.tol, e_max: cli.emax, verbose: cli.verbose, ..Default::default() };
    let solver = match Solver::new(prep.problem, options) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cli.verbose {
        let _ = writeln!(
            err,
            "problem {name}: {} intervals, matching point x = {}",
            solver.main.mesh().intervals(),
            solver.main.matching_point()
        );
    }

    let mut failed = false;
    let mut results = Vec::new();
    for (k, r) in prep.ks.iter().zip(solver.solve_many(&prep.ks)) {
        match r {
            Ok(r) => {
                if cli.verbose {
                    for t in &r.trace {
                        let _ = writeln!(err, "k={k} {:?} E={} mu={:?} index={:?}", t.stage, t.energy, t.mu, t.index);
                    }
                }
                results.push(r);
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "k={k}: {e}");
            }
        }
    }

    let table = eigenvalue_table(&results, cli.format);
    let _ = out.write_all(table.as_bytes());

    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let wants_files = cli.out_dir.is_some() || cli.eigenfunctions || cli.psi_trace.is_some();
    if wants_files {
        if let Err(e) = fs::create_dir_all(&dir) {
            let _ = writeln!(err, "error: creating {}: {e}", dir.display());
            return EXIT_PARTIAL;
        }
    }
    let mut io_failed = false;
    let mut report = |res: anyhow::Result<()>| {
        if let Err(e) = res {
            io_failed = true;
            let _ = writeln!(err, "error: {e:#}");
        }
    };
    if cli.out_dir.is_some() {
        let ext = match cli.format {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        };
        report(write_file(&dir, &format!("{name}_eigenvalues.{ext}"), &table));
    }
    if cli.eigenfunctions {
        for r in &results {
            match solver.eigenfunctions(r, cli.dense) {
                Ok(efs) => {
                    for ef in &efs {
                        report(write_file(&dir, &eigenfunction_file_name(&name, r.k, ef.branch), &eigenfunction_csv(ef)));
                    }
                }
                Err(e) => report(Err(anyhow::anyhow!("eigenfunction for k={}: {e}", r.k))),
            }
        }
    }
    if let Some(e) = cli.psi_trace {
        match solver.main.psi_trace(e) {
            Ok(rows) => report(write_file(&dir, &format!("{name}_psi_trace.csv"), &psi_trace_csv(n, &rows))),
            Err(er) => report(Err(anyhow::anyhow!("psi trace at E = {e}: {er}"))),
        }
    }
    if failed || io_failed {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}
