//! Command-line front end. Every command produces a schema-versioned JSON
//! envelope (or CSV payload rows) and maps failures onto fixed exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::closed_form::{coefficients, coefficients_via_convolution, max_rel_gap};
use crate::discrete_operator::{
    check_annihilation, check_delta_identity, OperatorKernel, DEFAULT_WINDOW, MIN_CHECK_WINDOW,
};
use crate::error::Error;
use crate::grid_rhs::{f_value, g0, g1, make_grid, Singularity};
use crate::oracle::{f_oracle, oracle_rule, DEFAULT_PV_TOL};
use crate::quadrature::{
    apply_function, apply_rule, convergence_study, doubling_ladder, lookup, reference_value,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_COLLISION: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Moment identities are checked at this relative level.
pub const MOMENT_TOL: f64 = 1e-9;
/// Closed-form `f` against its quadrature oracle, absolute.
pub const RHS_TOL: f64 = 1e-9;
/// Operator identities at the chosen window.
pub const OPERATOR_TOL: f64 = 1e-10;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "sard-cauchy",
    version,
    about = "Optimal quadrature for Cauchy principal-value integrals on [0, 1]"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal coefficients for one grid and singularity.
    Coeffs {
        #[arg(long)]
        n: usize,
        /// Decimal, or one of `1/pi`, `1/e`, `sqrt2/2`.
        #[arg(long)]
        t: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Cross-check the explicit coefficients against the direct solve.
    Verify {
        /// Comma-separated grid sizes.
        #[arg(long = "n", default_value = "2,4,8,16,32,64")]
        n_list: String,
        /// Comma-separated singularities.
        #[arg(long = "t", default_value = "1/pi,1/e,sqrt2/2")]
        t_list: String,
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Apply a rule to a catalog function or to a samples file.
    Integrate {
        #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
        func: Option<String>,
        /// N+1 reals, whitespace or comma separated; `#` starts a comment.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Errors and observed orders over a doubling ladder of grids.
    Convergence {
        #[arg(long)]
        func: String,
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 32)]
        n_start: usize,
        #[arg(long, default_value_t = 3)]
        doublings: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Self-check the discrete operator identities.
    OperatorCheck {
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// One named check with its measurement and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub check: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl Diagnostic {
    fn at_most(check: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            pass: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "check": self.check,
            "pass": self.pass,
            "measured": self.measured,
            "tolerance": self.tolerance,
        })
    }
}

/// A finished command: what to print and how to exit.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub inputs: Value,
    pub payload: Value,
    pub diagnostics: Vec<Diagnostic>,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub exit_code: i32,
}

impl Outcome {
    pub fn envelope(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "payload": self.payload,
            "diagnostics": self.diagnostics.iter().map(Diagnostic::to_json).collect::<Vec<_>>(),
        })
    }

    fn failed_checks(&self) -> bool {
        self.diagnostics.iter().any(|d| !d.pass)
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NodeCollision { .. } => EXIT_COLLISION,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

/// Parses `t` from a decimal literal or a named constant.
pub fn parse_t(s: &str) -> Result<Singularity, Error> {
    let v = match s.trim() {
        "1/pi" => std::f64::consts::FRAC_1_PI,
        "1/e" => (-1.0f64).exp(),
        "sqrt2/2" => std::f64::consts::FRAC_1_SQRT_2,
        other => other.parse::<f64>().map_err(|_| Error::OutOfRange {
            what: "singularity",
            detail: format!("cannot parse '{other}'"),
        })?,
    };
    Singularity::new(v)
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(item)
        .collect()
}

/// Reads a samples file: reals separated by whitespace or commas, with
/// `#` comments to end of line.
pub fn parse_samples(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok.parse().map_err(|_| format!("not a number: '{tok}'"))?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Shortest round-trip text of a number, identical to the JSON rendering.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        Value::from(x).to_string()
    } else {
        String::new()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn cmd_coeffs(n: usize, t_in: &str, format: Format) -> Result<Outcome, CliError> {
    let grid = make_grid(n)?;
    let t = parse_t(t_in)?;
    let rule = coefficients(&grid, t)?;
    let (r0, r1) = rule.moment_residuals(g0(t), g1(t));
    let diagnostics = vec![
        Diagnostic::at_most("moment_sum_equals_g0", r0, MOMENT_TOL),
        Diagnostic::at_most("moment_first_equals_g1", r1, MOMENT_TOL),
    ];
    let csv_rows = rule
        .coefficients
        .iter()
        .enumerate()
        .map(|(b, c)| vec![b.to_string(), fmt_num(grid.node(b)), fmt_num(*c)])
        .collect();
    Ok(Outcome {
        command: "coeffs",
        inputs: json!({"n": n, "t": t.value(), "t_input": t_in, "format": format.as_str()}),
        payload: json!({
            "h": grid.h(),
            "nodes": grid.nodes(),
            "coefficients": rule.coefficients,
            "p1": rule.multipliers.p1,
            "p0": rule.multipliers.p0,
        }),
        diagnostics,
        csv_header: vec!["beta", "node", "coefficient"],
        csv_rows,
        exit_code: EXIT_OK,
    })
}

/// Measurements for one `(n, t)` verification cell.
#[derive(Debug, Clone)]
struct VerifyCell {
    n: usize,
    t: f64,
    skipped: Option<String>,
    closed_vs_oracle: f64,
    convolution_gap: f64,
    multiplier_gap: f64,
    rhs_gap: f64,
    moment_residual: f64,
}

fn verify_cell(n: usize, t: Singularity) -> Result<VerifyCell, Error> {
    let grid = make_grid(n)?;
    let mut cell = VerifyCell {
        n,
        t: t.value(),
        skipped: None,
        closed_vs_oracle: f64::NAN,
        convolution_gap: f64::NAN,
        multiplier_gap: f64::NAN,
        rhs_gap: f64::NAN,
        moment_residual: f64::NAN,
    };
    let closed = match coefficients(&grid, t) {
        Ok(rule) => rule,
        Err(Error::NodeCollision { .. }) => {
            cell.skipped = Some("skipped: node collision".into());
            return Ok(cell);
        }
        Err(e) => return Err(e),
    };
    let (oracle, _) = oracle_rule(&grid, t)?;
    let conv = coefficients_via_convolution(&grid, t, DEFAULT_WINDOW)?;
    cell.closed_vs_oracle = max_rel_gap(&closed.coefficients, &oracle.coefficients);
    cell.convolution_gap = max_rel_gap(&conv.coefficients, &closed.coefficients);
    let (mc, mo) = (closed.multipliers, oracle.multipliers);
    cell.multiplier_gap = ((mc.p1 - mo.p1).abs() / mo.p1.abs().max(1.0))
        .max((mc.p0 - mo.p0).abs() / mo.p0.abs().max(1.0));
    let mut rhs_gap = 0.0f64;
    for b in 0..=n {
        let exact = f_value(&grid, b, t)?;
        let quad = f_oracle(&grid, b, t, DEFAULT_PV_TOL)?;
        rhs_gap = rhs_gap.max((exact - quad).abs());
    }
    cell.rhs_gap = rhs_gap;
    let (r0, r1) = closed.moment_residuals(g0(t), g1(t));
    cell.moment_residual = r0.max(r1);
    Ok(cell)
}

fn cmd_verify(n_list: &str, t_list: &str, tol: f64, format: Format) -> Result<Outcome, CliError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let ns = parse_list(n_list, |s| {
        let n: usize = s
            .parse()
            .map_err(|_| invalid(format!("bad grid size '{s}'")))?;
        make_grid(n)?;
        Ok(n)
    })?;
    let ts = parse_list(t_list, |s| Ok(parse_t(s)?))?;
    if ns.is_empty() || ts.is_empty() {
        return Err(invalid("empty n or t list"));
    }
    let jobs: Vec<(usize, Singularity)> = ns
        .iter()
        .flat_map(|&n| ts.iter().map(move |&t| (n, t)))
        .collect();
    // cells are independent; results are collected in input order
    let cells: Vec<VerifyCell> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(n, t)| s.spawn(move || verify_cell(n, t)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification worker panicked"))
            .collect::<Result<Vec<_>, Error>>()
    })?;

    let mut diagnostics = Vec::new();
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for c in &cells {
        let tag = format!("n={},t={}", c.n, fmt_num(c.t));
        let pass = if c.skipped.is_some() {
            true
        } else {
            let checks = [
                Diagnostic::at_most(format!("{tag}:closed_vs_oracle"), c.closed_vs_oracle, tol),
                Diagnostic::at_most(format!("{tag}:convolution_gap"), c.convolution_gap, tol),
                Diagnostic::at_most(format!("{tag}:multiplier_gap"), c.multiplier_gap, tol),
                Diagnostic::at_most(
                    format!("{tag}:rhs_gap"),
                    c.rhs_gap,
                    RHS_TOL.min(tol.max(1e-300)),
                ),
                Diagnostic::at_most(
                    format!("{tag}:moment_residual"),
                    c.moment_residual,
                    MOMENT_TOL.min(tol),
                ),
            ];
            let ok = checks.iter().all(|d| d.pass);
            diagnostics.extend(checks);
            ok
        };
        let status =
            c.skipped
                .clone()
                .unwrap_or_else(|| if pass { "pass".into() } else { "fail".into() });
        rows.push(json!({
            "n": c.n,
            "t": c.t,
            "status": status,
            "closed_vs_oracle": c.closed_vs_oracle,
            "convolution_gap": c.convolution_gap,
            "multiplier_gap": c.multiplier_gap,
            "rhs_gap": c.rhs_gap,
            "moment_residual": c.moment_residual,
        }));
        csv_rows.push(vec![
            c.n.to_string(),
            fmt_num(c.t),
            status,
            fmt_num(c.closed_vs_oracle),
            fmt_num(c.convolution_gap),
            fmt_num(c.multiplier_gap),
            fmt_num(c.rhs_gap),
            fmt_num(c.moment_residual),
        ]);
    }
    let all_pass = diagnostics.iter().all(|d| d.pass);
    Ok(Outcome {
        command: "verify",
        inputs: json!({
            "n": ns,
            "t": ts.iter().map(|t| t.value()).collect::<Vec<_>>(),
            "tol": tol,
            "format": format.as_str(),
        }),
        payload: json!({"cells": rows, "pass": all_pass}),
        diagnostics,
        csv_header: vec![
            "n",
            "t",
            "status",
            "closed_vs_oracle",
            "convolution_gap",
            "multiplier_gap",
            "rhs_gap",
            "moment_residual",
        ],
        csv_rows,
        exit_code: EXIT_OK,
    })
}

fn cmd_integrate(
    func: Option<&str>,
    samples: Option<&PathBuf>,
    n: usize,
    t_in: &str,
    format: Format,
) -> Result<Outcome, CliError> {
    let grid = make_grid(n)?;
    let t = parse_t(t_in)?;
    // validate the catalog id before any expensive work
    let catalog = func.map(lookup).transpose()?;
    let rule = coefficients(&grid, t)?;
    let (approx, reference) = match (catalog, samples) {
        (Some(f), _) => (apply_function(&rule, &f), Some(reference_value(&f, t)?)),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let values = parse_samples(&text).map_err(invalid)?;
            (apply_rule(&rule, &values)?, None)
        }
        (None, None) => return Err(invalid("either --func or --samples is required")),
    };
    let abs_error = reference.map(|r| (approx - r).abs());
    Ok(Outcome {
        command: "integrate",
        inputs: json!({
            "func": func,
            "samples": samples.map(|p| p.display().to_string()),
            "n": n,
            "t": t.value(),
            "t_input": t_in,
            "format": format.as_str(),
        }),
        payload: json!({
            "approximation": approx,
            "reference": reference,
            "abs_error": abs_error,
        }),
        diagnostics: Vec::new(),
        csv_header: vec!["approximation", "reference", "abs_error"],
        csv_rows: vec![vec![
            fmt_num(approx),
            fmt_opt(reference),
            fmt_opt(abs_error),
        ]],
        exit_code: EXIT_OK,
    })
}

fn cmd_convergence(
    func: &str,
    t_in: &str,
    n_start: usize,
    doublings: u32,
    format: Format,
) -> Result<Outcome, CliError> {
    let f = lookup(func)?;
    let t = parse_t(t_in)?;
    make_grid(n_start)?;
    if doublings > 16
        || n_start
            .checked_shl(doublings)
            .is_none_or(|n| n >> doublings != n_start)
    {
        return Err(invalid(format!(
            "ladder {n_start}·2^{doublings} is too large"
        )));
    }
    let report = convergence_study(&f, t, &doubling_ladder(n_start, doublings))?;
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "approx": r.approx,
                "reference": r.reference,
                "abs_error": r.abs_error,
                "rel_error": r.rel_error,
                "note": r.note,
            })
        })
        .collect();
    let csv_rows = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let order = if i == 0 { None } else { report.orders[i - 1] };
            vec![
                r.n.to_string(),
                fmt_opt(r.approx),
                fmt_num(r.reference),
                fmt_opt(r.abs_error),
                fmt_opt(order),
            ]
        })
        .collect();
    Ok(Outcome {
        command: "convergence",
        inputs: json!({
            "func": func,
            "t": t.value(),
            "t_input": t_in,
            "n_start": n_start,
            "doublings": doublings,
            "format": format.as_str(),
        }),
        payload: json!({
            "function": report.function,
            "t": report.t,
            "rows": rows,
            "orders": report.orders,
        }),
        diagnostics: Vec::new(),
        csv_header: vec!["n", "approx", "reference", "abs_error", "order"],
        csv_rows,
        exit_code: EXIT_OK,
    })
}

fn cmd_operator_check(window: usize, format: Format) -> Result<Outcome, CliError> {
    if window < MIN_CHECK_WINDOW {
        return Err(invalid(format!(
            "window must be at least {MIN_CHECK_WINDOW}, got {window}"
        )));
    }
    let kernel = OperatorKernel::new(1.0)?;
    let mut diagnostics = Vec::new();
    let mut annihilation = Vec::new();
    for alpha in 0..=3u32 {
        let r = check_annihilation(&kernel, alpha, window)?;
        annihilation.push(json!({"alpha": alpha, "residual": r}));
        diagnostics.push(Diagnostic::at_most(
            format!("annihilation_alpha={alpha}"),
            r,
            OPERATOR_TOL,
        ));
    }
    let mut delta = Vec::new();
    for beta in -5..=5i64 {
        let v = check_delta_identity(&kernel, beta, window)?;
        let expect = if beta == 0 { 1.0 } else { 0.0 };
        delta.push(json!({"beta": beta, "value": v}));
        diagnostics.push(Diagnostic::at_most(
            format!("delta_beta={beta}"),
            (v - expect).abs(),
            OPERATOR_TOL,
        ));
    }
    let csv_rows = diagnostics
        .iter()
        .map(|d| {
            vec![
                d.check.clone(),
                fmt_num(d.measured),
                fmt_num(d.tolerance),
                d.pass.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        command: "operator-check",
        inputs: json!({"window": window, "format": format.as_str()}),
        payload: json!({"h": kernel.h(), "window": window, "annihilation": annihilation, "delta": delta}),
        diagnostics,
        csv_header: vec!["check", "measured", "tolerance", "pass"],
        csv_rows,
        exit_code: EXIT_OK,
    })
}

fn dispatch(cli: &Cli) -> Result<(Outcome, Format), CliError> {
    let (mut outcome, format) = match &cli.command {
        Command::Coeffs { n, t, format } => (cmd_coeffs(*n, t, *format)?, *format),
        Command::Verify {
            n_list,
            t_list,
            tol,
            format,
        } => (cmd_verify(n_list, t_list, *tol, *format)?, *format),
        Command::Integrate {
            func,
            samples,
            n,
            t,
            format,
        } => (
            cmd_integrate(func.as_deref(), samples.as_ref(), *n, t, *format)?,
            *format,
        ),
        Command::Convergence {
            func,
            t,
            n_start,
            doublings,
            format,
        } => (
            cmd_convergence(func, t, *n_start, *doublings, *format)?,
            *format,
        ),
        Command::OperatorCheck { window, format } => {
            (cmd_operator_check(*window, *format)?, *format)
        }
    };
    if outcome.failed_checks() {
        outcome.exit_code = EXIT_VERIFY;
    }
    Ok((outcome, format))
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and messages to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((outcome, format)) => {
            let written = match format {
                Format::Json => writeln!(out, "{}", outcome.envelope()),
                Format::Csv => write_csv(&outcome, out, err),
            };
            if written.is_err() {
                return EXIT_INVALID;
            }
            outcome.exit_code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn write_csv(outcome: &Outcome, out: &mut dyn Write, side: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", outcome.csv_header.join(","))?;
    for row in &outcome.csv_rows {
        writeln!(out, "{}", row.join(","))?;
    }
    if let Some(p) = outcome.payload.as_object() {
        for key in ["p1", "p0"] {
            if let Some(v) = p.get(key) {
                writeln!(side, "# {key}={v}")?;
            }
        }
    }
    if !outcome.diagnostics.is_empty() {
        writeln!(side, "check,pass,measured,tolerance")?;
        for d in &outcome.diagnostics {
            writeln!(
                side,
                "{},{},{},{}",
                d.check,
                d.pass,
                fmt_num(d.measured),
                fmt_num(d.tolerance)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_singularities() {
        assert_eq!(
            parse_t("1/pi").unwrap().value(),
            std::f64::consts::FRAC_1_PI
        );
        assert_eq!(
            parse_t("sqrt2/2").unwrap().value(),
            std::f64::consts::FRAC_1_SQRT_2
        );
        assert_eq!(parse_t("1/e").unwrap().value(), (-1.0f64).exp());
        assert_eq!(parse_t("0.25").unwrap().value(), 0.25);
        assert!(parse_t("pi").is_err());
        assert!(parse_t("1.5").is_err());
    }

    #[test]
    fn samples_parsing() {
        let v = parse_samples("# header\n1, 2 3\n4.5e-1,# trailing\n\n-6").unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0, 0.45, -6.0]);
        assert!(parse_samples("1 x").is_err());
    }

    #[test]
    fn number_text_matches_json() {
        for x in [0.1, 1.0, -2.5e-20, 123456789.0, 1.0 / 3.0] {
            let json = serde_json::to_string(&x).unwrap();
            assert_eq!(fmt_num(x), json);
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(f64::NAN), "");
    }
}
