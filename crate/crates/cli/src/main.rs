mod args;
mod config;
mod estimate;
mod format;
mod svg;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use pocmed_core::verify::{self, Status, VerifyRow};
use pocmed_core::Error;
use serde::Serialize;

use args::{Cli, Command, Format};
use config::RunConfig;
use format::{pct, Table};

const USAGE_ERROR: u8 = 2;
const VERIFY_FAILED: u8 = 1;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    tool: &'static str,
    version: &'static str,
    report_version: u32,
    command: &'static str,
    config: &'a verify::VerifyConfig,
    passed: bool,
    rows: &'a [VerifyRow],
}

fn verify_table(rows: &[VerifyRow]) -> String {
    let num = |v: Option<f64>| match v {
        Some(v) if v != 0.0 && v.abs() < 1e-4 => format!("{v:.1e}"),
        Some(v) => format!("{v:.6}"),
        None => "-".into(),
    };
    let mut t = Table::new(["check", "truth", "estimate", "CI", "tolerance", "status"]);
    for r in rows {
        let ci = match (r.lower, r.upper) {
            (Some(l), Some(u)) => format!("[{}, {}]", pct(l), pct(u)),
            _ => "-".into(),
        };
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "info",
        };
        t.row([r.check.clone(), num(r.truth), num(r.estimate), ci, num(r.tolerance), status.into()]);
    }
    let mut s = t.render();
    for r in rows.iter().filter(|r| !r.note.is_empty()) {
        s.push_str(&format!("note ({}): {}\n", r.check, r.note));
    }
    s
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Estimate(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            cfg.apply_data(&a.data);
            cfg.apply_query(&a.query)?;
            cfg.apply_boot(&a.boot);
            let report = estimate::run(&cfg)?;
            let text = match cfg.format() {
                Format::Json => json(&report),
                Format::Table => estimate::render_table(&report),
            };
            emit(cfg.out.as_deref(), &text)?;
            for q in &report.queries {
                if let Some(e) = &q.error {
                    eprintln!("error[{}]: {}", e.kind, e.message);
                }
            }
            Ok(if report.failed() { USAGE_ERROR } else { 0 })
        }
        Command::Simulate(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            cfg.apply_scm(&a.scm)?;
            if a.n.is_some() {
                cfg.n = a.n;
            }
            let n = cfg.n.ok_or_else(|| Error::Config("simulate needs --n".into()))?;
            let scm = cfg.scm_spec()?.compile()?;
            let d = scm.sample_observational(n, cfg.seed.unwrap_or(0))?;
            let mut buf = Vec::new();
            d.write_csv(&mut buf)?;
            emit(cfg.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            cfg.apply_boot(&a.boot);
            if a.runs.is_some() {
                cfg.runs = a.runs;
            }
            if a.random_scms.is_some() {
                cfg.random_scms = a.random_scms;
            }
            if a.sizes.is_some() {
                cfg.sizes = a.sizes.clone();
            }
            let vc = cfg.verify_config();
            let rows = verify::run(&vc)?;
            let passed = rows.iter().all(|r| r.status != Status::Fail);
            let text = match cfg.format() {
                Format::Json => json(&VerifyReport {
                    tool: "pocmed",
                    version: env!("CARGO_PKG_VERSION"),
                    report_version: estimate::REPORT_VERSION,
                    command: "verify",
                    config: &vc,
                    passed,
                    rows: &rows,
                }),
                Format::Table => verify_table(&rows),
            };
            emit(cfg.out.as_deref(), &text)?;
            Ok(if passed { 0 } else { VERIFY_FAILED })
        }
        Command::Sweep(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            cfg.apply_data(&a.data);
            cfg.apply_scm(&a.scm)?;
            cfg.apply_query(&a.query)?;
            cfg.apply_boot(&a.boot);
            let s = &mut cfg.sweep;
            if a.over.is_some() {
                s.over = a.over;
            }
            if let Some(v) = &a.values {
                s.values = v.clone();
            }
            if a.node.is_some() {
                s.node = a.node.clone();
            }
            if a.term.is_some() {
                s.term = a.term.clone();
            }
            if a.family.is_some() {
                s.family = a.family;
            }
            if a.svg.is_some() {
                s.svg = a.svg.clone();
            }
            let rows = sweep::run(&cfg)?;
            let text = match cfg.format() {
                Format::Json => json(&rows),
                Format::Table => {
                    let mut buf = Vec::new();
                    sweep::write_csv(&rows, &mut buf)?;
                    String::from_utf8(buf).expect("CSV is UTF-8")
                }
            };
            emit(cfg.out.as_deref(), &text)?;
            if let Some(p) = &cfg.sweep.svg {
                let family = cfg.sweep.family.unwrap_or(args::Family::Pns);
                let label = match (cfg.sweep.over, &cfg.sweep.term) {
                    (Some(args::Axis::Parameter), Some(t)) => {
                        format!("{} {t}", cfg.sweep.node.as_deref().unwrap_or(""))
                    }
                    (Some(args::Axis::Covariate), _) => "covariate".into(),
                    _ => "y".into(),
                };
                emit(Some(p), &svg::line_chart(&label, &sweep::curves(&rows, family)))?;
            }
            for r in rows.iter().filter(|r| r.status != "ok") {
                eprintln!("warning: grid point {}: {}", r.grid, r.message);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(USAGE_ERROR)
        }
    }
}
