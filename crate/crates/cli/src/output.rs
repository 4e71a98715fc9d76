//! CSV rendering. All numbers are written with 15 significant digits so the
//! files parse back to the printed precision; text is UTF-8 with LF endings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ura_bounds::mc::suites::{CheckKind, CheckRow};
use ura_bounds::{BoundResult, CodebookKind, SweepPoint, SystemParams, ARTIFACT_VERSION};

use crate::error::{io_error, CliError};

pub const SUMMARY_HEADER: [&str; 9] = ["ka", "codebook", "ebno_db", "pe_bound", "p0", "n", "k", "epsilon", "artifact_version"];
pub const PER_T_HEADER: [&str; 9] = ["t", "log_pt", "log_qt", "log_term", "alpha", "beta", "u", "v", "delta"];
pub const VALIDATE_HEADER: [&str; 8] = ["suite", "case", "mc_mean", "mc_stderr", "trials", "reference", "check", "pass"];

/// Everything a run writes, kept as text so cached runs reproduce their
/// files byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rendered {
    pub csv: String,
    pub per_t_csv: String,
    pub summary: String,
    /// Messages of sweep points that failed.
    pub failures: Vec<String>,
}

/// 15 significant digits in scientific notation; `nan`, `inf`, `-inf` for
/// non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.14e}")
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(format!("csv encoding: {e}")))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

fn summary_row(ka: u32, kind: CodebookKind, ebno_db: f64, pe: f64, p0: f64, params: &SystemParams) -> Vec<String> {
    vec![
        ka.to_string(),
        kind.to_string(),
        fmt_num(ebno_db),
        fmt_num(pe),
        fmt_num(p0),
        params.n.to_string(),
        params.k.to_string(),
        fmt_num(params.epsilon),
        ARTIFACT_VERSION.to_string(),
    ]
}

fn per_t_rows(w: &mut csv::Writer<Vec<u8>>, ka: Option<u32>, r: &BoundResult) -> Result<(), CliError> {
    for t in &r.terms {
        let a = t.argmin;
        let mut row: Vec<String> = ka.map(|k| k.to_string()).into_iter().collect();
        row.extend([
            t.t.to_string(),
            fmt_num(t.log_pt.ln()),
            fmt_num(t.log_qt.ln()),
            fmt_num(t.log_term.ln()),
            fmt_num(a.alpha),
            fmt_num(a.beta),
            fmt_num(a.u),
            fmt_num(a.v),
            fmt_num(a.delta),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    Ok(())
}

/// One bound (fixed power or minimal Eb/N0) at a single `K_a`.
pub fn render_single(command: &str, params: &SystemParams, r: &BoundResult) -> Result<Rendered, CliError> {
    let mut w = writer();
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    w.write_record(summary_row(params.ka, r.kind, r.power.ebno_db, r.pe(), r.log_p0.prob(), params))
        .map_err(csv_err)?;
    let mut wt = writer();
    wt.write_record(PER_T_HEADER).map_err(csv_err)?;
    per_t_rows(&mut wt, None, r)?;
    let summary = format!(
        "{command} codebook={} n={} k={} ka={} ebno_db={} pe_bound={} p0={} p_prime_ratio={}",
        r.kind,
        params.n,
        params.k,
        params.ka,
        fmt_num(r.power.ebno_db),
        fmt_num(r.pe()),
        fmt_num(r.log_p0.prob()),
        fmt_num(r.power.ratio()),
    );
    Ok(Rendered {
        csv: finish(w)?,
        per_t_csv: finish(wt)?,
        summary,
        failures: vec![],
    })
}

/// A `K_a` sweep, ascending. Failed points get `nan` entries; the per-`t`
/// file gains a leading `ka` column.
pub fn render_sweep(template: &SystemParams, kind: CodebookKind, points: &[SweepPoint]) -> Result<Rendered, CliError> {
    let mut w = writer();
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    let mut wt = writer();
    let mut header = vec!["ka"];
    header.extend(PER_T_HEADER);
    wt.write_record(&header).map_err(csv_err)?;
    let mut failures = Vec::new();
    for p in points {
        let params = SystemParams { ka: p.ka, ..*template };
        match (&p.result, p.ebno_db) {
            (Some(r), Some(e)) => {
                w.write_record(summary_row(p.ka, kind, e, r.pe(), r.log_p0.prob(), &params)).map_err(csv_err)?;
                per_t_rows(&mut wt, Some(p.ka), r)?;
            }
            _ => {
                w.write_record(summary_row(p.ka, kind, f64::NAN, f64::NAN, f64::NAN, &params)).map_err(csv_err)?;
                failures.push(format!("ka={}: {}", p.ka, p.error.as_deref().unwrap_or("no result")));
            }
        }
    }
    let summary = format!(
        "sweep codebook={kind} n={} k={} points={} failed={}",
        template.n,
        template.k,
        points.len(),
        failures.len()
    );
    Ok(Rendered {
        csv: finish(w)?,
        per_t_csv: finish(wt)?,
        summary,
        failures,
    })
}

pub fn render_checks(suite: &str, rows: &[CheckRow]) -> Result<Rendered, CliError> {
    let mut w = writer();
    w.write_record(VALIDATE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.suite.clone(),
            r.case.clone(),
            fmt_num(r.estimate.mean),
            fmt_num(r.estimate.stderr),
            r.estimate.trials.to_string(),
            fmt_num(r.reference),
            match r.check {
                CheckKind::TwoSided => "two_sided".to_string(),
                CheckKind::UpperBound => "upper_bound".to_string(),
            },
            r.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| r.case.clone()).collect();
    Ok(Rendered {
        csv: finish(w)?,
        per_t_csv: String::new(),
        summary: format!("validate suite={suite} checks={} failed={}", rows.len(), failed.len()),
        failures: failed,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error("cannot create directory", dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error("cannot write", path, e))
}
