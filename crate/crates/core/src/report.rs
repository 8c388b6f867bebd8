//! Markdown summary tables: one row per FRS vulnerability report and one per
//! detector evaluation.

use std::fmt::Write;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::mad::DetReport;
use crate::vuln::VulnReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("expected LABEL=PATH, got {0:?}")]
    Spec(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Splits `LABEL=PATH` at the last `=`, so labels may contain `=`.
pub fn parse_labelled(spec: &str) -> Result<(String, String), ReportError> {
    match spec.rsplit_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_string(), path.to_string())),
        _ => Err(ReportError::Spec(spec.to_string())),
    }
}

pub fn load_labelled<T: DeserializeOwned>(spec: &str) -> Result<(String, T), ReportError> {
    let (label, path) = parse_labelled(spec)?;
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    let value = serde_json::from_str(&text).map_err(|e| ReportError::Format { path, message: e.to_string() })?;
    Ok((label, value))
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn opt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), pct)
}

fn cell(label: &str) -> String {
    label.replace('|', "\\|")
}

pub fn render(vuln: &[(String, VulnReport)], det: &[(String, DetReport)]) -> String {
    let mut out = String::new();
    if !vuln.is_empty() {
        out.push_str("## Vulnerability\n\n");
        out.push_str("| Morphs / FRS | Threshold | FAR (%) | TAR (%) | FMMPMR (%) | MMPMR (%) | RMMR (%) | Morphs |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for (label, r) in vuln {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                cell(label),
                r.tau,
                opt_pct(r.far),
                opt_pct(r.tar),
                pct(r.fmmpmr),
                pct(r.mmpmr),
                opt_pct(r.rmmr),
                r.morphs_evaluated
            );
        }
        out.push('\n');
    }
    if !det.is_empty() {
        out.push_str("## Morphing attack detection\n\n");
        out.push_str("| Detector / Morphs | D-EER (%) | BPCER @ APCER = 5% | BPCER @ APCER = 10% | Attacks | Bona fide |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|\n");
        for (label, r) in det {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                cell(label),
                pct(r.d_eer),
                pct(r.bpcer_at_apcer5),
                pct(r.bpcer_at_apcer10),
                r.attack_count,
                r.bonafide_count
            );
        }
        out.push('\n');
    }
    out
}
