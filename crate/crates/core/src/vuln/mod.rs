//! Face recognition vulnerability to morphs, computed from comparison-score
//! tables. Scores are similarities and a comparison passes only when
//! `score > tau`.

mod table;

pub use table::{DetectionScore, MorphScores, ScoreKind, ScoreTable, SCORE_HEADER};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VulnError {
    #[error("{0}")]
    Invalid(String),
    #[error("no non-mated scores to calibrate against")]
    EmptyNonmated,
    #[error("FAR target {0} outside [0, 1]")]
    FarTarget(f64),
    #[error("no evaluable morphs")]
    NoMorphs,
    #[error("morph {id}: attempts differ between subjects, aligned mode needs one score per subject for every attempt")]
    Misaligned { id: String },
    #[error("scatter export needs exactly 2 subjects per morph, table has {0}")]
    NotPairwise(usize),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Fraction of `scores` strictly above `tau`.
pub fn rate_above(scores: &[f64], tau: f64) -> f64 {
    scores.iter().filter(|&&s| s > tau).count() as f64 / scores.len() as f64
}

/// Smallest observed non-mated score `tau` with `FAR(tau) <= far_target`.
pub fn calibrate_threshold(nonmated: &[f64], far_target: f64) -> Result<f64, VulnError> {
    if nonmated.is_empty() {
        return Err(VulnError::EmptyNonmated);
    }
    if !(0.0..=1.0).contains(&far_target) {
        return Err(VulnError::FarTarget(far_target));
    }
    if let Some(s) = nonmated.iter().find(|s| !s.is_finite()) {
        return Err(VulnError::Invalid(format!("non-finite score {s}")));
    }
    let mut sorted = nonmated.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        // FAR(v) = (n - j) / n, non-increasing over the grid.
        if (n - j) as f64 / n as f64 <= far_target {
            return Ok(v);
        }
        i = j;
    }
    unreachable!("FAR at the maximum score is 0")
}

/// How the operating threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Calibrated on the table's non-mated scores.
    Far(f64),
    /// Externally supplied (vendor) threshold, used unchanged.
    Fixed(f64),
}

impl Threshold {
    pub fn resolve(&self, nonmated: &[f64]) -> Result<f64, VulnError> {
        match *self {
            Threshold::Far(target) => calibrate_threshold(nonmated, target),
            Threshold::Fixed(tau) if tau.is_finite() => Ok(tau),
            Threshold::Fixed(tau) => Err(VulnError::Invalid(format!("threshold {tau} is not finite"))),
        }
    }
}

/// Pairing of attempts across subjects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttemptMode {
    /// The p-th attempt of every subject forms one evaluation.
    #[default]
    Aligned,
    /// Every combination of attempts forms one evaluation.
    Cartesian,
}

impl std::str::FromStr for AttemptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "aligned" => Ok(AttemptMode::Aligned),
            "cartesian" => Ok(AttemptMode::Cartesian),
            _ => Err(format!("unknown attempt mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphDetail {
    pub morph_id: String,
    pub evaluations: u64,
    pub passes: u64,
    /// Best score of each subject, in subject order.
    pub best_scores: Vec<f64>,
    pub mmpmr_pass: bool,
}

fn warn_incomplete(m: &MorphScores) {
    log::warn!("morph {} has a subject without attempts; excluded", m.id);
}

fn morph_detail(m: &MorphScores, tau: f64, mode: AttemptMode) -> Result<MorphDetail, VulnError> {
    let best_scores: Vec<f64> = m
        .subjects
        .iter()
        .map(|l| l.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let (evaluations, passes) = match mode {
        AttemptMode::Aligned => {
            let first = &m.subjects[0];
            if m.subjects.iter().any(|l| l.len() != first.len() || l.iter().zip(first).any(|(a, b)| a.0 != b.0)) {
                return Err(VulnError::Misaligned { id: m.id.clone() });
            }
            let passes = (0..first.len()).filter(|&p| m.subjects.iter().all(|l| l[p].1 > tau)).count();
            (first.len() as u64, passes as u64)
        }
        AttemptMode::Cartesian => {
            // A combination passes iff every chosen score passes.
            let evaluations = m.subjects.iter().map(|l| l.len() as u64).product();
            let passes = m
                .subjects
                .iter()
                .map(|l| l.iter().filter(|&&(_, s)| s > tau).count() as u64)
                .product();
            (evaluations, passes)
        }
    };
    Ok(MorphDetail {
        morph_id: m.id.clone(),
        evaluations,
        passes,
        mmpmr_pass: best_scores.iter().all(|&s| s > tau),
        best_scores,
    })
}

/// Per-morph evaluation of every complete morph; incomplete ones are skipped with a warning.
pub fn morph_details(table: &ScoreTable, tau: f64, mode: AttemptMode) -> Result<Vec<MorphDetail>, VulnError> {
    let mut out = Vec::with_capacity(table.morphs().len());
    for m in table.morphs() {
        if m.is_incomplete() {
            warn_incomplete(m);
            continue;
        }
        out.push(morph_detail(m, tau, mode)?);
    }
    Ok(out)
}

fn fmmpmr_of(details: &[MorphDetail]) -> Result<f64, VulnError> {
    if details.is_empty() {
        return Err(VulnError::NoMorphs);
    }
    let sum: f64 = details.iter().map(|d| d.passes as f64 / d.evaluations as f64).sum();
    Ok(sum / details.len() as f64)
}

fn pooled_of(details: &[MorphDetail]) -> Result<f64, VulnError> {
    let evals: u64 = details.iter().map(|d| d.evaluations).sum();
    if evals == 0 {
        return Err(VulnError::NoMorphs);
    }
    Ok(details.iter().map(|d| d.passes).sum::<u64>() as f64 / evals as f64)
}

fn mmpmr_of(details: &[MorphDetail]) -> Result<f64, VulnError> {
    if details.is_empty() {
        return Err(VulnError::NoMorphs);
    }
    Ok(details.iter().filter(|d| d.mmpmr_pass).count() as f64 / details.len() as f64)
}

/// Mean over morphs of the fraction of that morph's evaluations in which
/// every subject passes. Never exceeds [`mmpmr`]; equals [`fmmpmr_pooled`]
/// when all morphs have the same number of evaluations.
pub fn fmmpmr(table: &ScoreTable, tau: f64, mode: AttemptMode) -> Result<f64, VulnError> {
    fmmpmr_of(&morph_details(table, tau, mode)?)
}

/// Passing evaluations over all evaluations of all morphs.
pub fn fmmpmr_pooled(table: &ScoreTable, tau: f64, mode: AttemptMode) -> Result<f64, VulnError> {
    pooled_of(&morph_details(table, tau, mode)?)
}

/// Min-max MMPMR: fraction of morphs whose every subject has some attempt above `tau`.
pub fn mmpmr(table: &ScoreTable, tau: f64) -> Result<f64, VulnError> {
    mmpmr_of(&morph_details(table, tau, AttemptMode::Cartesian)?)
}

/// `1 + mmpmr - tar`, evaluated so that `tar == 1` returns `mmpmr` exactly.
pub fn rmmr(mmpmr_value: f64, tar: f64) -> f64 {
    mmpmr_value + (1.0 - tar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnReport {
    pub tau: f64,
    pub threshold: Threshold,
    pub attempt_mode: AttemptMode,
    /// FAR actually achieved on the non-mated scores, when there are any.
    pub far: Option<f64>,
    pub fmmpmr: f64,
    /// FMMPMR with one denominator over all evaluations of all morphs.
    pub fmmpmr_pooled: f64,
    pub mmpmr: f64,
    /// Absent when the table has no mated scores.
    pub tar: Option<f64>,
    pub rmmr: Option<f64>,
    pub percent: Percentages,
    pub morphs_evaluated: usize,
    pub morphs_excluded: usize,
    pub per_morph_detail: Vec<MorphDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentages {
    pub far: Option<f64>,
    pub fmmpmr: f64,
    pub fmmpmr_pooled: f64,
    pub mmpmr: f64,
    pub tar: Option<f64>,
    pub rmmr: Option<f64>,
}

pub fn evaluate(table: &ScoreTable, threshold: Threshold, mode: AttemptMode) -> Result<VulnReport, VulnError> {
    let tau = threshold.resolve(&table.nonmated)?;
    let details = morph_details(table, tau, mode)?;
    // MMPMR only looks at best scores, which do not depend on the pairing mode.
    let fm = fmmpmr_of(&details)?;
    let pooled = pooled_of(&details)?;
    let mm = mmpmr_of(&details)?;
    let far = (!table.nonmated.is_empty()).then(|| rate_above(&table.nonmated, tau));
    let tar = (!table.mated.is_empty()).then(|| rate_above(&table.mated, tau));
    let rm = tar.map(|t| rmmr(mm, t));
    let pct = |v: f64| 100.0 * v;
    Ok(VulnReport {
        tau,
        threshold,
        attempt_mode: mode,
        far,
        fmmpmr: fm,
        fmmpmr_pooled: pooled,
        mmpmr: mm,
        tar,
        rmmr: rm,
        percent: Percentages {
            far: far.map(pct),
            fmmpmr: pct(fm),
            fmmpmr_pooled: pct(pooled),
            mmpmr: pct(mm),
            tar: tar.map(pct),
            rmmr: rm.map(pct),
        },
        morphs_evaluated: details.len(),
        morphs_excluded: table.morphs().len() - details.len(),
        per_morph_detail: details,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub morph_id: String,
    pub attempt: u32,
    pub s1: f64,
    pub s2: f64,
}

/// Aligned `(S1, S2)` pairs of every complete morph.
pub fn scatter_rows(table: &ScoreTable) -> Result<Vec<ScatterRow>, VulnError> {
    if table.morphs().is_empty() {
        return Ok(Vec::new());
    }
    if table.subject_count() != 2 {
        return Err(VulnError::NotPairwise(table.subject_count()));
    }
    let mut rows = Vec::new();
    for m in table.morphs() {
        if m.is_incomplete() {
            warn_incomplete(m);
            continue;
        }
        let (a, b) = (&m.subjects[0], &m.subjects[1]);
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0) {
            return Err(VulnError::Misaligned { id: m.id.clone() });
        }
        rows.extend(a.iter().zip(b).map(|(&(attempt, s1), &(_, s2))| ScatterRow {
            morph_id: m.id.clone(),
            attempt,
            s1,
            s2,
        }));
    }
    Ok(rows)
}

pub const SCATTER_HEADER: &str = "morph_id,attempt,s1,s2";

pub fn write_scatter<W: Write>(rows: &[ScatterRow], tau: f64, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# tau={tau}")?;
    writeln!(w, "{SCATTER_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.morph_id, r.attempt, r.s1, r.s2)?;
    }
    w.flush()
}

pub fn export_scatter(table: &ScoreTable, tau: f64, path: &Path) -> Result<usize, VulnError> {
    let rows = scatter_rows(table)?;
    let io = |source| VulnError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_scatter(&rows, tau, std::io::BufWriter::new(file)).map_err(io)?;
    Ok(rows.len())
}

/// Parses output of [`write_scatter`] back into `(tau, rows)`.
pub fn parse_scatter(text: &str, origin: &str) -> Result<(f64, Vec<ScatterRow>), VulnError> {
    let bad = |line: usize, message: String| VulnError::Parse {
        path: origin.to_string(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines().enumerate();
    let tau = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("# tau="))
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| bad(1, "missing '# tau=' header".into()))?;
    match lines.next() {
        Some((_, l)) if l == SCATTER_HEADER => {}
        _ => return Err(bad(2, format!("expected {SCATTER_HEADER}"))),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let f: Vec<&str> = l.split(',').collect();
        let parsed = (f.len() == 4)
            .then(|| Some((f[1].parse().ok()?, f[2].parse().ok()?, f[3].parse().ok()?)))
            .flatten();
        let (attempt, s1, s2) = parsed.ok_or_else(|| bad(i + 1, format!("bad row {l:?}")))?;
        rows.push(ScatterRow {
            morph_id: f[0].to_string(),
            attempt,
            s1,
            s2,
        });
    }
    Ok((tau, rows))
}
