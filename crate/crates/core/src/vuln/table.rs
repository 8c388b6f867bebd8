use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::VulnError;

/// Row kinds of the comparison-score CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Morph,
    Nonmated,
    Mated,
    Attack,
    Bonafide,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Morph => "morph",
            ScoreKind::Nonmated => "nonmated",
            ScoreKind::Mated => "mated",
            ScoreKind::Attack => "attack",
            ScoreKind::Bonafide => "bonafide",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "morph" => ScoreKind::Morph,
            "nonmated" => ScoreKind::Nonmated,
            "mated" => ScoreKind::Mated,
            "attack" => ScoreKind::Attack,
            "bonafide" => ScoreKind::Bonafide,
            _ => return None,
        })
    }
}

pub const SCORE_HEADER: [&str; 5] = ["kind", "morph_id", "subject_index", "attempt", "score"];

/// Scores of one morph against probes of its contributing subjects.
/// `subjects[k - 1]` holds `(attempt, score)` for subject index `k`, sorted by attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphScores {
    pub id: String,
    pub subjects: Vec<Vec<(u32, f64)>>,
}

impl MorphScores {
    /// True when some subject has no attempts; such morphs cannot be evaluated.
    pub fn is_incomplete(&self) -> bool {
        self.subjects.is_empty() || self.subjects.iter().any(Vec::is_empty)
    }
}

/// A detector score for one image, used by the MAD tools.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScore {
    pub attack: bool,
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    morphs: Vec<MorphScores>,
    index: HashMap<String, usize>,
    subject_count: usize,
    pub nonmated: Vec<f64>,
    pub mated: Vec<f64>,
    pub detection: Vec<DetectionScore>,
}

fn finite(score: f64) -> Result<f64, VulnError> {
    if score.is_finite() {
        Ok(score)
    } else {
        Err(VulnError::Invalid(format!("non-finite score {score}")))
    }
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of contributing subjects per morph (largest subject index seen).
    pub fn subject_count(&self) -> usize {
        self.subject_count
    }

    pub fn morphs(&self) -> &[MorphScores] {
        &self.morphs
    }

    /// Declares a morph with no scores yet. Morphs keep first-seen order.
    pub fn add_morph(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.index.insert(id.to_string(), self.morphs.len());
        self.morphs.push(MorphScores {
            id: id.to_string(),
            subjects: vec![Vec::new(); self.subject_count],
        });
        self.morphs.len() - 1
    }

    /// Adds `S_k^p`; `subject` is 1-based.
    pub fn add_morph_score(&mut self, id: &str, subject: usize, attempt: u32, score: f64) -> Result<(), VulnError> {
        if subject == 0 {
            return Err(VulnError::Invalid("subject_index is 1-based".into()));
        }
        let score = finite(score)?;
        let i = self.add_morph(id);
        if subject > self.subject_count {
            self.subject_count = subject;
            for m in &mut self.morphs {
                m.subjects.resize(subject, Vec::new());
            }
        }
        let list = &mut self.morphs[i].subjects[subject - 1];
        match list.binary_search_by_key(&attempt, |&(a, _)| a) {
            Ok(_) => Err(VulnError::Invalid(format!(
                "duplicate score for morph {id}, subject {subject}, attempt {attempt}"
            ))),
            Err(at) => {
                list.insert(at, (attempt, score));
                Ok(())
            }
        }
    }

    pub fn add_nonmated(&mut self, score: f64) -> Result<(), VulnError> {
        self.nonmated.push(finite(score)?);
        Ok(())
    }

    pub fn add_mated(&mut self, score: f64) -> Result<(), VulnError> {
        self.mated.push(finite(score)?);
        Ok(())
    }

    pub fn add_detection(&mut self, attack: bool, id: &str, score: f64) -> Result<(), VulnError> {
        self.detection.push(DetectionScore {
            attack,
            id: id.to_string(),
            score: finite(score)?,
        });
        Ok(())
    }

    pub fn attack_scores(&self) -> Vec<f64> {
        self.detection.iter().filter(|d| d.attack).map(|d| d.score).collect()
    }

    pub fn bonafide_scores(&self) -> Vec<f64> {
        self.detection.iter().filter(|d| !d.attack).map(|d| d.score).collect()
    }

    pub fn from_reader<R: Read>(reader: R, origin: &str) -> Result<Self, VulnError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let at = |line: u64, message: String| VulnError::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let headers = rdr.headers().map_err(|e| at(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != SCORE_HEADER {
            return Err(at(1, format!("expected header {}", SCORE_HEADER.join(","))));
        }
        let mut table = ScoreTable::new();
        for record in rdr.records() {
            let record = record.map_err(|e| at(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let kind = ScoreKind::parse(&record[0]).ok_or_else(|| at(line, format!("unknown kind {:?}", &record[0])))?;
            let score: f64 = record[4]
                .parse()
                .map_err(|_| at(line, format!("bad score {:?}", &record[4])))?;
            let id = &record[1];
            let res = match kind {
                ScoreKind::Morph => {
                    if id.is_empty() {
                        return Err(at(line, "morph row without morph_id".into()));
                    }
                    let subject: usize = record[2]
                        .parse()
                        .map_err(|_| at(line, format!("bad subject_index {:?}", &record[2])))?;
                    let attempt: u32 = record[3]
                        .parse()
                        .map_err(|_| at(line, format!("bad attempt {:?}", &record[3])))?;
                    table.add_morph_score(id, subject, attempt, score)
                }
                ScoreKind::Nonmated => table.add_nonmated(score),
                ScoreKind::Mated => table.add_mated(score),
                ScoreKind::Attack => table.add_detection(true, id, score),
                ScoreKind::Bonafide => table.add_detection(false, id, score),
            };
            res.map_err(|e| at(line, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, VulnError> {
        Self::from_reader(text.as_bytes(), origin)
    }

    pub fn load(path: &Path) -> Result<Self, VulnError> {
        let file = std::fs::File::open(path).map_err(|source| VulnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string())
    }

    /// Writes every row; order is morphs, nonmated, mated, then detection scores.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), VulnError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| VulnError::Invalid(e.to_string());
        w.write_record(SCORE_HEADER).map_err(csv_err)?;
        for m in &self.morphs {
            for (k, list) in m.subjects.iter().enumerate() {
                for &(attempt, score) in list {
                    w.write_record([
                        "morph",
                        &m.id,
                        &(k + 1).to_string(),
                        &attempt.to_string(),
                        &score.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        for (kind, list) in [("nonmated", &self.nonmated), ("mated", &self.mated)] {
            for s in list {
                w.write_record([kind, "", "", "", &s.to_string()]).map_err(csv_err)?;
            }
        }
        for d in &self.detection {
            let kind = if d.attack { "attack" } else { "bonafide" };
            w.write_record([kind, &d.id, "", "", &d.score.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| VulnError::Invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), VulnError> {
        let io = |source| VulnError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
