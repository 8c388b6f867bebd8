//! Dataset protocol: subject-disjoint train/test splits and same-gender
//! morph pairing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("duplicate subject id {0}")]
    DuplicateSubject(String),
    #[error("subject {0} has no images")]
    NoImages(String),
    #[error("gender bucket {gender:?} has {count} subject(s); pairing needs at least 2")]
    SmallBucket { gender: String, count: usize },
    #[error("split ratio {0} outside [0, 1]")]
    Ratio(f64),
    #[error("plan does not match manifest: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub path: PathBuf,
    #[serde(default)]
    pub session: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub gender: String,
    pub images: Vec<ImageRecord>,
}

impl Subject {
    /// Image used as the morph source: lowest session tag, then lowest path.
    pub fn source_image(&self) -> &ImageRecord {
        self.images
            .iter()
            .min_by(|a, b| (&a.session, &a.path).cmp(&(&b.session, &b.path)))
            .expect("validated manifests have images")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectManifest {
    pub subjects: Vec<Subject>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ProtocolError::Io { path: name.clone(), source })?;
    serde_json::from_str(&text).map_err(|e| ProtocolError::Format {
        path: name,
        message: format!("line {}: {e}", e.line()),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ProtocolError::Io { path: path.display().to_string(), source })
}

impl SubjectManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = read_json(path)?;
        m.check()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.subjects {
            if !seen.insert(s.id.as_str()) {
                return Err(ProtocolError::DuplicateSubject(s.id.clone()));
            }
            if s.images.is_empty() {
                return Err(ProtocolError::NoImages(s.id.clone()));
            }
        }
        Ok(())
    }

    pub fn subject(&self, id: &str) -> Option<&Subject> {
        self.subjects.iter().find(|s| s.id == id)
    }

}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MorphMethod {
    Landmark { alpha: f64 },
    Latent { w1: f64, w2: f64 },
}

impl Default for MorphMethod {
    fn default() -> Self {
        MorphMethod::Landmark { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPair {
    pub id: String,
    pub split: Split,
    pub gender: String,
    pub subject_a: String,
    pub subject_b: String,
    pub image_a: ImageRecord,
    pub image_b: ImageRecord,
    #[serde(flatten)]
    pub method: MorphMethod,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub subjects: usize,
    pub bonafide_images: usize,
    pub morphs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphPlan {
    pub seed: u64,
    pub split_ratio: f64,
    pub pairs_per_subject: Option<usize>,
    pub train_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub counts: BTreeMap<Split, SplitCounts>,
    pub pairs: Vec<PlannedPair>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Fraction of each gender bucket assigned to the training split.
    pub split_ratio: f64,
    pub seed: u64,
    /// Cap on morphs per subject; `None` pairs every same-gender couple.
    pub pairs_per_subject: Option<usize>,
    pub method: MorphMethod,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            split_ratio: 0.5,
            seed: 0,
            pairs_per_subject: None,
            method: MorphMethod::default(),
        }
    }
}

/// Splits each gender bucket by `split_ratio`. No split side is left with a
/// single subject of a gender: buckets of 2 or 3 subjects go wholly to one
/// split, alternating train/test across such buckets, and larger buckets
/// are nudged so each non-empty side holds at least 2.
fn split_bucket(n: usize, ratio: f64, small_index: &mut usize) -> usize {
    if ratio == 0.0 || ratio == 1.0 {
        return if ratio == 1.0 { n } else { 0 };
    }
    if n < 4 {
        let to_train = small_index.is_multiple_of(2);
        *small_index += 1;
        return if to_train { n } else { 0 };
    }
    let mut train = (ratio * n as f64).round() as usize;
    if train == 1 {
        train = 2;
    } else if n - train == 1 {
        train = n - 2;
    }
    train
}

pub fn plan_pairs(manifest: &SubjectManifest, opts: &PlanOptions) -> Result<MorphPlan> {
    manifest.check()?;
    if !(0.0..=1.0).contains(&opts.split_ratio) {
        return Err(ProtocolError::Ratio(opts.split_ratio));
    }
    let mut buckets: BTreeMap<&str, Vec<&Subject>> = BTreeMap::new();
    for s in &manifest.subjects {
        buckets.entry(s.gender.as_str()).or_default().push(s);
    }
    if let Some((g, b)) = buckets.iter().find(|(_, b)| b.len() < 2) {
        return Err(ProtocolError::SmallBucket { gender: g.to_string(), count: b.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut small_index = 0;
    let mut membership: HashMap<&str, Split> = HashMap::new();
    let mut groups: Vec<(Split, &str, Vec<&Subject>)> = Vec::new();
    for (gender, mut subjects) in buckets {
        subjects.sort_by(|a, b| a.id.cmp(&b.id));
        subjects.shuffle(&mut rng);
        let n_train = split_bucket(subjects.len(), opts.split_ratio, &mut small_index);
        let mut test = subjects.split_off(n_train);
        for (split, group) in [(Split::Train, &mut subjects), (Split::Test, &mut test)] {
            group.sort_by(|a, b| a.id.cmp(&b.id));
            membership.extend(group.iter().map(|s| (s.id.as_str(), split)));
        }
        groups.push((Split::Train, gender, subjects));
        groups.push((Split::Test, gender, test));
    }

    let cap = opts.pairs_per_subject.unwrap_or(usize::MAX);
    let mut pairs = Vec::new();
    for (split, gender, group) in groups {
        let mut couples: Vec<(usize, usize)> =
            (0..group.len()).flat_map(|i| (i + 1..group.len()).map(move |j| (i, j))).collect();
        couples.shuffle(&mut rng);
        let mut used = vec![0usize; group.len()];
        let mut chosen = Vec::new();
        for (i, j) in couples {
            if used[i] < cap && used[j] < cap {
                used[i] += 1;
                used[j] += 1;
                chosen.push((i, j));
            }
        }
        chosen.sort_unstable();
        pairs.extend(chosen.into_iter().map(|(i, j)| {
            let (a, b) = (group[i], group[j]);
            PlannedPair {
                id: format!("{}__{}", a.id, b.id),
                split,
                gender: gender.to_string(),
                subject_a: a.id.clone(),
                subject_b: b.id.clone(),
                image_a: a.source_image().clone(),
                image_b: b.source_image().clone(),
                method: opts.method,
            }
        }));
    }
    pairs.sort_by(|a, b| (a.split, &a.id).cmp(&(b.split, &b.id)));

    let mut counts: BTreeMap<Split, SplitCounts> =
        [(Split::Train, SplitCounts::default()), (Split::Test, SplitCounts::default())].into();
    let (mut train_subjects, mut test_subjects) = (Vec::new(), Vec::new());
    for s in &manifest.subjects {
        let split = membership[s.id.as_str()];
        match split {
            Split::Train => train_subjects.push(s.id.clone()),
            Split::Test => test_subjects.push(s.id.clone()),
        }
        let c = counts.get_mut(&split).expect("both splits present");
        c.subjects += 1;
        c.bonafide_images += s.images.len();
    }
    train_subjects.sort();
    test_subjects.sort();
    for p in &pairs {
        counts.get_mut(&p.split).expect("both splits present").morphs += 1;
    }
    for (split, c) in &counts {
        log::info!("{split:?}: {} subjects, {} bona fide images, {} morphs", c.subjects, c.bonafide_images, c.morphs);
    }
    Ok(MorphPlan {
        seed: opts.seed,
        split_ratio: opts.split_ratio,
        pairs_per_subject: opts.pairs_per_subject,
        train_subjects,
        test_subjects,
        counts,
        pairs,
    })
}

impl MorphPlan {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    /// Checks the plan against its manifest. With `files_base`, every
    /// referenced image and landmark file must exist, relative paths being
    /// taken from that directory.
    pub fn validate(&self, manifest: &SubjectManifest, files_base: Option<&Path>) -> Result<()> {
        let bad = |m: String| Err(ProtocolError::Invalid(m));
        let train: BTreeSet<&str> = self.train_subjects.iter().map(String::as_str).collect();
        let test: BTreeSet<&str> = self.test_subjects.iter().map(String::as_str).collect();
        if let Some(s) = train.intersection(&test).next() {
            return bad(format!("subject {s} is in both splits"));
        }
        for id in train.iter().chain(&test) {
            if manifest.subject(id).is_none() {
                return bad(format!("subject {id} is not in the manifest"));
            }
        }
        for p in &self.pairs {
            if p.subject_a == p.subject_b {
                return bad(format!("pair {} morphs a subject with itself", p.id));
            }
            let side = if p.split == Split::Train { &train } else { &test };
            let mut genders = Vec::new();
            for (sid, img) in [(&p.subject_a, &p.image_a), (&p.subject_b, &p.image_b)] {
                if !side.contains(sid.as_str()) {
                    return bad(format!("pair {}: subject {sid} is not in the {:?} split", p.id, p.split));
                }
                let subject = manifest.subject(sid).expect("checked above");
                if !subject.images.iter().any(|i| i.path == img.path) {
                    return bad(format!("pair {}: {} is not an image of {sid}", p.id, img.path.display()));
                }
                genders.push(subject.gender.as_str());
                if let Some(base) = files_base {
                    for f in std::iter::once(&img.path).chain(&img.landmarks) {
                        let f = base.join(f);
                        if !f.is_file() {
                            return bad(format!("pair {}: missing file {}", p.id, f.display()));
                        }
                    }
                }
            }
            if genders[0] != genders[1] {
                return bad(format!("pair {} mixes genders {} and {}", p.id, genders[0], genders[1]));
            }
        }
        Ok(())
    }
}
