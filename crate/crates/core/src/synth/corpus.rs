//! Labelled corpora of synthetic clips written as `.y8seq` files plus an
//! `annotations.csv` index.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{degrade_clip, make_clip, DegradeSpec, MotionClass, SynthSpec};
use crate::error::{Error, Result};
use crate::meta::{derive_seed, stable_hash, Meta};
use crate::videoio::y8seq;

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
const CLIP_DIR: &str = "clips";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Modern,
    Historical,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Modern => "modern",
            Domain::Historical => "historical",
        })
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modern" => Ok(Domain::Modern),
            "historical" => Ok(Domain::Historical),
            _ => Err(Error::Config(format!("unknown domain {s:?}; valid: modern, historical"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub classes: Vec<MotionClass>,
    pub per_class: usize,
    pub domain: Domain,
    pub seed: u64,
    pub frames: usize,
    pub size: usize,
    /// Motion range in px/frame; for zoom this is the displacement at half
    /// the frame size from the center.
    pub magnitude_range: (f64, f64),
    pub max_jitter: f64,
}

impl CorpusSpec {
    pub fn new(classes: Vec<MotionClass>, per_class: usize, domain: Domain, seed: u64) -> Self {
        Self { classes, per_class, domain, seed, frames: 12, size: 96, magnitude_range: (1.0, 4.0), max_jitter: 0.2 }
    }

    /// Randomized spec for clip `index` of `class`.
    pub fn clip_spec(&self, class: MotionClass, index: usize) -> SynthSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &format!("{class}/{index}")));
        let (lo, hi) = self.magnitude_range;
        let px = lo + (hi - lo) * rng.random::<f64>();
        let direction_sign = if rng.random::<bool>() { 1 } else { -1 };
        let texture_seed = rng.random::<u64>();
        let jitter = self.max_jitter * rng.random::<f64>();
        let motion_magnitude = match class {
            MotionClass::Static => 0.0,
            MotionClass::Zoom => px / (self.size as f64 / 2.0),
            _ => px,
        };
        SynthSpec {
            class_label: class,
            frames: self.frames,
            size: self.size,
            motion_magnitude,
            direction_sign,
            texture_seed,
            jitter,
        }
    }

    /// Randomized archival degradation for clip `index` of `class`.
    pub fn degrade_spec(&self, class: MotionClass, index: usize) -> DegradeSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &format!("{class}/{index}/degrade")));
        let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        DegradeSpec {
            noise_sigma: u(3.0, 9.0),
            blur_sigma: u(0.4, 1.2),
            contrast_scale: u(0.45, 0.85),
            flicker_amp: u(3.0, 12.0),
            drop_prob: u(0.05, 0.25),
            rng_seed: derive_seed(self.seed, &format!("{class}/{index}/rng")),
        }
    }

    pub fn config_hash(&self) -> String {
        stable_hash(&serde_json::to_string(self).expect("corpus spec serializes"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    /// Path relative to the corpus directory.
    pub clip_path: String,
    pub label: MotionClass,
}

/// Renders the corpus into `out_dir` (`clips/*.y8seq` and
/// `annotations.csv`). Output bytes depend only on `spec`.
pub fn make_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<Vec<CorpusEntry>> {
    if spec.per_class < 1 {
        return Err(Error::Config("per_class must be >= 1".into()));
    }
    if spec.classes.is_empty() {
        return Err(Error::Empty("corpus classes"));
    }
    let clip_dir = out_dir.join(CLIP_DIR);
    fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;

    let jobs: Vec<(MotionClass, usize)> =
        spec.classes.iter().flat_map(|&c| (0..spec.per_class).map(move |i| (c, i))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(class, index)| -> Result<CorpusEntry> {
            let clip_path = format!("{CLIP_DIR}/{class}_{index:04}.y8seq");
            let mut seq = make_clip(&spec.clip_spec(class, index))?;
            if spec.domain == Domain::Historical {
                seq = degrade_clip(&seq, &spec.degrade_spec(class, index))?;
            }
            seq.clip_id = clip_path.clone();
            y8seq::write(&seq, out_dir.join(&clip_path))?;
            Ok(CorpusEntry { clip_path, label: class })
        })
        .collect::<Result<Vec<_>>>()?;

    let meta = Meta::new(Some(spec.seed), &spec.config_hash()).with("domain", spec.domain.to_string());
    let mut csv = format!("{}\nclip_path,label\n", meta.to_comment());
    for e in &entries {
        csv.push_str(&format!("{},{}\n", e.clip_path, e.label));
    }
    let ann = out_dir.join(ANNOTATIONS_FILE);
    fs::write(&ann, csv).map_err(|e| Error::io(&ann, e))?;
    Ok(entries)
}
