//! Deterministic labelled footage with known camera motion, plus a simulated
//! archival degradation.
//!
//! Motion semantics (flow sign conventions as in [`crate::flow`]):
//! - `static`: identity plus per-frame sub-pixel jitter
//! - `pan`: horizontal translation by `sign·magnitude` px/frame
//! - `tilt`: vertical translation (positive sign moves content down)
//! - `zoom`: scaling about the frame center by `(1 + sign·magnitude)` per
//!   frame, so `magnitude` is a relative rate here
//! - `track`: the background pans while a high-contrast subject stays
//!   centred, as when the camera follows a moving object

mod corpus;
mod degrade;
mod texture;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use corpus::{make_corpus, CorpusEntry, CorpusSpec, Domain, ANNOTATIONS_FILE};
pub use degrade::{degrade_clip, DegradeSpec};
pub use texture::render_texture;

use crate::dgme::{grid_cells, DgmeConfig};
use crate::error::{Error, Result};
use crate::flow::polar;
use crate::image::Plane;
use crate::meta::derive_seed;
use crate::videoio::FrameSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionClass {
    Static,
    Tilt,
    Pan,
    Zoom,
    Track,
}

impl MotionClass {
    pub const ALL: [MotionClass; 5] =
        [MotionClass::Static, MotionClass::Tilt, MotionClass::Pan, MotionClass::Zoom, MotionClass::Track];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::Static => "static",
            MotionClass::Tilt => "tilt",
            MotionClass::Pan => "pan",
            MotionClass::Zoom => "zoom",
            MotionClass::Track => "track",
        }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionClass::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = MotionClass::ALL.iter().map(|c| c.name()).collect();
            Error::Config(format!("unknown class {s:?}; valid classes: {}", valid.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub class_label: MotionClass,
    pub frames: usize,
    pub size: usize,
    /// px/frame, or the relative scale rate per frame for zoom.
    pub motion_magnitude: f64,
    pub direction_sign: i8,
    pub texture_seed: u64,
    /// Max per-frame camera shake in px (uniform in `[-jitter, jitter]`).
    pub jitter: f64,
}

impl SynthSpec {
    pub fn new(class_label: MotionClass, motion_magnitude: f64, direction_sign: i8, texture_seed: u64) -> Self {
        Self { class_label, frames: 12, size: 96, motion_magnitude, direction_sign, texture_seed, jitter: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 || self.size < 8 {
            return Err(Error::Config("synth clips need >= 2 frames and size >= 8".into()));
        }
        if self.class_label != MotionClass::Static && (self.motion_magnitude.is_nan() || self.motion_magnitude <= 0.0) {
            return Err(Error::Config(format!("{} needs a positive magnitude", self.class_label)));
        }
        if self.class_label == MotionClass::Zoom && self.motion_magnitude >= 0.5 {
            return Err(Error::Config("zoom rate must be below 0.5 per frame".into()));
        }
        if self.direction_sign != 1 && self.direction_sign != -1 {
            return Err(Error::Config("direction_sign must be +1 or -1".into()));
        }
        if self.jitter.is_nan() || self.jitter < 0.0 {
            return Err(Error::Config("jitter must be >= 0".into()));
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        f64::from(self.direction_sign)
    }

    /// Ground-truth displacement of the scene point seen at `(x, y)` in
    /// any frame when moving to the next one, ignoring jitter.
    pub fn true_flow(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.motion_magnitude * self.sign();
        match self.class_label {
            MotionClass::Static => (0.0, 0.0),
            MotionClass::Pan => (m, 0.0),
            MotionClass::Tilt => (0.0, m),
            MotionClass::Track => {
                if self.in_subject(x, y) {
                    (0.0, 0.0)
                } else {
                    (m, 0.0)
                }
            }
            MotionClass::Zoom => {
                let c = (self.size as f64 - 1.0) / 2.0;
                (m * (x - c), m * (y - c))
            }
        }
    }

    pub fn subject_radius(&self) -> f64 {
        self.size as f64 / 6.0
    }

    pub fn in_subject(&self, x: f64, y: f64) -> bool {
        let c = (self.size as f64 - 1.0) / 2.0;
        ((x - c).powi(2) + (y - c).powi(2)).sqrt() <= self.subject_radius()
    }

    /// Directional bins consistent with the mean true flow of each grid cell.
    /// A direction lying exactly on a bin edge admits both neighbouring
    /// bins; cells without net motion (static clips, the zoom centre) yield
    /// an empty list.
    pub fn expected_cell_bins(&self, cfg: &DgmeConfig) -> Vec<Vec<usize>> {
        grid_cells(self.size, self.size, cfg.grid)
            .iter()
            .map(|cell| {
                let (mut su, mut sv) = (0.0, 0.0);
                for y in cell.y0..cell.y1 {
                    for x in cell.x0..cell.x1 {
                        let (u, v) = self.true_flow(x as f64, y as f64);
                        su += u;
                        sv += v;
                    }
                }
                let n = cell.area() as f64;
                let (m, theta) = polar(su / n, sv / n);
                if m < 1e-9 {
                    return Vec::new();
                }
                let bin = cfg.direction_bin(theta);
                let pos = theta / cfg.bin_width();
                if (pos - pos.round()).abs() < 1e-9 {
                    let below = (pos.round() as usize + cfg.directional_bins - 1) % cfg.directional_bins;
                    vec![below, bin]
                } else {
                    vec![bin]
                }
            })
            .collect()
    }
}

/// Renders the clip described by `spec`.
pub fn make_clip(spec: &SynthSpec) -> Result<FrameSequence> {
    spec.validate()?;
    let n = spec.frames;
    let size = spec.size as f64;
    let center = (size - 1.0) / 2.0;
    let sign = spec.sign();
    let mag = spec.motion_magnitude;

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.texture_seed, "jitter"));
    let jitter: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let jx = spec.jitter * (2.0 * jitter_rng.random::<f64>() - 1.0);
            let jy = spec.jitter * (2.0 * jitter_rng.random::<f64>() - 1.0);
            (jx, jy)
        })
        .collect();

    // Canvas margin large enough that sampling stays inside the texture.
    let last = (n - 1) as f64;
    let reach = match spec.class_label {
        MotionClass::Static => 0.0,
        MotionClass::Pan | MotionClass::Tilt | MotionClass::Track => mag * last,
        MotionClass::Zoom => {
            let s_min = (1.0 + sign * mag).powf(last).min(1.0);
            (size / 2.0) * std::f64::consts::SQRT_2 * (1.0 / s_min - 1.0)
        }
    };
    let margin = (reach + spec.jitter + 4.0).ceil() as usize;
    let canvas_size = spec.size + 2 * margin;
    let canvas = render_texture(canvas_size, canvas_size, spec.texture_seed);
    let m = margin as f64;

    let subject = (spec.class_label == MotionClass::Track).then(|| {
        let r = spec.subject_radius().ceil() as usize * 2 + 4;
        let tex = render_texture(r, r, derive_seed(spec.texture_seed, "subject"));
        // high-contrast subject: stretch to the full range and invert
        Plane {
            width: tex.width,
            height: tex.height,
            data: tex.data.iter().map(|v| 255.0 - (v - 20.0) * (255.0 / 215.0)).collect(),
        }
    });

    let frames = (0..n)
        .map(|t| {
            let tf = t as f64;
            let (jx, jy) = jitter[t];
            let frame = Plane::from_fn(spec.size, spec.size, |x, y| {
                let (x, y) = (x as f64, y as f64);
                let (sx, sy) = match spec.class_label {
                    MotionClass::Static => (x, y),
                    MotionClass::Pan | MotionClass::Track => (x - sign * mag * tf, y),
                    MotionClass::Tilt => (x, y - sign * mag * tf),
                    MotionClass::Zoom => {
                        let s = (1.0 + sign * mag).powf(tf);
                        (center + (x - center) / s, center + (y - center) / s)
                    }
                };
                let bg = canvas.sample_reflect(sx + m - jx, sy + m - jy);
                match &subject {
                    Some(sub) => {
                        let dx = x - jx - center;
                        let dy = y - jy - center;
                        let d = (dx * dx + dy * dy).sqrt();
                        // one-pixel antialiased disc edge
                        let cover = (spec.subject_radius() + 0.5 - d).clamp(0.0, 1.0);
                        if cover > 0.0 {
                            let sc = sub.width as f64 / 2.0;
                            let fg = sub.sample_reflect(dx + sc, dy + sc);
                            cover * fg + (1.0 - cover) * bg
                        } else {
                            bg
                        }
                    }
                    None => bg,
                }
            });
            frame.to_u8()
        })
        .collect();
    FrameSequence::new(format!("{}_{}", spec.class_label, spec.texture_seed), spec.size, spec.size, frames)
}
