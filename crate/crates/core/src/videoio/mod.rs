//! Clip loading, temporal sampling and spatial preprocessing.
//!
//! Every downstream stage consumes a [`FrameSequence`]: a fixed number of
//! equally sized 8-bit grayscale frames. Sources are either a `.y8seq` file or
//! a directory of binary PGM/PPM frames.
//!
//! The evaluation path is resize (bilinear, shorter side to the target) then
//! center crop. The training path adds one clip-consistent multi-scale crop
//! and one clip-consistent brightness/contrast jitter, seeded from
//! `(rng_seed, clip_id)`.

pub mod pnm;
pub mod y8seq;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{quantize, resize_bilinear, Plane};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    pub clip_id: String,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Vec<u8>>,
}

impl FrameSequence {
    pub fn new(clip_id: impl Into<String>, width: usize, height: usize, frames: Vec<Vec<u8>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("empty frame size {width}x{height}")));
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != width * height) {
            return Err(Error::Dimension { expected: width * height, actual: bad.len(), context: "frame pixel count" });
        }
        Ok(Self { clip_id: clip_id.into(), width, height, frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn plane(&self, index: usize) -> Plane {
        Plane::from_u8(self.width, self.height, &self.frames[index])
    }

    /// Enforces the `frame_count >= 2` contract needed for flow.
    pub fn require_pairs(&self) -> Result<()> {
        if self.frame_count() < 2 {
            return Err(Error::InsufficientFrames { need: 2, have: self.frame_count() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub frames_per_clip: usize,
    pub frame_interval: usize,
    pub target_width: usize,
    pub target_height: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { frames_per_clip: 12, frame_interval: 6, target_width: 224, target_height: 224 }
    }
}

impl SamplingSpec {
    pub fn square(frames_per_clip: usize, frame_interval: usize, size: usize) -> Self {
        Self { frames_per_clip, frame_interval, target_width: size, target_height: size }
    }

    /// Source frames needed: `(frames_per_clip - 1) * frame_interval + 1`.
    pub fn required_frames(&self) -> usize {
        (self.frames_per_clip - 1) * self.frame_interval + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames_per_clip < 2 {
            return Err(Error::Config("frames_per_clip must be >= 2".into()));
        }
        if self.frame_interval < 1 {
            return Err(Error::Config("frame_interval must be >= 1".into()));
        }
        if self.target_width < 3 || self.target_height < 3 {
            return Err(Error::Config("target size must be at least the 3x3 grid".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub enabled: bool,
    pub scale_range: (f64, f64),
    pub brightness_jitter: f64,
    pub contrast_jitter: f64,
    pub rng_seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self { enabled: true, scale_range: (1.0, 1.25), brightness_jitter: 0.2, contrast_jitter: 0.2, rng_seed: 0 }
    }
}

/// The clip-constant random draws of one augmentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentDraw {
    pub scale: f64,
    pub shift_x: i64,
    pub shift_y: i64,
    pub contrast: f64,
    pub brightness: f64,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("bad scale_range ({lo}, {hi})")));
        }
        for (name, v) in [("brightness_jitter", self.brightness_jitter), ("contrast_jitter", self.contrast_jitter)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// RNG for one clip. Draw order: scale, then (via [`AugmentSpec::draw`])
    /// crop shift x, crop shift y, contrast, brightness.
    pub fn rng(&self, clip_id: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(crate::meta::derive_seed(self.rng_seed, clip_id))
    }

    /// `max_shift` gives the crop slack (x, y) available at the drawn scale.
    pub fn draw(&self, rng: &mut ChaCha8Rng, max_shift: impl FnOnce(f64) -> (i64, i64)) -> AugmentDraw {
        let (lo, hi) = self.scale_range;
        let scale = lo + (hi - lo) * rng.random::<f64>();
        let (mx, my) = max_shift(scale);
        let shift_x = rng.random_range(0..=2 * mx) - mx;
        let shift_y = rng.random_range(0..=2 * my) - my;
        let cj = self.contrast_jitter;
        let contrast = 1.0 + cj * (2.0 * rng.random::<f64>() - 1.0);
        let brightness = 255.0 * self.brightness_jitter * (2.0 * rng.random::<f64>() - 1.0);
        AugmentDraw { scale, shift_x, shift_y, contrast, brightness }
    }
}

/// Reads every frame of a `.y8seq` file or a PGM/PPM directory.
pub fn read_source(path: impl AsRef<Path>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let clip_id = path.to_string_lossy().into_owned();
    if path.is_dir() {
        let files = pnm::list_frames(path)?;
        let mut frames = Vec::with_capacity(files.len());
        let mut size = None;
        for file in &files {
            let f = pnm::read_frame(file)?;
            match size {
                None => size = Some((f.width, f.height)),
                Some((w, h)) if (w, h) != (f.width, f.height) => {
                    return Err(Error::SizeMismatch(w, h, f.width, f.height));
                }
                Some(_) => {}
            }
            frames.push(f.pixels);
        }
        let (w, h) = size.ok_or_else(|| Error::format(path, "frame directory", "no .pgm/.ppm frames"))?;
        FrameSequence::new(clip_id, w, h, frames)
    } else {
        y8seq::read(path)
    }
}

/// Uniform stride sampling starting at frame 0.
pub fn sample_frames(source: &FrameSequence, spec: &SamplingSpec) -> Result<FrameSequence> {
    spec.validate()?;
    let need = spec.required_frames();
    if source.frame_count() < need {
        return Err(Error::InsufficientFrames { need, have: source.frame_count() });
    }
    let frames = (0..spec.frames_per_clip).map(|i| source.frames[i * spec.frame_interval].clone()).collect();
    FrameSequence::new(source.clip_id.clone(), source.width, source.height, frames)
}

/// Loads, samples and applies the evaluation preprocessing.
pub fn load_clip(path: impl AsRef<Path>, spec: &SamplingSpec) -> Result<FrameSequence> {
    let source = read_source(path)?;
    let sampled = sample_frames(&source, spec)?;
    Ok(resize_center_crop(&sampled, spec.target_width, spec.target_height))
}

/// Loads and samples, then applies the training augmentation.
pub fn load_clip_train(path: impl AsRef<Path>, spec: &SamplingSpec, aug: &AugmentSpec) -> Result<FrameSequence> {
    let source = read_source(path)?;
    let sampled = sample_frames(&source, spec)?;
    preprocess_train(&sampled, spec.target_width, spec.target_height, aug)
}

/// Size after scaling so that the target is covered (shorter side matched
/// for square targets).
fn covering_size(width: usize, height: usize, tw: usize, th: usize, extra: f64) -> (usize, usize) {
    let s = (tw as f64 / width as f64).max(th as f64 / height as f64) * extra;
    let w = ((width as f64 * s).round() as usize).max(tw);
    let h = ((height as f64 * s).round() as usize).max(th);
    (w, h)
}

fn crop(plane: &Plane, x0: usize, y0: usize, w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |x, y| plane.get(x + x0, y + y0))
}

pub fn resize_center_crop(seq: &FrameSequence, tw: usize, th: usize) -> FrameSequence {
    let (rw, rh) = covering_size(seq.width, seq.height, tw, th, 1.0);
    let (x0, y0) = ((rw - tw) / 2, (rh - th) / 2);
    let frames = (0..seq.frame_count())
        .map(|i| {
            let resized = resize_bilinear(&seq.plane(i), rw, rh);
            crop(&resized, x0, y0, tw, th).to_u8()
        })
        .collect();
    FrameSequence { clip_id: seq.clip_id.clone(), width: tw, height: th, frames }
}

/// Training-time preprocessing: one random scale crop and one
/// brightness/contrast jitter shared by all frames of the clip. With a unit
/// scale range and zero jitter this reproduces [`resize_center_crop`].
pub fn preprocess_train(seq: &FrameSequence, tw: usize, th: usize, aug: &AugmentSpec) -> Result<FrameSequence> {
    aug.validate()?;
    if !aug.enabled {
        return Ok(resize_center_crop(seq, tw, th));
    }
    let (bw, bh) = covering_size(seq.width, seq.height, tw, th, 1.0);
    let mut rng = aug.rng(&seq.clip_id);
    let mut size = (bw, bh);
    let draw = aug.draw(&mut rng, |scale| {
        size = covering_size(seq.width, seq.height, tw, th, scale);
        (((size.0 - bw) / 2) as i64, ((size.1 - bh) / 2) as i64)
    });
    let (rw, rh) = size;
    let place = |full: usize, target: usize, shift: i64| -> usize {
        let centered = ((full - target) / 2) as i64;
        (centered + shift).clamp(0, (full - target) as i64) as usize
    };
    let x0 = place(rw, tw, draw.shift_x);
    let y0 = place(rh, th, draw.shift_y);
    let frames = (0..seq.frame_count())
        .map(|i| {
            let resized = resize_bilinear(&seq.plane(i), rw, rh);
            let cropped = crop(&resized, x0, y0, tw, th);
            cropped.data.iter().map(|&p| quantize((p - 128.0) * draw.contrast + 128.0 + draw.brightness)).collect()
        })
        .collect();
    Ok(FrameSequence { clip_id: seq.clip_id.clone(), width: tw, height: th, frames })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_clip(n: usize, w: usize, h: usize) -> FrameSequence {
        let frames = (0..n).map(|f| (0..w * h).map(|i| ((i * 7 + f * 13) % 256) as u8).collect()).collect();
        FrameSequence::new("ramp", w, h, frames).unwrap()
    }

    #[test]
    fn stride_six_over_72_frames() {
        let mut src = ramp_clip(72, 4, 4);
        for (i, f) in src.frames.iter_mut().enumerate() {
            f[0] = i as u8;
        }
        let s = sample_frames(&src, &SamplingSpec::square(12, 6, 4)).unwrap();
        let idx: Vec<u8> = s.frames.iter().map(|f| f[0]).collect();
        assert_eq!(idx, (0..12).map(|i| i * 6).collect::<Vec<u8>>());
    }

    #[test]
    fn unit_stride_keeps_all_frames() {
        let src = ramp_clip(12, 5, 3);
        let s = sample_frames(&src, &SamplingSpec::square(12, 1, 3)).unwrap();
        assert_eq!(s.frames, src.frames);
    }

    #[test]
    fn insufficient_frames_message() {
        let src = ramp_clip(10, 4, 4);
        let err = sample_frames(&src, &SamplingSpec::default()).unwrap_err();
        assert_eq!(err.to_string(), "insufficient frames: need 67, have 10");
    }

    #[test]
    fn center_crop_matches_offset_resized_pixels() {
        let src = ramp_clip(2, 40, 30);
        let out = resize_center_crop(&src, 24, 24);
        // shorter side 30 -> 24, so width 40 -> 32 and the crop starts at x = 4
        let resized = resize_bilinear(&src.plane(1), 32, 24);
        for y in 0..24 {
            for x in 0..24 {
                assert_eq!(out.frames[1][y * 24 + x], quantize(resized.get(x + 4, y)));
            }
        }
    }

    #[test]
    fn degenerate_augmentation_equals_eval_path() {
        let src = ramp_clip(3, 50, 37);
        let aug = AugmentSpec {
            enabled: true,
            scale_range: (1.0, 1.0),
            brightness_jitter: 0.0,
            contrast_jitter: 0.0,
            rng_seed: 99,
        };
        assert_eq!(preprocess_train(&src, 32, 32, &aug).unwrap(), resize_center_crop(&src, 32, 32));
    }

    #[test]
    fn augmentation_is_deterministic_per_seed_and_clip() {
        let src = ramp_clip(3, 48, 48);
        let aug = AugmentSpec { rng_seed: 5, ..AugmentSpec::default() };
        let a = preprocess_train(&src, 32, 32, &aug).unwrap();
        let b = preprocess_train(&src, 32, 32, &aug).unwrap();
        assert_eq!(a, b);
        let mut other = src.clone();
        other.clip_id = "other".into();
        assert_ne!(preprocess_train(&other, 32, 32, &aug).unwrap().frames, a.frames);
    }

    #[test]
    fn brightness_jitter_is_affine_with_clip_constants() {
        let src = ramp_clip(4, 32, 32);
        let aug = AugmentSpec {
            enabled: true,
            scale_range: (1.0, 1.0),
            brightness_jitter: 0.2,
            contrast_jitter: 0.0,
            rng_seed: 17,
        };
        let out = preprocess_train(&src, 32, 32, &aug).unwrap();
        // Replay the seeded trace: scale, shift x, shift y, contrast, brightness.
        let mut rng = aug.rng("ramp");
        let _scale: f64 = rng.random();
        let _sx = rng.random_range(0..=0i64);
        let _sy = rng.random_range(0..=0i64);
        let _c: f64 = rng.random();
        let b = 255.0 * 0.2 * (2.0 * rng.random::<f64>() - 1.0);
        assert!(b != 0.0);
        for (fin, fout) in src.frames.iter().zip(&out.frames) {
            for (&p, &q) in fin.iter().zip(fout) {
                assert_eq!(q, (f64::from(p) + b).round().clamp(0.0, 255.0) as u8);
            }
        }
    }

    #[test]
    fn loads_pgm_directory_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        for (name, value) in [("b.pgm", 20u8), ("a.pgm", 10), ("c.pgm", 30), ("notes.txt", 0)] {
            let bytes = if name.ends_with(".pgm") { pnm::encode_pgm(3, 3, &[value; 9]) } else { b"ignore".to_vec() };
            std::fs::write(dir.path().join(name), bytes).unwrap();
        }
        let seq = load_clip(dir.path(), &SamplingSpec::square(3, 1, 3)).unwrap();
        let firsts: Vec<u8> = seq.frames.iter().map(|f| f[0]).collect();
        assert_eq!(firsts, vec![10, 20, 30]);
    }
}
