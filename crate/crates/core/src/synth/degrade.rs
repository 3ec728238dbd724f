//! Simulated archival degradation: contrast loss, blur, exposure flicker,
//! grain and repeated frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, Plane};
use crate::meta::derive_seed;
use crate::videoio::FrameSequence;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradeSpec {
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub contrast_scale: f64,
    pub flicker_amp: f64,
    pub drop_prob: f64,
    pub rng_seed: u64,
}

impl DegradeSpec {
    /// No degradation at all.
    pub fn identity() -> Self {
        Self { noise_sigma: 0.0, blur_sigma: 0.0, contrast_scale: 1.0, flicker_amp: 0.0, drop_prob: 0.0, rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_scale > 0.0 && self.contrast_scale <= 1.0) {
            return Err(Error::Config("contrast_scale must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::Config("drop_prob must lie in [0, 1)".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.blur_sigma >= 0.0 && self.flicker_amp >= 0.0) {
            return Err(Error::Config("noise, blur and flicker must be >= 0".into()));
        }
        Ok(())
    }
}

/// Applies, in order: contrast compression about 128, Gaussian blur,
/// per-frame brightness flicker, additive Gaussian noise, and frame drops
/// (a dropped frame repeats the previous output frame). Each effect draws
/// from its own seeded stream, so changing one strength leaves the other
/// effects' randomness untouched.
pub fn degrade_clip(seq: &FrameSequence, spec: &DegradeSpec) -> Result<FrameSequence> {
    spec.validate()?;
    let mut flicker = ChaCha8Rng::seed_from_u64(derive_seed(spec.rng_seed, "flicker"));
    let mut grain = ChaCha8Rng::seed_from_u64(derive_seed(spec.rng_seed, "noise"));
    let mut drops = ChaCha8Rng::seed_from_u64(derive_seed(spec.rng_seed, "drop"));

    let mut frames: Vec<Vec<u8>> = Vec::with_capacity(seq.frame_count());
    for i in 0..seq.frame_count() {
        let mut p: Plane = seq.plane(i);
        p.data.iter_mut().for_each(|v| *v = 128.0 + spec.contrast_scale * (*v - 128.0));
        let mut p = gaussian_blur(&p, spec.blur_sigma);
        let offset = spec.flicker_amp * (2.0 * flicker.random::<f64>() - 1.0);
        for v in p.data.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut grain);
            *v = (*v + offset + spec.noise_sigma * z).clamp(0.0, 255.0);
        }
        let dropped = drops.random::<f64>() < spec.drop_prob;
        match frames.last() {
            Some(prev) if dropped => frames.push(prev.clone()),
            _ => frames.push(p.to_u8()),
        }
    }
    FrameSequence::new(seq.clip_id.clone(), seq.width, seq.height, frames)
}
