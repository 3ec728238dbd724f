//! Backbone embedding providers. The stub stands in for a pretrained video
//! transformer with cheap appearance and motion-energy statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dgme::grid_cells;
use crate::meta::derive_seed;
use crate::videoio::FrameSequence;

pub trait EmbeddingProvider: Sync {
    /// Fixed-length vector for a clip; equal clips give equal vectors.
    fn embed(&self, seq: &FrameSequence) -> Vec<f64>;
    fn dim(&self) -> usize;
    /// Stable identity recorded in artifacts.
    fn descriptor(&self) -> String;
}

pub const STUB_HIST_BINS: usize = 32;
pub const STUB_GRID: usize = 3;
pub const STUB_DEFAULT_DIM: usize = 64;

/// Clip-averaged 32-bin intensity histogram plus 3×3 mean absolute frame
/// differences, mapped through a seeded Gaussian projection.
#[derive(Clone, Debug)]
pub struct StubEmbedding {
    seed: u64,
    dim: usize,
    /// Row-major `dim × raw_len()`.
    projection: Vec<f64>,
}

impl StubEmbedding {
    pub fn new(seed: u64, dim: usize) -> Self {
        let raw = Self::raw_len();
        let scale = 1.0 / (raw as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "stub/projection"));
        let projection = (0..dim * raw)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        Self { seed, dim, projection }
    }

    pub const fn raw_len() -> usize {
        STUB_HIST_BINS + STUB_GRID * STUB_GRID
    }

    /// The unprojected statistics.
    pub fn raw_features(seq: &FrameSequence) -> Vec<f64> {
        let mut raw = vec![0.0; Self::raw_len()];
        let px = (seq.width * seq.height) as f64;
        let frames = seq.frame_count() as f64;
        for frame in &seq.frames {
            for &p in frame {
                raw[p as usize * STUB_HIST_BINS / 256] += 1.0;
            }
        }
        raw[..STUB_HIST_BINS].iter_mut().for_each(|v| *v /= px * frames);
        if seq.frame_count() >= 2 {
            let cells = grid_cells(seq.width, seq.height, STUB_GRID);
            let pairs = (seq.frame_count() - 1) as f64;
            for pair in seq.frames.windows(2) {
                for (c, cell) in cells.iter().enumerate() {
                    let mut sum = 0.0;
                    for y in cell.y0..cell.y1 {
                        for x in cell.x0..cell.x1 {
                            let i = y * seq.width + x;
                            sum += (f64::from(pair[1][i]) - f64::from(pair[0][i])).abs();
                        }
                    }
                    raw[STUB_HIST_BINS + c] += sum / (cell.area() as f64 * 255.0 * pairs);
                }
            }
        }
        raw
    }

    pub fn project(&self, raw: &[f64]) -> Vec<f64> {
        self.projection.chunks_exact(Self::raw_len()).map(|row| row.iter().zip(raw).map(|(a, b)| a * b).sum()).collect()
    }
}

impl EmbeddingProvider for StubEmbedding {
    fn embed(&self, seq: &FrameSequence) -> Vec<f64> {
        self.project(&Self::raw_features(seq))
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn descriptor(&self) -> String {
        format!("stub(hist={STUB_HIST_BINS},grid={STUB_GRID},dim={},seed={})", self.dim, self.seed)
    }
}

/// Stub embedding with the default dimension.
pub fn stub_embedding(seq: &FrameSequence, seed: u64, dim: usize) -> Vec<f64> {
    StubEmbedding::new(seed, dim).embed(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(frames: Vec<Vec<u8>>) -> FrameSequence {
        FrameSequence::new("c", 6, 6, frames).unwrap()
    }

    #[test]
    fn black_clip_is_projection_of_bin_zero() {
        let stub = StubEmbedding::new(3, 8);
        let mut raw = vec![0.0; StubEmbedding::raw_len()];
        raw[0] = 1.0;
        assert_eq!(stub.embed(&clip(vec![vec![0; 36]; 3])), stub.project(&raw));
    }

    #[test]
    fn deterministic_and_pure() {
        let frames: Vec<Vec<u8>> = (0..4).map(|t| (0..36).map(|i| ((i * 7 + t * 30) % 256) as u8).collect()).collect();
        let a = stub_embedding(&clip(frames.clone()), 9, STUB_DEFAULT_DIM);
        let b = stub_embedding(&clip(frames), 9, STUB_DEFAULT_DIM);
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_eq!(StubEmbedding::new(9, 4).projection, StubEmbedding::new(9, 4).projection);
        assert_ne!(StubEmbedding::new(9, 4).projection, StubEmbedding::new(10, 4).projection);
    }

    #[test]
    fn motion_energy_per_cell() {
        let raw = StubEmbedding::raw_features(&clip(vec![vec![10; 36], vec![61; 36]]));
        assert!((raw[..32].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for e in &raw[32..] {
            assert!((e - 51.0 / 255.0).abs() < 1e-12);
        }
    }
}
