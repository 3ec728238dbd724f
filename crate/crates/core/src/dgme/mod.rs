//! Directional grid motion encoding.
//!
//! Each frame is split into a `grid`×`grid` partition. Inside a cell, every
//! pixel whose flow magnitude reaches `m_thr` adds its magnitude to the
//! directional bin containing its angle; every other pixel adds `m_thr` to a
//! trailing static bin. Cell histograms are summed over all consecutive frame
//! pairs, concatenated in row-major cell order and L2-normalized.

mod calibrate;
pub mod io;

use serde::{Deserialize, Serialize};

pub use calibrate::{apply_zscore, fit_stats, NormStats, STD_FLOOR};

use crate::error::{Error, Result};
use crate::flow::{cart2polar, FarnebackConfig, FlowMethod, PolarFlow};
use crate::meta::stable_hash;
use crate::videoio::FrameSequence;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    /// Histograms summed over every frame pair before normalization.
    #[default]
    SumOverPairs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgmeConfig {
    pub grid: usize,
    pub directional_bins: usize,
    pub magnitude_threshold: f64,
    pub aggregate: Aggregate,
}

impl Default for DgmeConfig {
    fn default() -> Self {
        Self { grid: 3, directional_bins: 12, magnitude_threshold: 0.5, aggregate: Aggregate::SumOverPairs }
    }
}

impl DgmeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 1 {
            return Err(Error::Config("grid must be >= 1".into()));
        }
        if self.directional_bins < 2 || 360 % self.directional_bins != 0 {
            return Err(Error::Config("directional_bins must be >= 2 and divide 360".into()));
        }
        if self.magnitude_threshold.is_nan() || self.magnitude_threshold < 0.0 {
            return Err(Error::Config("magnitude threshold must be >= 0".into()));
        }
        Ok(())
    }

    /// Bins per cell: directional plus the static bin.
    pub fn bins_per_cell(&self) -> usize {
        self.directional_bins + 1
    }

    pub fn descriptor_len(&self) -> usize {
        self.grid * self.grid * self.bins_per_cell()
    }

    pub fn bin_width(&self) -> f64 {
        360.0 / self.directional_bins as f64
    }

    /// Directional bin of an angle in degrees; bin k covers `[k·w, (k+1)·w)`.
    pub fn direction_bin(&self, theta: f64) -> usize {
        ((theta / self.bin_width()).floor() as usize) % self.directional_bins
    }

    /// Stable identity of the feature space: descriptor settings plus the
    /// flow estimator.
    pub fn config_hash(&self, flow: &FlowMethod) -> String {
        stable_hash(&format!(
            "dgme(grid={},bins={},m_thr={},aggregate={:?})|{}",
            self.grid,
            self.directional_bins,
            self.magnitude_threshold,
            self.aggregate,
            flow.describe()
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgmeDescriptor {
    pub clip_id: String,
    pub config_hash: String,
    pub values: Vec<f64>,
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRegion {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CellRegion {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1 - 1) as f64 / 2.0, (self.y0 + self.y1 - 1) as f64 / 2.0)
    }
}

/// Row-major grid cells of `⌊W/g⌋ × ⌊H/g⌋` pixels; the last row and column
/// absorb the remainders.
pub fn grid_cells(width: usize, height: usize, grid: usize) -> Vec<CellRegion> {
    let (cw, ch) = (width / grid, height / grid);
    let edge = |i: usize, step: usize, total: usize| if i == grid { total } else { i * step };
    let mut cells = Vec::with_capacity(grid * grid);
    for j in 0..grid {
        for i in 0..grid {
            cells.push(CellRegion {
                x0: edge(i, cw, width),
                y0: edge(j, ch, height),
                x1: edge(i + 1, cw, width),
                y1: edge(j + 1, ch, height),
            });
        }
    }
    cells
}

/// Un-normalized histogram of one cell: `directional_bins` magnitude-weighted
/// direction bins followed by the static bin.
pub fn cell_histogram(polar: &PolarFlow, cell: &CellRegion, cfg: &DgmeConfig) -> Vec<f64> {
    let mut hist = vec![0.0; cfg.bins_per_cell()];
    accumulate_cell(polar, cell, cfg, &mut hist);
    hist
}

fn accumulate_cell(polar: &PolarFlow, cell: &CellRegion, cfg: &DgmeConfig, hist: &mut [f64]) {
    let thr = cfg.magnitude_threshold;
    let static_bin = cfg.directional_bins;
    for y in cell.y0..cell.y1 {
        let row = y * polar.width;
        for x in cell.x0..cell.x1 {
            let m = f64::from(polar.m[row + x]);
            if m >= thr {
                hist[cfg.direction_bin(f64::from(polar.theta[row + x]))] += m;
            } else {
                hist[static_bin] += thr;
            }
        }
    }
}

/// Per-cell histograms of one polar field, concatenated (not normalized).
pub fn grid_histograms(polar: &PolarFlow, cfg: &DgmeConfig) -> Vec<f64> {
    let k = cfg.bins_per_cell();
    let mut out = vec![0.0; cfg.descriptor_len()];
    for (c, cell) in grid_cells(polar.width, polar.height, cfg.grid).iter().enumerate() {
        accumulate_cell(polar, cell, cfg, &mut out[c * k..(c + 1) * k]);
    }
    out
}

/// Scales to unit Euclidean norm; an all-zero vector is returned unchanged.
pub fn l2_normalize(values: &mut [f64]) {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Descriptor of a clip from precomputed polar fields (one per frame pair).
pub fn descriptor_from_polar<'a>(
    fields: impl IntoIterator<Item = &'a PolarFlow>,
    cfg: &DgmeConfig,
    clip_id: &str,
    config_hash: &str,
) -> DgmeDescriptor {
    let mut values = vec![0.0; cfg.descriptor_len()];
    for polar in fields {
        for (acc, h) in values.iter_mut().zip(grid_histograms(polar, cfg)) {
            *acc += h;
        }
    }
    l2_normalize(&mut values);
    DgmeDescriptor { clip_id: clip_id.to_string(), config_hash: config_hash.to_string(), values }
}

/// Full pipeline with Farnebäck flow.
pub fn compute_dgme(seq: &FrameSequence, cfg: &DgmeConfig, flow_cfg: &FarnebackConfig) -> Result<DgmeDescriptor> {
    compute_dgme_with(seq, cfg, &FlowMethod::Farneback(*flow_cfg))
}

/// Full pipeline with any flow estimator.
pub fn compute_dgme_with(seq: &FrameSequence, cfg: &DgmeConfig, flow: &FlowMethod) -> Result<DgmeDescriptor> {
    cfg.validate()?;
    seq.require_pairs()?;
    if seq.width < cfg.grid || seq.height < cfg.grid {
        return Err(Error::Config(format!(
            "frame {}x{} smaller than the {}x{} grid",
            seq.width, seq.height, cfg.grid, cfg.grid
        )));
    }
    let planes: Vec<_> = (0..seq.frame_count()).map(|i| seq.plane(i)).collect();
    let polars = planes
        .windows(2)
        .map(|pair| flow.estimate(&pair[0], &pair[1]).map(|f| cart2polar(&f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(descriptor_from_polar(&polars, cfg, &seq.clip_id, &cfg.config_hash(flow)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_from(w: usize, h: usize, px: &[(f32, f32)]) -> PolarFlow {
        PolarFlow { width: w, height: h, m: px.iter().map(|p| p.0).collect(), theta: px.iter().map(|p| p.1).collect() }
    }

    fn full(w: usize, h: usize) -> CellRegion {
        CellRegion { x0: 0, y0: 0, x1: w, y1: h }
    }

    #[test]
    fn single_pixel_at_45_degrees() {
        let mut px = vec![(0.0, 0.0); 16];
        px[5] = (2.0, 45.0);
        let h = cell_histogram(&polar_from(4, 4, &px), &full(4, 4), &DgmeConfig::default());
        assert_eq!(h.len(), 13);
        assert_eq!(h[1], 2.0);
        assert_eq!(h[12], 0.5 * 15.0);
        assert_eq!(h.iter().sum::<f64>(), 2.0 + 7.5);
    }

    #[test]
    fn all_below_threshold_goes_static() {
        let px = vec![(0.3, 120.0); 12];
        let h = cell_histogram(&polar_from(4, 3, &px), &full(4, 3), &DgmeConfig::default());
        assert_eq!(h[12], 12.0 * 0.5);
        assert!(h[..12].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wraparound_bin_edges() {
        let px = [(1.0, 0.0), (3.0, 359.0)];
        let h = cell_histogram(&polar_from(2, 1, &px), &full(2, 1), &DgmeConfig::default());
        assert_eq!(h[0], 1.0);
        assert_eq!(h[11], 3.0);
        let cfg = DgmeConfig::default();
        assert_eq!(cfg.direction_bin(30.0), 1);
        assert_eq!(cfg.direction_bin(29.999), 0);
        assert_eq!(cfg.direction_bin(360.0), 0);
    }

    #[test]
    fn grid_remainders_go_to_last_cells() {
        let cells = grid_cells(224, 224, 3);
        let widths: Vec<usize> = cells[..3].iter().map(|c| c.x1 - c.x0).collect();
        assert_eq!(widths, vec![74, 74, 76]);
        assert_eq!(cells.iter().map(CellRegion::area).sum::<usize>(), 224 * 224);
        let cells = grid_cells(10, 7, 3);
        assert_eq!(cells[8], CellRegion { x0: 6, y0: 4, x1: 10, y1: 7 });
    }

    #[test]
    fn identical_frames_give_static_only_descriptor() {
        let frame: Vec<u8> = (0..40 * 31).map(|i| ((i * 37) % 251) as u8).collect();
        let seq = FrameSequence::new("s", 40, 31, vec![frame; 4]).unwrap();
        let d = compute_dgme(&seq, &DgmeConfig::default(), &FarnebackConfig::default()).unwrap();
        assert_eq!(d.values.len(), 117);
        let norm: f64 = d.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        for (i, v) in d.values.iter().enumerate() {
            if i % 13 != 12 {
                assert_eq!(*v, 0.0, "directional bin {i}");
            } else {
                assert!(*v > 0.0);
            }
        }
        // cell areas 13x10 (x4), 14x10 (x2), 13x11 (x2), 14x11: static mass tracks area
        assert!((d.values[12] / d.values[116] - 130.0 / 154.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_frame_clips() {
        let seq = FrameSequence::new("one", 8, 8, vec![vec![0; 64]]).unwrap();
        assert!(matches!(
            compute_dgme(&seq, &DgmeConfig::default(), &FarnebackConfig::default()),
            Err(Error::InsufficientFrames { .. })
        ));
    }

    #[test]
    fn hash_depends_on_flow_and_threshold() {
        let cfg = DgmeConfig::default();
        let fb = FlowMethod::default();
        let bm = FlowMethod::BlockMatch { block: 8, search_radius: 6 };
        assert_ne!(cfg.config_hash(&fb), cfg.config_hash(&bm));
        let other = DgmeConfig { magnitude_threshold: 0.6, ..cfg };
        assert_ne!(cfg.config_hash(&fb), other.config_hash(&fb));
        assert_eq!(cfg.config_hash(&fb), DgmeConfig::default().config_hash(&FlowMethod::default()));
    }
}
