//! Dense optical flow and its polar representation.
//!
//! Displacements are in pixels with image-space axes: `u > 0` moves right,
//! `v > 0` moves down. Angles follow `atan2(v, u)` in degrees on `[0, 360)`,
//! so 90° is downward image motion.

mod block_match;
mod farneback;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use block_match::block_match_flow;
pub use farneback::{farneback_flow, FarnebackConfig};

use crate::error::{Error, Result};
use crate::image::Plane;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, u: vec![0.0; width * height], v: vec![0.0; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Debug dump: `"FLO1"`, width, height, plane count (2) as u32 LE, then
    /// the u plane and the v plane as f32 LE.
    pub fn to_flo1(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.u.len());
        out.extend_from_slice(b"FLO1");
        for word in [self.width as u32, self.height as u32, 2] {
            out.extend_from_slice(&word.to_le_bytes());
        }
        for x in self.u.iter().chain(&self.v) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_flo1(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != b"FLO1" {
            return Err(Error::format(path, "FLO1 header", "bad magic or short header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (width, height) = (word(4), word(8));
        let n = width * height;
        let expected = 16 + 8 * n;
        if bytes.len() != expected {
            return Err(Error::Truncated { path: path.into(), expected: expected as u64, actual: bytes.len() as u64 });
        }
        let floats: Vec<f32> = bytes[16..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { width, height, u: floats[..n].to_vec(), v: floats[n..].to_vec() })
    }

    pub fn write_flo1(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_flo1()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolarFlow {
    pub width: usize,
    pub height: usize,
    /// Magnitude in pixels.
    pub m: Vec<f32>,
    /// Angle in degrees on `[0, 360)`; 0 wherever `m == 0`.
    pub theta: Vec<f32>,
}

/// Magnitude and angle of a single displacement.
pub fn polar(u: f64, v: f64) -> (f64, f64) {
    let m = (u * u + v * v).sqrt();
    if m == 0.0 {
        return (0.0, 0.0);
    }
    let mut theta = v.atan2(u).to_degrees();
    if theta < 0.0 {
        theta += 360.0;
    }
    if theta >= 360.0 {
        theta = 0.0;
    }
    (m, theta)
}

pub fn cart2polar(field: &FlowField) -> PolarFlow {
    let n = field.u.len();
    let mut m = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for (&u, &v) in field.u.iter().zip(&field.v) {
        let (mag, ang) = polar(f64::from(u), f64::from(v));
        let mut ang = ang as f32;
        // narrowing can round 359.99999... up to 360
        if ang >= 360.0 {
            ang = 0.0;
        }
        m.push(mag as f32);
        theta.push(ang);
    }
    PolarFlow { width: field.width, height: field.height, m, theta }
}

/// Which estimator produces the flow consumed by the descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FlowMethod {
    Farneback(FarnebackConfig),
    BlockMatch { block: usize, search_radius: usize },
}

impl Default for FlowMethod {
    fn default() -> Self {
        FlowMethod::Farneback(FarnebackConfig::default())
    }
}

impl FlowMethod {
    pub fn estimate(&self, prev: &Plane, next: &Plane) -> Result<FlowField> {
        match *self {
            FlowMethod::Farneback(cfg) => farneback_flow(prev, next, &cfg),
            FlowMethod::BlockMatch { block, search_radius } => block_match_flow(prev, next, block, search_radius),
        }
    }

    /// Canonical text used in configuration hashes.
    pub fn describe(&self) -> String {
        match self {
            FlowMethod::Farneback(c) => format!(
                "farneback(levels={},scale={},win={},iters={},poly_n={},poly_sigma={})",
                c.pyramid_levels, c.pyramid_scale, c.window_size, c.iterations, c.poly_n, c.poly_sigma
            ),
            FlowMethod::BlockMatch { block, search_radius } => {
                format!("block_match(block={block},radius={search_radius})")
            }
        }
    }
}

pub(crate) fn check_same_size(prev: &Plane, next: &Plane) -> Result<()> {
    if (prev.width, prev.height) != (next.width, next.height) {
        return Err(Error::SizeMismatch(prev.width, prev.height, next.width, next.height));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(u: &[f32], v: &[f32]) -> FlowField {
        FlowField { width: u.len(), height: 1, u: u.to_vec(), v: v.to_vec() }
    }

    #[test]
    fn axis_and_triangle_cases() {
        let p = cart2polar(&field(&[1.0, 3.0, 0.0, 0.0, -1.0], &[0.0, 4.0, 0.0, 2.0, 0.0]));
        assert_eq!(p.m[0], 1.0);
        assert_eq!(p.theta[0], 0.0);
        assert_eq!(p.m[1], 5.0);
        assert!((p.theta[1] - 53.1301).abs() < 1e-4);
        assert_eq!((p.m[2], p.theta[2]), (0.0, 0.0));
        // downward image motion is 90 degrees
        assert!((p.theta[3] - 90.0).abs() < 1e-6);
        assert!((p.theta[4] - 180.0).abs() < 1e-6);
    }

    #[test]
    fn tiny_negative_v_stays_below_360() {
        let p = cart2polar(&field(&[1.0], &[-1e-12]));
        assert!(p.theta[0] >= 0.0 && p.theta[0] < 360.0);
    }

    #[test]
    fn flo1_round_trip() {
        let f = field(&[1.5, -2.0], &[0.25, 3.0]);
        let bytes = f.to_flo1();
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(FlowField::from_flo1(&bytes, Path::new("f")).unwrap(), f);
        assert!(FlowField::from_flo1(&bytes[..20], Path::new("f")).is_err());
    }

    proptest! {
        #[test]
        fn polar_reconstructs_cartesian(u in -50.0f32..50.0, v in -50.0f32..50.0) {
            let p = cart2polar(&field(&[u], &[v]));
            let (m, t) = (f64::from(p.m[0]), f64::from(p.theta[0]).to_radians());
            prop_assert!((0.0..360.0).contains(&p.theta[0]));
            if m > 1e-3 {
                let scale = m.max(1.0);
                prop_assert!((m * t.cos() - f64::from(u)).abs() / scale < 1e-6);
                prop_assert!((m * t.sin() - f64::from(v)).abs() / scale < 1e-6);
            }
        }

        #[test]
        fn rotation_adds_to_angle(u in -20.0f64..20.0, v in -20.0f64..20.0, phi in 0.0f64..360.0) {
            prop_assume!((u * u + v * v).sqrt() > 1e-3);
            let (m0, t0) = polar(u, v);
            let (s, c) = phi.to_radians().sin_cos();
            let (m1, t1) = polar(c * u - s * v, s * u + c * v);
            prop_assert!((m0 - m1).abs() < 1e-9 * m0.max(1.0));
            let d = (t1 - t0 - phi).rem_euclid(360.0);
            prop_assert!(!(1e-6..=360.0 - 1e-6).contains(&d), "angle delta off by {d}");
        }
    }
}
