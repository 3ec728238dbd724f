//! Two-frame motion estimation by polynomial expansion (Farnebäck).
//!
//! Each frame is locally approximated by `f(x) ≈ xᵀAx + bᵀx + c` through a
//! Gaussian-weighted least-squares fit. For a displacement `d` the
//! coefficients satisfy `A d = -½ (b₂ - b₁)`; evaluating the second frame's
//! expansion at `x + d̃` for a prior `d̃` gives
//!
//! ```text
//! A  = (A₁(x) + A₂(x + d̃)) / 2
//! Δb = -½ (b₂(x + d̃) - b₁(x)) + A d̃
//! ```
//!
//! and the displacement minimizing `Σ w ‖A d − Δb‖²` over a Gaussian window
//! is `d = (Σ w AᵀA)⁻¹ Σ w AᵀΔb`. A pyramid provides the initial `d̃`
//! coarse-to-fine and a few fixed-point iterations refine it per level.

use serde::{Deserialize, Serialize};

use super::{check_same_size, FlowField};
use crate::error::{Error, Result};
use crate::image::{gaussian_blur, gaussian_kernel, reflect, resize_bilinear, Plane};

/// Levels whose smaller side drops below this are skipped.
const MIN_LEVEL_SIZE: usize = 16;
/// Tikhonov term added to the 2×2 determinant; keeps textureless regions at 0.
const DET_REGULARIZER: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarnebackConfig {
    pub pyramid_levels: usize,
    pub pyramid_scale: f64,
    pub window_size: usize,
    pub iterations: usize,
    /// Side of the square polynomial-fit neighbourhood.
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FarnebackConfig {
    fn default() -> Self {
        Self { pyramid_levels: 3, pyramid_scale: 0.5, window_size: 15, iterations: 3, poly_n: 5, poly_sigma: 1.1 }
    }
}

impl FarnebackConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("farneback: {m}")));
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return bad("pyramid_scale must lie in (0, 1)");
        }
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return bad("window_size must be odd and >= 3");
        }
        if self.poly_n < 3 || self.poly_n.is_multiple_of(2) {
            return bad("poly_n must be odd and >= 3");
        }
        if self.pyramid_levels < 1 || self.iterations < 1 {
            return bad("pyramid_levels and iterations must be >= 1");
        }
        if self.poly_sigma.is_nan() || self.poly_sigma <= 0.0 {
            return bad("poly_sigma must be positive");
        }
        Ok(())
    }

    fn window_sigma(&self) -> f64 {
        // same rule as a default Gaussian kernel of this size
        0.3 * ((self.window_size as f64 - 1.0) * 0.5 - 1.0) + 0.8
    }
}

/// Per-pixel quadratic coefficients `[b_x, b_y, a_xx, a_yy, a_xy]` where the
/// cross term of the polynomial is `a_xy·x·y`.
struct Expansion {
    width: usize,
    height: usize,
    coef: Vec<[f64; 5]>,
}

impl Expansion {
    fn compute(img: &Plane, poly_n: usize, sigma: f64) -> Self {
        let r = (poly_n / 2) as isize;
        let g: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
        let s0: f64 = g.iter().sum();
        let s2: f64 = (-r..=r).zip(&g).map(|(i, w)| w * (i * i) as f64).sum();
        let s4: f64 = (-r..=r).zip(&g).map(|(i, w)| w * (i * i * i * i) as f64).sum();

        // Normal equations of {1, x², y²} are coupled; {x}, {y}, {xy} are
        // orthogonal to everything else under a symmetric weight.
        let inv = invert3([[s0 * s0, s0 * s2, s0 * s2], [s0 * s2, s0 * s4, s2 * s2], [s0 * s2, s2 * s2, s0 * s4]]);
        let ib = 1.0 / (s0 * s2);
        let ixy = 1.0 / (s2 * s2);

        let (w, h) = (img.width, img.height);
        // horizontal moments: Σ g·f, Σ g·i·f, Σ g·i²·f
        let mut row_moments = vec![[0.0f64; 3]; w * h];
        for y in 0..h {
            let line = &img.data[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = [0.0; 3];
                for (k, i) in (-r..=r).enumerate() {
                    let v = line[reflect(x as isize + i, w)] * g[k];
                    let fi = i as f64;
                    acc[0] += v;
                    acc[1] += v * fi;
                    acc[2] += v * fi * fi;
                }
                row_moments[y * w + x] = acc;
            }
        }
        let mut coef = vec![[0.0f64; 5]; w * h];
        for y in 0..h {
            for x in 0..w {
                // m1, mx, mxx, my, myy, mxy
                let mut m = [0.0; 6];
                for (k, j) in (-r..=r).enumerate() {
                    let rm = &row_moments[reflect(y as isize + j, h) * w + x];
                    let gj = g[k];
                    let fj = j as f64;
                    m[0] += gj * rm[0];
                    m[1] += gj * rm[1];
                    m[2] += gj * rm[2];
                    m[3] += gj * fj * rm[0];
                    m[4] += gj * fj * fj * rm[0];
                    m[5] += gj * fj * rm[1];
                }
                let rhs = [m[0], m[2], m[4]];
                let axx = inv[1][0] * rhs[0] + inv[1][1] * rhs[1] + inv[1][2] * rhs[2];
                let ayy = inv[2][0] * rhs[0] + inv[2][1] * rhs[1] + inv[2][2] * rhs[2];
                coef[y * w + x] = [m[1] * ib, m[3] * ib, axx, ayy, m[5] * ixy];
            }
        }
        Self { width: w, height: h, coef }
    }

    fn sample(&self, x: f64, y: f64) -> [f64; 5] {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let (a, b) = (&self.coef[y0 * self.width + x0], &self.coef[y0 * self.width + x1]);
        let (c, d) = (&self.coef[y1 * self.width + x0], &self.coef[y1 * self.width + x1]);
        let mut out = [0.0; 5];
        for k in 0..5 {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            out[k] = top + (bottom - top) * fy;
        }
        out
    }
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 1, 2, 2) / det, -c(0, 1, 2, 2) / det, c(0, 1, 1, 2) / det],
        [-c(1, 0, 2, 2) / det, c(0, 0, 2, 2) / det, -c(0, 0, 1, 2) / det],
        [c(1, 0, 2, 1) / det, -c(0, 0, 2, 1) / det, c(0, 0, 1, 1) / det],
    ]
}

/// Separable Gaussian smoothing of five interleaved channels, mirrored borders.
fn blur5(src: &[[f64; 5]], w: usize, h: usize, k: &[f64]) -> Vec<[f64; 5]> {
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![[0.0; 5]; w * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = [0.0; 5];
            for (t, &kt) in k.iter().enumerate() {
                let s = &line[reflect(x as isize + t as isize - r, w)];
                for c in 0..5 {
                    acc[c] += kt * s[c];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![[0.0; 5]; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (t, &kt) in k.iter().enumerate() {
            let sy = reflect(y as isize + t as isize - r, h);
            let line = &tmp[sy * w..(sy + 1) * w];
            for (o, s) in dst.iter_mut().zip(line) {
                for c in 0..5 {
                    o[c] += kt * s[c];
                }
            }
        }
    }
    out
}

/// One level of estimation, refining `flow` (stored as (u, v) pairs) in place.
fn refine_level(r1: &Expansion, r2: &Expansion, flow: &mut [(f64, f64)], cfg: &FarnebackConfig) {
    let (w, h) = (r1.width, r1.height);
    let sigma = cfg.window_sigma();
    let kernel = gaussian_kernel(sigma, cfg.window_size / 2);
    let mut mats = vec![[0.0f64; 5]; w * h];
    for _ in 0..cfg.iterations {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (du, dv) = flow[i];
                let p = &r1.coef[i];
                let q = r2.sample(x as f64 + du, y as f64 + dv);
                let a11 = 0.5 * (p[2] + q[2]);
                let a22 = 0.5 * (p[3] + q[3]);
                let a12 = 0.25 * (p[4] + q[4]);
                let b1 = -0.5 * (q[0] - p[0]) + a11 * du + a12 * dv;
                let b2 = -0.5 * (q[1] - p[1]) + a12 * du + a22 * dv;
                mats[i] = [
                    a11 * a11 + a12 * a12,
                    a12 * (a11 + a22),
                    a12 * a12 + a22 * a22,
                    a11 * b1 + a12 * b2,
                    a12 * b1 + a22 * b2,
                ];
            }
        }
        let smoothed = blur5(&mats, w, h, &kernel);
        for (f, m) in flow.iter_mut().zip(&smoothed) {
            let idet = 1.0 / (m[0] * m[2] - m[1] * m[1] + DET_REGULARIZER);
            *f = ((m[2] * m[3] - m[1] * m[4]) * idet, (m[0] * m[4] - m[1] * m[3]) * idet);
        }
    }
}

/// Dense flow from `prev` to `next`.
pub fn farneback_flow(prev: &Plane, next: &Plane, cfg: &FarnebackConfig) -> Result<FlowField> {
    cfg.validate()?;
    check_same_size(prev, next)?;
    let (w, h) = (prev.width, prev.height);
    if w < cfg.poly_n || h < cfg.poly_n {
        return Err(Error::FrameTooSmall { width: w, height: h, support: cfg.poly_n });
    }

    // Level sizes, finest first.
    let mut sizes = vec![(w, h)];
    for k in 1..cfg.pyramid_levels {
        let s = cfg.pyramid_scale.powi(k as i32);
        let lw = (w as f64 * s).round() as usize;
        let lh = (h as f64 * s).round() as usize;
        if lw.min(lh) < MIN_LEVEL_SIZE.max(cfg.poly_n) {
            break;
        }
        sizes.push((lw, lh));
    }

    let mut flow: Vec<(f64, f64)> = Vec::new();
    let mut flow_size = (0, 0);
    for (k, &(lw, lh)) in sizes.iter().enumerate().rev() {
        let (p, n) = if k == 0 {
            (prev.clone(), next.clone())
        } else {
            let sigma = (1.0 / cfg.pyramid_scale.powi(k as i32) - 1.0) * 0.5;
            (resize_bilinear(&gaussian_blur(prev, sigma), lw, lh), resize_bilinear(&gaussian_blur(next, sigma), lw, lh))
        };
        flow = if flow.is_empty() { vec![(0.0, 0.0); lw * lh] } else { upsample_flow(&flow, flow_size, (lw, lh)) };
        flow_size = (lw, lh);
        let r1 = Expansion::compute(&p, cfg.poly_n, cfg.poly_sigma);
        let r2 = Expansion::compute(&n, cfg.poly_n, cfg.poly_sigma);
        refine_level(&r1, &r2, &mut flow, cfg);
    }

    let mut out = FlowField::zeros(w, h);
    for (i, &(u, v)) in flow.iter().enumerate() {
        out.u[i] = u as f32;
        out.v[i] = v as f32;
    }
    if !out.is_finite() {
        return Err(Error::NonFinite("farneback flow".into()));
    }
    Ok(out)
}

fn upsample_flow(flow: &[(f64, f64)], from: (usize, usize), to: (usize, usize)) -> Vec<(f64, f64)> {
    let u = Plane { width: from.0, height: from.1, data: flow.iter().map(|f| f.0).collect() };
    let v = Plane { width: from.0, height: from.1, data: flow.iter().map(|f| f.1).collect() };
    let su = to.0 as f64 / from.0 as f64;
    let sv = to.1 as f64 / from.1 as f64;
    let u = resize_bilinear(&u, to.0, to.1);
    let v = resize_bilinear(&v, to.0, to.1);
    u.data.iter().zip(&v.data).map(|(a, b)| (a * su, b * sv)).collect()
}
