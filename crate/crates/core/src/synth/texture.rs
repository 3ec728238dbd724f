//! Seeded procedural texture: multi-octave value noise plus Gaussian blobs,
//! rescaled to intensities in [20, 235].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Plane;

const OCTAVES: [(f64, f64); 4] = [(24.0, 1.0), (12.0, 0.7), (6.0, 0.5), (3.0, 0.35)];

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise_octave(out: &mut Plane, spacing: f64, amplitude: f64, rng: &mut ChaCha8Rng) {
    let gw = (out.width as f64 / spacing).ceil() as usize + 2;
    let gh = (out.height as f64 / spacing).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    // random phase so octaves do not share lattice lines
    let ox = rng.random::<f64>() * spacing;
    let oy = rng.random::<f64>() * spacing;
    for y in 0..out.height {
        let fy = (y as f64 + oy) / spacing;
        let iy = fy.floor() as usize;
        let ty = smoothstep(fy - iy as f64);
        for x in 0..out.width {
            let fx = (x as f64 + ox) / spacing;
            let ix = fx.floor() as usize;
            let tx = smoothstep(fx - ix as f64);
            let at = |i: usize, j: usize| lattice[j * gw + i];
            let top = at(ix, iy) + (at(ix + 1, iy) - at(ix, iy)) * tx;
            let bottom = at(ix, iy + 1) + (at(ix + 1, iy + 1) - at(ix, iy + 1)) * tx;
            let i = y * out.width + x;
            out.data[i] += amplitude * (top + (bottom - top) * ty);
        }
    }
}

pub fn render_texture(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tex = Plane::new(width, height);
    for (spacing, amplitude) in OCTAVES {
        value_noise_octave(&mut tex, spacing, amplitude, &mut rng);
    }
    let blobs = (width * height) / 600 + 1;
    for _ in 0..blobs {
        let cx = rng.random::<f64>() * width as f64;
        let cy = rng.random::<f64>() * height as f64;
        let radius = 2.0 + 6.0 * rng.random::<f64>();
        let amp = 2.0 * rng.random::<f64>() - 1.0;
        let reach = (3.0 * radius).ceil() as isize;
        let (x0, x1) = ((cx as isize - reach).max(0), (cx as isize + reach).min(width as isize - 1));
        let (y0, y1) = ((cy as isize - reach).max(0), (cy as isize + reach).min(height as isize - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                let i = y as usize * width + x as usize;
                tex.data[i] += amp * (-d2 / (2.0 * radius * radius)).exp();
            }
        }
    }
    let (lo, hi) = tex.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (hi - lo).max(1e-12);
    tex.data.iter_mut().for_each(|v| *v = 20.0 + 215.0 * (*v - lo) / span);
    tex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_is_seeded_and_in_range() {
        let a = render_texture(50, 40, 9);
        assert_eq!(a, render_texture(50, 40, 9));
        assert_ne!(a, render_texture(50, 40, 10));
        assert!(a.data.iter().all(|v| (20.0 - 1e-9..=235.0 + 1e-9).contains(v)));
    }
}
