//! Exhaustive integer block matching, used as an independent reference for
//! the dense estimator.

use super::{check_same_size, FlowField};
use crate::error::{Error, Result};
use crate::image::Plane;

/// For every `block`×`block` tile of `prev` (edge tiles clipped), finds the
/// integer displacement within `search_radius` minimizing the absolute
/// difference against `next`. A displaced tile that partly leaves the frame
/// is scored by its mean absolute difference over the part still inside;
/// candidates keeping less than half of the tile inside are not considered.
/// Ties go to the smallest `|d|`, then to the lexicographically smallest
/// `(dy, dx)`.
pub fn block_match_flow(prev: &Plane, next: &Plane, block: usize, search_radius: usize) -> Result<FlowField> {
    check_same_size(prev, next)?;
    if block == 0 || search_radius == 0 {
        return Err(Error::Config("block and search_radius must be positive".into()));
    }
    let (w, h) = (prev.width, prev.height);
    let r = search_radius as isize;
    let mut out = FlowField::zeros(w, h);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let bw = block.min(w - bx);
            let bh = block.min(h - by);
            let mut best: Option<(f64, isize, isize, isize)> = None;
            for dy in -r..=r {
                let j0 = (-(by as isize) - dy).max(0) as usize;
                let j1 = (h as isize - by as isize - dy).min(bh as isize);
                for dx in -r..=r {
                    let i0 = (-(bx as isize) - dx).max(0) as usize;
                    let i1 = (w as isize - bx as isize - dx).min(bw as isize);
                    if j1 <= j0 as isize || i1 <= i0 as isize {
                        continue;
                    }
                    let (j1, i1) = (j1 as usize, i1 as usize);
                    let count = (j1 - j0) * (i1 - i0);
                    if 2 * count < bw * bh {
                        continue;
                    }
                    let mut sad = 0.0;
                    for j in j0..j1 {
                        let a = &prev.data[(by + j) * w + bx + i0..(by + j) * w + bx + i1];
                        let s = ((by + j) as isize + dy) as usize * w + ((bx + i0) as isize + dx) as usize;
                        let b = &next.data[s..s + (i1 - i0)];
                        sad += a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>();
                    }
                    let cand = (sad / count as f64, dx * dx + dy * dy, dy, dx);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
            let (_, _, dy, dx) = best.expect("zero displacement is always admissible");
            for y in by..by + bh {
                for x in bx..bx + bw {
                    out.u[y * w + x] = dx as f32;
                    out.v[y * w + x] = dy as f32;
                }
            }
        }
    }
    Ok(out)
}
