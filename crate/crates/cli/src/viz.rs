//! SVG renderings of descriptors: a direction rose summed over cells and a
//! per-cell arrow map.

use std::f64::consts::PI;
use std::fmt::Write as _;

use dgme_core::meta::Meta;

/// Two decimals, without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(size: f64, meta: &Meta, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        num(size),
        num(size + 24.0)
    );
    // `--` is not allowed inside XML comments
    let _ = writeln!(s, "<!-- {} -->", meta.to_comment().trim_start_matches("# ").replace("--", "-"));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="16" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        num(size / 2.0),
        escape(title)
    );
    s
}

/// Summed directional mass per bin over every cell. `descriptor` holds
/// `cells × (bins + 1)` values, static bin last in each cell.
pub fn direction_totals(descriptor: &[f64], bins: usize) -> Vec<f64> {
    let mut totals = vec![0.0; bins];
    for cell in descriptor.chunks_exact(bins + 1) {
        for (t, v) in totals.iter_mut().zip(cell) {
            *t += v;
        }
    }
    totals
}

/// Wedge `k` spans `[k·w, (k+1)·w)` degrees in image orientation (y down),
/// radius proportional to its mass relative to the largest bin.
pub fn rose_svg(totals: &[f64], meta: &Meta, title: &str) -> String {
    const SIZE: f64 = 320.0;
    const R: f64 = 140.0;
    let (cx, cy) = (SIZE / 2.0, SIZE / 2.0 + 24.0);
    let mut s = header(SIZE, meta, title);
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#999" stroke-width="1"/>"##,
        num(cx),
        num(cy),
        num(R)
    );
    let max = totals.iter().copied().fold(0.0, f64::max);
    let width = 2.0 * PI / totals.len() as f64;
    for (k, &mass) in totals.iter().enumerate() {
        if max <= 0.0 || mass <= 0.0 {
            continue;
        }
        let r = R * mass / max;
        let (a0, a1) = (k as f64 * width, (k + 1) as f64 * width);
        let _ = writeln!(
            s,
            r##"<path class="wedge" data-bin="{k}" d="M {} {} L {} {} A {} {} 0 0 1 {} {} Z" fill="#3b6ea8" fill-opacity="0.8" stroke="#1d3857"/>"##,
            num(cx),
            num(cy),
            num(cx + r * a0.cos()),
            num(cy + r * a0.sin()),
            num(r),
            num(r),
            num(cx + r * a1.cos()),
            num(cy + r * a1.sin())
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Circular mean of bin-centre directions weighted by mass, in radians.
pub fn circular_mean(directional: &[f64]) -> f64 {
    let width = 2.0 * PI / directional.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (k, m) in directional.iter().enumerate() {
        let phi = (k as f64 + 0.5) * width;
        sx += m * phi.cos();
        sy += m * phi.sin();
    }
    sy.atan2(sx)
}

/// One square per cell, filled in proportion to its directional mass; an
/// arrow at the circular-mean direction unless the static bin dominates.
pub fn grid_svg(descriptor: &[f64], grid: usize, bins: usize, meta: &Meta, title: &str) -> String {
    const SIZE: f64 = 300.0;
    let cell = SIZE / grid as f64;
    let mut s = header(SIZE, meta, title);
    let cells: Vec<&[f64]> = descriptor.chunks_exact(bins + 1).collect();
    let moving: Vec<f64> = cells.iter().map(|c| c[..bins].iter().sum()).collect();
    let max = moving.iter().copied().fold(0.0, f64::max);
    for (i, c) in cells.iter().enumerate() {
        let (x0, y0) = ((i % grid) as f64 * cell, (i / grid) as f64 * cell + 24.0);
        let fill = if max > 0.0 && moving[i] > 0.0 {
            format!(r##"fill="#d9822b" fill-opacity="{}""##, num(moving[i] / max))
        } else {
            r#"fill="none""#.to_string()
        };
        let _ = writeln!(
            s,
            r##"<rect class="cell" x="{}" y="{}" width="{}" height="{}" {fill} stroke="#444"/>"##,
            num(x0),
            num(y0),
            num(cell),
            num(cell)
        );
        if moving[i] > 0.0 && moving[i] > c[bins] {
            let theta = circular_mean(&c[..bins]);
            let (cx, cy) = (x0 + cell / 2.0, y0 + cell / 2.0);
            let len = cell * 0.38;
            let (tx, ty) = (cx + len * theta.cos(), cy + len * theta.sin());
            let head = |da: f64| {
                let a = theta + PI + da;
                format!("{},{}", num(tx + 10.0 * a.cos()), num(ty + 10.0 * a.sin()))
            };
            let _ = writeln!(
                s,
                r##"<g class="arrow"><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#111" stroke-width="2"/><polygon points="{},{} {} {}" fill="#111"/></g>"##,
                num(cx),
                num(cy),
                num(tx),
                num(ty),
                num(tx),
                num(ty),
                head(0.4),
                head(-0.4)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
