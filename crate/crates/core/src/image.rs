//! Minimal row-major floating point image plane and the filters shared by
//! the flow solver, the synthetic generator and the frame preprocessing.

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self { width, height, data: pixels.iter().map(|&p| f64::from(p)).collect() }
    }

    /// Rounds and clamps into 8-bit intensities.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample with coordinates clamped to the image.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear sample with mirrored (reflect-101) borders.
    pub fn sample_reflect(&self, x: f64, y: f64) -> f64 {
        let xf = x.floor();
        let yf = y.floor();
        let fx = x - xf;
        let fy = y - yf;
        let (xi, yi) = (xf as isize, yf as isize);
        let x0 = reflect(xi, self.width);
        let x1 = reflect(xi + 1, self.width);
        let y0 = reflect(yi, self.height);
        let y1 = reflect(yi + 1, self.height);
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Maps any integer coordinate into `0..n` by mirroring about the edge
/// pixels (`gfedcb|abcdefgh|gfedcba`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * n - 2;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    if sigma <= 0.0 {
        let mut k = vec![0.0; 2 * radius + 1];
        k[radius] = 1.0;
        return k;
    }
    let r = radius as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Correlates rows with `kx` then columns with `ky` (both centered, odd length),
/// mirroring at the borders.
pub fn convolve_separable(src: &Plane, kx: &[f64], ky: &[f64]) -> Plane {
    let (w, h) = (src.width, src.height);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = Plane::new(w, h);
    let mut row = vec![0.0; w + 2 * rx as usize];
    for y in 0..h {
        let line = &src.data[y * w..(y + 1) * w];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = line[reflect(i as isize - rx, w)];
        }
        let out = &mut tmp.data[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = kx.iter().zip(&row[x..]).map(|(k, v)| k * v).sum();
        }
    }
    let mut dst = Plane::new(w, h);
    for y in 0..h {
        let out = &mut dst.data[y * w..(y + 1) * w];
        for (j, &k) in ky.iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            let sy = reflect(y as isize + j as isize - ry, h);
            let line = &tmp.data[sy * w..(sy + 1) * w];
            for (o, v) in out.iter_mut().zip(line) {
                *o += k * v;
            }
        }
    }
    dst
}

pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let k = gaussian_kernel(sigma, radius);
    convolve_separable(src, &k, &k)
}

/// Bilinear resize with half-pixel centers; an identity when sizes match.
pub fn resize_bilinear(src: &Plane, width: usize, height: usize) -> Plane {
    if width == src.width && height == src.height {
        return src.clone();
    }
    let sx = src.width as f64 / width as f64;
    let sy = src.height as f64 / height as f64;
    Plane::from_fn(width, height, |x, y| src.sample_clamped((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5))
}
