//! Binary PGM (P5) and PPM (P6) frames. Color is reduced to luminance with
//! BT.601 weights.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round().clamp(0.0, 255.0) as u8
}

pub fn read_frame(path: &Path) -> Result<GrayFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<GrayFrame> {
    let bad = |detail: &str| Error::format(path, "PNM header", detail.to_string());
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| bad("missing magic"))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(bad("expected P5 or P6")),
    };
    let mut field = |name: &str| -> Result<usize> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| bad(&format!("missing {name}")))?;
        std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad(&format!("bad {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero size"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit maxval (1..=255) is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * channels;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < need {
        return Err(Error::Truncated { path: path.into(), expected: (pos + need) as u64, actual: bytes.len() as u64 });
    }
    let scale = |v: u8| -> u8 {
        if maxval == 255 {
            v
        } else {
            ((f64::from(v) * 255.0 / maxval as f64).round()).min(255.0) as u8
        }
    };
    let pixels = if channels == 1 {
        raster[..need].iter().map(|&v| scale(v)).collect()
    } else {
        raster[..need].chunks_exact(3).map(|c| luma_bt601(scale(c[0]), scale(c[1]), scale(c[2]))).collect()
    };
    Ok(GrayFrame { width, height, pixels })
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

/// `.pgm`/`.ppm` files in `dir`, sorted lexicographically by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm" | "ppm")) && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pgm_with_comments() {
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let f = decode(&bytes, Path::new("a.pgm")).unwrap();
        assert_eq!((f.width, f.height), (3, 2));
        assert_eq!(f.pixels, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn ppm_converted_with_bt601() {
        let mut bytes = b"P6 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 10, 200, 30]);
        let f = decode(&bytes, Path::new("a.ppm")).unwrap();
        // 0.299*255 = 76.245; 0.299*10 + 0.587*200 + 0.114*30 = 123.81
        assert_eq!(f.pixels, vec![76, 124]);
    }

    #[test]
    fn short_raster_is_truncated_error() {
        let bytes = b"P5 4 4 255\n\x00\x01".to_vec();
        assert!(matches!(decode(&bytes, Path::new("s.pgm")), Err(Error::Truncated { .. })));
    }

    #[test]
    fn rejects_ascii_variants() {
        assert!(matches!(decode(b"P2 1 1 255\n0", Path::new("a.pgm")), Err(Error::Format { .. })));
    }
}
