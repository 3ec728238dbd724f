//! `.y8seq`: `"Y8SQ"`, then width, height and frame count as little-endian
//! u32, then every frame as row-major 8-bit luminance.

use std::fs;
use std::path::Path;

use super::FrameSequence;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"Y8SQ";
pub const HEADER_LEN: usize = 16;

pub fn encode(seq: &FrameSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + seq.width * seq.height * seq.frame_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(seq.width as u32).to_le_bytes());
    out.extend_from_slice(&(seq.height as u32).to_le_bytes());
    out.extend_from_slice(&(seq.frame_count() as u32).to_le_bytes());
    for frame in &seq.frames {
        out.extend_from_slice(frame);
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path, clip_id: impl Into<String>) -> Result<FrameSequence> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated { path: path.into(), expected: HEADER_LEN as u64, actual: bytes.len() as u64 });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(path, "y8seq header", "bad magic bytes"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, count) = (word(4), word(8), word(12));
    if width == 0 || height == 0 {
        return Err(Error::format(path, "y8seq header", format!("zero frame size {width}x{height}")));
    }
    let frame_len = width * height;
    let expected = HEADER_LEN as u64 + (frame_len as u64) * (count as u64);
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated { path: path.into(), expected, actual });
    }
    if actual > expected {
        return Err(Error::format(
            path,
            "y8seq body",
            format!("{} trailing bytes after {count} frames", actual - expected),
        ));
    }
    let frames = bytes[HEADER_LEN..].chunks_exact(frame_len).map(<[u8]>::to_vec).collect();
    FrameSequence::new(clip_id, width, height, frames)
}

pub fn write(seq: &FrameSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(seq)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path, path.to_string_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_2x2x2_layout() {
        let seq = FrameSequence::new("z", 2, 2, vec![vec![0; 4], vec![0; 4]]).unwrap();
        let bytes = encode(&seq);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..4], b"Y8SQ");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]);
        assert!(bytes[16..].iter().all(|&b| b == 0));
    }

    #[test]
    fn truncated_reports_expected_and_actual() {
        let seq = FrameSequence::new("t", 3, 2, vec![vec![7; 6]; 3]).unwrap();
        let mut bytes = encode(&seq);
        bytes.truncate(30);
        let err = decode(&bytes, Path::new("t.y8seq"), "t").unwrap_err();
        assert!(matches!(err, Error::Truncated { expected: 34, actual: 30, .. }), "{err}");
        assert!(err.to_string().contains("expected 34 bytes, got 30"));
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = vec![0u8; 20];
        bytes[..4].copy_from_slice(b"Y8SX");
        assert!(matches!(decode(&bytes, Path::new("x"), "x"), Err(Error::Format { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.y8seq");
        let seq = FrameSequence::new("c", 4, 3, (0..5).map(|i| vec![i * 40; 12]).collect()).unwrap();
        write(&seq, &path).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back.frames, seq.frames);
        assert_eq!((back.width, back.height), (4, 3));
        assert!(matches!(read(dir.path().join("missing.y8seq")), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(w in 1usize..9, h in 1usize..9, n in 2usize..5, seed in any::<u64>()) {
            let frames: Vec<Vec<u8>> = (0..n)
                .map(|f| (0..w * h).map(|i| (seed.wrapping_mul(31).wrapping_add((f * 1000 + i) as u64 * 2654435761) >> 7) as u8).collect())
                .collect();
            let seq = FrameSequence::new("p", w, h, frames).unwrap();
            let back = decode(&encode(&seq), Path::new("p"), "p").unwrap();
            prop_assert_eq!(back, seq);
        }
    }
}
