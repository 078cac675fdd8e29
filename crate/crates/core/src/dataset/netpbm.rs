//! PGM (P2/P5) and PPM (P3/P6) reading, 8-bit only.

use std::path::Path;

use super::RawImage;
use crate::error::{Error, Result};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let tok = self.token().ok_or_else(|| format!("missing {what}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {what} {:?}", String::from_utf8_lossy(tok)))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<RawImage, String> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token().ok_or("empty file")?;
    let (channels, binary) = match magic {
        b"P2" => (1, false),
        b"P5" => (1, true),
        b"P3" => (3, false),
        b"P6" => (3, true),
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} outside 1..=255"));
    }
    let count = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels))
        .ok_or("image dimensions overflow")?;

    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => {}
            _ => return Err("missing whitespace before raster".into()),
        }
        let start = cur.pos + 1;
        let raster = bytes.get(start..start + count).ok_or_else(|| {
            format!(
                "truncated raster: expected {count} bytes, found {}",
                bytes.len().saturating_sub(start)
            )
        })?;
        raster.iter().map(|&b| b as usize).collect::<Vec<_>>()
    } else {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let v = cur
                .number("sample")
                .map_err(|e| format!("{e} at sample {i} of {count}"))?;
            out.push(v);
        }
        out
    };
    if samples.iter().any(|&s| s > maxval) {
        return Err(format!("sample exceeds maxval {maxval}"));
    }
    let samples = samples
        .into_iter()
        .map(|s| ((s * 255 + maxval / 2) / maxval) as u8)
        .collect();
    RawImage::new(width, height, channels as u8, samples).map_err(|e| e.to_string())
}

/// Parses netpbm bytes; `path` is only used for error messages.
pub fn decode_netpbm(bytes: &[u8], path: &Path) -> Result<RawImage> {
    decode(bytes).map_err(|reason| Error::MalformedImage {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn read_netpbm(path: &Path) -> Result<RawImage> {
    let bytes = std::fs::read(path)?;
    decode_netpbm(&bytes, path)
}

/// Binary PGM (P5) bytes of a single-channel image.
pub fn encode_pgm(img: &RawImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(bytes: &[u8]) -> Result<RawImage> {
        decode_netpbm(bytes, Path::new("test.pgm"))
    }

    #[test]
    fn ascii_pgm_with_comment() {
        let img = parse(b"P2\n# hello\n3 2\n255\n0 1 2\n3 4 255\n").unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (3, 2, 1));
        assert_eq!(img.samples(), &[0, 1, 2, 3, 4, 255]);
    }

    #[test]
    fn binary_ppm() {
        let mut b = b"P6 2 1 255\n".to_vec();
        b.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = parse(&b).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.samples(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn truncated_p5_is_malformed() {
        let mut b = b"P5\n4 4\n255\n".to_vec();
        b.extend_from_slice(&[0; 10]);
        assert!(matches!(parse(&b), Err(Error::MalformedImage { .. })));
    }

    #[test]
    fn sixteen_bit_maxval_is_malformed() {
        assert!(matches!(parse(b"P2 1 1 65535 7"), Err(Error::MalformedImage { .. })));
    }

    #[test]
    fn small_maxval_rescales() {
        let img = parse(b"P2 3 1 2 0 1 2").unwrap();
        assert_eq!(img.samples(), &[0, 128, 255]);
    }

    #[test]
    fn pgm_round_trip() {
        let img = RawImage::new(2, 2, 1, vec![9, 8, 7, 6]).unwrap();
        assert_eq!(parse(&encode_pgm(&img)).unwrap(), img);
    }
}
