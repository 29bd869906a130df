use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lifting::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    /// `P5`.
    #[default]
    Binary,
    /// `P2`.
    Ascii,
}

fn bad(reason: impl Into<String>) -> Error {
    Error::format("pgm", reason)
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    binary: bool,
    /// Byte offset of the raster.
    offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let magic = bytes.get(..2).ok_or_else(|| bad("empty file"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(bad("expected P5 or P2 magic")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header number"))?;
    }
    // Exactly one whitespace byte separates the header from a binary raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after header"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad(format!("invalid dimensions {width}×{height} or maxval {maxval}")));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval,
        binary,
        offset: pos + 1,
    })
}

/// Parse a PGM (`P5` or `P2`, 8- or 16-bit); values are scaled to `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let raster = &bytes[h.offset.min(bytes.len())..];
    let raw: Vec<u32> = if h.binary {
        let wide = h.maxval > 255;
        let need = if wide { 2 * n } else { n };
        if raster.len() < need {
            return Err(bad(format!("expected {need} raster bytes, found {}", raster.len())));
        }
        if wide {
            raster[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32).collect()
        } else {
            raster[..n].iter().map(|&b| b as u32).collect()
        }
    } else {
        let text = std::str::from_utf8(raster).map_err(|_| bad("non-ASCII raster"))?;
        let vals: Vec<u32> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_ascii_whitespace)
            .map(|t| t.parse().map_err(|_| bad(format!("bad sample {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() < n {
            return Err(bad(format!("expected {n} samples, found {}", vals.len())));
        }
        vals[..n].to_vec()
    };
    if let Some(v) = raw.iter().find(|v| **v > h.maxval) {
        return Err(bad(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    let scale = 1.0 / h.maxval as f64;
    Image::new(h.width, h.height, raw.into_iter().map(|v| v as f64 * scale).collect())
}

/// Encode as 16-bit PGM, scaling so the image maximum maps to 65535.
/// Negative values are clamped to 0.
pub fn encode_pgm(img: &Image, encoding: PgmEncoding) -> Vec<u8> {
    let max = img.max();
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    let samples: Vec<u16> = img
        .pixels()
        .iter()
        .map(|v| (v.max(0.0) * scale).round().min(65535.0) as u16)
        .collect();
    let (w, h) = (img.width(), img.height());
    match encoding {
        PgmEncoding::Binary => {
            let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
            for s in samples {
                out.extend_from_slice(&s.to_be_bytes());
            }
            out
        }
        PgmEncoding::Ascii => {
            let mut out = format!("P2\n{w} {h}\n65535\n");
            for row in samples.chunks(w) {
                let line: Vec<String> = row.iter().map(u16::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image, encoding: PgmEncoding) -> Result<()> {
    fs::write(path, encode_pgm(img, encoding))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_8bit_binary_with_comments() {
        let mut bytes = b"P5\n# a comment\n3 2\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 51, 255, 102, 0, 204]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixels(), &[0.0, 0.2, 1.0, 0.4, 0.0, 0.8]);
    }

    #[test]
    fn reads_16bit_and_ascii() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x00, 0x00]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[1.0, 0.0]);
        let img = decode_pgm(b"P2\n2 2\n4\n0 1\n2 4\n").unwrap();
        assert_eq!(img.pixels(), &[0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn roundtrip_both_encodings() {
        let img = Image::from_fn(5, 3, |c, r| (c + 2 * r) as f64 / 13.0);
        for enc in [PgmEncoding::Binary, PgmEncoding::Ascii] {
            let back = decode_pgm(&encode_pgm(&img, enc)).unwrap();
            let scale = img.max();
            for (a, b) in img.pixels().iter().zip(back.pixels()) {
                assert!((a / scale - b).abs() < 1.0 / 65535.0);
            }
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_pgm(b"P6\n1 1\n255\n\0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\0").is_err());
        assert!(decode_pgm(b"P2\n1 1\n3\n9\n").is_err());
    }
}
