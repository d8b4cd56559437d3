//! Grayscale PFM (`Pf`) images. Invalid pixels are stored as NaN.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ScalarImage;

pub fn write_pfm_to<W: Write>(img: &ScalarImage, mut w: W) -> std::io::Result<()> {
    write!(w, "Pf\n{} {}\n-1.0\n", img.width(), img.height())?;
    for y in (0..img.height()).rev() {
        for x in 0..img.width() {
            let v = img.get(x, y).map_or(f32::NAN, |v| v as f32);
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_pfm(img: &ScalarImage, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pfm_to(img, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

/// Splits the three header lines off `bytes`; the header ends at the single
/// whitespace byte following the scale token.
fn header(bytes: &[u8]) -> Result<([String; 4], usize)> {
    let mut toks: Vec<String> = Vec::with_capacity(4);
    let mut i = 0;
    while toks.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i || i >= bytes.len() {
            return Err(Error::Format("truncated PFM header".into()));
        }
        toks.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    let toks: [String; 4] = toks.try_into().expect("four tokens");
    Ok((toks, i + 1))
}

pub fn read_pfm_from(bytes: &[u8]) -> Result<ScalarImage> {
    if bytes.len() < 2 || &bytes[..2] != b"Pf" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::Format(format!(
            "unsupported PFM magic {magic:?}; only grayscale \"Pf\" is read"
        )));
    }
    let ([magic, w, h, scale], start) = header(bytes)?;
    if magic != "Pf" {
        return Err(Error::Format(format!("bad PFM magic {magic:?}")));
    }
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PFM dimension {s:?}")))
    };
    let (w, h) = (dim(&w)?, dim(&h)?);
    let scale: f64 = scale
        .parse()
        .map_err(|_| Error::Format(format!("bad PFM scale {scale:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Format(format!("bad PFM scale {scale}")));
    }
    let little = scale < 0.0;
    let body = &bytes[start..];
    let n = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("PFM dimensions overflow".into()))?;
    if body.len() != n {
        return Err(Error::Format(format!(
            "PFM payload is {} bytes, expected {n}",
            body.len()
        )));
    }
    let mut values = vec![0.0; w * h];
    for (k, chunk) in body.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().expect("4-byte chunk");
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, x) = (k / w.max(1), k % w.max(1));
        values[(h - 1 - row) * w + x] = v as f64;
    }
    ScalarImage::from_values(w, h, values)
}

pub fn read_pfm(path: &Path) -> Result<ScalarImage> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    read_pfm_from(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(img: &ScalarImage) -> ScalarImage {
        let mut buf = Vec::new();
        write_pfm_to(img, &mut buf).unwrap();
        read_pfm_from(&buf).unwrap()
    }

    #[test]
    fn two_by_two() {
        let img = ScalarImage::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_pfm_to(&img, &mut buf).unwrap();
        assert!(buf.starts_with(b"Pf\n2 2\n-1.0\n"));
        // bottom row first
        assert_eq!(&buf[12..16], &3.0f32.to_le_bytes());
        let back = read_pfm_from(&buf).unwrap();
        assert_eq!(back.values(), img.values());
        assert_eq!((back.width(), back.height()), (2, 2));
    }

    #[test]
    fn color_and_truncated_rejected() {
        assert!(matches!(read_pfm_from(b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(read_pfm_from(b"Pf\n2 2\n-1.0\n\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(read_pfm_from(b"Pf\n2"), Err(Error::Format(_))));
    }

    #[test]
    fn nan_is_invalid() {
        let mut img = ScalarImage::filled(3, 2, 0.5);
        img.invalidate(1, 1);
        let back = roundtrip(&img);
        assert!(!back.is_valid(1, 1));
        assert_eq!(back.valid_count(), 5);
    }

    #[test]
    fn big_endian_read() {
        let mut buf = b"Pf\n1 1\n1.0\n".to_vec();
        buf.extend_from_slice(&2.5f32.to_be_bytes());
        assert_eq!(read_pfm_from(&buf).unwrap().get(0, 0), Some(2.5));
    }

    proptest! {
        #[test]
        fn bit_exact_for_f32(w in 1usize..8, h in 1usize..8, seed in proptest::collection::vec(any::<f32>(), 64)) {
            let values: Vec<f64> = (0..w * h).map(|i| seed[i] as f64).collect();
            let img = ScalarImage::from_values(w, h, values).unwrap();
            let back = roundtrip(&img);
            prop_assert_eq!(back.mask(), img.mask());
            for i in 0..img.len() {
                prop_assert_eq!(back.get_index(i).map(f64::to_bits), img.get_index(i).map(f64::to_bits));
            }
        }
    }
}
