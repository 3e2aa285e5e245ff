//! Portable graymap (PGM) I/O for synthetic frames. Writes binary `P5` with
//! an 8-bit maxval; reads `P5` and ASCII `P2` with any maxval up to 65535.

use std::io::{Read, Write};

use super::SyntheticFrame;
use crate::error::{IspError, Result};

pub fn write_pgm<W: Write>(frame: &SyntheticFrame, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", frame.width(), frame.height())?;
    let bytes: Vec<u8> = frame
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(buf: &[u8]) -> Result<Header> {
    if buf.len() < 2 {
        return Err(IspError::Image("truncated PGM header".into()));
    }
    let magic = [buf[0], buf[1]];
    if &magic != b"P5" && &magic != b"P2" {
        return Err(IspError::Image("not a PGM file (expected P2 or P5)".into()));
    }
    let mut pos = 2;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && buf[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(IspError::Image("malformed PGM header".into()));
        }
        let s = std::str::from_utf8(&buf[start..pos]).expect("digits are utf8");
        fields.push(s.parse::<usize>().map_err(|e| IspError::Image(e.to_string()))?);
    }
    // exactly one whitespace byte separates the header from binary data
    pos += 1;
    let maxval = fields[2] as u32;
    if maxval == 0 || maxval > 65535 {
        return Err(IspError::Image(format!("unsupported maxval {maxval}")));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval,
        data_start: pos,
    })
}

pub fn read_pgm<R: Read>(mut input: R) -> Result<SyntheticFrame> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let h = parse_header(&buf)?;
    let n = h.width * h.height;
    let scale = f64::from(h.maxval);
    let data: Vec<f64> = if &h.magic == b"P5" {
        let body = buf.get(h.data_start..).unwrap_or(&[]);
        if h.maxval < 256 {
            if body.len() < n {
                return Err(IspError::Image("truncated PGM pixel data".into()));
            }
            body[..n].iter().map(|&b| f64::from(b) / scale).collect()
        } else {
            if body.len() < 2 * n {
                return Err(IspError::Image("truncated PGM pixel data".into()));
            }
            body.chunks_exact(2)
                .take(n)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / scale)
                .collect()
        }
    } else {
        let text = std::str::from_utf8(&buf[h.data_start.min(buf.len())..])
            .map_err(|e| IspError::Image(e.to_string()))?;
        let vals: std::result::Result<Vec<f64>, _> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<u32>().map(|v| f64::from(v) / scale))
            .collect();
        let vals = vals.map_err(|e| IspError::Image(e.to_string()))?;
        if vals.len() < n {
            return Err(IspError::Image("truncated PGM pixel data".into()));
        }
        vals
    };
    SyntheticFrame::from_data(h.width, h.height, data.into_iter().map(|v| v.min(1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::{detect_centroid_raw, render_disk};

    #[test]
    fn binary_round_trip_preserves_detection() {
        let mut f = SyntheticFrame::black(64, 48);
        render_disk(&mut f, 20.0, 30.0, 6.0, 1.0);
        let mut bytes = Vec::new();
        write_pgm(&f, &mut bytes).unwrap();
        assert!(bytes.starts_with(b"P5\n64 48\n255\n"));
        let g = read_pgm(bytes.as_slice()).unwrap();
        assert_eq!((g.width(), g.height()), (64, 48));
        let a = detect_centroid_raw(&f, 0.5).unwrap();
        let b = detect_centroid_raw(&g, 0.5).unwrap();
        assert!((a.col - b.col).abs() < 0.01 && (a.row - b.row).abs() < 0.01);
    }

    #[test]
    fn ascii_with_comments() {
        let text = b"P2\n# a comment\n3 2\n# another\n10\n0 5 10\n10 0 0\n";
        let f = read_pgm(&text[..]).unwrap();
        assert_eq!(f.data(), &[0.0, 0.5, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(read_pgm(&b"P6\n1 1\n255\n\0\0\0"[..]).is_err());
        assert!(read_pgm(&b"P5\n4 4\n255\n\0"[..]).is_err());
    }
}
