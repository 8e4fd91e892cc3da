//! Binary PGM (P5) reading and writing, 8- and 16-bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

fn skip_space_and_comments(buf: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn header_number(buf: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    *pos = skip_space_and_comments(buf, *pos);
    let start = *pos;
    while *pos < buf.len() && buf[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&buf[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad PGM {what}")))
}

pub fn decode(buf: &[u8]) -> Result<GrayImage> {
    if buf.len() < 2 || &buf[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (missing P5 magic)".into()));
    }
    let mut pos = 2;
    let width = header_number(buf, &mut pos, "width")?;
    let height = header_number(buf, &mut pos, "height")?;
    let maxval = header_number(buf, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    if pos >= buf.len() || !buf[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing whitespace after maxval".into()));
    }
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("image too large".into()))?;
    let raster = &buf[pos..];
    let data: Vec<u16> = if maxval < 256 {
        if raster.len() < n {
            return Err(Error::Format(format!("raster has {} of {n} bytes", raster.len())));
        }
        raster[..n].iter().map(|&b| b as u16).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(Error::Format(format!("raster has {} of {} bytes", raster.len(), 2 * n)));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect()
    };
    GrayImage::new(width, height, maxval as u16, data)
}

pub fn encode(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.values().len() * 2 + 32);
    write!(out, "P5\n{} {}\n{}\n", img.width(), img.height(), img.maxval()).expect("vec write");
    if img.maxval() < 256 {
        out.extend(img.values().iter().map(|&v| v as u8));
    } else {
        for &v in img.values() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    fs::write(path, encode(img))?;
    Ok(())
}
