//! Minimal PGM image I/O for inspecting imaging results.
//!
//! Values are kept in [0,1] inside the toolkit and quantized to 8 bits on
//! write. Both the ASCII (P2) and binary (P5) encodings are supported.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use osga::{Element, Shape};

use crate::error::{BenchError, Result};

/// Writes a matrix element as an 8-bit PGM file, clamping values to [0,1].
pub fn write_pgm(path: &Path, image: &Element, binary: bool) -> Result<()> {
    let Shape::Matrix { rows, cols } = image.shape() else {
        return Err(BenchError::config("pgm output needs a matrix element"));
    };
    let quantized: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let io_err = |source| BenchError::io(path.display().to_string(), source);

    let mut out = Vec::new();
    if binary {
        write!(out, "P5\n{cols} {rows}\n255\n").expect("vec write");
        out.extend_from_slice(&quantized);
    } else {
        write!(out, "P2\n{cols} {rows}\n255\n").expect("vec write");
        for row in quantized.chunks(cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).expect("vec write");
        }
    }
    fs::write(path, out).map_err(io_err)
}

/// Reads a P2 or P5 PGM file back into a matrix element scaled to [0,1].
pub fn read_pgm(path: &Path) -> Result<Element> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path.display().to_string(), e))?;
    let bad = |msg: &str| BenchError::config(format!("{}: {msg}", path.display()));

    let magic = bytes.get(..2).ok_or_else(|| bad("truncated header"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(bad("not a P2 or P5 pgm file")),
    };

    // Header tokens (width, height, maxval) with # comments skipped. `pos`
    // ends one byte past the single whitespace that terminates the maxval.
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in &mut header {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed header"));
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .expect("digits are utf8")
            .parse()
            .map_err(|_| bad("header value out of range"))?;
    }
    let [cols, rows, maxval] = header;
    if rows == 0 || cols == 0 {
        return Err(bad("empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("unsupported maxval"));
    }
    let scale = maxval as f64;

    let data: Vec<f64> = if binary {
        pos += 1;
        let raster = bytes.get(pos..pos + rows * cols).ok_or_else(|| bad("truncated raster"))?;
        raster.iter().map(|b| *b as f64 / scale).collect()
    } else {
        let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| bad("non-ascii raster"))?;
        let values: Vec<f64> = text
            .split_ascii_whitespace()
            .map(|t| t.parse::<u32>().map(|v| v as f64 / scale))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("malformed raster value"))?;
        if values.len() < rows * cols {
            return Err(bad("truncated raster"));
        }
        values[..rows * cols].to_vec()
    };
    Ok(Element::from_matrix(rows, cols, data))
}
