//! Grayscale portable graymap (P2/P5) and plain CSV matrix I/O.
//!
//! PGM pixels are maxval-normalized to `[0,1]` on read and rescaled to
//! the source bit depth on write; CSV matrices pass through unscaled.

use anyhow::{bail, Context, Result};
use std::fs;
use std::io::Write;
use std::path::Path;
use tv2d::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    PgmAscii,
    PgmBinary,
    Csv,
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixMeta {
    pub format: MatrixFormat,
    /// PGM maxval; 1.0-scale for CSV.
    pub maxval: u16,
}

/// Reads a PGM (by magic number) or CSV (anything else) matrix.
pub fn read_matrix(path: &Path) -> Result<(Image, MatrixMeta)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        read_pgm(&bytes).with_context(|| format!("parsing PGM {}", path.display()))
    } else {
        let text = String::from_utf8(bytes)
            .with_context(|| format!("{} is neither PGM nor UTF-8 CSV", path.display()))?;
        let img = read_csv(&text).with_context(|| format!("parsing CSV {}", path.display()))?;
        Ok((
            img,
            MatrixMeta {
                format: MatrixFormat::Csv,
                maxval: 1,
            },
        ))
    }
}

pub fn write_matrix(path: &Path, img: &Image, meta: MatrixMeta) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    match meta.format {
        MatrixFormat::Csv => write_csv(&mut out, img)?,
        MatrixFormat::PgmAscii => write_pgm_ascii(&mut out, img, meta.maxval)?,
        MatrixFormat::PgmBinary => write_pgm_binary(&mut out, img, meta.maxval)?,
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            bail!("unexpected end of header");
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        let s = std::str::from_utf8(tok).context("non-ascii header token")?;
        s.parse().with_context(|| format!("bad header number '{s}'"))
    }
}

fn read_pgm(bytes: &[u8]) -> Result<(Image, MatrixMeta)> {
    let binary = bytes.starts_with(b"P5");
    let mut scan = HeaderScanner { bytes, pos: 2 };
    let width = scan.number()?;
    let height = scan.number()?;
    let maxval = scan.number()?;
    if width == 0 || height == 0 {
        bail!("degenerate dimensions {width}x{height}");
    }
    if maxval == 0 || maxval > 65535 {
        bail!("maxval {maxval} outside [1, 65535]");
    }
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(width * height);
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        let raster = &bytes[scan.pos + 1..];
        let wide = maxval > 255;
        let sample_len = if wide { 2 } else { 1 };
        if raster.len() < width * height * sample_len {
            bail!(
                "raster truncated: need {} bytes, have {}",
                width * height * sample_len,
                raster.len()
            );
        }
        for i in 0..width * height {
            let v = if wide {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64
            } else {
                raster[i] as f64
            };
            data.push(v * scale);
        }
    } else {
        for _ in 0..width * height {
            let v = scan.number()?;
            if v > maxval {
                bail!("sample {v} exceeds maxval {maxval}");
            }
            data.push(v as f64 * scale);
        }
    }
    let img = Image::new(height, width, data).context("building image")?;
    Ok((
        img,
        MatrixMeta {
            format: if binary {
                MatrixFormat::PgmBinary
            } else {
                MatrixFormat::PgmAscii
            },
            maxval: maxval as u16,
        },
    ))
}

fn quantize(v: f64, maxval: u16) -> u16 {
    (v * maxval as f64).round().clamp(0.0, maxval as f64) as u16
}

fn write_pgm_ascii<W: Write>(mut out: W, img: &Image, maxval: u16) -> Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", img.cols(), img.rows())?;
    writeln!(out, "{maxval}")?;
    for j in 1..=img.rows() {
        // Keep lines comfortably short for wide images.
        for chunk in (1..=img.cols()).collect::<Vec<_>>().chunks(12) {
            let line: Vec<String> = chunk
                .iter()
                .map(|&k| quantize(img.at(j, k), maxval).to_string())
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

fn write_pgm_binary<W: Write>(mut out: W, img: &Image, maxval: u16) -> Result<()> {
    write!(out, "P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval)?;
    let wide = maxval > 255;
    for j in 1..=img.rows() {
        for k in 1..=img.cols() {
            let q = quantize(img.at(j, k), maxval);
            if wide {
                out.write_all(&q.to_be_bytes())?;
            } else {
                out.write_all(&[q as u8])?;
            }
        }
    }
    Ok(())
}

fn read_csv(text: &str) -> Result<Image> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("line {}: bad cell '{}'", lineno + 1, cell.trim()))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "line {}: {} cells, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                );
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("empty matrix");
    }
    let (n1, n2) = (rows.len(), rows[0].len());
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Image::new(n1, n2, data)?)
}

fn write_csv<W: Write>(mut out: W, img: &Image) -> Result<()> {
    for j in 1..=img.rows() {
        let line: Vec<String> = (1..=img.cols()).map(|k| img.at(j, k).to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
