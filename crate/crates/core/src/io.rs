//! File formats: PGM/PNG images in, PGM/PNG renders out, and raw `.f32`
//! rasters with a JSON sidecar.
//!
//! A `.f32` raster is `rows * cols` little-endian IEEE-754 single-precision
//! values in row-major order with no header. The sidecar sits next to it
//! with the extension replaced by `.json` and records the dimensions.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::kspace::{normalize_image, Image};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads an 8/16-bit PGM or a PNG and normalizes it to `[0, 1]`. Color PNGs
/// are reduced to luma first.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let raw = if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(&bytes).map_err(|reason| Error::CorruptFile {
            path: path.to_owned(),
            reason,
        })?
    } else if bytes.starts_with(PNG_MAGIC) {
        decode_png(&bytes).map_err(|reason| Error::CorruptFile {
            path: path.to_owned(),
            reason,
        })?
    } else {
        return Err(Error::UnsupportedFormat {
            path: path.to_owned(),
            reason: "expected a PGM (P2/P5) or PNG file".into(),
        });
    };
    let (rows, cols) = raw.dim();
    GridDims::new(rows, cols).map_err(|e| Error::CorruptFile {
        path: path.to_owned(),
        reason: e.to_string(),
    })?;
    Ok(normalize_image(&Image::new(raw)?))
}

fn decode_png(bytes: &[u8]) -> std::result::Result<Array2<f64>, String> {
    let img =
        image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(f64::from).collect(),
        other => other
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect(),
    };
    Array2::from_shape_vec((h, w), values).map_err(|e| e.to_string())
}

/// Splits a PNM header into whitespace tokens, skipping `#` comments, and
/// returns them with the offset just past the single whitespace byte that
/// ends the header.
fn pnm_header(bytes: &[u8], count: usize) -> std::result::Result<(Vec<String>, usize), String> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err("truncated header".into());
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<Array2<f64>, String> {
    let (tok, data_start) = pnm_header(bytes, 4)?;
    let parse = |s: &str, what| s.parse::<usize>().map_err(|_| format!("bad {what} `{s}`"));
    let cols = parse(&tok[1], "width")?;
    let rows = parse(&tok[2], "height")?;
    let maxval = parse(&tok[3], "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    let count = rows * cols;
    let values: Vec<f64> = if tok[0] == "P5" {
        let data = bytes.get(data_start.min(bytes.len())..).unwrap_or_default();
        if maxval < 256 {
            if data.len() < count {
                return Err(format!(
                    "expected {count} bytes of pixel data, found {}",
                    data.len()
                ));
            }
            data[..count].iter().map(|&b| f64::from(b)).collect()
        } else {
            if data.len() < 2 * count {
                return Err(format!(
                    "expected {} bytes of pixel data, found {}",
                    2 * count,
                    data.len()
                ));
            }
            data[..2 * count]
                .chunks_exact(2)
                .map(|p| f64::from(u16::from_be_bytes([p[0], p[1]])))
                .collect()
        }
    } else {
        let text =
            String::from_utf8_lossy(bytes.get(data_start.min(bytes.len())..).unwrap_or_default());
        let vals: std::result::Result<Vec<f64>, String> = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| {
                t.parse::<u32>()
                    .map(f64::from)
                    .map_err(|_| format!("bad sample `{t}`"))
            })
            .collect();
        let vals = vals?;
        if vals.len() < count {
            return Err(format!("expected {count} samples, found {}", vals.len()));
        }
        vals
    };
    if values.iter().any(|&v| v > maxval as f64) {
        return Err("sample exceeds maxval".into());
    }
    Array2::from_shape_vec((rows, cols), values).map_err(|e| e.to_string())
}

fn check_overwrite(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(Error::WouldOverwrite(path.to_owned()));
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    check_overwrite(path, force)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Binary 8-bit PGM (`P5`, maxval 255).
pub fn encode_pgm(raster: &Array2<u8>) -> Vec<u8> {
    let (rows, cols) = raster.dim();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(raster.iter());
    out
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples).
pub fn encode_pgm16(raster: &Array2<u16>) -> Vec<u8> {
    let (rows, cols) = raster.dim();
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    for v in raster.iter() {
        out.extend(v.to_be_bytes());
    }
    out
}

/// Writes an 8-bit raster as PGM, or PNG when the extension is `.png`.
pub fn save_raster(raster: &Array2<u8>, path: impl AsRef<Path>, force: bool) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        let (rows, cols) = raster.dim();
        let buf =
            image::GrayImage::from_raw(cols as u32, rows as u32, raster.iter().copied().collect())
                .expect("buffer length matches dims");
        let mut bytes = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut bytes, ImageFormat::Png)
            .map_err(|e| Error::Io {
                path: path.to_owned(),
                source: std::io::Error::other(e),
            })?;
        write_file(path, bytes.get_ref(), force)
    } else {
        write_file(path, &encode_pgm(raster), force)
    }
}

/// Metadata written beside every `.f32` raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub dims: GridDims,
    pub dtype: String,
    pub layout: String,
    /// What the raster holds, e.g. `reconstruction` or `bootstrap`.
    pub kind: String,
    /// Seeds, parameters and estimator settings that produced the raster.
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl MapSidecar {
    pub fn new(dims: GridDims, kind: impl Into<String>, provenance: serde_json::Value) -> Self {
        Self {
            dims,
            dtype: "f32-le".into(),
            layout: "row-major".into(),
            kind: kind.into(),
            provenance,
        }
    }
}

pub fn sidecar_path(raster: &Path) -> PathBuf {
    raster.with_extension("json")
}

/// Writes `values` as an `.f32` raster plus sidecar. Existing files are
/// only replaced when `force` is set.
pub fn save_map(
    values: &Array2<f64>,
    path: impl AsRef<Path>,
    sidecar: &MapSidecar,
    force: bool,
) -> Result<()> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    check_overwrite(path, force)?;
    check_overwrite(&side, force)?;
    let mut bytes = Vec::with_capacity(4 * values.len());
    for &v in values.iter() {
        bytes.extend((v as f32).to_le_bytes());
    }
    write_file(path, &bytes, force)?;
    let json = serde_json::to_vec_pretty(sidecar).expect("sidecar serializes");
    write_file(&side, &json, force)
}

/// Reads an `.f32` raster using the dimensions recorded in its sidecar.
pub fn load_map(path: impl AsRef<Path>) -> Result<(Array2<f32>, MapSidecar)> {
    let path = path.as_ref();
    let side_path = sidecar_path(path);
    let sidecar: MapSidecar =
        serde_json::from_slice(&read_bytes(&side_path)?).map_err(|e| Error::CorruptFile {
            path: side_path.clone(),
            reason: e.to_string(),
        })?;
    let bytes = read_bytes(path)?;
    let expected = 4 * sidecar.dims.len();
    if bytes.len() != expected {
        return Err(Error::CorruptFile {
            path: path.to_owned(),
            reason: format!(
                "expected {expected} bytes for {}, found {}",
                sidecar.dims,
                bytes.len()
            ),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let arr = Array2::from_shape_vec(sidecar.dims.shape(), values).expect("length checked");
    Ok((arr, sidecar))
}
