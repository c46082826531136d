//! Reader for the IDX image/label container format (the MNIST family).
//!
//! Only the two record types the benchmarks need are supported: unsigned
//! byte images with three dimensions (magic `0x00000803`) and unsigned byte
//! labels with one dimension (magic `0x00000801`). All header integers are
//! big-endian. Pixels are scaled to `[0, 1]`.

use std::path::Path;

use crate::error::{BilevelError, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// A loaded image/label pair: `n` flattened rows of `rows * cols` floats.
#[derive(Clone, Debug)]
pub struct IdxData {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
}

impl IdxData {
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> BilevelError {
    BilevelError::DataFormat {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(format_err(path, "truncated header"));
    }
    let mut raw = [0u8; 4];
    raw.copy_from_slice(&bytes[offset..end]);
    Ok(u32::from_be_bytes(raw))
}

/// Loads an images file and its companion labels file.
///
/// Fails on a wrong magic number, a truncated or oversized payload, or a
/// record-count mismatch between the two files.
pub fn load_idx<P: AsRef<Path>, Q: AsRef<Path>>(images_path: P, labels_path: Q) -> Result<IdxData> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();

    let image_bytes = std::fs::read(images_path)?;
    let magic = read_u32(&image_bytes, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(
            images_path,
            format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let n = read_u32(&image_bytes, 4, images_path)? as usize;
    let rows = read_u32(&image_bytes, 8, images_path)? as usize;
    let cols = read_u32(&image_bytes, 12, images_path)? as usize;
    let pixels = &image_bytes[16..];
    if pixels.len() != n * rows * cols {
        return Err(format_err(
            images_path,
            format!(
                "payload holds {} bytes, header promises {} ({n} x {rows} x {cols})",
                pixels.len(),
                n * rows * cols
            ),
        ));
    }

    let label_bytes = std::fs::read(labels_path)?;
    let magic = read_u32(&label_bytes, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(format_err(
            labels_path,
            format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let n_labels = read_u32(&label_bytes, 4, labels_path)? as usize;
    let raw_labels = &label_bytes[8..];
    if raw_labels.len() != n_labels {
        return Err(format_err(
            labels_path,
            format!(
                "payload holds {} labels, header promises {n_labels}",
                raw_labels.len()
            ),
        ));
    }
    if n_labels != n {
        return Err(format_err(
            labels_path,
            format!("{n_labels} labels for {n} images"),
        ));
    }

    Ok(IdxData {
        features: pixels.iter().map(|&b| b as f64 / 255.0).collect(),
        labels: raw_labels.iter().map(|&b| b as usize).collect(),
        n,
        rows,
        cols,
    })
}
