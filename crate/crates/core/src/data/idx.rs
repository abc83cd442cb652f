//! IDX binary format (the MNIST / Fashion-MNIST distribution format).
//!
//! Images: big-endian magic `0x00000803`, u32 count, u32 rows, u32 cols, then
//! `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`, u32
//! count, then `count` unsigned bytes.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Data(format!("{what}: truncated header")))
}

/// Parses an IDX image file; returns (count, pixels per image, pixels scaled to [0, 1]).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let magic = read_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "images: bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "images")? as usize;
    let rows = read_u32(bytes, 8, "images")? as usize;
    let cols = read_u32(bytes, 12, "images")? as usize;
    let pixels = rows * cols;
    let body = &bytes[16..];
    let need = count * pixels;
    if body.len() < need {
        return Err(Error::Data(format!(
            "images: truncated body, {} of {need} bytes",
            body.len()
        )));
    }
    let data = body[..need].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((count, pixels, data))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = read_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Data(format!(
            "labels: bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Data(format!(
            "labels: truncated body, {} of {count} bytes",
            body.len()
        )));
    }
    Ok(body[..count].iter().map(|&b| usize::from(b)).collect())
}

/// Loads an image/label IDX pair. The class count is `max(label) + 1`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let read = |p: &Path| {
        std::fs::read(p).map_err(|e| Error::Data(format!("cannot read {}: {e}", p.display())))
    };
    let img = read(images_path)?;
    let lab = read(labels_path)?;
    let (count, pixels, features) = parse_idx_images(&img)?;
    let labels = parse_idx_labels(&lab)?;
    if labels.len() != count {
        return Err(Error::Data(format!(
            "count mismatch: {count} images in {} but {} labels in {}",
            images_path.display(),
            labels.len(),
            labels_path.display()
        )));
    }
    let classes = labels.iter().copied().max().map_or(1, |m| m + 1);
    Dataset::new(features, pixels, labels, classes)
}
