//! IDX (MNIST-family) binary reader.
//!
//! Layout: 4-byte big-endian magic, one big-endian `u32` per dimension, then
//! unsigned bytes. Images use magic `0x00000803` (3 dims), labels `0x00000801`.

use std::fs;
use std::path::Path;

use super::{Dataset, Provenance};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(path, "truncated header"))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Returns `(count, rows, cols, pixels)`.
fn parse_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let bytes = read_file(path)?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic number {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        ));
    }
    let count = read_u32(&bytes, 4, path)? as usize;
    let rows = read_u32(&bytes, 8, path)? as usize;
    let cols = read_u32(&bytes, 12, path)? as usize;
    let expected = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < expected {
        return Err(Error::format(
            path,
            format!(
                "truncated file: header declares {count} images of {rows}x{cols} ({expected} bytes) but only {} bytes follow",
                body.len()
            ),
        ));
    }
    Ok((count, rows, cols, body[..expected].to_vec()))
}

fn parse_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic number {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let count = read_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::format(
            path,
            format!(
                "truncated file: header declares {count} labels but only {} bytes follow",
                body.len()
            ),
        ));
    }
    Ok(body[..count].to_vec())
}

/// Loads an image/label IDX pair. Pixels are scaled to `[0, 1]`; the label
/// count is inferred as `max label + 1`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let (count, rows, cols, pixels) = parse_images(images_path)?;
    let labels = parse_labels(labels_path)?;
    if labels.len() != count {
        return Err(Error::format(
            labels_path,
            format!(
                "count mismatch: {} labels for {count} images in {}",
                labels.len(),
                images_path.display()
            ),
        ));
    }
    let dim = rows * cols;
    if dim == 0 {
        return Err(Error::format(images_path, "images have zero pixels"));
    }
    let num_labels = (labels.iter().copied().max().unwrap_or(0) as usize + 1).max(2);
    let features = pixels.into_iter().map(|p| p as f64 / 255.0).collect();
    let labels = labels.into_iter().map(usize::from).collect();
    Dataset::new(features, labels, dim, num_labels, Provenance::IdxFile)
}
