//! IDX image ingestion and FFT feature extraction.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{fft2d, vec_norm, Rng, C64, ZERO};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Featurizer identifier stored with every dataset.
pub const FEATURIZER: &str = "fft2d-lowfreq-block-unitnorm/1";

static DIGITS_IMAGES: &[u8] = include_bytes!("../data/digits-images.idx3-ubyte");
static DIGITS_LABELS: &[u8] = include_bytes!("../data/digits-labels.idx1-ubyte");

/// Images scaled to [0, 1], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub images_sha256: String,
    pub labels_sha256: String,
}

impl RawImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> Vec<Vec<f64>> {
        self.pixels[i].chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "idx",
        reason: reason.into(),
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(format!("truncated header at byte {at}")))
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses IDX image (magic 0x803) and label (magic 0x801) payloads.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<RawImages> {
    if images.is_empty() || labels.is_empty() {
        return Err(format_err("empty file"));
    }
    let magic = be_u32(images, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(format!("bad image magic {magic:#010x}")));
    }
    let magic = be_u32(labels, 0)?;
    if magic != LABELS_MAGIC {
        return Err(format_err(format!("bad label magic {magic:#010x}")));
    }
    let count = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let label_count = be_u32(labels, 4)? as usize;
    if count != label_count {
        return Err(format_err(format!("{count} images but {label_count} labels")));
    }
    if rows == 0 || cols == 0 {
        return Err(format_err("zero image dimension"));
    }
    let size = rows * cols;
    let body = &images[16..];
    if body.len() < count * size {
        return Err(format_err(format!(
            "truncated image payload: {} bytes, expected {}",
            body.len(),
            count * size
        )));
    }
    let label_body = &labels[8..];
    if label_body.len() < count {
        return Err(format_err(format!(
            "truncated label payload: {} bytes, expected {count}",
            label_body.len()
        )));
    }
    let pixels = body[..count * size]
        .chunks(size)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect();
    Ok(RawImages {
        rows,
        cols,
        pixels,
        labels: label_body[..count].to_vec(),
        images_sha256: hex_digest(images),
        labels_sha256: hex_digest(labels),
    })
}

pub fn ingest_idx(images_path: &Path, labels_path: &Path) -> Result<RawImages> {
    parse_idx(&std::fs::read(images_path)?, &std::fs::read(labels_path)?)
}

/// The packaged 8x8 handwritten digits (1797 samples, 10 classes).
pub fn packaged_digits() -> RawImages {
    parse_idx(DIGITS_IMAGES, DIGITS_LABELS).expect("packaged digits are well formed")
}

/// Block shape `(r, c)` with `r·c = n`, `r` the largest divisor not above √n.
pub fn feature_block(n_features: usize) -> (usize, usize) {
    let r = (1..=n_features)
        .take_while(|r| r * r <= n_features)
        .filter(|r| n_features.is_multiple_of(*r))
        .last()
        .unwrap_or(1);
    (r, n_features / r)
}

/// Low-frequency FFT block of the zero-padded image, flattened row-major and
/// scaled to unit norm. Returns `(features, degenerate)`; a blank image gives
/// zeros and `degenerate = true`.
pub fn fft_features(image: &[Vec<f64>], n_features: usize) -> Result<(Vec<C64>, bool)> {
    if n_features == 0 {
        return Err(Error::invalid("n_features", "must be positive"));
    }
    let spectrum = fft2d(image)?;
    let (r, c) = feature_block(n_features);
    if r > spectrum.rows() || c > spectrum.cols() {
        return Err(Error::invalid(
            "n_features",
            format!(
                "{r}x{c} block exceeds the {}x{} spectrum",
                spectrum.rows(),
                spectrum.cols()
            ),
        ));
    }
    let mut f: Vec<C64> = (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|ij| spectrum[ij])
        .collect();
    let norm = vec_norm(&f);
    if norm == 0.0 {
        f.iter_mut().for_each(|z| *z = ZERO);
        return Ok((f, true));
    }
    f.iter_mut().for_each(|z| *z /= norm);
    Ok((f, false))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub images_sha256: String,
    pub labels_sha256: String,
    pub featurizer: String,
    pub n_features: usize,
    pub classes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDataset {
    pub features: Vec<Vec<C64>>,
    pub labels: Vec<usize>,
    pub degenerate: Vec<bool>,
    pub classes: usize,
    pub provenance: Provenance,
}

impl FeatureDataset {
    /// Featurizes every image whose label is below `classes`.
    pub fn from_images(raw: &RawImages, n_features: usize, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("classes", format!("need at least 2, got {classes}")));
        }
        let mut ds = Self {
            features: vec![],
            labels: vec![],
            degenerate: vec![],
            classes,
            provenance: Provenance {
                images_sha256: raw.images_sha256.clone(),
                labels_sha256: raw.labels_sha256.clone(),
                featurizer: FEATURIZER.into(),
                n_features,
                classes,
            },
        };
        for (i, &label) in raw.labels.iter().enumerate() {
            if (label as usize) < classes {
                let (f, degenerate) = fft_features(&raw.image(i), n_features)?;
                ds.features.push(f);
                ds.labels.push(label as usize);
                ds.degenerate.push(degenerate);
            }
        }
        if ds.is_empty() {
            return Err(Error::Empty("dataset after class filter"));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.provenance.n_features
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            degenerate: idx.iter().map(|&i| self.degenerate[i]).collect(),
            classes: self.classes,
            provenance: self.provenance.clone(),
        }
    }

    /// Seeded shuffle split into (train, test).
    pub fn split(&self, train_fraction: f64, rng: &mut Rng) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
            return Err(Error::invalid(
                "train_fraction",
                format!("must be in (0, 1), got {train_fraction}"),
            ));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        rng.shuffle(&mut idx);
        let cut = ((self.len() as f64) * train_fraction).round() as usize;
        let cut = cut.clamp(1, self.len() - 1);
        Ok((self.subset(&idx[..cut]), self.subset(&idx[cut..])))
    }

    /// First `n` samples.
    pub fn take(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(count: u32, rows: u32, cols: u32, labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let mut img = vec![];
        for v in [IMAGES_MAGIC, count, rows, cols] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend((0..count * rows * cols).map(|k| (k % 256) as u8));
        let mut lab = vec![];
        for v in [LABELS_MAGIC, labels.len() as u32] {
            lab.extend_from_slice(&v.to_be_bytes());
        }
        lab.extend_from_slice(labels);
        (img, lab)
    }

    #[test]
    fn one_image_fixture() {
        let (img, lab) = fixture(1, 3, 5, &[7]);
        let raw = parse_idx(&img, &lab).unwrap();
        assert_eq!((raw.rows, raw.cols, raw.len()), (3, 5, 1));
        assert_eq!(raw.labels, vec![7]);
        assert_eq!(raw.pixels[0][14], 14.0 / 255.0);
    }

    #[test]
    fn malformed_inputs() {
        let (img, lab) = fixture(2, 2, 2, &[1]);
        assert!(parse_idx(&img, &lab).is_err(), "count mismatch");
        let (img, lab) = fixture(2, 2, 2, &[1, 2]);
        assert!(parse_idx(&img[..img.len() - 1], &lab).is_err(), "truncated");
        assert!(parse_idx(&[], &lab).is_err(), "empty");
        assert!(parse_idx(&lab, &img).is_err(), "swapped magic");
    }

    #[test]
    fn packaged_digits_shape() {
        let d = packaged_digits();
        assert_eq!((d.rows, d.cols, d.len()), (8, 8, 1797));
        assert!(d.labels.iter().all(|&l| l < 10));
    }

    #[test]
    fn feature_blocks() {
        assert_eq!(feature_block(16), (4, 4));
        assert_eq!(feature_block(8), (2, 4));
        assert_eq!(feature_block(7), (1, 7));
    }

    #[test]
    fn blank_and_constant_images() {
        let (f, deg) = fft_features(&vec![vec![0.0; 8]; 8], 16).unwrap();
        assert!(deg && f.iter().all(|z| *z == ZERO));
        let (f, deg) = fft_features(&vec![vec![0.3; 8]; 8], 16).unwrap();
        assert!(!deg);
        assert!((f[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(f[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn features_unit_norm() {
        let d = FeatureDataset::from_images(&packaged_digits(), 8, 8).unwrap();
        assert!(d.labels.iter().all(|&l| l < 8));
        for (f, deg) in d.features.iter().zip(&d.degenerate) {
            assert!(*deg || (vec_norm(f) - 1.0).abs() < 1e-12);
        }
    }
}
