//! MNIST IDX ingestion: big-endian IDX image/label pairs, optionally
//! gzip-wrapped, normalized to `[0,1]` grayscale rasters.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder};
use flate2::read::GzDecoder;

use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

pub const IMAGE_ROWS: usize = 28;
pub const IMAGE_COLS: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_ROWS * IMAGE_COLS;
pub const NUM_CLASSES: usize = 10;

/// One 28x28 grayscale image with its digit label. Pixels are original
/// bytes divided by 255.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub pixels: Vec<f64>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn file_stem(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" | "t10k" => Ok(Split::Test),
            other => Err(Error::Argument(format!("unknown split '{other}'"))),
        }
    }
}

/// An ordered list of images from one split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<RawImage>,
    pub split: Split,
}

/// Borrowed view of one training example, shared by the trainer and the
/// evaluation harness.
#[derive(Debug, Clone, Copy)]
pub struct LabeledImage<'a> {
    pub pixels: &'a [f64],
    pub label: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn as_examples(&self) -> Vec<LabeledImage<'_>> {
        self.images
            .iter()
            .map(|img| LabeledImage {
                pixels: &img.pixels,
                label: img.label as usize,
            })
            .collect()
    }
}

/// Reads a file fully, transparently gunzipping when the 0x1f8b prefix is
/// present.
fn read_maybe_gzipped(path: &Path) -> Result<Vec<u8>> {
    let mut file = File::open(path)?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut decoder = GzDecoder::new(&raw[..]);
        let mut out = Vec::new();
        decoder.read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn parse_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    if bytes.len() < 16 {
        return Err(Error::IdxTruncated {
            expected: 16,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != IMAGE_MAGIC {
        return Err(Error::IdxMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    let rows = BigEndian::read_u32(&bytes[8..12]) as usize;
    let cols = BigEndian::read_u32(&bytes[12..16]) as usize;
    if rows != IMAGE_ROWS || cols != IMAGE_COLS {
        return Err(Error::IdxImageSize { rows, cols });
    }
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(Error::IdxTruncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[16..expected]
        .chunks_exact(rows * cols)
        .map(|chunk| chunk.iter().map(|&b| b as f64 / 255.0).collect())
        .collect())
}

fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.len() < 8 {
        return Err(Error::IdxTruncated {
            expected: 8,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != LABEL_MAGIC {
        return Err(Error::IdxMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::IdxTruncated {
            expected,
            found: bytes.len(),
        });
    }
    let labels = bytes[8..expected].to_vec();
    for &label in &labels {
        if label as usize >= NUM_CLASSES {
            return Err(Error::LabelRange(label));
        }
    }
    Ok(labels)
}

/// Loads an IDX image/label pair into a dataset. Image `i` is paired with
/// label `i`; a count mismatch between the two files is an error.
pub fn load_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<Dataset> {
    let images = parse_images(&read_maybe_gzipped(images_path)?)?;
    let labels = parse_labels(&read_maybe_gzipped(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::IdxPairing {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(Dataset {
        images: images
            .into_iter()
            .zip(labels)
            .map(|(pixels, label)| RawImage { pixels, label })
            .collect(),
        split,
    })
}

/// Resolves the standard MNIST file names (plain or `.gz`) inside `dir` and
/// loads the requested split.
pub fn load_dir(dir: &Path, split: Split) -> Result<Dataset> {
    let stem = split.file_stem();
    let images = resolve(dir, &format!("{stem}-images-idx3-ubyte"))?;
    let labels = resolve(dir, &format!("{stem}-labels-idx1-ubyte"))?;
    load_idx(&images, &labels, split)
}

fn resolve(dir: &Path, name: &str) -> Result<PathBuf> {
    for candidate in [dir.join(name), dir.join(format!("{name}.gz"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{name}[.gz] not found in {}", dir.display()),
    )))
}

/// Serializes a dataset back to IDX bytes (images, labels). Pixels are
/// mapped back to bytes by rounding `p * 255`.
pub fn to_idx_bytes(dataset: &Dataset) -> (Vec<u8>, Vec<u8>) {
    let count = dataset.images.len() as u32;
    let mut images = Vec::with_capacity(16 + dataset.images.len() * IMAGE_PIXELS);
    images.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    images.extend_from_slice(&count.to_be_bytes());
    images.extend_from_slice(&(IMAGE_ROWS as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_COLS as u32).to_be_bytes());
    let mut labels = Vec::with_capacity(8 + dataset.images.len());
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&count.to_be_bytes());
    for img in &dataset.images {
        images.extend(img.pixels.iter().map(|p| (p * 255.0).round() as u8));
        labels.push(img.label);
    }
    (images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_temp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    fn image_bytes(count: u32, payload: &[u8]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&count.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(payload);
        bytes
    }

    fn label_bytes(labels: &[u8]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        bytes.extend_from_slice(labels);
        bytes
    }

    #[test]
    fn hand_built_two_image_pair_round_trips() {
        let images = write_temp(&image_bytes(2, &vec![0u8; 2 * 784]));
        let labels = write_temp(&label_bytes(&[3, 7]));
        let ds = load_idx(images.path(), labels.path(), Split::Test).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.images[0].pixels.iter().all(|&p| p == 0.0));
        assert_eq!(ds.images[0].label, 3);
        assert_eq!(ds.images[1].label, 7);

        let (img_bytes, lbl_bytes) = to_idx_bytes(&ds);
        let images2 = write_temp(&img_bytes);
        let labels2 = write_temp(&lbl_bytes);
        let ds2 = load_idx(images2.path(), labels2.path(), Split::Test).unwrap();
        assert_eq!(ds.images, ds2.images);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        // a labels magic where an images magic belongs
        let mut bytes = image_bytes(1, &vec![0u8; 784]);
        bytes[0..4].copy_from_slice(&LABEL_MAGIC.to_be_bytes());
        let images = write_temp(&bytes);
        let labels = write_temp(&label_bytes(&[0]));
        assert!(matches!(
            load_idx(images.path(), labels.path(), Split::Test),
            Err(Error::IdxMagic { .. })
        ));
    }

    #[test]
    fn truncated_payload_is_a_length_error() {
        let images = write_temp(&image_bytes(2, &vec![0u8; 784])); // one image short
        let labels = write_temp(&label_bytes(&[0, 1]));
        assert!(matches!(
            load_idx(images.path(), labels.path(), Split::Test),
            Err(Error::IdxTruncated { .. })
        ));
    }

    #[test]
    fn count_mismatch_is_a_pairing_error() {
        let images = write_temp(&image_bytes(2, &vec![0u8; 2 * 784]));
        let labels = write_temp(&label_bytes(&[0, 1, 2]));
        assert!(matches!(
            load_idx(images.path(), labels.path(), Split::Test),
            Err(Error::IdxPairing {
                images: 2,
                labels: 3
            })
        ));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let images = write_temp(&image_bytes(1, &vec![0u8; 784]));
        let labels = write_temp(&label_bytes(&[11]));
        assert!(matches!(
            load_idx(images.path(), labels.path(), Split::Test),
            Err(Error::LabelRange(11))
        ));
    }

    #[test]
    fn gzip_wrapping_is_transparent() {
        let mut payload = vec![0u8; 784];
        payload[100] = 255;
        let raw = image_bytes(1, &payload);
        let mut encoder = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
        encoder.write_all(&raw).unwrap();
        let gz = encoder.finish().unwrap();

        let images = write_temp(&gz);
        let labels = write_temp(&label_bytes(&[5]));
        let ds = load_idx(images.path(), labels.path(), Split::Train).unwrap();
        assert_eq!(ds.images[0].pixels[100], 1.0);
        assert_eq!(ds.split, Split::Train);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn idx_round_trip(
            imgs in proptest::collection::vec(proptest::collection::vec(0u8..=255, 784), 1..4),
            labels in proptest::collection::vec(0u8..=9, 4),
        ) {
            let n = imgs.len();
            let dataset = Dataset {
                images: imgs
                    .iter()
                    .zip(&labels)
                    .map(|(px, &label)| RawImage {
                        pixels: px.iter().map(|&b| b as f64 / 255.0).collect(),
                        label,
                    })
                    .collect(),
                split: Split::Train,
            };
            let (ib, lb) = to_idx_bytes(&dataset);
            let fi = write_temp(&ib);
            let fl = write_temp(&lb);
            let back = load_idx(fi.path(), fl.path(), Split::Train).unwrap();
            prop_assert_eq!(back.len(), n);
            for (a, b) in back.images.iter().zip(&dataset.images) {
                prop_assert_eq!(&a.pixels, &b.pixels);
                prop_assert_eq!(a.label, b.label);
            }
            for img in &back.images {
                prop_assert!(img.pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
                prop_assert!(img.label <= 9);
            }
        }
    }
}
