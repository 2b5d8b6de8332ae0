//! Dataset ingestion: IDX files (optionally gzipped), a Gaussian synthetic
//! task, and seeded partitioning into participant shards.

use fedring_flcore::{FlError, LocalDataset};
use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Read;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad IDX magic: expected 0x{expected:08x}, found 0x{found:08x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX file truncated: header promises {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("IDX file has {0} bytes past the promised payload")]
    TrailingBytes(usize),
    #[error("dimension mismatch: {images} images but {labels} labels")]
    DimensionMismatch { images: usize, labels: usize },
    #[error("label {label} at item {index} is not a digit")]
    BadLabel { index: usize, label: u8 },
    #[error("need {need} items for the requested shards, dataset has {have}")]
    Insufficient { need: usize, have: usize },
    #[error(transparent)]
    Dataset(#[from] FlError),
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, DataError> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = std::fs::read(path).map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or(DataError::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_payload(bytes: &[u8], header: usize, payload: usize) -> Result<(), DataError> {
    let expected = header + payload;
    if bytes.len() < expected {
        return Err(DataError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(DataError::TrailingBytes(bytes.len() - expected));
    }
    Ok(())
}

/// Parses an IDX image file: returns (count, rows·cols, pixels scaled to [0, 1]).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), DataError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let dim = be_u32(bytes, 8)? as usize * be_u32(bytes, 12)? as usize;
    let payload = count.checked_mul(dim).ok_or(DataError::Truncated {
        expected: usize::MAX,
        found: bytes.len(),
    })?;
    check_payload(bytes, 16, payload)?;
    Ok((count, dim, bytes[16..].iter().map(|&p| p as f64 / 255.0).collect()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>, DataError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic {
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    check_payload(bytes, 8, count)?;
    bytes[8..]
        .iter()
        .enumerate()
        .map(|(index, &label)| {
            if label > 9 {
                Err(DataError::BadLabel { index, label })
            } else {
                Ok(label as usize)
            }
        })
        .collect()
}

/// Loads an image/label IDX pair, gzipped or not.
pub fn load_mnist_idx(images: &Path, labels: &Path, owner: &str) -> Result<LocalDataset, DataError> {
    let (count, dim, pixels) = parse_idx_images(&read_maybe_gz(images)?)?;
    let labels = parse_idx_labels(&read_maybe_gz(labels)?)?;
    if labels.len() != count {
        return Err(DataError::DimensionMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(LocalDataset::new(owner, dim, pixels, labels)?)
}

const CENTER_SEED: u64 = 0x5eed_c0de;
const MIN_RADIUS: f64 = 2.5;
/// Minimum distance between any two centers, in noise standard deviations.
const MIN_SEPARATION: f64 = 5.0;

/// Class centers: random directions, independent of the sample seed, scaled
/// so that no two centers are closer than [`MIN_SEPARATION`].
pub fn synthetic_centers(classes: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(CENTER_SEED ^ ((classes as u64) << 32) ^ dim as u64);
    let dirs: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut closest = f64::INFINITY;
    for (i, a) in dirs.iter().enumerate() {
        for b in &dirs[i + 1..] {
            let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            closest = closest.min(d);
        }
    }
    let radius = if closest.is_finite() && closest > 0.0 {
        (MIN_SEPARATION / closest).max(MIN_RADIUS)
    } else {
        MIN_RADIUS
    };
    dirs.into_iter().map(|v| v.into_iter().map(|x| x * radius).collect()).collect()
}

/// `n` points from unit-variance Gaussian clusters; item `i` has label
/// `i mod classes`.
pub fn gen_synthetic(seed: u64, n: usize, classes: usize, dim: usize) -> Result<LocalDataset, DataError> {
    if n < classes {
        return Err(DataError::Insufficient { need: classes, have: n });
    }
    let centers = synthetic_centers(classes, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * dim);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    for &l in &labels {
        for c in &centers[l] {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push(c + z);
        }
    }
    Ok(LocalDataset::new("synthetic", dim, features, labels)?)
}

/// Disjoint random shards of `samples_each` items, owned by `p0`, `p1`, ….
pub fn partition_data(
    data: &LocalDataset,
    n: usize,
    samples_each: usize,
    seed: u64,
) -> Result<Vec<LocalDataset>, DataError> {
    let need = n.saturating_mul(samples_each);
    if need > data.len() {
        return Err(DataError::Insufficient {
            need,
            have: data.len(),
        });
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(idx[..need]
        .chunks(samples_each.max(1))
        .take(n)
        .enumerate()
        .map(|(i, rows)| data.select(format!("p{i}"), rows))
        .collect())
}

/// Splits off the first `k` rows (oracle set) from the rest (evaluation set).
pub fn split_front(data: &LocalDataset, k: usize) -> Result<(LocalDataset, LocalDataset), DataError> {
    if k >= data.len() {
        return Err(DataError::Insufficient {
            need: k + 1,
            have: data.len(),
        });
    }
    let front: Vec<usize> = (0..k).collect();
    let back: Vec<usize> = (k..data.len()).collect();
    Ok((data.select("oracle", &front), data.select("test", &back)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IDX_IMAGES_MAGIC, count, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut b = IDX_LABELS_MAGIC.to_be_bytes().to_vec();
        b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        b.extend_from_slice(labels);
        b
    }

    #[test]
    fn parses_small_idx() {
        let (n, dim, px) = parse_idx_images(&idx_images(2, 2, 2, &[0, 255, 51, 0, 0, 0, 0, 255])).unwrap();
        assert_eq!((n, dim), (2, 4));
        assert_eq!(px[1], 1.0);
        assert!((px[2] - 0.2).abs() < 1e-12);
        assert_eq!(parse_idx_labels(&idx_labels(&[3, 9])).unwrap(), vec![3, 9]);
    }

    #[test]
    fn distinct_format_errors() {
        let mut bad = idx_images(1, 1, 1, &[0]);
        bad[3] = 0x01;
        assert!(matches!(
            parse_idx_images(&bad),
            Err(DataError::BadMagic { found: 0x801, .. })
        ));
        assert!(matches!(
            parse_idx_images(&idx_images(3, 2, 2, &[0; 8])),
            Err(DataError::Truncated { expected: 28, found: 24 })
        ));
        assert!(matches!(parse_idx_images(&[0, 0]), Err(DataError::Truncated { .. })));
        assert!(matches!(
            parse_idx_labels(&idx_labels(&[1, 2])[..9]),
            Err(DataError::Truncated { .. })
        ));
        let mut long = idx_labels(&[1]);
        long.push(0);
        assert!(matches!(parse_idx_labels(&long), Err(DataError::TrailingBytes(1))));
        assert!(matches!(
            parse_idx_labels(&idx_labels(&[10])),
            Err(DataError::BadLabel { index: 0, label: 10 })
        ));
    }

    #[test]
    fn dimension_mismatch_between_files() {
        let dir = tempfile::tempdir().unwrap();
        let (im, lb) = (dir.path().join("im"), dir.path().join("lb"));
        std::fs::write(&im, idx_images(2, 1, 2, &[0; 4])).unwrap();
        std::fs::write(&lb, idx_labels(&[1, 2, 3])).unwrap();
        assert!(matches!(
            load_mnist_idx(&im, &lb, "x"),
            Err(DataError::DimensionMismatch { images: 2, labels: 3 })
        ));
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let (im, lb) = (dir.path().join("im.gz"), dir.path().join("lb"));
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&idx_images(1, 1, 3, &[0, 128, 255])).unwrap();
        std::fs::write(&im, enc.finish().unwrap()).unwrap();
        std::fs::write(&lb, idx_labels(&[7])).unwrap();
        let d = load_mnist_idx(&im, &lb, "x").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.label(0), 7);
        assert_eq!(d.row(0)[2], 1.0);
    }

    #[test]
    fn synthetic_is_seeded_and_balanced() {
        let a = gen_synthetic(3, 101, 4, 5).unwrap();
        assert_eq!(a, gen_synthetic(3, 101, 4, 5).unwrap());
        assert_ne!(a, gen_synthetic(4, 101, 4, 5).unwrap());
        let mut counts = [0usize; 4];
        for &l in a.labels() {
            counts[l] += 1;
        }
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        assert!(gen_synthetic(0, 3, 4, 5).is_err());
    }

    #[test]
    fn shards_are_disjoint_and_sized() {
        let data = gen_synthetic(1, 500, 2, 3).unwrap();
        let shards = partition_data(&data, 7, 60, 9).unwrap();
        assert_eq!(shards.len(), 7);
        let mut seen = std::collections::HashSet::new();
        for s in &shards {
            assert_eq!(s.len(), 60);
            for (row, _) in s.iter() {
                let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
                assert!(seen.insert(key), "row appears twice");
                assert!(data.iter().any(|(r, _)| r == row));
            }
        }
        assert!(matches!(
            partition_data(&data, 9, 60, 9),
            Err(DataError::Insufficient { need: 540, have: 500 })
        ));
    }

    #[test]
    fn centers_keep_their_distance() {
        for (classes, dim) in [(2, 20), (4, 10), (10, 3)] {
            let c = synthetic_centers(classes, dim);
            for i in 0..classes {
                for j in i + 1..classes {
                    let d: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    assert!(d >= MIN_SEPARATION - 1e-9, "{classes}x{dim}: {d}");
                }
            }
        }
    }
}
