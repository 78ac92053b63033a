//! Binary feature cache so MFCC extraction runs once per corpus/config.
//!
//! Layout, all integers little-endian:
//! magic `SERF` | u32 version | u32 n_samples | u32 n_frames | u32 n_coeffs
//! | 32-byte feature-config hash | n*t*d f64 features | n u8 labels.

use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use thiserror::Error;

use crate::features::FeatureConfig;

const MAGIC: &[u8; 4] = b"SERF";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a feature cache (bad magic)")]
    BadMagic,
    #[error("cache version {found} is not supported (expected {VERSION})")]
    VersionMismatch { found: u32 },
    #[error("cache is corrupt: {0}")]
    SizeMismatch(String),
    #[error("invalid cache contents: {0}")]
    Invalid(String),
}

/// Extracted features for a whole corpus: `n` sequences of `t` frames by
/// `d` coefficients, flattened sample-major, plus a class index per sample
/// and the hash of the feature config that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    n_frames: usize,
    n_coeffs: usize,
    data: Vec<f64>,
    labels: Vec<u8>,
    config_hash: [u8; 32],
}

impl FeatureCache {
    pub fn new(
        n_frames: usize,
        n_coeffs: usize,
        data: Vec<f64>,
        labels: Vec<u8>,
        config_hash: [u8; 32],
    ) -> Result<Self, CacheError> {
        let per_sample = n_frames
            .checked_mul(n_coeffs)
            .filter(|&p| p > 0)
            .ok_or_else(|| {
                CacheError::Invalid("frame/coefficient counts must be positive".into())
            })?;
        if labels.is_empty() {
            return Err(CacheError::Invalid("no samples".into()));
        }
        if data.len() != per_sample * labels.len() {
            return Err(CacheError::Invalid(format!(
                "{} values for {} samples of {per_sample}",
                data.len(),
                labels.len()
            )));
        }
        Ok(FeatureCache {
            n_frames,
            n_coeffs,
            data,
            labels,
            config_hash,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn config_hash(&self) -> &[u8; 32] {
        &self.config_hash
    }

    /// Feature matrix of one sample as a frames-by-coefficients view.
    pub fn sample(&self, i: usize) -> ArrayView2<'_, f64> {
        let per = self.n_frames * self.n_coeffs;
        ArrayView2::from_shape(
            (self.n_frames, self.n_coeffs),
            &self.data[i * per..(i + 1) * per],
        )
        .expect("sizes validated at construction")
    }

    /// Whether this cache was produced under the given feature config.
    /// A mismatch usually means the cache should be regenerated; reading
    /// still works, so callers decide whether to warn or refuse.
    pub fn matches_config(&self, cfg: &FeatureConfig) -> bool {
        self.config_hash == cfg.content_hash()
    }

    /// Serializes to `path`, writing a temporary sibling first and renaming
    /// it into place so a crash never leaves a truncated cache behind.
    pub fn write(&self, path: &Path) -> Result<(), CacheError> {
        let mut bytes = Vec::with_capacity(48 + self.data.len() * 8 + self.labels.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.n_frames as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.n_coeffs as u32).to_le_bytes());
        bytes.extend_from_slice(&self.config_hash);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&self.labels);
        write_atomic(path, &bytes).map_err(|source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CacheError> {
        let bytes = std::fs::read(path).map_err(|source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if bytes.len() < 48 {
            return Err(CacheError::SizeMismatch(format!(
                "{} bytes is smaller than the header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let version = u32_at(4);
        if version != VERSION as usize {
            return Err(CacheError::VersionMismatch {
                found: version as u32,
            });
        }
        let (n, t, d) = (u32_at(8), u32_at(12), u32_at(16));
        let mut config_hash = [0u8; 32];
        config_hash.copy_from_slice(&bytes[20..52]);

        let values = n
            .checked_mul(t)
            .and_then(|x| x.checked_mul(d))
            .ok_or_else(|| CacheError::SizeMismatch("header sizes overflow".into()))?;
        let want = 52 + values * 8 + n;
        if bytes.len() != want {
            return Err(CacheError::SizeMismatch(format!(
                "{} bytes for n={n} t={t} d={d} (expected {want})",
                bytes.len()
            )));
        }
        let mut data = Vec::with_capacity(values);
        for k in 0..values {
            let at = 52 + k * 8;
            data.push(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()));
        }
        let labels = bytes[52 + values * 8..].to_vec();
        FeatureCache::new(t, d, data, labels, config_hash)
    }
}

/// Writes bytes via a temporary file in the same directory plus a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("path has no file name"))?;
    let mut tmp = dir.map(|d| d.to_path_buf()).unwrap_or_default();
    tmp.push(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cache() -> FeatureCache {
        let data: Vec<f64> = (0..2 * 3 * 4).map(|k| k as f64 * 0.25 - 1.7).collect();
        FeatureCache::new(
            3,
            4,
            data,
            vec![2, 5],
            FeatureConfig::default().content_hash(),
        )
        .unwrap()
    }

    #[test]
    fn round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.serf");
        let cache = sample_cache();
        cache.write(&path).unwrap();
        let back = FeatureCache::read(&path).unwrap();
        assert_eq!(back, cache);
        assert_eq!(back.n_samples(), 2);
        assert_eq!(back.sample(1).shape(), &[3, 4]);
        assert_eq!(back.sample(1)[[0, 0]], 12.0 * 0.25 - 1.7);
        assert!(back.matches_config(&FeatureConfig::default()));
        assert!(!back.matches_config(&FeatureConfig::new(16000)));
    }

    #[test]
    fn write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.serf");
        sample_cache().write(&path).unwrap();
        let names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["features.serf".to_string()]);
    }

    #[test]
    fn read_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.serf");
        sample_cache().write(&path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            FeatureCache::read(&path),
            Err(CacheError::BadMagic)
        ));

        let mut bad = good.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            FeatureCache::read(&path),
            Err(CacheError::VersionMismatch { found: 9 })
        ));

        let mut bad = good.clone();
        bad.truncate(good.len() - 3);
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            FeatureCache::read(&path),
            Err(CacheError::SizeMismatch(_))
        ));

        std::fs::write(&path, b"SER").unwrap();
        assert!(matches!(
            FeatureCache::read(&path),
            Err(CacheError::SizeMismatch(_))
        ));
    }

    #[test]
    fn construction_validates_sizes() {
        assert!(matches!(
            FeatureCache::new(3, 4, vec![0.0; 10], vec![1], [0; 32]),
            Err(CacheError::Invalid(_))
        ));
        assert!(matches!(
            FeatureCache::new(0, 4, vec![], vec![1], [0; 32]),
            Err(CacheError::Invalid(_))
        ));
        assert!(matches!(
            FeatureCache::new(3, 4, vec![], vec![], [0; 32]),
            Err(CacheError::Invalid(_))
        ));
    }
}
