//! Network-moment cache.
//!
//! Moments depend only on the geometry, `K`, the number of drops and the
//! seed. They are memoized per run and, when a directory is given, stored as
//! JSON sidecar files named by the SHA-256 of that key.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::geometry::{estimate_zeta_stats, GeometryKey, GeometryStats, NetworkConfig};
use crate::rng::{SeedTree, GEOMETRY};

#[derive(Serialize)]
struct CacheKey<'a> {
    geometry: &'a GeometryKey,
    n_drops: usize,
    seed: u64,
}

/// Memoizing source of [`GeometryStats`].
#[derive(Debug, Default)]
pub struct ZetaCache {
    dir: Option<PathBuf>,
    memo: HashMap<String, GeometryStats>,
}

impl ZetaCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), memo: HashMap::new() }
    }

    /// Content hash naming the cache entry.
    pub fn key(cfg: &NetworkConfig, n_drops: usize, seed: u64) -> String {
        let geometry = cfg.geometry_key();
        let json = serde_json::to_string(&CacheKey { geometry: &geometry, n_drops, seed }).expect("serializable key");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("zeta-{}.json", &key[..16])))
    }

    /// Moments for `cfg`, estimated from `n_drops` drops under `seed` unless
    /// already known. Single-cell networks have exact moments.
    pub fn get(&mut self, cfg: &NetworkConfig, n_drops: usize, seed: u64) -> Result<GeometryStats> {
        if cfg.cells == 1 {
            let k = cfg.users_per_cell as f64;
            return Ok(GeometryStats {
                users_per_cell: cfg.users_per_cell,
                n_drops: 0,
                zeta1: k,
                zeta2: k * k,
                zeta3: k,
                se1: 0.0,
                se2: 0.0,
                se3: 0.0,
            });
        }
        let key = Self::key(cfg, n_drops, seed);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        if let Some(path) = self.path(&key) {
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(stats) = serde_json::from_str::<GeometryStats>(&text) {
                    self.memo.insert(key, stats.clone());
                    return Ok(stats);
                }
            }
        }
        let stats = estimate_zeta_stats(cfg, n_drops, SeedTree::new(seed).child(GEOMETRY))?;
        if let Some(path) = self.path(&key) {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, serde_json::to_string_pretty(&stats).expect("serializable stats"))?;
        }
        self.memo.insert(key, stats.clone());
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_tracks_geometry_only() {
        let a = NetworkConfig::default();
        let b = NetworkConfig { antennas: 7, rho: 3.0, alpha: 0.1, ..a.clone() };
        assert_eq!(ZetaCache::key(&a, 10, 1), ZetaCache::key(&b, 10, 1));
        let c = NetworkConfig { users_per_cell: 5, ..a.clone() };
        assert_ne!(ZetaCache::key(&a, 10, 1), ZetaCache::key(&c, 10, 1));
        assert_ne!(ZetaCache::key(&a, 10, 1), ZetaCache::key(&a, 11, 1));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = NetworkConfig::default();
        let first = ZetaCache::with_dir(dir.path()).get(&cfg, 200, 3).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = ZetaCache::with_dir(dir.path()).get(&cfg, 200, 3).unwrap();
        assert_eq!(first, second);
        let single = ZetaCache::in_memory().get(&NetworkConfig { cells: 1, ..cfg }, 200, 3).unwrap();
        assert_eq!(single.zeta2, 144.0);
    }
}
