//! On-disk periodic-orbit cache keyed by a content hash of the map.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::maps::MapSpec;
use crate::symbolic::{locate_periodic_with, word_count, PeriodicOrbit};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    period: usize,
    word: String,
    point: f64,
    birkhoff_log_deriv: f64,
}

/// Digits when every symbol is below 10, dot-separated otherwise.
pub fn encode_word(word: &[u8]) -> String {
    if word.iter().all(|&s| s < 10) {
        word.iter().map(|s| char::from(b'0' + s)).collect()
    } else {
        word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
    }
}

pub fn decode_word(text: &str) -> Result<Vec<u8>> {
    let bad = || Error::Invalid(format!("malformed word '{text}'"));
    if text.contains('.') {
        text.split('.').map(|s| s.parse::<u8>().map_err(|_| bad())).collect()
    } else {
        text.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct OrbitCache {
    dir: PathBuf,
}

impl OrbitCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(map: &MapSpec, period: usize, periodic_tol: f64) -> String {
        let mut h = Sha256::new();
        h.update(map.canonical_key().as_bytes());
        h.update(format!("|period={period}|tol={periodic_tol:e}").as_bytes());
        hex::encode(h.finalize())
    }

    pub fn path(&self, map: &MapSpec, period: usize, periodic_tol: f64) -> PathBuf {
        self.dir.join(format!("{}.csv", Self::key(map, period, periodic_tol)))
    }

    /// Cached orbits when a complete table exists, else computed and stored.
    /// The flag reports a cache hit.
    pub fn orbits(
        &self,
        map: &MapSpec,
        period: usize,
        budget: u128,
        periodic_tol: f64,
    ) -> Result<(Vec<PeriodicOrbit>, bool)> {
        let path = self.path(map, period, periodic_tol);
        let expected = word_count(map.branch_count(), period, budget, "periodic orbits")?;
        if let Ok(orbits) = read_table(&path) {
            if orbits.len() == expected && orbits.iter().all(|o| o.word.len() == period) {
                return Ok((orbits, true));
            }
        }
        let orbits = locate_periodic_with(map, period, budget, periodic_tol)?;
        fs::create_dir_all(&self.dir)
            .map_err(|e| Error::Invalid(format!("cannot create cache dir {}: {e}", self.dir.display())))?;
        write_table(&path, period, &orbits)?;
        Ok((orbits, false))
    }
}

pub fn write_table(path: &Path, period: usize, orbits: &[PeriodicOrbit]) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for o in orbits {
        w.serialize(Row {
            period,
            word: encode_word(&o.word),
            point: o.point,
            birkhoff_log_deriv: o.birkhoff_log_deriv,
        })
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn read_table(path: &Path) -> Result<Vec<PeriodicOrbit>> {
    let io = |e: csv::Error| Error::Invalid(format!("cannot read {}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(io)?;
            let word = decode_word(&row.word)?;
            if word.len() != row.period {
                return Err(Error::Invalid(format!("word '{}' does not have period {}", row.word, row.period)));
            }
            Ok(PeriodicOrbit {
                word,
                point: row.point,
                birkhoff_log_deriv: row.birkhoff_log_deriv,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::DEFAULT_PERIODIC_TOL;

    #[test]
    fn words_round_trip() {
        for w in [vec![0, 1, 1, 0], vec![3, 12, 0]] {
            assert_eq!(decode_word(&encode_word(&w)).unwrap(), w);
        }
    }

    #[test]
    fn hit_reproduces_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = OrbitCache::new(dir.path());
        let map = MapSpec::chebyshev();
        let (a, hit_a) = cache.orbits(&map, 6, u128::MAX, DEFAULT_PERIODIC_TOL).unwrap();
        let (b, hit_b) = cache.orbits(&map, 6, u128::MAX, DEFAULT_PERIODIC_TOL).unwrap();
        assert!(!hit_a && hit_b);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.word, y.word);
            assert!((x.point - y.point).abs() <= 1e-12);
            assert!((x.birkhoff_log_deriv - y.birkhoff_log_deriv).abs() <= 1e-12);
        }
    }

    #[test]
    fn keys_separate_maps_and_periods() {
        let d = MapSpec::doubling();
        let t = MapSpec::tent(2.0).unwrap();
        assert_ne!(OrbitCache::key(&d, 4, 1e-12), OrbitCache::key(&t, 4, 1e-12));
        assert_ne!(OrbitCache::key(&d, 4, 1e-12), OrbitCache::key(&d, 5, 1e-12));
    }

    #[test]
    fn truncated_file_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = OrbitCache::new(dir.path());
        let map = MapSpec::doubling();
        let path = cache.path(&map, 3, DEFAULT_PERIODIC_TOL);
        fs::write(&path, "period,word,point,birkhoff_log_deriv\n3,000,0,0\n").unwrap();
        let (orbits, hit) = cache.orbits(&map, 3, u128::MAX, DEFAULT_PERIODIC_TOL).unwrap();
        assert!(!hit);
        assert_eq!(orbits.len(), 8);
    }
}
