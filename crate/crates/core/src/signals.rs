//! Seeded random generators: Rademacher sequences, sparse signals and row-set presets.
//!
//! Every draw comes from a ChaCha8 stream keyed by `(master_seed, stream_id)`:
//! the master seed fills the 256-bit key (little-endian in the first word,
//! remaining words zero) and `stream_id` selects the 64-bit ChaCha stream.
//! Identical seeds therefore reproduce identical draws bit for bit, and
//! distinct stream ids are independent, which is what lets Monte-Carlo trials
//! run in any order on any number of threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{GeneratorKind, GeneratorVector, IndexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Same master seed, different stream.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }
}

/// Draw `length` independent fair signs.
pub fn rademacher_vec<R: Rng + ?Sized>(rng: &mut R, length: usize) -> Vec<f64> {
    (0..length)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Rademacher sequence of the given length, as a circulant generator.
pub fn rademacher(length: usize, seed: SeedSpec) -> Result<GeneratorVector> {
    if length == 0 {
        return Err(Error::InvalidArgument("Rademacher length must be positive".into()));
    }
    let values = rademacher_vec(&mut seed.rng(), length);
    GeneratorVector::circulant(values)
}

/// Rademacher generator for an operator of the given kind on `R^n`.
pub fn rademacher_generator<R: Rng + ?Sized>(
    rng: &mut R,
    kind: GeneratorKind,
    n: usize,
) -> Result<GeneratorVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
    }
    GeneratorVector::new(kind, n, rademacher_vec(rng, kind.generator_len(n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeLaw {
    #[default]
    Unit,
    /// Uniform on `[1, 2]`.
    Uniform12,
}

impl FromStr for MagnitudeLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(MagnitudeLaw::Unit),
            "uniform" | "uniform12" | "uniform[1,2]" => Ok(MagnitudeLaw::Uniform12),
            other => Err(Error::InvalidArgument(format!("unknown magnitude law '{other}'"))),
        }
    }
}

/// An `s`-sparse vector stored by support, signs and magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    ambient_dim: usize,
    support: Vec<usize>,
    signs: Vec<f64>,
    magnitudes: Vec<f64>,
}

impl SparseSignal {
    pub fn new(
        ambient_dim: usize,
        support: IndexSet,
        signs: Vec<f64>,
        magnitudes: Vec<f64>,
    ) -> Result<Self> {
        if support.universe() != ambient_dim {
            return Err(Error::DimensionMismatch {
                what: "support universe",
                expected: ambient_dim,
                got: support.universe(),
            });
        }
        let s = support.len();
        if signs.len() != s || magnitudes.len() != s {
            return Err(Error::DimensionMismatch {
                what: "signs/magnitudes length",
                expected: s,
                got: signs.len().min(magnitudes.len()),
            });
        }
        if signs.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument("signs must be ±1".into()));
        }
        if magnitudes.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidArgument("magnitudes must be positive and finite".into()));
        }
        Ok(Self {
            ambient_dim,
            support: support.as_slice().to_vec(),
            signs,
            magnitudes,
        })
    }

    /// Reads support, signs and magnitudes off a dense vector.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let signs = support.iter().map(|&i| x[i].signum()).collect();
        let mags = support.iter().map(|&i| x[i].abs()).collect();
        Self::new(x.len(), IndexSet::new(support, x.len())?, signs, mags)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> IndexSet {
        IndexSet::new(self.support.clone(), self.ambient_dim).expect("validated at construction")
    }

    pub fn support_slice(&self) -> &[usize] {
        &self.support
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim];
        for ((&i, &sg), &m) in self.support.iter().zip(&self.signs).zip(&self.magnitudes) {
            x[i] = sg * m;
        }
        x
    }

    pub fn l1_norm(&self) -> f64 {
        self.magnitudes.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum::<f64>().sqrt()
    }
}

/// Uniform support without replacement, independent fair signs, magnitudes per `law`.
pub fn random_sparse_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    s: usize,
    law: MagnitudeLaw,
) -> Result<SparseSignal> {
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity {s} must lie in [1, {n}]"
        )));
    }
    let mut support = index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let signs = rademacher_vec(rng, s);
    let magnitudes = match law {
        MagnitudeLaw::Unit => vec![1.0; s],
        MagnitudeLaw::Uniform12 => (0..s).map(|_| rng.random_range(1.0..=2.0)).collect(),
    };
    SparseSignal::new(n, IndexSet::new(support, n)?, signs, magnitudes)
}

pub fn random_sparse(n: usize, s: usize, law: MagnitudeLaw, seed: SeedSpec) -> Result<SparseSignal> {
    random_sparse_with(&mut seed.rng(), n, s, law)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaPreset {
    /// `{0, …, n-1}`
    FirstN,
    /// `{K-1, 2K-1, …, nK-1}` with `N = nK`.
    Downsample,
    /// Uniform `n`-subset: the first `n` entries of a seeded permutation,
    /// so sets for increasing `n` are nested.
    UniformRandom,
}

impl OmegaPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            OmegaPreset::FirstN => "first_n",
            OmegaPreset::Downsample => "downsample",
            OmegaPreset::UniformRandom => "uniform_random",
        }
    }
}

impl fmt::Display for OmegaPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OmegaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_n" | "first-n" => Ok(OmegaPreset::FirstN),
            "downsample" => Ok(OmegaPreset::Downsample),
            "uniform_random" | "uniform-random" | "random" => Ok(OmegaPreset::UniformRandom),
            other => Err(Error::InvalidArgument(format!("unknown omega preset '{other}'"))),
        }
    }
}

/// Row set of size `n` in `[0, big_n)`. `seed` is only read by `UniformRandom`.
pub fn omega_preset(preset: OmegaPreset, big_n: usize, n: usize, seed: SeedSpec) -> Result<IndexSet> {
    if n == 0 || n > big_n {
        return Err(Error::InvalidArgument(format!(
            "row count {n} must lie in [1, {big_n}]"
        )));
    }
    match preset {
        OmegaPreset::FirstN => IndexSet::new((0..n).collect(), big_n),
        OmegaPreset::Downsample => {
            if big_n % n != 0 {
                return Err(Error::InvalidArgument(format!(
                    "downsample needs N = nK: {big_n} is not a multiple of {n}"
                )));
            }
            let k = big_n / n;
            IndexSet::new((1..=n).map(|i| i * k - 1).collect(), big_n)
        }
        OmegaPreset::UniformRandom => {
            let mut rng = seed.rng();
            let mut perm: Vec<usize> = (0..big_n).collect();
            // forward Fisher–Yates; the prefix of length n is a uniform n-subset
            for i in 0..big_n.saturating_sub(1) {
                let j = rng.random_range(i..big_n);
                perm.swap(i, j);
            }
            perm.truncate(n);
            IndexSet::from_unsorted(perm, big_n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_deterministic_and_signed() {
        let a = rademacher(100, SeedSpec::new(3, 9)).unwrap();
        let b = rademacher(100, SeedSpec::new(3, 9)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_rademacher());
        let one = rademacher(1, SeedSpec::new(0, 0)).unwrap();
        assert!(one.values()[0] == 1.0 || one.values()[0] == -1.0);
        assert!(rademacher(0, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn sparse_edge_cases() {
        let full = random_sparse(6, 6, MagnitudeLaw::Unit, SeedSpec::new(1, 1)).unwrap();
        assert_eq!(full.support_slice(), &[0, 1, 2, 3, 4, 5]);
        let one = random_sparse(10, 1, MagnitudeLaw::Unit, SeedSpec::new(1, 2)).unwrap();
        let d = one.to_dense();
        assert_eq!(d.iter().filter(|v| **v != 0.0).count(), 1);
        assert!(d.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert!(random_sparse(4, 5, MagnitudeLaw::Unit, SeedSpec::new(0, 0)).is_err());
        let u = random_sparse(50, 20, MagnitudeLaw::Uniform12, SeedSpec::new(5, 5)).unwrap();
        assert!(u.magnitudes().iter().all(|m| (1.0..=2.0).contains(m)));
    }

    #[test]
    fn presets() {
        let s = SeedSpec::new(0, 0);
        let ds = omega_preset(OmegaPreset::Downsample, 8, 4, s).unwrap();
        assert_eq!(ds.as_slice(), &[1, 3, 5, 7]);
        for p in [OmegaPreset::FirstN, OmegaPreset::Downsample, OmegaPreset::UniformRandom] {
            assert_eq!(omega_preset(p, 8, 8, s).unwrap().as_slice(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        }
        assert!(omega_preset(OmegaPreset::Downsample, 9, 4, s).is_err());
        assert_eq!(omega_preset(OmegaPreset::FirstN, 9, 3, s).unwrap().as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn uniform_presets_nest() {
        let s = SeedSpec::new(11, 4);
        let small = omega_preset(OmegaPreset::UniformRandom, 64, 10, s).unwrap();
        let big = omega_preset(OmegaPreset::UniformRandom, 64, 30, s).unwrap();
        assert!(small.iter().all(|i| big.contains(i)));
    }

    #[test]
    fn from_dense_round_trip() {
        let x = vec![0.0, -2.0, 0.0, 1.5];
        let sig = SparseSignal::from_dense(&x).unwrap();
        assert_eq!(sig.support_slice(), &[1, 3]);
        assert_eq!(sig.signs(), &[-1.0, 1.0]);
        assert_eq!(sig.to_dense(), x);
    }
}
