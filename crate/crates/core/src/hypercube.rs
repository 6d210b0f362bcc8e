//! Subsets of `[d]`, Fourier-Walsh monomials and the uniform measure on the
//! hypercube `{-1, +1}^d`.
//!
//! Coordinates are 0-indexed. A subset is stored as a fixed-width parity
//! word array, so symmetric difference is a word-wise XOR and the expectation
//! of a product of monomials reduces to checking that the XOR of all sets
//! is empty.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 1024;

const WORDS: usize = MAX_DIM / 64;

/// Identifier of the generator behind [`sample_dataset`].
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/seed_from_u64;row-major-u64-words";

/// A subset `S` of `{0, .., d-1}`, equivalently the monomial `x^S`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    d: u16,
    words: [u64; WORDS],
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

impl SubsetMask {
    /// The empty set in dimension `d`.
    pub fn empty(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(SubsetMask {
            d: d as u16,
            words: [0; WORDS],
        })
    }

    pub fn from_indices(d: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::empty(d)?;
        for &i in indices {
            if i >= d {
                return Err(Error::CoordinateOutOfRange { index: i, d });
            }
            mask.words[i / 64] |= 1 << (i % 64);
        }
        Ok(mask)
    }

    /// Every coordinate of `[d]`.
    pub fn full(d: usize) -> Result<Self> {
        let all: Vec<usize> = (0..d).collect();
        Self::from_indices(d, &all)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    /// `|S|`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.dim() && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Coordinates in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(move |&i| self.contains(i))
    }

    /// Symmetric difference `S Δ T`.
    pub fn xor(&self, other: &SubsetMask) -> Result<SubsetMask> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.sym_diff(other))
    }

    /// Symmetric difference without the dimension check. Callers guarantee
    /// a common dimension.
    #[inline]
    pub(crate) fn sym_diff(&self, other: &SubsetMask) -> SubsetMask {
        let mut out = *self;
        for (w, o) in out.words.iter_mut().zip(other.words.iter()) {
            *w ^= o;
        }
        out
    }

    #[inline]
    pub(crate) fn xor_assign(&mut self, other: &SubsetMask) {
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            *w ^= o;
        }
    }

    /// Intersection with another subset of the same dimension.
    pub fn intersection(&self, other: &SubsetMask) -> Result<SubsetMask> {
        same_dim(self.dim(), other.dim())?;
        let mut out = *self;
        for (w, o) in out.words.iter_mut().zip(other.words.iter()) {
            *w &= o;
        }
        Ok(out)
    }

    pub fn is_disjoint(&self, other: &SubsetMask) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    /// Parity of `|S ∩ N|`; the monomial is `-1` exactly when it is odd.
    #[inline]
    fn odd_overlap(&self, negatives: &SubsetMask) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(negatives.words.iter()) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// Stable textual form used for hashing and CSV output.
    pub fn to_index_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetMask(d={}, {})", self.d, self)
    }
}

/// A point of `{-1, +1}^d`, stored as the set of coordinates equal to `-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SignVector {
    negatives: SubsetMask,
}

impl SignVector {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let d = signs.len();
        let mut neg = Vec::new();
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => neg.push(i),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "sign entry {other} at coordinate {i} is not +1 or -1"
                    )))
                }
            }
        }
        Ok(SignVector {
            negatives: SubsetMask::from_indices(d, &neg)?,
        })
    }

    /// The point whose `-1` coordinates are exactly `negatives`.
    pub fn from_negatives(negatives: SubsetMask) -> Self {
        SignVector { negatives }
    }

    pub fn dim(&self) -> usize {
        self.negatives.dim()
    }

    pub fn get(&self, i: usize) -> i8 {
        if self.negatives.contains(i) {
            -1
        } else {
            1
        }
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.dim()).map(|i| self.get(i)).collect()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, s: &SubsetMask) -> f64 {
        if s.odd_overlap(&self.negatives) {
            -1.0
        } else {
            1.0
        }
    }
}

/// `x^S = ∏_{i ∈ S} x_i`.
pub fn monomial_eval(s: &SubsetMask, x: &SignVector) -> Result<i8> {
    same_dim(s.dim(), x.dim())?;
    Ok(if s.odd_overlap(&x.negatives) { -1 } else { 1 })
}

/// Parity rule: `E[x^{S_1} ⋯ x^{S_q}]` under the uniform measure is 1 when
/// the XOR of the sets is empty and 0 otherwise. The empty product has
/// expectation 1.
pub fn expectation_of_product(sets: &[SubsetMask]) -> Result<u8> {
    let Some(first) = sets.first() else {
        return Ok(1);
    };
    let mut acc = *first;
    for s in &sets[1..] {
        same_dim(first.dim(), s.dim())?;
        acc.xor_assign(s);
    }
    Ok(acc.is_empty() as u8)
}

/// `n` points sampled uniformly from the hypercube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    d: usize,
    seed: Option<u64>,
    rows: Vec<SignVector>,
}

impl Dataset {
    /// Wraps explicit rows; `seed` is left unset.
    pub fn from_rows(d: usize, rows: Vec<SignVector>) -> Result<Self> {
        check_dim(d)?;
        for r in &rows {
            same_dim(d, r.dim())?;
        }
        Ok(Dataset {
            d,
            seed: None,
            rows,
        })
    }

    /// All `2^d` points of the cube, in binary-counter order.
    pub fn full_cube(d: usize) -> Result<Self> {
        if d > 20 {
            return Err(Error::InvalidArgument(format!(
                "full cube of dimension {d} is too large to materialize"
            )));
        }
        let rows = (0..1usize << d)
            .map(|bits| {
                let neg: Vec<usize> = (0..d).filter(|i| bits >> i & 1 == 1).collect();
                SubsetMask::from_indices(d, &neg).map(SignVector::from_negatives)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(d, rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> &[SignVector] {
        &self.rows
    }
}

/// Draws `n` independent uniform points of `{-1,+1}^d`.
///
/// Deterministic in `(n, d, seed)`: a ChaCha8 stream seeded from `seed`
/// fills each row with `ceil(d/64)` consecutive 64-bit words, high bits
/// beyond `d` masked off; a set bit means coordinate `-1`.
pub fn sample_dataset(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let used = d.div_ceil(64);
    let rows = (0..n)
        .map(|_| {
            let mut neg = SubsetMask::empty(d).expect("checked dimension");
            for w in 0..used {
                let mut word = rng.next_u64();
                let bits = (d - 64 * w).min(64);
                if bits < 64 {
                    word &= (1u64 << bits) - 1;
                }
                neg.words[w] = word;
            }
            SignVector::from_negatives(neg)
        })
        .collect();
    Ok(Dataset {
        d,
        seed: Some(seed),
        rows,
    })
}

/// Per-trial seed `mix(master, t)`: SplitMix64 finalizer applied to
/// `master + (t + 1) * 0x9E3779B97F4A7C15` (wrapping).
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Textual description of [`derive_seed`], recorded in output metadata.
pub const SEED_MIXING: &str = "splitmix64(master + (t+1)*0x9E3779B97F4A7C15)";
