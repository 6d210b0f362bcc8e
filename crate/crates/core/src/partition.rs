//! Set partitions of `{0, .., k-1}` as restricted growth strings, and the
//! falling factorial that counts injective sample assignments to blocks.

use std::fmt;

use crate::error::{Error, Result};

/// Largest ground set for which partitions are enumerated.
pub const MAX_PARTITION_SIZE: usize = 12;

/// A partition of `{0, .., k-1}` in canonical form: `labels[i]` is the index
/// of the block containing `i`, blocks numbered by their least element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    labels: Vec<u8>,
}

impl SetPartition {
    /// Builds a partition from any labelling; equal labels share a block.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let mut seen: Vec<&T> = Vec::new();
        let canonical = labels
            .iter()
            .map(|l| match seen.iter().position(|s| *s == l) {
                Some(p) => p as u8,
                None => {
                    seen.push(l);
                    (seen.len() - 1) as u8
                }
            })
            .collect();
        SetPartition { labels: canonical }
    }

    /// Builds a partition from explicit blocks, which must be nonempty,
    /// disjoint and cover `{0, .., k-1}`.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut owner = vec![usize::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidArgument("empty partition block".into()));
            }
            for &i in block {
                if i >= k {
                    return Err(Error::InvalidArgument(format!(
                        "element {i} outside ground set of size {k}"
                    )));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "element {i} appears in two blocks"
                    )));
                }
                owner[i] = b;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidArgument(format!("element {i} not covered")));
        }
        Ok(Self::from_labels(&owner))
    }

    /// The partition into singletons.
    pub fn discrete(k: usize) -> Self {
        SetPartition {
            labels: (0..k as u8).collect(),
        }
    }

    /// The one-block partition.
    pub fn single_block(k: usize) -> Self {
        SetPartition { labels: vec![0; k] }
    }

    pub fn ground_size(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Blocks sorted by least element, each sorted ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Each block as a bitmask over the ground set.
    pub fn block_masks(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.num_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize] |= 1 << i;
        }
        out
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        for (b, block) in blocks.iter().enumerate() {
            if b > 0 {
                f.write_str("|")?;
            }
            for (j, i) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", i + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetPartition({self})")
    }
}

/// Iterator over all partitions of a `k`-set in lexicographic order of
/// their restricted growth strings.
pub struct SetPartitions {
    labels: Vec<u8>,
    // prefix maxima: maxima[i] = max(labels[..i])
    maxima: Vec<u8>,
    done: bool,
}

impl Iterator for SetPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let current = SetPartition {
            labels: self.labels.clone(),
        };
        let k = self.labels.len();
        // find the rightmost position that can be incremented
        let mut pos = k;
        while pos > 1 {
            pos -= 1;
            if self.labels[pos] <= self.maxima[pos] {
                self.labels[pos] += 1;
                for j in pos + 1..k {
                    self.labels[j] = 0;
                    self.maxima[j] = self.maxima[j - 1].max(self.labels[j - 1]);
                }
                return Some(current);
            }
        }
        self.done = true;
        Some(current)
    }
}

/// All partitions of `{0, .., k-1}`, each exactly once, `1 <= k <= 12`.
pub fn set_partitions(k: usize) -> Result<SetPartitions> {
    if k == 0 || k > MAX_PARTITION_SIZE {
        return Err(Error::PartitionSize(k));
    }
    Ok(SetPartitions {
        labels: vec![0; k],
        maxima: vec![0; k],
        done: false,
    })
}

/// Bell numbers via the Bell triangle.
pub fn bell(k: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty"));
        for v in &row {
            let last = *next.last().expect("nonempty");
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// `n (n-1) ⋯ (n-q+1)`, or `None` on overflow.
pub fn checked_falling_factorial(n: u64, q: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..q as u64 {
        if i >= n {
            return Some(0);
        }
        acc = acc.checked_mul((n - i) as u128)?;
    }
    Some(acc)
}

/// `n (n-1) ⋯ (n-q+1)`; 1 when `q = 0`, 0 when `q > n`.
///
/// Panics if the result does not fit in a `u128`.
pub fn falling_factorial(n: u64, q: usize) -> u128 {
    checked_falling_factorial(n, q).expect("falling factorial overflows u128")
}
