//! Exact `E[M]` by expanding the chain product over feature tuples
//! `(k_1, .., k_{m+1})` and sample tuples `(i_1, .., i_m)`.
//!
//! Entry `(k_1, k_{m+1})` of `E[M]` is
//!
//! ```text
//! w1[k_1] w_{m+1}[k_{m+1}] Σ_{k_2..k_m} Π_{j=2..m} w_j[k_j]^2
//!     Σ_{π ∈ Π_m} n^(|π|) Π_{T ∈ π} [ XOR_{j ∈ T} (S_{k_j} Δ S_{k_{j+1}}) = ∅ ]
//! ```
//!
//! where `n^(q)` counts sample tuples whose equality pattern is exactly `π`,
//! and the bracket is the parity rule applied to the samples shared by the
//! positions in block `T`. The sample-count factor is kept in `u128`.

mod sums;

pub use sums::{count_nonzero_tuples, weighted_monomial_sum, MonomialSum, TuplePredicate};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hypercube::SubsetMask;
use crate::matrix::{ExpectationMatrix, ExpectationMeta, Method, ProductSpec};
use crate::partition::{bell, checked_falling_factorial, set_partitions, SetPartition};

/// Default cap on the enumeration cost estimate.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Above this many summands per entry the float accumulation is compensated.
const COMPENSATION_THRESHOLD: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub budget: u128,
    pub execution: Execution,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            budget: DEFAULT_BUDGET,
            execution: Execution::default(),
        }
    }
}

/// One stratum of the expansion: `samples` fixes which sample indices
/// coincide, `features` which feature indices coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StratumKey {
    /// Partition of the `m` sample positions.
    pub samples: SetPartition,
    /// Partition of the `m + 1` feature positions.
    pub features: SetPartition,
}

/// `∏_{i=2}^{m} |𝒮_i| · Bell(m) · |𝒮_1| · |𝒮_{m+1}|`, saturating.
pub fn estimate_cost(spec: &ProductSpec) -> u128 {
    let sizes: Vec<u128> = spec.chain().iter().map(|w| w.family().len() as u128).collect();
    sizes
        .iter()
        .fold(bell(spec.m()), |acc, &s| acc.saturating_mul(s))
}

fn check_budget(spec: &ProductSpec, budget: u128) -> Result<()> {
    let estimate = estimate_cost(spec);
    if estimate > budget {
        return Err(Error::BudgetExceeded {
            estimate,
            cap: budget,
        });
    }
    Ok(())
}

pub fn exact_expected_m(spec: &ProductSpec) -> Result<ExpectationMatrix> {
    exact_expected_m_with(spec, &ExactOptions::default())
}

pub fn exact_expected_m_with(spec: &ProductSpec, opts: &ExactOptions) -> Result<ExpectationMatrix> {
    check_budget(spec, opts.budget)?;
    let partitions: Vec<SetPartition> = set_partitions(spec.m())?.collect();
    expand(spec, &partitions, None, opts.execution)
}

/// Every stratum whose feature partition only merges positions carrying
/// the same family. Strata outside this list are identically zero.
pub fn valid_strata(spec: &ProductSpec) -> Result<Vec<StratumKey>> {
    let m = spec.m();
    let samples: Vec<SetPartition> = set_partitions(m)?.collect();
    let features: Vec<SetPartition> = set_partitions(m + 1)?
        .filter(|p| compatible(spec, p))
        .collect();
    let mut out = Vec::with_capacity(samples.len() * features.len());
    for s in &samples {
        for f in &features {
            out.push(StratumKey {
                samples: s.clone(),
                features: f.clone(),
            });
        }
    }
    Ok(out)
}

fn compatible(spec: &ProductSpec, features: &SetPartition) -> bool {
    let pattern = spec.pattern();
    (0..features.ground_size()).all(|r| {
        (r + 1..features.ground_size())
            .all(|t| !features.same_block(r, t) || pattern.equal(r, t))
    })
}

pub fn stratum_contribution(spec: &ProductSpec, key: &StratumKey) -> Result<ExpectationMatrix> {
    stratum_contribution_with(spec, key, &ExactOptions::default())
}

/// The part of `E[M]` coming from feature tuples whose equality pattern is
/// exactly `key.features` and sample tuples whose equality pattern is
/// exactly `key.samples`.
pub fn stratum_contribution_with(
    spec: &ProductSpec,
    key: &StratumKey,
    opts: &ExactOptions,
) -> Result<ExpectationMatrix> {
    let m = spec.m();
    if key.samples.ground_size() != m {
        return Err(Error::InvalidStratum(format!(
            "sample partition has ground size {}, expected {m}",
            key.samples.ground_size()
        )));
    }
    if key.features.ground_size() != m + 1 {
        return Err(Error::InvalidStratum(format!(
            "feature partition has ground size {}, expected {}",
            key.features.ground_size(),
            m + 1
        )));
    }
    if !compatible(spec, &key.features) {
        return Err(Error::InvalidStratum(format!(
            "feature partition {} merges positions with different families (pattern {})",
            key.features,
            spec.pattern()
        )));
    }
    check_budget(spec, opts.budget)?;
    expand(spec, std::slice::from_ref(&key.samples), Some(&key.features), opts.execution)
}

struct SamplePartition {
    blocks: Vec<u32>,
    count: u128,
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    // Neumaier's variant of Kahan summation
    #[inline]
    fn add(&mut self, x: f64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn expand(
    spec: &ProductSpec,
    sample_partitions: &[SetPartition],
    feature_filter: Option<&SetPartition>,
    exec: Execution,
) -> Result<ExpectationMatrix> {
    let m = spec.m();
    let n = spec.n() as u64;
    let chain = spec.chain();
    let members: Vec<&[SubsetMask]> = chain.iter().map(|w| w.family().members()).collect();
    let weights: Vec<&[f64]> = chain.iter().map(|w| w.weights()).collect();
    let classes = spec.pattern().classes();

    let partitions: Vec<SamplePartition> = sample_partitions
        .iter()
        .map(|p| {
            checked_falling_factorial(n, p.num_blocks())
                .map(|count| SamplePartition {
                    blocks: p.block_masks(),
                    count,
                })
                .ok_or(Error::Overflow("falling factorial"))
        })
        .collect::<Result<_>>()?;

    let (rows, cols) = spec.shape();
    let middle_sizes: Vec<usize> = (1..m).map(|j| members[j].len()).collect();
    let middle_total: u128 = middle_sizes.iter().map(|&s| s as u128).product();
    let compensated = middle_total > COMPENSATION_THRESHOLD;
    let d = spec.dim();

    let row_results = exec.map_collect(rows, |k1| -> Result<Vec<f64>> {
        let mut out = vec![0.0; cols];
        if middle_sizes.contains(&0) {
            return Ok(out);
        }
        let mut tuple = vec![0usize; m + 1];
        tuple[0] = k1;
        let mut deltas = vec![SubsetMask::empty(d)?; m];
        let mut subset_xor = vec![SubsetMask::empty(d)?; 1 << m];
        let mut subset_zero = vec![true; 1 << m];
        let mut labels = vec![(0usize, 0usize); m + 1];
        for (kl, slot) in out.iter_mut().enumerate() {
            tuple[m] = kl;
            let mut acc = Accumulator {
                compensated,
                ..Default::default()
            };
            for v in tuple[1..m].iter_mut() {
                *v = 0;
            }
            loop {
                let keep = match feature_filter {
                    None => true,
                    Some(f) => {
                        for (r, l) in labels.iter_mut().enumerate() {
                            *l = (classes[r], tuple[r]);
                        }
                        SetPartition::from_labels(&labels) == *f
                    }
                };
                if keep {
                    for j in 0..m {
                        deltas[j] = members[j][tuple[j]].sym_diff(&members[j + 1][tuple[j + 1]]);
                    }
                    for t in 1usize..1 << m {
                        let low = t.trailing_zeros() as usize;
                        let rest = t & (t - 1);
                        let x = subset_xor[rest].sym_diff(&deltas[low]);
                        subset_zero[t] = x.is_empty();
                        subset_xor[t] = x;
                    }
                    let mut count: u128 = 0;
                    for p in &partitions {
                        if p.blocks.iter().all(|&b| subset_zero[b as usize]) {
                            count = count
                                .checked_add(p.count)
                                .ok_or(Error::Overflow("sample count"))?;
                        }
                    }
                    if count > 0 {
                        let mut w = count as f64;
                        for j in 1..m {
                            let wj = weights[j][tuple[j]];
                            w *= wj * wj;
                        }
                        acc.add(w);
                    }
                }
                // odometer over the middle positions 1..m
                if m == 1 {
                    break;
                }
                let mut pos = m - 1;
                let finished = loop {
                    tuple[pos] += 1;
                    if tuple[pos] < members[pos].len() {
                        break false;
                    }
                    tuple[pos] = 0;
                    if pos == 1 {
                        break true;
                    }
                    pos -= 1;
                };
                if finished {
                    break;
                }
            }
            *slot = weights[0][k1] * weights[m][kl] * acc.value();
        }
        Ok(out)
    });

    let mut values = Array2::zeros((rows, cols));
    for (k1, row) in row_results.into_iter().enumerate() {
        for (kl, v) in row?.into_iter().enumerate() {
            values[[k1, kl]] = v;
        }
    }
    Ok(ExpectationMatrix {
        values,
        meta: ExpectationMeta {
            method: Method::Exact,
            spec_hash: spec.spec_hash(),
            master_seed: None,
            trials: None,
            partitions: Some(partitions.len()),
        },
    })
}
