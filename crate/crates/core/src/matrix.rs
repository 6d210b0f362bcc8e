//! Empirical Fourier-Walsh matrices, realized chain products
//! `M = A_1ᵀ (A_2 A_2ᵀ) ⋯ (A_m A_mᵀ) A_{m+1}` and the Monte Carlo estimator of
//! `E[M]`.

use ndarray::{Array2, Zip};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::family::{validate_chain, EqualityPattern, SetFamily, WeightedFamily};
use crate::hypercube::{derive_seed, sample_dataset, Dataset};

/// The data defining `M`: the sample count `n` and the weighted families
/// `A_1, .., A_{m+1}` (so `m = chain.len() - 1 >= 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpec {
    n: usize,
    chain: Vec<WeightedFamily>,
    pattern: EqualityPattern,
}

impl ProductSpec {
    pub fn new(n: usize, chain: Vec<WeightedFamily>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        if chain.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a chain needs at least two factors, got {}",
                chain.len()
            )));
        }
        let families: Vec<&SetFamily> = chain.iter().map(WeightedFamily::family).collect();
        let pattern = validate_chain(&families)?;
        Ok(ProductSpec { n, chain, pattern })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of factors minus one.
    pub fn m(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.chain[0].family().dim()
    }

    pub fn chain(&self) -> &[WeightedFamily] {
        &self.chain
    }

    pub fn pattern(&self) -> &EqualityPattern {
        &self.pattern
    }

    /// `(|𝒮_1|, |𝒮_{m+1}|)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.chain[0].family().len(), self.chain[self.m()].family().len())
    }

    /// Same chain with a different sample count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.chain.clone())
    }

    /// Hex SHA-256 of a canonical text rendering of `(n, families, weights)`;
    /// weights are hashed by their IEEE-754 bit patterns.
    pub fn spec_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("walshprod-spec-v1;n={};d={};", self.n, self.dim()));
        for (i, wf) in self.chain.iter().enumerate() {
            h.update(format!("pos={i};"));
            for (s, w) in wf.family().members().iter().zip(wf.weights()) {
                h.update(format!("{:?}:{:016x};", s.to_index_vec(), w.to_bits()));
            }
        }
        hex::encode(h.finalize())
    }
}

/// `X_𝒮`: entry `(i, S)` is `x^{(i)}` evaluated on the monomial `x^S`.
pub fn build_x(family: &SetFamily, data: &Dataset) -> Result<Array2<f64>> {
    if family.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: family.dim(),
            right: data.dim(),
        });
    }
    let members = family.members();
    Ok(Array2::from_shape_fn((data.n(), members.len()), |(i, k)| {
        data.rows()[i].eval_unchecked(&members[k])
    }))
}

/// `A = X_𝒮 Diag(w)`.
pub fn build_a(wf: &WeightedFamily, data: &Dataset) -> Result<Array2<f64>> {
    let mut x = build_x(wf.family(), data)?;
    for (mut col, &w) in x.columns_mut().into_iter().zip(wf.weights()) {
        col *= w;
    }
    Ok(x)
}

/// Parenthesization used by [`realize_m_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// Pick the cheaper of the two orders below by flop count.
    Auto,
    /// `A_1ᵀ · (A_2 A_2ᵀ) ⋯ (A_m A_mᵀ) · A_{m+1}` left to right, with explicit
    /// `n × n` Gram matrices.
    Gram,
    /// `(A_1ᵀ A_2)(A_2ᵀ A_3) ⋯ (A_mᵀ A_{m+1})` left to right.
    Feature,
}

fn flop_estimates(spec: &ProductSpec) -> (f64, f64) {
    let n = spec.n as f64;
    let sizes: Vec<f64> = spec.chain.iter().map(|w| w.family().len() as f64).collect();
    let m = spec.m();
    let (k1, kl) = (sizes[0], sizes[m]);
    let mut gram = k1 * n * kl;
    for s in &sizes[1..m] {
        gram += n * n * s + k1 * n * n;
    }
    let mut feature = 0.0;
    for j in 0..m {
        feature += n * sizes[j] * sizes[j + 1];
        if j > 0 {
            feature += k1 * sizes[j] * sizes[j + 1];
        }
    }
    (gram, feature)
}

/// Realizes `M` on a dataset, choosing the association order automatically.
pub fn realize_m(spec: &ProductSpec, data: &Dataset) -> Result<Array2<f64>> {
    realize_m_with(spec, data, Association::Auto)
}

pub fn realize_m_with(spec: &ProductSpec, data: &Dataset, order: Association) -> Result<Array2<f64>> {
    if data.n() != spec.n {
        return Err(Error::DimensionMismatch {
            left: spec.n,
            right: data.n(),
        });
    }
    let order = match order {
        Association::Auto => {
            let (gram, feature) = flop_estimates(spec);
            if gram < feature {
                Association::Gram
            } else {
                Association::Feature
            }
        }
        o => o,
    };
    let a: Vec<Array2<f64>> = spec
        .chain
        .iter()
        .map(|wf| build_a(wf, data))
        .collect::<Result<_>>()?;
    let m = spec.m();
    let out = match order {
        Association::Gram => {
            let mut t = a[0].t().to_owned();
            for aj in &a[1..m] {
                let gram = aj.dot(&aj.t());
                t = t.dot(&gram);
            }
            t.dot(&a[m])
        }
        _ => {
            let mut t = a[0].t().dot(&a[1]);
            for j in 1..m {
                t = t.dot(&a[j].t().dot(&a[j + 1]));
            }
            t
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationMeta {
    pub method: Method,
    pub spec_hash: String,
    pub master_seed: Option<u64>,
    pub trials: Option<usize>,
    /// Number of sample-index partitions summed over (exact engine).
    pub partitions: Option<usize>,
}

/// `E[M]` (or one stratum of it), rows indexed by `𝒮_1`, columns by
/// `𝒮_{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationMatrix {
    pub values: Array2<f64>,
    pub meta: ExpectationMeta,
}

impl ExpectationMatrix {
    pub fn max_abs_diff(&self, other: &Array2<f64>) -> f64 {
        Zip::from(&self.values)
            .and(other)
            .fold(0.0f64, |acc, a, b| acc.max((a - b).abs()))
    }
}

/// Monte Carlo estimate of `E[M]` with entrywise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: ExpectationMatrix,
    pub stderr: Array2<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

/// Trials per work item; fixed so that the reduction tree does not depend
/// on the thread count.
const MC_CHUNK: usize = 32;

struct Moments {
    count: usize,
    mean: Array2<f64>,
    m2: Array2<f64>,
}

impl Moments {
    fn new(shape: (usize, usize)) -> Self {
        Moments {
            count: 0,
            mean: Array2::zeros(shape),
            m2: Array2::zeros(shape),
        }
    }

    // Welford update
    fn push(&mut self, x: &Array2<f64>) {
        self.count += 1;
        let c = self.count as f64;
        Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(x)
            .for_each(|mean, m2, &x| {
                let delta = x - *mean;
                *mean += delta / c;
                *m2 += delta * (x - *mean);
            });
    }

    // Chan et al. pairwise combination
    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            self.count = other.count;
            self.mean.assign(&other.mean);
            self.m2.assign(&other.m2);
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(&other.mean)
            .and(&other.m2)
            .for_each(|ma, m2a, &mb, &m2b| {
                let delta = mb - *ma;
                *ma += delta * nb / n;
                *m2a += m2b + delta * delta * na * nb / n;
            });
        self.count += other.count;
    }
}

/// Average of [`realize_m`] over `trials` independent datasets.
///
/// Trial `t` uses the dataset `sample_dataset(n, d, derive_seed(master_seed, t))`.
pub fn mc_expected_m(spec: &ProductSpec, trials: usize, master_seed: u64) -> Result<McEstimate> {
    mc_expected_m_with(spec, trials, master_seed, Execution::default())
}

pub fn mc_expected_m_with(
    spec: &ProductSpec,
    trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo estimation needs at least 2 trials, got {trials}"
        )));
    }
    let shape = spec.shape();
    let chunks = trials.div_ceil(MC_CHUNK);
    let partial = exec.map_collect(chunks, |c| -> Result<Moments> {
        let mut acc = Moments::new(shape);
        for t in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(trials) {
            let data = sample_dataset(spec.n, spec.dim(), derive_seed(master_seed, t as u64))?;
            acc.push(&realize_m(spec, &data)?);
        }
        Ok(acc)
    });
    let mut total = Moments::new(shape);
    for p in partial {
        total.merge(&p?);
    }
    let denom = (trials as f64 - 1.0) * trials as f64;
    let stderr = total.m2.mapv(|m2| (m2.max(0.0) / denom).sqrt());
    Ok(McEstimate {
        mean: ExpectationMatrix {
            values: total.mean,
            meta: ExpectationMeta {
                method: Method::MonteCarlo,
                spec_hash: spec.spec_hash(),
                master_seed: Some(master_seed),
                trials: Some(trials),
                partitions: None,
            },
        },
        stderr,
        trials,
        master_seed,
    })
}
