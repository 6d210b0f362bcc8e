//! Counting binary matrices `A ∈ {0,1}^{d×q}` with parity-constrained row
//! sums, by exhaustive bitmask scan and by a row-by-row dynamic program.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `d·q` accepted by the exhaustive scan.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// `Auto` scans exhaustively up to this many cells and uses the DP beyond.
const AUTO_SCAN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    #[default]
    Auto,
    Exhaustive,
    Dp,
}

/// A `d × q` binary matrix shape with per-column caps on the column sums
/// and a prescribed row-sum parity vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinMatrixSpec {
    d: usize,
    q: usize,
    caps: Vec<usize>,
    parity: Vec<u8>,
}

impl BinMatrixSpec {
    pub fn new(d: usize, q: usize, caps: &[usize], v: &[u8]) -> Result<Self> {
        if d == 0 || q == 0 {
            return Err(Error::InvalidArgument(format!("empty shape {d}x{q}")));
        }
        if q > 32 {
            return Err(Error::InvalidArgument(format!("q = {q} exceeds 32 columns")));
        }
        if caps.len() != q {
            return Err(Error::InvalidArgument(format!(
                "{} column caps for {q} columns",
                caps.len()
            )));
        }
        if v.len() != d {
            return Err(Error::InvalidArgument(format!(
                "parity vector of length {} for {d} rows",
                v.len()
            )));
        }
        if let Some(bad) = v.iter().find(|&&x| x > 1) {
            return Err(Error::InvalidArgument(format!("parity entry {bad} is not 0 or 1")));
        }
        Ok(BinMatrixSpec {
            d,
            q,
            caps: caps.to_vec(),
            parity: v.to_vec(),
        })
    }

    pub fn rows(&self) -> usize {
        self.d
    }

    pub fn cols(&self) -> usize {
        self.q
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn parity(&self) -> &[u8] {
        &self.parity
    }

    pub fn count(&self, mode: CountMode) -> Result<u128> {
        match resolve(mode, self.d, self.q) {
            CountMode::Exhaustive => {
                check_scan(self.d, self.q)?;
                Ok(constrained_scan(self))
            }
            _ => constrained_dp(self),
        }
    }
}

fn resolve(mode: CountMode, d: usize, q: usize) -> CountMode {
    match mode {
        CountMode::Auto if d * q <= AUTO_SCAN_CELLS => CountMode::Exhaustive,
        CountMode::Auto => CountMode::Dp,
        m => m,
    }
}

fn check_scan(d: usize, q: usize) -> Result<()> {
    if d == 0 || q == 0 || d * q > EXHAUSTIVE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exhaustive scan needs 1 <= d*q <= {EXHAUSTIVE_LIMIT}, got {d}x{q}"
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `m_p = |{A : ΣA = p, every row sum even}|`.
pub fn count_mp(d: usize, q: usize, p: usize) -> Result<u128> {
    count_mp_with(d, q, p, CountMode::Auto)
}

pub fn count_mp_with(d: usize, q: usize, p: usize, mode: CountMode) -> Result<u128> {
    if d == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!("empty shape {d}x{q}")));
    }
    match resolve(mode, d, q) {
        CountMode::Exhaustive => count_mp_exhaustive(d, q, p),
        _ => count_mp_dp(d, q, p),
    }
}

pub fn count_mp_exhaustive(d: usize, q: usize, p: usize) -> Result<u128> {
    check_scan(d, q)?;
    let row_mask = (1u64 << q) - 1;
    let mut count = 0u128;
    for code in 0u64..1 << (d * q) {
        if code.count_ones() as usize != p {
            continue;
        }
        if (0..d).all(|r| (code >> (r * q) & row_mask).count_ones() % 2 == 0) {
            count += 1;
        }
    }
    Ok(count)
}

/// Coefficient of `t^p` in `(Σ_k C(q, 2k) t^{2k})^d`.
pub fn count_mp_dp(d: usize, q: usize, p: usize) -> Result<u128> {
    if d == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!("empty shape {d}x{q}")));
    }
    if p > d * q {
        return Ok(0);
    }
    let row: Vec<u128> = (0..=q).map(|k| if k % 2 == 0 { binomial(q, k) } else { 0 }).collect();
    let mut poly = vec![0u128; p + 1];
    poly[0] = 1;
    for _ in 0..d {
        let mut next = vec![0u128; p + 1];
        for (i, &a) in poly.iter().enumerate().filter(|(_, &a)| a != 0) {
            for (k, &c) in row.iter().enumerate().take(p + 1 - i) {
                let term = a.checked_mul(c).ok_or(Error::Overflow("m_p"))?;
                next[i + k] = next[i + k].checked_add(term).ok_or(Error::Overflow("m_p"))?;
            }
        }
        poly = next;
    }
    Ok(poly[p])
}

/// `|{A : A·1 = v mod 2, Aᵀ·1 <= p}|` with per-column caps `p`.
pub fn count_constrained(d: usize, q: usize, caps: &[usize], v: &[u8]) -> Result<u128> {
    BinMatrixSpec::new(d, q, caps, v)?.count(CountMode::Auto)
}

pub fn count_constrained_exhaustive(d: usize, q: usize, caps: &[usize], v: &[u8]) -> Result<u128> {
    BinMatrixSpec::new(d, q, caps, v)?.count(CountMode::Exhaustive)
}

pub fn count_constrained_dp(d: usize, q: usize, caps: &[usize], v: &[u8]) -> Result<u128> {
    BinMatrixSpec::new(d, q, caps, v)?.count(CountMode::Dp)
}

fn constrained_scan(spec: &BinMatrixSpec) -> u128 {
    let (d, q) = (spec.d, spec.q);
    let row_mask = (1u64 << q) - 1;
    let mut count = 0u128;
    'outer: for code in 0u64..1 << (d * q) {
        for r in 0..d {
            if (code >> (r * q) & row_mask).count_ones() % 2 != spec.parity[r] as u32 {
                continue 'outer;
            }
        }
        for c in 0..q {
            let sum = (0..d).filter(|r| code >> (r * q + c) & 1 == 1).count();
            if sum > spec.caps[c] {
                continue 'outer;
            }
        }
        count += 1;
    }
    count
}

// Rows are added one at a time; the state is the vector of column loads.
fn constrained_dp(spec: &BinMatrixSpec) -> Result<u128> {
    let q = spec.q;
    let caps: Vec<usize> = spec.caps.iter().map(|&c| c.min(spec.d)).collect();
    let patterns: [Vec<u32>; 2] = {
        let mut by_parity = [Vec::new(), Vec::new()];
        for bits in 0u32..1 << q {
            by_parity[(bits.count_ones() % 2) as usize].push(bits);
        }
        by_parity
    };
    let mut states: BTreeMap<Vec<u8>, u128> = BTreeMap::new();
    states.insert(vec![0; q], 1);
    for &parity in &spec.parity {
        let mut next: BTreeMap<Vec<u8>, u128> = BTreeMap::new();
        for (loads, &ways) in &states {
            'pattern: for &bits in &patterns[parity as usize] {
                let mut new = loads.clone();
                for (c, load) in new.iter_mut().enumerate() {
                    if bits >> c & 1 == 1 {
                        *load += 1;
                        if *load as usize > caps[c] {
                            continue 'pattern;
                        }
                    }
                }
                let slot = next.entry(new).or_insert(0);
                *slot = slot.checked_add(ways).ok_or(Error::Overflow("constrained count"))?;
            }
        }
        states = next;
    }
    states
        .values()
        .try_fold(0u128, |acc, &w| acc.checked_add(w))
        .ok_or(Error::Overflow("constrained count"))
}

/// One exhaustive scan of `{0,1}^{d×q}` tabulated by (column sums, row
/// parity bitmask), answering every cap/parity query on that shape.
#[derive(Debug, Clone)]
pub struct ExhaustiveTable {
    d: usize,
    q: usize,
    counts: HashMap<(Vec<u8>, u32), u128>,
}

impl ExhaustiveTable {
    pub fn build(d: usize, q: usize) -> Result<Self> {
        check_scan(d, q)?;
        let row_mask = (1u64 << q) - 1;
        let mut counts = HashMap::new();
        for code in 0u64..1 << (d * q) {
            let mut parity = 0u32;
            let mut cols = vec![0u8; q];
            for r in 0..d {
                let row = code >> (r * q) & row_mask;
                parity |= (row.count_ones() & 1) << r;
                for (c, col) in cols.iter_mut().enumerate() {
                    *col += (row >> c & 1) as u8;
                }
            }
            *counts.entry((cols, parity)).or_insert(0u128) += 1;
        }
        Ok(ExhaustiveTable { d, q, counts })
    }

    pub fn count_mp(&self, p: usize) -> u128 {
        self.counts
            .iter()
            .filter(|((cols, parity), _)| *parity == 0 && cols.iter().map(|&c| c as usize).sum::<usize>() == p)
            .map(|(_, &n)| n)
            .sum()
    }

    pub fn count_constrained(&self, caps: &[usize], v: &[u8]) -> Result<u128> {
        let spec = BinMatrixSpec::new(self.d, self.q, caps, v)?;
        let want = spec
            .parity
            .iter()
            .enumerate()
            .fold(0u32, |acc, (r, &b)| acc | (b as u32) << r);
        Ok(self
            .counts
            .iter()
            .filter(|((cols, parity), _)| {
                *parity == want && cols.iter().zip(&spec.caps).all(|(&c, &cap)| c as usize <= cap)
            })
            .map(|(_, &n)| n)
            .sum())
    }
}

/// `(q² d)^{p/2}`.
pub fn mp_bound(d: usize, q: usize, p: usize) -> f64 {
    ((q * q * d) as f64).powf(p as f64 / 2.0)
}

/// `2^{q‖v‖₁ + 2} (q² d)^{(‖p‖₁ − ‖v‖₁)/2}`.
pub fn constrained_bound(d: usize, q: usize, caps: &[usize], v: &[u8]) -> f64 {
    let s = v.iter().map(|&b| b as usize).sum::<usize>();
    let total = caps.iter().sum::<usize>();
    let exponent = (total as f64 - s as f64) / 2.0;
    2f64.powi((q * s + 2) as i32) * ((q * q * d) as f64).powf(exponent)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionStep {
    pub p: usize,
    pub m_p: u128,
    pub m_p_minus_2: u128,
    /// `d·C(q,2)`.
    pub factor: u128,
    /// `m_p / m_{p-2}`, absent when `m_{p-2} = 0`.
    pub ratio: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionReport {
    pub d: usize,
    pub q: usize,
    pub p_max: usize,
    pub steps: Vec<RecursionStep>,
    pub pass: bool,
}

/// Checks `m_p <= d·C(q,2)·m_{p-2}` for every even `2 <= p <= p_max`.
pub fn check_recursion(d: usize, q: usize, p_max: usize) -> Result<RecursionReport> {
    let factor = d as u128 * binomial(q, 2);
    let mut steps = Vec::new();
    let mut prev = count_mp(d, q, 0)?;
    for p in (2..=p_max).step_by(2) {
        let m_p = count_mp(d, q, p)?;
        let bound = factor.checked_mul(prev).ok_or(Error::Overflow("recursion bound"))?;
        steps.push(RecursionStep {
            p,
            m_p,
            m_p_minus_2: prev,
            factor,
            ratio: (prev > 0).then(|| m_p as f64 / prev as f64),
            holds: m_p <= bound,
        });
        prev = m_p;
    }
    let pass = steps.iter().all(|s| s.holds);
    Ok(RecursionReport {
        d,
        q,
        p_max,
        steps,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mp_examples() {
        for (d, q) in [(1, 1), (2, 3), (3, 2), (4, 4)] {
            for p in [1, 3, 5] {
                assert_eq!(count_mp_exhaustive(d, q, p).unwrap(), 0);
                assert_eq!(count_mp_dp(d, q, p).unwrap(), 0);
            }
            assert_eq!(count_mp(d, q, 0).unwrap(), 1);
        }
        assert_eq!(count_mp_exhaustive(2, 2, 2).unwrap(), 2);
        assert_eq!(count_mp_dp(2, 2, 2).unwrap(), 2);
        // one column: rows have a single cell, which must be zero
        assert_eq!(count_mp(5, 1, 2).unwrap(), 0);
        assert!(count_mp_exhaustive(5, 5, 2).is_err());
        assert_eq!(count_mp(40, 6, 4).unwrap(), count_mp_dp(40, 6, 4).unwrap());
    }

    #[test]
    fn constrained_examples() {
        assert_eq!(count_constrained(3, 2, &[0, 0], &[0, 0, 0]).unwrap(), 1);
        assert_eq!(count_constrained_exhaustive(2, 1, &[1], &[1, 0]).unwrap(), 1);
        assert_eq!(count_constrained_dp(2, 1, &[1], &[1, 0]).unwrap(), 1);
        assert!(count_constrained(2, 1, &[1], &[1, 0, 0]).is_err());
        assert!(count_constrained(2, 1, &[1], &[2, 0]).is_err());
        assert!(count_constrained(2, 2, &[1], &[0, 0]).is_err());
    }

    #[test]
    fn recursion_examples() {
        let r = check_recursion(1, 2, 4).unwrap();
        assert!(r.pass);
        assert_eq!(r.steps[0].m_p, 1);
        assert_eq!(r.steps[1].m_p, 0);
        assert_eq!(r.steps[0].ratio, Some(1.0));
        let r = check_recursion(3, 1, 6).unwrap();
        assert!(r.pass);
        assert!(r.steps.iter().all(|s| s.m_p == 0));
        let r = check_recursion(4, 3, 0).unwrap();
        assert!(r.pass && r.steps.is_empty());
        for d in 1..=4 {
            for q in 1..=4 {
                assert!(check_recursion(d, q, 8).unwrap().pass);
            }
        }
    }

    #[test]
    fn table_matches_direct_scan() {
        let t = ExhaustiveTable::build(3, 2).unwrap();
        for p in 0..=6 {
            assert_eq!(t.count_mp(p), count_mp_exhaustive(3, 2, p).unwrap());
        }
        for v in 0u8..8 {
            let v: Vec<u8> = (0..3).map(|r| v >> r & 1).collect();
            for caps in [[0, 0], [1, 2], [3, 3], [2, 0]] {
                assert_eq!(
                    t.count_constrained(&caps, &v).unwrap(),
                    count_constrained_exhaustive(3, 2, &caps, &v).unwrap()
                );
            }
        }
    }

    proptest! {
        #[test]
        fn dp_matches_scan(d in 1usize..5, q in 1usize..5, p in 0usize..10) {
            prop_assert_eq!(count_mp_exhaustive(d, q, p).unwrap(), count_mp_dp(d, q, p).unwrap());
            prop_assert!(count_mp_dp(d, q, p).unwrap() as f64 <= mp_bound(d, q, p));
        }

        #[test]
        fn constrained_dp_matches_scan(
            (d, q, caps, v) in (1usize..5, 1usize..5).prop_flat_map(|(d, q)| {
                (Just(d), Just(q), proptest::collection::vec(0usize..5, q), proptest::collection::vec(0u8..2, d))
            })
        ) {
            let scan = count_constrained_exhaustive(d, q, &caps, &v).unwrap();
            prop_assert_eq!(scan, count_constrained_dp(d, q, &caps, &v).unwrap());
            prop_assert!(scan as f64 <= constrained_bound(d, q, &caps, &v));
        }
    }
}
