//! Set families `𝒮_i`, their weights, blocked families, and the
//! trivial-intersection check on chains.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::hypercube::SubsetMask;

/// An ordered list of distinct subsets of `[d]`. The order fixes the column
/// indexing of the corresponding Fourier-Walsh matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFamily {
    d: usize,
    members: Vec<SubsetMask>,
    degree_bound: usize,
}

impl SetFamily {
    /// Degree bound is the largest member degree (0 for an empty family).
    pub fn new(d: usize, members: Vec<SubsetMask>) -> Result<Self> {
        let p = members.iter().map(SubsetMask::degree).max().unwrap_or(0);
        Self::with_degree_bound(d, members, p)
    }

    /// Like [`SetFamily::new`] but with an explicit bound `p >= |S|`.
    pub fn with_degree_bound(d: usize, members: Vec<SubsetMask>, p: usize) -> Result<Self> {
        SubsetMask::empty(d)?;
        let mut seen = HashSet::with_capacity(members.len());
        for s in &members {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: s.dim(),
                });
            }
            if s.degree() > p {
                return Err(Error::InvalidFamily(format!(
                    "member {s} has degree {} above the bound {p}",
                    s.degree()
                )));
            }
            if !seen.insert(*s) {
                return Err(Error::InvalidFamily(format!("duplicate member {s}")));
            }
        }
        Ok(SetFamily {
            d,
            members,
            degree_bound: p,
        })
    }

    /// Family from coordinate lists.
    pub fn from_index_lists(d: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let members = lists
            .iter()
            .map(|l| SubsetMask::from_indices(d, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, members)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SubsetMask] {
        &self.members
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn position(&self, s: &SubsetMask) -> Option<usize> {
        self.members.iter().position(|m| m == s)
    }
}

/// A family together with one nonnegative weight per member.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFamily {
    family: SetFamily,
    weights: Vec<f64>,
}

impl WeightedFamily {
    /// Weights must be finite and nonnegative, one per member.
    pub fn new(family: SetFamily, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != family.len() {
            return Err(Error::InvalidFamily(format!(
                "{} weights for a family of {} members",
                weights.len(),
                family.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidFamily(format!("weight {w} is not a finite nonnegative number")));
        }
        Ok(WeightedFamily { family, weights })
    }

    /// Every member gets weight `w`.
    pub fn uniform(family: SetFamily, w: f64) -> Result<Self> {
        let weights = vec![w; family.len()];
        Self::new(family, weights)
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `‖w‖_∞`.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Same family with every weight multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.family.clone(),
            self.weights.iter().map(|w| w * c).collect(),
        )
    }
}

/// Upper envelope `c · min(n^{-1/2}, d^{-p/2})` of the small-weights
/// condition. `p` may be fractional (effective degree of blocked families).
pub fn small_weight(n: usize, d: usize, p: f64, c: f64) -> f64 {
    c * (1.0 / (n as f64).sqrt()).min((d as f64).powf(-p / 2.0))
}

fn combinations(pool: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        if pool.len() < start + need {
            return;
        }
        for i in start..=pool.len() - need {
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(pool, k, 0, &mut Vec::with_capacity(k), out);
}

/// All `k`-subsets of `coords` for each `k` in `sizes`, grouped by size in
/// the order given and lexicographic within a size.
pub fn subsets_within(d: usize, coords: &[usize], sizes: &[usize]) -> Result<SetFamily> {
    let mut pool = coords.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut lists = Vec::new();
    for &k in sizes {
        if k > pool.len() {
            return Err(Error::InvalidFamily(format!(
                "subset size {k} exceeds the {} available coordinates",
                pool.len()
            )));
        }
        combinations(&pool, k, &mut lists);
    }
    SetFamily::from_index_lists(d, &lists)
}

/// All subsets of `[d]` whose size is in `sizes`: `Σ C(d, k)` members.
pub fn all_subsets_of_size(d: usize, sizes: &[usize]) -> Result<SetFamily> {
    let coords: Vec<usize> = (0..d).collect();
    subsets_within(d, &coords, sizes)
}

/// Disjoint coordinate blocks `𝒯_1, .., 𝒯_ℓ` with growth exponents `s_k`
/// (`|𝒯_k| ≈ d^{s_k}`) and per-block degree caps.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructure {
    d: usize,
    blocks: Vec<SubsetMask>,
    exponents: Vec<f64>,
    degree_caps: Vec<usize>,
}

impl BlockStructure {
    /// Explicit blocks; they must be pairwise disjoint and nonempty.
    pub fn new(
        d: usize,
        blocks: Vec<SubsetMask>,
        exponents: Vec<f64>,
        degree_caps: Vec<usize>,
    ) -> Result<Self> {
        SubsetMask::empty(d)?;
        if blocks.len() != exponents.len() || blocks.len() != degree_caps.len() {
            return Err(Error::InvalidFamily(
                "blocks, exponents and degree caps must have equal length".into(),
            ));
        }
        if let Some(s) = exponents.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidFamily(format!("block exponent {s} outside [0, 1]")));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: b.dim(),
                });
            }
            if b.is_empty() {
                return Err(Error::InvalidFamily(format!("block {i} is empty")));
            }
            for (j, c) in blocks.iter().enumerate().skip(i + 1) {
                if !b.is_disjoint(c) {
                    return Err(Error::InvalidFamily(format!("blocks {i} and {j} overlap")));
                }
            }
        }
        Ok(BlockStructure {
            d,
            blocks,
            exponents,
            degree_caps,
        })
    }

    /// Contiguous blocks of sizes `round(d^{s_k})`, assigned in increasing
    /// order of `s_k`, each clipped to `[1, remaining - blocks still to
    /// place]` so every block gets at least one coordinate.
    pub fn from_exponents(d: usize, exponents: &[f64], degree_caps: &[usize]) -> Result<Self> {
        if exponents.len() > d {
            return Err(Error::InvalidFamily(format!(
                "{} blocks do not fit in dimension {d}",
                exponents.len()
            )));
        }
        let mut order: Vec<usize> = (0..exponents.len()).collect();
        order.sort_by(|&a, &b| exponents[a].total_cmp(&exponents[b]).then(a.cmp(&b)));
        let mut sizes = vec![0usize; exponents.len()];
        let mut remaining = d;
        for (placed, &k) in order.iter().enumerate() {
            let still_to_place = exponents.len() - placed - 1;
            let target = (d as f64).powf(exponents[k]).round() as usize;
            let size = target.clamp(1, remaining - still_to_place);
            sizes[k] = size;
            remaining -= size;
        }
        let mut start = 0;
        let mut blocks = Vec::with_capacity(sizes.len());
        for &size in &sizes {
            let coords: Vec<usize> = (start..start + size).collect();
            blocks.push(SubsetMask::from_indices(d, &coords)?);
            start += size;
        }
        Self::new(d, blocks, exponents.to_vec(), degree_caps.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[SubsetMask] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(SubsetMask::degree).collect()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn degree_caps(&self) -> &[usize] {
        &self.degree_caps
    }
}

/// A family generated by [`blocked_family`] plus its degree bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockedFamily {
    pub family: SetFamily,
    /// `Σ_k s_k · p^{[k]}`.
    pub effective_degree: f64,
    /// `Σ_k p^{[k]}`.
    pub naive_degree: usize,
}

/// All disjoint unions `⊔_k S^{[k]}` with `S^{[k]} ⊂ 𝒯_k` of size
/// `per_block_sizes[k]`. The first block varies slowest.
pub fn blocked_family(structure: &BlockStructure, per_block_sizes: &[usize]) -> Result<BlockedFamily> {
    let d = structure.d;
    if per_block_sizes.len() != structure.blocks.len() {
        return Err(Error::InvalidFamily(format!(
            "{} per-block sizes for {} blocks",
            per_block_sizes.len(),
            structure.blocks.len()
        )));
    }
    let mut parts: Vec<Vec<Vec<usize>>> = Vec::new();
    for (k, (&size, block)) in per_block_sizes.iter().zip(&structure.blocks).enumerate() {
        if size > structure.degree_caps[k] {
            return Err(Error::InvalidFamily(format!(
                "size {size} exceeds the degree cap {} of block {k}",
                structure.degree_caps[k]
            )));
        }
        let coords = block.to_index_vec();
        if size > coords.len() {
            return Err(Error::InvalidFamily(format!(
                "size {size} exceeds block {k} of {} coordinates",
                coords.len()
            )));
        }
        let mut lists = Vec::new();
        combinations(&coords, size, &mut lists);
        parts.push(lists);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new()];
    for part in &parts {
        let mut next = Vec::with_capacity(members.len() * part.len());
        for m in &members {
            for p in part {
                let mut u = m.clone();
                u.extend_from_slice(p);
                next.push(u);
            }
        }
        members = next;
    }
    let naive_degree = per_block_sizes.iter().sum();
    let effective_degree = per_block_sizes
        .iter()
        .zip(&structure.exponents)
        .map(|(&p, s)| s * p as f64)
        .sum();
    let lists: Vec<Vec<usize>> = members;
    let family = SetFamily::with_degree_bound(
        d,
        lists
            .iter()
            .map(|l| SubsetMask::from_indices(d, l))
            .collect::<Result<Vec<_>>>()?,
        naive_degree,
    )?;
    Ok(BlockedFamily {
        family,
        effective_degree,
        naive_degree,
    })
}

/// Which positions of a chain carry the same family. `classes[i]` is the
/// canonical class label of position `i` (first occurrence order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EqualityPattern {
    classes: Vec<usize>,
}

impl EqualityPattern {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn equal(&self, i: usize, j: usize) -> bool {
        self.classes[i] == self.classes[j]
    }
}

impl fmt::Display for EqualityPattern {
    /// 1-based groups of equal positions, e.g. `{1=3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, &c) in self.classes.iter().enumerate() {
            if c == groups.len() {
                groups.push(Vec::new());
            }
            groups[c].push(i + 1);
        }
        let shown: Vec<String> = groups
            .iter()
            .filter(|g| g.len() > 1)
            .map(|g| g.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("="))
            .collect();
        write!(f, "{{{}}}", shown.join(", "))
    }
}

/// Checks the trivial-intersection condition: any two families are either
/// identical (as ordered lists) or share no member.
pub fn validate_chain(families: &[&SetFamily]) -> Result<EqualityPattern> {
    if let Some(first) = families.first() {
        for f in families {
            if f.d != first.d {
                return Err(Error::DimensionMismatch {
                    left: first.d,
                    right: f.d,
                });
            }
        }
    }
    let mut classes: Vec<usize> = Vec::with_capacity(families.len());
    let mut representatives: Vec<usize> = Vec::new();
    let mut lookup: Vec<HashMap<SubsetMask, usize>> = Vec::new();
    for (i, f) in families.iter().enumerate() {
        let mut class = None;
        for (c, &rep) in representatives.iter().enumerate() {
            let g = families[rep];
            if g.members == f.members {
                class = Some(c);
                break;
            }
            if let Some(shared) = f.members.iter().find(|s| lookup[c].contains_key(s)) {
                return Err(Error::TrivialIntersectionViolation {
                    first: rep,
                    second: i,
                    member: *shared,
                });
            }
        }
        let c = match class {
            Some(c) => c,
            None => {
                representatives.push(i);
                lookup.push(f.members.iter().enumerate().map(|(k, s)| (*s, k)).collect());
                representatives.len() - 1
            }
        };
        classes.push(c);
    }
    Ok(EqualityPattern { classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn all_subsets_examples() {
        let singles = all_subsets_of_size(4, &[1]).unwrap();
        assert_eq!(singles.len(), 4);
        let pairs = all_subsets_of_size(4, &[2]).unwrap();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs.members()[0].to_index_vec(), vec![0, 1]);
        assert_eq!(pairs.members()[1].to_index_vec(), vec![0, 2]);
        assert_eq!(pairs.members()[5].to_index_vec(), vec![2, 3]);
        let empty = all_subsets_of_size(3, &[0]).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty.members()[0].is_empty());
        assert!(all_subsets_of_size(3, &[4]).is_err());
    }

    #[test]
    fn generated_counts_and_degree_bounds() {
        for d in 1..=8 {
            for sizes in [vec![0], vec![1], vec![2], vec![1, 2], vec![0, 1, 3]] {
                if sizes.iter().any(|&k| k > d) {
                    continue;
                }
                let f = all_subsets_of_size(d, &sizes).unwrap();
                let expected: usize = sizes.iter().map(|&k| binom(d, k)).sum();
                assert_eq!(f.len(), expected);
                assert_eq!(f.degree_bound(), *sizes.iter().max().unwrap());
            }
        }
    }

    #[test]
    fn family_validation() {
        let s = SubsetMask::from_indices(3, &[0]).unwrap();
        assert!(SetFamily::new(3, vec![s, s]).is_err());
        assert!(SetFamily::with_degree_bound(3, vec![SubsetMask::full(3).unwrap()], 2).is_err());
        assert!(SetFamily::new(3, vec![SubsetMask::empty(4).unwrap()]).is_err());
        let f = SetFamily::new(3, vec![s]).unwrap();
        assert!(WeightedFamily::new(f.clone(), vec![]).is_err());
        assert!(WeightedFamily::new(f.clone(), vec![-1.0]).is_err());
        assert!(WeightedFamily::new(f.clone(), vec![f64::NAN]).is_err());
        assert_eq!(WeightedFamily::new(f, vec![0.5]).unwrap().max_weight(), 0.5);
    }

    #[test]
    fn blocked_examples() {
        let d = 4;
        let st = BlockStructure::new(
            d,
            vec![
                SubsetMask::from_indices(d, &[0, 1]).unwrap(),
                SubsetMask::from_indices(d, &[2, 3]).unwrap(),
            ],
            vec![0.5, 0.5],
            vec![1, 1],
        )
        .unwrap();
        assert_eq!(blocked_family(&st, &[1, 1]).unwrap().family.len(), 4);

        // one block covering [d] reduces to all subsets of the given size
        let one = BlockStructure::from_exponents(6, &[1.0], &[2]).unwrap();
        let bf = blocked_family(&one, &[2]).unwrap();
        assert_eq!(bf.family, all_subsets_of_size(6, &[2]).unwrap());
        assert_eq!(bf.effective_degree, 2.0);

        let d = 5;
        let st = BlockStructure::new(
            d,
            vec![
                SubsetMask::from_indices(d, &[0, 1]).unwrap(),
                SubsetMask::from_indices(d, &[2, 3, 4]).unwrap(),
            ],
            vec![1.0, 0.5],
            vec![1, 2],
        )
        .unwrap();
        let bf = blocked_family(&st, &[1, 2]).unwrap();
        assert_eq!(bf.family.len(), 6);
        assert!(bf.family.members().iter().all(|s| s.degree() == 3));
        assert_eq!(bf.effective_degree, 2.0);
        assert_eq!(bf.naive_degree, 3);
        assert!(blocked_family(&st, &[3, 0]).is_err());
        assert!(blocked_family(&st, &[1]).is_err());
    }

    #[test]
    fn blocked_count_matches_direct_enumeration() {
        for d in [6usize, 9, 16, 25] {
            let st = BlockStructure::from_exponents(d, &[1.0, 0.5], &[2, 2]).unwrap();
            let sizes = st.block_sizes();
            assert_eq!(sizes.iter().sum::<usize>(), d);
            assert_eq!(sizes[1], ((d as f64).sqrt().round() as usize).max(1));
            for per in [[1usize, 1], [2, 1], [0, 2]] {
                let bf = blocked_family(&st, &per).unwrap();
                assert_eq!(bf.family.len(), binom(sizes[0], per[0]) * binom(sizes[1], per[1]));
                // direct enumeration: every subset of [d] with the right block profile
                let mut direct = 0;
                for bits in 0u64..1 << d.min(16) {
                    if d > 16 {
                        break;
                    }
                    let s = SubsetMask::from_indices(
                        d,
                        &(0..d).filter(|i| bits >> i & 1 == 1).collect::<Vec<_>>(),
                    )
                    .unwrap();
                    let ok = st
                        .blocks()
                        .iter()
                        .zip(per)
                        .all(|(b, p)| s.intersection(b).unwrap().degree() == p)
                        && s.degree() == per.iter().sum::<usize>();
                    direct += ok as usize;
                }
                if d <= 16 {
                    assert_eq!(bf.family.len(), direct, "d={d} per={per:?}");
                }
            }
        }
    }

    #[test]
    fn block_structure_rejects_overlap() {
        let d = 4;
        let a = SubsetMask::from_indices(d, &[0, 1]).unwrap();
        let b = SubsetMask::from_indices(d, &[1, 2]).unwrap();
        assert!(BlockStructure::new(d, vec![a, b], vec![1.0, 1.0], vec![1, 1]).is_err());
        assert!(BlockStructure::new(d, vec![a], vec![1.5], vec![1]).is_err());
        assert!(BlockStructure::from_exponents(2, &[1.0, 1.0, 1.0], &[1, 1, 1]).is_err());
    }

    #[test]
    fn validate_chain_examples() {
        let singles = all_subsets_of_size(4, &[1]).unwrap();
        let pairs = all_subsets_of_size(4, &[2]).unwrap();
        let p = validate_chain(&[&singles, &pairs, &singles]).unwrap();
        assert_eq!(p.classes(), &[0, 1, 0]);
        assert_eq!(p.to_string(), "{1=3}");
        let p = validate_chain(&[&singles, &singles]).unwrap();
        assert_eq!(p.to_string(), "{1=2}");

        let a = SetFamily::from_index_lists(4, &[vec![0], vec![1]]).unwrap();
        let b = SetFamily::from_index_lists(4, &[vec![1], vec![2]]).unwrap();
        match validate_chain(&[&a, &b]) {
            Err(Error::TrivialIntersectionViolation { first, second, member }) => {
                assert_eq!((first, second), (0, 1));
                assert_eq!(member.to_index_vec(), vec![1]);
            }
            other => panic!("unexpected {other:?}"),
        }
        // same members in a different order are not the same family
        let c = SetFamily::from_index_lists(4, &[vec![1], vec![0]]).unwrap();
        assert!(validate_chain(&[&a, &c]).is_err());
    }

    #[test]
    fn validate_chain_matches_pairwise_definition() {
        let d = 3;
        let pool: Vec<Vec<usize>> = vec![vec![], vec![0], vec![1], vec![0, 1], vec![2], vec![1, 2]];
        // every family that is a nonempty sub-list of `pool` in pool order
        let fams: Vec<SetFamily> = (1u32..1 << pool.len())
            .map(|bits| {
                let lists: Vec<Vec<usize>> = (0..pool.len())
                    .filter(|i| bits >> i & 1 == 1)
                    .map(|i| pool[i].clone())
                    .collect();
                SetFamily::from_index_lists(d, &lists).unwrap()
            })
            .collect();
        for a in &fams {
            for b in &fams {
                let shared = a.members().iter().any(|s| b.members().contains(s));
                let ok = !shared || a == b;
                assert_eq!(validate_chain(&[a, b]).is_ok(), ok);
            }
        }
    }

    #[test]
    fn small_weight_envelope() {
        assert_eq!(small_weight(64, 4, 2.0, 1.0), 0.125);
        assert_eq!(small_weight(4, 16, 2.0, 1.0), 1.0 / 16.0);
        assert_eq!(small_weight(4, 16, 2.0, 2.0), 2.0 / 16.0);
    }
}
