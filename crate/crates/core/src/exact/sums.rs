//! Weighted sums over tuples of family members whose symmetric difference
//! equals a target set.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::family::SetFamily;
use crate::hypercube::SubsetMask;

use super::DEFAULT_BUDGET;

/// Predicate on member-index tuples `(k_1, .., k_q)`.
pub type TuplePredicate<'a> = &'a (dyn Fn(&[usize]) -> bool + Sync);

/// `Σ a[k_{q-1}] b[k_q]` over tuples `(S_{k_1}, .., S_{k_q})` drawn from the
/// families in order with `S_{k_1} Δ .. Δ S_{k_q} = target`, optionally
/// restricted by a predicate on the index tuple.
///
/// Missing `b` or `a` weights count as all ones; a missing target is `∅`.
#[derive(Clone)]
pub struct MonomialSum<'a> {
    families: &'a [SetFamily],
    last: Option<&'a [f64]>,
    penultimate: Option<&'a [f64]>,
    target: Option<SubsetMask>,
    constraint: Option<TuplePredicate<'a>>,
    budget: u128,
    execution: Execution,
}

impl<'a> MonomialSum<'a> {
    pub fn new(families: &'a [SetFamily]) -> Self {
        MonomialSum {
            families,
            last: None,
            penultimate: None,
            target: None,
            constraint: None,
            budget: DEFAULT_BUDGET,
            execution: Execution::default(),
        }
    }

    pub fn last_weights(mut self, b: &'a [f64]) -> Self {
        self.last = Some(b);
        self
    }

    pub fn penultimate_weights(mut self, a: &'a [f64]) -> Self {
        self.penultimate = Some(a);
        self
    }

    pub fn target(mut self, t: SubsetMask) -> Self {
        self.target = Some(t);
        self
    }

    pub fn constraint(mut self, f: TuplePredicate<'a>) -> Self {
        self.constraint = Some(f);
        self
    }

    pub fn budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self) -> Result<Option<usize>> {
        let q = self.families.len();
        let mut dim = self.target.map(|t| t.dim());
        for f in self.families {
            match dim {
                Some(d) if d != f.dim() => {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: f.dim(),
                    })
                }
                _ => dim = Some(f.dim()),
            }
        }
        if let Some(b) = self.last {
            let last = self
                .families
                .last()
                .ok_or_else(|| Error::InvalidArgument("last weights need q >= 1".into()))?;
            if b.len() != last.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} last weights for a family of {} members",
                    b.len(),
                    last.len()
                )));
            }
        }
        if let Some(a) = self.penultimate {
            if q < 2 {
                return Err(Error::InvalidArgument("penultimate weights need q >= 2".into()));
            }
            if a.len() != self.families[q - 2].len() {
                return Err(Error::InvalidArgument(format!(
                    "{} penultimate weights for a family of {} members",
                    a.len(),
                    self.families[q - 2].len()
                )));
            }
        }
        let weights = self.last.into_iter().chain(self.penultimate);
        if weights.flatten().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        let estimate = self
            .families
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128));
        if estimate > self.budget {
            return Err(Error::BudgetExceeded {
                estimate,
                cap: self.budget,
            });
        }
        Ok(dim)
    }

    pub fn evaluate(&self) -> Result<f64> {
        let Some(d) = self.validate()? else {
            return Ok(1.0);
        };
        let q = self.families.len();
        if q == 0 {
            return Ok(if self.target.is_none_or(|t| t.is_empty()) { 1.0 } else { 0.0 });
        }
        let target = match self.target {
            Some(t) => t,
            None => SubsetMask::empty(d)?,
        };
        let partials = self.execution.map_collect(self.families[0].len(), |k1| {
            let mut tuple = vec![0usize; q];
            tuple[0] = k1;
            let start = self.families[0].members()[k1].sym_diff(&target);
            let mut acc = 0.0;
            self.walk(1, start, &mut tuple, &mut |t| {
                let b = self.last.map_or(1.0, |b| b[t[q - 1]]);
                let a = self.penultimate.map_or(1.0, |a| a[t[q - 2]]);
                acc += a * b;
            });
            acc
        });
        Ok(partials.into_iter().sum())
    }

    /// Number of qualifying tuples, ignoring weights.
    pub fn count(&self) -> Result<u128> {
        let Some(d) = self.validate()? else {
            return Ok(1);
        };
        let q = self.families.len();
        if q == 0 {
            return Ok(u128::from(self.target.is_none_or(|t| t.is_empty())));
        }
        let target = match self.target {
            Some(t) => t,
            None => SubsetMask::empty(d)?,
        };
        let partials = self.execution.map_collect(self.families[0].len(), |k1| {
            let mut tuple = vec![0usize; q];
            tuple[0] = k1;
            let start = self.families[0].members()[k1].sym_diff(&target);
            let mut acc = 0u128;
            self.walk(1, start, &mut tuple, &mut |_| acc += 1);
            acc
        });
        Ok(partials.into_iter().sum())
    }

    // `residual` is the XOR of the target with the members chosen so far.
    fn walk(
        &self,
        pos: usize,
        residual: SubsetMask,
        tuple: &mut [usize],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let q = self.families.len();
        if pos == q {
            if residual.is_empty() && self.constraint.is_none_or(|c| c(tuple)) {
                visit(tuple);
            }
            return;
        }
        let members = self.families[pos].members();
        if pos == q - 1 {
            // the last member is forced to equal the residual
            for (k, s) in members.iter().enumerate() {
                if *s == residual {
                    tuple[pos] = k;
                    if self.constraint.is_none_or(|c| c(tuple)) {
                        visit(tuple);
                    }
                }
            }
            return;
        }
        for (k, s) in members.iter().enumerate() {
            tuple[pos] = k;
            self.walk(pos + 1, residual.sym_diff(s), tuple, visit);
        }
    }
}

/// `Σ a[k_{q-1}] b[k_q]` over tuples whose symmetric difference is `target`
/// (or `∅`).
pub fn weighted_monomial_sum(
    families: &[SetFamily],
    b: &[f64],
    a: Option<&[f64]>,
    target: Option<SubsetMask>,
    constraint: Option<TuplePredicate<'_>>,
) -> Result<f64> {
    let mut sum = MonomialSum::new(families).last_weights(b);
    if let Some(a) = a {
        sum = sum.penultimate_weights(a);
    }
    if let Some(t) = target {
        sum = sum.target(t);
    }
    if let Some(c) = constraint {
        sum = sum.constraint(c);
    }
    sum.evaluate()
}

/// Number of tuples `(S_1, .., S_q)` with `S_t` in the `t`-th family and
/// `S_1 Δ .. Δ S_q = target`.
pub fn count_nonzero_tuples(families: &[SetFamily], target: &SubsetMask) -> Result<u128> {
    MonomialSum::new(families).target(*target).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::all_subsets_of_size;
    use proptest::prelude::*;

    fn mask(d: usize, idx: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(d, idx).unwrap()
    }

    // Independent oracle: enumerate the full product with an index odometer.
    fn brute(families: &[SetFamily], b: &[f64], target: &SubsetMask, filter: &dyn Fn(&[usize]) -> bool) -> (f64, u128) {
        let q = families.len();
        let sizes: Vec<usize> = families.iter().map(|f| f.len()).collect();
        let total: usize = sizes.iter().product();
        let (mut sum, mut count) = (0.0, 0u128);
        for code in 0..total {
            let mut c = code;
            let idx: Vec<usize> = sizes.iter().map(|&s| { let v = c % s; c /= s; v }).collect();
            let mut x = *target;
            for (t, &k) in idx.iter().enumerate() {
                x = x.xor(&families[t].members()[k]).unwrap();
            }
            if x.is_empty() && filter(&idx) {
                sum += b[idx[q - 1]];
                count += 1;
            }
        }
        (sum, count)
    }

    #[test]
    fn weighted_sum_examples() {
        let d = 3;
        let singles = all_subsets_of_size(d, &[1]).unwrap();
        let fams = vec![singles.clone(), singles.clone()];
        let ones = vec![1.0; 3];
        // S1 Δ S2 = ∅ forces S1 = S2: three tuples
        assert_eq!(weighted_monomial_sum(&fams, &ones, None, None, None).unwrap(), 3.0);
        let b = vec![2.0, 1.0, 1.0];
        assert_eq!(weighted_monomial_sum(&fams, &b, None, None, None).unwrap(), 4.0);
        // a single singleton can never cancel
        let one = vec![singles.clone()];
        assert_eq!(weighted_monomial_sum(&one, &ones, None, None, None).unwrap(), 0.0);
        let target = mask(d, &[0, 1]);
        // {0}Δ{1} and {1}Δ{0}
        assert_eq!(weighted_monomial_sum(&fams, &ones, None, Some(target), None).unwrap(), 2.0);
        let distinct = |t: &[usize]| t[0] != t[1];
        assert_eq!(
            weighted_monomial_sum(&fams, &ones, None, None, Some(&distinct)).unwrap(),
            0.0
        );
    }

    #[test]
    fn count_examples() {
        let d = 4;
        let singles = all_subsets_of_size(d, &[1]).unwrap();
        let fams = vec![singles.clone(), singles.clone()];
        assert_eq!(count_nonzero_tuples(&fams, &SubsetMask::empty(d).unwrap()).unwrap(), 4);
        let pair = SetFamily::from_index_lists(d, &[vec![0, 1]]).unwrap();
        let fams = vec![singles.clone(), pair];
        assert_eq!(count_nonzero_tuples(&fams, &mask(d, &[1])).unwrap(), 1);
        assert_eq!(count_nonzero_tuples(&fams, &mask(d, &[2])).unwrap(), 0);
    }

    #[test]
    fn penultimate_weights() {
        let d = 3;
        let singles = all_subsets_of_size(d, &[1]).unwrap();
        let fams = vec![singles.clone(), singles.clone(), singles.clone()];
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![1.0, 1.0, 1.0];
        // S1 Δ S2 Δ S3 = {0}: either all three equal {0}, or one of them is
        // {0} and the other two agree on some other coordinate
        let got = weighted_monomial_sum(&fams, &b, Some(&a), Some(mask(d, &[0])), None).unwrap();
        let mut expected = 0.0;
        for k1 in 0..3 {
            for k2 in 0..3 {
                for k3 in 0..3 {
                    let mut par = [0u8; 3];
                    par[k1] ^= 1;
                    par[k2] ^= 1;
                    par[k3] ^= 1;
                    if par == [1, 0, 0] {
                        expected += a[k2] * b[k3];
                    }
                }
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn invalid_inputs() {
        let d = 3;
        let singles = all_subsets_of_size(d, &[1]).unwrap();
        let fams = vec![singles.clone()];
        assert!(weighted_monomial_sum(&fams, &[1.0], None, None, None).is_err());
        assert!(weighted_monomial_sum(&fams, &[1.0; 3], Some(&[1.0; 3]), None, None).is_err());
        let other = all_subsets_of_size(4, &[1]).unwrap();
        let mixed = vec![singles.clone(), other];
        assert!(matches!(
            count_nonzero_tuples(&mixed, &SubsetMask::empty(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        let big = vec![singles.clone(), singles.clone(), singles];
        assert!(matches!(
            MonomialSum::new(&big).budget(20).count(),
            Err(Error::BudgetExceeded { estimate: 27, cap: 20 })
        ));
    }

    fn arb_families() -> impl Strategy<Value = (usize, Vec<SetFamily>, Vec<f64>, Vec<usize>)> {
        (2usize..6, 1usize..4).prop_flat_map(|(d, q)| {
            let fams = proptest::collection::vec(
                proptest::collection::btree_set(1u64..(1 << d), 1..6),
                q,
            );
            (Just(d), fams, proptest::collection::vec(0.0f64..2.0, 6), proptest::collection::vec(0usize..(1 << d), 1))
        })
        .prop_map(|(d, fams, b, t)| {
            let families = fams
                .into_iter()
                .map(|set| {
                    let members = set
                        .into_iter()
                        .map(|bits| {
                            let idx: Vec<usize> = (0..d).filter(|i| bits >> i & 1 == 1).collect();
                            SubsetMask::from_indices(d, &idx).unwrap()
                        })
                        .collect();
                    SetFamily::new(d, members).unwrap()
                })
                .collect();
            (d, families, b, t)
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_constraint_only_removes((d, fams, b, t) in arb_families()) {
            let last = fams.last().unwrap().len();
            let b = &b[..last];
            let tidx: Vec<usize> = (0..d).filter(|i| t[0] >> i & 1 == 1).collect();
            let target = SubsetMask::from_indices(d, &tidx).unwrap();
            let all = |_: &[usize]| true;
            let (bs, bc) = brute(&fams, b, &target, &all);
            let got = weighted_monomial_sum(&fams, b, None, Some(target), None).unwrap();
            prop_assert!((got - bs).abs() < 1e-12);
            prop_assert_eq!(count_nonzero_tuples(&fams, &target).unwrap(), bc);

            let even = |idx: &[usize]| idx.iter().sum::<usize>() % 2 == 0;
            let (cs, cc) = brute(&fams, b, &target, &even);
            let constrained = weighted_monomial_sum(&fams, b, None, Some(target), Some(&even)).unwrap();
            prop_assert!((constrained - cs).abs() < 1e-12);
            prop_assert!(constrained <= got + 1e-12);
            let n = MonomialSum::new(&fams).target(target).constraint(&even).count().unwrap();
            prop_assert_eq!(n, cc);
            prop_assert!(n <= bc);
        }
    }
}
