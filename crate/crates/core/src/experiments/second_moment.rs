//! `‖E[A_1ᵀ A_2 A_2ᵀ A_3]‖ = |𝒮'|/n` for `𝒮_1 = 𝒮_3 = 𝒮` disjoint from
//! `𝒮_2 = 𝒮'` and all weights `n^{-1/2}`.

use super::output::{fmt_f64, Assertion};
use super::{timed, Context, MethodChoice, Outcome};
use crate::error::{Error, Result};
use crate::exact::{exact_expected_m_with, ExactOptions};
use crate::family::WeightedFamily;
use crate::linalg::spectral_norm;
use crate::matrix::ProductSpec;

pub(crate) fn run(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx
        .cfg
        .verify_eq1
        .as_ref()
        .ok_or_else(|| Error::Config("missing [verify_eq1] section".into()))?;
    if cfg.cases.is_empty() {
        return Err(Error::Config("verify_eq1.cases is empty".into()));
    }
    let mut warnings = Vec::new();
    if ctx.method == MethodChoice::Mc {
        warnings.push("verify-eq1 always uses the exact engine".into());
    }
    let opts = ExactOptions {
        budget: ctx.cfg.budget as u128,
        execution: ctx.execution,
    };
    let tol = ctx.cfg.tolerances.relative;

    let mut points = Vec::new();
    for case in &cfg.cases {
        if case.n.is_empty() {
            return Err(Error::Config(format!("case d = {} has no sample sizes", case.d)));
        }
        let s = case.s.build(case.d)?.family;
        let sp = case.s_prime.build(case.d)?.family;
        if s == sp {
            return Err(Error::Config("verify_eq1 needs disjoint families, got equal ones".into()));
        }
        if sp.is_empty() {
            return Err(Error::Config("verify_eq1 needs a nonempty second family".into()));
        }
        for &n in &case.n {
            if n == 0 {
                return Err(Error::Config("sample size must be positive".into()));
            }
            let w = 1.0 / (n as f64).sqrt();
            let chain = vec![
                WeightedFamily::uniform(s.clone(), w)?,
                WeightedFamily::uniform(sp.clone(), w)?,
                WeightedFamily::uniform(s.clone(), w)?,
            ];
            let spec = ProductSpec::new(n, chain)?;
            let (norm, secs) = timed(|| spectral_norm(&exact_expected_m_with(&spec, &opts)?.values))?;
            let expected = sp.len() as f64 / n as f64;
            let rel = (norm - expected).abs() / expected;
            points.push((case.d, n, s.len(), sp.len(), norm, expected, rel, spec.spec_hash(), secs));
        }
    }
    points.sort_by_key(|p| (p.0, p.1));

    let worst = points.iter().map(|p| p.6).fold(0.0, f64::max);
    let failing = points.iter().filter(|p| !(p.6 <= tol)).count();
    let assertions = vec![Assertion::check(
        "norm_equals_formula",
        failing == 0,
        format!("{failing} of {} points off; max relative error {worst:.3e} (tolerance {tol:.1e})", points.len()),
    )];
    Ok(Outcome {
        header: vec!["d", "n", "s_size", "s_prime_size", "norm", "expected", "rel_err", "pass"],
        rows: points
            .iter()
            .map(|p| {
                vec![
                    p.0.to_string(),
                    p.1.to_string(),
                    p.2.to_string(),
                    p.3.to_string(),
                    fmt_f64(p.4),
                    fmt_f64(p.5),
                    fmt_f64(p.6),
                    (p.6 <= tol).to_string(),
                ]
            })
            .collect(),
        method: "exact".into(),
        spec_hashes: points.iter().map(|p| p.7.clone()).collect(),
        assertions,
        warnings,
        point_runtimes: points.iter().map(|p| p.8).collect(),
    })
}
