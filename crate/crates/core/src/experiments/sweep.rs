//! `‖E M‖` against `d^{p_j} ‖w^{(1)}‖_∞ ‖w^{(m+1)}‖_∞` over a schedule of
//! dimensions.

use super::config::{build_chain, BuiltFamily, SweepConfig};
use super::output::{fmt_f64, Assertion};
use super::{bounded_rule, decreasing_tail, timed, Context, MethodChoice, Outcome};
use crate::error::{Error, Result};
use crate::exact::{estimate_cost, exact_expected_m_with, ExactOptions};
use crate::linalg::spectral_norm;
use crate::matrix::{mc_expected_m_with, ProductSpec};

struct Point {
    d: usize,
    n: usize,
    degree: f64,
    naive_degree: usize,
    norm: f64,
    norm_stderr: f64,
    w_first: f64,
    w_last: f64,
    scale: f64,
    naive_scale: f64,
    method: &'static str,
    hash: String,
    secs: f64,
}

/// 0-based middle index: positions whose family differs from both ends.
fn qualifying(spec: &ProductSpec) -> Vec<usize> {
    let p = spec.pattern();
    let m = spec.m();
    (0..=m).filter(|&i| !p.equal(i, 0) && !p.equal(i, m)).collect()
}

fn choose_j(cfg: &SweepConfig, spec: &ProductSpec, built: &[BuiltFamily]) -> Result<usize> {
    let q = qualifying(spec);
    if q.is_empty() {
        return Err(Error::Config(
            "no chain position carries a family distinct from both end families".into(),
        ));
    }
    match cfg.j {
        Some(j) if j >= 1 && q.contains(&(j - 1)) => Ok(j - 1),
        Some(j) => Err(Error::Config(format!(
            "j = {j} does not index a family distinct from both end families"
        ))),
        None => Ok(*q
            .iter()
            .min_by(|&&a, &&b| built[a].degree.total_cmp(&built[b].degree).then(a.cmp(&b)))
            .expect("nonempty")),
    }
}

pub(crate) fn run(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx
        .cfg
        .scaling_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [scaling_sweep] section".into()))?;
    if cfg.schedule.is_empty() {
        return Err(Error::Config("scaling_sweep.schedule is empty".into()));
    }
    if cfg.chain.len() < 2 {
        return Err(Error::Config("scaling_sweep.chain needs at least two positions".into()));
    }
    let budget = ctx.cfg.budget as u128;
    let tol = &ctx.cfg.tolerances;
    let mut warnings = Vec::new();
    let mut j_fixed = None;
    let mut points = Vec::with_capacity(cfg.schedule.len());

    for (i, &d) in cfg.schedule.iter().enumerate() {
        let n = cfg.n.n_at(i, d)?;
        let (spec, built) = build_chain(&cfg.chain, n, d)?;
        let j = choose_j(cfg, &spec, &built)?;
        if *j_fixed.get_or_insert(j) != j {
            return Err(Error::Config("the middle index changes along the schedule".into()));
        }
        let use_exact = match ctx.method {
            MethodChoice::Exact => true,
            MethodChoice::Mc => false,
            MethodChoice::Auto => {
                let cost = estimate_cost(&spec);
                if cost <= budget {
                    true
                } else if cfg.mc_fallback {
                    warnings.push(format!(
                        "d = {d}: exact cost {cost} exceeds budget {budget}, using Monte Carlo"
                    ));
                    false
                } else {
                    return Err(Error::BudgetExceeded {
                        estimate: cost,
                        cap: budget,
                    });
                }
            }
        };
        let ((norm, norm_stderr), secs) = timed(|| {
            if use_exact {
                let opts = ExactOptions {
                    budget,
                    execution: ctx.execution,
                };
                Ok((spectral_norm(&exact_expected_m_with(&spec, &opts)?.values)?, 0.0))
            } else {
                if cfg.trials < 2 {
                    return Err(Error::Config("Monte Carlo needs at least 2 trials".into()));
                }
                let est = mc_expected_m_with(&spec, cfg.trials, ctx.seed, ctx.execution)?;
                // Weyl: |‖A‖ - ‖B‖| <= ‖A - B‖_F
                let frob = est.stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
                Ok((spectral_norm(&est.mean.values)?, frob))
            }
        })?;
        let chain = spec.chain();
        let w_first = chain[0].max_weight();
        let w_last = chain[spec.m()].max_weight();
        let df = d as f64;
        points.push(Point {
            d,
            n,
            degree: built[j].degree,
            naive_degree: built[j].naive_degree,
            norm,
            norm_stderr,
            w_first,
            w_last,
            scale: df.powf(built[j].degree) * w_first * w_last,
            naive_scale: df.powi(built[j].naive_degree as i32) * w_first * w_last,
            method: if use_exact { "exact" } else { "mc" },
            hash: spec.spec_hash(),
            secs,
        });
    }
    points.sort_by_key(|p| (p.d, p.n));
    let j = j_fixed.expect("nonempty schedule");

    let ratio = |v: f64, s: f64| if s > 0.0 { v / s } else { f64::NAN };
    let ratios: Vec<f64> = points.iter().map(|p| ratio(p.norm, p.scale)).collect();
    let naive: Vec<f64> = points.iter().map(|p| ratio(p.norm, p.naive_scale)).collect();
    let mut assertions = vec![bounded_rule("ratio_bounded", &ratios, tol.slack)];

    let norms: Vec<f64> = points.iter().map(|p| p.norm).collect();
    let stderrs: Vec<f64> = points.iter().map(|p| p.norm_stderr).collect();
    let degree = points[0].degree;
    match cfg.n.exponent() {
        Some(alpha) if alpha > degree => {
            assertions.push(decreasing_tail("norm_decreasing", &norms, &stderrs, tol.stderr_multiple))
        }
        Some(alpha) => assertions.push(Assertion::skip(
            "norm_decreasing",
            format!("n grows like d^{alpha}, not faster than d^{degree}"),
        )),
        None => assertions.push(Assertion::skip("norm_decreasing", "n is not a power of d")),
    }
    if points.iter().any(|p| p.naive_degree as f64 > p.degree) {
        let naive_se: Vec<f64> = points.iter().map(|p| ratio(p.norm_stderr, p.naive_scale)).collect();
        assertions.push(decreasing_tail(
            "naive_ratio_decays",
            &naive,
            &naive_se,
            tol.stderr_multiple,
        ));
    }

    let methods: Vec<&str> = points.iter().map(|p| p.method).collect();
    let method = if methods.iter().all(|&m| m == "exact") {
        "exact"
    } else if methods.iter().all(|&m| m == "mc") {
        "mc"
    } else {
        "mixed"
    };
    Ok(Outcome {
        header: vec![
            "d",
            "n",
            "j",
            "degree",
            "naive_degree",
            "norm",
            "norm_stderr",
            "w_first_max",
            "w_last_max",
            "scale",
            "ratio",
            "naive_scale",
            "naive_ratio",
            "method",
        ],
        rows: points
            .iter()
            .zip(ratios.iter().zip(&naive))
            .map(|(p, (r, nr))| {
                vec![
                    p.d.to_string(),
                    p.n.to_string(),
                    (j + 1).to_string(),
                    fmt_f64(p.degree),
                    p.naive_degree.to_string(),
                    fmt_f64(p.norm),
                    fmt_f64(p.norm_stderr),
                    fmt_f64(p.w_first),
                    fmt_f64(p.w_last),
                    fmt_f64(p.scale),
                    fmt_f64(*r),
                    fmt_f64(p.naive_scale),
                    fmt_f64(*nr),
                    p.method.into(),
                ]
            })
            .collect(),
        method: method.into(),
        spec_hashes: points.iter().map(|p| p.hash.clone()).collect(),
        assertions,
        warnings,
        point_runtimes: points.iter().map(|p| p.secs).collect(),
    })
}
