//! Both engines on one spec; entrywise `|exact - mc| / stderr`.

use super::config::build_chain;
use super::output::{fmt_f64, Assertion};
use super::{Context, Outcome};
use crate::error::{Error, Result};
use crate::exact::{exact_expected_m_with, ExactOptions};
use crate::matrix::mc_expected_m_with;

pub(crate) fn run(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx
        .cfg
        .mc_vs_exact
        .as_ref()
        .ok_or_else(|| Error::Config("missing [mc_vs_exact] section".into()))?;
    if cfg.trials < 2 {
        return Err(Error::Config(format!(
            "mc_vs_exact needs at least 2 trials, got {}",
            cfg.trials
        )));
    }
    if cfg.n == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    let tol = &ctx.cfg.tolerances;
    let (spec, _) = build_chain(&cfg.chain, cfg.n, cfg.d)?;
    let opts = ExactOptions {
        budget: ctx.cfg.budget as u128,
        execution: ctx.execution,
    };
    let t0 = std::time::Instant::now();
    let exact = exact_expected_m_with(&spec, &opts)?;
    let t_exact = t0.elapsed().as_secs_f64();
    let mc = mc_expected_m_with(&spec, cfg.trials, ctx.seed, ctx.execution)?;
    let t_mc = t0.elapsed().as_secs_f64() - t_exact;

    let mut rows = Vec::new();
    let mut max_z = 0.0f64;
    let mut max_delta = 0.0f64;
    for ((i, j), &e) in exact.values.indexed_iter() {
        let m = mc.mean.values[[i, j]];
        let se = mc.stderr[[i, j]];
        let delta = (e - m).abs();
        let z = if delta == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            delta / se
        };
        max_z = max_z.max(z);
        max_delta = max_delta.max(delta);
        rows.push(vec![
            i.to_string(),
            j.to_string(),
            fmt_f64(e),
            fmt_f64(m),
            fmt_f64(se),
            fmt_f64(z),
        ]);
    }

    let mut warnings = Vec::new();
    let name = "mc_within_stderr";
    let detail = format!(
        "max |exact - mc| = {max_delta:.3e}, max |exact - mc| / stderr = {max_z:.3} (limit {})",
        tol.stderr_multiple
    );
    let assertion = if cfg.trials < tol.min_trials {
        warnings.push(format!(
            "only {} trials (< {}); stderr is reported but not asserted",
            cfg.trials, tol.min_trials
        ));
        Assertion::skip(name, detail)
    } else {
        Assertion::check(name, max_z <= tol.stderr_multiple, detail)
    };

    Ok(Outcome {
        header: vec!["row", "col", "exact", "mc_mean", "stderr", "z"],
        rows,
        method: "exact+mc".into(),
        spec_hashes: vec![spec.spec_hash()],
        assertions: vec![assertion],
        warnings,
        point_runtimes: vec![t_exact, t_mc],
    })
}
