//! Exact weighted monomial sums against `‖a‖ ‖b‖ d^{(Σ p_t)/2}` over a
//! schedule of dimensions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{SumShape, SumWeights, WeightedSumConfig};
use super::output::{fmt_f64, Assertion};
use super::{bounded_rule, Context, Outcome};
use crate::error::{Error, Result};
use crate::exact::MonomialSum;
use crate::hypercube::{derive_seed, SubsetMask};

struct Point {
    d: usize,
    shape: SumShape,
    lhs_mean: f64,
    lhs_min: f64,
    exponent: f64,
    scale: f64,
    ratio: f64,
    secs: f64,
}

fn unit_vector(len: usize, kind: SumWeights, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        SumWeights::Zero => vec![0.0; len],
        SumWeights::Uniform => vec![1.0 / (len as f64).sqrt(); len],
        SumWeights::Random => {
            let v: Vec<f64> = (0..len)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(rng);
                    x.abs()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                v
            } else {
                v.into_iter().map(|x| x / norm).collect()
            }
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn validate(cfg: &WeightedSumConfig) -> Result<()> {
    if cfg.schedule.is_empty() {
        return Err(Error::Config("weighted_sum_sweep.schedule is empty".into()));
    }
    if cfg.families.is_empty() {
        return Err(Error::Config("weighted_sum_sweep.families is empty".into()));
    }
    if cfg.draws == 0 {
        return Err(Error::Config("weighted_sum_sweep.draws must be positive".into()));
    }
    if cfg.families.len() < 2 && cfg.shapes.iter().any(|s| s.uses_a()) {
        return Err(Error::Config("shapes with penultimate weights need at least two families".into()));
    }
    Ok(())
}

pub(crate) fn run(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx
        .cfg
        .weighted_sum_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [weighted_sum_sweep] section".into()))?;
    validate(cfg)?;
    let q = cfg.families.len();
    let mut points = Vec::new();
    for &d in &cfg.schedule {
        let built = cfg
            .families
            .iter()
            .map(|f| f.build(d))
            .collect::<Result<Vec<_>>>()?;
        let families: Vec<_> = built.iter().map(|b| b.family.clone()).collect();
        let target = SubsetMask::from_indices(d, &cfg.target)
            .map_err(|e| Error::Config(format!("target at d = {d}: {e}")))?;
        let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.draws)
            .map(|r| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(ctx.seed, d as u64), r as u64));
                let b = unit_vector(families[q - 1].len(), cfg.weights, &mut rng);
                let a = if q >= 2 {
                    unit_vector(families[q - 2].len(), cfg.weights, &mut rng)
                } else {
                    Vec::new()
                };
                (b, a)
            })
            .collect();
        for &shape in &cfg.shapes {
            let start = std::time::Instant::now();
            let leading = if shape.uses_a() { q - 2 } else { q - 1 };
            let exponent = built[..leading].iter().map(|b| b.degree).sum::<f64>() / 2.0;
            let scale = (d as f64).powf(exponent);
            let mut lhs = Vec::with_capacity(draws.len());
            let mut ratios = Vec::with_capacity(draws.len());
            for (b, a) in &draws {
                let mut sum = MonomialSum::new(&families)
                    .last_weights(b)
                    .budget(ctx.cfg.budget as u128)
                    .execution(ctx.execution);
                let mut norms = norm2(b);
                if shape.uses_a() {
                    sum = sum.penultimate_weights(a);
                    norms *= norm2(a);
                }
                if shape.uses_target() {
                    sum = sum.target(target);
                }
                let value = sum.evaluate()?;
                lhs.push(value);
                ratios.push(if norms > 0.0 { value / (norms * scale) } else { 0.0 });
            }
            let k = lhs.len() as f64;
            points.push(Point {
                d,
                shape,
                lhs_mean: lhs.iter().sum::<f64>() / k,
                lhs_min: lhs.iter().copied().fold(f64::INFINITY, f64::min),
                exponent,
                scale,
                ratio: ratios.iter().sum::<f64>() / k,
                secs: start.elapsed().as_secs_f64(),
            });
        }
    }
    points.sort_by_key(|p| (p.d, p.shape as u8));

    let mut assertions = Vec::new();
    for &shape in &cfg.shapes {
        let ratios: Vec<f64> = points.iter().filter(|p| p.shape == shape).map(|p| p.ratio).collect();
        assertions.push(bounded_rule(&format!("{}_ratio_bounded", shape.name()), &ratios, ctx.cfg.tolerances.slack));
    }
    let negative = points.iter().filter(|p| p.lhs_min < 0.0).count();
    assertions.push(Assertion::check(
        "lhs_nonnegative",
        negative == 0,
        format!("{negative} points with a negative sum under nonnegative weights"),
    ));

    Ok(Outcome {
        header: vec!["d", "shape", "q", "draws", "lhs_mean", "lhs_min", "scale_exponent", "scale", "ratio"],
        rows: points
            .iter()
            .map(|p| {
                vec![
                    p.d.to_string(),
                    p.shape.name().into(),
                    q.to_string(),
                    cfg.draws.to_string(),
                    fmt_f64(p.lhs_mean),
                    fmt_f64(p.lhs_min),
                    fmt_f64(p.exponent),
                    fmt_f64(p.scale),
                    fmt_f64(p.ratio),
                ]
            })
            .collect(),
        method: "exact".into(),
        spec_hashes: Vec::new(),
        assertions,
        warnings: Vec::new(),
        point_runtimes: points.iter().map(|p| p.secs).collect(),
    })
}
