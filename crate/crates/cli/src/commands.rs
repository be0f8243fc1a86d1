use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use monochain::bounds::bound_report;
use monochain::coupling::{coupled_step, write_trajectory_csv, CoupledPair, CoupledRun};
use monochain::exact::{exact_curve_with_cap, write_curve_csv};
use monochain::numfmt::to_report_json;
use monochain::spectral::{classify_conditions, model_eigendata};
use monochain::statespace::{partial_leq, DEFAULT_STATE_CAP};
use monochain::{Composition, Error, ModelSpec, TransitionRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::Failure;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::capability(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let text = to_report_json(value).map_err(|e| Failure::capability(e.to_string()))?;
    let mut out = open_output(path)?;
    writeln!(out, "{text}").map_err(|e| Failure::capability(e.to_string()))?;
    out.flush().map_err(|e| Failure::capability(e.to_string()))
}

pub fn bounds(cfg: &RunConfig) -> Result<(), Failure> {
    let report = bound_report(&cfg.model, &cfg.start()?, cfg.epsilon()?)?;
    emit_json(cfg.opts.output.as_deref(), &report)
}

pub fn exact(cfg: &RunConfig) -> Result<(), Failure> {
    let x0 = cfg.start()?;
    let n_max = cfg.opts.n_max.unwrap_or(500);
    let cap = cfg.opts.cap.unwrap_or(DEFAULT_STATE_CAP);
    let curve = exact_curve_with_cap(&cfg.model, &x0, n_max, cap).map_err(|e| match e {
        Error::StateSpaceTooLarge { .. } => Failure::capability(format!(
            "{e}; exact curves are meant for small lattices, try a smaller N or fewer species"
        )),
        e => e.into(),
    })?;
    let out = open_output(cfg.opts.output.as_deref())?;
    write_curve_csv(out, &curve)?;
    Ok(())
}

/// Per-replicate outcome of `couple`.
struct Replicate {
    coalescence: Option<usize>,
    violations: u64,
    trajectory: Option<CoupledRun>,
}

fn run_replicate(
    spec: &ModelSpec,
    x: &Composition,
    y: &Composition,
    max_steps: usize,
    seed: u64,
    index: usize,
) -> Result<Replicate, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let keep = index == 0;
    let mut pair = CoupledPair::new(x.clone(), y.clone())?;
    let mut trajectory = keep.then(|| vec![pair.clone()]);
    let mut coalescence = None;
    let mut violations = 0;
    for step in 0..=max_steps {
        if pair.coalesced() {
            coalescence = Some(step);
            break;
        }
        if step == max_steps {
            break;
        }
        match coupled_step(spec, &pair, &mut rng) {
            Ok(next) => pair = next,
            Err(Error::Ordering(_)) => {
                violations += 1;
                break;
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(pair.clone());
        }
    }
    Ok(Replicate {
        coalescence,
        violations,
        trajectory: trajectory.map(|trajectory| CoupledRun {
            trajectory,
            coalescence_step: coalescence,
        }),
    })
}

fn empirical_tv(row: &TransitionRow, samples: &[Composition]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for s in samples {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    let n = samples.len() as f64;
    let mut tv: f64 = row
        .probs
        .iter()
        .map(|(y, &p)| (p - counts.get(y).copied().unwrap_or(0) as f64 / n).abs())
        .sum();
    tv += counts
        .iter()
        .filter(|(y, _)| row.prob(y) == 0.0)
        .map(|(_, &c)| c as f64 / n)
        .sum::<f64>();
    0.5 * tv
}

fn quantile(sorted: &[usize], q: f64) -> usize {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn couple(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = &cfg.model;
    let x = cfg.start()?;
    let y = cfg.upper()?;
    if !partial_leq(&x, &y)? {
        return Err(Error::Ordering(format!("{x} is not below {y}")).into());
    }
    let seed = cfg.opts.seed.unwrap_or(0);
    let replicates = cfg.opts.replicates.unwrap_or(100).max(1);
    let max_steps = cfg.opts.max_steps.unwrap_or(100_000);
    let samples = cfg.opts.check_samples.unwrap_or(10_000).max(2);

    let results: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, &x, &y, max_steps, seed, r))
        .collect::<Result<_, _>>()?;

    // one-step checks on their own stream
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let start = CoupledPair::new(x.clone(), y.clone())?;
    let ed = model_eigendata(spec)?;
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    let mut gaps = Vec::with_capacity(samples);
    for _ in 0..samples {
        let next = coupled_step(spec, &start, &mut rng)?;
        gaps.push(ed.eval(&next.y) - ed.eval(&next.x));
        xs.push(next.x);
        ys.push(next.y);
    }
    let mean = gaps.iter().sum::<f64>() / samples as f64;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let std_err = (var / samples as f64).sqrt();
    let expected = ed.lambda * (ed.eval(&y) - ed.eval(&x));

    let mut met: Vec<usize> = results.iter().filter_map(|r| r.coalescence).collect();
    met.sort_unstable();
    let quantiles = (!met.is_empty()).then(|| {
        json!({
            "min": met[0],
            "q10": quantile(&met, 0.1),
            "q25": quantile(&met, 0.25),
            "median": quantile(&met, 0.5),
            "q75": quantile(&met, 0.75),
            "q90": quantile(&met, 0.9),
            "max": met[met.len() - 1],
        })
    });
    let mean_coalescence =
        (!met.is_empty()).then(|| met.iter().sum::<usize>() as f64 / met.len() as f64);
    let summary = json!({
        "model": spec.family(),
        "x": x,
        "y": y,
        "seed": seed,
        "replicates": replicates,
        "max_steps": max_steps,
        "coalesced": met.len(),
        "coalescence_quantiles": quantiles,
        "mean_coalescence": mean_coalescence,
        "order_violations": results.iter().map(|r| r.violations).sum::<u64>(),
        "marginal_tv": {
            "samples": samples,
            "x": empirical_tv(&spec.row(&x)?, &xs),
            "y": empirical_tv(&spec.row(&y)?, &ys),
        },
        "eigen_check": {
            "lambda": ed.lambda,
            "start_gap": ed.eval(&y) - ed.eval(&x),
            "expected_gap": expected,
            "mean_gap": mean,
            "std_err": std_err,
            "z": if std_err > 0.0 { (mean - expected).abs() / std_err } else { 0.0 },
        },
    });

    if let Some(path) = cfg.opts.trajectory_output.as_deref() {
        let run = results[0].trajectory.as_ref().expect("replicate 0 keeps its path");
        write_trajectory_csv(open_output(Some(path))?, run)?;
    }
    emit_json(cfg.opts.output.as_deref(), &summary)
}

pub fn spectral(cfg: &RunConfig) -> Result<(), Failure> {
    let m = cfg.model.mutation_matrix().ok_or_else(|| {
        Failure::validation(format!(
            "spectral reports need a Moran model, got {}",
            cfg.model.family()
        ))
    })?;
    let conditions = classify_conditions(&m);
    if !conditions.any() {
        return Err(Failure::validation(
            "mutation matrix fails the monotonicity conditions",
        ));
    }
    let eigen = model_eigendata(&cfg.model)?;
    emit_json(
        cfg.opts.output.as_deref(),
        &json!({
            "model": cfg.model.family(),
            "conditions": conditions,
            "eigen": eigen,
        }),
    )
}
