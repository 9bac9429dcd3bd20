use std::fs::File;
use std::io::{BufWriter, Write};

use aloha_core::models::{CaptureModel, Guard};
use aloha_core::paradox::{compare_homogeneous_with, default_grid, heterogeneous_case_compare_with, linear_grid, Fallback};
use aloha_core::simulator::{estimate_throughput, run as simulate};
use aloha_core::solver::{solve_all, within_capture_sum_bound, EquilibriumResult, SolveOptions};
use aloha_core::dynamics::run_dynamics;
use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::config::ScenarioFile;
use crate::output::{round_json, Cell, Format, Table};
use crate::Common;

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Throughput,
    Solve,
    Simulate,
    Dynamics,
    Paradox,
}

pub fn run(kind: Kind, args: &Common) -> Result<()> {
    let mut file = ScenarioFile::load(&args.config)?;
    if let Some(seed) = args.seed {
        file.sim.seed = seed;
    }
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    };
    if args.dump_config {
        out.write_all(file.to_toml()?.as_bytes())?;
        return Ok(out.flush()?);
    }
    let default_format = if matches!(kind, Kind::Solve) { Format::Json } else { Format::Csv };
    let format = args.format.unwrap_or(default_format);
    let p = args.p.as_deref();
    let result = match kind {
        Kind::Throughput => throughput(&file, p, format, &mut out),
        Kind::Solve => solve(&file, format, &mut out),
        Kind::Simulate => sim(&file, p, format, &mut out),
        Kind::Dynamics => dynamics(&file, format, &mut out),
        Kind::Paradox => paradox(&file, p, args.grid.as_deref(), format, &mut out),
    };
    out.flush()?;
    result
}

fn throughput(file: &ScenarioFile, p: Option<&[f64]>, format: Format, out: &mut dyn Write) -> Result<()> {
    let regime = file.regime()?;
    let p = file.probabilities(p)?;
    let r = regime.throughput(&p)?;
    let exact = regime.closed_form_exact(&p);
    let mut t = Table::new("throughput", vec!["node", "p", "throughput", "closed_form_exact"]);
    for (i, (p, r)) in p.iter().zip(&r).enumerate() {
        t.push(vec![Cell::Int(i as u64), Cell::Num(*p), Cell::Num(*r), Cell::Bool(exact)]);
    }
    t.write(format, Value::Null, out)
}

/// Bound `(b+1)/b` on the preferred point's probability sum, where it applies.
fn sum_bound_b(model: CaptureModel) -> Option<f64> {
    match model {
        CaptureModel::Sinr { b, .. } => Some(b),
        CaptureModel::Power { delta: Guard::Infinite } => Some(f64::INFINITY),
        CaptureModel::Power { .. } => None,
    }
}

fn solve(file: &ScenarioFile, format: Format, out: &mut dyn Write) -> Result<()> {
    let regime = file.regime()?;
    let demands = file.demands();
    let (res, failure) = match solve_all(&demands, &regime, &SolveOptions::default()) {
        Ok(res) => (res, None),
        Err(e) if e.is_infeasible() => (EquilibriumResult::infeasible(0), Some(e)),
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new("solve", vec!["point", "classification", "node", "p", "residual"]);
    for (k, point) in res.points.iter().enumerate() {
        for (i, p) in point.iter().enumerate() {
            t.push(vec![
                Cell::Int(k as u64),
                Cell::Text(serde_json::to_value(res.classification[k])?.as_str().unwrap_or_default().to_string()),
                Cell::Int(i as u64),
                Cell::Num(*p),
                Cell::Num(res.residuals[k]),
            ]);
        }
    }
    let bound = sum_bound_b(regime.model).filter(|_| res.feasible).map(|b| {
        let limit = if b.is_infinite() { 1.0 } else { (b + 1.0) / b };
        json!({ "limit": limit, "satisfied": within_capture_sum_bound(&res, b) })
    });
    let extra = round_json(json!({
        "feasible": res.feasible,
        "iterations": res.iterations,
        "points": res.points,
        "classification": res.classification,
        "residuals": res.residuals,
        "sum_bound": bound,
    }));
    t.write(format, extra, out)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn sim(file: &ScenarioFile, p: Option<&[f64]>, format: Format, out: &mut dyn Write) -> Result<()> {
    let p = file.probabilities(p)?;
    let scenario = file.scenario(&p)?;
    let reps = file.sim.replications;
    let extra = json!({ "slots": scenario.slots, "seed": scenario.seed, "replications": reps });
    if reps == 1 {
        let trace = simulate(&scenario);
        let mut t = Table::new("simulate", vec!["node", "transmits", "successes", "rho_hat", "p_hat"]);
        for i in 0..trace.transmits.len() {
            t.push(vec![
                Cell::Int(i as u64),
                Cell::Int(trace.transmits[i]),
                Cell::Int(trace.successes[i]),
                Cell::Num(trace.rho_hat[i]),
                Cell::Num(trace.p_hat[i]),
            ]);
        }
        t.write(format, extra, out)
    } else {
        let est = estimate_throughput(&scenario, reps)?;
        let se = est.std_error.unwrap_or_default();
        let mut t = Table::new("simulate-replicated", vec!["node", "rho_hat_mean", "std_error"]);
        for i in 0..est.mean.len() {
            t.push(vec![Cell::Int(i as u64), Cell::Num(est.mean[i]), Cell::Num(se[i])]);
        }
        t.write(format, extra, out)
    }
}

fn dynamics(file: &ScenarioFile, format: Format, out: &mut dyn Write) -> Result<()> {
    let regime = file.regime()?;
    let trace = run_dynamics(&file.demands(), &regime, &file.dynamics_config())?;
    let mut t = Table::new("dynamics", vec!["iteration", "node", "p", "T", "rho_hat", "eps"]);
    for (row, &m) in trace.iteration.iter().enumerate() {
        for i in 0..trace.p[row].len() {
            let threshold = trace.thresholds.as_ref().map_or(Cell::Empty, |t| Cell::Num(t[row][i]));
            t.push(vec![
                Cell::Int(m as u64),
                Cell::Int(i as u64),
                Cell::Num(trace.p[row][i]),
                threshold,
                Cell::Num(trace.rho_hat[row][i]),
                Cell::Num(trace.eps[row]),
            ]);
        }
    }
    let extra = round_json(json!({
        "converged": trace.converged,
        "iterations": trace.iterations,
        "residual": trace.residual,
        "zero_estimate_iterations": trace.zero_estimate_iterations,
    }));
    t.write(format, extra, out)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--grid expects start:stop:count, got {spec:?}");
    }
    let start: f64 = parts[0].parse().context("grid start")?;
    let stop: f64 = parts[1].parse().context("grid stop")?;
    let count: usize = parts[2].parse().context("grid count")?;
    if count == 0 {
        bail!("grid count must be positive");
    }
    Ok(linear_grid(start, stop, count))
}

fn paradox(file: &ScenarioFile, p: Option<&[f64]>, grid: Option<&str>, format: Format, out: &mut dyn Write) -> Result<()> {
    let model = file.capture_model()?;
    let fallback = Fallback { slots: file.sim.slots, seed: file.sim.seed };
    if let Some(p) = p {
        let CaptureModel::Sinr { b, noise_ratio } = model else {
            bail!("per-node comparison (--p) is defined for SINR capture only");
        };
        let cmp = heterogeneous_case_compare_with(p, b, noise_ratio, fallback)?;
        let mut t = Table::new("paradox-heterogeneous", vec!["node", "p", "rho_nocsi", "rho_csi", "gap"]);
        for i in 0..p.len() {
            t.push(vec![Cell::Int(i as u64), Cell::Num(p[i]), Cell::Num(cmp.rho_nocsi[i]), Cell::Num(cmp.rho_csi[i]), Cell::Num(cmp.gap[i])]);
        }
        return t.write(format, json!({ "simulated": cmp.simulated }), out);
    }

    let grid = match grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid(),
    };
    let sizes = file.paradox.as_ref().map_or_else(|| vec![file.nodes.len()], |s| s.n.clone());
    let mut t = Table::new("paradox", vec!["n", "p", "rho_nocsi", "rho_csi", "gap"]);
    let mut summary = Vec::new();
    for n in sizes {
        let rep = compare_homogeneous_with(model, n, &grid, fallback)?;
        for k in 0..rep.grid.len() {
            t.push(vec![
                Cell::Int(n as u64),
                Cell::Num(rep.grid[k]),
                Cell::Num(rep.rho_nocsi[k]),
                Cell::Num(rep.rho_csi[k]),
                Cell::Num(rep.gap[k]),
            ]);
        }
        summary.push(json!({ "n": n, "paradox_present": rep.paradox_present, "simulated": rep.simulated }));
        if rep.simulated {
            eprintln!("warning: n={n}: perfect-CSI curve simulated (no closed form for b < 1)");
        }
    }
    t.write(format, json!({ "curves": summary }), out)
}
