//! Distributed probability updates.
//!
//! Every node only measures its own throughput `ρ̂_i` and moves its
//! transmission probability by
//!
//! `p_i ← p_i + ε(m) [min(1, ρ_i p_i / ρ̂_i) - p_i]`,
//!
//! starting from `p_i(0) = ρ_i`. Perfect-CSI nodes apply the same rule and
//! transmit above the threshold `T_i = -ln p_i`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::analytic::{Csi, Regime};
use crate::error::{Error, Result};
use crate::models::{CsiMode, NodeSpec, Scenario};
use crate::simulator::SlotEngine;

/// Step sizes `ε(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EpsSchedule {
    /// `ε(m) = 1 / (1 + m)`.
    Harmonic,
    Constant(f64),
}

impl EpsSchedule {
    pub fn at(self, m: usize) -> f64 {
        match self {
            EpsSchedule::Harmonic => 1.0 / (1.0 + m as f64),
            EpsSchedule::Constant(e) => e,
        }
    }
}

/// Where `ρ̂` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Estimator {
    /// Exact throughput at the current probabilities.
    Analytic,
    /// Slot simulation with one update every `update_every_slots` slots.
    /// `ρ̂` counts all slots since the start, or only the last
    /// `window_updates` batches when set.
    Empirical { update_every_slots: u64, window_updates: Option<usize>, seed: u64 },
}

impl Estimator {
    pub fn empirical(seed: u64) -> Self {
        Estimator::Empirical { update_every_slots: 100, window_updates: None, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateOrder {
    Synchronous,
    /// Node `m mod n` alone updates at iteration `m`.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsConfig {
    pub estimator: Estimator,
    pub eps: EpsSchedule,
    pub max_iter: usize,
    /// Analytic mode stops once `max_i |min(1, ρ_i p_i / r_i) - p_i| < tol`.
    pub tol: f64,
    pub order: UpdateOrder,
    /// Keep every k-th iterate in the trace (the last one is always kept).
    pub record_every: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            estimator: Estimator::Analytic,
            eps: EpsSchedule::Harmonic,
            max_iter: 2_000_000,
            tol: 1e-7,
            order: UpdateOrder::Synchronous,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsTrace {
    /// Iteration index of each recorded row.
    pub iteration: Vec<usize>,
    pub p: Vec<Vec<f64>>,
    /// `-ln p_i`, recorded for perfect-CSI regimes only.
    pub thresholds: Option<Vec<Vec<f64>>>,
    /// Estimate that produced the step out of each recorded row (the final
    /// row repeats the last estimate used).
    pub rho_hat: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
    /// Iterations at which some node saw `ρ̂ = 0` and jumped to `p = 1`.
    pub zero_estimate_iterations: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i |r_i(p) - ρ_i|` at the final point.
    pub residual: f64,
}

impl DynamicsTrace {
    pub fn final_p(&self) -> &[f64] {
        self.p.last().expect("trace holds the start point")
    }
}

/// One synchronous application of the update rule. The returned flag is set
/// when some `ρ̂_i = 0` forced the target to 1.
pub fn update_step(p: &[f64], rho_hat: &[f64], demands: &[f64], eps: f64) -> Result<(Vec<f64>, bool)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("step size must lie in (0, 1], got {eps}")));
    }
    if p.len() != rho_hat.len() || p.len() != demands.len() {
        return Err(Error::invalid("p, estimates and demands differ in length"));
    }
    let mut saturated = false;
    let next = p
        .iter()
        .zip(rho_hat)
        .zip(demands)
        .map(|((&p, &est), &d)| {
            let target = if est > 0.0 {
                (d * p / est).min(1.0)
            } else {
                saturated = true;
                1.0
            };
            p + eps * (target - p)
        })
        .collect();
    Ok((next, saturated))
}

fn gap(p: &[f64], r: &[f64], demands: &[f64]) -> f64 {
    p.iter()
        .zip(r)
        .zip(demands)
        .map(|((&p, &r), &d)| {
            let target = if r > 0.0 { (d * p / r).min(1.0) } else { 1.0 };
            (target - p).abs()
        })
        .fold(0.0, f64::max)
}

struct Empirical {
    engine: SlotEngine,
    batch: u64,
    window: Option<(usize, VecDeque<Vec<u64>>)>,
    last_counts: Vec<u64>,
}

impl Empirical {
    fn estimate(&mut self) -> Vec<f64> {
        self.engine.advance(self.batch);
        let counts = self.engine.successes().to_vec();
        match &mut self.window {
            None => {
                let slots = self.engine.slots() as f64;
                counts.iter().map(|&c| c as f64 / slots).collect()
            }
            Some((len, batches)) => {
                let fresh: Vec<u64> = counts.iter().zip(&self.last_counts).map(|(a, b)| a - b).collect();
                self.last_counts = counts;
                batches.push_back(fresh);
                if batches.len() > *len {
                    batches.pop_front();
                }
                let slots = (batches.len() as u64 * self.batch) as f64;
                (0..self.last_counts.len())
                    .map(|i| batches.iter().map(|b| b[i]).sum::<u64>() as f64 / slots)
                    .collect()
            }
        }
    }
}

/// Runs the update rule from `p(0) = ρ`.
///
/// In analytic mode the run must reach the fixed point within `max_iter`
/// iterations, otherwise [`Error::NonConvergence`]. In empirical mode it
/// always runs `max_iter` iterations and reports the final residual.
pub fn run_dynamics(demands: &[f64], regime: &Regime, config: &DynamicsConfig) -> Result<DynamicsTrace> {
    if demands.is_empty() || demands.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::invalid("demands must lie in (0, 1]"));
    }
    if config.record_every == 0 {
        return Err(Error::invalid("record_every must be positive"));
    }
    let n = demands.len();
    let mut empirical = match config.estimator {
        Estimator::Analytic => None,
        Estimator::Empirical { update_every_slots, window_updates, seed } => {
            if update_every_slots == 0 || window_updates == Some(0) {
                return Err(Error::invalid("update batch and window must be positive"));
            }
            let csi = match regime.csi {
                Csi::None => CsiMode::None,
                Csi::Perfect => CsiMode::Perfect,
            };
            let nodes = demands.iter().map(|&d| NodeSpec::new(d, csi.clone(), d)).collect::<Result<Vec<_>>>()?;
            let scenario = Scenario::new(nodes, regime.model, seed, update_every_slots)?;
            Some(Empirical {
                engine: SlotEngine::new(&scenario),
                batch: update_every_slots,
                window: window_updates.map(|w| (w, VecDeque::with_capacity(w + 1))),
                last_counts: vec![0; n],
            })
        }
    };

    let mut trace = DynamicsTrace {
        iteration: Vec::new(),
        p: Vec::new(),
        thresholds: (regime.csi == Csi::Perfect).then(Vec::new),
        rho_hat: Vec::new(),
        eps: Vec::new(),
        zero_estimate_iterations: Vec::new(),
        iterations: 0,
        converged: false,
        residual: f64::NAN,
    };
    let record = |trace: &mut DynamicsTrace, m: usize, p: &[f64], est: &[f64], eps: f64| {
        trace.iteration.push(m);
        trace.p.push(p.to_vec());
        if let Some(t) = trace.thresholds.as_mut() {
            t.push(p.iter().map(|p| -p.ln()).collect());
        }
        trace.rho_hat.push(est.to_vec());
        trace.eps.push(eps);
    };

    let mut p = demands.to_vec();
    let mut m = 0usize;
    loop {
        let est = match empirical.as_mut() {
            None => regime.throughput(&p)?,
            Some(e) => e.estimate(),
        };
        let eps = config.eps.at(m);
        let done = match empirical {
            None => gap(&p, &est, demands) < config.tol,
            Some(_) => m >= config.max_iter,
        };
        if done || m >= config.max_iter {
            record(&mut trace, m, &p, &est, eps);
            trace.converged = done;
            break;
        }
        if m.is_multiple_of(config.record_every) {
            record(&mut trace, m, &p, &est, eps);
        }

        let (mut next, saturated) = update_step(&p, &est, demands, eps)?;
        if saturated {
            trace.zero_estimate_iterations.push(m);
        }
        if config.order == UpdateOrder::RoundRobin {
            let keep = m % n;
            for (i, v) in next.iter_mut().enumerate() {
                if i != keep {
                    *v = p[i];
                }
            }
        }
        p = next;
        if let Some(e) = empirical.as_mut() {
            for (i, &pi) in p.iter().enumerate() {
                e.engine.set_tx_prob(i, pi)?;
            }
        }
        m += 1;
    }

    trace.iterations = m;
    let r = regime.throughput(&p)?;
    trace.residual = r.iter().zip(demands).map(|(r, d)| (r - d).abs()).fold(0.0, f64::max);
    if empirical.is_none() && !trace.converged {
        return Err(Error::NonConvergence { iterations: m, residual: trace.residual });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CaptureModel;
    use crate::solver::{solve_equilibrium, SolveOptions};

    fn fig_regime(csi: Csi) -> Regime {
        Regime::new(CaptureModel::sinr(5.0, 0.1).unwrap(), csi)
    }

    #[test]
    fn update_rule_arithmetic() {
        let (p, flag) = update_step(&[0.4], &[0.1], &[0.1], 0.5).unwrap();
        assert_eq!(p, vec![0.4]);
        assert!(!flag);
        let (p, _) = update_step(&[0.4], &[0.2], &[0.1], 1.0).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-15);
        let (p, flag) = update_step(&[0.4], &[0.0], &[0.1], 1.0).unwrap();
        assert_eq!(p, vec![1.0]);
        assert!(flag);
        assert!(update_step(&[0.4], &[0.1], &[0.1], 0.0).is_err());
    }

    #[test]
    fn equilibrium_start_does_not_move() {
        let regime = fig_regime(Csi::None);
        let p = [0.2, 0.1];
        let demands = regime.throughput(&p).unwrap();
        let r = regime.throughput(&p).unwrap();
        let (next, _) = update_step(&p, &r, &demands, 0.5).unwrap();
        for (a, b) in next.iter().zip(&p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_run_reaches_the_solver_point() {
        let demands = [0.10, 0.05, 0.01];
        for csi in [Csi::None, Csi::Perfect] {
            let regime = fig_regime(csi);
            let cfg = DynamicsConfig { record_every: 1000, ..DynamicsConfig::default() };
            let trace = run_dynamics(&demands, &regime, &cfg).unwrap();
            assert!(trace.converged);
            assert!(trace.residual <= 1e-6, "{csi:?}: {}", trace.residual);
            let eq = solve_equilibrium(&demands, &regime, &SolveOptions::default()).unwrap();
            for (a, b) in trace.final_p().iter().zip(&eq.points[0]) {
                assert!((a - b).abs() < 1e-4);
            }
            assert_eq!(trace.thresholds.is_some(), csi == Csi::Perfect);
            assert!(trace.p.iter().flatten().all(|&p| p > 0.0 && p <= 1.0));
        }
    }

    #[test]
    fn constant_step_and_round_robin_converge() {
        let demands = [0.10, 0.05, 0.01];
        let regime = fig_regime(Csi::None);
        let cfg = DynamicsConfig {
            eps: EpsSchedule::Constant(0.5),
            order: UpdateOrder::RoundRobin,
            tol: 1e-10,
            ..DynamicsConfig::default()
        };
        let trace = run_dynamics(&demands, &regime, &cfg).unwrap();
        assert!(trace.residual < 1e-8);
    }

    #[test]
    fn analytic_cap_reports_nonconvergence() {
        let cfg = DynamicsConfig { max_iter: 5, ..DynamicsConfig::default() };
        let err = run_dynamics(&[0.10, 0.05, 0.01], &fig_regime(Csi::None), &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 5, .. }));
    }

    #[test]
    fn empirical_run_is_reproducible_and_flags_silent_starts() {
        let cfg = DynamicsConfig {
            estimator: Estimator::empirical(3),
            max_iter: 200,
            ..DynamicsConfig::default()
        };
        let regime = fig_regime(Csi::Perfect);
        let a = run_dynamics(&[0.10, 0.05, 0.01], &regime, &cfg).unwrap();
        let b = run_dynamics(&[0.10, 0.05, 0.01], &regime, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iterations, 200);
        assert!(a.converged);
        assert!(a.eps.iter().all(|&e| e > 0.0));
        // A node with demand 0.01 very likely sees no success in its first 100 slots.
        assert!(!a.zero_estimate_iterations.is_empty() || a.rho_hat[0].iter().all(|&r| r > 0.0));
    }

    #[test]
    fn windowed_estimator_runs() {
        let cfg = DynamicsConfig {
            estimator: Estimator::Empirical { update_every_slots: 50, window_updates: Some(4), seed: 1 },
            max_iter: 100,
            ..DynamicsConfig::default()
        };
        let t = run_dynamics(&[0.2, 0.1], &fig_regime(Csi::None), &cfg).unwrap();
        assert_eq!(t.iterations, 100);
    }

    #[test]
    fn rejects_zero_demand() {
        assert!(run_dynamics(&[0.1, 0.0], &fig_regime(Csi::None), &DynamicsConfig::default()).is_err());
    }
}
