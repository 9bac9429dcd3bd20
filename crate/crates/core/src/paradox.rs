//! CSI versus no-CSI throughput at the same average transmission probability.
//!
//! A Braess-like paradox is present when giving every node its channel state
//! does not raise (and may lower) the throughput at equal `p`.

use serde::Serialize;

use crate::analytic::{power_csi_homog, power_nocsi_homog, sinr_csi_node_valid, Csi, Regime};
use crate::error::{Error, Result};
use crate::models::{CaptureModel, CsiMode, NodeSpec, Scenario};
use crate::rng::replication_seed;
use crate::simulator::{binomial_sigma, run};

/// Slack allowed on inequalities between closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// 1001 points covering `[0, 1]`.
pub fn default_grid() -> Vec<f64> {
    linear_grid(0.0, 1.0, 1001)
}

/// Simulation settings used where no closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fallback {
    pub slots: u64,
    pub seed: u64,
}

impl Default for Fallback {
    fn default() -> Self {
        Fallback { slots: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParadoxReport {
    pub model: CaptureModel,
    pub n: usize,
    pub grid: Vec<f64>,
    pub rho_nocsi: Vec<f64>,
    pub rho_csi: Vec<f64>,
    /// `rho_nocsi - rho_csi`.
    pub gap: Vec<f64>,
    /// Slack per grid point used to decide `paradox_present`.
    pub tolerance: Vec<f64>,
    /// CSI curve came from the slot simulator.
    pub simulated: bool,
    /// `gap >= -tolerance` on the whole grid.
    pub paradox_present: bool,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("grid point {p} outside [0, 1]")));
    }
    Ok(())
}

fn homogeneous_scenario(model: CaptureModel, n: usize, p: f64, csi: CsiMode, fallback: Fallback) -> Result<Scenario> {
    let nodes = (0..n).map(|_| NodeSpec::new(0.0, csi.clone(), p)).collect::<Result<Vec<_>>>()?;
    Scenario::new(nodes, model, fallback.seed, fallback.slots)
}

/// Homogeneous throughput curves with and without CSI over `grid`.
pub fn compare_homogeneous(model: CaptureModel, n: usize, grid: &[f64]) -> Result<ParadoxReport> {
    compare_homogeneous_with(model, n, grid, Fallback::default())
}

/// [`compare_homogeneous`] with explicit simulation settings. The simulator
/// is used for the perfect-CSI SINR curve when `b < 1`, which has no closed form;
/// the tolerance there is four binomial standard deviations.
pub fn compare_homogeneous_with(model: CaptureModel, n: usize, grid: &[f64], fallback: Fallback) -> Result<ParadoxReport> {
    check_grid(grid)?;
    let plain = Regime::new(model, Csi::None);
    let informed = Regime::new(model, Csi::Perfect);
    let rho_nocsi = grid.iter().map(|&p| plain.homogeneous(p, n)).collect::<Result<Vec<f64>>>()?;

    let simulated = matches!(model, CaptureModel::Sinr { b, .. } if b < 1.0);
    let (rho_csi, tolerance) = if simulated {
        let mut rho = Vec::with_capacity(grid.len());
        let mut tol = Vec::with_capacity(grid.len());
        for &p in grid {
            let t = run(&homogeneous_scenario(model, n, p, CsiMode::Perfect, fallback)?);
            let mean = t.rho_hat.iter().sum::<f64>() / n as f64;
            rho.push(mean);
            tol.push(4.0 * binomial_sigma(mean, fallback.slots * n as u64));
        }
        (rho, tol)
    } else {
        let rho = grid.iter().map(|&p| informed.homogeneous(p, n)).collect::<Result<Vec<f64>>>()?;
        (rho, vec![CLOSED_FORM_TOL; grid.len()])
    };

    let gap: Vec<f64> = rho_nocsi.iter().zip(&rho_csi).map(|(a, b)| a - b).collect();
    let paradox_present = gap.iter().zip(&tolerance).all(|(g, t)| *g >= -t);
    Ok(ParadoxReport { model, n, grid: grid.to_vec(), rho_nocsi, rho_csi, gap, tolerance, simulated, paradox_present })
}

/// `p (1 - b p/(b+1))^{n-1} + (1-p)^n - ((1-p) + p^{b+1}/(b+1))^{n-1}`, which
/// equals no-CSI minus perfect-CSI homogeneous SINR throughput without noise.
pub fn sinr_paradox_margin(b: f64, n: usize, p: f64) -> f64 {
    let k = n as i32 - 1;
    let lhs = p * (1.0 - b * p / (b + 1.0)).powi(k) + (1.0 - p).powi(n as i32);
    let rhs = ((1.0 - p) + p.powf(b + 1.0) / (b + 1.0)).powi(k);
    lhs - rhs
}

/// Whether the noiseless SINR inequality `no-CSI >= perfect-CSI` holds at
/// every grid point. Meant for `b > 1`; smaller `b` is accepted so the
/// failure below that range can be exhibited.
pub fn sinr_paradox_inequality_holds(b: f64, n: usize, grid: &[f64]) -> bool {
    grid.iter().all(|&p| sinr_paradox_margin(b, n, p) >= -CLOSED_FORM_TOL)
}

/// Whether perfect-CSI power-capture throughput never exceeds the no-CSI one on `grid`.
pub fn power_paradox_inequality_holds(n: usize, delta: f64, grid: &[f64]) -> Result<bool> {
    let guard = crate::models::Guard::new(delta)?;
    Ok(grid
        .iter()
        .all(|&p| power_csi_homog(p, n, guard) <= power_nocsi_homog(p, n, guard) + CLOSED_FORM_TOL))
}

/// Per-node comparison for a heterogeneous probability vector under SINR capture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeterogeneousGap {
    pub p: Vec<f64>,
    pub rho_nocsi: Vec<f64>,
    pub rho_csi: Vec<f64>,
    /// `rho_nocsi - rho_csi`.
    pub gap: Vec<f64>,
    /// Standard deviation of each CSI value when simulated, else zero.
    pub csi_sigma: Vec<f64>,
    pub simulated: bool,
}

impl HeterogeneousGap {
    /// Every node loses throughput with CSI.
    pub fn all_lose(&self) -> bool {
        self.gap.iter().zip(&self.csi_sigma).all(|(g, s)| *g > 4.0 * s)
    }
}

/// No-CSI versus perfect-CSI SINR throughput at the same `p`. When the
/// perfect-CSI closed form is not exact at `p`, the CSI column is simulated
/// and `simulated` is set.
pub fn heterogeneous_case_compare(p: &[f64], b: f64, noise_ratio: f64) -> Result<HeterogeneousGap> {
    heterogeneous_case_compare_with(p, b, noise_ratio, Fallback { slots: 1_000_000, seed: 0 })
}

pub fn heterogeneous_case_compare_with(p: &[f64], b: f64, noise_ratio: f64, fallback: Fallback) -> Result<HeterogeneousGap> {
    let model = CaptureModel::sinr(b, noise_ratio)?;
    let rho_nocsi = Regime::new(model, Csi::None).throughput(p)?;
    let exact = (0..p.len()).all(|i| sinr_csi_node_valid(p, i, b, noise_ratio));
    let (rho_csi, csi_sigma) = if exact {
        (Regime::new(model, Csi::Perfect).throughput(p)?, vec![0.0; p.len()])
    } else {
        let nodes = p.iter().map(|&q| NodeSpec::new(0.0, CsiMode::Perfect, q)).collect::<Result<Vec<_>>>()?;
        let t = run(&Scenario::new(nodes, model, fallback.seed, fallback.slots)?);
        let sigma = t.rho_hat.iter().map(|&r| binomial_sigma(r, fallback.slots)).collect();
        (t.rho_hat, sigma)
    };
    let gap = rho_nocsi.iter().zip(&rho_csi).map(|(a, b)| a - b).collect();
    Ok(HeterogeneousGap { p: p.to_vec(), rho_nocsi, rho_csi, gap, csi_sigma, simulated: !exact })
}

/// Paired simulation estimate of the homogeneous per-node gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedGap {
    pub mean: f64,
    pub std_error: f64,
}

/// Gap `no-CSI - CSI` at common `p`, estimated with common random numbers:
/// both runs of a replication share the fading sequence. `replications >= 2`.
pub fn simulated_gap(model: CaptureModel, n: usize, p: f64, fallback: Fallback, replications: usize) -> Result<SimulatedGap> {
    if replications < 2 {
        return Err(Error::invalid("need at least two replications for a standard error"));
    }
    let per_node = |csi: CsiMode, seed: u64| -> Result<f64> {
        let t = run(&homogeneous_scenario(model, n, p, csi, Fallback { seed, ..fallback })?);
        Ok(t.rho_hat.iter().sum::<f64>() / n as f64)
    };
    let diffs = (0..replications)
        .map(|k| {
            let seed = replication_seed(fallback.seed, k as u64);
            Ok(per_node(CsiMode::None, seed)? - per_node(CsiMode::Perfect, seed)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let reps = replications as f64;
    let mean = diffs.iter().sum::<f64>() / reps;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1.0);
    Ok(SimulatedGap { mean, std_error: (var / reps).sqrt() })
}
