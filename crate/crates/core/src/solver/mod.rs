//! Constrained Nash equilibria.
//!
//! A probability vector is an equilibrium iff every node's throughput equals
//! its demand, `r_i(p) = ρ_i`, since each node transmits as little as its
//! demand allows and `r_i` is nondecreasing in `p_i`.

mod potential;

pub use potential::{solve_perfect_capture, CapturePotential};

use serde::Serialize;

use crate::analytic::{Csi, Regime, MAX_NODES};
use crate::error::{Error, Result};
use crate::models::{CaptureModel, Guard};

/// Largest residual `max_i |r_i(p) - ρ_i|` a returned point may carry.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// The equilibrium with the smaller transmission probabilities.
    Preferred,
    /// The other one of a pair.
    Second,
    /// The only equilibrium.
    Unique,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub classification: Vec<Classification>,
    pub feasible: bool,
    pub iterations: usize,
}

impl EquilibriumResult {
    pub fn infeasible(iterations: usize) -> Self {
        EquilibriumResult {
            points: Vec::new(),
            residuals: Vec::new(),
            classification: Vec::new(),
            feasible: false,
            iterations,
        }
    }

    /// The preferred (or unique) point, if any.
    pub fn preferred(&self) -> Option<&[f64]> {
        self.classification
            .iter()
            .position(|c| matches!(c, Classification::Preferred | Classification::Unique))
            .map(|k| self.points[k].as_slice())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Iteration cap of the best-response loop.
    pub max_iter: usize,
    /// Residual at which the loop stops.
    pub tol: f64,
    /// Give up early when the residual has not improved for this many iterations.
    pub stall_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iter: 100_000, tol: 1e-11, stall_window: 100 }
    }
}

fn check_demands(demands: &[f64]) -> Result<()> {
    if demands.is_empty() || demands.len() > MAX_NODES {
        return Err(Error::invalid(format!("need 1..={MAX_NODES} demands, got {}", demands.len())));
    }
    if let Some(bad) = demands.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::invalid(format!("demand {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Maximum residual `max_i |r_i(p) - ρ_i|`.
pub fn residual(regime: &Regime, p: &[f64], demands: &[f64]) -> Result<f64> {
    let r = regime.throughput(p)?;
    Ok(r.iter().zip(demands).map(|(r, d)| (r - d).abs()).fold(0.0, f64::max))
}

/// Smallest `p_i` with `r_i(p_i, p_{-i}) >= demand`; `p[i]` itself is ignored.
///
/// Without CSI the throughput is linear in `p_i` and is inverted directly;
/// with perfect CSI the answer is bracketed by bisection down to ~1e-15.
pub fn best_response(i: usize, p: &[f64], demand: f64, regime: &Regime) -> Result<f64> {
    if !(0.0..=1.0).contains(&demand) {
        return Err(Error::invalid(format!("demand {demand} outside [0, 1]")));
    }
    if demand == 0.0 {
        return Ok(0.0);
    }
    let mut trial = p.to_vec();
    let mut at = |x: f64| -> Result<f64> {
        trial[i] = x;
        regime.node_throughput(i, &trial)
    };
    let full = at(1.0)?;
    if full < demand {
        // Tolerate rounding right at the boundary of the feasible set.
        if full >= demand * (1.0 - 1e-14) {
            return Ok(1.0);
        }
        return Err(Error::Infeasible { node: i });
    }
    if regime.csi == Csi::None {
        return Ok((demand / full).min(1.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? >= demand {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn unique_in(regime: &Regime, n: usize) -> bool {
    if n == 1 {
        return true;
    }
    match (regime.model, regime.csi) {
        (CaptureModel::Power { delta: Guard::Finite(d) }, Csi::None) => d == 0.0,
        (CaptureModel::Power { delta: Guard::Finite(d) }, Csi::Perfect) => d <= 1.0 / (n as f64 - 1.0),
        _ => false,
    }
}

/// Synchronous best-response iteration started from `p(0) = ρ`.
///
/// Throughputs are nonincreasing in the other nodes' probabilities, so the
/// iterates rise monotonically from below and stop at the smallest solution:
/// the preferred equilibrium.
pub fn solve_equilibrium(demands: &[f64], regime: &Regime, opts: &SolveOptions) -> Result<EquilibriumResult> {
    Ok(best_response_path(demands, regime, opts, demands.to_vec())?.0)
}

/// Same as [`solve_equilibrium`] from an arbitrary start, also returning every iterate.
pub fn best_response_path(
    demands: &[f64],
    regime: &Regime,
    opts: &SolveOptions,
    start: Vec<f64>,
) -> Result<(EquilibriumResult, Vec<Vec<f64>>)> {
    check_demands(demands)?;
    if start.len() != demands.len() {
        return Err(Error::invalid("start point and demands differ in length"));
    }
    let n = demands.len();
    let mut p = start;
    let mut path = vec![p.clone()];
    let mut res = residual(regime, &p, demands)?;
    let mut best = res;
    let mut since_best = 0usize;
    let mut iterations = 0usize;

    while res > opts.tol {
        if iterations >= opts.max_iter || since_best >= opts.stall_window {
            if res <= RESIDUAL_TOL {
                break;
            }
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        let next = (0..n)
            .map(|i| best_response(i, &p, demands[i], regime))
            .collect::<Result<Vec<f64>>>()?;
        let moved = next.iter().zip(&p).any(|(a, b)| a != b);
        p = next;
        path.push(p.clone());
        iterations += 1;
        res = residual(regime, &p, demands)?;
        if res < best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if !moved {
            break;
        }
    }
    if res > RESIDUAL_TOL {
        return Err(Error::NonConvergence { iterations, residual: res });
    }

    let class = if unique_in(regime, n) { Classification::Unique } else { Classification::Preferred };
    Ok((
        EquilibriumResult {
            points: vec![p],
            residuals: vec![res],
            classification: vec![class],
            feasible: true,
            iterations,
        },
        path,
    ))
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > 1e-13 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Root of `f(x) = target` on `[lo, hi]` where `f` is monotone and the
/// endpoints straddle the target.
fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, target: f64, mut lo: f64, mut hi: f64, rising: bool) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid)? < target) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if rising { hi } else { lo })
}

/// Symmetric equilibria `(p, …, p)` for a common demand.
///
/// The homogeneous throughput curve rises to a single peak and then falls, so
/// there is one root on the rising branch and possibly one on the falling
/// branch. A demand equal to the peak yields the single tangent root.
pub fn find_homogeneous_equilibria(demand: f64, n: usize, regime: &Regime) -> Result<EquilibriumResult> {
    if !(0.0..=1.0).contains(&demand) {
        return Err(Error::invalid(format!("demand {demand} outside [0, 1]")));
    }
    let curve = |p: f64| regime.homogeneous(p, n);
    let single = |p: f64, res: f64| EquilibriumResult {
        points: vec![vec![p; n]],
        residuals: vec![res],
        classification: vec![Classification::Unique],
        feasible: true,
        iterations: 0,
    };
    if demand == 0.0 {
        return Ok(single(0.0, 0.0));
    }

    let (mut peak_at, mut peak) = golden_max(curve, 0.0, 1.0)?;
    let at_one = curve(1.0)?;
    if at_one >= peak {
        peak_at = 1.0;
        peak = at_one;
    }
    if demand > peak + 1e-12 {
        return Err(Error::InfeasibleDemands(format!(
            "demand {demand} exceeds the peak symmetric throughput {peak}"
        )));
    }
    if demand >= peak - 1e-12 {
        return Ok(single(peak_at, (peak - demand).abs()));
    }

    let mut roots = vec![bisect(curve, demand, 0.0, peak_at, true)?];
    if at_one <= demand && peak_at < 1.0 {
        roots.push(bisect(curve, demand, peak_at, 1.0, false)?);
    }
    let residuals = roots
        .iter()
        .map(|&p| curve(p).map(|r| (r - demand).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let classification = if roots.len() == 2 {
        vec![Classification::Preferred, Classification::Second]
    } else {
        vec![Classification::Unique]
    };
    Ok(EquilibriumResult {
        points: roots.into_iter().map(|p| vec![p; n]).collect(),
        residuals,
        classification,
        feasible: true,
        iterations: 0,
    })
}

/// Every equilibrium of the no-CSI SINR game (and of the collision channel,
/// its `b → ∞` limit), including heterogeneous demands.
///
/// With `a = b/(1+b)`, `c = e^{-b N0/PT}` and `y = c ∏_j (1 - a p_j)`, the
/// equilibrium conditions give `p_i = ρ_i / (y + a ρ_i)`, and `y` must solve
/// `h(y) = ln c + (m-1) ln y - Σ_i ln(y + a ρ_i) = 0` over the `m` nodes with
/// positive demand. `h` rises then falls, so there are at most two roots; the
/// larger `y` is the preferred point.
pub fn capture_ratio_equilibria(demands: &[f64], a: f64, fade: f64) -> Result<EquilibriumResult> {
    check_demands(demands)?;
    let active: Vec<f64> = demands.iter().copied().filter(|&d| d > 0.0).collect();
    let m = active.len();
    let point = |y: f64| -> Vec<f64> { demands.iter().map(|&d| if d > 0.0 { d / (y + a * d) } else { 0.0 }).collect() };
    let sinr = |p: &[f64]| -> f64 {
        let r: Vec<f64> = (0..p.len())
            .map(|i| {
                fade * p[i]
                    * p.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| 1.0 - a * q).product::<f64>()
            })
            .collect();
        r.iter().zip(demands).map(|(r, d)| (r - d).abs()).fold(0.0, f64::max)
    };
    let finish = |ys: Vec<f64>| -> Result<EquilibriumResult> {
        let points: Vec<Vec<f64>> = ys.into_iter().map(point).collect();
        let residuals: Vec<f64> = points.iter().map(|p| sinr(p)).collect();
        if let Some(bad) = residuals.iter().find(|&&r| r > RESIDUAL_TOL) {
            return Err(Error::NonConvergence { iterations: 0, residual: *bad });
        }
        let classification = if points.len() == 2 {
            vec![Classification::Preferred, Classification::Second]
        } else {
            vec![Classification::Unique]
        };
        Ok(EquilibriumResult { points, residuals, classification, feasible: true, iterations: 0 })
    };

    if m == 0 {
        return finish(vec![fade]);
    }
    // p_i <= 1  <=>  y >= (1 - a) ρ_i
    let y_lo = active.iter().fold(0.0f64, |acc, &d| acc.max((1.0 - a) * d));
    if m == 1 {
        let y = fade - a * active[0];
        if y < y_lo * (1.0 - 1e-14) {
            return Err(Error::InfeasibleDemands("single active node cannot reach its demand".into()));
        }
        return finish(vec![y.max(y_lo)]);
    }

    let h = |y: f64| fade.ln() + (m as f64 - 1.0) * y.ln() - active.iter().map(|d| (y + a * d).ln()).sum::<f64>();
    // h'(y) = 0  <=>  Σ y/(y + aρ) = m - 1, the left side increasing in y.
    let slope_sum = |y: f64| active.iter().map(|d| y / (y + a * d)).sum::<f64>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while slope_sum(hi) < m as f64 - 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_sum(mid) < m as f64 - 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y_peak = hi.clamp(y_lo.max(f64::MIN_POSITIVE), fade);
    let h_peak = h(y_peak);
    if h_peak < -1e-13 {
        return Err(Error::InfeasibleDemands("demands lie outside the feasible region".into()));
    }
    let root = |lo: f64, hi: f64, rising: bool| -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (h(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut ys = Vec::new();
    // Falling branch: the preferred root (h(fade) < 0 whenever some ρ > 0).
    if h_peak <= 0.0 {
        ys.push(y_peak);
    } else {
        ys.push(root(y_peak, fade, false));
        // Rising branch, admissible only above y_lo.
        let floor = y_lo.max(f64::MIN_POSITIVE);
        if y_peak > floor && h(floor) < 0.0 {
            ys.push(root(floor, y_peak, true));
        }
    }
    finish(ys)
}

/// All equilibria the crate can certify for `demands`.
///
/// No-CSI SINR and the collision channel are solved exactly (both points);
/// equal demands in the other regimes use the symmetric root scan; everything
/// else returns the preferred point from best-response iteration.
pub fn solve_all(demands: &[f64], regime: &Regime, opts: &SolveOptions) -> Result<EquilibriumResult> {
    check_demands(demands)?;
    match (regime.model, regime.csi) {
        (CaptureModel::Sinr { b, noise_ratio }, Csi::None) => {
            capture_ratio_equilibria(demands, b / (1.0 + b), (-b * noise_ratio).exp())
        }
        (CaptureModel::Power { delta: Guard::Infinite }, _) => capture_ratio_equilibria(demands, 1.0, 1.0),
        (CaptureModel::Power { delta: Guard::Finite(0.0) }, Csi::None) => solve_perfect_capture(demands),
        _ => {
            let n = demands.len();
            if n > 1 && demands.iter().all(|&d| d == demands[0]) {
                find_homogeneous_equilibria(demands[0], n, regime)
            } else {
                solve_equilibrium(demands, regime, opts)
            }
        }
    }
}

/// Whether the preferred point obeys `Σ p_i <= (b+1)/b` (`b = ∞` gives 1).
pub fn within_capture_sum_bound(result: &EquilibriumResult, b: f64) -> bool {
    let bound = if b.is_infinite() { 1.0 } else { (b + 1.0) / b };
    result.preferred().is_some_and(|p| p.iter().sum::<f64>() <= bound + 1e-9)
}
