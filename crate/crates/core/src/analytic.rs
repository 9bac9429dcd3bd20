//! Average per-node throughput `r_i(p_i, p_{-i})` in the four analytic regimes:
//! SINR or power capture, each with no CSI or perfect CSI at the transmitters.
//!
//! With perfect CSI node `i` transmits iff its gain exceeds `T_i = -ln p_i`,
//! so `p_i` is still its average transmission probability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{CaptureModel, Guard};
use crate::quadrature;

/// Largest network the heterogeneous formulas accept.
pub const MAX_NODES: usize = 64;

const CSI_QUAD_TOL: f64 = 1e-12;

/// Per-node average throughput, packets per slot.
pub type ThroughputVector = Vec<f64>;

/// Channel knowledge covered by closed forms. Quantized CSI is simulator-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Csi {
    None,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub model: CaptureModel,
    pub csi: Csi,
}

/// Elementary symmetric polynomials `e_0..=e_m` of `xs`, by the usual
/// one-pass recurrence.
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (m, &x) in xs.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

fn others(p: &[f64], i: usize) -> impl Iterator<Item = f64> + '_ {
    p.iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, &x)| x)
}

/// No CSI, SINR capture: `r_i = e^{-b N0/PT} p_i ∏_{j≠i} (1 - b p_j / (1 + b))`.
pub fn sinr_nocsi_throughput(p: &[f64], b: f64, noise_ratio: f64) -> ThroughputVector {
    let fade = (-b * noise_ratio).exp();
    let a = b / (1.0 + b);
    (0..p.len())
        .map(|i| fade * p[i] * others(p, i).map(|q| 1.0 - a * q).product::<f64>())
        .collect()
}

/// Perfect-CSI SINR throughput together with the flag telling whether the
/// closed form is exact for these thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrCsiThroughput {
    pub values: ThroughputVector,
    /// Holds when every pair of active nodes satisfies `T_i <= b (T_j + N0/PT)`,
    /// i.e. a node's own threshold never binds once anyone else transmits.
    pub valid: bool,
}

/// Whether node `i`'s threshold never binds in a multi-transmitter slot.
pub fn sinr_csi_node_valid(p: &[f64], i: usize, b: f64, noise_ratio: f64) -> bool {
    if p[i] == 0.0 {
        return true;
    }
    let t_i = -p[i].ln();
    others(p, i)
        .filter(|&q| q > 0.0)
        .all(|q| t_i <= b * (-q.ln() + noise_ratio) * (1.0 + 1e-12))
}

fn sinr_csi_node(p: &[f64], i: usize, b: f64, noise_ratio: f64) -> f64 {
    if p[i] == 0.0 {
        return 0.0;
    }
    let fade = (-b * noise_ratio).exp();
    let captured: f64 = others(p, i).map(|q| q.powf(b + 1.0) / (b + 1.0) + (1.0 - q)).product();
    let alone: f64 = others(p, i).map(|q| 1.0 - q).product();
    fade * captured + alone * (p[i] - fade).min(0.0)
}

/// Perfect CSI, SINR capture:
/// `r_i = e^{-b N0/PT} ∏_{j≠i} (p_j^{b+1}/(b+1) + 1 - p_j) + ∏_{j≠i} (1 - p_j) min(p_i - e^{-b N0/PT}, 0)`.
pub fn sinr_csi_throughput(p: &[f64], b: f64, noise_ratio: f64) -> SinrCsiThroughput {
    let values = (0..p.len()).map(|i| sinr_csi_node(p, i, b, noise_ratio)).collect();
    let valid = (0..p.len()).all(|i| sinr_csi_node_valid(p, i, b, noise_ratio));
    SinrCsiThroughput { values, valid }
}

/// Homogeneous perfect-CSI SINR throughput. Only defined for `b >= 1`.
pub fn sinr_csi_homog(p: f64, n: usize, b: f64, noise_ratio: f64) -> Result<f64> {
    if b < 1.0 {
        return Err(Error::invalid(format!(
            "homogeneous perfect-CSI SINR closed form needs b >= 1, got {b}"
        )));
    }
    check_count(n)?;
    let fade = (-b * noise_ratio).exp();
    let k = (n - 1) as i32;
    Ok(((1.0 - p) + p.powf(b + 1.0) / (b + 1.0)).powi(k) * fade + (1.0 - p).powi(k) * (p - fade).min(0.0))
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("node count must be >= 1"))
    } else {
        Ok(())
    }
}

/// `(1 + Δ) / (k + 1 + Δ)`, with the collision limit `1` at `Δ = ∞`.
fn guard_coefficient(k: usize, delta: Guard) -> f64 {
    match delta {
        Guard::Infinite => 1.0,
        Guard::Finite(d) => (1.0 + d) / (k as f64 + 1.0 + d),
    }
}

/// `r_i / p_i` for power capture without CSI, given the other nodes'
/// probabilities: `Σ_k (-1)^k (1+Δ)/(k+1+Δ) e_k(p_{-i})`.
///
/// The alternating sum loses digits when `Σ_k e_k` is large (many busy
/// nodes); then the equivalent integral
/// `(1+Δ) ∫_0^1 ∏_j (1 - p_j u) u^Δ du` is evaluated instead.
fn power_nocsi_success(others: &[f64], delta: Guard) -> f64 {
    if let Guard::Infinite = delta {
        return others.iter().map(|q| 1.0 - q).product();
    }
    let e = elementary_symmetric(others);
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    for (k, &ek) in e.iter().enumerate() {
        let term = guard_coefficient(k, delta) * ek;
        magnitude += term;
        sum += if k % 2 == 0 { term } else { -term };
    }
    if magnitude * f64::EPSILON <= 1e-13 {
        return sum;
    }
    let d = delta.value();
    let integrand = |u: f64| others.iter().map(|q| 1.0 - q * u).product::<f64>() * u.powf(d);
    match quadrature::integrate(integrand, 0.0, 1.0, 1e-14) {
        Ok(est) => (1.0 + d) * est.value,
        Err(_) => sum,
    }
}

/// No CSI, power capture:
/// `r_i = p_i Σ_{k=0}^{n-1} (-1)^k (1+Δ)/(k+1+Δ) e_k(p_{-i})`.
pub fn power_nocsi_throughput(p: &[f64], delta: Guard) -> ThroughputVector {
    (0..p.len())
        .map(|i| {
            let rest: Vec<f64> = others(p, i).collect();
            p[i] * power_nocsi_success(&rest, delta)
        })
        .collect()
}

fn power_csi_node(p: &[f64], i: usize, delta: Guard) -> Result<f64> {
    if p[i] == 0.0 {
        return Ok(0.0);
    }
    let rest: Vec<f64> = others(p, i).filter(|&q| q > 0.0).collect();
    let d = match delta {
        Guard::Infinite => return Ok(p[i] * rest.iter().map(|q| 1.0 - q).product::<f64>()),
        Guard::Finite(d) => d,
    };
    let scale = 1.0 + d;
    let t_i = -p[i].ln();
    let integrand = |x: f64| {
        let below = -(-x / scale).exp_m1();
        rest.iter().map(|&q| (1.0 - q).max(below)).product::<f64>() * (-x).exp()
    };
    let mut breaks = vec![t_i];
    breaks.extend(rest.iter().map(|&q| -scale * q.ln()).filter(|&x| x > t_i));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(quadrature::integrate_exp_tail(integrand, &breaks, CSI_QUAD_TOL)?.value)
}

/// Perfect CSI, power capture:
/// `r_i = ∫_{T_i}^∞ ∏_{j≠i} max{1 - p_j, 1 - e^{-x/(1+Δ)}} e^{-x} dx`,
/// integrated piecewise between the kinks `x = (1+Δ) T_j`.
pub fn power_csi_throughput(p: &[f64], delta: Guard) -> Result<ThroughputVector> {
    (0..p.len()).map(|i| power_csi_node(p, i, delta)).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Homogeneous no-CSI power capture:
/// `ρ = Σ_{k=0}^{n-1} (-1)^k C(n-1,k) (1+Δ)/(k+1+Δ) p^{k+1}`.
pub fn power_nocsi_homog(p: f64, n: usize, delta: Guard) -> f64 {
    assert!(n >= 1, "node count must be >= 1");
    if let Guard::Infinite = delta {
        return p * (1.0 - p).powi(n as i32 - 1);
    }
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    for k in 0..n {
        let term = binomial(n - 1, k) * guard_coefficient(k, delta) * p.powi(k as i32 + 1);
        magnitude += term;
        sum += if k % 2 == 0 { term } else { -term };
    }
    if magnitude * f64::EPSILON <= 1e-13 {
        sum
    } else {
        p * power_nocsi_success(&vec![p; n - 1], delta)
    }
}

/// Homogeneous perfect-CSI power capture, written as the convex combination
/// `ρ' = (1 - p^Δ) p (1-p)^{n-1} + p^Δ ρ` of the collision throughput and the
/// no-CSI throughput at the same `p`.
pub fn power_csi_homog(p: f64, n: usize, delta: Guard) -> f64 {
    let weight = p.powf(delta.value());
    let collision = p * (1.0 - p).powi(n as i32 - 1);
    (1.0 - weight) * collision + weight * power_nocsi_homog(p, n, delta)
}

/// `∫_0^∞ (1 - F(x/(1+Δ)))^n f(x) dx = (1+Δ)/(1+Δ+n)` for unit exponential `F`.
pub fn power_integral_identity(n: usize, delta: f64) -> f64 {
    (1.0 + delta) / (1.0 + delta + n as f64)
}

/// The same integral evaluated by quadrature.
pub fn power_integral_quadrature(n: usize, delta: f64, tol: f64) -> Result<quadrature::Estimate> {
    let rate = n as f64 / (1.0 + delta);
    quadrature::integrate_exp_tail(|x| (-rate * x).exp() * (-x).exp(), &[0.0], tol)
}

fn check_probs(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() > MAX_NODES {
        return Err(Error::invalid(format!("need 1..={MAX_NODES} nodes, got {}", p.len())));
    }
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::invalid(format!("transmission probability {bad} outside [0, 1]")));
    }
    Ok(())
}

impl Regime {
    pub fn new(model: CaptureModel, csi: Csi) -> Self {
        Regime { model, csi }
    }

    /// Throughput of every node at probability vector `p`.
    pub fn throughput(&self, p: &[f64]) -> Result<ThroughputVector> {
        check_probs(p)?;
        match (self.model, self.csi) {
            (CaptureModel::Sinr { b, noise_ratio }, Csi::None) => Ok(sinr_nocsi_throughput(p, b, noise_ratio)),
            (CaptureModel::Sinr { b, noise_ratio }, Csi::Perfect) => {
                Ok(sinr_csi_throughput(p, b, noise_ratio).values)
            }
            (CaptureModel::Power { delta }, Csi::None) => Ok(power_nocsi_throughput(p, delta)),
            (CaptureModel::Power { delta }, Csi::Perfect) => power_csi_throughput(p, delta),
        }
    }

    /// Throughput of node `i` alone; cheaper than [`Regime::throughput`].
    pub fn node_throughput(&self, i: usize, p: &[f64]) -> Result<f64> {
        check_probs(p)?;
        if i >= p.len() {
            return Err(Error::invalid(format!("node index {i} out of range")));
        }
        match (self.model, self.csi) {
            (CaptureModel::Sinr { b, noise_ratio }, Csi::None) => {
                let a = b / (1.0 + b);
                Ok((-b * noise_ratio).exp() * p[i] * others(p, i).map(|q| 1.0 - a * q).product::<f64>())
            }
            (CaptureModel::Sinr { b, noise_ratio }, Csi::Perfect) => Ok(sinr_csi_node(p, i, b, noise_ratio)),
            (CaptureModel::Power { delta }, Csi::None) => {
                let rest: Vec<f64> = others(p, i).collect();
                Ok(p[i] * power_nocsi_success(&rest, delta))
            }
            (CaptureModel::Power { delta }, Csi::Perfect) => power_csi_node(p, i, delta),
        }
    }

    /// Per-node throughput when all `n` nodes use probability `p`.
    pub fn homogeneous(&self, p: f64, n: usize) -> Result<f64> {
        check_count(n)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("transmission probability {p} outside [0, 1]")));
        }
        match (self.model, self.csi) {
            (CaptureModel::Sinr { b, noise_ratio }, Csi::None) => {
                Ok((-b * noise_ratio).exp() * p * (1.0 - b / (1.0 + b) * p).powi(n as i32 - 1))
            }
            (CaptureModel::Sinr { b, noise_ratio }, Csi::Perfect) => sinr_csi_homog(p, n, b, noise_ratio),
            (CaptureModel::Power { delta }, Csi::None) => Ok(power_nocsi_homog(p, n, delta)),
            (CaptureModel::Power { delta }, Csi::Perfect) => Ok(power_csi_homog(p, n, delta)),
        }
    }

    /// False when the closed form is only approximate at `p` (perfect-CSI SINR
    /// with a binding threshold). Always true for the other regimes.
    pub fn closed_form_exact(&self, p: &[f64]) -> bool {
        match (self.model, self.csi) {
            (CaptureModel::Sinr { b, noise_ratio }, Csi::Perfect) => {
                (0..p.len()).all(|i| sinr_csi_node_valid(p, i, b, noise_ratio))
            }
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn esym_small() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(elementary_symmetric(&[]), vec![1.0]);
    }

    #[test]
    fn heterogeneous_two_node_cases() {
        let r = sinr_nocsi_throughput(&[0.52, 0.24], 5.0, 0.01);
        assert!(close(r[0], 0.3957, 5e-5) && close(r[1], 0.129, 5e-4), "{r:?}");
        let r = sinr_nocsi_throughput(&[0.580, 0.088], 5.0, 0.01);
        assert!(close(r[0], 0.511, 5e-4) && close(r[1], 0.04325, 5e-5), "{r:?}");

        let c = sinr_csi_throughput(&[0.52, 0.24], 5.0, 0.01);
        assert!(c.valid);
        assert!(close(c.values[0], 0.3952, 5e-5) && close(c.values[1], 0.118, 5e-4), "{c:?}");
        let c = sinr_csi_throughput(&[0.580, 0.088], 5.0, 0.01);
        assert!(close(c.values[0], 0.529, 5e-4) && close(c.values[1], 0.04300, 5e-5), "{c:?}");
    }

    #[test]
    fn lone_node_sinr() {
        assert_eq!(sinr_nocsi_throughput(&[0.7], 3.0, 0.0), vec![0.7]);
    }

    #[test]
    fn sinr_homogeneous_edges() {
        assert_eq!(sinr_csi_homog(0.0, 4, 5.0, 0.0).unwrap(), 0.0);
        let top = sinr_csi_homog(1.0, 4, 5.0, 0.0).unwrap();
        assert!(close(top, (1.0f64 / 6.0).powi(3), 1e-15));
        assert!(sinr_csi_homog(0.5, 2, 0.8, 0.0).is_err());
    }

    #[test]
    fn sinr_csi_two_node_against_nested_quadrature() {
        // Independent evaluation of the success probability for two threshold
        // nodes: alone, or both transmitting with x_i > b x_j.
        let (p, b) = (0.5f64, 5.0f64);
        let t = -p.ln();
        let inner = |xj: f64| {
            let lower = t.max(b * xj);
            let tail = quadrature::integrate_exp_tail(|xi: f64| (-xi).exp(), &[lower], 1e-15).unwrap();
            tail.value * (-xj).exp()
        };
        let both = quadrature::integrate_exp_tail(inner, &[t], 1e-13).unwrap().value;
        let oracle = (1.0 - p) * p + both;
        let closed = sinr_csi_homog(p, 2, b, 0.0).unwrap();
        assert!(close(closed, oracle, 1e-6), "{closed} vs {oracle}");
    }

    #[test]
    fn power_collision_limit() {
        let r = power_nocsi_throughput(&[0.2, 0.8], Guard::Infinite);
        assert!(close(r[0], 0.04, 1e-15) && close(r[1], 0.64, 1e-15));
        assert_eq!(power_nocsi_homog(0.3, 4, Guard::Infinite), 0.3 * 0.7f64.powi(3));
    }

    #[test]
    fn power_homogeneous_values() {
        assert_eq!(power_nocsi_homog(0.42, 1, Guard::Finite(2.0)), 0.42);
        let r = power_nocsi_homog(0.5, 2, Guard::Finite(0.0));
        assert!(close(r, 0.375, 1e-15));
        assert!(close(r, (1.0 - 0.25) / 2.0, 1e-15));
        for n in 1..8 {
            for &p in &[0.0, 0.3, 0.9] {
                let d = Guard::Finite(0.0);
                assert_eq!(power_csi_homog(p, n, d), power_nocsi_homog(p, n, d));
            }
            let d = Guard::Finite(1.7);
            assert!(close(power_csi_homog(1.0, n, d), power_nocsi_homog(1.0, n, d), 1e-15));
        }
    }

    #[test]
    fn large_network_falls_back_to_integral() {
        // 60 busy nodes: the alternating series is useless, the integral is not.
        let p = vec![0.9; 60];
        let r = power_nocsi_throughput(&p, Guard::Finite(0.0));
        let sum: f64 = r.iter().sum();
        assert!(close(sum, 1.0 - 0.1f64.powi(60), 1e-10), "{sum}");
        let h = power_nocsi_homog(0.9, 60, Guard::Finite(0.0));
        assert!(close(h, r[0], 1e-12));
    }

    #[test]
    fn integral_identity() {
        assert_eq!(power_integral_identity(1, 0.0), 0.5);
        assert_eq!(power_integral_identity(2, 1.0), 0.5);
        let q = power_integral_quadrature(4, 0.3, 1e-13).unwrap();
        assert!(close(q.value, power_integral_identity(4, 0.3), 1e-10));
    }

    #[test]
    fn csi_power_without_guard_keeps_total() {
        // Without a guard zone somebody is captured whenever anybody transmits.
        let p = [0.3, 0.55, 0.8, 0.1];
        let a = power_csi_throughput(&p, Guard::Finite(0.0)).unwrap();
        let b = power_nocsi_throughput(&p, Guard::Finite(0.0));
        let busy = 1.0 - p.iter().map(|q| 1.0 - q).product::<f64>();
        assert!(close(a.iter().sum(), busy, 1e-11));
        assert!(close(b.iter().sum(), busy, 1e-13));
        // Two nodes, the weaker-threshold one alone above x: ∫_{T1}^∞ (1 - e^{-x}) e^{-x} dx.
        let two = power_csi_throughput(&[0.3, 0.55], Guard::Finite(0.0)).unwrap();
        assert!(close(two[0], 0.3 - 0.045, 1e-12));
    }

    #[test]
    fn zero_probability_nodes() {
        let regimes = [
            Regime::new(CaptureModel::sinr(5.0, 0.1).unwrap(), Csi::None),
            Regime::new(CaptureModel::sinr(5.0, 0.1).unwrap(), Csi::Perfect),
            Regime::new(CaptureModel::power(1.0).unwrap(), Csi::None),
            Regime::new(CaptureModel::power(1.0).unwrap(), Csi::Perfect),
        ];
        for r in regimes {
            assert_eq!(r.throughput(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn regime_rejects_bad_input() {
        let r = Regime::new(CaptureModel::collision(), Csi::None);
        assert!(r.throughput(&[]).is_err());
        assert!(r.throughput(&[0.5, 1.2]).is_err());
        assert!(r.throughput(&vec![0.1; MAX_NODES + 1]).is_err());
    }

    fn probs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, 1..=max_n)
    }

    proptest! {
        #[test]
        fn perfect_capture_sum_identity(p in probs(8)) {
            let total: f64 = power_nocsi_throughput(&p, Guard::Finite(0.0)).iter().sum();
            let idle: f64 = p.iter().map(|x| 1.0 - x).product();
            prop_assert!((total - (1.0 - idle)).abs() < 1e-12);
        }

        #[test]
        fn collision_limits_agree(p in probs(6)) {
            let collision: Vec<f64> = (0..p.len())
                .map(|i| p[i] * others(&p, i).map(|q| 1.0 - q).product::<f64>())
                .collect();
            let sinr = sinr_nocsi_throughput(&p, 1e9, 0.0);
            let power = power_nocsi_throughput(&p, Guard::Finite(1e9));
            for i in 0..p.len() {
                prop_assert!((sinr[i] - collision[i]).abs() < 1e-6);
                prop_assert!((power[i] - collision[i]).abs() < 1e-6);
            }
        }

        #[test]
        fn homogeneous_matches_heterogeneous(q in 0.0f64..=1.0, n in 1usize..7, b in 1.0f64..20.0,
                                             noise in 0.0f64..0.5, d in 0.0f64..6.0) {
            let p = vec![q; n];
            let s = sinr_nocsi_throughput(&p, b, noise);
            let sh = Regime::new(CaptureModel::sinr(b, noise).unwrap(), Csi::None).homogeneous(q, n).unwrap();
            prop_assert!((s[0] - sh).abs() < 1e-12);
            let c = sinr_csi_throughput(&p, b, noise);
            prop_assert!((c.values[0] - sinr_csi_homog(q, n, b, noise).unwrap()).abs() < 1e-12);
            let g = Guard::Finite(d);
            prop_assert!((power_nocsi_throughput(&p, g)[0] - power_nocsi_homog(q, n, g)).abs() < 1e-12);
            if q > 0.0 {
                let pc = power_csi_throughput(&p, g).unwrap();
                prop_assert!((pc[0] - power_csi_homog(q, n, g)).abs() < 1e-9, "{} vs {}", pc[0], power_csi_homog(q, n, g));
            }
        }

        #[test]
        fn convex_combination_identity(q in 0.0f64..=1.0, n in 1usize..10, d in 0.0f64..10.0) {
            let g = Guard::Finite(d);
            let rho = power_nocsi_homog(q, n, g);
            // Expanded form of the perfect-CSI homogeneous throughput.
            let mut expanded = q * (1.0 - q).powi(n as i32 - 1) * (1.0 - q.powf(d));
            for k in 0..n {
                let term = binomial(n - 1, k) * (1.0 + d) / (k as f64 + 1.0 + d) * q.powf(k as f64 + 1.0 + d);
                expanded += if k % 2 == 0 { term } else { -term };
            }
            prop_assert!((power_csi_homog(q, n, g) - expanded).abs() < 1e-12);
            let combo = (1.0 - q.powf(d)) * q * (1.0 - q).powi(n as i32 - 1) + q.powf(d) * rho;
            prop_assert!((power_csi_homog(q, n, g) - combo).abs() < 1e-12);
        }

        #[test]
        fn throughput_nondecreasing_in_own_probability(
            p in proptest::collection::vec(0.01f64..0.99, 2..5),
            i in 0usize..4,
            b in 0.5f64..10.0,
            noise in 0.0f64..0.3,
            d in 0.0f64..4.0,
        ) {
            let i = i % p.len();
            let regimes = [
                Regime::new(CaptureModel::sinr(b, noise).unwrap(), Csi::None),
                Regime::new(CaptureModel::sinr(b, noise).unwrap(), Csi::Perfect),
                Regime::new(CaptureModel::power(d).unwrap(), Csi::None),
                Regime::new(CaptureModel::power(d).unwrap(), Csi::Perfect),
            ];
            for r in regimes {
                let mut hi = p.clone();
                hi[i] = (p[i] + 1e-3).min(1.0);
                let lo_v = r.node_throughput(i, &p).unwrap();
                let hi_v = r.node_throughput(i, &hi).unwrap();
                prop_assert!(hi_v >= lo_v - 1e-11, "{:?}: {} -> {}", r, lo_v, hi_v);
            }
        }

        #[test]
        fn node_throughput_matches_vector(p in probs(5), d in 0.0f64..3.0) {
            let r = Regime::new(CaptureModel::power(d).unwrap(), Csi::Perfect);
            let all = r.throughput(&p).unwrap();
            for i in 0..p.len() {
                prop_assert_eq!(all[i], r.node_throughput(i, &p).unwrap());
            }
        }
    }
}
