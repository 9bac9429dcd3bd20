//! Domain types and the per-slot reception rules.
//!
//! Channel power gains `|h|²` are unit-mean exponential (Rayleigh fading);
//! transmit power enters only through the noise-to-signal ratio `N0/PT`.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};

/// Guard zone of the power capture rule.
///
/// `Infinite` is the collision channel: a packet survives only when it is the
/// sole transmission of the slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Guard {
    Finite(f64),
    Infinite,
}

impl Guard {
    pub fn new(delta: f64) -> Result<Self> {
        if delta == f64::INFINITY {
            Ok(Guard::Infinite)
        } else if delta.is_finite() && delta >= 0.0 {
            Ok(Guard::Finite(delta))
        } else {
            Err(Error::invalid(format!("guard zone must be >= 0, got {delta}")))
        }
    }

    /// `Δ` as a float (`+∞` for the collision channel).
    pub fn value(self) -> f64 {
        match self {
            Guard::Finite(d) => d,
            Guard::Infinite => f64::INFINITY,
        }
    }
}

/// Which reception rule governs a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CaptureModel {
    /// Success iff `SINR > b`, where noise enters as `noise_ratio = N0/PT`.
    Sinr { b: f64, noise_ratio: f64 },
    /// Success iff the received power beats every other one by a factor `1 + Δ`.
    Power { delta: Guard },
}

impl CaptureModel {
    pub fn sinr(b: f64, noise_ratio: f64) -> Result<Self> {
        if b.is_nan() || b <= 0.0 {
            return Err(Error::invalid(format!("capture ratio must be > 0, got {b}")));
        }
        if !noise_ratio.is_finite() || noise_ratio < 0.0 {
            return Err(Error::invalid(format!(
                "noise ratio must be finite and >= 0, got {noise_ratio}"
            )));
        }
        Ok(CaptureModel::Sinr { b, noise_ratio })
    }

    pub fn power(delta: f64) -> Result<Self> {
        Ok(CaptureModel::Power { delta: Guard::new(delta)? })
    }

    pub fn collision() -> Self {
        CaptureModel::Power { delta: Guard::Infinite }
    }

    /// True when at most one packet can be decoded per slot.
    pub fn single_capture(&self) -> bool {
        match *self {
            CaptureModel::Sinr { b, .. } => b >= 1.0,
            CaptureModel::Power { .. } => true,
        }
    }
}

/// Quantized channel state: `cutpoints.len() + 1` levels over the gain axis and a
/// transmit probability for each level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizedCsi {
    cutpoints: Vec<f64>,
    probs: Vec<f64>,
}

impl QuantizedCsi {
    pub fn new(cutpoints: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != cutpoints.len() + 1 {
            return Err(Error::invalid(format!(
                "{} cut-points need {} level probabilities, got {}",
                cutpoints.len(),
                cutpoints.len() + 1,
                probs.len()
            )));
        }
        if cutpoints.iter().any(|c| !c.is_finite() || *c <= 0.0)
            || cutpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid("cut-points must be positive, finite and strictly increasing"));
        }
        if probs.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::invalid("level transmit probabilities must lie in [0, 1]"));
        }
        Ok(QuantizedCsi { cutpoints, probs })
    }

    pub fn cutpoints(&self) -> &[f64] {
        &self.cutpoints
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn levels(&self) -> usize {
        self.probs.len()
    }

    /// Level observed for a given channel power gain.
    pub fn level_of(&self, gain: f64) -> usize {
        self.cutpoints.partition_point(|&c| c <= gain)
    }

    /// Occurrence probability of each level under unit-mean exponential gains.
    pub fn level_probabilities(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.levels());
        let mut upper_tail = 1.0;
        for &c in &self.cutpoints {
            let tail = (-c).exp();
            out.push(upper_tail - tail);
            upper_tail = tail;
        }
        out.push(upper_tail);
        out
    }

    /// Average transmission probability `Σ s_m P(m)`, for any strategy shape.
    pub fn mean_tx_prob(&self) -> f64 {
        self.level_probabilities()
            .iter()
            .zip(&self.probs)
            .map(|(p, s)| p * s)
            .sum()
    }
}

/// What a node knows about its own channel when deciding to transmit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CsiMode {
    None,
    Perfect,
    Quantized(QuantizedCsi),
}

/// Average transmission probability of a threshold strategy
/// `(0, …, 0, s, 1, …, 1)` whose levels occur with `level_probs`.
pub fn threshold_to_prob(strategy: &[f64], level_probs: &[f64]) -> Result<f64> {
    if strategy.len() != level_probs.len() || strategy.is_empty() {
        return Err(Error::invalid("strategy and level probabilities differ in length"));
    }
    if level_probs.iter().any(|&q| q.is_nan() || q <= 0.0) {
        return Err(Error::invalid("level probabilities must be > 0"));
    }
    let total: f64 = level_probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("level probabilities sum to {total}, not 1")));
    }
    if strategy.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::NotThreshold(strategy.to_vec()));
    }
    // Zeros, then at most one fractional entry, then ones.
    if let Some(first) = strategy.iter().position(|&s| s > 0.0) {
        if strategy[first + 1..].iter().any(|&s| s != 1.0) {
            return Err(Error::NotThreshold(strategy.to_vec()));
        }
    }
    Ok(strategy.iter().zip(level_probs).map(|(s, q)| s * q).sum())
}

/// One player of the game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSpec {
    demand: f64,
    csi: CsiMode,
    tx_prob: f64,
    threshold: f64,
}

impl NodeSpec {
    /// Node with the given demand and average transmission probability. With
    /// perfect CSI the gain threshold is `-ln p`; with quantized CSI the
    /// probability is implied by the level strategy and `tx_prob` is ignored.
    pub fn new(demand: f64, csi: CsiMode, tx_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&demand) {
            return Err(Error::invalid(format!("demand must lie in [0, 1], got {demand}")));
        }
        let mut node = NodeSpec { demand, csi, tx_prob: 0.0, threshold: f64::INFINITY };
        if let CsiMode::Quantized(q) = &node.csi {
            node.tx_prob = q.mean_tx_prob();
        } else {
            node.set_tx_prob(tx_prob)?;
        }
        Ok(node)
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn csi(&self) -> &CsiMode {
        &self.csi
    }

    pub fn tx_prob(&self) -> f64 {
        self.tx_prob
    }

    /// Channel-power threshold for perfect CSI (`+∞` when `p = 0`).
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_tx_prob(&mut self, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("transmission probability must lie in [0, 1], got {p}")));
        }
        if let CsiMode::Quantized(_) = self.csi {
            return Err(Error::invalid("quantized nodes take their probability from the level strategy"));
        }
        self.tx_prob = p;
        self.threshold = -p.ln();
        Ok(())
    }
}

/// A full game instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub model: CaptureModel,
    pub seed: u64,
    pub slots: u64,
}

impl Scenario {
    pub fn new(nodes: Vec<NodeSpec>, model: CaptureModel, seed: u64, slots: u64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a scenario needs at least one node"));
        }
        if slots == 0 {
            return Err(Error::invalid("slot count must be positive"));
        }
        Ok(Scenario { nodes, model, seed, slots })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tx_probs(&self) -> Vec<f64> {
        self.nodes.iter().map(NodeSpec::tx_prob).collect()
    }

    pub fn demands(&self) -> Vec<f64> {
        self.nodes.iter().map(NodeSpec::demand).collect()
    }
}

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotOutcome {
    pub transmitted: Vec<bool>,
    pub gains: Vec<f64>,
    pub success: Vec<bool>,
}

/// `n` i.i.d. unit-mean exponential channel power gains.
pub fn sample_gains<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect()
}

/// Applies the reception rule of `model` to one slot.
pub fn decide_capture(model: &CaptureModel, transmitted: &[bool], gains: &[f64]) -> Vec<bool> {
    let mut success = vec![false; transmitted.len()];
    decide_capture_into(model, transmitted, gains, &mut success);
    success
}

/// In-place variant of [`decide_capture`] used by the slot simulator.
pub fn decide_capture_into(model: &CaptureModel, transmitted: &[bool], gains: &[f64], success: &mut [bool]) {
    assert_eq!(transmitted.len(), gains.len(), "one gain per node");
    assert_eq!(transmitted.len(), success.len(), "one outcome per node");
    success.fill(false);

    match *model {
        CaptureModel::Sinr { b, noise_ratio } => {
            for i in 0..transmitted.len() {
                if !transmitted[i] {
                    continue;
                }
                let interference: f64 = (0..transmitted.len())
                    .filter(|&j| j != i && transmitted[j])
                    .map(|j| gains[j])
                    .sum();
                success[i] = gains[i] > b * (interference + noise_ratio);
            }
        }
        CaptureModel::Power { delta } => {
            // Strongest and runner-up received powers; equal maxima both fail.
            let mut best: Option<usize> = None;
            let mut best_gain = f64::NEG_INFINITY;
            let mut runner_up = 0.0f64;
            let mut count = 0usize;
            for (i, (&tx, &g)) in transmitted.iter().zip(gains).enumerate() {
                if !tx {
                    continue;
                }
                count += 1;
                if g > best_gain {
                    if best.is_some() {
                        runner_up = runner_up.max(best_gain);
                    }
                    best = Some(i);
                    best_gain = g;
                } else {
                    runner_up = runner_up.max(g);
                }
            }
            let Some(winner) = best else { return };
            success[winner] = match delta {
                Guard::Infinite => count == 1,
                Guard::Finite(d) => count == 1 || best_gain > (1.0 + d) * runner_up,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn gain_moments() {
        let mut rng = rng::stream(11, 0);
        let g = sample_gains(1_000_000, &mut rng);
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        // P(X > 1) = e^{-1}
        let tail = g.iter().filter(|&&x| x > 1.0).count() as f64 / g.len() as f64;
        assert!((tail - (-1.0f64).exp()).abs() < 0.005, "tail {tail}");
        assert!(g.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn gains_are_deterministic() {
        let a = sample_gains(16, &mut rng::stream(3, 0));
        let b = sample_gains(16, &mut rng::stream(3, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn sinr_single_transmitter() {
        let m = CaptureModel::sinr(5.0, 0.1).unwrap();
        assert_eq!(decide_capture(&m, &[true], &[1.0]), vec![true]);
        // SINR 10 > 5, but gain 0.4 gives 4 < 5.
        assert_eq!(decide_capture(&m, &[true], &[0.4]), vec![false]);
    }

    #[test]
    fn power_guard_zone() {
        let m = CaptureModel::power(0.5).unwrap();
        assert_eq!(decide_capture(&m, &[true, true], &[1.0, 0.6]), vec![true, false]);
        assert_eq!(decide_capture(&m, &[true, true], &[1.0, 0.7]), vec![false, false]);
        // a silent node never blocks anyone
        assert_eq!(decide_capture(&m, &[true, false], &[0.1, 5.0]), vec![true, false]);
    }

    #[test]
    fn sinr_multi_capture_below_unit_ratio() {
        let m = CaptureModel::sinr(0.4, 0.0).unwrap();
        assert_eq!(decide_capture(&m, &[true, true], &[1.0, 1.0]), vec![true, true]);
    }

    #[test]
    fn power_ties_fail() {
        let m = CaptureModel::power(0.0).unwrap();
        assert_eq!(decide_capture(&m, &[true, true, true], &[2.0, 2.0, 1.0]), vec![false; 3]);
    }

    #[test]
    fn threshold_probabilities() {
        let third = [1.0 / 3.0; 3];
        assert!((threshold_to_prob(&[0.0, 0.0, 1.0], &third).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let p = threshold_to_prob(&[0.0, 0.5, 1.0], &[0.5, 0.25, 0.25]).unwrap();
        assert!((p - 0.375).abs() < 1e-15);
        assert!((threshold_to_prob(&[1.0; 3], &[0.2, 0.3, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            threshold_to_prob(&[0.5, 0.0, 1.0], &third),
            Err(Error::NotThreshold(_))
        ));
        assert!(matches!(
            threshold_to_prob(&[0.0, 0.5, 0.5], &third),
            Err(Error::NotThreshold(_))
        ));
        assert!(threshold_to_prob(&[0.0, 1.0], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn quantized_levels() {
        let q = QuantizedCsi::new(vec![0.5, 2.0], vec![0.0, 0.5, 1.0]).unwrap();
        let lp = q.level_probabilities();
        assert!((lp.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((lp[2] - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(q.level_of(0.1), 0);
        assert_eq!(q.level_of(0.5), 1);
        assert_eq!(q.level_of(3.0), 2);
        assert!(QuantizedCsi::new(vec![2.0, 1.0], vec![0.0, 0.0, 1.0]).is_err());
        assert!(QuantizedCsi::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn node_threshold_consistency() {
        for &p in &[1e-6, 0.01, 0.37, 0.9, 1.0] {
            let n = NodeSpec::new(0.1, CsiMode::Perfect, p).unwrap();
            assert!(((-n.threshold()).exp() - p).abs() < 1e-12);
        }
        let n = NodeSpec::new(0.0, CsiMode::Perfect, 0.0).unwrap();
        assert_eq!(n.threshold(), f64::INFINITY);
        assert!(NodeSpec::new(1.5, CsiMode::None, 0.5).is_err());
        assert!(NodeSpec::new(0.5, CsiMode::None, -0.1).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(CaptureModel::sinr(0.0, 0.0).is_err());
        assert!(CaptureModel::sinr(1.0, -1.0).is_err());
        assert!(CaptureModel::power(-0.5).is_err());
        assert_eq!(CaptureModel::power(f64::INFINITY).unwrap(), CaptureModel::collision());
    }

    fn slot() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|n| {
            (proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(0.001f64..10.0, n))
        })
    }

    fn collision_rule(tx: &[bool]) -> Vec<bool> {
        let k = tx.iter().filter(|&&t| t).count();
        tx.iter().map(|&t| t && k == 1).collect()
    }

    proptest! {
        #[test]
        fn infinite_guard_is_collision((tx, g) in slot()) {
            prop_assert_eq!(decide_capture(&CaptureModel::collision(), &tx, &g), collision_rule(&tx));
        }

        #[test]
        fn huge_capture_ratio_is_collision((tx, g) in slot()) {
            let m = CaptureModel::sinr(1e9, 0.0).unwrap();
            prop_assert_eq!(decide_capture(&m, &tx, &g), collision_rule(&tx));
        }

        #[test]
        fn at_most_one_success(
            (tx, g) in slot(),
            b in 1.0f64..20.0,
            noise in 0.0f64..1.0,
            delta in 0.0f64..5.0,
        ) {
            for m in [CaptureModel::sinr(b, noise).unwrap(), CaptureModel::power(delta).unwrap()] {
                let s = decide_capture(&m, &tx, &g);
                prop_assert!(s.iter().filter(|&&x| x).count() <= 1);
                prop_assert!(s.iter().zip(&tx).all(|(s, t)| !s || *t));
            }
        }

        #[test]
        fn perfect_power_capture_picks_strongest((tx, g) in slot()) {
            let s = decide_capture(&CaptureModel::power(0.0).unwrap(), &tx, &g);
            let best = (0..tx.len()).filter(|&i| tx[i]).max_by(|&a, &b| g[a].total_cmp(&g[b]));
            if let Some(b) = best {
                let unique = (0..tx.len()).filter(|&i| tx[i] && g[i] == g[b]).count() == 1;
                prop_assert_eq!(s[b], unique);
            }
        }
    }
}
