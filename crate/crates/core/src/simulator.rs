//! Slot-level Monte Carlo engine.
//!
//! Each slot draws a fresh gain for every node (transmitting or not) from the
//! gain stream, lets every node decide from its own stream, and applies the
//! capture rule. Keeping the gain stream independent of the strategies means
//! two scenarios that differ only in CSI mode see identical fading.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::models::{decide_capture_into, CaptureModel, CsiMode, QuantizedCsi, Scenario};
use crate::rng::{decision_stream, replication_seed, stream, ChaCha8Rng, GAIN_STREAM};
use crate::error::{Error, Result};

/// Counts accumulated over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub slots: u64,
    pub transmits: Vec<u64>,
    pub successes: Vec<u64>,
    /// `successes_i / slots`.
    pub rho_hat: Vec<f64>,
    /// `transmits_i / slots`.
    pub p_hat: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
enum Decision {
    Random(f64),
    Threshold(f64),
    Levels(QuantizedCsi),
}

/// Steppable simulator state; [`run`] drives it to completion, the dynamics
/// module adjusts probabilities between batches of slots.
#[derive(Debug, Clone)]
pub struct SlotEngine {
    model: CaptureModel,
    decisions: Vec<Decision>,
    gain_rng: ChaCha8Rng,
    decision_rngs: Vec<ChaCha8Rng>,
    transmitted: Vec<bool>,
    gains: Vec<f64>,
    success: Vec<bool>,
    seed: u64,
    slots: u64,
    transmits: Vec<u64>,
    successes: Vec<u64>,
}

impl SlotEngine {
    pub fn new(scenario: &Scenario) -> Self {
        let n = scenario.len();
        let decisions = scenario
            .nodes
            .iter()
            .map(|node| match node.csi() {
                CsiMode::None => Decision::Random(node.tx_prob()),
                CsiMode::Perfect => Decision::Threshold(node.threshold()),
                CsiMode::Quantized(q) => Decision::Levels(q.clone()),
            })
            .collect();
        SlotEngine {
            model: scenario.model,
            decisions,
            gain_rng: stream(scenario.seed, GAIN_STREAM),
            decision_rngs: (0..n).map(|i| stream(scenario.seed, decision_stream(i))).collect(),
            transmitted: vec![false; n],
            gains: vec![0.0; n],
            success: vec![false; n],
            seed: scenario.seed,
            slots: 0,
            transmits: vec![0; n],
            successes: vec![0; n],
        }
    }

    /// Changes node `i`'s average transmission probability. Perfect-CSI nodes
    /// move their threshold to `-ln p`; quantized nodes cannot be retuned.
    pub fn set_tx_prob(&mut self, i: usize, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("transmission probability {p} outside [0, 1]")));
        }
        match &mut self.decisions[i] {
            Decision::Random(q) => *q = p,
            Decision::Threshold(t) => *t = -p.ln(),
            Decision::Levels(_) => return Err(Error::invalid("quantized nodes cannot be retuned")),
        }
        Ok(())
    }

    /// Simulates one slot and returns the per-node success flags.
    pub fn step(&mut self) -> &[bool] {
        for g in self.gains.iter_mut() {
            *g = self.gain_rng.sample(Exp1);
        }
        for (i, d) in self.decisions.iter().enumerate() {
            let g = self.gains[i];
            self.transmitted[i] = match d {
                Decision::Random(p) => self.decision_rngs[i].random::<f64>() < *p,
                Decision::Threshold(t) => g > *t,
                Decision::Levels(q) => self.decision_rngs[i].random::<f64>() < q.probs()[q.level_of(g)],
            };
        }
        decide_capture_into(&self.model, &self.transmitted, &self.gains, &mut self.success);
        self.slots += 1;
        for i in 0..self.success.len() {
            self.transmits[i] += self.transmitted[i] as u64;
            self.successes[i] += self.success[i] as u64;
        }
        &self.success
    }

    pub fn advance(&mut self, slots: u64) {
        for _ in 0..slots {
            self.step();
        }
    }

    /// Forgets the counts while keeping the random streams where they are.
    pub fn reset_counts(&mut self) {
        self.slots = 0;
        self.transmits.fill(0);
        self.successes.fill(0);
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn trace(&self) -> SimTrace {
        let per_slot = |c: &u64| if self.slots == 0 { 0.0 } else { *c as f64 / self.slots as f64 };
        SimTrace {
            slots: self.slots,
            transmits: self.transmits.clone(),
            successes: self.successes.clone(),
            rho_hat: self.successes.iter().map(per_slot).collect(),
            p_hat: self.transmits.iter().map(per_slot).collect(),
            seed: self.seed,
        }
    }
}

/// Runs `scenario.slots` slots from the scenario seed.
pub fn run(scenario: &Scenario) -> SimTrace {
    let mut engine = SlotEngine::new(scenario);
    engine.advance(scenario.slots);
    engine.trace()
}

/// Mean empirical throughput across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputEstimate {
    pub mean: Vec<f64>,
    /// Standard error of the mean; `None` for a single replication.
    pub std_error: Option<Vec<f64>>,
    pub replications: usize,
    pub slots_per_replication: u64,
}

/// Runs `replications` independent copies of `scenario`, replication `k`
/// seeded with [`replication_seed`]`(scenario.seed, k)`.
pub fn estimate_throughput(scenario: &Scenario, replications: usize) -> Result<ThroughputEstimate> {
    if replications == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let n = scenario.len();
    let runs: Vec<Vec<f64>> = (0..replications)
        .map(|k| {
            let mut sc = scenario.clone();
            sc.seed = replication_seed(scenario.seed, k as u64);
            run(&sc).rho_hat
        })
        .collect();
    let reps = replications as f64;
    let mean: Vec<f64> = (0..n).map(|i| runs.iter().map(|r| r[i]).sum::<f64>() / reps).collect();
    let std_error = (replications > 1).then(|| {
        (0..n)
            .map(|i| {
                let var = runs.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (reps - 1.0);
                (var / reps).sqrt()
            })
            .collect()
    });
    Ok(ThroughputEstimate { mean, std_error, replications, slots_per_replication: scenario.slots })
}

/// Binomial standard deviation of a per-slot frequency with mean `r` over `slots`.
pub fn binomial_sigma(r: f64, slots: u64) -> f64 {
    (r * (1.0 - r) / slots as f64).sqrt()
}
