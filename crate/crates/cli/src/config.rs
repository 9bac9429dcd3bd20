//! Scenario files (TOML).
//!
//! ```toml
//! [model]
//! kind = "sinr"          # or "power"
//! b = 5.0
//! noise_ratio = 0.01     # power: delta = 1.0 or delta = "inf"
//!
//! [[nodes]]
//! demand = 0.3957
//! csi = "none"           # "perfect" or { quantized = { cutpoints = [..], probs = [..] } }
//! p = 0.52               # optional; used by throughput and simulate
//!
//! [sim]
//! slots = 1000000
//! seed = 1
//! replications = 1
//!
//! [dynamics]
//! eps = "harmonic"       # or a constant step such as 0.1
//! max_iter = 100000
//! update_every_slots = 100
//! estimator = "analytic" # or "empirical"
//!
//! [paradox]
//! n = [2, 10, 50]
//! ```

use std::path::Path;

use aloha_core::dynamics::{DynamicsConfig, EpsSchedule, Estimator, UpdateOrder};
use aloha_core::models::{CaptureModel, CsiMode, NodeSpec, QuantizedCsi, Scenario};
use aloha_core::{Csi, Regime};
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub model: ModelSpec,
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradox: Option<ParadoxSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Sinr {
        b: f64,
        #[serde(default)]
        noise_ratio: f64,
    },
    Power {
        delta: DeltaSpec,
    },
}

/// A guard zone: a number, or the string `"inf"` for the collision channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Finite(f64),
    Named(Infinite),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Infinite {
    #[serde(rename = "inf")]
    Inf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub demand: f64,
    #[serde(default = "default_csi")]
    pub csi: CsiSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CsiSpec {
    None,
    Perfect,
    Quantized { cutpoints: Vec<f64>, probs: Vec<f64> },
}

fn default_csi() -> CsiSpec {
    CsiSpec::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub slots: u64,
    pub seed: u64,
    pub replications: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { slots: 1_000_000, seed: 0, replications: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Constant(f64),
    Named(Harmonic),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Harmonic {
    #[serde(rename = "harmonic")]
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    Synchronous,
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub eps: EpsSpec,
    pub max_iter: usize,
    pub update_every_slots: u64,
    pub estimator: EstimatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_updates: Option<usize>,
    #[serde(default = "default_order")]
    pub order: OrderKind,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_order() -> OrderKind {
    OrderKind::Synchronous
}

fn default_record_every() -> usize {
    1
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            eps: EpsSpec::Named(Harmonic::Harmonic),
            max_iter: 2_000_000,
            update_every_slots: 100,
            estimator: EstimatorKind::Analytic,
            window_updates: None,
            order: OrderKind::Synchronous,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadoxSection {
    pub n: Vec<usize>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn validate(&self) -> Result<()> {
        self.capture_model()?;
        if self.nodes.is_empty() {
            bail!("nodes: at least one node is required");
        }
        for (i, node) in self.nodes.iter().enumerate() {
            self.node_spec(i, node.p.unwrap_or(0.0)).with_context(|| format!("nodes[{i}]"))?;
        }
        if self.sim.slots == 0 {
            bail!("sim.slots must be positive");
        }
        if self.sim.replications == 0 {
            bail!("sim.replications must be positive");
        }
        let d = &self.dynamics;
        if let EpsSpec::Constant(e) = d.eps {
            if !(e > 0.0 && e <= 1.0) {
                bail!("dynamics.eps must lie in (0, 1], got {e}");
            }
        }
        if d.update_every_slots == 0 || d.record_every == 0 || d.window_updates == Some(0) {
            bail!("dynamics.update_every_slots, record_every and window_updates must be positive");
        }
        if let Some(p) = &self.paradox {
            if p.n.is_empty() || p.n.contains(&0) {
                bail!("paradox.n must list positive node counts");
            }
        }
        Ok(())
    }

    pub fn capture_model(&self) -> Result<CaptureModel> {
        let model = match self.model {
            ModelSpec::Sinr { b, noise_ratio } => CaptureModel::sinr(b, noise_ratio),
            ModelSpec::Power { delta: DeltaSpec::Finite(d) } => CaptureModel::power(d),
            ModelSpec::Power { delta: DeltaSpec::Named(Infinite::Inf) } => Ok(CaptureModel::collision()),
        };
        model.context("model")
    }

    fn csi_mode(spec: &CsiSpec) -> Result<CsiMode> {
        Ok(match spec {
            CsiSpec::None => CsiMode::None,
            CsiSpec::Perfect => CsiMode::Perfect,
            CsiSpec::Quantized { cutpoints, probs } => {
                CsiMode::Quantized(QuantizedCsi::new(cutpoints.clone(), probs.clone())?)
            }
        })
    }

    fn node_spec(&self, i: usize, p: f64) -> Result<NodeSpec> {
        let node = &self.nodes[i];
        Ok(NodeSpec::new(node.demand, Self::csi_mode(&node.csi)?, p)?)
    }

    pub fn demands(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.demand).collect()
    }

    /// Transmission probabilities: the override, else each node's `p`.
    pub fn probabilities(&self, p_override: Option<&[f64]>) -> Result<Vec<f64>> {
        if let Some(p) = p_override {
            if p.len() != self.nodes.len() {
                bail!("--p lists {} values for {} nodes", p.len(), self.nodes.len());
            }
            return Ok(p.to_vec());
        }
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| match (&n.csi, n.p) {
                (CsiSpec::Quantized { .. }, _) => Ok(0.0),
                (_, Some(p)) => Ok(p),
                (_, None) => Err(anyhow!("nodes[{i}].p is required (or pass --p)")),
            })
            .collect()
    }

    /// The analytic regime; every node must share CSI `none` or `perfect`.
    pub fn regime(&self) -> Result<Regime> {
        let csi = match &self.nodes[0].csi {
            CsiSpec::None => Csi::None,
            CsiSpec::Perfect => Csi::Perfect,
            CsiSpec::Quantized { .. } => bail!("quantized CSI is only supported by `simulate`"),
        };
        if self.nodes.iter().any(|n| n.csi != self.nodes[0].csi) {
            bail!("analytic commands need every node to use the same CSI mode");
        }
        Ok(Regime::new(self.capture_model()?, csi))
    }

    pub fn scenario(&self, p: &[f64]) -> Result<Scenario> {
        let nodes = (0..self.nodes.len()).map(|i| self.node_spec(i, p[i])).collect::<Result<Vec<_>>>()?;
        Ok(Scenario::new(nodes, self.capture_model()?, self.sim.seed, self.sim.slots)?)
    }

    pub fn dynamics_config(&self) -> DynamicsConfig {
        let d = &self.dynamics;
        DynamicsConfig {
            estimator: match d.estimator {
                EstimatorKind::Analytic => Estimator::Analytic,
                EstimatorKind::Empirical => Estimator::Empirical {
                    update_every_slots: d.update_every_slots,
                    window_updates: d.window_updates,
                    seed: self.sim.seed,
                },
            },
            eps: match d.eps {
                EpsSpec::Constant(e) => EpsSchedule::Constant(e),
                EpsSpec::Named(Harmonic::Harmonic) => EpsSchedule::Harmonic,
            },
            max_iter: d.max_iter,
            order: match d.order {
                OrderKind::Synchronous => UpdateOrder::Synchronous,
                OrderKind::RoundRobin => UpdateOrder::RoundRobin,
            },
            record_every: d.record_every,
            ..DynamicsConfig::default()
        }
    }
}
