use serde::{Deserialize, Serialize};

use crate::complex::{NeighborhoodKind, NeighborhoodSpec};

/// Intra-neighborhood aggregation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraAgg {
    Sum,
    #[default]
    Mean,
}

/// Inter-neighborhood aggregation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterAgg {
    #[default]
    Sum,
    Concat,
}

/// Cell update combining the previous state with the aggregated message.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Update {
    /// `relu(H·U + m) + H`
    #[default]
    ReluResidual,
    /// `relu(H·U + m)`
    ReluPlain,
    /// `m`
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodEntry {
    #[serde(flatten)]
    pub spec: NeighborhoodSpec,
    /// Message width; defaults to the receiving rank's current width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
}

impl NeighborhoodEntry {
    pub fn new(kind: NeighborhoodKind, rank: usize) -> Self {
        Self { spec: NeighborhoodSpec::new(kind, rank), width: None }
    }
}

/// The neighborhoods feeding one receiving rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTarget {
    pub rank: usize,
    pub neighborhoods: Vec<NeighborhoodEntry>,
}

/// One message-passing layer. Ranks not listed as targets pass through unchanged.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HompLayerConfig {
    #[serde(default)]
    pub targets: Vec<RankTarget>,
    #[serde(default)]
    pub intra_agg: IntraAgg,
    #[serde(default)]
    pub inter_agg: InterAgg,
    #[serde(default)]
    pub update: Update,
}

impl HompLayerConfig {
    /// Incidence-based default over ranks `0..=max_rank`: rank 0 listens to
    /// its up-adjacency and its cofaces, higher ranks to their faces and
    /// cofaces.
    pub fn default_targets(max_rank: usize) -> Vec<RankTarget> {
        (0..=max_rank)
            .map(|r| {
                let mut nbrs = Vec::new();
                if r == 0 {
                    if max_rank >= 1 {
                        nbrs.push(NeighborhoodEntry::new(NeighborhoodKind::UpAdjacency, 0));
                        nbrs.push(NeighborhoodEntry::new(NeighborhoodKind::UpIncidence, 0));
                    } else {
                        nbrs.push(NeighborhoodEntry::new(NeighborhoodKind::Identity, 0));
                    }
                } else {
                    nbrs.push(NeighborhoodEntry::new(NeighborhoodKind::DownIncidence, r));
                    if r < max_rank {
                        nbrs.push(NeighborhoodEntry::new(NeighborhoodKind::UpIncidence, r));
                    }
                }
                RankTarget { rank: r, neighborhoods: nbrs }
            })
            .collect()
    }

    /// The configured targets, or [`HompLayerConfig::default_targets`] when none are given.
    pub fn resolved_targets(&self, max_rank: usize) -> Vec<RankTarget> {
        if self.targets.is_empty() {
            Self::default_targets(max_rank)
        } else {
            self.targets.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    /// Direct readout over 0-cells.
    #[default]
    Dr,
    /// Signal down-propagation before the 0-cell readout.
    Sdp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    NodeClassification,
    NodeRegression,
    GraphClassification,
    GraphRegression,
}

impl Task {
    pub fn is_node_level(self) -> bool {
        matches!(self, Task::NodeClassification | Task::NodeRegression)
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Task::NodeClassification | Task::GraphClassification)
    }
}

fn default_hidden() -> usize {
    32
}

fn default_layers() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_layers")]
    pub num_layers: usize,
    #[serde(default)]
    pub layer: HompLayerConfig,
    #[serde(default)]
    pub readout: ReadoutKind,
    #[serde(default)]
    pub pooling: Pooling,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(task: Task) -> Self {
        Self {
            hidden_dim: default_hidden(),
            dropout: 0.0,
            num_layers: default_layers(),
            layer: HompLayerConfig::default(),
            readout: ReadoutKind::Dr,
            pooling: Pooling::Mean,
            task,
            seed: 0,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hidden_dim < 1 {
            out.push("model.hidden_dim must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            out.push(format!("model.dropout must lie in [0, 1), got {}", self.dropout));
        }
        out
    }
}
