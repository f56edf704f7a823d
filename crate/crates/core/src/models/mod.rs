//! Dynamics models sharing one prediction contract:
//! `(state, action history, interval δ) → next state`.

mod encoder;
mod history;
mod nlc;
mod oracle;
mod rnn;

use std::path::Path;

pub use encoder::SeqEncoder;
pub use history::{ActionHistory, HistoryBatch, MAX_HISTORY};
pub use nlc::{NlcConfig, NlcModel};
pub use oracle::OracleModel;
pub use rnn::{RnnConfig, RnnModel};

use crate::error::{Error, Result};
use crate::pipeline::{NormStats, WindowBatch};
use crate::tensor::{Checkpoint, Params, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Nlc,
    Rnn,
    Oracle,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nlc => "nlc",
            ModelKind::Rnn => "rnn",
            ModelKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nlc" => Ok(ModelKind::Nlc),
            "rnn" | "dt-rnn" => Ok(ModelKind::Rnn),
            "oracle" => Ok(ModelKind::Oracle),
            _ => Err(Error::Config(format!("unknown model kind `{s}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which state representation a model consumes and produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSpace {
    /// Raw simulator state `[q, q̇]`.
    Raw,
    /// Observation vector (trigonometric angle encoding).
    Observation,
}

pub trait DynamicsModel: Send + Sync {
    fn kind(&self) -> ModelKind;
    fn state_space(&self) -> StateSpace;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;

    /// Predicts `batch` next states (row-major) from physical states and actions.
    fn predict_batch(&self, states: &[f64], hist: &HistoryBatch, delta: f64) -> Result<Vec<f64>>;

    fn predict(&self, state: &[f64], hist: &ActionHistory, delta: f64) -> Result<Vec<f64>> {
        self.predict_batch(state, &HistoryBatch::single(hist)?, delta)
    }
}

/// A model whose parameters are fitted by gradient descent on standardized windows.
pub trait Trainable: Send + Sync {
    fn params(&self) -> &Params;
    fn params_mut(&mut self) -> &mut Params;
    /// Standardized predictions for a batch, recorded on `tape`.
    fn forward_batch(&self, tape: &mut Tape, batch: &WindowBatch) -> Result<Var>;
    fn to_checkpoint(&self) -> Checkpoint;
}

pub(crate) fn checkpoint_meta(kind: ModelKind, state_dim: usize, action_dim: usize, omega: f64) -> Vec<(String, String)> {
    vec![
        ("kind".into(), kind.name().into()),
        ("state_dim".into(), state_dim.to_string()),
        ("action_dim".into(), action_dim.to_string()),
        ("omega".into(), format!("{omega:e}")),
    ]
}

pub(crate) struct CheckpointHeader {
    pub state_dim: usize,
    pub action_dim: usize,
    pub omega: f64,
}

impl CheckpointHeader {
    pub fn parse(ck: &Checkpoint, expect: ModelKind) -> Result<Self> {
        let kind: ModelKind = ck.meta_required("kind")?.parse()?;
        if kind != expect {
            return Err(Error::Format(format!("checkpoint holds a {kind} model, expected {expect}")));
        }
        let num = |k: &str| ck.meta_required(k)?.parse::<f64>().map_err(|_| Error::Format(format!("bad `{k}`")));
        Ok(Self { state_dim: num("state_dim")? as usize, action_dim: num("action_dim")? as usize, omega: num("omega")? })
    }
}

pub(crate) fn norm_from_checkpoint(ck: &Checkpoint) -> Result<NormStats> {
    NormStats::from_named(|k| ck.params.find(k).map(|id| ck.params.get(id).data().to_vec()))
}

/// Copies every parameter of `dst` from the same-named array in `src`.
pub(crate) fn restore_params(dst: &mut Params, src: &Params) -> Result<()> {
    for id in dst.ids().collect::<Vec<_>>() {
        let name = dst.name(id).to_string();
        let sid = src.find(&name).ok_or_else(|| Error::Format(format!("checkpoint lacks parameter `{name}`")))?;
        if src.get(sid).shape() != dst.get(id).shape() {
            return Err(Error::Format(format!("parameter `{name}` has shape {:?}, expected {:?}", src.get(sid).shape(), dst.get(id).shape())));
        }
        *dst.get_mut(id) = src.get(sid).clone();
    }
    Ok(())
}

/// A learned model loaded from disk.
#[derive(Clone, Debug)]
pub enum LearnedModel {
    Nlc(NlcModel),
    Rnn(RnnModel),
}

impl LearnedModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        match ck.meta_required("kind")?.parse()? {
            ModelKind::Nlc => Ok(Self::Nlc(NlcModel::from_checkpoint(ck)?)),
            ModelKind::Rnn => Ok(Self::Rnn(RnnModel::from_checkpoint(ck)?)),
            ModelKind::Oracle => Err(Error::Format("oracle models are not stored in checkpoints".into())),
        }
    }

    /// Freshly initialized model of `kind` with default architecture.
    pub fn new(kind: ModelKind, norm: NormStats, omega: f64, seed: u64) -> Result<Self> {
        let (dx, da) = (norm.state_dim(), norm.action_dim());
        match kind {
            ModelKind::Nlc => Ok(Self::Nlc(NlcModel::new(NlcConfig::new(dx, da, omega), norm, seed))),
            ModelKind::Rnn => Ok(Self::Rnn(RnnModel::new(RnnConfig::new(dx, da, omega), norm, seed))),
            ModelKind::Oracle => Err(Error::Config("the oracle has no parameters to train".into())),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.as_dynamics().kind()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.as_trainable().to_checkpoint().save(path)
    }

    pub fn as_trainable(&self) -> &dyn Trainable {
        match self {
            Self::Nlc(m) => m,
            Self::Rnn(m) => m,
        }
    }

    pub fn as_trainable_mut(&mut self) -> &mut dyn Trainable {
        match self {
            Self::Nlc(m) => m,
            Self::Rnn(m) => m,
        }
    }

    /// Shared handle for planners.
    pub fn into_shared(self) -> std::sync::Arc<dyn DynamicsModel> {
        match self {
            Self::Nlc(m) => std::sync::Arc::new(m),
            Self::Rnn(m) => std::sync::Arc::new(m),
        }
    }

    pub fn as_dynamics(&self) -> &dyn DynamicsModel {
        match self {
            Self::Nlc(m) => m,
            Self::Rnn(m) => m,
        }
    }
}
