//! Agent checkpoints: `agent.json` naming the algorithm and its networks,
//! plus one network file pair per entry.

use super::train::Learner;
use super::{AgentSAC, AgentTD3, Algorithm, Hyperparams, Policy, PolicyKind};
use crate::nn::checkpoint::io_err;
use crate::nn::{load_network, save_network, CheckpointError};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const AGENT_MANIFEST: &str = "agent.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentManifest {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub hyperparams: Hyperparams,
    /// Network file stems, in order.
    pub networks: Vec<String>,
    pub episodes: u32,
    pub total_steps: u64,
}

pub fn save_agent<T: Scalar, L: Learner<T>>(
    agent: &L,
    dir: &Path,
    episodes: u32,
    total_steps: u64,
) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let nets = agent.networks();
    for (name, net) in &nets {
        save_network(*net, dir, name)?;
    }
    let manifest = AgentManifest {
        format_version: crate::nn::checkpoint::FORMAT_VERSION,
        algorithm: agent.algorithm(),
        hyperparams: *agent.hyperparams(),
        networks: nets.iter().map(|(n, _)| n.to_string()).collect(),
        episodes,
        total_steps,
    };
    let path = dir.join(AGENT_MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> Result<AgentManifest, CheckpointError> {
    let path = dir.join(AGENT_MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: AgentManifest =
        serde_json::from_str(&text).map_err(|source| CheckpointError::Json { path: path.clone(), source })?;
    if m.format_version != crate::nn::checkpoint::FORMAT_VERSION {
        return Err(CheckpointError::Mismatch(format!(
            "agent format version {}",
            m.format_version
        )));
    }
    m.hyperparams.validate().map_err(CheckpointError::Mismatch)?;
    Ok(m)
}

#[derive(Debug, Clone)]
pub enum LoadedAgent<T> {
    Td3(AgentTD3<T>),
    Sac(AgentSAC<T>),
}

impl<T: Scalar> LoadedAgent<T> {
    pub fn policy(&self) -> Policy<T> {
        match self {
            LoadedAgent::Td3(a) => a.policy(),
            LoadedAgent::Sac(a) => a.policy(),
        }
    }
}

fn fill<T: Scalar, L: Learner<T>>(agent: &mut L, dir: &Path, m: &AgentManifest) -> Result<(), CheckpointError> {
    let mut nets = agent.networks_mut();
    let expected: Vec<&str> = nets.iter().map(|(n, _)| *n).collect();
    if expected != m.networks.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CheckpointError::Mismatch(format!(
            "{} checkpoint lists networks {:?}, expected {:?}",
            m.algorithm, m.networks, expected
        )));
    }
    for (name, net) in nets.iter_mut() {
        let loaded: crate::nn::Network<T> = load_network(dir, name)?;
        if loaded.spec != net.spec {
            return Err(CheckpointError::Mismatch(format!(
                "network `{name}` spec does not match the manifest hyperparameters"
            )));
        }
        **net = loaded;
    }
    Ok(())
}

pub fn load_agent<T: Scalar>(dir: &Path) -> Result<LoadedAgent<T>, CheckpointError> {
    let m = read_manifest(dir)?;
    Ok(match m.algorithm {
        Algorithm::DocrlD => {
            let mut a = AgentTD3::new(m.hyperparams, 0);
            fill(&mut a, dir, &m)?;
            LoadedAgent::Td3(a)
        }
        Algorithm::DocrlS => {
            let mut a = AgentSAC::new(m.hyperparams, 0);
            fill(&mut a, dir, &m)?;
            LoadedAgent::Sac(a)
        }
    })
}

/// Loads only the actor, which is all evaluation needs.
pub fn load_policy<T: Scalar>(dir: &Path) -> Result<(Algorithm, Policy<T>), CheckpointError> {
    let m = read_manifest(dir)?;
    if !m.networks.iter().any(|n| n == "actor") {
        return Err(CheckpointError::Mismatch("checkpoint has no actor network".into()));
    }
    let actor: crate::nn::Network<T> = load_network(dir, "actor")?;
    let (kind, role) = match m.algorithm {
        Algorithm::DocrlD => (PolicyKind::Deterministic, crate::nn::NetworkRole::ActorDeterministic),
        Algorithm::DocrlS => (PolicyKind::Stochastic, crate::nn::NetworkRole::ActorStochastic),
    };
    if actor.spec.role != role {
        return Err(CheckpointError::Mismatch(format!(
            "actor role {:?} does not fit algorithm {}",
            actor.spec.role, m.algorithm
        )));
    }
    Ok((m.algorithm, Policy { kind, actor }))
}
