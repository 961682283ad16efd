//! Named start/goal presets.

use super::{Goal, WorldConfig};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScenarioKind {
    /// Air start, underwater goal at the tank bottom.
    A2W,
    W2A,
    A2W2,
    W2A2,
}

const AIR_START: [f64; 3] = [0.0, 0.0, 2.5];
const BOTTOM_A: [f64; 3] = [2.0, 3.0, -1.0];
const BOTTOM_B: [f64; 3] = [3.6, -2.4, -1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub risers: bool,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, risers: bool) -> Self {
        Scenario { kind, risers }
    }

    pub fn name(&self) -> String {
        let base = self.kind.to_string();
        if self.risers {
            base
        } else {
            format!("{base}-no-risers")
        }
    }

    pub fn start(&self) -> [f64; 3] {
        match self.kind {
            ScenarioKind::A2W | ScenarioKind::A2W2 => AIR_START,
            ScenarioKind::W2A => BOTTOM_A,
            ScenarioKind::W2A2 => BOTTOM_B,
        }
    }

    pub fn goal(&self) -> Goal {
        let position = match self.kind {
            ScenarioKind::A2W => BOTTOM_A,
            ScenarioKind::A2W2 => BOTTOM_B,
            ScenarioKind::W2A | ScenarioKind::W2A2 => AIR_START,
        };
        Goal { position }
    }

    /// Applies the riser switch to `base`.
    pub fn world(&self, base: WorldConfig) -> WorldConfig {
        if self.risers {
            base
        } else {
            base.without_risers()
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::A2W => "a2w",
            ScenarioKind::W2A => "w2a",
            ScenarioKind::A2W2 => "a2w-2",
            ScenarioKind::W2A2 => "w2a-2",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a2w" => Ok(ScenarioKind::A2W),
            "w2a" => Ok(ScenarioKind::W2A),
            "a2w-2" => Ok(ScenarioKind::A2W2),
            "w2a-2" => Ok(ScenarioKind::W2A2),
            other => Err(format!(
                "unknown scenario `{other}` (expected a2w, w2a, a2w-2 or w2a-2)"
            )),
        }
    }
}

impl TryFrom<String> for ScenarioKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScenarioKind> for String {
    fn from(k: ScenarioKind) -> String {
        k.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Env, EnvMode, RewardConfig};

    #[test]
    fn presets_reset_cleanly_with_and_without_risers() {
        for kind in [ScenarioKind::A2W, ScenarioKind::W2A, ScenarioKind::A2W2, ScenarioKind::W2A2] {
            for risers in [true, false] {
                let sc = Scenario::new(kind, risers);
                let mut env = Env::new(sc.world(WorldConfig::default()), RewardConfig::default(), EnvMode::Evaluation).unwrap();
                env.reset(sc.start(), sc.goal(), 0).unwrap();
                assert_eq!(kind.to_string().parse::<ScenarioKind>().unwrap(), kind);
            }
        }
    }

    #[test]
    fn swapped_pairs() {
        let a = Scenario::new(ScenarioKind::A2W, true);
        let w = Scenario::new(ScenarioKind::W2A, true);
        assert_eq!(a.start(), w.goal().position);
        assert_eq!(a.goal().position, w.start());
    }
}
