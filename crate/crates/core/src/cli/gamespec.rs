//! Game spec documents: two rosters, the model that generates outcomes,
//! and each manager's policy and beliefs.
//!
//! ```json
//! {
//!   "world_model": "truth.json",
//!   "away": { "roster": "team0.json", "policy": "passive" },
//!   "home": { "roster": { "lineup": [...], ... }, "policy": "equilibrium", "model": "p.json" },
//!   "equilibrium": { "rollouts": 200 },
//!   "options": { "inning_cap": 30, "cap_mode": "tournament" }
//! }
//! ```
//!
//! Relative paths resolve against the spec's directory. A team's `model`
//! is its manager's belief and defaults to `world_model`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{CmdResult, Failure, Provenance};
use crate::error::Error;
use crate::gamesim::{CompiledGame, GameContext, GameOptions, Roster, Team};
use crate::manager::{DecisionPolicy, Equilibrium, EquilibriumConfig, Passive, PolicyName};
use crate::model::MatchupModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RosterRef {
    Path(String),
    Inline(Roster),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamSpec {
    pub roster: RosterRef,
    #[serde(default)]
    pub policy: Option<PolicyName>,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub world_model: String,
    pub away: TeamSpec,
    pub home: TeamSpec,
    #[serde(default)]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default)]
    pub options: Option<GameOptions>,
}

/// Settings resolved from flags, the config file, the spec and defaults.
#[derive(Debug, Clone, Default)]
pub struct ResolvedGame {
    pub policy: Option<PolicyName>,
    pub equilibrium: EquilibriumConfig,
    pub options: GameOptions,
}

/// Everything needed to play games, loaded and validated.
pub struct LoadedGame {
    pub ctx: GameContext,
    pub policies: [Box<dyn DecisionPolicy>; 2],
    pub policy_names: [PolicyName; 2],
}

impl LoadedGame {
    pub fn policy_refs(&self) -> [&dyn DecisionPolicy; 2] {
        [self.policies[0].as_ref(), self.policies[1].as_ref()]
    }
}

impl GameSpec {
    pub fn parse(bytes: &[u8], origin: &Path) -> CmdResult<Self> {
        serde_json::from_slice(bytes)
            .map_err(|e| Failure::from(Error::Schema(format!("{}: game spec: {e}", origin.display()))))
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_model(prov: &mut Provenance, role: String, path: &Path) -> CmdResult<MatchupModel> {
    let bytes = prov.read(role, path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    MatchupModel::from_json(&text).map_err(|e| Failure::from(Error::Schema(format!("{}: {e}", path.display()))))
}

pub fn read_spec(spec_path: &Path, prov: &mut Provenance) -> CmdResult<GameSpec> {
    let bytes = prov.read("spec", spec_path)?;
    GameSpec::parse(&bytes, spec_path)
}

/// Reads every referenced file before any game is played, so a missing
/// path fails fast.
pub fn build_game(
    spec: &GameSpec,
    spec_path: &Path,
    prov: &mut Provenance,
    overrides: &ResolvedGame,
) -> CmdResult<LoadedGame> {
    let base = spec_path.parent().unwrap_or(Path::new("."));

    let mut rosters = Vec::with_capacity(2);
    for (team, ts) in [(Team::Away, &spec.away), (Team::Home, &spec.home)] {
        let roster = match &ts.roster {
            RosterRef::Inline(r) => r.clone(),
            RosterRef::Path(rel) => {
                let path = resolve(base, rel);
                let bytes = prov.read(format!("{team}_roster"), &path)?;
                let text =
                    String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
                Roster::from_json(&text).map_err(|e| Failure::from(Error::Roster(format!("{}: {e}", path.display()))))?
            }
        };
        roster.validate()?;
        rosters.push(roster);
    }
    let rosters: [Roster; 2] = rosters.try_into().expect("two rosters");

    let world = load_model(prov, "world_model".into(), &resolve(base, &spec.world_model))?;
    let mut beliefs: [Option<MatchupModel>; 2] = [None, None];
    for (team, ts) in [(Team::Away, &spec.away), (Team::Home, &spec.home)] {
        if let Some(rel) = &ts.model {
            beliefs[team.index()] = Some(load_model(prov, format!("{team}_model"), &resolve(base, rel))?);
        }
    }

    let names = [
        overrides.policy.or(spec.away.policy).unwrap_or(PolicyName::Passive),
        overrides.policy.or(spec.home.policy).unwrap_or(PolicyName::Passive),
    ];
    overrides.equilibrium.validate()?;
    if overrides.options.inning_cap < 9 {
        return Err(Failure::domain(format!(
            "inning cap must be at least 9, got {}",
            overrides.options.inning_cap
        )));
    }

    let ctx = GameContext::new(rosters, [&world, &world], overrides.options.clone())?;
    let mut policies: Vec<Box<dyn DecisionPolicy>> = Vec::with_capacity(2);
    for team in Team::BOTH {
        policies.push(match names[team.index()] {
            PolicyName::Passive => Box::new(Passive),
            PolicyName::Equilibrium => {
                let belief = beliefs[team.index()].as_ref().unwrap_or(&world);
                let compiled = CompiledGame::from_models(&ctx.rosters, [belief, belief])?;
                Box::new(Equilibrium::new(Arc::new(compiled), overrides.equilibrium.clone())?)
            }
        });
    }
    let policies: [Box<dyn DecisionPolicy>; 2] = match <[_; 2]>::try_from(policies) {
        Ok(p) => p,
        Err(_) => unreachable!("two policies"),
    };
    Ok(LoadedGame {
        ctx,
        policies,
        policy_names: names,
    })
}
