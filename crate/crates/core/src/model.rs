//! The fitted matchup model and its versioned JSON document.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baserunning::{
    batter_mixture_weights, batter_transition_table, GroupTables, GroupWeights, StealProfile, TransitionTable,
};
use crate::dist::BetaPrior;
use crate::error::{Error, Result};
use crate::events::{Hand, Handedness, LeagueRates, OrderRates, Rates};
use crate::inference::{PlayerPosterior, PriorSpec, SamplerDiagnostics};
use crate::outcome_model::{outcome_distribution, BatterSide, Log5Weights, OutcomeDistribution, PlayerParams};

pub const MODEL_FORMAT: &str = "matchup-model";
pub const MODEL_VERSION: u32 = 1;

/// The four model variants, from pitcher-only to full base running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Pitcher parameters; batters by batting-order position.
    P,
    /// Pitcher and batter parameters.
    PB,
    /// PB fit on recency chains with averaged posterior means.
    PBR,
    /// PBR outcomes plus per-batter base-running tables.
    BR,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::P, Variant::PB, Variant::PBR, Variant::BR];

    pub fn learns_batters(self) -> bool {
        !matches!(self, Variant::P)
    }

    pub fn uses_recency(self) -> bool {
        matches!(self, Variant::PBR | Variant::BR)
    }

    pub fn uses_steals(self) -> bool {
        matches!(self, Variant::BR)
    }

    pub fn code(self) -> &'static str {
        match self {
            Variant::P => "P",
            Variant::PB => "PB",
            Variant::PBR => "PBR",
            Variant::BR => "BR",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param(format!("unknown model variant `{s}` (expected P, PB, PBR or BR)")))
    }
}

/// Posterior means (and spreads) for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerEstimate {
    pub plate_appearances: u64,
    pub base: Rates,
    pub offsets: Rates,
    pub base_sd: Rates,
    pub offset_sd: Rates,
}

impl PlayerEstimate {
    pub fn params(&self) -> PlayerParams {
        PlayerParams {
            base: self.base,
            offsets: self.offsets,
        }
    }

    /// Point estimate with no recorded uncertainty.
    pub fn exact(params: &PlayerParams) -> Self {
        PlayerEstimate {
            plate_appearances: 0,
            base: params.base,
            offsets: params.offsets,
            base_sd: [0.0; 9],
            offset_sd: [0.0; 9],
        }
    }
}

impl From<&PlayerPosterior> for PlayerEstimate {
    fn from(p: &PlayerPosterior) -> Self {
        PlayerEstimate {
            plate_appearances: p.plate_appearances,
            base: p.base_mean,
            offsets: p.offset_mean,
            base_sd: p.base_sd,
            offset_sd: p.offset_sd,
        }
    }
}

/// Steal-rate stratification: the prior, the group tables and every known
/// batter's mixture weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StealModel {
    pub prior: BetaPrior,
    pub groups: GroupTables,
    pub batters: BTreeMap<String, GroupWeights>,
}

impl StealModel {
    /// Mixture weights for `batter_id`; unknown batters get the prior's
    /// spread.
    pub fn weights(&self, batter_id: &str) -> Result<Cow<'_, GroupWeights>> {
        match self.batters.get(batter_id) {
            Some(w) => Ok(Cow::Borrowed(w)),
            None => Ok(Cow::Owned(batter_mixture_weights(
                &StealProfile::new(batter_id, 0, 0)?,
                &self.prior,
                &self.groups.boundaries,
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseRunningModel {
    pub league: TransitionTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steal: Option<StealModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupModel {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub league_rates: LeagueRates,
    pub order_rates: OrderRates,
    pub weights: Log5Weights,
    pub priors: PriorSpec,
    pub pitchers: BTreeMap<String, PlayerEstimate>,
    pub batters: BTreeMap<String, PlayerEstimate>,
    pub baserunning: BaseRunningModel,
    #[serde(default)]
    pub diagnostics: Vec<SamplerDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl MatchupModel {
    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "model format must be `{MODEL_FORMAT}`, found `{}`",
                self.format
            )));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model version {} (this build reads {MODEL_VERSION})",
                self.version
            )));
        }
        self.weights.validate()?;
        self.priors.pitcher.validate()?;
        if let Some(b) = &self.priors.batter {
            b.validate()?;
        }
        if self.variant.learns_batters() && self.priors.batter.is_none() {
            return Err(Error::Schema(format!("{} model lacks a batter prior", self.variant)));
        }
        for (id, p) in self.pitchers.iter().chain(self.batters.iter()) {
            p.params()
                .validate()
                .map_err(|e| Error::Schema(format!("player {id}: {e}")))?;
        }
        self.baserunning.league.validate()?;
        if let Some(s) = &self.baserunning.steal {
            if s.groups.tables.len() != s.groups.boundaries.len() + 1 {
                return Err(Error::Schema("steal groups and boundaries disagree in count".into()));
            }
            for t in &s.groups.tables {
                t.validate()?;
            }
            for w in s.batters.values() {
                if w.0.len() != s.groups.tables.len() {
                    return Err(Error::Schema("batter mixture weights have the wrong length".into()));
                }
            }
        }
        if self.variant.uses_steals() != self.baserunning.steal.is_some() {
            return Err(Error::Schema(format!(
                "{} model {} steal-group tables",
                self.variant,
                if self.variant.uses_steals() { "requires" } else { "must not carry" }
            )));
        }
        Ok(())
    }

    /// Parameters for `id`, or the pitcher prior means when unknown.
    pub fn pitcher_params(&self, id: &str) -> PlayerParams {
        match self.pitchers.get(id) {
            Some(p) => p.params(),
            None => self.priors.pitcher.mean_params(),
        }
    }

    /// Batter parameters for models that learn them (prior means when the
    /// batter is unknown); `None` for the pitcher-only model.
    pub fn batter_params(&self, id: &str) -> Option<PlayerParams> {
        if !self.variant.learns_batters() {
            return None;
        }
        Some(match self.batters.get(id) {
            Some(p) => p.params(),
            None => self
                .priors
                .batter
                .as_ref()
                .map(|b| b.mean_params())
                .unwrap_or_else(|| self.priors.pitcher.mean_params()),
        })
    }

    /// Outcome distribution for one plate appearance. `slot` is the
    /// batting-order position 1..=9, used by the pitcher-only model.
    pub fn matchup(
        &self,
        pitcher_id: &str,
        pitcher_hand: Hand,
        batter_id: &str,
        batter_hand: Hand,
        slot: u8,
    ) -> Result<OutcomeDistribution> {
        if !(1..=9).contains(&slot) {
            return Err(Error::param(format!("batting-order slot must be 1..9, got {slot}")));
        }
        let h = Handedness::of(pitcher_hand, batter_hand);
        let pitcher = self.pitcher_params(pitcher_id);
        let batter = self.batter_params(batter_id);
        let side = match &batter {
            Some(b) => BatterSide::Params(b),
            None => BatterSide::Rates(self.order_rates.get(slot, h)),
        };
        outcome_distribution(&pitcher, side, self.league_rates.get(h), &self.weights, h)
    }

    /// Transition table used while `batter_id` is at the plate.
    pub fn batter_table(&self, batter_id: &str) -> Result<Cow<'_, TransitionTable>> {
        match &self.baserunning.steal {
            None => Ok(Cow::Borrowed(&self.baserunning.league)),
            Some(s) => {
                let w = s.weights(batter_id)?;
                Ok(Cow::Owned(batter_transition_table(&w, &s.groups.tables)?))
            }
        }
    }

    /// Compact JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: MatchupModel = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("model document: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
