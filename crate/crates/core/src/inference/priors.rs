use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{mean_var, BetaPrior, GammaPrior};
use crate::error::{Error, Result};
use crate::events::{Handedness, LeagueRates, PlateAppearance, Rates, NUM_OUTCOMES};
use crate::outcome_model::PlayerParams;

pub const DEFAULT_MIN_PA: u64 = 100;
/// League pseudo-count used when smoothing a player's per-hand rates.
const RATE_SMOOTHING: f64 = 2.0;
/// Plate appearances needed against each hand before an empirical offset
/// is computed.
const MIN_HAND_PA: u64 = 10;

/// Beta priors on the nine base probabilities and gamma priors on the nine
/// handedness offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerPrior {
    pub base: [BetaPrior; NUM_OUTCOMES],
    pub offsets: [GammaPrior; NUM_OUTCOMES],
}

impl PlayerPrior {
    /// Beta priors with mean `rates` and concentration `concentration`;
    /// gamma offset priors with mean 1 and shape `offset_shape`.
    pub fn centered(rates: &Rates, concentration: f64, offset_shape: f64) -> Result<Self> {
        let mut base = [BetaPrior { alpha: 1.0, beta: 1.0 }; NUM_OUTCOMES];
        for i in 0..NUM_OUTCOMES {
            let m = rates[i];
            if !(m > 0.0 && m < 1.0) {
                return Err(Error::param(format!("prior mean {i} must be in (0,1), got {m}")));
            }
            base[i] = BetaPrior::new(m * concentration, (1.0 - m) * concentration)?;
        }
        let g = GammaPrior::new(offset_shape, offset_shape)?;
        Ok(PlayerPrior {
            base,
            offsets: [g; NUM_OUTCOMES],
        })
    }

    pub fn mean_params(&self) -> PlayerParams {
        PlayerParams {
            base: std::array::from_fn(|i| self.base[i].mean()),
            offsets: std::array::from_fn(|i| self.offsets[i].mean()),
        }
    }

    /// Normalized log prior density of `params` (`-inf` outside the support).
    pub fn ln_density(&self, params: &PlayerParams) -> f64 {
        (0..NUM_OUTCOMES)
            .map(|i| self.base[i].ln_pdf(params.base[i]) + self.offsets[i].ln_pdf(params.offsets[i]))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.base {
            BetaPrior::new(b.alpha, b.beta)?;
        }
        for g in &self.offsets {
            GammaPrior::new(g.shape, g.rate)?;
        }
        Ok(())
    }
}

/// Priors for both roles. The batter prior is absent for models that do not
/// learn batter parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub pitcher: PlayerPrior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batter: Option<PlayerPrior>,
}

impl PriorSpec {
    pub fn batter_or_err(&self) -> Result<&PlayerPrior> {
        self.batter
            .as_ref()
            .ok_or_else(|| Error::param("prior spec has no batter prior"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pitcher,
    Batter,
}

/// Empirical base rates and offsets for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSummary {
    pub player_id: String,
    pub plate_appearances: u64,
    pub base: Rates,
    /// Present only when the player has enough plate appearances against
    /// both hands.
    pub offsets: Option<Rates>,
}

/// Per-player empirical summaries.
///
/// Per-hand rates are smoothed toward the league with a small pseudo-count,
/// then inverted through the handedness model: with `r0 = a^o` and
/// `r1 = a^(1/o)`, `ln a = -sqrt(ln r0 * ln r1)` and `o = sqrt(ln r0 / ln r1)`.
pub fn player_summaries(records: &[PlateAppearance], role: Role, league: &LeagueRates) -> Vec<PlayerSummary> {
    let mut counts: BTreeMap<&str, [[u64; NUM_OUTCOMES]; 2]> = BTreeMap::new();
    for r in records {
        let id = match role {
            Role::Pitcher => r.pitcher_id.as_str(),
            Role::Batter => r.batter_id.as_str(),
        };
        counts.entry(id).or_default()[r.handedness().index()][r.outcome.index()] += 1;
    }
    counts
        .into_iter()
        .map(|(id, c)| {
            let n: [u64; 2] = [c[0].iter().sum(), c[1].iter().sum()];
            let smoothed = |h: Handedness| -> Rates {
                let k = h.index();
                let lr = league.get(h);
                std::array::from_fn(|i| {
                    (c[k][i] as f64 + RATE_SMOOTHING * lr[i]) / (n[k] as f64 + RATE_SMOOTHING)
                })
            };
            let total = n[0] + n[1];
            if n[0] >= MIN_HAND_PA && n[1] >= MIN_HAND_PA {
                let (r0, r1) = (smoothed(Handedness::Opposite), smoothed(Handedness::Same));
                let mut base = [0.0; NUM_OUTCOMES];
                let mut offsets = [0.0; NUM_OUTCOMES];
                for i in 0..NUM_OUTCOMES {
                    let (l0, l1) = (r0[i].max(1e-9).ln(), r1[i].max(1e-9).ln());
                    base[i] = (-(l0 * l1).sqrt()).exp();
                    offsets[i] = (l0 / l1).sqrt();
                }
                PlayerSummary {
                    player_id: id.to_string(),
                    plate_appearances: total,
                    base,
                    offsets: Some(offsets),
                }
            } else {
                let pooled: Rates = std::array::from_fn(|i| {
                    let lr = 0.5 * (league.by_hand[0][i] + league.by_hand[1][i]);
                    ((c[0][i] + c[1][i]) as f64 + RATE_SMOOTHING * lr) / (total as f64 + RATE_SMOOTHING)
                });
                PlayerSummary {
                    player_id: id.to_string(),
                    plate_appearances: total,
                    base: pooled,
                    offsets: None,
                }
            }
        })
        .collect()
}

/// Moment-matched priors over players with at least `min_pa` plate
/// appearances.
///
/// The spread of the base rates has the expected binomial sampling variance
/// `m(1-m) * mean(1/n)` removed before matching, so that the prior reflects
/// variation in true talent rather than noise.
pub fn fit_priors(summaries: &[PlayerSummary], min_pa: u64) -> Result<PlayerPrior> {
    let qualifying: Vec<&PlayerSummary> = summaries
        .iter()
        .filter(|s| s.plate_appearances >= min_pa.max(1))
        .collect();
    if qualifying.len() < 2 {
        return Err(Error::insufficient(format!(
            "need at least 2 players with >= {min_pa} plate appearances, found {}",
            qualifying.len()
        )));
    }
    let inv_n = qualifying
        .iter()
        .map(|s| 1.0 / s.plate_appearances as f64)
        .sum::<f64>()
        / qualifying.len() as f64;
    let mut base = [BetaPrior { alpha: 1.0, beta: 1.0 }; NUM_OUTCOMES];
    for i in 0..NUM_OUTCOMES {
        let xs: Vec<f64> = qualifying.iter().map(|s| s.base[i]).collect();
        let (m, v) = mean_var(&xs);
        let m = m.clamp(1e-6, 1.0 - 1e-6);
        base[i] = BetaPrior::from_moments(m, (v - m * (1.0 - m) * inv_n).max(0.0))?;
    }
    let with_offsets: Vec<&Rates> = qualifying.iter().filter_map(|s| s.offsets.as_ref()).collect();
    if with_offsets.len() < 2 {
        return Err(Error::insufficient(format!(
            "need at least 2 qualifying players with plate appearances against both hands, found {}",
            with_offsets.len()
        )));
    }
    let mut offsets = [GammaPrior { shape: 1.0, rate: 1.0 }; NUM_OUTCOMES];
    for i in 0..NUM_OUTCOMES {
        let xs: Vec<f64> = with_offsets.iter().map(|o| o[i]).collect();
        let (m, v) = mean_var(&xs);
        offsets[i] = GammaPrior::from_moments(m, v)?;
    }
    Ok(PlayerPrior { base, offsets })
}

/// Pitcher prior, plus a batter prior when `with_batters` is set, fit from
/// the records themselves.
pub fn fit_prior_spec(
    records: &[PlateAppearance],
    league: &LeagueRates,
    min_pa: u64,
    with_batters: bool,
) -> Result<PriorSpec> {
    let pitcher = fit_priors(&player_summaries(records, Role::Pitcher, league), min_pa)
        .map_err(|e| Error::insufficient(format!("pitcher prior: {e}")))?;
    let batter = if with_batters {
        Some(
            fit_priors(&player_summaries(records, Role::Batter, league), min_pa)
                .map_err(|e| Error::insufficient(format!("batter prior: {e}")))?,
        )
    } else {
        None
    };
    Ok(PriorSpec { pitcher, batter })
}
