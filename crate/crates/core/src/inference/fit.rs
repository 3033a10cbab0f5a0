use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::baserunning::{
    batter_mixture_weights, build_group_tables, fit_steal_prior, league_table, StealProfile, DEFAULT_GROUPS,
    DEFAULT_MIN_OPPORTUNITIES,
};
use crate::error::{Error, Result};
use crate::events::{batting_order_rates, league_rates, OrderRateOptions, PlateAppearance, NUM_OUTCOMES};
use crate::model::{BaseRunningModel, MatchupModel, PlayerEstimate, StealModel, Variant, MODEL_FORMAT, MODEL_VERSION};
use crate::outcome_model::Log5Weights;
use crate::rng::derive_seed;

use super::posterior::{BatterModel, PlayerPosterior, PosteriorProblem, PosteriorSummary, SamplerConfig};
use super::priors::{PriorSpec, DEFAULT_MIN_PA};
use super::recency::{chain_subsets, DEFAULT_CHAINS};

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub sampler: SamplerConfig,
    pub min_pa: u64,
    pub chains: usize,
    pub order: OrderRateOptions,
    pub groups: usize,
    pub min_opportunities: u64,
}

impl FitConfig {
    pub fn new(seed: u64) -> Self {
        FitConfig {
            sampler: SamplerConfig::new(seed),
            min_pa: DEFAULT_MIN_PA,
            chains: DEFAULT_CHAINS,
            order: OrderRateOptions::default(),
            groups: DEFAULT_GROUPS,
            min_opportunities: DEFAULT_MIN_OPPORTUNITIES,
        }
    }
}

/// Equal-weight average of per-chain posterior means. A player's average
/// runs over the chains in which he has data.
fn average_chains(summaries: &[PosteriorSummary]) -> (BTreeMap<String, PlayerEstimate>, BTreeMap<String, PlayerEstimate>, Log5Weights) {
    fn merge<'a>(maps: impl Iterator<Item = &'a BTreeMap<String, PlayerPosterior>>) -> BTreeMap<String, PlayerEstimate> {
        let mut grouped: BTreeMap<&str, Vec<&PlayerPosterior>> = BTreeMap::new();
        for m in maps {
            for (id, p) in m {
                if p.plate_appearances > 0 {
                    grouped.entry(id).or_default().push(p);
                }
            }
        }
        grouped
            .into_iter()
            .map(|(id, ps)| {
                let k = ps.len() as f64;
                let avg = |f: &dyn Fn(&PlayerPosterior) -> [f64; NUM_OUTCOMES]| -> [f64; NUM_OUTCOMES] {
                    std::array::from_fn(|i| ps.iter().map(|p| f(p)[i]).sum::<f64>() / k)
                };
                (
                    id.to_string(),
                    PlayerEstimate {
                        plate_appearances: ps.iter().map(|p| p.plate_appearances).max().unwrap_or(0),
                        base: avg(&|p| p.base_mean),
                        offsets: avg(&|p| p.offset_mean),
                        base_sd: avg(&|p| p.base_sd),
                        offset_sd: avg(&|p| p.offset_sd),
                    },
                )
            })
            .collect()
    }
    let k = summaries.len() as f64;
    let weights = Log5Weights {
        pitcher: std::array::from_fn(|i| summaries.iter().map(|s| s.weights.pitcher_mean[i]).sum::<f64>() / k),
        batter: std::array::from_fn(|i| summaries.iter().map(|s| s.weights.batter_mean[i]).sum::<f64>() / k),
    };
    (
        merge(summaries.iter().map(|s| &s.pitchers)),
        merge(summaries.iter().map(|s| &s.batters)),
        weights,
    )
}

/// Fits one model variant.
///
/// `P` samples pitchers against batting-order rates; `PB` adds batters;
/// `PBR` fits `PB` on each recency chain and averages; `BR` adds per-batter
/// base-running tables and needs `steals`.
pub fn fit_variant(
    variant: Variant,
    records: &[PlateAppearance],
    priors: &PriorSpec,
    steals: Option<&[StealProfile]>,
    config: &FitConfig,
) -> Result<MatchupModel> {
    if records.is_empty() {
        return Err(Error::insufficient("no plate appearances to fit"));
    }
    if variant.uses_steals() && steals.is_none() {
        return Err(Error::MissingInput(
            "the BR variant needs steal-opportunity data (--steals)".into(),
        ));
    }
    if variant.learns_batters() {
        priors.batter_or_err()?;
    }
    if variant.uses_recency() && config.chains == 0 {
        return Err(Error::param("chain count must be >= 1"));
    }
    let league = league_rates(records)?;
    let order = batting_order_rates(records, &league, &config.order)?;

    let summaries: Vec<PosteriorSummary> = match variant {
        Variant::P => vec![PosteriorProblem::new(records, &league, BatterModel::Slots(&order))?
            .sample(priors, &config.sampler)?],
        Variant::PB => vec![PosteriorProblem::new(records, &league, BatterModel::Players)?
            .sample(priors, &config.sampler)?],
        Variant::PBR | Variant::BR => {
            let subsets = chain_subsets(records, config.chains);
            subsets
                .par_iter()
                .enumerate()
                .map(|(c, subset)| {
                    let mut cfg = config.sampler.clone();
                    cfg.seed = derive_seed(config.sampler.seed, &[c as u64]);
                    PosteriorProblem::from_subset(records, subset, &league, BatterModel::Players)?
                        .sample(priors, &cfg)
                        .map_err(|e| match e {
                            Error::InsufficientData(m) => Error::insufficient(format!("chain {}: {m}", c + 1)),
                            other => other,
                        })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let (pitchers, batters, weights) = average_chains(&summaries);

    let table = league_table(records);
    let steal = match (variant.uses_steals(), steals) {
        (true, Some(profiles)) => Some(steal_model(records, profiles, &table, config)?),
        _ => None,
    };

    let model = MatchupModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        variant,
        league_rates: league,
        order_rates: order,
        weights,
        priors: priors.clone(),
        pitchers,
        batters,
        baserunning: BaseRunningModel { league: table, steal },
        diagnostics: summaries.into_iter().map(|s| s.diagnostics).collect(),
        provenance: None,
    };
    model.validate()?;
    Ok(model)
}

fn steal_model(
    records: &[PlateAppearance],
    profiles: &[StealProfile],
    table: &crate::baserunning::TransitionTable,
    config: &FitConfig,
) -> Result<StealModel> {
    let prior = fit_steal_prior(profiles, config.min_opportunities)?;
    let mut by_id: BTreeMap<&str, StealProfile> = BTreeMap::new();
    for p in profiles {
        if by_id.insert(&p.batter_id, p.clone()).is_some() {
            return Err(Error::Schema(format!("duplicate steal profile for batter {}", p.batter_id)));
        }
    }
    for r in records {
        by_id
            .entry(&r.batter_id)
            .or_insert_with(|| StealProfile::new(r.batter_id.clone(), 0, 0).expect("valid"));
    }
    let rates: HashMap<String, f64> = records
        .iter()
        .map(|r| (r.batter_id.clone(), by_id[r.batter_id.as_str()].posterior_rate(&prior)))
        .collect();
    let groups = build_group_tables(records, &rates, config.groups, table)?;
    let batters = by_id
        .values()
        .map(|p| Ok((p.batter_id.clone(), batter_mixture_weights(p, &prior, &groups.boundaries)?)))
        .collect::<Result<_>>()?;
    Ok(StealModel { prior, groups, batters })
}
