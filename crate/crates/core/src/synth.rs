//! Synthetic leagues and plate-appearance data with known parameters.
//!
//! A synthetic league is a full base-running ground-truth model plus
//! rosters built from it. Each roster has six regular hitters, three weak
//! hitters at the bottom of the order and two strong hitters on the bench,
//! so a manager that knows individual batters has pinch-hitting options
//! that a pitcher-only model cannot see.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::baserunning::{
    batter_mixture_weights, rule_successor, GroupTables, StealProfile, Successor, TransitionTable,
};
use crate::dist::BetaPrior;
use crate::error::{Error, Result};
use crate::events::{
    BaseOutState, Hand, LeagueRates, OrderRates, Outcome, PlateAppearance, PostState, Rates,
    NUM_OUTCOMES,
};
use crate::gamesim::{
    simulate_game_with, CompiledGame, GameContext, GameOptions, ModelOutcomes, Player, Roster,
};
use crate::inference::{PlayerPrior, PriorSpec};
use crate::manager::Passive;
use crate::model::{BaseRunningModel, MatchupModel, PlayerEstimate, StealModel, Variant, MODEL_FORMAT, MODEL_VERSION};
use crate::outcome_model::{logit, squash, Log5Weights, OutcomeDistribution, PlayerParams};
use crate::rng::{derive_seed, substream, unit, SimRng};

/// League-wide outcome rates in [`Outcome::ALL`] order.
pub const BASELINE: Rates = [0.22, 0.08, 0.01, 0.20, 0.26, 0.145, 0.045, 0.004, 0.036];

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 4, 1).expect("valid date")
}

/// Outcome for the uniform draw `u`.
pub fn draw_outcome(dist: &OutcomeDistribution, u: f64) -> Outcome {
    let c = dist.cumulative();
    let mut i = 0;
    while i + 1 < NUM_OUTCOMES && u >= c[i] {
        i += 1;
    }
    Outcome::ALL[i]
}

/// `n` plate appearances of one right-handed pitcher `p0` against a
/// rotating pool of `batters` batters. `probs(i)` gives the outcome
/// distribution of appearance `i`. Base-out states follow the rule
/// transitions; 40 appearances per day.
pub fn single_pitcher_records(
    n: usize,
    batters: usize,
    seed: u64,
    probs: impl Fn(usize) -> Rates,
) -> Result<Vec<PlateAppearance>> {
    if batters == 0 {
        return Err(Error::param("at least one batter is required"));
    }
    let mut rng = substream(seed, &[]);
    let mut state = BaseOutState::START;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dist = OutcomeDistribution::from_weights(probs(i))?;
        let outcome = draw_outcome(&dist, unit(&mut rng));
        let (post, runs) = rule_successor(state, outcome);
        let b = i % batters;
        out.push(PlateAppearance {
            date: start_date() + Days::new((i / 40) as u64),
            pitcher_id: "p0".into(),
            batter_id: format!("b{b}"),
            pitcher_hand: Hand::Right,
            batter_hand: if b % 2 == 0 { Hand::Left } else { Hand::Right },
            batting_order: (i % 9) as u8 + 1,
            outcome,
            pre: state,
            post,
            runs,
        });
        state = match post {
            PostState::InPlay(s) => s,
            PostState::Terminal => BaseOutState::START,
        };
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct LeagueConfig {
    pub teams: usize,
    pub pitchers: usize,
    pub seed: u64,
}

impl LeagueConfig {
    pub fn new(seed: u64) -> Self {
        LeagueConfig {
            teams: 4,
            pitchers: 6,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthLeague {
    pub truth: MatchupModel,
    pub rosters: Vec<Roster>,
    pub steals: Vec<StealProfile>,
}

/// Batter archetypes: logit shifts per outcome.
const SCRUB: Rates = [0.7, -0.4, 0.0, 0.1, 0.1, -0.5, -0.6, -0.5, -1.0];
const STAR: Rates = [-0.6, 0.4, 0.0, -0.2, -0.2, 0.3, 0.4, 0.3, 0.9];

fn gaussian(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

fn player(rng: &mut SimRng, shift: &Rates, spread: f64) -> PlayerParams {
    let raw: Rates = std::array::from_fn(|i| squash(logit(BASELINE[i]) + shift[i] + spread * gaussian(rng)));
    let total: f64 = raw.iter().sum();
    PlayerParams {
        base: raw.map(|x| x / total),
        offsets: std::array::from_fn(|_| (0.12 * gaussian(rng)).exp()),
    }
}

fn hand(rng: &mut SimRng, right: f64) -> Hand {
    if unit(rng) < right {
        Hand::Right
    } else {
        Hand::Left
    }
}

/// Rule transitions with aggressive running: from first to third on a
/// single, scoring from first on a double, tagging from second to third on
/// a fly out.
fn aggressive_successor(state: BaseOutState, outcome: Outcome) -> (PostState, u8) {
    let b = state.bases();
    let on = |base: u8| b >> base & 1 == 1;
    let in_play = |bases| PostState::InPlay(BaseOutState::new(state.outs(), bases).expect("valid"));
    match outcome {
        Outcome::Single => (
            in_play(0b001 | if on(0) { 0b100 } else { 0 }),
            on(1) as u8 + on(2) as u8,
        ),
        Outcome::Double => (in_play(0b010), state.runners()),
        Outcome::FlyOut if state.outs() < 2 => (
            PostState::InPlay(
                BaseOutState::new(state.outs() + 1, (b & 0b001) | if on(1) { 0b100 } else { 0 }).expect("valid"),
            ),
            on(2) as u8,
        ),
        _ => rule_successor(state, outcome),
    }
}

/// Table where a share `s` of plays follow aggressive running.
fn blended_table(s: f64) -> Result<TransitionTable> {
    let mut rows = Vec::new();
    for state in BaseOutState::all() {
        for outcome in Outcome::ALL {
            let (n1, r1) = rule_successor(state, outcome);
            let (n2, r2) = aggressive_successor(state, outcome);
            rows.push(if (n1, r1) == (n2, r2) {
                vec![Successor { next: n1, runs: r1, prob: 1.0 }]
            } else {
                vec![
                    Successor { next: n1, runs: r1, prob: 1.0 - s },
                    Successor { next: n2, runs: r2, prob: s },
                ]
            });
        }
    }
    TransitionTable::from_rows(rows)
}

/// Builds a base-running ground-truth model and rosters for it.
pub fn synth_league(config: &LeagueConfig) -> Result<SynthLeague> {
    if config.teams < 2 || config.pitchers == 0 {
        return Err(Error::param("a league needs at least 2 teams and 1 pitcher per team"));
    }
    let mut rng = substream(config.seed, &[0x5EED]);
    let mut pitchers = BTreeMap::new();
    let mut batters = BTreeMap::new();
    let mut rosters = Vec::with_capacity(config.teams);
    for t in 0..config.teams {
        let mut make_batter = |rng: &mut SimRng, id: String, shift: &Rates| {
            let params = player(rng, shift, 0.15);
            batters.insert(id.clone(), PlayerEstimate::exact(&params));
            Player::new(id, hand(rng, 0.6))
        };
        let lineup: Vec<Player> = (0..9)
            .map(|k| {
                let shift = if k < 6 { [0.0; 9] } else { SCRUB };
                make_batter(&mut rng, format!("t{t}b{k}"), &shift)
            })
            .collect();
        let bench: Vec<Player> = (0..2).map(|k| make_batter(&mut rng, format!("t{t}x{k}"), &STAR)).collect();
        let staff: Vec<Player> = (0..config.pitchers)
            .map(|k| {
                let params = player(&mut rng, &[0.0; 9], if k == 0 { 0.1 } else { 0.25 });
                let id = format!("t{t}p{k}");
                pitchers.insert(id.clone(), PlayerEstimate::exact(&params));
                Player::new(id, hand(&mut rng, 0.7))
            })
            .collect();
        rosters.push(Roster {
            name: format!("team{t}"),
            starter: staff[0].id.clone(),
            lineup,
            bench,
            pitchers: staff,
        });
    }

    let prior = BetaPrior::new(2.0, 28.0)?;
    let boundaries = vec![0.03, 0.05, 0.08, 0.12];
    let tables = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&s| blended_table(s))
        .collect::<Result<Vec<_>>>()?;
    let mut steals = Vec::new();
    let mut weights = BTreeMap::new();
    for id in batters.keys() {
        let rate: f64 = rand_distr::Beta::new(prior.alpha, prior.beta)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .sample(&mut rng);
        let opportunities = rng.random_range(20..300u64);
        let stolen = Binomial::new(opportunities, rate)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .sample(&mut rng);
        let profile = StealProfile::new(id.clone(), opportunities, stolen)?;
        weights.insert(id.clone(), batter_mixture_weights(&profile, &prior, &boundaries)?);
        steals.push(profile);
    }

    let centered = PlayerPrior::centered(&BASELINE, 200.0, 50.0)?;
    let truth = MatchupModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        variant: Variant::BR,
        league_rates: LeagueRates { by_hand: [BASELINE; 2] },
        order_rates: OrderRates { rates: [[BASELINE; 2]; 9] },
        weights: Log5Weights::uniform(1.0, 1.0)?,
        priors: PriorSpec {
            pitcher: centered.clone(),
            batter: Some(centered),
        },
        pitchers,
        batters,
        baserunning: BaseRunningModel {
            league: TransitionTable::from_rules(),
            steal: Some(StealModel {
                prior,
                groups: GroupTables { boundaries, tables },
                batters: weights,
            }),
        },
        diagnostics: Vec::new(),
        provenance: None,
    };
    truth.validate()?;
    Ok(SynthLeague { truth, rosters, steals })
}

/// Plays `games` round-robin games with no manager decisions and returns
/// every plate appearance. Starters leave after `batters_faced_cap`
/// batters so relievers appear in the data. Two games per day.
pub fn simulate_season(
    league: &SynthLeague,
    games: usize,
    batters_faced_cap: Option<u16>,
    seed: u64,
) -> Result<Vec<PlateAppearance>> {
    let k = league.rosters.len();
    let options = GameOptions {
        batters_faced_cap,
        ..GameOptions::default()
    };
    let mut contexts: BTreeMap<(usize, usize), GameContext> = BTreeMap::new();
    let mut records = Vec::new();
    for g in 0..games {
        let home = g % k;
        let away = (home + 1 + (g / k) % (k - 1)) % k;
        let ctx = match contexts.entry((away, home)) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                let rosters = [league.rosters[away].clone(), league.rosters[home].clone()];
                let world = CompiledGame::from_models(&rosters, [&league.truth, &league.truth])?;
                e.insert(GameContext {
                    rosters,
                    world,
                    options: options.clone(),
                })
            }
        };
        let date = start_date() + Days::new((g / 2) as u64);
        let r = simulate_game_with(
            ctx,
            [&Passive, &Passive],
            derive_seed(seed, &[g as u64]),
            &mut ModelOutcomes,
            Some(date),
        )?;
        records.extend(r.records);
    }
    Ok(records)
}
