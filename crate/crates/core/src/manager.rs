//! Decision policies: substitutions and intentional walks.
//!
//! The equilibrium manager looks one decision ahead. Every candidate is
//! applied to a copy of the state and the rest of the game is rolled out
//! with no further decisions by either side; the candidate with the highest
//! win fraction is chosen, with near-ties going to doing nothing. All
//! candidates share the same rollout streams, so their differences are not
//! swamped by independent noise.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamesim::{
    apply_decision, rollout, simulate_many, CompiledGame, GameContext, GameState, Half, ManyResult, Roster, Side,
    Team,
};
use crate::rng::substream;

pub const DEFAULT_ROLLOUTS: u32 = 2000;
pub const DEFAULT_TIE_EPSILON: f64 = 0.005;
pub const DEFAULT_MAX_PITCHERS: usize = 3;
pub const DEFAULT_MAX_BENCH: usize = 2;

/// A manager's move before a plate appearance. Players are roster indices:
/// pitchers index [`Roster::pitchers`], batters index [`Roster::batters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    NoAction,
    ChangePitcher(u8),
    PinchHit { batter: u8, slot: u8 },
    IntentionalWalk,
}

impl Decision {
    pub fn kind(self) -> &'static str {
        match self {
            Decision::NoAction => "no_action",
            Decision::ChangePitcher(_) => "change_pitcher",
            Decision::PinchHit { .. } => "pinch_hit",
            Decision::IntentionalWalk => "intentional_walk",
        }
    }

    /// Id of the player brought in, if any.
    pub fn player_id(self, roster: &Roster) -> Option<&str> {
        match self {
            Decision::ChangePitcher(p) => roster.pitchers.get(p as usize).map(|p| p.id.as_str()),
            Decision::PinchHit { batter, .. } => {
                ((batter as usize) < roster.num_batters()).then(|| roster.batter(batter as usize).id.as_str())
            }
            _ => None,
        }
    }

    pub fn describe(self, roster: &Roster) -> String {
        match self {
            Decision::PinchHit { slot, .. } => format!(
                "pinch_hit({}, slot {})",
                self.player_id(roster).unwrap_or("?"),
                slot + 1
            ),
            Decision::ChangePitcher(_) => format!("change_pitcher({})", self.player_id(roster).unwrap_or("?")),
            _ => self.kind().to_string(),
        }
    }
}

/// Every legal decision for `side`, `NoAction` first.
pub fn legal_decisions(state: &GameState, rosters: &[Roster; 2], side: Side) -> Vec<Decision> {
    candidates(state, rosters, side, usize::MAX, usize::MAX)
}

/// Legal decisions with at most `max_pitchers` pitching changes (next in
/// roster order) and `max_bench` pinch hitters.
pub fn candidates(
    state: &GameState,
    rosters: &[Roster; 2],
    side: Side,
    max_pitchers: usize,
    max_bench: usize,
) -> Vec<Decision> {
    let mut out = vec![Decision::NoAction];
    if state.terminal {
        return out;
    }
    let team = state.team(side);
    let roster = &rosters[team.index()];
    match side {
        Side::Batting => {
            let slot = state.slot[team.index()];
            out.extend(
                (9..roster.num_batters())
                    .filter(|&b| state.batter_available(team, b))
                    .take(max_bench)
                    .map(|b| Decision::PinchHit { batter: b as u8, slot }),
            );
        }
        Side::Fielding => {
            out.extend(
                (0..roster.pitchers.len())
                    .filter(|&p| state.pitcher_available(team, p))
                    .take(max_pitchers)
                    .map(|p| Decision::ChangePitcher(p as u8)),
            );
            if state.base_out.first_open() {
                out.push(Decision::IntentionalWalk);
            }
        }
    }
    out
}

pub fn is_legal(state: &GameState, rosters: &[Roster; 2], side: Side, decision: Decision) -> bool {
    if decision == Decision::NoAction {
        return true;
    }
    if state.terminal {
        return false;
    }
    let team = state.team(side);
    let roster = &rosters[team.index()];
    match (side, decision) {
        (Side::Batting, Decision::PinchHit { batter, slot }) => {
            let b = batter as usize;
            slot == state.slot[team.index()] && (9..roster.num_batters()).contains(&b) && state.batter_available(team, b)
        }
        (Side::Fielding, Decision::ChangePitcher(p)) => {
            (p as usize) < roster.pitchers.len() && state.pitcher_available(team, p as usize)
        }
        (Side::Fielding, Decision::IntentionalWalk) => state.base_out.first_open(),
        _ => false,
    }
}

/// Where in the offer protocol a policy is being consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionPoint {
    pub team: Team,
    pub side: Side,
    /// 0: batting team, 1: fielding team, 2: batting team re-offer.
    pub round: u8,
    pub seed: u64,
}

/// Win probability of the deciding team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub win_prob: f64,
    pub rollouts: u32,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub decision: Decision,
    pub value: Option<ValueEstimate>,
    pub alternatives: usize,
}

impl Choice {
    pub fn plain(decision: Decision) -> Self {
        Choice {
            decision,
            value: None,
            alternatives: 1,
        }
    }
}

pub trait DecisionPolicy: Sync {
    fn name(&self) -> &str;
    fn decide(&self, ctx: &GameContext, state: &GameState, point: &DecisionPoint) -> Result<Choice>;
}

/// Never acts.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passive;

impl DecisionPolicy for Passive {
    fn name(&self) -> &str {
        "passive"
    }

    fn decide(&self, _: &GameContext, _: &GameState, _: &DecisionPoint) -> Result<Choice> {
        Ok(Choice::plain(Decision::NoAction))
    }
}

/// Replays a decision log, acting only where the log recorded an action.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    actions: HashMap<(u32, Team, u8), Decision>,
}

impl Scripted {
    pub fn from_log(records: &[DecisionRecord]) -> Self {
        Scripted {
            actions: records
                .iter()
                .map(|r| ((r.pa_index, r.team, r.round), r.decision))
                .collect(),
        }
    }
}

impl DecisionPolicy for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn decide(&self, _: &GameContext, state: &GameState, point: &DecisionPoint) -> Result<Choice> {
        let d = self
            .actions
            .get(&(state.pa_index, point.team, point.round))
            .copied()
            .unwrap_or(Decision::NoAction);
        Ok(Choice::plain(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriumConfig {
    pub rollouts: u32,
    pub tie_epsilon: f64,
    pub max_pitchers: usize,
    pub max_bench: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            rollouts: DEFAULT_ROLLOUTS,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            max_pitchers: DEFAULT_MAX_PITCHERS,
            max_bench: DEFAULT_MAX_BENCH,
        }
    }
}

impl EquilibriumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rollouts == 0 {
            return Err(Error::param("rollouts must be >= 1"));
        }
        if !(self.tie_epsilon >= 0.0 && self.tie_epsilon.is_finite()) {
            return Err(Error::param(format!("tie_epsilon must be >= 0, got {}", self.tie_epsilon)));
        }
        Ok(())
    }
}

/// Rollout-based one-step optimizer. `belief` holds the manager's own view
/// of the matchups, which need not match the tables generating the game.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub belief: Arc<CompiledGame>,
    pub config: EquilibriumConfig,
}

impl Equilibrium {
    pub fn new(belief: Arc<CompiledGame>, config: EquilibriumConfig) -> Result<Self> {
        config.validate()?;
        Ok(Equilibrium { belief, config })
    }
}

impl DecisionPolicy for Equilibrium {
    fn name(&self) -> &str {
        "equilibrium"
    }

    fn decide(&self, ctx: &GameContext, state: &GameState, point: &DecisionPoint) -> Result<Choice> {
        decide(ctx, &self.belief, state, point, &self.config)
    }
}

/// Win fraction of `team` after applying `decision` and rolling the game
/// out `rollouts` times with no further decisions. Rollout `k` uses stream
/// `(seed, k)` whatever the decision.
pub fn estimate_value(
    ctx: &GameContext,
    belief: &CompiledGame,
    state: &GameState,
    team: Team,
    decision: Decision,
    rollouts: u32,
    seed: u64,
) -> Result<ValueEstimate> {
    if state.terminal {
        let won = state.winner() == Some(team);
        return Ok(ValueEstimate {
            win_prob: if won { 1.0 } else { 0.0 },
            rollouts: 0,
            std_error: 0.0,
        });
    }
    if rollouts == 0 {
        return Err(Error::param("rollouts must be >= 1"));
    }
    let mut s = *state;
    apply_decision(&mut s, &ctx.rosters, team, decision)?;
    let ibb = decision == Decision::IntentionalWalk;
    let mut wins = 0u32;
    for k in 0..rollouts {
        let mut rng = substream(seed, &[u64::from(k)]);
        if rollout(belief, s, ibb, &mut rng, ctx.options.inning_cap) == team {
            wins += 1;
        }
    }
    let p = f64::from(wins) / f64::from(rollouts);
    Ok(ValueEstimate {
        win_prob: p,
        rollouts,
        std_error: (p * (1.0 - p) / f64::from(rollouts)).sqrt(),
    })
}

/// Index of the chosen value: the maximum, unless it beats `values[0]`
/// (the do-nothing option) by no more than `tie_epsilon`.
pub fn choose(values: &[f64], tie_epsilon: f64) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    if best != 0 && values[best] - values[0] <= tie_epsilon {
        0
    } else {
        best
    }
}

/// Evaluates every candidate decision and returns the best.
pub fn decide(
    ctx: &GameContext,
    belief: &CompiledGame,
    state: &GameState,
    point: &DecisionPoint,
    config: &EquilibriumConfig,
) -> Result<Choice> {
    let cands = candidates(state, &ctx.rosters, point.side, config.max_pitchers, config.max_bench);
    if cands.len() == 1 {
        return Ok(Choice::plain(cands[0]));
    }
    let values = cands
        .iter()
        .map(|&d| estimate_value(ctx, belief, state, point.team, d, config.rollouts, point.seed))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = values.iter().map(|v| v.win_prob).collect();
    let i = choose(&means, config.tie_epsilon);
    Ok(Choice {
        decision: cands[i],
        value: Some(values[i]),
        alternatives: cands.len(),
    })
}

/// Policy names accepted on the command line and in game specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Passive,
    Equilibrium,
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "passive" => Ok(PolicyName::Passive),
            "equilibrium" => Ok(PolicyName::Equilibrium),
            other => Err(Error::param(format!("unknown policy `{other}` (expected passive or equilibrium)"))),
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyName::Passive => "passive",
            PolicyName::Equilibrium => "equilibrium",
        })
    }
}

/// One logged action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub inning: u16,
    pub half: Half,
    pub team: Team,
    pub side: Side,
    pub round: u8,
    pub pa_index: u32,
    pub decision: Decision,
    pub player_id: String,
    pub value_mean: Option<f64>,
    pub value_se: Option<f64>,
    pub alternatives_considered: usize,
}

impl DecisionRecord {
    pub(crate) fn new(state: &GameState, team: Team, round: u8, rosters: &[Roster; 2], choice: &Choice) -> Self {
        DecisionRecord {
            inning: state.inning,
            half: state.half,
            team,
            side: if team == state.batting() { Side::Batting } else { Side::Fielding },
            round,
            pa_index: state.pa_index,
            decision: choice.decision,
            player_id: choice
                .decision
                .player_id(&rosters[team.index()])
                .unwrap_or_default()
                .to_string(),
            value_mean: choice.value.map(|v| v.win_prob),
            value_se: choice.value.map(|v| v.std_error),
            alternatives_considered: choice.alternatives,
        }
    }
}

/// Writes `inning,half,side,decision,player_id,value_mean,value_se,alternatives_considered`.
pub fn write_decision_log<W: std::io::Write>(sink: W, records: &[DecisionRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record([
        "inning",
        "half",
        "side",
        "decision",
        "player_id",
        "value_mean",
        "value_se",
        "alternatives_considered",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.inning.to_string(),
            r.half.name().to_string(),
            r.team.name().to_string(),
            r.decision.kind().to_string(),
            r.player_id.clone(),
            opt(r.value_mean),
            opt(r.value_se),
            r.alternatives_considered.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<decision log>", e))?;
    Ok(())
}

/// Plays `n` games between two policies (indexed by [`Team::index`]).
pub fn play_policy_match(
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<ManyResult> {
    simulate_many(n, ctx, policies, seed, workers)
}
