//! Full-game simulation over the 24 base-out states.
//!
//! A game is a sequence of plate appearances. Before each one the batting
//! team may pinch-hit, then the fielding team may change pitchers or issue
//! an intentional walk, and if the fielding team acted the batting team is
//! offered one more decision. Every plate appearance consumes exactly two
//! uniforms from the game stream (outcome, then transition), intentional
//! walks included, so two simulations that share a seed stay aligned across
//! different decisions.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baserunning::{TransitionSampler, TransitionTable};
use crate::error::{Error, Result};
use crate::events::{BaseOutState, Hand, Handedness, Outcome, PlateAppearance, PostState, Rates, NUM_OUTCOMES};
use crate::manager::{Decision, DecisionPoint, DecisionPolicy, DecisionRecord};
use crate::model::MatchupModel;
use crate::outcome_model::OutcomeDistribution;
use crate::rng::{derive_seed, substream, unit, SimRng};

/// Most players of one kind a roster may list (availability is a bitmask).
pub const MAX_ROSTER: usize = 64;
pub const DEFAULT_INNING_CAP: u16 = 30;
/// First inning that starts with a runner on second.
pub const PLACED_RUNNER_INNING: u16 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Player {
    pub id: String,
    pub hand: Hand,
}

impl Player {
    pub fn new(id: impl Into<String>, hand: Hand) -> Self {
        Player { id: id.into(), hand }
    }
}

/// One team's available players. Pitchers never bat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    #[serde(default)]
    pub name: String,
    pub lineup: Vec<Player>,
    #[serde(default)]
    pub bench: Vec<Player>,
    pub pitchers: Vec<Player>,
    pub starter: String,
}

impl Roster {
    pub fn validate(&self) -> Result<()> {
        if self.lineup.len() != 9 {
            return Err(Error::Roster(format!("lineup must have 9 batters, found {}", self.lineup.len())));
        }
        if self.pitchers.is_empty() {
            return Err(Error::Roster("at least one pitcher is required".into()));
        }
        if self.lineup.len() + self.bench.len() > MAX_ROSTER || self.pitchers.len() > MAX_ROSTER {
            return Err(Error::Roster(format!("at most {MAX_ROSTER} batters and {MAX_ROSTER} pitchers")));
        }
        let mut seen = std::collections::HashSet::new();
        for p in self.lineup.iter().chain(&self.bench).chain(&self.pitchers) {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Roster(format!("player {} listed twice", p.id)));
            }
        }
        self.starter_index()?;
        Ok(())
    }

    fn starter_index(&self) -> Result<usize> {
        self.pitchers
            .iter()
            .position(|p| p.id == self.starter)
            .ok_or_else(|| Error::Roster(format!("starter {} is not among the pitchers", self.starter)))
    }

    /// Lineup followed by bench; indices into this list identify batters.
    pub fn batters(&self) -> impl Iterator<Item = &Player> {
        self.lineup.iter().chain(self.bench.iter())
    }

    pub fn batter(&self, idx: usize) -> &Player {
        if idx < 9 {
            &self.lineup[idx]
        } else {
            &self.bench[idx - 9]
        }
    }

    pub fn num_batters(&self) -> usize {
        9 + self.bench.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Roster = serde_json::from_str(text).map_err(|e| Error::Schema(format!("roster: {e}")))?;
        r.validate()?;
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Away = 0,
    Home = 1,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::Away, Team::Home];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Team {
        match self {
            Team::Away => Team::Home,
            Team::Home => Team::Away,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Away => "away",
            Team::Home => "home",
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Top,
    Bottom,
}

impl Half {
    pub fn batting(self) -> Team {
        match self {
            Half::Top => Team::Away,
            Half::Bottom => Team::Home,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Half::Top => "top",
            Half::Bottom => "bottom",
        }
    }
}

/// Which role a team plays in the current plate appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Batting,
    Fielding,
}

/// Complete in-game situation. Players are identified by their index in
/// the team's roster ([`Roster::batters`] order for batters).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameState {
    pub inning: u16,
    pub half: Half,
    /// Runs by [`Team::index`].
    pub score: [u16; 2],
    pub base_out: BaseOutState,
    /// Lineup position (0..9) of each team's next batter.
    pub slot: [u8; 2],
    /// Batter index occupying each lineup position.
    pub lineup: [[u8; 9]; 2],
    pub pitcher: [u8; 2],
    /// Pitchers who have appeared (current one included).
    pub used_pitchers: [u64; 2],
    /// Batters who have appeared (the starting lineup included).
    pub used_batters: [u64; 2],
    pub batters_faced: [u16; 2],
    pub pa_index: u32,
    pub terminal: bool,
    pub capped: bool,
}

impl GameState {
    pub fn new(rosters: &[Roster; 2]) -> Result<Self> {
        let mut lineup = [[0u8; 9]; 2];
        let mut pitcher = [0u8; 2];
        let mut used_pitchers = [0u64; 2];
        for t in Team::BOTH {
            let r = &rosters[t.index()];
            r.validate()?;
            for (k, slot) in lineup[t.index()].iter_mut().enumerate() {
                *slot = k as u8;
            }
            let s = r.starter_index()?;
            pitcher[t.index()] = s as u8;
            used_pitchers[t.index()] = 1 << s;
        }
        Ok(GameState {
            inning: 1,
            half: Half::Top,
            score: [0, 0],
            base_out: BaseOutState::START,
            slot: [0, 0],
            lineup,
            pitcher,
            used_pitchers,
            used_batters: [0x1ff, 0x1ff],
            batters_faced: [0, 0],
            pa_index: 0,
            terminal: false,
            capped: false,
        })
    }

    pub fn batting(&self) -> Team {
        self.half.batting()
    }

    pub fn fielding(&self) -> Team {
        self.batting().other()
    }

    pub fn team(&self, side: Side) -> Team {
        match side {
            Side::Batting => self.batting(),
            Side::Fielding => self.fielding(),
        }
    }

    /// Batter index due up for the batting team.
    pub fn current_batter(&self) -> usize {
        let t = self.batting().index();
        self.lineup[t][self.slot[t] as usize] as usize
    }

    pub fn current_pitcher(&self) -> usize {
        self.pitcher[self.fielding().index()] as usize
    }

    pub fn winner(&self) -> Option<Team> {
        if !self.terminal {
            return None;
        }
        match self.score[1].cmp(&self.score[0]) {
            std::cmp::Ordering::Greater => Some(Team::Home),
            std::cmp::Ordering::Less => Some(Team::Away),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn pitcher_available(&self, team: Team, idx: usize) -> bool {
        self.used_pitchers[team.index()] & (1 << idx) == 0
    }

    pub fn batter_available(&self, team: Team, idx: usize) -> bool {
        self.used_batters[team.index()] & (1 << idx) == 0
    }
}

/// Per-batting-team lookup tables: outcome CDFs for every (opposing
/// pitcher, batter, lineup slot) and a transition sampler per batter.
#[derive(Debug, Clone)]
struct TeamTables {
    n_batters: usize,
    cdf: Vec<Rates>,
    samplers: Vec<TransitionSampler>,
    batter_sampler: Vec<u32>,
}

impl TeamTables {
    #[inline]
    fn cdf(&self, pitcher: usize, batter: usize, slot: usize) -> &Rates {
        &self.cdf[(pitcher * self.n_batters + batter) * 9 + slot]
    }
}

/// Everything needed to play out plate appearances quickly for a fixed pair
/// of rosters.
#[derive(Debug, Clone)]
pub struct CompiledGame {
    tables: [TeamTables; 2],
}

fn cumulative(d: &OutcomeDistribution) -> Rates {
    d.cumulative()
}

impl CompiledGame {
    /// `models[t]` governs the plate appearances in which team `t` bats.
    pub fn from_models(rosters: &[Roster; 2], models: [&MatchupModel; 2]) -> Result<Self> {
        Self::from_fn(
            rosters,
            |team, pitcher, batter, slot| {
                models[team.index()].matchup(&pitcher.id, pitcher.hand, &batter.id, batter.hand, slot)
            },
            |team, batter| Ok(models[team.index()].batter_table(&batter.id)?.into_owned()),
        )
    }

    /// Builds tables from arbitrary matchup and transition functions.
    /// `outcome(team, pitcher, batter, slot)` gives the distribution when
    /// `team` bats; `slot` is 1-based.
    pub fn from_fn<F, G>(rosters: &[Roster; 2], outcome: F, table: G) -> Result<Self>
    where
        F: Fn(Team, &Player, &Player, u8) -> Result<OutcomeDistribution>,
        G: Fn(Team, &Player) -> Result<TransitionTable>,
    {
        for r in rosters {
            r.validate()?;
        }
        let build = |team: Team| -> Result<TeamTables> {
            let bat = &rosters[team.index()];
            let field = &rosters[team.other().index()];
            let n_batters = bat.num_batters();
            let mut cdf = Vec::with_capacity(field.pitchers.len() * n_batters * 9);
            for p in &field.pitchers {
                for b in bat.batters() {
                    for slot in 1..=9u8 {
                        cdf.push(cumulative(&outcome(team, p, b, slot)?));
                    }
                }
            }
            let mut samplers: Vec<TransitionSampler> = Vec::new();
            let mut seen: Vec<TransitionTable> = Vec::new();
            let mut batter_sampler = Vec::with_capacity(n_batters);
            for b in bat.batters() {
                let t = table(team, b)?;
                t.validate()?;
                let k = match seen.iter().position(|s| *s == t) {
                    Some(k) => k,
                    None => {
                        samplers.push(TransitionSampler::new(&t));
                        seen.push(t);
                        seen.len() - 1
                    }
                };
                batter_sampler.push(k as u32);
            }
            Ok(TeamTables {
                n_batters,
                cdf,
                samplers,
                batter_sampler,
            })
        };
        Ok(CompiledGame {
            tables: [build(Team::Away)?, build(Team::Home)?],
        })
    }

    /// Outcome probabilities for the plate appearance due up in `state`.
    pub fn outcome_probs(&self, state: &GameState) -> Rates {
        let t = state.batting().index();
        let c = self.tables[t].cdf(state.current_pitcher(), state.current_batter(), state.slot[t] as usize);
        std::array::from_fn(|i| if i == 0 { c[0] } else { c[i] - c[i - 1] })
    }

    #[inline]
    fn draw_outcome(&self, state: &GameState, u: f64) -> Outcome {
        let t = state.batting().index();
        let c = self.tables[t].cdf(state.current_pitcher(), state.current_batter(), state.slot[t] as usize);
        let mut i = 0;
        while i + 1 < NUM_OUTCOMES && u >= c[i] {
            i += 1;
        }
        Outcome::ALL[i]
    }

    #[inline]
    fn transition(&self, state: &GameState, outcome: Outcome, u: f64) -> (PostState, u8) {
        let t = &self.tables[state.batting().index()];
        let s = &t.samplers[t.batter_sampler[state.current_batter()] as usize];
        s.pick(state.base_out, outcome, u)
    }
}

/// Resolution when the tie persists through the inning cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapMode {
    /// Capped games are errors.
    Strict,
    /// Capped games are decided by a coin flip and flagged.
    Tournament,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameOptions {
    pub inning_cap: u16,
    pub cap_mode: CapMode,
    /// Force a pitching change once the current pitcher has faced this many
    /// batters (when a fresh pitcher remains).
    #[serde(default)]
    pub batters_faced_cap: Option<u16>,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            inning_cap: DEFAULT_INNING_CAP,
            cap_mode: CapMode::Tournament,
            batters_faced_cap: None,
        }
    }
}

/// Rosters, the outcome-generating tables and the rules.
#[derive(Debug, Clone)]
pub struct GameContext {
    pub rosters: [Roster; 2],
    pub world: CompiledGame,
    pub options: GameOptions,
}

impl GameContext {
    /// `models[t]` governs team `t`'s plate appearances; `rosters` and
    /// `models` are indexed by [`Team::index`] (away first).
    pub fn new(rosters: [Roster; 2], models: [&MatchupModel; 2], options: GameOptions) -> Result<Self> {
        let world = CompiledGame::from_models(&rosters, models)?;
        Ok(GameContext { rosters, world, options })
    }
}

/// Where plate-appearance outcomes come from.
pub trait OutcomeSource {
    fn outcome(&mut self, game: &CompiledGame, state: &GameState, u: f64) -> Outcome;
}

/// Outcomes drawn from the compiled matchup tables.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOutcomes;

impl OutcomeSource for ModelOutcomes {
    #[inline]
    fn outcome(&mut self, game: &CompiledGame, state: &GameState, u: f64) -> Outcome {
        game.draw_outcome(state, u)
    }
}

/// A fixed outcome sequence (strikeouts once exhausted).
#[derive(Debug, Clone, Default)]
pub struct ScriptedOutcomes {
    queue: std::collections::VecDeque<Outcome>,
}

impl ScriptedOutcomes {
    pub fn new(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        ScriptedOutcomes {
            queue: outcomes.into_iter().collect(),
        }
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn outcome(&mut self, _: &CompiledGame, _: &GameState, _: f64) -> Outcome {
        self.queue.pop_front().unwrap_or(Outcome::Strikeout)
    }
}

/// Applies `decision` for `team`; errors if illegal.
pub fn apply_decision(state: &mut GameState, rosters: &[Roster; 2], team: Team, decision: Decision) -> Result<()> {
    let side = if team == state.batting() { Side::Batting } else { Side::Fielding };
    if !crate::manager::is_legal(state, rosters, side, decision) {
        return Err(Error::IllegalDecision(format!(
            "{} ({} side) cannot {}",
            team,
            match side {
                Side::Batting => "batting",
                Side::Fielding => "fielding",
            },
            decision.describe(&rosters[team.index()])
        )));
    }
    let t = team.index();
    match decision {
        Decision::NoAction | Decision::IntentionalWalk => {}
        Decision::ChangePitcher(p) => {
            state.pitcher[t] = p;
            state.used_pitchers[t] |= 1 << p;
            state.batters_faced[t] = 0;
        }
        Decision::PinchHit { batter, slot } => {
            state.lineup[t][slot as usize] = batter;
            state.used_batters[t] |= 1 << batter;
        }
    }
    Ok(())
}

/// Plays the plate appearance due up: `ibb` forces an intentional walk.
/// Consumes exactly two uniforms. Returns the outcome, successor and runs.
#[inline]
pub(crate) fn resolve_pa<O: OutcomeSource>(
    game: &CompiledGame,
    state: &mut GameState,
    ibb: bool,
    source: &mut O,
    rng: &mut SimRng,
    inning_cap: u16,
) -> (Outcome, PostState, u8) {
    let u_outcome = unit(rng);
    let u_transition = unit(rng);
    let outcome = if ibb {
        Outcome::Walk
    } else {
        source.outcome(game, state, u_outcome)
    };
    let (post, runs) = game.transition(state, outcome, u_transition);
    advance(state, post, runs, rng, inning_cap);
    (outcome, post, runs)
}

/// Applies a plate appearance's result and any end-of-half or end-of-game
/// transitions.
fn advance(state: &mut GameState, post: PostState, runs: u8, rng: &mut SimRng, inning_cap: u16) {
    let bat = state.batting().index();
    let fld = 1 - bat;
    state.score[bat] += u16::from(runs);
    state.slot[bat] = (state.slot[bat] + 1) % 9;
    state.batters_faced[fld] += 1;
    state.pa_index += 1;
    if state.half == Half::Bottom && state.inning >= 9 && state.score[1] > state.score[0] {
        state.terminal = true;
        return;
    }
    match post {
        PostState::InPlay(s) => state.base_out = s,
        PostState::Terminal => end_half(state, rng, inning_cap),
    }
}

fn start_half(state: &mut GameState) {
    let bases = if state.inning >= PLACED_RUNNER_INNING { 0b010 } else { 0 };
    state.base_out = BaseOutState::new(0, bases).expect("valid");
}

fn end_half(state: &mut GameState, rng: &mut SimRng, inning_cap: u16) {
    match state.half {
        Half::Top => {
            if state.inning >= 9 && state.score[1] > state.score[0] {
                state.terminal = true;
                return;
            }
            state.half = Half::Bottom;
        }
        Half::Bottom => {
            if state.inning >= 9 && state.score[0] != state.score[1] {
                state.terminal = true;
                return;
            }
            if state.inning >= inning_cap {
                state.terminal = true;
                state.capped = true;
                // Coin flip; the strict-mode caller turns this into an error.
                if unit(rng) < 0.5 {
                    state.score[1] += 1;
                } else {
                    state.score[0] += 1;
                }
                return;
            }
            state.inning += 1;
            state.half = Half::Top;
        }
    }
    start_half(state);
}

/// Final outcome of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    pub winner: Team,
    /// Runs by [`Team::index`]; a capped game's coin-flip run is included.
    pub score: [u16; 2],
    pub innings: u16,
    pub capped: bool,
    pub plate_appearances: u32,
    pub decisions: Vec<DecisionRecord>,
    /// Plate-appearance records when recording was requested.
    pub records: Vec<PlateAppearance>,
}

/// Per-game summary row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game_index: u64,
    pub winner: Team,
    pub home_runs: u16,
    pub away_runs: u16,
    pub innings: u16,
    pub capped: bool,
}

impl GameResult {
    pub fn summary(&self, game_index: u64) -> GameSummary {
        GameSummary {
            game_index,
            winner: self.winner,
            home_runs: self.score[1],
            away_runs: self.score[0],
            innings: self.innings,
            capped: self.capped,
        }
    }
}

/// Seed for the decision of `team` at decision round `round` of plate
/// appearance `pa_index`.
pub fn decision_seed(game_seed: u64, pa_index: u32, team: Team, round: u8) -> u64 {
    derive_seed(game_seed, &[0xDEC1_5104, u64::from(pa_index), team.index() as u64, u64::from(round)])
}

struct Recorder {
    date: NaiveDate,
    records: Vec<PlateAppearance>,
}

/// Runs one round of decisions for the plate appearance due up. Returns
/// whether an intentional walk was ordered.
fn decision_rounds(
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    state: &mut GameState,
    game_seed: u64,
    log: &mut Vec<DecisionRecord>,
) -> Result<bool> {
    let bat = state.batting();
    let fld = bat.other();
    if let Some(cap) = ctx.options.batters_faced_cap {
        let f = fld.index();
        if state.batters_faced[f] >= cap {
            let roster = &ctx.rosters[f];
            if let Some(p) = (0..roster.pitchers.len()).find(|&p| state.pitcher_available(fld, p)) {
                apply_decision(state, &ctx.rosters, fld, Decision::ChangePitcher(p as u8))?;
            }
        }
    }
    let mut offer = |state: &mut GameState, team: Team, side: Side, round: u8| -> Result<Decision> {
        let point = DecisionPoint {
            team,
            side,
            round,
            seed: decision_seed(game_seed, state.pa_index, team, round),
        };
        let choice = policies[team.index()].decide(ctx, state, &point)?;
        let record = DecisionRecord::new(state, team, round, &ctx.rosters, &choice);
        apply_decision(state, &ctx.rosters, team, choice.decision)?;
        if choice.decision != Decision::NoAction {
            log.push(record);
        }
        Ok(choice.decision)
    };
    offer(state, bat, Side::Batting, 0)?;
    let fielding = offer(state, fld, Side::Fielding, 1)?;
    match fielding {
        Decision::IntentionalWalk => Ok(true),
        Decision::NoAction => Ok(false),
        _ => {
            offer(state, bat, Side::Batting, 2)?;
            Ok(false)
        }
    }
}

fn play<O: OutcomeSource>(
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    state: &mut GameState,
    source: &mut O,
    rng: &mut SimRng,
    game_seed: u64,
    log: &mut Vec<DecisionRecord>,
    mut recorder: Option<&mut Recorder>,
    stop_after_half: bool,
) -> Result<()> {
    let start = (state.inning, state.half);
    while !state.terminal && (!stop_after_half || (state.inning, state.half) == start) {
        let ibb = decision_rounds(ctx, policies, state, game_seed, log)?;
        let before = *state;
        let (outcome, post, runs) = resolve_pa(&ctx.world, state, ibb, source, rng, ctx.options.inning_cap);
        if let Some(rec) = recorder.as_deref_mut() {
            let bat = before.batting();
            let batter = ctx.rosters[bat.index()].batter(before.current_batter());
            let pitcher = &ctx.rosters[bat.other().index()].pitchers[before.current_pitcher()];
            rec.records.push(PlateAppearance {
                date: rec.date,
                pitcher_id: pitcher.id.clone(),
                batter_id: batter.id.clone(),
                pitcher_hand: pitcher.hand,
                batter_hand: batter.hand,
                batting_order: before.slot[bat.index()] + 1,
                outcome,
                pre: before.base_out,
                post,
                runs,
            });
        }
        if state.capped && ctx.options.cap_mode == CapMode::Strict {
            return Err(Error::InningCap(ctx.options.inning_cap));
        }
    }
    Ok(())
}

/// Plays the current half inning to its end (three outs or a walk-off).
pub fn simulate_half_inning<O: OutcomeSource>(
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    state: &mut GameState,
    source: &mut O,
    rng: &mut SimRng,
    game_seed: u64,
) -> Result<Vec<DecisionRecord>> {
    if state.terminal {
        return Err(Error::param("game is already over"));
    }
    let mut log = Vec::new();
    play(ctx, policies, state, source, rng, game_seed, &mut log, None, true)?;
    Ok(log)
}

/// Plays a full game. Deterministic in `seed`.
pub fn simulate_game(ctx: &GameContext, policies: [&dyn DecisionPolicy; 2], seed: u64) -> Result<GameResult> {
    simulate_game_with(ctx, policies, seed, &mut ModelOutcomes, None)
}

/// [`simulate_game`] with an explicit outcome source, optionally recording
/// every plate appearance under `record_date`.
pub fn simulate_game_with<O: OutcomeSource>(
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    seed: u64,
    source: &mut O,
    record_date: Option<NaiveDate>,
) -> Result<GameResult> {
    let mut state = GameState::new(&ctx.rosters)?;
    let mut rng = substream(seed, &[]);
    let mut log = Vec::new();
    let mut recorder = record_date.map(|date| Recorder { date, records: Vec::new() });
    play(ctx, policies, &mut state, source, &mut rng, seed, &mut log, recorder.as_mut(), false)?;
    Ok(GameResult {
        winner: state.winner().expect("terminal games have a winner"),
        score: state.score,
        innings: state.inning,
        capped: state.capped,
        plate_appearances: state.pa_index,
        decisions: log,
        records: recorder.map(|r| r.records).unwrap_or_default(),
    })
}

/// Win counts and ordered per-game results.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyResult {
    pub home_wins: u64,
    pub away_wins: u64,
    pub games: Vec<GameResult>,
}

impl ManyResult {
    pub fn summaries(&self) -> Vec<GameSummary> {
        self.games.iter().enumerate().map(|(i, g)| g.summary(i as u64)).collect()
    }

    pub fn home_win_rate(&self) -> f64 {
        self.home_wins as f64 / (self.home_wins + self.away_wins) as f64
    }
}

/// Seed of game `index` in a run seeded with `seed`.
pub fn game_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, &[index])
}

/// Plays `n` games on `workers` threads. Game `i` is seeded from
/// `(seed, i)`, so results do not depend on the worker count.
pub fn simulate_many(
    n: u64,
    ctx: &GameContext,
    policies: [&dyn DecisionPolicy; 2],
    seed: u64,
    workers: usize,
) -> Result<ManyResult> {
    if n == 0 {
        return Err(Error::param("game count must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let games: Vec<GameResult> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| simulate_game(ctx, policies, game_seed(seed, i)))
            .collect::<Result<_>>()
    })?;
    let home_wins = games.iter().filter(|g| g.winner == Team::Home).count() as u64;
    Ok(ManyResult {
        home_wins,
        away_wins: n - home_wins,
        games,
    })
}

/// Writes `game_index,winner,home_runs,away_runs,innings,capped` rows.
pub fn write_summary_csv<W: std::io::Write>(sink: W, summaries: &[GameSummary]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["game_index", "winner", "home_runs", "away_runs", "innings", "capped"])?;
    for s in summaries {
        w.write_record([
            s.game_index.to_string(),
            s.winner.name().to_string(),
            s.home_runs.to_string(),
            s.away_runs.to_string(),
            s.innings.to_string(),
            u8::from(s.capped).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

/// Handedness stratum of the plate appearance due up.
pub fn current_handedness(rosters: &[Roster; 2], state: &GameState) -> Handedness {
    let bat = state.batting();
    let batter = rosters[bat.index()].batter(state.current_batter());
    let pitcher = &rosters[bat.other().index()].pitchers[state.current_pitcher()];
    Handedness::of(pitcher.hand, batter.hand)
}

/// Plays out the rest of the game with no decisions from either side,
/// starting with the pending plate appearance (`ibb` forces a walk).
/// Returns the winner.
pub(crate) fn rollout(game: &CompiledGame, mut state: GameState, ibb: bool, rng: &mut SimRng, inning_cap: u16) -> Team {
    let mut source = ModelOutcomes;
    let mut walk = ibb;
    while !state.terminal {
        resolve_pa(game, &mut state, walk, &mut source, rng, inning_cap);
        walk = false;
    }
    state.winner().expect("terminal")
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn roster(prefix: &str, bench: usize, pitchers: usize) -> Roster {
        Roster {
            name: prefix.into(),
            lineup: (0..9).map(|i| Player::new(format!("{prefix}b{i}"), Hand::Right)).collect(),
            bench: (0..bench).map(|i| Player::new(format!("{prefix}x{i}"), Hand::Left)).collect(),
            pitchers: (0..pitchers).map(|i| Player::new(format!("{prefix}p{i}"), Hand::Right)).collect(),
            starter: format!("{prefix}p0"),
        }
    }

    /// Tables where every matchup uses `probs`, with rule-based transitions.
    pub fn flat_game(rosters: &[Roster; 2], probs: Rates) -> CompiledGame {
        CompiledGame::from_fn(
            rosters,
            |_, _, _, _| OutcomeDistribution::from_weights(probs),
            |_, _| Ok(TransitionTable::from_rules()),
        )
        .unwrap()
    }

    pub fn context(rosters: [Roster; 2], game: CompiledGame) -> GameContext {
        GameContext {
            rosters,
            world: game,
            options: GameOptions::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use crate::manager::Passive;

    const K: Outcome = Outcome::Strikeout;

    fn ctx() -> GameContext {
        let rosters = [roster("a", 2, 3), roster("h", 2, 3)];
        let game = flat_game(&rosters, [0.2, 0.08, 0.01, 0.2, 0.25, 0.16, 0.05, 0.01, 0.04]);
        context(rosters, game)
    }

    #[test]
    fn scripted_half_two_runs() {
        let c = ctx();
        let mut st = GameState::new(&c.rosters).unwrap();
        let mut src = ScriptedOutcomes::new([Outcome::Single, Outcome::HomeRun, K, K, K]);
        let mut rng = substream(0, &[]);
        simulate_half_inning(&c, [&Passive, &Passive], &mut st, &mut src, &mut rng, 0).unwrap();
        assert_eq!(st.score, [2, 0]);
        assert_eq!(st.slot[0], 5);
        assert_eq!(st.half, Half::Bottom);
        assert_eq!(st.base_out, BaseOutState::START);
        assert_eq!(rng.clone(), {
            let mut r = substream(0, &[]);
            for _ in 0..10 {
                unit(&mut r);
            }
            r
        });
    }

    #[test]
    fn three_strikeouts() {
        let c = ctx();
        let mut st = GameState::new(&c.rosters).unwrap();
        let mut src = ScriptedOutcomes::new([K, K, K]);
        let mut rng = substream(0, &[]);
        simulate_half_inning(&c, [&Passive, &Passive], &mut st, &mut src, &mut rng, 0).unwrap();
        assert_eq!(st.score, [0, 0]);
        assert_eq!(st.pa_index, 3);
        assert_eq!((st.inning, st.half), (1, Half::Bottom));
    }

    #[test]
    fn walk_off_home_run() {
        let c = ctx();
        let mut st = GameState::new(&c.rosters).unwrap();
        st.inning = 9;
        st.half = Half::Bottom;
        st.score = [3, 3];
        let mut src = ScriptedOutcomes::new([Outcome::HomeRun, K, K, K]);
        let mut rng = substream(0, &[]);
        simulate_half_inning(&c, [&Passive, &Passive], &mut st, &mut src, &mut rng, 0).unwrap();
        assert!(st.terminal);
        assert_eq!(st.score, [3, 4]);
        assert_eq!(st.pa_index, 1);
        assert_eq!(st.winner(), Some(Team::Home));
    }

    #[test]
    fn home_skips_bottom_ninth_when_ahead() {
        let c = ctx();
        let mut st = GameState::new(&c.rosters).unwrap();
        st.inning = 9;
        st.score = [1, 2];
        let mut src = ScriptedOutcomes::new([K, K, K]);
        let mut rng = substream(0, &[]);
        simulate_half_inning(&c, [&Passive, &Passive], &mut st, &mut src, &mut rng, 0).unwrap();
        assert!(st.terminal);
        assert_eq!((st.inning, st.half), (9, Half::Top));
    }

    #[test]
    fn extra_innings_place_runner() {
        let c = ctx();
        let mut st = GameState::new(&c.rosters).unwrap();
        st.inning = 9;
        st.half = Half::Bottom;
        let mut src = ScriptedOutcomes::new([K, K, K]);
        let mut rng = substream(0, &[]);
        simulate_half_inning(&c, [&Passive, &Passive], &mut st, &mut src, &mut rng, 0).unwrap();
        assert_eq!((st.inning, st.half), (10, Half::Top));
        assert_eq!(st.base_out, BaseOutState::new(0, 0b010).unwrap());
    }

    #[test]
    fn scripted_one_nothing_trace() {
        // Away leadoff homers, then every other plate appearance strikes out.
        let c = ctx();
        let mut outcomes = vec![Outcome::HomeRun];
        outcomes.extend(std::iter::repeat_n(K, 200));
        let r = simulate_game_with(&c, [&Passive, &Passive], 5, &mut ScriptedOutcomes::new(outcomes), None).unwrap();
        assert_eq!(r.winner, Team::Away);
        assert_eq!(r.score, [1, 0]);
        assert_eq!(r.innings, 9);
        // Trailing, the home team still bats in the 9th: 28 + 27.
        assert_eq!(r.plate_appearances, 28 + 27);
    }

    #[test]
    fn cap_strict_and_tournament() {
        let mut c = ctx();
        c.options.inning_cap = 11;
        let all_k = || ScriptedOutcomes::new(std::iter::repeat_n(K, 10_000));
        let r = simulate_game_with(&c, [&Passive, &Passive], 1, &mut all_k(), None).unwrap();
        assert!(r.capped);
        assert_eq!(r.innings, 11);
        assert_eq!(r.score.iter().sum::<u16>(), 1);
        c.options.cap_mode = CapMode::Strict;
        let e = simulate_game_with(&c, [&Passive, &Passive], 1, &mut all_k(), None).unwrap_err();
        assert!(matches!(e, Error::InningCap(11)));
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let c = ctx();
        let a = simulate_game(&c, [&Passive, &Passive], 42).unwrap();
        let b = simulate_game(&c, [&Passive, &Passive], 42).unwrap();
        assert_eq!(a, b);
        let one = simulate_many(200, &c, [&Passive, &Passive], 9, 1).unwrap();
        let four = simulate_many(200, &c, [&Passive, &Passive], 9, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.home_wins + one.away_wins, 200);
    }

    #[test]
    fn recorded_games_satisfy_invariants() {
        let c = ctx();
        let date = NaiveDate::from_ymd_opt(2024, 4, 1).unwrap();
        for seed in 0..50 {
            let r = simulate_game_with(&c, [&Passive, &Passive], seed, &mut ModelOutcomes, Some(date)).unwrap();
            assert_eq!(r.records.len() as u32, r.plate_appearances);
            let runs: [u32; 2] = {
                let mut s = [0u32; 2];
                for rec in &r.records {
                    assert!(rec.conserves_runners());
                    let team = if rec.batter_id.starts_with('a') { 0 } else { 1 };
                    s[team] += u32::from(rec.runs);
                }
                s
            };
            let mut score = r.score;
            if r.capped {
                score = [0, 0];
            }
            if !r.capped {
                assert_eq!([runs[0] as u16, runs[1] as u16], score);
            }
            // Lineup advances one slot per plate appearance, per team.
            for team in ["a", "h"] {
                let slots: Vec<u8> = r
                    .records
                    .iter()
                    .filter(|x| x.batter_id.starts_with(team))
                    .map(|x| x.batting_order)
                    .collect();
                for (k, s) in slots.iter().enumerate() {
                    assert_eq!(*s as usize, k % 9 + 1);
                }
            }
        }
    }

    #[test]
    fn summary_csv_format() {
        let c = ctx();
        let m = simulate_many(2, &c, [&Passive, &Passive], 3, 1).unwrap();
        let mut out = Vec::new();
        write_summary_csv(&mut out, &m.summaries()).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "game_index,winner,home_runs,away_runs,innings,capped");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
    }
}
