use std::collections::{BTreeMap, HashMap};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Handedness, LeagueRates, OrderRates, PlateAppearance, Rates, NUM_OUTCOMES};
use crate::outcome_model::{
    adjusted_logit, clamp_prob, combine_logits, distribution_unchecked, logit, squash, weight_pair_valid,
    BatterSide, Log5Weights, PlayerParams, PROB_FLOOR,
};
use crate::rng::{substream, unit, SimRng};

use super::priors::{PlayerPrior, PriorSpec, Role};

/// How the batter side of every matchup is parameterized.
#[derive(Debug, Clone, Copy)]
pub enum BatterModel<'a> {
    /// Empirical batting-order rates; only pitchers are sampled.
    Slots(&'a OrderRates),
    /// Per-batter parameters sampled alongside the pitchers.
    Players,
}

/// A full parameter point: every player's parameters plus league weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub pitchers: BTreeMap<String, PlayerParams>,
    pub batters: BTreeMap<String, PlayerParams>,
    pub weights: Log5Weights,
}

fn params_in_domain(p: &PlayerParams) -> bool {
    p.validate().is_ok()
}

/// Log likelihood of `records` plus, when `priors` is given, the log prior
/// density of every player in `params` and of the weights.
///
/// Parameters outside their domain give `-inf`. A NaN anywhere in the sum
/// is reported as a numerical fault.
pub fn log_posterior(
    params: &ModelParams,
    records: &[PlateAppearance],
    league: &LeagueRates,
    batters: BatterModel<'_>,
    priors: Option<&PriorSpec>,
) -> Result<f64> {
    let w = &params.weights;
    if (0..NUM_OUTCOMES).any(|i| !weight_pair_valid(w.pitcher[i], w.batter[i])) {
        return Ok(f64::NEG_INFINITY);
    }
    if !params.pitchers.values().all(params_in_domain) || !params.batters.values().all(params_in_domain) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = 0.0;
    if let Some(priors) = priors {
        for p in params.pitchers.values() {
            total += priors.pitcher.ln_density(p);
        }
        if !params.batters.is_empty() {
            let bp = priors.batter_or_err()?;
            for b in params.batters.values() {
                total += bp.ln_density(b);
            }
        }
        // The constrained weight region has unit area, so the uniform
        // density contributes ln 1 = 0 per outcome.
    }
    for (row, r) in records.iter().enumerate() {
        let pitcher = params
            .pitchers
            .get(&r.pitcher_id)
            .ok_or_else(|| Error::param(format!("no parameters for pitcher {}", r.pitcher_id)))?;
        let h = r.handedness();
        let side = match batters {
            BatterModel::Slots(order) => BatterSide::Rates(order.get(r.batting_order, h)),
            BatterModel::Players => BatterSide::Params(
                params
                    .batters
                    .get(&r.batter_id)
                    .ok_or_else(|| Error::param(format!("no parameters for batter {}", r.batter_id)))?,
            ),
        };
        let d = distribution_unchecked(pitcher, side, league.get(h), w, h);
        let term = d.probs[r.outcome.index()].ln();
        if term.is_nan() {
            return Err(Error::Numerical(format!("NaN log likelihood at record {}", row + 1)));
        }
        total += term;
    }
    if total.is_nan() {
        return Err(Error::Numerical("NaN log posterior".into()));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Sweeps kept after burn-in.
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub target_acceptance: f64,
    /// Sweeps between proposal-scale adjustments during burn-in.
    pub adapt_interval: usize,
}

impl SamplerConfig {
    pub const DEFAULT_STEPS: usize = 5000;
    pub const DEFAULT_BURN_IN: usize = 2000;

    pub fn new(seed: u64) -> Self {
        SamplerConfig {
            steps: Self::DEFAULT_STEPS,
            burn_in: Self::DEFAULT_BURN_IN,
            seed,
            target_acceptance: 0.3,
            adapt_interval: 50,
        }
    }

    pub fn with_steps(mut self, steps: usize, burn_in: usize) -> Self {
        self.steps = steps;
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::param("sampler steps must be >= 1"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::param("target acceptance must be in (0,1)"));
        }
        if self.adapt_interval == 0 {
            return Err(Error::param("adapt interval must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerPosterior {
    pub plate_appearances: u64,
    pub base_mean: Rates,
    pub base_sd: Rates,
    pub offset_mean: Rates,
    pub offset_sd: Rates,
}

impl PlayerPosterior {
    pub fn params(&self) -> PlayerParams {
        PlayerParams {
            base: self.base_mean,
            offsets: self.offset_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPosterior {
    pub pitcher_mean: Rates,
    pub batter_mean: Rates,
    pub pitcher_sd: Rates,
    pub batter_sd: Rates,
}

impl WeightPosterior {
    pub fn means(&self) -> Log5Weights {
        Log5Weights {
            pitcher: self.pitcher_mean,
            batter: self.batter_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub sweeps: usize,
    pub kept: usize,
    /// Accepted fraction of all proposals made after burn-in.
    pub acceptance_rate: f64,
    /// Smallest and mean effective sample size over all sampled scalars,
    /// from the lag-1 autocorrelation.
    pub min_ess: f64,
    pub mean_ess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub pitchers: BTreeMap<String, PlayerPosterior>,
    pub batters: BTreeMap<String, PlayerPosterior>,
    pub weights: WeightPosterior,
    pub diagnostics: SamplerDiagnostics,
}

impl PosteriorSummary {
    /// Posterior means as a parameter point.
    pub fn params(&self) -> ModelParams {
        ModelParams {
            pitchers: self.pitchers.iter().map(|(k, v)| (k.clone(), v.params())).collect(),
            batters: self.batters.iter().map(|(k, v)| (k.clone(), v.params())).collect(),
            weights: self.weights.means(),
        }
    }
}

/// Sufficient statistics: outcome counts for one (pitcher, batter or slot,
/// handedness) combination.
#[derive(Debug, Clone)]
struct Cell {
    pitcher: u32,
    batter: u32,
    h: u8,
    counts: Rates,
    total: f64,
}

/// Prepared data for posterior sampling.
#[derive(Debug, Clone)]
pub struct PosteriorProblem {
    pitcher_ids: Vec<String>,
    batter_ids: Vec<String>,
    pitcher_pa: Vec<u64>,
    batter_pa: Vec<u64>,
    cells: Vec<Cell>,
    lc: [Rates; 2],
    /// Batting-order logits `[slot][h]` when batters are not sampled.
    slot_logits: Option<Vec<[Rates; 2]>>,
}

fn rate_logits(r: &Rates) -> Rates {
    r.map(|p| logit(clamp_prob(p)))
}

impl PosteriorProblem {
    pub fn new(records: &[PlateAppearance], league: &LeagueRates, batters: BatterModel<'_>) -> Result<Self> {
        let all: Vec<usize> = (0..records.len()).collect();
        Self::from_subset(records, &all, league, batters)
    }

    /// Problem over `records[i]` for `i` in `subset`.
    pub fn from_subset(
        records: &[PlateAppearance],
        subset: &[usize],
        league: &LeagueRates,
        batters: BatterModel<'_>,
    ) -> Result<Self> {
        let mut pitcher_index: BTreeMap<&str, u32> = BTreeMap::new();
        let mut batter_index: BTreeMap<&str, u32> = BTreeMap::new();
        for &i in subset {
            let r = records
                .get(i)
                .ok_or_else(|| Error::param(format!("record index {i} out of range")))?;
            pitcher_index.insert(&r.pitcher_id, 0);
            if matches!(batters, BatterModel::Players) {
                batter_index.insert(&r.batter_id, 0);
            }
        }
        for (k, v) in pitcher_index.values_mut().enumerate() {
            *v = k as u32;
        }
        for (k, v) in batter_index.values_mut().enumerate() {
            *v = k as u32;
        }
        let mut pitcher_pa = vec![0u64; pitcher_index.len()];
        let mut batter_pa = vec![0u64; batter_index.len()];
        let mut cell_of: HashMap<(u32, u32, u8), usize> = HashMap::new();
        let mut cells: Vec<Cell> = Vec::new();
        for &i in subset {
            let r = &records[i];
            let p = pitcher_index[r.pitcher_id.as_str()];
            let b = match batters {
                BatterModel::Slots(_) => u32::from(r.batting_order - 1),
                BatterModel::Players => batter_index[r.batter_id.as_str()],
            };
            pitcher_pa[p as usize] += 1;
            if let BatterModel::Players = batters {
                batter_pa[b as usize] += 1;
            }
            let h = r.handedness().index() as u8;
            let c = *cell_of.entry((p, b, h)).or_insert_with(|| {
                cells.push(Cell {
                    pitcher: p,
                    batter: b,
                    h,
                    counts: [0.0; NUM_OUTCOMES],
                    total: 0.0,
                });
                cells.len() - 1
            });
            cells[c].counts[r.outcome.index()] += 1.0;
            cells[c].total += 1.0;
        }
        let slot_logits = match batters {
            BatterModel::Slots(order) => Some(
                (1..=9u8)
                    .map(|m| {
                        [
                            rate_logits(order.get(m, Handedness::Opposite)),
                            rate_logits(order.get(m, Handedness::Same)),
                        ]
                    })
                    .collect(),
            ),
            BatterModel::Players => None,
        };
        Ok(PosteriorProblem {
            pitcher_ids: pitcher_index.keys().map(|s| s.to_string()).collect(),
            batter_ids: batter_index.keys().map(|s| s.to_string()).collect(),
            pitcher_pa,
            batter_pa,
            cells,
            lc: [rate_logits(&league.by_hand[0]), rate_logits(&league.by_hand[1])],
            slot_logits,
        })
    }

    /// Adds pitchers with no data; they are sampled from the prior.
    pub fn with_pitchers<I: IntoIterator<Item = String>>(mut self, ids: I) -> Self {
        for id in ids {
            if !self.pitcher_ids.contains(&id) {
                self.pitcher_ids.push(id);
                self.pitcher_pa.push(0);
            }
        }
        self
    }

    /// Adds batters with no data. Ignored when batters are not sampled.
    pub fn with_batters<I: IntoIterator<Item = String>>(mut self, ids: I) -> Self {
        if self.slot_logits.is_some() {
            return self;
        }
        for id in ids {
            if !self.batter_ids.contains(&id) {
                self.batter_ids.push(id);
                self.batter_pa.push(0);
            }
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn sample(&self, priors: &PriorSpec, config: &SamplerConfig) -> Result<PosteriorSummary> {
        config.validate()?;
        if self.cells.is_empty() {
            return Err(Error::insufficient("no plate appearances to sample from"));
        }
        priors.pitcher.validate()?;
        let batter_prior = if self.slot_logits.is_none() {
            let bp = priors.batter_or_err()?;
            bp.validate()?;
            Some(bp)
        } else {
            None
        };
        let mut state = State::init(self, &priors.pitcher, batter_prior, config.seed);
        let total_sweeps = config.burn_in + config.steps;
        let mut window = 0usize;
        let mut scratch = Vec::new();
        for sweep in 0..total_sweeps {
            let keep = sweep >= config.burn_in;
            state.sweep(self, &priors.pitcher, batter_prior, &mut scratch, keep);
            if keep {
                state.record();
            } else {
                window += 1;
                if window == config.adapt_interval {
                    state.adapt(config.target_acceptance, sweep / config.adapt_interval);
                    window = 0;
                }
            }
        }
        state.summarize(self, total_sweeps, config.steps)
    }
}

/// Posterior summary for `records` under `priors`.
pub fn sample_posterior(
    records: &[PlateAppearance],
    league: &LeagueRates,
    batters: BatterModel<'_>,
    priors: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorSummary> {
    PosteriorProblem::new(records, league, batters)?.sample(priors, config)
}

#[derive(Debug, Clone, Default)]
struct RunningStat {
    n: f64,
    mean: f64,
    m2: f64,
    sum: f64,
    lag: f64,
    first: f64,
    prev: f64,
}

impl RunningStat {
    fn push(&mut self, x: f64) {
        if self.n == 0.0 {
            self.first = x;
        } else {
            self.lag += x * self.prev;
        }
        self.n += 1.0;
        self.sum += x;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
        self.prev = x;
    }

    fn sd(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).sqrt()
        } else {
            0.0
        }
    }

    fn ess(&self) -> f64 {
        if self.n < 3.0 || self.m2 <= 0.0 {
            return self.n;
        }
        let mu = self.mean;
        let cross = self.lag - mu * (2.0 * self.sum - self.first - self.prev) + (self.n - 1.0) * mu * mu;
        let rho = (cross / self.m2).clamp(-0.99, 0.999);
        (self.n * (1.0 - rho) / (1.0 + rho)).clamp(1.0, self.n)
    }
}

const BASE: usize = 0;
const OFFSET: usize = 1;
const INITIAL_SCALE: [f64; 2] = [0.1, 0.1];
const INITIAL_WEIGHT_SCALE: f64 = 0.05;

#[derive(Debug, Clone)]
struct Proposals {
    scale: [[f64; NUM_OUTCOMES]; 2],
    accepted: [[u32; NUM_OUTCOMES]; 2],
    tried: [[u32; NUM_OUTCOMES]; 2],
}

impl Proposals {
    fn new(initial: [f64; 2]) -> Self {
        Proposals {
            scale: [[initial[0]; NUM_OUTCOMES], [initial[1]; NUM_OUTCOMES]],
            accepted: [[0; NUM_OUTCOMES]; 2],
            tried: [[0; NUM_OUTCOMES]; 2],
        }
    }

    fn adapt(&mut self, target: f64, round: usize) {
        let gain = 3.0 / ((round + 1) as f64).sqrt();
        for k in 0..2 {
            for i in 0..NUM_OUTCOMES {
                if self.tried[k][i] > 0 {
                    let rate = self.accepted[k][i] as f64 / self.tried[k][i] as f64;
                    self.scale[k][i] = (self.scale[k][i] * (gain * (rate - target)).exp()).clamp(1e-4, 10.0);
                }
                self.accepted[k][i] = 0;
                self.tried[k][i] = 0;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    base: Rates,
    offsets: Rates,
    logits: [Rates; 2],
    cells: Vec<u32>,
    proposals: Proposals,
    rng: SimRng,
    stats: [[RunningStat; NUM_OUTCOMES]; 2],
}

impl Block {
    fn new(params: &PlayerParams, cells: Vec<u32>, rng: SimRng) -> Self {
        let mut b = Block {
            base: params.base,
            offsets: params.offsets,
            logits: [[0.0; NUM_OUTCOMES]; 2],
            cells,
            proposals: Proposals::new(INITIAL_SCALE),
            rng,
            stats: Default::default(),
        };
        for i in 0..NUM_OUTCOMES {
            b.refresh(i);
        }
        b
    }

    fn refresh(&mut self, i: usize) {
        for h in Handedness::BOTH {
            self.logits[h.index()][i] = adjusted_logit(self.base[i], self.offsets[i], h);
        }
    }
}

#[derive(Debug, Clone)]
struct CellCache {
    x: Rates,
    ln_x: Rates,
    sum: f64,
    ln_sum: f64,
}

enum OtherSide<'s> {
    Blocks(&'s [Block]),
    Slots(&'s [[Rates; 2]]),
}

impl OtherSide<'_> {
    #[inline]
    fn logit(&self, idx: u32, h: usize, i: usize) -> f64 {
        match self {
            OtherSide::Blocks(b) => b[idx as usize].logits[h][i],
            OtherSide::Slots(s) => s[idx as usize][h][i],
        }
    }
}

struct State {
    pitchers: Vec<Block>,
    batters: Vec<Block>,
    wp: Rates,
    wb: Rates,
    weight_scale: [[f64; NUM_OUTCOMES]; 2],
    weight_accepted: [[u32; NUM_OUTCOMES]; 2],
    weight_tried: [[u32; NUM_OUTCOMES]; 2],
    weight_stats: [[RunningStat; NUM_OUTCOMES]; 2],
    weight_rng: SimRng,
    cache: Vec<CellCache>,
    kept_accepted: u64,
    kept_tried: u64,
}

impl State {
    fn init(problem: &PosteriorProblem, pp: &PlayerPrior, bp: Option<&PlayerPrior>, seed: u64) -> Self {
        let mut pitcher_cells = vec![Vec::new(); problem.pitcher_ids.len()];
        let mut batter_cells = vec![Vec::new(); problem.batter_ids.len()];
        for (c, cell) in problem.cells.iter().enumerate() {
            pitcher_cells[cell.pitcher as usize].push(c as u32);
            if problem.slot_logits.is_none() {
                batter_cells[cell.batter as usize].push(c as u32);
            }
        }
        let start = |prior: &PlayerPrior| PlayerParams {
            base: std::array::from_fn(|i| prior.base[i].mean()),
            offsets: [1.0; NUM_OUTCOMES],
        };
        let pitchers = pitcher_cells
            .into_iter()
            .enumerate()
            .map(|(j, cells)| Block::new(&start(pp), cells, substream(seed, &[0, j as u64])))
            .collect();
        let batters = match bp {
            Some(bp) => batter_cells
                .into_iter()
                .enumerate()
                .map(|(j, cells)| Block::new(&start(bp), cells, substream(seed, &[1, j as u64])))
                .collect(),
            None => Vec::new(),
        };
        let mut s = State {
            pitchers,
            batters,
            wp: [0.75; NUM_OUTCOMES],
            wb: [0.75; NUM_OUTCOMES],
            weight_scale: [[INITIAL_WEIGHT_SCALE; NUM_OUTCOMES]; 2],
            weight_accepted: [[0; NUM_OUTCOMES]; 2],
            weight_tried: [[0; NUM_OUTCOMES]; 2],
            weight_stats: Default::default(),
            weight_rng: substream(seed, &[2]),
            cache: Vec::with_capacity(problem.cells.len()),
            kept_accepted: 0,
            kept_tried: 0,
        };
        for cell in &problem.cells {
            let c = s.compute_cell(problem, cell);
            s.cache.push(c);
        }
        s
    }

    fn batter_logit(&self, problem: &PosteriorProblem, cell: &Cell, i: usize) -> f64 {
        match &problem.slot_logits {
            Some(s) => s[cell.batter as usize][cell.h as usize][i],
            None => self.batters[cell.batter as usize].logits[cell.h as usize][i],
        }
    }

    fn compute_cell(&self, problem: &PosteriorProblem, cell: &Cell) -> CellCache {
        let h = cell.h as usize;
        let la = &self.pitchers[cell.pitcher as usize].logits[h];
        let x: Rates = std::array::from_fn(|i| {
            squash(combine_logits(
                la[i],
                self.batter_logit(problem, cell, i),
                problem.lc[h][i],
                self.wp[i],
                self.wb[i],
            ))
        });
        let sum: f64 = x.iter().sum();
        CellCache {
            x,
            ln_x: x.map(f64::ln),
            sum,
            ln_sum: sum.ln(),
        }
    }

    fn sweep(
        &mut self,
        problem: &PosteriorProblem,
        pp: &PlayerPrior,
        bp: Option<&PlayerPrior>,
        scratch: &mut Vec<f64>,
        keep: bool,
    ) {
        for j in 0..self.pitchers.len() {
            for kind in [BASE, OFFSET] {
                for i in 0..NUM_OUTCOMES {
                    self.update_player(problem, Role::Pitcher, j, kind, i, pp, scratch, keep);
                }
            }
        }
        if let Some(bp) = bp {
            for j in 0..self.batters.len() {
                for kind in [BASE, OFFSET] {
                    for i in 0..NUM_OUTCOMES {
                        self.update_player(problem, Role::Batter, j, kind, i, bp, scratch, keep);
                    }
                }
            }
        }
        for which in 0..2 {
            for i in 0..NUM_OUTCOMES {
                self.update_weight(problem, which, i, scratch, keep);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_player(
        &mut self,
        problem: &PosteriorProblem,
        role: Role,
        j: usize,
        kind: usize,
        i: usize,
        prior: &PlayerPrior,
        scratch: &mut Vec<f64>,
        keep: bool,
    ) {
        let (own, other) = match role {
            Role::Pitcher => (
                &mut self.pitchers,
                match &problem.slot_logits {
                    Some(s) => OtherSide::Slots(s),
                    None => OtherSide::Blocks(&self.batters),
                },
            ),
            Role::Batter => (&mut self.batters, OtherSide::Blocks(&self.pitchers)),
        };
        let blk = &mut own[j];
        let z: f64 = StandardNormal.sample(&mut blk.rng);
        let u = unit(&mut blk.rng);
        let step = blk.proposals.scale[kind][i] * z;
        blk.proposals.tried[kind][i] += 1;
        if keep {
            self.kept_tried += 1;
        }
        let (base, offset, d_prior) = if kind == BASE {
            let a = blk.base[i];
            let a2 = squash(logit(a) + step);
            if !(a2 > PROB_FLOOR && a2 < 1.0 - PROB_FLOOR) {
                return;
            }
            let b = &prior.base[i];
            (
                a2,
                blk.offsets[i],
                b.alpha * (a2.ln() - a.ln()) + b.beta * ((1.0 - a2).ln() - (1.0 - a).ln()),
            )
        } else {
            let o = blk.offsets[i];
            let o2 = o * step.exp();
            if !(o2 > 1e-6 && o2 < 1e6) {
                return;
            }
            let g = &prior.offsets[i];
            (blk.base[i], o2, g.shape * step - g.rate * (o2 - o))
        };
        let new_logits = [
            adjusted_logit(base, offset, Handedness::Opposite),
            adjusted_logit(base, offset, Handedness::Same),
        ];
        let (wp, wb) = (self.wp[i], self.wb[i]);
        scratch.clear();
        let mut d_lik = 0.0;
        for &c in &blk.cells {
            let cell = &problem.cells[c as usize];
            let cache = &self.cache[c as usize];
            let h = cell.h as usize;
            let (la, lb) = match role {
                Role::Pitcher => (new_logits[h], other.logit(cell.batter, h, i)),
                Role::Batter => (other.logit(cell.pitcher, h, i), new_logits[h]),
            };
            let x2 = squash(combine_logits(la, lb, problem.lc[h][i], wp, wb));
            let n = cell.counts[i];
            if n > 0.0 {
                d_lik += n * (x2.ln() - cache.ln_x[i]);
            }
            d_lik -= cell.total * ((cache.sum - cache.x[i] + x2).ln() - cache.ln_sum);
            scratch.push(x2);
        }
        if u.ln() < d_lik + d_prior {
            blk.base[i] = base;
            blk.offsets[i] = offset;
            blk.logits[0][i] = new_logits[0];
            blk.logits[1][i] = new_logits[1];
            blk.proposals.accepted[kind][i] += 1;
            if keep {
                self.kept_accepted += 1;
            }
            for (k, &c) in blk.cells.iter().enumerate() {
                set_x(&mut self.cache[c as usize], i, scratch[k]);
            }
        }
    }

    fn update_weight(&mut self, problem: &PosteriorProblem, which: usize, i: usize, scratch: &mut Vec<f64>, keep: bool) {
        let z: f64 = StandardNormal.sample(&mut self.weight_rng);
        let u = unit(&mut self.weight_rng);
        self.weight_tried[which][i] += 1;
        if keep {
            self.kept_tried += 1;
        }
        let step = self.weight_scale[which][i] * z;
        let (wp, wb) = if which == 0 {
            (self.wp[i] + step, self.wb[i])
        } else {
            (self.wp[i], self.wb[i] + step)
        };
        if !weight_pair_valid(wp, wb) {
            return;
        }
        scratch.clear();
        let mut d_lik = 0.0;
        for (c, cell) in problem.cells.iter().enumerate() {
            let cache = &self.cache[c];
            let h = cell.h as usize;
            let la = self.pitchers[cell.pitcher as usize].logits[h][i];
            let lb = self.batter_logit(problem, cell, i);
            let x2 = squash(combine_logits(la, lb, problem.lc[h][i], wp, wb));
            let n = cell.counts[i];
            if n > 0.0 {
                d_lik += n * (x2.ln() - cache.ln_x[i]);
            }
            d_lik -= cell.total * ((cache.sum - cache.x[i] + x2).ln() - cache.ln_sum);
            scratch.push(x2);
        }
        if u.ln() < d_lik {
            self.wp[i] = wp;
            self.wb[i] = wb;
            self.weight_accepted[which][i] += 1;
            if keep {
                self.kept_accepted += 1;
            }
            for (c, cache) in self.cache.iter_mut().enumerate() {
                set_x(cache, i, scratch[c]);
            }
        }
    }

    fn adapt(&mut self, target: f64, round: usize) {
        for b in self.pitchers.iter_mut().chain(self.batters.iter_mut()) {
            b.proposals.adapt(target, round);
        }
        let gain = 3.0 / ((round + 1) as f64).sqrt();
        for k in 0..2 {
            for i in 0..NUM_OUTCOMES {
                if self.weight_tried[k][i] > 0 {
                    let rate = self.weight_accepted[k][i] as f64 / self.weight_tried[k][i] as f64;
                    self.weight_scale[k][i] =
                        (self.weight_scale[k][i] * (gain * (rate - target)).exp()).clamp(1e-4, 1.0);
                }
                self.weight_accepted[k][i] = 0;
                self.weight_tried[k][i] = 0;
            }
        }
    }

    fn record(&mut self) {
        for b in self.pitchers.iter_mut().chain(self.batters.iter_mut()) {
            for i in 0..NUM_OUTCOMES {
                b.stats[BASE][i].push(b.base[i]);
                b.stats[OFFSET][i].push(b.offsets[i]);
            }
        }
        for i in 0..NUM_OUTCOMES {
            self.weight_stats[0][i].push(self.wp[i]);
            self.weight_stats[1][i].push(self.wb[i]);
        }
    }

    fn summarize(self, problem: &PosteriorProblem, sweeps: usize, kept: usize) -> Result<PosteriorSummary> {
        let acceptance = if self.kept_tried > 0 {
            self.kept_accepted as f64 / self.kept_tried as f64
        } else {
            0.0
        };
        if self.kept_accepted == 0 {
            return Err(Error::Sampler {
                reason: "no proposal accepted after burn-in".into(),
                acceptance,
                sweeps,
            });
        }
        let mut ess = Vec::new();
        let summarize_block = |b: &Block, pa: u64, ess: &mut Vec<f64>| {
            for k in [BASE, OFFSET] {
                ess.extend(b.stats[k].iter().map(RunningStat::ess));
            }
            PlayerPosterior {
                plate_appearances: pa,
                base_mean: std::array::from_fn(|i| b.stats[BASE][i].mean),
                base_sd: std::array::from_fn(|i| b.stats[BASE][i].sd()),
                offset_mean: std::array::from_fn(|i| b.stats[OFFSET][i].mean),
                offset_sd: std::array::from_fn(|i| b.stats[OFFSET][i].sd()),
            }
        };
        let pitchers = self
            .pitchers
            .iter()
            .enumerate()
            .map(|(j, b)| (problem.pitcher_ids[j].clone(), summarize_block(b, problem.pitcher_pa[j], &mut ess)))
            .collect();
        let batters = self
            .batters
            .iter()
            .enumerate()
            .map(|(j, b)| (problem.batter_ids[j].clone(), summarize_block(b, problem.batter_pa[j], &mut ess)))
            .collect();
        for k in 0..2 {
            ess.extend(self.weight_stats[k].iter().map(RunningStat::ess));
        }
        let ws = &self.weight_stats;
        let weights = WeightPosterior {
            pitcher_mean: std::array::from_fn(|i| ws[0][i].mean),
            batter_mean: std::array::from_fn(|i| ws[1][i].mean),
            pitcher_sd: std::array::from_fn(|i| ws[0][i].sd()),
            batter_sd: std::array::from_fn(|i| ws[1][i].sd()),
        };
        let min_ess = ess.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_ess = ess.iter().sum::<f64>() / ess.len() as f64;
        Ok(PosteriorSummary {
            pitchers,
            batters,
            weights,
            diagnostics: SamplerDiagnostics {
                sweeps,
                kept,
                acceptance_rate: acceptance,
                min_ess,
                mean_ess,
            },
        })
    }
}

fn set_x(cache: &mut CellCache, i: usize, x: f64) {
    cache.x[i] = x;
    cache.ln_x[i] = x.ln();
    cache.sum = cache.x.iter().sum();
    cache.ln_sum = cache.sum.ln();
}
