//! Base-running transition tables and steal-tendency mixtures.
//!
//! A [`TransitionTable`] holds, for each of the 24 base-out states and 9
//! outcomes, a distribution over successor states and runs scored. Strikeouts,
//! walks, hit-by-pitches and home runs have one forced successor; the other
//! five outcomes are estimated from data.
//!
//! Batters are stratified by their posterior steal rate: records are split
//! into equal-count groups, one table is estimated per group, and each
//! batter's table is a mixture of the group tables weighted by the posterior
//! mass of his steal rate in each group's rate interval.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{beta_cdf, mean_var, BetaPrior};
use crate::error::{Error, Result};
use crate::events::{BaseOutState, Outcome, PlateAppearance, PostState, NUM_BASE_OUT_STATES, NUM_OUTCOMES};
use crate::rng::{unit, SimRng};

pub const NUM_ROWS: usize = NUM_BASE_OUT_STATES * NUM_OUTCOMES;
/// League-row pseudo-count added to every group cell.
pub const GROUP_PSEUDO_COUNT: f64 = 5.0;
pub const DEFAULT_GROUPS: usize = 5;
pub const DEFAULT_MIN_OPPORTUNITIES: u64 = 200;

#[inline]
pub fn row_index(state: BaseOutState, outcome: Outcome) -> usize {
    state.index() * NUM_OUTCOMES + outcome.index()
}

fn after_out(state: BaseOutState, bases: u8) -> PostState {
    if state.outs() >= 2 {
        PostState::Terminal
    } else {
        PostState::InPlay(BaseOutState::new(state.outs() + 1, bases).expect("valid"))
    }
}

fn in_play(outs: u8, bases: u8) -> PostState {
    PostState::InPlay(BaseOutState::new(outs, bases).expect("valid"))
}

/// Walk-style forced advance: only runners pushed by the batter move.
fn forced_advance(state: BaseOutState) -> (PostState, u8) {
    let b = state.bases();
    let (bases, runs) = if b & 0b001 == 0 {
        (b | 0b001, 0)
    } else if b & 0b010 == 0 {
        (b | 0b011, 0)
    } else if b & 0b100 == 0 {
        (0b111, 0)
    } else {
        (0b111, 1)
    };
    (in_play(state.outs(), bases), runs)
}

/// The single possible successor for outcomes whose transition is fixed:
/// a strikeout adds one out and never moves runners, a walk or hit-by-pitch
/// forces runners ahead, a home run clears the bases.
pub fn forced_successor(state: BaseOutState, outcome: Outcome) -> Option<(PostState, u8)> {
    match outcome {
        Outcome::Strikeout => Some((after_out(state, state.bases()), 0)),
        Outcome::Walk | Outcome::HitByPitch => Some(forced_advance(state)),
        Outcome::HomeRun => Some((in_play(state.outs(), 0), state.runners() + 1)),
        _ => None,
    }
}

/// Conventional advancement used where no data exists: on a ground out all
/// runners move up one base, a fly out scores only a runner from third, a
/// single scores runners from second and third, a double scores all but a
/// runner from first (who reaches third), a triple scores everyone.
pub fn rule_successor(state: BaseOutState, outcome: Outcome) -> (PostState, u8) {
    if let Some(f) = forced_successor(state, outcome) {
        return f;
    }
    let b = state.bases();
    let on = |base: u8| b >> base & 1 == 1;
    match outcome {
        Outcome::GroundOut => {
            if state.outs() >= 2 {
                (PostState::Terminal, 0)
            } else {
                (after_out(state, (b << 1) & 0b111), on(2) as u8)
            }
        }
        Outcome::FlyOut => {
            if state.outs() >= 2 {
                (PostState::Terminal, 0)
            } else {
                (after_out(state, b & 0b011), on(2) as u8)
            }
        }
        Outcome::Single => {
            let bases = 0b001 | if on(0) { 0b010 } else { 0 };
            (in_play(state.outs(), bases), on(1) as u8 + on(2) as u8)
        }
        Outcome::Double => {
            let bases = 0b010 | if on(0) { 0b100 } else { 0 };
            (in_play(state.outs(), bases), on(1) as u8 + on(2) as u8)
        }
        Outcome::Triple => (in_play(state.outs(), 0b100), state.runners()),
        _ => unreachable!("forced outcomes handled above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successor {
    pub next: PostState,
    pub runs: u8,
    pub prob: f64,
}

/// 216 rows of successor distributions, indexed by [`row_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    rows: Vec<Vec<Successor>>,
}

impl TransitionTable {
    /// Builds a table from explicit rows; validates simplex and
    /// runner-conservation invariants.
    pub fn from_rows(rows: Vec<Vec<Successor>>) -> Result<Self> {
        let t = TransitionTable { rows };
        t.validate()?;
        Ok(t)
    }

    /// Deterministic table following [`rule_successor`].
    pub fn from_rules() -> Self {
        let mut rows = Vec::with_capacity(NUM_ROWS);
        for state in BaseOutState::all() {
            for outcome in Outcome::ALL {
                let (next, runs) = rule_successor(state, outcome);
                rows.push(vec![Successor { next, runs, prob: 1.0 }]);
            }
        }
        TransitionTable { rows }
    }

    pub fn row(&self, state: BaseOutState, outcome: Outcome) -> &[Successor] {
        &self.rows[row_index(state, outcome)]
    }

    pub fn rows(&self) -> &[Vec<Successor>] {
        &self.rows
    }

    /// Probability of a particular successor (0 if unsupported).
    pub fn prob(&self, state: BaseOutState, outcome: Outcome, next: PostState, runs: u8) -> f64 {
        self.row(state, outcome)
            .iter()
            .find(|s| s.next == next && s.runs == runs)
            .map_or(0.0, |s| s.prob)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != NUM_ROWS {
            return Err(Error::param(format!(
                "transition table must have {NUM_ROWS} rows, found {}",
                self.rows.len()
            )));
        }
        for state in BaseOutState::all() {
            for outcome in Outcome::ALL {
                let row = self.row(state, outcome);
                if row.is_empty() {
                    return Err(Error::param(format!("empty row for {state} {outcome}")));
                }
                let mut total = 0.0;
                for s in row {
                    if !(s.prob >= 0.0 && s.prob.is_finite()) {
                        return Err(Error::param(format!("bad probability in row {state} {outcome}")));
                    }
                    if s.prob > 0.0 && !crate::events::conserves_runners(state, s.next, s.runs) {
                        return Err(Error::param(format!(
                            "row {state} {outcome}: successor {} with {} run(s) violates runner conservation",
                            s.next, s.runs
                        )));
                    }
                    total += s.prob;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param(format!(
                        "row {state} {outcome} sums to {total}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Serialize for TransitionTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<(String, u8, f64)>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|s| (s.next.to_string(), s.runs, s.prob)).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TransitionTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: Vec<Vec<(String, u8, f64)>> = Vec::deserialize(deserializer)?;
        let rows = raw
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|(next, runs, prob)| {
                        Ok(Successor {
                            next: next.parse().map_err(D::Error::custom)?,
                            runs,
                            prob,
                        })
                    })
                    .collect::<std::result::Result<Vec<_>, D::Error>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        TransitionTable::from_rows(rows).map_err(D::Error::custom)
    }
}

type Counts = Vec<BTreeMap<(u8, u8), f64>>;

fn count_rows<'a>(records: impl Iterator<Item = &'a PlateAppearance>) -> Counts {
    let mut counts = vec![BTreeMap::new(); NUM_ROWS];
    for r in records {
        *counts[row_index(r.pre, r.outcome)]
            .entry((r.post.code(), r.runs))
            .or_insert(0.0) += 1.0;
    }
    counts
}

fn to_row(cells: &BTreeMap<(u8, u8), f64>) -> Vec<Successor> {
    let total: f64 = cells.values().sum();
    cells
        .iter()
        .filter(|(_, c)| **c > 0.0)
        .map(|(&(code, runs), c)| Successor {
            next: PostState::from_code(code).expect("valid code"),
            runs,
            prob: c / total,
        })
        .collect()
}

fn forced_row(state: BaseOutState, outcome: Outcome) -> Option<Vec<Successor>> {
    forced_successor(state, outcome).map(|(next, runs)| vec![Successor { next, runs, prob: 1.0 }])
}

/// Empirical league-average table. Forced outcomes use their forced
/// successor; unobserved (state, outcome) cells use [`rule_successor`].
pub fn league_table(records: &[PlateAppearance]) -> TransitionTable {
    let counts = count_rows(records.iter());
    let mut rows = Vec::with_capacity(NUM_ROWS);
    for state in BaseOutState::all() {
        for outcome in Outcome::ALL {
            let cells = &counts[row_index(state, outcome)];
            let row = forced_row(state, outcome).unwrap_or_else(|| {
                if cells.is_empty() {
                    let (next, runs) = rule_successor(state, outcome);
                    vec![Successor { next, runs, prob: 1.0 }]
                } else {
                    to_row(cells)
                }
            });
            rows.push(row);
        }
    }
    TransitionTable { rows }
}

/// Group table: each data-driven cell is `(counts + k * league_row) / (n + k)`
/// with `k = GROUP_PSEUDO_COUNT`, so empty cells equal the league row.
fn smoothed_table<'a>(
    records: impl Iterator<Item = &'a PlateAppearance>,
    league: &TransitionTable,
) -> TransitionTable {
    let counts = count_rows(records);
    let mut rows = Vec::with_capacity(NUM_ROWS);
    for state in BaseOutState::all() {
        for outcome in Outcome::ALL {
            let idx = row_index(state, outcome);
            let row = forced_row(state, outcome).unwrap_or_else(|| {
                let cells = &counts[idx];
                if cells.is_empty() {
                    return league.rows[idx].clone();
                }
                let mut merged = cells.clone();
                for s in &league.rows[idx] {
                    *merged.entry((s.next.code(), s.runs)).or_insert(0.0) +=
                        GROUP_PSEUDO_COUNT * s.prob;
                }
                to_row(&merged)
            });
            rows.push(row);
        }
    }
    TransitionTable { rows }
}

/// Posterior predictive steal rate `(alpha + x) / (alpha + beta + n)`.
pub fn steal_rate_posterior(steals: u64, opportunities: u64, alpha: f64, beta: f64) -> Result<f64> {
    if steals > opportunities {
        return Err(Error::param(format!(
            "steals ({steals}) exceed opportunities ({opportunities})"
        )));
    }
    BetaPrior::new(alpha, beta)?;
    Ok((alpha + steals as f64) / (alpha + beta + opportunities as f64))
}

/// Steal attempts observed for one batter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StealProfile {
    pub batter_id: String,
    pub opportunities: u64,
    pub steals: u64,
}

impl StealProfile {
    pub fn new(batter_id: impl Into<String>, opportunities: u64, steals: u64) -> Result<Self> {
        if steals > opportunities {
            return Err(Error::param(format!(
                "steals ({steals}) exceed opportunities ({opportunities})"
            )));
        }
        Ok(StealProfile {
            batter_id: batter_id.into(),
            opportunities,
            steals,
        })
    }

    pub fn posterior_rate(&self, prior: &BetaPrior) -> f64 {
        (prior.alpha + self.steals as f64) / (prior.alpha + prior.beta + self.opportunities as f64)
    }

    pub fn posterior(&self, prior: &BetaPrior) -> BetaPrior {
        BetaPrior {
            alpha: prior.alpha + self.steals as f64,
            beta: prior.beta + (self.opportunities - self.steals) as f64,
        }
    }
}

/// Reads the auxiliary `batter_id,opportunities,steals` CSV.
pub fn parse_steal_profiles<R: std::io::Read>(source: R) -> Result<Vec<StealProfile>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().ne(["batter_id", "opportunities", "steals"]) {
        return Err(Error::Schema(
            "steal profile header must be exactly `batter_id,opportunities,steals`".into(),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let parse = |j: usize| -> Result<u64> {
            row.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Schema(format!("steal profile row {}: bad integer", i + 1)))
        };
        let id = row.get(0).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::Schema(format!("steal profile row {}: empty batter_id", i + 1)));
        }
        out.push(StealProfile::new(id, parse(1)?, parse(2)?)?);
    }
    Ok(out)
}

/// Beta prior on steal rates by moment matching over batters with at least
/// `min_opportunities` opportunities.
pub fn fit_steal_prior(profiles: &[StealProfile], min_opportunities: u64) -> Result<BetaPrior> {
    let qualifying: Vec<&StealProfile> = profiles
        .iter()
        .filter(|p| p.opportunities >= min_opportunities.max(1))
        .collect();
    if qualifying.len() < 2 {
        return Err(Error::insufficient(format!(
            "need at least 2 batters with >= {min_opportunities} steal opportunities, found {}",
            qualifying.len()
        )));
    }
    let rates: Vec<f64> = qualifying
        .iter()
        .map(|p| p.steals as f64 / p.opportunities as f64)
        .collect();
    let (mean, var) = mean_var(&rates);
    // Remove the expected binomial sampling noise from the spread.
    let noise = mean * (1.0 - mean)
        * qualifying.iter().map(|p| 1.0 / p.opportunities as f64).sum::<f64>()
        / qualifying.len() as f64;
    let mean = mean.clamp(1e-6, 1.0 - 1e-6);
    BetaPrior::from_moments(mean, (var - noise).max(0.0))
}

/// Tables for equal-count steal-rate groups and the rate boundaries that
/// separate the groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTables {
    /// `k - 1` strictly increasing rate boundaries.
    pub boundaries: Vec<f64>,
    pub tables: Vec<TransitionTable>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Splits `records` into `k` equal-count groups after sorting by the
/// batter's posterior steal rate, and estimates one table per group.
///
/// Group sizes differ by at most one, with the extra records going to the
/// lowest-rate groups. Boundaries are the `j/k` quantiles of the distinct
/// batters' rates, nudged apart by `1e-9` where quantiles coincide.
pub fn build_group_tables(
    records: &[PlateAppearance],
    rates: &HashMap<String, f64>,
    k: usize,
    league: &TransitionTable,
) -> Result<GroupTables> {
    if k == 0 {
        return Err(Error::param("group count must be >= 1"));
    }
    if records.len() < k {
        return Err(Error::insufficient(format!(
            "{} records cannot fill {k} groups",
            records.len()
        )));
    }
    let mut keyed = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let rate = *rates.get(&r.batter_id).ok_or_else(|| {
            Error::param(format!("no posterior steal rate for batter {}", r.batter_id))
        })?;
        keyed.push((rate, i));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut population: Vec<f64> = {
        let mut seen: Vec<(&String, f64)> = rates.iter().map(|(k, v)| (k, *v)).collect();
        seen.sort_by(|a, b| a.0.cmp(b.0));
        seen.into_iter().map(|(_, v)| v).collect()
    };
    population.sort_by(f64::total_cmp);
    let mut boundaries: Vec<f64> = (1..k)
        .map(|j| quantile(&population, j as f64 / k as f64))
        .collect();
    for j in 1..boundaries.len() {
        if boundaries[j] <= boundaries[j - 1] {
            boundaries[j] = boundaries[j - 1] + 1e-9;
        }
    }

    if k == 1 {
        return Ok(GroupTables {
            boundaries,
            tables: vec![league.clone()],
        });
    }

    let base = records.len() / k;
    let extra = records.len() % k;
    let mut tables = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let size = base + usize::from(g < extra);
        let group = &keyed[start..start + size];
        tables.push(smoothed_table(group.iter().map(|&(_, i)| &records[i]), league));
        start += size;
    }
    Ok(GroupTables { boundaries, tables })
}

/// Nonnegative per-group weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights(pub Vec<f64>);

/// Posterior mass of the batter's steal rate falling in each group's rate
/// interval `[b_{g-1}, b_g)`, computed from the beta CDF.
pub fn batter_mixture_weights(
    profile: &StealProfile,
    prior: &BetaPrior,
    boundaries: &[f64],
) -> Result<GroupWeights> {
    if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("group boundaries must be strictly increasing"));
    }
    if boundaries.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::param("group boundaries must lie in [0,1]"));
    }
    let post = profile.posterior(prior);
    let mut cdf = Vec::with_capacity(boundaries.len() + 2);
    cdf.push(0.0);
    cdf.extend(boundaries.iter().map(|&b| beta_cdf(b, post.alpha, post.beta)));
    cdf.push(1.0);
    let mut w: Vec<f64> = cdf.windows(2).map(|c| (c[1] - c[0]).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(GroupWeights(w))
}

/// Row-wise convex combination of group tables.
pub fn batter_transition_table(weights: &GroupWeights, tables: &[TransitionTable]) -> Result<TransitionTable> {
    if weights.0.len() != tables.len() {
        return Err(Error::param(format!(
            "{} weights for {} tables",
            weights.0.len(),
            tables.len()
        )));
    }
    if weights.0.iter().any(|w| !(*w >= 0.0)) || (weights.0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("group weights must form a simplex"));
    }
    let mut rows = Vec::with_capacity(NUM_ROWS);
    for idx in 0..NUM_ROWS {
        let mut merged: BTreeMap<(u8, u8), f64> = BTreeMap::new();
        for (w, t) in weights.0.iter().zip(tables) {
            if *w == 0.0 {
                continue;
            }
            for s in &t.rows[idx] {
                *merged.entry((s.next.code(), s.runs)).or_insert(0.0) += w * s.prob;
            }
        }
        // Renormalize so rounding never leaves a forced row at 1 + ulp.
        let total: f64 = merged.values().sum();
        let row = merged
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|((code, runs), prob)| Successor {
                next: PostState::from_code(code).expect("valid code"),
                runs,
                prob: prob / total,
            })
            .collect();
        rows.push(row);
    }
    Ok(TransitionTable { rows })
}

/// Cumulative form of a table for fast sampling.
#[derive(Debug, Clone)]
pub struct TransitionSampler {
    offsets: Vec<u32>,
    cumulative: Vec<f64>,
    successors: Vec<(PostState, u8)>,
}

impl TransitionSampler {
    pub fn new(table: &TransitionTable) -> Self {
        let mut offsets = Vec::with_capacity(NUM_ROWS + 1);
        let mut cumulative = Vec::new();
        let mut successors = Vec::new();
        for row in &table.rows {
            offsets.push(cumulative.len() as u32);
            let mut acc = 0.0;
            for s in row {
                acc += s.prob;
                cumulative.push(acc);
                successors.push((s.next, s.runs));
            }
            *cumulative.last_mut().expect("non-empty row") = f64::INFINITY;
        }
        offsets.push(cumulative.len() as u32);
        TransitionSampler {
            offsets,
            cumulative,
            successors,
        }
    }

    /// Successor for the uniform draw `u` in `[0, 1)`.
    #[inline]
    pub fn pick(&self, state: BaseOutState, outcome: Outcome, u: f64) -> (PostState, u8) {
        let idx = row_index(state, outcome);
        let (lo, hi) = (self.offsets[idx] as usize, self.offsets[idx + 1] as usize);
        let mut j = lo;
        while j + 1 < hi && u >= self.cumulative[j] {
            j += 1;
        }
        self.successors[j]
    }
}

/// Samples the successor of `(state, outcome)` from `table`.
pub fn apply_transition(
    state: BaseOutState,
    outcome: Outcome,
    table: &TransitionTable,
    rng: &mut SimRng,
) -> (PostState, u8) {
    let u = unit(rng);
    let row = table.row(state, outcome);
    let mut acc = 0.0;
    for s in row {
        acc += s.prob;
        if u < acc {
            return (s.next, s.runs);
        }
    }
    let last = row.last().expect("non-empty row");
    (last.next, last.runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::testutil::simple;
    use crate::events::Handedness;
    use crate::rng::substream;

    fn s(outs: u8, bases: u8) -> BaseOutState {
        BaseOutState::new(outs, bases).unwrap()
    }

    #[test]
    fn rule_table_is_valid() {
        TransitionTable::from_rules().validate().unwrap();
    }

    #[test]
    fn forced_examples() {
        let t = TransitionTable::from_rules();
        let mut rng = substream(1, &[]);
        assert_eq!(
            apply_transition(s(0, 0), Outcome::HomeRun, &t, &mut rng),
            (PostState::InPlay(s(0, 0)), 1)
        );
        assert_eq!(
            apply_transition(s(0, 0), Outcome::Walk, &t, &mut rng),
            (PostState::InPlay(s(0, 1)), 0)
        );
        assert_eq!(
            apply_transition(s(2, 0b101), Outcome::Strikeout, &t, &mut rng),
            (PostState::Terminal, 0)
        );
        assert_eq!(forced_successor(s(1, 0b111), Outcome::Walk), Some((PostState::InPlay(s(1, 0b111)), 1)));
        assert_eq!(forced_successor(s(1, 0b101), Outcome::HitByPitch), Some((PostState::InPlay(s(1, 0b111)), 0)));
        assert_eq!(forced_successor(s(1, 0b110), Outcome::HomeRun), Some((PostState::InPlay(s(1, 0)), 3)));
    }

    #[test]
    fn steal_posterior_examples() {
        assert_eq!(steal_rate_posterior(0, 0, 1.0, 1.0).unwrap(), 0.5);
        assert!((steal_rate_posterior(5, 50, 2.0, 18.0).unwrap() - 0.1).abs() < 1e-15);
        let r = steal_rate_posterior(300_000, 1_000_000, 2.0, 18.0).unwrap();
        assert!((r - 0.3).abs() < 1e-4);
        assert!(steal_rate_posterior(6, 5, 1.0, 1.0).is_err());
        assert!(steal_rate_posterior(1, 5, 0.0, 1.0).is_err());
    }

    #[test]
    fn steal_prior_degenerate_and_insufficient() {
        let profiles: Vec<_> = (0..10)
            .map(|i| StealProfile::new(format!("b{i}"), 1000, 70).unwrap())
            .collect();
        let prior = fit_steal_prior(&profiles, 200).unwrap();
        assert!((prior.mean() - 0.07).abs() < 1e-12);
        let one = vec![
            StealProfile::new("a", 500, 10).unwrap(),
            StealProfile::new("b", 50, 10).unwrap(),
        ];
        assert!(matches!(fit_steal_prior(&one, 200), Err(Error::InsufficientData(_))));
    }

    fn steal_records(n: usize) -> Vec<PlateAppearance> {
        (0..n)
            .map(|i| {
                let mut r = simple("p", &format!("b{i}"), Handedness::Same, 1, Outcome::Single);
                r.pre = s(0, 0b010);
                // Slow runners are held at third, fast ones score.
                if i < n / 2 {
                    r.post = PostState::InPlay(s(0, 0b101));
                    r.runs = 0;
                } else {
                    r.post = PostState::InPlay(s(0, 0b001));
                    r.runs = 1;
                }
                r
            })
            .collect()
    }

    #[test]
    fn one_group_is_league_table() {
        let recs = steal_records(10);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..10).map(|i| (format!("b{i}"), i as f64 / 20.0)).collect();
        let g = build_group_tables(&recs, &rates, 1, &league).unwrap();
        assert_eq!(g.tables.len(), 1);
        assert_eq!(g.tables[0], league);
        assert!(g.boundaries.is_empty());
    }

    #[test]
    fn ten_records_five_groups() {
        let recs = steal_records(10);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..10).map(|i| (format!("b{i}"), 0.01 + i as f64 / 20.0)).collect();
        let g = build_group_tables(&recs, &rates, 5, &league).unwrap();
        assert_eq!(g.tables.len(), 5);
        assert_eq!(g.boundaries.len(), 4);
        // Quantiles of 0.01, 0.06, ..., 0.46 at 20/40/60/80%.
        for (j, b) in g.boundaries.iter().enumerate() {
            let pos = (j + 1) as f64 * 0.2 * 9.0;
            let expected = 0.01 + pos / 20.0;
            assert!((b - expected).abs() < 1e-12);
        }
        // Two records per group: the slowest group keeps runners at third,
        // smoothed toward the league row with pseudo-count 5.
        let row_state = s(0, 0b010);
        let held = PostState::InPlay(s(0, 0b101));
        let slow = g.tables[0].prob(row_state, Outcome::Single, held, 0);
        let fast = g.tables[4].prob(row_state, Outcome::Single, held, 0);
        assert!((slow - (2.0 + 5.0 * 0.5) / 7.0).abs() < 1e-12);
        assert!((fast - (5.0 * 0.5) / 7.0).abs() < 1e-12);
        // Unobserved cells fall back to the league row.
        assert_eq!(
            g.tables[2].row(s(1, 0), Outcome::Double),
            league.row(s(1, 0), Outcome::Double)
        );
        for t in &g.tables {
            t.validate().unwrap();
        }
    }

    #[test]
    fn too_few_records_for_groups() {
        let recs = steal_records(3);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..3).map(|i| (format!("b{i}"), 0.1)).collect();
        assert!(build_group_tables(&recs, &rates, 5, &league).is_err());
    }

    #[test]
    fn mixture_concentrates_and_spreads() {
        let b = [0.04, 0.06, 0.08, 0.10];
        let prior = BetaPrior::new(2.0, 18.0).unwrap();
        let big = StealProfile::new("x", 1_000_000, 70_000).unwrap();
        let w = batter_mixture_weights(&big, &prior, &b).unwrap();
        let expect = [0.0, 0.0, 1.0, 0.0, 0.0];
        for g in 0..5 {
            assert!((w.0[g] - expect[g]).abs() < 1e-3, "{:?}", w.0);
        }
        // No data and a uniform prior with boundaries at its quintiles.
        let uniform = BetaPrior::new(1.0, 1.0).unwrap();
        let none = StealProfile::new("y", 0, 0).unwrap();
        let w = batter_mixture_weights(&none, &uniform, &[0.2, 0.4, 0.6, 0.8]).unwrap();
        for g in 0..5 {
            assert!((w.0[g] - 0.2).abs() < 1e-9);
        }
        assert!(batter_mixture_weights(&none, &uniform, &[0.4, 0.2]).is_err());
    }

    #[test]
    fn mixture_matches_dense_grid() {
        // Posterior Beta(7, 63); midpoint rule on 2e6 cells, normalized.
        let prior = BetaPrior::new(2.0, 18.0).unwrap();
        let p = StealProfile::new("x", 50, 5).unwrap();
        let b = [0.05, 0.08, 0.11, 0.15];
        let w = batter_mixture_weights(&p, &prior, &b).unwrap();
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let mut mass = [0.0; 5];
        for i in 0..n {
            let x: f64 = (i as f64 + 0.5) * h;
            let dens = x.powi(6) * (1.0 - x).powi(62);
            let g = b.iter().filter(|&&e| x >= e).count();
            mass[g] += dens;
        }
        let total: f64 = mass.iter().sum();
        for g in 0..5 {
            assert!((w.0[g] - mass[g] / total).abs() < 1e-3, "{g}: {} vs {}", w.0[g], mass[g] / total);
        }
        assert!((w.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentration_is_monotone() {
        let prior = BetaPrior::new(2.0, 18.0).unwrap();
        let b = [0.04, 0.06, 0.08, 0.10];
        for &(rate, group) in &[(0.03, 0usize), (0.05, 1), (0.07, 2), (0.09, 3), (0.2, 4)] {
            let mut last = 0.0;
            for n in [100u64, 300, 1000, 3000, 10_000, 30_000, 100_000] {
                let x = (rate * n as f64).round() as u64;
                let w = batter_mixture_weights(&StealProfile::new("x", n, x).unwrap(), &prior, &b).unwrap();
                assert!(w.0[group] >= last - 1e-12, "rate {rate} n {n}");
                last = w.0[group];
            }
        }
    }

    #[test]
    fn blend_is_linear_in_weights() {
        let recs = steal_records(10);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..10).map(|i| (format!("b{i}"), 0.01 + i as f64 / 20.0)).collect();
        let g = build_group_tables(&recs, &rates, 5, &league).unwrap();
        let w1 = vec![0.5, 0.1, 0.1, 0.2, 0.1];
        let w2 = vec![0.0, 0.3, 0.3, 0.0, 0.4];
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 0.25 * a + 0.75 * b).collect();
        let t1 = batter_transition_table(&GroupWeights(w1), &g.tables).unwrap();
        let t2 = batter_transition_table(&GroupWeights(w2), &g.tables).unwrap();
        let tm = batter_transition_table(&GroupWeights(mix), &g.tables).unwrap();
        for st in BaseOutState::all() {
            for o in Outcome::ALL {
                for succ in tm.row(st, o) {
                    let blended = 0.25 * t1.prob(st, o, succ.next, succ.runs)
                        + 0.75 * t2.prob(st, o, succ.next, succ.runs);
                    assert!((succ.prob - blended).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_vertex_and_idempotence() {
        let recs = steal_records(10);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..10).map(|i| (format!("b{i}"), 0.01 + i as f64 / 20.0)).collect();
        let g = build_group_tables(&recs, &rates, 5, &league).unwrap();
        let vertex = batter_transition_table(&GroupWeights(vec![1.0, 0.0, 0.0, 0.0, 0.0]), &g.tables).unwrap();
        assert_eq!(vertex, g.tables[0]);
        let same = vec![league.clone(); 5];
        let flat = batter_transition_table(&GroupWeights(vec![0.2; 5]), &same).unwrap();
        for (a, b) in flat.rows().iter().zip(league.rows()) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!((x.next, x.runs), (y.next, y.runs));
                assert!((x.prob - y.prob).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blended_forced_rows_are_exactly_one() {
        let recs = steal_records(10);
        let league = league_table(&recs);
        let rates: HashMap<_, _> = (0..10).map(|i| (format!("b{i}"), 0.01 + i as f64 / 20.0)).collect();
        let g = build_group_tables(&recs, &rates, 5, &league).unwrap();
        let t = batter_transition_table(&GroupWeights(vec![0.1, 0.7, 0.1, 0.05, 0.05]), &g.tables).unwrap();
        for st in BaseOutState::all() {
            for o in Outcome::ALL {
                if let Some((next, runs)) = forced_successor(st, o) {
                    assert_eq!(t.prob(st, o, next, runs), 1.0);
                }
            }
        }
    }

    #[test]
    fn half_half_blend_by_hand() {
        let st = s(0, 0b010);
        let mut a = TransitionTable::from_rules();
        let mut b = TransitionTable::from_rules();
        let idx = row_index(st, Outcome::Single);
        a.rows[idx] = vec![
            Successor { next: PostState::InPlay(s(0, 0b101)), runs: 0, prob: 0.8 },
            Successor { next: PostState::InPlay(s(0, 0b001)), runs: 1, prob: 0.2 },
        ];
        b.rows[idx] = vec![
            Successor { next: PostState::InPlay(s(0, 0b101)), runs: 0, prob: 0.4 },
            Successor { next: PostState::InPlay(s(0, 0b001)), runs: 1, prob: 0.6 },
        ];
        let r = TransitionTable::from_rules();
        let tables = vec![a, b, r.clone(), r.clone(), r];
        let m = batter_transition_table(&GroupWeights(vec![0.5, 0.5, 0.0, 0.0, 0.0]), &tables).unwrap();
        assert!((m.prob(st, Outcome::Single, PostState::InPlay(s(0, 0b101)), 0) - 0.6).abs() < 1e-15);
        assert!((m.prob(st, Outcome::Single, PostState::InPlay(s(0, 0b001)), 1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn table_json_roundtrip() {
        let recs = steal_records(10);
        let t = league_table(&recs);
        let json = serde_json::to_string(&t).unwrap();
        let back: TransitionTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sampler_matches_row() {
        let recs = steal_records(10);
        let t = league_table(&recs);
        let sampler = TransitionSampler::new(&t);
        let st = s(0, 0b010);
        assert_eq!(sampler.pick(st, Outcome::Single, 0.1), (PostState::InPlay(s(0, 0b001)), 1));
        assert_eq!(sampler.pick(st, Outcome::Single, 0.9), (PostState::InPlay(s(0, 0b101)), 0));
    }
}
