//! Model scoring, added-wins posteriors and betting analysis.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baserunning::TransitionTable;
use crate::dist::BetaPrior;
use crate::error::{Error, Result};
use crate::events::{PlateAppearance, NUM_OUTCOMES};
use crate::model::MatchupModel;
use crate::rng::substream;

pub const SEASON_GAMES: f64 = 162.0;

pub fn gmp(log_loss: f64) -> f64 {
    (-log_loss).exp()
}

/// Mean negative log probability and its exponentiated counterpart.
/// `infinite` marks a zero probability assigned to something that happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub log_loss: f64,
    pub gmp: f64,
    pub infinite: bool,
    pub count: usize,
}

impl LossSummary {
    fn from_total(total: f64, count: usize) -> Self {
        let log_loss = total / count as f64;
        LossSummary {
            log_loss,
            gmp: gmp(log_loss),
            infinite: log_loss.is_infinite(),
            count,
        }
    }
}

fn neg_ln(p: f64) -> f64 {
    if p > 0.0 {
        -p.ln()
    } else {
        f64::INFINITY
    }
}

/// Log loss of `predictions` against the realized `actuals`.
pub fn log_loss_and_gmp<P: AsRef<[f64]>>(predictions: &[P], actuals: &[usize]) -> Result<LossSummary> {
    if predictions.len() != actuals.len() {
        return Err(Error::param(format!(
            "{} predictions but {} outcomes",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::insufficient("no predictions to score"));
    }
    let mut total = 0.0;
    for (i, (p, &a)) in predictions.iter().zip(actuals).enumerate() {
        let p = p.as_ref();
        let q = *p
            .get(a)
            .ok_or_else(|| Error::param(format!("row {i}: outcome index {a} outside the simplex")))?;
        total += neg_ln(q);
    }
    Ok(LossSummary::from_total(total, predictions.len()))
}

/// Expected cross entropy of `evaluated` under `truth`, averaged over
/// plate appearances, reported as a loss and a GMP.
pub fn cross_model_gmp<P: AsRef<[f64]>, Q: AsRef<[f64]>>(evaluated: &[P], truth: &[Q]) -> Result<LossSummary> {
    if evaluated.len() != truth.len() {
        return Err(Error::param(format!(
            "{} evaluated rows but {} ground-truth rows",
            evaluated.len(),
            truth.len()
        )));
    }
    if evaluated.is_empty() {
        return Err(Error::insufficient("no predictions to compare"));
    }
    let mut total = 0.0;
    for (i, (p, q)) in evaluated.iter().zip(truth).enumerate() {
        let (p, q) = (p.as_ref(), q.as_ref());
        if p.len() != q.len() {
            return Err(Error::param(format!("row {i}: simplices differ in length")));
        }
        total += p
            .iter()
            .zip(q)
            .filter(|(_, &qi)| qi > 0.0)
            .map(|(&pi, &qi)| qi * neg_ln(pi))
            .sum::<f64>();
    }
    Ok(LossSummary::from_total(total, evaluated.len()))
}

/// Scores against a ground-truth model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthReport {
    pub outcome_log_loss: f64,
    pub outcome_gmp: f64,
    pub transition_log_loss: f64,
    pub transition_gmp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub variant: String,
    pub plate_appearances: usize,
    pub outcome_log_loss: f64,
    pub outcome_gmp: f64,
    pub transition_log_loss: f64,
    pub transition_gmp: f64,
    pub infinite_loss: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vs_ground_truth: Option<GroundTruthReport>,
}

struct Predictor<'a> {
    model: &'a MatchupModel,
    tables: HashMap<&'a str, TransitionTable>,
}

impl<'a> Predictor<'a> {
    fn new(model: &'a MatchupModel) -> Self {
        Predictor {
            model,
            tables: HashMap::new(),
        }
    }

    fn outcome(&self, r: &PlateAppearance) -> Result<[f64; NUM_OUTCOMES]> {
        Ok(self
            .model
            .matchup(&r.pitcher_id, r.pitcher_hand, &r.batter_id, r.batter_hand, r.batting_order)?
            .probs)
    }

    fn table(&mut self, batter: &'a str) -> Result<&TransitionTable> {
        if !self.tables.contains_key(batter) {
            let t = self.model.batter_table(batter)?.into_owned();
            self.tables.insert(batter, t);
        }
        Ok(&self.tables[batter])
    }
}

/// Outcome and transition log loss of `model` on `records`; with
/// `ground_truth`, also the expected losses under that model's predictions.
/// Transitions are scored on the realized successor given the realized
/// outcome.
pub fn evaluate_model(
    model: &MatchupModel,
    records: &[PlateAppearance],
    ground_truth: Option<&MatchupModel>,
) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::insufficient("no plate appearances to evaluate"));
    }
    let mut eval = Predictor::new(model);
    let mut truth = ground_truth.map(Predictor::new);
    let mut outcome_preds = Vec::with_capacity(records.len());
    let mut actuals = Vec::with_capacity(records.len());
    let mut transition_total = 0.0;
    let mut gt_outcome_total = 0.0;
    let mut gt_transition_total = 0.0;
    for r in records {
        let p = eval.outcome(r)?;
        let row = eval.table(&r.batter_id)?.row(r.pre, r.outcome).to_vec();
        transition_total += neg_ln(
            row.iter()
                .filter(|s| s.next == r.post && s.runs == r.runs)
                .map(|s| s.prob)
                .sum(),
        );
        if let Some(t) = truth.as_mut() {
            let q = t.outcome(r)?;
            gt_outcome_total += cross_model_gmp(&[p], &[q])?.log_loss;
            for s in t.table(&r.batter_id)?.row(r.pre, r.outcome) {
                if s.prob > 0.0 {
                    let ps: f64 = row
                        .iter()
                        .filter(|e| e.next == s.next && e.runs == s.runs)
                        .map(|e| e.prob)
                        .sum();
                    gt_transition_total += s.prob * neg_ln(ps);
                }
            }
        }
        outcome_preds.push(p);
        actuals.push(r.outcome.index());
    }
    let n = records.len();
    let outcome = log_loss_and_gmp(&outcome_preds, &actuals)?;
    let transition = LossSummary::from_total(transition_total, n);
    let vs_ground_truth = truth.map(|_| {
        let o = LossSummary::from_total(gt_outcome_total, n);
        let t = LossSummary::from_total(gt_transition_total, n);
        GroundTruthReport {
            outcome_log_loss: o.log_loss,
            outcome_gmp: o.gmp,
            transition_log_loss: t.log_loss,
            transition_gmp: t.gmp,
        }
    });
    Ok(MetricReport {
        variant: model.variant.to_string(),
        plate_appearances: n,
        outcome_log_loss: outcome.log_loss,
        outcome_gmp: outcome.gmp,
        transition_log_loss: transition.log_loss,
        transition_gmp: transition.gmp,
        infinite_loss: outcome.infinite || transition.infinite,
        vs_ground_truth,
    })
}

/// Beta posterior of a win rate under a uniform prior.
pub fn win_rate_posterior(wins: u64, games: u64) -> Result<BetaPrior> {
    if wins > games {
        return Err(Error::param(format!("{wins} wins out of {games} games")));
    }
    BetaPrior::new(1.0 + wins as f64, 1.0 + (games - wins) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinCount {
    pub wins: u64,
    pub games: u64,
}

/// Normal approximation, in wins per season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalApprox {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedWinsPosterior {
    pub per_game: Vec<NormalApprox>,
    /// Pooled draws, in wins per season.
    pub samples: Vec<f64>,
    pub pooled_mean: f64,
    pub pooled_sd: f64,
    /// Monte Carlo standard error of `pooled_mean`.
    pub mc_se: f64,
}

/// Challenger-minus-baseline win-rate difference per game, as a normal with
/// the beta posteriors' mean difference and summed variances, pooled by
/// picking a game uniformly for every draw. All values are scaled to a
/// season. Each pair is `(baseline, challenger)`.
pub fn added_wins_posterior(per_game: &[(WinCount, WinCount)], samples: usize, seed: u64) -> Result<AddedWinsPosterior> {
    if per_game.is_empty() {
        return Err(Error::insufficient("no games to pool"));
    }
    if samples < 2 {
        return Err(Error::param("at least 2 samples are required"));
    }
    let per_game = per_game
        .iter()
        .map(|(base, chal)| {
            let b = win_rate_posterior(base.wins, base.games)?;
            let c = win_rate_posterior(chal.wins, chal.games)?;
            Ok(NormalApprox {
                mean: (c.mean() - b.mean()) * SEASON_GAMES,
                sd: (c.variance() + b.variance()).sqrt() * SEASON_GAMES,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let normals = per_game
        .iter()
        .map(|g| Normal::new(g.mean, g.sd).map_err(|e| Error::Numerical(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = substream(seed, &[]);
    let draws: Vec<f64> = (0..samples)
        .map(|_| normals[rng.random_range(0..normals.len())].sample(&mut rng))
        .collect();
    let (mean, var) = crate::dist::mean_var(&draws);
    Ok(AddedWinsPosterior {
        per_game,
        pooled_mean: mean,
        pooled_sd: var.sqrt(),
        mc_se: (var / samples as f64).sqrt(),
        samples: draws,
    })
}

fn check_line(moneyline: i32) -> Result<()> {
    if moneyline.unsigned_abs() < 100 {
        return Err(Error::param(format!("moneyline {moneyline} has magnitude below 100")));
    }
    Ok(())
}

/// Probability implied by an American moneyline.
pub fn implied_probability(moneyline: i32) -> Result<f64> {
    check_line(moneyline)?;
    let m = f64::from(moneyline);
    Ok(if m < 0.0 { -m / (-m + 100.0) } else { 100.0 / (m + 100.0) })
}

/// Net profit per unit staked on a winning bet at `moneyline`.
pub fn win_multiple(moneyline: i32) -> Result<f64> {
    check_line(moneyline)?;
    let m = f64::from(moneyline);
    Ok(if m < 0.0 { 100.0 / -m } else { m / 100.0 })
}

/// Net profit of a settled bet.
pub fn settle(moneyline: i32, stake: f64, won: bool) -> Result<f64> {
    let k = win_multiple(moneyline)?;
    Ok(if won { stake * k } else { -stake })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetSide {
    Home,
    Away,
}

impl BetSide {
    pub fn name(self) -> &'static str {
        match self {
            BetSide::Home => "home",
            BetSide::Away => "away",
        }
    }
}

/// Side to bet, if the model's edge on it exceeds the implied probability
/// by more than `cushion`.
pub fn betting_decision(model_home_prob: f64, home_line: i32, away_line: i32, cushion: f64) -> Result<Option<BetSide>> {
    if !(0.0..=1.0).contains(&model_home_prob) {
        return Err(Error::param(format!("model probability {model_home_prob} outside [0, 1]")));
    }
    if !(cushion >= 0.0) {
        return Err(Error::param(format!("cushion must be >= 0, got {cushion}")));
    }
    let ih = implied_probability(home_line)?;
    let ia = implied_probability(away_line)?;
    let home = model_home_prob > ih + cushion;
    let away = 1.0 - model_home_prob > ia + cushion;
    match (home, away) {
        (true, true) => Err(Error::param(format!(
            "lines {home_line}/{away_line} have a negative overround; both sides qualify"
        ))),
        (true, false) => Ok(Some(BetSide::Home)),
        (false, true) => Ok(Some(BetSide::Away)),
        (false, false) => Ok(None),
    }
}

/// One row of the odds file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OddsRow {
    pub game_id: String,
    pub home_team: String,
    pub away_team: String,
    pub home_ml: i32,
    pub away_ml: i32,
    pub home_won: u8,
}

impl OddsRow {
    pub fn home_won(&self) -> bool {
        self.home_won == 1
    }

    pub fn overround(&self) -> Result<f64> {
        Ok(implied_probability(self.home_ml)? + implied_probability(self.away_ml)? - 1.0)
    }
}

const ODDS_HEADER: [&str; 6] = ["game_id", "home_team", "away_team", "home_ml", "away_ml", "home_won"];

/// Reads `game_id,home_team,away_team,home_ml,away_ml,home_won`.
pub fn parse_odds<R: Read>(source: R) -> Result<Vec<OddsRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::insufficient("odds file is empty"));
    }
    if header.iter().map(str::trim).ne(ODDS_HEADER) {
        return Err(Error::Schema(format!(
            "odds header must be `{}`, found `{}`",
            ODDS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<OddsRow>().enumerate() {
        let row = rec.map_err(|e| Error::Schema(format!("odds row {}: {e}", i + 1)))?;
        if row.home_won > 1 {
            return Err(Error::Schema(format!("odds row {}: home_won must be 0 or 1", i + 1)));
        }
        implied_probability(row.home_ml).and(implied_probability(row.away_ml))
            .map_err(|e| Error::Schema(format!("odds row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::insufficient("odds file has no games"));
    }
    Ok(rows)
}

/// Reads `game_id,model_home_prob`.
pub fn parse_predictions<R: Read>(source: R) -> Result<HashMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        game_id: String,
        model_home_prob: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
    let mut out = HashMap::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let r = rec.map_err(|e| Error::Schema(format!("predictions row {}: {e}", i + 1)))?;
        if !(0.0..=1.0).contains(&r.model_home_prob) {
            return Err(Error::Schema(format!("predictions row {}: probability outside [0, 1]", i + 1)));
        }
        if out.insert(r.game_id.clone(), r.model_home_prob).is_some() {
            return Err(Error::Schema(format!("duplicate prediction for game {}", r.game_id)));
        }
    }
    Ok(out)
}

/// Model probabilities aligned with `odds`.
pub fn align_predictions(odds: &[OddsRow], predictions: &HashMap<String, f64>) -> Result<Vec<f64>> {
    odds.iter()
        .map(|o| {
            predictions
                .get(&o.game_id)
                .copied()
                .ok_or_else(|| Error::MissingInput(format!("no prediction for game {}", o.game_id)))
        })
        .collect()
}

/// One game of the bet ledger at a fixed cushion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub game_id: String,
    pub model_home_prob: f64,
    pub home_ml: i32,
    pub away_ml: i32,
    pub implied_home: f64,
    pub implied_away: f64,
    pub overround: f64,
    pub cushion: f64,
    pub bet: Option<BetSide>,
    pub stake: f64,
    pub payout: f64,
    pub won: Option<bool>,
}

pub fn bet_ledger(odds: &[OddsRow], probs: &[f64], stake: f64, cushion: f64) -> Result<Vec<LedgerRow>> {
    if odds.len() != probs.len() {
        return Err(Error::param("odds and probabilities differ in length"));
    }
    odds.iter()
        .zip(probs)
        .map(|(o, &p)| {
            let bet = betting_decision(p, o.home_ml, o.away_ml, cushion)?;
            let (stake_used, payout, won) = match bet {
                None => (0.0, 0.0, None),
                Some(side) => {
                    let won = (side == BetSide::Home) == o.home_won();
                    let line = if side == BetSide::Home { o.home_ml } else { o.away_ml };
                    (stake, settle(line, stake, won)?, Some(won))
                }
            };
            Ok(LedgerRow {
                game_id: o.game_id.clone(),
                model_home_prob: p,
                home_ml: o.home_ml,
                away_ml: o.away_ml,
                implied_home: implied_probability(o.home_ml)?,
                implied_away: implied_probability(o.away_ml)?,
                overround: o.overround()?,
                cushion,
                bet,
                stake: stake_used,
                payout,
                won,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiRow {
    pub cushion: f64,
    pub bets_placed: usize,
    pub total_staked: f64,
    pub net_profit: f64,
    /// `None` when nothing was staked.
    pub roi: Option<f64>,
}

/// Settles every cushion's bets at the quoted lines.
pub fn roi_report(odds: &[OddsRow], probs: &[f64], stake: f64, cushions: &[f64]) -> Result<Vec<RoiRow>> {
    if !(stake > 0.0) {
        return Err(Error::param(format!("stake must be > 0, got {stake}")));
    }
    cushions
        .iter()
        .map(|&c| {
            let ledger = bet_ledger(odds, probs, stake, c)?;
            let placed = ledger.iter().filter(|r| r.bet.is_some()).count();
            let staked: f64 = ledger.iter().map(|r| r.stake).sum();
            let profit: f64 = ledger.iter().map(|r| r.payout).sum();
            Ok(RoiRow {
                cushion: c,
                bets_placed: placed,
                total_staked: staked,
                net_profit: profit,
                roi: (staked > 0.0).then(|| profit / staked),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiInterval {
    pub cushion: f64,
    pub lower: f64,
    pub upper: f64,
    /// ROI expected if the model's probabilities are right.
    pub expected: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 90% interval (5th to 95th percentile) of ROI when every game's result
/// is redrawn from the model's probabilities and the same bets are settled.
pub fn roi_confidence(
    odds: &[OddsRow],
    probs: &[f64],
    cushions: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<RoiInterval>> {
    if mc_samples < 1000 {
        return Err(Error::param(format!("mc_samples must be >= 1000, got {mc_samples}")));
    }
    cushions
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let ledger = bet_ledger(odds, probs, 1.0, c)?;
            // (probability the bet wins, profit if won)
            let bets: Vec<(f64, f64)> = ledger
                .iter()
                .filter_map(|r| {
                    r.bet.map(|side| {
                        let (p, line) = match side {
                            BetSide::Home => (r.model_home_prob, r.home_ml),
                            BetSide::Away => (1.0 - r.model_home_prob, r.away_ml),
                        };
                        (p, win_multiple(line).expect("validated line"))
                    })
                })
                .collect();
            if bets.is_empty() {
                return Ok(RoiInterval {
                    cushion: c,
                    lower: 0.0,
                    upper: 0.0,
                    expected: 0.0,
                });
            }
            let n = bets.len() as f64;
            let expected = bets.iter().map(|&(p, k)| p * k - (1.0 - p)).sum::<f64>() / n;
            let mut rng = substream(seed, &[ci as u64]);
            let mut rois: Vec<f64> = (0..mc_samples)
                .map(|_| {
                    bets.iter()
                        .map(|&(p, k)| if rng.random::<f64>() < p { k } else { -1.0 })
                        .sum::<f64>()
                        / n
                })
                .collect();
            rois.sort_by(f64::total_cmp);
            Ok(RoiInterval {
                cushion: c,
                lower: quantile(&rois, 0.05),
                upper: quantile(&rois, 0.95),
                expected,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

/// Writes `cushion,bets_placed,total_staked,roi_lower,roi_upper,actual_roi`.
pub fn write_roi_csv<W: Write>(sink: W, rows: &[RoiRow], intervals: &[RoiInterval]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["cushion", "bets_placed", "total_staked", "roi_lower", "roi_upper", "actual_roi"])?;
    for (r, i) in rows.iter().zip(intervals) {
        w.write_record([
            r.cushion.to_string(),
            r.bets_placed.to_string(),
            r.total_staked.to_string(),
            i.lower.to_string(),
            i.upper.to_string(),
            opt(r.roi),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<roi table>", e))?;
    Ok(())
}

/// Writes `game_id,model_home_prob,implied_home,implied_away,bet_side,result`.
pub fn write_lines_csv<W: Write>(sink: W, ledger: &[LedgerRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["game_id", "model_home_prob", "implied_home", "implied_away", "bet_side", "result"])?;
    for r in ledger {
        w.write_record([
            r.game_id.clone(),
            r.model_home_prob.to_string(),
            r.implied_home.to_string(),
            r.implied_away.to_string(),
            r.bet.map(|b| b.name()).unwrap_or("none").to_string(),
            match r.won {
                Some(true) => "win",
                Some(false) => "loss",
                None => "none",
            }
            .to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<lines plot>", e))?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::OddsRow;

    /// Four games: a home favorite that wins, an away underdog that wins,
    /// a pick'em the home side loses, a heavy favorite that loses.
    pub fn odds_fixture() -> Vec<OddsRow> {
        let row = |id: &str, h: i32, a: i32, won: u8| OddsRow {
            game_id: id.into(),
            home_team: format!("H{id}"),
            away_team: format!("A{id}"),
            home_ml: h,
            away_ml: a,
            home_won: won,
        };
        vec![
            row("g1", -150, 130, 1),
            row("g2", -120, 100, 0),
            row("g3", -110, -110, 0),
            row("g4", -200, 170, 0),
        ]
    }

    pub const FIXTURE_PROBS: [f64; 4] = [0.65, 0.45, 0.56, 0.60];
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        let one_hot: Vec<[f64; 9]> = (0..9).map(|i| std::array::from_fn(|j| (i == j) as u8 as f64)).collect();
        let s = log_loss_and_gmp(&one_hot, &(0..9).collect::<Vec<_>>()).unwrap();
        assert_eq!((s.log_loss, s.gmp), (0.0, 1.0));
        let uni = vec![[1.0 / 9.0; 9]; 5];
        let s = log_loss_and_gmp(&uni, &[0, 3, 8, 2, 2]).unwrap();
        assert!((s.log_loss - 9f64.ln()).abs() < 1e-12);
        assert!((s.gmp - 1.0 / 9.0).abs() < 1e-12);
        // exp(-1.788) evaluated independently; the reference value is 16.73%.
        assert!((gmp(1.788) - 0.167_294_424_149_439).abs() < 1e-15);
        assert_eq!((gmp(1.788) * 1e4).round() / 100.0, 16.73);
        let z = log_loss_and_gmp(&[[0.0, 1.0]], &[0]).unwrap();
        assert!(z.infinite && z.gmp == 0.0);
    }

    #[test]
    fn cross_model_two_pa_hand_value() {
        let p = [[0.5, 0.25, 0.25], [0.2, 0.8, 0.0]];
        let q = [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0]];
        // PA 1: -ln 0.5. PA 2: -(0.5 ln 0.2 + 0.5 ln 0.8).
        let loss = (0.5f64.ln().abs() + 0.5 * 0.2f64.ln().abs() + 0.5 * 0.8f64.ln().abs()) / 2.0;
        let s = cross_model_gmp(&p, &q).unwrap();
        assert!((s.log_loss - loss).abs() < 1e-15);
        assert!((s.gmp - (-loss).exp()).abs() < 1e-15);
        let uni = [[1.0 / 9.0; 9]];
        assert!((cross_model_gmp(&uni, &uni).unwrap().gmp - 1.0 / 9.0).abs() < 1e-12);
        assert!(cross_model_gmp(&[[0.0, 1.0]], &[[0.5, 0.5]]).unwrap().infinite);
    }

    #[test]
    fn win_rate_examples() {
        let b = win_rate_posterior(0, 0).unwrap();
        assert_eq!((b.alpha, b.beta), (1.0, 1.0));
        let b = win_rate_posterior(800, 1600).unwrap();
        assert_eq!((b.alpha, b.beta), (801.0, 801.0));
        assert_eq!(b.mean(), 0.5);
        assert!((win_rate_posterior(840, 1600).unwrap().mean() - 841.0 / 1602.0).abs() < 1e-15);
        assert!(win_rate_posterior(3, 2).is_err());
    }

    #[test]
    fn added_wins_examples() {
        let w = |wins, games| WinCount { wins, games };
        let one = added_wins_posterior(&[(w(800, 1600), w(840, 1600))], 20_000, 1).unwrap();
        let exact = (841.0 / 1602.0 - 0.5) * 162.0;
        assert!((one.per_game[0].mean - exact).abs() < 1e-12);
        assert!((one.per_game[0].mean - 4.05).abs() < 0.01);
        assert!((one.pooled_mean - exact).abs() < 4.0 * one.mc_se);

        let null = added_wins_posterior(&[(w(700, 1600), w(700, 1600)); 3], 20_000, 2).unwrap();
        assert!(null.pooled_mean.abs() < 3.0 * null.mc_se);
        assert!(null.per_game.iter().all(|g| g.mean == 0.0));

        let two = added_wins_posterior(&[(w(800, 1600), w(832, 1600)), (w(800, 1600), w(768, 1600))], 40_000, 3)
            .unwrap();
        assert!(two.pooled_mean.abs() < 4.0 * two.mc_se);
        assert!(two.per_game.iter().all(|g| two.pooled_sd > g.sd));
    }

    #[test]
    fn moneyline_examples() {
        assert!((implied_probability(-150).unwrap() - 0.6).abs() < 1e-15);
        assert!((implied_probability(120).unwrap() - 100.0 / 220.0).abs() < 1e-15);
        assert_eq!(implied_probability(-100).unwrap(), 0.5);
        assert_eq!(implied_probability(100).unwrap(), 0.5);
        assert!(implied_probability(-99).is_err());
        assert!(implied_probability(50).is_err());
    }

    /// Lines whose implied probabilities are both 0.52.
    const ML52: i32 = -108;

    #[test]
    fn betting_decision_examples() {
        let ih = implied_probability(ML52).unwrap();
        assert!((ih - 0.52).abs() < 1e-3);
        // 0.5 is inside the margin on both sides.
        assert_eq!(betting_decision(0.5, ML52, ML52, 0.0).unwrap(), None);
        assert_eq!(betting_decision(0.6, ML52, ML52, 0.03).unwrap(), Some(BetSide::Home));
        assert_eq!(betting_decision(0.4, ML52, ML52, 0.03).unwrap(), Some(BetSide::Away));
        assert_eq!(betting_decision(0.54, ML52, ML52, 0.03).unwrap(), None);
        // A book with negative overround lets both sides qualify.
        assert!(betting_decision(0.5, 110, 110, 0.0).is_err());
    }

    #[test]
    fn single_bet_at_minus_150() {
        let profit = settle(-150, 1000.0, true).unwrap();
        assert!((profit - 666.666_666_666_666_6).abs() < 1e-9);
        let odds = vec![OddsRow {
            game_id: "g".into(),
            home_team: "H".into(),
            away_team: "A".into(),
            home_ml: -150,
            away_ml: 130,
            home_won: 1,
        }];
        let r = roi_report(&odds, &[0.7], 1000.0, &[0.0]).unwrap();
        assert_eq!(r[0].bets_placed, 1);
        assert!((r[0].roi.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(settle(-150, 1000.0, false).unwrap(), -1000.0);
        assert_eq!(settle(125, 1000.0, true).unwrap(), 1250.0);
    }

    #[test]
    fn fixture_matches_hand_ledger() {
        let odds = odds_fixture();
        let rows = roi_report(&odds, &FIXTURE_PROBS, 1000.0, &[0.0, 0.015, 0.03]).unwrap();
        // Implied (home, away): g1 (0.6, 0.4348), g2 (0.5455, 0.5),
        // g3 (0.5238, 0.5238), g4 (0.6667, 0.3704).
        // Edges: g1 home +0.05; g2 away +0.05; g3 home +0.0362; g4 away +0.0296.
        // Cushion 0: all four. g1 wins 1000*100/150, g2 wins 1000 at +100,
        // g3 loses, g4 wins 1000*170/100.
        let p0 = 1000.0 * 100.0 / 150.0 + 1000.0 - 1000.0 + 1700.0;
        assert_eq!(rows[0].bets_placed, 4);
        assert!((rows[0].net_profit - p0).abs() < 1e-9);
        assert!((rows[0].roi.unwrap() - p0 / 4000.0).abs() < 1e-12);
        // Cushion 0.015: same four bets.
        assert_eq!(rows[1].bets_placed, 4);
        // Cushion 0.03: g4's edge of 0.0296 drops out.
        let p3 = 1000.0 * 100.0 / 150.0 + 1000.0 - 1000.0;
        assert_eq!(rows[2].bets_placed, 3);
        assert!((rows[2].net_profit - p3).abs() < 1e-9);
        assert!((rows[2].roi.unwrap() - p3 / 3000.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cushion_is_not_applicable() {
        let odds = odds_fixture();
        let r = roi_report(&odds, &FIXTURE_PROBS, 1000.0, &[0.5]).unwrap();
        assert_eq!(r[0].bets_placed, 0);
        assert_eq!(r[0].total_staked, 0.0);
        assert_eq!(r[0].roi, None);
        let ci = roi_confidence(&odds, &FIXTURE_PROBS, &[0.5], 1000, 0).unwrap();
        assert_eq!((ci[0].lower, ci[0].upper), (0.0, 0.0));
    }

    #[test]
    fn certain_bet_collapses_interval() {
        let odds = vec![OddsRow {
            game_id: "g".into(),
            home_team: "H".into(),
            away_team: "A".into(),
            home_ml: 150,
            away_ml: -170,
            home_won: 1,
        }];
        let ci = roi_confidence(&odds, &[1.0], &[0.0], 1000, 4).unwrap();
        assert_eq!((ci[0].lower, ci[0].upper), (1.5, 1.5));
    }

    #[test]
    fn interval_brackets_expected_roi() {
        let mut odds = odds_fixture();
        odds.push(OddsRow {
            game_id: "g5".into(),
            home_team: "H".into(),
            away_team: "A".into(),
            home_ml: 140,
            away_ml: -160,
            home_won: 1,
        });
        let mut probs = FIXTURE_PROBS.to_vec();
        probs.push(0.5);
        let ci = roi_confidence(&odds, &probs, &[0.0], 100_000, 9).unwrap();
        // Bets and their (win prob, multiple): g1 home (0.65, 2/3), g2 away
        // (0.55, 1), g3 home (0.56, 100/110), g4 away (0.40, 1.7),
        // g5 home (0.5, 1.4).
        let bets = [(0.65, 2.0 / 3.0), (0.55, 1.0), (0.56, 100.0 / 110.0), (0.40, 1.7), (0.5, 1.4)];
        let expected = bets.iter().map(|&(p, k)| p * k - (1.0 - p)).sum::<f64>() / 5.0;
        assert!((ci[0].expected - expected).abs() < 1e-12);
        assert!(ci[0].lower < expected && expected < ci[0].upper);
        let again = roi_confidence(&odds, &probs, &[0.0], 100_000, 9).unwrap();
        assert_eq!(ci, again);
    }

    #[test]
    fn csv_outputs() {
        let odds = odds_fixture();
        let rows = roi_report(&odds, &FIXTURE_PROBS, 1000.0, &[0.0, 0.5]).unwrap();
        let ci = roi_confidence(&odds, &FIXTURE_PROBS, &[0.0, 0.5], 1000, 0).unwrap();
        let mut out = Vec::new();
        write_roi_csv(&mut out, &rows, &ci).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("cushion,bets_placed,total_staked,roi_lower,roi_upper,actual_roi\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(",NA"));
        let mut out = Vec::new();
        write_lines_csv(&mut out, &bet_ledger(&odds, &FIXTURE_PROBS, 1000.0, 0.0).unwrap()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "game_id,model_home_prob,implied_home,implied_away,bet_side,result");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn odds_parsing() {
        let text = "game_id,home_team,away_team,home_ml,away_ml,home_won\ng1,NYY,LAD,-150,130,1\n";
        let rows = parse_odds(text.as_bytes()).unwrap();
        assert_eq!(rows[0].home_ml, -150);
        assert!(rows[0].home_won());
        let e = parse_odds("game_id,home_team,away_team,home_ml,away_ml,home_won\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::InsufficientData(_)));
        assert!(parse_odds("a,b\n1,2\n".as_bytes()).is_err());
        assert!(parse_odds("game_id,home_team,away_team,home_ml,away_ml,home_won\ng,a,b,-50,100,1\n".as_bytes()).is_err());
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn self_cross_entropy_is_entropy(qs in proptest::collection::vec(simplex(9), 1..20)) {
            let s = cross_model_gmp(&qs, &qs).unwrap();
            let h: f64 = qs.iter().map(|q| q.iter().map(|&x| -x * x.ln()).sum::<f64>()).sum::<f64>() / qs.len() as f64;
            prop_assert!((s.gmp - (-h).exp()).abs() < 1e-12);
            prop_assert!((s.gmp - gmp(s.log_loss)).abs() < 1e-12);
        }

        #[test]
        fn bets_non_increasing_in_cushion(
            probs in proptest::collection::vec(0.05f64..0.95, 1..30),
            lines in proptest::collection::vec((100i32..300, 100i32..300, any::<bool>()), 30),
        ) {
            let odds: Vec<OddsRow> = probs.iter().zip(&lines).enumerate().map(|(i, (_, &(a, b, fav)))| OddsRow {
                game_id: format!("g{i}"),
                home_team: "H".into(),
                away_team: "A".into(),
                // One favorite, one underdog with a vig: always a real book.
                home_ml: if fav { -(a.max(b)) } else { a.min(b) },
                away_ml: if fav { a.min(b) } else { -(a.max(b)) },
                home_won: (i % 2) as u8,
            }).collect();
            let cushions = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2];
            let rows = roi_report(&odds, &probs, 100.0, &cushions).unwrap();
            for w in rows.windows(2) {
                prop_assert!(w[1].bets_placed <= w[0].bets_placed);
            }
            // Cushion 0 bets exactly where some side beats its implied price.
            for (o, &p) in odds.iter().zip(&probs) {
                let edge = p > implied_probability(o.home_ml).unwrap()
                    || 1.0 - p > implied_probability(o.away_ml).unwrap();
                let placed = betting_decision(p, o.home_ml, o.away_ml, 0.0).unwrap().is_some();
                prop_assert_eq!(edge, placed);
            }
        }

        #[test]
        fn settlement_multiples(m in 100i32..1000, neg in any::<bool>()) {
            let line = if neg { -m } else { m };
            let expect = if neg { 100.0 / f64::from(m) } else { f64::from(m) / 100.0 };
            prop_assert_eq!(settle(line, 1.0, true).unwrap(), expect);
            prop_assert_eq!(settle(line, 1.0, false).unwrap(), -1.0);
        }
    }
}
