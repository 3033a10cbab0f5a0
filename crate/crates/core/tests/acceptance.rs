//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail; the run exits
//! nonzero if any other criterion fails or a known failure starts passing.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use matchup::baserunning::{
    batter_mixture_weights, forced_successor, league_table, steal_rate_posterior, StealProfile, TransitionTable,
};
use matchup::dist::BetaPrior;
use matchup::evaluation::{added_wins_posterior, gmp, parse_odds, roi_report, settle, WinCount};
use matchup::events::{parse_event_log, Handedness, Outcome, ParseOptions, NUM_OUTCOMES};
use matchup::gamesim::{simulate_many, CompiledGame, GameContext, GameOptions, Roster};
use matchup::inference::{fit_prior_spec, fit_variant, FitConfig, PlayerPrior, PriorSpec};
use matchup::manager::{DecisionPolicy, Equilibrium, EquilibriumConfig, Passive};
use matchup::outcome_model::{outcome_distribution, BatterSide, Log5Weights, PlayerParams};
use matchup::rng::{substream, unit, SimRng};
use matchup::synth::{simulate_season, single_pitcher_records, synth_league, LeagueConfig, BASELINE};
use matchup::{BaseOutState, MatchupModel, Variant};

/// The reference GMP for a loss of 1.166 is 31.15%, but exp(-1.166) rounds to 31.16%.
const KNOWN_FAILURES: &[u32] = &[1];

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn gmp_identity() -> Check {
    let table = [(1.788, 16.73), (1.772, 17.00), (1.771, 17.02), (1.166, 31.15)];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (loss, pct) in table {
        let got = (gmp(loss) * 10_000.0).round() / 100.0;
        worst = worst.max((got - pct).abs());
        detail.push(format!("exp(-{loss})={got:.2}% vs {pct:.2}%"));
    }
    ensure(worst <= 0.005 + 1e-9, detail.join(", "))
}

fn symmetry() -> Check {
    let truth = MatchupModel::load(&fixture("truth.json")).map_err(|e| e.to_string())?;
    let team = Roster::load(&fixture("team0.json")).map_err(|e| e.to_string())?;
    let rosters = [team.clone(), team];
    let world = CompiledGame::from_models(&rosters, [&truth, &truth]).map_err(|e| e.to_string())?;
    let ctx = GameContext {
        rosters,
        world,
        options: GameOptions::default(),
    };
    let n = 100_000u64;
    let r = simulate_many(n, &ctx, [&Passive, &Passive], 77, workers()).map_err(|e| e.to_string())?;
    let rate = r.home_wins as f64 / n as f64;
    let z = (rate - 0.5) / (0.25 / n as f64).sqrt();
    ensure(z.abs() < 3.0, format!("home win rate {rate:.4} over {n} games, z = {z:.2}"))
}

fn posterior_recovery() -> Check {
    let truth = [0.28, 0.07, 0.01, 0.19, 0.24, 0.13, 0.04, 0.004, 0.036];
    let prior = PlayerPrior::centered(&BASELINE, 30.0, 50.0).map_err(|e| e.to_string())?;
    let priors = PriorSpec {
        pitcher: prior,
        batter: None,
    };
    let recs = single_pitcher_records(2000, 30, 3, |_| truth).map_err(|e| e.to_string())?;
    let mut cfg = FitConfig::new(3);
    cfg.sampler = cfg.sampler.with_steps(3000, 1000);
    let fit = |cfg: &FitConfig| fit_variant(Variant::P, &recs, &priors, None, cfg).map_err(|e| e.to_string());
    let first = fit(&cfg)?;
    let again = fit(&cfg)?;
    if first != again {
        return Err("refit with the same seed differs".into());
    }
    let est = first.pitchers["p0"].base;
    let worst = (0..NUM_OUTCOMES)
        .filter(|&i| truth[i] >= 0.05)
        .map(|i| (est[i] - truth[i]).abs())
        .fold(0.0, f64::max);
    ensure(worst < 0.02, format!("largest error {worst:.4} over outcomes with p >= 0.05; repeatable"))
}

fn random_simplex(rng: &mut SimRng) -> [f64; NUM_OUTCOMES] {
    let raw: [f64; NUM_OUTCOMES] = std::array::from_fn(|_| 0.01 + unit(rng));
    let s: f64 = raw.iter().sum();
    raw.map(|x| x / s)
}

fn log5_fixed_point() -> Check {
    let mut rng = substream(4, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let league = random_simplex(&mut rng);
        let mut pw = [0.0; NUM_OUTCOMES];
        let mut bw = [0.0; NUM_OUTCOMES];
        for i in 0..NUM_OUTCOMES {
            let p = 0.25 + 1.5 * unit(&mut rng);
            let lo = (1.0 - p).max(0.25);
            let hi = (2.0 - p).min(1.75);
            pw[i] = p;
            bw[i] = lo + (hi - lo) * unit(&mut rng);
        }
        let weights = Log5Weights::new(pw, bw).map_err(|e| e.to_string())?;
        let player = PlayerParams::neutral(league).map_err(|e| e.to_string())?;
        let h = if unit(&mut rng) < 0.5 { Handedness::Same } else { Handedness::Opposite };
        let d = outcome_distribution(&player, BatterSide::Params(&player), &league, &weights, h)
            .map_err(|e| e.to_string())?;
        for i in 0..NUM_OUTCOMES {
            worst = worst.max((d.probs[i] - league[i]).abs());
        }
    }
    ensure(worst <= 1e-12, format!("largest deviation {worst:.2e} over 1000 draws"))
}

/// Posterior mass per interval by midpoint integration of the beta density.
fn grid_weights(alpha: f64, beta: f64, boundaries: &[f64]) -> Vec<f64> {
    let n = 400_000;
    let mut w = vec![0.0; boundaries.len() + 1];
    let mut total = 0.0;
    for k in 0..n {
        let x = (k as f64 + 0.5) / n as f64;
        let d = ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln()).exp();
        let g = boundaries.iter().take_while(|&&b| b <= x).count();
        w[g] += d;
        total += d;
    }
    w.iter().map(|v| v / total).collect()
}

fn steal_exactness() -> Check {
    let mut rng = substream(5, &[]);
    let mut worst_rate: f64 = 0.0;
    for _ in 0..1000 {
        let alpha = 0.5 + 20.0 * unit(&mut rng);
        let beta = 0.5 + 200.0 * unit(&mut rng);
        let n = (unit(&mut rng) * 500.0) as u64;
        let x = (unit(&mut rng) * (n as f64 + 1.0)).min(n as f64) as u64;
        let got = steal_rate_posterior(x, n, alpha, beta).map_err(|e| e.to_string())?;
        let want = (alpha + x as f64) / (alpha + beta + n as f64);
        worst_rate = worst_rate.max(((got - want) / want).abs());
    }
    let boundaries = [0.02, 0.05, 0.09, 0.15];
    let mut worst_weight: f64 = 0.0;
    for (alpha, beta, opp, steals) in [(2.0, 30.0, 120, 9), (1.5, 40.0, 0, 0), (3.0, 25.0, 400, 70), (1.2, 60.0, 50, 1)] {
        let prior = BetaPrior::new(alpha, beta).map_err(|e| e.to_string())?;
        let profile = StealProfile::new("b", opp, steals).map_err(|e| e.to_string())?;
        let w = batter_mixture_weights(&profile, &prior, &boundaries).map_err(|e| e.to_string())?;
        let oracle = grid_weights(alpha + steals as f64, beta + (opp - steals) as f64, &boundaries);
        for (a, b) in w.0.iter().zip(&oracle) {
            worst_weight = worst_weight.max((a - b).abs());
        }
    }
    ensure(
        worst_rate <= 4.0 * f64::EPSILON && worst_weight < 1e-3,
        format!("rate relative error {worst_rate:.1e}; mixture weight error {worst_weight:.1e}"),
    )
}

fn check_table(name: &str, t: &TransitionTable) -> Result<(), String> {
    t.validate().map_err(|e| format!("{name}: {e}"))?;
    for outs in 0..3u8 {
        for bases in 0..8u8 {
            let s = BaseOutState::new(outs, bases).map_err(|e| e.to_string())?;
            for o in Outcome::ALL {
                if let Some((next, runs)) = forced_successor(s, o) {
                    let p = t.prob(s, o, next, runs);
                    if p != 1.0 {
                        return Err(format!("{name}: forced {o:?} from {s:?} has probability {p}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn transition_validity() -> Check {
    let truth = MatchupModel::load(&fixture("truth.json")).map_err(|e| e.to_string())?;
    let events = std::fs::read(fixture("events.csv")).map_err(|e| e.to_string())?;
    let records = parse_event_log(events.as_slice(), &ParseOptions::default()).map_err(|e| e.to_string())?.records;
    let mut tables = vec![
        ("rules".to_string(), TransitionTable::from_rules()),
        ("fixture league".to_string(), league_table(&records)),
        ("model league".to_string(), truth.baserunning.league.clone()),
    ];
    let steal = truth.baserunning.steal.as_ref().ok_or("fixture model has no steal tables")?;
    for (g, t) in steal.groups.tables.iter().enumerate() {
        tables.push((format!("group {g}"), t.clone()));
    }
    for b in steal.batters.keys() {
        tables.push((format!("batter {b}"), truth.batter_table(b).map_err(|e| e.to_string())?.into_owned()));
    }
    for (name, t) in &tables {
        check_table(name, t)?;
    }
    Ok(format!("{} tables x 216 rows valid; forced rows have probability 1", tables.len()))
}

fn information_advantage() -> Check {
    let league = synth_league(&LeagueConfig::new(7)).map_err(|e| e.to_string())?;
    let records = simulate_season(&league, 400, Some(18), 11).map_err(|e| e.to_string())?;
    let rates = matchup::events::league_rates(&records).map_err(|e| e.to_string())?;
    let priors = fit_prior_spec(&records, &rates, 100, false).map_err(|e| e.to_string())?;
    let mut cfg = FitConfig::new(11);
    cfg.sampler = cfg.sampler.with_steps(3000, 1000);
    cfg.min_pa = 100;
    let fitted = fit_variant(Variant::P, &records, &priors, None, &cfg).map_err(|e| e.to_string())?;

    let config = EquilibriumConfig {
        rollouts: 32,
        max_pitchers: 1,
        ..EquilibriumConfig::default()
    };
    let (a, b) = (league.rosters[0].clone(), league.rosters[1].clone());
    let per_side = 10_000u64;
    let mut wins = 0u64;
    for gt_home in [false, true] {
        let rosters = if gt_home { [a.clone(), b.clone()] } else { [b.clone(), a.clone()] };
        let world = CompiledGame::from_models(&rosters, [&league.truth, &league.truth]).map_err(|e| e.to_string())?;
        let belief = CompiledGame::from_models(&rosters, [&fitted, &fitted]).map_err(|e| e.to_string())?;
        let gt = Equilibrium::new(Arc::new(world.clone()), config.clone()).map_err(|e| e.to_string())?;
        let p = Equilibrium::new(Arc::new(belief), config.clone()).map_err(|e| e.to_string())?;
        let ctx = GameContext {
            rosters,
            world,
            options: GameOptions::default(),
        };
        let policies: [&dyn DecisionPolicy; 2] = if gt_home { [&p, &gt] } else { [&gt, &p] };
        let r = simulate_many(per_side, &ctx, policies, 700 + gt_home as u64, workers()).map_err(|e| e.to_string())?;
        wins += if gt_home { r.home_wins } else { r.away_wins };
    }
    let n = (2 * per_side) as f64;
    let rate = wins as f64 / n;
    let z = (rate - 0.5) / (0.25 / n).sqrt();
    ensure(z > 3.0, format!("ground-truth manager won {wins} of {n} ({rate:.4}), z = {z:.2}"))
}

fn added_wins_null() -> Check {
    let mut rng = substream(8, &[]);
    let pairs: Vec<(WinCount, WinCount)> = (0..30)
        .map(|_| {
            let games = 200 + (unit(&mut rng) * 800.0) as u64;
            let wins = ((0.35 + 0.3 * unit(&mut rng)) * games as f64) as u64;
            let c = WinCount { wins, games };
            (c, c)
        })
        .collect();
    let post = added_wins_posterior(&pairs, 20_000, 8).map_err(|e| e.to_string())?;
    ensure(
        post.pooled_mean.abs() < 3.0 * post.mc_se,
        format!("pooled mean {:.4}, mc se {:.4}", post.pooled_mean, post.mc_se),
    )
}

fn betting_arithmetic() -> Check {
    let odds = parse_odds(std::fs::File::open(fixture("odds.csv")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let probs = [0.65, 0.45, 0.56, 0.60];
    let rows = roi_report(&odds, &probs, 100.0, &[0.0, 0.015, 0.03]).map_err(|e| e.to_string())?;
    // Settled by hand at 100 a bet: g1 home at -150 wins 66.67, g2 away at
    // +100 wins 100, g3 home at -110 loses 100, g4 away at +170 wins 170.
    // g4's edge (0.40 against 0.3704) is under the 0.03 cushion.
    let (g1, g2, g3, g4) = (200.0 / 3.0, 100.0, -100.0, 170.0);
    let expected = [(4usize, 400.0, g1 + g2 + g3 + g4), (4, 400.0, g1 + g2 + g3 + g4), (3, 300.0, g1 + g2 + g3)];
    for (r, (bets, staked, net)) in rows.iter().zip(expected) {
        if r.bets_placed != bets || (r.total_staked - staked).abs() > 1e-9 || (r.net_profit - net).abs() > 1e-9 {
            return Err(format!("cushion {}: {:?} vs hand ledger {bets}/{staked}/{net:.2}", r.cushion, r));
        }
    }
    if rows.windows(2).any(|w| w[1].bets_placed > w[0].bets_placed) {
        return Err("bets placed increases with cushion".into());
    }
    let roi = settle(-150, 100.0, true).map_err(|e| e.to_string())? / 100.0;
    ensure(
        (roi * 10_000.0).round() / 100.0 == 66.67,
        format!("bets {:?}; single win at -150 returns {:.2}%", rows.iter().map(|r| r.bets_placed).collect::<Vec<_>>(), roi * 100.0),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_matchup"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let events = fixture("events.csv").to_string_lossy().into_owned();
    let config = fixture("fit.toml").to_string_lossy().into_owned();
    let spec = fixture("game.json").to_string_lossy().into_owned();
    for (name, w) in [("fit_a.json", "1"), ("fit_b.json", "1"), ("fit_c.json", "3")] {
        run_cli(&["fit", "--variant", "P", "--data", &events, "--config", &config, "--workers", w, "--output", &p(name)])?;
    }
    for (name, w) in [("sim_a.csv", "1"), ("sim_b.csv", "1"), ("sim_c.csv", "4")] {
        run_cli(&["simulate", "--spec", &spec, "--n", "300", "--seed", "5", "--workers", w, "--output", &p(name)])?;
    }
    let read = |name: &str| std::fs::read(p(name)).map_err(|e| e.to_string());
    let fits = [read("fit_a.json")?, read("fit_b.json")?, read("fit_c.json")?];
    let sims = [read("sim_a.csv")?, read("sim_b.csv")?, read("sim_c.csv")?];
    ensure(
        fits.iter().all(|f| *f == fits[0]) && sims.iter().all(|s| *s == sims[0]),
        format!("fit ({} bytes) and simulate ({} bytes) identical across runs and workers", fits[0].len(), sims[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Check); 10] = [
        (1, "GMP identity", gmp_identity),
        (2, "symmetry", symmetry),
        (3, "posterior recovery", posterior_recovery),
        (4, "log5 fixed point", log5_fixed_point),
        (5, "steal posterior exactness", steal_exactness),
        (6, "transition validity", transition_validity),
        (7, "information advantage", information_advantage),
        (8, "added-wins null", added_wins_null),
        (9, "betting arithmetic", betting_arithmetic),
        (10, "determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        match &result {
            Ok(d) => println!("criterion {id:>2}: PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) if known => println!("criterion {id:>2}: FAIL  {name}: {d} [{secs:.1}s] (known)"),
            Err(d) => println!("criterion {id:>2}: FAIL  {name}: {d} [{secs:.1}s]"),
        }
        if result.is_ok() == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected results for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
