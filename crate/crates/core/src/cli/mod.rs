//! The `matchup` command line.
//!
//! Exit codes: 0 on success, 1 when inputs fail a domain or validation
//! check, 2 for usage mistakes and unreadable or malformed files.

pub mod config;
pub mod gamespec;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baserunning::{parse_steal_profiles, StealProfile};
use crate::error::Error;
use crate::evaluation::{
    added_wins_posterior, align_predictions, bet_ledger, evaluate_model, parse_odds, parse_predictions,
    roi_confidence, roi_report, write_lines_csv, write_roi_csv, MetricReport, WinCount,
};
use crate::events::{parse_event_log, write_event_log, ParseOptions, PlateAppearance, RowError};
use crate::gamesim::{simulate_many, write_summary_csv, CapMode, GameOptions, Team};
use crate::inference::{fit_prior_spec, fit_variant, FitConfig, PriorSpec};
use crate::manager::{write_decision_log, EquilibriumConfig, PolicyName};
use crate::model::{MatchupModel, Variant};
use crate::synth::{simulate_season, synth_league, LeagueConfig};

use config::{json_bytes, write_file, CmdResult, ConfigFile, Failure, Provenance};
use gamespec::{build_game, read_spec, ResolvedGame};

#[derive(Debug, Parser)]
#[command(name = "matchup", version, about = "Matchup models, game simulation and model evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a plate-appearance CSV.
    Ingest(IngestArgs),
    /// Fit a matchup model.
    Fit(FitArgs),
    /// Simulate games from a game spec.
    Simulate(SimulateArgs),
    /// Score models on held-out plate appearances.
    Evaluate(EvaluateArgs),
    /// Backtest moneyline bets against model predictions.
    Bet(BetArgs),
    /// Posterior of season wins added by a challenger strategy.
    AddedWins(AddedWinsArgs),
    /// Write a synthetic league: ground-truth model, rosters, events, steals.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Accepted records, re-serialized.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Validation report (JSON); printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Reject non-canonical event codes instead of mapping them.
    #[arg(long)]
    pub strict_codes: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// P, PB, PBR or BR.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub data: PathBuf,
    /// Steal opportunities CSV; required for BR.
    #[arg(long)]
    pub steals: Option<PathBuf>,
    /// Prior spec JSON; fit from the data when omitted.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub min_pa: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Summary CSV, one row per game.
    #[arg(long)]
    pub output: PathBuf,
    /// Directory for per-game decision logs.
    #[arg(long)]
    pub decision_log: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Policy for both managers, overriding the spec.
    #[arg(long)]
    pub policy: Option<PolicyName>,
    #[arg(long)]
    pub rollouts: Option<u32>,
    #[arg(long)]
    pub tie_epsilon: Option<f64>,
    #[arg(long)]
    pub max_pitchers: Option<usize>,
    #[arg(long)]
    pub max_bench: Option<usize>,
    #[arg(long)]
    pub inning_cap: Option<u16>,
    /// strict or tournament.
    #[arg(long)]
    pub cap_mode: Option<String>,
    #[arg(long)]
    pub batters_faced_cap: Option<u16>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Repeat for several models.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BetArgs {
    #[arg(long)]
    pub odds: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Comma-separated cushions, e.g. 0,0.015,0.03.
    #[arg(long, value_delimiter = ',')]
    pub cushions: Option<Vec<f64>>,
    #[arg(long)]
    pub stake: Option<f64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ROI table CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-game lines-vs-predictions CSV.
    #[arg(long)]
    pub lines: Option<PathBuf>,
    /// Cushion used for the lines CSV; defaults to the first cushion.
    #[arg(long)]
    pub lines_cushion: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AddedWinsArgs {
    /// CSV `game_id,challenger_wins,challenger_games,baseline_wins,baseline_games`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Summary JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Pooled draws CSV.
    #[arg(long)]
    pub draws: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub teams: usize,
    #[arg(long, default_value_t = 6)]
    pub pitchers: usize,
    /// Season length in games.
    #[arg(long, default_value_t = 400)]
    pub games: usize,
    /// Keep only the first this many plate appearances.
    #[arg(long)]
    pub max_records: Option<usize>,
    /// Starters leave after facing this many batters.
    #[arg(long, default_value_t = 18)]
    pub batters_faced_cap: u16,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { config::EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

pub fn execute(command: Command) -> CmdResult {
    match command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Bet(a) => cmd_bet(&a),
        Command::AddedWins(a) => cmd_added_wins(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CmdResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Failure::usage("--workers must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn read_events(prov: &mut Provenance, role: &str, path: &Path) -> CmdResult<Vec<PlateAppearance>> {
    let bytes = prov.read(role, path)?;
    let report = parse_event_log(bytes.as_slice(), &ParseOptions::default())?;
    if !report.errors.is_empty() {
        let first = &report.errors[0];
        return Err(Failure::domain(format!(
            "{}: {} rejected row(s), first {first}; run `matchup ingest` for the full report",
            path.display(),
            report.errors.len()
        )));
    }
    Ok(report.records)
}

fn read_model(prov: &mut Provenance, role: &str, path: &Path) -> CmdResult<MatchupModel> {
    let bytes = prov.read(role, path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    MatchupModel::from_json(&text).map_err(|e| Failure::from(Error::Schema(format!("{}: {e}", path.display()))))
}

#[derive(Debug, Serialize)]
struct IngestReport {
    input: String,
    records: usize,
    rejected: usize,
    mapped_codes: usize,
    errors: Vec<RowError>,
}

pub fn cmd_ingest(a: &IngestArgs) -> CmdResult {
    let mut prov = Provenance::new("ingest");
    prov.set_config(&serde_json::json!({ "map_aliases": !a.strict_codes }))?;
    let bytes = prov.read("input", &a.input)?;
    let options = ParseOptions {
        map_aliases: !a.strict_codes,
        ..ParseOptions::default()
    };
    let parsed = parse_event_log(bytes.as_slice(), &options)?;
    let report = IngestReport {
        input: a.input.display().to_string(),
        records: parsed.records.len(),
        rejected: parsed.errors.len(),
        mapped_codes: parsed.mapped,
        errors: parsed.errors,
    };
    if let Some(out) = &a.output {
        let mut buf = prov.csv_header();
        write_event_log(&mut buf, &parsed.records)?;
        write_file(out, &buf)?;
    }
    let doc = serde_json::json!({ "provenance": prov.to_value(), "report": report });
    let bytes = json_bytes(&doc)?;
    match &a.report {
        Some(p) => write_file(p, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::from(Error::io("<stdout>", e)))?,
    }
    if report.rejected > 0 {
        for e in &report.errors {
            eprintln!("{e}");
        }
        return Err(Failure::domain(format!(
            "{} of {} row(s) rejected",
            report.rejected,
            report.rejected + report.records
        )));
    }
    eprintln!("{} records accepted", report.records);
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitSettings {
    variant: Variant,
    seed: u64,
    steps: usize,
    burn_in: usize,
    min_pa: u64,
    chains: usize,
}

const FIT_KEYS: [&str; 6] = ["variant", "seed", "steps", "burn_in", "min_pa", "chains"];

pub fn cmd_fit(a: &FitArgs) -> CmdResult {
    let file = ConfigFile::load(a.config.as_deref(), &FIT_KEYS)?;
    let variant: String = file.require(a.variant.clone(), "variant", "--variant")?;
    let variant: Variant = variant.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    let defaults = FitConfig::new(0);
    let settings = FitSettings {
        variant,
        seed: file.require(a.seed, "seed", "--seed")?,
        steps: file.resolve(a.steps, "steps", defaults.sampler.steps)?,
        burn_in: file.resolve(a.burn_in, "burn_in", defaults.sampler.burn_in)?,
        min_pa: file.resolve(a.min_pa, "min_pa", defaults.min_pa)?,
        chains: file.resolve(a.chains, "chains", defaults.chains)?,
    };
    if variant.uses_steals() && a.steals.is_none() {
        return Err(Failure::usage("the BR variant needs steal-opportunity data: pass --steals <CSV>"));
    }

    let mut prov = Provenance::new("fit");
    prov.set_config(&settings)?;
    let records = read_events(&mut prov, "data", &a.data)?;
    let steals: Option<Vec<StealProfile>> = match &a.steals {
        Some(p) if variant.uses_steals() => Some(parse_steal_profiles(prov.read("steals", p)?.as_slice())?),
        _ => None,
    };
    let priors: PriorSpec = match &a.priors {
        Some(p) => serde_json::from_slice(&prov.read("priors", p)?)
            .map_err(|e| Failure::from(Error::Schema(format!("{}: prior spec: {e}", p.display()))))?,
        None => {
            let league = crate::events::league_rates(&records)?;
            fit_prior_spec(&records, &league, settings.min_pa, variant.learns_batters())?
        }
    };

    let mut config = FitConfig::new(settings.seed);
    config.sampler = config.sampler.with_steps(settings.steps, settings.burn_in);
    config.min_pa = settings.min_pa;
    config.chains = settings.chains;
    config.sampler.validate()?;
    let mut model = with_workers(a.workers, || fit_variant(variant, &records, &priors, steals.as_deref(), &config))??;
    model.provenance = Some(prov.to_value());
    write_file(&a.output, model.to_json()?.as_bytes())?;
    eprintln!(
        "fit {variant} on {} plate appearances: {} pitchers, {} batters",
        records.len(),
        model.pitchers.len(),
        model.batters.len()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateSettings {
    n: u64,
    seed: u64,
    policies: BTreeMap<&'static str, PolicyName>,
    equilibrium: EquilibriumConfig,
    options: GameOptions,
}

const SIMULATE_KEYS: [&str; 11] = [
    "n",
    "seed",
    "workers",
    "policy",
    "rollouts",
    "tie_epsilon",
    "max_pitchers",
    "max_bench",
    "inning_cap",
    "cap_mode",
    "batters_faced_cap",
];

fn parse_cap_mode(s: &str) -> CmdResult<CapMode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "strict" => Ok(CapMode::Strict),
        "tournament" => Ok(CapMode::Tournament),
        other => Err(Failure::usage(format!("unknown cap mode `{other}` (expected strict or tournament)"))),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let file = ConfigFile::load(a.config.as_deref(), &SIMULATE_KEYS)?;
    let n: u64 = file.resolve(a.n, "n", 1)?;
    let seed: u64 = file.require(a.seed, "seed", "--seed")?;
    let workers: Option<usize> = match a.workers {
        Some(w) => Some(w),
        None => file.get("workers")?,
    };
    let policy: Option<PolicyName> = match a.policy {
        Some(p) => Some(p),
        None => file
            .get::<String>("policy")?
            .map(|s| s.parse().map_err(|e: Error| Failure::usage(e.to_string())))
            .transpose()?,
    };
    if n == 0 {
        return Err(Failure::usage("--n must be >= 1"));
    }

    let mut prov = Provenance::new("simulate");
    let spec = read_spec(&a.spec, &mut prov)?;
    let eq0 = spec.equilibrium.clone().unwrap_or_default();
    let equilibrium = EquilibriumConfig {
        rollouts: file.resolve(a.rollouts, "rollouts", eq0.rollouts)?,
        tie_epsilon: file.resolve(a.tie_epsilon, "tie_epsilon", eq0.tie_epsilon)?,
        max_pitchers: file.resolve(a.max_pitchers, "max_pitchers", eq0.max_pitchers)?,
        max_bench: file.resolve(a.max_bench, "max_bench", eq0.max_bench)?,
    };
    let opt0 = spec.options.clone().unwrap_or_default();
    let cap_mode = match a.cap_mode.clone().map(Some).unwrap_or(file.get::<String>("cap_mode")?) {
        Some(s) => parse_cap_mode(&s)?,
        None => opt0.cap_mode,
    };
    let options = GameOptions {
        inning_cap: file.resolve(a.inning_cap, "inning_cap", opt0.inning_cap)?,
        cap_mode,
        batters_faced_cap: match a.batters_faced_cap {
            Some(c) => Some(c),
            None => file.get("batters_faced_cap")?.or(opt0.batters_faced_cap),
        },
    };
    let resolved = ResolvedGame {
        policy,
        equilibrium,
        options,
    };
    let game = build_game(&spec, &a.spec, &mut prov, &resolved)?;
    let settings = SimulateSettings {
        n,
        seed,
        policies: Team::BOTH.iter().map(|t| (t.name(), game.policy_names[t.index()])).collect(),
        equilibrium: resolved.equilibrium.clone(),
        options: resolved.options.clone(),
    };
    prov.set_config(&settings)?;

    let workers = workers.unwrap_or(1);
    if workers == 0 {
        return Err(Failure::usage("--workers must be >= 1"));
    }
    let result = simulate_many(n, &game.ctx, game.policy_refs(), seed, workers)?;

    let mut buf = prov.csv_header();
    write_summary_csv(&mut buf, &result.summaries())?;
    write_file(&a.output, &buf)?;
    if let Some(dir) = &a.decision_log {
        std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::io(dir, e)))?;
        for (i, g) in result.games.iter().enumerate() {
            let mut buf = prov.csv_header();
            write_decision_log(&mut buf, &g.decisions)?;
            write_file(&dir.join(format!("game_{i:06}.csv")), &buf)?;
        }
    }
    let capped = result.games.iter().filter(|g| g.capped).count();
    eprintln!(
        "{n} games: home {} away {} (home rate {:.4}), {capped} capped",
        result.home_wins,
        result.away_wins,
        result.home_win_rate()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelMetrics {
    model: String,
    #[serde(flatten)]
    report: MetricReport,
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CmdResult {
    let mut prov = Provenance::new("evaluate");
    prov.set_config(&serde_json::json!({ "models": a.models.len(), "ground_truth": a.ground_truth.is_some() }))?;
    let records = read_events(&mut prov, "data", &a.data)?;
    let truth = match &a.ground_truth {
        Some(p) => Some(read_model(&mut prov, "ground_truth", p)?),
        None => None,
    };
    let mut reports = Vec::with_capacity(a.models.len());
    for (i, path) in a.models.iter().enumerate() {
        let model = read_model(&mut prov, &format!("model_{i}"), path)?;
        let report = evaluate_model(&model, &records, truth.as_ref())?;
        eprintln!(
            "{}: log loss {:.4}, gmp {:.4}",
            path.display(),
            report.outcome_log_loss,
            report.outcome_gmp
        );
        reports.push(ModelMetrics {
            model: path.display().to_string(),
            report,
        });
    }
    let doc = serde_json::json!({ "provenance": prov.to_value(), "reports": reports });
    write_file(&a.output, &json_bytes(&doc)?)
}

#[derive(Debug, Serialize)]
struct BetSettings {
    cushions: Vec<f64>,
    stake: f64,
    mc_samples: usize,
    seed: u64,
    lines_cushion: f64,
}

const BET_KEYS: [&str; 5] = ["cushions", "stake", "mc_samples", "seed", "lines_cushion"];

pub fn cmd_bet(a: &BetArgs) -> CmdResult {
    let file = ConfigFile::load(a.config.as_deref(), &BET_KEYS)?;
    let cushions: Vec<f64> = file.resolve(a.cushions.clone(), "cushions", vec![0.0, 0.015, 0.03])?;
    if cushions.is_empty() {
        return Err(Failure::usage("--cushions needs at least one value"));
    }
    let settings = BetSettings {
        lines_cushion: file.resolve(a.lines_cushion, "lines_cushion", cushions[0])?,
        stake: file.resolve(a.stake, "stake", 100.0)?,
        mc_samples: file.resolve(a.mc_samples, "mc_samples", 10_000)?,
        seed: file.resolve(a.seed, "seed", 0)?,
        cushions,
    };
    let mut prov = Provenance::new("bet");
    prov.set_config(&settings)?;
    let odds = parse_odds(prov.read("odds", &a.odds)?.as_slice())?;
    let predictions = parse_predictions(prov.read("predictions", &a.predictions)?.as_slice())?;
    let probs = align_predictions(&odds, &predictions)?;

    let rows = roi_report(&odds, &probs, settings.stake, &settings.cushions)?;
    let intervals = roi_confidence(&odds, &probs, &settings.cushions, settings.mc_samples, settings.seed)?;
    let mut buf = prov.csv_header();
    write_roi_csv(&mut buf, &rows, &intervals)?;
    write_file(&a.output, &buf)?;
    if let Some(p) = &a.lines {
        let ledger = bet_ledger(&odds, &probs, settings.stake, settings.lines_cushion)?;
        let mut buf = prov.csv_header();
        write_lines_csv(&mut buf, &ledger)?;
        write_file(p, &buf)?;
    }
    for r in &rows {
        eprintln!(
            "cushion {}: {} bets, staked {}, net {:.2}",
            r.cushion, r.bets_placed, r.total_staked, r.net_profit
        );
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PairedWins {
    game_id: String,
    challenger_wins: u64,
    challenger_games: u64,
    baseline_wins: u64,
    baseline_games: u64,
}

pub fn cmd_added_wins(a: &AddedWinsArgs) -> CmdResult {
    let mut prov = Provenance::new("added-wins");
    prov.set_config(&serde_json::json!({ "samples": a.samples, "seed": a.seed }))?;
    let bytes = prov.read("input", &a.input)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
    let mut ids = Vec::new();
    let mut pairs = Vec::new();
    for (i, row) in rdr.deserialize::<PairedWins>().enumerate() {
        let r = row.map_err(|e| Failure::from(Error::Schema(format!("row {}: {e}", i + 1))))?;
        if r.challenger_wins > r.challenger_games || r.baseline_wins > r.baseline_games {
            return Err(Failure::domain(format!("row {}: wins exceed games", i + 1)));
        }
        ids.push(r.game_id);
        pairs.push((
            WinCount {
                wins: r.baseline_wins,
                games: r.baseline_games,
            },
            WinCount {
                wins: r.challenger_wins,
                games: r.challenger_games,
            },
        ));
    }
    let post = added_wins_posterior(&pairs, a.samples, a.seed)?;
    let per_game: Vec<_> = ids
        .iter()
        .zip(&post.per_game)
        .map(|(id, n)| serde_json::json!({ "game_id": id, "mean": n.mean, "sd": n.sd }))
        .collect();
    let doc = serde_json::json!({
        "provenance": prov.to_value(),
        "pooled_mean": post.pooled_mean,
        "pooled_sd": post.pooled_sd,
        "mc_se": post.mc_se,
        "per_game": per_game,
    });
    write_file(&a.output, &json_bytes(&doc)?)?;
    if let Some(p) = &a.draws {
        let mut buf = prov.csv_header();
        buf.extend_from_slice(b"draw,added_wins\n");
        for (i, x) in post.samples.iter().enumerate() {
            buf.extend_from_slice(format!("{i},{x}\n").as_bytes());
        }
        write_file(p, &buf)?;
    }
    eprintln!(
        "added wins per season: {:.3} (sd {:.3}, mc se {:.4})",
        post.pooled_mean, post.pooled_sd, post.mc_se
    );
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let league = synth_league(&LeagueConfig {
        teams: a.teams,
        pitchers: a.pitchers,
        seed: a.seed,
    })?;
    let mut records = simulate_season(
        &league,
        a.games,
        Some(a.batters_faced_cap),
        crate::rng::derive_seed(a.seed, &[0x5EA5]),
    )?;
    if let Some(m) = a.max_records {
        records.truncate(m);
    }
    let dir = &a.out_dir;
    write_file(&dir.join("truth.json"), league.truth.to_json()?.as_bytes())?;
    for (t, r) in league.rosters.iter().enumerate() {
        write_file(&dir.join(format!("team{t}.json")), &json_bytes(r)?)?;
    }
    let mut buf = Vec::new();
    write_event_log(&mut buf, &records)?;
    write_file(&dir.join("events.csv"), &buf)?;
    let mut buf = b"batter_id,opportunities,steals\n".to_vec();
    for s in &league.steals {
        buf.extend_from_slice(format!("{},{},{}\n", s.batter_id, s.opportunities, s.steals).as_bytes());
    }
    write_file(&dir.join("steals.csv"), &buf)?;
    let spec = |away: &str, home: &str| {
        serde_json::json!({
            "world_model": "truth.json",
            "away": { "roster": away, "policy": "passive" },
            "home": { "roster": home, "policy": "passive" },
        })
    };
    write_file(&dir.join("game.json"), &json_bytes(&spec("team0.json", "team1.json"))?)?;
    write_file(&dir.join("mirror.json"), &json_bytes(&spec("team0.json", "team0.json"))?)?;
    eprintln!(
        "wrote {} teams and {} plate appearances to {}",
        league.rosters.len(),
        records.len(),
        dir.display()
    );
    Ok(())
}
