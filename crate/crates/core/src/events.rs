//! Plate-appearance records, event-log ingestion and empirical rate tables.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of plate-appearance outcomes.
pub const NUM_OUTCOMES: usize = 9;

/// A probability vector over the nine outcomes, indexed by [`Outcome::index`].
pub type Rates = [f64; NUM_OUTCOMES];

/// The nine canonical plate-appearance outcomes.
///
/// The discriminant is the canonical index used by every rate vector and by
/// serialized models: 0 = Strikeout through 8 = HomeRun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Outcome {
    Strikeout = 0,
    Walk = 1,
    HitByPitch = 2,
    GroundOut = 3,
    FlyOut = 4,
    Single = 5,
    Double = 6,
    Triple = 7,
    HomeRun = 8,
}

impl Outcome {
    pub const ALL: [Outcome; NUM_OUTCOMES] = [
        Outcome::Strikeout,
        Outcome::Walk,
        Outcome::HitByPitch,
        Outcome::GroundOut,
        Outcome::FlyOut,
        Outcome::Single,
        Outcome::Double,
        Outcome::Triple,
        Outcome::HomeRun,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Outcome> {
        Outcome::ALL.get(i).copied()
    }

    /// Canonical event-log code.
    pub fn code(self) -> &'static str {
        match self {
            Outcome::Strikeout => "K",
            Outcome::Walk => "BB",
            Outcome::HitByPitch => "HBP",
            Outcome::GroundOut => "GO",
            Outcome::FlyOut => "FO",
            Outcome::Single => "1B",
            Outcome::Double => "2B",
            Outcome::Triple => "3B",
            Outcome::HomeRun => "HR",
        }
    }

    pub fn from_code(code: &str) -> Option<Outcome> {
        Outcome::ALL.iter().copied().find(|o| o.code() == code)
    }

    /// Maps a non-canonical event code onto the closest canonical outcome.
    ///
    /// | code | meaning | mapped to |
    /// |------|---------|-----------|
    /// | `SO` | strikeout (alternate code) | K |
    /// | `IBB` | intentional walk | BB |
    /// | `CI` | catcher's interference | HBP |
    /// | `E` | reached on error | 1B |
    /// | `FC` | fielder's choice | GO |
    /// | `DP`, `GIDP`, `TP` | double/triple play | GO |
    /// | `SH`, `SAC` | sacrifice bunt | GO |
    /// | `SF` | sacrifice fly | FO |
    /// | `LO`, `PO` | line out, pop out | FO |
    pub fn from_alias(code: &str) -> Option<Outcome> {
        Some(match code {
            "SO" => Outcome::Strikeout,
            "IBB" => Outcome::Walk,
            "CI" => Outcome::HitByPitch,
            "E" => Outcome::Single,
            "FC" | "DP" | "GIDP" | "TP" | "SH" | "SAC" => Outcome::GroundOut,
            "SF" | "LO" | "PO" => Outcome::FlyOut,
            _ => return None,
        })
    }

    /// True for outcomes that retire the batter.
    pub fn is_out(self) -> bool {
        matches!(
            self,
            Outcome::Strikeout | Outcome::GroundOut | Outcome::FlyOut
        )
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hand {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Hand {
    pub fn code(self) -> &'static str {
        match self {
            Hand::Left => "L",
            Hand::Right => "R",
        }
    }
}

impl FromStr for Hand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(Hand::Left),
            "R" => Ok(Hand::Right),
            other => Err(Error::param(format!("invalid hand {other:?}"))),
        }
    }
}

/// Matchup handedness flag: same-handed (1) or opposite-handed (0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Handedness {
    Opposite = 0,
    Same = 1,
}

impl Handedness {
    pub const BOTH: [Handedness; 2] = [Handedness::Opposite, Handedness::Same];

    pub fn of(pitcher: Hand, batter: Hand) -> Handedness {
        if pitcher == batter {
            Handedness::Same
        } else {
            Handedness::Opposite
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Outs (0..=2) and base occupancy. Bit 0 is first base, bit 1 second,
/// bit 2 third.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseOutState {
    outs: u8,
    bases: u8,
}

pub const NUM_BASE_OUT_STATES: usize = 24;

impl BaseOutState {
    pub const START: BaseOutState = BaseOutState { outs: 0, bases: 0 };

    pub fn new(outs: u8, bases: u8) -> Result<Self> {
        if outs > 2 {
            return Err(Error::param(format!("outs must be 0..=2, got {outs}")));
        }
        if bases > 7 {
            return Err(Error::param(format!("bases mask must be 0..=7, got {bases}")));
        }
        Ok(BaseOutState { outs, bases })
    }

    #[inline]
    pub fn outs(self) -> u8 {
        self.outs
    }

    #[inline]
    pub fn bases(self) -> u8 {
        self.bases
    }

    #[inline]
    pub fn runners(self) -> u8 {
        self.bases.count_ones() as u8
    }

    #[inline]
    pub fn first_open(self) -> bool {
        self.bases & 1 == 0
    }

    /// Dense index in `0..24`: `outs * 8 + bases`.
    #[inline]
    pub fn index(self) -> usize {
        self.outs as usize * 8 + self.bases as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < NUM_BASE_OUT_STATES).then(|| BaseOutState {
            outs: (i / 8) as u8,
            bases: (i % 8) as u8,
        })
    }

    pub fn all() -> impl Iterator<Item = BaseOutState> {
        (0..NUM_BASE_OUT_STATES).filter_map(BaseOutState::from_index)
    }

    pub(crate) fn bases_code(bases: u8) -> String {
        (0..3)
            .map(|b| if bases >> b & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub(crate) fn parse_bases(s: &str) -> Result<u8> {
        let bytes = s.as_bytes();
        if bytes.len() != 3 {
            return Err(Error::param(format!("bases must be 3 characters, got {s:?}")));
        }
        let mut mask = 0u8;
        for (i, b) in bytes.iter().enumerate() {
            match b {
                b'0' => {}
                b'1' => mask |= 1 << i,
                _ => return Err(Error::param(format!("bases must be over {{0,1}}, got {s:?}"))),
            }
        }
        Ok(mask)
    }
}

impl fmt::Display for BaseOutState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.outs, BaseOutState::bases_code(self.bases))
    }
}

/// State after a plate appearance: another in-play state or the third out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PostState {
    InPlay(BaseOutState),
    Terminal,
}

impl PostState {
    /// Dense code in `0..=24`; 24 is terminal.
    #[inline]
    pub fn code(self) -> u8 {
        match self {
            PostState::InPlay(s) => s.index() as u8,
            PostState::Terminal => NUM_BASE_OUT_STATES as u8,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        if code as usize == NUM_BASE_OUT_STATES {
            Some(PostState::Terminal)
        } else {
            BaseOutState::from_index(code as usize).map(PostState::InPlay)
        }
    }

    pub fn outs(self) -> u8 {
        match self {
            PostState::InPlay(s) => s.outs,
            PostState::Terminal => 3,
        }
    }

    pub fn runners(self) -> u8 {
        match self {
            PostState::InPlay(s) => s.runners(),
            PostState::Terminal => 0,
        }
    }
}

impl fmt::Display for PostState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostState::InPlay(s) => s.fmt(f),
            PostState::Terminal => f.write_str("3:000"),
        }
    }
}

impl FromStr for PostState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (outs, bases) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("bad state {s:?}")))?;
        let outs: u8 = outs
            .parse()
            .map_err(|_| Error::param(format!("bad outs in state {s:?}")))?;
        let bases = BaseOutState::parse_bases(bases)?;
        if outs == 3 {
            if bases != 0 {
                return Err(Error::param(format!("terminal state must have empty bases: {s:?}")));
            }
            return Ok(PostState::Terminal);
        }
        BaseOutState::new(outs, bases).map(PostState::InPlay)
    }
}

/// Checks base-runner accounting for one transition.
///
/// In play: `runners_before + 1 == runners_after + outs_added + runs`.
/// On the third out, runners left on base are not recorded, so the
/// remainder `runners_before + 1 - outs_added - runs` (the stranded count)
/// must lie in `0..=3`.
pub fn conserves_runners(pre: BaseOutState, post: PostState, runs: u8) -> bool {
    if runs > 4 {
        return false;
    }
    let before = pre.runners() as i32 + 1;
    let outs_added = post.outs() as i32 - pre.outs() as i32;
    if outs_added < 0 {
        return false;
    }
    match post {
        PostState::InPlay(s) => before == s.runners() as i32 + outs_added + runs as i32,
        PostState::Terminal => {
            let stranded = before - outs_added - runs as i32;
            (0..=3).contains(&stranded)
        }
    }
}

/// One observed plate appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlateAppearance {
    pub date: NaiveDate,
    pub pitcher_id: String,
    pub batter_id: String,
    pub pitcher_hand: Hand,
    pub batter_hand: Hand,
    /// Batting-order position, 1..=9.
    pub batting_order: u8,
    pub outcome: Outcome,
    pub pre: BaseOutState,
    pub post: PostState,
    pub runs: u8,
}

impl PlateAppearance {
    pub fn handedness(&self) -> Handedness {
        Handedness::of(self.pitcher_hand, self.batter_hand)
    }

    pub fn conserves_runners(&self) -> bool {
        conserves_runners(self.pre, self.post, self.runs)
    }
}

/// Event-log schema versions understood by [`parse_event_log`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaVersion {
    #[default]
    V1,
}

pub const HEADER_V1: [&str; 12] = [
    "date",
    "pitcher_id",
    "batter_id",
    "pitcher_hand",
    "batter_hand",
    "batting_order",
    "outcome",
    "pre_outs",
    "pre_bases",
    "post_outs",
    "post_bases",
    "runs_scored",
];

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub schema: SchemaVersion,
    /// Map non-canonical event codes through [`Outcome::from_alias`];
    /// when false they are rejected.
    pub map_aliases: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            schema: SchemaVersion::V1,
            map_aliases: true,
        }
    }
}

/// A rejected data row. `row` is 1-based and does not count the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub records: Vec<PlateAppearance>,
    pub errors: Vec<RowError>,
    /// Rows accepted only after alias mapping.
    pub mapped: usize,
}

/// Reads a plate-appearance CSV. Malformed rows are collected in the
/// report; a missing or misnamed column aborts with [`Error::Schema`].
pub fn parse_event_log<R: Read>(source: R, options: &ParseOptions) -> Result<ParseReport> {
    let SchemaVersion::V1 = options.schema;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(source);
    let header = reader.headers()?.clone();
    let missing: Vec<&str> = HEADER_V1
        .iter()
        .copied()
        .filter(|col| !header.iter().any(|h| h == *col))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing required column(s): {}",
            missing.join(", ")
        )));
    }
    if header.iter().ne(HEADER_V1.iter().copied()) {
        return Err(Error::Schema(format!(
            "header must be exactly `{}`",
            HEADER_V1.join(",")
        )));
    }

    let mut report = ParseReport::default();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.errors.push(RowError {
                    row: row_no,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        match parse_row(&row, options) {
            Ok((rec, aliased)) => {
                report.mapped += aliased as usize;
                report.records.push(rec);
            }
            Err(reason) => report.errors.push(RowError {
                row: row_no,
                reason,
            }),
        }
    }
    Ok(report)
}

fn parse_row(
    row: &csv::StringRecord,
    options: &ParseOptions,
) -> std::result::Result<(PlateAppearance, bool), String> {
    if row.len() != HEADER_V1.len() {
        return Err(format!(
            "expected {} fields, found {}",
            HEADER_V1.len(),
            row.len()
        ));
    }
    let field = |i: usize| row.get(i).unwrap_or("").trim();

    let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
        .map_err(|_| format!("invalid date {:?}", field(0)))?;
    let pitcher_id = field(1);
    let batter_id = field(2);
    if pitcher_id.is_empty() || batter_id.is_empty() {
        return Err("empty player id".to_string());
    }
    let pitcher_hand: Hand = field(3)
        .parse()
        .map_err(|_| format!("invalid pitcher_hand {:?}", field(3)))?;
    let batter_hand: Hand = field(4)
        .parse()
        .map_err(|_| format!("invalid batter_hand {:?}", field(4)))?;
    let batting_order: u8 = field(5)
        .parse()
        .ok()
        .filter(|m| (1..=9).contains(m))
        .ok_or_else(|| format!("batting_order must be 1..9, got {:?}", field(5)))?;

    let code = field(6);
    let (outcome, aliased) = match Outcome::from_code(code) {
        Some(o) => (o, false),
        None => match Outcome::from_alias(code).filter(|_| options.map_aliases) {
            Some(o) => (o, true),
            None => return Err(format!("non-canonical outcome {code:?}")),
        },
    };

    let pre_outs: u8 = field(7)
        .parse()
        .map_err(|_| format!("invalid pre_state: outs {:?}", field(7)))?;
    let pre_bases =
        BaseOutState::parse_bases(field(8)).map_err(|e| format!("invalid pre_state: {e}"))?;
    let pre = BaseOutState::new(pre_outs, pre_bases)
        .map_err(|_| format!("invalid pre_state: outs={pre_outs}"))?;

    let post_outs: u8 = field(9)
        .parse()
        .map_err(|_| format!("invalid post_state: outs {:?}", field(9)))?;
    let post_bases =
        BaseOutState::parse_bases(field(10)).map_err(|e| format!("invalid post_state: {e}"))?;
    let post = match post_outs {
        3 if post_bases == 0 => PostState::Terminal,
        3 => return Err("invalid post_state: terminal state must have empty bases".into()),
        _ => PostState::InPlay(
            BaseOutState::new(post_outs, post_bases)
                .map_err(|_| format!("invalid post_state: outs={post_outs}"))?,
        ),
    };

    let runs: u8 = field(11)
        .parse()
        .ok()
        .filter(|r| *r <= 4)
        .ok_or_else(|| format!("runs_scored must be 0..4, got {:?}", field(11)))?;

    if !conserves_runners(pre, post, runs) {
        return Err(format!(
            "runs conservation violated: {pre} -> {post} with {runs} run(s)"
        ));
    }

    Ok((
        PlateAppearance {
            date,
            pitcher_id: pitcher_id.to_string(),
            batter_id: batter_id.to_string(),
            pitcher_hand,
            batter_hand,
            batting_order,
            outcome,
            pre,
            post,
            runs,
        },
        aliased,
    ))
}

/// Writes records in canonical v1 form.
pub fn write_event_log<W: Write>(sink: W, records: &[PlateAppearance]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(HEADER_V1)?;
    for r in records {
        let (post_outs, post_bases) = match r.post {
            PostState::InPlay(s) => (s.outs, s.bases),
            PostState::Terminal => (3, 0),
        };
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.pitcher_id.clone(),
            r.batter_id.clone(),
            r.pitcher_hand.code().to_string(),
            r.batter_hand.code().to_string(),
            r.batting_order.to_string(),
            r.outcome.code().to_string(),
            r.pre.outs.to_string(),
            BaseOutState::bases_code(r.pre.bases),
            post_outs.to_string(),
            BaseOutState::bases_code(post_bases),
            r.runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<event log>", e))?;
    Ok(())
}

fn normalize_counts(counts: &[u64; NUM_OUTCOMES]) -> Rates {
    let total: u64 = counts.iter().sum();
    let mut out = [0.0; NUM_OUTCOMES];
    for (o, c) in out.iter_mut().zip(counts) {
        *o = *c as f64 / total as f64;
    }
    out
}

/// League outcome rates split by matchup handedness, `c(h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeagueRates {
    /// Indexed by [`Handedness::index`].
    pub by_hand: [Rates; 2],
}

impl LeagueRates {
    pub fn get(&self, h: Handedness) -> &Rates {
        &self.by_hand[h.index()]
    }
}

pub fn league_rates(records: &[PlateAppearance]) -> Result<LeagueRates> {
    let mut counts = [[0u64; NUM_OUTCOMES]; 2];
    for r in records {
        counts[r.handedness().index()][r.outcome.index()] += 1;
    }
    for h in Handedness::BOTH {
        if counts[h.index()].iter().sum::<u64>() == 0 {
            return Err(Error::insufficient(format!(
                "no plate appearances in the {} stratum (h={})",
                match h {
                    Handedness::Same => "same-handed",
                    Handedness::Opposite => "opposite-handed",
                },
                h.index()
            )));
        }
    }
    Ok(LeagueRates {
        by_hand: [normalize_counts(&counts[0]), normalize_counts(&counts[1])],
    })
}

#[derive(Debug, Clone)]
pub struct OrderRateOptions {
    /// Pseudo-count of league-rate observations added to every stratum.
    pub shrinkage: f64,
    /// Use the league rates for strata with no records instead of failing.
    pub fallback_to_league: bool,
}

impl Default for OrderRateOptions {
    fn default() -> Self {
        OrderRateOptions {
            shrinkage: 100.0,
            fallback_to_league: true,
        }
    }
}

/// Outcome rates by batting-order position and handedness, `b(m, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRates {
    /// `rates[m - 1][h]`.
    pub rates: [[Rates; 2]; 9],
}

impl OrderRates {
    pub fn get(&self, order: u8, h: Handedness) -> &Rates {
        &self.rates[order as usize - 1][h.index()]
    }
}

/// Per-stratum frequencies shrunk toward the league: a stratum with `n`
/// records becomes `(counts + k * c(h)) / (n + k)`.
pub fn batting_order_rates(
    records: &[PlateAppearance],
    league: &LeagueRates,
    options: &OrderRateOptions,
) -> Result<OrderRates> {
    if records.is_empty() {
        return Err(Error::insufficient("no plate appearances"));
    }
    if !(options.shrinkage >= 0.0 && options.shrinkage.is_finite()) {
        return Err(Error::param("shrinkage pseudo-count must be finite and >= 0"));
    }
    let mut counts = [[[0u64; NUM_OUTCOMES]; 2]; 9];
    for r in records {
        counts[r.batting_order as usize - 1][r.handedness().index()][r.outcome.index()] += 1;
    }
    let k = options.shrinkage;
    let mut rates = [[[0.0; NUM_OUTCOMES]; 2]; 9];
    for m in 0..9 {
        for h in Handedness::BOTH {
            let c = league.get(h);
            let cell = &counts[m][h.index()];
            let n = cell.iter().sum::<u64>() as f64;
            let out = &mut rates[m][h.index()];
            if n == 0.0 {
                if !options.fallback_to_league {
                    return Err(Error::insufficient(format!(
                        "no plate appearances for batting order {} with h={}",
                        m + 1,
                        h.index()
                    )));
                }
                *out = *c;
                continue;
            }
            for i in 0..NUM_OUTCOMES {
                out[i] = (cell[i] as f64 + k * c[i]) / (n + k);
            }
        }
    }
    Ok(OrderRates { rates })
}
