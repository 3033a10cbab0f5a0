//! C ABI over the `matchup` library.
//!
//! Objects cross the boundary as opaque handles created by `*_load` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`MatchupStatus`]; on failure [`matchup_last_error`] describes the most
//! recent error on the calling thread. Panics are caught and reported as
//! [`MatchupStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use matchup::cli::config::Provenance;
use matchup::cli::gamespec::{build_game, read_spec, LoadedGame, ResolvedGame};
use matchup::events::NUM_OUTCOMES;
use matchup::gamesim::simulate_many;
use matchup::{Error, Hand};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchupStatus {
    Ok = 0,
    /// A null pointer, non-UTF-8 string or out-of-range argument.
    InvalidArgument = 1,
    Param = 2,
    InsufficientData = 3,
    Schema = 4,
    Io = 5,
    Numerical = 6,
    Sampler = 7,
    IllegalDecision = 8,
    InningCap = 9,
    Roster = 10,
    MissingInput = 11,
    Panic = 99,
}

/// A fitted matchup model.
pub struct MatchupModel {
    inner: matchup::MatchupModel,
}

/// Rosters, outcome tables and both managers, loaded from a game spec.
pub struct MatchupGame {
    inner: LoadedGame,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> MatchupStatus {
    match e {
        Error::Param(_) => MatchupStatus::Param,
        Error::InsufficientData(_) => MatchupStatus::InsufficientData,
        Error::Schema(_) | Error::Json(_) | Error::Csv(_) => MatchupStatus::Schema,
        Error::Sampler { .. } => MatchupStatus::Sampler,
        Error::Numerical(_) => MatchupStatus::Numerical,
        Error::IllegalDecision(_) => MatchupStatus::IllegalDecision,
        Error::InningCap(_) => MatchupStatus::InningCap,
        Error::Roster(_) => MatchupStatus::Roster,
        Error::MissingInput(_) => MatchupStatus::MissingInput,
        Error::Io { .. } => MatchupStatus::Io,
    }
}

struct Fail(MatchupStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(MatchupStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MatchupStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MatchupStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MatchupStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

fn hand_arg(c: c_char, name: &str) -> Result<Hand, Fail> {
    match c as u8 {
        b'L' | b'l' => Ok(Hand::Left),
        b'R' | b'r' => Ok(Hand::Right),
        _ => Err(invalid(&format!("{name} must be 'L' or 'R'"))),
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn matchup_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn matchup_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Geometric mean probability for a mean log loss.
#[no_mangle]
pub extern "C" fn matchup_gmp(log_loss: f64) -> f64 {
    matchup::evaluation::gmp(log_loss)
}

/// Probability implied by an American moneyline.
///
/// # Safety
/// `out` must be valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn matchup_implied_probability(moneyline: i32, out: *mut f64) -> MatchupStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = matchup::evaluation::implied_probability(moneyline)?;
        Ok(())
    })
}

/// Loads a model JSON file into a new handle written to `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for one
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn matchup_model_load(path: *const c_char, out: *mut *mut MatchupModel) -> MatchupStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = matchup::MatchupModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(MatchupModel { inner }));
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`matchup_model_load`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn matchup_model_free(model: *mut MatchupModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the nine outcome probabilities of one plate appearance to
/// `out_probs`, in the order K, BB, HBP, GO, FO, 1B, 2B, 3B, HR. Hands are
/// `'L'` or `'R'`; `slot` is the batting-order position 1..9.
///
/// # Safety
/// `model` must be a live handle, ids NUL-terminated strings and
/// `out_probs` valid for nine `double` writes.
#[no_mangle]
pub unsafe extern "C" fn matchup_model_outcome_probs(
    model: *const MatchupModel,
    pitcher_id: *const c_char,
    pitcher_hand: c_char,
    batter_id: *const c_char,
    batter_hand: c_char,
    slot: u8,
    out_probs: *mut f64,
) -> MatchupStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        if out_probs.is_null() {
            return Err(invalid("out_probs is null"));
        }
        let pitcher = str_arg(pitcher_id, "pitcher_id")?;
        let batter = str_arg(batter_id, "batter_id")?;
        let d = model.inner.matchup(
            pitcher,
            hand_arg(pitcher_hand, "pitcher_hand")?,
            batter,
            hand_arg(batter_hand, "batter_hand")?,
            slot,
        )?;
        std::slice::from_raw_parts_mut(out_probs, NUM_OUTCOMES).copy_from_slice(&d.probs);
        Ok(())
    })
}

/// Loads a game spec (rosters, models and policies) into a new handle.
///
/// # Safety
/// `spec_path` must be a NUL-terminated string; `out` must be valid for one
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn matchup_game_load(spec_path: *const c_char, out: *mut *mut MatchupGame) -> MatchupStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let path = Path::new(str_arg(spec_path, "spec_path")?);
        let mut prov = Provenance::new("ffi");
        let spec = read_spec(path, &mut prov).map_err(|f| Fail(MatchupStatus::Schema, f.message))?;
        let resolved = ResolvedGame {
            policy: None,
            equilibrium: spec.equilibrium.clone().unwrap_or_default(),
            options: spec.options.clone().unwrap_or_default(),
        };
        let inner = build_game(&spec, path, &mut prov, &resolved).map_err(|f| {
            let status = if f.code == 2 { MatchupStatus::Io } else { MatchupStatus::Param };
            Fail(status, f.message)
        })?;
        *out = Box::into_raw(Box::new(MatchupGame { inner }));
        Ok(())
    })
}

/// Releases a game handle. Null is ignored.
///
/// # Safety
/// `game` must come from [`matchup_game_load`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn matchup_game_free(game: *mut MatchupGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Plays `n` games seeded from `seed` on `workers` threads and writes the
/// home team's wins to `*out_home_wins`. Results do not depend on
/// `workers`.
///
/// # Safety
/// `game` must be a live handle; `out_home_wins` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn matchup_game_simulate(
    game: *const MatchupGame,
    n: u64,
    seed: u64,
    workers: u32,
    out_home_wins: *mut u64,
) -> MatchupStatus {
    guard(|| {
        let game = game.as_ref().ok_or_else(|| invalid("game is null"))?;
        if out_home_wins.is_null() {
            return Err(invalid("out_home_wins is null"));
        }
        if workers == 0 {
            return Err(invalid("workers must be >= 1"));
        }
        let g = &game.inner;
        let r = simulate_many(n, &g.ctx, g.policy_refs(), seed, workers as usize)?;
        *out_home_wins = r.home_wins;
        Ok(())
    })
}
