#ifndef MATCHUP_H
#define MATCHUP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum MatchupStatus {
  MATCHUP_STATUS_OK = 0,
  /**
   * A null pointer, non-UTF-8 string or out-of-range argument.
   */
  MATCHUP_STATUS_INVALID_ARGUMENT = 1,
  MATCHUP_STATUS_PARAM = 2,
  MATCHUP_STATUS_INSUFFICIENT_DATA = 3,
  MATCHUP_STATUS_SCHEMA = 4,
  MATCHUP_STATUS_IO = 5,
  MATCHUP_STATUS_NUMERICAL = 6,
  MATCHUP_STATUS_SAMPLER = 7,
  MATCHUP_STATUS_ILLEGAL_DECISION = 8,
  MATCHUP_STATUS_INNING_CAP = 9,
  MATCHUP_STATUS_ROSTER = 10,
  MATCHUP_STATUS_MISSING_INPUT = 11,
  MATCHUP_STATUS_PANIC = 99,
} MatchupStatus;

/**
 * Rosters, outcome tables and both managers, loaded from a game spec.
 */
typedef struct MatchupGame MatchupGame;

/**
 * A fitted matchup model.
 */
typedef struct MatchupModel MatchupModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *matchup_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *matchup_version(void);

/**
 * Geometric mean probability for a mean log loss.
 */
double matchup_gmp(double log_loss);

/**
 * Probability implied by an American moneyline.
 *
 * # Safety
 * `out` must be valid for one `double` write.
 */
enum MatchupStatus matchup_implied_probability(int32_t moneyline, double *out);

/**
 * Loads a model JSON file into a new handle written to `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for one
 * pointer write.
 */
enum MatchupStatus matchup_model_load(const char *path, struct MatchupModel **out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`matchup_model_load`] and not be used again.
 */
void matchup_model_free(struct MatchupModel *model);

/**
 * Writes the nine outcome probabilities of one plate appearance to
 * `out_probs`, in the order K, BB, HBP, GO, FO, 1B, 2B, 3B, HR. Hands are
 * `'L'` or `'R'`; `slot` is the batting-order position 1..9.
 *
 * # Safety
 * `model` must be a live handle, ids NUL-terminated strings and
 * `out_probs` valid for nine `double` writes.
 */
enum MatchupStatus matchup_model_outcome_probs(const struct MatchupModel *model,
                                               const char *pitcher_id,
                                               char pitcher_hand,
                                               const char *batter_id,
                                               char batter_hand,
                                               uint8_t slot,
                                               double *out_probs);

/**
 * Loads a game spec (rosters, models and policies) into a new handle.
 *
 * # Safety
 * `spec_path` must be a NUL-terminated string; `out` must be valid for one
 * pointer write.
 */
enum MatchupStatus matchup_game_load(const char *spec_path, struct MatchupGame **out);

/**
 * Releases a game handle. Null is ignored.
 *
 * # Safety
 * `game` must come from [`matchup_game_load`] and not be used again.
 */
void matchup_game_free(struct MatchupGame *game);

/**
 * Plays `n` games seeded from `seed` on `workers` threads and writes the
 * home team's wins to `*out_home_wins`. Results do not depend on
 * `workers`.
 *
 * # Safety
 * `game` must be a live handle; `out_home_wins` valid for one write.
 */
enum MatchupStatus matchup_game_simulate(const struct MatchupGame *game,
                                         uint64_t n,
                                         uint64_t seed,
                                         uint32_t workers,
                                         uint64_t *out_home_wins);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATCHUP_H */
