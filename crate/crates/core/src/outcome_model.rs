//! Log5 matchup math: handedness adjustment, log-odds combination,
//! logistic squash and categorical normalization.
//!
//! For outcome `i` with pitcher probability `a`, batter-side probability `b`
//! and league probability `c`:
//!
//! ```text
//! S_i = P_i * logit(a) + B_i * logit(b) - (P_i + B_i - 1) * logit(c)
//! x_i = 1 / (1 + exp(-S_i))
//! p_i = x_i / sum_j x_j
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Handedness, Rates, NUM_OUTCOMES};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before any
/// log-odds transform.
pub const PROB_FLOOR: f64 = 1e-9;

pub const WEIGHT_MIN: f64 = 0.25;
pub const WEIGHT_MAX: f64 = 1.75;

#[inline]
pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Logistic function, the inverse of [`logit`].
#[inline]
pub fn squash(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

#[inline]
fn exponent(offset: f64, h: Handedness) -> f64 {
    match h {
        Handedness::Opposite => offset,
        Handedness::Same => 1.0 / offset,
    }
}

/// `base^offset` against opposite-handed batters, `base^(1/offset)` against
/// same-handed ones.
pub fn handedness_adjust(base: f64, offset: f64, h: Handedness) -> Result<f64> {
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::param(format!("base probability must be in (0,1), got {base}")));
    }
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::param(format!("handedness offset must be > 0, got {offset}")));
    }
    Ok(base.powf(exponent(offset, h)))
}

#[inline]
pub(crate) fn adjusted_logit(base: f64, offset: f64, h: Handedness) -> f64 {
    logit(clamp_prob(base.powf(exponent(offset, h))))
}

#[inline]
pub(crate) fn combine_logits(la: f64, lb: f64, lc: f64, p: f64, b: f64) -> f64 {
    p * la + b * lb - (p + b - 1.0) * lc
}

/// Weighted log-odds combination of pitcher, batter and league probabilities.
pub fn log5_combine(a: f64, b: f64, c: f64, p_weight: f64, b_weight: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::param(format!(
                "{name} must be strictly inside (0,1) for a finite logit, got {v}"
            )));
        }
    }
    check_weight_pair(p_weight, b_weight)?;
    Ok(combine_logits(
        logit(clamp_prob(a)),
        logit(clamp_prob(b)),
        logit(clamp_prob(c)),
        p_weight,
        b_weight,
    ))
}

fn check_weight_pair(p: f64, b: f64) -> Result<()> {
    if !weight_pair_valid(p, b) {
        return Err(Error::param(format!(
            "log5 weights must lie in [{WEIGHT_MIN}, {WEIGHT_MAX}] with 1 <= P+B <= 2, got P={p}, B={b}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn weight_pair_valid(p: f64, b: f64) -> bool {
    (WEIGHT_MIN..=WEIGHT_MAX).contains(&p)
        && (WEIGHT_MIN..=WEIGHT_MAX).contains(&b)
        && (1.0..=2.0).contains(&(p + b))
}

/// Base probabilities and handedness offsets for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerParams {
    pub base: Rates,
    pub offsets: Rates,
}

pub type PitcherParams = PlayerParams;
pub type BatterParams = PlayerParams;

impl PlayerParams {
    pub fn new(base: Rates, offsets: Rates) -> Result<Self> {
        let p = PlayerParams { base, offsets };
        p.validate()?;
        Ok(p)
    }

    /// Unit offsets: identical behaviour against either hand.
    pub fn neutral(base: Rates) -> Result<Self> {
        Self::new(base, [1.0; NUM_OUTCOMES])
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..NUM_OUTCOMES {
            let (a, o) = (self.base[i], self.offsets[i]);
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::param(format!(
                    "base probability {i} must be in (0,1), got {a}"
                )));
            }
            if !(o > 0.0 && o.is_finite()) {
                return Err(Error::param(format!("offset {i} must be > 0, got {o}")));
            }
        }
        Ok(())
    }

    /// Log-odds of the handedness-adjusted probability of every outcome.
    pub(crate) fn adjusted_logits(&self, h: Handedness) -> Rates {
        std::array::from_fn(|i| adjusted_logit(self.base[i], self.offsets[i], h))
    }
}

/// League-wide per-outcome log5 weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Log5Weights {
    pub pitcher: Rates,
    pub batter: Rates,
}

impl Log5Weights {
    pub fn new(pitcher: Rates, batter: Rates) -> Result<Self> {
        let w = Log5Weights { pitcher, batter };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(p: f64, b: f64) -> Result<Self> {
        Self::new([p; NUM_OUTCOMES], [b; NUM_OUTCOMES])
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..NUM_OUTCOMES {
            check_weight_pair(self.pitcher[i], self.batter[i])?;
        }
        Ok(())
    }
}

/// The batter half of a matchup: fitted player parameters, or an empirical
/// batting-order rate vector already specific to the handedness stratum.
#[derive(Debug, Clone, Copy)]
pub enum BatterSide<'a> {
    Params(&'a BatterParams),
    Rates(&'a Rates),
}

/// A normalized distribution over the nine outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub probs: Rates,
}

impl OutcomeDistribution {
    /// Normalizes nonnegative weights that are not all zero.
    pub fn from_weights(x: Rates) -> Result<Self> {
        if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("outcome weights must be finite and nonnegative"));
        }
        let total: f64 = x.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("outcome weights sum to zero"));
        }
        Ok(OutcomeDistribution {
            probs: x.map(|v| v / total),
        })
    }

    /// Cumulative probabilities, last entry forced to exactly 1.
    pub fn cumulative(&self) -> Rates {
        let mut acc = 0.0;
        let mut out = self.probs.map(|p| {
            acc += p;
            acc
        });
        out[NUM_OUTCOMES - 1] = 1.0;
        out
    }
}

fn check_rate_vector(name: &str, r: &Rates) -> Result<()> {
    if r.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param(format!("{name} rates must lie in [0,1]")));
    }
    Ok(())
}

/// Full matchup distribution for one plate appearance.
///
/// Empirical rate vectors (`league` and [`BatterSide::Rates`]) may contain
/// exact zeros for unobserved outcomes; they are clamped to
/// [`PROB_FLOOR`] rather than rejected. Player parameters must be strictly
/// inside their domains.
pub fn outcome_distribution(
    pitcher: &PitcherParams,
    batter: BatterSide<'_>,
    league: &Rates,
    weights: &Log5Weights,
    h: Handedness,
) -> Result<OutcomeDistribution> {
    pitcher.validate()?;
    match batter {
        BatterSide::Params(b) => b.validate()?,
        BatterSide::Rates(r) => check_rate_vector("batter-side", r)?,
    }
    check_rate_vector("league", league)?;
    weights.validate()?;
    Ok(distribution_unchecked(pitcher, batter, league, weights, h))
}

/// [`outcome_distribution`] without input validation, for hot loops whose
/// inputs were validated once up front.
pub(crate) fn distribution_unchecked(
    pitcher: &PitcherParams,
    batter: BatterSide<'_>,
    league: &Rates,
    weights: &Log5Weights,
    h: Handedness,
) -> OutcomeDistribution {
    let la = pitcher.adjusted_logits(h);
    let lb: Rates = match batter {
        BatterSide::Params(b) => b.adjusted_logits(h),
        BatterSide::Rates(r) => r.map(|p| logit(clamp_prob(p))),
    };
    let x: Rates = std::array::from_fn(|i| {
        let lc = logit(clamp_prob(league[i]));
        squash(combine_logits(
            la[i],
            lb[i],
            lc,
            weights.pitcher[i],
            weights.batter[i],
        ))
    });
    let total: f64 = x.iter().sum();
    OutcomeDistribution {
        probs: x.map(|v| v / total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn adjust_examples() {
        for h in Handedness::BOTH {
            assert!((handedness_adjust(0.2, 1.0, h).unwrap() - 0.2).abs() < 1e-15);
        }
        assert_eq!(handedness_adjust(0.25, 2.0, Handedness::Opposite).unwrap(), 0.0625);
        assert_eq!(handedness_adjust(0.25, 2.0, Handedness::Same).unwrap(), 0.5);
        assert!(handedness_adjust(0.0, 1.0, Handedness::Same).is_err());
        assert!(handedness_adjust(0.3, 0.0, Handedness::Same).is_err());
    }

    #[test]
    fn combine_fixed_point() {
        let s = log5_combine(0.3, 0.3, 0.3, 0.4, 1.2).unwrap();
        assert!((s - (0.3f64 / 0.7).ln()).abs() < 1e-12);
        assert!((s - -0.8473).abs() < 1e-4);
    }

    #[test]
    fn combine_hand_evaluated() {
        // 0.7*ln(0.25/0.75) + 0.6*ln(0.2/0.8) - 0.3*ln(0.22/0.78), term by term:
        // 0.7 * -1.0986122887 = -0.7690286021
        // 0.6 * -1.3862943611 = -0.8317766167
        // 0.3 * -1.2656663733 = -0.3796999120
        let expected = -0.7690286021 - 0.8317766167 + 0.3796999120;
        let s = log5_combine(0.25, 0.20, 0.22, 0.7, 0.6).unwrap();
        assert!((s - expected).abs() < 1e-9, "{s} vs {expected}");
    }

    #[test]
    fn combine_league_term_vanishes_when_weights_sum_to_one() {
        let a = log5_combine(0.3, 0.1, 0.05, 0.4, 0.6).unwrap();
        let b = log5_combine(0.3, 0.1, 0.6, 0.4, 0.6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn combine_domain_errors() {
        assert!(log5_combine(0.0, 0.2, 0.2, 1.0, 1.0).is_err());
        assert!(log5_combine(0.2, 1.0, 0.2, 1.0, 1.0).is_err());
        assert!(log5_combine(0.2, 0.2, 0.2, 0.2, 1.0).is_err());
        assert!(log5_combine(0.2, 0.2, 0.2, 0.5, 0.4).is_err());
    }

    #[test]
    fn squash_examples() {
        assert_eq!(squash(0.0), 0.5);
        assert!((squash(logit(0.3)) - 0.3).abs() < 1e-15);
        // 1 / (1 + e^0.8473) evaluated independently.
        assert!((squash(-0.8473) - 0.299_999_550_681_5).abs() < 1e-12);
        assert!((squash(-0.8473) - 0.3).abs() < 1e-4);
    }

    #[test]
    fn equal_unnormalized_gives_uniform() {
        let league = [0.4; 9];
        let p = PlayerParams::neutral([0.4; 9]).unwrap();
        let w = Log5Weights::uniform(1.0, 0.5).unwrap();
        let d = outcome_distribution(&p, BatterSide::Rates(&league), &league, &w, Handedness::Same)
            .unwrap();
        for v in d.probs {
            assert!((v - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    fn league() -> Rates {
        [0.22, 0.08, 0.01, 0.2, 0.25, 0.15, 0.05, 0.005, 0.035]
    }

    /// Straight-line scalar evaluation of the four formulas, one outcome at
    /// a time, without going through the module's helpers.
    fn oracle(pb: &Rates, po: &Rates, bb: &Rates, bo: &Rates, c: &Rates, pw: &Rates, bw: &Rates, same: bool) -> Rates {
        let mut x = [0.0; 9];
        for i in 0..9 {
            let (ea, eb) = if same { (1.0 / po[i], 1.0 / bo[i]) } else { (po[i], bo[i]) };
            let a = pb[i].powf(ea);
            let b = bb[i].powf(eb);
            let s = pw[i] * (a / (1.0 - a)).ln() + bw[i] * (b / (1.0 - b)).ln()
                - (pw[i] + bw[i] - 1.0) * (c[i] / (1.0 - c[i])).ln();
            x[i] = 1.0 / (1.0 + (-s).exp());
        }
        let t: f64 = x.iter().sum();
        x.map(|v| v / t)
    }

    #[test]
    fn worked_nine_outcome_case() {
        let pb = [0.25, 0.09, 0.012, 0.18, 0.22, 0.14, 0.045, 0.004, 0.03];
        let po = [1.1, 0.95, 1.0, 1.02, 0.98, 0.97, 1.05, 1.0, 1.08];
        let bb = [0.20, 0.10, 0.01, 0.21, 0.24, 0.15, 0.05, 0.006, 0.04];
        let bo = [0.9, 1.05, 1.0, 1.0, 1.01, 1.03, 0.99, 1.0, 0.93];
        let pw = [0.7, 1.0, 0.9, 1.1, 0.8, 0.75, 1.2, 0.5, 1.3];
        let bw = [0.6, 0.7, 0.3, 0.4, 0.9, 0.5, 0.7, 0.6, 0.6];
        let c = league();
        let pitcher = PlayerParams::new(pb, po).unwrap();
        let batter = PlayerParams::new(bb, bo).unwrap();
        let w = Log5Weights::new(pw, bw).unwrap();
        for (h, same) in [(Handedness::Opposite, false), (Handedness::Same, true)] {
            let got = outcome_distribution(&pitcher, BatterSide::Params(&batter), &c, &w, h).unwrap();
            let want = oracle(&pb, &po, &bb, &bo, &c, &pw, &bw, same);
            for i in 0..9 {
                assert!((got.probs[i] - want[i]).abs() < 1e-13, "outcome {i}");
            }
        }
    }

    fn simplex() -> impl Strategy<Value = Rates> {
        proptest::array::uniform9(0.01f64..1.0).prop_map(|x| {
            let t: f64 = x.iter().sum();
            x.map(|v| v / t)
        })
    }

    fn weights() -> impl Strategy<Value = Log5Weights> {
        proptest::array::uniform9((0.25f64..1.75, 0.0f64..1.0)).prop_map(|pairs| {
            let mut p = [0.0; 9];
            let mut b = [0.0; 9];
            for (i, (pi, u)) in pairs.into_iter().enumerate() {
                // B uniform on the feasible interval given P.
                let lo = (1.0 - pi).max(WEIGHT_MIN);
                let hi = (2.0 - pi).min(WEIGHT_MAX);
                p[i] = pi;
                b[i] = lo + u * (hi - lo);
            }
            Log5Weights::new(p, b).unwrap()
        })
    }

    fn player() -> impl Strategy<Value = PlayerParams> {
        (
            proptest::array::uniform9(0.001f64..0.999),
            proptest::array::uniform9(0.2f64..5.0),
        )
            .prop_map(|(b, o)| PlayerParams::new(b, o).unwrap())
    }

    proptest! {
        #[test]
        fn reciprocity(p in 0.0001f64..0.9999, o in 0.05f64..20.0) {
            let same = handedness_adjust(p, o, Handedness::Same).unwrap();
            let opp = handedness_adjust(p, 1.0 / o, Handedness::Opposite).unwrap();
            prop_assert!((same - opp).abs() <= 1e-14 * same.max(1e-300));
        }

        #[test]
        fn fixed_point(c in simplex(), w in weights(), same in any::<bool>()) {
            let h = if same { Handedness::Same } else { Handedness::Opposite };
            let pitcher = PlayerParams::neutral(c).unwrap();
            let d = outcome_distribution(&pitcher, BatterSide::Params(&pitcher), &c, &w, h).unwrap();
            for i in 0..9 {
                prop_assert!((d.probs[i] - c[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn always_a_simplex(p in player(), b in player(), c in simplex(), w in weights(), same in any::<bool>()) {
            let h = if same { Handedness::Same } else { Handedness::Opposite };
            let d = outcome_distribution(&p, BatterSide::Params(&b), &c, &w, h).unwrap();
            prop_assert!(d.probs.iter().all(|v| *v >= 0.0));
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_pitcher_base(p in player(), c in simplex(), w in weights(), i in 0usize..9, bump in 0.01f64..0.5) {
            let mut hi = p.clone();
            hi.base[i] = p.base[i] + (1.0 - p.base[i]) * bump;
            prop_assume!(hi.base[i] < 0.999 && hi.base[i] > p.base[i] * (1.0 + 1e-6));
            let h = Handedness::Opposite;
            let lo_d = outcome_distribution(&p, BatterSide::Rates(&c), &c, &w, h).unwrap();
            let hi_d = outcome_distribution(&hi, BatterSide::Rates(&c), &c, &w, h).unwrap();
            prop_assert!(hi_d.probs[i] > lo_d.probs[i]);
            for j in (0..9).filter(|&j| j != i) {
                prop_assert!(hi_d.probs[j] < lo_d.probs[j]);
            }
        }
    }
}
