use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SubRewards;
use crate::error::{Error, Result};

/// Slack allowed on the raw-bounds check, relative to the bound width.
/// Sums of per-tool fractions can overshoot an integer bound by an ulp.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Linearly rescales `raw` from `[raw_min, raw_max]` onto `[lo, hi]`.
///
/// A degenerate source interval (`raw_max == raw_min`) maps to `hi`: the
/// only achievable value is also the best one.
pub fn map_interval(raw: f64, raw_min: f64, raw_max: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Range(format!("target interval [{lo}, {hi}] is empty")));
    }
    if !(raw_min <= raw_max) {
        return Err(Error::Range(format!("source interval [{raw_min}, {raw_max}] is empty")));
    }
    let slack = RANGE_SLACK * (raw_max - raw_min).max(1.0);
    if !(raw >= raw_min - slack && raw <= raw_max + slack) {
        return Err(Error::Range(format!("{raw} outside [{raw_min}, {raw_max}]")));
    }
    if raw_max == raw_min {
        return Ok(hi);
    }
    let frac = ((raw - raw_min) / (raw_max - raw_min)).clamp(0.0, 1.0);
    Ok(lo + (hi - lo) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeId {
    Base,
    Stage1,
    Stage2,
    Stage3,
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeId::Base => "base",
            SchemeId::Stage1 => "stage1",
            SchemeId::Stage2 => "stage2",
            SchemeId::Stage3 => "stage3",
        })
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(SchemeId::Base),
            "stage1" => Ok(SchemeId::Stage1),
            "stage2" => Ok(SchemeId::Stage2),
            "stage3" => Ok(SchemeId::Stage3),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected base, stage1, stage2 or stage3)"
            ))),
        }
    }
}

/// Weights and target intervals used to fold sub-rewards into one scalar.
///
/// ```text
/// total = format_term + M[correctness_map](w_name*r_name + w_key*r_key + w_value*r_value)
/// format_term = format_weight * r_format              (no format_map)
///             = M[format_map](format_weight * r_format) (with format_map)
/// ```
///
/// where `M[lo, hi]` rescales from the sample's analytic raw bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScheme {
    pub scheme_id: SchemeId,
    pub format_weight: f64,
    pub format_map: Option<Interval>,
    /// `(w_name, w_key, w_value)`.
    pub correctness_weights: (f64, f64, f64),
    pub correctness_map: Interval,
}

impl RewardScheme {
    pub const BASE: RewardScheme = RewardScheme {
        scheme_id: SchemeId::Base,
        format_weight: 1.0,
        format_map: None,
        correctness_weights: (1.0, 1.0, 1.0),
        correctness_map: Interval::new(-3.0, 3.0),
    };

    /// Format-heavy: format ×2.5, correctness halved onto `[0, 1.5]`.
    pub const STAGE1: RewardScheme = RewardScheme {
        scheme_id: SchemeId::Stage1,
        format_weight: 2.5,
        format_map: None,
        correctness_weights: (0.5, 0.5, 0.5),
        correctness_map: Interval::new(0.0, 1.5),
    };

    /// Name/key-heavy, with a format penalty.
    pub const STAGE2: RewardScheme = RewardScheme {
        scheme_id: SchemeId::Stage2,
        format_weight: 1.0,
        format_map: Some(Interval::new(-1.0, 0.5)),
        correctness_weights: (1.5, 1.5, 0.5),
        correctness_map: Interval::new(0.0, 3.5),
    };

    /// Value-heavy, with a format penalty.
    pub const STAGE3: RewardScheme = RewardScheme {
        scheme_id: SchemeId::Stage3,
        format_weight: 1.0,
        format_map: Some(Interval::new(-1.0, 0.5)),
        correctness_weights: (0.5, 0.5, 2.5),
        correctness_map: Interval::new(0.0, 3.5),
    };

    pub fn builtin(id: SchemeId) -> RewardScheme {
        match id {
            SchemeId::Base => Self::BASE,
            SchemeId::Stage1 => Self::STAGE1,
            SchemeId::Stage2 => Self::STAGE2,
            SchemeId::Stage3 => Self::STAGE3,
        }
    }

    /// Smallest and largest totals the scheme can produce.
    pub fn total_range(&self) -> (f64, f64) {
        let (flo, fhi) = match self.format_map {
            Some(iv) => (iv.lo, iv.hi),
            None => (0.0, self.format_weight),
        };
        (flo + self.correctness_map.lo, fhi + self.correctness_map.hi)
    }

    /// Relative emphasis on (format, name, key, value), normalized to sum 1.
    ///
    /// The format entry is the width of the format term's range, so a
    /// mapped format term counts by how far it can move the total.
    pub fn focus_weights(&self) -> [f64; 4] {
        let format = match self.format_map {
            Some(iv) => iv.hi - iv.lo,
            None => self.format_weight,
        };
        let (n, k, v) = self.correctness_weights;
        let total = format + n + k + v;
        [format / total, n / total, k / total, v / total]
    }
}

/// Composes the total reward for one rollout under `scheme`.
pub fn compose_reward(s: &SubRewards, scheme: &RewardScheme) -> Result<f64> {
    let fw = scheme.format_weight;
    let format_term = match scheme.format_map {
        Some(iv) => map_interval(fw * s.r_format, 0.0, fw, iv.lo, iv.hi)?,
        None => fw * s.r_format,
    };
    let (wn, wk, wv) = scheme.correctness_weights;
    let b = &s.bounds;
    let raw = wn * s.r_name + wk * s.r_key + wv * s.r_value;
    let raw_max = wn * b.name_max + wk * b.key_max as f64 + wv * b.value_max as f64;
    let m = scheme.correctness_map;
    Ok(format_term + map_interval(raw, b.sum_min, raw_max, m.lo, m.hi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardBounds;

    fn subs(f: f64, n: f64, k: f64, v: f64, key_max: u32, value_max: u32) -> SubRewards {
        SubRewards {
            r_format: f,
            r_name: n,
            r_key: k,
            r_value: v,
            bounds: RewardBounds::new(key_max, value_max),
        }
    }

    #[test]
    fn map_endpoints_and_midpoint() {
        assert_eq!(map_interval(0.0, 0.0, 6.0, -3.0, 3.0).unwrap(), -3.0);
        assert_eq!(map_interval(6.0, 0.0, 6.0, -3.0, 3.0).unwrap(), 3.0);
        assert_eq!(map_interval(3.0, 0.0, 6.0, -3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn map_degenerate_and_errors() {
        assert_eq!(map_interval(0.0, 0.0, 0.0, -1.0, 2.0).unwrap(), 2.0);
        assert!(matches!(map_interval(7.0, 0.0, 6.0, 0.0, 1.0), Err(Error::Range(_))));
        assert!(matches!(map_interval(-0.1, 0.0, 6.0, 0.0, 1.0), Err(Error::Range(_))));
        assert!(matches!(map_interval(f64::NAN, 0.0, 6.0, 0.0, 1.0), Err(Error::Range(_))));
        assert!(matches!(map_interval(1.0, 0.0, 6.0, 1.0, 1.0), Err(Error::Range(_))));
        // An ulp past the bound is tolerated and clamped.
        assert_eq!(map_interval(6.0 + 1e-14, 0.0, 6.0, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn base_perfect_and_zero() {
        let perfect = subs(1.0, 1.0, 2.0, 2.0, 2, 2);
        assert_eq!(compose_reward(&perfect, &RewardScheme::BASE).unwrap(), 4.0);
        let zero = subs(0.0, 0.0, 0.0, 0.0, 2, 2);
        assert_eq!(compose_reward(&zero, &RewardScheme::BASE).unwrap(), -3.0);
    }

    #[test]
    fn stage_formats() {
        let s = subs(1.0, 0.0, 0.0, 0.0, 1, 1);
        assert_eq!(compose_reward(&s, &RewardScheme::STAGE1).unwrap(), 2.5);
        let s = subs(0.0, 0.0, 0.0, 0.0, 1, 1);
        assert_eq!(compose_reward(&s, &RewardScheme::STAGE2).unwrap(), -1.0);
        assert_eq!(compose_reward(&s, &RewardScheme::STAGE3).unwrap(), -1.0);
    }

    #[test]
    fn stage_correctness_terms() {
        // name=1, key=1 of 1, value=0 of 1: STAGE2 raw 3.0 of 3.5 → 3.0
        let s = subs(1.0, 1.0, 1.0, 0.0, 1, 1);
        assert!((compose_reward(&s, &RewardScheme::STAGE2).unwrap() - (0.5 + 3.0)).abs() < 1e-12);
        // STAGE3 raw 1.0 of 3.5 → 1.0
        assert!((compose_reward(&s, &RewardScheme::STAGE3).unwrap() - (0.5 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn every_scheme_gives_four_for_perfect() {
        let perfect = subs(1.0, 1.0, 3.0, 2.0, 3, 2);
        for id in [SchemeId::Base, SchemeId::Stage1, SchemeId::Stage2, SchemeId::Stage3] {
            assert_eq!(compose_reward(&perfect, &RewardScheme::builtin(id)).unwrap(), 4.0, "{id}");
        }
    }

    #[test]
    fn total_ranges() {
        assert_eq!(RewardScheme::BASE.total_range(), (-3.0, 4.0));
        assert_eq!(RewardScheme::STAGE1.total_range(), (0.0, 4.0));
        assert_eq!(RewardScheme::STAGE2.total_range(), (-1.0, 4.0));
        assert_eq!(RewardScheme::STAGE3.total_range(), (-1.0, 4.0));
    }

    #[test]
    fn scheme_ids_parse() {
        assert_eq!("Stage2".parse::<SchemeId>().unwrap(), SchemeId::Stage2);
        assert!("stage4".parse::<SchemeId>().is_err());
    }

    #[test]
    fn focus_weights_sum_to_one() {
        for id in [SchemeId::Base, SchemeId::Stage1, SchemeId::Stage2, SchemeId::Stage3] {
            let w = RewardScheme::builtin(id).focus_weights();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(RewardScheme::BASE.focus_weights(), [0.25; 4]);
        assert_eq!(RewardScheme::STAGE3.focus_weights()[3], 0.5);
    }
}
