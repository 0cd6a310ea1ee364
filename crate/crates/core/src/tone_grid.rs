//! DMT tone plans for the supported technology profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How upstream and downstream share the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duplexing {
    Fdd,
    Tdd,
    FullDuplex,
}

/// A uniform DMT frequency grid.
///
/// Tone `k` sits at `start_hz + k * spacing_hz`. The DC bin is not part of the
/// grid: built-in plans start one spacing above zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TonePlan {
    pub profile_name: String,
    pub spacing_hz: f64,
    pub num_tones: usize,
    pub start_hz: f64,
    #[serde(default)]
    pub overhead_fraction: f64,
    pub bandwidth_hz: f64,
    pub duplexing: Duplexing,
    /// Profile parameters that are projections rather than a published standard.
    #[serde(default)]
    pub anticipated: bool,
}

/// Built-in profile descriptor: (cli name, display name, spacing, tones,
/// nominal bandwidth, duplexing, anticipated).
const PROFILES: &[(&str, &str, f64, usize, f64, Duplexing, bool)] = &[
    ("vdsl17", "VDSL-17", 4312.5, 4096, 17.664e6, Duplexing::Fdd, false),
    ("gfast106", "G.fast-106", 51_750.0, 2048, 106e6, Duplexing::Tdd, false),
    ("gfast212", "G.fast-212", 51_750.0, 4096, 212e6, Duplexing::Tdd, false),
    (
        "mgfast424",
        "G.(mg)fast-424",
        51_750.0,
        8192,
        424e6,
        Duplexing::FullDuplex,
        false,
    ),
    (
        "mgfast848",
        "G.(mg)fast-848",
        103_500.0,
        8192,
        848e6,
        Duplexing::FullDuplex,
        true,
    ),
];

impl TonePlan {
    /// Look up a built-in profile by its short name (`gfast212`) or its
    /// display name (`G.fast-212`).
    pub fn profile(name: &str) -> Result<Self> {
        let key = name.trim();
        PROFILES
            .iter()
            .find(|p| p.0.eq_ignore_ascii_case(key) || p.1.eq_ignore_ascii_case(key))
            .map(|&(short, _, spacing, tones, bw, dup, anticipated)| TonePlan {
                profile_name: short.to_string(),
                spacing_hz: spacing,
                num_tones: tones,
                start_hz: spacing,
                overhead_fraction: 0.0,
                bandwidth_hz: bw,
                duplexing: dup,
                anticipated,
            })
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))
    }

    pub fn builtin() -> Vec<TonePlan> {
        PROFILES
            .iter()
            .map(|p| TonePlan::profile(p.0).expect("built-in profile"))
            .collect()
    }

    pub fn builtin_names() -> Vec<&'static str> {
        PROFILES.iter().map(|p| p.0).collect()
    }

    pub fn display_name(&self) -> &str {
        PROFILES
            .iter()
            .find(|p| p.0 == self.profile_name)
            .map(|p| p.1)
            .unwrap_or(&self.profile_name)
    }

    /// A custom grid; bandwidth is taken as the upper edge of the last tone.
    pub fn custom(name: &str, spacing_hz: f64, num_tones: usize, start_hz: f64) -> Result<Self> {
        let plan = TonePlan {
            profile_name: name.to_string(),
            spacing_hz,
            num_tones,
            start_hz,
            overhead_fraction: 0.0,
            bandwidth_hz: start_hz + num_tones as f64 * spacing_hz,
            duplexing: Duplexing::Tdd,
            anticipated: false,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tones == 0 {
            return Err(Error::InvalidTonePlan("num_tones must be positive".into()));
        }
        if !(self.spacing_hz > 0.0) || !self.spacing_hz.is_finite() {
            return Err(Error::InvalidTonePlan(format!(
                "spacing_hz must be positive, got {}",
                self.spacing_hz
            )));
        }
        if !(self.start_hz > 0.0) || !self.start_hz.is_finite() {
            return Err(Error::InvalidTonePlan(format!(
                "start_hz must be positive, got {}",
                self.start_hz
            )));
        }
        if !(0.0..1.0).contains(&self.overhead_fraction) {
            return Err(Error::InvalidTonePlan(format!(
                "overhead_fraction must lie in [0, 1), got {}",
                self.overhead_fraction
            )));
        }
        Ok(())
    }

    /// DMT symbols per second carried by each tone.
    pub fn symbol_rate_hz(&self) -> f64 {
        self.spacing_hz * (1.0 - self.overhead_fraction)
    }

    pub fn frequency(&self, tone: usize) -> f64 {
        self.start_hz + tone as f64 * self.spacing_hz
    }

    /// Center frequency of every tone, in Hz.
    pub fn tone_frequencies(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok((0..self.num_tones).map(|k| self.frequency(k)).collect())
    }

    pub fn last_frequency(&self) -> f64 {
        self.frequency(self.num_tones - 1)
    }

    /// Half a spacing of slack either side of the outermost tone centers.
    pub fn contains(&self, freq_hz: f64) -> bool {
        let half = 0.5 * self.spacing_hz;
        freq_hz >= self.start_hz - half && freq_hz <= self.last_frequency() + half
    }

    pub fn check_contains(&self, freq_hz: f64) -> Result<()> {
        if self.contains(freq_hz) {
            Ok(())
        } else {
            Err(Error::FrequencyOutOfPlan {
                freq_hz,
                lo_hz: self.start_hz,
                hi_hz: self.last_frequency(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gfast212_first_tone() {
        let plan = TonePlan::profile("gfast212").unwrap();
        let f = plan.tone_frequencies().unwrap();
        assert_eq!(f[0], 51_750.0);
        assert_eq!(f.len(), 4096);
    }

    #[test]
    fn gfast106_has_2048_tones_below_106mhz() {
        let plan = TonePlan::profile("G.fast-106").unwrap();
        let f = plan.tone_frequencies().unwrap();
        assert_eq!(f.len(), 2048);
        assert!(*f.last().unwrap() < 106e6);
    }

    #[test]
    fn mgfast848_doubles_spacing() {
        let plan = TonePlan::profile("mgfast848").unwrap();
        assert_eq!(plan.spacing_hz, 103_500.0);
        assert_eq!(plan.num_tones, 8192);
        assert!(plan.anticipated);
        assert_eq!(TonePlan::profile("mgfast424").unwrap().num_tones, 8192);
    }

    #[test]
    fn builtin_grids_span_their_bandwidth() {
        for plan in TonePlan::builtin() {
            let top = plan.num_tones as f64 * plan.spacing_hz + plan.start_hz;
            assert!(
                (top - plan.bandwidth_hz).abs() <= plan.spacing_hz,
                "{}: grid top {top} vs {}",
                plan.profile_name,
                plan.bandwidth_hz
            );
            assert_eq!(plan.symbol_rate_hz(), plan.spacing_hz);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TonePlan::custom("x", 1000.0, 0, 1000.0).is_err());
        assert!(TonePlan::custom("x", 0.0, 10, 1000.0).is_err());
        assert!(TonePlan::custom("x", -5.0, 10, 1000.0).is_err());
        let mut plan = TonePlan::profile("gfast106").unwrap();
        plan.num_tones = 0;
        assert!(plan.tone_frequencies().is_err());
    }

    #[test]
    fn unknown_profile_is_reported() {
        let err = TonePlan::profile("gfast999").unwrap_err();
        assert!(err.to_string().contains("gfast999"));
    }

    #[test]
    fn overhead_reduces_symbol_rate() {
        let mut plan = TonePlan::profile("gfast212").unwrap();
        plan.overhead_fraction = 0.25;
        assert_eq!(plan.symbol_rate_hz(), 51_750.0 * 0.75);
    }

    #[test]
    fn profiles_round_trip_through_toml() {
        for plan in TonePlan::builtin() {
            let text = toml::to_string(&plan).unwrap();
            let back: TonePlan = toml::from_str(&text).unwrap();
            assert_eq!(back, plan);
        }
    }

    proptest! {
        #[test]
        fn frequencies_strictly_increase(
            spacing in 1.0f64..2e5,
            tones in 1usize..3000,
            start_mult in 1u32..4,
        ) {
            let plan = TonePlan::custom("p", spacing, tones, spacing * start_mult as f64).unwrap();
            let f = plan.tone_frequencies().unwrap();
            prop_assert_eq!(f.len(), tones);
            prop_assert!(f[0] > 0.0);
            prop_assert!(f.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
