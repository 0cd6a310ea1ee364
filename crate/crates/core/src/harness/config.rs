//! Scenario files.
//!
//! A scenario is a single TOML table. Unknown keys are rejected. Example:
//!
//! ```toml
//! profile = "gfast212"
//! lines = 4
//! length_range = [50.0, 200.0]
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cancelers::{SchemeKind, SchemeOptions};
use crate::channel::{BinderConfig, ChannelModelParams, Direction, MAX_LINES};
use crate::error::{Error, Result};
use crate::rate::{IllConditionedPolicy, SpectrumPlan};
use crate::rfi::RfiScenario;
use crate::tone_grid::TonePlan;

/// What a scenario computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Per-line rates of one binder for every profile, direction and scheme.
    #[default]
    Rates,
    /// Mean line rate of equal-length binders over a range of lengths.
    LengthSweep,
    /// Downstream rates with and without ingress cancellation over a range of
    /// interferer levels.
    RfiSweep,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Rates => "rates",
            Experiment::LengthSweep => "length_sweep",
            Experiment::RfiSweep => "rfi_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSel {
    #[default]
    Both,
    Downstream,
    Upstream,
}

impl DirectionSel {
    fn directions(self) -> Vec<Direction> {
        match self {
            DirectionSel::Both => vec![Direction::Downstream, Direction::Upstream],
            DirectionSel::Downstream => vec![Direction::Downstream],
            DirectionSel::Upstream => vec![Direction::Upstream],
        }
    }

    fn of(dirs: &[Direction]) -> Self {
        match dirs {
            [Direction::Downstream] => DirectionSel::Downstream,
            [Direction::Upstream] => DirectionSel::Upstream,
            _ => DirectionSel::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LengthSweep {
    fn lengths(&self) -> Result<Vec<f64>> {
        let bad = |msg: &str| Err(Error::config("length_sweep", msg));
        if !(self.start > 0.0) || !self.stop.is_finite() || !(self.step > 0.0) || self.stop < self.start {
            return bad("need 0 < start <= stop and step > 0");
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if n > 10_000 {
            return bad("too many sweep points");
        }
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_sweep: Option<LengthSweep>,
    #[serde(default)]
    pub direction: DirectionSel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub ill_conditioned: IllConditionedPolicy,
    #[serde(default)]
    pub detail: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rfi_sweep_dbm_hz: Option<Vec<f64>>,
    /// Custom tone plans, used instead of named profiles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tone_plans: Option<Vec<TonePlan>>,
    #[serde(default)]
    pub channel: ChannelModelParams,
    #[serde(default)]
    pub spectrum: SpectrumPlan,
    #[serde(default)]
    pub canceler: SchemeOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rfi: Option<RfiScenario>,
}

/// A fully resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub seed: u64,
    pub plans: Vec<TonePlan>,
    pub lines: usize,
    /// Binder line lengths (rates and ingress experiments).
    pub lengths_m: Vec<f64>,
    /// Equal line lengths to sweep (length-sweep experiment).
    pub sweep_lengths_m: Vec<f64>,
    pub directions: Vec<Direction>,
    pub schemes: Vec<SchemeKind>,
    pub ill_conditioned: IllConditionedPolicy,
    pub detail: bool,
    pub output_dir: PathBuf,
    pub channel: ChannelModelParams,
    pub spectrum: SpectrumPlan,
    pub canceler: SchemeOptions,
    pub rfi: Option<RfiScenario>,
    pub rfi_sweep_dbm_hz: Vec<f64>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";

impl Scenario {
    pub fn binder(&self) -> Result<BinderConfig> {
        BinderConfig::new(self.lengths_m.clone(), self.seed)
    }

    /// Schemes of this scenario that apply to `direction`, in ladder order.
    pub fn schemes_for(&self, direction: Direction) -> Vec<SchemeKind> {
        SchemeKind::ladder(direction)
            .into_iter()
            .filter(|k| self.schemes.contains(k))
            .collect()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        if let Some(rfi) = &mut s.rfi {
            rfi.seed = seed;
        }
        s
    }

    /// Config text that reproduces this scenario when loaded.
    pub fn to_config_toml(&self) -> String {
        let builtin: Option<Vec<String>> = self
            .plans
            .iter()
            .map(|p| {
                TonePlan::profile(&p.profile_name)
                    .ok()
                    .filter(|b| b == p)
                    .map(|_| p.profile_name.clone())
            })
            .collect();
        let (profiles, tone_plans) = match builtin {
            Some(names) => (Some(names), None),
            None => (None, Some(self.plans.clone())),
        };
        let raw = RawConfig {
            name: Some(self.name.clone()),
            experiment: self.experiment,
            seed: Some(self.seed),
            profiles,
            tone_plans,
            lines: Some(self.lines),
            lengths: (self.experiment != Experiment::LengthSweep).then(|| self.lengths_m.clone()),
            length_sweep: None,
            direction: DirectionSel::of(&self.directions),
            schemes: Some(self.schemes.iter().map(|s| s.as_str().to_string()).collect()),
            ill_conditioned: self.ill_conditioned,
            detail: self.detail,
            output_dir: None,
            rfi_sweep_dbm_hz: (self.experiment == Experiment::RfiSweep).then(|| self.rfi_sweep_dbm_hz.clone()),
            channel: self.channel.clone(),
            spectrum: self.spectrum.clone(),
            canceler: self.canceler.clone(),
            rfi: self.rfi.clone(),
            ..RawConfig::default()
        };
        let mut text = toml::to_string(&raw).expect("scenario serializes");
        if self.experiment == Experiment::LengthSweep {
            let list: Vec<String> = self.sweep_lengths_m.iter().map(|l| format!("{l:?}")).collect();
            text = format!("sweep_lengths = [{}]\n{text}", list.join(", "));
        }
        text
    }
}

/// Read and resolve a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config { path: field, msg } => Error::Config {
            path: format!("{}: {field}", path.display()),
            msg,
        },
        other => other,
    })
}

/// Resolve scenario text. Config errors name the offending field.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    // A reproduced length sweep lists its points explicitly.
    let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let explicit_sweep = match table.remove("sweep_lengths") {
        Some(v) => Some(
            v.try_into::<Vec<f64>>()
                .map_err(|e| Error::config("sweep_lengths", e.to_string()))?,
        ),
        None => None,
    };
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(field_of(&e), e.message()))?;
    resolve(raw, explicit_sweep)
}

fn field_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    let quoted = msg.split('`').nth(1);
    match quoted {
        Some(key) if msg.starts_with("unknown field") || msg.starts_with("missing field") => key.to_string(),
        _ => "<document>".to_string(),
    }
}

fn resolve(raw: RawConfig, explicit_sweep: Option<Vec<f64>>) -> Result<Scenario> {
    let seed = raw
        .seed
        .ok_or_else(|| Error::config("seed", "required; runs never draw entropy from the clock"))?;
    let experiment = raw.experiment;

    let plans = match (&raw.profile, &raw.profiles, &raw.tone_plans) {
        (Some(p), None, None) => vec![resolve_profile("profile", p)?],
        (None, Some(ps), None) if !ps.is_empty() => ps
            .iter()
            .enumerate()
            .map(|(i, p)| resolve_profile(&format!("profiles[{i}]"), p))
            .collect::<Result<_>>()?,
        (None, None, Some(tp)) if !tp.is_empty() => {
            for (i, p) in tp.iter().enumerate() {
                p.validate()
                    .map_err(|e| Error::config(format!("tone_plans[{i}]"), e.to_string()))?;
            }
            tp.clone()
        }
        (None, None, None) => return Err(Error::config("profile", "required")),
        _ => {
            return Err(Error::config(
                "profile",
                "give exactly one of `profile`, `profiles` or `tone_plans`",
            ))
        }
    };
    if experiment != Experiment::Rates && plans.len() != 1 {
        return Err(Error::config(
            "profiles",
            format!("{} takes a single profile", experiment.as_str()),
        ));
    }

    let lines = raw.lines.ok_or_else(|| Error::config("lines", "required"))?;
    if lines == 0 || lines > MAX_LINES {
        return Err(Error::config("lines", format!("must be between 1 and {MAX_LINES}")));
    }

    let length_keys = [raw.length.is_some(), raw.lengths.is_some(), raw.length_range.is_some()];
    let (lengths_m, sweep_lengths_m) = if experiment == Experiment::LengthSweep {
        if length_keys.iter().any(|&b| b) {
            return Err(Error::config(
                "length",
                "length_sweep takes `length_sweep`, not fixed lengths",
            ));
        }
        let sweep = match (explicit_sweep, raw.length_sweep) {
            (Some(list), None) => list,
            (None, Some(s)) => s.lengths()?,
            (None, None) => return Err(Error::config("length_sweep", "required for a length sweep")),
            (Some(_), Some(_)) => return Err(Error::config("length_sweep", "conflicts with `sweep_lengths`")),
        };
        if sweep.is_empty() || sweep.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::config("length_sweep", "lengths must be positive and finite"));
        }
        (Vec::new(), sweep)
    } else {
        if explicit_sweep.is_some() || raw.length_sweep.is_some() {
            return Err(Error::config(
                "length_sweep",
                "only valid for experiment = \"length_sweep\"",
            ));
        }
        let lengths = match (raw.length, &raw.lengths, raw.length_range) {
            (Some(l), None, None) => vec![l; lines],
            (None, Some(ls), None) => {
                if ls.len() != lines {
                    return Err(Error::config(
                        "lengths",
                        format!("{} lengths for {lines} lines", ls.len()),
                    ));
                }
                ls.clone()
            }
            (None, None, Some([a, b])) => {
                BinderConfig::uniform(lines, a, b, seed)
                    .map_err(|e| Error::config("length_range", e.to_string()))?
                    .lengths_m
            }
            (None, None, None) => {
                return Err(Error::config(
                    "length",
                    "one of `length`, `lengths` or `length_range` is required",
                ))
            }
            _ => {
                return Err(Error::config(
                    "length",
                    "give only one of `length`, `lengths` or `length_range`",
                ))
            }
        };
        BinderConfig::new(lengths.clone(), seed).map_err(|e| Error::config("lengths", e.to_string()))?;
        (lengths, Vec::new())
    };

    let directions = raw.direction.directions();
    let schemes = match &raw.schemes {
        None if experiment == Experiment::RfiSweep => vec![SchemeKind::Zf],
        None => SchemeKind::ALL.to_vec(),
        Some(names) => {
            let mut kinds = Vec::new();
            for (i, n) in names.iter().enumerate() {
                let k: SchemeKind = n
                    .parse()
                    .map_err(|e: Error| Error::config(format!("schemes[{i}]"), e.to_string()))?;
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
            kinds
        }
    };
    if experiment == Experiment::RfiSweep && schemes.len() != 1 {
        return Err(Error::config("schemes", "rfi_sweep takes exactly one scheme"));
    }
    for &d in &directions {
        if !schemes.iter().any(|k| k.valid_for(d)) {
            return Err(Error::config("schemes", format!("no listed scheme applies to {d}")));
        }
    }

    raw.channel.validate().map_err(|e| prefix("channel", e))?;
    raw.spectrum.validate().map_err(|e| prefix("spectrum", e))?;
    if raw.canceler.modulo_size < 2 {
        return Err(Error::config("canceler.modulo_size", "must be at least 2"));
    }
    if !(raw.canceler.cond_limit > 1.0) {
        return Err(Error::config("canceler.cond_limit", "must exceed 1"));
    }

    let mut rfi = raw.rfi.clone();
    if let Some(r) = &mut rfi {
        r.validate().map_err(|e| prefix("rfi", e))?;
        r.seed = seed;
    }
    let rfi_sweep_dbm_hz = match experiment {
        Experiment::RfiSweep => {
            if directions != [Direction::Downstream] {
                return Err(Error::config("direction", "rfi_sweep is downstream only"));
            }
            if rfi.is_none() {
                rfi = Some(RfiScenario {
                    seed,
                    ..RfiScenario::default()
                });
            }
            let levels = raw.rfi_sweep_dbm_hz.clone().unwrap_or_else(default_rfi_sweep);
            if levels.is_empty() || levels.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
                return Err(Error::config("rfi_sweep_dbm_hz", "levels must be finite or -inf"));
            }
            levels
        }
        _ => {
            if raw.rfi_sweep_dbm_hz.is_some() {
                return Err(Error::config(
                    "rfi_sweep_dbm_hz",
                    "only valid for experiment = \"rfi_sweep\"",
                ));
            }
            Vec::new()
        }
    };

    Ok(Scenario {
        name: raw.name.clone().unwrap_or_else(|| experiment.as_str().to_string()),
        experiment,
        seed,
        plans,
        lines,
        lengths_m,
        sweep_lengths_m,
        directions,
        schemes,
        ill_conditioned: raw.ill_conditioned,
        detail: raw.detail,
        output_dir: raw
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        channel: raw.channel,
        spectrum: raw.spectrum,
        canceler: raw.canceler,
        rfi,
        rfi_sweep_dbm_hz,
    })
}

/// No interferer, then -120 to -60 dBm/Hz in 10 dB steps.
pub fn default_rfi_sweep() -> Vec<f64> {
    std::iter::once(f64::NEG_INFINITY)
        .chain((0..7).map(|i| -120.0 + 10.0 * i as f64))
        .collect()
}

fn resolve_profile(field: &str, name: &str) -> Result<TonePlan> {
    TonePlan::profile(name).map_err(|e| Error::config(field, e.to_string()))
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config { path, msg } => {
            let path = if path.starts_with(&format!("{section}.")) {
                path
            } else {
                format!("{section}.{path}")
            };
            Error::Config { path, msg }
        }
        other => Error::config(section, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(e: Error) -> String {
        match e {
            Error::Config { path, .. } => path,
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_scenario("profile = \"gfast212\"\nlines = 1\nlength = 25\nseed = 7\n").unwrap();
        assert_eq!(s.experiment, Experiment::Rates);
        assert_eq!(s.plans[0].profile_name, "gfast212");
        assert_eq!(s.lengths_m, vec![25.0]);
        assert_eq!(s.seed, 7);
        assert_eq!(s.spectrum, SpectrumPlan::default());
        assert_eq!(s.channel, ChannelModelParams::default());
        assert_eq!(s.schemes, SchemeKind::ALL.to_vec());
        assert_eq!(s.directions.len(), 2);
        assert_eq!(s.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_scenario("profile = \"gfast212\"\nlinez = 1\nlength = 25\nseed = 7\n").unwrap_err();
        assert_eq!(field(e), "linez");
        let e = parse_scenario("profile = \"gfast212\"\nlines = 1\nlength = 25\nseed = 7\n[spectrum]\ngap = 3\n")
            .unwrap_err();
        assert!(e.to_string().contains("gap"));
    }

    #[test]
    fn seed_is_mandatory() {
        let e = parse_scenario("profile = \"gfast212\"\nlines = 1\nlength = 25\n").unwrap_err();
        assert_eq!(field(e), "seed");
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let base = "lines = 2\nlength = 25\nseed = 1\n";
        assert_eq!(
            field(parse_scenario(&format!("profile = \"adsl\"\n{base}")).unwrap_err()),
            "profile"
        );
        assert_eq!(
            field(
                parse_scenario(&format!(
                    "profile = \"gfast212\"\n{base}schemes = [\"zf\", \"lattice\"]\n"
                ))
                .unwrap_err()
            ),
            "schemes[1]"
        );
        assert_eq!(
            field(parse_scenario(&format!("profile = \"gfast212\"\n{base}[spectrum]\nbit_cap = 0\n")).unwrap_err()),
            "spectrum.bit_cap"
        );
        assert_eq!(
            field(
                parse_scenario(&format!(
                    "profile = \"gfast212\"\n{base}[channel]\nfext_sigma_db = -1\n"
                ))
                .unwrap_err()
            ),
            "channel.fext_sigma_db"
        );
        assert_eq!(
            field(parse_scenario("profile = \"gfast212\"\nlines = 2\nlengths = [1.0]\nseed = 1\n").unwrap_err()),
            "lengths"
        );
        assert_eq!(
            field(parse_scenario("profile = \"gfast212\"\nlines = 2\nseed = 1\n").unwrap_err()),
            "length"
        );
    }

    #[test]
    fn length_range_is_uniform() {
        let s = parse_scenario("profile = \"gfast106\"\nlines = 8\nlength_range = [25, 200]\nseed = 1\n").unwrap();
        assert_eq!(s.lengths_m, vec![25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0]);
    }

    #[test]
    fn length_sweep_points() {
        let s = parse_scenario(
            "experiment = \"length_sweep\"\nprofile = \"gfast212\"\nlines = 3\nseed = 1\nlength_sweep = { start = 20, stop = 200, step = 20 }\n",
        )
        .unwrap();
        assert_eq!(s.sweep_lengths_m.len(), 10);
        assert_eq!(s.sweep_lengths_m[9], 200.0);
    }

    #[test]
    fn rfi_sweep_defaults() {
        let s = parse_scenario(
            "experiment = \"rfi_sweep\"\nprofile = \"gfast212\"\nlines = 2\nlength = 50\nseed = 4\ndirection = \"downstream\"\n",
        )
        .unwrap();
        assert_eq!(s.schemes, vec![SchemeKind::Zf]);
        assert_eq!(s.rfi_sweep_dbm_hz, default_rfi_sweep());
        assert_eq!(s.rfi.unwrap().seed, 4);
        assert!(parse_scenario(
            "experiment = \"rfi_sweep\"\nprofile = \"gfast212\"\nlines = 2\nlength = 50\nseed = 4\n"
        )
        .is_err());
    }

    #[test]
    fn echo_round_trips() {
        let texts = [
            "profiles = [\"gfast106\", \"mgfast424\"]\nlines = 3\nlength_range = [30, 90]\nseed = 11\ndetail = true\n",
            "experiment = \"length_sweep\"\nprofile = \"gfast212\"\nlines = 2\nseed = 1\nlength_sweep = { start = 20, stop = 100, step = 40 }\n",
            "experiment = \"rfi_sweep\"\nprofile = \"gfast212\"\nlines = 2\nlength = 50\nseed = 4\ndirection = \"downstream\"\n",
        ];
        for t in texts {
            let s = parse_scenario(t).unwrap();
            assert_eq!(
                parse_scenario(&s.to_config_toml()).unwrap(),
                s,
                "{}",
                s.to_config_toml()
            );
        }
        let custom = "tone_plans = [{ profile_name = \"tiny\", spacing_hz = 51750.0, num_tones = 8, start_hz = 51750.0, bandwidth_hz = 414000.0, duplexing = \"tdd\" }]\nlines = 1\nlength = 10\nseed = 2\n";
        let s = parse_scenario(custom).unwrap();
        assert_eq!(parse_scenario(&s.to_config_toml()).unwrap(), s);
    }
}
