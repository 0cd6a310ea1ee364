//! Radio-frequency ingress: a common-mode reference sensor and a per-tone
//! least-squares canceler trained against it.
//!
//! The interferer `i` reaches the sensor directly and the victim receiver
//! through an unknown coupling `g`. During a quiet training period the
//! canceler observes `s = i + v` at the sensor and `m = g·i + w` at the
//! receiver and estimates `ĝ = Σ m·s* / Σ |s|²`. After cancellation the
//! receiver sees `(g - ĝ)·i - ĝ·v` on top of its own noise.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::band::BandProfile;
use crate::cancelers::Scheme;
use crate::channel::{ChannelTensor, Direction};
use crate::error::{Error, Result};
use crate::rate::{scenario_rates_with, tone_power, RateOptions, RateReport, SpectrumPlan};
use crate::rng::{self, Domain};
use crate::tone_grid::TonePlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfiScenario {
    /// Interferer PSD at the sensor, dBm/Hz. `-inf` means no interferer.
    pub interferer_psd_dbm_hz: f64,
    /// Per-band offset in dB added to `interferer_psd_dbm_hz`.
    pub interferer_shape_db: BandProfile,
    /// Sensor-to-receiver coupling magnitude in dB.
    pub coupling_db: BandProfile,
    pub sensor_noise_psd_dbm_hz: f64,
    pub training_symbols: usize,
    /// A tone whose mean sensor power is within this margin of the sensor
    /// noise floor is treated as interference-free.
    pub detection_margin_db: f64,
    /// A tone is also left uncancelled unless the energy explained by the
    /// fit exceeds the per-symbol fit residual by this margin.
    pub significance_margin_db: f64,
    pub seed: u64,
}

impl Default for RfiScenario {
    fn default() -> Self {
        RfiScenario {
            interferer_psd_dbm_hz: f64::NEG_INFINITY,
            interferer_shape_db: BandProfile::flat(0.0),
            coupling_db: BandProfile::three_band(-40.0, -30.0, -20.0),
            sensor_noise_psd_dbm_hz: -150.0,
            training_symbols: 1000,
            detection_margin_db: 3.0,
            significance_margin_db: 6.0,
            seed: 0,
        }
    }
}

fn level_ok(v: f64) -> bool {
    !v.is_nan() && v != f64::INFINITY
}

impl RfiScenario {
    pub fn validate(&self) -> Result<()> {
        self.coupling_db
            .validate()
            .map_err(|e| Error::config("rfi.coupling_db", e.to_string()))?;
        self.interferer_shape_db
            .validate()
            .map_err(|e| Error::config("rfi.interferer_shape_db", e.to_string()))?;
        if !level_ok(self.interferer_psd_dbm_hz) {
            return Err(Error::config(
                "rfi.interferer_psd_dbm_hz",
                "must be a finite level or -inf",
            ));
        }
        if !level_ok(self.sensor_noise_psd_dbm_hz) {
            return Err(Error::config(
                "rfi.sensor_noise_psd_dbm_hz",
                "must be a finite level or -inf",
            ));
        }
        if self.training_symbols == 0 {
            return Err(Error::config("rfi.training_symbols", "must be at least 1"));
        }
        if !self.detection_margin_db.is_finite() {
            return Err(Error::config("rfi.detection_margin_db", "must be finite"));
        }
        if !self.significance_margin_db.is_finite() {
            return Err(Error::config("rfi.significance_margin_db", "must be finite"));
        }
        Ok(())
    }

    pub fn with_power(&self, psd_dbm_hz: f64) -> Self {
        RfiScenario {
            interferer_psd_dbm_hz: psd_dbm_hz,
            ..self.clone()
        }
    }

    /// Interferer power on `tone`, mW.
    pub fn interferer_power(&self, plan: &TonePlan, tone: usize) -> f64 {
        let f = plan.frequency(tone);
        tone_power(
            self.interferer_psd_dbm_hz + self.interferer_shape_db.at(f),
            plan.spacing_hz,
        )
    }

    /// Sensor noise power per tone, mW.
    pub fn sensor_noise_power(&self, plan: &TonePlan) -> f64 {
        tone_power(self.sensor_noise_psd_dbm_hz, plan.spacing_hz)
    }
}

fn tone_coupling(scenario: &RfiScenario, plan: &TonePlan, tone: usize) -> Complex64 {
    let mag = 10f64.powf(scenario.coupling_db.at(plan.frequency(tone)) / 20.0);
    let phase = rng::substream(scenario.seed, Domain::CouplingPhase, &[tone as u64]).random::<f64>() * 2.0 * PI;
    Complex64::from_polar(mag, phase)
}

/// True coupling from the sensor reference to the victim receivers at the
/// tone nearest `freq_hz`.
pub fn coupling_gain(freq_hz: f64, scenario: &RfiScenario, plan: &TonePlan) -> Result<Complex64> {
    plan.check_contains(freq_hz)?;
    let tone = ((freq_hz - plan.start_hz) / plan.spacing_hz).round().max(0.0) as usize;
    Ok(tone_coupling(scenario, plan, tone.min(plan.num_tones - 1)))
}

/// Paired training observations on one tone.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub tone: usize,
    pub main: Vec<Complex64>,
    pub sensor: Vec<Complex64>,
    /// Sensor noise power, needed to decide whether anything was detected.
    pub sensor_noise_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEstimate {
    /// Raw least-squares estimate (zero when the sensor saw nothing).
    pub ls: Complex64,
    /// Set when no interferer was detected; the canceler then passes the
    /// signal through untouched.
    pub flagged: bool,
    /// Mean sensor power over the training block, mW.
    pub sensor_power: f64,
}

impl CouplingEstimate {
    /// Coefficient actually applied by the canceler.
    pub fn applied(&self) -> Complex64 {
        if self.flagged {
            Complex64::new(0.0, 0.0)
        } else {
            self.ls
        }
    }
}

fn cn(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Running sums of a training block; observations never need to be stored.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    cross: Complex64,
    sensor_energy: f64,
    main_energy: f64,
    n: usize,
}

impl Accumulator {
    fn push(&mut self, main: Complex64, sensor: Complex64) {
        self.cross += main * sensor.conj();
        self.sensor_energy += sensor.norm_sqr();
        self.main_energy += main.norm_sqr();
        self.n += 1;
    }

    fn finish(&self, scenario: &RfiScenario, sensor_noise_mw: f64) -> CouplingEstimate {
        let n = self.n as f64;
        let sensor_power = self.sensor_energy / n;
        if self.sensor_energy == 0.0 {
            return CouplingEstimate {
                ls: Complex64::new(0.0, 0.0),
                flagged: true,
                sensor_power,
            };
        }
        let ls = self.cross / self.sensor_energy;
        let explained = self.cross.norm_sqr() / self.sensor_energy;
        let residual_per_symbol = (self.main_energy - explained).max(0.0) / n;
        let weak = sensor_power <= sensor_noise_mw * 10f64.powf(scenario.detection_margin_db / 10.0);
        let insignificant = explained <= residual_per_symbol * 10f64.powf(scenario.significance_margin_db / 10.0);
        CouplingEstimate {
            ls,
            flagged: weak || insignificant,
            sensor_power,
        }
    }
}

fn draw_block(
    scenario: &RfiScenario,
    plan: &TonePlan,
    tone: usize,
    receiver_noise_mw: f64,
    trial: u64,
    mut sink: impl FnMut(Complex64, Complex64),
) {
    let g = tone_coupling(scenario, plan, tone);
    let p_i = scenario.interferer_power(plan, tone);
    let p_v = scenario.sensor_noise_power(plan);
    let mut rng = rng::substream(scenario.seed, Domain::Training, &[tone as u64, trial]);
    for _ in 0..scenario.training_symbols {
        let i = cn(&mut rng, p_i);
        let v = cn(&mut rng, p_v);
        let w = cn(&mut rng, receiver_noise_mw);
        sink(g * i + w, i + v);
    }
}

/// Generate one training block on `tone`. `receiver_noise_mw` is the victim's
/// own noise; `trial` selects an independent realization.
pub fn simulate_training(
    scenario: &RfiScenario,
    plan: &TonePlan,
    tone: usize,
    receiver_noise_mw: f64,
    trial: u64,
) -> Observations {
    let mut main = Vec::with_capacity(scenario.training_symbols);
    let mut sensor = Vec::with_capacity(scenario.training_symbols);
    draw_block(scenario, plan, tone, receiver_noise_mw, trial, |m, s| {
        main.push(m);
        sensor.push(s);
    });
    Observations {
        tone,
        main,
        sensor,
        sensor_noise_mw: scenario.sensor_noise_power(plan),
    }
}

pub fn estimate_coupling(obs: &Observations, scenario: &RfiScenario) -> Result<CouplingEstimate> {
    if obs.main.is_empty() || obs.main.len() != obs.sensor.len() {
        return Err(Error::InvalidArgument(format!(
            "need equal, non-empty observation blocks (main {}, sensor {})",
            obs.main.len(),
            obs.sensor.len()
        )));
    }
    let mut acc = Accumulator::default();
    for (&m, &s) in obs.main.iter().zip(&obs.sensor) {
        acc.push(m, s);
    }
    Ok(acc.finish(scenario, obs.sensor_noise_mw))
}

/// [`simulate_training`] followed by [`estimate_coupling`] without keeping
/// the observations.
pub fn train_and_estimate(
    scenario: &RfiScenario,
    plan: &TonePlan,
    tone: usize,
    receiver_noise_mw: f64,
    trial: u64,
) -> CouplingEstimate {
    let mut acc = Accumulator::default();
    draw_block(scenario, plan, tone, receiver_noise_mw, trial, |m, s| acc.push(m, s));
    acc.finish(scenario, scenario.sensor_noise_power(plan))
}

/// Interference power left at each victim receiver per tone, mW.
pub fn residual_noise(
    scenario: &RfiScenario,
    plan: &TonePlan,
    receiver_noise_mw: f64,
    canceler_on: bool,
) -> Result<Vec<f64>> {
    scenario.validate()?;
    plan.validate()?;
    let p_v = scenario.sensor_noise_power(plan);
    Ok((0..plan.num_tones)
        .into_par_iter()
        .map(|t| {
            let g = tone_coupling(scenario, plan, t);
            let p_i = scenario.interferer_power(plan, t);
            if !canceler_on {
                return g.norm_sqr() * p_i;
            }
            let est = train_and_estimate(scenario, plan, t, receiver_noise_mw, 0);
            if est.flagged {
                return g.norm_sqr() * p_i;
            }
            let gh = est.applied();
            (g - gh).norm_sqr() * p_i + gh.norm_sqr() * p_v
        })
        .collect())
}

/// Downstream rates with the interferer present, canceler off and on.
pub fn cancel_and_rate(
    channel: &ChannelTensor,
    spectrum: &SpectrumPlan,
    scheme: &Scheme,
    scenario: &RfiScenario,
) -> Result<(RateReport, RateReport)> {
    if channel.direction != Direction::Downstream {
        return Err(Error::InvalidArgument(
            "ingress cancellation is modelled at the downstream receiver".into(),
        ));
    }
    let floor = tone_power(spectrum.noise_psd_dbm_hz, channel.tone_plan.spacing_hz);
    let mut out = Vec::with_capacity(2);
    for on in [false, true] {
        let extra = residual_noise(scenario, &channel.tone_plan, floor, on)?;
        let opts = RateOptions {
            extra_noise_mw: Some(extra),
            ..RateOptions::default()
        };
        out.push(scenario_rates_with(channel, spectrum, scheme, &opts)?);
    }
    let on = out.pop().expect("two reports");
    let off = out.pop().expect("two reports");
    Ok((off, on))
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub interferer_psd_dbm_hz: f64,
    pub off: RateReport,
    pub on: RateReport,
}

/// Canceler off and on at each interferer level, in the order given.
pub fn sweep(
    channel: &ChannelTensor,
    spectrum: &SpectrumPlan,
    scheme: &Scheme,
    base: &RfiScenario,
    levels_dbm_hz: &[f64],
) -> Result<Vec<SweepPoint>> {
    levels_dbm_hz
        .iter()
        .map(|&level| {
            let (off, on) = cancel_and_rate(channel, spectrum, scheme, &base.with_power(level))?;
            Ok(SweepPoint {
                interferer_psd_dbm_hz: level,
                off,
                on,
            })
        })
        .collect()
}
