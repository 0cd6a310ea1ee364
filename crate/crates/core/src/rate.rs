//! Gap-approximation bit loading and per-line rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::BandProfile;
use crate::cancelers::{effective_snr, NoiseModel, Scheme, SchemeOptions};
use crate::channel::ChannelTensor;
use crate::error::{Error, Result};
use crate::tone_grid::TonePlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitMode {
    #[default]
    Continuous,
    Integer,
}

/// Transmit mask, noise floor and loading constraints shared by all lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumPlan {
    /// Transmit PSD mask in dBm/Hz.
    pub mask: BandProfile,
    pub noise_psd_dbm_hz: f64,
    pub gap_db: f64,
    pub bit_cap: u32,
    /// Aggregate transmit power limit per line, dBm.
    pub total_power_dbm: f64,
    pub bit_mode: BitMode,
}

impl Default for SpectrumPlan {
    fn default() -> Self {
        SpectrumPlan {
            mask: BandProfile::three_band(-65.0, -76.0, -79.0),
            noise_psd_dbm_hz: -140.0,
            gap_db: 10.75,
            bit_cap: 15,
            total_power_dbm: 4.0,
            bit_mode: BitMode::Continuous,
        }
    }
}

impl SpectrumPlan {
    pub fn validate(&self) -> Result<()> {
        self.mask
            .validate()
            .map_err(|e| Error::config("spectrum.mask", e.to_string()))?;
        if !(self.gap_db >= 0.0) || !self.gap_db.is_finite() {
            return Err(Error::config("spectrum.gap_db", "must be >= 0"));
        }
        if self.bit_cap < 1 {
            return Err(Error::config("spectrum.bit_cap", "must be >= 1"));
        }
        if self.noise_psd_dbm_hz.is_nan() || self.noise_psd_dbm_hz == f64::INFINITY {
            return Err(Error::config(
                "spectrum.noise_psd_dbm_hz",
                "must be a finite level or -inf",
            ));
        }
        if !self.total_power_dbm.is_finite() {
            return Err(Error::config("spectrum.total_power_dbm", "must be finite"));
        }
        Ok(())
    }

    /// Mask level at `freq_hz`. Band breakpoints belong to the lower band.
    pub fn mask_psd(&self, freq_hz: f64, plan: &TonePlan) -> Result<f64> {
        plan.check_contains(freq_hz)?;
        Ok(self.mask.at(freq_hz))
    }

    /// SNR gap as a linear power ratio.
    pub fn gap_linear(&self) -> f64 {
        10f64.powf(self.gap_db / 10.0)
    }

    /// Bits carried by one tone at linear SNR `snr`.
    pub fn bitload(&self, snr: f64) -> f64 {
        bitload(snr, self.gap_db, self.bit_cap, self.bit_mode)
    }
}

/// Power in mW on a tone of width `spacing_hz` at `psd_dbm_hz`.
pub fn tone_power(psd_dbm_hz: f64, spacing_hz: f64) -> f64 {
    10f64.powf(psd_dbm_hz / 10.0) * spacing_hz
}

/// Scale per-tone powers uniformly so their sum stays within `cap_dbm`.
/// Returns the scaled powers and the factor applied (1 when already within).
pub fn enforce_total_power(per_tone_mw: &[f64], cap_dbm: f64) -> (Vec<f64>, f64) {
    let cap_mw = 10f64.powf(cap_dbm / 10.0);
    let total: f64 = per_tone_mw.iter().sum();
    if total <= cap_mw {
        return (per_tone_mw.to_vec(), 1.0);
    }
    let scale = cap_mw / total;
    (per_tone_mw.iter().map(|p| p * scale).collect(), scale)
}

/// `min(cap, log2(1 + snr/Γ))`, floored first in integer mode.
pub fn bitload(snr: f64, gap_db: f64, bit_cap: u32, mode: BitMode) -> f64 {
    if !(snr > 0.0) {
        return 0.0;
    }
    let gap = 10f64.powf(gap_db / 10.0);
    let raw = (1.0 + snr / gap).log2();
    let raw = match mode {
        BitMode::Continuous => raw,
        BitMode::Integer => raw.floor(),
    };
    raw.min(bit_cap as f64).max(0.0)
}

/// What to do when a canceler cannot be designed on some tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllConditionedPolicy {
    #[default]
    Error,
    /// Load zero bits on every line of that tone.
    Skip,
}

#[derive(Debug, Clone, Default)]
pub struct RateOptions {
    pub policy: IllConditionedPolicy,
    /// Extra receiver noise per tone in mW, added to the background floor on
    /// every line.
    pub extra_noise_mw: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub profile: String,
    pub direction: String,
    pub start_hz: f64,
    pub spacing_hz: f64,
    pub symbol_rate_hz: f64,
    pub power_scale: f64,
    pub skipped_tones: Vec<usize>,
    pub spectrum: SpectrumPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme: Scheme,
    pub lengths_m: Vec<f64>,
    /// `bits[line][tone]`.
    pub bits: Vec<Vec<f64>>,
    /// Effective linear SNR, `snr[line][tone]`.
    pub snr: Vec<Vec<f64>>,
    pub per_line_rate_mbps: Vec<f64>,
    pub aggregate_mbps: f64,
    pub meta: ReportMeta,
}

impl RateReport {
    pub fn num_lines(&self) -> usize {
        self.bits.len()
    }

    pub fn mean_rate_mbps(&self) -> f64 {
        self.aggregate_mbps / self.num_lines() as f64
    }
}

/// Mask-derived tone powers after total-power enforcement.
pub fn line_tone_powers(plan: &TonePlan, spectrum: &SpectrumPlan) -> Result<(Vec<f64>, f64)> {
    let raw = plan
        .tone_frequencies()?
        .into_iter()
        .map(|f| spectrum.mask_psd(f, plan).map(|psd| tone_power(psd, plan.spacing_hz)))
        .collect::<Result<Vec<_>>>()?;
    Ok(enforce_total_power(&raw, spectrum.total_power_dbm))
}

pub fn scenario_rates(channel: &ChannelTensor, spectrum: &SpectrumPlan, scheme: &Scheme) -> Result<RateReport> {
    scenario_rates_with(channel, spectrum, scheme, &RateOptions::default())
}

/// Run the per-tone pipeline (powers, canceler, SNR, bit loading) for one
/// scheme and reduce to per-line rates.
pub fn scenario_rates_with(
    channel: &ChannelTensor,
    spectrum: &SpectrumPlan,
    scheme: &Scheme,
    opts: &RateOptions,
) -> Result<RateReport> {
    spectrum.validate()?;
    if scheme.direction != channel.direction {
        return Err(Error::InvalidArgument(format!(
            "scheme is for {} but channel is {}",
            scheme.direction, channel.direction
        )));
    }
    let plan = &channel.tone_plan;
    let tones = channel.num_tones();
    if tones != plan.num_tones {
        return Err(Error::Dimension(format!(
            "channel has {tones} tones, plan has {}",
            plan.num_tones
        )));
    }
    if let Some(extra) = &opts.extra_noise_mw {
        if extra.len() != tones {
            return Err(Error::Dimension(format!(
                "{} extra-noise entries for {tones} tones",
                extra.len()
            )));
        }
    }
    let k = channel.num_lines();
    let (powers, power_scale) = line_tone_powers(plan, spectrum)?;
    let floor = tone_power(spectrum.noise_psd_dbm_hz, plan.spacing_hz);

    let per_tone: Vec<Result<(Vec<f64>, bool)>> = (0..tones)
        .into_par_iter()
        .map(|t| {
            let extra = opts.extra_noise_mw.as_ref().map_or(0.0, |e| e[t]);
            let noise = NoiseModel::White(floor + extra);
            match effective_snr(scheme, channel.at(t), &noise, powers[t]) {
                Ok(snr) => Ok((snr, false)),
                Err(e) if e.is_numerical() && opts.policy == IllConditionedPolicy::Skip => Ok((vec![0.0; k], true)),
                Err(e) => Err(e.at_tone(t)),
            }
        })
        .collect();

    let mut snr = vec![Vec::with_capacity(tones); k];
    let mut bits = vec![Vec::with_capacity(tones); k];
    let mut skipped_tones = Vec::new();
    for (t, res) in per_tone.into_iter().enumerate() {
        let (tone_snr, skipped) = res?;
        if skipped {
            skipped_tones.push(t);
        }
        for (line, s) in tone_snr.into_iter().enumerate() {
            bits[line].push(if skipped { 0.0 } else { spectrum.bitload(s) });
            snr[line].push(s);
        }
    }
    let symbol_rate = plan.symbol_rate_hz();
    let per_line_rate_mbps: Vec<f64> = bits.iter().map(|b| symbol_rate * b.iter().sum::<f64>() / 1e6).collect();
    let aggregate_mbps = per_line_rate_mbps.iter().sum();
    Ok(RateReport {
        scheme: scheme.clone(),
        lengths_m: channel.binder.lengths_m.clone(),
        bits,
        snr,
        per_line_rate_mbps,
        aggregate_mbps,
        meta: ReportMeta {
            seed: channel.binder.seed,
            profile: plan.profile_name.clone(),
            direction: channel.direction.to_string(),
            start_hz: plan.start_hz,
            spacing_hz: plan.spacing_hz,
            symbol_rate_hz: symbol_rate,
            power_scale,
            skipped_tones,
            spectrum: spectrum.clone(),
        },
    })
}

/// Rates for several schemes over one channel.
pub fn ladder_rates(
    channel: &ChannelTensor,
    spectrum: &SpectrumPlan,
    kinds: &[crate::cancelers::SchemeKind],
    scheme_options: &SchemeOptions,
    opts: &RateOptions,
) -> Result<Vec<RateReport>> {
    kinds
        .iter()
        .map(|&kind| {
            let scheme = Scheme::with_options(kind, channel.direction, scheme_options.clone())?;
            scenario_rates_with(channel, spectrum, &scheme, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests;
