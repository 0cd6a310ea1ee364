//! Deterministic per-tone binder channels.
//!
//! Direct paths follow a three-term cable insertion-loss law with a linear
//! phase from propagation delay. Far-end crosstalk couplings are log-normal
//! around a power ratio that grows log-linearly with frequency up to a cap,
//! with uniformly distributed coupling phase. Every coupling draw comes from
//! its own substream keyed by (seed, direction, victim, disturber, tone).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::tone_grid::TonePlan;

pub mod io;

/// Largest vectored group the model accepts.
pub const MAX_LINES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upstream,
    Downstream,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Upstream => "upstream",
            Direction::Downstream => "downstream",
        }
    }

    fn domain(self) -> Domain {
        match self {
            Direction::Upstream => Domain::FextUpstream,
            Direction::Downstream => Domain::FextDownstream,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upstream" | "us" => Ok(Direction::Upstream),
            "downstream" | "ds" => Ok(Direction::Downstream),
            other => Err(Error::InvalidArgument(format!("unknown direction `{other}`"))),
        }
    }
}

/// Cable and crosstalk constants. Attenuation constants are in dB per 100 m
/// with frequency expressed in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModelParams {
    pub atten_k1: f64,
    pub atten_k2: f64,
    pub atten_k3: f64,
    pub delay_ns_per_m: f64,
    pub fext_k0_db: f64,
    pub fext_slope_db_per_decade: f64,
    pub fext_cap_db: f64,
    pub fext_sigma_db: f64,
    pub fext_ref_hz: f64,
}

impl Default for ChannelModelParams {
    fn default() -> Self {
        ChannelModelParams {
            atten_k1: 1.967,
            atten_k2: 0.023,
            atten_k3: 0.050,
            delay_ns_per_m: 5.0,
            // Mean coupling reaches the direct path (0 dB) near 200 MHz.
            fext_k0_db: -46.0,
            fext_slope_db_per_decade: 20.0,
            fext_cap_db: 0.0,
            fext_sigma_db: 5.0,
            fext_ref_hz: 1e6,
        }
    }
}

impl ChannelModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("atten_k1", self.atten_k1),
            ("atten_k2", self.atten_k2),
            ("atten_k3", self.atten_k3),
            ("delay_ns_per_m", self.delay_ns_per_m),
            ("fext_k0_db", self.fext_k0_db),
            ("fext_slope_db_per_decade", self.fext_slope_db_per_decade),
            ("fext_cap_db", self.fext_cap_db),
            ("fext_sigma_db", self.fext_sigma_db),
            ("fext_ref_hz", self.fext_ref_hz),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("channel.{name}"), "must be finite"));
            }
        }
        if self.fext_slope_db_per_decade < 0.0 {
            return Err(Error::config("channel.fext_slope_db_per_decade", "must be >= 0"));
        }
        if self.fext_sigma_db < 0.0 {
            return Err(Error::config("channel.fext_sigma_db", "must be >= 0"));
        }
        if self.fext_ref_hz <= 0.0 {
            return Err(Error::config("channel.fext_ref_hz", "must be > 0"));
        }
        Ok(())
    }

    /// Mean FEXT-to-direct power ratio in dB before dispersion, capped.
    pub fn fext_mean_ratio_db(&self, freq_hz: f64) -> f64 {
        let growth = self.fext_k0_db + self.fext_slope_db_per_decade * (freq_hz / self.fext_ref_hz).log10();
        growth.min(self.fext_cap_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinderConfig {
    pub lengths_m: Vec<f64>,
    pub seed: u64,
}

impl BinderConfig {
    pub fn new(lengths_m: Vec<f64>, seed: u64) -> Result<Self> {
        let b = BinderConfig { lengths_m, seed };
        b.validate()?;
        Ok(b)
    }

    /// `n` lines with lengths evenly spaced from `first_m` to `last_m`.
    pub fn uniform(n: usize, first_m: f64, last_m: f64, seed: u64) -> Result<Self> {
        let lengths = if n == 1 {
            vec![first_m]
        } else {
            let step = (last_m - first_m) / (n - 1) as f64;
            (0..n).map(|k| first_m + step * k as f64).collect()
        };
        Self::new(lengths, seed)
    }

    pub fn equal(n: usize, length_m: f64, seed: u64) -> Result<Self> {
        Self::new(vec![length_m; n], seed)
    }

    pub fn num_lines(&self) -> usize {
        self.lengths_m.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.lengths_m.len();
        if k == 0 || k > MAX_LINES {
            return Err(Error::config(
                "lengths",
                format!("binder must hold 1..={MAX_LINES} lines, got {k}"),
            ));
        }
        for (i, &l) in self.lengths_m.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::config(
                    format!("lengths[{i}]"),
                    format!("line length must be > 0, got {l}"),
                ));
            }
        }
        Ok(())
    }
}

fn check_positive(freq_hz: f64, length_m: f64) -> Result<()> {
    if !(freq_hz > 0.0) || !freq_hz.is_finite() {
        return Err(Error::InvalidArgument(format!("frequency must be > 0, got {freq_hz}")));
    }
    if !(length_m > 0.0) || !length_m.is_finite() {
        return Err(Error::InvalidArgument(format!("length must be > 0, got {length_m}")));
    }
    Ok(())
}

/// Insertion loss in dB of `length_m` of cable at `freq_hz`.
pub fn direct_insertion_loss(freq_hz: f64, length_m: f64, params: &ChannelModelParams) -> Result<f64> {
    check_positive(freq_hz, length_m)?;
    Ok(insertion_loss_db(freq_hz, length_m, params))
}

fn insertion_loss_db(freq_hz: f64, length_m: f64, params: &ChannelModelParams) -> f64 {
    let f_mhz = freq_hz * 1e-6;
    let per_100m = params.atten_k1 * f_mhz.sqrt() + params.atten_k2 * f_mhz + params.atten_k3 / f_mhz.sqrt();
    length_m / 100.0 * per_100m
}

fn direct_gain(freq_hz: f64, length_m: f64, params: &ChannelModelParams) -> Complex64 {
    let mag = 10f64.powf(-insertion_loss_db(freq_hz, length_m, params) / 20.0);
    let phase = -2.0 * PI * freq_hz * params.delay_ns_per_m * 1e-9 * length_m;
    Complex64::from_polar(mag, phase)
}

/// Complex transfer function of a line's own pair.
pub fn direct_response(freq_hz: f64, length_m: f64, params: &ChannelModelParams) -> Result<Complex64> {
    check_positive(freq_hz, length_m)?;
    Ok(direct_gain(freq_hz, length_m, params))
}

/// Crosstalk coupling from disturber `j` into victim `i` on `tone`.
///
/// The coupled signal is attenuated like a direct path over the distance it
/// actually travels (the victim's length downstream, where all transmitters
/// sit at the DPU; the disturber's length upstream) and scaled by the
/// frequency-dependent FEXT ratio. When the two lines have equal length this
/// is the ratio to the victim's own direct path.
pub fn fext_response(
    tone: usize,
    victim: usize,
    disturber: usize,
    binder: &BinderConfig,
    plan: &TonePlan,
    params: &ChannelModelParams,
    direction: Direction,
) -> Result<Complex64> {
    if victim == disturber {
        return Err(Error::InvalidArgument(format!(
            "FEXT needs two distinct lines, got {victim} twice"
        )));
    }
    let k = binder.num_lines();
    if victim >= k || disturber >= k {
        return Err(Error::InvalidArgument(format!(
            "line index out of range for a {k}-line binder"
        )));
    }
    if tone >= plan.num_tones {
        return Err(Error::InvalidArgument(format!(
            "tone {tone} outside a {}-tone plan",
            plan.num_tones
        )));
    }
    let f = plan.frequency(tone);
    check_positive(f, binder.lengths_m[victim])?;
    Ok(fext_gain(f, tone, victim, disturber, binder, params, direction))
}

fn fext_gain(
    freq_hz: f64,
    tone: usize,
    victim: usize,
    disturber: usize,
    binder: &BinderConfig,
    params: &ChannelModelParams,
    direction: Direction,
) -> Complex64 {
    let mut rng = rng::substream(
        binder.seed,
        direction.domain(),
        &[victim as u64, disturber as u64, tone as u64],
    );
    let dispersion: f64 = rng.sample(StandardNormal);
    let coupling_phase = 2.0 * PI * rng.random::<f64>();
    let ratio_db = params.fext_mean_ratio_db(freq_hz) + params.fext_sigma_db * dispersion;
    let path_m = match direction {
        Direction::Downstream => binder.lengths_m[victim],
        Direction::Upstream => binder.lengths_m[disturber],
    };
    let path = direct_gain(freq_hz, path_m, params);
    path * Complex64::from_polar(10f64.powf(ratio_db / 20.0), coupling_phase)
}

/// Per-tone K×K channel matrices; `matrices[t][(i, j)]` couples transmitter
/// `j` into receiver `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub tone_plan: TonePlan,
    pub direction: Direction,
    pub binder: BinderConfig,
    pub params: ChannelModelParams,
    pub matrices: Vec<DMatrix<Complex64>>,
}

impl ChannelTensor {
    pub fn num_lines(&self) -> usize {
        self.binder.num_lines()
    }

    pub fn num_tones(&self) -> usize {
        self.matrices.len()
    }

    pub fn at(&self, tone: usize) -> &DMatrix<Complex64> {
        &self.matrices[tone]
    }
}

/// Build the channel for every tone of `plan`.
pub fn synth_channel(
    binder: &BinderConfig,
    plan: &TonePlan,
    params: &ChannelModelParams,
    direction: Direction,
) -> Result<ChannelTensor> {
    binder.validate()?;
    plan.validate()?;
    params.validate()?;
    let k = binder.num_lines();
    let matrices = (0..plan.num_tones)
        .into_par_iter()
        .map(|t| {
            let f = plan.frequency(t);
            DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    direct_gain(f, binder.lengths_m[i], params)
                } else {
                    fext_gain(f, t, i, j, binder, params, direction)
                }
            })
        })
        .collect();
    Ok(ChannelTensor {
        tone_plan: plan.clone(),
        direction,
        binder: binder.clone(),
        params: params.clone(),
        matrices,
    })
}

/// Row sums of off-diagonal magnitudes relative to the diagonal, per line.
pub fn diagonal_dominance_ratio(tensor: &ChannelTensor, tone: usize) -> Result<Vec<f64>> {
    let h = tensor
        .matrices
        .get(tone)
        .ok_or_else(|| Error::InvalidArgument(format!("tone {tone} outside tensor of {} tones", tensor.num_tones())))?;
    Ok((0..h.nrows())
        .map(|i| {
            let off: f64 = (0..h.ncols()).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
            off / h[(i, i)].norm()
        })
        .collect())
}
