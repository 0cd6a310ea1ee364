//! Per-tone crosstalk cancelers.
//!
//! All designs act on a single tone's K×K channel `H` (receiver index first).
//! Downstream designs are transmit precoders `P` applied at the DPU, so the
//! end-to-end channel is `H·P`; upstream designs are receive filters `W`
//! applied at the DPU, giving `W·H`. Every line transmits symbols of power
//! `p` per tone, and downstream precoders are normalized so that no line's
//! transmit power exceeds `p` (all rows of `P` have norm at most one).

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Direction;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, DEFAULT_COND_LIMIT};

mod snr;
mod thp;

pub use snr::effective_snr;
pub use thp::{apply_thp, modulo_reduce, thp_transmit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// No crosstalk processing.
    None,
    /// Per-line gain and phase equalization only.
    #[serde(rename = "diag")]
    DiagScale,
    Zf,
    Mmse,
    /// Tomlinson-Harashima precoding (downstream only).
    Thp,
    /// Decision-feedback equalization (upstream only).
    Dfe,
    /// Matched-filter bound.
    Mfb,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::None,
        SchemeKind::DiagScale,
        SchemeKind::Zf,
        SchemeKind::Mmse,
        SchemeKind::Thp,
        SchemeKind::Dfe,
        SchemeKind::Mfb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::None => "none",
            SchemeKind::DiagScale => "diag",
            SchemeKind::Zf => "zf",
            SchemeKind::Mmse => "mmse",
            SchemeKind::Thp => "thp",
            SchemeKind::Dfe => "dfe",
            SchemeKind::Mfb => "mfb",
        }
    }

    pub fn valid_for(self, direction: Direction) -> bool {
        match self {
            SchemeKind::Thp => direction == Direction::Downstream,
            SchemeKind::Dfe => direction == Direction::Upstream,
            _ => true,
        }
    }

    /// Ladder of schemes, weakest first, for one direction.
    pub fn ladder(direction: Direction) -> Vec<SchemeKind> {
        SchemeKind::ALL.into_iter().filter(|k| k.valid_for(direction)).collect()
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lower || (lower == "diagscale" && *k == SchemeKind::DiagScale))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// Processing order for the successive (THP/DFE) schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    #[default]
    Natural,
    /// Greedy sorted factorization: the strongest remaining line goes first.
    BestFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeOptions {
    pub ordering: OrderRule,
    /// Constellation size used for the THP precoding-loss factor M/(M-1).
    pub modulo_size: u32,
    pub include_modulo_loss: bool,
    pub cond_limit: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            ordering: OrderRule::Natural,
            modulo_size: 16,
            include_modulo_loss: false,
            cond_limit: DEFAULT_COND_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub direction: Direction,
    #[serde(default)]
    pub options: SchemeOptions,
}

impl Scheme {
    pub fn new(kind: SchemeKind, direction: Direction) -> Result<Self> {
        Self::with_options(kind, direction, SchemeOptions::default())
    }

    pub fn with_options(kind: SchemeKind, direction: Direction, options: SchemeOptions) -> Result<Self> {
        if !kind.valid_for(direction) {
            return Err(Error::SchemeDirection {
                scheme: kind.to_string(),
                direction: direction.to_string(),
            });
        }
        if options.modulo_size < 2 {
            return Err(Error::InvalidArgument("modulo_size must be at least 2".into()));
        }
        Ok(Scheme {
            kind,
            direction,
            options,
        })
    }
}

/// Per-tone noise at the receivers.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// Independent noise of equal power on every receiver.
    White(f64),
    /// Full spatial covariance (alien crosstalk is correlated across lines).
    Covariance(CMat),
}

impl NoiseModel {
    pub fn covariance(&self, k: usize) -> CMat {
        match self {
            NoiseModel::White(s) => CMat::from_diagonal_element(k, k, Complex64::from(*s)),
            NoiseModel::Covariance(n) => n.clone(),
        }
    }

    pub fn power(&self, line: usize) -> f64 {
        match self {
            NoiseModel::White(s) => *s,
            NoiseModel::Covariance(n) => n[(line, line)].re,
        }
    }

    pub fn mean_power(&self) -> f64 {
        match self {
            NoiseModel::White(s) => *s,
            NoiseModel::Covariance(n) => n.diagonal().iter().map(|z| z.re).sum::<f64>() / n.nrows() as f64,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        match self {
            NoiseModel::White(s) if *s > 0.0 && s.is_finite() => Ok(()),
            NoiseModel::White(_) => Err(Error::NoisePositiveDefinite),
            NoiseModel::Covariance(n) => {
                if n.shape() != (k, k) {
                    return Err(Error::Dimension(format!(
                        "noise covariance is {:?}, channel has {k} lines",
                        n.shape()
                    )));
                }
                linalg::cholesky_lower(n).map(|_| ())
            }
        }
    }
}

/// A per-tone canceler.
///
/// `feedforward` is the precoder (downstream) or receive filter (upstream),
/// already including the power normalization `beta`. For the successive
/// schemes, `order[s]` is the line handled at processing position `s`, and
/// `feedback` (indexed by processing position) is strictly lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct CancelerDesign {
    pub feedforward: CMat,
    pub feedback: Option<CMat>,
    pub beta: f64,
    pub order: Vec<usize>,
    /// Complex effective gain seen by each line after feedback, indexed by line.
    /// Populated by the successive schemes only.
    pub effective_gains: Vec<Complex64>,
}

impl CancelerDesign {
    /// Magnitudes of the effective per-line gains (the triangular factor's
    /// diagonal), indexed by line.
    pub fn gains(&self) -> Vec<f64> {
        self.effective_gains.iter().map(|g| g.norm()).collect()
    }
}

fn check_square(h: &CMat) -> Result<usize> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "channel must be square and non-empty, got {:?}",
            h.shape()
        )));
    }
    Ok(h.nrows())
}

fn check_power(tone_power: f64) -> Result<()> {
    if tone_power > 0.0 && tone_power.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tone power must be positive, got {tone_power}"
        )))
    }
}

/// Largest `beta <= 1` keeping every row of `beta * p` within unit norm.
fn row_normalization(p: &CMat) -> f64 {
    let worst = (0..p.nrows()).map(|i| linalg::row_energy(p, i)).fold(0.0, f64::max);
    if worst > 1.0 {
        1.0 / worst.sqrt()
    } else {
        1.0
    }
}

fn natural_order(k: usize) -> Vec<usize> {
    (0..k).collect()
}

/// Per-line frequency-domain equalization: receiver `i` divides by `H[i][i]`
/// and nothing else is done about crosstalk.
pub fn design_diag(h: &CMat) -> Result<CancelerDesign> {
    let k = check_square(h)?;
    if let Some(i) = (0..k).find(|&i| h[(i, i)].norm() == 0.0) {
        return Err(Error::Singular(format!("direct path of line {i} is zero")));
    }
    let feq = DVector::from_fn(k, |i, _| h[(i, i)].inv());
    Ok(CancelerDesign {
        feedforward: CMat::from_diagonal(&feq),
        feedback: None,
        beta: 1.0,
        order: natural_order(k),
        effective_gains: Vec::new(),
    })
}

/// Zero-forcing.
///
/// Downstream: `P = beta * H^-1 * diag(H)`, so `H·P = beta * diag(H)`, with a
/// single per-tone `beta` chosen so the most loaded line meets its power
/// limit. Upstream: `W = diag(H) * H^-1`, so `W·H = diag(H)`.
pub fn design_zf(h: &CMat, direction: Direction, cond_limit: f64) -> Result<CancelerDesign> {
    let k = check_square(h)?;
    let inv = linalg::checked_inverse(h, cond_limit)?;
    let d = CMat::from_diagonal(&h.diagonal());
    let (feedforward, beta) = match direction {
        Direction::Downstream => {
            let p = inv * d;
            let beta = row_normalization(&p);
            (p * Complex64::from(beta), beta)
        }
        Direction::Upstream => (d * inv, 1.0),
    };
    Ok(CancelerDesign {
        feedforward,
        feedback: None,
        beta,
        order: natural_order(k),
        effective_gains: Vec::new(),
    })
}

/// Linear MMSE.
///
/// Upstream: the Wiener receiver `W = p·Hᴴ(p·H·Hᴴ + N)^-1`. Downstream: the
/// regularized inverse `P = Hᴴ(H·Hᴴ + (σ²/p)·I)^-1 · D`, with `D` diagonal
/// chosen so `(H·P)[i][i] = H[i][i]`, then power-normalized like
/// zero-forcing. It tends to the zero-forcing precoder as σ² → 0.
pub fn design_mmse(h: &CMat, noise: &NoiseModel, tone_power: f64, direction: Direction) -> Result<CancelerDesign> {
    let k = check_square(h)?;
    check_power(tone_power)?;
    noise.validate(k)?;
    let hh = h.adjoint();
    let singular = || Error::Singular("regularized Gram matrix is not invertible".into());
    let (feedforward, beta) = match direction {
        Direction::Upstream => {
            let p = Complex64::from(tone_power);
            let gram = h * &hh * p + noise.covariance(k);
            let inv = gram.lu().try_inverse().ok_or_else(singular)?;
            (hh * p * inv, 1.0)
        }
        Direction::Downstream => {
            let alpha = noise.mean_power() / tone_power;
            let gram = h * &hh + CMat::from_diagonal_element(k, k, Complex64::from(alpha));
            let inv = gram.lu().try_inverse().ok_or_else(singular)?;
            // Scale each column so the effective direct gain equals H[i][i],
            // as with zero-forcing.
            let shaped = &hh * inv;
            let direct = h * &shaped;
            let d = DVector::from_fn(k, |i, _| h[(i, i)] / direct[(i, i)].re);
            let p = shaped * CMat::from_diagonal(&d);
            let beta = row_normalization(&p);
            (p * Complex64::from(beta), beta)
        }
    };
    Ok(CancelerDesign {
        feedforward,
        feedback: None,
        beta,
        order: natural_order(k),
        effective_gains: Vec::new(),
    })
}

/// Tomlinson-Harashima precoder from a QR factorization of `Hᴴ`.
///
/// With rows of `H` taken in processing order, `Hᴴ = Q·R` gives
/// `H = Rᴴ·Qᴴ`. Transmitting `x = Q·v` leaves a lower-triangular end-to-end
/// channel `Rᴴ`, whose strictly causal part is pre-subtracted (with modulo
/// reduction) by [`apply_thp`]. `Q` is unitary, so no transmit power is lost
/// to normalization.
pub fn design_thp(h: &CMat, rule: OrderRule, cond_limit: f64) -> Result<CancelerDesign> {
    let k = check_square(h)?;
    linalg::checked_inverse(h, cond_limit)?;
    let hh = h.adjoint();
    let order = match rule {
        OrderRule::Natural => natural_order(k),
        OrderRule::BestFirst => linalg::greedy_column_order(&hh, true),
    };
    let qr = linalg::permute_columns(&hh, &order).qr();
    let (q, r) = (qr.q(), qr.r());
    let beta = row_normalization(&q);
    let mut effective_gains = vec![Complex64::default(); k];
    for (s, &line) in order.iter().enumerate() {
        effective_gains[line] = r[(s, s)].conj();
    }
    let feedback = CMat::from_fn(k, k, |s, t| {
        if t < s {
            r[(t, s)].conj() / r[(s, s)].conj()
        } else {
            Complex64::default()
        }
    });
    Ok(CancelerDesign {
        feedforward: q * Complex64::from(beta),
        feedback: Some(feedback),
        beta,
        order,
        effective_gains: effective_gains.into_iter().map(|g| g * beta).collect(),
    })
}

/// Genie-aided MMSE decision-feedback equalizer.
///
/// The noise is whitened, the channel stacked over `(1/√p)·I`, and the
/// stack QR-factored with the first-processed line in the last column.
/// The diagonal of `R` gives the per-line effective gains; the unbiased
/// SINR of each line is `g²·p − 1`.
pub fn design_dfe(h: &CMat, noise: &NoiseModel, tone_power: f64, rule: OrderRule) -> Result<CancelerDesign> {
    let k = check_square(h)?;
    check_power(tone_power)?;
    noise.validate(k)?;
    let (hw, whitener) = whiten(h, noise)?;
    let order = match rule {
        OrderRule::Natural => natural_order(k),
        // Weakest column first in the factorization, so it is detected last.
        OrderRule::BestFirst => {
            let mut cols = linalg::greedy_column_order(&augmented(&hw, tone_power, &natural_order(k)), false);
            cols.reverse();
            cols
        }
    };
    let cols: Vec<usize> = order.iter().rev().copied().collect();
    let qr = augmented(&hw, tone_power, &cols).qr();
    let (q, r) = (qr.q(), qr.r());
    let pos_of_col = |m: usize| k - 1 - m;
    let mut effective_gains = vec![Complex64::default(); k];
    let mut feedforward = CMat::zeros(k, k);
    let q_top = q.rows(0, k).adjoint() * whitener;
    for m in 0..k {
        effective_gains[cols[m]] = r[(m, m)];
        let s = pos_of_col(m);
        let row = q_top.row(m) / r[(m, m)];
        feedforward.row_mut(s).copy_from(&row);
    }
    let feedback = CMat::from_fn(k, k, |s, t| {
        if t < s {
            let (m, n) = (pos_of_col(s), pos_of_col(t));
            r[(m, n)] / r[(m, m)]
        } else {
            Complex64::default()
        }
    });
    Ok(CancelerDesign {
        feedforward,
        feedback: Some(feedback),
        beta: 1.0,
        order,
        effective_gains,
    })
}

/// Returns the whitened channel `L^-1·H` and the whitening filter `L^-1`,
/// where `N = L·Lᴴ`.
fn whiten(h: &CMat, noise: &NoiseModel) -> Result<(CMat, CMat)> {
    let k = h.nrows();
    let l = linalg::cholesky_lower(&noise.covariance(k))?;
    let linv = l.try_inverse().ok_or(Error::NoisePositiveDefinite)?;
    Ok((&linv * h, linv))
}

fn augmented(hw: &CMat, tone_power: f64, cols: &[usize]) -> CMat {
    let k = hw.nrows();
    let reg = Complex64::from(1.0 / tone_power.sqrt());
    let top = linalg::permute_columns(hw, cols);
    CMat::from_fn(2 * k, cols.len(), |i, m| {
        if i < k {
            top[(i, m)]
        } else if i - k == m {
            reg
        } else {
            Complex64::default()
        }
    })
}
