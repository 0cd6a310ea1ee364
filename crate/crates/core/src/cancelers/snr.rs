use super::{design_dfe, design_diag, design_mmse, design_thp, design_zf, NoiseModel, Scheme, SchemeKind};
use crate::channel::Direction;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Signal-to-interference-plus-noise ratio of every line of an end-to-end
/// linear channel `e` with per-line output noise powers.
fn sinr_from_effective(e: &CMat, noise_out: &[f64], tone_power: f64) -> Vec<f64> {
    (0..e.nrows())
        .map(|i| {
            let signal = e[(i, i)].norm_sqr() * tone_power;
            let interference: f64 = (0..e.ncols())
                .filter(|&j| j != i)
                .map(|j| e[(i, j)].norm_sqr())
                .sum::<f64>()
                * tone_power;
            signal / (interference + noise_out[i])
        })
        .collect()
}

/// Regularizer divisors tried for downstream MMSE before settling on
/// zero-forcing.
const MMSE_BACKOFF: [f64; 4] = [1.0, 1e1, 1e2, 1e3];

/// Downstream MMSE SINR. The regularizer is reduced by decades until no line
/// falls below its zero-forcing SINR; if none qualifies the zero-forcing
/// SINR is used.
fn mmse_downstream(
    h: &CMat,
    noise: &NoiseModel,
    tone_power: f64,
    line_noise: &[f64],
    zf: Option<Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut first_err = None;
    for div in MMSE_BACKOFF {
        match design_mmse(h, noise, tone_power * div, Direction::Downstream) {
            Ok(d) => {
                let snr = sinr_from_effective(&(h * &d.feedforward), line_noise, tone_power);
                match &zf {
                    Some(z) if snr.iter().zip(z).any(|(m, z)| m < z) => {}
                    _ => return Ok(snr),
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (zf, first_err) {
        (Some(z), _) => Ok(z),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("backoff list is non-empty"),
    }
}

/// Effective per-line SNR (linear) of `scheme` on one tone.
pub fn effective_snr(scheme: &Scheme, h: &CMat, noise: &NoiseModel, tone_power: f64) -> Result<Vec<f64>> {
    if !scheme.kind.valid_for(scheme.direction) {
        return Err(Error::SchemeDirection {
            scheme: scheme.kind.to_string(),
            direction: scheme.direction.to_string(),
        });
    }
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "channel must be square and non-empty, got {:?}",
            h.shape()
        )));
    }
    if !(tone_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tone power must be positive, got {tone_power}"
        )));
    }
    if let NoiseModel::Covariance(n) = noise {
        if n.shape() != h.shape() {
            return Err(Error::Dimension("noise covariance does not match channel".into()));
        }
    }
    let k = h.nrows();
    let line_noise: Vec<f64> = (0..k).map(|i| noise.power(i)).collect();
    let opts = &scheme.options;
    let snr = match (scheme.kind, scheme.direction) {
        (SchemeKind::None, _) => sinr_from_effective(h, &line_noise, tone_power),
        (SchemeKind::DiagScale, _) => {
            let d = design_diag(h)?;
            let e = &d.feedforward * h;
            let out: Vec<f64> = (0..k)
                .map(|i| d.feedforward[(i, i)].norm_sqr() * line_noise[i])
                .collect();
            sinr_from_effective(&e, &out, tone_power)
        }
        (SchemeKind::Zf, Direction::Downstream) => {
            let d = design_zf(h, Direction::Downstream, opts.cond_limit)?;
            (0..k)
                .map(|i| d.beta * d.beta * tone_power * h[(i, i)].norm_sqr() / line_noise[i])
                .collect()
        }
        (SchemeKind::Zf, Direction::Upstream) => {
            let inv = linalg::checked_inverse(h, opts.cond_limit)?;
            match noise {
                NoiseModel::White(s) => (0..k).map(|i| tone_power / (s * linalg::row_energy(&inv, i))).collect(),
                NoiseModel::Covariance(n) => {
                    let filtered = &inv * n * inv.adjoint();
                    (0..k).map(|i| tone_power / filtered[(i, i)].re).collect()
                }
            }
        }
        (SchemeKind::Mmse, Direction::Downstream) => {
            let zf = effective_snr(
                &Scheme {
                    kind: SchemeKind::Zf,
                    ..scheme.clone()
                },
                h,
                noise,
                tone_power,
            );
            mmse_downstream(h, noise, tone_power, &line_noise, zf.ok())?
        }
        (SchemeKind::Mmse, Direction::Upstream) => {
            let d = design_mmse(h, noise, tone_power, Direction::Upstream)?;
            let w = &d.feedforward;
            let out_cov = w * noise.covariance(k) * w.adjoint();
            let out: Vec<f64> = (0..k).map(|i| out_cov[(i, i)].re).collect();
            sinr_from_effective(&(w * h), &out, tone_power)
        }
        (SchemeKind::Thp, _) => {
            let d = design_thp(h, opts.ordering, opts.cond_limit)?;
            let loss = if opts.include_modulo_loss {
                let m = opts.modulo_size as f64;
                m / (m - 1.0)
            } else {
                1.0
            };
            d.effective_gains
                .iter()
                .zip(&line_noise)
                .map(|(g, n)| g.norm_sqr() * tone_power / (n * loss))
                .collect()
        }
        (SchemeKind::Dfe, _) => {
            let d = design_dfe(h, noise, tone_power, opts.ordering)?;
            d.effective_gains
                .iter()
                .map(|g| (g.norm_sqr() * tone_power - 1.0).max(0.0))
                .collect()
        }
        (SchemeKind::Mfb, Direction::Downstream) => (0..k)
            .map(|i| {
                let coherent: f64 = h.row(i).iter().map(|z| z.norm()).sum();
                tone_power * coherent * coherent / line_noise[i]
            })
            .collect(),
        (SchemeKind::Mfb, Direction::Upstream) if matches!(noise, NoiseModel::White(_)) => (0..k)
            .map(|i| tone_power * linalg::col_energy(h, i) / line_noise[i])
            .collect(),
        (SchemeKind::Mfb, Direction::Upstream) => {
            let ninv = noise
                .covariance(k)
                .lu()
                .try_inverse()
                .ok_or(Error::NoisePositiveDefinite)?;
            (0..k)
                .map(|i| {
                    let col = h.column(i);
                    tone_power * (col.adjoint() * &ninv * col)[(0, 0)].re
                })
                .collect()
        }
    };
    Ok(snr)
}
