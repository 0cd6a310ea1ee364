use num_complex::Complex64;

use super::CancelerDesign;
use crate::error::{Error, Result};

fn wrap(x: f64, m: f64) -> f64 {
    x - 2.0 * m * ((x + m) / (2.0 * m)).floor()
}

/// Symmetric modulo onto the square `[-m, m) × [-m, m)`.
///
/// The region is half-open: a component equal to `+m` wraps to `-m`.
pub fn modulo_reduce(z: Complex64, m: f64) -> Complex64 {
    Complex64::new(wrap(z.re, m), wrap(z.im, m))
}

/// Run the Tomlinson-Harashima feedback loop over one vector of symbols.
///
/// `symbols` and the result are indexed by line. Lines are encoded in the
/// design's processing order: each subtracts the interference it will
/// receive from already-encoded lines and is folded back into the modulo
/// region. The result is the precoded vector before the feedforward matrix;
/// see [`thp_transmit`].
pub fn apply_thp(symbols: &[Complex64], design: &CancelerDesign, modulo_m: f64) -> Result<Vec<Complex64>> {
    if !(modulo_m > 0.0) || !modulo_m.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "modulo half-width must be positive, got {modulo_m}"
        )));
    }
    let k = design.order.len();
    if symbols.len() != k {
        return Err(Error::Dimension(format!(
            "{} symbols for a {k}-line precoder",
            symbols.len()
        )));
    }
    let mut by_pos = vec![Complex64::default(); k];
    for (s, &line) in design.order.iter().enumerate() {
        let mut u = symbols[line];
        if let Some(fb) = &design.feedback {
            for t in 0..s {
                u -= fb[(s, t)] * by_pos[t];
            }
        }
        by_pos[s] = modulo_reduce(u, modulo_m);
    }
    let mut by_line = vec![Complex64::default(); k];
    for (s, &line) in design.order.iter().enumerate() {
        by_line[line] = by_pos[s];
    }
    Ok(by_line)
}

/// Map precoded symbols (indexed by line) through the feedforward matrix to
/// the per-line transmit signal.
pub fn thp_transmit(precoded: &[Complex64], design: &CancelerDesign) -> Vec<Complex64> {
    let by_pos: Vec<Complex64> = design.order.iter().map(|&line| precoded[line]).collect();
    (0..design.feedforward.nrows())
        .map(|i| {
            by_pos
                .iter()
                .enumerate()
                .map(|(s, v)| design.feedforward[(i, s)] * v)
                .sum()
        })
        .collect()
}
