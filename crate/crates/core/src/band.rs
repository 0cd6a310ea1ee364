use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant function of frequency.
///
/// `levels[0]` applies up to and including `edges_hz[0]`, `levels[k]` on
/// `(edges_hz[k-1], edges_hz[k]]`, and the last level above the last edge.
/// A breakpoint therefore belongs to the band below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandProfile {
    #[serde(default)]
    pub edges_hz: Vec<f64>,
    pub levels: Vec<f64>,
}

impl BandProfile {
    pub fn flat(level: f64) -> Self {
        BandProfile {
            edges_hz: Vec::new(),
            levels: vec![level],
        }
    }

    pub fn new(edges_hz: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let p = BandProfile { edges_hz, levels };
        p.validate()?;
        Ok(p)
    }

    /// Three-band shape used by the default transmit mask and coupling profile:
    /// breakpoints at 30 MHz and 106 MHz.
    pub fn three_band(below_30mhz: f64, to_106mhz: f64, above: f64) -> Self {
        BandProfile {
            edges_hz: vec![30e6, 106e6],
            levels: vec![below_30mhz, to_106mhz, above],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.edges_hz.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "band profile needs one more level than edges ({} edges, {} levels)",
                self.edges_hz.len(),
                self.levels.len()
            )));
        }
        if self.edges_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("band edges must be strictly increasing".into()));
        }
        if self.edges_hz.iter().chain(&self.levels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("band profile values must be finite".into()));
        }
        Ok(())
    }

    pub fn at(&self, freq_hz: f64) -> f64 {
        let band = self.edges_hz.partition_point(|&e| e < freq_hz);
        self.levels[band]
    }

    pub fn shifted(&self, delta: f64) -> Self {
        BandProfile {
            edges_hz: self.edges_hz.clone(),
            levels: self.levels.iter().map(|l| l + delta).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoints_belong_to_lower_band() {
        let p = BandProfile::three_band(-65.0, -76.0, -79.0);
        assert_eq!(p.at(10e6), -65.0);
        assert_eq!(p.at(30e6), -65.0);
        assert_eq!(p.at(30e6 + 1.0), -76.0);
        assert_eq!(p.at(106e6), -76.0);
        assert_eq!(p.at(106e6 + 1.0), -79.0);
        assert_eq!(p.at(1e9), -79.0);
    }

    #[test]
    fn flat_profile() {
        assert_eq!(BandProfile::flat(-3.0).at(123.0), -3.0);
    }

    #[test]
    fn malformed_profiles_rejected() {
        assert!(BandProfile::new(vec![1.0], vec![0.0]).is_err());
        assert!(BandProfile::new(vec![2.0, 1.0], vec![0.0, 0.0, 0.0]).is_err());
        assert!(BandProfile::new(vec![], vec![f64::NAN]).is_err());
    }
}
