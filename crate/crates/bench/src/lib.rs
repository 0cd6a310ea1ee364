//! Fixtures shared by the benchmarks.

use dslvec_core::rate::line_tone_powers;
use dslvec_core::{
    synth_channel, BinderConfig, ChannelModelParams, ChannelTensor, Direction, NoiseModel, SpectrumPlan, TonePlan,
};

/// A binder of `lines` lines spread over 25-200 m on `profile`.
pub fn binder_channel(profile: &str, lines: usize, direction: Direction) -> ChannelTensor {
    let plan = TonePlan::profile(profile).expect("built-in profile");
    let binder = BinderConfig::uniform(lines, 25.0, 200.0, 1).expect("valid binder");
    synth_channel(&binder, &plan, &ChannelModelParams::default(), direction).expect("synthesis")
}

/// Tone power and background noise on `tone` under the default spectrum.
pub fn tone_conditions(channel: &ChannelTensor, tone: usize) -> (f64, NoiseModel) {
    let spectrum = SpectrumPlan::default();
    let (powers, _) = line_tone_powers(&channel.tone_plan, &spectrum).expect("powers");
    let floor = dslvec_core::rate::tone_power(spectrum.noise_psd_dbm_hz, channel.tone_plan.spacing_hz);
    (powers[tone], NoiseModel::White(floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let ch = binder_channel("gfast106", 4, Direction::Downstream);
        assert_eq!(ch.num_lines(), 4);
        let (p, n) = tone_conditions(&ch, 100);
        assert!(p > 0.0 && n.mean_power() > 0.0);
    }
}
