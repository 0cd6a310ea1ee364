use super::*;
use crate::cancelers::SchemeKind;
use crate::channel::{synth_channel, BinderConfig, ChannelModelParams, Direction};
use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn small_plan(tones: usize) -> TonePlan {
    TonePlan::custom("test", 51750.0, tones, 51750.0).unwrap()
}

fn tensor_from(matrices: Vec<DMatrix<Complex64>>, direction: Direction) -> ChannelTensor {
    let k = matrices[0].nrows();
    ChannelTensor {
        tone_plan: small_plan(matrices.len()),
        direction,
        binder: BinderConfig::equal(k, 100.0, 0).unwrap(),
        params: ChannelModelParams::default(),
        matrices,
    }
}

#[test]
fn one_bit_at_the_gap() {
    let s = SpectrumPlan::default();
    assert_relative_eq!(s.bitload(s.gap_linear()), 1.0, max_relative = 1e-12);
}

#[test]
fn cap_engages_at_top_of_range() {
    let s = SpectrumPlan::default();
    let edge = s.gap_linear() * (2f64.powi(15) - 1.0);
    assert_relative_eq!(s.bitload(edge), 15.0, max_relative = 1e-12);
    assert_eq!(s.bitload(edge * 10.0), 15.0);
    assert!(s.bitload(edge * 0.99) < 15.0);
}

#[test]
fn nonpositive_snr_loads_nothing() {
    let s = SpectrumPlan::default();
    assert_eq!(s.bitload(0.0), 0.0);
    assert_eq!(s.bitload(-1.0), 0.0);
    assert_eq!(s.bitload(f64::NAN), 0.0);
}

#[test]
fn integer_mode_floors() {
    let s = SpectrumPlan {
        bit_mode: BitMode::Integer,
        ..SpectrumPlan::default()
    };
    assert_eq!(s.bitload(s.gap_linear() * 2.5), 1.0);
    assert_eq!(s.bitload(s.gap_linear() * 3.001), 2.0);
}

#[test]
fn default_mask_levels() {
    let s = SpectrumPlan::default();
    let plan = TonePlan::profile("gfast212").unwrap();
    assert_eq!(s.mask_psd(10e6, &plan).unwrap(), -65.0);
    assert_eq!(s.mask_psd(50e6, &plan).unwrap(), -76.0);
    assert_eq!(s.mask_psd(200e6, &plan).unwrap(), -79.0);
    assert!(s.mask_psd(300e6, &plan).is_err());
}

#[test]
fn total_power_scale_matches_hand_count() {
    let plan = TonePlan::profile("mgfast424").unwrap();
    let s = SpectrumPlan::default();
    let (powers, scale) = line_tone_powers(&plan, &s).unwrap();
    // Tones at or below 30 MHz, in (30, 106] MHz, and above.
    let counts = [579.0, 1469.0, 6144.0];
    let levels = [-65.0f64, -76.0, -79.0];
    let raw: f64 = counts
        .iter()
        .zip(levels)
        .map(|(n, l)| n * 10f64.powf(l / 10.0) * 51750.0)
        .sum();
    assert_relative_eq!(scale, 10f64.powf(0.4) / raw, max_relative = 1e-12);
    assert_relative_eq!(powers.iter().sum::<f64>(), 10f64.powf(0.4), max_relative = 1e-12);
}

#[test]
fn no_scaling_under_the_cap() {
    let (p, scale) = enforce_total_power(&[0.1, 0.2], 4.0);
    assert_eq!(scale, 1.0);
    assert_eq!(p, vec![0.1, 0.2]);
}

#[test]
fn noiseless_diagonal_channel_saturates() {
    let m = DMatrix::from_diagonal_element(3, 3, Complex64::new(0.01, 0.0));
    let ch = tensor_from(vec![m; 8], Direction::Downstream);
    let s = SpectrumPlan {
        noise_psd_dbm_hz: f64::NEG_INFINITY,
        ..SpectrumPlan::default()
    };
    for kind in [
        SchemeKind::None,
        SchemeKind::DiagScale,
        SchemeKind::Zf,
        SchemeKind::Thp,
        SchemeKind::Mfb,
    ] {
        let r = scenario_rates(&ch, &s, &Scheme::new(kind, Direction::Downstream).unwrap()).unwrap();
        assert!(r.bits.iter().flatten().all(|&b| b == 15.0), "{kind}");
    }
}

#[test]
fn line_rate_is_symbol_rate_times_bits() {
    let plan = small_plan(64);
    let binder = BinderConfig::uniform(3, 50.0, 150.0, 9).unwrap();
    let ch = synth_channel(&binder, &plan, &ChannelModelParams::default(), Direction::Upstream).unwrap();
    let r = scenario_rates(
        &ch,
        &SpectrumPlan::default(),
        &Scheme::new(SchemeKind::Zf, Direction::Upstream).unwrap(),
    )
    .unwrap();
    for (line, bits) in r.bits.iter().enumerate() {
        let total: f64 = bits.iter().sum();
        assert_eq!(r.per_line_rate_mbps[line], plan.symbol_rate_hz() * total / 1e6);
    }
    assert_eq!(r.aggregate_mbps, r.per_line_rate_mbps.iter().sum::<f64>());
}

#[test]
fn single_line_schemes_agree() {
    let plan = small_plan(128);
    let binder = BinderConfig::new(vec![120.0], 3).unwrap();
    for dir in [Direction::Downstream, Direction::Upstream] {
        let ch = synth_channel(&binder, &plan, &ChannelModelParams::default(), dir).unwrap();
        let reports = ladder_rates(
            &ch,
            &SpectrumPlan::default(),
            &SchemeKind::ladder(dir),
            &SchemeOptions::default(),
            &RateOptions::default(),
        )
        .unwrap();
        let base = reports[0].aggregate_mbps;
        for r in &reports {
            assert_relative_eq!(r.aggregate_mbps, base, max_relative = 1e-9);
        }
    }
}

#[test]
fn singular_tone_reported_or_skipped() {
    let good = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.1, 0.0));
    let bad = DMatrix::from_element(2, 2, Complex64::new(0.1, 0.0));
    let ch = tensor_from(vec![good.clone(), good.clone(), bad, good], Direction::Downstream);
    let scheme = Scheme::new(SchemeKind::Zf, Direction::Downstream).unwrap();
    let err = scenario_rates(&ch, &SpectrumPlan::default(), &scheme).unwrap_err();
    assert!(err.is_numerical());
    assert_eq!(err.tone(), Some(2));

    let opts = RateOptions {
        policy: IllConditionedPolicy::Skip,
        ..RateOptions::default()
    };
    let r = scenario_rates_with(&ch, &SpectrumPlan::default(), &scheme, &opts).unwrap();
    assert_eq!(r.meta.skipped_tones, vec![2]);
    assert_eq!(r.bits[0][2], 0.0);
    assert!(r.bits[0][1] > 0.0);
}

#[test]
fn direction_mismatch_rejected() {
    let m = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.1, 0.0));
    let ch = tensor_from(vec![m], Direction::Upstream);
    let scheme = Scheme::new(SchemeKind::Zf, Direction::Downstream).unwrap();
    assert!(scenario_rates(&ch, &SpectrumPlan::default(), &scheme).is_err());
}

#[test]
fn extra_noise_lowers_rate() {
    let plan = small_plan(32);
    let binder = BinderConfig::equal(2, 100.0, 1).unwrap();
    let ch = synth_channel(&binder, &plan, &ChannelModelParams::default(), Direction::Downstream).unwrap();
    let scheme = Scheme::new(SchemeKind::Zf, Direction::Downstream).unwrap();
    let s = SpectrumPlan::default();
    let clean = scenario_rates(&ch, &s, &scheme).unwrap();
    let opts = RateOptions {
        extra_noise_mw: Some(vec![1e-4; 32]),
        ..RateOptions::default()
    };
    let noisy = scenario_rates_with(&ch, &s, &scheme, &opts).unwrap();
    assert!(noisy.aggregate_mbps < clean.aggregate_mbps);
    let bad = RateOptions {
        extra_noise_mw: Some(vec![0.0; 3]),
        ..RateOptions::default()
    };
    assert!(scenario_rates_with(&ch, &s, &scheme, &bad).is_err());
}

#[test]
fn spectrum_toml_uses_defaults() {
    let s: SpectrumPlan = toml::from_str("gap_db = 9.75").unwrap();
    assert_eq!(s.gap_db, 9.75);
    assert_eq!(s.bit_cap, 15);
    assert!(toml::from_str::<SpectrumPlan>("gapdb = 1").is_err());
}

proptest! {
    #[test]
    fn bitload_bounded_and_monotone(a in 0.0f64..1e7, b in 0.0f64..1e7) {
        let s = SpectrumPlan::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.bitload(lo) <= s.bitload(hi));
        prop_assert!((0.0..=15.0).contains(&s.bitload(hi)));
    }

    #[test]
    fn total_power_never_exceeded(p in prop::collection::vec(0.0f64..1.0, 1..64), cap in -10.0f64..10.0) {
        let (scaled, scale) = enforce_total_power(&p, cap);
        prop_assert!(scale <= 1.0);
        prop_assert!(scaled.iter().sum::<f64>() <= 10f64.powf(cap / 10.0) * (1.0 + 1e-12));
    }
}
