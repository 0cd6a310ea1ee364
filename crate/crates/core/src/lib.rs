//! Vectored DSL binder simulation: channel synthesis, crosstalk cancelers,
//! bit loading and RF ingress cancellation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod cancelers;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod output;
pub mod rate;
pub mod rfi;
pub mod rng;
pub mod tone_grid;

pub use band::BandProfile;
pub use cancelers::{CancelerDesign, NoiseModel, OrderRule, Scheme, SchemeKind, SchemeOptions};
pub use channel::{synth_channel, BinderConfig, ChannelModelParams, ChannelTensor, Direction};
pub use error::{Error, Result};
pub use linalg::CMat;
pub use rate::{scenario_rates, BitMode, RateReport, SpectrumPlan};
pub use rfi::RfiScenario;
pub use tone_grid::{Duplexing, TonePlan};
