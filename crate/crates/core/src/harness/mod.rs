//! Scenario files, the reference experiment presets and CSV artifact output.

mod config;
mod run;

pub use config::{
    default_rfi_sweep, load_scenario, parse_scenario, DirectionSel, Experiment, LengthSweep, RawConfig, Scenario,
    DEFAULT_OUTPUT_DIR,
};
pub use run::{
    compute_length_sweep, compute_rates, compute_rfi_sweep, metadata_path, run_scenario, with_jobs, RatesTable, RfiRow,
    RfiTable, SweepTable, DETAIL_COLUMNS, RATES_COLUMNS, RFI_COLUMNS, RFI_USER_COLUMNS, SWEEP_COLUMNS,
};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 3] = ["fig4", "fig5", "fig6"];

const PRESETS: [(&str, &str); 3] = [
    ("fig4", include_str!("../../presets/fig4.cfg")),
    ("fig5", include_str!("../../presets/fig5.cfg")),
    ("fig6", include_str!("../../presets/fig6.cfg")),
];

/// Text of a built-in preset scenario.
pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown preset `{name}` (expected one of {})",
                PRESET_NAMES.join(", ")
            ))
        })
}

pub fn preset(name: &str) -> Result<Scenario> {
    parse_scenario(preset_text(name)?)
}

/// Run a preset, optionally overriding its seed.
pub fn run_preset(name: &str, out_dir: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<Vec<PathBuf>> {
    let mut s = preset(name)?;
    if let Some(seed) = seed {
        s = s.with_seed(seed);
    }
    run_scenario(&s, out_dir, jobs)
}

pub fn run_fig4(out_dir: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<Vec<PathBuf>> {
    run_preset("fig4", out_dir, seed, jobs)
}

pub fn run_fig5(out_dir: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<Vec<PathBuf>> {
    run_preset("fig5", out_dir, seed, jobs)
}

pub fn run_fig6(out_dir: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<Vec<PathBuf>> {
    run_preset("fig6", out_dir, seed, jobs)
}
