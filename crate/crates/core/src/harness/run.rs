use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Experiment, Scenario};
use crate::cancelers::{Scheme, SchemeKind};
use crate::channel::{synth_channel, BinderConfig, Direction};
use crate::error::{Error, Result};
use crate::output::{csv_writer, fmt_f64};
use crate::rate::{scenario_rates_with, RateOptions, RateReport};
use crate::rfi;
use crate::tone_grid::TonePlan;

pub const RATES_COLUMNS: [&str; 4] = ["scheme", "line", "length_m", "rate_mbps"];
pub const DETAIL_COLUMNS: [&str; 6] = ["scheme", "line", "tone", "freq_hz", "snr_db", "bits"];
pub const SWEEP_COLUMNS: [&str; 3] = ["length", "scheme", "avg_rate_mbps"];
pub const RFI_COLUMNS: [&str; 3] = ["interferer_psd_dbm_hz", "canceler_on", "aggregate_mbps"];
pub const RFI_USER_COLUMNS: [&str; 5] = ["interferer_psd_dbm_hz", "canceler_on", "line", "length_m", "rate_mbps"];

/// Per-line rates of every scheme for one profile and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RatesTable {
    pub profile: String,
    pub direction: Direction,
    pub lengths_m: Vec<f64>,
    pub schemes: Vec<(SchemeKind, Vec<f64>)>,
    pub power_scale: f64,
    pub skipped_tones: Vec<(SchemeKind, Vec<usize>)>,
    /// Full reports, kept only when per-tone detail was requested.
    pub detail: Vec<RateReport>,
}

impl RatesTable {
    pub fn rates(&self, kind: SchemeKind) -> Option<&[f64]> {
        self.schemes.iter().find(|(k, _)| *k == kind).map(|(_, r)| r.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub direction: Direction,
    /// `(length, scheme, mean rate)` in emission order.
    pub rows: Vec<(f64, SchemeKind, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfiRow {
    pub interferer_psd_dbm_hz: f64,
    pub canceler_on: bool,
    pub per_line_mbps: Vec<f64>,
    pub aggregate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfiTable {
    pub scheme: SchemeKind,
    pub lengths_m: Vec<f64>,
    pub rows: Vec<RfiRow>,
}

fn report_for(
    scenario: &Scenario,
    binder: &BinderConfig,
    plan: &TonePlan,
    direction: Direction,
    kinds: &[SchemeKind],
) -> Result<Vec<RateReport>> {
    let channel = synth_channel(binder, plan, &scenario.channel, direction)?;
    let opts = RateOptions {
        policy: scenario.ill_conditioned,
        extra_noise_mw: None,
    };
    kinds
        .iter()
        .map(|&k| {
            let scheme = Scheme::with_options(k, direction, scenario.canceler.clone())?;
            scenario_rates_with(&channel, &scenario.spectrum, &scheme, &opts)
        })
        .collect()
}

pub fn compute_rates(scenario: &Scenario) -> Result<Vec<RatesTable>> {
    let binder = scenario.binder()?;
    let mut out = Vec::new();
    for plan in &scenario.plans {
        for &direction in &scenario.directions {
            let kinds = scenario.schemes_for(direction);
            let reports = report_for(scenario, &binder, plan, direction, &kinds)?;
            out.push(RatesTable {
                profile: plan.profile_name.clone(),
                direction,
                lengths_m: binder.lengths_m.clone(),
                schemes: reports
                    .iter()
                    .map(|r| (r.scheme.kind, r.per_line_rate_mbps.clone()))
                    .collect(),
                power_scale: reports.first().map_or(1.0, |r| r.meta.power_scale),
                skipped_tones: reports
                    .iter()
                    .filter(|r| !r.meta.skipped_tones.is_empty())
                    .map(|r| (r.scheme.kind, r.meta.skipped_tones.clone()))
                    .collect(),
                detail: if scenario.detail { reports } else { Vec::new() },
            });
        }
    }
    Ok(out)
}

pub fn compute_length_sweep(scenario: &Scenario) -> Result<Vec<SweepTable>> {
    let plan = &scenario.plans[0];
    let mut out = Vec::new();
    for &direction in &scenario.directions {
        let kinds = scenario.schemes_for(direction);
        let mut rows = Vec::new();
        for &length in &scenario.sweep_lengths_m {
            let binder = BinderConfig::equal(scenario.lines, length, scenario.seed)?;
            for r in report_for(scenario, &binder, plan, direction, &kinds)? {
                rows.push((length, r.scheme.kind, r.mean_rate_mbps()));
            }
        }
        out.push(SweepTable { direction, rows });
    }
    Ok(out)
}

pub fn compute_rfi_sweep(scenario: &Scenario) -> Result<RfiTable> {
    let plan = &scenario.plans[0];
    let binder = scenario.binder()?;
    let kind = scenario.schemes[0];
    let channel = synth_channel(&binder, plan, &scenario.channel, Direction::Downstream)?;
    let scheme = Scheme::with_options(kind, Direction::Downstream, scenario.canceler.clone())?;
    let base = scenario.rfi.clone().unwrap_or_default();
    let points = rfi::sweep(&channel, &scenario.spectrum, &scheme, &base, &scenario.rfi_sweep_dbm_hz)?;
    let mut rows = Vec::with_capacity(points.len() * 2);
    for p in points {
        for (on, r) in [(false, p.off), (true, p.on)] {
            rows.push(RfiRow {
                interferer_psd_dbm_hz: p.interferer_psd_dbm_hz,
                canceler_on: on,
                aggregate_mbps: r.aggregate_mbps,
                per_line_mbps: r.per_line_rate_mbps,
            });
        }
    }
    Ok(RfiTable {
        scheme: kind,
        lengths_m: binder.lengths_m,
        rows,
    })
}

/// Run `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Compute a scenario and write its CSV artifacts (each with a `.meta.json`
/// sidecar) into `out_dir`. Returns the CSV paths in emission order.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path, jobs: Option<usize>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let sink = Sink { scenario, out_dir };
    with_jobs(jobs, || match scenario.experiment {
        Experiment::Rates => sink.rates(&compute_rates(scenario)?),
        Experiment::LengthSweep => sink.length_sweep(&compute_length_sweep(scenario)?),
        Experiment::RfiSweep => sink.rfi(&compute_rfi_sweep(scenario)?),
    })?
}

pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

struct Sink<'a> {
    scenario: &'a Scenario,
    out_dir: &'a Path,
}

impl Sink<'_> {
    fn write<R: IntoIterator<Item = Vec<String>>>(
        &self,
        file: String,
        columns: &[&str],
        rows: R,
        extra: serde_json::Value,
    ) -> Result<PathBuf> {
        let path = self.out_dir.join(&file);
        let mut w = csv_writer(BufWriter::new(File::create(&path)?));
        w.write_record(columns).map_err(csv_err)?;
        let mut count = 0usize;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
            count += 1;
        }
        w.flush()?;
        let meta = Metadata {
            tool: "dslvec",
            version: env!("CARGO_PKG_VERSION"),
            artifact: file,
            columns: columns.to_vec(),
            rows: count,
            seed: self.scenario.seed,
            experiment: self.scenario.experiment.as_str(),
            config: self.scenario.to_config_toml(),
            extra,
        };
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        fs::write(metadata_path(&path), text)?;
        Ok(path)
    }

    fn rates(&self, tables: &[RatesTable]) -> Result<Vec<PathBuf>> {
        let s = self.scenario;
        let mut paths = Vec::new();
        for t in tables {
            let rows = t.schemes.iter().flat_map(|(kind, rates)| {
                rates.iter().enumerate().map(move |(line, r)| {
                    vec![
                        kind.to_string(),
                        line.to_string(),
                        fmt_f64(t.lengths_m[line]),
                        fmt_f64(*r),
                    ]
                })
            });
            let skipped: Vec<_> = t
                .skipped_tones
                .iter()
                .map(|(k, v)| json!({"scheme": k, "tones": v}))
                .collect();
            let extra = json!({
                "profile": t.profile,
                "direction": t.direction.as_str(),
                "lines": t.lengths_m.len(),
                "power_scale": t.power_scale,
                "skipped_tones": skipped,
            });
            let stem = format!("{}_{}_{}", s.name, t.profile, t.direction.as_str());
            paths.push(self.write(format!("{stem}.csv"), &RATES_COLUMNS, rows, extra.clone())?);
            if s.detail {
                let rows = t.detail.iter().flat_map(detail_rows);
                paths.push(self.write(format!("{stem}_detail.csv"), &DETAIL_COLUMNS, rows, extra)?);
            }
        }
        Ok(paths)
    }

    fn length_sweep(&self, tables: &[SweepTable]) -> Result<Vec<PathBuf>> {
        let s = self.scenario;
        tables
            .iter()
            .map(|t| {
                let rows = t
                    .rows
                    .iter()
                    .map(|(l, k, r)| vec![fmt_f64(*l), k.to_string(), fmt_f64(*r)]);
                let extra = json!({
                    "profile": s.plans[0].profile_name,
                    "direction": t.direction.as_str(),
                    "lines": s.lines,
                });
                self.write(
                    format!("{}_{}.csv", s.name, t.direction.as_str()),
                    &SWEEP_COLUMNS,
                    rows,
                    extra,
                )
            })
            .collect()
    }

    fn rfi(&self, table: &RfiTable) -> Result<Vec<PathBuf>> {
        let s = self.scenario;
        let extra = json!({
            "profile": s.plans[0].profile_name,
            "direction": Direction::Downstream.as_str(),
            "scheme": table.scheme,
            "lines": table.lengths_m.len(),
        });
        let flag = |on: bool| if on { "1" } else { "0" }.to_string();
        let rows = table.rows.iter().map(|r| {
            vec![
                fmt_f64(r.interferer_psd_dbm_hz),
                flag(r.canceler_on),
                fmt_f64(r.aggregate_mbps),
            ]
        });
        let agg = self.write(format!("{}.csv", s.name), &RFI_COLUMNS, rows, extra.clone())?;
        let rows = table.rows.iter().flat_map(|r| {
            r.per_line_mbps.iter().enumerate().map(move |(line, rate)| {
                vec![
                    fmt_f64(r.interferer_psd_dbm_hz),
                    flag(r.canceler_on),
                    line.to_string(),
                    fmt_f64(table.lengths_m[line]),
                    fmt_f64(*rate),
                ]
            })
        });
        let per_user = self.write(format!("{}_per_user.csv", s.name), &RFI_USER_COLUMNS, rows, extra)?;
        Ok(vec![agg, per_user])
    }
}

fn detail_rows(r: &RateReport) -> impl Iterator<Item = Vec<String>> + '_ {
    r.bits.iter().enumerate().flat_map(move |(line, bits)| {
        bits.iter().enumerate().map(move |(tone, b)| {
            let freq = r.meta.start_hz + tone as f64 * r.meta.spacing_hz;
            vec![
                r.scheme.kind.to_string(),
                line.to_string(),
                tone.to_string(),
                fmt_f64(freq),
                fmt_f64(10.0 * r.snr[line][tone].log10()),
                fmt_f64(*b),
            ]
        })
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'a str,
    version: &'a str,
    artifact: String,
    columns: Vec<&'a str>,
    rows: usize,
    seed: u64,
    experiment: &'a str,
    /// Scenario file that reproduces this artifact with `dslvec run`.
    config: String,
    extra: serde_json::Value,
}
