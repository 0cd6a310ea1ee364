//! Text export of channel tensors.
//!
//! A tensor is stored as a CSV with columns `tone,i,j,re,im` (one row per
//! matrix entry, tones ascending, then row-major) plus a JSON header sidecar
//! next to it (`<csv>.header.json`) carrying the tone plan, binder, model
//! parameters and direction needed to interpret or regenerate it.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BinderConfig, ChannelModelParams, ChannelTensor, Direction};
use crate::error::{Error, Result};
use crate::output::{csv_writer, fmt_f64};
use crate::tone_grid::TonePlan;

pub const CHANNEL_COLUMNS: [&str; 5] = ["tone", "i", "j", "re", "im"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelHeader {
    pub format: String,
    pub tone_plan: TonePlan,
    pub direction: Direction,
    pub binder: BinderConfig,
    pub params: ChannelModelParams,
}

const FORMAT_TAG: &str = "dslvec-channel-v1";

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".header.json");
    PathBuf::from(name)
}

pub fn export_channel(tensor: &ChannelTensor, csv_path: &Path) -> Result<()> {
    let mut w = csv_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record(CHANNEL_COLUMNS).map_err(csv_err)?;
    for (t, h) in tensor.matrices.iter().enumerate() {
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                let z = h[(i, j)];
                w.write_record([
                    t.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    let header = ChannelHeader {
        format: FORMAT_TAG.to_string(),
        tone_plan: tensor.tone_plan.clone(),
        direction: tensor.direction,
        binder: tensor.binder.clone(),
        params: tensor.params.clone(),
    };
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    std::fs::write(sidecar_path(csv_path), text)?;
    Ok(())
}

pub fn import_channel(csv_path: &Path) -> Result<ChannelTensor> {
    let header: ChannelHeader = serde_json::from_reader(BufReader::new(File::open(sidecar_path(csv_path))?))?;
    if header.format != FORMAT_TAG {
        return Err(Error::Format(format!("unsupported channel format `{}`", header.format)));
    }
    header.tone_plan.validate()?;
    header.binder.validate()?;
    let k = header.binder.num_lines();
    let tones = header.tone_plan.num_tones;
    let mut matrices = vec![DMatrix::<Complex64>::zeros(k, k); tones];
    let mut seen = vec![false; tones * k * k];

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(File::open(csv_path)?));
    let cols = rdr.headers().map_err(csv_err)?.clone();
    if cols.iter().ne(CHANNEL_COLUMNS) {
        return Err(Error::Format(format!(
            "channel CSV columns must be {CHANNEL_COLUMNS:?}, got {cols:?}"
        )));
    }
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| Error::Format(format!("row {}: bad {what}", line + 2));
        let t: usize = rec[0].parse().map_err(|_| bad("tone"))?;
        let i: usize = rec[1].parse().map_err(|_| bad("i"))?;
        let j: usize = rec[2].parse().map_err(|_| bad("j"))?;
        let re: f64 = rec[3].parse().map_err(|_| bad("re"))?;
        let im: f64 = rec[4].parse().map_err(|_| bad("im"))?;
        if t >= tones || i >= k || j >= k {
            return Err(bad("index"));
        }
        let slot = (t * k + i) * k + j;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::Format(format!(
                "row {}: duplicate entry ({t}, {i}, {j})",
                line + 2
            )));
        }
        matrices[t][(i, j)] = Complex64::new(re, im);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let (t, rest) = (missing / (k * k), missing % (k * k));
        return Err(Error::Format(format!(
            "missing entry ({t}, {}, {})",
            rest / k,
            rest % k
        )));
    }
    Ok(ChannelTensor {
        tone_plan: header.tone_plan,
        direction: header.direction,
        binder: header.binder,
        params: header.params,
        matrices,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synth_channel;

    fn small_tensor() -> ChannelTensor {
        let plan = TonePlan::custom("tiny", 51_750.0, 16, 51_750.0).unwrap();
        let binder = BinderConfig::uniform(3, 20.0, 60.0, 5).unwrap();
        synth_channel(&binder, &plan, &ChannelModelParams::default(), Direction::Downstream).unwrap()
    }

    #[test]
    fn export_then_import_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let tensor = small_tensor();
        export_channel(&tensor, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = import_channel(&path).unwrap();
        assert_eq!(back, tensor);
    }

    #[test]
    fn truncated_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        export_channel(&small_tensor(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(20).collect();
        std::fs::write(&path, cut.join("\n") + "\n").unwrap();
        let err = import_channel(&path).unwrap_err();
        assert!(err.to_string().contains("missing entry"), "{err}");
    }

    #[test]
    fn renamed_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        export_channel(&small_tensor(), &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("re,im", "real,imag", 1);
        std::fs::write(&path, text).unwrap();
        assert!(import_channel(&path).is_err());
    }
}
