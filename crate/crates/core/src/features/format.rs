//! Activation file formats.
//!
//! Binary: one line of JSON metadata
//! `{"layer":..,"n_features":..,"n_trials":..,"dtype":"f32le","order":"row-major","labels":[..],"trial_ids":[..]}`,
//! a `\n`, then `n_trials * n_features` little-endian f32 values.
//!
//! CSV: header `feature_0,...,feature_{F-1},label`, one row per trial. CSV
//! carries no layer or trial ids; the reader takes a layer and numbers the
//! trials `0..n`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActivationDataset, FeatureError, Label};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    layer: u32,
    n_features: usize,
    n_trials: usize,
    dtype: String,
    order: String,
    labels: Vec<Label>,
    trial_ids: Vec<String>,
}

pub fn write_binary<W: Write>(ds: &ActivationDataset, mut w: W) -> Result<(), FeatureError> {
    ds.validate()?;
    let header = Header {
        layer: ds.layer,
        n_features: ds.n_features,
        n_trials: ds.n_trials,
        dtype: "f32le".into(),
        order: "row-major".into(),
        labels: ds.labels.clone(),
        trial_ids: ds.trial_ids.clone(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut payload = Vec::with_capacity(ds.values.len() * 4);
    for v in &ds.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(r: R) -> Result<ActivationDataset, FeatureError> {
    let mut r = BufReader::new(r);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(FeatureError::Malformed("missing metadata line".into()));
    }
    let header: Header = serde_json::from_slice(&line[..line.len() - 1])?;
    if header.dtype != "f32le" || header.order != "row-major" {
        return Err(FeatureError::Malformed(format!(
            "unsupported dtype/order {}/{}",
            header.dtype, header.order
        )));
    }
    let expected = header
        .n_trials
        .checked_mul(header.n_features)
        .ok_or_else(|| FeatureError::Malformed("dimensions overflow".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected * 4 {
        return Err(FeatureError::Malformed(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            expected * 4
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let ds = ActivationDataset {
        layer: header.layer,
        n_features: header.n_features,
        n_trials: header.n_trials,
        values,
        labels: header.labels,
        trial_ids: header.trial_ids,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_csv<W: Write>(ds: &ActivationDataset, w: W) -> Result<(), FeatureError> {
    ds.validate()?;
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..ds.n_features).map(|i| format!("feature_{i}")).collect();
    header.push("label".into());
    out.write_record(&header)?;
    for t in 0..ds.n_trials {
        let mut rec: Vec<String> = ds.row(t).iter().map(|v| v.to_string()).collect();
        rec.push(label_str(ds.labels[t]).into());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R, layer: u32) -> Result<ActivationDataset, FeatureError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let n_cols = headers.len();
    if n_cols < 1 || &headers[n_cols - 1] != "label" {
        return Err(FeatureError::Malformed("last CSV column must be 'label'".into()));
    }
    let n_features = n_cols - 1;
    for (i, h) in headers.iter().take(n_features).enumerate() {
        if h != format!("feature_{i}") {
            return Err(FeatureError::Malformed(format!("unexpected column '{h}'")));
        }
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        for v in rec.iter().take(n_features) {
            values.push(
                v.trim()
                    .parse::<f32>()
                    .map_err(|e| FeatureError::Malformed(format!("bad value '{v}': {e}")))?,
            );
        }
        labels.push(parse_label(&rec[n_features])?);
    }
    let trial_ids = (0..labels.len()).map(|i| i.to_string()).collect();
    ActivationDataset::new(layer, n_features, values, labels, trial_ids)
}

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Bankrupt => "bankrupt",
        Label::Safe => "safe",
    }
}

fn parse_label(s: &str) -> Result<Label, FeatureError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "bankrupt" | "risky" | "1" => Ok(Label::Bankrupt),
        "safe" | "0" => Ok(Label::Safe),
        other => Err(FeatureError::Malformed(format!("unknown label '{other}'"))),
    }
}

/// Reads by extension: `.csv` as CSV, anything else as binary.
pub fn load(path: &Path, csv_layer: u32) -> Result<ActivationDataset, FeatureError> {
    let f = File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(f, csv_layer)
    } else {
        read_binary(f)
    }
}

pub fn save(ds: &ActivationDataset, path: &Path) -> Result<(), FeatureError> {
    let f = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv(ds, f)
    } else {
        write_binary(ds, f)
    }
}
