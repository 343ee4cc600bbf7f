//! File formats: CSV series and tables, JSON reports, key=value configs.
//!
//! Every number written here uses 17 significant digits (`%.17g`), so output
//! round-trips exactly and is byte-stable across runs.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::bubble::{BubbleLabel, BubbleVerdict, Inflection};
use crate::competition::{CompetitionError, CompetitionSystem};
use crate::energy::{Constituent, ConstituentSet, EnergyError};
use crate::features::{Column, Dataset, FeatureError, FeatureLabel, FeatureScore};
use crate::fitting::{FitParams, FitReport, ModelKind};
use crate::linalg::Matrix;
use crate::series::TimeSeries;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Competition(#[from] CompetitionError),
}

fn malformed(line: u64, message: impl Into<String>) -> IoError {
    IoError::Malformed {
        line,
        message: message.into(),
    }
}

/// `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_fraction(format!("{:.*}", decimals, x))
    } else {
        let m = trim_fraction(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Serializes an `f64` with 17 significant digits; non-finite becomes `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt_g17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), IoError> {
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(malformed(1, "empty input: missing header"));
    }
    let got: Vec<&str> = headers.iter().collect();
    if got.len() != expected.len()
        || got
            .iter()
            .zip(expected)
            .any(|(g, e)| !g.eq_ignore_ascii_case(e))
    {
        return Err(malformed(
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64, IoError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| malformed(line, format!("{what}: `{field}` is not a finite number")))
}

/// Reads `t,y` with a header row.
pub fn read_series_csv<R: Read>(r: R) -> Result<TimeSeries<f64>, IoError> {
    let mut rdr = csv_reader(r);
    check_header(&mut rdr, &["t", "y"])?;
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(malformed(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let ti = parse_f64(&rec[0], line, "t")?;
        let yi = parse_f64(&rec[1], line, "y")?;
        if let Some(&prev) = t.last() {
            if ti <= prev {
                return Err(malformed(line, format!("t = {ti} does not increase")));
            }
        }
        t.push(ti);
        y.push(yi);
    }
    if t.is_empty() {
        return Err(malformed(2, "no data rows"));
    }
    TimeSeries::new(t, y).map_err(|e| malformed(0, e.to_string()))
}

pub fn write_series_csv<W: Write>(series: &TimeSeries<f64>, mut w: W) -> Result<(), IoError> {
    writeln!(w, "t,y")?;
    for (t, y) in series.iter() {
        writeln!(w, "{},{}", fmt_g17(t), fmt_g17(y))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SamplePoint {
    t: Sig17,
    y: Sig17,
}

pub fn series_json(series: &TimeSeries<f64>) -> Result<String, IoError> {
    let pts: Vec<SamplePoint> = series
        .iter()
        .map(|(t, y)| SamplePoint { t: Sig17(t), y: Sig17(y) })
        .collect();
    to_json(&pts)
}

/// `t,y1,...,yN` for series sharing one time grid.
pub fn write_wide_csv<W: Write>(paths: &[TimeSeries<f64>], mut w: W) -> Result<(), IoError> {
    let Some(first) = paths.first() else {
        writeln!(w, "t")?;
        return Ok(());
    };
    let mut header = String::from("t");
    for i in 1..=paths.len() {
        header.push_str(&format!(",y{i}"));
    }
    writeln!(w, "{header}")?;
    for (k, &t) in first.times().iter().enumerate() {
        let mut row = fmt_g17(t);
        for p in paths {
            row.push(',');
            row.push_str(&fmt_g17(p.values()[k]));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Reads `id,dof_index,energy`; rows of one id are contiguous and indexed from 0.
pub fn read_constituents_csv<R: Read>(r: R) -> Result<ConstituentSet<f64>, IoError> {
    let mut rdr = csv_reader(r);
    check_header(&mut rdr, &["id", "dof_index", "energy"])?;
    let mut out: Vec<Constituent<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(malformed(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        let dof: usize = rec[1]
            .parse()
            .map_err(|_| malformed(line, format!("dof_index `{}` is not an integer", &rec[1])))?;
        let energy = rec[2]
            .parse::<f64>()
            .map_err(|_| malformed(line, format!("energy `{}` is not a number", &rec[2])))?;
        match out.last_mut() {
            Some(c) if c.id == id => {
                if dof != c.dof_energies.len() {
                    return Err(malformed(
                        line,
                        format!("id `{id}`: expected dof_index {}, found {dof}", c.dof_energies.len()),
                    ));
                }
                c.dof_energies.push(energy);
            }
            _ => {
                if out.iter().any(|c| c.id == id) {
                    return Err(malformed(line, format!("rows for id `{id}` are not contiguous")));
                }
                if dof != 0 {
                    return Err(malformed(line, format!("id `{id}`: dof_index must start at 0, found {dof}")));
                }
                out.push(Constituent::new(id, vec![energy]));
            }
        }
    }
    Ok(ConstituentSet::new(out)?)
}

/// Reads a numeric table with a header row. Rows with a missing or
/// non-numeric cell are dropped and counted in `dropped_rows`.
pub fn read_dataset_csv<R: Read>(r: R) -> Result<Dataset<f64>, IoError> {
    let mut rdr = csv_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(malformed(1, "empty input: missing header"));
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let row: Option<Vec<f64>> = (rec.len() == headers.len())
            .then(|| {
                rec.iter()
                    .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect()
            })
            .flatten();
        match row {
            Some(row) => {
                for (col, v) in values.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            None => dropped += 1,
        }
    }
    if values[0].is_empty() {
        return Err(malformed(2, "no complete data rows"));
    }
    let columns = headers
        .iter()
        .zip(values)
        .map(|(name, values)| Column {
            name: name.to_string(),
            values,
        })
        .collect();
    let mut data = Dataset::new(columns)?;
    data.dropped_rows = dropped;
    Ok(data)
}

/// Competition system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub affinities: Vec<f64>,
    pub delta_es: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
}

impl SystemFile {
    pub fn into_system(self) -> Result<CompetitionSystem<f64>, IoError> {
        let n = self.affinities.len();
        if self.alpha.len() != n {
            return Err(CompetitionError::Dimension(format!(
                "alpha has {} rows, expected {n}",
                self.alpha.len()
            ))
            .into());
        }
        for (i, row) in self.alpha.iter().enumerate() {
            if row.len() != n {
                return Err(CompetitionError::Dimension(format!(
                    "alpha row {i} has {} entries, expected {n}",
                    row.len()
                ))
                .into());
            }
        }
        let alpha = Matrix::from_rows(&self.alpha).map_err(CompetitionError::from)?;
        Ok(CompetitionSystem::new(self.affinities, self.delta_es, alpha)?)
    }
}

pub fn read_system_json<R: Read>(r: R) -> Result<CompetitionSystem<f64>, IoError> {
    let file: SystemFile = serde_json::from_reader(r)?;
    file.into_system()
}

#[derive(Debug, Serialize)]
pub struct ParamsJson {
    pub affinity: Sig17,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<Sig17>,
    pub y0: Sig17,
}

/// Wire form of a fit: exactly `model, params, sse, aic, converged, iterations`.
/// A perfect fit has `aic: null`.
#[derive(Debug, Serialize)]
pub struct FitReportJson {
    pub model: ModelKind,
    pub params: ParamsJson,
    pub sse: Sig17,
    pub aic: Sig17,
    pub converged: bool,
    pub iterations: usize,
}

impl From<&FitReport<f64>> for FitReportJson {
    fn from(r: &FitReport<f64>) -> Self {
        let params = match r.params {
            FitParams::Logistic(p) => ParamsJson {
                affinity: Sig17(p.affinity),
                delta_e: Some(Sig17(p.delta_e)),
                y0: Sig17(p.y0),
            },
            FitParams::Exponential { affinity, y0 } => ParamsJson {
                affinity: Sig17(affinity),
                delta_e: None,
                y0: Sig17(y0),
            },
        };
        Self {
            model: r.model,
            params,
            sse: Sig17(r.sse),
            aic: Sig17(r.aic),
            converged: r.converged,
            iterations: r.iterations,
        }
    }
}

pub fn fit_report_csv(r: &FitReport<f64>) -> String {
    let p = FitReportJson::from(r);
    let opt = |v: Option<Sig17>| v.map_or(String::new(), |s| fmt_g17(s.0));
    let model = match r.model {
        ModelKind::Logistic => "logistic",
        ModelKind::Exponential => "exponential",
    };
    format!(
        "model,affinity,delta_e,y0,sse,aic,converged,iterations\n{model},{},{},{},{},{},{},{}\n",
        fmt_g17(p.params.affinity.0),
        opt(p.params.delta_e),
        fmt_g17(p.params.y0.0),
        fmt_g17(r.sse),
        fmt_g17(r.aic),
        r.converged,
        r.iterations
    )
}

#[derive(Debug, Serialize)]
pub struct InflectionJson {
    pub t: Sig17,
    pub y: Sig17,
}

#[derive(Debug, Serialize)]
pub struct BubbleVerdictJson {
    pub label: BubbleLabel,
    pub inflection: Option<InflectionJson>,
    pub logistic_fit: Option<FitReportJson>,
    pub exponential_fit: Option<FitReportJson>,
    pub disparity: Sig17,
    pub rationale: String,
}

impl From<&BubbleVerdict<f64>> for BubbleVerdictJson {
    fn from(v: &BubbleVerdict<f64>) -> Self {
        Self {
            label: v.label,
            inflection: v.inflection.map(|Inflection { t, y }| InflectionJson {
                t: Sig17(t),
                y: Sig17(y),
            }),
            logistic_fit: v.logistic_fit.as_ref().map(FitReportJson::from),
            exponential_fit: v.exponential_fit.as_ref().map(FitReportJson::from),
            disparity: Sig17(v.disparity),
            rationale: v.rationale.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FeatureScoreJson {
    pub name: String,
    pub entropy_bits: Sig17,
    pub normalized: Sig17,
    pub label: FeatureLabel,
}

impl From<&FeatureScore<f64>> for FeatureScoreJson {
    fn from(s: &FeatureScore<f64>) -> Self {
        Self {
            name: s.name.clone(),
            entropy_bits: Sig17(s.entropy_bits),
            normalized: Sig17(s.normalized),
            label: s.label,
        }
    }
}

pub fn feature_scores_csv(scores: &[FeatureScore<f64>]) -> String {
    let mut out = String::from("name,entropy_bits,normalized,label\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{},{:?}\n",
            s.name,
            fmt_g17(s.entropy_bits),
            fmt_g17(s.normalized),
            s.label
        ));
    }
    out
}

/// Flat `key = value` pairs; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, IoError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| malformed(i as u64 + 1, format!("expected key=value, found `{line}`")))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(malformed(i as u64 + 1, "empty key"));
        }
        map.insert(key.to_string(), v.trim().to_string());
    }
    Ok(map)
}
