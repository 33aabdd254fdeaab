//! File formats: curve, profile and raw-point CSV, config and actuation
//! JSON, and reproducible JSON output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{arc_length_parameterize, CTProfile, Curve3D};
use crate::measurement::RawPointSet;
use crate::rod::{ActuationState, ManipulatorConfig};

pub const CURVE_HEADER: [&str; 3] = ["x_mm", "y_mm", "z_mm"];
pub const PROFILE_HEADER: [&str; 4] = ["s_mm", "kappa_per_mm", "tau_per_mm", "valid"];
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to nine significant digits; negative zero becomes zero.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Nine-significant-digit decimal text for `x`.
pub fn format_float(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded to nine significant digits.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = round_value(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// CSV text of 3D points, one row per point.
pub fn points_csv(points: &[Vector3<f64>]) -> String {
    let mut out = csv_line(&CURVE_HEADER.map(String::from));
    for p in points {
        out.push_str(&csv_line(&[format_float(p.x), format_float(p.y), format_float(p.z)]));
    }
    out
}

pub fn curve_csv(curve: &Curve3D) -> String {
    points_csv(curve.points())
}

pub fn profile_csv(profile: &CTProfile) -> String {
    let mut out = csv_line(&PROFILE_HEADER.map(String::from));
    for i in 0..profile.len() {
        out.push_str(&csv_line(&[
            format_float(profile.s[i]),
            format_float(profile.kappa[i]),
            format_float(profile.tau[i]),
            (profile.kappa_valid[i] as u8).to_string(),
        ]));
    }
    out
}

struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(1, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

fn parse_error(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn expect_header(t: &Table, expected: &[&str], optional: &[&str]) -> Result<()> {
    let n = t.header.len();
    let ok = n >= expected.len()
        && n <= expected.len() + optional.len()
        && t.header.iter().zip(expected.iter().chain(optional)).all(|(h, e)| h == e);
    if !ok {
        let mut want = expected.join(",");
        for o in optional {
            want.push_str(&format!("[,{o}]"));
        }
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{want}`, found `{}`", t.header.join(",")),
        });
    }
    Ok(())
}

fn field_f64(line: usize, column: &str, text: &str) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("column {column}: `{text}` is not a finite number"),
        }),
    }
}

fn table_points(t: &Table) -> Result<Vec<Vector3<f64>>> {
    t.rows
        .iter()
        .map(|(line, row)| {
            let mut p = Vector3::zeros();
            for k in 0..3 {
                p[k] = field_f64(*line, CURVE_HEADER[k], &row[k])?;
            }
            Ok(p)
        })
        .collect()
}

/// Parses curve CSV text (`x_mm,y_mm,z_mm`).
pub fn parse_curve_csv(text: &str) -> Result<Curve3D> {
    let t = read_table(text)?;
    expect_header(&t, &CURVE_HEADER, &[])?;
    arc_length_parameterize(table_points(&t)?)
}

/// Parses raw-point CSV text (`x_mm,y_mm,z_mm[,disk]`).
pub fn parse_raw_points_csv(text: &str) -> Result<RawPointSet> {
    let t = read_table(text)?;
    expect_header(&t, &CURVE_HEADER, &["disk"])?;
    let points = table_points(&t)?;
    if t.header.len() == 4 {
        let labels = t
            .rows
            .iter()
            .map(|(line, row)| {
                row[3].parse::<usize>().map_err(|_| Error::Parse {
                    line: *line,
                    message: format!("column disk: `{}` is not a disk index", row[3]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RawPointSet::with_labels(points, labels)
    } else {
        RawPointSet::new(points)
    }
}

/// Raw-point CSV text, with the disk column when labels are present.
pub fn raw_points_csv(set: &RawPointSet) -> String {
    let mut header: Vec<String> = CURVE_HEADER.map(String::from).to_vec();
    if set.labels().is_some() {
        header.push("disk".into());
    }
    let mut out = csv_line(&header);
    for (i, p) in set.points().iter().enumerate() {
        let mut row = vec![format_float(p.x), format_float(p.y), format_float(p.z)];
        if let Some(l) = set.labels() {
            row.push(l[i].to_string());
        }
        out.push_str(&csv_line(&row));
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)?.read_to_string(&mut s)?;
    Ok(s)
}

pub fn read_curve(path: &Path) -> Result<Curve3D> {
    parse_curve_csv(&read_text(path)?)
}

pub fn read_raw_points(path: &Path) -> Result<RawPointSet> {
    parse_raw_points_csv(&read_text(path)?)
}

/// Reads and validates a manipulator config JSON file.
pub fn read_config(path: &Path) -> Result<ManipulatorConfig> {
    let cfg: ManipulatorConfig = serde_json::from_str(&read_text(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_actuation(path: &Path) -> Result<ActuationState> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// SHA-256 of the config's canonical JSON.
pub fn config_hash(config: &ManipulatorConfig) -> Result<String> {
    let canonical = serde_json::to_string(&round_value(serde_json::to_value(config)?))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Record of one CLI run: what went in and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// SHA-256 of the config, absent for commands that take none.
    pub config_hash: Option<String>,
    pub overrides: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            config_hash: None,
            overrides: BTreeMap::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_config(command: &str, config: &ManipulatorConfig) -> Result<Self> {
        Ok(RunManifest {
            config_hash: Some(config_hash(config)?),
            ..Self::new(command)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(-559.123456789), "-559.123457");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(1.5e-20), "0.000000000000000000015");
        assert_eq!(to_json(&[0.1 + 0.2]).unwrap(), "[\n  0.3\n]\n");
    }

    #[test]
    fn curve_csv_round_trip() {
        let pts: Vec<Vector3<f64>> = (0..6).map(|i| Vector3::new(0.1 * i as f64, 1.0 / 7.0, -70.123456 * i as f64)).collect();
        let c = arc_length_parameterize(pts).unwrap();
        let back = parse_curve_csv(&curve_csv(&c)).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn malformed_csv_reports_line_and_column() {
        let e = parse_curve_csv("x_mm,y_mm,z_mm\n0,0,0\n1,abc,0\n").unwrap_err();
        match e {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("y_mm"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_curve_csv("a,b,c\n1,2,3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_curve_csv("x_mm,y_mm,z_mm\n1,2\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_curve_csv(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn raw_points_with_labels() {
        let set = parse_raw_points_csv("x_mm,y_mm,z_mm,disk\n0,0,0,1\n1,1,1,2\n").unwrap();
        assert_eq!(set.labels(), Some(&[1, 2][..]));
        let again = parse_raw_points_csv(&raw_points_csv(&set)).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn config_hash_is_stable() {
        let c = ManipulatorConfig::default();
        assert_eq!(config_hash(&c).unwrap(), config_hash(&c.clone()).unwrap());
        let mut d = c.clone();
        d.disk_mass += 1.0;
        assert_ne!(config_hash(&c).unwrap(), config_hash(&d).unwrap());
    }
}
