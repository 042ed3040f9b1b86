//! Sample and density files.
//!
//! Sample files start with `schema_version,1` and `delta,<Δ>` rows, then a
//! header `index,value,small_part,big_part,jump_count`. The last three
//! columns are empty for samples without a decomposition.

use std::io::{Read, Write};

use crate::error::{LevyError, Result};
use crate::simulate::IncrementSample;
use crate::bench::SCHEMA_VERSION;

const SAMPLE_HEADER: [&str; 5] = ["index", "value", "small_part", "big_part", "jump_count"];

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sample<W: Write>(sample: &IncrementSample, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["schema_version", &SCHEMA_VERSION.to_string()])?;
    w.write_record(["delta", &fmt_f(sample.delta)])?;
    w.write_record(SAMPLE_HEADER)?;
    let d = sample.decomposition.as_ref();
    for (i, v) in sample.values.iter().enumerate() {
        let (s, b, c) = match d {
            Some(d) => (fmt_f(d.small_part[i]), fmt_f(d.big_part[i]), d.jump_count[i].to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([i.to_string(), fmt_f(*v), s, b, c])?;
    }
    w.flush()?;
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> LevyError {
    LevyError::Io(format!("line {line}: {msg}"))
}

fn parse_f(line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| bad(line, format!("not a number: {s:?}")))
}

/// Reads the increments and Δ of a sample file. Decomposition columns are
/// ignored; estimators only use the observed values.
pub fn read_sample<R: Read>(input: R) -> Result<IncrementSample> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = r.records();
    let mut next = |what: &str, line: usize| -> Result<csv::StringRecord> {
        rows.next()
            .ok_or_else(|| bad(line, format!("missing {what}")))?
            .map_err(LevyError::from)
    };
    let v = next("schema_version row", 1)?;
    if v.get(0) != Some("schema_version") {
        return Err(bad(1, "expected schema_version row"));
    }
    if v.get(1).map(str::trim) != Some(&SCHEMA_VERSION.to_string()[..]) {
        return Err(bad(1, format!("unsupported schema version {:?}", v.get(1).unwrap_or(""))));
    }
    let d = next("delta row", 2)?;
    if d.get(0) != Some("delta") {
        return Err(bad(2, "expected delta row"));
    }
    let delta = parse_f(2, d.get(1).unwrap_or(""))?;
    let h = next("header", 3)?;
    if h.get(0) != Some("index") || h.get(1) != Some("value") {
        return Err(bad(3, "expected header starting with index,value"));
    }
    let mut values = Vec::new();
    for (i, rec) in rows.enumerate() {
        let rec = rec?;
        let line = i + 4;
        values.push(parse_f(line, rec.get(1).ok_or_else(|| bad(line, "missing value"))?)?);
    }
    IncrementSample::new(delta, values)
}

/// Writes `x,value` pairs of a function on a grid.
pub fn write_density<W: Write>(xs: &[f64], f: impl Fn(f64) -> f64, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["schema_version", &SCHEMA_VERSION.to_string()])?;
    w.write_record(["x", "value"])?;
    for &x in xs {
        w.write_record([fmt_f(x), fmt_f(f(x))])?;
    }
    w.flush()?;
    Ok(())
}
