//! CSV interchange for matrices, traces and schedules.
//!
//! * Matrix: `n` lines of `n` comma-separated decimals, no header.
//! * Trace: header `t,epsilon,bpl,fpl,tpl`.
//! * Schedule: header `t,epsilon`.
//!
//! Reals are written with 17 significant digits so every `f64` survives a
//! round trip bit-exactly. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::schedule::BudgetSchedule;
use crate::trace::{LeakageEntry, LeakageTrace};

pub const TRACE_HEADER: [&str; 5] = ["t", "epsilon", "bpl", "fpl", "tpl"];
pub const SCHEDULE_HEADER: [&str; 2] = ["t", "epsilon"];

/// Formats a real with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn reader<R: Read>(input: R, has_headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse { line, column: 0, message: e.to_string() }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

pub(crate) fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, col: usize) -> Result<T> {
    let raw = record.get(col).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line: line_of(record),
        column: col + 1,
        message: format!("cannot parse {raw:?}"),
    })
}

pub(crate) fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected header {}, found {}", expected.join(","), found.join(",")),
        });
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn read_matrix<R: Read>(input: R) -> Result<TransitionMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader(input, false).records() {
        let record = record.map_err(csv_error)?;
        if let Some(first) = rows.first() {
            if record.len() != first.len() {
                return Err(Error::Parse {
                    line: line_of(&record),
                    column: record.len().min(first.len()) + 1,
                    message: format!("ragged row: {} fields, expected {}", record.len(), first.len()),
                });
            }
        }
        let row = (0..record.len()).map(|c| parse_field(&record, c)).collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    TransitionMatrix::new(rows)
}

pub fn write_matrix<W: Write>(m: &TransitionMatrix, mut out: W) -> std::io::Result<()> {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&p| fmt_f64(p)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<TransitionMatrix> {
    read_matrix(open(path.as_ref())?)
}

pub fn save_matrix_csv(m: &TransitionMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_matrix(m, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_trace<R: Read>(input: R, user_id: &str) -> Result<LeakageTrace> {
    let mut rdr = reader(input, true);
    check_header(rdr.headers().map_err(csv_error)?, &TRACE_HEADER)?;
    let mut entries = Vec::new();
    for record in rdr.records() {
        let r = record.map_err(csv_error)?;
        entries.push(LeakageEntry {
            t: parse_field(&r, 0)?,
            epsilon: parse_field(&r, 1)?,
            bpl: parse_field(&r, 2)?,
            fpl: parse_field(&r, 3)?,
            tpl: parse_field(&r, 4)?,
        });
    }
    LeakageTrace::from_entries(user_id, entries)
}

pub fn write_trace<W: Write>(trace: &LeakageTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", TRACE_HEADER.join(","))?;
    for e in trace.entries() {
        writeln!(out, "{},{},{},{},{}", e.t, fmt_f64(e.epsilon), fmt_f64(e.bpl), fmt_f64(e.fpl), fmt_f64(e.tpl))?;
    }
    Ok(())
}

pub fn load_trace_csv(path: impl AsRef<Path>, user_id: &str) -> Result<LeakageTrace> {
    read_trace(open(path.as_ref())?, user_id)
}

pub fn save_trace_csv(trace: &LeakageTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_trace(trace, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_schedule<R: Read>(input: R) -> Result<BudgetSchedule> {
    let mut rdr = reader(input, true);
    check_header(rdr.headers().map_err(csv_error)?, &SCHEDULE_HEADER)?;
    let mut steps = Vec::new();
    for record in rdr.records() {
        let r = record.map_err(csv_error)?;
        let t: usize = parse_field(&r, 0)?;
        if t != steps.len() + 1 {
            return Err(Error::Parse {
                line: line_of(&r),
                column: 1,
                message: format!("expected t={}, found {t}", steps.len() + 1),
            });
        }
        steps.push(parse_field(&r, 1)?);
    }
    BudgetSchedule::from_steps(steps)
}

/// Writes the first `t` budgets (all of them when the schedule is finite and
/// `t` is `None`).
pub fn write_schedule<W: Write>(schedule: &BudgetSchedule, t: Option<usize>, mut out: W) -> Result<()> {
    let steps = match t {
        Some(t) => schedule.materialize(t)?,
        None => schedule.steps().to_vec(),
    };
    let io = |e| Error::io("<schedule>", e);
    writeln!(out, "{}", SCHEDULE_HEADER.join(",")).map_err(io)?;
    for (i, e) in steps.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, fmt_f64(*e)).map_err(io)?;
    }
    Ok(())
}

pub fn load_schedule_csv(path: impl AsRef<Path>) -> Result<BudgetSchedule> {
    read_schedule(open(path.as_ref())?)
}

pub fn save_schedule_csv(schedule: &BudgetSchedule, t: Option<usize>, path: impl AsRef<Path>) -> Result<()> {
    write_schedule(schedule, t, create(path.as_ref())?)
}
