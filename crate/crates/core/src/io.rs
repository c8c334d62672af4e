//! File formats: vector CSV, sign lists, diagnostics and summary CSVs.
//! Writers render to a `String` first so callers can compare bytes; files
//! are replaced atomically through a sibling temp file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::analysis::{partial_sums, ConvergenceReport};
use crate::assignment::AssignmentReport;
use crate::blocking::BlockPlan;
use crate::error::{Error, Result};
use crate::geometry::{fmt_real, Vector};
use crate::reduction::Sign;

fn header_for(dim: usize) -> Vec<String> {
    if dim == 2 {
        vec!["x".into(), "y".into()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

/// Parses vector CSV text; `origin` names the source in error messages.
pub fn parse_vectors(text: &str, origin: &Path) -> Result<Vec<Vector>> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::domain(format!("{}: empty vector file", origin.display())));
    }
    let dim = headers.len();
    let names: Vec<&str> = headers.iter().collect();
    if names != header_for(dim) && !(dim == 2 && names == ["x1", "x2"]) {
        return Err(parse_err(
            1,
            format!("expected header {}, got {}", header_for(dim).join(","), names.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != dim {
            return Err(parse_err(
                line,
                format!("expected {dim} fields, got {}", record.len()),
            ));
        }
        let coords = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("not a finite number: {field:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(Vector::new(coords).map_err(|e| parse_err(line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Error::domain(format!("{}: no vectors in file", origin.display())));
    }
    Ok(out)
}

pub fn read_vectors(path: &Path) -> Result<Vec<Vector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(&text, path)
}

pub fn render_vectors(seq: &[Vector]) -> Result<String> {
    let dim = seq.first().map_or(2, Vector::dim);
    let mut out = header_for(dim).join(",");
    out.push('\n');
    for v in seq {
        if v.dim() != dim {
            return Err(Error::domain("vectors of mixed dimension"));
        }
        let row: Vec<String> = v.components().iter().map(|c| fmt_real(*c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn render_signs(signs: &[Sign]) -> String {
    let mut out = String::with_capacity(signs.len() * 3);
    for s in signs {
        writeln!(out, "{s}").expect("writing to a String");
    }
    out
}

pub fn parse_signs(text: &str, origin: &Path) -> Result<Vec<Sign>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse::<Sign>().map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i as u64 + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn read_signs(path: &Path) -> Result<Vec<Sign>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signs(&text, path)
}

/// Replaces `path` with `contents` via a temp file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_vectors(path: &Path, seq: &[Vector]) -> Result<()> {
    write_atomic(path, &render_vectors(seq)?)
}

/// One `+1` or `-1` per line.
pub fn write_signs(path: &Path, signs: &[Sign]) -> Result<()> {
    write_atomic(path, &render_signs(signs))
}

/// `index,sign,block_level,sx,sy,psum_norm`, one row per term. Inputs
/// outside the plane get `s1..sn` in place of `sx,sy`.
pub fn render_diagnostics(seq: &[Vector], signs: &[Sign], plan: &BlockPlan) -> Result<String> {
    let trace = partial_sums(seq, signs)?;
    let levels = plan.term_levels();
    if levels.len() != seq.len() {
        return Err(Error::domain("block plan does not match the sequence"));
    }
    let dim = seq.first().map_or(2, Vector::dim);
    let sum_cols = if dim == 2 {
        "sx,sy".to_string()
    } else {
        (1..=dim).map(|i| format!("s{i}")).collect::<Vec<_>>().join(",")
    };
    let mut out = format!("index,sign,block_level,{sum_cols},psum_norm\n");
    for (i, ((sum, norm), (sign, level))) in trace
        .sums
        .iter()
        .zip(&trace.norms)
        .zip(signs.iter().zip(&levels))
        .enumerate()
    {
        write!(out, "{},{sign},{level}", i + 1).expect("writing to a String");
        for c in sum.components() {
            write!(out, ",{}", fmt_real(*c)).expect("writing to a String");
        }
        writeln!(out, ",{}", fmt_real(*norm)).expect("writing to a String");
    }
    Ok(out)
}

/// `level,count,rounds,residual_norm,bound,ok`, one row per level `m >= 0`.
pub fn render_block_summary(report: &AssignmentReport) -> String {
    let mut out = String::from("level,count,rounds,residual_norm,bound,ok\n");
    for b in &report.blocks {
        let bound = b.bound.map_or_else(String::new, fmt_real);
        let ok = if b.bound_satisfied { "ok" } else { "FAIL" };
        writeln!(
            out,
            "{},{},{},{},{bound},{ok}",
            b.level,
            b.count,
            b.rounds,
            fmt_real(b.residual_norm)
        )
        .expect("writing to a String");
    }
    out
}

/// `level,actual,predicted,ok,intra_block_max_deviation`.
pub fn render_cauchy(report: &ConvergenceReport) -> String {
    let mut out = String::from("level,actual,predicted,ok,intra_block_max_deviation\n");
    for (row, dev) in report.cauchy.iter().zip(&report.intra_block_max_deviation) {
        let ok = if row.ok() { "ok" } else { "FAIL" };
        writeln!(
            out,
            "{},{},{},{ok},{}",
            row.level,
            fmt_real(row.actual),
            fmt_real(row.predicted),
            fmt_real(*dev)
        )
        .expect("writing to a String");
    }
    out
}
