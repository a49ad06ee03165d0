//! JSON-lines I/O for vectors, matrices, and hybrid number records.
//!
//! Value records are `{"v": "<literal>"}` where the literal is an integer,
//! a dyadic `m*2^e`, or a decimal float (routed through binary64). Vector
//! files start with `{"kind":"vector","len":N}`, matrices with
//! `{"kind":"matrix","rows":R,"cols":C}` followed by row-major records.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use hrfna::{Dyadic, HybridNumber, HybridRecord, Matrix, ModulusSet};

/// Parse failure with the 1-based line number where it happened.
#[derive(Debug)]
pub struct JsonlError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for JsonlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for JsonlError {}

fn err(line: usize, message: impl Into<String>) -> JsonlError {
    JsonlError { line, message: message.into() }
}

/// Parses a value literal: integer, `m*2^e`, or a decimal float which is
/// taken through binary64 (so `0.3` means the f64 nearest 0.3).
pub fn parse_value(text: &str) -> Result<Dyadic, String> {
    let text = text.trim();
    if let Ok(d) = text.parse::<Dyadic>() {
        return Ok(d);
    }
    let f: f64 = text
        .parse()
        .map_err(|_| format!("not an integer, dyadic, or float literal: {text:?}"))?;
    Dyadic::from_f64(f).ok_or_else(|| format!("value must be finite: {text:?}"))
}

#[derive(Serialize, Deserialize)]
struct ValueRecord {
    v: String,
}

#[derive(Serialize, Deserialize)]
struct VectorHeader {
    kind: String,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct MatrixHeader {
    kind: String,
    rows: usize,
    cols: usize,
}

fn lines_of(reader: impl BufRead) -> Result<Vec<(usize, String)>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, e.to_string()))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_vector(reader: impl BufRead) -> Result<Vec<Dyadic>, JsonlError> {
    let lines = lines_of(reader)?;
    let Some(((first_no, first), rest)) = lines.split_first().map(|(f, r)| (f.clone(), r)) else {
        return Err(err(0, "empty vector file"));
    };
    let header: VectorHeader =
        serde_json::from_str(&first).map_err(|e| err(first_no, format!("bad vector header: {e}")))?;
    if header.kind != "vector" {
        return Err(err(first_no, format!("expected kind \"vector\", got {:?}", header.kind)));
    }
    if rest.len() != header.len {
        return Err(err(first_no, format!("header says {} values, file has {}", header.len, rest.len())));
    }
    let mut values = Vec::with_capacity(header.len);
    for (no, line) in rest {
        let record: ValueRecord =
            serde_json::from_str(line).map_err(|e| err(*no, format!("bad value record: {e}")))?;
        values.push(parse_value(&record.v).map_err(|e| err(*no, e))?);
    }
    Ok(values)
}

pub fn read_matrix(reader: impl BufRead) -> Result<Matrix<Dyadic>, JsonlError> {
    let lines = lines_of(reader)?;
    let Some(((first_no, first), rest)) = lines.split_first().map(|(f, r)| (f.clone(), r)) else {
        return Err(err(0, "empty matrix file"));
    };
    let header: MatrixHeader =
        serde_json::from_str(&first).map_err(|e| err(first_no, format!("bad matrix header: {e}")))?;
    if header.kind != "matrix" {
        return Err(err(first_no, format!("expected kind \"matrix\", got {:?}", header.kind)));
    }
    if rest.len() != header.rows * header.cols {
        return Err(err(
            first_no,
            format!("header says {}x{} values, file has {}", header.rows, header.cols, rest.len()),
        ));
    }
    let mut values = Vec::with_capacity(rest.len());
    for (no, line) in rest {
        let record: ValueRecord =
            serde_json::from_str(line).map_err(|e| err(*no, format!("bad value record: {e}")))?;
        values.push(parse_value(&record.v).map_err(|e| err(*no, e))?);
    }
    Ok(Matrix::from_vec(header.rows, header.cols, values))
}

pub fn write_vector(mut writer: impl Write, values: &[Dyadic]) -> std::io::Result<()> {
    let header = serde_json::to_string(&VectorHeader { kind: "vector".into(), len: values.len() })?;
    writeln!(writer, "{header}")?;
    for v in values {
        let record = serde_json::to_string(&ValueRecord { v: v.to_string() })?;
        writeln!(writer, "{record}")?;
    }
    Ok(())
}

fn is_header(line: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("kind").cloned())
        .is_some()
}

/// Converts a stream of `{"v": ...}` records to hybrid records. Vector and
/// matrix header lines are skipped.
pub fn convert_to_hybrid(
    reader: impl BufRead,
    mut writer: impl Write,
    ms: &ModulusSet,
    mantissa_bits: u32,
) -> Result<usize, JsonlError> {
    let mut converted = 0;
    for (no, line) in lines_of(reader)? {
        if is_header(&line) {
            continue;
        }
        let record: ValueRecord =
            serde_json::from_str(&line).map_err(|e| err(no, format!("bad value record: {e}")))?;
        let value = parse_value(&record.v).map_err(|e| err(no, e))?;
        // Dyadic literals encode exactly; anything else goes through the
        // mantissa window.
        let hybrid = match HybridNumber::from_dyadic_exact(&value, ms) {
            Ok(h) => h,
            Err(_) => HybridNumber::from_real(&value, ms, mantissa_bits),
        };
        let out = serde_json::to_string(&hybrid.to_record()).map_err(|e| err(no, e.to_string()))?;
        writeln!(writer, "{out}").map_err(|e| err(no, e.to_string()))?;
        converted += 1;
    }
    Ok(converted)
}

/// Converts a stream of hybrid records back to exact dyadic value records.
pub fn convert_to_values(
    reader: impl BufRead,
    mut writer: impl Write,
    ms: &ModulusSet,
) -> Result<usize, JsonlError> {
    let mut converted = 0;
    for (no, line) in lines_of(reader)? {
        if is_header(&line) {
            continue;
        }
        let record: HybridRecord =
            serde_json::from_str(&line).map_err(|e| err(no, format!("bad hybrid record: {e}")))?;
        let hybrid = HybridNumber::from_record(&record, ms).map_err(|e| err(no, e.to_string()))?;
        let out = serde_json::to_string(&ValueRecord { v: hybrid.phi(ms).to_string() })
            .map_err(|e| err(no, e.to_string()))?;
        writeln!(writer, "{out}").map_err(|e| err(no, e.to_string()))?;
        converted += 1;
    }
    Ok(converted)
}
