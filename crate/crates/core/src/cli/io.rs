//! CSV files. Every file opens with `#` comment lines carrying the tool
//! version and the resolved configuration; readers skip them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::angular::{Axis, TableSet};
use crate::ensemble::AlignmentTrace;
use crate::error::{AlignError, Result};
use crate::signal::{RevivalPeak, SignalTrace};

pub const TRACE_COLUMNS: [&str; 4] = ["t_ps", "cos2x", "cos2y", "cos2z"];
pub const SIGNAL_COLUMNS: [&str; 3] = ["delay_ps", "Sx", "Sy"];

/// Comment block placed at the top of every output file.
pub fn header(config_text: Option<&str>, notes: &[String]) -> String {
    let mut out = format!("# {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    if let Some(text) = config_text {
        for line in text.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    for note in notes {
        out.push_str("# ");
        out.push_str(note);
        out.push('\n');
    }
    out
}

fn write_table<I>(path: &Path, header: &str, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(header.as_bytes())?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(columns)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?)
}

fn parse_field(record: &csv::StringRecord, index: usize, path: &Path) -> Result<f64> {
    let raw = record.get(index).unwrap_or("");
    raw.parse::<f64>().map_err(|_| {
        let line = record.position().map_or(0, |p| p.line());
        AlignError::domain(format!("{}: line {line}: `{raw}` is not a number", path.display()))
    })
}

pub fn write_trace(path: &Path, header: &str, trace: &AlignmentTrace) -> Result<()> {
    let rows = (0..trace.len()).map(|k| {
        vec![num(trace.times[k]), num(trace.cos2_x[k]), num(trace.cos2_y[k]), num(trace.cos2_z[k])]
    });
    write_table(path, header, &TRACE_COLUMNS, rows)
}

pub fn read_trace(path: &Path) -> Result<AlignmentTrace> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let position = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            AlignError::domain(format!("{}: missing column `{name}`", path.display()))
        })
    };
    let idx: Vec<usize> = TRACE_COLUMNS.iter().map(|c| position(c)).collect::<Result<_>>()?;
    let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for record in rdr.records() {
        let record = record?;
        for (col, &i) in cols.iter_mut().zip(&idx) {
            col.push(parse_field(&record, i, path)?);
        }
    }
    let [t, x, y, z] = cols;
    AlignmentTrace::new(t, x, y, z)
}

pub fn write_signal(path: &Path, header: &str, signal: &SignalTrace) -> Result<()> {
    let mut columns = vec![SIGNAL_COLUMNS[0]];
    let mut data: Vec<&[f64]> = Vec::new();
    for (axis, name) in [(Axis::X, SIGNAL_COLUMNS[1]), (Axis::Y, SIGNAL_COLUMNS[2])] {
        if let Some(values) = signal.axis(axis) {
            columns.push(name);
            data.push(values);
        }
    }
    let rows = (0..signal.len()).map(|k| {
        let mut row = vec![num(signal.delays[k])];
        row.extend(data.iter().map(|col| num(col[k])));
        row
    });
    write_table(path, header, &columns, rows)
}

/// Reads `delay_ps` plus whichever of `Sx` and `Sy` are present.
pub fn read_signal(path: &Path) -> Result<SignalTrace> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let delay = find(SIGNAL_COLUMNS[0])
        .ok_or_else(|| AlignError::domain(format!("{}: missing column `delay_ps`", path.display())))?;
    let (ix, iy) = (find(SIGNAL_COLUMNS[1]), find(SIGNAL_COLUMNS[2]));
    if ix.is_none() && iy.is_none() {
        return Err(AlignError::domain(format!("{}: needs an Sx or Sy column", path.display())));
    }
    let (mut delays, mut sx, mut sy) = (Vec::new(), Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record?;
        delays.push(parse_field(&record, delay, path)?);
        if let Some(i) = ix {
            sx.push(parse_field(&record, i, path)?);
        }
        if let Some(i) = iy {
            sy.push(parse_field(&record, i, path)?);
        }
    }
    SignalTrace::new(delays, ix.map(|_| sx), iy.map(|_| sy))
}

/// One row per revival index found on either axis.
pub fn write_peaks(path: &Path, header: &str, peaks_x: &[RevivalPeak], peaks_y: &[RevivalPeak]) -> Result<()> {
    let mut indices: Vec<u32> = peaks_x.iter().chain(peaks_y).map(|p| p.index).collect();
    indices.sort_unstable();
    indices.dedup();
    let find = |list: &[RevivalPeak], i: u32| list.iter().find(|p| p.index == i).copied();
    let rows = indices.into_iter().map(|i| {
        let (px, py) = (find(peaks_x, i), find(peaks_y, i));
        let ratio = match (px, py) {
            (Some(x), Some(y)) => num(x.height / y.height),
            _ => String::new(),
        };
        vec![
            i.to_string(),
            px.map_or(String::new(), |p| num(p.time)),
            px.map_or(String::new(), |p| num(p.height)),
            py.map_or(String::new(), |p| num(p.time)),
            py.map_or(String::new(), |p| num(p.height)),
            ratio,
        ]
    });
    write_table(path, header, &["index", "tx_ps", "Sx", "ty_ps", "Sy", "Sx_over_Sy"], rows)
}

/// One row of the ellipticity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub a2: f64,
    pub peak_y: f64,
    pub peak_x: f64,
    pub time_y: f64,
    pub time_x: f64,
    /// Peaks divided by their own a² = 0 values.
    pub norm_y: f64,
    pub norm_x: f64,
    /// Closed-form superposition estimates in the same normalization.
    pub closed_y: f64,
    pub closed_x: f64,
}

pub const SCAN_COLUMNS: [&str; 9] =
    ["a2", "Sy_peak", "Sx_peak", "ty_ps", "tx_ps", "Sy_norm", "Sx_norm", "Sy_closed", "Sx_closed"];

pub fn write_scan(path: &Path, header: &str, rows: &[ScanRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        [r.a2, r.peak_y, r.peak_x, r.time_y, r.time_x, r.norm_y, r.norm_x, r.closed_y, r.closed_x]
            .into_iter()
            .map(num)
            .collect()
    });
    write_table(path, header, &SCAN_COLUMNS, rows)
}

pub fn read_scan(path: &Path) -> Result<Vec<ScanRow>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = SCAN_COLUMNS
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| AlignError::domain(format!("{}: missing column `{c}`", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let v: Vec<f64> = idx.iter().map(|&i| parse_field(&record, i, path)).collect::<Result<_>>()?;
        rows.push(ScanRow {
            a2: v[0],
            peak_y: v[1],
            peak_x: v[2],
            time_y: v[3],
            time_x: v[4],
            norm_y: v[5],
            norm_x: v[6],
            closed_y: v[7],
            closed_x: v[8],
        });
    }
    Ok(rows)
}

/// Full and superposition-estimated deviations from 1/3.
pub fn write_superposition(
    path: &Path,
    header: &str,
    full: &AlignmentTrace,
    approx: &crate::superposition::SuperposedTrace,
) -> Result<()> {
    let third = 1.0 / 3.0;
    let rows = (0..full.len()).map(|k| {
        vec![
            num(full.times[k]),
            num(full.cos2_x[k] - third),
            num(full.cos2_y[k] - third),
            num(approx.dev_x[k]),
            num(approx.dev_y[k]),
        ]
    });
    write_table(path, header, &["t_ps", "full_dx", "full_dy", "approx_dx", "approx_dy"], rows)
}

/// Every nonzero ⟨J',M'|cos²θ_axis|J,M⟩ with J, J' ≤ `tables.j_max()`.
pub fn write_tables(path: &Path, header: &str, tables: &TableSet) -> Result<()> {
    let mut rows = Vec::new();
    for axis in Axis::ALL {
        for (bra, ket, value) in tables.get(axis).entries() {
            if value != 0.0 {
                rows.push(vec![
                    axis.label().to_string(),
                    bra.j.to_string(),
                    bra.m.to_string(),
                    ket.j.to_string(),
                    ket.m.to_string(),
                    num(value),
                ]);
            }
        }
    }
    write_table(path, header, &["axis", "J_bra", "M_bra", "J_ket", "M_ket", "value"], rows)
}
