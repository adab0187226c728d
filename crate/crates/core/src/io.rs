//! CSV files for signals, spectra and result tables.
//!
//! Every writer accepts an optional comment that is emitted as a leading
//! `# ...` line; the readers skip such lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linearizer::format_number;
use crate::metrics::Spectrum;
use crate::signal::Signal;

/// Writes a header row and data rows, preceded by `# comment` if given.
pub fn write_table<I, R>(path: &Path, comment: Option<&str>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}").map_err(|e| Error::io(path, e))?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a table, checking the header; returns the data rows.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path.display().to_string(), format!("{other:?}")),
        })?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::parse(
            path.display().to_string(),
            format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| {
        Error::parse(
            path.display().to_string(),
            format!("row {line}: bad number {s:?}"),
        )
    })
}

/// `n,value`, one row per sample, `n` from 0.
pub fn write_signal_csv(path: &Path, signal: &Signal, comment: Option<&str>) -> Result<()> {
    write_table(
        path,
        comment,
        &["n", "value"],
        signal
            .samples()
            .iter()
            .enumerate()
            .map(|(n, &v)| [n.to_string(), format_number(v)]),
    )
}

pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let rows = read_table(path, &["n", "value"])?;
    let mut samples = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row[0] != i.to_string() {
            return Err(Error::parse(
                path.display().to_string(),
                format!("row {i}: sample index {:?} out of sequence", row[0]),
            ));
        }
        samples.push(parse_f64(path, i, &row[1])?);
    }
    Signal::new(samples)
}

/// `omega_over_pi,power_db`.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum, comment: Option<&str>) -> Result<()> {
    write_table(
        path,
        comment,
        &["omega_over_pi", "power_db"],
        spectrum
            .omega_over_pi
            .iter()
            .zip(&spectrum.power_db)
            .map(|(&w, &p)| [format_number(w), format_number(p)]),
    )
}

/// `signal_index,sndr_db` with indices starting at `first_index`.
pub fn write_sndr_csv(path: &Path, values: &[f64], first_index: usize, comment: Option<&str>) -> Result<()> {
    write_table(
        path,
        comment,
        &["signal_index", "sndr_db"],
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| [(first_index + i).to_string(), format_number(v)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = Signal::new(vec![0.1, -1.0 / 3.0, 2f64.sqrt() / 2.0, 0.0]).unwrap();
        write_signal_csv(&path, &s, Some("lutlin 0.1.0 seed=1")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# lutlin 0.1.0 seed=1\nn,value\n0,1.0000000000000001e-1\n"));
        assert_eq!(read_signal_csv(&path).unwrap(), s);
    }

    #[test]
    fn rejects_wrong_header_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "i,x\n0,1\n").unwrap();
        assert!(read_signal_csv(&path).is_err());
        std::fs::write(&path, "n,value\n0,1\n2,0.5\n").unwrap();
        assert!(read_signal_csv(&path).is_err());
        std::fs::write(&path, "n,value\n0,abc\n").unwrap();
        assert!(read_signal_csv(&path).is_err());
        assert!(matches!(
            read_signal_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn sndr_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_sndr_csv(&path, &[30.0, 31.5], 1, None).unwrap();
        let rows = read_table(&path, &["signal_index", "sndr_db"]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][0], "2");
    }
}
