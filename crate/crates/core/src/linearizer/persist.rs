//! Key-value text persistence for linearizers.
//!
//! The files are valid TOML with every number written to 17 significant
//! digits, so a parse/serialize round trip reproduces each coefficient
//! exactly:
//!
//! ```text
//! kind = "branch"
//! activation = "onebit"
//! N = 2
//! c0 = 1.2500000000000000e-1
//! c1 = 1.0000000000000000e0
//! biases = [-3.3333333333333337e-1, 3.3333333333333326e-1]
//! weights = [5.0000000000000000e-1, -2.5000000000000000e-1]
//! lut_table = [1.2500000000000000e-1, -1.2500000000000000e-1, 3.7500000000000000e-1]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{Activation, BranchLinearizer, HammersteinLinearizer, Linearizer, LutLinearizer};

/// Formats `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
    format!("[{}]", items.join(", "))
}

pub fn serialize_linearizer(lin: &Linearizer) -> String {
    let mut out = String::new();
    match lin {
        Linearizer::Hammerstein(h) => {
            let _ = writeln!(out, "kind = \"hammerstein\"");
            let _ = writeln!(out, "K = {}", h.order());
            let _ = writeln!(out, "d = {}", format_list(h.coefficients()));
        }
        Linearizer::Branch(b) => {
            let _ = writeln!(out, "kind = \"branch\"");
            let _ = writeln!(out, "activation = \"{}\"", b.activation());
            let _ = writeln!(out, "N = {}", b.n());
            let _ = writeln!(out, "c0 = {}", format_number(b.c0()));
            let _ = writeln!(out, "c1 = {}", format_number(b.c1()));
            let _ = writeln!(out, "biases = {}", format_list(b.biases()));
            let _ = writeln!(out, "weights = {}", format_list(b.weights()));
            if let Ok(lut) = LutLinearizer::from_branch(b) {
                let _ = writeln!(out, "lut_table = {}", format_list(lut.table()));
            }
        }
        Linearizer::Lut(l) => {
            let _ = writeln!(out, "kind = \"lut\"");
            let _ = writeln!(out, "activation = \"onebit\"");
            let _ = writeln!(out, "N = {}", l.n());
            let _ = writeln!(out, "c1 = {}", format_number(l.c1()));
            let _ = writeln!(out, "lut_table = {}", format_list(l.table()));
        }
    }
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "K")]
    k: Option<usize>,
    activation: Option<Activation>,
    c0: Option<f64>,
    c1: Option<f64>,
    biases: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    d: Option<Vec<f64>>,
    lut_table: Option<Vec<f64>>,
}

fn required<T>(field: Option<T>, name: &str) -> Result<T> {
    field.ok_or_else(|| Error::parse("linearizer", format!("missing field `{name}`")))
}

fn check_count(declared: Option<usize>, name: &str, actual: usize) -> Result<()> {
    match declared {
        Some(d) if d != actual => Err(Error::parse(
            "linearizer",
            format!("`{name}` = {d} but {actual} entries"),
        )),
        _ => Ok(()),
    }
}

pub fn parse_linearizer(text: &str) -> Result<Linearizer> {
    let rec: Record = toml::from_str(text).map_err(|e| Error::parse("linearizer", e))?;
    match rec.kind.as_str() {
        "hammerstein" => {
            let d = required(rec.d, "d")?;
            check_count(rec.k, "K", d.len().saturating_sub(1))?;
            Ok(HammersteinLinearizer::new(d)?.into())
        }
        "branch" => {
            let weights = required(rec.weights, "weights")?;
            check_count(rec.n, "N", weights.len())?;
            let lin = BranchLinearizer::new(
                required(rec.c0, "c0")?,
                required(rec.c1, "c1")?,
                required(rec.biases, "biases")?,
                weights,
                required(rec.activation, "activation")?,
            )?;
            if let Some(table) = rec.lut_table {
                let lut = LutLinearizer::from_branch(&lin)?;
                if lut.table() != table.as_slice() {
                    return Err(Error::parse("linearizer", "lut_table disagrees with weights"));
                }
            }
            Ok(lin.into())
        }
        "lut" => {
            if let Some(a) = rec.activation {
                if a != Activation::OneBit {
                    return Err(Error::NotLutCompatible(format!("activation {a}")));
                }
            }
            let table = required(rec.lut_table, "lut_table")?;
            check_count(rec.n, "N", table.len().saturating_sub(1))?;
            Ok(LutLinearizer::new(required(rec.c1, "c1")?, table)?.into())
        }
        other => Err(Error::parse("linearizer", format!("unknown kind {other:?}"))),
    }
}

pub fn save_linearizer(lin: &Linearizer, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_linearizer(lin)).map_err(|e| Error::io(path, e))
}

pub fn load_linearizer(path: &Path) -> Result<Linearizer> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_linearizer(&text)
}
