//! Study output tables and their CSV/JSON encodings.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Whether one region, built at one nominal level in one replicate, contained the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub family: String,
    /// The simulation cell, e.g. `p=0.5,m=100`.
    pub cell: String,
    /// Region kind and the metric or parameter it is built on.
    pub region: String,
    pub level: f64,
    pub replicate: usize,
    pub contained: bool,
    /// Radius, interval length or box area; empty when the region is unbounded.
    pub size: Option<f64>,
}

/// A per-replicate scalar that is not a coverage indicator (MAD, acceptance
/// rate, count of unbounded draws, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub family: String,
    pub cell: String,
    pub replicate: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutput {
    pub coverage: Vec<CoverageRecord>,
    pub values: Vec<ValueRecord>,
}

/// Empirical coverage of one (cell, region, level) over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub family: String,
    pub cell: String,
    pub region: String,
    pub level: f64,
    pub replicates: usize,
    pub coverage: f64,
    /// Median of the finite region sizes.
    pub median_size: Option<f64>,
}

pub fn summarize(records: &[CoverageRecord]) -> Vec<CoverageSummary> {
    let mut groups: BTreeMap<(String, String, String, u64), Vec<&CoverageRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.family.clone(),
                r.cell.clone(),
                r.region.clone(),
                r.level.to_bits(),
            ))
            .or_default()
            .push(r);
    }
    let mut out: Vec<CoverageSummary> = groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let hits = rs.iter().filter(|r| r.contained).count();
            let mut sizes: Vec<f64> = rs
                .iter()
                .filter_map(|r| r.size)
                .filter(|s| s.is_finite())
                .collect();
            sizes.sort_by(f64::total_cmp);
            CoverageSummary {
                family: first.family.clone(),
                cell: first.cell.clone(),
                region: first.region.clone(),
                level: first.level,
                replicates: rs.len(),
                coverage: hits as f64 / rs.len() as f64,
                median_size: (!sizes.is_empty())
                    .then(|| gfi_core::numerics::quantile_sorted(&sizes, 0.5)),
            }
        })
        .collect();
    // keep cells in the order they first appear in the records
    let order: BTreeMap<String, usize> = records
        .iter()
        .enumerate()
        .rev()
        .map(|(i, r)| (r.cell.clone(), i))
        .collect();
    out.sort_by(|a, b| {
        order[&a.cell]
            .cmp(&order[&b.cell])
            .then(a.region.cmp(&b.region))
            .then(a.level.total_cmp(&b.level))
    });
    out
}

/// Looks up the summary of one (cell, region, level).
pub fn find<'a>(
    summary: &'a [CoverageSummary],
    cell: &str,
    region: &str,
    level: f64,
) -> Option<&'a CoverageSummary> {
    summary
        .iter()
        .find(|s| s.cell == cell && s.region == region && (s.level - level).abs() < 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_table<T: Serialize, W: Write>(
    rows: &[T],
    format: Format,
    mut w: W,
) -> Result<(), HarnessError> {
    match format {
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in rows {
                cw.serialize(r)?;
            }
            cw.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn read_table<T: DeserializeOwned, R: Read>(
    format: Format,
    r: R,
) -> Result<Vec<T>, HarnessError> {
    match format {
        Format::Csv => {
            let mut cr = csv::Reader::from_reader(r);
            cr.deserialize()
                .map(|row| row.map_err(HarnessError::from))
                .collect()
        }
        Format::Json => Ok(serde_json::from_reader(r)?),
    }
}

pub fn to_bytes<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, HarnessError> {
    let mut buf = Vec::new();
    write_table(rows, format, &mut buf)?;
    Ok(buf)
}
