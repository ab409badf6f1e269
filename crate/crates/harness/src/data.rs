//! Headered CSV input: counts, observation matrices and grouped responses.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::HarnessError;

fn open(path: &Path) -> Result<std::fs::File, HarnessError> {
    std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))
}

fn numeric_rows<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut cr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let header: Vec<String> = cr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in cr.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, HarnessError> {
    s.parse()
        .map_err(|_| HarnessError::Data(format!("row {line}: cannot parse '{s}'")))
}

/// Binomial counts from the first column.
pub fn read_counts<R: Read>(r: R) -> Result<Vec<u64>, HarnessError> {
    let (_, rows) = numeric_rows(r)?;
    let y: Vec<u64> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| parse(&row[0], i + 1))
        .collect::<Result<_, _>>()?;
    if y.is_empty() {
        return Err(HarnessError::Data("no counts".into()));
    }
    Ok(y)
}

pub fn read_counts_file(path: &Path) -> Result<Vec<u64>, HarnessError> {
    read_counts(open(path)?)
}

/// An `n × d` observation matrix, one observation per row.
pub fn read_matrix<R: Read>(r: R) -> Result<DMatrix<f64>, HarnessError> {
    let (header, rows) = numeric_rows(r)?;
    let d = header.len();
    let mut vals = Vec::with_capacity(rows.len() * d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(HarnessError::Data(format!(
                "row {}: expected {d} fields",
                i + 1
            )));
        }
        for v in row {
            vals.push(parse::<f64>(v, i + 1)?);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), d, &vals))
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>, HarnessError> {
    read_matrix(open(path)?)
}

/// Responses grouped for the random-effects model: `y` reordered so groups
/// are contiguous (in order of first appearance) and the group sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    pub y: Vec<f64>,
    pub group_sizes: Vec<usize>,
    pub labels: Vec<String>,
}

/// Reads columns named `y` and `group`.
pub fn read_grouped<R: Read>(r: R) -> Result<GroupedData, HarnessError> {
    let (header, rows) = numeric_rows(r)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Data(format!("missing column '{name}'")))
    };
    let (iy, ig) = (col("y")?, col("group")?);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut buckets: Vec<Vec<f64>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let g = row
            .get(ig)
            .ok_or_else(|| HarnessError::Data(format!("row {}: missing group", i + 1)))?;
        let k = *index.entry(g.clone()).or_insert_with(|| {
            labels.push(g.clone());
            buckets.push(Vec::new());
            labels.len() - 1
        });
        let v = row
            .get(iy)
            .ok_or_else(|| HarnessError::Data(format!("row {}: missing y", i + 1)))?;
        buckets[k].push(parse(v, i + 1)?);
    }
    Ok(GroupedData {
        group_sizes: buckets.iter().map(Vec::len).collect(),
        y: buckets.into_iter().flatten().collect(),
        labels,
    })
}

pub fn read_grouped_file(path: &Path) -> Result<GroupedData, HarnessError> {
    read_grouped(open(path)?)
}
