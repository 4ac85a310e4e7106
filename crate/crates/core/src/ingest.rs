//! CSV ingestion: raw per-item inspection rows or pre-aggregated per-type
//! counts, grouping by design attributes, and business-volume ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::TypeCounts;

/// Outcome of inspecting one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InspectionResult {
    NotInspected = 0,
    Passed = 1,
    Failed = 2,
}

impl InspectionResult {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::NotInspected),
            1 => Some(Self::Passed),
            2 => Some(Self::Failed),
            _ => None,
        }
    }

    pub fn is_inspected(self) -> bool {
        self != Self::NotInspected
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InspectionRecord {
    pub item_id: Option<String>,
    pub attributes: Vec<(String, String)>,
    pub result: InspectionResult,
}

/// Column names for raw per-item files.
#[derive(Debug, Clone)]
pub struct RawSchema {
    pub item_id_column: Option<String>,
    pub attribute_columns: Vec<String>,
    pub result_column: String,
}

/// Column names for per-type aggregated files.
#[derive(Debug, Clone)]
pub struct AggregatedSchema {
    pub type_column: String,
    pub attribute_columns: Vec<String>,
    /// When `None`, a column named `total` is used if present.
    pub total_column: Option<String>,
    pub inspected_column: String,
    pub repaired_column: String,
}

impl Default for AggregatedSchema {
    fn default() -> Self {
        Self {
            type_column: "type_id".into(),
            attribute_columns: Vec::new(),
            total_column: None,
            inspected_column: "inspected".into(),
            repaired_column: "repaired".into(),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_owned(),
        })
}

/// Reads raw inspection rows from a CSV file.
pub fn read_raw(path: impl AsRef<Path>, schema: &RawSchema) -> Result<Vec<InspectionRecord>> {
    let path = path.as_ref();
    read_raw_from(open(path)?, path, schema)
}

/// As [`read_raw`], over any reader; `path` is used only in diagnostics.
pub fn read_raw_from<R: Read>(
    input: R,
    path: &Path,
    schema: &RawSchema,
) -> Result<Vec<InspectionRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let item_idx = schema
        .item_id_column
        .as_deref()
        .map(|c| column_index(&headers, c, path))
        .transpose()?;
    let attr_idx = schema
        .attribute_columns
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<Vec<_>>>()?;
    let result_idx = column_index(&headers, &schema.result_column, path)?;

    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        let raw = rec.get(result_idx).unwrap_or("");
        let result = raw
            .parse::<u8>()
            .ok()
            .and_then(InspectionResult::from_code)
            .ok_or_else(|| Error::BadValue {
                path: path.to_path_buf(),
                line,
                detail: format!(
                    "inspection result `{raw}` in column `{}` must be 0, 1 or 2",
                    schema.result_column
                ),
            })?;
        out.push(InspectionRecord {
            item_id: item_idx.map(|i| rec.get(i).unwrap_or("").to_owned()),
            attributes: schema
                .attribute_columns
                .iter()
                .zip(&attr_idx)
                .map(|(name, &i)| (name.clone(), rec.get(i).unwrap_or("").to_owned()))
                .collect(),
            result,
        });
    }
    Ok(out)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Groups records by the named attributes and counts total, inspected and
/// failed items per group.
///
/// Output is sorted by total (descending), ties by attribute values, and
/// types are numbered `1..` in that order, so the result does not depend on
/// record order.
pub fn aggregate(records: &[InspectionRecord], group_by: &[String]) -> Result<Vec<TypeCounts>> {
    let mut groups: BTreeMap<Vec<String>, (u64, u64, u64)> = BTreeMap::new();
    for (row, rec) in records.iter().enumerate() {
        let key = group_by
            .iter()
            .map(|name| {
                rec.attributes
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| {
                        Error::InconsistentInput(format!(
                            "record {row} has no attribute `{name}` to group by"
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let entry = groups.entry(key).or_default();
        entry.0 += 1;
        if rec.result.is_inspected() {
            entry.1 += 1;
        }
        if rec.result == InspectionResult::Failed {
            entry.2 += 1;
        }
    }
    let mut rows: Vec<_> = groups.into_iter().collect();
    rows.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(&b.0)));
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (values, (total, inspected, repaired)))| TypeCounts {
            type_id: (i + 1).to_string(),
            attributes: group_by.iter().cloned().zip(values).collect(),
            total: Some(total),
            inspected,
            repaired,
        })
        .collect())
}

/// Reads per-type counts from a CSV file.
pub fn read_aggregated(
    path: impl AsRef<Path>,
    schema: &AggregatedSchema,
) -> Result<Vec<TypeCounts>> {
    let path = path.as_ref();
    read_aggregated_from(open(path)?, path, schema)
}

pub fn read_aggregated_from<R: Read>(
    input: R,
    path: &Path,
    schema: &AggregatedSchema,
) -> Result<Vec<TypeCounts>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let type_idx = column_index(&headers, &schema.type_column, path)?;
    let attr_idx = schema
        .attribute_columns
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<Vec<_>>>()?;
    let total_idx = match &schema.total_column {
        Some(c) => Some(column_index(&headers, c, path)?),
        None => headers.iter().position(|h| h == "total"),
    };
    let inspected_idx = column_index(&headers, &schema.inspected_column, path)?;
    let repaired_idx = column_index(&headers, &schema.repaired_column, path)?;

    let count = |rec: &csv::StringRecord, idx: usize, name: &str| -> Result<u64> {
        let raw = rec.get(idx).unwrap_or("");
        raw.parse::<u64>().map_err(|_| Error::BadValue {
            path: path.to_path_buf(),
            line: line_of(rec),
            detail: format!("`{raw}` in column `{name}` is not a non-negative integer"),
        })
    };

    let mut out: Vec<TypeCounts> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        let type_id = rec.get(type_idx).unwrap_or("").to_owned();
        if out.iter().any(|c| c.type_id == type_id) {
            return Err(Error::DuplicateLabel(type_id));
        }
        let counts = TypeCounts {
            attributes: schema
                .attribute_columns
                .iter()
                .zip(&attr_idx)
                .map(|(name, &i)| (name.clone(), rec.get(i).unwrap_or("").to_owned()))
                .collect(),
            total: total_idx
                .map(|i| count(&rec, i, headers.get(i).unwrap_or("total")))
                .transpose()?,
            inspected: count(&rec, inspected_idx, &schema.inspected_column)?,
            repaired: count(&rec, repaired_idx, &schema.repaired_column)?,
            type_id,
        };
        counts.validate().map_err(|e| match e {
            Error::InconsistentCounts {
                inspected,
                repaired,
                ..
            } => Error::InconsistentCounts {
                context: format!("{}: line {line}: type {}", path.display(), counts.type_id),
                inspected,
                repaired,
            },
            Error::InspectedExceedsTotal {
                total, inspected, ..
            } => Error::InspectedExceedsTotal {
                context: format!("{}: line {line}: type {}", path.display(), counts.type_id),
                total,
                inspected,
            },
            other => other,
        })?;
        out.push(counts);
    }
    Ok(out)
}

/// Business share of each type, in descending-volume order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusinessSummary {
    pub grand_total: u64,
    pub rows: Vec<BusinessRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusinessRow {
    pub type_id: String,
    pub total: u64,
    pub fraction: f64,
    pub cumulative: f64,
}

impl BusinessSummary {
    pub fn fraction_of(&self, type_id: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.type_id == type_id)
            .map(|r| r.fraction)
    }

    pub fn fractions(&self) -> std::collections::HashMap<String, f64> {
        self.rows
            .iter()
            .map(|r| (r.type_id.clone(), r.fraction))
            .collect()
    }
}

/// Orders type ids numerically when both parse as integers, else lexically.
pub fn compare_type_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Ranks types by total volume and keeps the first `n`.
///
/// Fractions are taken against `grand_total` when given (e.g. the whole
/// production history when only the top rows were exported), otherwise
/// against the sum over `counts`.
pub fn top_n_by_business(
    counts: &[TypeCounts],
    n: usize,
    grand_total: Option<u64>,
) -> Result<(Vec<TypeCounts>, BusinessSummary)> {
    if n > counts.len() {
        return Err(Error::InvalidTopN {
            requested: n,
            available: counts.len(),
        });
    }
    let totals = counts
        .iter()
        .map(|c| c.total.ok_or_else(|| Error::CannotRank(c.type_id.clone())))
        .collect::<Result<Vec<u64>>>()?;
    let sum: u64 = totals.iter().sum();
    let grand_total = grand_total.unwrap_or(sum);
    if grand_total < sum {
        return Err(Error::InconsistentInput(format!(
            "grand total {grand_total} is below the sum of type totals {sum}"
        )));
    }

    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&i, &j| {
        totals[j]
            .cmp(&totals[i])
            .then_with(|| compare_type_ids(&counts[i].type_id, &counts[j].type_id))
    });
    order.truncate(n);

    let mut running = 0u64;
    let rows = order
        .iter()
        .map(|&i| {
            running += totals[i];
            BusinessRow {
                type_id: counts[i].type_id.clone(),
                total: totals[i],
                fraction: ratio(totals[i], grand_total),
                cumulative: ratio(running, grand_total),
            }
        })
        .collect();
    let selected = order.iter().map(|&i| counts[i].clone()).collect();
    Ok((selected, BusinessSummary { grand_total, rows }))
}

fn ratio(x: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        x as f64 / total as f64
    }
}

/// Expands counts back into synthetic per-item records.
pub fn expand(counts: &TypeCounts) -> Vec<InspectionRecord> {
    let total = counts.total.unwrap_or(counts.inspected);
    let failed = counts.repaired;
    let passed = counts.inspected - counts.repaired;
    let skipped = total - counts.inspected;
    let make = |result| InspectionRecord {
        item_id: None,
        attributes: counts.attributes.clone(),
        result,
    };
    std::iter::repeat_with(|| make(InspectionResult::NotInspected))
        .take(skipped as usize)
        .chain(std::iter::repeat_with(|| make(InspectionResult::Passed)).take(passed as usize))
        .chain(std::iter::repeat_with(|| make(InspectionResult::Failed)).take(failed as usize))
        .collect()
}

/// Source file used in diagnostics when reading from memory.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}
