//! Labeled categorical datasets: loading, vocabularies and frequency estimates.
//!
//! Input is delimited text with a header row. Values are opaque strings; token ids follow
//! first occurrence in file order. Labels accept `0`, `1`, `true` and `false` in any case.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hardgen::Graph;
use crate::joint_eval::{JointColumn, JointTable, DEFAULT_PAIR_CAP};
use crate::mass::{parse_exact, Exact, Mass};
use crate::measures::Measure;
use crate::nb_model::{ColumnModel, ConditionalPair, NbObjective};
use crate::score_dist::ConvolveConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub label_column: String,
    pub delimiter: u8,
    /// Feature columns in the order given; `None` means every non-label column.
    pub feature_columns: Option<Vec<String>>,
    /// Additive smoothing; 0 keeps the empirical frequencies.
    pub smoothing_alpha: f64,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, label_column: impl Into<String>) -> Self {
        DatasetSpec {
            path: path.into(),
            label_column: label_column.into(),
            delimiter: b',',
            feature_columns: None,
            smoothing_alpha: 0.0,
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    pub fn with_features(mut self, columns: Vec<String>) -> Self {
        self.feature_columns = Some(columns);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.smoothing_alpha = alpha;
        self
    }
}

/// Per-label value counts of one column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnStats {
    pub name: String,
    /// Value strings indexed by token id.
    pub vocabulary: Vec<String>,
    index: BTreeMap<String, u32>,
    /// `counts[label][token]`.
    pub counts: [Vec<u64>; 2],
    /// Rows per label.
    pub n: [u64; 2],
}

impl ColumnStats {
    fn new(name: String) -> Self {
        ColumnStats {
            name,
            vocabulary: Vec::new(),
            index: BTreeMap::new(),
            counts: [Vec::new(), Vec::new()],
            n: [0, 0],
        }
    }

    pub fn token(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    fn observe(&mut self, value: &str, label: u8) {
        let id = intern(&mut self.vocabulary, &mut self.index, value);
        if id as usize == self.counts[0].len() {
            self.counts[0].push(0);
            self.counts[1].push(0);
        }
        self.counts[label as usize][id as usize] += 1;
        self.n[label as usize] += 1;
    }
}

fn intern(vocabulary: &mut Vec<String>, index: &mut BTreeMap<String, u32>, value: &str) -> u32 {
    if let Some(&id) = index.get(value) {
        return id;
    }
    let id = vocabulary.len() as u32;
    vocabulary.push(value.to_string());
    index.insert(value.to_string(), id);
    id
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub columns: Vec<ColumnStats>,
    pub rows: u64,
    /// Rows per label.
    pub label_counts: [u64; 2],
}

impl Dataset {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

pub fn parse_label(s: &str) -> Option<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "0" | "false" => Some(0),
        "1" | "true" => Some(1),
        _ => None,
    }
}

struct Layout {
    label: usize,
    features: Vec<(usize, String)>,
}

fn resolve_layout(spec: &DatasetSpec, header: &csv::StringRecord, wanted: Option<&[String]>) -> Result<Layout> {
    let names: Vec<&str> = header.iter().collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column name {n:?}"),
            });
        }
    }
    let label = names
        .iter()
        .position(|n| *n == spec.label_column)
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!(
                "label column {:?} not found in header {:?} (delimiter {:?})",
                spec.label_column,
                header.as_slice(),
                spec.delimiter as char
            ),
        })?;
    let features = match wanted {
        None => names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label)
            .map(|(i, n)| (i, n.to_string()))
            .collect(),
        Some(list) => list
            .iter()
            .map(|want| {
                if *want == spec.label_column {
                    return Err(Error::InvalidArgument(format!("{want:?} is the label column")));
                }
                names
                    .iter()
                    .position(|n| n == want)
                    .map(|i| (i, want.clone()))
                    .ok_or_else(|| Error::UnknownColumn(want.clone()))
            })
            .collect::<Result<_>>()?,
    };
    Ok(Layout { label, features })
}

/// Streams the data rows, calling `row(line, label, record)` for each.
fn scan<R, F>(spec: &DatasetSpec, input: R, wanted: Option<&[String]>, mut row: F) -> Result<Layout>
where
    R: Read,
    F: FnMut(&Layout, u8, &csv::StringRecord) -> Result<()>,
{
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Empty(format!("{} has no header row", spec.path.display())));
    }
    let layout = resolve_layout(spec, &header, wanted)?;
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let label = parse_label(&record[layout.label]).ok_or_else(|| Error::Parse {
            line,
            message: format!("label {:?} is not one of 0, 1, true, false", &record[layout.label]),
        })?;
        row(&layout, label, &record)?;
    }
    Ok(layout)
}

fn check_labels(n: [u64; 2]) -> Result<()> {
    if n[0] == 0 || n[1] == 0 {
        return Err(Error::DegenerateLabel(format!(
            "{} rows with label 0 and {} with label 1; both classes are required",
            n[0], n[1]
        )));
    }
    Ok(())
}

/// One streaming pass over the file: vocabularies and per-label counts of every feature
/// column.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    load_dataset_from(spec, File::open(&spec.path)?)
}

/// [`load_dataset`] on an arbitrary reader; `spec.path` is only used in messages.
pub fn load_dataset_from<R: Read>(spec: &DatasetSpec, input: R) -> Result<Dataset> {
    let mut columns: Vec<ColumnStats> = Vec::new();
    let mut n = [0u64; 2];
    let layout = scan(spec, input, spec.feature_columns.as_deref(), |layout, label, rec| {
        if columns.is_empty() && !layout.features.is_empty() {
            columns = layout
                .features
                .iter()
                .map(|(_, name)| ColumnStats::new(name.clone()))
                .collect();
        }
        for ((i, _), stats) in layout.features.iter().zip(columns.iter_mut()) {
            stats.observe(&rec[*i], label);
        }
        n[label as usize] += 1;
        Ok(())
    })?;
    check_labels(n)?;
    if columns.is_empty() {
        columns = layout
            .features
            .iter()
            .map(|(_, name)| ColumnStats::new(name.clone()))
            .collect();
    }
    Ok(Dataset {
        columns,
        rows: n[0] + n[1],
        label_counts: n,
    })
}

/// `P_i(v) = (count_i(v) + α) / (n_i + α|V|)`. With `α = 0` these are the empirical
/// frequencies, exact in exact mode.
pub fn build_conditionals<M: Mass>(stats: &ColumnStats, alpha: f64) -> Result<ConditionalPair<M>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "smoothing alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    check_labels(stats.n)?;
    let a = M::from_f64(alpha);
    let size = M::from_ratio(stats.vocabulary.len() as u64, 1);
    let measure = |label: usize| {
        let z = M::from_ratio(stats.n[label], 1) + a.clone() * &size;
        Measure::from_masses(
            stats.counts[label]
                .iter()
                .map(|&c| (M::from_ratio(c, 1) + &a) / &z)
                .collect(),
        )
    };
    ConditionalPair::new(measure(1)?, measure(0)?)
}

/// Naive-Bayes objective over all loaded columns; ids are column positions.
pub fn build_objective<M: Mass>(dataset: &Dataset, alpha: f64, config: ConvolveConfig) -> Result<NbObjective<M>> {
    let columns = dataset
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| ColumnModel::new(i, c.name.clone(), c.vocabulary.clone(), build_conditionals(c, alpha)?))
        .collect::<Result<_>>()?;
    NbObjective::new(columns, config)
}

/// Empirical joint table of the named columns and the label; masses are counts over the row
/// count. Rejects crosses with `|V_A|² > pair_cap`.
pub fn build_joint_table<M: Mass>(spec: &DatasetSpec, columns: &[String], pair_cap: u128) -> Result<JointTable<M>> {
    build_joint_table_from(spec, File::open(&spec.path)?, columns, pair_cap)
}

pub fn build_joint_table_from<M: Mass, R: Read>(
    spec: &DatasetSpec,
    input: R,
    columns: &[String],
    pair_cap: u128,
) -> Result<JointTable<M>> {
    let mut vocab: Vec<(Vec<String>, BTreeMap<String, u32>)> = vec![Default::default(); columns.len()];
    let mut counts: BTreeMap<(Vec<u32>, u8), u64> = BTreeMap::new();
    let mut n = [0u64; 2];
    scan(spec, input, Some(columns), |layout, label, rec| {
        let key = layout
            .features
            .iter()
            .zip(vocab.iter_mut())
            .map(|((i, _), (v, idx))| intern(v, idx, &rec[*i]))
            .collect();
        *counts.entry((key, label)).or_insert(0) += 1;
        n[label as usize] += 1;
        Ok(())
    })?;
    check_labels(n)?;
    let total = n[0] + n[1];
    let cols: Vec<JointColumn> = columns
        .iter()
        .zip(vocab)
        .map(|(name, (v, _))| JointColumn::new(name.clone(), v))
        .collect();
    let rows = counts.into_iter().map(|((k, c), m)| (k, c, M::from_ratio(m, total)));
    let table = JointTable::new(cols, rows)?.with_pair_cap(pair_cap);
    let all: Vec<usize> = (0..columns.len()).collect();
    let size = table.cross_size(&all)?;
    if size.saturating_mul(size) > pair_cap {
        return Err(Error::capacity(
            "cross outcome pairs",
            size.saturating_mul(size),
            pair_cap,
        ));
    }
    Ok(table)
}

/// [`build_joint_table`] with the default cap.
pub fn build_joint_table_default<M: Mass>(spec: &DatasetSpec, columns: &[String]) -> Result<JointTable<M>> {
    build_joint_table(spec, columns, DEFAULT_PAIR_CAP)
}

/// Writes a joint table as delimited text: one column per feature (value strings), then
/// `label`, then `mass` as an exact fraction.
pub fn write_weighted_rows<W: Write>(out: W, table: &JointTable<Exact>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = table.columns().iter().map(|c| c.name.as_str()).collect();
    header.extend(["label", "mass"]);
    w.write_record(&header)?;
    for (values, label, mass) in table.rows() {
        let mut rec: Vec<String> = values
            .iter()
            .zip(table.columns())
            .map(|(v, c)| c.vocabulary[*v as usize].clone())
            .collect();
        rec.push(label.to_string());
        rec.push(mass.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a weighted-rows file: feature columns, the label column and a mass column holding
/// exact fractions or decimals. Masses must sum to one.
pub fn read_weighted_rows<R: Read>(input: R, label_column: &str, mass_column: &str) -> Result<JointTable<Exact>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("column {name:?} not found in header"),
        })
    };
    let (li, mi) = (find(label_column)?, find(mass_column)?);
    let feats: Vec<usize> = (0..header.len()).filter(|&i| i != li && i != mi).collect();
    let mut vocab: Vec<(Vec<String>, BTreeMap<String, u32>)> = vec![Default::default(); feats.len()];
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let label = parse_label(&rec[li]).ok_or_else(|| Error::Parse {
            line,
            message: format!("label {:?} is not one of 0, 1, true, false", &rec[li]),
        })?;
        let mass = parse_exact(&rec[mi]).ok_or_else(|| Error::Parse {
            line,
            message: format!("mass {:?} is not a number", &rec[mi]),
        })?;
        let key = feats
            .iter()
            .zip(vocab.iter_mut())
            .map(|(&i, (v, idx))| intern(v, idx, &rec[i]))
            .collect();
        rows.push((key, label, mass));
    }
    let cols = feats
        .iter()
        .zip(vocab)
        .map(|(&i, (v, _))| JointColumn::new(&header[i], v))
        .collect();
    JointTable::new(cols, rows)
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    Graph::parse_edge_list(&std::fs::read_to_string(path)?)
}
