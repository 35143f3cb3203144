//! Dataset preparation: sparse-column removal, forward filling, ordinal
//! encoding of categorical columns, seeded splitting, and min–max scaling.
//!
//! The stages are plain functions over a [`Table`] so each can be tested in
//! isolation; [`process`] chains them in the canonical order. The `label`
//! column is carried through untouched by every stage.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Name of the class column; never dropped, filled, encoded, or scaled.
pub const LABEL_COLUMN: &str = "label";

/// Columns removed before training: histogram-only fields that are empty
/// on every scalar row.
pub const DROPPED_COLUMNS: [&str; 10] = [
    "count",
    "sumweights",
    "mean",
    "stddev",
    "min",
    "max",
    "underflows",
    "overflows",
    "binedges",
    "binvalues",
];

/// Minimum row count a table must have to be split.
pub const MIN_SPLIT_ROWS: usize = 10;

/// Fraction of rows assigned to the training split.
pub const TRAIN_FRACTION: f64 = 0.7;
/// Fraction of rows assigned to the validation split.
pub const VAL_FRACTION: f64 = 0.1;

/// Errors from dataset preparation.
#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    /// A required column is absent from the table.
    #[error("column {0:?} not found")]
    MissingColumn(String),
    /// Too few rows to produce non-degenerate splits.
    #[error("{n} rows is too few to split (need at least {MIN_SPLIT_ROWS})")]
    TooFewRows { n: usize },
    /// A cell that must be numeric is not.
    #[error("column {column:?} row {row} is not numeric")]
    NotNumeric { column: String, row: usize },
    /// A label cell is missing or not 0/1.
    #[error("row {row} has an invalid label")]
    BadLabel { row: usize },
    /// A CSV file could not be read or written.
    #[error("csv error for {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    /// An I/O operation failed.
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Serializing or parsing a JSON sidecar failed.
    #[error("json error for {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// One table cell: absent, free text, or a number.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Null,
    Text(String),
    Num(f64),
}

impl Cell {
    /// Parse a raw CSV field: empty is null, numeric text is a number.
    pub fn parse(field: &str) -> Self {
        if field.is_empty() {
            Cell::Null
        } else if let Ok(x) = field.parse::<f64>() {
            if x.is_finite() {
                Cell::Num(x)
            } else {
                Cell::Text(field.to_owned())
            }
        } else {
            Cell::Text(field.to_owned())
        }
    }

    /// The canonical text form used for codebooks and CSV output.
    pub fn as_text(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => format!("{x}"),
        }
    }
}

/// A rectangular, header-named table of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Index of a named column.
    pub fn column_index(&self, name: &str) -> Result<usize, PreprocessError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| PreprocessError::MissingColumn(name.to_owned()))
    }

    /// Read a headered CSV file into a table.
    pub fn read_csv(path: &Path) -> Result<Self, PreprocessError> {
        let wrap = |source: csv::Error| PreprocessError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut reader = csv::Reader::from_path(path).map_err(wrap)?;
        let columns: Vec<String> = reader
            .headers()
            .map_err(wrap)?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(wrap)?;
            rows.push(record.iter().map(Cell::parse).collect());
        }
        Ok(Self { columns, rows })
    }

    /// Write the table back out as headered CSV.
    pub fn write_csv(&self, path: &Path) -> Result<(), PreprocessError> {
        let wrap = |source: csv::Error| PreprocessError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut writer = csv::Writer::from_path(path).map_err(wrap)?;
        writer.write_record(&self.columns).map_err(wrap)?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::as_text))
                .map_err(wrap)?;
        }
        writer.flush().map_err(|source| PreprocessError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Numeric value of a cell, or an error naming the offender.
    fn numeric(&self, row: usize, col: usize) -> Result<f64, PreprocessError> {
        match self.rows[row][col] {
            Cell::Num(x) => Ok(x),
            _ => Err(PreprocessError::NotNumeric {
                column: self.columns[col].clone(),
                row,
            }),
        }
    }
}

/// Remove the histogram-only columns. Every listed column must exist —
/// a missing one means the input does not follow the expected schema.
pub fn drop_sparse_columns(table: &mut Table) -> Result<(), PreprocessError> {
    let mut indices = Vec::with_capacity(DROPPED_COLUMNS.len());
    for name in DROPPED_COLUMNS {
        indices.push(table.column_index(name)?);
    }
    indices.sort_unstable();
    for &idx in indices.iter().rev() {
        table.columns.remove(idx);
        for row in &mut table.rows {
            row.remove(idx);
        }
    }
    Ok(())
}

/// Replace nulls by the most recent earlier value in the same column.
/// Nulls before the first value take the first value; a column with no
/// values at all becomes zero.
pub fn forward_fill(table: &mut Table) {
    let n_cols = table.columns.len();
    for col in 0..n_cols {
        if table.columns[col] == LABEL_COLUMN {
            continue;
        }
        let first_value = table
            .rows
            .iter()
            .find_map(|row| match &row[col] {
                Cell::Null => None,
                cell => Some(cell.clone()),
            })
            .unwrap_or(Cell::Num(0.0));
        let mut last = first_value;
        for row in &mut table.rows {
            match &row[col] {
                Cell::Null => row[col] = last.clone(),
                cell => last = cell.clone(),
            }
        }
    }
}

/// Per-column category lists in order of first appearance. A category's
/// index is its code; strings absent from the list encode as -1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebooks {
    pub columns: BTreeMap<String, Vec<String>>,
}

impl Codebooks {
    pub fn save(&self, path: &Path) -> Result<(), PreprocessError> {
        save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        load_json(path)
    }
}

/// Replace every non-numeric column (except the label) by integer codes
/// assigned in order of first appearance, returning the codebooks so the
/// same mapping can be replayed on new data.
pub fn encode_categoricals(table: &mut Table) -> Codebooks {
    let mut books = Codebooks::default();
    let n_cols = table.columns.len();
    for col in 0..n_cols {
        if table.columns[col] == LABEL_COLUMN {
            continue;
        }
        let numeric = table
            .rows
            .iter()
            .all(|row| matches!(row[col], Cell::Num(_)));
        if numeric {
            continue;
        }
        let mut categories: Vec<String> = Vec::new();
        let mut codes: BTreeMap<String, usize> = BTreeMap::new();
        for row in &mut table.rows {
            let text = row[col].as_text();
            let code = *codes.entry(text.clone()).or_insert_with(|| {
                categories.push(text);
                categories.len() - 1
            });
            row[col] = Cell::Num(code as f64);
        }
        books.columns.insert(table.columns[col].clone(), categories);
    }
    books
}

/// Re-encode a table with existing codebooks; unseen categories become -1.
pub fn apply_codebooks(table: &mut Table, books: &Codebooks) -> Result<(), PreprocessError> {
    for (column, categories) in &books.columns {
        let col = table.column_index(column)?;
        let codes: BTreeMap<&str, usize> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        for row in &mut table.rows {
            let text = row[col].as_text();
            let code = codes.get(text.as_str()).map_or(-1.0, |&i| i as f64);
            row[col] = Cell::Num(code);
        }
    }
    Ok(())
}

/// Shuffle rows with a seeded generator and cut train/validation/test
/// splits of floor(0.7 n) / floor(0.1 n) / remainder.
pub fn split(table: &Table, seed: u64) -> Result<(Table, Table, Table), PreprocessError> {
    let n = table.n_rows();
    if n < MIN_SPLIT_ROWS {
        return Err(PreprocessError::TooFewRows { n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (TRAIN_FRACTION * n as f64).floor() as usize;
    let n_val = (VAL_FRACTION * n as f64).floor() as usize;
    let take = |range: &[usize]| Table {
        columns: table.columns.clone(),
        rows: range.iter().map(|&i| table.rows[i].clone()).collect(),
    };
    Ok((
        take(&order[..n_train]),
        take(&order[n_train..n_train + n_val]),
        take(&order[n_train + n_val..]),
    ))
}

/// Per-column ranges fitted on training data; transforms map a column
/// linearly onto [0, 1], clamping values that fall outside the fitted
/// range. A constant column maps to zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: BTreeMap<String, (f64, f64)>,
}

impl Scaler {
    /// Learn min/max of every feature column from `table`.
    pub fn fit(table: &Table) -> Result<Self, PreprocessError> {
        let mut columns = BTreeMap::new();
        for (col, name) in table.columns.iter().enumerate() {
            if name == LABEL_COLUMN {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for row in 0..table.n_rows() {
                let x = table.numeric(row, col)?;
                lo = lo.min(x);
                hi = hi.max(x);
            }
            columns.insert(name.clone(), (lo, hi));
        }
        Ok(Self { columns })
    }

    /// Scale every fitted column of `table` in place.
    pub fn apply(&self, table: &mut Table) -> Result<(), PreprocessError> {
        for (name, &(lo, hi)) in &self.columns {
            let col = table.column_index(name)?;
            for row in 0..table.n_rows() {
                let x = table.numeric(row, col)?;
                let scaled = if hi > lo {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                table.rows[row][col] = Cell::Num(scaled);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), PreprocessError> {
        save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        load_json(path)
    }
}

/// Result of the full preparation pipeline.
#[derive(Clone, Debug)]
pub struct Processed {
    pub train: Table,
    pub val: Table,
    pub test: Table,
    pub scaler: Scaler,
    pub codebooks: Codebooks,
}

/// Run the whole chain: drop sparse columns, forward-fill, encode
/// categoricals, split, then fit the scaler on the training split alone
/// and apply it to all three.
pub fn process(mut table: Table, seed: u64) -> Result<Processed, PreprocessError> {
    table.column_index(LABEL_COLUMN)?;
    drop_sparse_columns(&mut table)?;
    forward_fill(&mut table);
    let codebooks = encode_categoricals(&mut table);
    let (mut train, mut val, mut test) = split(&table, seed)?;
    let scaler = Scaler::fit(&train)?;
    scaler.apply(&mut train)?;
    scaler.apply(&mut val)?;
    scaler.apply(&mut test)?;
    Ok(Processed {
        train,
        val,
        test,
        scaler,
        codebooks,
    })
}

/// Pull a processed table apart into a feature matrix and label vector
/// for training: every non-label column becomes one feature, in column
/// order.
pub fn to_matrix(table: &Table) -> Result<(crate::nn::Tensor, Vec<u8>), PreprocessError> {
    let label_col = table.column_index(LABEL_COLUMN)?;
    let feature_cols: Vec<usize> = (0..table.columns.len())
        .filter(|&c| c != label_col)
        .collect();
    let n = table.n_rows();
    let mut data = Vec::with_capacity(n * feature_cols.len());
    let mut labels = Vec::with_capacity(n);
    for row in 0..n {
        for &col in &feature_cols {
            data.push(table.numeric(row, col)?);
        }
        let label = table
            .numeric(row, label_col)
            .map_err(|_| PreprocessError::BadLabel { row })?;
        if label == 0.0 {
            labels.push(0);
        } else if label == 1.0 {
            labels.push(1);
        } else {
            return Err(PreprocessError::BadLabel { row });
        }
    }
    let tensor = crate::nn::Tensor::from_vec(&[n, feature_cols.len()], data);
    Ok((tensor, labels))
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PreprocessError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| PreprocessError::Json {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, text).map_err(|source| PreprocessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PreprocessError> {
    let text = std::fs::read_to_string(path).map_err(|source| PreprocessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PreprocessError::Json {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_table(name: &str, cells: Vec<Cell>) -> Table {
        Table {
            columns: vec![name.to_owned()],
            rows: cells.into_iter().map(|c| vec![c]).collect(),
        }
    }

    fn nums(table: &Table, col: usize) -> Vec<f64> {
        table
            .rows
            .iter()
            .map(|row| match row[col] {
                Cell::Num(x) => x,
                _ => panic!("expected numeric cell"),
            })
            .collect()
    }

    #[test]
    fn forward_fill_propagates_last_value() {
        let mut t = column_table(
            "x",
            vec![Cell::Num(1.0), Cell::Null, Cell::Null, Cell::Num(4.0)],
        );
        forward_fill(&mut t);
        assert_eq!(nums(&t, 0), vec![1.0, 1.0, 1.0, 4.0]);
    }

    #[test]
    fn forward_fill_backfills_leading_nulls() {
        let mut t = column_table("x", vec![Cell::Null, Cell::Num(2.0), Cell::Null]);
        forward_fill(&mut t);
        assert_eq!(nums(&t, 0), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn forward_fill_zeroes_an_empty_column() {
        let mut t = column_table("x", vec![Cell::Null, Cell::Null]);
        forward_fill(&mut t);
        assert_eq!(nums(&t, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_fill_works_on_text_columns() {
        let mut t = column_table("x", vec![Cell::Null, Cell::Text("a".into()), Cell::Null]);
        forward_fill(&mut t);
        assert_eq!(t.rows[0][0], Cell::Text("a".into()));
        assert_eq!(t.rows[2][0], Cell::Text("a".into()));
    }

    #[test]
    fn dropping_removes_exactly_the_sparse_columns() {
        let mut columns: Vec<String> = DROPPED_COLUMNS.iter().map(|s| s.to_string()).collect();
        columns.insert(3, "value".to_owned());
        columns.push(LABEL_COLUMN.to_owned());
        let row: Vec<Cell> = (0..columns.len()).map(|i| Cell::Num(i as f64)).collect();
        let mut t = Table {
            columns,
            rows: vec![row],
        };
        drop_sparse_columns(&mut t).unwrap();
        assert_eq!(t.columns, vec!["value", "label"]);
        assert_eq!(nums(&t, 0), vec![3.0]);
    }

    #[test]
    fn dropping_fails_on_a_missing_schema_column() {
        let mut t = column_table("value", vec![Cell::Num(1.0)]);
        assert!(matches!(
            drop_sparse_columns(&mut t),
            Err(PreprocessError::MissingColumn(c)) if c == "count"
        ));
    }

    #[test]
    fn encoding_assigns_codes_in_first_appearance_order() {
        let mut t = column_table(
            "kind",
            ["b", "a", "b", "c"]
                .iter()
                .map(|s| Cell::Text(s.to_string()))
                .collect(),
        );
        let books = encode_categoricals(&mut t);
        assert_eq!(nums(&t, 0), vec![0.0, 1.0, 0.0, 2.0]);
        assert_eq!(
            books.columns["kind"],
            vec!["b".to_owned(), "a".to_owned(), "c".to_owned()]
        );
    }

    #[test]
    fn encoding_leaves_numeric_columns_alone() {
        let mut t = column_table("value", vec![Cell::Num(7.5), Cell::Num(-2.0)]);
        let books = encode_categoricals(&mut t);
        assert!(books.columns.is_empty());
        assert_eq!(nums(&t, 0), vec![7.5, -2.0]);
    }

    #[test]
    fn replaying_codebooks_maps_unseen_categories_to_minus_one() {
        let mut t = column_table("kind", vec![Cell::Text("a".into()), Cell::Text("b".into())]);
        let books = encode_categoricals(&mut t);
        let mut fresh = column_table(
            "kind",
            vec![
                Cell::Text("b".into()),
                Cell::Text("mystery".into()),
                Cell::Text("a".into()),
            ],
        );
        apply_codebooks(&mut fresh, &books).unwrap();
        assert_eq!(nums(&fresh, 0), vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn split_sizes_follow_the_seventy_ten_twenty_rule() {
        let t = column_table("x", (0..1000).map(|i| Cell::Num(i as f64)).collect());
        let (train, val, test) = split(&t, 5).unwrap();
        assert_eq!(
            (train.n_rows(), val.n_rows(), test.n_rows()),
            (700, 100, 200)
        );

        let t = column_table("x", (0..512_666).map(|i| Cell::Num(i as f64)).collect());
        let (train, val, test) = split(&t, 5).unwrap();
        assert_eq!(
            (train.n_rows(), val.n_rows(), test.n_rows()),
            (358_866, 51_266, 102_534)
        );
    }

    #[test]
    fn split_is_a_seeded_permutation() {
        let t = column_table("x", (0..100).map(|i| Cell::Num(i as f64)).collect());
        let (train, val, test) = split(&t, 9).unwrap();
        let mut seen: Vec<f64> = nums(&train, 0);
        seen.extend(nums(&val, 0));
        seen.extend(nums(&test, 0));
        assert_ne!(seen[..100], (0..100).map(|i| i as f64).collect::<Vec<_>>());
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..100).map(|i| i as f64).collect::<Vec<_>>());

        let (again, _, _) = split(&t, 9).unwrap();
        assert_eq!(nums(&again, 0), nums(&train, 0));
        let (other, _, _) = split(&t, 10).unwrap();
        assert_ne!(nums(&other, 0), nums(&train, 0));
    }

    #[test]
    fn split_rejects_tiny_tables() {
        let t = column_table("x", (0..9).map(|i| Cell::Num(i as f64)).collect());
        assert!(matches!(
            split(&t, 1),
            Err(PreprocessError::TooFewRows { n: 9 })
        ));
    }

    #[test]
    fn scaler_maps_train_range_onto_unit_interval() {
        let train = column_table("x", vec![Cell::Num(10.0), Cell::Num(20.0), Cell::Num(30.0)]);
        let scaler = Scaler::fit(&train).unwrap();
        let mut t = column_table(
            "x",
            vec![
                Cell::Num(10.0),
                Cell::Num(25.0),
                Cell::Num(30.0),
                Cell::Num(-100.0),
                Cell::Num(99.0),
            ],
        );
        scaler.apply(&mut t).unwrap();
        // Out-of-range values clamp instead of leaving the unit interval.
        assert_eq!(nums(&t, 0), vec![0.0, 0.75, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn scaling_a_constant_column_gives_zero() {
        let train = column_table("x", vec![Cell::Num(7.0), Cell::Num(7.0)]);
        let scaler = Scaler::fit(&train).unwrap();
        let mut t = column_table("x", vec![Cell::Num(7.0), Cell::Num(123.0)]);
        scaler.apply(&mut t).unwrap();
        assert_eq!(nums(&t, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn rescaling_scaled_data_is_the_identity() {
        let mut train = column_table(
            "x",
            vec![
                Cell::Num(-3.0),
                Cell::Num(0.5),
                Cell::Num(11.0),
                Cell::Num(4.0),
            ],
        );
        let scaler = Scaler::fit(&train).unwrap();
        scaler.apply(&mut train).unwrap();
        let once = nums(&train, 0);
        let refit = Scaler::fit(&train).unwrap();
        refit.apply(&mut train).unwrap();
        let twice = nums(&train, 0);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_never_touches_the_label() {
        let t = Table {
            columns: vec!["x".to_owned(), LABEL_COLUMN.to_owned()],
            rows: vec![
                vec![Cell::Num(5.0), Cell::Num(1.0)],
                vec![Cell::Num(15.0), Cell::Num(0.0)],
            ],
        };
        let scaler = Scaler::fit(&t).unwrap();
        assert!(!scaler.columns.contains_key(LABEL_COLUMN));
        let mut scaled = t.clone();
        scaler.apply(&mut scaled).unwrap();
        assert_eq!(nums(&scaled, 1), vec![1.0, 0.0]);
    }

    #[test]
    fn sidecars_round_trip_through_json() {
        let mut t = Table {
            columns: vec!["kind".to_owned(), "x".to_owned()],
            rows: vec![
                vec![Cell::Text("p".into()), Cell::Num(3.0)],
                vec![Cell::Text("q".into()), Cell::Num(9.0)],
            ],
        };
        let books = encode_categoricals(&mut t);
        let scaler = Scaler::fit(&t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bpath = dir.path().join("codebooks.json");
        let spath = dir.path().join("scaler.json");
        books.save(&bpath).unwrap();
        scaler.save(&spath).unwrap();
        assert_eq!(Codebooks::load(&bpath).unwrap(), books);
        assert_eq!(Scaler::load(&spath).unwrap(), scaler);
    }

    #[test]
    fn full_pipeline_on_simulated_telemetry() {
        use crate::sim::{run, Scenario, ScenarioConfig};
        use crate::telemetry;

        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        for (scenario, seed) in [(Scenario::Normal, 1), (Scenario::Ddos, 2)] {
            let config = ScenarioConfig {
                scenario,
                seed,
                duration_s: 20.0,
                n_ue: 10,
                n_hosts: 2,
                ..ScenarioConfig::default()
            };
            let trace = run(&config).unwrap();
            rows.extend(telemetry::collect(&trace, &config).unwrap());
        }
        let path = dir.path().join("dataset.csv");
        telemetry::write_csv(&path, &rows).unwrap();

        let table = Table::read_csv(&path).unwrap();
        assert_eq!(table.n_rows(), rows.len());
        let n = table.n_rows();
        let done = process(table, 77).unwrap();
        assert_eq!(
            done.train.columns,
            vec![
                "type",
                "module",
                "name",
                "attrname",
                "attrvalue",
                "value",
                "label"
            ]
        );
        assert_eq!(
            done.train.n_rows() + done.val.n_rows() + done.test.n_rows(),
            n
        );
        // Features land in [0, 1]; labels stay exactly 0 or 1.
        for part in [&done.train, &done.val, &done.test] {
            let (x, y) = to_matrix(part).unwrap();
            assert_eq!(x.shape(), &[part.n_rows(), 6]);
            assert!(x.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(y.iter().all(|&l| l == 0 || l == 1));
        }
        // Both classes must appear in the training split of a balanced set.
        let (_, y) = to_matrix(&done.train).unwrap();
        assert!(y.contains(&0) && y.contains(&1));
    }
}
