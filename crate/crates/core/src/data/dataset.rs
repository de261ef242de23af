use std::path::Path;

use super::schema::{ColumnKind, ColumnRole, FeatureSchema, Schema};
use super::DataError;

/// Token marking a missing cell in data files.
pub const MISSING_TOKEN: &str = "?";

/// One feature value of a project, as seen by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Number(f64),
    /// Index into the column's level list.
    Level(usize),
    Missing,
}

impl Cell {
    pub fn number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<usize>>,
    },
    /// Raw text of a column with role `ignore`.
    Ignored(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
            Column::Ignored(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> Cell {
        match self {
            Column::Numeric(v) => v[row].map_or(Cell::Missing, Cell::Number),
            Column::Categorical { codes, .. } => codes[row].map_or(Cell::Missing, Cell::Level),
            Column::Ignored(_) => Cell::Missing,
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
            Column::Ignored(v) => Column::Ignored(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }
}

/// A project table: feature columns plus a strictly positive effort target.
///
/// Columns are kept in schema order (ignored columns included, so a table
/// can be written back out unchanged). Estimators see only the `feature`
/// columns, addressed by their position in [`Dataset::features`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    schema: Schema,
    columns: Vec<Column>,
    effort: Vec<f64>,
    features: Vec<usize>,
}

impl Dataset {
    /// Assembles a dataset from columns given in schema order.
    pub fn from_columns(name: impl Into<String>, schema: Schema, columns: Vec<Column>) -> Result<Self, DataError> {
        if columns.len() != schema.len() {
            return Err(DataError::Shape(format!(
                "{} columns supplied for a schema of {}",
                columns.len(),
                schema.len()
            )));
        }
        let n = columns.first().map_or(0, Column::len);
        if n == 0 {
            return Err(DataError::Empty);
        }
        for (col, decl) in columns.iter().zip(schema.columns()) {
            if col.len() != n {
                return Err(DataError::Shape(format!(
                    "column '{}' has {} rows, expected {n}",
                    decl.name,
                    col.len()
                )));
            }
            let ok = matches!(
                (col, decl.role, decl.kind),
                (Column::Ignored(_), ColumnRole::Ignore, _)
                    | (
                        Column::Numeric(_),
                        ColumnRole::Feature | ColumnRole::Target,
                        ColumnKind::Numeric
                    )
                    | (Column::Categorical { .. }, ColumnRole::Feature, ColumnKind::Categorical)
            );
            if !ok {
                return Err(DataError::Shape(format!(
                    "column '{}' storage does not match its declaration ({}, {})",
                    decl.name, decl.kind, decl.role
                )));
            }
            if let Column::Categorical { levels, codes } = col {
                if codes.iter().flatten().any(|&c| c >= levels.len()) {
                    return Err(DataError::Shape(format!(
                        "column '{}' has a level code outside its level list",
                        decl.name
                    )));
                }
            }
        }
        let target = schema.target_index();
        let Column::Numeric(values) = &columns[target] else {
            unreachable!("target storage checked above");
        };
        let mut effort = Vec::with_capacity(n);
        for (row, v) in values.iter().enumerate() {
            match v {
                None => {
                    return Err(DataError::MissingEffort {
                        row: row + 1,
                        column: schema.target().name.clone(),
                    })
                }
                Some(v) if !(*v > 0.0) || !v.is_finite() => {
                    return Err(DataError::NonPositiveEffort {
                        row: row + 1,
                        column: schema.target().name.clone(),
                        value: *v,
                    })
                }
                Some(v) => effort.push(*v),
            }
        }
        let features = schema
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Feature)
            .map(|(i, _)| i)
            .collect();
        Ok(Dataset {
            name: name.into(),
            schema,
            columns,
            effort,
            features,
        })
    }

    /// Reads a comma-delimited file whose header matches `schema`.
    ///
    /// Empty cells, the `?` token and unparseable numbers are recorded as
    /// missing. Rows with a missing or non-positive effort are rejected.
    pub fn load(data_path: &Path, schema_path: &Path) -> Result<Self, DataError> {
        let schema = Schema::from_file(schema_path)?;
        let text = std::fs::read_to_string(data_path).map_err(|source| DataError::Io {
            path: data_path.to_path_buf(),
            source,
        })?;
        let name = data_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ds = Dataset::parse_csv(&name, &text, schema)?;
        if ds.len() < 3 {
            return Err(DataError::TooFewRows {
                rows: ds.len(),
                needed: 3,
            });
        }
        Ok(ds)
    }

    pub fn parse_csv(name: &str, text: &str, schema: Schema) -> Result<Self, DataError> {
        if text.trim().is_empty() {
            return Err(DataError::Empty);
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
        if header.len() != schema.len() {
            return Err(DataError::ColumnMismatch(format!(
                "header has {} columns, schema declares {}",
                header.len(),
                schema.len()
            )));
        }
        for (i, (h, decl)) in header.iter().zip(schema.columns()).enumerate() {
            if h != decl.name {
                return Err(DataError::ColumnMismatch(format!(
                    "column {}: header '{h}' does not match schema name '{}'",
                    i + 1,
                    decl.name
                )));
            }
        }

        let mut raw: Vec<Vec<String>> = vec![Vec::new(); schema.len()];
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
            if record.len() != schema.len() {
                return Err(DataError::ColumnMismatch(format!(
                    "row {}: {} fields, expected {}",
                    i + 1,
                    record.len(),
                    schema.len()
                )));
            }
            for (col, field) in raw.iter_mut().zip(record.iter()) {
                col.push(field.to_string());
            }
        }
        if raw[0].is_empty() {
            return Err(DataError::Empty);
        }

        let target = schema.target_index();
        let mut columns = Vec::with_capacity(schema.len());
        for (idx, (decl, cells)) in schema.columns().iter().zip(raw).enumerate() {
            let column = match (decl.role, decl.kind) {
                (ColumnRole::Ignore, _) => Column::Ignored(cells),
                (_, ColumnKind::Numeric) => {
                    let mut values = Vec::with_capacity(cells.len());
                    for (row, s) in cells.iter().enumerate() {
                        let v = parse_number(s);
                        if idx == target && v.is_none() {
                            return Err(DataError::MissingEffort {
                                row: row + 1,
                                column: decl.name.clone(),
                            });
                        }
                        values.push(v);
                    }
                    Column::Numeric(values)
                }
                (_, ColumnKind::Categorical) => {
                    let mut levels: Vec<String> = Vec::new();
                    let codes = cells
                        .into_iter()
                        .map(|s| {
                            if is_missing_token(&s) {
                                return None;
                            }
                            Some(match levels.iter().position(|l| *l == s) {
                                Some(p) => p,
                                None => {
                                    levels.push(s);
                                    levels.len() - 1
                                }
                            })
                        })
                        .collect();
                    Column::Categorical { levels, codes }
                }
            };
            columns.push(column);
        }
        Dataset::from_columns(name, schema, columns)
    }

    /// Writes the table back out in the format accepted by [`Dataset::parse_csv`].
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.schema.columns().iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in 0..self.len() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .map(|col| match col {
                    Column::Numeric(v) => v[row].map_or_else(|| MISSING_TOKEN.to_string(), |x| x.to_string()),
                    Column::Categorical { levels, codes } => {
                        codes[row].map_or_else(|| MISSING_TOKEN.to_string(), |c| levels[c].clone())
                    }
                    Column::Ignored(v) => v[row].clone(),
                })
                .collect();
            w.write_record(&fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.effort.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effort.is_empty()
    }

    pub fn effort(&self) -> &[f64] {
        &self.effort
    }

    /// Number of `feature` columns.
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, j: usize) -> &FeatureSchema {
        &self.schema.columns()[self.features[j]]
    }

    pub fn feature_names(&self) -> Vec<&str> {
        (0..self.n_features()).map(|j| self.feature(j).name.as_str()).collect()
    }

    pub fn feature_column(&self, j: usize) -> &Column {
        &self.columns[self.features[j]]
    }

    /// Feature positions whose kind is numeric.
    pub fn numeric_features(&self) -> Vec<usize> {
        (0..self.n_features())
            .filter(|&j| self.feature(j).kind == ColumnKind::Numeric)
            .collect()
    }

    pub fn categorical_features(&self) -> Vec<usize> {
        (0..self.n_features())
            .filter(|&j| self.feature(j).kind == ColumnKind::Categorical)
            .collect()
    }

    /// Level names of a categorical feature; empty for numeric features.
    pub fn levels(&self, j: usize) -> &[String] {
        match self.feature_column(j) {
            Column::Categorical { levels, .. } => levels,
            _ => &[],
        }
    }

    pub fn cell(&self, row: usize, j: usize) -> Cell {
        self.feature_column(j).cell(row)
    }

    /// The feature cells of one project.
    pub fn record(&self, row: usize) -> Vec<Cell> {
        (0..self.n_features()).map(|j| self.cell(row, j)).collect()
    }

    pub fn records(&self) -> Vec<Vec<Cell>> {
        (0..self.len()).map(|r| self.record(r)).collect()
    }

    /// Per-cell missing flags over all schema columns (ignored columns are never missing).
    pub fn missing_mask(&self) -> Vec<Vec<bool>> {
        (0..self.len())
            .map(|row| {
                self.columns
                    .iter()
                    .map(|col| match col {
                        Column::Ignored(_) => false,
                        other => other.cell(row).is_missing(),
                    })
                    .collect()
            })
            .collect()
    }

    /// Rows `rows` (in the given order) as a new dataset. Level lists are kept
    /// whole so level codes stay comparable with the parent.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            effort: rows.iter().map(|&r| self.effort[r]).collect(),
            features: self.features.clone(),
        }
    }

    /// Replaces a numeric column (feature or target) by `f` applied to each present value.
    pub(crate) fn map_numeric(&self, schema_idx: usize, f: impl Fn(f64) -> f64) -> Result<Dataset, DataError> {
        let mut columns = self.columns.clone();
        match &mut columns[schema_idx] {
            Column::Numeric(values) => {
                for v in values.iter_mut().flatten() {
                    *v = f(*v);
                }
            }
            _ => {
                return Err(DataError::Shape(format!(
                    "column '{}' is not numeric",
                    self.schema.columns()[schema_idx].name
                )))
            }
        }
        Dataset::from_columns(self.name.clone(), self.schema.clone(), columns)
    }
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == MISSING_TOKEN
}

fn parse_number(s: &str) -> Option<f64> {
    if is_missing_token(s) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Convenience constructor for programmatic datasets.
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    name: String,
    decls: Vec<FeatureSchema>,
    columns: Vec<Column>,
}

impl DatasetBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        DatasetBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.decls
            .push(FeatureSchema::new(name, ColumnKind::Numeric, ColumnRole::Feature));
        self.columns
            .push(Column::Numeric(values.into_iter().map(Some).collect()));
        self
    }

    pub fn numeric_with_missing(mut self, name: &str, values: Vec<Option<f64>>) -> Self {
        self.decls
            .push(FeatureSchema::new(name, ColumnKind::Numeric, ColumnRole::Feature));
        self.columns.push(Column::Numeric(values));
        self
    }

    pub fn categorical<S: AsRef<str>>(mut self, name: &str, values: &[S]) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let codes = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                if is_missing_token(v) {
                    return None;
                }
                Some(levels.iter().position(|l| l == v).unwrap_or_else(|| {
                    levels.push(v.to_string());
                    levels.len() - 1
                }))
            })
            .collect();
        self.decls
            .push(FeatureSchema::new(name, ColumnKind::Categorical, ColumnRole::Feature));
        self.columns.push(Column::Categorical { levels, codes });
        self
    }

    pub fn target(mut self, name: &str, values: Vec<f64>) -> Self {
        self.decls
            .push(FeatureSchema::new(name, ColumnKind::Numeric, ColumnRole::Target));
        self.columns
            .push(Column::Numeric(values.into_iter().map(Some).collect()));
        self
    }

    pub fn build(self) -> Result<Dataset, DataError> {
        let schema = Schema::new(self.decls)?;
        Dataset::from_columns(self.name, schema, self.columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::parse("id,categorical,ignore\nsize,numeric,feature\nlang,categorical,feature\neffort,numeric,target\n")
            .unwrap()
    }

    #[test]
    fn parses_cells_and_missing_values() {
        let text = "id,size,lang,effort\np1,10,cobol,100\np2,?,c,50\np3,abc,,20.5\n";
        let ds = Dataset::parse_csv("t", text, schema()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.effort(), &[100.0, 50.0, 20.5]);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.cell(0, 0), Cell::Number(10.0));
        assert_eq!(ds.cell(1, 0), Cell::Missing);
        assert_eq!(ds.cell(2, 0), Cell::Missing);
        assert_eq!(ds.cell(1, 1), Cell::Level(1));
        assert_eq!(ds.cell(2, 1), Cell::Missing);
        assert_eq!(ds.levels(1), &["cobol".to_string(), "c".to_string()]);
        let mask = ds.missing_mask();
        assert_eq!(mask[1], vec![false, true, false, false]);
        assert_eq!(mask[2], vec![false, true, true, false]);
    }

    #[test]
    fn rejects_zero_effort_with_location() {
        let text = "id,size,lang,effort\np1,10,c,100\np2,3,c,0\n";
        let err = Dataset::parse_csv("t", text, schema()).unwrap_err();
        assert!(matches!(err, DataError::NonPositiveEffort { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("non-positive effort"));
    }

    #[test]
    fn rejects_missing_effort_and_header_mismatch() {
        let err = Dataset::parse_csv("t", "id,size,lang,effort\np1,1,c,?\n", schema()).unwrap_err();
        assert!(matches!(err, DataError::MissingEffort { row: 1, .. }));
        let err = Dataset::parse_csv("t", "id,size,language,effort\np1,1,c,3\n", schema()).unwrap_err();
        assert!(err.to_string().contains("language"), "{err}");
        let err = Dataset::parse_csv("t", "id,size,effort\np1,1,3\n", schema()).unwrap_err();
        assert!(matches!(err, DataError::ColumnMismatch(_)));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(matches!(Dataset::parse_csv("t", "", schema()), Err(DataError::Empty)));
        assert!(matches!(
            Dataset::parse_csv("t", "id,size,lang,effort\n", schema()),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn csv_round_trip_is_identical() {
        let text = "id,size,lang,effort\n\"p,1\",10,cobol,100\np2,?,c,50\np3,0.1,?,20.5\n";
        let ds = Dataset::parse_csv("t", text, schema()).unwrap();
        let again = Dataset::parse_csv("t", &ds.to_csv_string(), schema()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn subset_keeps_levels() {
        let ds = DatasetBuilder::new("b")
            .categorical("lang", &["a", "b", "c"])
            .target("effort", vec![1.0, 2.0, 3.0])
            .build()
            .unwrap();
        let sub = ds.subset(&[2, 0]);
        assert_eq!(sub.effort(), &[3.0, 1.0]);
        assert_eq!(sub.levels(0).len(), 3);
        assert_eq!(sub.cell(0, 0), Cell::Level(2));
    }
}
