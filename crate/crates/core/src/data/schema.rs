use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    Feature,
    Target,
    Ignore,
}

impl FromStr for ColumnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(format!(
                "unknown column kind '{other}' (expected numeric or categorical)"
            )),
        }
    }
}

impl FromStr for ColumnRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feature" => Ok(ColumnRole::Feature),
            "target" => Ok(ColumnRole::Target),
            "ignore" => Ok(ColumnRole::Ignore),
            other => Err(format!(
                "unknown column role '{other}' (expected feature, target or ignore)"
            )),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        })
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnRole::Feature => "feature",
            ColumnRole::Target => "target",
            ColumnRole::Ignore => "ignore",
        })
    }
}

/// Declaration of one column of a project table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
    /// Free text, e.g. "person-hours". May be empty.
    pub unit: String,
}

impl FeatureSchema {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: ColumnRole) -> Self {
        FeatureSchema {
            name: name.into(),
            kind,
            role,
            unit: String::new(),
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }
}

/// Ordered column declarations for a dataset file.
///
/// The sidecar format is one column per line, `name,kind,role` with an
/// optional fourth `unit` field. Blank lines and lines starting with `#` are
/// skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<FeatureSchema>,
    target: usize,
}

impl Schema {
    pub fn new(columns: Vec<FeatureSchema>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.trim().is_empty() {
                return Err(DataError::Schema("column names must be non-empty".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate column name '{}'", c.name)));
            }
        }
        let targets: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Target)
            .map(|(i, _)| i)
            .collect();
        let target = match targets.as_slice() {
            [t] => *t,
            [] => return Err(DataError::Schema("no column has role 'target'".into())),
            _ => return Err(DataError::Schema("more than one column has role 'target'".into())),
        };
        if columns[target].kind != ColumnKind::Numeric {
            return Err(DataError::Schema(format!(
                "target column '{}' must be numeric",
                columns[target].name
            )));
        }
        Ok(Schema { columns, target })
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut columns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 || fields.len() > 4 {
                return Err(DataError::Schema(format!(
                    "line {}: expected `name,kind,role[,unit]`, got '{line}'",
                    lineno + 1
                )));
            }
            let kind = fields[1]
                .parse()
                .map_err(|e| DataError::Schema(format!("line {}: {e}", lineno + 1)))?;
            let role = fields[2]
                .parse()
                .map_err(|e| DataError::Schema(format!("line {}: {e}", lineno + 1)))?;
            let mut col = FeatureSchema::new(fields[0], kind, role);
            if let Some(unit) = fields.get(3) {
                col.unit = (*unit).to_string();
            }
            columns.push(col);
        }
        Schema::new(columns)
    }

    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Schema::parse(&text)
    }

    pub fn columns(&self) -> &[FeatureSchema] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target(&self) -> &FeatureSchema {
        &self.columns[self.target]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            write!(f, "{},{},{}", c.name, c.kind, c.role)?;
            if !c.unit.is_empty() {
                write!(f, ",{}", c.unit)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
