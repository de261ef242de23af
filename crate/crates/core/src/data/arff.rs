use super::{ColumnKind, ColumnRole, DataError, Dataset, FeatureSchema, Schema, MISSING_TOKEN};

/// How to turn an ARFF relation into a [`Dataset`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArffOptions {
    pub target: String,
    pub ignore: Vec<String>,
    /// Drop rows with a missing value in any used column.
    pub drop_incomplete: bool,
}

/// Parses a dense ARFF file (as distributed in the PROMISE repository).
///
/// Numeric, real and integer attributes become numeric columns, nominal
/// attributes categorical ones, and string or date attributes are ignored.
pub fn import_arff(name: &str, text: &str, opts: &ArffOptions) -> Result<Dataset, DataError> {
    let (attrs, rows) = parse_arff(text)?;
    for wanted in std::iter::once(&opts.target).chain(&opts.ignore) {
        if !attrs.iter().any(|(n, _)| n == wanted) {
            return Err(DataError::UnknownColumn(wanted.clone()));
        }
    }
    let columns: Vec<FeatureSchema> = attrs
        .iter()
        .map(|(n, kind)| {
            let role = if *n == opts.target {
                ColumnRole::Target
            } else if kind.is_none() || opts.ignore.contains(n) {
                ColumnRole::Ignore
            } else {
                ColumnRole::Feature
            };
            FeatureSchema::new(n.clone(), kind.unwrap_or(ColumnKind::Categorical), role)
        })
        .collect();
    let schema = Schema::new(columns)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(attrs.iter().map(|(n, _)| n.as_str())).map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != attrs.len() {
            return Err(DataError::ColumnMismatch(format!(
                "data row {}: {} values, {} attributes declared",
                i + 1,
                row.len(),
                attrs.len()
            )));
        }
        let incomplete = row
            .iter()
            .zip(schema.columns())
            .any(|(v, c)| c.role != ColumnRole::Ignore && (v.is_empty() || v == MISSING_TOKEN));
        if opts.drop_incomplete && incomplete {
            continue;
        }
        w.write_record(row).map_err(csv_err)?;
    }
    let csv_text = String::from_utf8(w.into_inner().map_err(|e| DataError::Csv(e.to_string()))?)
        .map_err(|e| DataError::Csv(e.to_string()))?;
    Dataset::parse_csv(name, &csv_text, schema)
}

type Attribute = (String, Option<ColumnKind>);

fn unquote(s: &str) -> String {
    let s = s.trim();
    if s.len() >= 2 && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"'))) {
        s[1..s.len() - 1].to_string()
    } else {
        s.to_string()
    }
}

/// Splits `@attribute name type` where the name may be quoted.
fn attribute(decl: &str, lineno: usize) -> Result<Attribute, DataError> {
    let rest = decl.trim();
    let (name, ty) = match rest.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let end = rest[1..]
                .find(q)
                .ok_or_else(|| DataError::Schema(format!("line {lineno}: unterminated attribute name")))?;
            (rest[1..=end].to_string(), rest[end + 2..].trim())
        }
        _ => {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            (rest[..end].to_string(), rest[end..].trim())
        }
    };
    let lower = ty.to_ascii_lowercase();
    let kind = if ty.starts_with('{') {
        Some(ColumnKind::Categorical)
    } else if ["numeric", "real", "integer"].contains(&lower.as_str()) {
        Some(ColumnKind::Numeric)
    } else if lower == "string" || lower.starts_with("date") {
        None
    } else {
        return Err(DataError::Schema(format!(
            "line {lineno}: unsupported attribute type '{ty}'"
        )));
    };
    Ok((name, kind))
}

fn parse_arff(text: &str) -> Result<(Vec<Attribute>, Vec<Vec<String>>), DataError> {
    let mut attrs = Vec::new();
    let mut lines = text.lines().enumerate();
    for (i, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            attrs.push(attribute(&line["@attribute".len()..], i + 1)?);
        } else if lower.starts_with("@data") {
            break;
        } else if !lower.starts_with("@relation") {
            return Err(DataError::Schema(format!(
                "line {}: unexpected '{line}' in header",
                i + 1
            )));
        }
    }
    if attrs.is_empty() {
        return Err(DataError::Schema("no @attribute declarations".into()));
    }

    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if line.starts_with('{') {
            return Err(DataError::Csv(format!(
                "line {}: sparse ARFF rows are not supported",
                i + 1
            )));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .quote(b'\'')
            .trim(csv::Trim::All)
            .from_reader(line.as_bytes());
        let record = reader
            .records()
            .next()
            .transpose()
            .map_err(|e| DataError::Csv(format!("line {}: {e}", i + 1)))?
            .unwrap_or_default();
        rows.push(record.iter().map(unquote).collect());
    }
    Ok((attrs, rows))
}
