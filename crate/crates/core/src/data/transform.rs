use super::{Cell, Column, ColumnKind, DataError, Dataset};

/// Per-feature `(min, max)` bounds learned on a training split. `None` for
/// categorical features and for numeric features with no present value.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    bounds: Vec<Option<(f64, f64)>>,
}

impl MinMaxScaler {
    pub fn fit(d: &Dataset) -> Self {
        let bounds = (0..d.n_features())
            .map(|j| match d.feature_column(j) {
                Column::Numeric(values) => {
                    let mut it = values.iter().flatten();
                    let first = *it.next()?;
                    Some(it.fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
                }
                _ => None,
            })
            .collect();
        MinMaxScaler { bounds }
    }

    pub fn bounds(&self, j: usize) -> Option<(f64, f64)> {
        self.bounds[j]
    }

    /// `(x - min) / (max - min)`; constant features map to 0. Values outside
    /// the training range extrapolate linearly.
    pub fn scale(&self, j: usize, x: f64) -> f64 {
        match self.bounds[j] {
            Some((lo, hi)) if hi > lo => (x - lo) / (hi - lo),
            _ => 0.0,
        }
    }

    pub fn unscale(&self, j: usize, z: f64) -> f64 {
        match self.bounds[j] {
            Some((lo, hi)) => lo + z * (hi - lo),
            None => z,
        }
    }

    pub fn scale_record(&self, record: &[Cell]) -> Vec<Cell> {
        record
            .iter()
            .enumerate()
            .map(|(j, c)| match c {
                Cell::Number(x) => Cell::Number(self.scale(j, *x)),
                other => *other,
            })
            .collect()
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for j in 0..d.n_features() {
            if d.feature(j).kind != ColumnKind::Numeric {
                continue;
            }
            let idx = d.schema().position(&d.feature(j).name).expect("feature in schema");
            out = out
                .map_numeric(idx, |x| self.scale(j, x))
                .expect("scaling keeps effort untouched");
        }
        out
    }
}

/// Maps every numeric feature onto [0, 1] using its own range; the returned
/// scaler projects other rows with the same bounds.
pub fn min_max_normalize(d: &Dataset) -> (Dataset, MinMaxScaler) {
    let scaler = MinMaxScaler::fit(d);
    (scaler.apply(d), scaler)
}

/// Replaces `x` by `ln(x + 1)` in the named numeric columns (features or target).
pub fn log_transform(d: &Dataset, columns: &[&str]) -> Result<Dataset, DataError> {
    let mut out = d.clone();
    for name in columns {
        let idx = d
            .schema()
            .position(name)
            .ok_or_else(|| DataError::UnknownColumn((*name).to_string()))?;
        let decl = &d.schema().columns()[idx];
        if decl.kind != ColumnKind::Numeric {
            return Err(DataError::Shape(format!("column '{name}' is not numeric")));
        }
        let values: Vec<Option<f64>> = if idx == d.schema().target_index() {
            d.effort().iter().map(|&v| Some(v)).collect()
        } else {
            let j = (0..d.n_features())
                .find(|&j| d.feature(j).name == *name)
                .ok_or_else(|| DataError::Shape(format!("column '{name}' is ignored")))?;
            (0..d.len()).map(|r| d.cell(r, j).number()).collect()
        };
        if let Some((row, v)) = values
            .iter()
            .enumerate()
            .find_map(|(r, v)| v.filter(|x| *x < 0.0).map(|x| (r, x)))
        {
            return Err(DataError::NegativeValue {
                row: row + 1,
                column: (*name).to_string(),
                value: v,
            });
        }
        out = out.map_numeric(idx, f64::ln_1p)?;
    }
    Ok(out)
}
