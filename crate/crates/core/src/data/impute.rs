use super::{Cell, Column, Dataset};

/// Fill values learned from a training split: column mean for numeric
/// features, most frequent level (lowest code on ties) for categorical ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputer {
    fills: Vec<Cell>,
}

impl Imputer {
    pub fn fit(train: &Dataset) -> Self {
        let fills = (0..train.n_features())
            .map(|j| match train.feature_column(j) {
                Column::Numeric(values) => {
                    let present: Vec<f64> = values.iter().flatten().copied().collect();
                    if present.is_empty() {
                        Cell::Number(0.0)
                    } else {
                        Cell::Number(present.iter().sum::<f64>() / present.len() as f64)
                    }
                }
                Column::Categorical { levels, codes } => {
                    let mut counts = vec![0usize; levels.len()];
                    for c in codes.iter().flatten() {
                        counts[*c] += 1;
                    }
                    let mut best: Option<(usize, usize)> = None;
                    for (level, &count) in counts.iter().enumerate() {
                        if count > 0 && best.is_none_or(|(_, b)| count > b) {
                            best = Some((level, count));
                        }
                    }
                    best.map_or(Cell::Missing, |(level, _)| Cell::Level(level))
                }
                Column::Ignored(_) => Cell::Missing,
            })
            .collect();
        Imputer { fills }
    }

    pub fn fill(&self, record: &[Cell]) -> Vec<Cell> {
        record
            .iter()
            .zip(&self.fills)
            .map(|(cell, fill)| if cell.is_missing() { *fill } else { *cell })
            .collect()
    }

    pub fn fill_all(&self, ds: &Dataset) -> Vec<Vec<Cell>> {
        (0..ds.len()).map(|r| self.fill(&ds.record(r))).collect()
    }
}
