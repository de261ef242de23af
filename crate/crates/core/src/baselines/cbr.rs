use crate::data::{Cell, Dataset, Imputer, MinMaxScaler};

use super::{check_arity, BaselineError, Estimator};

/// Single-analogy case-based reasoning: the effort of the nearest training
/// project under min-max scaled Euclidean distance, with a 0/1 mismatch
/// term per categorical feature.
#[derive(Debug, Clone)]
pub struct CbrModel {
    cases: Vec<Vec<Cell>>,
    effort: Vec<f64>,
    scaler: MinMaxScaler,
    imputer: Imputer,
}

impl CbrModel {
    pub fn fit(train: &Dataset) -> Result<Self, BaselineError> {
        if train.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let scaler = MinMaxScaler::fit(train);
        let imputer = Imputer::fit(train);
        let cases = imputer.fill_all(train).iter().map(|r| scaler.scale_record(r)).collect();
        Ok(CbrModel {
            cases,
            effort: train.effort().to_vec(),
            scaler,
            imputer,
        })
    }

    /// Index of the closest training case; the lowest index wins ties.
    pub fn nearest(&self, record: &[Cell]) -> Result<usize, BaselineError> {
        check_arity(record, self.cases[0].len())?;
        let q = self.scaler.scale_record(&self.imputer.fill(record));
        let mut best = (0, f64::INFINITY);
        for (i, case) in self.cases.iter().enumerate() {
            let d = distance2(case, &q);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }
}

fn distance2(a: &[Cell], b: &[Cell]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Cell::Number(u), Cell::Number(v)) => (u - v) * (u - v),
            _ if x == y => 0.0,
            _ => 1.0,
        })
        .sum()
}

impl Estimator for CbrModel {
    fn predict(&self, record: &[Cell]) -> Result<f64, BaselineError> {
        Ok(self.effort[self.nearest(record)?])
    }
}
