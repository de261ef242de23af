//! Small dense least-squares solver shared by the node models and the
//! stepwise-regression baseline.

/// Diagonal damping added to the standardized normal equations.
pub const RIDGE: f64 = 1e-8;

/// Intercept and per-column coefficients of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LsFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Fits `y ~ a + X b` on the columns `cols` of row-major `x`.
///
/// Columns are centred and scaled to unit variance before forming the normal
/// equations, which are damped by [`RIDGE`] and solved by Cholesky. A column
/// with no spread gets coefficient 0.
pub fn least_squares(x: &[Vec<f64>], y: &[f64], cols: &[usize]) -> LsFit {
    let n = y.len();
    assert!(n > 0, "least squares on zero rows");
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let p = cols.len();

    let mut means = vec![0.0; p];
    let mut scales = vec![0.0; p];
    for (k, &c) in cols.iter().enumerate() {
        means[k] = x.iter().map(|r| r[c]).sum::<f64>() / nf;
        let var = x.iter().map(|r| (r[c] - means[k]).powi(2)).sum::<f64>() / nf;
        scales[k] = var.sqrt();
    }
    let active: Vec<usize> = (0..p).filter(|&k| scales[k] > 0.0).collect();
    let m = active.len();

    let z = |row: &[f64], k: usize| (row[cols[k]] - means[k]) / scales[k];
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for (row, &yi) in x.iter().zip(y) {
        let zs: Vec<f64> = active.iter().map(|&k| z(row, k)).collect();
        for i in 0..m {
            b[i] += zs[i] * (yi - y_mean);
            for j in 0..=i {
                a[i * m + j] += zs[i] * zs[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            a[j * m + i] = a[i * m + j];
        }
    }

    let mut ridge = RIDGE;
    let beta = loop {
        let mut damped = a.clone();
        for i in 0..m {
            damped[i * m + i] += ridge;
        }
        if let Some(sol) = cholesky_solve(&mut damped, &b, m) {
            break sol;
        }
        ridge *= 100.0;
    };

    let mut coefficients = vec![0.0; p];
    let mut intercept = y_mean;
    for (i, &k) in active.iter().enumerate() {
        coefficients[k] = beta[i] / scales[k];
        intercept -= coefficients[k] * means[k];
    }
    LsFit {
        intercept,
        coefficients,
    }
}

/// Solves `A x = b` in place for symmetric positive-definite `A` (row-major,
/// `m x m`). Returns `None` if a pivot is not positive.
fn cholesky_solve(a: &mut [f64], b: &[f64], m: usize) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..m {
        for k in 0..i {
            y[i] -= a[i * m + k] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            y[i] -= a[k * m + i] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form `(X'X)^-1 X'y` with an explicit intercept column, via LU.
    fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let p = x[0].len();
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
        let xtx = design.transpose() * &design;
        let xty = design.transpose() * DVector::from_column_slice(y);
        xtx.lu().solve(&xty).unwrap().iter().copied().collect()
    }

    #[test]
    fn exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        let fit = least_squares(&x, &y, &[0]);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-6);
        assert_relative_eq!(fit.coefficients[0], 3.0, epsilon = 1e-6);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|r| 2.0 - r[0] + 0.5 * r[1] + 4.0 * r[2] + rng.gen_range(-1.0..1.0))
                .collect();
            let fit = least_squares(&x, &y, &[0, 1, 2]);
            let oracle = normal_equations(&x, &y);
            assert_relative_eq!(fit.intercept, oracle[0], epsilon = 1e-8, max_relative = 1e-8);
            for k in 0..3 {
                assert_relative_eq!(fit.coefficients[k], oracle[k + 1], epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn collinear_and_constant_columns_are_safe() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64, 5.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let fit = least_squares(&x, &y, &[0, 1, 2]);
        assert_eq!(fit.coefficients[2], 0.0);
        for (row, yi) in x.iter().zip(&y) {
            assert_relative_eq!(fit.predict(row), *yi, epsilon = 1e-6);
        }
    }
}
