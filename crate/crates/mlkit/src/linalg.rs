//! Small dense symmetric solves for the discriminant models.

/// Cholesky factor of a symmetric positive-definite matrix (row-major),
/// or `None` when the matrix is not positive definite.
pub fn cholesky(matrix: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = matrix.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// `ln det(L Lᵀ)` from the Cholesky factor.
pub fn cholesky_logdet(l: &[Vec<f64>]) -> f64 {
    2.0 * l.iter().enumerate().map(|(i, row)| row[i].ln()).sum::<f64>()
}

/// Cholesky with an escalating ridge: starts at `base_ridge` when the plain
/// factorization fails and multiplies by 10 until it succeeds or the ridge
/// exceeds `max_ridge`.
pub fn cholesky_with_ridge(
    matrix: &[Vec<f64>],
    base_ridge: f64,
    max_ridge: f64,
) -> Option<Vec<Vec<f64>>> {
    if let Some(l) = cholesky(matrix) {
        return Some(l);
    }
    let mut ridge = base_ridge;
    while ridge <= max_ridge {
        let mut damped = matrix.to_vec();
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += ridge;
        }
        if let Some(l) = cholesky(&damped) {
            return Some(l);
        }
        ridge *= 10.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let a = vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * x_true[j]).sum())
            .collect();
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &b);
        for (got, want) in x.iter().zip(x_true) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn logdet_matches_direct_2x2() {
        let a = vec![vec![2.0, 0.3], vec![0.3, 1.5]];
        let l = cholesky(&a).unwrap();
        let det: f64 = 2.0 * 1.5 - 0.09;
        assert!((cholesky_logdet(&l) - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_needs_ridge() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(cholesky(&a).is_none());
        assert!(cholesky_with_ridge(&a, 1e-6, 1e-2).is_some());
    }
}
