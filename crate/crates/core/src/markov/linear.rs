//! Dense Gaussian elimination with partial pivoting.

/// Pivots with absolute value below this are treated as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub column: usize,
    pub pivot: f64,
}

/// Solves `a x = b`; `a` is row-major `n x n`.
pub fn solve(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Vec<f64>, Singular> {
    let mut xs = solve_many(a, vec![b])?;
    Ok(xs.pop().expect("one right-hand side"))
}

/// Solves `a x = b` for every `b` in `rhs` with a single elimination.
pub fn solve_many(mut a: Vec<Vec<f64>>, mut rhs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, Singular> {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n) && rhs.iter().all(|b| b.len() == n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()).then(j.cmp(&i)))
            .expect("nonempty range");
        let pivot = a[pivot_row][col];
        if pivot.abs() < PIVOT_THRESHOLD {
            return Err(Singular { column: col, pivot });
        }
        a.swap(col, pivot_row);
        for b in &mut rhs {
            b.swap(col, pivot_row);
        }
        let (top, rest) = a.split_at_mut(col + 1);
        let prow = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for (x, &p) in row[col..].iter_mut().zip(&prow[col..]) {
                *x -= factor * p;
            }
            for b in &mut rhs {
                b[col + 1 + k] -= factor * b[col];
            }
        }
    }
    Ok(rhs
        .into_iter()
        .map(|b| {
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
                x[i] = (b[i] - s) / a[i][i];
            }
            x
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15);
        assert!((x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn needs_pivoting() {
        let x = solve(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let e = solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).unwrap_err();
        assert_eq!(e.column, 1);
    }

    #[test]
    fn empty_system() {
        assert_eq!(solve(Vec::new(), Vec::new()).unwrap(), Vec::<f64>::new());
    }
}
