//! Exact rational linear algebra used by the general-position certificates.

use num::{BigRational, Zero};

/// Reduces `rows` to row echelon form in place and returns the pivot column
/// of each nonzero row.
fn echelon(rows: &mut [Vec<BigRational>]) -> Vec<usize> {
    let width = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][col].clone();
        for entry in rows[r].iter_mut() {
            *entry /= &pivot;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (entry, p) in row.iter_mut().zip(&pivot_row) {
                *entry -= &factor * p;
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

/// Determinant of a square rational matrix by fraction-exact elimination.
pub fn determinant(matrix: &[Vec<BigRational>]) -> BigRational {
    let n = matrix.len();
    let mut a: Vec<Vec<BigRational>> = matrix.to_vec();
    let mut det = BigRational::from_integer(1.into());
    for col in 0..n {
        let Some(p) = (col..n).find(|&i| !a[i][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for i in col + 1..n {
            if a[i][col].is_zero() {
                continue;
            }
            let factor = &a[i][col] / &pivot;
            for j in col..n {
                let delta = &factor * &a[col][j];
                a[i][j] -= delta;
            }
        }
    }
    det
}

/// The one-dimensional kernel of `rows` (an `m x (m + 1)` system of full
/// rank), or `None` when the rank is deficient.
pub fn kernel_vector(rows: &[Vec<BigRational>]) -> Option<Vec<BigRational>> {
    let width = rows.first()?.len();
    let mut reduced = rows.to_vec();
    let pivots = echelon(&mut reduced);
    if pivots.len() + 1 != width {
        return None;
    }
    let free = (0..width).find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); width];
    v[free] = BigRational::from_integer(1.into());
    for (row, &col) in pivots.iter().enumerate() {
        v[col] = -reduced[row][free].clone();
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn determinant_small() {
        let m = vec![vec![q(1), q(1), q(1)], vec![q(1), q(2), q(4)], vec![q(1), q(3), q(9)]];
        assert_eq!(determinant(&m), q(2));
        let singular = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(determinant(&singular).is_zero());
        let swap = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        assert_eq!(determinant(&swap), q(-1));
    }

    #[test]
    fn kernel_of_line_through_two_points() {
        // a*x + b*y - c = 0 through (1,1) and (2,3): rows [x, y, -1].
        let rows = vec![vec![q(1), q(1), q(-1)], vec![q(2), q(3), q(-1)]];
        let v = kernel_vector(&rows).unwrap();
        for row in &rows {
            let dot: BigRational = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
        let repeated = vec![vec![q(1), q(1), q(-1)], vec![q(1), q(1), q(-1)]];
        assert!(kernel_vector(&repeated).is_none());
    }
}
