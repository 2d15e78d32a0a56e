//! Dense linear algebra used by the influence and decomposition modules:
//! a cyclic Jacobi eigen solver for symmetric matrices and exact rational
//! least-squares solves.

use num_traits::Zero;

use crate::scalar::Rational;

pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen decomposition `A = V·diag(values)·Vᵀ`; `vectors[k]` is the `k`-th
/// eigenvector (a column of `V`).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub converged: bool,
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                s += x * x;
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `JACOBI_TOLERANCE` relative to the matrix norm (absolute below norm 1).
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> SymmetricEigen {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let mut sweeps = 0;
    let mut converged = off_diagonal_norm(&a) <= JACOBI_TOLERANCE * scale;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= JACOBI_TOLERANCE * scale;
    }
    SymmetricEigen {
        values: (0..n).map(|i| a[i][i]).collect(),
        vectors: (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect(),
        sweeps,
        converged,
    }
}

/// Flips `v` so its first non-negligible coordinate is positive.
pub fn fix_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Largest eigenpair; among numerically tied eigenvalues the lowest column
/// wins, and the eigenvector sign is fixed by [`fix_sign`].
pub fn top_eigenpair(eig: &SymmetricEigen) -> Option<(f64, Vec<f64>)> {
    let max = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let tie = 1e-12 * max.abs().max(1.0);
    let k = eig.values.iter().position(|&x| x >= max - tie)?;
    let mut v = eig.vectors[k].clone();
    fix_sign(&mut v);
    Some((eig.values[k], v))
}

/// Eigen pairs sorted by descending `|λ|`, positive first on ties, then
/// by column index.
pub fn sorted_by_magnitude(eig: &SymmetricEigen) -> Vec<(f64, Vec<f64>)> {
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (eig.values[i], eig.values[j]);
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal))
            .then(i.cmp(&j))
    });
    order
        .into_iter()
        .map(|k| {
            let mut v = eig.vectors[k].clone();
            fix_sign(&mut v);
            (eig.values[k], v)
        })
        .collect()
}

/// Reduced row echelon form of `m` (modified in place) over its first `cols`
/// columns; returns the pivot columns.
fn rref(m: &mut [Vec<Rational>], cols: usize) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::from_integer(1.into()) / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..m[i].len() {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Row-reduces `[a | b]` and returns one solution with free variables set to
/// zero together with the pivot columns, or `None` when inconsistent.
fn solve_basic(a: &[Vec<Rational>], b: &[Rational]) -> Option<(Vec<Rational>, Vec<usize>)> {
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m, cols);
    if m[pivots.len()..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][cols].clone();
    }
    Some((x, pivots))
}

/// Exact basis of `{x : a·x = 0}` for a `rows × cols` matrix, one vector per
/// free column, each with a unit entry at its free column.
pub fn nullspace(a: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m = a.to_vec();
    let pivots = rref(&mut m, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rational::zero(); cols];
            x[f] = Rational::from_integer(1.into());
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = -m[i][f].clone();
            }
            x
        })
        .collect()
}

/// Exact minimum-norm solution of the consistent symmetric system
/// `gram · x = rhs` (the pseudo-inverse solution), with the rank of `gram`.
pub fn solve_symmetric_min_norm(gram: &[Vec<Rational>], rhs: &[Rational]) -> Option<(Vec<Rational>, usize)> {
    let n = gram.len();
    if n == 0 {
        return Some((Vec::new(), 0));
    }
    let (_, pivots) = solve_basic(gram, &vec![Rational::zero(); n])?;
    let rank = pivots.len();
    // x = gram[:, P]·y keeps x in range(gram), where the solution is unique.
    let reduced: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            pivots
                .iter()
                .map(|&p| (0..n).map(|k| &gram[i][k] * &gram[k][p]).sum())
                .collect()
        })
        .collect();
    let (y, _) = solve_basic(&reduced, rhs)?;
    let x = (0..n)
        .map(|i| pivots.iter().zip(&y).map(|(&p, yj)| &gram[i][p] * yj).sum())
        .collect();
    Some((x, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    #[test]
    fn jacobi_on_small_matrices() {
        let eig = jacobi_eigen(&[vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert!(eig.converged);
        let (l, v) = top_eigenpair(&eig).unwrap();
        assert!((l - 0.5).abs() < 1e-14);
        assert!((v[0] - v[1]).abs() < 1e-14 && v[0] > 0.0);

        let m = vec![vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.0], vec![2.0, 0.0, 5.0]];
        let eig = jacobi_eigen(&m);
        for (l, v) in eig.values.iter().zip(&eig.vectors) {
            for i in 0..3 {
                let mv: f64 = (0..3).map(|j| m[i][j] * v[j]).sum();
                assert!((mv - l * v[i]).abs() < 1e-10);
            }
        }
        let trace: f64 = eig.values.iter().sum();
        assert!((trace - 12.0).abs() < 1e-12);
    }

    #[test]
    fn ties_choose_lowest_column() {
        let eig = jacobi_eigen(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (_, v) = top_eigenpair(&eig).unwrap();
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn magnitude_ordering() {
        let eig = jacobi_eigen(&[vec![-2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let vals: Vec<f64> = sorted_by_magnitude(&eig).into_iter().map(|(l, _)| l).collect();
        assert_eq!(vals, vec![2.0, -2.0, 1.0]);
    }

    #[test]
    fn min_norm_solution_of_singular_system() {
        // [[1,1],[1,1]] x = [2,2] has minimum-norm solution (1,1).
        let g = vec![vec![int(1), int(1)], vec![int(1), int(1)]];
        let (x, rank) = solve_symmetric_min_norm(&g, &[int(2), int(2)]).unwrap();
        assert_eq!(rank, 1);
        assert_eq!(x, vec![int(1), int(1)]);

        let g = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let (x, rank) = solve_symmetric_min_norm(&g, &[int(1), int(0)]).unwrap();
        assert_eq!(rank, 2);
        assert_eq!(x, vec![ratio(3, 5), ratio(-1, 5)]);
    }

    #[test]
    fn nullspace_basis() {
        let a = vec![vec![int(1), int(2), int(3)], vec![int(2), int(4), int(6)]];
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for row in &a {
                let s: Rational = row.iter().zip(v).map(|(x, y)| x * y).sum();
                assert!(s.is_zero());
            }
        }
        assert_eq!(nullspace(&[vec![int(1), int(0)], vec![int(0), int(1)]], 2).len(), 0);
        assert_eq!(nullspace(&[], 2).len(), 2);
    }
}
