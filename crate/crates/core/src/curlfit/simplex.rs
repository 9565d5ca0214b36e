//! Exact two-phase simplex with Bland's rule, for small dense problems
//! `min c·x  s.t.  A x = b,  x >= 0`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: Q,
    pub x: Vec<Q>,
    /// Dual vector for the original rows (zero on rows found redundant).
    pub y: Vec<Q>,
    pub pivots: usize,
}

struct Tableau {
    /// rows x (ncols + 1); last column is the right-hand side
    t: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// original row index of each tableau row
    row_of: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v = &*v / &p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = &*v - &f * pv;
                }
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimize `cost` over the current tableau restricted to `active` columns.
    fn optimize(&mut self, cost: &[Q], active: &[bool]) -> Result<()> {
        loop {
            let m = self.t.len();
            // reduced costs: cost_j - Σ_i cost_{basis_i} t[i][j]
            let mut enter = None;
            for j in 0..self.ncols {
                if !active[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for i in 0..m {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !self.t[i][j].is_zero() {
                        rc -= cb * &self.t[i][j];
                    }
                }
                if rc.is_negative() {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return Ok(()) };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..m {
                if self.t[i][c].is_positive() {
                    let ratio = &self.t[i][self.ncols] / &self.t[i][c];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Degenerate("linear program is unbounded".into()));
            };
            self.pivot(r, c);
        }
    }
}

/// Solve `min c·x, A x = b, x >= 0` exactly.
pub fn solve(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("LP dimensions disagree".into()));
    }
    // columns: 0..n originals, n..n+m artificials
    let ncols = n + m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Q> = a[i].iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        for k in 0..m {
            row.push(if k == i { Q::one() } else { Q::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        t.push(row);
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), row_of: (0..m).collect(), ncols, pivots: 0 };
    let mut phase1 = vec![Q::zero(); ncols];
    for v in phase1.iter_mut().skip(n) {
        *v = Q::one();
    }
    tab.optimize(&phase1, &vec![true; ncols])?;
    let infeas: Q = (0..tab.t.len())
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.t[i][ncols].clone())
        .fold(Q::zero(), |a, b| a + b);
    if infeas.is_positive() {
        return Err(Error::Infeasible("no nonnegative solution of A x = b".into()));
    }
    // drive remaining artificials out, dropping redundant rows
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
                i += 1;
            } else {
                tab.t.remove(i);
                tab.basis.remove(i);
                tab.row_of.remove(i);
            }
        } else {
            i += 1;
        }
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(Q::zero(), m));
    let mut active = vec![true; n];
    active.extend(std::iter::repeat_n(false, m));
    tab.optimize(&cost, &active)?;
    let mut x = vec![Q::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        x[bv] = tab.t[i][ncols].clone();
    }
    let value = x.iter().zip(c).map(|(a, b)| a * b).fold(Q::zero(), |s, v| s + v);
    // duals from B^T y = c_B on the kept rows (original orientation)
    let kept = &tab.row_of;
    let k = kept.len();
    let bmat: Vec<Vec<Q>> = (0..k)
        .map(|col| kept.iter().map(|&r| a[r][tab.basis[col]].clone()).collect())
        .collect();
    let cb: Vec<Q> = tab.basis.iter().map(|&j| c[j].clone()).collect();
    let ys = solve_square(bmat, cb)?;
    let mut y = vec![Q::zero(); m];
    for (idx, &r) in kept.iter().enumerate() {
        y[r] = ys[idx].clone();
    }
    Ok(LpSolution { value, x, y, pivots: tab.pivots })
}

/// Gaussian elimination for a square nonsingular system `M y = rhs`.
pub fn solve_square(mut mat: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Result<Vec<Q>> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !mat[r][col].is_zero())
            .ok_or_else(|| Error::Degenerate("singular basis".into()))?;
        mat.swap(col, p);
        rhs.swap(col, p);
        let piv = mat[col][col].clone();
        for r in 0..n {
            if r != col && !mat[r][col].is_zero() {
                let f = &mat[r][col] / &piv;
                for k in col..n {
                    let v = &f * &mat[col][k];
                    mat[r][k] -= v;
                }
                let v = &f * &rhs[col];
                rhs[r] -= v;
            }
        }
    }
    Ok((0..n).map(|i| &rhs[i] / &mat[i][i]).collect())
}

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp() {
        // min x + y  s.t. x + 2y = 4, x - y = 1  ->  x = 2, y = 1
        let a = vec![vec![q(1), q(2)], vec![q(1), q(-1)]];
        let s = solve(&a, &[q(4), q(1)], &[q(1), q(1)]).unwrap();
        assert_eq!(s.value, q(3));
        assert_eq!(s.x, vec![q(2), q(1)]);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![vec![q(1), q(1), q(0)], vec![q(2), q(2), q(0)], vec![q(0), q(1), q(1)]];
        let s = solve(&a, &[q(2), q(4), q(1)], &[q(1), q(3), q(1)]).unwrap();
        assert_eq!(s.value, q(3));
        // dual feasibility and strong duality
        let b = [q(2), q(4), q(1)];
        let dual: Q = s.y.iter().zip(&b).map(|(y, b)| y * b).fold(q(0), |a, v| a + v);
        assert_eq!(dual, s.value);
    }

    #[test]
    fn infeasible() {
        let a = vec![vec![q(1), q(1)]];
        assert!(matches!(solve(&a, &[q(-1)], &[q(1), q(1)]), Err(Error::Infeasible(_))));
    }
}
