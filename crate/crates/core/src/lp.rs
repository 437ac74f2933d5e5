//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Problems are `maximize c·x` subject to linear rows and `x ≥ 0`. The
//! solver is generic over [`Scalar`]; with rationals every pivot is exact
//! and Bland's rule guarantees termination. After phase 1 the tableau can be
//! re-optimised for several objectives over the same feasible region, which
//! is how batches of hull tests share work.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pivot tolerance on float tableaus.
pub const PIVOT_TOL: f64 = 1e-9;
const FLOAT_ITER_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Row<S> {
    pub coeffs: Vec<S>,
    pub rel: Relation,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<S> {
    /// Primal solution, optimal value and one dual value per input row.
    Optimal { x: Vec<S>, value: S, duals: Vec<S> },
    /// A direction `r ≥ 0` that keeps every row satisfied and has `c·r > 0`.
    Unbounded { ray: Vec<S> },
}

/// Phase-1 failure: `y` with `y·A_j ≥ 0` for every column and `y·b < 0`
/// (rows taken in their input orientation, `≤` rows with `y ≥ 0`, `≥` rows
/// with `y ≤ 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct Infeasible<S> {
    pub farkas: Vec<S>,
}

pub struct Simplex<S> {
    t: Vec<Vec<S>>,
    red: Vec<S>,
    basis: Vec<usize>,
    row_orig: Vec<usize>,
    flip: Vec<bool>,
    id_col: Vec<usize>,
    blocked: Vec<bool>,
    n_struct: usize,
    n_rows: usize,
    cost: Vec<S>,
    iterations: usize,
}

impl<S: Scalar> Simplex<S> {
    /// Builds the tableau and runs phase 1.
    pub fn new(n_vars: usize, rows: &[Row<S>]) -> Result<std::result::Result<Self, Infeasible<S>>> {
        let m = rows.len();
        for r in rows {
            if r.coeffs.len() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: r.coeffs.len() });
            }
        }
        let mut flip = vec![false; m];
        let mut rels = Vec::with_capacity(m);
        for (i, r) in rows.iter().enumerate() {
            flip[i] = r.rhs.is_negative();
            rels.push(match (r.rel, flip[i]) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            });
        }
        let n_surplus = rels.iter().filter(|r| **r == Relation::Ge).count();
        let n_cols = n_vars + m + n_surplus;
        let mut t = vec![vec![S::zero(); n_cols + 1]; m];
        let mut id_col = vec![0; m];
        let mut artificial = vec![false; n_cols];
        let mut next_surplus = n_vars + m;
        for (i, r) in rows.iter().enumerate() {
            let sign = if flip[i] { -S::one() } else { S::one() };
            for (j, a) in r.coeffs.iter().enumerate() {
                if !a.is_zero() {
                    t[i][j] = a.clone() * sign.clone();
                }
            }
            t[i][n_cols] = r.rhs.clone() * sign;
            id_col[i] = n_vars + i;
            t[i][n_vars + i] = S::one();
            if rels[i] != Relation::Le {
                artificial[n_vars + i] = true;
            }
            if rels[i] == Relation::Ge {
                t[i][next_surplus] = -S::one();
                next_surplus += 1;
            }
        }
        let mut cost = vec![S::zero(); n_cols];
        for (j, a) in artificial.iter().enumerate() {
            if *a {
                cost[j] = -S::one();
            }
        }
        let mut sx = Simplex {
            t,
            red: Vec::new(),
            basis: id_col.clone(),
            row_orig: (0..m).collect(),
            flip,
            id_col,
            blocked: vec![false; n_cols],
            n_struct: n_vars,
            n_rows: m,
            cost,
            iterations: 0,
        };
        if artificial.iter().any(|a| *a) {
            sx.reset_reduced_costs();
            if let Some(_ray) = sx.run()? {
                return Err(Error::SolverFailure("phase 1 cannot be unbounded".into()));
            }
            let value = sx.objective_value();
            if value.neg_tol(PIVOT_TOL) {
                let farkas = sx.duals();
                return Ok(Err(Infeasible { farkas }));
            }
            sx.drive_out_artificials(&artificial);
            for (j, a) in artificial.iter().enumerate() {
                sx.blocked[j] = *a;
            }
        }
        Ok(Ok(sx))
    }

    fn n_cols(&self) -> usize {
        self.blocked.len()
    }

    fn reset_reduced_costs(&mut self) {
        let n = self.n_cols();
        let mut red = self.cost.clone();
        red.push(S::zero());
        for (i, row) in self.t.iter().enumerate() {
            let cb = &self.cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..=n {
                red[j].sub_mul_assign(cb, &row[j]);
            }
        }
        self.red = red;
    }

    fn objective_value(&self) -> S {
        let rhs = self.n_cols();
        self.t
            .iter()
            .zip(&self.basis)
            .fold(S::zero(), |acc, (row, &b)| acc + self.cost[b].clone() * row[rhs].clone())
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.n_cols();
        let inv = S::one() / self.t[p][q].clone();
        for v in self.t[p].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() * inv.clone();
            }
        }
        let prow = std::mem::take(&mut self.t[p]);
        let nz: Vec<usize> = (0..=n).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == p || row[q].is_zero() {
                continue;
            }
            let factor = row[q].clone();
            for &j in &nz {
                row[j].sub_mul_assign(&factor, &prow[j]);
            }
            if !S::EXACT {
                row[q] = S::zero();
            }
        }
        if !self.red[q].is_zero() {
            let factor = self.red[q].clone();
            for &j in &nz {
                self.red[j].sub_mul_assign(&factor, &prow[j]);
            }
            if !S::EXACT {
                self.red[q] = S::zero();
            }
        }
        self.t[p] = prow;
        self.basis[p] = q;
        self.iterations += 1;
    }

    /// Primal simplex on the current reduced costs. Returns a ray column if
    /// unbounded.
    fn run(&mut self) -> Result<Option<usize>> {
        let rhs = self.n_cols();
        loop {
            if !S::EXACT && self.iterations > FLOAT_ITER_CAP {
                return Err(Error::SolverFailure("iteration cap reached".into()));
            }
            let Some(q) = (0..self.n_cols()).find(|&j| !self.blocked[j] && self.red[j].pos_tol(PIVOT_TOL)) else {
                return Ok(None);
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][q];
                if !a.pos_tol(PIVOT_TOL) {
                    continue;
                }
                let ratio = self.t[i][rhs].clone() / a.clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        if S::EXACT {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        } else if ratio.eq_tol(br, 1e-12) {
                            self.basis[i] < self.basis[*bi]
                        } else {
                            ratio < *br
                        }
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((p, _)) => self.pivot(p, q),
                None => return Ok(Some(q)),
            }
        }
    }

    fn drive_out_artificials(&mut self, artificial: &[bool]) {
        let mut i = 0;
        while i < self.t.len() {
            if artificial[self.basis[i]] {
                let q = (0..self.n_cols()).find(|&j| !artificial[j] && !self.t[i][j].is_zero_tol(PIVOT_TOL));
                match q {
                    Some(q) => self.pivot(i, q),
                    None => {
                        // redundant row
                        self.t.remove(i);
                        self.basis.remove(i);
                        self.row_orig.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    /// Duals in the input row orientation under the current costs.
    fn duals(&self) -> Vec<S> {
        let mut y = vec![S::zero(); self.n_rows];
        for orig in 0..self.n_rows {
            let col = self.id_col[orig];
            let v = self.cost[col].clone() - self.red[col].clone();
            y[orig] = if self.flip[orig] { -v } else { v };
        }
        y
    }

    /// Re-optimises for a new objective over the same rows, starting from
    /// the current basis.
    pub fn maximize(&mut self, c: &[S]) -> Result<Outcome<S>> {
        if c.len() != self.n_struct {
            return Err(Error::DimensionMismatch { expected: self.n_struct, got: c.len() });
        }
        let mut cost = vec![S::zero(); self.n_cols()];
        cost[..self.n_struct].clone_from_slice(c);
        self.cost = cost;
        self.reset_reduced_costs();
        let rhs = self.n_cols();
        if let Some(q) = self.run()? {
            let mut ray = vec![S::zero(); self.n_struct];
            if q < self.n_struct {
                ray[q] = S::one();
            }
            for (i, row) in self.t.iter().enumerate() {
                let b = self.basis[i];
                if b < self.n_struct {
                    ray[b] = -row[q].clone();
                }
            }
            return Ok(Outcome::Unbounded { ray });
        }
        let mut x = vec![S::zero(); self.n_struct];
        for (i, row) in self.t.iter().enumerate() {
            let b = self.basis[i];
            if b < self.n_struct {
                x[b] = row[rhs].clone();
            }
        }
        Ok(Outcome::Optimal { x, value: self.objective_value(), duals: self.duals() })
    }

    /// Current basic solution restricted to the structural variables.
    pub fn basic_solution(&self) -> Vec<S> {
        let rhs = self.n_cols();
        let mut x = vec![S::zero(); self.n_struct];
        for (i, row) in self.t.iter().enumerate() {
            if self.basis[i] < self.n_struct {
                x[self.basis[i]] = row[rhs].clone();
            }
        }
        x
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// One-shot solve.
pub fn solve<S: Scalar>(c: &[S], rows: &[Row<S>]) -> Result<std::result::Result<Outcome<S>, Infeasible<S>>> {
    match Simplex::new(c.len(), rows)? {
        Ok(mut sx) => Ok(Ok(sx.maximize(c)?)),
        Err(inf) => Ok(Err(inf)),
    }
}
