//! Exact rational linear programming by two-phase simplex with Bland's rule.

use num::{One, Signed, Zero};

use crate::rat::{QVec, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// A maximizer in the original free variables (valid when `Optimal`).
    pub x: QVec,
    pub objective: Rat,
}

struct Tableau {
    rows: Vec<QVec>,
    rhs: QVec,
    cost: QVec,
    cost_rhs: Rat,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        self.rhs[r] = &self.rhs[r] * &inv;
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..self.rows[i].len() {
                let sub = &f * &self.rows[r][j];
                self.rows[i][j] -= sub;
            }
            let sub = &f * &self.rhs[r];
            self.rhs[i] -= sub;
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for j in 0..self.cost.len() {
                let sub = &f * &self.rows[r][j];
                self.cost[j] -= sub;
            }
            let sub = &f * &self.rhs[r];
            self.cost_rhs -= sub;
        }
        self.basis[r] = c;
    }

    /// Runs simplex to optimality on the current cost row (maximization).
    /// Returns false when unbounded.
    fn optimize(&mut self) -> bool {
        loop {
            let enter = match self.cost.iter().position(|c| c.is_positive()) {
                Some(j) => j,
                None => return true,
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<Rat> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][enter].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][enter];
                let better = match &best {
                    None => true,
                    Some(b) => {
                        ratio < *b
                            || (ratio == *b
                                && self.basis[i] < self.basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
            match leave {
                Some(r) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Maximizes `objective . x` subject to `a . x <= b` for each `(a, b)`,
/// with `x` unrestricted in sign.
pub fn maximize(constraints: &[(QVec, Rat)], objective: &QVec) -> LpOutcome {
    let n = objective.len();
    let m = constraints.len();
    // Split free variables: x = p - q with p, q >= 0.
    let structural = 2 * n;
    let total = structural + m; // plus slacks; artificials appended below
    let mut rows: Vec<QVec> = Vec::with_capacity(m);
    let mut rhs: QVec = Vec::with_capacity(m);
    for (i, (a, b)) in constraints.iter().enumerate() {
        assert_eq!(a.len(), n);
        let mut row = vec![Rat::zero(); total];
        for j in 0..n {
            row[j] = a[j].clone();
            row[n + j] = -a[j].clone();
        }
        row[structural + i] = Rat::one();
        if b.is_negative() {
            for x in row.iter_mut() {
                *x = -&*x;
            }
            rhs.push(-b.clone());
        } else {
            rhs.push(b.clone());
        }
        rows.push(row);
    }
    // Phase 1: artificials for every row; cost = -sum of artificials.
    let mut art_cols: Vec<usize> = Vec::with_capacity(m);
    for (i, row) in rows.iter_mut().enumerate() {
        let col = total + i;
        art_cols.push(col);
        row.resize(total + m, Rat::zero());
        row[col] = Rat::one();
    }
    let mut t = Tableau {
        basis: art_cols.clone(),
        cost: vec![Rat::zero(); total + m],
        cost_rhs: Rat::zero(),
        rows,
        rhs,
    };
    for &c in &art_cols {
        t.cost[c] = -Rat::one();
    }
    // Price out the initial basis.
    for i in 0..m {
        for j in 0..t.cost.len() {
            let add = t.rows[i][j].clone();
            t.cost[j] += add;
        }
        let add = t.rhs[i].clone();
        t.cost_rhs += add;
    }
    for &c in &art_cols {
        t.cost[c] = Rat::zero();
    }
    let ok = t.optimize();
    debug_assert!(ok, "phase 1 is always bounded");
    if t.cost_rhs.is_positive() {
        return LpOutcome { status: LpStatus::Infeasible, x: vec![Rat::zero(); n], objective: Rat::zero() };
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] >= total {
            if let Some(c) = (0..total).find(|&c| !t.rows[i][c].is_zero()) {
                t.pivot(i, c);
            }
        }
    }
    // Phase 2: forbid artificials and install the real objective.
    for row in t.rows.iter_mut() {
        row.truncate(total);
    }
    t.cost = vec![Rat::zero(); total];
    t.cost_rhs = Rat::zero();
    for j in 0..n {
        t.cost[j] = objective[j].clone();
        t.cost[n + j] = -objective[j].clone();
    }
    // Price out basic variables (degenerate rows with basic artificials are
    // redundant equalities; their cost coefficient is zero already).
    for i in 0..m {
        let b = t.basis[i];
        if b < total && !t.cost[b].is_zero() {
            let f = t.cost[b].clone();
            for j in 0..total {
                let sub = &f * &t.rows[i][j];
                t.cost[j] -= sub;
            }
            let sub = &f * &t.rhs[i];
            t.cost_rhs -= sub;
        }
    }
    if !t.optimize() {
        return LpOutcome { status: LpStatus::Unbounded, x: vec![Rat::zero(); n], objective: Rat::zero() };
    }
    let mut sol = vec![Rat::zero(); total];
    for i in 0..m {
        if t.basis[i] < total {
            sol[t.basis[i]] = t.rhs[i].clone();
        }
    }
    let x: QVec = (0..n).map(|j| &sol[j] - &sol[n + j]).collect();
    let objective_value = -t.cost_rhs.clone();
    LpOutcome { status: LpStatus::Optimal, x, objective: objective_value }
}

/// Whether `{x : a . x <= b}` is nonempty.
pub fn feasible(constraints: &[(QVec, Rat)]) -> bool {
    if constraints.is_empty() {
        return true;
    }
    let n = constraints[0].0.len();
    maximize(constraints, &vec![Rat::zero(); n]).status == LpStatus::Optimal
}
