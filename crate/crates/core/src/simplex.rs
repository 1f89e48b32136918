//! Dense two-phase simplex over exact rationals.
//!
//! Every column is nonnegative. Pivoting follows Bland's rule, so the
//! method terminates without any anti-cycling bookkeeping. Intended for the
//! small systems produced by Farkas encodings; no attempt is made at sparsity.

use num::{BigRational, Signed, Zero};

pub type Q = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Q)>,
    pub kind: RowKind,
    pub rhs: Q,
}

/// `minimize objective . x  s.t.  rows, x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<LpRow>,
    objective: Vec<(usize, Q)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates a fresh nonnegative column.
    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Q)>, kind: RowKind, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.rows.push(LpRow { coeffs, kind, rhs });
    }

    pub fn set_objective(&mut self, objective: Vec<(usize, Q)>) {
        self.objective = objective;
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    // m rows of width `width + 1`; the last entry is the right-hand side.
    a: Vec<Vec<Q>>,
    basis: Vec<usize>,
    width: usize,
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n = lp.num_vars;
        let slacks = lp.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
        let first_artificial = n + slacks;
        let width = first_artificial + m;
        let mut a = vec![vec![Q::zero(); width + 1]; m];
        let mut slack = n;
        for (i, row) in lp.rows.iter().enumerate() {
            for (j, c) in &row.coeffs {
                a[i][*j] += c;
            }
            match row.kind {
                RowKind::Le => {
                    a[i][slack] = Q::from_integer(1.into());
                    slack += 1;
                }
                RowKind::Ge => {
                    a[i][slack] = Q::from_integer((-1).into());
                    slack += 1;
                }
                RowKind::Eq => {}
            }
            a[i][width] = row.rhs.clone();
            if row.rhs.is_negative() {
                for v in a[i].iter_mut() {
                    *v = -v.clone();
                }
            }
            a[i][first_artificial + i] = Q::from_integer(1.into());
        }
        Tableau {
            a,
            basis: (first_artificial..width).collect(),
            width,
            first_artificial,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v /= &piv;
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over the allowed columns; returns false if unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: usize) -> bool {
        loop {
            // reduced cost of column j: cost_j - sum_i cost_{basis_i} a_ij
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.a[i][j].is_zero() {
                        rc -= &cost[b] * &self.a[i][j];
                    }
                }
                if rc.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.a.len() {
                if self.a[i][c].is_positive() {
                    let ratio = &self.a[i][self.width] / &self.a[i][c];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let mut phase1 = vec![Q::zero(); self.width];
        for c in phase1.iter_mut().skip(self.first_artificial) {
            *c = Q::from_integer(1.into());
        }
        self.optimize(&phase1, self.width);
        let infeasibility: Q = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= self.first_artificial)
            .map(|(i, _)| self.a[i][self.width].clone())
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| !self.a[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.a.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let mut cost = vec![Q::zero(); self.width];
        for (j, c) in &lp.objective {
            cost[*j] += c;
        }
        if !self.optimize(&cost, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Q::zero(); lp.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.num_vars {
                x[b] = self.a[i][self.width].clone();
            }
        }
        let value = lp.objective.iter().map(|(j, c)| c * &x[*j]).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn qr(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn textbook_maximization() {
        // max 3a + 2b  s.t. a + b <= 4, a + 3b <= 6, a <= 3
        let mut lp = LinearProgram::new();
        let a = lp.add_var();
        let b = lp.add_var();
        lp.add_row(vec![(a, q(1)), (b, q(1))], RowKind::Le, q(4));
        lp.add_row(vec![(a, q(1)), (b, q(3))], RowKind::Le, q(6));
        lp.add_row(vec![(a, q(1))], RowKind::Le, q(3));
        lp.set_objective(vec![(a, q(-3)), (b, q(-2))]);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, q(-11));
                assert_eq!(x, vec![q(3), q(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_fractions() {
        // min a  s.t. 3a >= 1
        let mut lp = LinearProgram::new();
        let a = lp.add_var();
        lp.add_row(vec![(a, q(3))], RowKind::Ge, q(1));
        lp.set_objective(vec![(a, q(1))]);
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                x: vec![qr(1, 3)],
                value: qr(1, 3)
            }
        );
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var();
        lp.add_row(vec![(a, q(1))], RowKind::Le, q(-1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let a = lp.add_var();
        let b = lp.add_var();
        lp.add_row(vec![(a, q(1)), (b, q(-1))], RowKind::Eq, q(0));
        lp.set_objective(vec![(a, q(-1))]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var();
        let b = lp.add_var();
        lp.add_row(vec![(a, q(1)), (b, q(1))], RowKind::Eq, q(2));
        lp.add_row(vec![(a, q(2)), (b, q(2))], RowKind::Eq, q(4));
        lp.set_objective(vec![(a, q(1)), (b, q(2))]);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(2)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
