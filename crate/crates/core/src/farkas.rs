//! Affine Farkas certificates encoded as linear programs.
//!
//! For a satisfiable premise `p_1 <= 0, ..., e_1 = 0, ...` the implication
//! `premise => L <= 0` holds over the rationals iff there are `mu >= 0`,
//! free `nu` and `delta >= 0` with `L = sum mu_i p_i + sum nu_j e_j - delta`
//! as affine forms. When the coefficients of `L` are themselves unknowns
//! this stays linear, which is what ranking-function synthesis relies on.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Zero};

use crate::constraint::{Atom, Constraint, Rel};
use crate::poly::{Polynomial, Var};
use crate::simplex::{LinearProgram, LpOutcome, RowKind, Q};

/// An affine expression over LP columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: BTreeMap<usize, Q>,
    pub constant: Q,
}

impl LinExpr {
    pub fn constant(c: Q) -> LinExpr {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn column(j: usize) -> LinExpr {
        LinExpr {
            terms: BTreeMap::from([(j, Q::one())]),
            constant: Q::zero(),
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, k: &Q) {
        if k.is_zero() {
            return;
        }
        for (j, c) in &other.terms {
            let e = self.terms.entry(*j).or_insert_with(Q::zero);
            *e += c * k;
            if e.is_zero() {
                self.terms.remove(j);
            }
        }
        self.constant += &other.constant * k;
    }

    pub fn scaled(&self, k: &Q) -> LinExpr {
        let mut out = LinExpr::default();
        out.add_scaled(self, k);
        out
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.terms
            .iter()
            .fold(self.constant.clone(), |acc, (j, c)| acc + c * &x[*j])
    }
}

/// An affine form over program variables whose coefficients are [`LinExpr`]s.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamAffine {
    pub coeffs: BTreeMap<Var, LinExpr>,
    pub constant: LinExpr,
}

impl ParamAffine {
    /// Embeds a fixed linear polynomial.
    pub fn from_poly(p: &Polynomial) -> ParamAffine {
        debug_assert!(p.is_linear());
        let mut out = ParamAffine::default();
        for v in p.vars() {
            out.coeffs
                .insert(v.clone(), LinExpr::constant(Q::from_integer(p.linear_coeff(&v))));
        }
        out.constant = LinExpr::constant(Q::from_integer(p.constant_term()));
        out
    }

    pub fn add_scaled(&mut self, other: &ParamAffine, k: &Q) {
        for (v, e) in &other.coeffs {
            self.coeffs.entry(v.clone()).or_default().add_scaled(e, k);
        }
        self.constant.add_scaled(&other.constant, k);
    }

    /// Substitutes program variables by linear polynomials.
    pub fn substitute(&self, images: &BTreeMap<Var, Polynomial>) -> ParamAffine {
        let mut out = ParamAffine {
            coeffs: BTreeMap::new(),
            constant: self.constant.clone(),
        };
        for (v, e) in &self.coeffs {
            match images.get(v) {
                None => out.coeffs.entry(v.clone()).or_default().add_scaled(e, &Q::one()),
                Some(img) => {
                    debug_assert!(img.is_linear());
                    for w in img.vars() {
                        let k = Q::from_integer(img.linear_coeff(&w));
                        out.coeffs.entry(w).or_default().add_scaled(e, &k);
                    }
                    let k = Q::from_integer(img.constant_term());
                    out.constant.add_scaled(e, &k);
                }
            }
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.coeffs.keys().cloned().collect()
    }
}

/// A linear program under construction with support for free unknowns.
#[derive(Default)]
pub struct Model {
    pub lp: LinearProgram,
}

impl Model {
    pub fn new() -> Model {
        Model::default()
    }

    pub fn nonneg(&mut self) -> LinExpr {
        LinExpr::column(self.lp.add_var())
    }

    /// A free unknown, encoded as the difference of two columns.
    pub fn free(&mut self) -> (LinExpr, usize, usize) {
        let p = self.lp.add_var();
        let n = self.lp.add_var();
        let mut e = LinExpr::column(p);
        e.add_scaled(&LinExpr::column(n), &-Q::one());
        (e, p, n)
    }

    /// Adds `e kind 0`.
    pub fn constrain(&mut self, e: &LinExpr, kind: RowKind) {
        let coeffs: Vec<(usize, Q)> = e.terms.iter().map(|(j, c)| (*j, c.clone())).collect();
        if coeffs.is_empty() {
            // constant row: encode against a dummy column so infeasibility is still reported
            let z = self.lp.add_var();
            self.lp.add_row(vec![(z, Q::zero())], kind, -e.constant.clone());
            return;
        }
        self.lp.add_row(coeffs, kind, -e.constant.clone());
    }

    /// Requires `premise => conclusion <= 0` via multipliers.
    ///
    /// The premise must consist of linear atoms; callers skip implications
    /// whose premise is unsatisfiable, where the affine form is incomplete.
    pub fn require_implication(&mut self, premise: &Constraint, conclusion: &ParamAffine) {
        let mut combo = ParamAffine::default();
        for a in premise.atoms() {
            debug_assert!(a.is_linear());
            let m = match a.rel() {
                Rel::Le => self.nonneg(),
                Rel::Eq => self.free().0,
            };
            let pa = ParamAffine::from_poly(a.poly());
            for (v, e) in &pa.coeffs {
                let k = e.constant.clone();
                combo.coeffs.entry(v.clone()).or_default().add_scaled(&m, &k);
            }
            combo.constant.add_scaled(&m, &pa.constant.constant);
        }
        let delta = self.nonneg();
        combo.constant.add_scaled(&delta, &-Q::one());

        let vars: BTreeSet<Var> = conclusion.vars().union(&combo.vars()).cloned().collect();
        for v in vars {
            let mut diff = conclusion.coeffs.get(&v).cloned().unwrap_or_default();
            if let Some(c) = combo.coeffs.get(&v) {
                diff.add_scaled(c, &-Q::one());
            }
            self.constrain(&diff, RowKind::Eq);
        }
        let mut diff = conclusion.constant.clone();
        diff.add_scaled(&combo.constant, &-Q::one());
        self.constrain(&diff, RowKind::Eq);
    }

    pub fn solve(&self) -> LpOutcome {
        self.lp.solve()
    }
}

/// Is a linear premise unsatisfiable, decided by a Farkas refutation
/// `sum mu_i p_i + sum nu_j e_j = 1` with all variable coefficients zero?
pub fn refutes(premise: &Constraint) -> bool {
    if !premise.is_linear() {
        return false;
    }
    let mut m = Model::new();
    let mut combo = ParamAffine::default();
    for a in premise.atoms() {
        let mu = match a.rel() {
            Rel::Le => m.nonneg(),
            Rel::Eq => m.free().0,
        };
        let pa = ParamAffine::from_poly(a.poly());
        combo.add_scaled(
            &ParamAffine {
                coeffs: pa
                    .coeffs
                    .iter()
                    .map(|(v, e)| (v.clone(), mu.scaled(&e.constant)))
                    .collect(),
                constant: mu.scaled(&pa.constant.constant),
            },
            &Q::one(),
        );
    }
    for e in combo.coeffs.values() {
        m.constrain(e, RowKind::Eq);
    }
    let mut c = combo.constant.clone();
    c.constant -= Q::one();
    m.constrain(&c, RowKind::Eq);
    matches!(m.solve(), LpOutcome::Optimal { .. })
}

/// Entailment decided purely by certificates, independent of elimination.
pub fn entails_by_certificate(premise: &Constraint, conclusion: &Atom) -> bool {
    if conclusion.is_trivially_true() || premise.contains(conclusion) {
        return true;
    }
    if !conclusion.is_linear() || !premise.is_linear() {
        return false;
    }
    if refutes(premise) {
        return true;
    }
    let sides: Vec<Polynomial> = match conclusion.rel() {
        Rel::Le => vec![conclusion.poly().clone()],
        Rel::Eq => vec![conclusion.poly().clone(), -conclusion.poly()],
    };
    sides.iter().all(|p| {
        let mut m = Model::new();
        m.require_implication(premise, &ParamAffine::from_poly(p));
        matches!(m.solve(), LpOutcome::Optimal { .. })
    })
}
