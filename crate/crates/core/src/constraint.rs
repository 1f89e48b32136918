//! Atoms, conjunctive constraints and updates.
//!
//! Every atom is normalized at construction into one of two shapes,
//! `p <= 0` or `p = 0`, using integer semantics: `a < b` becomes
//! `a - b + 1 <= 0`, and the non-constant part is divided by its content
//! (rounding the constant up). Downstream engines never see strict atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, Integer, One, Signed, Zero};

use crate::poly::{EvalError, Polynomial, State, Var};

/// Comparison written in source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// Relation of a normalized atom against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    /// `poly <= 0`
    Le,
    /// `poly = 0`
    Eq,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    poly: Polynomial,
    rel: Rel,
}

impl Atom {
    pub fn new(lhs: &Polynomial, cmp: Cmp, rhs: &Polynomial) -> Atom {
        let one = Polynomial::constant(1);
        match cmp {
            Cmp::Le => Atom::normalized(lhs - rhs, Rel::Le),
            Cmp::Lt => Atom::normalized(&(lhs - rhs) + &one, Rel::Le),
            Cmp::Ge => Atom::normalized(rhs - lhs, Rel::Le),
            Cmp::Gt => Atom::normalized(&(rhs - lhs) + &one, Rel::Le),
            Cmp::Eq => Atom::normalized(lhs - rhs, Rel::Eq),
        }
    }

    pub fn lt(lhs: Polynomial, rhs: Polynomial) -> Atom {
        Atom::new(&lhs, Cmp::Lt, &rhs)
    }

    pub fn le(lhs: Polynomial, rhs: Polynomial) -> Atom {
        Atom::new(&lhs, Cmp::Le, &rhs)
    }

    pub fn eq(lhs: Polynomial, rhs: Polynomial) -> Atom {
        Atom::new(&lhs, Cmp::Eq, &rhs)
    }

    pub fn ge(lhs: Polynomial, rhs: Polynomial) -> Atom {
        Atom::new(&lhs, Cmp::Ge, &rhs)
    }

    pub fn gt(lhs: Polynomial, rhs: Polynomial) -> Atom {
        Atom::new(&lhs, Cmp::Gt, &rhs)
    }

    /// The canonical unsatisfiable atom `1 <= 0`.
    pub fn falsum() -> Atom {
        Atom {
            poly: Polynomial::constant(1),
            rel: Rel::Le,
        }
    }

    /// Builds the canonical form of `poly rel 0`.
    pub fn normalized(poly: Polynomial, rel: Rel) -> Atom {
        if poly.is_constant() {
            let c = poly.constant_term();
            let holds = match rel {
                Rel::Le => !c.is_positive(),
                Rel::Eq => c.is_zero(),
            };
            return if holds {
                Atom {
                    poly: Polynomial::zero(),
                    rel,
                }
            } else {
                Atom::falsum()
            };
        }
        let g = poly.content_nonconstant();
        let c = poly.constant_term();
        match rel {
            Rel::Le => {
                let q = poly.without_constant().div_exact(&g);
                let k = c.div_ceil(&g);
                Atom {
                    poly: &q + &Polynomial::constant(k),
                    rel,
                }
            }
            Rel::Eq => {
                if !c.is_multiple_of(&g) {
                    return Atom::falsum();
                }
                let mut p = poly.div_exact(&g);
                if p
                    .leading_nonconstant_coeff()
                    .map(Signed::is_negative)
                    .unwrap_or(false)
                {
                    p = -&p;
                }
                Atom { poly: p, rel }
            }
        }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    /// True for constant atoms that hold, e.g. `0 = 0`.
    pub fn is_trivially_true(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn is_trivially_false(&self) -> bool {
        *self == Atom::falsum()
    }

    pub fn is_linear(&self) -> bool {
        self.poly.is_linear()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.poly.vars()
    }

    pub fn substitute(&self, eta: &Update) -> Atom {
        Atom::normalized(self.poly.substitute(&eta.images), self.rel)
    }

    pub fn holds(&self, s: &State) -> Result<bool, EvalError> {
        let v = self.poly.eval(s)?;
        Ok(match self.rel {
            Rel::Le => !v.is_positive(),
            Rel::Eq => v.is_zero(),
        })
    }

    /// Splits an equality into its two inequalities; inequalities are returned as is.
    pub fn split(&self) -> Vec<Atom> {
        match self.rel {
            Rel::Le => vec![self.clone()],
            Rel::Eq => vec![
                Atom::normalized(self.poly.clone(), Rel::Le),
                Atom::normalized(-&self.poly, Rel::Le),
            ],
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.poly.without_constant();
        let c = self.poly.constant_term();
        if q.is_zero() {
            let op = match self.rel {
                Rel::Le => "<=",
                Rel::Eq => "=",
            };
            return write!(f, "{c} {op} 0");
        }
        let lead_pos = q
            .leading_nonconstant_coeff()
            .map(Signed::is_positive)
            .unwrap_or(true);
        match self.rel {
            Rel::Eq => write!(f, "{q} = {}", -c),
            Rel::Le if lead_pos => write!(f, "{q} <= {}", -c),
            // -q >= c, printed as the equivalent strict form over integers
            Rel::Le => write!(f, "{} > {}", -&q, c - BigInt::one()),
        }
    }
}

/// A conjunction of atoms; the empty set is `true`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    atoms: BTreeSet<Atom>,
}

impl Constraint {
    pub fn truth() -> Constraint {
        Constraint::default()
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Constraint {
        Constraint {
            atoms: atoms
                .into_iter()
                .filter(|a| !a.is_trivially_true())
                .collect(),
        }
    }

    pub fn single(atom: Atom) -> Constraint {
        Constraint::from_atoms([atom])
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn atom_set(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn and(&self, other: &Constraint) -> Constraint {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Constraint { atoms }
    }

    pub fn with(&self, a: Atom) -> Constraint {
        self.and(&Constraint::single(a))
    }

    pub fn is_subset(&self, other: &Constraint) -> bool {
        self.atoms.is_subset(&other.atoms)
    }

    pub fn substitute(&self, eta: &Update) -> Constraint {
        Constraint::from_atoms(self.atoms.iter().map(|a| a.substitute(eta)))
    }

    pub fn satisfied_by(&self, s: &State) -> Result<bool, EvalError> {
        for a in &self.atoms {
            if !a.holds(s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms.iter().flat_map(Atom::vars).collect()
    }

    pub fn is_linear(&self) -> bool {
        self.atoms.iter().all(Atom::is_linear)
    }
}

impl FromIterator<Atom> for Constraint {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Constraint::from_atoms(iter)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Checks `s |= c`.
pub fn satisfies(s: &State, c: &Constraint) -> Result<bool, EvalError> {
    c.satisfied_by(s)
}

/// Simultaneous assignment to program variables. Unlisted variables keep
/// their value; identity entries are never stored.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Update {
    images: BTreeMap<Var, Polynomial>,
}

impl Update {
    pub fn identity() -> Update {
        Update::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, Polynomial)>>(pairs: I) -> Update {
        let mut images = BTreeMap::new();
        for (v, p) in pairs {
            if p != Polynomial::var(v.clone()) {
                images.insert(v, p);
            }
        }
        Update { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, v: &Var) -> Polynomial {
        self.images
            .get(v)
            .cloned()
            .unwrap_or_else(|| Polynomial::var(v.clone()))
    }

    pub fn assigned(&self) -> impl Iterator<Item = (&Var, &Polynomial)> {
        self.images.iter()
    }

    pub fn images(&self) -> &BTreeMap<Var, Polynomial> {
        &self.images
    }

    pub fn vars_read(&self) -> BTreeSet<Var> {
        self.images.values().flat_map(Polynomial::vars).collect()
    }

    pub fn is_linear(&self) -> bool {
        self.images.values().all(Polynomial::is_linear)
    }

    /// Computes the successor valuation: assigned program variables get
    /// their image evaluated in `s`, every other variable keeps its value.
    pub fn apply(&self, s: &State) -> Result<State, EvalError> {
        let mut out = s.clone();
        for (v, p) in &self.images {
            out.set(v.clone(), p.eval(s)?);
        }
        Ok(out)
    }
}

impl fmt::Debug for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.images.is_empty() {
            return f.write_str("id");
        }
        for (i, (v, p)) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} := {p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x() -> Polynomial {
        Polynomial::var("x")
    }
    fn y() -> Polynomial {
        Polynomial::var("y")
    }
    fn k(n: i64) -> Polynomial {
        Polynomial::constant(n)
    }

    #[test]
    fn strict_atoms_become_non_strict() {
        assert_eq!(Atom::gt(x(), k(0)), Atom::ge(x(), k(1)));
        assert_eq!(Atom::lt(x(), k(3)), Atom::le(x(), k(2)));
        assert_eq!(Atom::gt(x(), k(0)).to_string(), "x > 0");
        assert_eq!(Atom::le(x(), k(5)).to_string(), "x <= 5");
    }

    #[test]
    fn content_is_divided_out_with_rounding() {
        // 2x >= 1  <=>  x >= 1 over the integers
        assert_eq!(
            Atom::ge(x().scale(&2.into()), k(1)),
            Atom::ge(x(), k(1))
        );
        // 2x = 1 has no integer solution
        assert!(Atom::eq(x().scale(&2.into()), k(1)).is_trivially_false());
        // equalities are sign-normalized
        assert_eq!(Atom::eq(k(0), x()), Atom::eq(x(), k(0)));
    }

    #[test]
    fn substitute_examples() {
        let x_is_0 = Constraint::single(Atom::eq(x(), k(0)));
        let to_zero = Update::from_pairs([(Var::new("x"), k(0))]);
        assert!(x_is_0.substitute(&to_zero).is_true());

        let x_is_m1 = Constraint::single(Atom::eq(x(), k(-1)));
        let dec = Update::from_pairs([(Var::new("x"), &x() - &k(1))]);
        assert_eq!(
            x_is_m1.substitute(&dec),
            Constraint::single(Atom::eq(&x() - &k(1), k(-1)))
        );

        assert!(Constraint::truth().substitute(&dec).is_true());
    }

    #[test]
    fn substitution_leaves_temporaries() {
        let c = Constraint::single(Atom::gt(Polynomial::var("u") + x(), k(0)));
        let upd = Update::from_pairs([(Var::new("x"), y())]);
        let got = c.substitute(&upd);
        assert!(got.vars().contains(&Var::new("u")));
        assert!(!got.vars().contains(&Var::new("x")));
    }

    #[test]
    fn satisfies_examples() {
        let pos = Constraint::single(Atom::gt(x(), k(0)));
        assert!(satisfies(&State::from_pairs([("x", 1)]), &pos).unwrap());
        assert!(!satisfies(&State::from_pairs([("x", 0)]), &pos).unwrap());
        let guard = Constraint::from_atoms([Atom::gt(y(), k(0)), Atom::eq(x(), k(0))]);
        assert!(satisfies(&State::from_pairs([("x", 0), ("y", 3)]), &guard).unwrap());
    }

    #[test]
    fn identity_entries_are_not_stored() {
        let u = Update::from_pairs([(Var::new("x"), x()), (Var::new("y"), k(1))]);
        assert_eq!(u, Update::from_pairs([(Var::new("y"), k(1))]));
        assert_eq!(u.to_string(), "y := 1");
    }

    fn small_linear() -> impl Strategy<Value = Polynomial> {
        (-3i64..=3, -3i64..=3, -4i64..=4).prop_map(|(a, b, c)| {
            &(&x().scale(&a.into()) + &y().scale(&b.into())) + &k(c)
        })
    }

    fn cmp() -> impl Strategy<Value = Cmp> {
        prop_oneof![
            Just(Cmp::Lt),
            Just(Cmp::Le),
            Just(Cmp::Eq),
            Just(Cmp::Ge),
            Just(Cmp::Gt)
        ]
    }

    fn direct(l: &BigInt, c: Cmp, r: &BigInt) -> bool {
        match c {
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Eq => l == r,
            Cmp::Ge => l >= r,
            Cmp::Gt => l > r,
        }
    }

    proptest! {
        #[test]
        fn normalization_is_sound_on_integers(
            l in small_linear(), r in small_linear(), c in cmp(),
            xv in -6i64..=6, yv in -6i64..=6,
        ) {
            let s = State::from_pairs([("x", xv), ("y", yv)]);
            let expected = direct(&l.eval(&s).unwrap(), c, &r.eval(&s).unwrap());
            prop_assert_eq!(Atom::new(&l, c, &r).holds(&s).unwrap(), expected);
        }

        #[test]
        fn identity_substitution_is_structural_noop(
            ps in proptest::collection::vec((small_linear(), cmp(), small_linear()), 0..4)
        ) {
            let c: Constraint = ps.iter().map(|(l, o, r)| Atom::new(l, *o, r)).collect();
            prop_assert_eq!(c.substitute(&Update::identity()), c);
        }
    }
}
