//! Integer polynomials over named variables, states, and evaluation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

/// A variable name. Cheap to clone and ordered by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// Whether a variable is a program variable or a temporary chosen by the scheduler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Program,
    Temporary,
}

/// A power product of variables. The empty monomial is the constant `1`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial(BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(v: Var) -> Self {
        let mut m = BTreeMap::new();
        m.insert(v, 1);
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// The single variable of a degree-one monomial.
    pub fn as_var(&self) -> Option<&Var> {
        if self.degree() == 1 {
            self.0.keys().next()
        } else {
            None
        }
    }

    pub fn powers(&self) -> impl Iterator<Item = (&Var, u32)> {
        self.0.iter().map(|(v, e)| (v, *e))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (v, e) in &other.0 {
            *out.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }
}

// Graded lexicographic: total degree first, then the (variable, exponent) list.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.iter().cmp(other.0.iter()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for (v, e) in &self.0 {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is not bound in the state")]
    Unbound(Var),
}

/// Total assignment of integers to the variables it mentions.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(BTreeMap<Var, BigInt>);

impl State {
    pub fn new() -> Self {
        State(BTreeMap::new())
    }

    pub fn from_pairs<I, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (V, i64)>,
        V: Into<Var>,
    {
        State(
            pairs
                .into_iter()
                .map(|(v, n)| (v.into(), BigInt::from(n)))
                .collect(),
        )
    }

    pub fn get(&self, v: &Var) -> Option<&BigInt> {
        self.0.get(v)
    }

    pub fn set(&mut self, v: Var, value: BigInt) {
        self.0.insert(v, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &BigInt)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, n)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={n}")?;
        }
        f.write_str("}")
    }
}

/// Polynomial with integer coefficients. Zero coefficients are never stored,
/// so derived equality is structural equality.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigInt>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant<T: Into<BigInt>>(c: T) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::one(), c.into());
        p
    }

    pub fn var(v: impl Into<Var>) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::var(v.into()), BigInt::one());
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigInt)>>(terms: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Coefficient of the degree-one monomial `v`.
    pub fn linear_coeff(&self, v: &Var) -> BigInt {
        self.terms
            .get(&Monomial::var(v.clone()))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.0.keys().cloned())
            .collect()
    }

    /// Leading coefficient in graded-lex order among non-constant monomials.
    pub fn leading_nonconstant_coeff(&self) -> Option<&BigInt> {
        self.terms
            .iter()
            .rev()
            .find(|(m, _)| !m.is_one())
            .map(|(_, c)| c)
    }

    pub fn scale(&self, k: &BigInt) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Exact division of every coefficient by `k`. Callers ensure divisibility.
    pub(crate) fn div_exact(&self, k: &BigInt) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c / k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(1);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Replace every variable in `images` by its image; others stay.
    pub fn substitute(&self, images: &BTreeMap<Var, Polynomial>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut prod = Polynomial::constant(c.clone());
            for (v, e) in &m.0 {
                let factor = match images.get(v) {
                    Some(img) => img.pow(*e),
                    None => Polynomial::from_terms([(
                        Monomial(BTreeMap::from([(v.clone(), *e)])),
                        BigInt::one(),
                    )]),
                };
                prod = &prod * &factor;
            }
            out = &out + &prod;
        }
        out
    }

    pub fn eval(&self, s: &State) -> Result<BigInt, EvalError> {
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for (v, e) in &m.0 {
                let value = s.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
                prod *= num::pow(value.clone(), *e as usize);
            }
            total += prod;
        }
        Ok(total)
    }

    /// Gcd of the coefficients of non-constant monomials (zero if none).
    pub(crate) fn content_nonconstant(&self) -> BigInt {
        use num::Integer;
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_one())
            .fold(BigInt::zero(), |g, (_, c)| g.gcd(c))
    }

    pub(crate) fn without_constant(&self) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| !m.is_one())
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

// Highest degree first, e.g. `2*y - 1`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(&[(&str, u32)], i64)]) -> Polynomial {
        Polynomial::from_terms(terms.iter().map(|(m, c)| {
            (
                Monomial(m.iter().map(|(v, e)| (Var::new(v), *e)).collect()),
                BigInt::from(*c),
            )
        }))
    }

    #[test]
    fn eval_examples() {
        let u = Polynomial::var("u");
        assert_eq!(u.eval(&State::from_pairs([("u", 3)])).unwrap(), 3.into());
        let y_minus_1 = &Polynomial::var("y") - &Polynomial::constant(1);
        assert_eq!(
            y_minus_1.eval(&State::from_pairs([("y", 5)])).unwrap(),
            4.into()
        );
        let two_y = Polynomial::var("y").scale(&2.into());
        assert_eq!(two_y.eval(&State::from_pairs([("y", 4)])).unwrap(), 8.into());
    }

    #[test]
    fn eval_reports_unbound_variable() {
        let err = Polynomial::var("z").eval(&State::new()).unwrap_err();
        assert_eq!(err, EvalError::Unbound(Var::new("z")));
        assert!(err.to_string().contains("`z`"));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let x = Polynomial::var("x");
        assert!((&x - &x).is_zero());
        assert_eq!(&x - &x, Polynomial::zero());
    }

    #[test]
    fn graded_order_puts_higher_degree_last() {
        let a = Monomial::var(Var::new("z"));
        let b = Monomial(BTreeMap::from([(Var::new("a"), 2)]));
        assert!(a < b);
        assert!(Monomial::one() < a);
    }

    #[test]
    fn display() {
        let q = p(&[(&[("y", 1)], 2), (&[], -1)]);
        assert_eq!(q.to_string(), "2*y - 1");
        let r = p(&[(&[("x", 2)], -1), (&[("x", 1), ("y", 1)], 3)]);
        assert_eq!(r.to_string(), "-x^2 + 3*x*y");
    }

    #[test]
    fn substitution_composes() {
        // (x + y)[x := 2*y, y := y - 1] = 3*y - 1
        let sum = &Polynomial::var("x") + &Polynomial::var("y");
        let images = BTreeMap::from([
            (Var::new("x"), Polynomial::var("y").scale(&2.into())),
            (
                Var::new("y"),
                &Polynomial::var("y") - &Polynomial::constant(1),
            ),
        ]);
        assert_eq!(
            sum.substitute(&images),
            p(&[(&[("y", 1)], 3), (&[], -1)])
        );
    }

    fn small_poly() -> impl proptest::strategy::Strategy<Value = Polynomial> {
        use proptest::prelude::*;
        proptest::collection::vec((0u32..3, 0u32..3, -3i64..=3), 0..5).prop_map(|ts| {
            Polynomial::from_terms(ts.into_iter().map(|(ex, ey, c)| {
                let mut m = BTreeMap::new();
                if ex > 0 {
                    m.insert(Var::new("x"), ex);
                }
                if ey > 0 {
                    m.insert(Var::new("y"), ey);
                }
                (Monomial(m), BigInt::from(c))
            }))
        })
    }

    proptest::proptest! {
        #[test]
        fn eval_is_a_ring_homomorphism(
            a in small_poly(),
            b in small_poly(),
            xv in -5i64..=5,
            yv in -5i64..=5,
        ) {
            let s = State::from_pairs([("x", xv), ("y", yv)]);
            let (ea, eb) = (a.eval(&s).unwrap(), b.eval(&s).unwrap());
            proptest::prop_assert_eq!((&a + &b).eval(&s).unwrap(), &ea + &eb);
            proptest::prop_assert_eq!((&a * &b).eval(&s).unwrap(), &ea * &eb);
            proptest::prop_assert_eq!((-&a).eval(&s).unwrap(), -ea);
        }
    }
}
