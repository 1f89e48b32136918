//! Expected runtime bounds from probabilistic linear ranking functions.
//!
//! A PLRF `f` for a set of target general transitions satisfies, under
//! `inv(l_g) && phi_g` for each `g` leaving `l_g`:
//!
//! * target `g`: `sum_t p_t * f(l_t)(eta_t) <= f(l_g) - 1`, `f(l_g) >= 0`
//!   and `f(l_t)(eta_t) >= 0` for every member `t`;
//! * other `g`: `f(l_t)(eta_t) <= f(l_g)` for every member `t`.
//!
//! Then `max(0, f)` is a nonnegative supermartingale that drops by one in
//! expectation per target step, so `max(0, f(l0)(sigma0))` bounds the
//! expected number of target steps. Conditions are encoded with Farkas
//! multipliers and solved exactly; every solution is checked again by
//! elimination before it is returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, Integer, One, Signed, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::constraint::{Atom, Constraint, Update};
use crate::entail::{entails, is_satisfiable, Satisfiability};
use crate::farkas::{LinExpr, Model, ParamAffine};
use crate::invariants::InvariantMap;
use crate::poly::{EvalError, Monomial, Polynomial, State, Var};
use crate::program::{Loc, Pip};
use crate::simplex::{LpOutcome, Q};

/// Weight of the initial location's coefficients in the objective.
const INITIAL_WEIGHT: i64 = 10_000;

/// Affine expression with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineQ {
    pub coeffs: BTreeMap<Var, Q>,
    pub constant: Q,
}

impl AffineQ {
    pub fn constant(c: Q) -> AffineQ {
        AffineQ {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &AffineQ, k: &Q) {
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert_with(Q::zero);
            *e += c * k;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant * k;
    }

    pub fn substitute(&self, images: &BTreeMap<Var, Polynomial>) -> AffineQ {
        let mut out = AffineQ::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            let img = images.get(v).cloned().unwrap_or_else(|| Polynomial::var(v.clone()));
            out.add_scaled(&AffineQ::from_poly(&img), c);
        }
        out
    }

    pub fn from_poly(p: &Polynomial) -> AffineQ {
        debug_assert!(p.is_linear());
        let mut out = AffineQ::constant(Q::from_integer(p.constant_term()));
        for v in p.vars() {
            out.coeffs.insert(v.clone(), Q::from_integer(p.linear_coeff(&v)));
        }
        out
    }

    /// A positive multiple with integer coefficients.
    pub fn to_integer_poly(&self) -> Polynomial {
        let lcm = self
            .coeffs
            .values()
            .chain([&self.constant])
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let scale = |q: &Q| (q * Q::from_integer(lcm.clone())).to_integer();
        Polynomial::from_terms(
            self.coeffs
                .iter()
                .map(|(v, q)| (Monomial::var(v.clone()), scale(q)))
                .chain([(Monomial::one(), scale(&self.constant))]),
        )
    }

    pub fn eval(&self, s: &State) -> Result<Q, EvalError> {
        let mut out = self.constant.clone();
        for (v, c) in &self.coeffs {
            let x = s.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
            out += c * Q::from_integer(x.clone());
        }
        Ok(out)
    }
}

fn fmt_coeff_term(f: &mut fmt::Formatter<'_>, c: &Q, v: &Var) -> fmt::Result {
    if c.is_one() {
        write!(f, "{v}")
    } else {
        write!(f, "{c}*{v}")
    }
}

impl fmt::Display for AffineQ {
    /// Constant first: `3 + 2*y`, `-1 + 2*y`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.constant.is_zero() || self.coeffs.is_empty() {
            write!(f, "{}", self.constant)?;
            first = false;
        }
        for (v, c) in &self.coeffs {
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
                first = false;
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            fmt_coeff_term(f, &c.abs(), v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlrfKind {
    Constant,
    Linear,
}

impl fmt::Display for PlrfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlrfKind::Constant => "constant",
            PlrfKind::Linear => "linear",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plrf {
    pub kind: PlrfKind,
    /// General transition indices.
    pub targets: BTreeSet<usize>,
    pub f: BTreeMap<Loc, AffineQ>,
}

impl Plrf {
    pub fn at(&self, l: &Loc) -> AffineQ {
        self.f.get(l).cloned().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("transition {0} has a nonlinear update")]
    Unsupported(String),
    #[error("general transitions not covered: {}", .0.join(", "))]
    Uncovered(Vec<String>),
    #[error("bound {bound} for {targets} mentions temporaries {}", .vars.join(", "))]
    Temporary {
        targets: String,
        bound: String,
        vars: Vec<String>,
    },
    #[error("certificate for {targets} fails at {condition}")]
    Certificate { targets: String, condition: String },
}

/// Affine forms that PLRF conditions are built from.
trait Template: Clone + Default {
    fn add_scaled(&mut self, other: &Self, k: &Q);
    fn after(&self, eta: &Update) -> Self;
    fn add_constant(&mut self, c: &Q);
}

impl Template for AffineQ {
    fn add_scaled(&mut self, other: &Self, k: &Q) {
        AffineQ::add_scaled(self, other, k)
    }

    fn after(&self, eta: &Update) -> Self {
        self.substitute(eta.images())
    }

    fn add_constant(&mut self, c: &Q) {
        self.constant += c;
    }
}

impl Template for ParamAffine {
    fn add_scaled(&mut self, other: &Self, k: &Q) {
        ParamAffine::add_scaled(self, other, k)
    }

    fn after(&self, eta: &Update) -> Self {
        self.substitute(eta.images())
    }

    fn add_constant(&mut self, c: &Q) {
        self.constant.constant += c;
    }
}

// One implication `premise => expr <= 0`, labelled for diagnostics.
struct Condition<E> {
    label: String,
    premise: Constraint,
    expr: E,
}

fn premise(p: &Pip, inv: &InvariantMap, gi: usize) -> Option<Constraint> {
    let g = &p.gts[gi];
    let full = inv.get(&g.source).and(&g.guard);
    let linear: Constraint = full.atoms().filter(|a| a.is_linear()).cloned().collect();
    match is_satisfiable(&linear) {
        Satisfiability::Unsat => None,
        _ => Some(linear),
    }
}

fn conditions<E: Template>(
    p: &Pip,
    inv: &InvariantMap,
    targets: &BTreeSet<usize>,
    f: impl Fn(&Loc) -> E,
) -> Vec<Condition<E>> {
    let one = Q::one();
    let minus = -Q::one();
    let mut out = Vec::new();
    for (gi, g) in p.gts.iter().enumerate() {
        let Some(pre) = premise(p, inv, gi) else {
            continue;
        };
        let here = f(&g.source);
        let mut push = |label: String, expr: E| {
            out.push(Condition {
                label,
                premise: pre.clone(),
                expr,
            })
        };
        if targets.contains(&gi) {
            let mut dec = E::default();
            for t in &g.members {
                dec.add_scaled(&f(&t.target).after(&t.update), &t.prob);
            }
            dec.add_scaled(&here, &minus);
            dec.add_constant(&one);
            push(format!("decrease of {}", g.label()), dec);
            let mut neg = E::default();
            neg.add_scaled(&here, &minus);
            push(format!("nonnegativity at {}", g.source), neg);
            for t in &g.members {
                let mut neg = E::default();
                neg.add_scaled(&f(&t.target).after(&t.update), &minus);
                push(format!("nonnegativity after {}", t.name), neg);
            }
        } else {
            for t in &g.members {
                let mut e = f(&t.target).after(&t.update);
                e.add_scaled(&here, &minus);
                push(format!("non-increase along {}", t.name), e);
            }
        }
    }
    out
}

fn targets_label(p: &Pip, targets: &BTreeSet<usize>) -> String {
    let labels: Vec<String> = targets.iter().map(|&gi| p.gts[gi].label()).collect();
    labels.join(" + ")
}

/// Checks every condition of `plrf` by elimination.
pub fn verify(p: &Pip, inv: &InvariantMap, plrf: &Plrf) -> Result<(), BoundError> {
    for c in conditions(p, inv, &plrf.targets, |l| plrf.at(l)) {
        let atom = Atom::le(c.expr.to_integer_poly(), Polynomial::zero());
        if !entails(&c.premise, &atom) {
            return Err(BoundError::Certificate {
                targets: targets_label(p, &plrf.targets),
                condition: c.label,
            });
        }
    }
    Ok(())
}

struct Synthesis {
    model: Model,
    objective: Vec<(usize, Q)>,
    templates: BTreeMap<Loc, ParamAffine>,
}

impl Synthesis {
    fn new() -> Synthesis {
        Synthesis {
            model: Model::new(),
            objective: Vec::new(),
            templates: BTreeMap::new(),
        }
    }

    // A free unknown whose absolute value is charged `weight`.
    fn unknown(&mut self, weight: i64) -> LinExpr {
        let (e, pos, neg) = self.model.free();
        self.objective.push((pos, Q::from_integer(weight.into())));
        self.objective.push((neg, Q::from_integer(weight.into())));
        e
    }

    fn template(&mut self, l: &Loc, vars: &BTreeSet<Var>, weight: i64) {
        let mut t = ParamAffine {
            coeffs: BTreeMap::new(),
            constant: self.unknown(weight),
        };
        for v in vars {
            let e = self.unknown(weight);
            t.coeffs.insert(v.clone(), e);
        }
        self.templates.insert(l.clone(), t);
    }

    fn solve(mut self, p: &Pip, inv: &InvariantMap, targets: &BTreeSet<usize>, kind: PlrfKind) -> Option<Plrf> {
        let templates = self.templates.clone();
        for c in conditions(p, inv, targets, |l| templates.get(l).cloned().unwrap_or_default()) {
            self.model.require_implication(&c.premise, &c.expr);
        }
        self.model.lp.set_objective(self.objective);
        let LpOutcome::Optimal { x, .. } = self.model.solve() else {
            return None;
        };
        let f = templates
            .iter()
            .map(|(l, t)| {
                let mut a = AffineQ::constant(t.constant.eval(&x));
                for (v, e) in &t.coeffs {
                    let c = e.eval(&x);
                    if !c.is_zero() {
                        a.coeffs.insert(v.clone(), c);
                    }
                }
                (l.clone(), a)
            })
            .collect();
        let plrf = Plrf {
            kind,
            targets: targets.clone(),
            f,
        };
        verify(p, inv, &plrf).ok().map(|()| plrf)
    }
}

fn weight(p: &Pip, l: &Loc) -> i64 {
    if *l == p.initial {
        INITIAL_WEIGHT
    } else {
        1
    }
}

/// A location-wise constant PLRF minimising `f(l0)`, if one exists.
pub fn find_constant_plrf(p: &Pip, inv: &InvariantMap, targets: &BTreeSet<usize>) -> Option<Plrf> {
    let mut s = Synthesis::new();
    for l in &p.locations {
        s.template(l, &BTreeSet::new(), weight(p, l));
    }
    s.solve(p, inv, targets, PlrfKind::Constant)
}

/// A location-wise affine PLRF over the program variables.
///
/// When none exists, `f(l0)` may additionally read the temporaries of the
/// general transitions leaving `l0`; such a PLRF is valid but yields no
/// bound in terms of the initial state, which [`compose_bound`] reports.
pub fn find_linear_plrf(
    p: &Pip,
    inv: &InvariantMap,
    targets: &BTreeSet<usize>,
) -> Result<Option<Plrf>, BoundError> {
    for (_, _, t) in p.transitions() {
        if !t.update.is_linear() {
            return Err(BoundError::Unsupported(t.name.clone()));
        }
    }
    let pv: BTreeSet<Var> = p.program_vars.iter().cloned().collect();
    let build = |initial_vars: &BTreeSet<Var>| {
        let mut s = Synthesis::new();
        for l in &p.locations {
            let vars = if *l == p.initial { initial_vars } else { &pv };
            s.template(l, vars, weight(p, l));
        }
        s.solve(p, inv, targets, PlrfKind::Linear)
    };
    if let Some(plrf) = build(&pv) {
        return Ok(Some(plrf));
    }
    let mut widened = pv.clone();
    for gi in p.outgoing(&p.initial) {
        widened.extend(p.gts[gi].vars().into_iter().filter(|v| !p.is_program_var(v)));
    }
    if widened == pv {
        return Ok(None);
    }
    Ok(build(&widened))
}

/// A constant PLRF when one exists, otherwise a linear one.
pub fn find_plrf(p: &Pip, inv: &InvariantMap, targets: &BTreeSet<usize>) -> Result<Option<Plrf>, BoundError> {
    match find_constant_plrf(p, inv, targets) {
        Some(plrf) => Ok(Some(plrf)),
        None => find_linear_plrf(p, inv, targets),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryBound {
    pub targets: BTreeSet<usize>,
    /// `f(l0)`; the entry charges `max(0, bound)`.
    pub bound: AffineQ,
    pub plrf: Plrf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuntimeBound {
    pub entries: Vec<EntryBound>,
    /// Sum of the entry bounds.
    pub total: AffineQ,
}

impl RuntimeBound {
    /// `sum over entries of max(0, bound(sigma0))`.
    pub fn eval(&self, sigma0: &State) -> Result<Q, EvalError> {
        self.entries.iter().try_fold(Q::zero(), |acc, e| {
            let v = e.bound.eval(sigma0)?;
            Ok(acc + if v.is_negative() { Q::zero() } else { v })
        })
    }

    /// The bound charged to general transition `gi`.
    pub fn for_gt(&self, gi: usize) -> Option<&EntryBound> {
        self.entries.iter().find(|e| e.targets.contains(&gi))
    }
}

/// `f(l0)` of `plrf`, rejected when it reads temporaries.
pub fn entry_bound(p: &Pip, plrf: &Plrf) -> Result<AffineQ, BoundError> {
    let bound = plrf.at(&p.initial);
    let temps: Vec<String> = bound
        .vars()
        .into_iter()
        .filter(|v| !p.is_program_var(v))
        .map(|v| v.to_string())
        .collect();
    if temps.is_empty() {
        Ok(bound)
    } else {
        Err(BoundError::Temporary {
            targets: targets_label(p, &plrf.targets),
            bound: bound.to_string(),
            vars: temps,
        })
    }
}

pub fn compose_bound(p: &Pip, cover: &[Plrf]) -> Result<RuntimeBound, BoundError> {
    let mut entries = Vec::new();
    let mut total = AffineQ::default();
    for plrf in cover {
        let bound = entry_bound(p, plrf)?;
        total.add_scaled(&bound, &Q::one());
        entries.push(EntryBound {
            targets: plrf.targets.clone(),
            bound,
            plrf: plrf.clone(),
        });
    }
    let covered: BTreeSet<usize> = cover.iter().flat_map(|c| c.targets.iter().copied()).collect();
    let missing: Vec<String> = (0..p.gts.len())
        .filter(|gi| !covered.contains(gi))
        .map(|gi| p.gts[gi].label())
        .collect();
    if !missing.is_empty() {
        return Err(BoundError::Uncovered(missing));
    }
    Ok(RuntimeBound { entries, total })
}

/// One entry per strongly connected component for general transitions on
/// a cycle, one singleton entry for every other general transition,
/// ordered by the first general transition of each entry.
pub fn default_cover(p: &Pip) -> Vec<BTreeSet<usize>> {
    let mut graph: DiGraph<Loc, ()> = DiGraph::new();
    let nodes: BTreeMap<Loc, NodeIndex> = p
        .locations
        .iter()
        .map(|l| (l.clone(), graph.add_node(l.clone())))
        .collect();
    for (src, dst, _) in p.edges() {
        graph.add_edge(nodes[src], nodes[dst], ());
    }
    let mut component = BTreeMap::new();
    for (k, scc) in tarjan_scc(&graph).into_iter().enumerate() {
        for n in scc {
            component.insert(n, k);
        }
    }
    let mut by_scc: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut cover = Vec::new();
    for (gi, g) in p.gts.iter().enumerate() {
        let src = component[&nodes[&g.source]];
        let cyclic = g.members.iter().any(|t| component[&nodes[&t.target]] == src);
        if cyclic {
            by_scc.entry(src).or_default().insert(gi);
        } else {
            cover.push(BTreeSet::from([gi]));
        }
    }
    cover.extend(by_scc.into_values());
    cover.sort_by_key(|e| e.first().copied());
    cover
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundOutcome {
    Bound(RuntimeBound),
    /// No finite bound: the general transitions that could not be bounded
    /// on their own, each with the reason.
    NoBound(Vec<(usize, String)>),
}

fn bound_entry(p: &Pip, inv: &InvariantMap, targets: &BTreeSet<usize>) -> Result<Plrf, String> {
    match find_plrf(p, inv, targets) {
        Err(e) => Err(e.to_string()),
        Ok(None) => Err("no constant or linear PLRF".to_string()),
        Ok(Some(plrf)) => entry_bound(p, &plrf).map(|_| plrf).map_err(|e| e.to_string()),
    }
}

/// Bounds every entry of `cover`; an entry with several general transitions
/// that fails as a whole is retried one general transition at a time.
pub fn analyze(p: &Pip, inv: &InvariantMap, cover: &[BTreeSet<usize>]) -> Result<BoundOutcome, BoundError> {
    let mut plrfs = Vec::new();
    let mut failing = Vec::new();
    for entry in cover {
        if let Ok(plrf) = bound_entry(p, inv, entry) {
            plrfs.push(plrf);
            continue;
        }
        for &gi in entry {
            match bound_entry(p, inv, &BTreeSet::from([gi])) {
                Ok(plrf) => plrfs.push(plrf),
                Err(reason) => failing.push((gi, reason)),
            }
        }
    }
    if !failing.is_empty() {
        return Ok(BoundOutcome::NoBound(failing));
    }
    compose_bound(p, &plrfs).map(BoundOutcome::Bound)
}
