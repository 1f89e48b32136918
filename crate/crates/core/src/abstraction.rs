//! Abstraction layers and the labels they induce.
//!
//! A layer `alpha_l` is the finite atom set from which labels of copies of
//! `l` are drawn, so `l` has at most `2^|alpha_l|` copies after refinement.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraint::{Atom, Constraint, Update};
use crate::entail::entails;
use crate::program::{Loc, Pip, TransId};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractionLayer {
    layers: BTreeMap<Loc, BTreeSet<Atom>>,
}

impl AbstractionLayer {
    pub fn new(layers: BTreeMap<Loc, BTreeSet<Atom>>) -> AbstractionLayer {
        AbstractionLayer { layers }
    }

    /// The layer at `l`; empty when none was set.
    pub fn get(&self, l: &Loc) -> &BTreeSet<Atom> {
        static EMPTY: BTreeSet<Atom> = BTreeSet::new();
        self.layers.get(l).unwrap_or(&EMPTY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &BTreeSet<Atom>)> {
        self.layers.iter()
    }

    pub fn set(&mut self, l: Loc, atoms: BTreeSet<Atom>) {
        self.layers.insert(l, atoms);
    }
}

/// Adjustments applied on top of the guard heuristic.
#[derive(Clone, Debug, Default)]
pub struct LayerOptions {
    /// Record `p = 0` as `p <= 0` and `-p <= 0`.
    pub split_equalities: bool,
    /// Exact layers that replace the heuristic at the given locations.
    pub pinned: BTreeMap<Loc, BTreeSet<Atom>>,
    /// Atoms added to the heuristic's choice.
    pub extra: BTreeMap<Loc, BTreeSet<Atom>>,
}

fn layer_atom(p: &Pip, a: &Atom) -> bool {
    !a.is_trivially_true() && a.vars().iter().all(|v| p.is_program_var(v))
}

/// Guard atoms of `S`-transitions leaving `l`, plus those leaving any
/// location with an `S`-transition into `l`.
pub fn heuristic_layers(p: &Pip, s: &BTreeSet<TransId>, opts: &LayerOptions) -> AbstractionLayer {
    let mut own: BTreeMap<Loc, BTreeSet<Atom>> = BTreeMap::new();
    let mut preds: BTreeMap<Loc, BTreeSet<Loc>> = BTreeMap::new();
    for &id in s {
        let g = &p.gts[id.gt];
        let t = p.transition(id);
        let atoms = own.entry(g.source.clone()).or_default();
        for a in g.guard.atoms().filter(|a| layer_atom(p, a)) {
            if opts.split_equalities {
                atoms.extend(a.split());
            } else {
                atoms.insert(a.clone());
            }
        }
        preds
            .entry(t.target.clone())
            .or_default()
            .insert(g.source.clone());
    }
    let mut layers = BTreeMap::new();
    for l in &p.locations {
        let mut atoms = own.get(l).cloned().unwrap_or_default();
        for q in preds.get(l).into_iter().flatten() {
            atoms.extend(own.get(q).into_iter().flatten().cloned());
        }
        if let Some(extra) = opts.extra.get(l) {
            atoms.extend(extra.iter().cloned());
        }
        if let Some(pinned) = opts.pinned.get(l) {
            atoms = pinned.clone();
        }
        layers.insert(l.clone(), atoms);
    }
    AbstractionLayer { layers }
}

/// `{ psi in layer | tau && phi |= eta(psi) }`.
pub fn label(tau: &Constraint, phi: &Constraint, eta: &Update, layer: &BTreeSet<Atom>) -> Constraint {
    let pre = tau.and(phi);
    layer
        .iter()
        .filter(|psi| entails(&pre, &psi.substitute(eta)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::io::parse::{parse_atom, parse_constraint};
    use crate::poly::{Polynomial, Var};
    use proptest::prelude::*;

    fn atom(s: &str) -> Atom {
        parse_atom(s).unwrap()
    }

    fn s_of(p: &Pip, names: &[&str]) -> BTreeSet<TransId> {
        names.iter().map(|n| p.find_transition(n).unwrap()).collect()
    }

    #[test]
    fn fig1_heuristic_contains_the_reset_test() {
        let p = corpus::fig1();
        let layers = heuristic_layers(&p, &s_of(&p, &["t1a", "t1b", "t2", "t3"]), &LayerOptions::default());
        assert!(layers.get(&Loc::new("l1")).contains(&atom("x = 0")));
        assert!(layers.get(&Loc::new("l2")).contains(&atom("x = 0")));
        assert!(layers.get(&Loc::new("l0")).is_empty());
    }

    #[test]
    fn empty_selection_gives_empty_layers() {
        let p = corpus::fig1();
        let layers = heuristic_layers(&p, &BTreeSet::new(), &LayerOptions::default());
        assert!(layers.iter().all(|(_, a)| a.is_empty()));
    }

    #[test]
    fn pinned_layers_override() {
        let p = corpus::fig1();
        let opts = LayerOptions {
            pinned: BTreeMap::from([(Loc::new("l1"), BTreeSet::from([atom("x = 0")]))]),
            ..LayerOptions::default()
        };
        let layers = heuristic_layers(&p, &s_of(&p, &["t1a", "t1b", "t2", "t3"]), &opts);
        assert_eq!(layers.get(&Loc::new("l1")), &BTreeSet::from([atom("x = 0")]));
    }

    #[test]
    fn label_examples() {
        let layer = BTreeSet::from([atom("x = 0")]);
        let gt0 = parse_constraint("x > 0").unwrap();
        assert!(label(&Constraint::truth(), &gt0, &Update::identity(), &layer).is_true());
        let reset = Update::from_pairs([(Var::new("x"), Polynomial::constant(0))]);
        assert_eq!(
            label(&Constraint::truth(), &gt0, &reset, &layer),
            parse_constraint("x = 0").unwrap()
        );
        let dec = Update::from_pairs([(
            Var::new("x"),
            &Polynomial::var("x") - &Polynomial::constant(1),
        )]);
        let layer = BTreeSet::from([atom("x = -1")]);
        assert_eq!(
            label(&parse_constraint("x = 0").unwrap(), &Constraint::truth(), &dec, &layer),
            parse_constraint("x = -1").unwrap()
        );
    }

    fn small_atom() -> impl Strategy<Value = Atom> {
        (-2i64..=2, -2i64..=2, -2i64..=2, any::<bool>()).prop_map(|(a, b, c, eq)| {
            let lhs = &Polynomial::var("x").scale(&a.into()) + &Polynomial::var("y").scale(&b.into());
            if eq {
                Atom::eq(lhs, Polynomial::constant(c))
            } else {
                Atom::le(lhs, Polynomial::constant(c))
            }
        })
    }

    proptest! {
        #[test]
        fn label_is_a_monotone_subset(
            tau in proptest::collection::vec(small_atom(), 0..3),
            extra in proptest::collection::vec(small_atom(), 0..2),
            layer in proptest::collection::btree_set(small_atom(), 0..4),
            k in -2i64..=2,
        ) {
            let eta = Update::from_pairs([(Var::new("x"), &Polynomial::var("x") + &Polynomial::constant(k))]);
            let tau: Constraint = tau.into_iter().collect();
            let l1 = label(&tau, &Constraint::truth(), &eta, &layer);
            prop_assert!(l1.atoms().all(|a| layer.contains(a)));
            let stronger = tau.and(&extra.into_iter().collect());
            let l2 = label(&stronger, &Constraint::truth(), &eta, &layer);
            prop_assert!(l1.is_subset(&l2));
        }
    }
}
