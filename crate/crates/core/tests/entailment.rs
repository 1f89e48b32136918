use proptest::prelude::*;

use pcfr::constraint::{Atom, Cmp, Constraint};
use pcfr::entail::{entails, is_satisfiable, Satisfiability};
use pcfr::farkas::entails_by_certificate;
use pcfr::poly::{Polynomial, State};

const VARS: [&str; 3] = ["a", "b", "c"];

fn atom(coeffs: &[i64], k: i64, cmp: Cmp) -> Atom {
    let mut p = Polynomial::constant(k);
    for (v, c) in VARS.iter().zip(coeffs) {
        p = &p + &Polynomial::var(*v).scale(&(*c).into());
    }
    Atom::new(&p, cmp, &Polynomial::zero())
}

fn arb_atom(n: usize) -> impl Strategy<Value = Atom> {
    (
        proptest::collection::vec(-3i64..=3, n),
        -3i64..=3,
        prop_oneof![Just(Cmp::Le), Just(Cmp::Lt), Just(Cmp::Eq), Just(Cmp::Ge), Just(Cmp::Gt)],
    )
        .prop_map(|(c, k, cmp)| atom(&c, k, cmp))
}

fn points(n: usize) -> Vec<State> {
    let mut out = vec![State::new()];
    for v in &VARS[..n] {
        out = out
            .into_iter()
            .flat_map(|s| {
                (-8i64..=8).map(move |x| {
                    let mut t = s.clone();
                    t.set(pcfr::poly::Var::new(v), x.into());
                    t
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn unsat_and_entailment_agree_with_brute_force(
        n in 1usize..=3,
        premise in proptest::collection::vec(arb_atom(3), 0..4),
        conclusion in arb_atom(3),
    ) {
        let trim = |a: &Atom| a.vars().iter().all(|v| VARS[..n].contains(&v.name()));
        let premise: Constraint = premise.into_iter().filter(trim).collect();
        let pts = points(n);
        let models: Vec<&State> = pts.iter().filter(|s| premise.satisfied_by(s).unwrap()).collect();
        if is_satisfiable(&premise) == Satisfiability::Unsat {
            prop_assert!(models.is_empty());
        }
        if trim(&conclusion) && entails(&premise, &conclusion) {
            prop_assert!(models.iter().all(|s| conclusion.holds(s).unwrap()));
        }
        if trim(&conclusion) {
            // certificates never claim more than elimination proves soundly
            if entails_by_certificate(&premise, &conclusion) {
                prop_assert!(models.iter().all(|s| conclusion.holds(s).unwrap()));
            }
        }
    }
}
