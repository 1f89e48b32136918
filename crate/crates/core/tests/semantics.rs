mod common;

use std::collections::BTreeMap;

use num::{BigInt, One};
use proptest::prelude::*;

use common::*;
use pcfr::constraint::Constraint;
use pcfr::corpus;
use pcfr::gen::{random_pip, GenOptions};
use pcfr::program::{Loc, Prob};
use pcfr::semantics::embedding::check_embedding;
use pcfr::semantics::enumerate::{enumerate, horizon_report};
use pcfr::semantics::mdp::mdp_sup_truncated;
use pcfr::semantics::scheduler::gt_temporaries;
use pcfr::semantics::{
    enabled_choices, resolve, Caps, Choice, Conf, Decision, Fallback, PolicyRule, SchedulerPolicy,
};

#[test]
fn mass_is_conserved_and_truncation_is_monotone() {
    for (i, p) in corpus_programs(50).iter().enumerate() {
        let pol = hashed(i as u64, &[0, 1]);
        let mut last = Prob::from_integer(0.into());
        for h in 0..=10 {
            let r = horizon_report(p, &pol, xy(1, 2), h, &Caps::default()).unwrap();
            assert_eq!(r.total_mass, Prob::one(), "program {i}, horizon {h}");
            assert!(r.expected_truncated_runtime >= last, "program {i}, horizon {h}");
            last = r.expected_truncated_runtime;
        }
    }
}

#[test]
fn fig1_and_fig2_reports_agree_under_corresponding_policies() {
    let (p, r) = fig1_refined();
    let pol = SchedulerPolicy::first_enabled(values(&[1]));
    let induced = pcfr::semantics::embedding::InducedScheduler::new(&p, &r, &pol);
    for y in 0..=5 {
        let a = horizon_report(&p, &pol, xy(0, y), 40, &Caps::default()).unwrap();
        let b = horizon_report(&r.program, &induced, xy(0, y), 40, &Caps::default()).unwrap();
        assert_eq!(a.expected_truncated_runtime, b.expected_truncated_runtime, "y = {y}");
        assert_eq!(a.terminated_mass, b.terminated_mass, "y = {y}");
    }
}

#[test]
fn embedding_implies_equal_reports() {
    for (i, p) in random_programs(30).iter().enumerate() {
        let r = heuristic_refinement(p);
        let pol = hashed(i as u64, &[0, 1]);
        let rep = check_embedding(p, &r, &pol, &xy(1, 0), 6, &Caps::default()).unwrap();
        assert!(rep.ok(), "program {i}: {:?}", rep.counterexample);
        let induced = pcfr::semantics::embedding::InducedScheduler::new(p, &r, &pol);
        let a = enumerate(p, &pol, xy(1, 0), 6, &Caps::default()).unwrap().report;
        let b = enumerate(&r.program, &induced, xy(1, 0), 6, &Caps::default()).unwrap().report;
        assert_eq!(a.total_mass, b.total_mass);
        assert_eq!(a.expected_truncated_runtime, b.expected_truncated_runtime);
        assert_eq!(a.terminated_mass, b.terminated_mass);
        assert_eq!(a.residual_mass, b.residual_mass);
    }
}

#[test]
fn history_dependent_policy_is_followed() {
    let p = corpus::fig1();
    let mut pol = SchedulerPolicy::first_enabled(values(&[1, 2]));
    pol.history = BTreeMap::from([(
        vec![],
        Decision::Take {
            gt: "t0".into(),
            temps: [(pcfr::poly::Var::new("u"), BigInt::from(2))].into(),
        },
    )]);
    let e = enumerate(&p, &pol, xy(0, 0), 1, &Caps::default()).unwrap();
    assert_eq!(e.paths.len(), 1);
    assert_eq!(e.paths[0].last().state.get(&pcfr::poly::Var::new("x")), Some(&BigInt::from(2)));
    let forward = horizon_report(&p, &pol, xy(0, 0), 6, &Caps::default()).unwrap();
    let paths = enumerate(&p, &pol, xy(0, 0), 6, &Caps::default()).unwrap().report;
    assert_eq!(forward, paths);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn refinement_preserves_the_mdp_value(seed in 0u64..10_000, x in -1i64..=2, y in -1i64..=2, h in 0usize..=10) {
        let p = random_pip(seed, &GenOptions::default());
        let r = heuristic_refinement(&p);
        let temps = values(&[0, 1]);
        let a = mdp_sup_truncated(&p, &xy(x, y), h, &temps, &Caps::default()).unwrap();
        let b = mdp_sup_truncated(&r.program, &xy(x, y), h, &temps, &Caps::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn validator_accepts_exactly_the_valid_decisions(
        seed in 0u64..10_000,
        pick in 0usize..8,
        temp in -1i64..=2,
        touch_pv in any::<bool>(),
        stop in any::<bool>(),
        x in -2i64..=2,
        y in -2i64..=2,
    ) {
        let p = random_pip(seed, &GenOptions::default());
        let loc = p.locations[pick % p.locations.len()].clone();
        let conf = Conf::new(loc.clone(), xy(x, y));
        let gi = pick % p.gts.len();
        let decision = if stop {
            Decision::Stop
        } else {
            let mut temps: std::collections::BTreeMap<_, _> = gt_temporaries(&p, gi)
                .into_iter()
                .map(|v| (v, BigInt::from(temp)))
                .collect();
            if touch_pv {
                temps.insert(pcfr::poly::Var::new("x"), BigInt::from(temp));
            }
            Decision::Take { gt: p.gts[gi].name.clone(), temps }
        };
        let pol = SchedulerPolicy {
            rules: vec![PolicyRule { location: loc.clone(), when: Constraint::truth(), decision: decision.clone() }],
            history: Default::default(),
            fallback: Fallback::FirstEnabled,
            temp_values: values(&[-1, 0, 1, 2]),
        };
        let enabled = enabled_choices(&p, &conf, &pol.temp_values);
        match (resolve(&p, &pol, &conf, &[]), decision) {
            (Ok(Choice::Stop), Decision::Stop) => prop_assert!(enabled.is_empty()),
            (Err(e), Decision::Stop) => {
                prop_assert_eq!(e.clause, 'd');
                prop_assert!(!enabled.is_empty());
            }
            (Ok(Choice::Take { gt, valuation }), Decision::Take { .. }) => {
                prop_assert!(!touch_pv);
                prop_assert_eq!(&p.gts[gt].source, &loc);
                prop_assert!(p.gts[gt].guard.satisfied_by(&valuation).unwrap());
            }
            (Err(e), Decision::Take { .. }) => {
                let g = &p.gts[gi];
                let guard_ok = {
                    let mut s = xy(x, y);
                    for v in gt_temporaries(&p, gi) {
                        s.set(v, BigInt::from(temp));
                    }
                    g.guard.satisfied_by(&s).unwrap_or(false)
                };
                prop_assert!(touch_pv || g.source != loc || !guard_ok, "rejected a valid decision: {}", e);
            }
            (Ok(c), d) => prop_assert!(false, "{:?} resolved to {:?}", d, c),
        }
    }
}

#[test]
fn fig1_policies_at_the_initial_location() {
    let p = corpus::fig1();
    let pol = SchedulerPolicy {
        rules: vec![PolicyRule {
            location: Loc::new("l0"),
            when: Constraint::truth(),
            decision: Decision::Take {
                gt: "t0".into(),
                temps: [(pcfr::poly::Var::new("u"), BigInt::from(0))].into(),
            },
        }],
        ..SchedulerPolicy::first_enabled(values(&[0, 1]))
    };
    let err = resolve(&p, &pol, &Conf::new(Loc::new("l0"), xy(0, 0)), &[]).unwrap_err();
    assert_eq!(err.clause, 'c');
}
