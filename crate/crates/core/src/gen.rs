//! Small random programs for property tests.
//!
//! Programs have at most three locations, program variables `x` and `y`,
//! optionally a temporary `u`, coefficients in `[-2, 2]` and branch
//! probabilities from `{1, 1/2, 1/3, 2/3}`. No transition enters the
//! initial location, so every generated program is valid.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::{Atom, Cmp, Constraint, Update};
use crate::poly::{Polynomial, Var};
use crate::program::{prob, GeneralTransition, Loc, Pip, Transition};

#[derive(Clone, Copy, Debug)]
pub struct GenOptions {
    pub max_locations: usize,
    pub max_gts: usize,
    pub temporaries: bool,
}

impl Default for GenOptions {
    fn default() -> GenOptions {
        GenOptions {
            max_locations: 3,
            max_gts: 4,
            temporaries: true,
        }
    }
}

fn coeff(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(-2..=2)
}

fn affine(rng: &mut ChaCha8Rng, vars: &[&str]) -> Polynomial {
    let mut p = Polynomial::constant(coeff(rng));
    for v in vars {
        p = &p + &Polynomial::var(*v).scale(&coeff(rng).into());
    }
    p
}

fn guard(rng: &mut ChaCha8Rng, with_u: bool) -> Constraint {
    let n = rng.gen_range(0..=2);
    let mut atoms = Vec::new();
    for _ in 0..n {
        let vars: &[&str] = if with_u && rng.gen_bool(0.3) { &["u"] } else { &["x", "y"] };
        let cmp = *[Cmp::Le, Cmp::Lt, Cmp::Eq, Cmp::Ge, Cmp::Gt]
            .choose(rng)
            .expect("nonempty");
        atoms.push(Atom::new(&affine(rng, vars), cmp, &Polynomial::zero()));
    }
    Constraint::from_atoms(atoms)
}

fn update(rng: &mut ChaCha8Rng, with_u: bool) -> Update {
    let mut pairs = Vec::new();
    for v in ["x", "y"] {
        if rng.gen_bool(0.5) {
            let img = if with_u && rng.gen_bool(0.25) {
                Polynomial::var("u")
            } else {
                affine(rng, &["x", "y"])
            };
            pairs.push((Var::new(v), img));
        }
    }
    Update::from_pairs(pairs)
}

pub fn random_pip(seed: u64, opts: &GenOptions) -> Pip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=opts.max_locations.max(2));
    let locations: Vec<Loc> = (0..n).map(|i| Loc::new(&format!("l{i}"))).collect();
    let mut gts = Vec::new();
    for gi in 0..rng.gen_range(1..=opts.max_gts.max(1)) {
        let with_u = opts.temporaries && rng.gen_bool(0.3);
        let source = locations.choose(&mut rng).expect("nonempty").clone();
        let probs = match rng.gen_range(0..3) {
            0 => vec![prob(1, 1)],
            1 => vec![prob(1, 2), prob(1, 2)],
            _ => vec![prob(1, 3), prob(2, 3)],
        };
        let single = probs.len() == 1;
        let members = probs
            .into_iter()
            .enumerate()
            .map(|(k, pr)| Transition {
                name: if single {
                    format!("g{gi}")
                } else {
                    format!("g{gi}{}", char::from(b'a' + k as u8))
                },
                prob: pr,
                update: update(&mut rng, with_u),
                target: locations[rng.gen_range(1..n)].clone(),
            })
            .collect();
        gts.push(GeneralTransition {
            name: format!("g{gi}"),
            source,
            guard: guard(&mut rng, with_u),
            members,
        });
    }
    let p = Pip {
        program_vars: vec![Var::new("x"), Var::new("y")],
        locations: locations.clone(),
        initial: locations[0].clone(),
        gts,
    };
    debug_assert!(p.validate().is_ok(), "{:?}", p.validate());
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse::parse;
    use crate::io::print::print_program;

    #[test]
    fn generated_programs_are_valid_and_print_back() {
        for seed in 0..200 {
            let p = random_pip(seed, &GenOptions::default());
            assert!(p.validate().is_ok(), "seed {seed}");
            assert!(p.locations.len() <= 3);
            assert!(p.gts.iter().all(|g| g.members.iter().all(|t| t.target != p.initial)));
            assert_eq!(parse(&print_program(&p)).unwrap(), p, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(random_pip(5, &GenOptions::default()), random_pip(5, &GenOptions::default()));
    }
}
