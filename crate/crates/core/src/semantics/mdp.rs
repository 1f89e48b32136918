//! Supremum of the expected truncated runtime over all schedulers.
//!
//! `V(c, 0) = 0`, `V(⊥, k) = 0`, a configuration with nothing enabled has
//! value 0, and otherwise `V(c, k)` is the maximum over enabled choices of
//! `sum_t p_t * (1 + V(c_t, k - 1))`. Temporaries range over the given
//! values and values are memoised on the configuration without them.

use std::collections::HashMap;

use num::{BigInt, Zero};

use super::{enabled_choices, successors, Caps, Choice, Conf, SemanticsError};
use crate::poly::State;
use crate::program::{Pip, Prob};

struct Solver<'a> {
    p: &'a Pip,
    temp_values: &'a [BigInt],
    caps: &'a Caps,
    memo: HashMap<(Conf, usize), Prob>,
}

impl Solver<'_> {
    fn value(&mut self, c: &Conf, k: usize) -> Result<Prob, SemanticsError> {
        if k == 0 || c.is_terminal() {
            return Ok(Prob::zero());
        }
        let key = (c.clone(), k);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let mut best: Option<Prob> = None;
        for (gt, valuation) in enabled_choices(self.p, c, self.temp_values) {
            let mut v = Prob::zero();
            for (_, next, q) in successors(self.p, c, &Choice::Take { gt, valuation })? {
                let rest = self.value(&next.restricted(self.p), k - 1)?;
                v += q * (rest + Prob::from_integer(1.into()));
            }
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        let v = best.unwrap_or_else(Prob::zero);
        self.memo.insert(key, v.clone());
        if self.memo.len() > self.caps.states {
            return Err(SemanticsError::StateCap {
                cap: self.caps.states,
                count: self.memo.len(),
            });
        }
        Ok(v)
    }
}

pub fn mdp_sup_truncated(
    p: &Pip,
    sigma0: &State,
    horizon: usize,
    temp_values: &[BigInt],
    caps: &Caps,
) -> Result<Prob, SemanticsError> {
    let mut s = Solver {
        p,
        temp_values,
        caps,
        memo: HashMap::new(),
    };
    s.value(&Conf::initial(p, sigma0.clone()).restricted(p), horizon)
}
