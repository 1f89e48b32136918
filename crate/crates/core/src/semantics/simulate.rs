//! Monte-Carlo estimation of the expected runtime.

use num::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{resolve, successors, Conf, Scheduler, SemanticsError, Step};
use crate::poly::State;
use crate::program::Pip;

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Runs stopped at the step cap; they count as the cap.
    pub censored: usize,
}

fn sample_run(
    p: &Pip,
    sched: &dyn Scheduler,
    sigma0: &State,
    step_cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, bool), SemanticsError> {
    let mut conf = Conf::initial(p, sigma0.clone());
    let mut history = Vec::new();
    let mut runtime = 0;
    while runtime < step_cap {
        let choice = resolve(p, sched, &conf, &history)?;
        let succ = successors(p, &conf, &choice)?;
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = succ.len() - 1;
        for (i, (_, _, q)) in succ.iter().enumerate() {
            acc += q.to_f64().unwrap_or(0.0);
            if r < acc {
                pick = i;
                break;
            }
        }
        let (step, next, _) = succ.into_iter().nth(pick).expect("nonempty successor list");
        if step == Step::Bottom {
            return Ok((runtime, false));
        }
        if sched.is_history_dependent() {
            history.push(step);
        }
        runtime += 1;
        conf = next;
    }
    Ok((runtime, true))
}

pub fn monte_carlo(
    p: &Pip,
    sched: &dyn Scheduler,
    sigma0: &State,
    samples: usize,
    step_cap: usize,
    seed: u64,
) -> Result<McReport, SemanticsError> {
    assert!(samples >= 1, "at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(samples);
    let mut censored = 0;
    for _ in 0..samples {
        let (r, cut) = sample_run(p, sched, sigma0, step_cap, &mut rng)?;
        censored += usize::from(cut);
        runs.push(r as f64);
    }
    let n = samples as f64;
    let mean = runs.iter().sum::<f64>() / n;
    let stderr = if samples > 1 {
        let var = runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McReport {
        samples,
        mean,
        stderr,
        censored,
    })
}
