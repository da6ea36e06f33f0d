use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use tailor_core::domain::Pool;
use tailor_core::metrics::AggregateRow;
use tailor_core::runner::{run_trial, summarize, ExperimentConfig, TrialOutcome};
use tailor_core::Error;

pub const THREADS_ENV: &str = "TAILOR_THREADS";

/// Worker count: `TAILOR_THREADS` if set to a positive integer, otherwise the
/// number of available cores.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every trial on up to `threads` workers. Each trial owns its random
/// streams, so the result does not depend on scheduling; outcomes come back
/// in trial order.
pub fn run_experiment_parallel(
    config: &ExperimentConfig,
    pool: Option<&Pool>,
    threads: usize,
) -> Result<(Vec<TrialOutcome>, Vec<AggregateRow>), Error> {
    config.validate()?;
    let trials = config.trials;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<TrialOutcome, Error>>>> = Mutex::new((0..trials).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, trials) {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= trials {
                    break;
                }
                let r = run_trial(config, pool, t).map_err(|e| Error::Trial { trial: t, source: Box::new(e) });
                slots.lock().expect("no worker panics while holding the lock")[t] = Some(r);
            });
        }
    });
    let outcomes = slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = summarize(&outcomes)?;
    Ok((outcomes, rows))
}
