//! Trial execution behind a common interface.
//!
//! The scheduler hands a batch of jobs to an [`Executor`] and blocks until
//! every job has an outcome; completion order within the batch is
//! unconstrained. [`InProcessExecutor`] runs jobs on local threads and is the
//! default for tests and single-machine runs; the TCP master in
//! [`super::master`] implements the same trait for distributed runs.

use std::cell::Cell;
use std::collections::VecDeque;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::hpspace::Configuration;
use crate::scheduler::TrialResult;
use crate::{Error, Result};

/// Everything a worker needs to execute one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub trial_id: u64,
    pub config: Configuration,
    /// Budget in base-batch updates (see `scheduler::scale_updates`).
    pub budget: u64,
    pub seed: u64,
    /// Trial whose checkpoint this one continues from, if promoted.
    pub parent: Option<u64>,
}

/// Terminal outcome of one job. `Err` carries a human-readable message and
/// marks the trial failed without stopping the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub trial_id: u64,
    pub result: std::result::Result<TrialResult, String>,
}

/// Maps a job to its measured result. Implementations must be deterministic
/// in the job fields for runs to be reproducible and resumable.
pub trait Objective: Send + Sync {
    fn evaluate(&self, job: &JobSpec) -> std::result::Result<TrialResult, String>;
}

impl<F> Objective for F
where
    F: Fn(&JobSpec) -> std::result::Result<TrialResult, String> + Send + Sync,
{
    fn evaluate(&self, job: &JobSpec) -> std::result::Result<TrialResult, String> {
        self(job)
    }
}

/// Runs batches of jobs to completion.
pub trait Executor {
    fn run_jobs(&mut self, jobs: Vec<JobSpec>) -> Result<Vec<JobOutcome>>;
}

thread_local! {
    static INSIDE_JOB: Cell<bool> = const { Cell::new(false) };
}

struct JobGuard;

impl JobGuard {
    fn enter() -> JobGuard {
        INSIDE_JOB.with(|f| f.set(true));
        JobGuard
    }
}

impl Drop for JobGuard {
    fn drop(&mut self) {
        INSIDE_JOB.with(|f| f.set(false));
    }
}

/// Thread-pool executor for a single process.
pub struct InProcessExecutor {
    n_parallel: usize,
    objective: Arc<dyn Objective>,
}

impl InProcessExecutor {
    pub fn new(n_parallel: usize, objective: Arc<dyn Objective>) -> Result<Self> {
        if n_parallel == 0 {
            return Err(Error::Runtime("n_parallel must be at least 1".into()));
        }
        Ok(InProcessExecutor { n_parallel, objective })
    }
}

impl Executor for InProcessExecutor {
    /// Run all jobs on up to `n_parallel` threads.
    ///
    /// Calling this from inside a running job (an objective that spins up
    /// its own executor) is rejected: the pool would deadlock against the
    /// outer batch on small thread counts, and budget accounting assumes one
    /// level of execution.
    fn run_jobs(&mut self, jobs: Vec<JobSpec>) -> Result<Vec<JobOutcome>> {
        if INSIDE_JOB.with(|f| f.get()) {
            return Err(Error::Runtime(
                "nested in-process execution: run_jobs called from inside a job".into(),
            ));
        }
        if jobs.is_empty() {
            return Ok(Vec::new());
        }
        if self.n_parallel == 1 || jobs.len() == 1 {
            let mut out = Vec::with_capacity(jobs.len());
            for job in jobs {
                let _guard = JobGuard::enter();
                let result = self.objective.evaluate(&job);
                out.push(JobOutcome { trial_id: job.trial_id, result });
            }
            return Ok(out);
        }
        let queue: Arc<Mutex<VecDeque<JobSpec>>> = Arc::new(Mutex::new(jobs.into()));
        let (tx, rx) = mpsc::channel::<JobOutcome>();
        let n_threads = self.n_parallel.min(queue.lock().unwrap().len());
        let mut handles = Vec::with_capacity(n_threads);
        for _ in 0..n_threads {
            let queue = Arc::clone(&queue);
            let objective = Arc::clone(&self.objective);
            let tx = tx.clone();
            handles.push(std::thread::spawn(move || loop {
                let job = match queue.lock().unwrap().pop_front() {
                    Some(j) => j,
                    None => break,
                };
                let _guard = JobGuard::enter();
                let result = objective.evaluate(&job);
                if tx.send(JobOutcome { trial_id: job.trial_id, result }).is_err() {
                    break;
                }
            }));
        }
        drop(tx);
        let outcomes: Vec<JobOutcome> = rx.iter().collect();
        for h in handles {
            h.join().map_err(|_| Error::Runtime("executor thread panicked".into()))?;
        }
        Ok(outcomes)
    }
}
