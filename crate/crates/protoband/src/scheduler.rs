//! Successive-halving schedule with model-based sampling.
//!
//! Brackets follow the usual geometry: bracket `s` starts
//! `ceil((s_max+1)/(s+1) * eta^s)` configurations at budget
//! `b_max * eta^(-s)` and keeps the top `floor(n/eta)` at each rung.
//! Iterations cycle `s = s_max..=0` repeatedly. New configurations are drawn
//! uniformly at first and from the good/bad KDE ratio (see [`crate::kde`])
//! once a rung has enough completed results.
//!
//! The driver is stage-synchronous: every trial of a rung finishes before
//! promotions happen. That makes the sampled sequence a deterministic
//! function of the run seed and the recorded results, which is what lets a
//! ledger replay reconstruct state exactly and lets killed runs resume.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hpspace::{Configuration, SearchSpace};
use crate::kde::{self, Observation, SamplerConfig};
use crate::runtime::executor::{Executor, JobSpec};
use crate::runtime::ledger::{LedgerEvent, LedgerWriter};
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Geometric sequence of training budgets.
///
/// Budgets count mini-batch updates at the base batch size; see
/// [`scale_updates`] for the conversion at other batch sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLadder {
    pub b_min: u64,
    pub b_max: u64,
    pub eta: u32,
    pub s_max: u32,
    pub rungs: Vec<u64>,
}

impl BudgetLadder {
    pub fn new(b_min: u64, b_max: u64, eta: u32) -> Result<Self> {
        if eta < 2 {
            return Err(Error::Scheduler(format!("eta must be at least 2, got {eta}")));
        }
        if b_min == 0 || b_min > b_max {
            return Err(Error::Scheduler(format!(
                "need 1 <= b_min <= b_max, got b_min={b_min}, b_max={b_max}"
            )));
        }
        let mut s_max = 0u32;
        while b_min
            .checked_mul((eta as u64).pow(s_max + 1))
            .map(|b| b <= b_max)
            .unwrap_or(false)
        {
            s_max += 1;
        }
        let rungs = (0..=s_max)
            .map(|k| {
                let div = (eta as u64).pow(s_max - k);
                ((b_max as f64 / div as f64).round() as u64).max(1)
            })
            .collect();
        Ok(BudgetLadder { b_min, b_max, eta, s_max, rungs })
    }
}

/// Convert a base-batch budget into actual update steps for a batch size.
///
/// The base batch size is 16; smaller batches see proportionally more
/// updates and larger ones fewer, keeping the number of training examples
/// seen constant. Non-divisible combinations floor.
pub fn scale_updates(base_updates: u64, batch_size: i64) -> Result<u64> {
    if ![4, 8, 16, 32, 64].contains(&batch_size) {
        return Err(Error::Scheduler(format!("unsupported batch size {batch_size}")));
    }
    Ok(base_updates * 16 / batch_size as u64)
}

/// One stage of a bracket: how many configurations run at which budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketStage {
    pub n_configs: u64,
    pub budget: u64,
}

/// The full halving plan for one bracket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketPlan {
    pub s: u32,
    pub stages: Vec<BracketStage>,
}

/// Plan bracket `s` of a ladder (`s = s_max` is the most exploratory).
pub fn plan_bracket(ladder: &BudgetLadder, s: u32) -> Result<BracketPlan> {
    if s > ladder.s_max {
        return Err(Error::Scheduler(format!(
            "bracket {s} exceeds s_max {}",
            ladder.s_max
        )));
    }
    let numerator = (ladder.s_max as u64 + 1) * (ladder.eta as u64).pow(s);
    let n0 = numerator.div_ceil(s as u64 + 1);
    let mut stages = Vec::with_capacity(s as usize + 1);
    let mut n = n0;
    for t in 0..=s {
        let budget = ladder.rungs[(ladder.s_max - s + t) as usize];
        stages.push(BracketStage { n_configs: n, budget });
        n /= ladder.eta as u64;
    }
    Ok(BracketPlan { s, stages })
}

/// How a trial's configuration came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Random,
    Model,
    Promoted,
}

/// Lifecycle of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialState {
    Pending,
    Running,
    Done,
    Failed,
}

/// Measured outcome of one completed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Validation episode accuracy in percent.
    pub val_accuracy: f64,
    pub train_loss_final: f64,
    pub wall_seconds: f64,
    /// True when training blew up and the accuracy was reported as 0.
    pub diverged: bool,
}

/// One (configuration, budget) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: u64,
    pub config: Configuration,
    pub budget: u64,
    pub seed: u64,
    pub origin: Origin,
    pub parent: Option<u64>,
    pub iteration: u32,
    pub stage: u32,
    pub state: TrialState,
    pub result: Option<TrialResult>,
    pub failure: Option<String>,
}

/// Pick the trials to advance out of one completed rung.
///
/// All inputs must be `Done` at one shared budget. Returns the ids of the
/// top `floor(n/eta)` by validation accuracy, ties going to the smaller
/// trial id; the order of the returned ids is the promotion order.
pub fn promote(results: &[&Trial], eta: u32) -> Result<Vec<u64>> {
    if eta < 2 {
        return Err(Error::Scheduler(format!("eta must be at least 2, got {eta}")));
    }
    if let Some(first) = results.first() {
        for t in results {
            if t.state != TrialState::Done {
                return Err(Error::Scheduler(format!("trial {} is not done", t.id)));
            }
            if t.budget != first.budget {
                return Err(Error::Scheduler(format!(
                    "trial {} ran at budget {}, expected {}",
                    t.id, t.budget, first.budget
                )));
            }
        }
    }
    let keep = results.len() / eta as usize;
    let mut order: Vec<&&Trial> = results.iter().collect();
    order.sort_by(|a, b| {
        let acc_a = a.result.as_ref().map(|r| r.val_accuracy).unwrap_or(f64::NEG_INFINITY);
        let acc_b = b.result.as_ref().map(|r| r.val_accuracy).unwrap_or(f64::NEG_INFINITY);
        acc_b.partial_cmp(&acc_a).unwrap_or(std::cmp::Ordering::Equal).then(a.id.cmp(&b.id))
    });
    Ok(order.into_iter().take(keep).map(|t| t.id).collect())
}

/// Highest validation accuracy among `Done` trials at the top budget, ties
/// resolved toward the smaller trial id.
pub fn best_trial_id(trials: &BTreeMap<u64, Trial>, b_max: u64) -> Option<u64> {
    let mut best: Option<(f64, u64)> = None;
    for (id, t) in trials {
        if t.state != TrialState::Done || t.budget != b_max {
            continue;
        }
        let acc = t.result.as_ref().map(|r| r.val_accuracy).unwrap_or(f64::NEG_INFINITY);
        match best {
            Some((b, _)) if b >= acc => {}
            _ => best = Some((acc, *id)),
        }
    }
    best.map(|(_, id)| id)
}

/// Static parameters of a search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohbSettings {
    pub ladder: BudgetLadder,
    pub n_sh_iterations: u32,
    pub sampler: SamplerConfig,
    pub run_seed: u64,
}

/// Final state of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohbOutcome {
    pub trials: BTreeMap<u64, Trial>,
    /// Best `Done` trial at `b_max`, if any.
    pub best: Option<u64>,
}

/// Rebuild trial state from ledger events alone.
///
/// This is the pure replay path: no sampling and no execution, just the
/// event semantics. The driver's in-memory state after a run equals the
/// replay of the ledger it wrote. Duplicate terminal events keep the first.
pub fn replay_state(space: &SearchSpace, events: &[LedgerEvent]) -> Result<BTreeMap<u64, Trial>> {
    let mut trials: BTreeMap<u64, Trial> = BTreeMap::new();
    for event in events {
        match event {
            LedgerEvent::Header { .. } => {}
            LedgerEvent::TrialSampled {
                trial_id,
                iteration,
                stage,
                origin,
                budget,
                seed,
                parent,
                values,
                checksum,
            } => {
                let config = space.config_from_values(values.clone())?;
                if &config.id != checksum {
                    return Err(Error::Scheduler(format!(
                        "trial {trial_id}: recorded checksum {checksum} does not match values ({})",
                        config.id
                    )));
                }
                trials.insert(
                    *trial_id,
                    Trial {
                        id: *trial_id,
                        config,
                        budget: *budget,
                        seed: *seed,
                        origin: *origin,
                        parent: *parent,
                        iteration: *iteration,
                        stage: *stage,
                        state: TrialState::Pending,
                        result: None,
                        failure: None,
                    },
                );
            }
            LedgerEvent::TrialStarted { trial_id } => {
                if let Some(t) = trials.get_mut(trial_id) {
                    if t.state == TrialState::Pending {
                        t.state = TrialState::Running;
                    }
                }
            }
            LedgerEvent::TrialFinished {
                trial_id,
                val_accuracy,
                train_loss_final,
                wall_seconds,
                diverged,
            } => {
                let t = trials.get_mut(trial_id).ok_or_else(|| {
                    Error::Scheduler(format!("result for unknown trial {trial_id}"))
                })?;
                if t.state == TrialState::Done || t.state == TrialState::Failed {
                    continue;
                }
                t.state = TrialState::Done;
                t.result = Some(TrialResult {
                    val_accuracy: *val_accuracy,
                    train_loss_final: *train_loss_final,
                    wall_seconds: *wall_seconds,
                    diverged: *diverged,
                });
            }
            LedgerEvent::TrialFailed { trial_id, message } => {
                let t = trials.get_mut(trial_id).ok_or_else(|| {
                    Error::Scheduler(format!("failure for unknown trial {trial_id}"))
                })?;
                if t.state == TrialState::Done || t.state == TrialState::Failed {
                    continue;
                }
                t.state = TrialState::Failed;
                t.failure = Some(message.clone());
            }
        }
    }
    Ok(trials)
}

/// Run (or resume) a search.
///
/// `replay` is the event list of an existing ledger (empty for a fresh run).
/// Already-recorded samples and results are taken from the log instead of
/// being recomputed, so a resumed run continues exactly where the killed one
/// stopped and a complete ledger replays to the identical outcome without
/// executing anything.
pub fn run_bohb(
    space: &SearchSpace,
    settings: &BohbSettings,
    executor: &mut dyn Executor,
    ledger: &mut LedgerWriter,
    replay: &[LedgerEvent],
) -> Result<BohbOutcome> {
    Driver::new(space, settings, executor, ledger, replay)?.run()
}

struct SampledRec {
    trial_id: u64,
    iteration: u32,
    stage: u32,
    origin: Origin,
    budget: u64,
    seed: u64,
    parent: Option<u64>,
    config: Configuration,
}

struct Driver<'a> {
    space: &'a SearchSpace,
    settings: &'a BohbSettings,
    executor: &'a mut dyn Executor,
    ledger: &'a mut LedgerWriter,
    replay_sampled: VecDeque<SampledRec>,
    replay_terminal: HashMap<u64, std::result::Result<TrialResult, String>>,
    trials: BTreeMap<u64, Trial>,
    next_id: u64,
}

impl<'a> Driver<'a> {
    fn new(
        space: &'a SearchSpace,
        settings: &'a BohbSettings,
        executor: &'a mut dyn Executor,
        ledger: &'a mut LedgerWriter,
        replay: &[LedgerEvent],
    ) -> Result<Self> {
        let mut replay_sampled = VecDeque::new();
        let mut replay_terminal: HashMap<u64, std::result::Result<TrialResult, String>> =
            HashMap::new();
        for event in replay {
            match event {
                LedgerEvent::TrialSampled {
                    trial_id,
                    iteration,
                    stage,
                    origin,
                    budget,
                    seed,
                    parent,
                    values,
                    checksum,
                } => {
                    let config = space.config_from_values(values.clone())?;
                    if &config.id != checksum {
                        return Err(Error::Scheduler(format!(
                            "ledger trial {trial_id} checksum mismatch"
                        )));
                    }
                    replay_sampled.push_back(SampledRec {
                        trial_id: *trial_id,
                        iteration: *iteration,
                        stage: *stage,
                        origin: *origin,
                        budget: *budget,
                        seed: *seed,
                        parent: *parent,
                        config,
                    });
                }
                LedgerEvent::TrialFinished {
                    trial_id,
                    val_accuracy,
                    train_loss_final,
                    wall_seconds,
                    diverged,
                } => {
                    replay_terminal.entry(*trial_id).or_insert(Ok(TrialResult {
                        val_accuracy: *val_accuracy,
                        train_loss_final: *train_loss_final,
                        wall_seconds: *wall_seconds,
                        diverged: *diverged,
                    }));
                }
                LedgerEvent::TrialFailed { trial_id, message } => {
                    replay_terminal.entry(*trial_id).or_insert(Err(message.clone()));
                }
                LedgerEvent::Header { .. } | LedgerEvent::TrialStarted { .. } => {}
            }
        }
        Ok(Driver {
            space,
            settings,
            executor,
            ledger,
            replay_sampled,
            replay_terminal,
            trials: BTreeMap::new(),
            next_id: 0,
        })
    }

    fn run(mut self) -> Result<BohbOutcome> {
        let s_max = self.settings.ladder.s_max;
        for iteration in 0..self.settings.n_sh_iterations {
            let s = s_max - (iteration % (s_max + 1));
            let plan = plan_bracket(&self.settings.ladder, s)?;
            let mut iter_total = 0usize;
            let mut iter_failed = 0usize;
            let mut cohort: Vec<u64> = Vec::new();
            for (stage_idx, stage) in plan.stages.iter().enumerate() {
                if stage_idx == 0 {
                    cohort = self.sample_stage0(iteration, stage)?;
                } else {
                    cohort = self.promote_into_stage(iteration, stage_idx as u32, &cohort, stage)?;
                    if cohort.is_empty() {
                        break;
                    }
                }
                let failed = self.dispatch(&cohort)?;
                iter_total += cohort.len();
                iter_failed += failed;
            }
            if iter_total > 0 && iter_failed * 2 > iter_total {
                return Err(Error::Scheduler(format!(
                    "aborting run: {iter_failed} of {iter_total} trials failed in iteration {iteration}"
                )));
            }
        }
        if let Some(rec) = self.replay_sampled.front() {
            return Err(Error::Scheduler(format!(
                "ledger holds trial {} beyond the configured schedule; settings do not match the recorded run",
                rec.trial_id
            )));
        }
        let best = best_trial_id(&self.trials, self.settings.ladder.b_max);
        Ok(BohbOutcome { trials: self.trials, best })
    }

    /// Completed observations per rung budget, encoded into the unit cube.
    fn observations_by_rung(&self) -> HashMap<u64, Vec<Observation>> {
        let mut by_rung: HashMap<u64, Vec<Observation>> = HashMap::new();
        for t in self.trials.values() {
            if t.state != TrialState::Done {
                continue;
            }
            let Some(result) = &t.result else { continue };
            let Ok(point) = self.space.encode(&t.config) else { continue };
            by_rung
                .entry(t.budget)
                .or_default()
                .push(Observation { id: t.id, point, value: result.val_accuracy });
        }
        by_rung
    }

    /// Pop replayed sample records belonging to `(iteration, stage)`, at most
    /// `limit` of them.
    fn take_replayed(&mut self, iteration: u32, stage: u32, limit: usize) -> Vec<SampledRec> {
        let mut out = Vec::new();
        while out.len() < limit {
            match self.replay_sampled.front() {
                Some(rec) if rec.iteration == iteration && rec.stage == stage => {
                    out.push(self.replay_sampled.pop_front().unwrap());
                }
                _ => break,
            }
        }
        out
    }

    fn install_trial(&mut self, rec: SampledRec, log: bool) -> Result<u64> {
        if rec.trial_id != self.next_id {
            return Err(Error::Scheduler(format!(
                "trial id {} out of order, expected {}",
                rec.trial_id, self.next_id
            )));
        }
        if log {
            self.ledger.write(&LedgerEvent::TrialSampled {
                trial_id: rec.trial_id,
                iteration: rec.iteration,
                stage: rec.stage,
                origin: rec.origin,
                budget: rec.budget,
                seed: rec.seed,
                parent: rec.parent,
                values: rec.config.values.clone(),
                checksum: rec.config.id.clone(),
            })?;
        }
        self.trials.insert(
            rec.trial_id,
            Trial {
                id: rec.trial_id,
                config: rec.config,
                budget: rec.budget,
                seed: rec.seed,
                origin: rec.origin,
                parent: rec.parent,
                iteration: rec.iteration,
                stage: rec.stage,
                state: TrialState::Pending,
                result: None,
                failure: None,
            },
        );
        self.next_id += 1;
        Ok(self.next_id - 1)
    }

    /// Draw the opening cohort of a bracket.
    ///
    /// If the ledger already holds the full batch it is taken verbatim.
    /// Otherwise the whole batch is re-derived from the per-iteration seed
    /// (the recorded prefix must agree, which guards against resuming with
    /// the wrong seed or spaces) and the missing tail is sampled and logged.
    fn sample_stage0(&mut self, iteration: u32, stage: &BracketStage) -> Result<Vec<u64>> {
        let n0 = stage.n_configs as usize;
        let logged = self.take_replayed(iteration, 0, n0);
        let mut cohort = Vec::with_capacity(n0);
        if logged.len() == n0 {
            for rec in logged {
                cohort.push(self.install_trial(rec, false)?);
            }
            return Ok(cohort);
        }

        let mut rng = seed::rng_for(self.settings.run_seed, stream::SAMPLER, iteration as u64);
        let sampler = &self.settings.sampler;
        let min_points = sampler.min_points(self.space.dim());
        let by_rung = self.observations_by_rung();
        let most_filled = by_rung.values().map(|v| v.len()).max().unwrap_or(0);
        // Highest budget whose observation count supports a model.
        let model_rung = by_rung
            .iter()
            .filter(|(_, obs)| obs.len() >= min_points)
            .max_by_key(|(budget, _)| **budget)
            .map(|(budget, _)| *budget);
        let models = match model_rung {
            Some(budget) => {
                let obs = &by_rung[&budget];
                let (good, bad) = kde::split_good_bad(obs, sampler.good_quantile, min_points);
                let good_model =
                    kde::fit(&good.iter().map(|o| o.point.clone()).collect::<Vec<_>>())?;
                let bad_model = if bad.is_empty() {
                    None
                } else {
                    Some(kde::fit(&bad.iter().map(|o| o.point.clone()).collect::<Vec<_>>())?)
                };
                Some((good_model, bad_model))
            }
            None => None,
        };

        let n_logged = logged.len();
        let mut logged_iter = logged.into_iter();
        for k in 0..n0 {
            let gate: f64 = rng.random();
            let use_model = gate >= sampler.random_fraction
                && most_filled >= min_points
                && models.is_some();
            let (config, origin) = if use_model {
                let (good, bad) = models.as_ref().unwrap();
                let point = kde::propose(good, bad.as_ref(), sampler, &mut rng)?;
                (self.space.decode(&point)?, Origin::Model)
            } else {
                (self.space.sample_uniform(&mut rng), Origin::Random)
            };
            if k < n_logged {
                let rec = logged_iter.next().unwrap();
                if rec.config.id != config.id {
                    return Err(Error::Scheduler(format!(
                        "replayed trial {} diverges from re-derived sample (iteration {iteration}, position {k}); ledger and settings disagree",
                        rec.trial_id
                    )));
                }
                cohort.push(self.install_trial(rec, false)?);
            } else {
                let trial_id = self.next_id;
                let rec = SampledRec {
                    trial_id,
                    iteration,
                    stage: 0,
                    origin,
                    budget: stage.budget,
                    seed: seed::mix3(self.settings.run_seed, stream::TRIAL, trial_id),
                    parent: None,
                    config,
                };
                cohort.push(self.install_trial(rec, true)?);
            }
        }
        Ok(cohort)
    }

    /// Promote the winners of the previous stage into new trials.
    fn promote_into_stage(
        &mut self,
        iteration: u32,
        stage_idx: u32,
        cohort: &[u64],
        stage: &BracketStage,
    ) -> Result<Vec<u64>> {
        let done: Vec<&Trial> = cohort
            .iter()
            .map(|id| &self.trials[id])
            .filter(|t| t.state == TrialState::Done)
            .collect();
        let winners = promote(&done, self.settings.ladder.eta)?;
        let logged = self.take_replayed(iteration, stage_idx, winners.len());
        let n_logged = logged.len();
        let mut logged_iter = logged.into_iter();
        let mut out = Vec::with_capacity(winners.len());
        for (k, parent_id) in winners.iter().enumerate() {
            let parent = &self.trials[parent_id];
            let (config, seed) = (parent.config.clone(), parent.seed);
            if k < n_logged {
                let rec = logged_iter.next().unwrap();
                if rec.parent != Some(*parent_id) || rec.config.id != config.id {
                    return Err(Error::Scheduler(format!(
                        "replayed promotion {} does not match derived winner {parent_id}",
                        rec.trial_id
                    )));
                }
                out.push(self.install_trial(rec, false)?);
            } else {
                let rec = SampledRec {
                    trial_id: self.next_id,
                    iteration,
                    stage: stage_idx,
                    origin: Origin::Promoted,
                    budget: stage.budget,
                    seed,
                    parent: Some(*parent_id),
                    config,
                };
                out.push(self.install_trial(rec, true)?);
            }
        }
        Ok(out)
    }

    /// Run every non-terminal trial of the cohort to completion. Returns the
    /// number of failures in the cohort.
    fn dispatch(&mut self, cohort: &[u64]) -> Result<usize> {
        let mut jobs = Vec::new();
        for id in cohort {
            let state = self.trials[id].state;
            if state == TrialState::Done || state == TrialState::Failed {
                continue;
            }
            if let Some(result) = self.replay_terminal.remove(id) {
                self.apply_outcome(*id, result)?;
                continue;
            }
            let t = self.trials.get_mut(id).unwrap();
            t.state = TrialState::Running;
            jobs.push(JobSpec {
                trial_id: t.id,
                config: t.config.clone(),
                budget: t.budget,
                seed: t.seed,
                parent: t.parent,
            });
            self.ledger.write(&LedgerEvent::TrialStarted { trial_id: *id })?;
        }
        if !jobs.is_empty() {
            let outcomes = self.executor.run_jobs(jobs)?;
            for outcome in outcomes {
                match self.trials.get(&outcome.trial_id) {
                    None => {
                        eprintln!("ignoring outcome for unknown trial {}", outcome.trial_id);
                        continue;
                    }
                    Some(t) if t.state == TrialState::Done || t.state == TrialState::Failed => {
                        eprintln!("ignoring duplicate outcome for trial {}", outcome.trial_id);
                        continue;
                    }
                    Some(_) => {}
                }
                self.log_terminal(outcome.trial_id, &outcome.result)?;
                self.apply_outcome(outcome.trial_id, outcome.result)?;
            }
        }
        let mut failed = 0usize;
        for id in cohort {
            match self.trials[id].state {
                TrialState::Done => {}
                TrialState::Failed => failed += 1,
                _ => {
                    return Err(Error::Scheduler(format!(
                        "executor returned without a result for trial {id}"
                    )))
                }
            }
        }
        Ok(failed)
    }

    fn log_terminal(
        &mut self,
        trial_id: u64,
        result: &std::result::Result<TrialResult, String>,
    ) -> Result<()> {
        let event = match result {
            Ok(r) => LedgerEvent::TrialFinished {
                trial_id,
                val_accuracy: r.val_accuracy,
                train_loss_final: r.train_loss_final,
                wall_seconds: r.wall_seconds,
                diverged: r.diverged,
            },
            Err(message) => {
                LedgerEvent::TrialFailed { trial_id, message: message.clone() }
            }
        };
        self.ledger.write(&event)?;
        Ok(())
    }

    fn apply_outcome(
        &mut self,
        trial_id: u64,
        result: std::result::Result<TrialResult, String>,
    ) -> Result<()> {
        let t = self
            .trials
            .get_mut(&trial_id)
            .ok_or_else(|| Error::Scheduler(format!("outcome for unknown trial {trial_id}")))?;
        match result {
            Ok(r) => {
                t.state = TrialState::Done;
                t.result = Some(r);
            }
            Err(message) => {
                t.state = TrialState::Failed;
                t.failure = Some(message);
            }
        }
        Ok(())
    }
}
