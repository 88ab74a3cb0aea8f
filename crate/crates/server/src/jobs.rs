use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};

use tensorhpo_api::{ApiError, JobInfo, JobState};
use tensorhpo_core::harness::{run_suite_with, CancelToken, DimGroup, ExperimentConfig, Progress, SuiteReport};
use tokio::sync::{Notify, RwLock, Semaphore};
use uuid::Uuid;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// One submitted experiment and everything observed about it so far.
pub struct Job {
    config: ExperimentConfig,
    info: Mutex<JobInfo>,
    report: Mutex<SuiteReport>,
    cancel: CancelToken,
    cancelled: Notify,
}

impl Job {
    pub fn info(&self) -> JobInfo {
        lock(&self.info).clone()
    }

    /// Finished trials so far; summaries appear once a dimension completes.
    pub fn report(&self) -> SuiteReport {
        lock(&self.report).clone()
    }

    pub fn cancel(&self) {
        self.cancel.cancel();
        self.cancelled.notify_one();
    }

    fn set_state(&self, state: JobState) {
        lock(&self.info).state = state;
    }

    fn record(&self, p: Progress<'_>) {
        let mut report = lock(&self.report);
        match p {
            Progress::GroupStarted { d, n, r } => report.groups.push(DimGroup {
                d,
                n,
                r,
                rows: Vec::new(),
                summary: None,
            }),
            Progress::TrialFinished { row, .. } => {
                if let Some(g) = report.groups.last_mut() {
                    g.rows.push(row.clone());
                }
                lock(&self.info).trials_done += 1;
            }
        }
    }
}

/// Registry of experiments; at most `permits` of them run at once.
pub struct Jobs {
    jobs: RwLock<BTreeMap<Uuid, Arc<Job>>>,
    permits: Arc<Semaphore>,
}

impl Jobs {
    pub fn new(max_running: usize) -> Self {
        Self {
            jobs: RwLock::new(BTreeMap::new()),
            permits: Arc::new(Semaphore::new(max_running.max(1))),
        }
    }

    /// Registers a validated config and starts it in the background.
    pub async fn submit(&self, config: ExperimentConfig) -> tensorhpo_core::Result<JobInfo> {
        let dims = config.spaces()?.len();
        let e = &config.experiment;
        let info = JobInfo {
            id: Uuid::new_v4(),
            state: JobState::Queued,
            method: e.method,
            objective: e.objective,
            trials_done: 0,
            trials_total: dims * e.trials,
            output_path: config.output_path().display().to_string(),
            error: None,
        };
        let job = Arc::new(Job {
            report: Mutex::new(SuiteReport {
                method: e.method,
                objective: e.objective,
                base_seed: e.base_seed,
                groups: Vec::new(),
                cancelled: false,
            }),
            config,
            info: Mutex::new(info.clone()),
            cancel: CancelToken::new(),
            cancelled: Notify::new(),
        });
        self.jobs.write().await.insert(info.id, job.clone());
        tokio::spawn(drive(job, self.permits.clone()));
        Ok(info)
    }

    pub async fn get(&self, id: Uuid) -> Option<Arc<Job>> {
        self.jobs.read().await.get(&id).cloned()
    }

    pub async fn list(&self) -> Vec<JobInfo> {
        self.jobs.read().await.values().map(|j| j.info()).collect()
    }
}

async fn drive(job: Arc<Job>, permits: Arc<Semaphore>) {
    let id = job.info().id;
    let permit = tokio::select! {
        p = permits.acquire_owned() => p,
        _ = job.cancelled.notified() => {
            lock(&job.report).cancelled = true;
            job.set_state(JobState::Cancelled);
            tracing::info!(%id, "cancelled before start");
            return;
        }
    };
    let Ok(_permit) = permit else { return };
    if job.cancel.is_cancelled() {
        lock(&job.report).cancelled = true;
        job.set_state(JobState::Cancelled);
        return;
    }
    job.set_state(JobState::Running);
    tracing::info!(%id, "started");
    let worker = job.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        run_suite_with(&worker.config, &worker.cancel, &mut |p| worker.record(p))
    })
    .await;
    match outcome {
        Ok(Ok(report)) => {
            let state = if report.cancelled { JobState::Cancelled } else { JobState::Completed };
            *lock(&job.report) = report;
            job.set_state(state);
            tracing::info!(%id, ?state, "finished");
        }
        Ok(Err(e)) => {
            tracing::warn!(%id, error = %e, "failed");
            let mut info = lock(&job.info);
            info.state = JobState::Failed;
            info.error = Some(ApiError::from(&e));
        }
        Err(join) => {
            let mut info = lock(&job.info);
            info.state = JobState::Failed;
            info.error = Some(ApiError {
                kind: "Internal".into(),
                message: join.to_string(),
                fields: Vec::new(),
            });
        }
    }
}
