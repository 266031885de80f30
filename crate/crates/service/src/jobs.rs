use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tokio::sync::watch;
use webselect_core::{CampaignSpec, GenerationStats, OptimizationResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub state: JobState,
    /// The submitted spec with its seed filled in.
    pub spec: CampaignSpec,
    pub history: Vec<GenerationStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<OptimizationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Entry {
    record: JobRecord,
    // Bumped on every change so stream readers wake up.
    version: watch::Sender<u64>,
}

/// In-memory job table with an optional journal of finished jobs.
pub(crate) struct JobStore {
    entries: Mutex<HashMap<String, Entry>>,
    next_id: Mutex<u64>,
    journal: Option<Mutex<File>>,
}

impl JobStore {
    pub(crate) fn open(journal: Option<&Path>) -> std::io::Result<Self> {
        let mut entries = HashMap::new();
        let mut next_id = 1;
        let file = match journal {
            None => None,
            Some(path) => {
                if path.exists() {
                    for line in BufReader::new(File::open(path)?).lines() {
                        let line = line?;
                        if line.trim().is_empty() {
                            continue;
                        }
                        match serde_json::from_str::<JobRecord>(&line) {
                            Ok(record) => {
                                if let Some(n) = record.job_id.strip_prefix("job-").and_then(|s| s.parse::<u64>().ok()) {
                                    next_id = next_id.max(n + 1);
                                }
                                let (version, _) = watch::channel(0);
                                entries.insert(record.job_id.clone(), Entry { record, version });
                            }
                            Err(e) => tracing::warn!("skipping journal line: {e}"),
                        }
                    }
                }
                Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?))
            }
        };
        Ok(JobStore {
            entries: Mutex::new(entries),
            next_id: Mutex::new(next_id),
            journal: file,
        })
    }

    pub(crate) fn create(&self, spec: CampaignSpec) -> String {
        let id = {
            let mut next = self.next_id.lock().unwrap();
            let id = format!("job-{:06}", *next);
            *next += 1;
            id
        };
        let record = JobRecord {
            job_id: id.clone(),
            state: JobState::Queued,
            spec,
            history: Vec::new(),
            result: None,
            error: None,
        };
        let (version, _) = watch::channel(0);
        self.entries.lock().unwrap().insert(id.clone(), Entry { record, version });
        id
    }

    pub(crate) fn get(&self, id: &str) -> Option<JobRecord> {
        self.entries.lock().unwrap().get(id).map(|e| e.record.clone())
    }

    pub(crate) fn subscribe(&self, id: &str) -> Option<watch::Receiver<u64>> {
        self.entries.lock().unwrap().get(id).map(|e| e.version.subscribe())
    }

    /// History from `from` onward, plus the record when it is terminal.
    pub(crate) fn since(&self, id: &str, from: usize) -> Option<(Vec<GenerationStats>, Option<JobRecord>)> {
        let entries = self.entries.lock().unwrap();
        let record = &entries.get(id)?.record;
        let tail = record.history.get(from..).unwrap_or_default().to_vec();
        let done = record.state.is_terminal().then(|| record.clone());
        Some((tail, done))
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) {
        let mut entries = self.entries.lock().unwrap();
        if let Some(entry) = entries.get_mut(id) {
            f(&mut entry.record);
            entry.version.send_modify(|v| *v += 1);
        }
    }

    pub(crate) fn start(&self, id: &str) {
        self.update(id, |r| {
            if r.state == JobState::Queued {
                r.state = JobState::Running;
            }
        });
    }

    pub(crate) fn push_generation(&self, id: &str, stats: GenerationStats) {
        self.update(id, |r| r.history.push(stats));
    }

    pub(crate) fn finish(&self, id: &str, outcome: Result<OptimizationResult, String>) {
        self.update(id, |r| {
            match outcome {
                Ok(result) => {
                    r.state = JobState::Done;
                    r.result = Some(result);
                }
                Err(e) => {
                    r.state = JobState::Failed;
                    r.error = Some(e);
                }
            }
        });
        if let (Some(journal), Some(record)) = (&self.journal, self.get(id)) {
            let mut line = serde_json::to_vec(&record).expect("record serializes");
            line.push(b'\n');
            let mut file = journal.lock().unwrap();
            if let Err(e) = file.write_all(&line).and_then(|_| file.flush()) {
                tracing::error!("journal write failed: {e}");
            }
        }
    }
}
