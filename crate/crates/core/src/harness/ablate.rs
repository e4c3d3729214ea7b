use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embed::embedding_report;
use super::fmt;
use super::rollout::{compound_rollout, DEFAULT_ROLLOUTS};
use super::train::train;
use crate::envs::{EnvSpec, Orientation, Split};
use crate::error::{Error, Result};
use crate::model::{AttentionVariant, Hyper, InitScheme};
use crate::predictor::ModelKind;

/// A set of K values and seeds sharing one initialisation scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub init: InitScheme,
    #[serde(default = "default_variants")]
    pub variants: Vec<AttentionVariant>,
    pub k: Vec<usize>,
    pub seeds: Vec<u64>,
}

fn default_variants() -> Vec<AttentionVariant> {
    vec![AttentionVariant::SampleDependent]
}

fn default_horizon() -> usize {
    crate::envs::DEFAULT_HORIZON
}

fn default_rollouts() -> usize {
    DEFAULT_ROLLOUTS
}

/// λ1 × λ2 crossed with every block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub blocks: Vec<GridBlock>,
    #[serde(default = "default_rollouts")]
    pub n_rollouts: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

impl AblationGrid {
    /// 4 λ1 × 4 λ2 × (fixed rows, K ∈ {4, 8, 16}, 10 seeds + random, K ∈ {4, 9, 14}, 5 seeds) = 720 runs.
    pub fn full() -> Self {
        let lams = vec![5e-8, 5e-7, 5e-6, 5e-5];
        Self {
            lambda1: lams.clone(),
            lambda2: lams,
            blocks: vec![
                GridBlock {
                    init: InitScheme::FixedRows,
                    variants: default_variants(),
                    k: vec![4, 8, 16],
                    seeds: (0..10).collect(),
                },
                GridBlock {
                    init: InitScheme::Random,
                    variants: default_variants(),
                    k: vec![4, 9, 14],
                    seeds: (0..5).collect(),
                },
            ],
            n_rollouts: DEFAULT_ROLLOUTS,
            horizon: default_horizon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| Error::Config {
            path: path.into(),
            message: message.into(),
        };
        if self.lambda1.is_empty() || self.lambda2.is_empty() || self.blocks.is_empty() {
            return Err(bad("ablate", "grid has an empty axis"));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.k.is_empty() || b.seeds.is_empty() || b.variants.is_empty() {
                return Err(bad(&format!("ablate.blocks[{i}]"), "block has an empty axis"));
            }
        }
        if self.n_rollouts == 0 || self.horizon == 0 {
            return Err(bad("ablate.n_rollouts", "rollout count and horizon must be positive"));
        }
        Ok(())
    }

    /// Every run in a fixed order: λ1, λ2, then blocks, variants, K, seed.
    pub fn runs(&self, base: &Hyper) -> Vec<Hyper> {
        let mut out = Vec::new();
        for &l1 in &self.lambda1 {
            for &l2 in &self.lambda2 {
                for b in &self.blocks {
                    for &variant in &b.variants {
                        for &k in &b.k {
                            for &seed in &b.seeds {
                                out.push(Hyper {
                                    lambda1: l1,
                                    lambda2: l2,
                                    k,
                                    init: b.init,
                                    variant,
                                    seed,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRecord {
    pub hash: String,
    #[serde(serialize_with = "fmt::serialize")]
    pub lambda1: f64,
    #[serde(serialize_with = "fmt::serialize")]
    pub lambda2: f64,
    pub k: usize,
    pub init: InitScheme,
    pub variant: AttentionVariant,
    pub seed: u64,
    pub status: RunStatus,
    /// Cumulative test compound error at the last rollout step.
    #[serde(serialize_with = "fmt::opt::serialize")]
    pub final_test_error: Option<f64>,
    #[serde(serialize_with = "fmt::opt::serialize")]
    pub final_train_error: Option<f64>,
    /// Absent for flat environments, which have no cluster structure.
    #[serde(serialize_with = "fmt::opt::serialize")]
    pub silhouette: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
struct RunKey<'a> {
    env: &'a EnvSpec,
    hyper: &'a Hyper,
    n_rollouts: usize,
    horizon: usize,
}

/// Stable identity of one run: SHA-256 of its canonical JSON, hex-truncated.
pub fn config_hash(env: &EnvSpec, hyper: &Hyper, n_rollouts: usize, horizon: usize) -> String {
    let key = RunKey {
        env,
        hyper,
        n_rollouts,
        horizon,
    };
    let bytes = serde_json::to_vec(&key).expect("run key serialises");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Trains and evaluates one NID configuration.
pub fn run_one(env: &EnvSpec, hyper: &Hyper, n_rollouts: usize, horizon: usize) -> AblationRecord {
    let hash = config_hash(env, hyper, n_rollouts, horizon);
    let mut rec = AblationRecord {
        hash,
        lambda1: hyper.lambda1,
        lambda2: hyper.lambda2,
        k: hyper.k,
        init: hyper.init,
        variant: hyper.variant,
        seed: hyper.seed,
        status: RunStatus::Ok,
        final_test_error: None,
        final_train_error: None,
        silhouette: None,
        error: None,
    };
    let outcome = (|| -> Result<(f64, f64, Option<f64>)> {
        let trained = train(ModelKind::Nid, env, hyper)?;
        let test = compound_rollout(&trained.model, env, Split::Test, n_rollouts, horizon, hyper.seed)?;
        let tr = compound_rollout(&trained.model, env, Split::Train, n_rollouts, horizon, hyper.seed)?;
        let sil = match (env.orientation, trained.model.as_nid()) {
            (Orientation::Flat, _) | (_, None) => None,
            (_, Some(m)) => Some(embedding_report(m, env)?.silhouette),
        };
        Ok((test.final_mean(), tr.final_mean(), sil))
    })();
    match outcome {
        Ok((test, tr, sil)) => {
            rec.final_test_error = Some(test);
            rec.final_train_error = Some(tr);
            rec.silhouette = sil;
        }
        Err(e) => {
            rec.status = RunStatus::Failed;
            rec.error = Some(e.to_string());
        }
    }
    rec
}

#[derive(Deserialize)]
struct HashOnly {
    hash: String,
}

/// Hashes already present in `path`. A torn final line (from an interrupted
/// run) is cut off so appending resumes on a clean boundary.
fn existing_hashes(path: &Path) -> Result<HashSet<String>> {
    let mut done = HashSet::new();
    let Ok(f) = File::open(path) else {
        return Ok(done);
    };
    let mut good_len = 0u64;
    let mut reader = BufReader::new(f);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        if !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<HashOnly>(line.trim_end()) {
            Ok(h) => {
                done.insert(h.hash);
                good_len += n as u64;
            }
            Err(_) => break,
        }
    }
    let f = OpenOptions::new().write(true).open(path)?;
    if f.metadata()?.len() != good_len {
        f.set_len(good_len)?;
    }
    Ok(done)
}

/// Emits buffered records strictly in grid order.
struct OrderedWriter<W: Write> {
    out: W,
    next: usize,
    pending: BTreeMap<usize, AblationRecord>,
    order: Vec<usize>,
}

impl<W: Write> OrderedWriter<W> {
    fn push(&mut self, idx: usize, rec: AblationRecord) -> Result<()> {
        self.pending.insert(idx, rec);
        while self.next < self.order.len() {
            let Some(r) = self.pending.remove(&self.order[self.next]) else {
                break;
            };
            serde_json::to_writer(&mut self.out, &r)?;
            self.out.write_all(b"\n")?;
            self.out.flush()?;
            self.next += 1;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationSummary {
    pub total: usize,
    pub skipped: usize,
    pub trained: usize,
    pub failed: usize,
}

/// Runs every configuration not yet present in `out_path`, `jobs` at a time,
/// appending one NDJSON record per run in grid order.
pub fn ablation_grid(env: &EnvSpec, base: &Hyper, grid: &AblationGrid, out_path: &Path, jobs: usize) -> Result<AblationSummary> {
    env.validate()?;
    grid.validate()?;
    let runs = grid.runs(base);
    for h in &runs {
        h.validate()?;
    }
    let done = existing_hashes(out_path)?;
    let todo: Vec<usize> = (0..runs.len())
        .filter(|&i| !done.contains(&config_hash(env, &runs[i], grid.n_rollouts, grid.horizon)))
        .collect();
    let mut file = OpenOptions::new().create(true).append(true).open(out_path)?;
    file.seek(SeekFrom::End(0))?;
    let writer = Mutex::new(OrderedWriter {
        out: std::io::BufWriter::new(file),
        next: 0,
        pending: BTreeMap::new(),
        order: todo.clone(),
    });
    let failed = std::sync::atomic::AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
    pool.install(|| {
        todo.par_iter().try_for_each(|&i| -> Result<()> {
            let rec = run_one(env, &runs[i], grid.n_rollouts, grid.horizon);
            if rec.status == RunStatus::Failed {
                failed.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
            writer.lock().expect("writer lock").push(i, rec)
        })
    })?;
    Ok(AblationSummary {
        total: runs.len(),
        skipped: runs.len() - todo.len(),
        trained: todo.len(),
        failed: failed.into_inner(),
    })
}
