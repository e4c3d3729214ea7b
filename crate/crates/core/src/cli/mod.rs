//! `nidlab` command line: gen, train, eval, embed, ablate, check-grad, render.

mod config;
mod render;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    AblateBlock, CheckGradBlock, EnvBlock, EnvPreset, EvalBlock, GenBlock, GridPreset, ModelBlock, RunConfig,
    TrainBlock,
};
pub use render::{render_distribution, render_state, VISIBLE_MASS};

use crate::checkpoint::{AnyModel, Checkpoint};
use crate::envs::{generate_episodes, read_episodes, run_episode, to_state_tensor, EnvSpec, Episode, Policy, Split};
use crate::error::{Error, Result};
use crate::harness::{
    ablation_grid, aggregate, compound_rollout, embedding_report, fmt::f17, gradient_sweep, train,
    train_on_episodes, write_csv_aggregate, write_csv_header, write_csv_rows,
};
use crate::model::Hyper;
use crate::predictor::{predict, TransitionModel};
use crate::seed;

/// Seed override consulted when `--seed` is absent.
pub const SEED_ENV: &str = "NIDLAB_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nidlab", version, about = "Transition-selector world models on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restricts the command to one split.
    #[arg(long)]
    split: Option<Split>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write simulator episodes as NDJSON.
    Gen(Common),
    /// Train one model per seed; writes checkpoints and learning curves.
    Train(Common),
    /// Compound-rollout evaluation of trained checkpoints.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Encoder embeddings and Silhouette score of NID checkpoints.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Resumable hyperparameter grid.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Finite-difference check of every model's gradients.
    CheckGrad(Common),
    /// ASCII frames of an episode, or of a model's closed-loop rollout.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Episode file to draw from instead of simulating.
        #[arg(long)]
        episodes: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_to(argv, &mut std::io::stdout().lock())
}

/// Like [`run`], with the command's report written to `out`.
pub fn run_to<I, T>(argv: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

/// Config with command-line overrides applied.
struct Ctx {
    cfg: RunConfig,
    env: EnvSpec,
    split: Option<Split>,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let mut cfg = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => Some(v.trim().parse::<u64>().map_err(|e| Error::Config {
                path: SEED_ENV.into(),
                message: e.to_string(),
            })?),
            Err(_) => None,
        };
        if let Some(s) = c.seed.or(env_seed) {
            cfg.train.seeds = vec![s];
            cfg.model.hyper.seed = s;
        }
        if let Some(o) = &c.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        let env = cfg.env.build()?;
        Ok(Self { cfg, env, split: c.split })
    }

    fn splits(&self) -> Vec<Split> {
        match self.split {
            Some(s) => vec![s],
            None => self.cfg.eval.splits.clone(),
        }
    }

    fn seeds(&self) -> &[u64] {
        &self.cfg.train.seeds
    }

    fn hyper(&self, seed: u64) -> Hyper {
        Hyper { seed, ..self.cfg.model.hyper.clone() }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.cfg.out)?;
        Ok(&self.cfg.out)
    }

    fn write_effective(&self) -> Result<()> {
        let path = self.out_dir()?.join("effective_config.json");
        fs::write(path, self.cfg.to_json() + "\n")?;
        Ok(())
    }

    fn checkpoint_path(&self, seed: u64) -> PathBuf {
        self.cfg.out.join(format!("{}_seed{seed}.ckpt.json", self.cfg.model.kind.as_str()))
    }

    /// Explicit `--checkpoint` (single seed) or the train command's file for each seed.
    fn checkpoints(&self, explicit: &Option<PathBuf>) -> Result<Vec<(u64, AnyModel)>> {
        let paths: Vec<(u64, PathBuf)> = match explicit {
            Some(p) => vec![(self.seeds()[0], p.clone())],
            None => self.seeds().iter().map(|&s| (s, self.checkpoint_path(s))).collect(),
        };
        paths
            .into_iter()
            .map(|(s, p)| {
                if !p.exists() {
                    return Err(Error::contract(format!("checkpoint {} not found", p.display())));
                }
                let model = Checkpoint::load(&p)?.restore()?;
                let want = (self.env.n_objects(), self.env.positions, self.env.n_actions());
                if model.dims() != want {
                    return Err(Error::contract(format!(
                        "checkpoint {} has dims {:?}, environment needs {want:?}",
                        p.display(),
                        model.dims()
                    )));
                }
                Ok((s, model))
            })
            .collect()
    }
}

fn split_index(s: Split) -> u64 {
    match s {
        Split::Train => 0,
        Split::Test => 1,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn dispatch(cmd: Command, out: &mut impl Write) -> Result<i32> {
    match cmd {
        Command::Gen(c) => cmd_gen(&Ctx::new(&c)?, out),
        Command::Train(c) => cmd_train(&Ctx::new(&c)?, out),
        Command::Eval { common, checkpoint } => cmd_eval(&Ctx::new(&common)?, &checkpoint, out),
        Command::Embed { common, checkpoint } => cmd_embed(&Ctx::new(&common)?, &checkpoint, out),
        Command::Ablate { common, jobs } => cmd_ablate(&Ctx::new(&common)?, jobs, out),
        Command::CheckGrad(c) => cmd_check_grad(&Ctx::new(&c)?, out),
        Command::Render { common, checkpoint, episodes } => cmd_render(&Ctx::new(&common)?, &checkpoint, &episodes, out),
    }
}

fn cmd_gen(ctx: &Ctx, out: &mut impl Write) -> Result<i32> {
    ctx.write_effective()?;
    let seed = ctx.seeds()[0];
    let split = ctx.split.unwrap_or(Split::Train);
    let mut rng = seed::stream(seed, "gen", split_index(split));
    let eps = generate_episodes(&ctx.env, split, ctx.cfg.gen.n_episodes, Policy::for_env(&ctx.env), &mut rng)?;
    let path = ctx.out_dir()?.join(format!("episodes_{}_seed{seed}.ndjson", split.as_str()));
    let mut w = create(&path)?;
    crate::envs::write_episodes(&mut w, &ctx.env, &eps)?;
    w.flush()?;
    writeln!(out, "wrote {} episodes to {}", eps.len(), path.display())?;
    Ok(EXIT_OK)
}

fn load_episodes(ctx: &Ctx, path: &Path) -> Result<Vec<Episode>> {
    let recs = read_episodes(BufReader::new(File::open(path)?))?;
    recs.into_iter()
        .map(|(spec, ep)| {
            if spec != ctx.env {
                return Err(Error::Config {
                    path: "train.episodes".into(),
                    message: format!("{} was recorded in a different environment", path.display()),
                });
            }
            Ok(ep)
        })
        .collect()
}

fn cmd_train(ctx: &Ctx, out: &mut impl Write) -> Result<i32> {
    ctx.write_effective()?;
    let dir = ctx.out_dir()?;
    let kind = ctx.cfg.model.kind;
    let episodes = match &ctx.cfg.train.episodes {
        Some(p) => Some(load_episodes(ctx, p)?),
        None => None,
    };
    for &s in ctx.seeds() {
        let hyper = ctx.hyper(s);
        let trained = match &episodes {
            Some(eps) => train_on_episodes(kind, &ctx.env, &hyper, eps)?,
            None => train(kind, &ctx.env, &hyper)?,
        };
        Checkpoint::of(&trained.model, &hyper).save(&ctx.checkpoint_path(s))?;
        let curve_path = dir.join(format!("{}_seed{s}.curve.csv", kind.as_str()));
        let mut w = create(&curve_path)?;
        writeln!(w, "step,mean_loss")?;
        let c = &trained.curve;
        for (i, m) in c.means.iter().enumerate() {
            writeln!(w, "{},{}", ((i + 1) * c.bin).min(c.steps), f17(*m))?;
        }
        w.flush()?;
        let last = c.means.last().map_or("-".to_string(), |v| format!("{v:.6}"));
        writeln!(out, "{} seed {s}: {} steps, final bin loss {last}", kind.as_str(), c.steps)?;
    }
    Ok(EXIT_OK)
}

fn cmd_eval(ctx: &Ctx, checkpoint: &Option<PathBuf>, out: &mut impl Write) -> Result<i32> {
    let models = ctx.checkpoints(checkpoint)?;
    ctx.write_effective()?;
    let kind = models[0].1.kind();
    let path = ctx.out_dir()?.join(format!("rollout_{}.csv", kind.as_str()));
    let mut w = create(&path)?;
    write_csv_header(&mut w)?;
    let ev = &ctx.cfg.eval;
    for split in ctx.splits() {
        let mut reports = Vec::new();
        for (s, m) in &models {
            let r = compound_rollout(m, &ctx.env, split, ev.n_rollouts, ev.horizon, *s)?;
            write_csv_rows(&mut w, &r)?;
            reports.push(r);
        }
        let agg = aggregate(&reports)?;
        write_csv_aggregate(&mut w, &agg)?;
        writeln!(
            out,
            "{} {}: cumulative BCE at step {} = {:.6} ± {:.6} over {} seed(s)",
            kind.as_str(),
            split.as_str(),
            ev.horizon,
            agg.mean.last().copied().unwrap_or(0.0),
            agg.std.last().copied().unwrap_or(0.0),
            reports.len()
        )?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_embed(ctx: &Ctx, checkpoint: &Option<PathBuf>, out: &mut impl Write) -> Result<i32> {
    let models = ctx.checkpoints(checkpoint)?;
    ctx.write_effective()?;
    let dir = ctx.out_dir()?;
    for (s, m) in &models {
        let nid = m
            .as_nid()
            .ok_or_else(|| Error::contract("embeddings need an NID checkpoint"))?;
        let report = embedding_report(nid, &ctx.env)?;
        let path = dir.join(format!("embedding_seed{s}.json"));
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
        writeln!(out, "seed {s}: silhouette {:.6}", report.silhouette)?;
    }
    Ok(EXIT_OK)
}

fn cmd_ablate(ctx: &Ctx, jobs: Option<usize>, out: &mut impl Write) -> Result<i32> {
    let grid = ctx
        .cfg
        .ablate
        .as_ref()
        .ok_or_else(|| Error::Config {
            path: "ablate".into(),
            message: "the ablate command needs an `ablate` block".into(),
        })?
        .grid();
    ctx.write_effective()?;
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let path = ctx.out_dir()?.join("ablation.ndjson");
    let s = ablation_grid(&ctx.env, &ctx.cfg.model.hyper, &grid, &path, jobs)?;
    writeln!(
        out,
        "{} runs: {} already present, {} trained, {} failed -> {}",
        s.total,
        s.skipped,
        s.trained,
        s.failed,
        path.display()
    )?;
    Ok(if s.failed > 0 { EXIT_RUNTIME } else { EXIT_OK })
}

fn cmd_check_grad(ctx: &Ctx, out: &mut impl Write) -> Result<i32> {
    let cg = &ctx.cfg.check_grad;
    let r = gradient_sweep(cg.n_configs, cg.step, cg.coords_per_param, ctx.seeds()[0])?;
    writeln!(
        out,
        "max relative error {:.3e} over {} configurations ({} coordinates, worst: {:?} #{})",
        r.max_rel_error, r.configs, r.coords, r.worst_family, r.worst_config
    )?;
    Ok(if r.max_rel_error <= cg.tolerance { EXIT_OK } else { EXIT_RUNTIME })
}

fn cmd_render(ctx: &Ctx, checkpoint: &Option<PathBuf>, episodes: &Option<PathBuf>, out: &mut impl Write) -> Result<i32> {
    let seed = ctx.seeds()[0];
    let split = ctx.split.unwrap_or(Split::Test);
    let ep = match episodes {
        Some(p) => load_episodes(ctx, p)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::contract(format!("{} holds no episodes", p.display())))?,
        None => {
            let ep_seed = seed::derive(seed, "render", split_index(split));
            run_episode(&ctx.env, split, Policy::for_env(&ctx.env), ep_seed)?
        }
    };
    let model = match checkpoint {
        Some(_) => Some(ctx.checkpoints(checkpoint)?.remove(0).1),
        None => None,
    };
    let mut x = to_state_tensor(&ctx.env, &ep.states[0]);
    for (t, s) in ep.states.iter().enumerate() {
        writeln!(out, "t={t}")?;
        out.write_all(render_state(&ctx.env, s).as_bytes())?;
        if let Some(m) = &model {
            if t > 0 {
                writeln!(out, "predicted")?;
                out.write_all(render_distribution(&ctx.env, &x).as_bytes())?;
            }
            if let Some(&a) = ep.actions.get(t) {
                let action = (m.n_actions() > 0).then_some(a);
                x = predict(m, &x, action)?;
            }
        }
        writeln!(out)?;
    }
    Ok(EXIT_OK)
}
