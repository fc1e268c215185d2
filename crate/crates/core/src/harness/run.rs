//! The outer training loop and its on-disk artifacts.
//!
//! A run directory holds `config.toml`, `metrics.csv` (one row per policy
//! iteration), `eval.csv` (periodic frozen-policy evaluations), `timing.csv`
//! (wall-clock per iteration, kept apart so the other files are
//! reproducible byte for byte) and `checkpoints/iter_NNNNNN/*.params`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::agent::Agent;
use super::config::ExperimentConfig;
use super::metrics::{compute_metrics, DropoutWindow, MetricsRow, MetricsWriter};
use super::rollout::{EvalSummary, Rollout};
use crate::env::XrEnv;
use crate::error::{Error, Result};
use crate::nn::checkpoint;

/// Independent random streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env = 0,
    Agent = 1,
    Eval = 2,
    Init = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub iterations: usize,
    /// First iteration whose windowed dropout rates all met their limits.
    pub first_feasible: Option<usize>,
    /// Evaluation after the last iteration.
    pub final_eval: EvalSummary,
    /// Training-batch mean power over the last `metrics_window` iterations.
    pub final_train_power: f64,
    pub encoder_reads: u64,
    pub potential_reads: u64,
}

/// Frozen-policy evaluation of `agent` on a fork of `rollout`.
pub fn evaluate_policy(agent: &Agent, rollout: &Rollout, slots: usize, seed: u64, iteration: usize) -> Result<EvalSummary> {
    let mut rng = stream_rng(seed, Stream::Eval);
    // Decorrelate evaluations at different iterations.
    rng.set_word_pos(iteration as u128 * (1 << 40));
    rollout.evaluate(agent, slots, &mut rng)
}

struct EvalWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl EvalWriter {
    fn new(path: &Path, users: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut h = vec!["iteration".to_string(), "slots".into(), "mean_power".into()];
        h.extend((1..=users).map(|k| format!("dropout_rate_{k}")));
        h.push("satisfied".into());
        inner.write_record(h)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    fn write(&mut self, iteration: usize, e: &EvalSummary, limits: &[f64]) -> Result<()> {
        let mut r = vec![iteration.to_string(), e.slots.to_string(), e.mean_power.to_string()];
        r.extend(e.dropout_rate.iter().map(f64::to_string));
        r.push(u8::from(e.satisfies(limits)).to_string());
        self.inner.write_record(r)?;
        self.inner.flush()?;
        Ok(())
    }
}

fn save_checkpoints(dir: &Path, iteration: usize, agent: &Agent) -> Result<()> {
    let sub = dir.join("checkpoints").join(format!("iter_{iteration:06}"));
    fs::create_dir_all(&sub)?;
    for (name, params) in agent.named_params() {
        checkpoint::save(&sub.join(format!("{name}.params")), &name, params)?;
    }
    Ok(())
}

/// Runs the full training loop described by `cfg`, writing artifacts under
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;

    let scenario = cfg.scenario_config();
    let limits = scenario.max_dropout.clone();
    let users = scenario.users();
    let mut env_rng = stream_rng(cfg.seed, Stream::Env);
    let mut agent_rng = stream_rng(cfg.seed, Stream::Agent);
    let mut init_rng = stream_rng(cfg.seed, Stream::Init);

    let env = XrEnv::new(scenario, &mut env_rng)?;
    let mut agent = Agent::new(cfg, env.config().state_dim(), &mut init_rng)?;
    let mut rollout = Rollout::new(env, cfg.context_len);

    let mut metrics = MetricsWriter::new(BufWriter::new(File::create(out.join("metrics.csv"))?), users)?;
    let mut evals = EvalWriter::new(&out.join("eval.csv"), users)?;
    let mut timing = csv::Writer::from_path(out.join("timing.csv"))?;
    timing.write_record(["iteration", "seconds"])?;

    let pretrain = cfg.pretrain_iterations();
    let mut window = DropoutWindow::new(cfg.metrics_window);
    let mut first_feasible = None;
    let mut recent_power = std::collections::VecDeque::new();
    let mut final_eval = None;

    for i in 1..=cfg.iterations {
        let started = Instant::now();
        let wrap = |e: Error| Error::Iteration {
            iteration: i,
            source: Box::new(e),
        };
        let theta_collect = agent.theta().checksum();
        let mut batch = rollout
            .collect(&agent, cfg.batch_size, &mut env_rng, &mut agent_rng)
            .map_err(wrap)?;
        let shaping = agent.reshape(&mut batch.tuples).map_err(wrap)?;
        let bm = compute_metrics(&batch.tuples, &mut window, &limits);
        let z_norm = batch
            .tuples
            .iter()
            .map(|t| t.latent.iter().fold(0.0, |acc, z| acc + z * z).sqrt())
            .sum::<f64>()
            / batch.len() as f64;
        let in_pretrain = i <= pretrain;
        let train_context = in_pretrain || !cfg.freeze_after_pretrain;
        let report = agent.learn(&batch, i as u64, train_context, &mut agent_rng).map_err(wrap)?;

        if bm.satisfied && first_feasible.is_none() {
            first_feasible = Some(i);
        }
        recent_power.push_back(bm.mean_power);
        if recent_power.len() > cfg.metrics_window {
            recent_power.pop_front();
        }
        metrics
            .write(&MetricsRow {
                iteration: i,
                phase: if in_pretrain { "pretrain" } else { "deploy" },
                batch: bm,
                branch: report.branch,
                f_hat: agent.f_hat().to_vec(),
                max_surrogate: report.max_surrogate,
                dual_iterations: report.dual_iterations,
                mu: report.steps.mu,
                eta: report.steps.eta,
                upsilon: report.steps.upsilon,
                theta_collect,
                theta_next: agent.theta().checksum(),
                mean_kl: report.mean_kl,
                residual: report.residual,
                shaping,
                z_norm,
            })
            .map_err(wrap)?;

        if i % cfg.eval_interval.max(1) == 0 || i == cfg.iterations {
            let e = evaluate_policy(&agent, &rollout, cfg.eval_slots, cfg.seed, i).map_err(wrap)?;
            evals.write(i, &e, &limits).map_err(wrap)?;
            final_eval = Some(e);
        }
        if (cfg.checkpoint_interval > 0 && i % cfg.checkpoint_interval == 0) || i == cfg.iterations {
            save_checkpoints(&out, i, &agent).map_err(wrap)?;
        }
        timing.write_record([i.to_string(), started.elapsed().as_secs_f64().to_string()])?;
        timing.flush()?;
    }

    let final_eval = match final_eval {
        Some(e) => e,
        None => evaluate_policy(&agent, &rollout, cfg.eval_slots, cfg.seed, 0)?,
    };
    Ok(RunSummary {
        output_dir: out,
        iterations: cfg.iterations,
        first_feasible,
        final_eval,
        final_train_power: recent_power.iter().sum::<f64>() / recent_power.len().max(1) as f64,
        encoder_reads: agent.encoder_reads(),
        potential_reads: agent.potential_reads(),
    })
}
