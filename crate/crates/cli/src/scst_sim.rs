use std::path::{Path, PathBuf};

use captrade_core::corpus::{load_reference_file, Caption, ReferenceSet};
use captrade_core::ngram_metrics::compute_df;
use captrade_core::scst_lab::{
    avg_baseline, greedy_baseline, rmr_baseline, run_sim, BaselineKind, CandidatePool, PolicyState, SimConfig,
};
use clap::Args;
use serde::Deserialize;

use crate::{invalid, read_json, relative_to, write_file};

/// REINFORCE on a flat policy over a candidate pool under one reward
/// baseline. Flags override the config file.
///
/// Config: {"rewards": [..]} or {"captions": [..], "references": [..],
/// "df_corpus": "refs.jsonl"}, plus optional "baseline", "k", "lr",
/// "steps", "seed", "snapshot_every". Caption pools are rewarded with
/// CIDEr-D against the references, with document frequencies from the
/// df_corpus reference file (path relative to the config).
///
/// CSV columns: step, expected_reward, entropy, effective_support (exp of
/// entropy), then div1, div2, mbleu4, self_cider of K captions sampled at
/// snapshot steps (empty otherwise).
#[derive(Debug, Args)]
pub struct ScstSimArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trajectory CSV
    #[arg(long)]
    pub out: PathBuf,
    /// greedy | avg | rmr [default: rmr]
    #[arg(long)]
    pub baseline: Option<String>,
    /// Samples per step [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// [default: 0.1]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 500]
    #[arg(long)]
    pub steps: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Diversity snapshot period, 0 disables [default: 0]
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub rewards: Option<Vec<f64>>,
    pub captions: Option<Vec<String>>,
    pub references: Option<Vec<String>>,
    pub df_corpus: Option<PathBuf>,
    pub baseline: Option<String>,
    pub k: Option<usize>,
    pub lr: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub snapshot_every: Option<usize>,
}

fn build_pool(file: &SimFile, config_path: &Path) -> anyhow::Result<CandidatePool> {
    match (&file.rewards, &file.captions) {
        (Some(rewards), None) => Ok(CandidatePool::from_rewards(rewards.clone())?),
        (None, Some(captions)) => {
            let refs = file
                .references
                .as_ref()
                .ok_or_else(|| invalid("caption pools need \"references\""))?;
            let corpus = file.df_corpus.as_ref().ok_or_else(|| {
                invalid("caption pools need \"df_corpus\", a reference JSONL for document frequencies")
            })?;
            let df = compute_df(&load_reference_file(relative_to(config_path, corpus))?)?;
            let refs = ReferenceSet::from_raw("pool", refs)?;
            let captions = captions.iter().map(|c| Caption::new(c.as_str())).collect();
            Ok(CandidatePool::from_captions(captions, &refs, df)?)
        }
        _ => Err(invalid("config needs exactly one of \"rewards\" or \"captions\"")),
    }
}

fn resolve_config(args: &ScstSimArgs, file: &SimFile) -> anyhow::Result<SimConfig> {
    let defaults = SimConfig::default();
    let baseline = match args.baseline.as_ref().or(file.baseline.as_ref()) {
        Some(name) => name.parse()?,
        None => defaults.baseline,
    };
    let config = SimConfig {
        baseline,
        k: args.k.or(file.k).unwrap_or(defaults.k),
        lr: args.lr.or(file.lr).unwrap_or(defaults.lr),
        steps: args.steps.or(file.steps).unwrap_or(defaults.steps),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        snapshot_every: args
            .snapshot_every
            .or(file.snapshot_every)
            .unwrap_or(defaults.snapshot_every),
    };
    if config.k < config.baseline.min_samples() {
        return Err(invalid(format!(
            "baseline {} needs k >= {}, got {}",
            config.baseline,
            config.baseline.min_samples(),
            config.k
        )));
    }
    Ok(config)
}

/// Baseline of the whole pool taken as one sample group, as seen by the
/// uniform initial policy.
pub fn pool_baseline(kind: BaselineKind, pool: &CandidatePool) -> anyhow::Result<f64> {
    let r = pool.rewards();
    Ok(match kind {
        BaselineKind::Greedy => greedy_baseline(&PolicyState::uniform(pool.len()), pool),
        BaselineKind::Rmr => rmr_baseline(r)?,
        BaselineKind::Avg => {
            (0..r.len())
                .map(|i| avg_baseline(r, i))
                .sum::<captrade_core::Result<f64>>()?
                / r.len() as f64
        }
    })
}

pub fn run(args: &ScstSimArgs) -> anyhow::Result<()> {
    let file: SimFile = read_json(&args.config)?;
    let config = resolve_config(args, &file)?;
    let pool = build_pool(&file, &args.config)?;
    let traj = run_sim(&pool, &config)?;
    write_file(&args.out, |w| traj.write_csv(w))?;

    println!(
        "pool: {} candidates, baseline {}, k {}, lr {}, steps {}, seed {}",
        pool.len(),
        config.baseline,
        config.k,
        config.lr,
        config.steps,
        config.seed
    );
    if pool.len() >= config.baseline.min_samples() {
        println!(
            "pool-group baseline ({}): {:?}",
            config.baseline,
            pool_baseline(config.baseline, &pool)?
        );
    }
    println!("initial expected reward: {:.6}", traj.initial().expected_reward);
    println!("final expected reward: {:.6}", traj.last().expected_reward);
    println!("final entropy: {:.6}", traj.last().entropy);
    Ok(())
}
