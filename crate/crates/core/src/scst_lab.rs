//! REINFORCE on a flat categorical policy over an enumerated candidate pool,
//! used to compare reward baselines for self-critical training:
//!
//! - `greedy`: the reward of the policy's most likely candidate;
//! - `avg`: for each sample, the mean reward of the other K−1 samples;
//! - `rmr`: the range median `(max + min) / 2` of the K sampled rewards.
//!
//! Shift invariance is exact in floating point whenever rewards and the shift
//! lie on a common dyadic grid with headroom in the mantissa, which is why
//! [`CandidatePool::random`] draws rewards on a 2⁻¹⁰ grid.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Caption, CaptionSet, ReferenceSet};
use crate::error::{Error, Result};
use crate::ngram_metrics::{cider, div_n, mbleu, DfStats};
use crate::rng::{self, SNAPSHOT_STREAM_BIT};
use crate::spectral_diversity::self_cider;
use crate::variational::softmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Greedy,
    Avg,
    Rmr,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Greedy, BaselineKind::Avg, BaselineKind::Rmr];

    /// Smallest number of samples per step the baseline is defined for.
    pub fn min_samples(self) -> usize {
        match self {
            BaselineKind::Greedy => 1,
            BaselineKind::Avg | BaselineKind::Rmr => 2,
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Greedy => "greedy",
            BaselineKind::Avg => "avg",
            BaselineKind::Rmr => "rmr",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(BaselineKind::Greedy),
            "avg" => Ok(BaselineKind::Avg),
            "rmr" => Ok(BaselineKind::Rmr),
            other => Err(Error::UnknownBaseline(other.to_owned())),
        }
    }
}

/// Range median of a group of rewards.
pub fn rmr_baseline(rewards: &[f64]) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::invalid("range-median baseline of an empty group"));
    }
    let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max + min) / 2.0)
}

/// Mean reward of the group with position `exclude` left out.
pub fn avg_baseline(rewards: &[f64], exclude: usize) -> Result<f64> {
    if rewards.len() < 2 {
        return Err(Error::invalid(format!(
            "average-of-rest baseline needs at least 2 samples, got {}",
            rewards.len()
        )));
    }
    if exclude >= rewards.len() {
        return Err(Error::invalid(format!("exclude index {exclude} out of range")));
    }
    let rest: f64 = rewards
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != exclude)
        .map(|(_, r)| r)
        .sum();
    Ok(rest / (rewards.len() - 1) as f64)
}

/// Candidates with their rewards. Caption-backed pools also keep the
/// document frequencies so simulator snapshots can score diversity.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    labels: Vec<String>,
    rewards: Vec<f64>,
    captions: Option<Vec<Caption>>,
    df: Option<DfStats>,
}

impl CandidatePool {
    pub fn from_rewards(rewards: Vec<f64>) -> Result<Self> {
        let labels = (0..rewards.len()).map(|i| format!("c{i}")).collect();
        Self::build(labels, rewards, None, None)
    }

    /// Rewards are CIDEr-D of each caption against `refs`.
    pub fn from_captions(captions: Vec<Caption>, refs: &ReferenceSet, df: DfStats) -> Result<Self> {
        let rewards = captions.iter().map(|c| cider(c, refs, &df)).collect();
        let labels = captions.iter().map(|c| c.raw().to_owned()).collect();
        Self::build(labels, rewards, Some(captions), Some(df))
    }

    /// `n` rewards drawn uniformly from the CIDEr-D range on a 2⁻¹⁰ grid,
    /// `{0, 1/1024, …, 10 − 1/1024}`, using stream 0 of `seed`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, 0);
        let rewards = (0..n).map(|_| rng.gen_range(0u32..10 * 1024) as f64 / 1024.0).collect();
        Self::from_rewards(rewards)
    }

    fn build(
        labels: Vec<String>,
        rewards: Vec<f64>,
        captions: Option<Vec<Caption>>,
        df: Option<DfStats>,
    ) -> Result<Self> {
        if rewards.len() < 2 {
            return Err(Error::invalid(format!(
                "candidate pool needs at least 2 candidates, got {}",
                rewards.len()
            )));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("pool rewards must be finite"));
        }
        Ok(CandidatePool {
            labels,
            rewards,
            captions,
            df,
        })
    }

    /// Same pool with `offset` added to every reward.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let mut pool = self.clone();
        pool.rewards.iter_mut().for_each(|r| *r += offset);
        Self::build(pool.labels, pool.rewards, pool.captions, pool.df)
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn captions(&self) -> Option<&[Caption]> {
        self.captions.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub logits: Vec<f64>,
    pub step: u64,
}

impl PolicyState {
    pub fn uniform(n: usize) -> Self {
        PolicyState {
            logits: vec![0.0; n],
            step: 0,
        }
    }

    pub fn probs(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    pub fn expected_reward(&self, pool: &CandidatePool) -> f64 {
        self.probs().iter().zip(pool.rewards()).map(|(p, r)| p * r).sum()
    }

    /// Index of the most likely candidate, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.logits.iter().enumerate() {
            if l > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

pub fn greedy_baseline(policy: &PolicyState, pool: &CandidatePool) -> f64 {
    pool.rewards[policy.argmax()]
}

/// Advantage `r_n − b_n` of every sampled reward under `kind`.
pub fn advantages(kind: BaselineKind, sampled: &[f64], greedy: f64) -> Result<Vec<f64>> {
    if sampled.len() < kind.min_samples() {
        return Err(Error::invalid(format!(
            "baseline {kind} needs at least {} samples per step, got {}",
            kind.min_samples(),
            sampled.len()
        )));
    }
    // Each advantage is assembled from reward differences only, so a constant
    // shift of all rewards cancels before any rounding happens.
    match kind {
        BaselineKind::Greedy => Ok(sampled.iter().map(|r| r - greedy).collect()),
        BaselineKind::Rmr => {
            let max = sampled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = sampled.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(sampled.iter().map(|r| ((r - max) + (r - min)) / 2.0).collect())
        }
        BaselineKind::Avg => {
            let rest = (sampled.len() - 1) as f64;
            Ok(sampled
                .iter()
                .enumerate()
                .map(|(n, r)| {
                    let diff: f64 = sampled
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != n)
                        .map(|(_, s)| r - s)
                        .sum();
                    diff / rest
                })
                .collect())
        }
    }
}

fn check_policy(policy: &PolicyState, pool: &CandidatePool) -> Result<()> {
    if policy.logits.len() != pool.len() {
        return Err(Error::DimensionMismatch {
            expected: pool.len(),
            got: policy.logits.len(),
        });
    }
    if policy.logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("policy logits are not finite".into()));
    }
    Ok(())
}

fn sample_indices<R: Rng>(probs: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let picker = WeightedIndex::new(probs).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((0..k).map(|_| picker.sample(rng)).collect())
}

/// One REINFORCE update. Draws `k` i.i.d. candidates from stream
/// `policy.step` of `seed`, so a run is reproducible from its seed alone.
///
/// The update is `logits += lr / k · Σ_n A_n (e_{i_n} − π)`, the mean exact
/// score-function gradient of the categorical policy.
pub fn reinforce_step(
    policy: &PolicyState,
    pool: &CandidatePool,
    k: usize,
    kind: BaselineKind,
    lr: f64,
    seed: u64,
) -> Result<PolicyState> {
    check_policy(policy, pool)?;
    if k == 0 {
        return Err(Error::invalid("need at least one sample per step"));
    }
    if !lr.is_finite() {
        return Err(Error::invalid("learning rate must be finite"));
    }
    let probs = policy.probs();
    let mut rng = rng::stream(seed, policy.step);
    let picks = sample_indices(&probs, k, &mut rng)?;
    let sampled: Vec<f64> = picks.iter().map(|&i| pool.rewards[i]).collect();
    let adv = advantages(kind, &sampled, greedy_baseline(policy, pool))?;

    let mut grad = vec![0.0; pool.len()];
    for (&i, &a) in picks.iter().zip(&adv) {
        for (j, g) in grad.iter_mut().enumerate() {
            let indicator = if j == i { 1.0 } else { 0.0 };
            *g += a * (indicator - probs[j]);
        }
    }
    let scale = lr / k as f64;
    let logits = policy.logits.iter().zip(&grad).map(|(l, g)| l + scale * g).collect();
    Ok(PolicyState {
        logits,
        step: policy.step + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub baseline: BaselineKind,
    pub k: usize,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    /// Diversity snapshot period in steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            baseline: BaselineKind::Rmr,
            k: 5,
            lr: 0.1,
            steps: 500,
            seed: 0,
            snapshot_every: 0,
        }
    }
}

/// Diversity of K captions sampled from the policy. Metrics undefined for the
/// sampled set (e.g. a zero self-CIDEr kernel) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub div1: Option<f64>,
    pub div2: Option<f64>,
    pub mbleu4: Option<f64>,
    pub self_cider: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub expected_reward: f64,
    pub entropy: f64,
    pub effective_support: f64,
    pub snapshot: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrajectory {
    pub records: Vec<StepRecord>,
    pub final_policy: PolicyState,
}

pub const TRAJECTORY_CSV_HEADER: &str = "step,expected_reward,entropy,effective_support,div1,div2,mbleu4,self_cider";

impl SimTrajectory {
    pub fn initial(&self) -> &StepRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory always holds the initial state")
    }

    /// Writes one CSV row per record; snapshot columns are empty when absent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let (d1, d2, mb, sc) = match &r.snapshot {
                Some(s) => (opt(s.div1), opt(s.div2), opt(s.mbleu4), opt(s.self_cider)),
                None => Default::default(),
            };
            writeln!(
                w,
                "{},{},{},{},{d1},{d2},{mb},{sc}",
                r.step, r.expected_reward, r.entropy, r.effective_support
            )?;
        }
        Ok(())
    }
}

fn snapshot(policy: &PolicyState, pool: &CandidatePool, k: usize, seed: u64) -> Result<Option<Snapshot>> {
    let (Some(captions), Some(df)) = (&pool.captions, &pool.df) else {
        return Ok(None);
    };
    let mut rng = rng::stream(seed, SNAPSHOT_STREAM_BIT | policy.step);
    let picks = sample_indices(&policy.probs(), k, &mut rng)?;
    let set = CaptionSet::new(
        format!("step{}", policy.step),
        picks.iter().map(|&i| captions[i].clone()).collect(),
    )?;
    Ok(Some(Snapshot {
        div1: div_n(&set, 1).ok(),
        div2: div_n(&set, 2).ok(),
        mbleu4: mbleu(&set, 4).ok(),
        self_cider: self_cider(&set, df).ok(),
    }))
}

fn record(policy: &PolicyState, pool: &CandidatePool, config: &SimConfig) -> Result<StepRecord> {
    let entropy = policy.entropy();
    let due = config.snapshot_every > 0 && policy.step.is_multiple_of(config.snapshot_every as u64);
    Ok(StepRecord {
        step: policy.step,
        expected_reward: policy.expected_reward(pool),
        entropy,
        effective_support: entropy.exp(),
        snapshot: if due {
            snapshot(policy, pool, config.k, config.seed)?
        } else {
            None
        },
    })
}

/// Runs `config.steps` REINFORCE updates from the uniform policy, recording
/// the initial state and the state after every update.
pub fn run_sim(pool: &CandidatePool, config: &SimConfig) -> Result<SimTrajectory> {
    if config.k < config.baseline.min_samples() {
        return Err(Error::invalid(format!(
            "baseline {} needs k >= {}, got {}",
            config.baseline,
            config.baseline.min_samples(),
            config.k
        )));
    }
    let mut policy = PolicyState::uniform(pool.len());
    let mut records = Vec::with_capacity(config.steps + 1);
    records.push(record(&policy, pool, config)?);
    for _ in 0..config.steps {
        policy = reinforce_step(&policy, pool, config.k, config.baseline, config.lr, config.seed)?;
        records.push(record(&policy, pool, config)?);
    }
    Ok(SimTrajectory {
        records,
        final_policy: policy,
    })
}
