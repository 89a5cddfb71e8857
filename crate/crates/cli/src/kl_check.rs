use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::bail;
use captrade_core::rng;
use captrade_core::variational::{gmm_kl_upper_bound, mc_gmm_kl, random_gmm, MIN_MC_SAMPLES};
use clap::Args;
use rand::Rng;
use rayon::prelude::*;

use crate::{invalid, write_file};

/// Checks the closed-form mixture KL upper bound against a Monte-Carlo
/// estimate on random mixture pairs. Fails (exit 1) if any bound falls more
/// than three standard errors below its estimate.
///
/// Case i draws its component count in 1..=kernels, dimension in 1..=dim and
/// both mixtures from stream i of the seed. CSV columns: case, kernels, dim,
/// bound, weighted_bound (beta · bound), mc, stderr, holds.
#[derive(Debug, Args)]
pub struct KlCheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub cases: u64,
    /// Monte-Carlo samples per case
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Largest mixture component count
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub kernels: u64,
    /// Largest latent dimension
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub dim: u64,
    /// KL weight reported alongside the bound
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Compare every mixture with itself
    #[arg(long)]
    pub identical: bool,
    /// Optional per-case CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub case: u64,
    pub kernels: usize,
    pub dim: usize,
    pub bound: f64,
    pub mc: f64,
    pub stderr: f64,
}

impl CaseResult {
    pub fn holds(&self) -> bool {
        self.bound >= self.mc - 3.0 * self.stderr
    }
}

pub fn check_case(seed: u64, case: u64, args: &KlCheckArgs) -> anyhow::Result<CaseResult> {
    let mut rng = rng::stream(seed, case);
    let k = rng.gen_range(1..=args.kernels as usize);
    let d = rng.gen_range(1..=args.dim as usize);
    let p = random_gmm(&mut rng, k, d)?;
    let q = if args.identical {
        p.clone()
    } else {
        random_gmm(&mut rng, k, d)?
    };
    let mc_seed: u64 = rng.gen();
    let bound = gmm_kl_upper_bound(&p, &q)?;
    let mc = mc_gmm_kl(&p, &q, args.samples, mc_seed)?;
    Ok(CaseResult {
        case,
        kernels: k,
        dim: d,
        bound: bound.total,
        mc: mc.estimate,
        stderr: mc.stderr,
    })
}

pub fn run_cases(args: &KlCheckArgs) -> anyhow::Result<Vec<CaseResult>> {
    if args.samples < MIN_MC_SAMPLES {
        return Err(invalid(format!("--samples must be at least {MIN_MC_SAMPLES}")));
    }
    if !(args.beta.is_finite() && args.beta >= 0.0) {
        return Err(invalid("--beta must be finite and non-negative"));
    }
    (0..args.cases)
        .into_par_iter()
        .map(|i| check_case(args.seed, i, args))
        .collect()
}

pub fn run(args: &KlCheckArgs) -> anyhow::Result<()> {
    let results = run_cases(args)?;
    let mut csv = String::from("case,kernels,dim,bound,weighted_bound,mc,stderr,holds\n");
    for r in &results {
        println!(
            "case {:>3}  K={} d={}  bound {:.6}  mc {:.6} ± {:.6}  {}",
            r.case,
            r.kernels,
            r.dim,
            r.bound,
            r.mc,
            r.stderr,
            if r.holds() { "ok" } else { "VIOLATED" }
        );
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.case,
            r.kernels,
            r.dim,
            r.bound,
            args.beta * r.bound,
            r.mc,
            r.stderr,
            r.holds()
        )?;
    }
    if let Some(path) = &args.out {
        write_file(path, |w| w.write_all(csv.as_bytes()))?;
    }
    let violations = results.iter().filter(|r| !r.holds()).count();
    println!("{}/{} bounds hold", results.len() - violations, results.len());
    if violations > 0 {
        bail!("{violations} of {} bound checks failed", results.len());
    }
    Ok(())
}
