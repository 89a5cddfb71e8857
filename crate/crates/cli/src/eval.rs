use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::Context;
use captrade_core::corpus::{load_caption_file, load_reference_file, Caption, CaptionSet, ReferenceSet};
use captrade_core::ngram_metrics::{bleu, cider, compute_df, div_n, mbleu, rouge_l, unique_ratio, DfStats};
use captrade_core::spectral_diversity::self_cider;
use captrade_core::Error;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::{invalid, write_json};

pub const EVAL_SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the evaluation thread pool.
pub const THREADS_ENV: &str = "CAPTRADE_THREADS";

/// Scores candidate caption sets against references.
///
/// Accuracy metrics (BLEU, ROUGE-L, CIDEr-D on its ×10 scale) use the first
/// caption of every set; diversity metrics use all K captions. Document
/// frequencies come from the whole reference file. Metrics undefined for a
/// set are written as null.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL, one {"image_id", "captions": [..]} per line
    #[arg(long)]
    pub candidates: PathBuf,
    /// JSONL, one {"image_id", "references": [..]} per line
    #[arg(long)]
    pub references: PathBuf,
    /// Output JSON report
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub images: usize,
    pub corpus: CorpusScores,
    pub mean: DiversityScores,
    pub per_image: Vec<ImageScores>,
}

#[derive(Debug, Serialize)]
pub struct CorpusScores {
    pub bleu1: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiversityScores {
    pub div1: Option<f64>,
    pub div2: Option<f64>,
    pub mbleu4: Option<f64>,
    pub uniqueness: Option<f64>,
    pub self_cider: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ImageScores {
    pub image_id: String,
    pub k: usize,
    #[serde(flatten)]
    pub diversity: DiversityScores,
    #[serde(skip)]
    rouge_l: f64,
    #[serde(skip)]
    cider: f64,
}

fn score_image(set: &CaptionSet, refs: &ReferenceSet, df: &DfStats) -> ImageScores {
    let first = &set.captions[0];
    ImageScores {
        image_id: set.image_id.clone(),
        k: set.k(),
        diversity: DiversityScores {
            div1: div_n(set, 1).ok(),
            div2: div_n(set, 2).ok(),
            mbleu4: mbleu(set, 4).ok(),
            uniqueness: Some(unique_ratio(set)),
            self_cider: self_cider(set, df).ok(),
        },
        rouge_l: rouge_l(first, refs),
        cider: cider(first, refs, df),
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().context("cannot start evaluation threads")
}

pub fn evaluate(candidates: &[CaptionSet], references: &[ReferenceSet]) -> anyhow::Result<EvalReport> {
    if candidates.is_empty() {
        return Err(invalid("candidate file holds no images"));
    }
    let df = compute_df(references)?;
    let by_id: HashMap<&str, &ReferenceSet> = references.iter().map(|r| (r.image_id.as_str(), r)).collect();
    let paired: Vec<(&CaptionSet, &ReferenceSet)> = candidates
        .iter()
        .map(|c| {
            by_id
                .get(c.image_id.as_str())
                .map(|r| (c, *r))
                .ok_or_else(|| Error::MissingReference(c.image_id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let per_image: Vec<ImageScores> =
        thread_pool()?.install(|| paired.par_iter().map(|(c, r)| score_image(c, r, &df)).collect());

    let firsts: Vec<Caption> = paired.iter().map(|(c, _)| c.captions[0].clone()).collect();
    let refs: Vec<ReferenceSet> = paired.iter().map(|(_, r)| (*r).clone()).collect();
    let n = per_image.len() as f64;
    let corpus = CorpusScores {
        bleu1: bleu(&firsts, &refs, 1)?,
        bleu4: bleu(&firsts, &refs, 4)?,
        rouge_l: per_image.iter().map(|s| s.rouge_l).sum::<f64>() / n,
        cider: per_image.iter().map(|s| s.cider).sum::<f64>() / n,
    };
    let mean = DiversityScores {
        div1: mean_of(per_image.iter().map(|s| s.diversity.div1)),
        div2: mean_of(per_image.iter().map(|s| s.diversity.div2)),
        mbleu4: mean_of(per_image.iter().map(|s| s.diversity.mbleu4)),
        uniqueness: mean_of(per_image.iter().map(|s| s.diversity.uniqueness)),
        self_cider: mean_of(per_image.iter().map(|s| s.diversity.self_cider)),
    };
    Ok(EvalReport {
        schema_version: EVAL_SCHEMA_VERSION,
        images: per_image.len(),
        corpus,
        mean,
        per_image,
    })
}

pub fn run(args: &EvalArgs) -> anyhow::Result<()> {
    let candidates = load_caption_file(&args.candidates)?;
    let references = load_reference_file(&args.references)?;
    let report = evaluate(&candidates, &references)?;
    write_json(&args.out, &report)
}
