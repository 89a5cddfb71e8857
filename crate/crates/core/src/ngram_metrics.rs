//! N-gram accuracy metrics (BLEU, ROUGE-L, CIDEr-D) and count-based
//! diversity metrics (Div-n, mBLEU-N, unique sentence ratio).
//!
//! Scales follow the usual reporting conventions: BLEU, ROUGE-L and mBLEU in
//! `[0, 100]`, CIDEr-D in `[0, 10]`, Div-n and uniqueness as fractions.
//!
//! All maps are ordered so floating-point sums are accumulated in a fixed
//! order and scores are bit-reproducible across runs.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::corpus::{Caption, CaptionSet, ReferenceSet};
use crate::error::{Error, Result};

pub type NGram = Vec<String>;

/// Highest n-gram order used by CIDEr-D and the document-frequency table.
pub const MAX_ORDER: usize = 4;

/// Standard deviation of the CIDEr-D Gaussian length penalty, in words.
pub const CIDER_SIGMA: f64 = 6.0;

/// Recall weight of the ROUGE-L F-measure.
pub const ROUGE_BETA: f64 = 1.2;

/// Sliding-window n-gram counts of one token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    pub n: usize,
    pub counts: BTreeMap<NGram, usize>,
}

impl NGramProfile {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }
}

/// # Panics
/// If `n == 0`.
pub fn ngram_profile(tokens: &[String], n: usize) -> NGramProfile {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts = BTreeMap::new();
    for window in tokens.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    NGramProfile { n, counts }
}

/// Document frequencies of the n-grams (orders 1..=4) of a reference corpus,
/// where a document is one image's full reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct DfStats {
    doc_freq: Vec<BTreeMap<NGram, usize>>,
    num_images: usize,
}

impl DfStats {
    pub fn num_images(&self) -> usize {
        self.num_images
    }

    /// Stored document frequency, or `None` for n-grams absent from the corpus.
    pub fn stored(&self, gram: &[String]) -> Option<usize> {
        let n = gram.len();
        if n == 0 || n > MAX_ORDER {
            return None;
        }
        self.doc_freq[n - 1].get(gram).copied()
    }

    /// Frequency used for weighting: unseen n-grams count as appearing in one image.
    pub fn lookup(&self, gram: &[String]) -> usize {
        self.stored(gram).unwrap_or(1).max(1)
    }

    pub fn idf(&self, gram: &[String]) -> f64 {
        (self.num_images as f64).ln() - (self.lookup(gram) as f64).ln()
    }
}

pub fn compute_df(references: &[ReferenceSet]) -> Result<DfStats> {
    if references.is_empty() {
        return Err(Error::invalid("document frequencies need a non-empty reference corpus"));
    }
    let mut doc_freq = vec![BTreeMap::new(); MAX_ORDER];
    for set in references {
        for n in 1..=MAX_ORDER {
            let grams: BTreeSet<&[String]> = set.references.iter().flat_map(|r| r.tokens().windows(n)).collect();
            for g in grams {
                *doc_freq[n - 1].entry(g.to_vec()).or_insert(0) += 1;
            }
        }
    }
    Ok(DfStats {
        doc_freq,
        num_images: references.len(),
    })
}

/// TF-IDF vectors of one caption for every order, with squared norms.
#[derive(Debug, Clone)]
pub(crate) struct CiderVector {
    weights: Vec<BTreeMap<NGram, f64>>,
    norm_sq: Vec<f64>,
    length: usize,
}

impl CiderVector {
    pub(crate) fn new(caption: &Caption, df: &DfStats) -> Self {
        let mut weights = Vec::with_capacity(MAX_ORDER);
        let mut norm_sq = Vec::with_capacity(MAX_ORDER);
        for n in 1..=MAX_ORDER {
            let profile = ngram_profile(caption.tokens(), n);
            let vec: BTreeMap<NGram, f64> = profile
                .counts
                .into_iter()
                .map(|(g, tf)| {
                    let w = tf as f64 * df.idf(&g);
                    (g, w)
                })
                .collect();
            norm_sq.push(vec.values().map(|w| w * w).sum());
            weights.push(vec);
        }
        CiderVector {
            weights,
            norm_sq,
            length: caption.len(),
        }
    }

    /// Per-order clipped cosine similarity times the length penalty.
    fn similarity(&self, reference: &CiderVector) -> [f64; MAX_ORDER] {
        let delta = self.length as f64 - reference.length as f64;
        let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
        let mut out = [0.0; MAX_ORDER];
        for (n, slot) in out.iter_mut().enumerate() {
            let (hyp, refv) = (&self.weights[n], &reference.weights[n]);
            let mut dot = 0.0;
            for (g, &h) in hyp {
                if let Some(&r) = refv.get(g) {
                    dot += h.min(r) * r;
                }
            }
            let (nh, nr) = (self.norm_sq[n], reference.norm_sq[n]);
            if nh != 0.0 && nr != 0.0 {
                // sqrt(a*b) rather than sqrt(a)*sqrt(b): identical vectors give exactly 1
                *slot = dot / (nh * nr).sqrt() * penalty;
            }
        }
        out
    }
}

pub(crate) fn cider_from_vectors(candidate: &CiderVector, refs: &[&CiderVector]) -> f64 {
    let mut per_order = [0.0; MAX_ORDER];
    for r in refs {
        for (acc, s) in per_order.iter_mut().zip(candidate.similarity(r)) {
            *acc += s;
        }
    }
    let mean: f64 = per_order.iter().sum::<f64>() / MAX_ORDER as f64;
    mean / refs.len() as f64 * 10.0
}

/// CIDEr-D of one candidate against one image's references, on the ×10 scale.
pub fn cider(candidate: &Caption, refs: &ReferenceSet, df: &DfStats) -> f64 {
    if candidate.is_empty() || refs.references.is_empty() {
        return 0.0;
    }
    let cand = CiderVector::new(candidate, df);
    let refs: Vec<CiderVector> = refs.references.iter().map(|r| CiderVector::new(r, df)).collect();
    let refs: Vec<&CiderVector> = refs.iter().collect();
    cider_from_vectors(&cand, &refs)
}

/// Clipped match counts and totals per order plus the length pair used by
/// the brevity penalty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct BleuStats {
    matches: Vec<usize>,
    totals: Vec<usize>,
    cand_len: usize,
    ref_len: usize,
}

impl BleuStats {
    fn new(candidate: &[String], refs: &[&[String]], max_n: usize) -> Self {
        let mut matches = vec![0; max_n];
        let mut totals = vec![0; max_n];
        for n in 1..=max_n {
            let cand = ngram_profile(candidate, n);
            let ref_profiles: Vec<NGramProfile> = refs.iter().map(|r| ngram_profile(r, n)).collect();
            for (g, &c) in &cand.counts {
                let max_ref = ref_profiles.iter().map(|p| p.get(g)).max().unwrap_or(0);
                matches[n - 1] += c.min(max_ref);
            }
            totals[n - 1] = cand.total();
        }
        let c = candidate.len();
        // closest reference length, ties to the shorter one
        let ref_len = refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&r| (r.abs_diff(c), r))
            .unwrap_or(0);
        BleuStats {
            matches,
            totals,
            cand_len: c,
            ref_len,
        }
    }

    fn accumulate(&mut self, other: &BleuStats) {
        if self.matches.is_empty() {
            self.matches = vec![0; other.matches.len()];
            self.totals = vec![0; other.totals.len()];
        }
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.cand_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        }
    }

    /// Unsmoothed score in `[0, 1]`.
    fn score(&self) -> f64 {
        if self.cand_len == 0 {
            return 0.0;
        }
        let n = self.matches.len() as f64;
        let mut log_sum = 0.0;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            if m == 0 || t == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln() / n;
        }
        log_sum.exp() * self.brevity_penalty()
    }

    /// Sentence-level score with add-one smoothing of zero match counts at
    /// orders two and above. A zero unigram match still yields 0.
    fn smoothed_score(&self) -> f64 {
        if self.cand_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let n = self.matches.len() as f64;
        let mut log_sum = 0.0;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            let p = if m == 0 {
                1.0 / (t as f64 + 1.0)
            } else {
                m as f64 / t as f64
            };
            log_sum += p.ln() / n;
        }
        log_sum.exp() * self.brevity_penalty()
    }
}

/// Corpus BLEU-`max_n` on the 0-100 scale.
pub fn bleu(candidates: &[Caption], refs: &[ReferenceSet], max_n: usize) -> Result<f64> {
    if candidates.len() != refs.len() {
        return Err(Error::invalid(format!(
            "{} candidates but {} reference sets",
            candidates.len(),
            refs.len()
        )));
    }
    if max_n == 0 {
        return Err(Error::invalid("BLEU order must be at least 1"));
    }
    let mut total = BleuStats::default();
    for (cand, set) in candidates.iter().zip(refs) {
        let ref_tokens: Vec<&[String]> = set.references.iter().map(|r| r.tokens()).collect();
        total.accumulate(&BleuStats::new(cand.tokens(), &ref_tokens, max_n));
    }
    if total.matches.is_empty() {
        return Ok(0.0);
    }
    Ok(100.0 * total.score())
}

/// Smoothed sentence BLEU-`max_n` on the 0-100 scale.
pub fn sentence_bleu(candidate: &Caption, refs: &[&Caption], max_n: usize) -> f64 {
    let ref_tokens: Vec<&[String]> = refs.iter().map(|r| r.tokens()).collect();
    100.0 * BleuStats::new(candidate.tokens(), &ref_tokens, max_n).smoothed_score()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Best LCS F-measure (recall weighted by β²) over the references, 0-100 scale.
pub fn rouge_l(candidate: &Caption, refs: &ReferenceSet) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let beta_sq = ROUGE_BETA * ROUGE_BETA;
    let best = refs
        .references
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let lcs = lcs_len(candidate.tokens(), r.tokens()) as f64;
            let prec = lcs / candidate.len() as f64;
            let rec = lcs / r.len() as f64;
            if prec == 0.0 || rec == 0.0 {
                0.0
            } else {
                (1.0 + beta_sq) * prec * rec / (rec + beta_sq * prec)
            }
        })
        .fold(0.0, f64::max);
    100.0 * best
}

/// Distinct n-grams across the set divided by the total number of words.
///
/// The denominator is the word count at every order, not the n-gram count.
pub fn div_n(set: &CaptionSet, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Div-n order must be at least 1"));
    }
    let words: usize = set.captions.iter().map(Caption::len).sum();
    if words == 0 {
        return Err(Error::invalid(format!(
            "caption set {:?} contains no words",
            set.image_id
        )));
    }
    let distinct: HashSet<&[String]> = set.captions.iter().flat_map(|c| c.tokens().windows(n)).collect();
    Ok(distinct.len() as f64 / words as f64)
}

/// Mean smoothed sentence BLEU-`n` of each caption against the other K−1.
/// Lower means more diverse.
pub fn mbleu(set: &CaptionSet, n: usize) -> Result<f64> {
    let k = set.k();
    if k < 2 {
        return Err(Error::invalid(format!(
            "mBLEU needs at least 2 captions, set {:?} has {k}",
            set.image_id
        )));
    }
    if n == 0 {
        return Err(Error::invalid("mBLEU order must be at least 1"));
    }
    let total: f64 = (0..k)
        .map(|i| {
            let rest: Vec<&Caption> = set
                .captions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .collect();
            sentence_bleu(&set.captions[i], &rest, n)
        })
        .sum();
    Ok(total / k as f64)
}

/// Fraction of distinct sentences in one set.
pub fn unique_ratio(set: &CaptionSet) -> f64 {
    let distinct: HashSet<&str> = set.captions.iter().map(Caption::raw).collect();
    distinct.len() as f64 / set.k() as f64
}

/// Mean over images of the distinct-sentence ratio.
pub fn uniqueness(sets: &[CaptionSet]) -> Result<f64> {
    if sets.is_empty() {
        return Err(Error::invalid("uniqueness needs at least one caption set"));
    }
    Ok(sets.iter().map(unique_ratio).sum::<f64>() / sets.len() as f64)
}
