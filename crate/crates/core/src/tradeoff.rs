//! Trade-off profit rate (TPR), trade-off conversion rate (TCR) and the
//! zero-TPR boundary around a reference point.
//!
//! ```text
//! TPR(a, b) = ½ · ((acc_a − acc_b)/acc_b + (div_a − div_b)/div_b)
//! TCR(ce, rl) = (|div_ce − div_rl| / div_rl) / (|acc_ce − acc_rl| / acc_rl)
//! ```
//!
//! TCR is reported as computed: diversity given up per unit of accuracy
//! gained. Whether a lower or higher value counts as the better conversion is
//! left to the reader of the report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Number of boundary samples emitted by [`tradeoff_report`].
pub const BOUNDARY_SAMPLES: usize = 21;

/// A labelled (accuracy, diversity) pair, conventionally (CIDEr, self-CIDEr).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub label: String,
    pub acc: f64,
    pub div: f64,
}

impl TradeoffPoint {
    pub fn new(label: impl Into<String>, acc: f64, div: f64) -> Result<Self> {
        let p = TradeoffPoint {
            label: label.into(),
            acc,
            div,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.acc.is_finite() && self.acc > 0.0) || !(self.div.is_finite() && self.div > 0.0) {
            return Err(Error::invalid(format!(
                "point {:?}: acc and div must be finite and > 0 (acc={}, div={})",
                self.label, self.acc, self.div
            )));
        }
        Ok(())
    }
}

pub fn tpr(a: &TradeoffPoint, b: &TradeoffPoint) -> Result<f64> {
    b.validate()?;
    Ok(0.5 * ((a.acc - b.acc) / b.acc + (a.div - b.div) / b.div))
}

pub fn tcr(ce: &TradeoffPoint, rl: &TradeoffPoint) -> Result<f64> {
    rl.validate()?;
    if ce.acc == rl.acc {
        return Err(Error::invalid(format!(
            "conversion rate undefined: {:?} and {:?} have equal accuracy {}",
            ce.label, rl.label, ce.acc
        )));
    }
    let div_change = (ce.div - rl.div).abs() / rl.div;
    let acc_change = (ce.acc - rl.acc).abs() / rl.acc;
    Ok(div_change / acc_change)
}

/// Points `(acc, div)` with `tpr((acc, div), b) = 0`, i.e.
/// `div = b.div · (2 − acc / b.acc)`.
pub fn zero_tpr_boundary(b: &TradeoffPoint, acc_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    b.validate()?;
    Ok(acc_values
        .iter()
        .map(|&acc| (acc, b.div * (2.0 - acc / b.acc)))
        .collect())
}

/// Cross-entropy and reinforcement-trained results of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeRlPair {
    pub label: String,
    pub ce: TradeoffPoint,
    pub rl: TradeoffPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprEntry {
    pub label: String,
    pub acc: f64,
    pub div: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcrEntry {
    pub label: String,
    pub tcr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub schema_version: u32,
    pub baseline: TradeoffPoint,
    /// In input order.
    pub tpr: Vec<TprEntry>,
    /// Labels ordered by |TPR| ascending (closest to the boundary first).
    pub ranking: Vec<String>,
    pub tcr: Vec<TcrEntry>,
    pub boundary: Vec<[f64; 2]>,
}

impl TradeoffReport {
    pub fn boundary_csv(&self) -> String {
        let mut out = String::from("acc,div\n");
        for [acc, div] in &self.boundary {
            out.push_str(&format!("{acc},{div}\n"));
        }
        out
    }
}

fn labelled<T>(label: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::invalid(format!("{label}: {e}")))
}

/// TPR of every point against `baseline`, TCR of every pair, and the zero-TPR
/// line sampled at [`BOUNDARY_SAMPLES`] evenly spaced accuracies spanning all
/// points and the baseline.
pub fn tradeoff_report(
    points: &[TradeoffPoint],
    baseline: &TradeoffPoint,
    ce_rl_pairs: &[CeRlPair],
) -> Result<TradeoffReport> {
    if points.is_empty() {
        return Err(Error::invalid("trade-off report needs at least one point"));
    }
    labelled(&baseline.label, baseline.validate())?;
    let mut tpr_entries = Vec::with_capacity(points.len());
    for p in points {
        labelled(&p.label, p.validate())?;
        tpr_entries.push(TprEntry {
            label: p.label.clone(),
            acc: p.acc,
            div: p.div,
            tpr: labelled(&p.label, tpr(p, baseline))?,
        });
    }
    let mut order: Vec<&TprEntry> = tpr_entries.iter().collect();
    order.sort_by(|a, b| a.tpr.abs().total_cmp(&b.tpr.abs()));
    let ranking = order.into_iter().map(|e| e.label.clone()).collect();

    let tcr_entries = ce_rl_pairs
        .iter()
        .map(|pair| {
            Ok(TcrEntry {
                label: pair.label.clone(),
                tcr: labelled(&pair.label, tcr(&pair.ce, &pair.rl))?,
            })
        })
        .collect::<Result<_>>()?;

    let (lo, hi) = points
        .iter()
        .map(|p| p.acc)
        .fold((baseline.acc, baseline.acc), |(lo, hi), a| (lo.min(a), hi.max(a)));
    let accs: Vec<f64> = if lo == hi {
        vec![lo]
    } else {
        (0..BOUNDARY_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (BOUNDARY_SAMPLES - 1) as f64)
            .collect()
    };
    let boundary = zero_tpr_boundary(baseline, &accs)?
        .into_iter()
        .map(|(a, d)| [a, d])
        .collect();

    Ok(TradeoffReport {
        schema_version: REPORT_SCHEMA_VERSION,
        baseline: baseline.clone(),
        tpr: tpr_entries,
        ranking,
        tcr: tcr_entries,
        boundary,
    })
}
