use std::path::PathBuf;

use captrade_core::tradeoff::{tradeoff_report, CeRlPair, TradeoffPoint, TradeoffReport};
use clap::Args;
use serde::Deserialize;

use crate::{invalid, read_json, write_file, write_json};

/// Trade-off profit rate of every point against a baseline point, conversion
/// rate of every CE→RL pair, and the zero-TPR line.
///
/// Points file: {"points": [{"label", "acc", "div"}, ..],
/// "pairs": [{"label", "ce": {..}, "rl": {..}}, ..]}; "pairs" is optional.
/// The boundary CSV has columns `acc,div`.
#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub points: PathBuf,
    /// Label of the point every TPR is measured against
    #[arg(long, default_value = "human")]
    pub baseline_label: String,
    /// Output JSON report
    #[arg(long)]
    pub out: PathBuf,
    /// Boundary CSV; defaults to the report path with a .csv extension
    #[arg(long)]
    pub boundary_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    pub points: Vec<TradeoffPoint>,
    #[serde(default)]
    pub pairs: Vec<CeRlPair>,
}

pub fn build_report(file: &PointsFile, baseline_label: &str) -> anyhow::Result<TradeoffReport> {
    let baseline = file
        .points
        .iter()
        .find(|p| p.label == baseline_label)
        .ok_or_else(|| invalid(format!("baseline label {baseline_label:?} not among the points")))?;
    Ok(tradeoff_report(&file.points, baseline, &file.pairs)?)
}

pub fn run(args: &TradeoffArgs) -> anyhow::Result<()> {
    let file: PointsFile = read_json(&args.points)?;
    let report = build_report(&file, &args.baseline_label)?;
    write_json(&args.out, &report)?;
    let csv_path = args
        .boundary_csv
        .clone()
        .unwrap_or_else(|| args.out.with_extension("csv"));
    let csv = report.boundary_csv();
    write_file(&csv_path, |w| w.write_all(csv.as_bytes()))
}
