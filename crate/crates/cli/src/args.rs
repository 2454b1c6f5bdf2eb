use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "pocmed", version, about = "Mediated probabilities of causation from observational data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the PNS/PN/PS families (with bootstrap CIs) from a CSV file.
    Estimate(EstimateArgs),
    /// Draw an observational sample from an SCM and write it as CSV.
    Simulate(SimulateArgs),
    /// Re-run the reference simulation study and the oracle property checks.
    Verify(VerifyArgs),
    /// Evaluate a query family over a grid of thresholds, strata or SCM parameters.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Default, Args)]
pub struct DataArgs {
    /// Observational CSV with a header line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub treatment: Option<String>,
    #[arg(long)]
    pub mediator: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Covariate column names, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
}

/// `L,U` with either side possibly empty (unbounded).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds(pub Option<f64>, pub Option<f64>);

fn parse_bound(s: &str) -> Result<Option<f64>, String> {
    match s.trim() {
        "" | "inf" | "+inf" | "-inf" => Ok(None),
        t => t.parse::<f64>().map(Some).map_err(|e| format!("bad bound {t:?}: {e}")),
    }
}

pub fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let (l, u) = s.split_once(',').ok_or_else(|| format!("expected L,U, got {s:?}"))?;
    Ok(Bounds(parse_bound(l)?, parse_bound(u)?))
}

#[derive(Debug, Default, Args)]
pub struct QueryArgs {
    /// Baseline treatment level x'.
    #[arg(long, allow_negative_numbers = true)]
    pub x_base: Option<f64>,
    /// Alternative treatment level x.
    #[arg(long, allow_negative_numbers = true)]
    pub x_alt: Option<f64>,
    /// Outcome threshold y (the event is y ⪯ Y).
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    /// Fixed mediator level for the controlled-direct PNS.
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Covariate stratum values, comma separated, in covariate order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub stratum: Option<Vec<f64>>,
    /// Observed treatment level x* of the evidence.
    #[arg(long, allow_negative_numbers = true)]
    pub evidence_x: Option<f64>,
    /// Observed mediator value m* of the evidence (controlled-direct evidence).
    #[arg(long, allow_negative_numbers = true)]
    pub evidence_m: Option<f64>,
    /// Outcome evidence interval `L,U`; either side may be empty.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub y_interval: Option<Bounds>,
    #[arg(long)]
    pub y_upper_closed: bool,
    /// Mediator evidence interval `L,U` (needs --assume-a1).
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub m_interval: Option<Bounds>,
    #[arg(long)]
    pub m_upper_closed: bool,
    /// Accept the mediator-monotonicity assumption behind interval mediator evidence.
    #[arg(long)]
    pub assume_a1: bool,
}

#[derive(Debug, Default, Args)]
pub struct BootArgs {
    /// Bootstrap replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Confidence level of the percentile intervals.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct ScmArgs {
    /// Built-in SCM (`reference-bernoulli`).
    #[arg(long)]
    pub preset: Option<String>,
    /// SCM specification as a JSON file.
    #[arg(long)]
    pub scm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scm: ScmArgs,
    /// Number of rows.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Independent N = 10000 runs averaged for the accuracy rows.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Random SCMs drawn for the property rows.
    #[arg(long)]
    pub random_scms: Option<usize>,
    /// Sample sizes of the single-run rows, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Outcome threshold y.
    Y,
    /// Value of the (single) covariate defining the stratum.
    Covariate,
    /// A coefficient of an SCM mechanism (`--node`, `--term`).
    Parameter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Pns,
    Pn,
    Ps,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub scm: ScmArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    #[arg(long, value_enum)]
    pub over: Option<Axis>,
    /// Grid values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Mechanism to vary for `--over parameter`: treatment, mediator or outcome.
    #[arg(long)]
    pub node: Option<String>,
    /// `intercept` or a parent name.
    #[arg(long)]
    pub term: Option<String>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Also render the three curves as an SVG line chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_accept_open_sides() {
        assert_eq!(parse_bounds("1.5,2.5").unwrap(), Bounds(Some(1.5), Some(2.5)));
        assert_eq!(parse_bounds(",3").unwrap(), Bounds(None, Some(3.0)));
        assert_eq!(parse_bounds("-1,inf").unwrap(), Bounds(Some(-1.0), None));
        assert!(parse_bounds("1").is_err());
        assert!(parse_bounds("a,2").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let c = Cli::try_parse_from(["pocmed", "estimate", "--input", "d.csv", "--y-interval", "-1,2", "--x-base", "-1"])
            .unwrap();
        match c.command {
            Command::Estimate(a) => {
                assert_eq!(a.query.y_interval, Some(Bounds(Some(-1.0), Some(2.0))));
                assert_eq!(a.query.x_base, Some(-1.0));
            }
            _ => panic!(),
        }
    }
}
