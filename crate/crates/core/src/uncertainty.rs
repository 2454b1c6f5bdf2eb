//! Nonparametric percentile bootstrap for every estimator.
//!
//! Rows are resampled with replacement; replicate `b` draws its indices from
//! ChaCha stream `b` of a generator seeded with the configured seed, so the
//! result is identical however replicates are scheduled. Replicates whose
//! resample leaves a required cell empty are dropped and counted. Bounds are
//! linear-interpolation quantiles of the surviving replicate values
//! (`h = (n - 1) p`, `q = v[⌊h⌋] + (h - ⌊h⌋)(v[⌊h⌋ + 1] - v[⌊h⌋])`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::ecdf::CdfModel;
use crate::error::{Error, Result};
use crate::identify;
use crate::order::{Evidence, Query};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: 1000, level: 0.95, seed: 0 }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Config(format!("bootstrap needs at least 2 replicates, got {}", self.replicates)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("confidence level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

/// Which identification operation to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimand {
    /// T-PNS, ND-PNS, NI-PNS.
    Natural,
    /// PN, ND-PN, NI-PN.
    Pn,
    /// PS, ND-PS, NI-PS.
    Ps,
    /// CD-PNS at the query's fixed mediator value.
    Cd,
    /// CD-PNS given the query's `(x*, m*, I_Y)` evidence.
    CdEvidence,
    /// T/ND/NI-PNS given the query's `(x*, I_Y)` evidence.
    NaturalEvidence,
    /// T/ND/NI-PNS given the query's `(x*, I_M, I_Y)` evidence.
    MediatorIntervalEvidence,
}

impl Estimand {
    /// Names of the reported quantities, in evaluation order.
    pub fn quantities(self) -> &'static [&'static str] {
        match self {
            Estimand::Natural => &["t_pns", "nd_pns", "ni_pns"],
            Estimand::Pn => &["pn", "nd_pn", "ni_pn"],
            Estimand::Ps => &["ps", "nd_ps", "ni_ps"],
            Estimand::Cd => &["cd_pns"],
            Estimand::CdEvidence => &["cd_pns_evidence"],
            Estimand::NaturalEvidence => &["t_pns_evidence", "nd_pns_evidence", "ni_pns_evidence"],
            Estimand::MediatorIntervalEvidence => {
                &["t_pns_mediator_evidence", "nd_pns_mediator_evidence", "ni_pns_mediator_evidence"]
            }
        }
    }
}

/// A query plus the estimands to compute on each (resampled) dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub query: Query,
    pub estimands: Vec<Estimand>,
}

impl Target {
    pub fn new(query: Query, estimands: &[Estimand]) -> Self {
        Target { query, estimands: estimands.to_vec() }
    }

    fn evidence(&self) -> Result<&Evidence> {
        self.query
            .evidence
            .as_ref()
            .ok_or_else(|| Error::InvalidQuery("this estimand needs evidence in the query".into()))
    }

    /// All quantity names, in the order [`Target::evaluate`] returns them.
    pub fn quantities(&self) -> Vec<&'static str> {
        self.estimands.iter().flat_map(|e| e.quantities().iter().copied()).collect()
    }

    /// Runs every estimand end to end on `d` (stratification included).
    pub fn evaluate(&self, d: &Dataset) -> Result<Vec<f64>> {
        let model = CdfModel::for_stratum(d, self.query.stratum())?;
        let q = &self.query;
        let mut out = Vec::new();
        for est in &self.estimands {
            let triple = |t: identify::PnsTriple| [t.t_pns, t.nd_pns, t.ni_pns];
            match est {
                Estimand::Natural => out.extend(triple(identify::natural_pns(&model, q)?)),
                Estimand::Pn => out.extend(triple(identify::pn_family(&model, q)?)),
                Estimand::Ps => out.extend(triple(identify::ps_family(&model, q)?)),
                Estimand::Cd => out.push(identify::cd_pns(&model, q)?),
                Estimand::CdEvidence => out.push(identify::cd_pns_with_evidence(&model, q, self.evidence()?)?.0),
                Estimand::NaturalEvidence => {
                    out.extend(triple(identify::natural_pns_with_evidence(&model, q, self.evidence()?)?.0))
                }
                Estimand::MediatorIntervalEvidence => out.extend(triple(
                    identify::natural_pns_with_mediator_evidence(&model, q, self.evidence()?)?.0,
                )),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub quantity: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Mean of the non-degenerate replicate values.
    pub mean: f64,
    pub replicates_used: usize,
    pub degenerate_count: usize,
}

/// Linear-interpolation quantile of an ascending slice, `p ∈ [0, 1]`.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    assert!(!v.is_empty());
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Percentile bootstrap CIs for every quantity of `target`.
pub fn bootstrap_ci(d: &Dataset, target: &Target, cfg: &BootstrapConfig) -> Result<Vec<CiResult>> {
    cfg.validate()?;
    let point = target.evaluate(d)?;
    let n = d.len();
    let reps: Vec<Option<Vec<f64>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let sample = d.select(&resample_indices(n, cfg.seed, b));
            match target.evaluate(&sample) {
                Ok(v) => Ok(Some(v)),
                Err(Error::Positivity(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let degenerate = reps.iter().filter(|r| r.is_none()).count();
    let good: Vec<Vec<f64>> = reps.into_iter().flatten().collect();
    if good.is_empty() {
        return Err(Error::Bootstrap(format!(
            "all {} replicates hit empty cells; the data are too sparse for this query",
            cfg.replicates
        )));
    }
    let alpha = (1.0 - cfg.level) / 2.0;
    Ok(target
        .quantities()
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let mut vals: Vec<f64> = good.iter().map(|r| r[k]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.sort_by(f64::total_cmp);
            CiResult {
                quantity: name.to_string(),
                point: point[k],
                lower: quantile_sorted(&vals, alpha),
                upper: quantile_sorted(&vals, 1.0 - alpha),
                mean,
                replicates_used: vals.len(),
                degenerate_count: degenerate,
            }
        })
        .collect())
}
