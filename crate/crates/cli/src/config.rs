//! The JSON run configuration and its merge with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use pocmed_core::verify::VerifyConfig;
use pocmed_core::{BootstrapConfig, Error, Evidence, Interval, OrderedValue, Query, Schema, ScmSpec};
use serde::{Deserialize, Serialize};

use crate::args::{Axis, BootArgs, Bounds, Common, DataArgs, Family, Format, QueryArgs, ScmArgs};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub over: Option<Axis>,
    pub values: Vec<f64>,
    pub node: Option<String>,
    pub term: Option<String>,
    pub family: Option<Family>,
    pub svg: Option<PathBuf>,
}

/// Everything a command needs; read from `--config` and then overridden by flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub schema: Option<Schema>,
    pub queries: Vec<Query>,
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub assume_a1: bool,
    pub preset: Option<String>,
    pub scm: Option<ScmSpec>,
    pub n: Option<usize>,
    pub runs: Option<usize>,
    pub random_scms: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub sweep: SweepConfig,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn interval(b: Bounds, closed: bool) -> Result<Interval, Error> {
    let lower = b.0.map(OrderedValue::new).transpose()?;
    let upper = b.1.map(OrderedValue::new).transpose()?;
    Interval::new(lower, upper, closed && upper.is_some())
}

impl RunConfig {
    pub fn load(common: &Common) -> Result<Self, Error> {
        let mut cfg = match &common.config {
            Some(p) => serde_json::from_str(&read(p)?)
                .map_err(|e| bad(format!("config {}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        set(&mut cfg.out, common.out.clone());
        set(&mut cfg.seed, common.seed);
        set(&mut cfg.format, common.format);
        Ok(cfg)
    }

    pub fn apply_data(&mut self, a: &DataArgs) {
        set(&mut self.input, a.input.clone());
        let mut s = self.schema.clone().unwrap_or_else(Schema::default_xmy);
        if let Some(v) = &a.treatment {
            s.treatment = v.clone();
        }
        if let Some(v) = &a.mediator {
            s.mediator = v.clone();
        }
        if let Some(v) = &a.outcome {
            s.outcome = v.clone();
        }
        if let Some(v) = &a.covariates {
            s.covariates = v.clone();
        }
        self.schema = Some(s);
    }

    pub fn apply_boot(&mut self, a: &BootArgs) {
        set(&mut self.replicates, a.replicates);
        set(&mut self.level, a.level);
    }

    pub fn apply_scm(&mut self, a: &ScmArgs) -> Result<(), Error> {
        if let Some(p) = &a.scm {
            let spec = serde_json::from_str(&read(p)?).map_err(|e| bad(format!("SCM {}: {e}", p.display())))?;
            self.scm = Some(spec);
            self.preset = None;
        }
        if let Some(name) = &a.preset {
            self.preset = Some(name.clone());
            self.scm = None;
        }
        Ok(())
    }

    /// A query on the command line replaces the configured query list.
    pub fn apply_query(&mut self, a: &QueryArgs) -> Result<(), Error> {
        self.assume_a1 |= a.assume_a1;
        let any_evidence = a.evidence_x.is_some()
            || a.evidence_m.is_some()
            || a.y_interval.is_some()
            || a.m_interval.is_some();
        let any_core = a.x_base.is_some() || a.x_alt.is_some() || a.y.is_some();
        if !any_core {
            if a.m.is_some() || a.stratum.is_some() || any_evidence {
                return Err(bad("query flags need --x-base, --x-alt and --y"));
            }
            return Ok(());
        }
        let (Some(xb), Some(xa), Some(y)) = (a.x_base, a.x_alt, a.y) else {
            return Err(bad("a query needs all of --x-base, --x-alt and --y"));
        };
        let mut q = Query::new(xb, xa, y);
        for v in [xb, xa, y].into_iter().chain(a.m) {
            OrderedValue::new(v)?;
        }
        if let Some(m) = a.m {
            q = q.with_mediator(m);
        }
        if let Some(s) = &a.stratum {
            q = q.with_stratum(s);
        }
        if any_evidence {
            let x = a.evidence_x.ok_or_else(|| bad("evidence flags need --evidence-x"))?;
            let x = OrderedValue::new(x)?;
            let y_iv = match a.y_interval {
                Some(b) => interval(b, a.y_upper_closed)?,
                None => Interval::full(),
            };
            let e = match (a.evidence_m, a.m_interval) {
                (Some(_), Some(_)) => return Err(bad("use either --evidence-m or --m-interval, not both")),
                (Some(m), None) => Evidence::Mediator { x, m: OrderedValue::new(m)?, y: y_iv },
                (None, Some(b)) => Evidence::MediatorInterval { x, m: interval(b, a.m_upper_closed)?, y: y_iv },
                (None, None) => Evidence::Outcome { x, y: y_iv },
            };
            q = q.with_evidence(e);
        }
        self.queries = vec![q];
        Ok(())
    }

    pub fn bootstrap(&self) -> Result<BootstrapConfig, Error> {
        let d = BootstrapConfig::default();
        let b = BootstrapConfig {
            replicates: self.replicates.unwrap_or(d.replicates),
            level: self.level.unwrap_or(d.level),
            seed: self.seed.unwrap_or(d.seed),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Table)
    }

    pub fn scm_spec(&self) -> Result<ScmSpec, Error> {
        match (&self.scm, &self.preset) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(p)) => ScmSpec::preset(p),
            (None, None) => ScmSpec::preset("reference-bernoulli"),
        }
    }

    pub fn verify_config(&self) -> VerifyConfig {
        let d = VerifyConfig::default();
        VerifyConfig {
            seed: self.seed.unwrap_or(d.seed),
            replicates: self.replicates.unwrap_or(d.replicates),
            sizes: self.sizes.clone().unwrap_or(d.sizes),
            runs: self.runs.unwrap_or(d.runs),
            random_scms: self.random_scms.unwrap_or(d.random_scms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_document() {
        let mut cfg: RunConfig = serde_json::from_str(
            r#"{"seed": 3, "replicates": 50, "queries": [{"x_base": 0, "x_alt": 1, "y": 1}]}"#,
        )
        .unwrap();
        cfg.apply_boot(&BootArgs { replicates: Some(7), level: None });
        let q = QueryArgs { x_base: Some(1.0), x_alt: Some(0.0), y: Some(2.0), ..Default::default() };
        cfg.apply_query(&q).unwrap();
        let b = cfg.bootstrap().unwrap();
        assert_eq!((b.replicates, b.seed), (7, 3));
        assert_eq!(cfg.queries, vec![Query::new(1.0, 0.0, 2.0)]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"replicate": 5}"#).is_err());
    }

    #[test]
    fn evidence_from_flags() {
        let mut cfg = RunConfig::default();
        let q = QueryArgs {
            x_base: Some(0.0),
            x_alt: Some(1.0),
            y: Some(3.0),
            evidence_x: Some(0.0),
            y_interval: Some(Bounds(Some(1.5), Some(2.5))),
            ..Default::default()
        };
        cfg.apply_query(&q).unwrap();
        let e = cfg.queries[0].evidence.clone().unwrap();
        assert_eq!(e, Evidence::Outcome { x: OrderedValue::of(0.0), y: Interval::half_open(1.5, 2.5).unwrap() });

        let partial = QueryArgs { x_base: Some(0.0), ..Default::default() };
        assert!(RunConfig::default().apply_query(&partial).is_err());
        let orphan = QueryArgs { evidence_x: Some(0.0), ..Default::default() };
        assert!(RunConfig::default().apply_query(&orphan).is_err());
    }
}
