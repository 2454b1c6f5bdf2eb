//! `estimate`: PoC families with bootstrap CIs for each configured query.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;

use pocmed_core::identify::{self, A1_WARNING};
use pocmed_core::uncertainty::bootstrap_ci;
use pocmed_core::{
    BootstrapConfig, CaseFlag, CdfModel, CiResult, Dataset, Error, Estimand, Evidence, PnsTriple, Query, Schema,
    Target,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::format::{pct, Table};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ErrorBlock {
    pub kind: &'static str,
    pub message: String,
}

impl From<&Error> for ErrorBlock {
    fn from(e: &Error) -> Self {
        ErrorBlock { kind: e.kind(), message: e.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct Value {
    pub quantity: &'static str,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Proportions {
    pub nd: Option<f64>,
    pub ni: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Block {
    pub family: &'static str,
    pub case: CaseFlag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    pub values: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Proportions>,
    /// Intermediate CDF terms of the evidence formulas.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<BTreeMap<&'static str, f64>>,
}

#[derive(Debug, Serialize)]
pub struct QueryReport {
    pub query: Query,
    pub blocks: Vec<Block>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBlock>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub report_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub input: String,
    pub rows: usize,
    pub schema: Schema,
    /// Absent when CIs were switched off (`--replicates 0`).
    pub bootstrap: Option<BootstrapConfig>,
    pub queries: Vec<QueryReport>,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.queries.iter().any(|q| q.error.is_some())
    }
}

/// Checks every query against the data layout before anything is estimated.
pub fn validate(q: &Query, schema: &Schema, assume_a1: bool) -> Result<(), Error> {
    let k = schema.covariates.len();
    if q.stratum().len() != k {
        return Err(Error::InvalidQuery(format!(
            "stratum has {} values but the schema declares {k} covariates",
            q.stratum().len()
        )));
    }
    match &q.evidence {
        Some(Evidence::Mediator { .. }) if q.m_fixed.is_none() => Err(Error::InvalidQuery(
            "mediator-value evidence applies to the controlled-direct PNS; give --m".into(),
        )),
        Some(Evidence::MediatorInterval { .. }) if !assume_a1 => Err(Error::Config(
            "mediator-interval evidence requires --assume-a1 (monotone mediator mechanism)".into(),
        )),
        _ => Ok(()),
    }
}

fn triple_values(names: [&'static str; 3], t: &PnsTriple) -> Vec<Value> {
    names
        .into_iter()
        .zip([t.t_pns, t.nd_pns, t.ni_pns])
        .map(|(quantity, estimate)| Value { quantity, estimate, lower: None, upper: None })
        .collect()
}

fn triple_block(family: &'static str, names: [&'static str; 3], t: &PnsTriple, e: Option<Evidence>) -> Block {
    Block {
        family,
        case: t.case,
        evidence: e,
        values: triple_values(names, t),
        proportions: Some(Proportions { nd: t.prop_nd, ni: t.prop_ni }),
        terms: None,
    }
}

/// Point estimates for one query, plus the bootstrap targets covering them.
fn point_blocks(d: &Dataset, q: &Query, warnings: &mut Vec<String>) -> Result<(Vec<Block>, Vec<Target>), Error> {
    let model = CdfModel::for_stratum(d, q.stratum())?;
    identify::check_support(&model, &[q.x_base, q.x_alt])?;
    let mut blocks = vec![
        triple_block("pns", ["t_pns", "nd_pns", "ni_pns"], &identify::natural_pns(&model, q)?, None),
        triple_block("pn", ["pn", "nd_pn", "ni_pn"], &identify::pn_family(&model, q)?, Some(identify::pn_evidence(q))),
        triple_block("ps", ["ps", "nd_ps", "ni_ps"], &identify::ps_family(&model, q)?, Some(identify::ps_evidence(q))),
    ];
    let mut estimands = vec![Estimand::Natural, Estimand::Pn, Estimand::Ps];
    let mut extra = None;
    if q.m_fixed.is_some() {
        blocks.push(Block {
            family: "cd",
            case: CaseFlag::Unconditional,
            evidence: None,
            values: vec![Value { quantity: "cd_pns", estimate: identify::cd_pns(&model, q)?, lower: None, upper: None }],
            proportions: None,
            terms: None,
        });
        estimands.push(Estimand::Cd);
    }
    match &q.evidence {
        None => {}
        Some(e @ Evidence::Outcome { .. }) => {
            let (t, terms) = identify::natural_pns_with_evidence(&model, q, e)?;
            let mut b = triple_block("pns-evidence", ["t_pns_evidence", "nd_pns_evidence", "ni_pns_evidence"], &t, Some(e.clone()));
            b.terms = Some(evidence_terms(&terms));
            blocks.push(b);
            estimands.push(Estimand::NaturalEvidence);
        }
        Some(e @ Evidence::Mediator { .. }) => {
            let (v, case, terms) = identify::cd_pns_with_evidence(&model, q, e)?;
            blocks.push(Block {
                family: "cd-evidence",
                case,
                evidence: Some(e.clone()),
                values: vec![Value { quantity: "cd_pns_evidence", estimate: v, lower: None, upper: None }],
                proportions: None,
                terms: Some(BTreeMap::from([
                    ("a", terms.a),
                    ("b", terms.b),
                    ("l", terms.l),
                    ("u", terms.u),
                    ("alpha", terms.alpha),
                    ("beta", terms.beta),
                ])),
            });
            estimands.push(Estimand::CdEvidence);
            // The natural family is reported under the outcome part of the evidence.
            let oe = e.outcome_only();
            let (t, terms) = identify::natural_pns_with_evidence(&model, q, &oe)?;
            let mut b = triple_block("pns-evidence", ["t_pns_evidence", "nd_pns_evidence", "ni_pns_evidence"], &t, Some(oe.clone()));
            b.terms = Some(evidence_terms(&terms));
            blocks.push(b);
            let mut q2 = q.clone();
            q2.evidence = Some(oe);
            extra = Some(Target::new(q2, &[Estimand::NaturalEvidence]));
        }
        Some(e @ Evidence::MediatorInterval { .. }) => {
            let (t, terms) = identify::natural_pns_with_mediator_evidence(&model, q, e)?;
            let mut b = triple_block(
                "pns-mediator-evidence",
                ["t_pns_mediator_evidence", "nd_pns_mediator_evidence", "ni_pns_mediator_evidence"],
                &t,
                Some(e.clone()),
            );
            b.terms = Some(evidence_terms(&terms));
            blocks.push(b);
            estimands.push(Estimand::MediatorIntervalEvidence);
            warnings.push(A1_WARNING.to_string());
        }
    }
    let mut targets = vec![Target::new(q.clone(), &estimands)];
    targets.extend(extra);
    Ok((blocks, targets))
}

fn evidence_terms(t: &pocmed_core::EvidenceTerms) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("a", t.a),
        ("b", t.b),
        ("rho", t.rho),
        ("l", t.l),
        ("u", t.u),
        ("gamma_t", t.gamma_t),
        ("gamma_d", t.gamma_d),
        ("gamma_i", t.gamma_i),
        ("delta", t.delta),
    ])
}

fn attach(blocks: &mut [Block], cis: &[CiResult]) {
    for ci in cis {
        for v in blocks.iter_mut().flat_map(|b| b.values.iter_mut()) {
            if v.quantity == ci.quantity && v.lower.is_none() {
                v.lower = Some(ci.lower);
                v.upper = Some(ci.upper);
                break;
            }
        }
    }
}

pub fn estimate_query(d: &Dataset, q: &Query, boot: Option<&BootstrapConfig>) -> QueryReport {
    let mut warnings = Vec::new();
    match point_blocks(d, q, &mut warnings) {
        Ok((mut blocks, targets)) => {
            if let Some(cfg) = boot {
                for t in &targets {
                    match bootstrap_ci(d, t, cfg) {
                        Ok(cis) => {
                            if let Some(ci) = cis.first().filter(|c| c.degenerate_count > 0) {
                                warnings.push(format!(
                                    "{} of {} bootstrap replicates hit empty cells and were dropped",
                                    ci.degenerate_count, cfg.replicates
                                ));
                            }
                            attach(&mut blocks, &cis);
                        }
                        Err(e) => warnings.push(format!("no confidence intervals: {e}")),
                    }
                }
            }
            QueryReport { query: q.clone(), blocks, warnings, error: None }
        }
        Err(e) => QueryReport { query: q.clone(), blocks: Vec::new(), warnings, error: Some(ErrorBlock::from(&e)) },
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, Error> {
    let input = cfg.input.as_ref().ok_or_else(|| Error::Config("estimate needs --input".into()))?;
    let schema = cfg.schema.clone().unwrap_or_else(Schema::default_xmy);
    if cfg.queries.is_empty() {
        return Err(Error::Config("no query: give --x-base, --x-alt and --y, or `queries` in --config".into()));
    }
    for q in &cfg.queries {
        validate(q, &schema, cfg.assume_a1)?;
    }
    let boot = if cfg.replicates == Some(0) { None } else { Some(cfg.bootstrap()?) };
    let file = File::open(input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
    let d = Dataset::load_csv(file, schema.clone())?;
    let queries = cfg.queries.iter().map(|q| estimate_query(&d, q, boot.as_ref())).collect();
    Ok(Report {
        tool: "pocmed",
        version: env!("CARGO_PKG_VERSION"),
        report_version: REPORT_VERSION,
        command: "estimate",
        seed: boot.map_or(cfg.seed.unwrap_or(0), |b| b.seed),
        input: input.display().to_string(),
        rows: d.len(),
        schema,
        bootstrap: boot,
        queries,
    })
}

fn label(q: &str) -> String {
    let (base, suffix) = match q.strip_suffix("_mediator_evidence") {
        Some(b) => (b, " | E''"),
        None => match q.strip_suffix("_evidence") {
            Some(b) => (b, " | E"),
            None => (q, ""),
        },
    };
    format!("{}{suffix}", base.to_uppercase().replace('_', "-"))
}

pub fn render_table(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "pocmed {} estimate: {} ({} rows), seed {}", r.version, r.input, r.rows, r.seed);
    if let Some(b) = &r.bootstrap {
        let _ = writeln!(s, "bootstrap: {} replicates, {}% percentile intervals", b.replicates, b.level * 100.0);
    }
    for qr in &r.queries {
        let q = &qr.query;
        let _ = write!(s, "\nquery: x'={} x={} y={}", q.x_base, q.x_alt, q.y);
        if let Some(m) = q.m_fixed {
            let _ = write!(s, " m={m}");
        }
        if let Some(c) = &q.stratum {
            let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, " stratum=({})", c.join(","));
        }
        s.push('\n');
        if let Some(e) = &qr.error {
            let _ = writeln!(s, "error[{}]: {}", e.kind, e.message);
            continue;
        }
        let mut t = Table::new(["family", "quantity", "estimate", "CI", "case"]);
        for b in &qr.blocks {
            for v in &b.values {
                let ci = match (v.lower, v.upper) {
                    (Some(l), Some(u)) => format!("[{}, {}]", pct(l), pct(u)),
                    _ => "-".into(),
                };
                t.row([b.family.to_string(), label(v.quantity), pct(v.estimate), ci, b.case.to_string()]);
            }
        }
        s.push_str(&t.render());
        for b in qr.blocks.iter().filter(|b| b.family.ends_with("evidence")) {
            if let Some(e) = &b.evidence {
                let _ = writeln!(s, "{}: {}", b.family, describe(e));
            }
        }
        for b in qr.blocks.iter().filter(|b| b.family == "pns") {
            if let Some(Proportions { nd: Some(nd), ni: Some(ni) }) = &b.proportions {
                let _ = writeln!(s, "proportions of T-PNS: direct {}, indirect {}", pct(*nd), pct(*ni));
            }
        }
        for w in &qr.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

fn describe(e: &Evidence) -> String {
    match e {
        Evidence::Mediator { x, m, y } => format!("X={x}, M={m}, Y in {y}"),
        Evidence::Outcome { x, y } => format!("X={x}, Y in {y}"),
        Evidence::MediatorInterval { x, m, y } => format!("X={x}, M in {m}, Y in {y}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pocmed_core::Interval;

    fn data() -> Dataset {
        let scm = pocmed_core::ScmSpec::reference_bernoulli().compile().unwrap();
        scm.sample_observational(400, 1).unwrap()
    }

    #[test]
    fn blocks_and_intervals() {
        let q = Query::new(0.0, 1.0, 1.0).with_mediator(1.0).with_evidence(Evidence::Mediator {
            x: 0.0.try_into().unwrap(),
            m: 1.0.try_into().unwrap(),
            y: Interval::full(),
        });
        let boot = BootstrapConfig { replicates: 20, level: 0.9, seed: 1 };
        let r = estimate_query(&data(), &q, Some(&boot));
        let fams: Vec<&str> = r.blocks.iter().map(|b| b.family).collect();
        assert_eq!(fams, ["pns", "pn", "ps", "cd", "cd-evidence", "pns-evidence"]);
        assert!(r.blocks.iter().flat_map(|b| &b.values).all(|v| v.lower.is_some()));
        let pns = &r.blocks[0].values;
        assert!((pns[0].estimate - pns[1].estimate - pns[2].estimate).abs() < 1e-12);
    }

    #[test]
    fn absent_level_is_a_positivity_error() {
        let r = estimate_query(&data(), &Query::new(0.0, 2.0, 1.0), None);
        assert_eq!(r.error.unwrap().kind, "positivity");
    }

    #[test]
    fn validation() {
        let s = Schema::default_xmy();
        assert!(validate(&Query::new(0.0, 1.0, 1.0).with_stratum(&[1.0]), &s, false).is_err());
        let e = Evidence::MediatorInterval {
            x: 0.0.try_into().unwrap(),
            m: Interval::full(),
            y: Interval::full(),
        };
        let q = Query::new(0.0, 1.0, 1.0).with_evidence(e);
        assert!(matches!(validate(&q, &s, false), Err(Error::Config(_))));
        assert!(validate(&q, &s, true).is_ok());
    }
}
