//! `sweep`: one query family over a grid of thresholds, strata or SCM coefficients.

use std::fs::File;
use std::io::Write;

use pocmed_core::identify;
use pocmed_core::uncertainty::bootstrap_ci;
use pocmed_core::{
    BootstrapConfig, CdfModel, CdfSource, Dataset, Error, Estimand, Mechanism, Method, OrderedValue, PnsTriple,
    Query, Schema, Scm, ScmSpec, Target,
};
use serde::Serialize;

use crate::args::{Axis, Family};
use crate::config::RunConfig;
use crate::svg::Series;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub grid: f64,
    pub quantity: &'static str,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Exact oracle value (SCM sweeps only).
    pub truth: Option<f64>,
    pub status: &'static str,
    pub message: String,
}

impl SweepRow {
    fn ok(grid: f64, quantity: &'static str, value: f64) -> Self {
        SweepRow { grid, quantity, value: Some(value), lower: None, upper: None, truth: None, status: "ok", message: String::new() }
    }

    fn failed(grid: f64, e: &Error) -> Self {
        SweepRow {
            grid,
            quantity: "*",
            value: None,
            lower: None,
            upper: None,
            truth: None,
            status: "error",
            message: format!("{}: {e}", e.kind()),
        }
    }
}

fn names(f: Family) -> [&'static str; 3] {
    match f {
        Family::Pns => ["t_pns", "nd_pns", "ni_pns"],
        Family::Pn => ["pn", "nd_pn", "ni_pn"],
        Family::Ps => ["ps", "nd_ps", "ni_ps"],
    }
}

fn estimand(f: Family) -> Estimand {
    match f {
        Family::Pns => Estimand::Natural,
        Family::Pn => Estimand::Pn,
        Family::Ps => Estimand::Ps,
    }
}

fn family_at<S: CdfSource + ?Sized>(src: &S, q: &Query, f: Family) -> Result<PnsTriple, Error> {
    match f {
        Family::Pns => identify::natural_pns(src, q),
        Family::Pn => identify::pn_family(src, q),
        Family::Ps => identify::ps_family(src, q),
    }
}

/// The family triple followed by the CDF terms `a`, `b` and `rho`.
fn point_rows<S: CdfSource + ?Sized>(src: &S, q: &Query, f: Family, grid: f64) -> Result<Vec<SweepRow>, Error> {
    let t = family_at(src, q, f)?;
    let y = q.threshold();
    let mut rows: Vec<SweepRow> =
        names(f).into_iter().zip([t.t_pns, t.nd_pns, t.ni_pns]).map(|(n, v)| SweepRow::ok(grid, n, v)).collect();
    rows.push(SweepRow::ok(grid, "cdf_base", src.cdf_y_given_x(y, q.x_base)?));
    rows.push(SweepRow::ok(grid, "cdf_alt", src.cdf_y_given_x(y, q.x_alt)?));
    rows.push(SweepRow::ok(grid, "rho", src.rho(y, q.x_base, q.x_alt)?));
    Ok(rows)
}

pub fn set_parameter(spec: &mut ScmSpec, node: &str, term: &str, v: f64) -> Result<(), Error> {
    let mech = match node {
        "treatment" => &mut spec.treatment,
        "mediator" => &mut spec.mediator,
        "outcome" => &mut spec.outcome,
        other => return Err(Error::Config(format!("unknown node {other:?}; use treatment, mediator or outcome"))),
    };
    match (mech, term) {
        (Mechanism::Bernoulli { intercept, .. } | Mechanism::Gaussian { intercept, .. }, "intercept") => *intercept = v,
        (Mechanism::Gaussian { sd, .. }, "sd") => *sd = v,
        (Mechanism::Constant { value }, "value") => *value = v,
        (Mechanism::Bernoulli { weights, .. } | Mechanism::Gaussian { weights, .. }, parent) => {
            weights.insert(parent.to_string(), v);
        }
        _ => {
            return Err(Error::Config(format!("{node} has no sweepable coefficient {term:?}")));
        }
    }
    Ok(())
}

fn with_grid(q: &Query, axis: Axis, v: f64) -> Result<Query, Error> {
    let mut q = q.clone();
    match axis {
        Axis::Y => q.y = OrderedValue::new(v)?,
        Axis::Covariate => q.stratum = Some(vec![OrderedValue::new(v)?]),
        Axis::Parameter => {}
    }
    Ok(q)
}

fn data_point(d: &Dataset, q: &Query, f: Family, boot: Option<&BootstrapConfig>, g: f64) -> Result<Vec<SweepRow>, Error> {
    let model = CdfModel::for_stratum(d, q.stratum())?;
    let mut rows = point_rows(&model, q, f, g)?;
    if let Some(cfg) = boot {
        let cis = bootstrap_ci(d, &Target::new(q.clone(), &[estimand(f)]), cfg)?;
        for (r, ci) in rows.iter_mut().zip(&cis) {
            r.lower = Some(ci.lower);
            r.upper = Some(ci.upper);
        }
    }
    Ok(rows)
}

fn scm_point(scm: &Scm, q: &Query, f: Family, g: f64) -> Result<Vec<SweepRow>, Error> {
    let analytic = scm.analytic_cdf(q.stratum())?;
    let mut rows = point_rows(&analytic, q, f, g)?;
    let truth = match f {
        Family::Pns => scm.truth_pns(q, Method::Exact),
        Family::Pn => scm.truth_with_evidence(q, &identify::pn_evidence(q), Method::Exact),
        Family::Ps => scm.truth_with_evidence(q, &identify::ps_evidence(q), Method::Exact),
    };
    // Gaussian nodes or null evidence leave the truth column empty.
    if let Ok(t) = truth {
        for (r, v) in rows.iter_mut().zip([t.t(), t.nd(), t.ni()]) {
            r.truth = Some(v);
        }
    }
    Ok(rows)
}

pub fn run(cfg: &RunConfig) -> Result<Vec<SweepRow>, Error> {
    let s = &cfg.sweep;
    let axis = s.over.ok_or_else(|| Error::Config("sweep needs --over y|covariate|parameter".into()))?;
    if s.values.is_empty() {
        return Err(Error::Config("sweep needs grid --values".into()));
    }
    let family = s.family.unwrap_or(Family::Pns);
    let q = match (cfg.queries.as_slice(), &cfg.input) {
        ([q], _) => q.clone(),
        ([], None) => Query::new(0.0, 1.0, 1.0),
        ([], Some(_)) => return Err(Error::Config("sweep over data needs a query (--x-base, --x-alt, --y)".into())),
        _ => return Err(Error::Config("sweep takes exactly one query".into())),
    };
    if q.evidence.is_some() {
        return Err(Error::Config("sweep does not take evidence; the pn/ps families carry their own".into()));
    }
    let mut rows = Vec::new();
    if let Some(input) = &cfg.input {
        if axis == Axis::Parameter {
            return Err(Error::Config("--over parameter sweeps an SCM; drop --input".into()));
        }
        let schema = cfg.schema.clone().unwrap_or_else(Schema::default_xmy);
        if axis == Axis::Covariate && schema.covariates.len() != 1 {
            return Err(Error::Config("--over covariate needs exactly one covariate column".into()));
        }
        let file = File::open(input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
        let d = Dataset::load_csv(file, schema)?;
        let boot = if cfg.replicates == Some(0) { None } else { Some(cfg.bootstrap()?) };
        for &g in &s.values {
            let point = with_grid(&q, axis, g).and_then(|qg| data_point(&d, &qg, family, boot.as_ref(), g));
            rows.extend(point.unwrap_or_else(|e| vec![SweepRow::failed(g, &e)]));
        }
    } else {
        let base = cfg.scm_spec()?;
        if axis == Axis::Covariate && base.covariates.len() != 1 {
            return Err(Error::Config("--over covariate needs an SCM with exactly one covariate".into()));
        }
        let (node, term) = match axis {
            Axis::Parameter => (
                s.node.clone().ok_or_else(|| Error::Config("--over parameter needs --node".into()))?,
                s.term.clone().ok_or_else(|| Error::Config("--over parameter needs --term".into()))?,
            ),
            _ => (String::new(), String::new()),
        };
        if axis == Axis::Parameter {
            // A misspelled node or term fails every point alike; report it once.
            set_parameter(&mut base.clone(), &node, &term, s.values[0])?;
        }
        let fixed = if axis == Axis::Parameter { None } else { Some(base.compile()?) };
        for &g in &s.values {
            let point = (|| {
                let qg = with_grid(&q, axis, g)?;
                match &fixed {
                    Some(scm) => scm_point(scm, &qg, family, g),
                    None => {
                        let mut spec = base.clone();
                        set_parameter(&mut spec, &node, &term, g)?;
                        scm_point(&spec.compile()?, &qg, family, g)
                    }
                }
            })();
            rows.extend(point.unwrap_or_else(|e| vec![SweepRow::failed(g, &e)]));
        }
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["grid", "quantity", "value", "lower", "upper", "truth", "status", "message"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.grid.to_string(),
            r.quantity.to_string(),
            opt(r.value),
            opt(r.lower),
            opt(r.upper),
            opt(r.truth),
            r.status.to_string(),
            r.message.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// The three family curves of a sweep, in grid order.
pub fn curves(rows: &[SweepRow], family: Family) -> Vec<Series<'static>> {
    let mut grid: Vec<f64> = rows.iter().map(|r| r.grid).collect();
    grid.dedup();
    names(family)
        .into_iter()
        .map(|n| {
            let pts = grid
                .iter()
                .map(|&g| (g, rows.iter().find(|r| r.grid == g && r.quantity == n).and_then(|r| r.value)))
                .collect();
            (n, pts)
        })
        .collect()
}
