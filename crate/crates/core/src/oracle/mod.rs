//! Structural causal models with a monotone threshold coupling, and
//! counterfactual ground truth computed straight from the definitions.
//!
//! Every node reads one uniform source and maps it through a decreasing step
//! (or quantile) function, so a node with survival levels
//! `1 = S_0 ≥ S_1 ≥ … ≥ S_{K-1}` takes value `v_k` for `u ∈ [S_{k+1}, S_k)`.
//! A Bernoulli node is the two-level case `V = 1 iff u < p`. The same source
//! is shared by all interventions on that node.
//!
//! Ground truth is available two ways:
//!
//! - exact: the unit square of `(u_M, u_Y)` splits into rectangles on which all
//!   counterfactuals are constant, and each covariate row and treatment level
//!   contributes a known factor. Probabilities are sums of rectangle areas.
//! - Monte Carlo: chunked draws, each chunk on its own counter-based stream,
//!   so results do not depend on the number of worker threads.

mod exact;
mod mc;
mod monotone;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::identify::CaseFlag;
use crate::order::{Evidence, OrderedValue, Query};

pub use exact::AnalyticCdf;
pub use monotone::{MonotonicityReport, Violation};

/// Link mapping the affine predictor of a Bernoulli node to a probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `σ(η) = 1 / (1 + e^{-η})`.
    #[default]
    Logistic,
    /// `η` clipped to `[0, 1]`.
    Identity,
}

/// One row of a tabulated mechanism: parent values and the pmf over `levels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(default)]
    pub parents: Vec<f64>,
    pub probs: Vec<f64>,
}

/// A structural equation `V := f(parents, U_V)`.
///
/// Parent names are `"x"` (treatment), `"m"` (mediator) or a covariate name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mechanism {
    Constant {
        value: f64,
    },
    /// `V = 1 iff u < link(intercept + Σ w_k · parent_k)`.
    Bernoulli {
        intercept: f64,
        #[serde(default)]
        weights: BTreeMap<String, f64>,
        #[serde(default)]
        link: Link,
    },
    /// Finite ordered support with a pmf per parent configuration.
    Tabulated {
        levels: Vec<f64>,
        #[serde(default)]
        parents: Vec<String>,
        rows: Vec<TableRow>,
    },
    /// `V = mean + sd · Φ⁻¹(1 - u)`; Monte Carlo only.
    Gaussian {
        intercept: f64,
        #[serde(default)]
        weights: BTreeMap<String, f64>,
        sd: f64,
    },
}

impl Mechanism {
    pub fn bernoulli(intercept: f64, weights: &[(&str, f64)]) -> Self {
        Mechanism::Bernoulli {
            intercept,
            weights: weights.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
            link: Link::Logistic,
        }
    }

    pub fn linear_bernoulli(intercept: f64, weights: &[(&str, f64)]) -> Self {
        Mechanism::Bernoulli {
            intercept,
            weights: weights.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
            link: Link::Identity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub values: Vec<f64>,
    pub prob: f64,
}

/// Declarative SCM over `C → X → M → Y` (with `C → M`, `C → Y`, `X → Y`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Finite joint distribution of the covariates; empty when there are none.
    #[serde(default)]
    pub covariate_table: Vec<CovariateRow>,
    pub treatment: Mechanism,
    pub mediator: Mechanism,
    pub outcome: Mechanism,
}

pub const PRESETS: &[&str] = &["reference-bernoulli"];

impl ScmSpec {
    /// `X ~ Bern(0.5)`, `M ~ Bern(σ(1 + 0.5X))`, `Y ~ Bern(σ(1 + 0.5(X + M)))`.
    pub fn reference_bernoulli() -> Self {
        ScmSpec {
            covariates: vec![],
            covariate_table: vec![],
            treatment: Mechanism::bernoulli(0.0, &[]),
            mediator: Mechanism::bernoulli(1.0, &[("x", 0.5)]),
            outcome: Mechanism::bernoulli(1.0, &[("x", 0.5), ("m", 0.5)]),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "reference-bernoulli" => Ok(Self::reference_bernoulli()),
            _ => Err(Error::InvalidSpec(format!(
                "unknown preset {name:?}; available: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn compile(&self) -> Result<Scm> {
        Scm::new(self.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parent {
    X,
    M,
    Cov(usize),
}

#[derive(Clone, Debug)]
enum Kind {
    Constant(f64),
    Bernoulli { intercept: f64, weights: Vec<f64>, link: Link },
    /// Survival levels per parent key.
    Tabulated { levels: Vec<f64>, survival: HashMap<Vec<OrderedValue>, Vec<f64>> },
    Gaussian { intercept: f64, weights: Vec<f64>, sd: f64 },
}

#[derive(Clone, Debug)]
struct Node {
    name: &'static str,
    kind: Kind,
    parents: Vec<Parent>,
}

/// Parent values available to a structural function.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Ctx<'a> {
    pub x: f64,
    pub m: f64,
    pub c: &'a [OrderedValue],
}

impl Ctx<'_> {
    fn get(&self, p: Parent) -> f64 {
        match p {
            Parent::X => self.x,
            Parent::M => self.m,
            Parent::Cov(k) => self.c[k].get(),
        }
    }
}

impl Node {
    fn compile(name: &'static str, mech: &Mechanism, allowed: &[&str], covs: &[String]) -> Result<Node> {
        let resolve = |p: &str| -> Result<Parent> {
            let found = match p {
                "x" if allowed.contains(&"x") => Some(Parent::X),
                "m" if allowed.contains(&"m") => Some(Parent::M),
                _ => covs.iter().position(|c| c == p).map(Parent::Cov),
            };
            found.ok_or_else(|| Error::InvalidSpec(format!("{name}: {p:?} is not a valid parent")))
        };
        let finite = |v: f64, what: &str| -> Result<f64> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidSpec(format!("{name}: {what} must be finite")))
            }
        };
        let affine = |intercept: f64, w: &BTreeMap<String, f64>| -> Result<(f64, Vec<Parent>, Vec<f64>)> {
            let mut parents = Vec::new();
            let mut ws = Vec::new();
            for (k, v) in w {
                parents.push(resolve(k)?);
                ws.push(finite(*v, "weight")?);
            }
            Ok((finite(intercept, "intercept")?, parents, ws))
        };
        let (kind, parents) = match mech {
            Mechanism::Constant { value } => (Kind::Constant(finite(*value, "value")?), vec![]),
            Mechanism::Bernoulli { intercept, weights, link } => {
                let (intercept, parents, weights) = affine(*intercept, weights)?;
                (Kind::Bernoulli { intercept, weights, link: *link }, parents)
            }
            Mechanism::Gaussian { intercept, weights, sd } => {
                let (intercept, parents, weights) = affine(*intercept, weights)?;
                if !(sd.is_finite() && *sd > 0.0) {
                    return Err(Error::InvalidSpec(format!("{name}: sd must be positive")));
                }
                (Kind::Gaussian { intercept, weights, sd: *sd }, parents)
            }
            Mechanism::Tabulated { levels, parents, rows } => {
                if levels.is_empty() || levels.iter().any(|v| !v.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSpec(format!(
                        "{name}: levels must be finite and strictly increasing"
                    )));
                }
                let ps = parents.iter().map(|p| resolve(p)).collect::<Result<Vec<_>>>()?;
                let mut survival = HashMap::new();
                for row in rows {
                    if row.parents.len() != ps.len() || row.probs.len() != levels.len() {
                        return Err(Error::InvalidSpec(format!("{name}: table row has the wrong shape")));
                    }
                    check_pmf(&row.probs, name)?;
                    let key = row
                        .parents
                        .iter()
                        .map(|v| OrderedValue::new(*v))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|_| Error::InvalidSpec(format!("{name}: parent values must be finite")))?;
                    if survival.insert(key, survival_levels(&row.probs)).is_some() {
                        return Err(Error::InvalidSpec(format!("{name}: duplicate table row {:?}", row.parents)));
                    }
                }
                (Kind::Tabulated { levels: levels.clone(), survival }, ps)
            }
        };
        Ok(Node { name, kind, parents })
    }

    fn predictor(&self, intercept: f64, weights: &[f64], ctx: &Ctx) -> f64 {
        intercept + self.parents.iter().zip(weights).map(|(p, w)| w * ctx.get(*p)).sum::<f64>()
    }

    fn bernoulli_p(&self, intercept: f64, weights: &[f64], link: Link, ctx: &Ctx) -> f64 {
        let eta = self.predictor(intercept, weights, ctx);
        match link {
            Link::Logistic => 1.0 / (1.0 + (-eta).exp()),
            Link::Identity => eta.clamp(0.0, 1.0),
        }
    }

    fn table_row<'s>(&self, survival: &'s HashMap<Vec<OrderedValue>, Vec<f64>>, ctx: &Ctx) -> Result<&'s [f64]> {
        let key: Vec<OrderedValue> = self.parents.iter().map(|p| OrderedValue::of(ctx.get(*p))).collect();
        survival.get(&key).map(Vec::as_slice).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "{}: no table row for parents {:?}",
                self.name,
                key.iter().map(|v| v.get()).collect::<Vec<_>>()
            ))
        })
    }

    /// `(S_k, v_k)` pairs with `S_0 = 1`; the value at `u` is `v_k` for the
    /// largest `k` with `u < S_k`.
    fn steps(&self, ctx: &Ctx) -> Result<Vec<(f64, f64)>> {
        match &self.kind {
            Kind::Constant(v) => Ok(vec![(1.0, *v)]),
            Kind::Bernoulli { intercept, weights, link } => {
                Ok(vec![(1.0, 0.0), (self.bernoulli_p(*intercept, weights, *link, ctx), 1.0)])
            }
            Kind::Tabulated { levels, survival } => {
                let s = self.table_row(survival, ctx)?;
                Ok(s.iter().copied().zip(levels.iter().copied()).collect())
            }
            Kind::Gaussian { .. } => Err(Error::UnsupportedSpec(format!(
                "{} is Gaussian; exact partitioning needs threshold or tabulated nodes (use Monte Carlo)",
                self.name
            ))),
        }
    }

    fn value(&self, ctx: &Ctx, u: f64) -> Result<f64> {
        match &self.kind {
            Kind::Constant(v) => Ok(*v),
            Kind::Bernoulli { intercept, weights, link } => {
                Ok(if u < self.bernoulli_p(*intercept, weights, *link, ctx) { 1.0 } else { 0.0 })
            }
            Kind::Tabulated { levels, survival } => {
                let s = self.table_row(survival, ctx)?;
                Ok(step_value(s, levels, u))
            }
            Kind::Gaussian { intercept, weights, sd } => {
                let z = Normal::standard().inverse_cdf((1.0 - u).min(1.0 - f64::EPSILON / 2.0));
                Ok(self.predictor(*intercept, weights, ctx) + sd * z)
            }
        }
    }

    fn is_threshold(&self) -> bool {
        !matches!(self.kind, Kind::Gaussian { .. })
    }
}

fn check_pmf(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidSpec(format!("{name}: probabilities must be non-negative")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!("{name}: probabilities sum to {s}, not 1")));
    }
    Ok(())
}

fn survival_levels(p: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; p.len()];
    let mut acc = 0.0;
    for k in (0..p.len()).rev() {
        acc += p[k];
        s[k] = acc.min(1.0);
    }
    s[0] = 1.0;
    s
}

fn step_value(survival: &[f64], levels: &[f64], u: f64) -> f64 {
    for k in (0..survival.len()).rev() {
        if u < survival[k] {
            return levels[k];
        }
    }
    levels[0]
}

/// A validated, compiled SCM.
#[derive(Clone, Debug)]
pub struct Scm {
    spec: ScmSpec,
    rows: Vec<(Vec<OrderedValue>, f64)>,
    treatment: Node,
    mediator: Node,
    outcome: Node,
}

/// How ground truth is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo { n: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Exact,
    MonteCarlo,
}

/// A ground-truth probability with its Monte Carlo standard error (0 if exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub value: f64,
    pub se: f64,
}

/// Mean-difference effects, reported alongside unconditional truths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    /// `E[Y_x] - E[Y_x']`.
    pub te: f64,
    /// `E[Y_{x,M_x'}] - E[Y_x']`.
    pub nde: f64,
    /// `E[Y_{x',M_x}] - E[Y_x']`.
    pub nie: f64,
    /// NIE with the roles of `x` and `x'` swapped: `E[Y_{x,M_x'}] - E[Y_x]`.
    pub nie_reverse: f64,
    /// `E[Y_{x,m}] - E[Y_{x',m}]` when the query fixes `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cde: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthReport {
    pub method: MethodTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Draws that satisfied the evidence (Monte Carlo with evidence only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<u64>,
    pub case: CaseFlag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_pns: Option<Truth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nd_pns: Option<Truth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ni_pns: Option<Truth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_pns: Option<Truth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<Effects>,
}

impl TruthReport {
    pub fn t(&self) -> f64 {
        self.t_pns.map_or(f64::NAN, |t| t.value)
    }

    pub fn nd(&self) -> f64 {
        self.nd_pns.map_or(f64::NAN, |t| t.value)
    }

    pub fn ni(&self) -> f64 {
        self.ni_pns.map_or(f64::NAN, |t| t.value)
    }

    pub fn cd(&self) -> f64 {
        self.cd_pns.map_or(f64::NAN, |t| t.value)
    }
}

/// Counterfactual access on one exogenous draw or partition cell.
pub(crate) trait World {
    /// `M_x`.
    fn m(&self, x: OrderedValue) -> Result<OrderedValue>;
    /// `Y_{x,m}`.
    fn y(&self, x: OrderedValue, m: OrderedValue) -> Result<OrderedValue>;

    /// `Y_{x, M_b}`.
    fn y_cross(&self, x: OrderedValue, b: OrderedValue) -> Result<OrderedValue> {
        self.y(x, self.m(b)?)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Outcomes {
    pub t: bool,
    pub nd: bool,
    pub ni: bool,
    pub cd: Option<bool>,
}

pub(crate) fn outcomes<W: World>(w: &W, q: &Query) -> Result<Outcomes> {
    let y = q.threshold();
    let a = y.admits(w.y_cross(q.x_base, q.x_base)?);
    let below_alt = y.admits(w.y_cross(q.x_alt, q.x_alt)?);
    let r = y.admits(w.y_cross(q.x_base, q.x_alt)?);
    let t = a && !below_alt;
    let cd = match q.m_fixed {
        Some(m) => Some(y.admits(w.y(q.x_base, m)?) && !y.admits(w.y(q.x_alt, m)?)),
        None => None,
    };
    Ok(Outcomes { t, nd: t && r, ni: t && !r, cd })
}

/// The post-treatment part of the evidence event; `X = x*` is handled by the caller.
pub(crate) fn evidence_holds<W: World>(w: &W, e: &Evidence) -> Result<bool> {
    Ok(match e {
        Evidence::Mediator { x, m, y } => w.m(*x)? == *m && y.contains(w.y(*x, *m)?),
        Evidence::Outcome { x, y } => y.contains(w.y_cross(*x, *x)?),
        Evidence::MediatorInterval { x, m, y } => {
            let mv = w.m(*x)?;
            m.contains(mv) && y.contains(w.y(*x, mv)?)
        }
    })
}

/// `[E[Y_x], E[Y_x'], E[Y_{x,M_x'}], E[Y_{x',M_x}], E[Y_{x,m}], E[Y_{x',m}]]` integrands.
pub(crate) fn effect_terms<W: World>(w: &W, q: &Query) -> Result<[f64; 6]> {
    let (xb, xa) = (q.x_base, q.x_alt);
    let (ym_a, ym_b) = match q.m_fixed {
        Some(m) => (w.y(xa, m)?.get(), w.y(xb, m)?.get()),
        None => (0.0, 0.0),
    };
    Ok([
        w.y_cross(xa, xa)?.get(),
        w.y_cross(xb, xb)?.get(),
        w.y_cross(xa, xb)?.get(),
        w.y_cross(xb, xa)?.get(),
        ym_a,
        ym_b,
    ])
}

pub(crate) fn effects_from(e: [f64; 6], has_m: bool) -> Effects {
    Effects {
        te: e[0] - e[1],
        nde: e[2] - e[1],
        nie: e[3] - e[1],
        nie_reverse: e[2] - e[0],
        cde: has_m.then(|| e[4] - e[5]),
    }
}

impl Scm {
    fn new(spec: ScmSpec) -> Result<Self> {
        let covs = &spec.covariates;
        {
            let mut seen = std::collections::HashSet::new();
            for c in covs {
                if c == "x" || c == "m" || c == "y" || !seen.insert(c) {
                    return Err(Error::InvalidSpec(format!("covariate name {c:?} is reserved or repeated")));
                }
            }
        }
        let rows = if covs.is_empty() {
            if !spec.covariate_table.is_empty() {
                return Err(Error::InvalidSpec("covariate table given without covariate names".into()));
            }
            vec![(Vec::new(), 1.0)]
        } else {
            if spec.covariate_table.is_empty() {
                return Err(Error::InvalidSpec("covariates declared without a covariate table".into()));
            }
            let mut rows = Vec::new();
            for r in &spec.covariate_table {
                if r.values.len() != covs.len() {
                    return Err(Error::InvalidSpec("covariate row has the wrong length".into()));
                }
                let vals = r
                    .values
                    .iter()
                    .map(|v| OrderedValue::new(*v))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|_| Error::InvalidSpec("covariate values must be finite".into()))?;
                if rows.iter().any(|(v, _): &(Vec<OrderedValue>, f64)| *v == vals) {
                    return Err(Error::InvalidSpec(format!("duplicate covariate row {:?}", r.values)));
                }
                rows.push((vals, r.prob));
            }
            check_pmf(&rows.iter().map(|r| r.1).collect::<Vec<_>>(), "covariate table")?;
            rows.retain(|r| r.1 > 0.0);
            rows
        };
        let treatment = Node::compile("treatment", &spec.treatment, &[], covs)?;
        let mediator = Node::compile("mediator", &spec.mediator, &["x"], covs)?;
        let outcome = Node::compile("outcome", &spec.outcome, &["x", "m"], covs)?;
        Ok(Scm { spec, rows, treatment, mediator, outcome })
    }

    pub fn spec(&self) -> &ScmSpec {
        &self.spec
    }

    /// True when every node is a threshold or tabulated function (exact path available).
    pub fn is_threshold(&self) -> bool {
        self.treatment.is_threshold() && self.mediator.is_threshold() && self.outcome.is_threshold()
    }

    fn require_threshold(&self) -> Result<()> {
        for n in [&self.treatment, &self.mediator, &self.outcome] {
            if !n.is_threshold() {
                n.steps(&Ctx { x: 0.0, m: 0.0, c: &[] })?;
            }
        }
        Ok(())
    }

    /// Covariate rows matching `stratum` (all rows if empty), probabilities renormalized.
    fn stratum_rows(&self, stratum: &[OrderedValue]) -> Result<Vec<(usize, f64)>> {
        if stratum.is_empty() {
            return Ok(self.rows.iter().enumerate().map(|(i, r)| (i, r.1)).collect());
        }
        if stratum.len() != self.spec.covariates.len() {
            return Err(Error::InvalidQuery(format!(
                "stratum has {} values for {} covariates",
                stratum.len(),
                self.spec.covariates.len()
            )));
        }
        let hit: Vec<(usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.0 == stratum)
            .map(|(i, r)| (i, r.1))
            .collect();
        let total: f64 = hit.iter().map(|h| h.1).sum();
        if total <= 0.0 {
            return Err(Error::Conditioning(format!(
                "covariate stratum {:?} has zero probability",
                stratum.iter().map(|v| v.get()).collect::<Vec<_>>()
            )));
        }
        Ok(hit.into_iter().map(|(i, p)| (i, p / total)).collect())
    }

    /// Treatment levels with positive probability in some covariate row.
    pub fn treatment_support(&self) -> Result<Vec<OrderedValue>> {
        self.require_threshold()?;
        let mut out = Vec::new();
        for (c, _) in &self.rows {
            for (v, p) in pmf(&self.treatment.steps(&Ctx { x: 0.0, m: 0.0, c })?) {
                if p > 0.0 {
                    out.push(v);
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Draws `n` iid observational rows. Deterministic given `seed`.
    pub fn sample_observational(&self, n: usize, seed: u64) -> Result<crate::dataset::Dataset> {
        mc::sample(self, n, seed)
    }

    /// T/ND/NI-PNS (and CD-PNS when the query fixes `m`) from their
    /// counterfactual definitions, conditional on the query's stratum.
    pub fn truth_pns(&self, q: &Query, method: Method) -> Result<TruthReport> {
        match method {
            Method::Exact => exact::truth(self, q, None),
            Method::MonteCarlo { n, seed } => mc::truth(self, q, None, n, seed),
        }
    }

    /// Truths conditional on the evidence event; the event must have positive
    /// probability.
    pub fn truth_with_evidence(&self, q: &Query, e: &Evidence, method: Method) -> Result<TruthReport> {
        match method {
            Method::Exact => exact::truth(self, q, Some(e)),
            Method::MonteCarlo { n, seed } => mc::truth(self, q, Some(e), n, seed),
        }
    }

    /// Truths for zero-probability evidence, defined as the limit of
    /// conditioning on the exogenous units immediately to the right of the
    /// evidence's rank position. Requires the relevant sublevel events to
    /// be nested (the monotone ordering exists); exact path only.
    pub fn truth_with_evidence_limit(&self, q: &Query, e: &Evidence) -> Result<TruthReport> {
        exact::truth_limit(self, q, e)
    }

    /// Whether the sublevel events a query touches (its three counterfactual
    /// events and, with evidence, the evidence bounds) are nested, i.e. a
    /// single monotone ordering of the exogenous cells ranks all of them.
    /// This is the condition under which the identification formulas are
    /// exact for that query.
    pub fn query_events_nested(&self, q: &Query, e: Option<&Evidence>) -> Result<bool> {
        exact::query_nested(self, q, e)
    }

    /// Observational CDFs implied by the SCM, conditional on `stratum`
    /// (marginal over covariates when empty).
    pub fn analytic_cdf(&self, stratum: &[OrderedValue]) -> Result<AnalyticCdf> {
        AnalyticCdf::new(self, stratum)
    }

    pub fn check_monotonicity(&self) -> Result<MonotonicityReport> {
        monotone::check(self)
    }
}

/// `(value, mass)` pairs of a step function, zero-mass steps dropped.
fn pmf(steps: &[(f64, f64)]) -> Vec<(OrderedValue, f64)> {
    let mut out: Vec<(OrderedValue, f64)> = Vec::new();
    for k in 0..steps.len() {
        let next = steps.get(k + 1).map_or(0.0, |s| s.0);
        let w = steps[k].0 - next;
        if w > 0.0 {
            let v = OrderedValue::of(steps[k].1);
            match out.iter_mut().find(|e| e.0 == v) {
                Some(e) => e.1 += w,
                None => out.push((v, w)),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_round_trip() {
        let s = ScmSpec::reference_bernoulli();
        let j = serde_json::to_string(&s).unwrap();
        let back: ScmSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        let doc = r#"{
            "treatment": {"type": "bernoulli", "intercept": 0.0},
            "mediator": {"type": "tabulated", "levels": [0, 1, 2], "parents": ["x"],
                         "rows": [{"parents": [0], "probs": [0.5, 0.3, 0.2]},
                                  {"parents": [1], "probs": [0.2, 0.3, 0.5]}]},
            "outcome": {"type": "bernoulli", "intercept": 0.5, "weights": {"x": 0.1, "m": 0.1}, "link": "identity"}
        }"#;
        let s: ScmSpec = serde_json::from_str(doc).unwrap();
        s.compile().unwrap();
    }

    #[test]
    fn invalid_specs() {
        let mut s = ScmSpec::reference_bernoulli();
        s.mediator = Mechanism::bernoulli(0.0, &[("y", 1.0)]);
        assert!(matches!(s.compile(), Err(Error::InvalidSpec(_))));
        let mut s = ScmSpec::reference_bernoulli();
        s.treatment = Mechanism::bernoulli(0.0, &[("x", 1.0)]);
        assert!(s.compile().is_err());
        let mut s = ScmSpec::reference_bernoulli();
        s.outcome = Mechanism::Tabulated { levels: vec![0.0, 1.0], parents: vec![], rows: vec![TableRow {
            parents: vec![],
            probs: vec![0.5, 0.6],
        }] };
        assert!(s.compile().is_err());
        assert!(ScmSpec::preset("nope").is_err());
    }

    #[test]
    fn survival_and_steps() {
        let s = survival_levels(&[0.2, 0.3, 0.5]);
        assert_eq!(s[0], 1.0);
        assert!((s[1] - 0.8).abs() < 1e-15 && (s[2] - 0.5).abs() < 1e-15);
        let lv = [0.0, 1.0, 2.0];
        assert_eq!(step_value(&s, &lv, 0.1), 2.0);
        assert_eq!(step_value(&s, &lv, 0.5), 1.0);
        assert_eq!(step_value(&s, &lv, 0.85), 0.0);
    }

    #[test]
    fn bernoulli_coupling_is_strict_threshold() {
        let scm = ScmSpec::reference_bernoulli().compile().unwrap();
        let ctx = Ctx { x: 0.0, m: 0.0, c: &[] };
        assert_eq!(scm.treatment.value(&ctx, 0.49).unwrap(), 1.0);
        assert_eq!(scm.treatment.value(&ctx, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_is_decreasing_in_u() {
        let mut s = ScmSpec::reference_bernoulli();
        s.outcome = Mechanism::Gaussian { intercept: 1.0, weights: BTreeMap::new(), sd: 2.0 };
        let scm = s.compile().unwrap();
        let ctx = Ctx { x: 0.0, m: 0.0, c: &[] };
        let a = scm.outcome.value(&ctx, 0.1).unwrap();
        let b = scm.outcome.value(&ctx, 0.9).unwrap();
        assert!(a > b);
        assert!((scm.outcome.value(&ctx, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(scm.outcome.value(&ctx, 0.0).unwrap().is_finite());
        assert!(!scm.is_threshold());
    }
}
