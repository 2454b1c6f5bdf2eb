//! Reference simulation study, randomized SCM generators and the
//! identification-versus-oracle comparisons behind the `verify` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Schema};
use crate::ecdf::CdfSource;
use crate::error::{Error, Result};
use crate::identify::{self, CaseFlag, PnsTriple};
use crate::oracle::{AnalyticCdf, CovariateRow, Mechanism, Method, MonotonicityReport, Scm, ScmSpec, TableRow};
use crate::order::{Evidence, Interval, OrderedValue, Query};
use crate::uncertainty::{bootstrap_ci, BootstrapConfig, Estimand, Target};

/// `(y = 1, x' = 0, x = 1)`, the query of the reference simulation.
pub fn reference_query() -> Query {
    Query::new(0.0, 1.0, 1.0)
}

/// Rounded ground truths quoted for the reference SCM (T, ND, NI).
pub const REFERENCE_TRUTHS: [f64; 3] = [0.074, 0.066, 0.008];

fn sigma(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Ordered-logit pmf: `P(V ≥ v_k) = σ(α_k + score)` with decreasing `α`.
fn ordered_logit(alphas: &[f64], score: f64) -> Vec<f64> {
    let mut s: Vec<f64> = std::iter::once(1.0).chain(alphas.iter().map(|a| sigma(a + score))).collect();
    s.push(0.0);
    let p: Vec<f64> = s.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|v| v / total).collect()
}

fn thresholds<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (1..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

fn levels(k: usize) -> Vec<f64> {
    (0..k).map(|v| v as f64).collect()
}

/// Cartesian product of parent value lists.
fn product(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    lists.iter().fold(vec![vec![]], |acc, l| {
        acc.into_iter()
            .flat_map(|p| {
                l.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect()
    })
}

fn tabulated(names: &[&str], domains: &[Vec<f64>], k: usize, pmf: impl Fn(&[f64]) -> Vec<f64>) -> Mechanism {
    Mechanism::Tabulated {
        levels: levels(k),
        parents: names.iter().map(|s| s.to_string()).collect(),
        rows: product(domains).into_iter().map(|p| TableRow { probs: pmf(&p), parents: p }).collect(),
    }
}

/// Random threshold SCM with finite supports. With `monotone`, every
/// structural function is stochastically increasing in its parents, which
/// makes Assumptions 4/5 likely (but not certain: check before relying on it).
pub fn random_scm<R: Rng>(rng: &mut R, monotone: bool) -> ScmSpec {
    let coef = |rng: &mut R, lo: f64, hi: f64| {
        let v = rng.gen_range(lo..hi);
        if monotone || rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let with_c = rng.gen_bool(0.4);
    let (covariates, covariate_table, cdom) = if with_c {
        let p = rng.gen_range(0.3..0.7);
        (
            vec!["c".to_string()],
            vec![CovariateRow { values: vec![0.0], prob: p }, CovariateRow { values: vec![1.0], prob: 1.0 - p }],
            vec![0.0, 1.0],
        )
    } else {
        (vec![], vec![], vec![])
    };
    let cw = |rng: &mut R| if with_c { rng.gen_range(-1.0..1.0) } else { 0.0 };

    let kx = if rng.gen_bool(0.7) { 2 } else { 3 };
    let tc = cw(rng);
    let treatment = if kx == 2 {
        let mut w = vec![];
        if with_c {
            w.push(("c", tc));
        }
        Mechanism::bernoulli(rng.gen_range(-1.0..1.0), &w)
    } else {
        let a = thresholds(rng, kx);
        if with_c {
            tabulated(&["c"], std::slice::from_ref(&cdom), kx, |p| ordered_logit(&a, tc * p[0]))
        } else {
            tabulated(&[], &[], kx, |_| ordered_logit(&a, 0.0))
        }
    };
    let xdom = levels(kx);

    let km = if rng.gen_bool(0.6) { 2 } else { 3 };
    let (bx, bc) = (coef(rng, 0.2, 1.5), cw(rng));
    let am = thresholds(rng, km);
    let mediator = if with_c {
        tabulated(&["x", "c"], &[xdom.clone(), cdom.clone()], km, |p| ordered_logit(&am, bx * p[0] + bc * p[1]))
    } else {
        tabulated(&["x"], std::slice::from_ref(&xdom), km, |p| ordered_logit(&am, bx * p[0]))
    };

    let ky = rng.gen_range(2..=4);
    let (gx, gm, gc) = (coef(rng, 0.0, 1.0), coef(rng, 0.2, 1.5), cw(rng));
    let ay = thresholds(rng, ky);
    let mdom = levels(km);
    let outcome = if with_c {
        tabulated(&["x", "m", "c"], &[xdom, mdom, cdom], ky, |p| {
            ordered_logit(&ay, gx * p[0] + gm * p[1] + gc * p[2])
        })
    } else {
        tabulated(&["x", "m"], &[xdom, mdom], ky, |p| ordered_logit(&ay, gx * p[0] + gm * p[1]))
    };
    ScmSpec { covariates, covariate_table, treatment, mediator, outcome }
}

/// SCM whose outcome support is split by mediator level, `Y = 2M + B` with a
/// Bernoulli `B`, so the mediator dominates the outcome and the mediator
/// evidence events line up with the outcome events.
pub fn random_lexicographic_scm<R: Rng>(rng: &mut R) -> ScmSpec {
    let km = rng.gen_range(2..=3);
    let am = thresholds(rng, km);
    let bx = rng.gen_range(0.2..1.5);
    let (a, gx, gm) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.5), rng.gen_range(-0.5..0.5));
    let ky = 2 * km;
    ScmSpec {
        covariates: vec![],
        covariate_table: vec![],
        treatment: Mechanism::bernoulli(rng.gen_range(-1.0..1.0), &[]),
        mediator: tabulated(&["x"], &[levels(2)], km, |p| ordered_logit(&am, bx * p[0])),
        outcome: tabulated(&["x", "m"], &[levels(2), levels(km)], ky, |p| {
            let j = p[1] as usize;
            let q = sigma(a + gx * p[0] + gm * p[1]);
            let mut probs = vec![0.0; ky];
            probs[2 * j] = 1.0 - q;
            probs[2 * j + 1] = q;
            probs
        }),
    }
}

/// Binary `(x, m, y)` data with every `(x, m)` cell populated.
pub fn random_binary_dataset<R: Rng>(rng: &mut R, n: usize) -> Dataset {
    loop {
        let px = rng.gen_range(0.3..0.7);
        let pm = [rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85)];
        let py = [[rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85)], [
            rng.gen_range(0.15..0.85),
            rng.gen_range(0.15..0.85),
        ]];
        let (mut x, mut m, mut y) = (vec![], vec![], vec![]);
        let mut seen = [[false; 2]; 2];
        for _ in 0..n {
            let xi = rng.gen_bool(px) as usize;
            let mi = rng.gen_bool(pm[xi]) as usize;
            let yi = rng.gen_bool(py[xi][mi]) as usize;
            seen[xi][mi] = true;
            x.push(xi as f64);
            m.push(mi as f64);
            y.push(yi as f64);
        }
        if seen.iter().flatten().all(|s| *s) {
            return Dataset::from_columns(Schema::default_xmy(), x, m, y, vec![]).expect("valid columns");
        }
    }
}

/// One identified-versus-definitional comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// e.g. `"controlled"`, `"natural"`, `"cd-evidence"`, `"natural-evidence"`, `"mediator-evidence"`.
    pub family: &'static str,
    pub case: CaseFlag,
    pub quantity: &'static str,
    pub identified: f64,
    pub truth: f64,
}

impl Comparison {
    pub fn error(&self) -> f64 {
        (self.identified - self.truth).abs()
    }
}

fn pick<R: Rng, T: Copy>(rng: &mut R, v: &[T]) -> T {
    *v.choose(rng).expect("non-empty")
}

/// Outcome values with positive mass at some treatment level.
fn outcome_grid(a: &AnalyticCdf) -> Vec<OrderedValue> {
    let mut v: Vec<OrderedValue> = a
        .treatment_levels()
        .iter()
        .filter_map(|x| a.joint_pmf(*x).ok())
        .flat_map(|j| j.iter().map(|e| e.1))
        .collect();
    v.sort();
    v.dedup();
    v
}

/// A random interval over `grid`; with probability `p_null`, a point carrying no mass.
fn random_interval<R: Rng>(rng: &mut R, grid: &[OrderedValue], p_null: f64) -> Interval {
    let null = rng.gen_bool(p_null);
    let g: Vec<f64> = grid.iter().map(|v| v.get()).collect();
    if null {
        let i = rng.gen_range(0..=g.len());
        let v = match i {
            0 => g[0] - 0.5,
            i if i == g.len() => g[i - 1] + 0.5,
            i => 0.5 * (g[i - 1] + g[i]),
        };
        return Interval::point(v).expect("finite");
    }
    loop {
        let lower = rng.gen_bool(0.8).then(|| pick(rng, &g));
        let upper = rng.gen_bool(0.8).then(|| pick(rng, &g));
        let closed = rng.gen_bool(0.5);
        if let Ok(iv) = Interval::new(lower.map(OrderedValue::of), upper.map(OrderedValue::of), closed) {
            return iv;
        }
    }
}

fn push_triple(out: &mut Vec<Comparison>, family: &'static str, t: &PnsTriple, r: &crate::oracle::TruthReport) {
    for (quantity, identified, truth) in [("t", t.t_pns, r.t()), ("nd", t.nd_pns, r.nd()), ("ni", t.ni_pns, r.ni())] {
        out.push(Comparison { family, case: t.case, quantity, identified, truth });
    }
}

/// Outcome of [`compare_with_oracle`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OracleComparisons {
    pub comparisons: Vec<Comparison>,
    /// Query/evidence pairs left out because their sublevel events are not
    /// nested, so no monotone ordering makes the formulas exact.
    pub skipped: usize,
}

impl OracleComparisons {
    pub fn max_error(&self) -> f64 {
        self.comparisons.iter().map(Comparison::error).fold(0.0, f64::max)
    }
}

fn truth_for(scm: &Scm, q: &Query, e: &Evidence, case: CaseFlag) -> Result<crate::oracle::TruthReport> {
    match case {
        CaseFlag::B => scm.truth_with_evidence_limit(q, e),
        _ => scm.truth_with_evidence(q, e, Method::Exact),
    }
}

/// Evaluates every identification operation at the SCM's analytic CDFs and
/// compares with exact counterfactual truth, for `queries` random queries
/// per operation. Pairs whose sublevel events are not nested are skipped.
pub fn compare_with_oracle<R: Rng>(scm: &Scm, rng: &mut R, queries: usize) -> Result<OracleComparisons> {
    let mut res = OracleComparisons::default();
    let strata: Vec<Vec<OrderedValue>> = if scm.spec().covariates.is_empty() {
        vec![vec![]]
    } else {
        scm.spec()
            .covariate_table
            .iter()
            .map(|r| r.values.iter().map(|v| OrderedValue::of(*v)).collect())
            .collect()
    };
    for _ in 0..queries {
        let stratum = strata.choose(rng).expect("non-empty").clone();
        let analytic = scm.analytic_cdf(&stratum)?;
        let xs: Vec<OrderedValue> =
            analytic.treatment_levels().iter().copied().filter(|x| analytic.treatment_prob(*x) > 0.0).collect();
        if xs.len() < 2 {
            continue;
        }
        let ygrid = outcome_grid(&analytic);
        let mut ychoices = ygrid.clone();
        ychoices.push(OrderedValue::of(ygrid.last().expect("non-empty").get() + 1.0));
        let x_base = pick(rng, &xs);
        let x_alt = pick(rng, &xs);
        let mut q = Query::new(x_base.get(), x_alt.get(), pick(rng, &ychoices).get());
        q.stratum = (!stratum.is_empty()).then(|| stratum.clone());
        let mut gate = |q: &Query, e: Option<&Evidence>| -> Result<bool> {
            let ok = scm.query_events_nested(q, e)?;
            res.skipped += usize::from(!ok);
            Ok(ok)
        };

        // Controlled direct, with and without evidence.
        let ms_a = analytic.mediator_support(x_alt)?;
        let ms_b = analytic.mediator_support(x_base)?;
        let common: Vec<OrderedValue> = ms_a.iter().copied().filter(|m| ms_b.contains(m)).collect();
        if !common.is_empty() {
            let mut qm = q.clone();
            qm.m_fixed = Some(pick(rng, &common));
            let xstar = pick(rng, &xs);
            let mstar = pick(rng, &analytic.mediator_support(xstar)?);
            let e = Evidence::Mediator { x: xstar, m: mstar, y: random_interval(rng, &ygrid, 0.3) };
            if gate(&qm, None)? {
                res.comparisons.push(Comparison {
                    family: "controlled",
                    case: CaseFlag::Unconditional,
                    quantity: "cd",
                    identified: identify::cd_pns(&analytic, &qm)?,
                    truth: scm.truth_pns(&qm, Method::Exact)?.cd(),
                });
            }
            if gate(&qm, Some(&e))? {
                let (v, case, _) = identify::cd_pns_with_evidence(&analytic, &qm, &e)?;
                let truth = truth_for(scm, &qm, &e, case)?.cd();
                res.comparisons.push(Comparison { family: "cd-evidence", case, quantity: "cd", identified: v, truth });
            }
        }

        if gate(&q, None)? {
            let t = identify::natural_pns(&analytic, &q)?;
            push_triple(&mut res.comparisons, "natural", &t, &scm.truth_pns(&q, Method::Exact)?);
        }

        let xstar = pick(rng, &xs);
        let e = Evidence::Outcome { x: xstar, y: random_interval(rng, &ygrid, 0.3) };
        if gate(&q, Some(&e))? {
            let (t, _) = identify::natural_pns_with_evidence(&analytic, &q, &e)?;
            push_triple(&mut res.comparisons, "natural-evidence", &t, &truth_for(scm, &q, &e, t.case)?);
        }

        let mgrid = analytic.mediator_support(xstar)?;
        let e = Evidence::MediatorInterval {
            x: xstar,
            m: random_interval(rng, &mgrid, 0.15),
            y: random_interval(rng, &ygrid, 0.15),
        };
        if gate(&q, Some(&e))? {
            let (t, _) = identify::natural_pns_with_mediator_evidence(&analytic, &q, &e)?;
            push_triple(&mut res.comparisons, "mediator-evidence", &t, &truth_for(scm, &q, &e, t.case)?);
        }
    }
    Ok(res)
}

/// Largest violation of `t = nd + ni` and of `prop_nd + prop_ni = 1` over
/// random queries and evidence, at analytic CDFs and on the exact oracle.
pub fn decomposition_error<R: Rng>(scm: &Scm, rng: &mut R, queries: usize) -> Result<f64> {
    let analytic = scm.analytic_cdf(&[])?;
    let xs: Vec<OrderedValue> =
        analytic.treatment_levels().iter().copied().filter(|x| analytic.treatment_prob(*x) > 0.0).collect();
    let ygrid = outcome_grid(&analytic);
    let mut worst: f64 = 0.0;
    let check = |worst: &mut f64, t: &PnsTriple| {
        *worst = worst.max((t.t_pns - t.nd_pns - t.ni_pns).abs());
        if let (Some(a), Some(b)) = (t.prop_nd, t.prop_ni) {
            *worst = worst.max((a + b - 1.0).abs());
        }
    };
    for _ in 0..queries {
        let q = Query::new(pick(rng, &xs).get(), pick(rng, &xs).get(), pick(rng, &ygrid).get());
        check(&mut worst, &identify::natural_pns(&analytic, &q)?);
        let e = Evidence::Outcome { x: pick(rng, &xs), y: random_interval(rng, &ygrid, 0.2) };
        check(&mut worst, &identify::natural_pns_with_evidence(&analytic, &q, &e)?.0);
        let mgrid = analytic.mediator_support(e.x_star())?;
        let e2 = Evidence::MediatorInterval {
            x: e.x_star(),
            m: random_interval(rng, &mgrid, 0.0),
            y: e.y_interval(),
        };
        check(&mut worst, &identify::natural_pns_with_mediator_evidence(&analytic, &q, &e2)?.0);
        check(&mut worst, &identify::pn_family(&analytic, &q)?);
        check(&mut worst, &identify::ps_family(&analytic, &q)?);
        let r = scm.truth_pns(&q, Method::Exact)?;
        worst = worst.max((r.t() - r.nd() - r.ni()).abs());
        match scm.truth_with_evidence(&q, &e, Method::Exact) {
            Ok(r) => worst = worst.max((r.t() - r.nd() - r.ni()).abs()),
            Err(Error::Conditioning(_)) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(worst)
}

/// Draws monotone-direction SCMs until one passes `check_monotonicity`
/// with nested outcome events.
pub fn monotone_scm<R: Rng>(rng: &mut R) -> Result<(Scm, MonotonicityReport)> {
    for _ in 0..10_000 {
        let scm = random_scm(rng, true).compile()?;
        let report = scm.check_monotonicity()?;
        if report.holds() && report.outcome_events_nested {
            return Ok((scm, report));
        }
    }
    Err(Error::InvalidSpec("no monotone SCM found after 10000 draws".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

/// One line of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub truth: Option<f64>,
    pub estimate: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl VerifyRow {
    fn new(check: impl Into<String>) -> Self {
        VerifyRow {
            check: check.into(),
            truth: None,
            estimate: None,
            lower: None,
            upper: None,
            tolerance: None,
            status: Status::Info,
            note: String::new(),
        }
    }

    fn judged(mut self, err: f64, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self.status = if err <= tol { Status::Pass } else { Status::Fail };
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub replicates: usize,
    /// Sample sizes of the single-run table.
    pub sizes: Vec<usize>,
    /// Independent N = 10000 runs averaged for the accuracy checks.
    pub runs: usize,
    pub random_scms: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 1, replicates: 1000, sizes: vec![100, 1000, 10_000], runs: 20, random_scms: 50 }
    }
}

const REPLICATED_N: usize = 10_000;

/// The reference simulation study plus the property checks.
pub fn run(cfg: &VerifyConfig) -> Result<Vec<VerifyRow>> {
    let scm = ScmSpec::reference_bernoulli().compile()?;
    let q = reference_query();
    let mut rows = Vec::new();

    let truth = scm.truth_pns(&q, Method::Exact)?;
    let exact = [truth.t(), truth.nd(), truth.ni()];
    for (k, name) in ["T-PNS", "ND-PNS", "NI-PNS"].into_iter().enumerate() {
        let mut r = VerifyRow::new(format!("{name} exact vs reference"));
        r.truth = Some(exact[k]);
        r.estimate = Some(REFERENCE_TRUTHS[k]);
        rows.push(r.judged((exact[k] - REFERENCE_TRUTHS[k]).abs(), 0.002));
    }
    let pn = scm.truth_with_evidence(&q, &identify::pn_evidence(&q), Method::Exact)?;
    let ps = scm.truth_with_evidence(&q, &identify::ps_evidence(&q), Method::Exact)?;
    let pn_exact = [pn.t(), pn.nd(), pn.ni()];
    for (k, name) in ["PN", "ND-PN", "NI-PN"].into_iter().enumerate() {
        let mut r = VerifyRow::new(format!("{name} exact"));
        r.truth = Some(pn_exact[k]);
        rows.push(r);
    }
    let mut r = VerifyRow::new("PS exact");
    r.truth = Some(ps.t());
    r.note = "reference PS values (0.097) are not reproducible under the stated SCM; excluded".into();
    rows.push(r);

    let estimands = [Estimand::Natural, Estimand::Pn];
    for (i, &n) in cfg.sizes.iter().enumerate() {
        let d = scm.sample_observational(n, cfg.seed.wrapping_add(i as u64))?;
        let bcfg = BootstrapConfig { replicates: cfg.replicates, level: 0.95, seed: cfg.seed };
        let cis = bootstrap_ci(&d, &Target::new(q.clone(), &estimands), &bcfg)?;
        let names = ["T-PNS", "ND-PNS", "NI-PNS", "PN", "ND-PN", "NI-PN"];
        for (k, ci) in cis.iter().enumerate() {
            let truth = if k < 3 { exact[k] } else { pn_exact[k - 3] };
            let mut r = VerifyRow::new(format!("{} estimate N={n}", names[k]));
            r.truth = Some(truth);
            r.estimate = Some(ci.point);
            r.lower = Some(ci.lower);
            r.upper = Some(ci.upper);
            if ci.degenerate_count > 0 {
                r.note = format!("{} degenerate replicates dropped", ci.degenerate_count);
            }
            rows.push(r);
        }
    }

    if cfg.runs > 0 {
        let mut sums = [0.0; 6];
        let mut width = 0.0;
        for r in 0..cfg.runs {
            let d = scm.sample_observational(REPLICATED_N, cfg.seed.wrapping_add(1000 + r as u64))?;
            let bcfg = BootstrapConfig { replicates: cfg.replicates, level: 0.95, seed: cfg.seed.wrapping_add(r as u64) };
            let cis = bootstrap_ci(&d, &Target::new(q.clone(), &estimands), &bcfg)?;
            for (acc, ci) in sums.iter_mut().zip(&cis) {
                *acc += ci.point;
            }
            width += cis[0].upper - cis[0].lower;
        }
        let k = cfg.runs as f64;
        let label = |name: &str| format!("{name} mean of {} runs N={REPLICATED_N}", cfg.runs);
        let mut r = VerifyRow::new(label("T-PNS"));
        r.truth = Some(exact[0]);
        r.estimate = Some(sums[0] / k);
        rows.push(r.judged((sums[0] / k - exact[0]).abs(), 0.005));
        let mut r = VerifyRow::new(format!("T-PNS mean 95% CI width, N={REPLICATED_N}"));
        r.estimate = Some(width / k);
        r.note = "accepted range [0.02, 0.04]".into();
        r.status = if (0.02..=0.04).contains(&(width / k)) { Status::Pass } else { Status::Fail };
        rows.push(r);
        for (j, name) in ["PN", "ND-PN", "NI-PN"].into_iter().enumerate() {
            let mut r = VerifyRow::new(label(name));
            r.truth = Some(pn_exact[j]);
            r.estimate = Some(sums[3 + j] / k);
            rows.push(r.judged((sums[3 + j] / k - pn_exact[j]).abs(), 0.01));
        }
    }

    // Full-interval evidence reproduces the unconditional values bit for bit.
    let analytic = scm.analytic_cdf(&[])?;
    let plain = identify::natural_pns(&analytic, &q)?;
    let full = Evidence::Outcome { x: OrderedValue::of(1.0), y: Interval::full() };
    let (with, _) = identify::natural_pns_with_evidence(&analytic, &q, &full)?;
    let same = plain.t_pns.to_bits() == with.t_pns.to_bits()
        && plain.nd_pns.to_bits() == with.nd_pns.to_bits()
        && plain.ni_pns.to_bits() == with.ni_pns.to_bits();
    let mut r = VerifyRow::new("full-interval evidence reduction (bitwise)");
    r.status = if same { Status::Pass } else { Status::Fail };
    rows.push(r);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_dec: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    let mut count = 0usize;
    for k in 0..cfg.random_scms {
        let spec = random_scm(&mut rng, false);
        worst_dec = worst_dec.max(decomposition_error(&spec.compile()?, &mut rng, 5)?);
        let scm = if k % 5 == 4 {
            random_lexicographic_scm(&mut rng).compile()?
        } else {
            monotone_scm(&mut rng)?.0
        };
        let cmp = compare_with_oracle(&scm, &mut rng, 5)?;
        count += cmp.comparisons.len();
        worst_eq = worst_eq.max(cmp.max_error());
    }
    let mut r = VerifyRow::new(format!("decomposition identities over {} random SCMs", cfg.random_scms));
    r.estimate = Some(worst_dec);
    rows.push(r.judged(worst_dec, 1e-12));
    let mut r = VerifyRow::new(format!("identification vs oracle ({count} comparisons)"));
    r.estimate = Some(worst_eq);
    rows.push(r.judged(worst_eq, 1e-9));

    let mut r = VerifyRow::new("JOBS II application values");
    r.note = "depend on unstated preprocessing of the outcome scale; excluded".into();
    rows.push(r);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_logit_is_a_pmf_and_increasing() {
        let a = [1.0, -0.5];
        let lo = ordered_logit(&a, 0.0);
        let hi = ordered_logit(&a, 1.0);
        assert!((lo.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Survival at each level increases with the score.
        let surv = |p: &[f64], k: usize| p[k..].iter().sum::<f64>();
        assert!(surv(&hi, 1) > surv(&lo, 1) && surv(&hi, 2) > surv(&lo, 2));
    }

    #[test]
    fn generators_compile() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            random_scm(&mut rng, false).compile().unwrap();
            random_lexicographic_scm(&mut rng).compile().unwrap();
        }
        let d = random_binary_dataset(&mut rng, 50);
        assert_eq!(d.len(), 50);
    }

    #[test]
    fn monotone_generator_passes_the_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, r) = monotone_scm(&mut rng).unwrap();
        assert!(r.holds() && r.outcome_events_nested);
    }

    #[test]
    fn oracle_comparisons_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut families = std::collections::BTreeMap::new();
        let mut skipped = 0;
        for k in 0..20 {
            let scm = if k % 2 == 0 {
                monotone_scm(&mut rng).unwrap().0
            } else {
                random_lexicographic_scm(&mut rng).compile().unwrap()
            };
            let res = compare_with_oracle(&scm, &mut rng, 4).unwrap();
            skipped += res.skipped;
            for c in res.comparisons {
                assert!(c.error() <= 1e-9, "{c:?}\n{:?}", scm.spec());
                *families.entry((c.family, c.case)).or_insert(0) += 1;
            }
        }
        eprintln!("{families:?} skipped {skipped}");
        for f in ["controlled", "cd-evidence", "natural", "natural-evidence", "mediator-evidence"] {
            assert!(families.keys().any(|k| k.0 == f), "{f} never compared");
        }
        assert!(families.keys().any(|k| k.1 == CaseFlag::B));
    }
}
