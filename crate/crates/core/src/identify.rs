//! Identification formulas for controlled-direct, natural-direct and
//! natural-indirect PNS, with and without evidence, and the PN/PS families.
//!
//! All operations are generic over [`CdfSource`], so the same code runs on
//! empirical CDFs and on the oracle's analytic CDFs.
//!
//! Notation used below, for a query `(y; x', x)`:
//! `a = P(Y ≺ y | X = x')`, `b = P(Y ≺ y | X = x)`, `rho = rho(y; x', x)`,
//! and for evidence with outcome interval `[y_l, y_u)` observed at `x*`:
//! `l = P(Y ≺ y_l | X = x*)`, `u = P(Y ≺ y_u | X = x*)`.
//! Under monotonicity every counterfactual sublevel event is a prefix of one
//! ordering of the exogenous noise, so each quantity is the length of an
//! intersection of quantile intervals: T-PNS lives on `[b, a)`, the direct
//! part additionally below `rho`, the indirect part at or above it.

use serde::{Deserialize, Serialize};

use crate::ecdf::CdfSource;
use crate::error::{Error, Result};
use crate::order::{Cut, Evidence, Interval, OrderedValue, Query};

/// Attached to every result computed from mediator-interval evidence.
pub const A1_WARNING: &str = "mediator-interval evidence assumes the mediator mechanism is monotone in the \
lexicographically ordered exogenous pair (U_M, U_Y); linear-Gaussian and additive-noise SCMs violate this";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseFlag {
    /// No evidence.
    #[serde(rename = "unconditional")]
    Unconditional,
    /// Evidence with positive probability: ratio formula.
    A,
    /// Evidence with zero probability: indicator formula.
    B,
}

impl std::fmt::Display for CaseFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseFlag::Unconditional => "unconditional",
            CaseFlag::A => "A",
            CaseFlag::B => "B",
        })
    }
}

/// Total, natural-direct and natural-indirect parts with their proportions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PnsTriple {
    pub t_pns: f64,
    pub nd_pns: f64,
    pub ni_pns: f64,
    /// `nd / t`; `None` when `t = 0`.
    pub prop_nd: Option<f64>,
    /// `ni / t`; `None` when `t = 0`.
    pub prop_ni: Option<f64>,
    pub case: CaseFlag,
}

impl PnsTriple {
    fn new(t: f64, nd: f64, ni: f64, case: CaseFlag) -> Self {
        let parts = nd + ni;
        let (prop_nd, prop_ni) = if t > 0.0 && parts > 0.0 {
            (Some(nd / parts), Some(ni / parts))
        } else {
            (None, None)
        };
        PnsTriple { t_pns: t, nd_pns: nd, ni_pns: ni, prop_nd, prop_ni, case }
    }
}

/// Intermediate terms of controlled-direct PNS with evidence `(x*, m*, I_Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdEvidenceTerms {
    /// `P(Y ≺ y | X = x', M = m)`.
    pub a: f64,
    /// `P(Y ≺ y | X = x, M = m)`.
    pub b: f64,
    pub l: f64,
    pub u: f64,
    pub alpha: f64,
    /// `P(Y ∈ I_Y | X = x*, M = m*)`.
    pub beta: f64,
}

/// Intermediate terms of natural PNS with evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTerms {
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub l: f64,
    pub u: f64,
    pub gamma_t: f64,
    pub gamma_d: f64,
    pub gamma_i: f64,
    /// Probability of the evidence given `X = x*`.
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `max{a - b, 0}` for the fixed-mediator CDFs.
///
/// The displayed identification theorem for this quantity reads `min{·, 0}`;
/// that is a sign slip (it would never be positive). The lemma it is derived
/// from, and its proof, give `max{·, 0}`, which is what is implemented.
pub fn cd_pns<S: CdfSource + ?Sized>(src: &S, q: &Query) -> Result<f64> {
    let m = q.require_m()?;
    let y = q.threshold();
    let a = src.cdf_y_given_xm(y, q.x_base, m)?;
    let b = src.cdf_y_given_xm(y, q.x_alt, m)?;
    Ok((a - b).max(0.0))
}

/// T/ND/NI-PNS from the three CDF values; exposed for property testing.
pub fn natural_from_cdfs(a: f64, b: f64, rho: f64) -> PnsTriple {
    let t = (a - b).max(0.0);
    let nd = (a.min(rho) - b).max(0.0);
    let ni = (a - b.max(rho)).max(0.0);
    PnsTriple::new(t, nd, ni, CaseFlag::Unconditional)
}

pub fn natural_pns<S: CdfSource + ?Sized>(src: &S, q: &Query) -> Result<PnsTriple> {
    let y = q.threshold();
    let a = src.cdf_y_given_x(y, q.x_base)?;
    let b = src.cdf_y_given_x(y, q.x_alt)?;
    let rho = src.rho(y, q.x_base, q.x_alt)?;
    Ok(natural_from_cdfs(a, b, rho))
}

/// Ratio or indicator form given all evidence terms.
pub fn natural_from_evidence_terms(a: f64, b: f64, rho: f64, l: f64, u: f64, delta: f64) -> (PnsTriple, EvidenceTerms) {
    let hi = a.min(u);
    let lo = b.max(l);
    let gamma_t = hi - lo;
    let gamma_d = hi.min(rho) - lo;
    let gamma_i = hi - lo.max(rho);
    let triple = if delta > 0.0 {
        let f = |g: f64| (g / delta).clamp(0.0, 1.0);
        PnsTriple::new(f(gamma_t), f(gamma_d), f(gamma_i), CaseFlag::A)
    } else {
        let t = b <= l && l < a;
        let nd = t && l < rho;
        let ni = t && rho <= l;
        PnsTriple::new(indicator(t), indicator(nd), indicator(ni), CaseFlag::B)
    };
    let terms = EvidenceTerms {
        a,
        b,
        rho,
        l,
        u,
        gamma_t,
        gamma_d,
        gamma_i,
        delta,
        warnings: Vec::new(),
    };
    (triple, terms)
}

/// Controlled-direct PNS given evidence `(x*, m*, I_Y)`.
pub fn cd_pns_with_evidence<S: CdfSource + ?Sized>(
    src: &S,
    q: &Query,
    e: &Evidence,
) -> Result<(f64, CaseFlag, CdEvidenceTerms)> {
    let Evidence::Mediator { x: xs, m: ms, y: iy } = e else {
        return Err(Error::InvalidEvidence(format!(
            "controlled-direct PNS needs evidence (x*, m*, I_Y), got kind {}",
            e.kind_label()
        )));
    };
    let m = q.require_m()?;
    let y = q.threshold();
    let a = src.cdf_y_given_xm(y, q.x_base, m)?;
    let b = src.cdf_y_given_xm(y, q.x_alt, m)?;
    let l = src.cdf_y_given_xm(iy.lower_cut(), *xs, *ms)?;
    let u = src.cdf_y_given_xm(iy.upper_cut(), *xs, *ms)?;
    let beta = src.interval_mass_given_xm(*xs, *ms, iy)?;
    let alpha = a.min(u) - b.max(l);
    let (value, case) = if beta > 0.0 {
        ((alpha / beta).clamp(0.0, 1.0), CaseFlag::A)
    } else {
        (indicator(b <= l && l < a), CaseFlag::B)
    };
    Ok((value, case, CdEvidenceTerms { a, b, l, u, alpha, beta }))
}

/// T/ND/NI-PNS given evidence `(x*, I_Y)`.
pub fn natural_pns_with_evidence<S: CdfSource + ?Sized>(
    src: &S,
    q: &Query,
    e: &Evidence,
) -> Result<(PnsTriple, EvidenceTerms)> {
    let Evidence::Outcome { x: xs, y: iy } = e else {
        return Err(Error::InvalidEvidence(format!(
            "natural PNS with evidence needs evidence (x*, I_Y), got kind {}",
            e.kind_label()
        )));
    };
    let y = q.threshold();
    let a = src.cdf_y_given_x(y, q.x_base)?;
    let b = src.cdf_y_given_x(y, q.x_alt)?;
    let rho = src.rho(y, q.x_base, q.x_alt)?;
    let l = src.cdf_y_given_x(iy.lower_cut(), *xs)?;
    let u = src.cdf_y_given_x(iy.upper_cut(), *xs)?;
    let delta = src.box_mass_given_x(*xs, iy, &Interval::full())?;
    Ok(natural_from_evidence_terms(a, b, rho, l, u, delta))
}

/// T/ND/NI-PNS given evidence `(x*, I_M, I_Y)`.
///
/// The evidence box `{M ∈ [m_l, m_u), Y ∈ [y_l, y_u)}` is bounded above by the
/// joint event `{Y ≺ y_u, M ≺ m_u}` and below by the union
/// `{Y ≺ y_l} ∪ {M ≺ m_l}`, so
/// `u = P(Y ≺ y_u, M ≺ m_u | x*)` and
/// `l = P(Y ≺ y_l | x*) + P(M ≺ m_l | x*) - P(Y ≺ y_l, M ≺ m_l | x*)`.
/// With `I_M` the whole line this is exactly the outcome-only evidence case.
pub fn natural_pns_with_mediator_evidence<S: CdfSource + ?Sized>(
    src: &S,
    q: &Query,
    e: &Evidence,
) -> Result<(PnsTriple, EvidenceTerms)> {
    let Evidence::MediatorInterval { x: xs, m: im, y: iy } = e else {
        return Err(Error::InvalidEvidence(format!(
            "mediator-interval evidence (x*, I_M, I_Y) expected, got kind {}",
            e.kind_label()
        )));
    };
    let y = q.threshold();
    let a = src.cdf_y_given_x(y, q.x_base)?;
    let b = src.cdf_y_given_x(y, q.x_alt)?;
    let rho = src.rho(y, q.x_base, q.x_alt)?;
    let u = src.joint_cdf_ym_given_x(iy.upper_cut(), im.upper_cut(), *xs)?;
    let l = if im.lower().is_none() {
        src.cdf_y_given_x(iy.lower_cut(), *xs)?
    } else {
        let fy = src.cdf_y_given_x(iy.lower_cut(), *xs)?;
        let fm = src.joint_cdf_ym_given_x(Cut::Full, im.lower_cut(), *xs)?;
        let fym = src.joint_cdf_ym_given_x(iy.lower_cut(), im.lower_cut(), *xs)?;
        (fy + fm - fym).clamp(0.0, 1.0)
    };
    let delta = src.box_mass_given_x(*xs, iy, im)?;
    let (triple, mut terms) = natural_from_evidence_terms(a, b, rho, l, u, delta);
    terms.warnings.push(A1_WARNING.to_string());
    Ok((triple, terms))
}

/// Outcome evidence `(x* = x, Y ⪰ y)` under which T-PNS is PN.
pub fn pn_evidence(q: &Query) -> Evidence {
    Evidence::Outcome {
        x: q.x_alt,
        y: Interval::new(Some(q.y), None, false).expect("unbounded above"),
    }
}

/// Outcome evidence `(x* = x', Y ≺ y)` under which T-PNS is PS.
pub fn ps_evidence(q: &Query) -> Evidence {
    Evidence::Outcome {
        x: q.x_base,
        y: Interval::new(None, Some(q.y), false).expect("unbounded below"),
    }
}

/// `(PN, ND-PN, NI-PN)`, computed as natural PNS with evidence `(x, Y ⪰ y)`.
pub fn pn_family<S: CdfSource + ?Sized>(src: &S, q: &Query) -> Result<PnsTriple> {
    natural_pns_with_evidence(src, q, &pn_evidence(q)).map(|(t, _)| t)
}

/// `(PS, ND-PS, NI-PS)`, computed as natural PNS with evidence `(x', Y ≺ y)`.
pub fn ps_family<S: CdfSource + ?Sized>(src: &S, q: &Query) -> Result<PnsTriple> {
    natural_pns_with_evidence(src, q, &ps_evidence(q)).map(|(t, _)| t)
}

/// Checks that the query's levels are observed; used before estimation.
pub fn check_support<S: CdfSource + ?Sized>(src: &S, levels: &[OrderedValue]) -> Result<()> {
    for &x in levels {
        src.cdf_y_given_x(Cut::Full, x)?;
    }
    Ok(())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
