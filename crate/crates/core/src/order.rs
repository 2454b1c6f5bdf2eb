//! Ordered domains, intervals, evidence and queries.
//!
//! Every column consumed by the estimators is a scalar drawn from a totally
//! ordered numeric domain. `≺` is strict numeric less-than throughout, so two
//! equal outcomes are never "strictly below" one another.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-NaN scalar with a total order.
///
/// Construction normalizes `-0.0` to `0.0`, so equality and ordering agree
/// with exact numeric comparison.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OrderedValue(f64);

impl OrderedValue {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::InvalidQuery(format!("value {v} is not a finite number")));
        }
        Ok(OrderedValue(if v == 0.0 { 0.0 } else { v }))
    }

    /// Infallible constructor for literals known to be finite.
    ///
    /// # Panics
    /// Panics on NaN or infinite input.
    pub fn of(v: f64) -> Self {
        Self::new(v).expect("finite value")
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for OrderedValue {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        OrderedValue::new(v)
    }
}

impl From<OrderedValue> for f64 {
    fn from(v: OrderedValue) -> f64 {
        v.0
    }
}

impl PartialEq for OrderedValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OrderedValue {}

impl PartialOrd for OrderedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for OrderedValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl fmt::Debug for OrderedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for OrderedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A sublevel event `{V ≺ v}` or `{V ⪯ v}` on an ordered column, with the
/// two unbounded conventions: `Empty` (threshold −∞) and `Full` (+∞).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cut {
    Empty,
    Below(OrderedValue),
    AtOrBelow(OrderedValue),
    Full,
}

impl Cut {
    pub fn below(v: f64) -> Cut {
        Cut::Below(OrderedValue::of(v))
    }

    pub fn at_or_below(v: f64) -> Cut {
        Cut::AtOrBelow(OrderedValue::of(v))
    }

    /// Strict or non-strict cut at `v`.
    pub fn at(v: OrderedValue, strict: bool) -> Cut {
        if strict {
            Cut::Below(v)
        } else {
            Cut::AtOrBelow(v)
        }
    }

    #[inline]
    pub fn admits(self, v: OrderedValue) -> bool {
        match self {
            Cut::Empty => false,
            Cut::Below(t) => v < t,
            Cut::AtOrBelow(t) => v <= t,
            Cut::Full => true,
        }
    }

    /// Number of leading elements of an ascending slice admitted by the cut.
    pub fn count_sorted(self, sorted: &[OrderedValue]) -> usize {
        match self {
            Cut::Empty => 0,
            Cut::Below(t) => sorted.partition_point(|v| *v < t),
            Cut::AtOrBelow(t) => sorted.partition_point(|v| *v <= t),
            Cut::Full => sorted.len(),
        }
    }
}

/// `[lower, upper)` or `[lower, upper]`; a missing bound is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    lower: Option<OrderedValue>,
    upper: Option<OrderedValue>,
    upper_closed: bool,
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    #[serde(default)]
    lower: Option<f64>,
    #[serde(default)]
    upper: Option<f64>,
    #[serde(default)]
    upper_closed: bool,
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = Error;
    fn try_from(r: IntervalRepr) -> Result<Self> {
        let lower = r.lower.map(OrderedValue::new).transpose()?;
        let upper = r.upper.map(OrderedValue::new).transpose()?;
        Interval::new(lower, upper, r.upper_closed)
    }
}

impl From<Interval> for IntervalRepr {
    fn from(i: Interval) -> Self {
        IntervalRepr {
            lower: i.lower.map(f64::from),
            upper: i.upper.map(f64::from),
            upper_closed: i.upper_closed,
        }
    }
}

impl Interval {
    pub fn new(
        lower: Option<OrderedValue>,
        upper: Option<OrderedValue>,
        upper_closed: bool,
    ) -> Result<Self> {
        if let (Some(l), Some(u)) = (lower, upper) {
            if l > u {
                return Err(Error::InvalidEvidence(format!(
                    "interval lower bound {l} exceeds upper bound {u}"
                )));
            }
            if l == u && !upper_closed {
                return Err(Error::InvalidEvidence(format!("interval [{l}, {u}) is empty")));
            }
        }
        Ok(Interval {
            lower,
            upper,
            upper_closed: upper.is_some() && upper_closed,
        })
    }

    /// `(−∞, +∞)`.
    pub fn full() -> Self {
        Interval { lower: None, upper: None, upper_closed: false }
    }

    /// `[l, u)`.
    pub fn half_open(l: f64, u: f64) -> Result<Self> {
        Interval::new(Some(OrderedValue::new(l)?), Some(OrderedValue::new(u)?), false)
    }

    /// `[l, u]`.
    pub fn closed(l: f64, u: f64) -> Result<Self> {
        Interval::new(Some(OrderedValue::new(l)?), Some(OrderedValue::new(u)?), true)
    }

    /// The single point `[v, v]`.
    pub fn point(v: f64) -> Result<Self> {
        Interval::closed(v, v)
    }

    /// `[l, +∞)`.
    pub fn at_least(l: f64) -> Result<Self> {
        Interval::new(Some(OrderedValue::new(l)?), None, false)
    }

    /// `(−∞, u)`.
    pub fn below(u: f64) -> Result<Self> {
        Interval::new(None, Some(OrderedValue::new(u)?), false)
    }

    pub fn lower(&self) -> Option<OrderedValue> {
        self.lower
    }

    pub fn upper(&self) -> Option<OrderedValue> {
        self.upper
    }

    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    pub fn is_full(&self) -> bool {
        self.lower.is_none() && self.upper.is_none()
    }

    /// The event `{V ≺ lower}`; always strict.
    pub fn lower_cut(&self) -> Cut {
        match self.lower {
            None => Cut::Empty,
            Some(l) => Cut::Below(l),
        }
    }

    /// The event `{V ≺ upper}` or `{V ⪯ upper}` for a closed upper bound.
    pub fn upper_cut(&self) -> Cut {
        match self.upper {
            None => Cut::Full,
            Some(u) => Cut::at(u, !self.upper_closed),
        }
    }

    pub fn contains(&self, v: OrderedValue) -> bool {
        !self.lower_cut().admits(v) && self.upper_cut().admits(v)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lower {
            None => write!(f, "(-inf, ")?,
            Some(l) => write!(f, "[{l}, ")?,
        }
        match self.upper {
            None => write!(f, "+inf)"),
            Some(u) if self.upper_closed => write!(f, "{u}]"),
            Some(u) => write!(f, "{u})"),
        }
    }
}

/// Factual post-treatment evidence defining a subpopulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// `(X = x*, M = m*, Y ∈ I_Y)`; used by controlled-direct PNS.
    Mediator {
        x: OrderedValue,
        m: OrderedValue,
        y: Interval,
    },
    /// `(X = x*, Y ∈ I_Y)`; used by total, natural-direct and natural-indirect PNS.
    Outcome { x: OrderedValue, y: Interval },
    /// `(X = x*, M ∈ I_M, Y ∈ I_Y)`; requires monotonicity of the mediator
    /// mechanism in the lexicographically ordered exogenous pair.
    MediatorInterval {
        x: OrderedValue,
        m: Interval,
        y: Interval,
    },
}

impl Evidence {
    pub fn x_star(&self) -> OrderedValue {
        match self {
            Evidence::Mediator { x, .. }
            | Evidence::Outcome { x, .. }
            | Evidence::MediatorInterval { x, .. } => *x,
        }
    }

    pub fn y_interval(&self) -> Interval {
        match self {
            Evidence::Mediator { y, .. }
            | Evidence::Outcome { y, .. }
            | Evidence::MediatorInterval { y, .. } => *y,
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            Evidence::Mediator { .. } => "E",
            Evidence::Outcome { .. } => "E'",
            Evidence::MediatorInterval { .. } => "E''",
        }
    }

    /// Drops any mediator information, leaving `(X = x*, Y ∈ I_Y)`.
    pub fn outcome_only(&self) -> Evidence {
        Evidence::Outcome { x: self.x_star(), y: self.y_interval() }
    }
}

/// A PoC query: baseline `x'`, alternative `x`, outcome threshold `y`,
/// optional fixed mediator level, covariate stratum and evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub x_base: OrderedValue,
    pub x_alt: OrderedValue,
    pub y: OrderedValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_fixed: Option<OrderedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratum: Option<Vec<OrderedValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
}

impl Query {
    pub fn new(x_base: f64, x_alt: f64, y: f64) -> Self {
        Query {
            x_base: OrderedValue::of(x_base),
            x_alt: OrderedValue::of(x_alt),
            y: OrderedValue::of(y),
            m_fixed: None,
            stratum: None,
            evidence: None,
        }
    }

    pub fn with_mediator(mut self, m: f64) -> Self {
        self.m_fixed = Some(OrderedValue::of(m));
        self
    }

    pub fn with_stratum(mut self, c: &[f64]) -> Self {
        self.stratum = Some(c.iter().map(|v| OrderedValue::of(*v)).collect());
        self
    }

    pub fn with_evidence(mut self, e: Evidence) -> Self {
        self.evidence = Some(e);
        self
    }

    /// The outcome event `{Y ≺ y}` shared by every identification formula.
    pub fn threshold(&self) -> Cut {
        Cut::Below(self.y)
    }

    pub fn stratum(&self) -> &[OrderedValue] {
        self.stratum.as_deref().unwrap_or(&[])
    }

    pub(crate) fn require_m(&self) -> Result<OrderedValue> {
        self.m_fixed
            .ok_or_else(|| Error::InvalidQuery("controlled-direct PNS needs a fixed mediator value".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_nan_and_normalizes_negative_zero() {
        assert!(OrderedValue::new(f64::NAN).is_err());
        assert!(OrderedValue::new(f64::INFINITY).is_err());
        let z = OrderedValue::of(-0.0);
        assert_eq!(z, OrderedValue::of(0.0));
        assert_eq!(z.get().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::half_open(2.0, 1.0).is_err());
        assert!(Interval::half_open(1.0, 1.0).is_err());
        let p = Interval::point(1.0).unwrap();
        assert!(p.contains(OrderedValue::of(1.0)));
        assert!(!p.contains(OrderedValue::of(1.5)));
        let h = Interval::half_open(1.5, 2.5).unwrap();
        assert!(h.contains(OrderedValue::of(1.5)));
        assert!(!h.contains(OrderedValue::of(2.5)));
        assert_eq!(Interval::full().lower_cut(), Cut::Empty);
        assert_eq!(Interval::full().upper_cut(), Cut::Full);
        assert_eq!(p.upper_cut(), Cut::at_or_below(1.0));
        assert_eq!(h.upper_cut(), Cut::below(2.5));
    }

    #[test]
    fn interval_serde_rejects_empty() {
        let ok: Interval = serde_json::from_str(r#"{"lower":1.0,"upper":2.0}"#).unwrap();
        assert_eq!(ok, Interval::half_open(1.0, 2.0).unwrap());
        assert!(serde_json::from_str::<Interval>(r#"{"lower":1.0,"upper":1.0}"#).is_err());
        let full: Interval = serde_json::from_str("{}").unwrap();
        assert!(full.is_full());
    }

    #[test]
    fn evidence_roundtrips_through_json() {
        let e = Evidence::Mediator {
            x: OrderedValue::of(1.0),
            m: OrderedValue::of(5.0),
            y: Interval::half_open(1.5, 2.5).unwrap(),
        };
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains(r#""kind":"mediator""#));
        let back: Evidence = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.outcome_only().kind_label(), "E'");
    }

    #[test]
    fn count_sorted_matches_admits() {
        let v: Vec<_> = [0.0, 1.0, 1.0, 2.0].iter().map(|x| OrderedValue::of(*x)).collect();
        assert_eq!(Cut::below(1.0).count_sorted(&v), 1);
        assert_eq!(Cut::at_or_below(1.0).count_sorted(&v), 3);
        assert_eq!(Cut::Empty.count_sorted(&v), 0);
        assert_eq!(Cut::Full.count_sorted(&v), 4);
    }

    proptest! {
        // Total-order axioms, checked exhaustively on small random samples.
        #[test]
        fn total_order_axioms(xs in prop::collection::vec(-5i32..5, 1..12)) {
            let vals: Vec<_> = xs.iter().map(|x| OrderedValue::of(*x as f64 * 0.5)).collect();
            for a in &vals {
                prop_assert!(a <= a);
                for b in &vals {
                    prop_assert!(a <= b || b <= a);
                    if a <= b && b <= a { prop_assert_eq!(a, b); }
                    prop_assert_eq!(!(a <= b), a > b);
                    for c in &vals {
                        if a <= b && b <= c { prop_assert!(a <= c); }
                    }
                }
            }
        }
    }
}
