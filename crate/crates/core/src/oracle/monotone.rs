//! Exhaustive monotonicity checks over the exogenous partition.

use serde::{Deserialize, Serialize};

use super::exact::{nested, Cell, Grid};
use super::{Scm, World};
use crate::error::Result;
use crate::order::{Cut, OrderedValue};

/// A pair of counterfactual outcomes that cross at threshold `y`: each is below
/// `y` while the other is not, both with positive probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `"4'"` (fixed mediator) or `"5'"` (natural mediator).
    pub assumption: String,
    pub covariates: Vec<f64>,
    pub y: f64,
    pub first: String,
    pub second: String,
    /// `P(first ≺ y ⪯ second | c)`.
    pub forward: f64,
    /// `P(second ≺ y ⪯ first | c)`.
    pub backward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub violations: Vec<Violation>,
    pub pairs_checked: usize,
    /// All events `{Y_{a,M_b} ≺ y}` are nested within each covariate row,
    /// i.e. one ordering of `(U_M, U_Y)` makes every one of them a prefix.
    pub outcome_events_nested: bool,
    /// The same holds after adding the mediator events `{M_b ≺ m}` and their
    /// unions and intersections with `{Y_b ≺ y}` (mediator-interval evidence).
    pub mediator_events_nested: bool,
}

impl MonotonicityReport {
    /// No crossing pair was found.
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn check(scm: &Scm) -> Result<MonotonicityReport> {
    let levels = scm.treatment_support()?;
    let grid = Grid::build(scm, &[], &levels, &[])?;
    let mut ys: Vec<OrderedValue> = grid.rows.iter().flat_map(|r| r.uy.iter().flat_map(|u| u.1.iter().copied())).collect();
    ys.sort();
    ys.dedup();

    let mut violations = Vec::new();
    let mut pairs = 0usize;
    let mut outcome_nested = true;
    let mut mediator_nested = true;
    let nl = grid.levels.len();
    for (ri, row) in grid.rows.iter().enumerate() {
        let cells: Vec<Cell> = grid.cells().filter(|c| std::ptr::eq(c.row, &grid.rows[ri])).collect();
        let w: Vec<f64> = cells.iter().map(|c| c.w).collect();
        let cov: Vec<f64> = scm.rows[row.ci].0.iter().map(|v| v.get()).collect();
        let label_xm = |a: usize, m: OrderedValue| format!("Y_{{x={},m={}}}", grid.levels[a], m);
        let label_nat = |a: usize, b: usize| format!("Y_{{x={},M_{{x={}}}}}", grid.levels[a], grid.levels[b]);

        let mut cross = |assumption: &str, y: OrderedValue, e1: &[bool], e2: &[bool], l1: String, l2: String| {
            pairs += 1;
            let (mut f, mut b) = (0.0, 0.0);
            for ((wi, p), q) in w.iter().zip(e1).zip(e2) {
                if *p && !*q {
                    f += wi;
                }
                if *q && !*p {
                    b += wi;
                }
            }
            if f > 0.0 && b > 0.0 {
                violations.push(Violation {
                    assumption: assumption.into(),
                    covariates: cov.clone(),
                    y: y.get(),
                    first: l1,
                    second: l2,
                    forward: f,
                    backward: b,
                });
            }
        };

        let mut chain: Vec<Vec<bool>> = Vec::new();
        for &y in &ys {
            let cut = Cut::Below(y);
            for &m in &grid.mvals {
                let ev: Vec<Vec<bool>> = (0..nl)
                    .map(|a| cells.iter().map(|c| c.y_at(a, m).map(|v| cut.admits(v))).collect::<Result<_>>())
                    .collect::<Result<_>>()?;
                for a in 0..nl {
                    for b in a + 1..nl {
                        cross("4'", y, &ev[a], &ev[b], label_xm(a, m), label_xm(b, m));
                    }
                }
            }
            let mut fam = Vec::new();
            for a in 0..nl {
                for b in 0..nl {
                    let ev: Vec<bool> = cells
                        .iter()
                        .map(|c| c.y_at(a, c.m_at(b)).map(|v| cut.admits(v)))
                        .collect::<Result<_>>()?;
                    fam.push(((a, b), ev));
                }
            }
            for i in 0..fam.len() {
                for j in i + 1..fam.len() {
                    let ((a1, b1), (a2, b2)) = (fam[i].0, fam[j].0);
                    cross("5'", y, &fam[i].1, &fam[j].1, label_nat(a1, b1), label_nat(a2, b2));
                }
            }
            chain.extend(fam.into_iter().map(|f| f.1));
        }
        outcome_nested &= nested(&w, &chain);

        for b in 0..nl {
            let xb = grid.levels[b];
            for &m in &grid.mvals {
                let mcut = Cut::Below(m);
                let below_m: Vec<bool> = cells.iter().map(|c| Ok(mcut.admits(c.m(xb)?))).collect::<Result<_>>()?;
                for &y in &ys {
                    let cut = Cut::Below(y);
                    let below_y: Vec<bool> = cells
                        .iter()
                        .map(|c| Ok(cut.admits(c.y_cross(xb, xb)?)))
                        .collect::<Result<_>>()?;
                    chain.push(below_y.iter().zip(&below_m).map(|(p, q)| *p || *q).collect());
                    chain.push(below_y.iter().zip(&below_m).map(|(p, q)| *p && *q).collect());
                }
                chain.push(below_m);
            }
        }
        mediator_nested &= nested(&w, &chain);
    }
    Ok(MonotonicityReport {
        violations,
        pairs_checked: pairs,
        outcome_events_nested: outcome_nested,
        mediator_events_nested: mediator_nested,
    })
}

#[cfg(test)]
mod tests {
    use crate::oracle::{Mechanism, ScmSpec};

    #[test]
    fn reference_scm_is_monotone() {
        let r = ScmSpec::reference_bernoulli().compile().unwrap().check_monotonicity().unwrap();
        assert!(r.holds(), "{:?}", r.violations);
        assert!(r.outcome_events_nested);
        assert!(r.pairs_checked > 0);
    }

    #[test]
    fn negative_mediator_weight_violates_natural_monotonicity() {
        let mut s = ScmSpec::reference_bernoulli();
        s.mediator = Mechanism::linear_bernoulli(0.5, &[("x", 0.4)]);
        s.outcome = Mechanism::linear_bernoulli(0.5, &[("x", 0.4), ("m", -0.6)]);
        let r = s.compile().unwrap().check_monotonicity().unwrap();
        assert!(!r.holds());
        assert!(r.violations.iter().all(|v| v.assumption == "5'"));
        assert!(!r.outcome_events_nested);
    }

    #[test]
    fn constant_outcome_has_no_violations() {
        let mut s = ScmSpec::reference_bernoulli();
        s.outcome = Mechanism::Constant { value: 3.0 };
        let r = s.compile().unwrap().check_monotonicity().unwrap();
        assert!(r.holds());
        assert!(r.outcome_events_nested && r.mediator_events_nested);
    }
}
