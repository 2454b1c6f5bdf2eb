//! Exact ground truth by rectangle partition of the `(u_M, u_Y)` square.

use std::collections::BTreeMap;

use super::{
    effect_terms, effects_from, evidence_holds, outcomes, pmf, Ctx, MethodTag, Scm, Truth, TruthReport, World,
};
use crate::ecdf::CdfSource;
use crate::error::{Error, Result};
use crate::identify::CaseFlag;
use crate::order::{Cut, Evidence, Interval, OrderedValue, Query};

/// Piecewise-constant counterfactual tables for one covariate row.
pub(crate) struct RowGrid {
    /// Index into the SCM's covariate rows.
    pub ci: usize,
    /// Probability of the row within the stratum.
    pub prob: f64,
    /// `P(X = level | c)`.
    pub px: Vec<f64>,
    /// `(width, M_x per level)` over the `u_M` intervals.
    pub um: Vec<(f64, Vec<OrderedValue>)>,
    /// `(width, Y_{x,m} per level × mediator value)` over the `u_Y` intervals.
    pub uy: Vec<(f64, Vec<OrderedValue>)>,
}

pub(crate) struct Grid {
    pub levels: Vec<OrderedValue>,
    pub mvals: Vec<OrderedValue>,
    pub rows: Vec<RowGrid>,
}

/// One rectangle of the partition.
#[derive(Clone, Copy)]
pub(crate) struct Cell<'a> {
    grid: &'a Grid,
    pub row: &'a RowGrid,
    m: &'a [OrderedValue],
    y: &'a [OrderedValue],
    /// Row probability times rectangle area.
    pub w: f64,
}

impl Grid {
    pub fn build(scm: &Scm, stratum: &[OrderedValue], levels: &[OrderedValue], extra_m: &[OrderedValue]) -> Result<Grid> {
        scm.require_threshold()?;
        let rows = scm.stratum_rows(stratum)?;
        let mut levels = levels.to_vec();
        levels.sort();
        levels.dedup();

        let mut med_steps = Vec::with_capacity(rows.len());
        let mut mvals: Vec<OrderedValue> = extra_m.to_vec();
        for &(ci, _) in &rows {
            let c = &scm.rows[ci].0;
            let per_level = levels
                .iter()
                .map(|x| scm.mediator.steps(&Ctx { x: x.get(), m: 0.0, c }))
                .collect::<Result<Vec<_>>>()?;
            for s in &per_level {
                mvals.extend(pmf(s).into_iter().map(|p| p.0));
            }
            med_steps.push(per_level);
        }
        mvals.sort();
        mvals.dedup();

        let mut out = Vec::with_capacity(rows.len());
        for (&(ci, prob), msteps) in rows.iter().zip(&med_steps) {
            let c = &scm.rows[ci].0;
            let tpmf = pmf(&scm.treatment.steps(&Ctx { x: 0.0, m: 0.0, c })?);
            let px = levels
                .iter()
                .map(|x| tpmf.iter().find(|p| p.0 == *x).map_or(0.0, |p| p.1))
                .collect();

            let um = intervals(msteps.iter())
                .into_iter()
                .map(|(w, mid)| (w, msteps.iter().map(|s| OrderedValue::of(eval_steps(s, mid))).collect()))
                .collect();

            let mut ysteps = Vec::with_capacity(levels.len() * mvals.len());
            for x in &levels {
                for m in &mvals {
                    ysteps.push(scm.outcome.steps(&Ctx { x: x.get(), m: m.get(), c })?);
                }
            }
            let uy = intervals(ysteps.iter())
                .into_iter()
                .map(|(w, mid)| (w, ysteps.iter().map(|s| OrderedValue::of(eval_steps(s, mid))).collect()))
                .collect();
            out.push(RowGrid { ci, prob, px, um, uy });
        }
        Ok(Grid { levels, mvals, rows: out })
    }

    pub fn level_index(&self, x: OrderedValue) -> Result<usize> {
        self.levels
            .binary_search(&x)
            .map_err(|_| Error::InvalidQuery(format!("treatment level {x} is not part of this partition")))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> + '_ {
        self.rows.iter().flat_map(move |row| {
            row.um.iter().flat_map(move |(wm, m)| {
                row.uy.iter().map(move |(wy, y)| Cell { grid: self, row, m, y, w: row.prob * wm * wy })
            })
        })
    }
}

/// Breakpoints of all step functions, as `(width, midpoint)` of each piece.
fn intervals<'a>(steps: impl Iterator<Item = &'a Vec<(f64, f64)>>) -> Vec<(f64, f64)> {
    let mut pts = vec![0.0, 1.0];
    for s in steps {
        pts.extend(s.iter().map(|p| p.0));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .collect()
}

fn eval_steps(steps: &[(f64, f64)], u: f64) -> f64 {
    for k in (0..steps.len()).rev() {
        if u < steps[k].0 {
            return steps[k].1;
        }
    }
    steps[0].1
}

impl Cell<'_> {
    pub fn px(&self, li: usize) -> f64 {
        self.row.px[li]
    }

    pub fn m_at(&self, li: usize) -> OrderedValue {
        self.m[li]
    }

    pub fn y_at(&self, li: usize, m: OrderedValue) -> Result<OrderedValue> {
        let di = self
            .grid
            .mvals
            .binary_search(&m)
            .map_err(|_| Error::InvalidQuery(format!("mediator value {m} is not part of this partition")))?;
        Ok(self.y[li * self.grid.mvals.len() + di])
    }
}

impl World for Cell<'_> {
    fn m(&self, x: OrderedValue) -> Result<OrderedValue> {
        Ok(self.m[self.grid.level_index(x)?])
    }

    fn y(&self, x: OrderedValue, m: OrderedValue) -> Result<OrderedValue> {
        self.y_at(self.grid.level_index(x)?, m)
    }
}

fn query_levels(q: &Query, e: Option<&Evidence>) -> Vec<OrderedValue> {
    let mut v = vec![q.x_base, q.x_alt];
    v.extend(e.map(|e| e.x_star()));
    v
}

fn query_mediators(q: &Query, e: Option<&Evidence>) -> Vec<OrderedValue> {
    let mut v: Vec<OrderedValue> = q.m_fixed.into_iter().collect();
    if let Some(Evidence::Mediator { m, .. }) = e {
        v.push(*m);
    }
    v
}

fn exact(value: f64) -> Option<Truth> {
    Some(Truth { value, se: 0.0 })
}

pub(crate) fn truth(scm: &Scm, q: &Query, e: Option<&Evidence>) -> Result<TruthReport> {
    let grid = Grid::build(scm, q.stratum(), &query_levels(q, e), &query_mediators(q, e))?;
    let xs = e.map(|e| grid.level_index(e.x_star())).transpose()?;
    let (mut mass, mut t, mut nd, mut ni, mut cd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut eff = [0.0; 6];
    for cell in grid.cells() {
        let mut w = cell.w;
        if let (Some(e), Some(li)) = (e, xs) {
            w *= cell.px(li);
            if w == 0.0 || !evidence_holds(&cell, e)? {
                continue;
            }
        } else {
            for (acc, v) in eff.iter_mut().zip(effect_terms(&cell, q)?) {
                *acc += w * v;
            }
        }
        mass += w;
        let o = outcomes(&cell, q)?;
        if o.t {
            t += w;
        }
        if o.nd {
            nd += w;
        }
        if o.ni {
            ni += w;
        }
        if o.cd == Some(true) {
            cd += w;
        }
    }
    let (norm, case) = match e {
        None => (1.0, CaseFlag::Unconditional),
        Some(e) => {
            if mass == 0.0 {
                return Err(Error::Conditioning(format!(
                    "evidence {} at x* = {} has zero probability under the SCM",
                    e.kind_label(),
                    e.x_star()
                )));
            }
            (mass, CaseFlag::A)
        }
    };
    Ok(TruthReport {
        method: MethodTag::Exact,
        samples: None,
        accepted: None,
        case,
        t_pns: exact(t / norm),
        nd_pns: exact(nd / norm),
        ni_pns: exact(ni / norm),
        cd_pns: q.m_fixed.and_then(|_| exact(cd / norm)),
        effects: e.is_none().then(|| effects_from(eff, q.m_fixed.is_some())),
    })
}

/// Whether `events` (membership flags per weighted cell) form a chain under
/// inclusion, ignoring zero-weight cells.
pub(crate) fn nested(weights: &[f64], events: &[Vec<bool>]) -> bool {
    let mut order: Vec<(f64, usize)> = events
        .iter()
        .enumerate()
        .map(|(i, ev)| (weights.iter().zip(ev).filter(|(_, b)| **b).map(|(w, _)| w).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.windows(2).all(|p| {
        let (small, big) = (&events[p[0].1], &events[p[1].1]);
        weights.iter().zip(small.iter().zip(big)).all(|(w, (s, b))| *w == 0.0 || !*s || *b)
    })
}

/// Per-cell weights and membership in the query's sublevel events:
/// `[0..3]` are `Y_{x'} ≺ y`, `Y_x ≺ y`, `Y_{x',M_x} ≺ y` (natural) or the
/// fixed-m pair (controlled direct), `[3]` the lower and `[4]` the upper
/// evidence event. Mediator evidence zeroes cells with `M_{x*} ≠ m*`.
fn query_events(grid: &Grid, q: &Query, e: Option<&Evidence>) -> Result<(Vec<f64>, Vec<Vec<bool>>)> {
    let y = q.threshold();
    let cd_mode = q.m_fixed.is_some() && e.is_none_or(|e| matches!(e, Evidence::Mediator { .. }));
    let li = e.map(|e| grid.level_index(e.x_star())).transpose()?;
    let mut weights = Vec::new();
    let mut events: Vec<Vec<bool>> = vec![Vec::new(); if e.is_some() { 5 } else { 3 }];
    for cell in grid.cells() {
        let mut w = cell.w * li.map_or(1.0, |li| cell.px(li));
        let mut flags = if cd_mode {
            let m = q.require_m()?;
            vec![y.admits(cell.y(q.x_base, m)?), y.admits(cell.y(q.x_alt, m)?), false]
        } else {
            vec![
                y.admits(cell.y_cross(q.x_base, q.x_base)?),
                y.admits(cell.y_cross(q.x_alt, q.x_alt)?),
                y.admits(cell.y_cross(q.x_base, q.x_alt)?),
            ]
        };
        match e {
            None => {}
            Some(Evidence::Mediator { x, m, y: iy }) => {
                if cell.m(*x)? != *m {
                    w = 0.0;
                }
                let v = cell.y(*x, *m)?;
                flags.extend([iy.lower_cut().admits(v), iy.upper_cut().admits(v)]);
            }
            Some(Evidence::Outcome { x, y: iy }) => {
                let v = cell.y_cross(*x, *x)?;
                flags.extend([iy.lower_cut().admits(v), iy.upper_cut().admits(v)]);
            }
            Some(Evidence::MediatorInterval { x, m: im, y: iy }) => {
                let mv = cell.m(*x)?;
                let v = cell.y(*x, mv)?;
                flags.extend([
                    iy.lower_cut().admits(v) || im.lower_cut().admits(mv),
                    iy.upper_cut().admits(v) && im.upper_cut().admits(mv),
                ]);
            }
        }
        weights.push(w);
        for (ev, f) in events.iter_mut().zip(flags) {
            ev.push(f);
        }
    }
    Ok((weights, events))
}

/// Whether the sublevel events entering `q` (and `e`) form a chain.
pub(crate) fn query_nested(scm: &Scm, q: &Query, e: Option<&Evidence>) -> Result<bool> {
    let grid = Grid::build(scm, q.stratum(), &query_levels(q, e), &query_mediators(q, e))?;
    let (weights, events) = query_events(&grid, q, e)?;
    Ok(nested(&weights, &events))
}

pub(crate) fn truth_limit(scm: &Scm, q: &Query, e: &Evidence) -> Result<TruthReport> {
    let grid = Grid::build(scm, q.stratum(), &query_levels(q, Some(e)), &query_mediators(q, Some(e)))?;
    let cd_mode = matches!(e, Evidence::Mediator { .. });
    if cd_mode {
        q.require_m()?;
    }
    let (weights, events) = query_events(&grid, q, Some(e))?;
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::Conditioning(format!(
            "the treatment (and mediator) part of evidence {} has zero probability",
            e.kind_label()
        )));
    }
    if !nested(&weights, &events) {
        return Err(Error::UnsupportedSpec(
            "sublevel events are not nested, so zero-probability evidence has no monotone limit".into(),
        ));
    }
    let lower: f64 = weights.iter().zip(&events[3]).filter(|(_, b)| **b).map(|(w, _)| w).sum::<f64>() / total;

    // Under nesting, the number of events a cell belongs to fixes its rank block.
    let mut blocks: BTreeMap<std::cmp::Reverse<usize>, (f64, usize)> = BTreeMap::new();
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            let k = events.iter().filter(|ev| ev[i]).count();
            let b = blocks.entry(std::cmp::Reverse(k)).or_insert((0.0, i));
            b.0 += w;
        }
    }
    let mut start = 0.0;
    let mut pick = None;
    for (mass, rep) in blocks.values() {
        let end = start + mass / total;
        if end > lower + 1e-12 {
            pick = Some(*rep);
            break;
        }
        start = end;
    }
    let (a, below_alt, r) = match pick {
        Some(i) => (events[0][i], events[1][i], events[2][i]),
        None => (false, true, false),
    };
    let t = a && !below_alt;
    let ind = |b: bool| exact(if b { 1.0 } else { 0.0 });
    let (t_pns, nd_pns, ni_pns, cd_pns) = if cd_mode {
        (None, None, None, ind(t))
    } else {
        (ind(t), ind(t && r), ind(t && !r), None)
    };
    Ok(TruthReport {
        method: MethodTag::Exact,
        samples: None,
        accepted: None,
        case: CaseFlag::B,
        t_pns,
        nd_pns,
        ni_pns,
        cd_pns,
        effects: None,
    })
}

/// `(m, y, probability)` cells of a joint pmf.
type JointPmf = Vec<(OrderedValue, OrderedValue, f64)>;

/// Observational distribution implied by a threshold SCM, as a [`CdfSource`].
#[derive(Clone, Debug)]
pub struct AnalyticCdf {
    levels: Vec<OrderedValue>,
    /// Joint pmf of `(M, Y)` given each treatment level, and `P(X = x)`.
    joint: Vec<(f64, JointPmf)>,
}

impl AnalyticCdf {
    pub(crate) fn new(scm: &Scm, stratum: &[OrderedValue]) -> Result<Self> {
        let levels = scm.treatment_support()?;
        let grid = Grid::build(scm, stratum, &levels, &[])?;
        let mut acc: Vec<BTreeMap<(OrderedValue, OrderedValue), f64>> = vec![BTreeMap::new(); levels.len()];
        let mut px = vec![0.0; levels.len()];
        for cell in grid.cells() {
            for (li, map) in acc.iter_mut().enumerate() {
                let w = cell.w * cell.px(li);
                if w > 0.0 {
                    let m = cell.m_at(li);
                    *map.entry((m, cell.y_at(li, m)?)).or_insert(0.0) += w;
                    px[li] += w;
                }
            }
        }
        let joint = acc
            .into_iter()
            .zip(px)
            .map(|(map, p)| (p, map.into_iter().map(|((m, y), w)| (m, y, w)).collect()))
            .collect();
        Ok(AnalyticCdf { levels: grid.levels, joint })
    }

    pub fn treatment_levels(&self) -> &[OrderedValue] {
        &self.levels
    }

    /// `P(X = x)` within the stratum.
    pub fn treatment_prob(&self, x: OrderedValue) -> f64 {
        self.levels.binary_search(&x).map_or(0.0, |i| self.joint[i].0)
    }

    /// Joint `(m, y, P(M = m, Y = y | X = x))`, sorted by `(m, y)`.
    pub fn joint_pmf(&self, x: OrderedValue) -> Result<&[(OrderedValue, OrderedValue, f64)]> {
        Ok(&self.joint[self.index(x)?].1)
    }

    fn index(&self, x: OrderedValue) -> Result<usize> {
        match self.levels.binary_search(&x) {
            Ok(i) if self.joint[i].0 > 0.0 => Ok(i),
            _ => Err(Error::positivity(format!("P(X = {x}) = 0 under the SCM"))),
        }
    }

    /// `P(event | cond, X = x)`, with `None` when `P(cond, X = x) = 0`.
    fn conditional(
        &self,
        x: OrderedValue,
        cond: impl Fn(OrderedValue, OrderedValue) -> bool,
        event: impl Fn(OrderedValue, OrderedValue) -> bool,
    ) -> Result<Option<f64>> {
        let (mut num, mut den) = (0.0, 0.0);
        for &(m, y, w) in &self.joint[self.index(x)?].1 {
            if cond(m, y) {
                den += w;
                if event(m, y) {
                    num += w;
                }
            }
        }
        Ok((den > 0.0).then(|| num / den))
    }

    fn given_x(&self, x: OrderedValue, event: impl Fn(OrderedValue, OrderedValue) -> bool) -> Result<f64> {
        Ok(self.conditional(x, |_, _| true, event)?.expect("index() checked positivity"))
    }
}

impl CdfSource for AnalyticCdf {
    fn cdf_y_given_x(&self, y: Cut, x: OrderedValue) -> Result<f64> {
        self.given_x(x, |_, v| y.admits(v))
    }

    fn cdf_y_given_xm(&self, y: Cut, x: OrderedValue, m: OrderedValue) -> Result<f64> {
        self.conditional(x, |mv, _| mv == m, |_, v| y.admits(v))?
            .ok_or_else(|| Error::positivity(format!("P(X = {x}, M = {m}) = 0 under the SCM")))
    }

    fn mediator_pmf(&self, m: OrderedValue, x: OrderedValue) -> Result<f64> {
        self.given_x(x, |mv, _| mv == m)
    }

    fn mediator_support(&self, x: OrderedValue) -> Result<Vec<OrderedValue>> {
        let mut v: Vec<OrderedValue> = self.joint[self.index(x)?].1.iter().map(|e| e.0).collect();
        v.dedup();
        Ok(v)
    }

    fn joint_cdf_ym_given_x(&self, y: Cut, m: Cut, x: OrderedValue) -> Result<f64> {
        self.given_x(x, |mv, yv| y.admits(yv) && m.admits(mv))
    }

    fn box_mass_given_x(&self, x: OrderedValue, y: &Interval, m: &Interval) -> Result<f64> {
        self.given_x(x, |mv, yv| y.contains(yv) && m.contains(mv))
    }

    fn interval_mass_given_xm(&self, x: OrderedValue, m: OrderedValue, y: &Interval) -> Result<f64> {
        self.conditional(x, |mv, _| mv == m, |_, v| y.contains(v))?
            .ok_or_else(|| Error::positivity(format!("P(X = {x}, M = {m}) = 0 under the SCM")))
    }
}
