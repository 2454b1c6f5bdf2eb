//! Monte Carlo ground truth and observational sampling.
//!
//! Draws are processed in fixed-size chunks; chunk `k` uses the ChaCha stream
//! `k` of a generator seeded from the master seed, so the output does not
//! depend on how chunks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{effect_terms, effects_from, evidence_holds, outcomes, Ctx, MethodTag, Scm, Truth, TruthReport, World};
use crate::dataset::{Dataset, Schema};
use crate::error::{Error, Result};
use crate::identify::CaseFlag;
use crate::order::{Evidence, OrderedValue, Query};

const CHUNK: u64 = 1 << 16;
const SAMPLE_DOMAIN: u64 = 0x5A4D_504C_0000_0001;
const TRUTH_DOMAIN: u64 = 0x5452_5554_0000_0002;

fn chunk_rng(seed: u64, domain: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(k);
    rng
}

fn chunks(n: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = n.div_ceil(CHUNK) as usize;
    (0..count).into_par_iter().map(move |k| {
        let k = k as u64;
        (k, CHUNK.min(n - k * CHUNK))
    })
}

/// One exogenous draw: covariate row and the three node uniforms.
struct Draw<'a> {
    scm: &'a Scm,
    c: &'a [OrderedValue],
    um: f64,
    uy: f64,
}

impl World for Draw<'_> {
    fn m(&self, x: OrderedValue) -> Result<OrderedValue> {
        let v = self.scm.mediator.value(&Ctx { x: x.get(), m: 0.0, c: self.c }, self.um)?;
        finite(v)
    }

    fn y(&self, x: OrderedValue, m: OrderedValue) -> Result<OrderedValue> {
        let v = self.scm.outcome.value(&Ctx { x: x.get(), m: m.get(), c: self.c }, self.uy)?;
        finite(v)
    }
}

fn finite(v: f64) -> Result<OrderedValue> {
    OrderedValue::new(v).map_err(|_| Error::InvalidSpec("structural function produced a non-finite value".into()))
}

/// Cumulative covariate-row table for inverse-CDF sampling.
struct RowSampler {
    rows: Vec<usize>,
    cum: Vec<f64>,
}

impl RowSampler {
    fn new(rows: Vec<(usize, f64)>) -> Self {
        let mut acc = 0.0;
        let mut cum = Vec::with_capacity(rows.len());
        for r in &rows {
            acc += r.1;
            cum.push(acc);
        }
        RowSampler { rows: rows.into_iter().map(|r| r.0).collect(), cum }
    }

    fn pick(&self, u: f64) -> usize {
        let u = u * self.cum.last().copied().unwrap_or(1.0);
        let i = self.cum.partition_point(|c| *c <= u).min(self.rows.len() - 1);
        self.rows[i]
    }
}

/// `(x, m, y, covariate row)` draws of one chunk.
type Draws = Vec<(f64, f64, f64, usize)>;

pub(crate) fn sample(scm: &Scm, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidSpec("sample size must be positive".into()));
    }
    let rows = RowSampler::new(scm.stratum_rows(&[])?);
    let parts: Vec<Result<Draws>> = chunks(n as u64)
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, SAMPLE_DOMAIN, k);
            let mut out = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let ci = rows.pick(rng.gen());
                let (ux, um, uy): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
                let c = &scm.rows[ci].0;
                let x = scm.treatment.value(&Ctx { x: 0.0, m: 0.0, c }, ux)?;
                let m = scm.mediator.value(&Ctx { x, m: 0.0, c }, um)?;
                let y = scm.outcome.value(&Ctx { x, m, c }, uy)?;
                out.push((x, m, y, ci));
            }
            Ok(out)
        })
        .collect();
    let ncov = scm.spec.covariates.len();
    let (mut x, mut m, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut c = vec![Vec::with_capacity(n); ncov];
    for part in parts {
        for (xv, mv, yv, ci) in part? {
            x.push(xv);
            m.push(mv);
            y.push(yv);
            for (k, col) in c.iter_mut().enumerate() {
                col.push(scm.rows[ci].0[k].get());
            }
        }
    }
    let schema = Schema::default_xmy().with_covariates(scm.spec.covariates.clone());
    Dataset::from_columns(schema, x, m, y, c)
}

#[derive(Clone, Copy, Default)]
struct Tally {
    accepted: u64,
    t: u64,
    nd: u64,
    ni: u64,
    cd: u64,
    eff: [f64; 6],
}

impl Tally {
    fn merge(mut self, o: &Tally) -> Tally {
        self.accepted += o.accepted;
        self.t += o.t;
        self.nd += o.nd;
        self.ni += o.ni;
        self.cd += o.cd;
        for (a, b) in self.eff.iter_mut().zip(o.eff) {
            *a += b;
        }
        self
    }
}

pub(crate) fn truth(scm: &Scm, q: &Query, e: Option<&Evidence>, n: u64, seed: u64) -> Result<TruthReport> {
    if n == 0 {
        return Err(Error::InvalidSpec("Monte Carlo sample size must be positive".into()));
    }
    let rows = RowSampler::new(scm.stratum_rows(q.stratum())?);
    let tallies: Vec<Result<Tally>> = chunks(n)
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, TRUTH_DOMAIN, k);
            let mut t = Tally::default();
            for _ in 0..len {
                let ci = rows.pick(rng.gen());
                let (ux, um, uy): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
                let c = &scm.rows[ci].0;
                let d = Draw { scm, c, um, uy };
                if let Some(e) = e {
                    let x = scm.treatment.value(&Ctx { x: 0.0, m: 0.0, c }, ux)?;
                    if OrderedValue::of(x) != e.x_star() || !evidence_holds(&d, e)? {
                        continue;
                    }
                } else {
                    for (a, v) in t.eff.iter_mut().zip(effect_terms(&d, q)?) {
                        *a += v;
                    }
                }
                t.accepted += 1;
                let o = outcomes(&d, q)?;
                t.t += o.t as u64;
                t.nd += o.nd as u64;
                t.ni += o.ni as u64;
                t.cd += (o.cd == Some(true)) as u64;
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total = total.merge(&t?);
    }
    if total.accepted == 0 {
        return Err(Error::Conditioning("no Monte Carlo draw satisfied the evidence".into()));
    }
    let k = total.accepted as f64;
    let est = |c: u64| {
        let p = c as f64 / k;
        Some(Truth { value: p, se: (p * (1.0 - p) / k).sqrt() })
    };
    Ok(TruthReport {
        method: MethodTag::MonteCarlo,
        samples: Some(n),
        accepted: e.is_some().then_some(total.accepted),
        case: if e.is_some() { CaseFlag::A } else { CaseFlag::Unconditional },
        t_pns: est(total.t),
        nd_pns: est(total.nd),
        ni_pns: est(total.ni),
        cd_pns: q.m_fixed.and_then(|_| est(total.cd)),
        effects: e.is_none().then(|| effects_from(total.eff.map(|v| v / k), q.m_fixed.is_some())),
    })
}
