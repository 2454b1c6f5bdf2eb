//! Empirical conditional distributions.
//!
//! Every probability is a ratio of integer counts, converted to `f64` once.
//! The mediation functional `rho` is accumulated as an exact rational so that
//! `rho(y; x, x)` reproduces `P(Y ≺ y | X = x)` bit for bit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::order::{Cut, Interval, OrderedValue};

/// Conditional distribution queries consumed by the identification formulas.
///
/// Implemented by the empirical [`CdfModel`] and by the oracle's analytic
/// CDFs, so every formula can be evaluated both on data and at the truth.
pub trait CdfSource {
    /// `P(Y ∈ cut | X = x)`.
    fn cdf_y_given_x(&self, y: Cut, x: OrderedValue) -> Result<f64>;

    /// `P(Y ∈ cut | X = x, M = m)`.
    fn cdf_y_given_xm(&self, y: Cut, x: OrderedValue, m: OrderedValue) -> Result<f64>;

    /// `P(M = m | X = x)`.
    fn mediator_pmf(&self, m: OrderedValue, x: OrderedValue) -> Result<f64>;

    /// Mediator levels with positive probability given `X = x`, ascending.
    fn mediator_support(&self, x: OrderedValue) -> Result<Vec<OrderedValue>>;

    /// `P(Y ∈ y_cut, M ∈ m_cut | X = x)`.
    fn joint_cdf_ym_given_x(&self, y: Cut, m: Cut, x: OrderedValue) -> Result<f64>;

    /// `P(Y ∈ I_Y, M ∈ I_M | X = x)`, computed as a mass (not a CDF difference).
    fn box_mass_given_x(&self, x: OrderedValue, y: &Interval, m: &Interval) -> Result<f64>;

    /// `P(Y ∈ I_Y | X = x, M = m)`, computed as a mass.
    fn interval_mass_given_xm(&self, x: OrderedValue, m: OrderedValue, y: &Interval) -> Result<f64>;

    /// `rho(y; x', x) = Σ_m P(Y ≺ y | X = x', M = m) · P(M = m | X = x)`.
    fn rho(&self, y: Cut, x_base: OrderedValue, x_alt: OrderedValue) -> Result<f64> {
        let mut acc = 0.0;
        for m in self.mediator_support(x_alt)? {
            let w = self.mediator_pmf(m, x_alt)?;
            let f = self.cdf_y_given_xm(y, x_base, m).map_err(|_| {
                Error::positivity(format!("rho needs observations at X = {x_base}, M = {m}"))
            })?;
            acc += f * w;
        }
        Ok(acc)
    }
}

/// Empirical CDFs over one (already stratified) dataset.
#[derive(Clone, Debug)]
pub struct CdfModel {
    x_levels: Vec<OrderedValue>,
    m_levels: Vec<OrderedValue>,
    /// Sorted outcomes per treatment level.
    x_cells: Vec<Vec<OrderedValue>>,
    /// Sorted outcomes per (treatment, mediator) level pair.
    xm_cells: Vec<Vec<Vec<OrderedValue>>>,
}

impl CdfModel {
    pub fn new(d: &Dataset) -> Self {
        let x_levels = d.treatment_support();
        let m_levels = d.mediator_support();
        let mut x_cells = vec![Vec::new(); x_levels.len()];
        let mut xm_cells = vec![vec![Vec::new(); m_levels.len()]; x_levels.len()];
        for r in d.rows() {
            let xi = x_levels.binary_search(&r.x).expect("level present");
            let mi = m_levels.binary_search(&r.m).expect("level present");
            x_cells[xi].push(r.y);
            xm_cells[xi][mi].push(r.y);
        }
        for c in &mut x_cells {
            c.sort_unstable();
        }
        for row in &mut xm_cells {
            for c in row {
                c.sort_unstable();
            }
        }
        CdfModel { x_levels, m_levels, x_cells, xm_cells }
    }

    /// Model over the rows matching covariate stratum `c` (all rows if empty).
    pub fn for_stratum(d: &Dataset, c: &[OrderedValue]) -> Result<Self> {
        Ok(CdfModel::new(&d.stratify(c)?))
    }

    pub fn treatment_levels(&self) -> &[OrderedValue] {
        &self.x_levels
    }

    pub fn mediator_levels(&self) -> &[OrderedValue] {
        &self.m_levels
    }

    /// Number of rows with `X = x` (zero if absent).
    pub fn count_x(&self, x: OrderedValue) -> usize {
        self.x_index(x).map_or(0, |i| self.x_cells[i].len())
    }

    /// Number of rows with `X = x, M = m` (zero if absent).
    pub fn count_xm(&self, x: OrderedValue, m: OrderedValue) -> usize {
        match (self.x_index(x), self.m_levels.binary_search(&m)) {
            (Some(i), Ok(j)) => self.xm_cells[i][j].len(),
            _ => 0,
        }
    }

    fn x_index(&self, x: OrderedValue) -> Option<usize> {
        self.x_levels.binary_search(&x).ok()
    }

    fn x_cell(&self, x: OrderedValue) -> Result<usize> {
        self.x_index(x)
            .ok_or_else(|| Error::positivity(format!("no observations with X = {x}")))
    }

    fn xm_cell(&self, x: OrderedValue, m: OrderedValue) -> Result<&[OrderedValue]> {
        let i = self.x_cell(x)?;
        let cell = self
            .m_levels
            .binary_search(&m)
            .ok()
            .map(|j| self.xm_cells[i][j].as_slice())
            .filter(|c| !c.is_empty());
        cell.ok_or_else(|| Error::positivity(format!("no observations with X = {x}, M = {m}")))
    }

    fn band(cell: &[OrderedValue], y: &Interval) -> usize {
        let up = y.upper_cut().count_sorted(cell);
        let lo = y.lower_cut().count_sorted(cell);
        up.saturating_sub(lo)
    }
}

impl CdfSource for CdfModel {
    fn cdf_y_given_x(&self, y: Cut, x: OrderedValue) -> Result<f64> {
        let cell = &self.x_cells[self.x_cell(x)?];
        Ok(ratio(y.count_sorted(cell), cell.len()))
    }

    fn cdf_y_given_xm(&self, y: Cut, x: OrderedValue, m: OrderedValue) -> Result<f64> {
        let cell = self.xm_cell(x, m)?;
        Ok(ratio(y.count_sorted(cell), cell.len()))
    }

    fn mediator_pmf(&self, m: OrderedValue, x: OrderedValue) -> Result<f64> {
        let i = self.x_cell(x)?;
        let k = self.m_levels.binary_search(&m).map_or(0, |j| self.xm_cells[i][j].len());
        Ok(ratio(k, self.x_cells[i].len()))
    }

    fn mediator_support(&self, x: OrderedValue) -> Result<Vec<OrderedValue>> {
        let i = self.x_cell(x)?;
        Ok(self
            .m_levels
            .iter()
            .zip(&self.xm_cells[i])
            .filter(|(_, c)| !c.is_empty())
            .map(|(m, _)| *m)
            .collect())
    }

    fn joint_cdf_ym_given_x(&self, y: Cut, m: Cut, x: OrderedValue) -> Result<f64> {
        let i = self.x_cell(x)?;
        let hits: usize = self
            .m_levels
            .iter()
            .zip(&self.xm_cells[i])
            .filter(|(lvl, _)| m.admits(**lvl))
            .map(|(_, c)| y.count_sorted(c))
            .sum();
        Ok(ratio(hits, self.x_cells[i].len()))
    }

    fn box_mass_given_x(&self, x: OrderedValue, y: &Interval, m: &Interval) -> Result<f64> {
        let i = self.x_cell(x)?;
        let hits: usize = self
            .m_levels
            .iter()
            .zip(&self.xm_cells[i])
            .filter(|(lvl, _)| m.contains(**lvl))
            .map(|(_, c)| Self::band(c, y))
            .sum();
        Ok(ratio(hits, self.x_cells[i].len()))
    }

    fn interval_mass_given_xm(&self, x: OrderedValue, m: OrderedValue, y: &Interval) -> Result<f64> {
        let cell = self.xm_cell(x, m)?;
        Ok(ratio(Self::band(cell, y), cell.len()))
    }

    fn rho(&self, y: Cut, x_base: OrderedValue, x_alt: OrderedValue) -> Result<f64> {
        let ib = self.x_cell(x_base)?;
        let ia = self.x_cell(x_alt)?;
        let n_alt = self.x_cells[ia].len();
        let mut acc = BigRational::zero();
        for (j, m) in self.m_levels.iter().enumerate() {
            let w = self.xm_cells[ia][j].len();
            if w == 0 {
                continue;
            }
            let base = &self.xm_cells[ib][j];
            if base.is_empty() {
                return Err(Error::positivity(format!(
                    "rho needs observations at X = {x_base}, M = {m} (M = {m} occurs under X = {x_alt})"
                )));
            }
            let num = BigInt::from(y.count_sorted(base)) * BigInt::from(w);
            let den = BigInt::from(base.len()) * BigInt::from(n_alt);
            acc += BigRational::new(num, den);
        }
        Ok(rational_to_f64(&acc))
    }
}

#[inline]
fn ratio(k: usize, n: usize) -> f64 {
    k as f64 / n as f64
}

/// Correctly rounded when numerator and denominator are exactly representable.
fn rational_to_f64(r: &BigRational) -> f64 {
    const EXACT: u64 = 1 << 53;
    match (r.numer().to_u64(), r.denom().to_u64()) {
        (Some(n), Some(d)) if n <= EXACT && d <= EXACT => n as f64 / d as f64,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Schema;
    use proptest::prelude::*;

    fn ov(v: f64) -> OrderedValue {
        OrderedValue::of(v)
    }

    fn data(rows: &[(f64, f64, f64)]) -> Dataset {
        Dataset::from_columns(
            Schema::default_xmy(),
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn cdf_given_x_counts() {
        let m = CdfModel::new(&data(&[(0., 0., 0.), (0., 0., 1.), (1., 0., 1.), (1., 0., 1.)]));
        assert_eq!(m.cdf_y_given_x(Cut::below(1.0), ov(0.)).unwrap(), 0.5);
        assert_eq!(m.cdf_y_given_x(Cut::below(-5.0), ov(0.)).unwrap(), 0.0);
        assert_eq!(m.cdf_y_given_x(Cut::Full, ov(1.)).unwrap(), 1.0);
        assert_eq!(m.cdf_y_given_x(Cut::at_or_below(1.0), ov(0.)).unwrap(), 1.0);
        assert!(matches!(m.cdf_y_given_x(Cut::Full, ov(2.)), Err(Error::Positivity(_))));
    }

    #[test]
    fn cdf_given_xm_counts() {
        let m = CdfModel::new(&data(&[(0., 0., 0.), (0., 0., 1.), (0., 1., 1.)]));
        assert_eq!(m.cdf_y_given_xm(Cut::below(1.0), ov(0.), ov(0.)).unwrap(), 0.5);
        assert!(matches!(
            m.cdf_y_given_xm(Cut::below(1.0), ov(1.), ov(0.)),
            Err(Error::Positivity(_))
        ));
    }

    #[test]
    fn mediator_pmf_counts() {
        let m = CdfModel::new(&data(&[(1., 0., 0.), (1., 1., 0.), (1., 1., 0.), (0., 2., 0.)]));
        assert_eq!(m.mediator_pmf(ov(1.), ov(1.)).unwrap(), 2.0 / 3.0);
        assert_eq!(m.mediator_pmf(ov(2.), ov(1.)).unwrap(), 0.0);
        assert_eq!(m.mediator_pmf(ov(9.), ov(1.)).unwrap(), 0.0);
        assert_eq!(m.mediator_support(ov(1.)).unwrap(), vec![ov(0.), ov(1.)]);
    }

    #[test]
    fn joint_cdf_counts() {
        let m = CdfModel::new(&data(&[(1., 0., 0.), (1., 1., 1.)]));
        let x = ov(1.);
        assert_eq!(m.joint_cdf_ym_given_x(Cut::below(1.), Cut::below(1.), x).unwrap(), 0.5);
        assert_eq!(m.joint_cdf_ym_given_x(Cut::Full, Cut::Full, x).unwrap(), 1.0);
        assert_eq!(m.joint_cdf_ym_given_x(Cut::below(0.), Cut::Full, x).unwrap(), 0.0);
        assert_eq!(m.joint_cdf_ym_given_x(Cut::Full, Cut::below(0.), x).unwrap(), 0.0);
    }

    #[test]
    fn rho_identity_and_single_mediator() {
        let d = data(&[(0., 0., 0.), (0., 0., 1.), (0., 1., 1.), (1., 1., 0.), (1., 0., 1.), (1., 1., 1.)]);
        let m = CdfModel::new(&d);
        for y in [0.0, 0.5, 1.0, 1.5] {
            let c = Cut::below(y);
            assert_eq!(m.rho(c, ov(0.), ov(0.)).unwrap(), m.cdf_y_given_x(c, ov(0.)).unwrap());
            assert_eq!(m.rho(c, ov(1.), ov(1.)).unwrap(), m.cdf_y_given_x(c, ov(1.)).unwrap());
        }
        let single = CdfModel::new(&data(&[(0., 3., 0.), (0., 3., 2.), (1., 3., 1.)]));
        let c = Cut::below(1.0);
        assert_eq!(
            single.rho(c, ov(0.), ov(1.)).unwrap(),
            single.cdf_y_given_xm(c, ov(0.), ov(3.)).unwrap()
        );
    }

    #[test]
    fn rho_positivity_names_mediator() {
        let m = CdfModel::new(&data(&[(0., 0., 0.), (1., 0., 1.), (1., 7., 1.)]));
        let err = m.rho(Cut::below(1.), ov(0.), ov(1.)).unwrap_err();
        assert!(err.to_string().contains("M = 7"), "{err}");
    }

    #[test]
    fn box_mass_equals_count_band() {
        let d = data(&[(1., 0., 0.), (1., 1., 1.), (1., 1., 2.), (1., 2., 2.)]);
        let m = CdfModel::new(&d);
        let x = ov(1.);
        let iy = Interval::half_open(1.0, 3.0).unwrap();
        let im = Interval::half_open(1.0, 2.0).unwrap();
        assert_eq!(m.box_mass_given_x(x, &iy, &im).unwrap(), 0.5);
        assert_eq!(m.box_mass_given_x(x, &Interval::full(), &Interval::full()).unwrap(), 1.0);
        assert_eq!(m.interval_mass_given_xm(x, ov(1.), &Interval::point(2.0).unwrap()).unwrap(), 0.5);
    }

    fn arb_data() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((0u8..2, 0u8..3, 0u8..5), 1..60)
            .prop_map(|v| v.into_iter().map(|(x, m, y)| (x as f64, m as f64, y as f64)).collect())
    }

    proptest! {
        #[test]
        fn cdf_properties(rows in arb_data(), yq in -1.0f64..6.0) {
            let m = CdfModel::new(&data(&rows));
            for &x in m.treatment_levels() {
                let s = m.cdf_y_given_x(Cut::below(yq), x).unwrap();
                let ns = m.cdf_y_given_x(Cut::at_or_below(yq), x).unwrap();
                prop_assert!((0.0..=1.0).contains(&s) && s <= ns);
                let s2 = m.cdf_y_given_x(Cut::below(yq + 0.7), x).unwrap();
                prop_assert!(s <= s2);
                prop_assert_eq!(m.cdf_y_given_x(Cut::Empty, x).unwrap(), 0.0);
                prop_assert_eq!(m.cdf_y_given_x(Cut::Full, x).unwrap(), 1.0);

                let total: f64 = m.mediator_support(x).unwrap().iter()
                    .map(|&lvl| m.mediator_pmf(lvl, x).unwrap()).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);

                prop_assert_eq!(
                    m.joint_cdf_ym_given_x(Cut::below(yq), Cut::Full, x).unwrap(),
                    s
                );
                prop_assert_eq!(m.rho(Cut::below(yq), x, x).unwrap(), s);
            }
        }

        #[test]
        fn rho_within_conditional_cdf_hull(rows in arb_data(), yq in -1.0f64..6.0) {
            let m = CdfModel::new(&data(&rows));
            let (xb, xa) = (OrderedValue::of(0.0), OrderedValue::of(1.0));
            if let Ok(r) = m.rho(Cut::below(yq), xb, xa) {
                let vals: Vec<f64> = m.mediator_support(xa).unwrap().iter()
                    .map(|&lvl| m.cdf_y_given_xm(Cut::below(yq), xb, lvl).unwrap()).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(r >= lo - 1e-15 && r <= hi + 1e-15);
                let r2 = m.rho(Cut::below(yq + 1.0), xb, xa).unwrap();
                prop_assert!(r <= r2);
            }
        }
    }
}
