//! The observational table: treatment, mediator, outcome and optional discrete
//! covariates, stored column-wise and immutable after construction.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::OrderedValue;

/// Column-role mapping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub treatment: String,
    pub mediator: String,
    pub outcome: String,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl Schema {
    pub fn new(treatment: &str, mediator: &str, outcome: &str) -> Self {
        Schema {
            treatment: treatment.into(),
            mediator: mediator.into(),
            outcome: outcome.into(),
            covariates: Vec::new(),
        }
    }

    pub fn with_covariates<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.covariates = names.into_iter().map(Into::into).collect();
        self
    }

    /// `x`, `m`, `y` plus any covariates.
    pub fn default_xmy() -> Self {
        Schema::new("x", "m", "y")
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Columns {
    x: Vec<OrderedValue>,
    m: Vec<OrderedValue>,
    y: Vec<OrderedValue>,
    c: Vec<Vec<OrderedValue>>,
}

/// Immutable table of `(x, m, y, c)` records. Cloning is cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    cols: Arc<Columns>,
}

/// A borrowed view of one record.
#[derive(Clone, Copy, Debug)]
pub struct Row<'a> {
    pub x: OrderedValue,
    pub m: OrderedValue,
    pub y: OrderedValue,
    data: &'a Columns,
    index: usize,
}

impl Row<'_> {
    pub fn covariate(&self, k: usize) -> OrderedValue {
        self.data.c[k][self.index]
    }
}

impl Dataset {
    /// Builds a dataset from parallel columns; `c` holds one column per covariate.
    pub fn from_columns(
        schema: Schema,
        x: Vec<f64>,
        m: Vec<f64>,
        y: Vec<f64>,
        c: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = x.len();
        if m.len() != n || y.len() != n || c.iter().any(|col| col.len() != n) {
            return Err(Error::Schema("columns have different lengths".into()));
        }
        if c.len() != schema.covariates.len() {
            return Err(Error::Schema(format!(
                "{} covariate columns supplied for {} declared covariates",
                c.len(),
                schema.covariates.len()
            )));
        }
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let conv = |v: Vec<f64>, name: &str| -> Result<Vec<OrderedValue>> {
            v.into_iter()
                .enumerate()
                .map(|(i, x)| {
                    OrderedValue::new(x).map_err(|_| Error::Parse {
                        line: i as u64 + 2,
                        message: format!("column {name}: value {x} is not finite"),
                    })
                })
                .collect()
        };
        let cols = Columns {
            x: conv(x, &schema.treatment)?,
            m: conv(m, &schema.mediator)?,
            y: conv(y, &schema.outcome)?,
            c: c.into_iter()
                .zip(&schema.covariates)
                .map(|(col, name)| conv(col, name))
                .collect::<Result<_>>()?,
        };
        Ok(Dataset { schema, cols: Arc::new(cols) })
    }

    /// Reads a comma-delimited UTF-8 table with a header line. Only the role
    /// columns named in `schema` are parsed; other columns are ignored.
    pub fn load_csv<R: Read>(source: R, schema: Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .delimiter(b',')
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        let find = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
        };
        let ix = find(&schema.treatment)?;
        let im = find(&schema.mediator)?;
        let iy = find(&schema.outcome)?;
        let ic = schema
            .covariates
            .iter()
            .map(|c| find(c))
            .collect::<Result<Vec<_>>>()?;

        let mut cols = Columns {
            x: Vec::new(),
            m: Vec::new(),
            y: Vec::new(),
            c: vec![Vec::new(); ic.len()],
        };
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(line, |p| p.line()),
                message: e.to_string(),
            })?;
            let cell = |idx: usize, name: &str| -> Result<OrderedValue> {
                let raw = rec.get(idx).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .and_then(|v| OrderedValue::new(v).ok())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("column `{name}`: cannot parse `{raw}` as a number"),
                    })
            };
            cols.x.push(cell(ix, &schema.treatment)?);
            cols.m.push(cell(im, &schema.mediator)?);
            cols.y.push(cell(iy, &schema.outcome)?);
            for (k, (&idx, name)) in ic.iter().zip(&schema.covariates).enumerate() {
                cols.c[k].push(cell(idx, name)?);
            }
        }
        if cols.x.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(Dataset { schema, cols: Arc::new(cols) })
    }

    /// Writes the role columns (treatment, mediator, outcome, covariates) as CSV.
    /// Numbers use the shortest representation that parses back exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            self.schema.treatment.as_str(),
            self.schema.mediator.as_str(),
            self.schema.outcome.as_str(),
        ];
        header.extend(self.schema.covariates.iter().map(String::as_str));
        w.write_record(&header).map_err(csv_io)?;
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            fields.clear();
            fields.push(self.cols.x[i].to_string());
            fields.push(self.cols.m[i].to_string());
            fields.push(self.cols.y[i].to_string());
            for col in &self.cols.c {
                fields.push(col[i].to_string());
            }
            w.write_record(&fields).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.cols.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        Row {
            x: self.cols.x[i],
            m: self.cols.m[i],
            y: self.cols.y[i],
            data: &self.cols,
            index: i,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn treatment(&self) -> &[OrderedValue] {
        &self.cols.x
    }

    pub fn mediator(&self) -> &[OrderedValue] {
        &self.cols.m
    }

    pub fn outcome(&self) -> &[OrderedValue] {
        &self.cols.y
    }

    pub fn covariate(&self, k: usize) -> &[OrderedValue] {
        &self.cols.c[k]
    }

    /// Distinct treatment levels, ascending.
    pub fn treatment_support(&self) -> Vec<OrderedValue> {
        support(&self.cols.x)
    }

    /// Distinct mediator levels, ascending.
    pub fn mediator_support(&self) -> Vec<OrderedValue> {
        support(&self.cols.m)
    }

    pub fn covariate_support(&self, k: usize) -> Vec<OrderedValue> {
        support(&self.cols.c[k])
    }

    /// Rows whose covariates equal `c` exactly. An empty `c` selects every row.
    pub fn stratify(&self, c: &[OrderedValue]) -> Result<Dataset> {
        if c.is_empty() {
            return Ok(self.clone());
        }
        if c.len() != self.schema.covariates.len() {
            return Err(Error::Schema(format!(
                "stratum has {} values but {} covariates are declared",
                c.len(),
                self.schema.covariates.len()
            )));
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.cols.c.iter().zip(c).all(|(col, v)| col[i] == *v))
            .collect();
        if keep.is_empty() {
            return Err(Error::positivity(format!(
                "no rows in stratum C = {:?}",
                c.iter().map(|v| v.get()).collect::<Vec<_>>()
            )));
        }
        if keep.len() == self.len() {
            return Ok(self.clone());
        }
        Ok(self.select(&keep))
    }

    /// Gathers the given row indices (repetition allowed) into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let g = |col: &[OrderedValue]| indices.iter().map(|&i| col[i]).collect::<Vec<_>>();
        let cols = Columns {
            x: g(&self.cols.x),
            m: g(&self.cols.m),
            y: g(&self.cols.y),
            c: self.cols.c.iter().map(|col| g(col)).collect(),
        };
        Dataset { schema: self.schema.clone(), cols: Arc::new(cols) }
    }
}

fn support(col: &[OrderedValue]) -> Vec<OrderedValue> {
    col.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
