//! Covariate matrices on the unit cube, outcomes, and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::family::Observation;

/// Training or query data with covariates in `[0, 1]^P`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    n: usize,
    p: usize,
    obs: Vec<Observation>,
    scaling: Option<Scaling>,
}

impl Dataset {
    /// Builds a dataset from row-major covariates already on the unit cube.
    pub fn new(x: Vec<f64>, p: usize, obs: Vec<Observation>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Validation("at least one covariate is required".into()));
        }
        if x.len() != obs.len() * p {
            return Err(Error::Validation(format!(
                "{} covariate values do not form {} rows of {p}",
                x.len(),
                obs.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!(
                "covariate x{} of row {} is {} (outside [0, 1])",
                pos % p + 1,
                pos / p + 1,
                x[pos]
            )));
        }
        let has_delta = obs.first().is_some_and(|o| o.event.is_some());
        if obs.iter().any(|o| o.event.is_some() != has_delta) {
            return Err(Error::Validation("censoring indicators must be given for all rows or none".into()));
        }
        Ok(Dataset {
            n: obs.len(),
            x,
            p,
            obs,
            scaling: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], obs: Vec<Observation>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Validation("rows have different lengths".into()));
        }
        Dataset::new(rows.concat(), p, obs)
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = Some(scaling);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.x.chunks_exact(self.p)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn obs(&self) -> &[Observation] {
        &self.obs
    }

    pub fn outcomes(&self) -> impl Iterator<Item = f64> + '_ {
        self.obs.iter().map(|o| o.y)
    }

    pub fn has_censoring(&self) -> bool {
        self.obs.first().is_some_and(|o| o.event.is_some())
    }

    pub fn scaling(&self) -> Option<&Scaling> {
        self.scaling.as_ref()
    }

    /// Covariates on their original scale, if a scaling record is attached.
    pub fn unscaled_row(&self, i: usize) -> Option<Vec<f64>> {
        self.scaling.as_ref().map(|s| s.invert(self.row(i)))
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            x,
            n: idx.len(),
            p: self.p,
            obs: idx.iter().map(|&i| self.obs[i]).collect(),
            scaling: self.scaling.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScalingMethod {
    #[default]
    MinMax,
    /// Piecewise-linear map of the sorted distinct values onto an even grid.
    Quantile,
}

impl FromStr for ScalingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(ScalingMethod::MinMax),
            "quantile" => Ok(ScalingMethod::Quantile),
            _ => Err(Error::Validation(format!("unknown scaling '{s}' (expected minmax or quantile)"))),
        }
    }
}

/// Monotone map of one covariate onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnScale {
    MinMax { min: f64, max: f64 },
    /// Knots `(original value, scaled value)` in increasing order.
    Knots(Vec<(f64, f64)>),
}

impl ColumnScale {
    fn fit(values: &[f64], method: ScalingMethod) -> ColumnScale {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match method {
            ScalingMethod::MinMax => ColumnScale::MinMax { min, max },
            ScalingMethod::Quantile => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                sorted.dedup();
                if sorted.len() < 2 {
                    return ColumnScale::MinMax { min, max };
                }
                let k = (sorted.len() - 1) as f64;
                ColumnScale::Knots(sorted.into_iter().enumerate().map(|(i, v)| (v, i as f64 / k)).collect())
            }
        }
    }

    /// Scaled value, clamped to `[0, 1]` outside the training range.
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            ColumnScale::MinMax { min, max } => {
                if max > min {
                    ((v - min) / (max - min)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            }
            ColumnScale::Knots(knots) => interpolate(knots, v, |k| k.0, |k| k.1),
        }
    }

    pub fn invert(&self, u: f64) -> f64 {
        match self {
            ColumnScale::MinMax { min, max } => {
                if max > min {
                    min + u * (max - min)
                } else {
                    *min
                }
            }
            ColumnScale::Knots(knots) => interpolate(knots, u, |k| k.1, |k| k.0),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], v: f64, from: impl Fn(&(f64, f64)) -> f64, to: impl Fn(&(f64, f64)) -> f64) -> f64 {
    let first = &knots[0];
    let last = &knots[knots.len() - 1];
    if v <= from(first) {
        return to(first);
    }
    if v >= from(last) {
        return to(last);
    }
    let hi = knots.partition_point(|k| from(k) <= v);
    let (a, b) = (&knots[hi - 1], &knots[hi]);
    let t = (v - from(a)) / (from(b) - from(a));
    to(a) + t * (to(b) - to(a))
}

/// Per-column maps from original covariates to the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub columns: Vec<ColumnScale>,
}

impl Scaling {
    /// Fits one map per column of row-major `x`.
    pub fn fit(x: &[f64], p: usize, method: ScalingMethod) -> Scaling {
        let n = x.len() / p;
        let columns = (0..p)
            .map(|j| {
                let col: Vec<f64> = (0..n).map(|i| x[i * p + j]).collect();
                ColumnScale::fit(&col, method)
            })
            .collect();
        Scaling { columns }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.columns).map(|(&v, c)| c.apply(v)).collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.columns).map(|(&u, c)| c.invert(u)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("column,kind,value,scaled\n");
        for (j, c) in self.columns.iter().enumerate() {
            match c {
                ColumnScale::MinMax { min, max } => {
                    out.push_str(&format!("x{},min,{},0\n", j + 1, fmt_f64(*min)));
                    out.push_str(&format!("x{},max,{},1\n", j + 1, fmt_f64(*max)));
                }
                ColumnScale::Knots(knots) => {
                    for (v, u) in knots {
                        out.push_str(&format!("x{},knot,{},{}\n", j + 1, fmt_f64(*v), fmt_f64(*u)));
                    }
                }
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scaling> {
        let text = std::fs::read_to_string(path)?;
        let mut columns: Vec<ColumnScale> = Vec::new();
        for (k, line) in text.lines().enumerate().skip(1) {
            let line_no = k + 1;
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
            }
            let j: usize = fields[0]
                .strip_prefix('x')
                .and_then(|s| s.parse().ok())
                .filter(|&j| j >= 1)
                .ok_or_else(|| parse_err(format!("bad column name '{}'", fields[0])))?;
            let value: f64 = fields[2].parse().map_err(|_| parse_err(format!("bad number '{}'", fields[2])))?;
            let scaled: f64 = fields[3].parse().map_err(|_| parse_err(format!("bad number '{}'", fields[3])))?;
            if j == columns.len() + 1 {
                columns.push(match fields[1] {
                    "min" => ColumnScale::MinMax { min: value, max: value },
                    "knot" => ColumnScale::Knots(vec![(value, scaled)]),
                    other => return Err(parse_err(format!("column must start with min or knot, found '{other}'"))),
                });
                continue;
            }
            if j != columns.len() {
                return Err(parse_err(format!("column x{j} out of order")));
            }
            match (columns.last_mut().unwrap(), fields[1]) {
                (ColumnScale::MinMax { max, .. }, "max") => *max = value,
                (ColumnScale::Knots(knots), "knot") => knots.push((value, scaled)),
                (_, other) => return Err(parse_err(format!("unexpected record kind '{other}'"))),
            }
        }
        Ok(Scaling { columns })
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

/// Raw covariates and outcomes read from a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub x: Vec<f64>,
    pub p: usize,
    pub y: Vec<f64>,
    pub delta: Option<Vec<bool>>,
}

impl RawTable {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn observations(&self) -> Vec<Observation> {
        match &self.delta {
            Some(d) => self.y.iter().zip(d).map(|(&y, &e)| Observation::censored(y, e)).collect(),
            None => self.y.iter().map(|&y| Observation::new(y)).collect(),
        }
    }

    /// Fits a scaling on these covariates and returns the scaled dataset.
    pub fn into_dataset(self, method: ScalingMethod) -> Result<Dataset> {
        let scaling = Scaling::fit(&self.x, self.p, method);
        self.scale_with(&scaling)
    }

    /// Scales with an existing (training) map; out-of-range values clamp.
    pub fn scale_with(&self, scaling: &Scaling) -> Result<Dataset> {
        if scaling.columns.len() != self.p {
            return Err(Error::Validation(format!(
                "data has {} covariates but the scaling record has {}",
                self.p,
                scaling.columns.len()
            )));
        }
        let x: Vec<f64> = self.x.chunks_exact(self.p).flat_map(|r| scaling.apply(r)).collect();
        Ok(Dataset::new(x, self.p, self.observations())?.with_scaling(scaling.clone()))
    }
}

/// Whether a file must, may, or must not carry outcome columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schema {
    pub require_y: bool,
    pub require_delta: bool,
}

impl Schema {
    pub const TRAINING: Schema = Schema {
        require_y: true,
        require_delta: false,
    };
    pub const SURVIVAL: Schema = Schema {
        require_y: true,
        require_delta: true,
    };
    pub const QUERY: Schema = Schema {
        require_y: false,
        require_delta: false,
    };
}

/// Reads columns `x1..xP`, `y` and optionally `delta` from a CSV file.
///
/// Columns may appear in any order; other columns are ignored. When `y` is
/// absent and not required it is filled with zeros.
pub fn read_table<R: Read>(reader: R, schema: Schema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut x_cols: Vec<(usize, usize)> = Vec::new();
    let (mut y_col, mut d_col) = (None, None);
    for (c, name) in headers.iter().enumerate() {
        match name {
            "y" => y_col = Some(c),
            "delta" => d_col = Some(c),
            _ => {
                if let Some(j) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                    x_cols.push((j, c));
                }
            }
        }
    }
    x_cols.sort_unstable();
    let p = x_cols.len();
    if p == 0 {
        return Err(Error::Validation("no covariate columns (x1, x2, ...) in header".into()));
    }
    for (k, &(j, _)) in x_cols.iter().enumerate() {
        if j != k + 1 {
            return Err(Error::Validation(format!("missing column x{}", k + 1)));
        }
    }
    if schema.require_y && y_col.is_none() {
        return Err(Error::Validation("missing column y".into()));
    }
    if schema.require_delta && d_col.is_none() {
        return Err(Error::Validation("missing column delta (censoring indicator)".into()));
    }

    let mut table = RawTable {
        x: Vec::new(),
        p,
        y: Vec::new(),
        delta: d_col.map(|_| Vec::new()),
    };
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let line = row + 1;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let cell = |c: usize, name: &str| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::Validation(format!("row {row}, column {name}: '{raw}' is not a finite number"))
            })
        };
        for &(j, c) in &x_cols {
            table.x.push(cell(c, &format!("x{j}"))?);
        }
        table.y.push(match y_col {
            Some(c) => cell(c, "y")?,
            None => 0.0,
        });
        if let (Some(c), Some(d)) = (d_col, table.delta.as_mut()) {
            d.push(match record.get(c).unwrap_or("") {
                "1" => true,
                "0" => false,
                raw => {
                    return Err(Error::Validation(format!("row {row}, column delta: '{raw}' is not 0 or 1")));
                }
            });
        }
    }
    if table.y.is_empty() {
        return Err(Error::Validation("no data rows".into()));
    }
    Ok(table)
}

/// Loads a CSV file and min-max scales its covariates to the unit cube.
pub fn load_dataset(path: &Path, schema: Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_table(file, schema)?.into_dataset(ScalingMethod::MinMax)
}

/// Writes `x1..xP, y[, delta]` with the given covariate rows.
pub fn write_table<W: Write>(mut out: W, rows: &[Vec<f64>], obs: &[Observation]) -> Result<()> {
    let p = rows.first().map_or(0, Vec::len);
    let with_delta = obs.first().is_some_and(|o| o.event.is_some());
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    if with_delta {
        header.push("delta".into());
    }
    writeln!(out, "{}", header.join(","))?;
    for (row, o) in rows.iter().zip(obs) {
        let mut fields: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        fields.push(fmt_f64(o.y));
        if let Some(e) = o.event {
            fields.push(if e { "1" } else { "0" }.into());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes a dataset, on its original scale when a scaling record is attached.
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..data.n())
        .map(|i| data.unscaled_row(i).unwrap_or_else(|| data.row(i).to_vec()))
        .collect();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_table(file, &rows, data.obs())
}
