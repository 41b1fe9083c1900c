//! Piecewise-constant functions and weights on the finest cells of a window.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dyadic::{BoxRegion, Cube, Window};
use crate::error::{Error, Result};
use crate::quadrature;

/// Exponent sentinel for sup-norm averages.
pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFunction {
    pub window: Window,
    pub values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(window: Window, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                window.num_cells(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at cell {i}")));
        }
        Ok(LatticeFunction { window, values })
    }

    pub fn constant(window: &Window, c: f64) -> Self {
        LatticeFunction { window: window.clone(), values: vec![c; window.num_cells()] }
    }

    pub fn zeros(window: &Window) -> Self {
        Self::constant(window, 0.0)
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(window: &Window, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..window.num_cells()).map(|i| f(&window.cell_center(i))).collect();
        Self::new(window.clone(), values)
    }

    /// Indicator of a box, as the fraction of each cell it covers.
    pub fn indicator(window: &Window, region: &BoxRegion) -> Self {
        let mut values = vec![0.0; window.num_cells()];
        let vol = window.cell_volume();
        window.for_each_overlap(region, |c, ov| values[c] = ov / vol);
        LatticeFunction { window: window.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a point; zero outside the window.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.window.cell_of_point(x).map_or(0.0, |c| self.values[c])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LatticeFunction {
            window: self.window.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::InvalidArgument("window mismatch".into()));
        }
        Ok(LatticeFunction {
            window: self.window.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Exact mean over `region ∩ window`.
    pub fn cell_average(&self, region: &BoxRegion) -> Result<f64> {
        let mut s = 0.0;
        let total = self.window.for_each_overlap(region, |c, ov| s += self.values[c] * ov);
        if total <= 0.0 {
            return Err(Error::EmptyIntersection);
        }
        Ok(s / total)
    }

    /// `(fint_B |f|^e)^{1/e}`; `e = INF` gives the max of `|f|` over the cells met.
    pub fn power_avg(&self, region: &BoxRegion, e: f64) -> Result<f64> {
        check_exponent(e)?;
        if e == INF {
            let mut m = f64::NEG_INFINITY;
            self.window.for_each_overlap(region, |c, _| m = m.max(self.values[c].abs()));
            if m == f64::NEG_INFINITY {
                return Err(Error::EmptyIntersection);
            }
            return Ok(m);
        }
        let sum = |scale: f64| {
            let mut s = 0.0;
            let mut bad = false;
            let total = self.window.for_each_overlap(region, |c, ov| {
                let v = self.values[c].abs();
                if e < 0.0 && v == 0.0 {
                    bad = true;
                }
                s += (v / scale).powf(e) * ov;
            });
            (s, total, bad)
        };
        let (s, total, bad) = sum(1.0);
        if total <= 0.0 {
            return Err(Error::EmptyIntersection);
        }
        if bad {
            return Err(Error::InvalidArgument("zero base with negative exponent".into()));
        }
        let m = (s / total).powf(1.0 / e);
        if m.is_finite() && m > 0.0 {
            return Ok(m);
        }
        // |f|^e left the floating range; redo relative to the extreme value
        let mut scale = if e > 0.0 { 0.0f64 } else { INF };
        self.window.for_each_overlap(region, |c, _| {
            let v = self.values[c].abs();
            scale = if e > 0.0 { scale.max(v) } else { scale.min(v) };
        });
        if scale == 0.0 {
            return Ok(0.0);
        }
        let (s, total, _) = sum(scale);
        Ok(scale * (s / total).powf(1.0 / e))
    }

    pub fn cube_power_avg(&self, q: &Cube, e: f64) -> Result<f64> {
        if !self.window.contains_cube(q) {
            return Err(Error::OutsideWindow(format!("{q:?}")));
        }
        self.power_avg(&q.to_box(), e)
    }

    pub fn cube_average(&self, q: &Cube) -> Result<f64> {
        if !self.window.contains_cube(q) {
            return Err(Error::OutsideWindow(format!("{q:?}")));
        }
        let mut s = 0.0;
        let mut count = 0usize;
        self.window.for_each_cell_in_cube(q, |c| {
            s += self.values[c];
            count += 1;
        });
        Ok(s / count as f64)
    }

    /// Writes the CSV exchange format: a `level_min,level_max,dim` header,
    /// its values, then one `index...,value` row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["level_min", "level_max", "dim"])?;
        w.write_record([
            self.window.level_min.to_string(),
            self.window.level_max.to_string(),
            self.window.dim.to_string(),
        ])?;
        for (i, v) in self.values.iter().enumerate() {
            let mut rec: Vec<String> =
                self.window.cell_global_index(i).iter().map(|g| g.to_string()).collect();
            rec.push(format!("{v:e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV exchange format. The window is the smallest block of
    /// `level_max` cubes covering the listed cells; cells not listed are 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let mut records = rdr.records();
        let mut first = records
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))??;
        if first.get(0) == Some("level_min") {
            first = records
                .next()
                .ok_or_else(|| Error::Parse("missing window row".into()))??;
        }
        let parse_i = |s: Option<&str>| -> Result<i64> {
            s.ok_or_else(|| Error::Parse("short row".into()))?
                .parse::<i64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let level_min = parse_i(first.get(0))? as i32;
        let level_max = parse_i(first.get(1))? as i32;
        let dim = parse_i(first.get(2))? as usize;
        if level_min > level_max || dim == 0 {
            return Err(Error::Parse("bad window row".into()));
        }
        let shift = (level_max - level_min) as u32;
        let mut rows: Vec<(Vec<i64>, f64)> = Vec::new();
        for rec in records {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::Parse(format!("row has {} fields, expected {}", rec.len(), dim + 1)));
            }
            let idx: Vec<i64> = (0..dim).map(|a| parse_i(rec.get(a))).collect::<Result<_>>()?;
            let v: f64 = rec[dim].parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            rows.push((idx, v));
        }
        if rows.is_empty() {
            return Err(Error::Parse("no cell rows".into()));
        }
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for (idx, _) in &rows {
            for a in 0..dim {
                let top = idx[a].div_euclid(1 << shift);
                lo[a] = lo[a].min(top);
                hi[a] = hi[a].max(top);
            }
        }
        let extent: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let window = Window::new(dim, level_min, level_max, lo, extent)?;
        let mut values = vec![0.0; window.num_cells()];
        for (idx, v) in rows {
            let c = window.cell_from_global(&idx).expect("covered by construction");
            values[c] = v;
        }
        LatticeFunction::new(window, values)
    }
}

fn check_exponent(e: f64) -> Result<()> {
    if e == 0.0 || e.is_nan() || e == f64::NEG_INFINITY {
        return Err(Error::InvalidExponent(format!("averaging exponent {e}")));
    }
    Ok(())
}

/// Where a weight's cell values came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSource {
    Lattice,
    /// Exact cell averages of `|x|^γ`.
    Power { gamma: f64 },
    /// `|x|^γ` sampled at cell centres.
    SampledPower { gamma: f64 },
}

/// A strictly positive lattice function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub field: LatticeFunction,
    pub source: WeightSource,
}

impl Weight {
    pub fn new(field: LatticeFunction) -> Result<Self> {
        if let Some(i) = field.values.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "cell {i} has value {}",
                field.values[i]
            )));
        }
        Ok(Weight { field, source: WeightSource::Lattice })
    }

    pub fn unit(window: &Window) -> Self {
        Weight { field: LatticeFunction::constant(window, 1.0), source: WeightSource::Lattice }
    }

    pub fn window(&self) -> &Window {
        &self.field.window
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    /// Cellwise power `w^e` (still a weight).
    pub fn pow(&self, e: f64) -> Weight {
        Weight { field: self.field.map(|v| v.powf(e)), source: WeightSource::Lattice }
    }

    pub fn power_avg(&self, region: &BoxRegion, e: f64) -> Result<f64> {
        self.field.power_avg(region, e)
    }

    /// `(fint_B w^{-x})^{1/x}`, the dual average appearing in weight conditions.
    /// `x = INF` gives `max 1/w`.
    pub fn dual_avg(&self, region: &BoxRegion, x: f64) -> Result<f64> {
        if x == INF {
            return Ok(1.0 / self.min_on(region)?);
        }
        Ok(1.0 / self.field.power_avg(region, -x)?)
    }

    fn min_on(&self, region: &BoxRegion) -> Result<f64> {
        let mut m = INF;
        self.field.window.for_each_overlap(region, |c, _| m = m.min(self.field.values[c]));
        if m == INF {
            return Err(Error::EmptyIntersection);
        }
        Ok(m)
    }
}

/// Weight with exact cell averages of `|x|^γ` (`depth` controls subdivision
/// near the origin in dimension ≥ 2).
pub fn power_weight_with_depth(gamma: f64, window: &Window, depth: u32) -> Result<Weight> {
    let n = window.dim as f64;
    if gamma <= -n || !gamma.is_finite() {
        return Err(Error::InvalidWeight(format!(
            "|x|^{gamma} is not locally integrable in dimension {}",
            window.dim
        )));
    }
    let values: Vec<f64> = (0..window.num_cells())
        .map(|i| {
            let b = window.cell_cube(i).to_box();
            quadrature::power_average(&b.lo, &b.hi, gamma, depth)
        })
        .collect();
    let field = LatticeFunction::new(window.clone(), values)?;
    let mut w = Weight::new(field)?;
    w.source = WeightSource::Power { gamma };
    Ok(w)
}

pub fn power_weight(gamma: f64, window: &Window) -> Result<Weight> {
    power_weight_with_depth(gamma, window, quadrature::DEFAULT_DEPTH)
}

/// `|x|^γ` sampled at cell centres; defined for every real γ, used to probe
/// non-integrable exponents.
pub fn sampled_power_weight(gamma: f64, window: &Window) -> Result<Weight> {
    let field = LatticeFunction::from_fn(window, |x| {
        x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(gamma)
    })?;
    let mut w = Weight::new(field)?;
    w.source = WeightSource::SampledPower { gamma };
    Ok(w)
}

/// Sum of cell values over each window cube, by level (see `Window::aggregate`).
pub fn cube_sums(window: &Window, cells: &[f64]) -> Vec<Vec<f64>> {
    window.aggregate(cells, |a, b| a + b)
}

/// Max of cell values over each window cube, by level.
pub fn cube_maxima(window: &Window, cells: &[f64]) -> Vec<Vec<f64>> {
    window.aggregate(cells, f64::max)
}

/// `(fint_Q |v|^e)^{1/e}` for every window cube, by level and slot.
/// `e = INF` gives the max of `|v|`, `e = -INF` the min.
pub fn cube_power_means(window: &Window, values: &[f64], e: f64) -> Result<Vec<Vec<f64>>> {
    if e == 0.0 || e.is_nan() {
        return Err(Error::InvalidExponent(format!("power mean with e = {e}")));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if e == INF {
        return Ok(window.aggregate(&abs, f64::max));
    }
    if e == -INF {
        return Ok(window.aggregate(&abs, f64::min));
    }
    if e < 0.0 && abs.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("zero base with negative exponent".into()));
    }
    let powered: Vec<f64> = abs.iter().map(|v| v.powf(e)).collect();
    let mut means: Vec<Vec<f64>> = cube_sums(window, &powered)
        .into_iter()
        .enumerate()
        .map(|(j, level)| {
            let count = 2f64.powi((window.dim * j) as i32);
            level.into_iter().map(|s| (s / count).powf(1.0 / e)).collect()
        })
        .collect();
    rescue(window, &abs, e, &mut means, |k, slot| vec![window.slot_cube(k, slot)]);
    Ok(means)
}

/// Recomputes every entry of `means` that over- or underflowed, directly
/// from the cells of `region(j, slot)` and relative to their own extreme.
fn rescue(
    window: &Window,
    abs: &[f64],
    e: f64,
    means: &mut [Vec<f64>],
    region: impl Fn(i32, usize) -> Vec<Cube>,
) {
    // a zero mean is only suspicious when |e| is large enough for |v|^e to underflow
    let broken = |m: f64| !m.is_finite() || (m == 0.0 && e.abs() > 16.0);
    for (j, level) in means.iter_mut().enumerate() {
        let k = window.level_min + j as i32;
        for (slot, m) in level.iter_mut().enumerate() {
            if !broken(*m) {
                continue;
            }
            let mut cells = Vec::new();
            for q in region(k, slot) {
                window.for_each_cell_in_cube(&q, |c| cells.push(abs[c]));
            }
            let scale = if e > 0.0 {
                cells.iter().copied().fold(0.0, f64::max)
            } else {
                cells.iter().copied().fold(INF, f64::min)
            };
            if scale > 0.0 && scale.is_finite() {
                let s: f64 = cells.iter().map(|v| (v / scale).powf(e)).sum();
                *m = scale * (s / cells.len() as f64).powf(1.0 / e);
            }
        }
    }
}

/// Like [`cube_power_means`] but over the window-clipped `3Q`.
pub fn dilate3_power_means(window: &Window, values: &[f64], e: f64) -> Result<Vec<Vec<f64>>> {
    if e == 0.0 || e.is_nan() {
        return Err(Error::InvalidExponent(format!("power mean with e = {e}")));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let extreme = e.is_infinite();
    if e < 0.0 && !extreme && abs.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("zero base with negative exponent".into()));
    }
    let base = if e == INF {
        window.aggregate(&abs, f64::max)
    } else if e == -INF {
        window.aggregate(&abs, f64::min)
    } else {
        let powered: Vec<f64> = abs.iter().map(|v| v.powf(e)).collect();
        cube_sums(window, &powered)
    };
    let mut means: Vec<Vec<f64>> = base
        .iter()
        .enumerate()
        .map(|(j, level)| {
            let k = window.level_min + j as i32;
            let count = 2f64.powi((window.dim * j) as i32);
            (0..level.len())
                .map(|slot| {
                    let nbrs = window.dilate3_slots(&window.slot_cube(k, slot));
                    if e == INF {
                        nbrs.iter().fold(0.0f64, |m, &s| m.max(level[s]))
                    } else if e == -INF {
                        nbrs.iter().fold(INF, |m, &s| m.min(level[s]))
                    } else {
                        let s: f64 = nbrs.iter().map(|&s| level[s]).sum();
                        (s / (count * nbrs.len() as f64)).powf(1.0 / e)
                    }
                })
                .collect()
        })
        .collect();
    if !extreme {
        rescue(window, &abs, e, &mut means, |k, slot| {
            window
                .dilate3_slots(&window.slot_cube(k, slot))
                .into_iter()
                .map(|s| window.slot_cube(k, s))
                .collect()
        });
    }
    Ok(means)
}

/// Dyadic BMO norm: max over window cubes of `fint_Q |b - m_Q b|`.
pub fn bmo_norm(b: &LatticeFunction) -> f64 {
    oscillation_sup(b, 1.0)
}

/// Max over window cubes of `(fint_Q |b - m_Q b|^e)^{1/e}`.
pub fn oscillation_sup(b: &LatticeFunction, e: f64) -> f64 {
    let w = &b.window;
    let mut best = 0.0f64;
    for q in w.all_cubes() {
        let cells = w.cells_in_cube(&q);
        let m = cells.iter().map(|&c| b.values[c]).sum::<f64>() / cells.len() as f64;
        let osc = cells.iter().map(|&c| (b.values[c] - m).abs().powf(e)).sum::<f64>()
            / cells.len() as f64;
        best = best.max(osc.powf(1.0 / e));
    }
    best
}

/// `fint_{3Q} b` over the window-clipped dilate.
pub fn lambda_avg(b: &LatticeFunction, q: &Cube) -> Result<f64> {
    b.cell_average(&q.dilate3())
}
