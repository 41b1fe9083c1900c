//! Standard dyadic grid on a truncated window.
//!
//! Cubes are half-open, `2^k (m + [0,1)^n)`, so that every level tiles the
//! window exactly. A [`Window`] keeps the levels `level_min..=level_max` and a
//! rectangular block of top-level cubes; every sup over `D(R^n)` in this crate
//! is taken over the cubes the window enumerates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of finest cells in a window.
pub const MAX_CELLS: usize = 1 << 22;

#[inline]
pub(crate) fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// Dyadic cube `2^level (index + [0,1)^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub level: i32,
    pub index: Vec<i64>,
}

/// Axis-aligned half-open box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        BoxRegion { lo, hi }
    }

    /// Box of side `2 * radius` centred at `center`.
    pub fn centered(center: &[f64], radius: f64) -> Self {
        BoxRegion {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).max(0.0))
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *l <= *x && *x < *h)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(l, h)| l < h) {
            Some(BoxRegion { lo, hi })
        } else {
            None
        }
    }
}

impl Cube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        Cube { level, index }
    }

    /// The unit cube `[0,1)^n`.
    pub fn unit(dim: usize) -> Self {
        Cube::new(0, vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        pow2(self.level)
    }

    pub fn volume(&self) -> f64 {
        pow2(self.level * self.dim() as i32)
    }

    pub fn lower(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&m| m as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&m| (m as f64 + 0.5) * s).collect()
    }

    pub fn to_box(&self) -> BoxRegion {
        let s = self.side();
        BoxRegion {
            lo: self.index.iter().map(|&m| m as f64 * s).collect(),
            hi: self.index.iter().map(|&m| (m + 1) as f64 * s).collect(),
        }
    }

    /// The `2^n` cubes of level `level - 1` partitioning this cube.
    pub fn children(&self) -> Vec<Cube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                let index = self
                    .index
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| 2 * m + ((mask >> (n - 1 - i)) & 1) as i64)
                    .collect();
                Cube::new(self.level - 1, index)
            })
            .collect()
    }

    pub fn parent(&self) -> Cube {
        Cube::new(
            self.level + 1,
            self.index.iter().map(|&m| m.div_euclid(2)).collect(),
        )
    }

    /// The ancestor at `level` (`level >= self.level`).
    pub fn ancestor_at(&self, level: i32) -> Cube {
        debug_assert!(level >= self.level);
        let shift = (level - self.level) as u32;
        Cube::new(
            level,
            self.index
                .iter()
                .map(|&m| m.div_euclid(1i64 << shift))
                .collect(),
        )
    }

    /// Set inclusion `other ⊆ self`.
    pub fn contains(&self, other: &Cube) -> bool {
        other.level <= self.level && other.ancestor_at(self.level) == *self
    }

    pub fn is_disjoint(&self, other: &Cube) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.to_box().contains_point(x)
    }

    /// Concentric dilate `3Q`: same center, side `3 * 2^level`.
    pub fn dilate3(&self) -> BoxRegion {
        let s = self.side();
        BoxRegion {
            lo: self.index.iter().map(|&m| (m - 1) as f64 * s).collect(),
            hi: self.index.iter().map(|&m| (m + 2) as f64 * s).collect(),
        }
    }
}

/// A truncated dyadic grid.
///
/// The window box is the union of the top-level cubes with indices in
/// `origin_offset + [0, extent)`. Finest cells live at `level_min`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub dim: usize,
    pub level_min: i32,
    pub level_max: i32,
    pub origin_offset: Vec<i64>,
    pub extent: Vec<i64>,
}

impl Window {
    pub fn new(
        dim: usize,
        level_min: i32,
        level_max: i32,
        origin_offset: Vec<i64>,
        extent: Vec<i64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidWindow("dimension must be >= 1".into()));
        }
        if level_min > level_max {
            return Err(Error::InvalidWindow(format!(
                "level_min {level_min} > level_max {level_max}"
            )));
        }
        if origin_offset.len() != dim || extent.len() != dim {
            return Err(Error::InvalidWindow("offset/extent length != dim".into()));
        }
        if extent.iter().any(|&e| e < 1) {
            return Err(Error::InvalidWindow("extent must be >= 1 per axis".into()));
        }
        let span = (level_max - level_min) as u32;
        if span > 30 {
            return Err(Error::InvalidWindow(format!("level span {span} too large")));
        }
        let cells = extent
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul((e as usize) << span));
        match cells {
            Some(c) if c <= MAX_CELLS => {}
            _ => {
                return Err(Error::InvalidWindow(format!(
                    "more than {MAX_CELLS} finest cells"
                )))
            }
        }
        Ok(Window { dim, level_min, level_max, origin_offset, extent })
    }

    /// The `2^n` top cubes surrounding the origin, i.e. the box
    /// `[-2^level_max, 2^level_max)^n`.
    pub fn centered(dim: usize, level_min: i32, level_max: i32) -> Result<Self> {
        Window::new(dim, level_min, level_max, vec![-1; dim], vec![2; dim])
    }

    /// A window consisting of the single top cube `top` refined down to `level_min`.
    pub fn single(top: &Cube, level_min: i32) -> Result<Self> {
        Window::new(
            top.dim(),
            level_min,
            top.level,
            top.index.clone(),
            vec![1; top.dim()],
        )
    }

    /// Same top cubes, different finest level.
    pub fn with_level_min(&self, level_min: i32) -> Result<Self> {
        Window::new(
            self.dim,
            level_min,
            self.level_max,
            self.origin_offset.clone(),
            self.extent.clone(),
        )
    }

    pub fn span(&self) -> u32 {
        (self.level_max - self.level_min) as u32
    }

    pub fn cells_per_axis(&self, axis: usize) -> usize {
        (self.extent[axis] as usize) << self.span()
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim).map(|i| self.cells_per_axis(i)).collect()
    }

    pub fn num_cells(&self) -> usize {
        (0..self.dim).map(|i| self.cells_per_axis(i)).product()
    }

    pub fn cell_side(&self) -> f64 {
        pow2(self.level_min)
    }

    pub fn cell_volume(&self) -> f64 {
        pow2(self.level_min * self.dim as i32)
    }

    pub fn bounds(&self) -> BoxRegion {
        let s = pow2(self.level_max);
        BoxRegion {
            lo: self.origin_offset.iter().map(|&o| o as f64 * s).collect(),
            hi: self
                .origin_offset
                .iter()
                .zip(&self.extent)
                .map(|(&o, &e)| (o + e) as f64 * s)
                .collect(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.bounds().volume()
    }

    /// Global finest-level index of local cell coordinate 0 on each axis.
    fn cell_origin(&self) -> Vec<i64> {
        self.origin_offset.iter().map(|&o| o << self.span()).collect()
    }

    pub fn linear_index(&self, local: &[usize]) -> usize {
        let mut lin = 0usize;
        for (axis, &l) in local.iter().enumerate() {
            lin = lin * self.cells_per_axis(axis) + l;
        }
        lin
    }

    pub fn local_index(&self, mut lin: usize) -> Vec<usize> {
        let mut local = vec![0usize; self.dim];
        for axis in (0..self.dim).rev() {
            let n = self.cells_per_axis(axis);
            local[axis] = lin % n;
            lin /= n;
        }
        local
    }

    /// Global integer index (at `level_min`) of a finest cell.
    pub fn cell_global_index(&self, lin: usize) -> Vec<i64> {
        let origin = self.cell_origin();
        self.local_index(lin)
            .iter()
            .zip(origin)
            .map(|(&l, o)| o + l as i64)
            .collect()
    }

    /// Linear index of the finest cell with the given global index, if inside.
    pub fn cell_from_global(&self, global: &[i64]) -> Option<usize> {
        let origin = self.cell_origin();
        let mut local = Vec::with_capacity(self.dim);
        for axis in 0..self.dim {
            let l = global[axis] - origin[axis];
            if l < 0 || l as usize >= self.cells_per_axis(axis) {
                return None;
            }
            local.push(l as usize);
        }
        Some(self.linear_index(&local))
    }

    pub fn cell_cube(&self, lin: usize) -> Cube {
        Cube::new(self.level_min, self.cell_global_index(lin))
    }

    pub fn cell_center(&self, lin: usize) -> Vec<f64> {
        let h = self.cell_side();
        self.cell_global_index(lin)
            .iter()
            .map(|&g| (g as f64 + 0.5) * h)
            .collect()
    }

    /// Finest cell containing `x` under the half-open convention.
    pub fn cell_of_point(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let h = self.cell_side();
        let global: Vec<i64> = x.iter().map(|&xi| (xi / h).floor() as i64).collect();
        self.cell_from_global(&global)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.cell_of_point(x).is_some()
    }

    pub fn contains_cube(&self, q: &Cube) -> bool {
        if q.dim() != self.dim || q.level < self.level_min || q.level > self.level_max {
            return false;
        }
        let top = q.ancestor_at(self.level_max);
        top.index
            .iter()
            .zip(self.origin_offset.iter().zip(&self.extent))
            .all(|(&m, (&o, &e))| m >= o && m < o + e)
    }

    /// Cubes of level `k`, lexicographic in their index.
    pub fn cubes_at_level(&self, k: i32) -> Vec<Cube> {
        if k < self.level_min || k > self.level_max {
            return Vec::new();
        }
        let shift = (self.level_max - k) as u32;
        let lo: Vec<i64> = self.origin_offset.iter().map(|&o| o << shift).collect();
        let counts: Vec<i64> = self.extent.iter().map(|&e| e << shift).collect();
        let total: i64 = counts.iter().product();
        (0..total)
            .map(|mut lin| {
                let mut index = vec![0i64; self.dim];
                for axis in (0..self.dim).rev() {
                    index[axis] = lo[axis] + lin % counts[axis];
                    lin /= counts[axis];
                }
                Cube::new(k, index)
            })
            .collect()
    }

    /// All window cubes, coarsest level first.
    pub fn all_cubes(&self) -> Vec<Cube> {
        (self.level_min..=self.level_max)
            .rev()
            .flat_map(|k| self.cubes_at_level(k))
            .collect()
    }

    pub fn num_cubes(&self) -> usize {
        (self.level_min..=self.level_max)
            .map(|k| {
                let shift = (self.level_max - k) as u32;
                self.extent.iter().map(|&e| (e as usize) << shift).product::<usize>()
            })
            .sum()
    }

    /// Strict ancestors of `q` inside the window, nearest first, up to `level_max`.
    pub fn ancestors(&self, q: &Cube) -> Result<Vec<Cube>> {
        if !self.contains_cube(q) {
            return Err(Error::OutsideWindow(format!("{q:?}")));
        }
        Ok((q.level + 1..=self.level_max).map(|k| q.ancestor_at(k)).collect())
    }

    /// One cube per level containing `x`, finest first.
    pub fn cubes_containing(&self, x: &[f64]) -> Result<Vec<Cube>> {
        let cell = self
            .cell_of_point(x)
            .ok_or_else(|| Error::OutsideWindow(format!("point {x:?}")))?;
        let finest = self.cell_cube(cell);
        Ok((self.level_min..=self.level_max)
            .map(|k| finest.ancestor_at(k))
            .collect())
    }

    /// Every pair `(Q, Q')` with `Q ⊆ Q'`, both window cubes.
    pub fn nested_pairs(&self) -> impl Iterator<Item = (Cube, Cube)> + '_ {
        let level_max = self.level_max;
        self.all_cubes().into_iter().flat_map(move |q| {
            (q.level..=level_max).map(move |k| {
                let anc = q.ancestor_at(k);
                (q.clone(), anc)
            })
        })
    }

    /// Linear indices of the finest cells inside a window cube.
    pub fn cells_in_cube(&self, q: &Cube) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_cell_in_cube(q, |c| out.push(c));
        out
    }

    pub fn for_each_cell_in_cube(&self, q: &Cube, mut f: impl FnMut(usize)) {
        debug_assert!(self.contains_cube(q));
        let shift = (q.level - self.level_min) as u32;
        let origin = self.cell_origin();
        let side = 1usize << shift;
        let start: Vec<usize> = q
            .index
            .iter()
            .zip(&origin)
            .map(|(&m, &o)| ((m << shift) - o) as usize)
            .collect();
        let mut local = start.clone();
        let total = side.pow(self.dim as u32);
        for _ in 0..total {
            f(self.linear_index(&local));
            for axis in (0..self.dim).rev() {
                local[axis] += 1;
                if local[axis] < start[axis] + side {
                    break;
                }
                local[axis] = start[axis];
            }
        }
    }

    /// Number of cubes of level `k` along each axis.
    pub fn level_shape(&self, k: i32) -> Vec<usize> {
        let shift = (self.level_max - k) as u32;
        self.extent.iter().map(|&e| (e as usize) << shift).collect()
    }

    /// Row-major slot of a window cube among the cubes of its level.
    pub fn cube_slot(&self, q: &Cube) -> usize {
        let shift = (self.level_max - q.level) as u32;
        let shape = self.level_shape(q.level);
        let mut lin = 0usize;
        for axis in 0..self.dim {
            let l = q.index[axis] - (self.origin_offset[axis] << shift);
            lin = lin * shape[axis] + l as usize;
        }
        lin
    }

    /// Slot of the cube at level `k` with the given global index, if inside.
    pub fn slot_from_global(&self, k: i32, index: &[i64]) -> Option<usize> {
        let shift = (self.level_max - k) as u32;
        let shape = self.level_shape(k);
        let mut lin = 0usize;
        for axis in 0..self.dim {
            let l = index[axis] - (self.origin_offset[axis] << shift);
            if l < 0 || l as usize >= shape[axis] {
                return None;
            }
            lin = lin * shape[axis] + l as usize;
        }
        Some(lin)
    }

    /// Per-level reduction of a cell array: entry `j` holds one value per
    /// cube of level `level_min + j`, in slot order. Entry 0 is the input.
    pub fn aggregate(&self, cells: &[f64], op: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
        assert_eq!(cells.len(), self.num_cells());
        let mut out = vec![cells.to_vec()];
        for k in self.level_min + 1..=self.level_max {
            let child_shape = self.level_shape(k - 1);
            let shape = self.level_shape(k);
            let total: usize = shape.iter().product();
            let mut acc: Vec<Option<f64>> = vec![None; total];
            let prev = out.last().unwrap();
            let mut local = vec![0usize; self.dim];
            for (slot, &v) in prev.iter().enumerate() {
                let mut rem = slot;
                for axis in (0..self.dim).rev() {
                    local[axis] = rem % child_shape[axis];
                    rem /= child_shape[axis];
                }
                let mut p = 0usize;
                for axis in 0..self.dim {
                    p = p * shape[axis] + local[axis] / 2;
                }
                acc[p] = Some(match acc[p] {
                    None => v,
                    Some(a) => op(a, v),
                });
            }
            out.push(acc.into_iter().map(|a| a.unwrap()).collect());
        }
        out
    }

    /// For every cube of level `k < level_max`, the slot of its parent.
    pub fn parent_slots(&self, k: i32) -> Vec<usize> {
        let shape = self.level_shape(k);
        let up = self.level_shape(k + 1);
        let total: usize = shape.iter().product();
        let mut local = vec![0usize; self.dim];
        (0..total)
            .map(|slot| {
                let mut rem = slot;
                for axis in (0..self.dim).rev() {
                    local[axis] = rem % shape[axis];
                    rem /= shape[axis];
                }
                let mut p = 0usize;
                for axis in 0..self.dim {
                    p = p * up[axis] + local[axis] / 2;
                }
                p
            })
            .collect()
    }

    /// Per finest cell, the max of a per-cube quantity over every window
    /// cube containing the cell. `per_level[j]` is indexed by slot at level
    /// `level_min + j`.
    pub fn sup_over_ancestors(&self, per_level: &[Vec<f64>]) -> Vec<f64> {
        let top = (self.level_max - self.level_min) as usize;
        let mut best = per_level[top].clone();
        for j in (0..top).rev() {
            let k = self.level_min + j as i32;
            let parents = self.parent_slots(k);
            best = per_level[j]
                .iter()
                .zip(&parents)
                .map(|(&v, &p)| v.max(best[p]))
                .collect();
        }
        best
    }

    /// The cube of level `k` at a slot.
    pub fn slot_cube(&self, k: i32, slot: usize) -> Cube {
        let shift = (self.level_max - k) as u32;
        let shape = self.level_shape(k);
        let mut index = vec![0i64; self.dim];
        let mut rem = slot;
        for axis in (0..self.dim).rev() {
            index[axis] = (self.origin_offset[axis] << shift) + (rem % shape[axis]) as i64;
            rem /= shape[axis];
        }
        Cube::new(k, index)
    }

    /// Slots of the same-level neighbours making up `3Q` that lie inside the
    /// window. Same-level cubes are either inside or outside, so this is the
    /// exact clipped dilate.
    pub fn dilate3_slots(&self, q: &Cube) -> Vec<usize> {
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32));
        let mut offs = vec![-1i64; self.dim];
        let mut idx = q.index.clone();
        loop {
            for axis in 0..self.dim {
                idx[axis] = q.index[axis] + offs[axis];
            }
            if let Some(s) = self.slot_from_global(q.level, &idx) {
                out.push(s);
            }
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                offs[axis] += 1;
                if offs[axis] <= 1 {
                    break;
                }
                offs[axis] = -1;
            }
        }
    }

    /// Visit every finest cell meeting `region` with its overlap volume.
    /// Returns the total overlap volume `|region ∩ window|`.
    pub fn for_each_overlap(&self, region: &BoxRegion, mut f: impl FnMut(usize, f64)) -> f64 {
        let h = self.cell_side();
        let bounds = self.bounds();
        let mut per_axis: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.dim);
        for axis in 0..self.dim {
            let lo = region.lo[axis].max(bounds.lo[axis]);
            let hi = region.hi[axis].min(bounds.hi[axis]);
            if hi <= lo {
                return 0.0;
            }
            let n = self.cells_per_axis(axis);
            let base = bounds.lo[axis];
            let first = (((lo - base) / h).floor() as usize).min(n - 1);
            let mut cells = Vec::new();
            let mut i = first;
            while i < n {
                let left = base + i as f64 * h;
                let right = left + h;
                if left >= hi {
                    break;
                }
                let ov = right.min(hi) - left.max(lo);
                if ov > 0.0 {
                    cells.push((i, ov));
                }
                i += 1;
            }
            if cells.is_empty() {
                return 0.0;
            }
            per_axis.push(cells);
        }
        let mut total = 0.0;
        let mut pos = vec![0usize; self.dim];
        let mut local = vec![0usize; self.dim];
        loop {
            let mut vol = 1.0;
            for axis in 0..self.dim {
                let (i, ov) = per_axis[axis][pos[axis]];
                local[axis] = i;
                vol *= ov;
            }
            f(self.linear_index(&local), vol);
            total += vol;
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return total;
                }
                axis -= 1;
                pos[axis] += 1;
                if pos[axis] < per_axis[axis].len() {
                    break;
                }
                pos[axis] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_window(level_min: i32) -> Window {
        Window::single(&Cube::unit(1), level_min).unwrap()
    }

    #[test]
    fn children_bisect_interval() {
        let kids = Cube::unit(1).children();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].to_box(), BoxRegion::new(vec![0.0], vec![0.5]));
        assert_eq!(kids[1].to_box(), BoxRegion::new(vec![0.5], vec![1.0]));
    }

    #[test]
    fn children_of_unit_square_are_quadrants() {
        let kids = Cube::unit(2).children();
        assert_eq!(kids.len(), 4);
        let mut lowers: Vec<Vec<f64>> = kids.iter().map(|c| c.lower()).collect();
        lowers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            lowers,
            vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]
        );
        assert!(kids.iter().all(|k| k.volume() == 0.25));
    }

    #[test]
    fn grandchildren_cover_interval() {
        let grand: Vec<Cube> = Cube::unit(1)
            .children()
            .iter()
            .flat_map(|c| c.children())
            .collect();
        let mut boxes: Vec<(f64, f64)> = grand.iter().map(|c| (c.lower()[0], c.lower()[0] + c.side())).collect();
        boxes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(boxes, vec![(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]);
    }

    #[test]
    fn ancestors_chain() {
        let w = unit_window(-2);
        let q = Cube::new(-2, vec![0]);
        let anc = w.ancestors(&q).unwrap();
        assert_eq!(anc, vec![Cube::new(-1, vec![0]), Cube::new(0, vec![0])]);
        assert!(w.ancestors(&Cube::unit(1)).unwrap().is_empty());
        assert!(w.ancestors(&Cube::new(-2, vec![4])).is_err());
    }

    #[test]
    fn ancestor_chain_lengths_match_count() {
        let w = Window::centered(2, -2, 0).unwrap();
        let total: usize = w.all_cubes().iter().map(|q| w.ancestors(q).unwrap().len()).sum();
        // level -2: 64 cubes * 2, level -1: 16 cubes * 1
        assert_eq!(total, 64 * 2 + 16);
    }

    #[test]
    fn dilate3_examples() {
        assert_eq!(Cube::unit(1).dilate3(), BoxRegion::new(vec![-1.0], vec![2.0]));
        let half = Cube::new(-1, vec![1]);
        assert_eq!(half.dilate3(), BoxRegion::new(vec![0.0], vec![1.5]));
        assert_eq!(half.dilate3().center(), vec![0.75]);
    }

    #[test]
    fn cubes_containing_point() {
        let w = unit_window(-2);
        let cs = w.cubes_containing(&[0.3]).unwrap();
        assert_eq!(
            cs,
            vec![Cube::new(-2, vec![1]), Cube::new(-1, vec![0]), Cube::new(0, vec![0])]
        );
        // boundary point goes to the right cell
        let cs = w.cubes_containing(&[0.25]).unwrap();
        assert_eq!(cs[0], Cube::new(-2, vec![1]));
        assert_eq!(cs.len(), 3);
        assert!(w.cubes_containing(&[1.0]).is_err());
    }

    #[test]
    fn nested_pairs_small_window() {
        let w = unit_window(-1);
        let pairs: Vec<(Cube, Cube)> = w.nested_pairs().collect();
        assert_eq!(pairs.len(), 5);
        let unit = Cube::unit(1);
        let l = Cube::new(-1, vec![0]);
        let r = Cube::new(-1, vec![1]);
        for p in [
            (unit.clone(), unit.clone()),
            (l.clone(), l.clone()),
            (l.clone(), unit.clone()),
            (r.clone(), r.clone()),
            (r.clone(), unit.clone()),
        ] {
            assert!(pairs.contains(&p), "{p:?}");
        }
        assert!(pairs.iter().all(|(q, qp)| qp.contains(q)));
    }

    #[test]
    fn single_level_window_has_only_diagonal_pairs() {
        let w = Window::centered(2, 0, 0).unwrap();
        let pairs: Vec<_> = w.nested_pairs().collect();
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|(a, b)| a == b));
    }

    #[test]
    fn levels_tile_window() {
        let w = Window::centered(2, -2, 0).unwrap();
        for k in w.level_min..=w.level_max {
            let cubes = w.cubes_at_level(k);
            let vol: f64 = cubes.iter().map(|c| c.volume()).sum();
            assert_eq!(vol, w.volume());
            let mut seen = vec![0u32; w.num_cells()];
            for c in &cubes {
                w.for_each_cell_in_cube(c, |i| seen[i] += 1);
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
        assert_eq!(w.num_cubes(), w.all_cubes().len());
    }

    #[test]
    fn overlap_volumes_sum() {
        let w = Window::centered(1, -2, 0).unwrap();
        let b = BoxRegion::new(vec![-0.3], vec![0.6]);
        let mut s = 0.0;
        let total = w.for_each_overlap(&b, |_, v| s += v);
        assert!((total - 0.9).abs() < 1e-15);
        assert!((s - 0.9).abs() < 1e-15);
        // clipped at the window edge
        let total = w.for_each_overlap(&Cube::unit(1).dilate3(), |_, _| {});
        assert_eq!(total, 2.0);
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(1, 1, 0, vec![0], vec![1]).is_err());
        assert!(Window::new(0, 0, 1, vec![], vec![]).is_err());
        assert!(Window::new(1, 0, 1, vec![0], vec![0]).is_err());
        assert!(Window::centered(1, -40, 0).is_err());
    }
}
