//! Uniform hash-grid index over 3-D points.
//!
//! Supports incremental insertion and position updates, which a fused cloud
//! needs because merged points move. Queries are exact: every point within
//! the requested radius is visited, and results are returned in a
//! deterministic order regardless of hash-map internals.

use std::collections::HashMap;

use nalgebra::Vector3;

/// Point index type stored in the grid.
pub type PointId = u32;

#[derive(Debug, Clone)]
pub struct HashGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<(PointId, Vector3<f64>)>>,
    len: usize,
}

impl HashGrid {
    /// `cell` is the edge length of one grid cell, meters.
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        Self {
            cell,
            cells: HashMap::new(),
            len: 0,
        }
    }

    /// Builds an index over `positions`, ids are the slice indices.
    pub fn build(cell: f64, positions: &[Vector3<f64>]) -> Self {
        let mut grid = Self::new(cell);
        for (i, p) in positions.iter().enumerate() {
            grid.insert(i as PointId, p);
        }
        grid
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn key(&self, p: &Vector3<f64>) -> [i64; 3] {
        [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ]
    }

    pub fn insert(&mut self, id: PointId, p: &Vector3<f64>) {
        self.cells.entry(self.key(p)).or_default().push((id, *p));
        self.len += 1;
    }

    pub fn remove(&mut self, id: PointId, p: &Vector3<f64>) {
        let key = self.key(p);
        let bucket = self.cells.get_mut(&key).expect("point cell exists");
        let at = bucket
            .iter()
            .position(|(i, _)| *i == id)
            .expect("point present in its cell");
        bucket.remove(at);
        if bucket.is_empty() {
            self.cells.remove(&key);
        }
        self.len -= 1;
    }

    /// Moves point `id` from `old` to `new`.
    pub fn update(&mut self, id: PointId, old: &Vector3<f64>, new: &Vector3<f64>) {
        if self.key(old) == self.key(new) {
            let key = self.key(old);
            let bucket = self.cells.get_mut(&key).expect("point cell exists");
            let entry = bucket
                .iter_mut()
                .find(|(i, _)| *i == id)
                .expect("point present in its cell");
            entry.1 = *new;
        } else {
            self.remove(id, old);
            self.insert(id, new);
        }
    }

    /// All points with `|p - center| <= radius`, as `(id, squared distance)`
    /// sorted by id.
    pub fn within_radius(&self, center: &Vector3<f64>, radius: f64) -> Vec<(PointId, f64)> {
        let mut out = Vec::new();
        if radius < 0.0 || self.len == 0 {
            return out;
        }
        let r2 = radius * radius;
        let lo = self.key(&(center - Vector3::repeat(radius)));
        let hi = self.key(&(center + Vector3::repeat(radius)));
        for ix in lo[0]..=hi[0] {
            for iy in lo[1]..=hi[1] {
                for iz in lo[2]..=hi[2] {
                    let Some(bucket) = self.cells.get(&[ix, iy, iz]) else {
                        continue;
                    };
                    for (id, p) in bucket {
                        let d2 = (p - center).norm_squared();
                        if d2 <= r2 {
                            out.push((*id, d2));
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|(id, _)| *id);
        out
    }

    /// Nearest point within `radius` of `center`; ties break toward the
    /// smaller id.
    pub fn nearest_within(&self, center: &Vector3<f64>, radius: f64) -> Option<(PointId, f64)> {
        let mut best: Option<(f64, PointId)> = None;
        if radius < 0.0 || self.len == 0 {
            return None;
        }
        let r2 = radius * radius;
        let lo = self.key(&(center - Vector3::repeat(radius)));
        let hi = self.key(&(center + Vector3::repeat(radius)));
        for ix in lo[0]..=hi[0] {
            for iy in lo[1]..=hi[1] {
                for iz in lo[2]..=hi[2] {
                    let Some(bucket) = self.cells.get(&[ix, iy, iz]) else {
                        continue;
                    };
                    for (id, p) in bucket {
                        let d2 = (p - center).norm_squared();
                        if d2 > r2 {
                            continue;
                        }
                        let cand = (d2, *id);
                        if best.is_none_or(|b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        best.map(|(d2, id)| (id, d2))
    }
}
