//! Points, norms, unit-ball volumes and a cell-list spatial index.
//!
//! The grid supports exact fixed-radius range queries and exact k-nearest
//! neighbor distances via an expanding-shell search. Results are bitwise
//! identical to brute force because both paths evaluate the same norm.

use std::collections::HashMap;

use crate::Error;

/// Maximum ambient dimension the cell grid supports.
pub const MAX_DIM: usize = 8;

/// Which norm defines the unit ball and all adjacency tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NormSpec {
    /// `‖x‖₂`
    Euclidean,
    /// `‖x‖_∞`
    MaxCoordinate,
    /// `‖x‖₁`
    SumAbs,
}

impl NormSpec {
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormSpec::MaxCoordinate => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            NormSpec::SumAbs => x.iter().map(|v| v.abs()).sum(),
        }
    }

    /// Distance between two points of the same dimension.
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            NormSpec::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            NormSpec::MaxCoordinate => a
                .iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
            NormSpec::SumAbs => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NormSpec::Euclidean => "euclidean",
            NormSpec::MaxCoordinate => "max",
            NormSpec::SumAbs => "sum",
        }
    }
}

impl std::str::FromStr for NormSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "euclidean" | "l2" => Ok(NormSpec::Euclidean),
            "max" | "linf" => Ok(NormSpec::MaxCoordinate),
            "sum" | "l1" => Ok(NormSpec::SumAbs),
            _ => Err(Error::Parse(format!("unknown norm `{s}`"))),
        }
    }
}

/// Volume of `{x : ‖x‖ ≤ 1}` in dimension `d`.
///
/// Euclidean: `π^{d/2}/Γ(d/2+1)`, max-norm: `2^d`, sum-norm: `2^d/d!`.
pub fn unit_ball_volume(d: usize, norm: NormSpec) -> Result<f64, Error> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    Ok(match norm {
        NormSpec::Euclidean => {
            // θ_d = θ_{d−2}·2π/d with θ_1 = 2, θ_2 = π: exact at small d,
            // unlike going through Γ(d/2 + 1)
            let mut theta = if d % 2 == 1 { 2.0 } else { std::f64::consts::PI };
            let mut dim = 2 - d % 2;
            while dim < d {
                dim += 2;
                theta *= 2.0 * std::f64::consts::PI / dim as f64;
            }
            theta
        }
        NormSpec::MaxCoordinate => 2f64.powi(d as i32),
        NormSpec::SumAbs => {
            let fact: f64 = (1..=d).map(|v| v as f64).product();
            2f64.powi(d as i32) / fact
        }
    })
}

type CellKey = [i32; MAX_DIM];

/// Uniform-bucket spatial index over a flat point array.
///
/// Immutable after build; queries never mutate, so shared references can be
/// used concurrently.
#[derive(Debug, Clone)]
pub struct CellGrid {
    dim: usize,
    cell_size: f64,
    coords: Vec<f64>,
    buckets: HashMap<CellKey, Vec<u32>>,
    extent: f64,
}

impl CellGrid {
    /// Build a grid over `n` points stored flat as `coords[i*dim..(i+1)*dim]`.
    pub fn build(dim: usize, coords: &[f64], cell_size: f64) -> Result<CellGrid, Error> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension must be in 1..={MAX_DIM}"
            )));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidArgument("cell_size must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(
                "coordinate array length is not a multiple of dim".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let n = coords.len() / dim;
        let mut buckets: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for i in 0..n {
            let key = cell_key(&coords[i * dim..(i + 1) * dim], cell_size);
            buckets.entry(key).or_default().push(i as u32);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &c in coords {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        let extent = if lo > hi { 0.0 } else { hi - lo };
        Ok(CellGrid {
            dim,
            cell_size,
            coords: coords.to_vec(),
            buckets,
            extent,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Indices `j ≠ i` with `‖x_j − x_i‖ ≤ r` (closed ball).
    pub fn range_neighbors(&self, i: usize, r: f64, norm: NormSpec) -> Result<Vec<usize>, Error> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange(i, self.len()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        let x = self.point(i);
        let reach = (r / self.cell_size).ceil() as i64 + 1;
        let mut out = Vec::new();
        self.for_cells_within(x, reach, |j| {
            if j != i && norm.dist(x, self.point(j)) <= r {
                out.push(j);
            }
        });
        out.sort_unstable();
        Ok(out)
    }

    /// The k-th smallest distance from point `i` to the rest of the cloud.
    ///
    /// Expanding-shell search: ring ℓ ≥ 1 only holds points at distance
    /// ≥ (ℓ−1)·cell_size in any of the three norms, so once the current k-th
    /// candidate is below that bound the search stops.
    pub fn knn_distance(&self, i: usize, k: usize, norm: NormSpec) -> Result<f64, Error> {
        let n = self.len();
        if i >= n {
            return Err(Error::IndexOutOfRange(i, n));
        }
        if k == 0 || k >= n {
            return Err(Error::InsufficientPoints { k, n });
        }
        let x = self.point(i);
        let key = cell_key(x, self.cell_size);
        // max-heap of the k closest distances seen so far
        let mut best: std::collections::BinaryHeap<ordf64::OrdF64> =
            std::collections::BinaryHeap::with_capacity(k + 1);
        let mut ring = 0i64;
        loop {
            let mut visited_any = false;
            self.for_ring(&key, ring, |j| {
                visited_any = true;
                if j != i {
                    let d = norm.dist(x, self.point(j));
                    if best.len() < k {
                        best.push(ordf64::OrdF64(d));
                    } else if d < best.peek().unwrap().0 {
                        best.push(ordf64::OrdF64(d));
                        best.pop();
                    }
                }
            });
            // ring ℓ+1 holds only points at distance ≥ ℓ·cell_size
            let next_bound = ring as f64 * self.cell_size;
            if best.len() == k && best.peek().unwrap().0 <= next_bound {
                break;
            }
            // safeguard: past the whole bounding box everything has been seen
            if ring as f64 * self.cell_size > self.extent + 2.0 * self.cell_size && !visited_any {
                break;
            }
            ring += 1;
        }
        if best.len() < k {
            return Err(Error::InsufficientPoints { k, n });
        }
        Ok(best.peek().unwrap().0)
    }

    fn for_cells_within<F: FnMut(usize)>(&self, x: &[f64], reach: i64, mut f: F) {
        let key = cell_key(x, self.cell_size);
        let mut cur = [0i32; MAX_DIM];
        self.visit_box(&key, reach, 0, &mut cur, &mut f);
    }

    fn visit_box<F: FnMut(usize)>(
        &self,
        center: &CellKey,
        reach: i64,
        axis: usize,
        cur: &mut CellKey,
        f: &mut F,
    ) {
        if axis == self.dim {
            if let Some(bucket) = self.buckets.get(cur) {
                for &j in bucket {
                    f(j as usize);
                }
            }
            return;
        }
        for off in -reach..=reach {
            cur[axis] = center[axis].saturating_add(off as i32);
            self.visit_box(center, reach, axis + 1, cur, f);
        }
        cur[axis] = 0;
    }

    /// Visit every point in cells at Chebyshev ring `ring` around `center`.
    fn for_ring<F: FnMut(usize)>(&self, center: &CellKey, ring: i64, mut f: F) {
        let mut cur = [0i32; MAX_DIM];
        self.visit_ring(center, ring, 0, false, &mut cur, &mut f);
    }

    fn visit_ring<F: FnMut(usize)>(
        &self,
        center: &CellKey,
        ring: i64,
        axis: usize,
        boundary_hit: bool,
        cur: &mut CellKey,
        f: &mut F,
    ) {
        if axis == self.dim {
            if (boundary_hit || ring == 0) && self.buckets.contains_key(cur) {
                for &j in &self.buckets[cur] {
                    f(j as usize);
                }
            }
            return;
        }
        for off in -ring..=ring {
            cur[axis] = center[axis].saturating_add(off as i32);
            self.visit_ring(
                center,
                ring,
                axis + 1,
                boundary_hit || off.abs() == ring,
                cur,
                f,
            );
        }
        cur[axis] = 0;
    }
}

fn cell_key(x: &[f64], cell_size: f64) -> CellKey {
    let mut key = [0i32; MAX_DIM];
    for (k, &c) in key.iter_mut().zip(x) {
        *k = (c / cell_size).floor() as i32;
    }
    key
}

mod ordf64 {
    #[derive(PartialEq, PartialOrd)]
    pub struct OrdF64(pub f64);
    impl Eq for OrdF64 {}
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for OrdF64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).unwrap()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes_match_closed_forms() {
        assert_eq!(unit_ball_volume(1, NormSpec::Euclidean).unwrap(), 2.0);
        assert_eq!(unit_ball_volume(2, NormSpec::MaxCoordinate).unwrap(), 4.0);
        assert!((unit_ball_volume(2, NormSpec::Euclidean).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3, NormSpec::SumAbs).unwrap() - 8.0 / 6.0).abs() < 1e-12);
        assert!(unit_ball_volume(0, NormSpec::Euclidean).is_err());
    }

    #[test]
    fn empty_grid_is_valid() {
        let g = CellGrid::build(1, &[], 0.1).unwrap();
        assert_eq!(g.bucket_count(), 0);
        assert!(g.is_empty());
    }

    #[test]
    fn bucket_assignment_is_floor_division() {
        let g = CellGrid::build(1, &[0.05, 0.15], 0.1).unwrap();
        assert_eq!(g.bucket_count(), 2);
        assert_eq!(g.range_neighbors(0, 0.2, NormSpec::Euclidean).unwrap(), vec![1]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CellGrid::build(1, &[f64::NAN], 0.1).is_err());
        assert!(CellGrid::build(2, &[0.0, f64::INFINITY], 0.1).is_err());
    }

    #[test]
    fn range_neighbors_small_line() {
        let g = CellGrid::build(1, &[0.0, 0.5, 2.0], 1.0).unwrap();
        assert_eq!(g.range_neighbors(0, 1.0, NormSpec::Euclidean).unwrap(), vec![1]);
        assert!(g.range_neighbors(2, 1.0, NormSpec::Euclidean).unwrap().is_empty());
        assert!(g.range_neighbors(3, 1.0, NormSpec::Euclidean).is_err());
    }

    #[test]
    fn knn_small_line() {
        let g = CellGrid::build(1, &[0.0, 1.0, 3.0], 0.7).unwrap();
        assert_eq!(g.knn_distance(1, 1, NormSpec::Euclidean).unwrap(), 1.0);
        assert_eq!(g.knn_distance(1, 2, NormSpec::Euclidean).unwrap(), 2.0);
        assert!(g.knn_distance(1, 3, NormSpec::Euclidean).is_err());
    }

    #[test]
    fn duplicated_points_count_at_distance_zero() {
        let g = CellGrid::build(2, &[0.3, 0.3, 0.3, 0.3], 0.1).unwrap();
        assert_eq!(g.knn_distance(0, 1, NormSpec::Euclidean).unwrap(), 0.0);
        assert_eq!(g.range_neighbors(0, 0.5, NormSpec::MaxCoordinate).unwrap(), vec![1]);
    }
}
