//! Graph-level functionals of a cloud at radius `r`: degree profiles, the
//! exact threshold radius `S_k`, extreme-vertex point sets, scaling
//! operators and induced subgraph counts.

use std::collections::BTreeMap;

use crate::geometry::{CellGrid, NormSpec};
use crate::graph_atlas::SmallGraph;
use crate::sampling::PointCloud;
use crate::Error;

/// Per-vertex degrees plus the counts `W_{j,n}` and the maximum degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    /// `j → W_{j,n}`, number of vertices of degree `j`.
    pub counts: BTreeMap<usize, usize>,
    /// `Δₙ`; 0 for the empty cloud by convention.
    pub max_degree: usize,
}

impl DegreeProfile {
    pub fn count(&self, j: usize) -> usize {
        self.counts.get(&j).copied().unwrap_or(0)
    }

    /// `Σ_{j ≥ k} W_{j,n}`.
    pub fn count_at_least(&self, k: usize) -> usize {
        self.counts
            .iter()
            .filter(|(&j, _)| j >= k)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }
}

/// Which vertices qualify as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeTag {
    ExactDegree(usize),
    MaxDegree,
}

/// Support of `Φ_{k,n}` (exact degree k) or `ℳₙ` (maximum degree).
#[derive(Debug, Clone)]
pub struct ExtremeSet {
    pub tag: ExtremeTag,
    pub indices: Vec<usize>,
    /// Flat coordinates of the selected vertices, `dim` per entry.
    pub coords: Vec<f64>,
    pub dim: usize,
}

impl ExtremeSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Number of selected points falling in `[lo, hi)`.
    pub fn count_in_box(&self, lo: &[f64], hi: &[f64]) -> usize {
        (0..self.len())
            .filter(|&i| {
                self.point(i)
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(c, (a, b))| c >= a && c < b)
            })
            .count()
    }
}

/// Build a grid tuned for range queries at radius `r`.
pub fn grid_for_radius(cloud: &PointCloud, r: f64) -> Result<CellGrid, Error> {
    CellGrid::build(cloud.dim(), cloud.coords(), r)
}

/// Degrees of `G(cloud; r)` with closed-ball adjacency.
pub fn degree_profile(cloud: &PointCloud, r: f64, norm: NormSpec) -> Result<DegreeProfile, Error> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    if cloud.is_empty() {
        return Ok(DegreeProfile {
            degrees: Vec::new(),
            counts: BTreeMap::new(),
            max_degree: 0,
        });
    }
    let grid = grid_for_radius(cloud, r)?;
    degree_profile_with_grid(&grid, r, norm)
}

pub fn degree_profile_with_grid(
    grid: &CellGrid,
    r: f64,
    norm: NormSpec,
) -> Result<DegreeProfile, Error> {
    let n = grid.len();
    let mut degrees = Vec::with_capacity(n);
    for i in 0..n {
        degrees.push(grid.range_neighbors(i, r, norm)?.len());
    }
    let mut counts = BTreeMap::new();
    for &d in &degrees {
        *counts.entry(d).or_insert(0usize) += 1;
    }
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    Ok(DegreeProfile {
        degrees,
        counts,
        max_degree,
    })
}

/// The threshold radius `S_k = min_i (k-th nearest-neighbor distance of i)`:
/// the smallest `r` at which some vertex of `G(cloud; r)` reaches degree `k`.
pub fn threshold_radius(cloud: &PointCloud, k: usize, norm: NormSpec) -> Result<f64, Error> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(Error::InsufficientPoints { k, n });
    }
    let cell = crate::sampling::knn_cell_size(n, cloud.dim(), k, norm, cloud.density);
    threshold_radius_with_cell(cloud, k, norm, cell)
}

/// Same as [`threshold_radius`] with an explicit grid cell size (the result
/// never depends on it).
pub fn threshold_radius_with_cell(
    cloud: &PointCloud,
    k: usize,
    norm: NormSpec,
    cell_size: f64,
) -> Result<f64, Error> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(Error::InsufficientPoints { k, n });
    }
    let grid = CellGrid::build(cloud.dim(), cloud.coords(), cell_size)?;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let d = grid.knn_distance(i, k, norm)?;
        if d < best {
            best = d;
        }
    }
    Ok(best)
}

/// Vertices with the prescribed degree property at radius `r`.
pub fn extreme_points(
    cloud: &PointCloud,
    r: f64,
    norm: NormSpec,
    tag: ExtremeTag,
) -> Result<ExtremeSet, Error> {
    let profile = degree_profile(cloud, r, norm)?;
    extreme_points_from_profile(cloud, &profile, tag)
}

pub fn extreme_points_from_profile(
    cloud: &PointCloud,
    profile: &DegreeProfile,
    tag: ExtremeTag,
) -> Result<ExtremeSet, Error> {
    let want = match tag {
        ExtremeTag::ExactDegree(k) => k,
        ExtremeTag::MaxDegree => profile.max_degree,
    };
    let indices: Vec<usize> = profile
        .degrees
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == want)
        .map(|(i, _)| i)
        .collect();
    let mut coords = Vec::with_capacity(indices.len() * cloud.dim());
    for &i in &indices {
        coords.extend_from_slice(cloud.point(i));
    }
    Ok(ExtremeSet {
        tag,
        indices,
        coords,
        dim: cloud.dim(),
    })
}

/// The composite `D_a ∘ T_y` acting on flat coordinates: `x ↦ a·(x + y)`.
pub fn scale_translate_coords(coords: &mut [f64], dim: usize, a: f64, y: &[f64]) {
    assert!(a > 0.0 && y.len() == dim);
    for p in coords.chunks_exact_mut(dim) {
        for (c, &off) in p.iter_mut().zip(y) {
            *c = a * (*c + off);
        }
    }
}

/// `D_a(T_y ·)` on a cloud.
pub fn scale_translate_cloud(cloud: &PointCloud, a: f64, y: &[f64]) -> PointCloud {
    let mut coords = cloud.coords().to_vec();
    scale_translate_coords(&mut coords, cloud.dim(), a, y);
    PointCloud::from_flat(cloud.dim(), coords, cloud.density, cloud.seed)
}

/// `D_a(T_y ·)` on an extreme set.
pub fn scale_translate_set(set: &ExtremeSet, a: f64, y: &[f64]) -> ExtremeSet {
    let mut coords = set.coords.clone();
    scale_translate_coords(&mut coords, set.dim, a, y);
    ExtremeSet {
        tag: set.tag,
        indices: set.indices.clone(),
        coords,
        dim: set.dim,
    }
}

/// Number of `j`-subsets `Y ⊆ cloud` with `G(Y; r) ≅ Γ` (Γ connected,
/// `j ≤ 6`).
///
/// Each subset is found exactly once by requiring its minimum index to be
/// the expansion root; candidates are restricted to the root's
/// `(j−1)·r`-ball, which is lossless for connected Γ.
pub fn induced_subgraph_count(
    cloud: &PointCloud,
    r: f64,
    norm: NormSpec,
    gamma: &SmallGraph,
) -> Result<u64, Error> {
    let j = gamma.vertex_count();
    if j > 6 {
        return Err(Error::GraphTooLarge(j, 6));
    }
    if !gamma.is_connected() {
        return Err(Error::InvalidArgument(
            "subgraph counting requires a connected class".into(),
        ));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let n = cloud.len();
    if n < j {
        return Ok(0);
    }
    let target = gamma.canonical_form();
    let grid = CellGrid::build(cloud.dim(), cloud.coords(), r)?;
    let reach = (j - 1) as f64 * r;
    let mut total = 0u64;
    let mut subset: Vec<usize> = Vec::with_capacity(j);
    for root in 0..n {
        // candidates with larger index inside the diameter bound
        let mut cands: Vec<usize> = grid
            .range_neighbors(root, reach, norm)?
            .into_iter()
            .filter(|&c| c > root)
            .collect();
        cands.sort_unstable();
        if cands.len() + 1 < j {
            continue;
        }
        subset.clear();
        subset.push(root);
        total += count_subsets(cloud, r, norm, &target, &cands, 0, &mut subset, j);
    }
    Ok(total)
}

fn count_subsets(
    cloud: &PointCloud,
    r: f64,
    norm: NormSpec,
    target: &SmallGraph,
    cands: &[usize],
    start: usize,
    subset: &mut Vec<usize>,
    j: usize,
) -> u64 {
    if subset.len() == j {
        let pts: Vec<&[f64]> = subset.iter().map(|&i| cloud.point(i)).collect();
        let g = SmallGraph::from_configuration(&pts, r, norm).unwrap();
        return (g.canonical_form() == *target) as u64;
    }
    let mut total = 0;
    let remaining = j - subset.len();
    for idx in start..cands.len() {
        if cands.len() - idx < remaining {
            break;
        }
        subset.push(cands[idx]);
        total += count_subsets(cloud, r, norm, target, cands, idx + 1, subset, j);
        subset.pop();
    }
    total
}

/// Connected components of `G(cloud; r)` (used by the decomposition check
/// at small radius).
pub fn connected_components(
    cloud: &PointCloud,
    r: f64,
    norm: NormSpec,
) -> Result<Vec<Vec<usize>>, Error> {
    let n = cloud.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let grid = CellGrid::build(cloud.dim(), cloud.coords(), r)?;
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for u in grid.range_neighbors(v, r, norm)? {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    Ok(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_atlas::{k2, k3, p3};
    use crate::sampling::PointCloud;

    fn line_cloud(xs: &[f64]) -> PointCloud {
        PointCloud::from_flat(1, xs.to_vec(), crate::Density::UniformCube, 0)
    }

    #[test]
    fn degree_profile_hand_checked() {
        let c = line_cloud(&[0.0, 0.5, 2.0]);
        let p = degree_profile(&c, 1.0, NormSpec::Euclidean).unwrap();
        assert_eq!(p.degrees, vec![1, 1, 0]);
        assert_eq!(p.count(0), 1);
        assert_eq!(p.count(1), 2);
        assert_eq!(p.max_degree, 1);

        let c = line_cloud(&[0.0, 1.0, 3.0]);
        let p = degree_profile(&c, 2.0, NormSpec::Euclidean).unwrap();
        assert_eq!(p.degrees, vec![1, 2, 1]);
        assert_eq!(p.max_degree, 2);
        // handshake
        assert_eq!(p.degrees.iter().sum::<usize>() % 2, 0);
    }

    #[test]
    fn empty_cloud_profile() {
        let c = line_cloud(&[]);
        let p = degree_profile(&c, 1.0, NormSpec::Euclidean).unwrap();
        assert_eq!(p.max_degree, 0);
        assert!(p.counts.is_empty());
        assert!(threshold_radius(&c, 1, NormSpec::Euclidean).is_err());
    }

    #[test]
    fn threshold_radius_hand_checked() {
        let c = line_cloud(&[0.0, 1.0, 3.0]);
        assert_eq!(threshold_radius(&c, 1, NormSpec::Euclidean).unwrap(), 1.0);
        assert_eq!(threshold_radius(&c, 2, NormSpec::Euclidean).unwrap(), 2.0);
        assert!(threshold_radius(&c, 3, NormSpec::Euclidean).is_err());
    }

    #[test]
    fn extreme_points_hand_checked() {
        let c = line_cloud(&[0.0, 0.5, 2.0]);
        let e = extreme_points(&c, 1.0, NormSpec::Euclidean, ExtremeTag::ExactDegree(1)).unwrap();
        assert_eq!(e.indices, vec![0, 1]);
        let m = extreme_points(&c, 1.0, NormSpec::Euclidean, ExtremeTag::MaxDegree).unwrap();
        assert_eq!(m.indices, vec![0, 1]);
    }

    #[test]
    fn scale_translate_identity_and_affine() {
        let c = line_cloud(&[1.0, 2.0]);
        let id = scale_translate_cloud(&c, 1.0, &[0.0]);
        assert_eq!(id.coords(), &[1.0, 2.0]);
        let t = scale_translate_cloud(&c, 2.0, &[-1.0]);
        assert_eq!(t.coords(), &[0.0, 2.0]);
    }

    #[test]
    fn subgraph_counts_hand_checked() {
        let c = line_cloud(&[0.0, 0.5, 2.0]);
        assert_eq!(induced_subgraph_count(&c, 1.0, NormSpec::Euclidean, &k2()).unwrap(), 1);

        let c = line_cloud(&[0.0, 0.5, 1.0]);
        assert_eq!(induced_subgraph_count(&c, 0.6, NormSpec::Euclidean, &p3()).unwrap(), 1);
        assert_eq!(induced_subgraph_count(&c, 0.6, NormSpec::Euclidean, &k3()).unwrap(), 0);
    }

    #[test]
    fn components_small() {
        let c = line_cloud(&[0.0, 0.5, 2.0, 2.4]);
        let comps = connected_components(&c, 0.6, NormSpec::Euclidean).unwrap();
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
    }
}
