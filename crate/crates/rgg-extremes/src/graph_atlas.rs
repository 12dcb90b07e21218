//! Small-graph canonicalization, enumeration of the candidate classes on
//! `k+1` vertices with a dominating vertex, and Monte Carlo estimation of the
//! constants `μ_Γ`, `μ_{d,k}` and `λ_{x0}`.

use rand::Rng;
use rayon::prelude::*;

use crate::geometry::{unit_ball_volume, NormSpec};
use crate::sampling::{Density, RngStream, WeightLaw};
use crate::Error;

/// Hard cap on vertex count: canonicalization is brute force over `j!`
/// permutations.
pub const MAX_VERTICES: usize = 8;

/// A simple graph on up to 8 vertices, edges bit-packed by pair index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallGraph {
    n: u8,
    bits: u64,
}

fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

impl SmallGraph {
    pub fn empty(n: usize) -> Result<SmallGraph, Error> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::GraphTooLarge(n, MAX_VERTICES));
        }
        Ok(SmallGraph { n: n as u8, bits: 0 })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<SmallGraph, Error> {
        let mut g = SmallGraph::empty(n)?;
        for &(a, b) in edges {
            g.set_edge(a, b, true);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n as usize
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.bits >> pair_index(i, j) & 1 == 1
    }

    pub fn set_edge(&mut self, a: usize, b: usize, present: bool) {
        assert!(a != b && a < self.n as usize && b < self.n as usize);
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        if present {
            self.bits |= 1 << pair_index(i, j);
        } else {
            self.bits &= !(1 << pair_index(i, j));
        }
    }

    pub fn edge_count(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n as usize).filter(|&u| self.has_edge(v, u)).count()
    }

    pub fn adjacency_bits(&self) -> u64 {
        self.bits
    }

    /// Relabel vertices by `perm` (vertex `v` becomes `perm[v]`).
    fn relabel(&self, perm: &[usize]) -> SmallGraph {
        let mut g = SmallGraph {
            n: self.n,
            bits: 0,
        };
        let n = self.n as usize;
        for j in 1..n {
            for i in 0..j {
                if self.bits >> pair_index(i, j) & 1 == 1 {
                    g.set_edge(perm[i], perm[j], true);
                }
            }
        }
        g
    }

    /// Graph built from a point configuration at unit radius (closed balls).
    pub fn from_configuration(points: &[&[f64]], radius: f64, norm: NormSpec) -> Result<SmallGraph, Error> {
        let n = points.len();
        let mut g = SmallGraph::empty(n)?;
        for j in 1..n {
            for i in 0..j {
                if norm.dist(points[i], points[j]) <= radius {
                    g.set_edge(i, j, true);
                }
            }
        }
        Ok(g)
    }

    /// Lexicographic-minimum adjacency bit-string over all vertex
    /// permutations. Two graphs are isomorphic iff canonical forms coincide.
    pub fn canonical_form(&self) -> SmallGraph {
        let n = self.n as usize;
        let mut best = self.bits;
        let mut perm: Vec<usize> = (0..n).collect();
        // Heap's algorithm
        let mut c = vec![0usize; n];
        let relabeled = self.relabel(&perm);
        best = best.min(relabeled.bits);
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                let bits = self.relabel(&perm).bits;
                if bits < best {
                    best = bits;
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        SmallGraph { n: self.n, bits: best }
    }

    pub fn is_isomorphic(&self, other: &SmallGraph) -> bool {
        self.n == other.n && self.canonical_form().bits == other.canonical_form().bits
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n as usize;
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if !seen[u] && self.has_edge(v, u) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Size of a maximum independent set (brute force, n ≤ 8).
    pub fn max_independent_set(&self) -> usize {
        let n = self.n as usize;
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let verts: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if verts.len() <= best {
                continue;
            }
            let independent = verts
                .iter()
                .enumerate()
                .all(|(a, &v)| verts[a + 1..].iter().all(|&u| !self.has_edge(v, u)));
            if independent {
                best = verts.len();
            }
        }
        best
    }

    /// Hex string of the canonical bit-packing, used in cache files.
    pub fn bitstring(&self) -> String {
        format!("{}:{:x}", self.n, self.bits)
    }

    pub fn from_bitstring(s: &str) -> Result<SmallGraph, Error> {
        let (n, bits) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse("bad graph bitstring".into()))?;
        let n: usize = n.parse().map_err(|_| Error::Parse("bad vertex count".into()))?;
        let bits = u64::from_str_radix(bits, 16).map_err(|_| Error::Parse("bad bits".into()))?;
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::GraphTooLarge(n, MAX_VERTICES));
        }
        Ok(SmallGraph { n: n as u8, bits })
    }
}

/// K₂ on two vertices.
pub fn k2() -> SmallGraph {
    SmallGraph::from_edges(2, &[(0, 1)]).unwrap()
}

/// Path 0−1−2.
pub fn p3() -> SmallGraph {
    SmallGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
}

/// Triangle.
pub fn k3() -> SmallGraph {
    SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
}

/// Feasibility of a class for given (d, norm): decided statistically, with
/// an explicit undetermined state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Feasibility {
    Yes,
    No,
    Undetermined,
}

/// An isomorphism class together with its degree-k vertex count and the
/// estimated constant `μ_Γ`.
#[derive(Debug, Clone)]
pub struct GraphClass {
    pub canonical: SmallGraph,
    /// Number of vertices of degree `k = j−1`.
    pub q: u32,
    pub mu: f64,
    pub se: f64,
    pub n_samples: u64,
    pub feasible: Feasibility,
}

/// All isomorphism classes of simple graphs on `k+1` vertices that contain a
/// vertex adjacent to every other vertex. `μ` is left unset.
pub fn enumerate_candidates(k: usize) -> Result<Vec<GraphClass>, Error> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    let j = k + 1;
    if j > MAX_VERTICES {
        return Err(Error::GraphTooLarge(j, MAX_VERTICES));
    }
    // Vertex 0 is the dominating vertex; free edges live among 1..j.
    let free_pairs: Vec<(usize, usize)> = (1..j)
        .flat_map(|b| (1..b).map(move |a| (a, b)))
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0u64..(1u64 << free_pairs.len()) {
        let mut g = SmallGraph::empty(j)?;
        for v in 1..j {
            g.set_edge(0, v, true);
        }
        for (bit, &(a, b)) in free_pairs.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                g.set_edge(a, b, true);
            }
        }
        seen.insert(g.canonical_form());
    }
    Ok(seen
        .into_iter()
        .map(|canonical| {
            let q = (0..j).filter(|&v| canonical.degree(v) == k).count() as u32;
            GraphClass {
                canonical,
                q,
                mu: f64::NAN,
                se: f64::NAN,
                n_samples: 0,
                feasible: Feasibility::Undetermined,
            }
        })
        .collect())
}

/// Optional axis-aligned restriction for the `∫_B f^j` factor.
#[derive(Debug, Clone)]
pub enum Region {
    Full,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

fn sample_in_ball<R: Rng>(radius: f64, norm: NormSpec, rng: &mut R, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = (rng.gen::<f64>() * 2.0 - 1.0) * radius;
        }
        if norm.norm(out) <= radius {
            return;
        }
    }
}

/// One Monte Carlo estimate of the configuration integral
/// `I_Γ = ∫_{(R^d)^{j−1}} h_Γ(δ_0 + Σ δ_{x_ℓ}) Π dx_ℓ`.
///
/// Since Γ is connected with a dominating vertex, `h_Γ` vanishes unless every
/// `x_ℓ` lies in `B(0; k)`, so uniform sampling in that ball (volume
/// `V = k^d·θ`) with the estimator `V^{j−1}·mean(h_Γ)` is exact. Antithetic
/// pairs `±x` halve the variance of the symmetric integrand.
fn mc_configuration_integral(
    class: &SmallGraph,
    d: usize,
    norm: NormSpec,
    n_samples: u64,
    stream: RngStream,
) -> (f64, f64) {
    let j = class.vertex_count();
    let k = j - 1;
    let theta = unit_ball_volume(d, norm).expect("d ≥ 1");
    let vol = (k as f64).powi(d as i32) * theta;
    let scale = vol.powi(k as i32);
    let target = class.canonical_form();

    let batches: u64 = 64;
    let per_batch = n_samples.div_ceil(2 * batches); // antithetic pairs
    let results: Vec<(f64, f64, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(stream.master_seed, stream.stream_index.wrapping_add(b)).rng();
            let mut xs = vec![0.0f64; k * d];
            let mut mean = 0.0;
            let mut m2 = 0.0;
            let mut count = 0u64;
            let push = |v: f64, mean: &mut f64, m2: &mut f64, count: &mut u64| {
                *count += 1;
                let delta = v - *mean;
                *mean += delta / *count as f64;
                *m2 += delta * (v - *mean);
            };
            for _ in 0..per_batch {
                for l in 0..k {
                    sample_in_ball(k as f64, norm, &mut rng, &mut xs[l * d..(l + 1) * d]);
                }
                for sign in [1.0f64, -1.0] {
                    let origin = vec![0.0f64; d];
                    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(j);
                    pts.push(origin);
                    for l in 0..k {
                        pts.push(xs[l * d..(l + 1) * d].iter().map(|&c| sign * c).collect());
                    }
                    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
                    let g = SmallGraph::from_configuration(&refs, 1.0, norm).unwrap();
                    let hit = g.canonical_form() == target;
                    push(if hit { scale } else { 0.0 }, &mut mean, &mut m2, &mut count);
                }
            }
            (mean, m2, count)
        })
        .collect();

    // Welford merge across batches
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0u64;
    for (bm, bm2, bc) in results {
        if bc == 0 {
            continue;
        }
        let delta = bm - mean;
        let new_count = count + bc;
        m2 += bm2 + delta * delta * (count as f64 * bc as f64 / new_count as f64);
        mean += delta * bc as f64 / new_count as f64;
        count = new_count;
    }
    let variance = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    let se = (variance / count as f64).sqrt();
    (mean, se)
}

/// d=1 geometric certificate: all `j` points sit within one unit of the
/// dominating vertex, hence in an interval of length 2, where no three
/// points can be pairwise more than 1 apart.
fn infeasible_by_certificate(class: &SmallGraph, d: usize) -> bool {
    d == 1 && class.max_independent_set() >= 3
}

/// Estimate `μ_{Γ,B} = (1/j!)·∫_B f^j dx · I_Γ` by Monte Carlo.
pub fn estimate_mu(
    class: &mut GraphClass,
    d: usize,
    norm: NormSpec,
    density: Density,
    region: &Region,
    n_samples: u64,
    stream: RngStream,
) -> Result<(f64, f64), Error> {
    if n_samples < 10_000 {
        return Err(Error::InvalidArgument("need n_samples ≥ 10^4".into()));
    }
    let j = class.canonical.vertex_count();
    let density_factor = match region {
        Region::Full => density.integral_power(d, j as u32, None),
        Region::Box { lo, hi } => density.integral_power(d, j as u32, Some((lo, hi))),
    };
    let fact: f64 = (1..=j).map(|v| v as f64).product();
    let (integral, int_se) = if infeasible_by_certificate(&class.canonical, d) {
        (0.0, 0.0)
    } else {
        mc_configuration_integral(&class.canonical, d, norm, n_samples, stream)
    };
    let mu = density_factor / fact * integral;
    let se = density_factor / fact * int_se;
    class.mu = mu;
    class.se = se;
    class.n_samples = n_samples;
    class.feasible = if infeasible_by_certificate(&class.canonical, d) {
        Feasibility::No
    } else if mu > 5.0 * se && mu > 0.0 {
        Feasibility::Yes
    } else if mu == 0.0 && n_samples >= 10_000_000 {
        Feasibility::No
    } else {
        Feasibility::Undetermined
    };
    Ok((mu, se))
}

/// The atlas of classes for one `(k, d, norm, density)` setting.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub k: usize,
    pub d: usize,
    pub norm: NormSpec,
    pub density: Density,
    pub classes: Vec<GraphClass>,
}

impl Atlas {
    /// Build the atlas: enumerate candidates and estimate every `μ_Γ`.
    pub fn build(
        k: usize,
        d: usize,
        norm: NormSpec,
        density: Density,
        n_samples: u64,
        stream: RngStream,
    ) -> Result<Atlas, Error> {
        let mut classes = enumerate_candidates(k)?;
        for (i, class) in classes.iter_mut().enumerate() {
            let class_stream = RngStream::new(
                stream.master_seed,
                stream.stream_index.wrapping_add((i as u64) << 32),
            );
            estimate_mu(class, d, norm, density, &Region::Full, n_samples, class_stream)?;
        }
        Ok(Atlas {
            k,
            d,
            norm,
            density,
            classes,
        })
    }

    /// `μ_{d,k} = Σ_i μ_{Γ_i}`.
    pub fn mu_dk(&self) -> f64 {
        self.classes.iter().map(|c| c.mu).sum()
    }

    /// The compound-Poisson multiplicity law
    /// `P[ζ=ℓ] = Σ_{q_i=ℓ} μ_{Γ_i} / μ_{d,k}`.
    pub fn weight_law(&self) -> Result<WeightLaw, Error> {
        let mu_dk = self.mu_dk();
        if !(mu_dk > 0.0) {
            return Err(Error::InvalidArgument(
                "all classes infeasible: μ_{d,k} = 0".into(),
            ));
        }
        let mut by_q: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
        for c in &self.classes {
            if c.mu > 0.0 {
                *by_q.entry(c.q).or_default() += c.mu;
            }
        }
        let mut atoms: Vec<(u32, f64)> = by_q.into_iter().map(|(q, m)| (q, m / mu_dk)).collect();
        // normalize exactly
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        for (_, p) in atoms.iter_mut() {
            *p /= total;
        }
        Ok(WeightLaw { atoms })
    }

    /// `λ_{x0} = f(x0)^{k+1}/(k+1)! · Σ_i I_{Γ_i}` where `I_Γ` is the bare
    /// configuration integral (no `∫ f^j` factor).
    pub fn lambda_x0(&self, f_at_x0: f64, n_samples: u64, stream: RngStream) -> Result<f64, Error> {
        if f_at_x0 < 0.0 {
            return Err(Error::InvalidArgument("density value must be ≥ 0".into()));
        }
        if f_at_x0 == 0.0 {
            return Ok(0.0);
        }
        let fact: f64 = (1..=self.k + 1).map(|v| v as f64).product();
        let mut sum = 0.0;
        for (i, class) in self.classes.iter().enumerate() {
            if infeasible_by_certificate(&class.canonical, self.d) {
                continue;
            }
            let class_stream = RngStream::new(
                stream.master_seed,
                stream.stream_index.wrapping_add((i as u64) << 32),
            );
            let (integral, _) =
                mc_configuration_integral(&class.canonical, self.d, self.norm, n_samples, class_stream);
            sum += integral;
        }
        Ok(f_at_x0.powi(self.k as i32 + 1) / fact * sum)
    }

    /// Cache records, one JSON object per class.
    pub fn save<W: std::io::Write>(&self, mut w: W) -> Result<(), Error> {
        for c in &self.classes {
            let rec = CacheRecord {
                graph: c.canonical.bitstring(),
                q: c.q,
                mu: c.mu,
                se: c.se,
                n_samples: c.n_samples,
                d: self.d,
                norm: self.norm,
                k: self.k,
                density: self.density,
                feasible: c.feasible,
            };
            writeln!(w, "{}", serde_json::to_string(&rec).unwrap())?;
        }
        Ok(())
    }

    pub fn load<R: std::io::BufRead>(r: R) -> Result<Atlas, Error> {
        let mut classes = Vec::new();
        let mut meta: Option<(usize, usize, NormSpec, Density)> = None;
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
            meta = Some((rec.k, rec.d, rec.norm, rec.density));
            classes.push(GraphClass {
                canonical: SmallGraph::from_bitstring(&rec.graph)?,
                q: rec.q,
                mu: rec.mu,
                se: rec.se,
                n_samples: rec.n_samples,
                feasible: rec.feasible,
            });
        }
        let (k, d, norm, density) =
            meta.ok_or_else(|| Error::Parse("empty atlas cache".into()))?;
        Ok(Atlas {
            k,
            d,
            norm,
            density,
            classes,
        })
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CacheRecord {
    graph: String,
    q: u32,
    mu: f64,
    se: f64,
    n_samples: u64,
    d: usize,
    norm: NormSpec,
    k: usize,
    density: Density,
    feasible: Feasibility,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_is_idempotent_and_label_invariant() {
        let a = SmallGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let b = SmallGraph::from_edges(3, &[(1, 0), (0, 2)]).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        let c = a.canonical_form();
        assert_eq!(c, c.canonical_form());
        assert_eq!(k2().canonical_form(), k2());
    }

    #[test]
    fn p3_and_k3_not_isomorphic() {
        assert!(!p3().is_isomorphic(&k3()));
        assert!(p3().is_isomorphic(&SmallGraph::from_edges(3, &[(2, 1), (1, 0)]).unwrap()));
    }

    #[test]
    fn enumerate_k1_k2_k3() {
        let c1 = enumerate_candidates(1).unwrap();
        assert_eq!(c1.len(), 1);
        assert_eq!(c1[0].q, 2);

        let c2 = enumerate_candidates(2).unwrap();
        assert_eq!(c2.len(), 2);
        let qs: Vec<u32> = c2.iter().map(|c| c.q).collect();
        assert!(qs.contains(&1) && qs.contains(&3));

        let c3 = enumerate_candidates(3).unwrap();
        assert_eq!(c3.len(), 4);
        let mut qs: Vec<u32> = c3.iter().map(|c| c.q).collect();
        qs.sort_unstable();
        assert_eq!(qs, vec![1, 1, 2, 4]);
    }

    #[test]
    fn d1_star_certificate() {
        // star K_{1,3}: leaves form an independent set of size 3
        let star = SmallGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.max_independent_set(), 3);
        assert!(infeasible_by_certificate(&star, 1));
        assert!(!infeasible_by_certificate(&star, 2));
        assert!(!infeasible_by_certificate(&k3(), 1));
    }

    #[test]
    fn mu_k2_d1_closed_form() {
        let mut class = enumerate_candidates(1).unwrap().pop().unwrap();
        let (mu, se) = estimate_mu(
            &mut class,
            1,
            NormSpec::Euclidean,
            Density::UniformCube,
            &Region::Full,
            100_000,
            RngStream::new(11, 0),
        )
        .unwrap();
        // μ_{K2,d=1} = 1 exactly (h ≡ 1 on the sampling ball)
        assert!((mu - 1.0).abs() <= 3.0 * se.max(1e-12), "mu={mu} se={se}");
        assert_eq!(class.feasible, Feasibility::Yes);
    }

    #[test]
    fn weight_law_k1_is_point_mass() {
        let atlas = Atlas::build(
            1,
            1,
            NormSpec::Euclidean,
            Density::UniformCube,
            20_000,
            RngStream::new(5, 0),
        )
        .unwrap();
        let law = atlas.weight_law().unwrap();
        assert_eq!(law.atoms.len(), 1);
        assert_eq!(law.atoms[0].0, 2);
        assert!((law.atoms[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_x0_zero_density() {
        let atlas = Atlas::build(
            1,
            1,
            NormSpec::Euclidean,
            Density::UniformCube,
            20_000,
            RngStream::new(5, 0),
        )
        .unwrap();
        assert_eq!(atlas.lambda_x0(0.0, 20_000, RngStream::new(5, 9)).unwrap(), 0.0);
        // d=1, k=1, uniform interior: λ = (1/2)·2 = 1
        let l = atlas.lambda_x0(1.0, 200_000, RngStream::new(5, 9)).unwrap();
        assert!((l - 1.0).abs() < 0.05, "λ={l}");
    }

    #[test]
    fn atlas_cache_roundtrip() {
        let atlas = Atlas::build(
            2,
            1,
            NormSpec::Euclidean,
            Density::UniformCube,
            20_000,
            RngStream::new(77, 0),
        )
        .unwrap();
        let mut buf = Vec::new();
        atlas.save(&mut buf).unwrap();
        let back = Atlas::load(&buf[..]).unwrap();
        assert_eq!(back.k, 2);
        assert_eq!(back.classes.len(), atlas.classes.len());
        assert_eq!(back.classes[0].canonical, atlas.classes[0].canonical);
        assert_eq!(back.classes[0].mu, atlas.classes[0].mu);
    }
}
