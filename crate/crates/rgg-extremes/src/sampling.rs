//! Densities and point-process samplers.
//!
//! Everything is a pure function of (parameters, stream), so replicates on
//! distinct stream indices can run in parallel and reproduce bit-identically.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{unit_ball_volume, NormSpec};
use crate::Error;

/// Built-in density families on the cube `[-1/2, 1/2]^d`.
///
/// `RadialPeak { s }` is `f(x) = (f_max − ‖x‖₂^s)·1_cube(x)` with
/// `f_max = 1 + ∫_cube ‖x‖₂^s dx`, which normalizes `∫ f = 1`. The peak at
/// the origin is the unique maximum, and even `s = 2m` realizes the smooth
/// `C^{2m}` case with `∂^{2m}f(0)[z] = −(2m)!·‖z‖₂^{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Density {
    UniformCube,
    RadialPeak { s: f64 },
}

impl Density {
    /// Peak value `f_max` in dimension `d`.
    pub fn f_max(&self, d: usize) -> f64 {
        match self {
            Density::UniformCube => 1.0,
            Density::RadialPeak { s } => 1.0 + cube_radial_moment(d, *s),
        }
    }

    /// Density value at `x` (0 outside the cube).
    pub fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().any(|c| c.abs() > 0.5) {
            return 0.0;
        }
        match self {
            Density::UniformCube => 1.0,
            Density::RadialPeak { s } => {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                self.f_max(x.len()) - r.powf(*s)
            }
        }
    }

    /// `γ = ∫_{R^d} exp(−‖z‖₂^s) dz` for the radial-peak family
    /// (`σ_{d−1}·Γ(d/s)/s` with `σ_{d−1} = 2π^{d/2}/Γ(d/2)`); 1 for uniform.
    pub fn gamma_constant(&self, d: usize) -> f64 {
        match self {
            Density::UniformCube => 1.0,
            Density::RadialPeak { s } => {
                let df = d as f64;
                let surface = 2.0 * std::f64::consts::PI.powf(df / 2.0)
                    / statrs::function::gamma::gamma(df / 2.0);
                surface * statrs::function::gamma::gamma(df / s) / s
            }
        }
    }

    /// Shape exponent `s` (`2m`); `None` for the uniform density, which the
    /// growing-degree formulas treat as `m = ∞`, `d/s = 0`.
    pub fn shape(&self) -> Option<f64> {
        match self {
            Density::UniformCube => None,
            Density::RadialPeak { s } => Some(*s),
        }
    }

    /// Midpoint quadrature of `∫_region f(x)^p dx` over `region ∩ cube`.
    ///
    /// `region` is an axis-aligned box given as (lo, hi) per axis; pass
    /// `None` for the full cube. Uses at least 10^6 cells total (d ≤ 3).
    pub fn integral_power(&self, d: usize, p: u32, region: Option<(&[f64], &[f64])>) -> f64 {
        let (lo, hi): (Vec<f64>, Vec<f64>) = match region {
            Some((lo, hi)) => (
                lo.iter().map(|&v| v.max(-0.5)).collect(),
                hi.iter().map(|&v| v.min(0.5)).collect(),
            ),
            None => (vec![-0.5; d], vec![0.5; d]),
        };
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return 0.0;
        }
        if *self == Density::UniformCube {
            // f ≡ 1 on the cube
            return lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        }
        let cells_per_axis = match d {
            1 => 1_000_000,
            2 => 1_000,
            _ => 100,
        };
        let mut total = 0.0;
        let widths: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) / cells_per_axis as f64)
            .collect();
        let cell_vol: f64 = widths.iter().product();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        loop {
            for a in 0..d {
                x[a] = lo[a] + (idx[a] as f64 + 0.5) * widths[a];
            }
            total += self.eval(&x).powi(p as i32) * cell_vol;
            // odometer increment
            let mut a = 0;
            loop {
                if a == d {
                    return total;
                }
                idx[a] += 1;
                if idx[a] < cells_per_axis {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Density::UniformCube => "uniform".into(),
            Density::RadialPeak { s } => format!("radial{s}"),
        }
    }
}

impl std::str::FromStr for Density {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "uniform" {
            Ok(Density::UniformCube)
        } else if let Some(rest) = s.strip_prefix("radial") {
            let shape: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad density `{s}`")))?;
            Ok(Density::RadialPeak { s: shape })
        } else {
            Err(Error::Parse(format!("unknown density `{s}`")))
        }
    }
}

/// `∫_cube ‖x‖₂^s dx`. Closed forms where they exist, quadrature otherwise.
fn cube_radial_moment(d: usize, s: f64) -> f64 {
    if d == 1 {
        // 2 ∫_0^{1/2} x^s dx
        return 2.0 * (0.5f64).powf(s + 1.0) / (s + 1.0);
    }
    if s == 2.0 {
        // Σ_i ∫ x_i² = d/12
        return d as f64 / 12.0;
    }
    // midpoint quadrature with ≥ 10^6 cells
    let cells = match d {
        2 => 1_000,
        _ => 100,
    };
    let w = 1.0 / cells as f64;
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    loop {
        for a in 0..d {
            x[a] = -0.5 + (idx[a] as f64 + 0.5) * w;
        }
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        total += r.powf(s) * w.powi(d as i32);
        let mut a = 0;
        loop {
            if a == d {
                return total;
            }
            idx[a] += 1;
            if idx[a] < cells {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Identifies one replicate's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// Deterministic per-stream generator; distinct indices give
    /// statistically independent streams.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self
            .master_seed
            .wrapping_add(self.stream_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A finite point set with its generating metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    pub density: Density,
    pub seed: u64,
}

impl PointCloud {
    pub fn from_flat(dim: usize, coords: Vec<f64>, density: Density, seed: u64) -> PointCloud {
        assert!(dim >= 1 && coords.len() % dim == 0);
        PointCloud {
            dim,
            coords,
            density,
            seed,
        }
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> PointCloud {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            assert_eq!(p.len(), dim);
            coords.extend_from_slice(p);
        }
        PointCloud::from_flat(dim, coords, Density::UniformCube, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// First `m` points as an independent view (shared generating stream).
    pub fn prefix(&self, m: usize) -> PointCloud {
        assert!(m <= self.len());
        PointCloud {
            dim: self.dim,
            coords: self.coords[..m * self.dim].to_vec(),
            density: self.density,
            seed: self.seed,
        }
    }

    /// One point per line, space-separated coordinates, with a header line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# d={} n={} density={} seed={}",
            self.dim,
            self.len(),
            self.density.label(),
            self.seed
        )?;
        for p in self.iter_points() {
            let line: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<PointCloud, Error> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty cloud file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut dim = 0usize;
        let mut density = Density::UniformCube;
        let mut seed = 0u64;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("d=") {
                dim = v.parse().map_err(|_| Error::Parse("bad d".into()))?;
            } else if let Some(v) = tok.strip_prefix("density=") {
                density = v.parse()?;
            } else if let Some(v) = tok.strip_prefix("seed=") {
                seed = v.parse().map_err(|_| Error::Parse("bad seed".into()))?;
            }
        }
        if dim == 0 {
            return Err(Error::Parse("header missing d=".into()));
        }
        let mut coords = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            let vals = vals.map_err(|_| Error::Parse("bad coordinate".into()))?;
            if vals.len() != dim {
                return Err(Error::Parse("coordinate count mismatch".into()));
            }
            coords.extend(vals);
        }
        Ok(PointCloud::from_flat(dim, coords, density, seed))
    }
}

fn sample_one<R: Rng>(d: usize, density: Density, rng: &mut R, buf: &mut Vec<f64>) {
    match density {
        Density::UniformCube => {
            for _ in 0..d {
                buf.push(rng.gen::<f64>() - 0.5);
            }
        }
        Density::RadialPeak { .. } => {
            let f_max = density.f_max(d);
            loop {
                let start = buf.len();
                for _ in 0..d {
                    buf.push(rng.gen::<f64>() - 0.5);
                }
                let u: f64 = rng.gen::<f64>() * f_max;
                if u <= density.eval(&buf[start..]) {
                    break;
                }
                buf.truncate(start);
            }
        }
    }
}

/// The binomial process: `n` i.i.d. points with law `density`.
pub fn sample_binomial(n: usize, d: usize, density: Density, stream: RngStream) -> PointCloud {
    let mut rng = stream.rng();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        sample_one(d, density, &mut rng, &mut coords);
    }
    PointCloud::from_flat(d, coords, density, stream.master_seed)
}

/// The Poissonized process: `N ~ Poisson(λ)` points, then `N` i.i.d. draws.
pub fn sample_poisson_process(
    lambda: f64,
    d: usize,
    density: Density,
    stream: RngStream,
) -> Result<PointCloud, Error> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let mut rng = stream.rng();
    let n = rand_distr::Poisson::new(lambda)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(&mut rng) as usize;
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        sample_one(d, density, &mut rng, &mut coords);
    }
    Ok(PointCloud::from_flat(d, coords, density, stream.master_seed))
}

use rand_distr::Distribution;

/// Discrete multiplicity law for compound Poisson marks.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WeightLaw {
    /// (value, probability) atoms; values ≥ 1, probabilities sum to 1.
    pub atoms: Vec<(u32, f64)>,
}

impl WeightLaw {
    pub fn validate(&self) -> Result<(), Error> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidArgument("empty weight law".into()));
        }
        let total: f64 = self.atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 || self.atoms.iter().any(|&(v, p)| v < 1 || p < 0.0) {
            return Err(Error::InvalidArgument(
                "weight law must have values ≥ 1 and probabilities summing to 1".into(),
            ));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v as f64 * p).sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(v, p) in &self.atoms {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.atoms.last().unwrap().0
    }
}

/// A point cloud where each support point carries an integer multiplicity.
#[derive(Debug, Clone)]
pub struct MarkedCloud {
    pub points: PointCloud,
    pub multiplicities: Vec<u32>,
}

impl MarkedCloud {
    pub fn total_mass(&self) -> u64 {
        self.multiplicities.iter().map(|&m| m as u64).sum()
    }

    /// Total multiplicity carried inside an axis-aligned box.
    pub fn mass_in_box(&self, lo: &[f64], hi: &[f64]) -> u64 {
        self.points
            .iter_points()
            .zip(&self.multiplicities)
            .filter(|(p, _)| p.iter().zip(lo.iter().zip(hi)).all(|(c, (a, b))| c >= a && c < b))
            .map(|(_, &m)| m as u64)
            .sum()
    }
}

/// Compound Poisson point process: Poisson support points with total mass
/// `mass` distributed per `density`, each carrying an i.i.d. weight ≥ 1.
pub fn sample_compound_poisson_pp(
    mass: f64,
    d: usize,
    density: Density,
    weights: &WeightLaw,
    stream: RngStream,
) -> Result<MarkedCloud, Error> {
    weights.validate()?;
    if mass < 0.0 || !mass.is_finite() {
        return Err(Error::InvalidArgument("mass must be finite and ≥ 0".into()));
    }
    if mass == 0.0 {
        return Ok(MarkedCloud {
            points: PointCloud::from_flat(d, Vec::new(), density, stream.master_seed),
            multiplicities: Vec::new(),
        });
    }
    let points = sample_poisson_process(mass, d, density, stream)?;
    // marks use a sibling stream so their count cannot perturb the support
    let mut rng = RngStream::new(stream.master_seed, stream.stream_index ^ (1 << 63)).rng();
    let multiplicities = (0..points.len()).map(|_| weights.sample(&mut rng)).collect();
    Ok(MarkedCloud {
        points,
        multiplicities,
    })
}

/// The de-Poissonization triple `P_n^- ⊂ X_n ⊂ P_n^+` built from one shared
/// i.i.d. stream: `N^- ~ Po(n − n^{3/4})`, `M ~ Po(2n^{3/4})`, and the three
/// clouds are prefixes of lengths `N^-`, `n`, `N^- + M`.
///
/// The inclusions hold with high probability (they can fail when `N^-` or
/// `N^- + M` fall on the wrong side of `n`); callers observing couplings
/// should check the returned lengths.
pub fn sample_depoissonized_triple(
    n: usize,
    d: usize,
    density: Density,
    stream: RngStream,
) -> Result<(PointCloud, PointCloud, PointCloud), Error> {
    let nf = n as f64;
    let mut rng = stream.rng();
    let n_minus = rand_distr::Poisson::new((nf - nf.powf(0.75)).max(1.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(&mut rng) as usize;
    let m = rand_distr::Poisson::new(2.0 * nf.powf(0.75))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(&mut rng) as usize;
    let total = (n_minus + m).max(n);
    let mut coords = Vec::with_capacity(total * d);
    for _ in 0..total {
        sample_one(d, density, &mut rng, &mut coords);
    }
    let full = PointCloud::from_flat(d, coords, density, stream.master_seed);
    Ok((full.prefix(n_minus.min(total)), full.prefix(n), full.prefix(n_minus + m)))
}

/// Poisson counting-measure of an axis-aligned box `[lo, hi)`.
pub fn count_in_box(cloud: &PointCloud, lo: &[f64], hi: &[f64]) -> usize {
    cloud
        .iter_points()
        .filter(|p| p.iter().zip(lo.iter().zip(hi)).all(|(c, (a, b))| c >= a && c < b))
        .count()
}

/// Grid cell size heuristic for k-NN queries: the radius at which a ball
/// holds about k points in expectation.
pub fn knn_cell_size(n: usize, d: usize, k: usize, norm: NormSpec, density: Density) -> f64 {
    let theta = unit_ball_volume(d, norm).expect("d ≥ 1");
    let f = density.f_max(d).max(1e-12);
    ((k as f64).max(1.0) / (n as f64 * theta * f))
        .powf(1.0 / d as f64)
        .max(1e-12)
}
