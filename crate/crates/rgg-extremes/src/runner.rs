//! Experiment orchestration: config parsing, seeded parallel replicates,
//! and persistence of `records.csv` / `summary.json` / `plot_*.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use statrs::distribution::DiscreteCDF;

use crate::geometry::{unit_ball_volume, NormSpec};
use crate::graph_atlas::Atlas;
use crate::limit_laws::{
    gumbel_statistic, palm_lhs_rhs, probability_limit_ratio, radius_fixed_k, tail_bound,
    weibull_statistic, GumbelLaw, GumbelVariant, KnRule, RadiusSchedule, ScheduleRegime,
    TailBound, WeibullLaw,
};
use crate::rgg::{
    degree_profile, extreme_points_from_profile, threshold_radius, ExtremeSet, ExtremeTag,
};
use crate::sampling::{sample_binomial, Density, RngStream};
use crate::stats::{
    box_count_test, pmf_from_samples, tv_distance, BoxReference, CompoundPoissonLaw,
    EmpiricalSample,
};
use crate::Error;

/// The eight experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ThresholdWeibull,
    ThresholdGumbel,
    PhiFixedK,
    PhiGrowingK,
    MaxDegreeConcentration,
    MuConstants,
    BoundsSuite,
    PalmSuite,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::ThresholdWeibull => "threshold_weibull",
            ExperimentKind::ThresholdGumbel => "threshold_gumbel",
            ExperimentKind::PhiFixedK => "phi_fixed_k",
            ExperimentKind::PhiGrowingK => "phi_growing_k",
            ExperimentKind::MaxDegreeConcentration => "max_degree_concentration",
            ExperimentKind::MuConstants => "mu_constants",
            ExperimentKind::BoundsSuite => "bounds_suite",
            ExperimentKind::PalmSuite => "palm_suite",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "threshold_weibull" => ExperimentKind::ThresholdWeibull,
            "threshold_gumbel" => ExperimentKind::ThresholdGumbel,
            "phi_fixed_k" => ExperimentKind::PhiFixedK,
            "phi_growing_k" => ExperimentKind::PhiGrowingK,
            "max_degree_concentration" => ExperimentKind::MaxDegreeConcentration,
            "mu_constants" => ExperimentKind::MuConstants,
            "bounds_suite" => ExperimentKind::BoundsSuite,
            "palm_suite" => ExperimentKind::PalmSuite,
            other => return Err(Error::Parse(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Full parameterization of one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub norm: NormSpec,
    pub density: Density,
    /// One or more n values (geometric grids for convergence studies).
    pub n_grid: Vec<usize>,
    pub k: usize,
    pub kn_rule: KnRule,
    pub beta: f64,
    pub replicates: usize,
    pub master_seed: u64,
    /// 0 = use the default rayon pool size.
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Concentration regime: `r_n = n^{−r_exponent}`.
    pub r_exponent: f64,
    /// Palm suite intensity and edge radius.
    pub lambda: f64,
    pub palm_r: f64,
    /// MC samples per atlas class (mu_constants) and per palm side.
    pub mc_samples: u64,
    /// Number of disjoint slabs for the box-count test.
    pub boxes: usize,
    /// Memory guard: refuse n beyond this.
    pub max_n: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            d: match kind {
                ExperimentKind::PhiFixedK => 1,
                _ => 2,
            },
            norm: NormSpec::Euclidean,
            density: Density::UniformCube,
            n_grid: vec![10_000],
            k: match kind {
                ExperimentKind::PhiFixedK => 2,
                ExperimentKind::MaxDegreeConcentration => 3,
                _ => 1,
            },
            kn_rule: KnRule::LogRatio,
            beta: 1.0,
            replicates: 100,
            master_seed: 0,
            workers: 0,
            out_dir: PathBuf::from("out"),
            r_exponent: 0.64,
            lambda: 500.0,
            palm_r: 0.05,
            mc_samples: 1_000_000,
            boxes: 4,
            max_n: 5_000_000,
        }
    }

    /// Apply one `key=value` assignment (config file line or CLI flag).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let bad = |k: &str, v: &str| Error::Parse(format!("bad value `{v}` for key `{k}`"));
        match key {
            "d" => self.d = value.parse().map_err(|_| bad(key, value))?,
            "norm" => self.norm = value.parse()?,
            "density" => self.density = value.parse()?,
            "n" => {
                let grid: Result<Vec<usize>, _> =
                    value.split(',').map(|t| t.trim().parse()).collect();
                self.n_grid = grid.map_err(|_| bad(key, value))?;
            }
            "k" => self.k = value.parse().map_err(|_| bad(key, value))?,
            "kn_rule" => {
                self.kn_rule = if value == "logratio" {
                    KnRule::LogRatio
                } else if let Some(alpha) = value.strip_prefix("logpow:") {
                    KnRule::LogPower(alpha.parse().map_err(|_| bad(key, value))?)
                } else {
                    return Err(bad(key, value));
                }
            }
            "beta" => self.beta = value.parse().map_err(|_| bad(key, value))?,
            "replicates" => self.replicates = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.master_seed = value.parse().map_err(|_| bad(key, value))?,
            "workers" => self.workers = value.parse().map_err(|_| bad(key, value))?,
            "out" => self.out_dir = PathBuf::from(value),
            "r_exponent" => self.r_exponent = value.parse().map_err(|_| bad(key, value))?,
            "lambda" => self.lambda = value.parse().map_err(|_| bad(key, value))?,
            "palm_r" => self.palm_r = value.parse().map_err(|_| bad(key, value))?,
            "mc_samples" => self.mc_samples = value.parse().map_err(|_| bad(key, value))?,
            "boxes" => self.boxes = value.parse().map_err(|_| bad(key, value))?,
            "max_n" => self.max_n = value.parse().map_err(|_| bad(key, value))?,
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Read a flat `key = value` file (`#` comments, blank lines ignored).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), Error> {
        let text = fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("{}:{}: expected key=value", path.display(), lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be ≥ 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument("empty n grid".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n > self.max_n) {
            return Err(Error::InvalidArgument(format!(
                "n={n} exceeds the max_n={} memory guard",
                self.max_n
            )));
        }
        if self.d == 0 || self.d > crate::geometry::MAX_DIM {
            return Err(Error::InvalidArgument(format!("d must be in 1..=8, got {}", self.d)));
        }
        if self.k == 0 && !matches!(self.kind, ExperimentKind::BoundsSuite | ExperimentKind::PalmSuite) {
            return Err(Error::InvalidArgument("k must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One replicate's raw outputs, serialized as a `records.csv` row
/// `seed,n,d,norm,k,r,S_k,max_degree,W_k,W_{k-1},n_extreme,statistic`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub stream_index: u64,
    pub n: usize,
    pub d: usize,
    pub norm: NormSpec,
    pub k: usize,
    pub r: f64,
    pub s_k: f64,
    pub max_degree: usize,
    pub w_k: usize,
    pub w_km1: usize,
    pub n_extreme: usize,
    pub statistic: f64,
}

pub const RECORD_HEADER: &str = "seed,n,d,norm,k,r,S_k,max_degree,W_k,W_{k-1},n_extreme,statistic";

impl ReplicateRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:?},{:?},{},{},{},{},{:?}",
            self.stream_index,
            self.n,
            self.d,
            self.norm.label(),
            self.k,
            self.r,
            self.s_k,
            self.max_degree,
            self.w_k,
            self.w_km1,
            self.n_extreme,
            self.statistic
        )
    }
}

/// Paths and parsed summary of a finished run.
#[derive(Debug)]
pub struct RunOutputs {
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Execute the experiment: deterministic given `master_seed`, writing
/// `records.csv`, `summary.json`, and plot CSVs into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    config.validate()?;
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| run_inner(config))
    } else {
        run_inner(config)
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    fs::create_dir_all(&config.out_dir)?;
    match config.kind {
        ExperimentKind::ThresholdWeibull => run_threshold_weibull(config),
        ExperimentKind::ThresholdGumbel => run_threshold_gumbel(config),
        ExperimentKind::PhiFixedK => run_phi_fixed(config),
        ExperimentKind::PhiGrowingK => run_phi_growing(config),
        ExperimentKind::MaxDegreeConcentration => run_concentration(config),
        ExperimentKind::MuConstants => run_mu_constants(config),
        ExperimentKind::BoundsSuite => run_bounds_suite(config),
        ExperimentKind::PalmSuite => run_palm_suite(config),
    }
}

fn write_records(config: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<PathBuf, Error> {
    let path = config.out_dir.join("records.csv");
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    fs::write(&path, out)?;
    Ok(path)
}

fn write_summary(config: &ExperimentConfig, summary: &serde_json::Value) -> Result<PathBuf, Error> {
    let path = config.out_dir.join("summary.json");
    let mut file = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, summary)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    file.write_all(b"\n")?;
    Ok(path)
}

/// Sorted, duplicate-free `(x, ECDF(x), CDF(x))` rows.
pub fn emit_plot_data<F, W>(values: &[f64], cdf: F, mut w: W) -> Result<(), Error>
where
    F: Fn(f64) -> f64,
    W: Write,
{
    if values.is_empty() {
        return Err(Error::InvalidArgument("no records for plot data".into()));
    }
    let sample = EmpiricalSample::new(values.to_vec())?;
    writeln!(w, "x,ecdf,cdf")?;
    let sorted = sample.sorted();
    let mut prev: Option<f64> = None;
    for &x in sorted {
        if prev == Some(x) {
            continue;
        }
        prev = Some(x);
        writeln!(w, "{:?},{:?},{:?}", x, sample.ecdf(x), cdf(x))?;
    }
    Ok(())
}

/// Per-replicate graph summary at radius `r` with thresholds for degree k.
struct RepStats {
    s_k: f64,
    max_degree: usize,
    w_k: usize,
    w_km1: usize,
    extreme: ExtremeSet,
}

fn replicate_stats(
    n: usize,
    config: &ExperimentConfig,
    k: usize,
    r: f64,
    stream: RngStream,
) -> Result<RepStats, Error> {
    let cloud = sample_binomial(n, config.d, config.density, stream);
    let s_k = threshold_radius(&cloud, k, config.norm)?;
    let profile = degree_profile(&cloud, r, config.norm)?;
    let extreme = extreme_points_from_profile(&cloud, &profile, ExtremeTag::ExactDegree(k))?;
    Ok(RepStats {
        s_k,
        max_degree: profile.max_degree,
        w_k: profile.count(k),
        w_km1: if k >= 1 { profile.count(k - 1) } else { 0 },
        extreme,
    })
}

/// Deterministic parallel map over replicate indices.
fn par_replicates<T: Send>(
    replicates: usize,
    f: impl Fn(usize) -> Result<T, Error> + Sync + Send,
) -> Result<Vec<T>, Error> {
    (0..replicates).into_par_iter().map(f).collect()
}

fn run_threshold_weibull(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let k = config.k;
    let exponent = (config.d * k) as u32;
    // μ_{d,k} for the reference law, estimated from the atlas
    let atlas = Atlas::build(
        k,
        config.d,
        config.norm,
        config.density,
        config.mc_samples,
        RngStream::new(config.master_seed, u64::MAX / 2),
    )?;
    let law = WeibullLaw::new(atlas.mu_dk(), exponent)?;

    let mut records = Vec::new();
    let mut per_n = Vec::new();
    for (gi, &n) in config.n_grid.iter().enumerate() {
        let r = radius_fixed_k(n, k, config.d, config.beta)?;
        let base = (gi * config.replicates) as u64;
        let batch = par_replicates(config.replicates, |i| {
            let stream = RngStream::new(config.master_seed, base + i as u64);
            let st = replicate_stats(n, config, k, r, stream)?;
            Ok(ReplicateRecord {
                stream_index: stream.stream_index,
                n,
                d: config.d,
                norm: config.norm,
                k,
                r,
                s_k: st.s_k,
                max_degree: st.max_degree,
                w_k: st.w_k,
                w_km1: st.w_km1,
                n_extreme: st.extreme.len(),
                statistic: weibull_statistic(st.s_k, n, config.d, k),
            })
        })?;
        let stats: Vec<f64> = batch.iter().map(|r| r.statistic).collect();
        let sample = EmpiricalSample::new(stats.clone())?;
        let ks = sample.ks_distance(|x| law.cdf(x));
        per_n.push(json!({ "n": n, "ks": ks, "median_statistic": sample.median() }));
        records.extend(batch);
        if gi == config.n_grid.len() - 1 {
            let plot_path = config.out_dir.join("plot_weibull.csv");
            let mut buf = Vec::new();
            emit_plot_data(&stats, |x| law.cdf(x), &mut buf)?;
            fs::write(&plot_path, buf)?;
        }
    }
    let summary = json!({
        "kind": config.kind.label(),
        "d": config.d,
        "k": k,
        "norm": config.norm.label(),
        "density": config.density.label(),
        "beta": config.beta,
        "mu_dk": atlas.mu_dk(),
        "exponent": exponent,
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "per_n": per_n,
    });
    finish(config, records, summary, vec![config.out_dir.join("plot_weibull.csv")])
}

fn run_threshold_gumbel(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let theta = unit_ball_volume(config.d, config.norm)?;
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: config.kn_rule, beta: config.beta },
        config.d,
        theta,
        config.density,
    );
    let law = GumbelLaw;
    let mut records = Vec::new();
    let mut per_n = Vec::new();
    let mut last_stats: Vec<f64> = Vec::new();
    for (gi, &n) in config.n_grid.iter().enumerate() {
        let entry = sched.entry(n)?;
        let k_n = entry.k_n;
        let base = (gi * config.replicates) as u64;
        let batch: Vec<(ReplicateRecord, f64, f64)> = par_replicates(config.replicates, |i| {
            let stream = RngStream::new(config.master_seed, base + i as u64);
            let st = replicate_stats(n, config, k_n, entry.r, stream)?;
            let full = gumbel_statistic(st.s_k, n, k_n, config.d, theta, config.density,
                GumbelVariant::Full);
            let simplified = gumbel_statistic(st.s_k, n, k_n, config.d, theta, config.density,
                GumbelVariant::Simplified);
            let ratio = probability_limit_ratio(st.s_k, n, k_n, config.d, theta);
            let rec = ReplicateRecord {
                stream_index: stream.stream_index,
                n,
                d: config.d,
                norm: config.norm,
                k: k_n,
                r: entry.r,
                s_k: st.s_k,
                max_degree: st.max_degree,
                w_k: st.w_k,
                w_km1: st.w_km1,
                n_extreme: st.extreme.len(),
                statistic: full,
            };
            Ok((rec, simplified, ratio))
        })?;
        let stats: Vec<f64> = batch.iter().map(|(r, _, _)| r.statistic).collect();
        let sample = EmpiricalSample::new(stats.clone())?;
        let ks = sample.ks_distance(|x| law.cdf(x));
        let max_gap = batch
            .iter()
            .map(|(r, simp, _)| (r.statistic - simp).abs())
            .fold(0.0f64, f64::max);
        let ratios = EmpiricalSample::new(batch.iter().map(|&(_, _, q)| q).collect())?;
        per_n.push(json!({
            "n": n,
            "k_n": k_n,
            "r_n": entry.r,
            "ntheta_r_d": entry.ntheta_r_d,
            "residual": entry.residual,
            "ks": ks,
            "median_statistic": sample.median(),
            "max_full_vs_simplified": max_gap,
            "median_ratio": ratios.median(),
        }));
        last_stats = stats;
        records.extend(batch.into_iter().map(|(r, _, _)| r));
    }
    let plot_path = config.out_dir.join("plot_gumbel.csv");
    let mut buf = Vec::new();
    emit_plot_data(&last_stats, |x| law.cdf(x), &mut buf)?;
    fs::write(&plot_path, buf)?;
    let sched_path = config.out_dir.join("plot_schedule.csv");
    let mut buf = Vec::new();
    sched.dump_csv(&config.n_grid, &mut buf)?;
    fs::write(&sched_path, buf)?;
    let summary = json!({
        "kind": config.kind.label(),
        "d": config.d,
        "norm": config.norm.label(),
        "density": config.density.label(),
        "beta": config.beta,
        "ratio_target": crate::limit_laws::probability_limit_target(config.density.f_max(config.d)),
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "per_n": per_n,
    });
    finish(config, records, summary, vec![plot_path, sched_path])
}

/// Disjoint slabs along axis 0 covering the cube.
fn slab_boxes(d: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|b| {
            let mut lo = vec![-0.5; d];
            let mut hi = vec![0.5; d];
            lo[0] = -0.5 + b as f64 / count as f64;
            hi[0] = -0.5 + (b + 1) as f64 / count as f64;
            (lo, hi)
        })
        .collect()
}

fn run_phi_fixed(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let k = config.k;
    let atlas = Atlas::build(
        k,
        config.d,
        config.norm,
        config.density,
        config.mc_samples,
        RngStream::new(config.master_seed, u64::MAX / 2),
    )?;
    let n = *config.n_grid.last().expect("validated nonempty");
    let r = radius_fixed_k(n, k, config.d, config.beta)?;
    let batch: Vec<(ReplicateRecord, ExtremeSet, usize)> =
        par_replicates(config.replicates, |i| {
            let stream = RngStream::new(config.master_seed, i as u64);
            let cloud = sample_binomial(n, config.d, config.density, stream);
            let s_k = threshold_radius(&cloud, k, config.norm)?;
            let profile = degree_profile(&cloud, r, config.norm)?;
            let extreme =
                extreme_points_from_profile(&cloud, &profile, ExtremeTag::ExactDegree(k))?;
            let overflow = profile.count_at_least(k + 1);
            let rec = ReplicateRecord {
                stream_index: stream.stream_index,
                n,
                d: config.d,
                norm: config.norm,
                k,
                r,
                s_k,
                max_degree: profile.max_degree,
                w_k: profile.count(k),
                w_km1: if k >= 1 { profile.count(k - 1) } else { 0 },
                n_extreme: extreme.len(),
                statistic: profile.count(k) as f64,
            };
            Ok((rec, extreme, overflow))
        })?;
    // TV between empirical W_k and the atlas-derived compound Poisson
    let counts: Vec<u64> = batch.iter().map(|(r, _, _)| r.w_k as u64).collect();
    let law = CompoundPoissonLaw::new(
        atlas
            .classes
            .iter()
            .filter(|c| c.mu > 0.0)
            .map(|c| (c.q, config.beta * c.mu))
            .collect(),
    )?;
    let pmf = law.pmf();
    let emp = pmf_from_samples(&counts);
    let tv = tv_distance(&emp, &pmf);
    let overflow_prob = batch.iter().filter(|(_, _, o)| *o > 0).count() as f64
        / config.replicates as f64;
    // box-count comparison against the per-box compound reference
    let boxes = slab_boxes(config.d, config.boxes);
    let j = (k + 1) as u32;
    let full_mass = config.density.integral_power(config.d, j, None);
    let laws: Vec<CompoundPoissonLaw> = boxes
        .iter()
        .map(|(lo, hi)| {
            let frac = config.density.integral_power(config.d, j, Some((lo, hi))) / full_mass;
            CompoundPoissonLaw::new(
                atlas
                    .classes
                    .iter()
                    .filter(|c| c.mu > 0.0)
                    .map(|c| (c.q, config.beta * c.mu * frac))
                    .collect(),
            )
        })
        .collect::<Result<_, _>>()?;
    let sets: Vec<&ExtremeSet> = batch.iter().map(|(_, e, _)| e).collect();
    let box_report = box_count_test(
        &sets,
        &boxes,
        |set, lo, hi| set.count_in_box(lo, hi) as u64,
        &BoxReference::Compound(laws),
    )?;
    let plot_path = config.out_dir.join("plot_pmf.csv");
    let mut buf = String::from("count,empirical,reference\n");
    for i in 0..emp.len().max(pmf.len()) {
        buf.push_str(&format!(
            "{},{:?},{:?}\n",
            i,
            emp.get(i).copied().unwrap_or(0.0),
            pmf.get(i).copied().unwrap_or(0.0)
        ));
    }
    fs::write(&plot_path, buf)?;
    let summary = json!({
        "kind": config.kind.label(),
        "n": n,
        "d": config.d,
        "k": k,
        "beta": config.beta,
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "atoms": law.atoms,
        "mu_dk": atlas.mu_dk(),
        "tv_w_k": tv,
        "overflow_prob": overflow_prob,
        "box_tv": box_report.per_box_tv,
        "box_correlations": box_report.correlations,
    });
    let records: Vec<ReplicateRecord> = batch.into_iter().map(|(r, _, _)| r).collect();
    finish(config, records, summary, vec![plot_path])
}

fn run_phi_growing(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let theta = unit_ball_volume(config.d, config.norm)?;
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: config.kn_rule, beta: config.beta },
        config.d,
        theta,
        config.density,
    );
    let n = *config.n_grid.last().expect("validated nonempty");
    let entry = sched.entry(n)?;
    let k_n = entry.k_n;
    let batch = par_replicates(config.replicates, |i| {
        let stream = RngStream::new(config.master_seed, i as u64);
        let st = replicate_stats(n, config, k_n, entry.r, stream)?;
        Ok(ReplicateRecord {
            stream_index: stream.stream_index,
            n,
            d: config.d,
            norm: config.norm,
            k: k_n,
            r: entry.r,
            s_k: st.s_k,
            max_degree: st.max_degree,
            w_k: st.w_k,
            w_km1: st.w_km1,
            n_extreme: st.extreme.len(),
            statistic: st.w_k as f64,
        })
    })?;
    // Poisson(β) reference for W_{k_n}
    let counts: Vec<u64> = batch.iter().map(|r| r.w_k as u64).collect();
    let emp = pmf_from_samples(&counts);
    let reference = CompoundPoissonLaw::new(vec![(1, config.beta)])?.pmf();
    let tv = tv_distance(&emp, &reference);
    let plot_path = config.out_dir.join("plot_pmf.csv");
    let mut buf = String::from("count,empirical,reference\n");
    for i in 0..emp.len().max(reference.len()) {
        buf.push_str(&format!(
            "{},{:?},{:?}\n",
            i,
            emp.get(i).copied().unwrap_or(0.0),
            reference.get(i).copied().unwrap_or(0.0)
        ));
    }
    fs::write(&plot_path, buf)?;
    let summary = json!({
        "kind": config.kind.label(),
        "n": n,
        "d": config.d,
        "k_n": k_n,
        "r_n": entry.r,
        "residual": entry.residual,
        "beta": config.beta,
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "tv_poisson": tv,
    });
    finish(config, batch, summary, vec![plot_path])
}

fn run_concentration(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let n = *config.n_grid.last().expect("validated nonempty");
    let r = (n as f64).powf(-config.r_exponent);
    let k = config.k;
    let batch = par_replicates(config.replicates, |i| {
        let stream = RngStream::new(config.master_seed, i as u64);
        let st = replicate_stats(n, config, k, r, stream)?;
        Ok(ReplicateRecord {
            stream_index: stream.stream_index,
            n,
            d: config.d,
            norm: config.norm,
            k,
            r,
            s_k: st.s_k,
            max_degree: st.max_degree,
            w_k: st.w_k,
            w_km1: st.w_km1,
            n_extreme: st.extreme.len(),
            statistic: st.max_degree as f64,
        })
    })?;
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for rec in &batch {
        *hist.entry(rec.max_degree).or_default() += 1;
    }
    // the best two consecutive values, and the fixed window {2, 3}
    let max_delta = hist.keys().copied().max().unwrap_or(0);
    let mass = |v: usize| hist.get(&v).copied().unwrap_or(0) as f64 / config.replicates as f64;
    let (mut best_pair, mut best_mass) = (0usize, 0.0f64);
    for v in 0..=max_delta {
        let m = mass(v) + mass(v + 1);
        if m > best_mass {
            best_mass = m;
            best_pair = v;
        }
    }
    let plot_path = config.out_dir.join("plot_hist.csv");
    let mut buf = String::from("max_degree,frequency\n");
    for (v, c) in &hist {
        buf.push_str(&format!("{},{:?}\n", v, *c as f64 / config.replicates as f64));
    }
    fs::write(&plot_path, buf)?;
    let summary = json!({
        "kind": config.kind.label(),
        "n": n,
        "d": config.d,
        "r_exponent": config.r_exponent,
        "r": r,
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "histogram": hist.iter().map(|(v, c)| json!([v, c])).collect::<Vec<_>>(),
        "two_point_mass_23": mass(2) + mass(3),
        "best_pair": [best_pair, best_pair + 1],
        "best_pair_mass": best_mass,
    });
    finish(config, batch, summary, vec![plot_path])
}

fn run_mu_constants(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let atlas = Atlas::build(
        config.k,
        config.d,
        config.norm,
        config.density,
        config.mc_samples,
        RngStream::new(config.master_seed, 0),
    )?;
    let cache_path = config.out_dir.join("atlas_cache.jsonl");
    let mut buf = Vec::new();
    atlas.save(&mut buf)?;
    fs::write(&cache_path, buf)?;
    let classes: Vec<serde_json::Value> = atlas
        .classes
        .iter()
        .map(|c| {
            json!({
                "graph": c.canonical.bitstring(),
                "edges": c.canonical.edge_count(),
                "q": c.q,
                "mu": c.mu,
                "se": c.se,
                "n_samples": c.n_samples,
                "feasible": format!("{:?}", c.feasible),
            })
        })
        .collect();
    let weight_law = atlas.weight_law().ok();
    let summary = json!({
        "kind": config.kind.label(),
        "k": config.k,
        "d": config.d,
        "norm": config.norm.label(),
        "density": config.density.label(),
        "mc_samples": config.mc_samples,
        "master_seed": config.master_seed,
        "classes": classes,
        "mu_dk": atlas.mu_dk(),
        "weight_law": weight_law.map(|w| w.atoms),
    });
    finish(config, Vec::new(), summary, vec![cache_path])
}

fn run_bounds_suite(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    // grid sweep: exact CDF tails must never exceed the H-bounds
    let mut worst: f64 = f64::NEG_INFINITY; // max (exact − bound); ≤ 0 means all hold
    let mut rows = String::from("family,mean,k,exact,bound\n");
    for n in 1..=50u64 {
        for pi in 1..=9 {
            let p = pi as f64 / 10.0;
            let bin = statrs::distribution::Binomial::new(p, n).expect("valid");
            let mean = n as f64 * p;
            for k in 0..=n {
                let kf = k as f64;
                let (exact, bound) = if kf >= mean {
                    let exact = 1.0 - if k == 0 { 0.0 } else { bin.cdf(k - 1) };
                    (exact, tail_bound(TailBound::BinomialUpper { n, p, k: kf })?)
                } else {
                    (bin.cdf(k), tail_bound(TailBound::BinomialLower { n, p, k: kf })?)
                };
                worst = worst.max(exact - bound);
                rows.push_str(&format!("binomial,{mean:?},{k},{exact:?},{bound:?}\n"));
            }
        }
    }
    for &lambda in &[0.5f64, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
        let po = statrs::distribution::Poisson::new(lambda).expect("λ > 0");
        for k in 0..=200u64 {
            let kf = k as f64;
            let (exact, bound) = if kf >= lambda {
                let exact = 1.0 - if k == 0 { 0.0 } else { po.cdf(k - 1) };
                (exact, tail_bound(TailBound::PoissonUpper { lambda, k: kf })?)
            } else {
                (po.cdf(k), tail_bound(TailBound::PoissonLower { lambda, k: kf })?)
            };
            worst = worst.max(exact - bound);
            rows.push_str(&format!("poisson,{lambda:?},{k},{exact:?},{bound:?}\n"));
        }
    }
    // Lemma A.3 at large λ by exact Poisson CDF
    let mut a3 = Vec::new();
    for &lambda in &[1e2, 1e3, 1e4] {
        let po = statrs::distribution::Poisson::new(lambda).expect("λ > 0");
        let half_band = lambda.powf(0.75) / 2.0;
        let upper = 1.0 - po.cdf((lambda + half_band).ceil() as u64 - 1);
        let lower = po.cdf((lambda - half_band).floor() as u64);
        let bound = tail_bound(TailBound::Poisson34 { lambda })?;
        a3.push(json!({
            "lambda": lambda,
            "upper_exact": upper,
            "lower_exact": lower,
            "bound": bound,
            "holds": upper <= bound && lower <= bound,
        }));
    }
    let plot_path = config.out_dir.join("plot_bounds.csv");
    fs::write(&plot_path, rows)?;
    // the inequalities are exact mathematics; the CDF evaluations are not,
    // so grant them a few ulps of slack
    let tolerance = 1e-12;
    let summary = json!({
        "kind": config.kind.label(),
        "worst_gap": worst,
        "tolerance": tolerance,
        "all_bounds_hold": worst <= tolerance,
        "lemma_a3": a3,
        "master_seed": config.master_seed,
    });
    finish(config, Vec::new(), summary, vec![plot_path])
}

fn run_palm_suite(config: &ExperimentConfig) -> Result<RunOutputs, Error> {
    let lambda = config.lambda;
    let d = config.d;
    let norm = config.norm;
    let r = config.palm_r;
    // j = 1 counting functional
    let count_est = palm_lhs_rhs(
        |_, _| 1.0,
        1,
        lambda,
        d,
        config.density,
        config.replicates,
        RngStream::new(config.master_seed, 0),
    )?;
    // j = 2 edge indicator
    let edge_est = palm_lhs_rhs(
        move |sub, cloud| {
            let (a, b) = (cloud.point(sub[0]), cloud.point(sub[1]));
            (norm.dist(a, b) <= r) as u64 as f64
        },
        2,
        lambda,
        d,
        config.density,
        config.replicates,
        RngStream::new(config.master_seed, 1 << 32),
    )?;
    let summary = json!({
        "kind": config.kind.label(),
        "lambda": lambda,
        "d": d,
        "r": r,
        "replicates": config.replicates,
        "master_seed": config.master_seed,
        "counting": {
            "lhs": count_est.lhs, "lhs_se": count_est.lhs_se,
            "rhs": count_est.rhs, "rhs_se": count_est.rhs_se,
            "discrepancy_se": count_est.discrepancy_in_se(),
        },
        "edge": {
            "lhs": edge_est.lhs, "lhs_se": edge_est.lhs_se,
            "rhs": edge_est.rhs, "rhs_se": edge_est.rhs_se,
            "discrepancy_se": edge_est.discrepancy_in_se(),
        },
    });
    finish(config, Vec::new(), summary, Vec::new())
}

fn finish(
    config: &ExperimentConfig,
    records: Vec<ReplicateRecord>,
    summary: serde_json::Value,
    plot_paths: Vec<PathBuf>,
) -> Result<RunOutputs, Error> {
    let records_path = write_records(config, &records)?;
    let summary_path = write_summary(config, &summary)?;
    Ok(RunOutputs {
        records_path,
        summary_path,
        plot_paths,
        summary,
    })
}
