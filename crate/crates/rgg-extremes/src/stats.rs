//! Empirical-law machinery: ECDF and Kolmogorov–Smirnov distance, the
//! compound-Poisson pmf by convolution, total-variation distance on the
//! integers, and the joint box-count comparison for point processes.

use crate::Error;

/// A sample of reals with a cached sorted view.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    sorted: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<EmpiricalSample, Error> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalSample { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty samples
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous ECDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `sup_x |ECDF(x) − F(x)|`, evaluated from both sides of every jump.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            sup = sup.max(((i + 1) as f64 / n - f).abs());
            sup = sup.max((f - i as f64 / n).abs());
        }
        sup
    }
}

/// The law of `Σᵢ qᵢ·Poisson(rateᵢ)` with finitely many atoms.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CompoundPoissonLaw {
    /// (qᵢ ≥ 1, rateᵢ ≥ 0) pairs.
    pub atoms: Vec<(u32, f64)>,
}

const PMF_TAIL: f64 = 1e-12;

impl CompoundPoissonLaw {
    pub fn new(atoms: Vec<(u32, f64)>) -> Result<CompoundPoissonLaw, Error> {
        if atoms.iter().any(|&(q, rate)| q < 1 || rate < 0.0 || !rate.is_finite()) {
            return Err(Error::InvalidArgument(
                "atoms need q ≥ 1 and finite rate ≥ 0".into(),
            ));
        }
        Ok(CompoundPoissonLaw { atoms })
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(q, r)| q as f64 * r).sum()
    }

    pub fn variance(&self) -> f64 {
        self.atoms.iter().map(|&(q, r)| (q as f64).powi(2) * r).sum()
    }

    /// pmf table `[P[0], P[1], …]` truncated with total tail mass < 10⁻¹²,
    /// built by convolving the dilated Poisson pmfs.
    pub fn pmf(&self) -> Vec<f64> {
        let live: Vec<&(u32, f64)> = self.atoms.iter().filter(|&&(_, r)| r > 0.0).collect();
        if live.is_empty() {
            return vec![1.0];
        }
        let per_atom_tail = PMF_TAIL / live.len() as f64;
        let mut pmf = vec![1.0f64];
        for &&(q, rate) in &live {
            let base = poisson_pmf_table(rate, per_atom_tail);
            // dilate support by q and convolve
            let mut next = vec![0.0; pmf.len() + (base.len() - 1) * q as usize];
            for (j, &pj) in base.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let off = j * q as usize;
                for (i, &pi) in pmf.iter().enumerate() {
                    next[off + i] += pj * pi;
                }
            }
            pmf = next;
        }
        pmf
    }

    pub fn cdf_table(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pmf()
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect()
    }
}

/// Poisson pmf values `0..=m` where `m` leaves tail mass below `tail`.
fn poisson_pmf_table(lambda: f64, tail: f64) -> Vec<f64> {
    let mut table = vec![(-lambda).exp()];
    let mut cum = table[0];
    let mut j = 0usize;
    while cum < 1.0 - tail {
        let next = table[j] * lambda / (j + 1) as f64;
        table.push(next);
        cum += next;
        j += 1;
        if j > 10_000_000 {
            break; // unreachable for sane rates; guards pathological input
        }
    }
    table
}

/// Empirical pmf of a nonnegative-integer sample.
pub fn pmf_from_samples(values: &[u64]) -> Vec<f64> {
    let max = values.iter().copied().max().unwrap_or(0) as usize;
    let mut pmf = vec![0.0; max + 1];
    for &v in values {
        pmf[v as usize] += 1.0;
    }
    let n = values.len() as f64;
    for p in &mut pmf {
        *p /= n;
    }
    pmf
}

/// `½·Σ|p − q|` over the union support; mismatched lengths are padded
/// with zeros, so defective (truncated) tables contribute their deficit.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let mut acc = 0.0;
    for i in 0..len {
        let a = p.get(i).copied().unwrap_or(0.0);
        let b = q.get(i).copied().unwrap_or(0.0);
        acc += (a - b).abs();
    }
    0.5 * acc
}

/// Reference law for per-box counts.
#[derive(Debug, Clone)]
pub enum BoxReference {
    /// Poisson with the given mass per box.
    Poisson(Vec<f64>),
    /// Compound Poisson per box.
    Compound(Vec<CompoundPoissonLaw>),
}

/// Outcome of [`box_count_test`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoxCountReport {
    pub per_box_tv: Vec<f64>,
    /// `(i, j, Pearson correlation)` for every box pair.
    pub correlations: Vec<(usize, usize, f64)>,
    pub replicates: usize,
}

impl BoxCountReport {
    pub fn max_tv(&self) -> f64 {
        self.per_box_tv.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_abs_correlation(&self) -> f64 {
        self.correlations
            .iter()
            .map(|&(_, _, c)| c.abs())
            .fold(0.0, f64::max)
    }
}

/// Compare replicated per-box counts of a point process against a
/// reference product law: per-box TV plus pairwise Pearson correlations
/// (the sample-efficient proxy for independence across boxes).
///
/// `count(replicate, lo, hi)` extracts the mass a replicate places in a
/// box, so both plain point sets and multiplicity-marked clouds fit.
pub fn box_count_test<T, F>(
    replicates: &[T],
    boxes: &[(Vec<f64>, Vec<f64>)],
    count: F,
    reference: &BoxReference,
) -> Result<BoxCountReport, Error>
where
    F: Fn(&T, &[f64], &[f64]) -> u64,
{
    if boxes.is_empty() || replicates.is_empty() {
        return Err(Error::InvalidArgument(
            "box_count_test needs ≥ 1 box and ≥ 1 replicate".into(),
        ));
    }
    for (i, a) in boxes.iter().enumerate() {
        if a.0.len() != a.1.len() || a.0.iter().zip(&a.1).any(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidArgument(format!("box {i} is degenerate")));
        }
        for b in boxes.iter().skip(i + 1) {
            let overlap = a
                .0
                .iter()
                .zip(&a.1)
                .zip(b.0.iter().zip(&b.1))
                .all(|((alo, ahi), (blo, bhi))| alo < bhi && blo < ahi);
            if overlap {
                return Err(Error::InvalidArgument("boxes overlap".into()));
            }
        }
    }
    let s = boxes.len();
    match reference {
        BoxReference::Poisson(mass) if mass.len() != s => {
            return Err(Error::InvalidArgument("reference length mismatch".into()))
        }
        BoxReference::Compound(laws) if laws.len() != s => {
            return Err(Error::InvalidArgument("reference length mismatch".into()))
        }
        _ => {}
    }
    // counts[b][rep]
    let counts: Vec<Vec<u64>> = (0..s)
        .map(|b| {
            replicates
                .iter()
                .map(|rep| count(rep, &boxes[b].0, &boxes[b].1))
                .collect()
        })
        .collect();
    let per_box_tv = (0..s)
        .map(|b| {
            let emp = pmf_from_samples(&counts[b]);
            let theo = match reference {
                BoxReference::Poisson(mass) => {
                    if mass[b] == 0.0 {
                        vec![1.0]
                    } else {
                        poisson_pmf_table(mass[b], PMF_TAIL)
                    }
                }
                BoxReference::Compound(laws) => laws[b].pmf(),
            };
            tv_distance(&emp, &theo)
        })
        .collect();
    let mut correlations = Vec::new();
    for i in 0..s {
        for jj in i + 1..s {
            correlations.push((i, jj, pearson(&counts[i], &counts[jj])));
        }
    }
    Ok(BoxCountReport {
        per_box_tv,
        correlations,
        replicates: replicates.len(),
    })
}

fn pearson(a: &[u64], b: &[u64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        0.0 // a constant margin is trivially uncorrelated
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

/// One fixed-threshold check, serialized into `summary.json`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub replicates: usize,
    pub master_seed: u64,
    pub stream_range: (u64, u64),
}

impl TestReport {
    pub fn new(
        name: &str,
        statistic: f64,
        threshold: f64,
        replicates: usize,
        master_seed: u64,
        stream_range: (u64, u64),
    ) -> TestReport {
        TestReport {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
            replicates,
            master_seed,
            stream_range,
        }
    }
}
