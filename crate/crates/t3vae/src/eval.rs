//! Sample-quality evaluation: linear-time MMD two-sample testing with a
//! permutation bootstrap, tail-region filtering, log-scale histogram export,
//! Kolmogorov-Smirnov helpers, and reconstruction error reporting.

use crate::data::Batch;
use crate::error::{io_err, Error, Result};
use crate::models::{EncoderOutput, ModelConfig};
use crate::nn::Mlp;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

/// Largest per-group sample size used in a test; bigger inputs are
/// subsampled with an even stride.
pub const MMD_SUBSAMPLE_CAP: usize = 100_000;
/// Pooled points used for the median-heuristic bandwidth.
const BANDWIDTH_POINTS: usize = 2048;

/// Outcome of one MMD test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdReport {
    pub statistic: f64,
    pub p_value: f64,
    pub bandwidth: f64,
    pub n_bootstrap: usize,
    pub region: String,
    /// per-group sample count after matching and capping
    pub n_used: usize,
}

fn strided_subsample(b: &Batch, target: usize) -> Batch {
    if b.rows() <= target {
        return b.clone();
    }
    let mut out = Batch::zeros(target, b.cols());
    for i in 0..target {
        let src = i * b.rows() / target;
        out.row_mut(i).copy_from_slice(b.row(src));
    }
    out
}

fn dist2(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Median pairwise distance over an evenly strided pooled subset; zero
/// distances are ignored so duplicated points cannot collapse the kernel.
fn median_bandwidth(a: &Batch, b: &Batch) -> Result<f64> {
    let half = BANDWIDTH_POINTS / 2;
    let sa = strided_subsample(a, half);
    let sb = strided_subsample(b, half);
    let mut points: Vec<&[f64]> = Vec::with_capacity(sa.rows() + sb.rows());
    points.extend((0..sa.rows()).map(|i| sa.row(i)));
    points.extend((0..sb.rows()).map(|i| sb.row(i)));
    let mut d2: Vec<f64> = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dist2(points[i], points[j]);
            if d > 0.0 {
                d2.push(d);
            }
        }
    }
    if d2.is_empty() {
        return Err(Error::Numeric("all pooled points are identical".into()));
    }
    let mid = d2.len() / 2;
    let (_, med, _) = d2.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(med.sqrt())
}

/// Linear-time MMD test with a Gaussian kernel and median-heuristic
/// bandwidth. The estimator averages the paired h-statistic
/// h_i = k(x_{2i},x_{2i+1}) + k(y_{2i},y_{2i+1}) − k(x_{2i},y_{2i+1})
/// − k(x_{2i+1},y_{2i}); under the null, within-tuple label permutations
/// flip the sign of h_i independently, so the bootstrap draws sign vectors.
/// p-value = fraction of bootstrap statistics ≥ the observed one.
pub fn mmd_linear_test(
    a: &Batch,
    b: &Batch,
    n_bootstrap: usize,
    region: &str,
    rng: &mut impl Rng,
) -> Result<MmdReport> {
    if a.cols() != b.cols() {
        return Err(Error::Contract(format!(
            "sample dimensions differ: {} vs {}",
            a.cols(),
            b.cols()
        )));
    }
    if a.rows() < 4 || b.rows() < 4 {
        return Err(Error::Contract(format!(
            "mmd test needs at least 4 samples per group, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    if n_bootstrap == 0 {
        return Err(Error::Contract("n_bootstrap must be positive".into()));
    }
    let n = a.rows().min(b.rows()).min(MMD_SUBSAMPLE_CAP);
    let sa = strided_subsample(a, n);
    let sb = strided_subsample(b, n);
    let sigma = median_bandwidth(&sa, &sb)?;
    let inv = -1.0 / (2.0 * sigma * sigma);
    let k = |u: &[f64], v: &[f64]| (inv * dist2(u, v)).exp();

    let half = n / 2;
    let mut h = Vec::with_capacity(half);
    for i in 0..half {
        let (x1, x2) = (sa.row(2 * i), sa.row(2 * i + 1));
        let (y1, y2) = (sb.row(2 * i), sb.row(2 * i + 1));
        h.push(k(x1, x2) + k(y1, y2) - k(x1, y2) - k(x2, y1));
    }
    let statistic = h.iter().sum::<f64>() / half as f64;

    let mut exceed = 0usize;
    for _ in 0..n_bootstrap {
        let mut s = 0.0;
        for &hi in &h {
            s += if rng.random::<bool>() { hi } else { -hi };
        }
        if s / half as f64 >= statistic {
            exceed += 1;
        }
    }
    Ok(MmdReport {
        statistic,
        p_value: exceed as f64 / n_bootstrap as f64,
        bandwidth: sigma,
        n_bootstrap,
        region: region.to_string(),
        n_used: n,
    })
}

/// Which part of the sample space a tail test looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRegion {
    Full,
    Left,
    Right,
    Both,
}

impl std::str::FromStr for TailRegion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TailRegion::Full),
            "left" => Ok(TailRegion::Left),
            "right" => Ok(TailRegion::Right),
            "both" => Ok(TailRegion::Both),
            other => Err(Error::Config(format!("unknown tail region '{other}'"))),
        }
    }
}

impl std::fmt::Display for TailRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TailRegion::Full => "full",
            TailRegion::Left => "left",
            TailRegion::Right => "right",
            TailRegion::Both => "both",
        };
        f.write_str(s)
    }
}

/// Tail predicate: univariate data thresholds |x|, multivariate data
/// thresholds the Euclidean norm with the half-plane chosen by the first
/// coordinate's sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSpec {
    pub region: TailRegion,
    pub threshold: f64,
}

impl TailSpec {
    /// Conventional thresholds: 6 for univariate data, 10 for multivariate.
    pub fn default_threshold(cols: usize) -> f64 {
        if cols <= 1 { 6.0 } else { 10.0 }
    }

    fn keeps(&self, row: &[f64]) -> bool {
        match self.region {
            TailRegion::Full => true,
            _ => {
                let (magnitude, sign_coord) = if row.len() == 1 {
                    (row[0].abs(), row[0])
                } else {
                    (dist2(row, &vec![0.0; row.len()]).sqrt(), row[0])
                };
                magnitude > self.threshold
                    && match self.region {
                        TailRegion::Left => sign_coord < 0.0,
                        TailRegion::Right => sign_coord > 0.0,
                        TailRegion::Both => true,
                        TailRegion::Full => unreachable!(),
                    }
            }
        }
    }
}

/// Rows of `batch` inside the tail region; an empty result is a valid
/// outcome, not an error.
pub fn tail_filter(batch: &Batch, spec: &TailSpec) -> Batch {
    batch.filter(|row| spec.keeps(row))
}

/// One histogram bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub center: f64,
    pub count: usize,
    /// log10 of count/(total·width); −∞ for empty bins
    pub log10_density: f64,
}

/// Fixed-width histogram of scalar values with log-density columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Vec<HistBin>,
    pub underflow: usize,
    pub overflow: usize,
    pub total: usize,
}

/// Bin `values` into `bins` equal intervals over `range`. Out-of-range
/// points land in the underflow/overflow counters, so
/// Σ counts + underflow + overflow = total input size.
pub fn log_histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    let (lo, hi) = range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid histogram range [{lo}, {hi})")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let (mut under, mut over) = (0usize, 0usize);
    for &v in values {
        if v < lo {
            under += 1;
        } else if v >= hi {
            over += 1;
        } else {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    let total = values.len();
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistBin {
            center: lo + (i as f64 + 0.5) * width,
            count,
            log10_density: if count == 0 {
                f64::NEG_INFINITY
            } else {
                (count as f64 / (total as f64 * width)).log10()
            },
        })
        .collect();
    Ok(Histogram { bins, underflow: under, overflow: over, total })
}

/// Write a histogram as CSV with columns bin_center, count, log10_density
/// (empty bins print `-inf`).
pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut text = String::from("bin_center,count,log10_density\n");
    for b in &hist.bins {
        text.push_str(&format!("{:.16e},{},{:e}\n", b.center, b.count, b.log10_density));
    }
    file.write_all(text.as_bytes()).map_err(io_err(path))
}

/// One-sample Kolmogorov-Smirnov statistic of sorted draws against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        ks = ks.max(((i + 1) as f64 / n - c).abs()).max((c - i as f64 / n).abs());
    }
    ks
}

/// Asymptotic one-sample KS critical value c(α)/√n for α ∈ {0.05, 0.001}.
pub fn ks_critical(alpha: f64, n: usize) -> Result<f64> {
    let c = if (alpha - 0.05).abs() < 1e-12 {
        1.3581
    } else if (alpha - 0.001).abs() < 1e-12 {
        1.9495
    } else {
        return Err(Error::Contract(format!("no tabulated KS constant for alpha = {alpha}")));
    };
    Ok(c / (n as f64).sqrt())
}

/// Mean squared reconstruction error ‖x − μ_θ(μ_φ(x))‖² through the
/// posterior mean (no sampling).
pub fn reconstruction_mse(
    encoder: &Mlp,
    decoder: &Mlp,
    batch: &Batch,
    cfg: &ModelConfig,
) -> Result<f64> {
    if batch.cols() != cfg.n {
        return Err(Error::Contract(format!(
            "data has {} columns, model expects n = {}",
            batch.cols(),
            cfg.n
        )));
    }
    let x = crate::autodiff::Mat::from_vec(batch.rows(), batch.cols(), batch.data().to_vec());
    let head = encoder.forward(&x)?;
    if head.cols() != 2 * cfg.m {
        return Err(Error::Contract(format!(
            "encoder emits {} columns, expected 2m = {}",
            head.cols(),
            2 * cfg.m
        )));
    }
    let mut z = crate::autodiff::Mat::zeros(batch.rows(), cfg.m);
    for i in 0..batch.rows() {
        let out = EncoderOutput::from_row(head.row(i));
        for (j, &v) in out.mu_phi.iter().enumerate() {
            z.set(i, j, v);
        }
    }
    let recon = decoder.forward(&z)?;
    let mut sum = 0.0;
    for i in 0..batch.rows() {
        sum += dist2(batch.row(i), recon.row(i));
    }
    Ok(sum / batch.rows() as f64)
}
