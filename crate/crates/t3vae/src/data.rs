//! Synthetic heavy-tailed datasets, train/val/test splitting, CSV
//! persistence, and the row-major [`Batch`] container used everywhere.
//!
//! The univariate dataset is the bimodal mixture
//! 0.6·t₁(−2, 1², 5) + 0.4·t₁(2, 1², 5). The bivariate dataset draws
//! x ~ 0.7·t₁(−2, 2², 5) + 0.3·t₁(2, 2², 5), sets y = x + 2·sin(πx/4), then
//! adds bivariate t₂((0,0)ᵀ, I₂, 6) noise to the (x, y) pair.

use crate::error::{io_err, Error, Result};
use crate::tdist::sample_t1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// Row-major matrix of observations; rows = samples, columns = dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    data: Vec<f64>,
    cols: usize,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Batch { data: vec![0.0; rows * cols], cols }
    }

    pub fn from_vec(data: Vec<f64>, cols: usize) -> Result<Self> {
        if cols == 0 || data.len() % cols != 0 {
            return Err(Error::Contract(format!(
                "{} values do not form rows of width {cols}",
                data.len()
            )));
        }
        Ok(Batch { data, cols })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.cols).copied().collect()
    }

    /// New batch containing the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Batch {
        let mut out = Batch { data: Vec::with_capacity(indices.len() * self.cols), cols: self.cols };
        for &i in indices {
            out.data.extend_from_slice(self.row(i));
        }
        out
    }

    /// Rows satisfying the predicate.
    pub fn filter(&self, mut pred: impl FnMut(&[f64]) -> bool) -> Batch {
        let mut out = Batch { data: Vec::new(), cols: self.cols };
        for i in 0..self.rows() {
            let r = self.row(i);
            if pred(r) {
                out.data.extend_from_slice(r);
            }
        }
        out
    }
}

/// One component of a univariate t mixture; `scale` is Σ (squared).
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent {
    pub weight: f64,
    pub loc: f64,
    pub scale: f64,
    pub df: f64,
}

/// Specification of a univariate t mixture (weights sum to 1).
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Contract("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| c.weight <= 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "mixture weights must be positive and sum to 1 (sum = {total})"
            )));
        }
        Ok(MixtureSpec { components })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let log_c = crate::tdist::log_norm_const(c.df, 1).expect("df > 0");
                let z2 = (x - c.loc) * (x - c.loc) / c.scale;
                c.weight
                    * (log_c - 0.5 * c.scale.ln()
                        - 0.5 * (c.df + 1.0) * (z2 / c.df).ln_1p())
                    .exp()
            })
            .sum()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            let z = (x - c.loc) / c.scale.sqrt();
            acc += c.weight * crate::special::student_t_cdf(z, c.df)?;
        }
        Ok(acc)
    }

    /// Sample with the component indicator of each draw.
    pub fn sample_labeled(&self, count: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<usize>) {
        let mut xs = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.components.len() - 1;
            for (k, c) in self.components.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let c = &self.components[pick];
            xs.push(sample_t1(c.loc, c.scale, c.df, rng));
            labels.push(pick);
        }
        (xs, labels)
    }
}

/// 0.6·t₁(−2, 1², 5) + 0.4·t₁(2, 1², 5).
pub fn univariate_spec() -> MixtureSpec {
    MixtureSpec::new(vec![
        MixtureComponent { weight: 0.6, loc: -2.0, scale: 1.0, df: 5.0 },
        MixtureComponent { weight: 0.4, loc: 2.0, scale: 1.0, df: 5.0 },
    ])
    .expect("static spec is valid")
}

/// x-marginal of the bivariate construction: 0.7·t₁(−2, 2², 5) + 0.3·t₁(2, 2², 5).
pub fn bivariate_x_spec() -> MixtureSpec {
    MixtureSpec::new(vec![
        MixtureComponent { weight: 0.7, loc: -2.0, scale: 4.0, df: 5.0 },
        MixtureComponent { weight: 0.3, loc: 2.0, scale: 4.0, df: 5.0 },
    ])
    .expect("static spec is valid")
}

/// i.i.d. samples from the univariate heavy-tailed mixture.
pub fn gen_univariate(count: usize, rng: &mut impl Rng) -> Batch {
    let (xs, _) = univariate_spec().sample_labeled(count, rng);
    Batch { data: xs, cols: 1 }
}

/// Like [`gen_univariate`] but also returns component indicators.
pub fn gen_univariate_labeled(count: usize, rng: &mut impl Rng) -> (Batch, Vec<usize>) {
    let (xs, labels) = univariate_spec().sample_labeled(count, rng);
    (Batch { data: xs, cols: 1 }, labels)
}

/// One draw of bivariate t₂(0, I₂, 6) noise (shared χ² mixing variable).
pub(crate) fn sample_noise_t2(rng: &mut impl Rng) -> (f64, f64) {
    let chi2 = ChiSquared::<f64>::new(6.0).expect("static df");
    let s = (6.0 / chi2.sample(rng)).sqrt();
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (z1 * s, z2 * s)
}

fn gen_bivariate_inner(count: usize, rng: &mut impl Rng, noise: bool) -> Batch {
    let spec = bivariate_x_spec();
    let mut out = Batch::zeros(count, 2);
    for i in 0..count {
        let (xs, _) = spec.sample_labeled(1, rng);
        let x = xs[0];
        let y = x + 2.0 * (std::f64::consts::PI * x / 4.0).sin();
        let (nx, ny) = if noise { sample_noise_t2(rng) } else { (0.0, 0.0) };
        let row = out.row_mut(i);
        row[0] = x + nx;
        row[1] = y + ny;
    }
    out
}

/// Samples from the bivariate heavy-tailed construction (with t₂ noise).
pub fn gen_bivariate(count: usize, rng: &mut impl Rng) -> Batch {
    gen_bivariate_inner(count, rng, true)
}

/// The same construction with the noise term disabled; draws lie exactly on
/// the curve y = x + 2 sin(πx/4), useful as a ground-truth manifold overlay.
pub fn gen_bivariate_noiseless(count: usize, rng: &mut impl Rng) -> Batch {
    gen_bivariate_inner(count, rng, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Univariate,
    Bivariate,
}

impl DatasetKind {
    pub fn dim(self) -> usize {
        match self {
            DatasetKind::Univariate => 1,
            DatasetKind::Bivariate => 2,
        }
    }

    pub fn generate(self, count: usize, rng: &mut impl Rng) -> Batch {
        match self {
            DatasetKind::Univariate => gen_univariate(count, rng),
            DatasetKind::Bivariate => gen_bivariate(count, rng),
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "univariate" => Ok(DatasetKind::Univariate),
            "bivariate" => Ok(DatasetKind::Bivariate),
            other => Err(Error::Config(format!(
                "unknown dataset '{other}' (expected univariate or bivariate)"
            ))),
        }
    }
}

/// Desk-scale dataset presets (train/val/test sizes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPreset {
    /// 200K / 200K / 500K
    Paper,
    /// 20K / 20K / 50K
    Quick,
}

impl SplitPreset {
    pub fn sizes(self) -> (usize, usize, usize) {
        match self {
            SplitPreset::Paper => (200_000, 200_000, 500_000),
            SplitPreset::Quick => (20_000, 20_000, 50_000),
        }
    }
}

impl std::str::FromStr for SplitPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SplitPreset::Paper),
            "quick" => Ok(SplitPreset::Quick),
            other => Err(Error::Config(format!(
                "unknown split preset '{other}' (expected paper or quick)"
            ))),
        }
    }
}

/// Deterministic rng for worker stream `stream` of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generate train/val/test batches on independent rng streams of one seed.
pub fn gen_dataset(kind: DatasetKind, sizes: (usize, usize, usize), seed: u64) -> (Batch, Batch, Batch) {
    let train = kind.generate(sizes.0, &mut stream_rng(seed, 1));
    let val = kind.generate(sizes.1, &mut stream_rng(seed, 2));
    let test = kind.generate(sizes.2, &mut stream_rng(seed, 3));
    (train, val, test)
}

/// Deterministic shuffled split of `batch` into parts proportional to
/// `ratios` (sizes rounded at the cumulative boundaries).
pub fn split(batch: &Batch, ratios: (f64, f64, f64), seed: u64) -> Result<(Batch, Batch, Batch)> {
    let (r1, r2, r3) = ratios;
    if r1 <= 0.0 || r2 <= 0.0 || r3 <= 0.0 {
        return Err(Error::Domain("split ratios must be positive".into()));
    }
    let total = r1 + r2 + r3;
    let n = batch.rows();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    let c1 = ((r1 / total) * n as f64).round() as usize;
    let c2 = (((r1 + r2) / total) * n as f64).round() as usize;
    let c1 = c1.min(n);
    let c2 = c2.clamp(c1, n);
    Ok((
        batch.select(&indices[..c1]),
        batch.select(&indices[c1..c2]),
        batch.select(&indices[c2..]),
    ))
}

/// Write a batch as CSV with header `x0,..,x{n-1}`; 17 significant digits.
pub fn write_csv(path: impl AsRef<Path>, batch: &Batch) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (0..batch.cols()).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for i in 0..batch.rows() {
        let row: Vec<String> = batch.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Read a CSV written by [`write_csv`] (header row, comma-separated floats).
pub fn read_csv(path: impl AsRef<Path>) -> Result<Batch> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.into(),
        line: 1,
        msg: "empty file (missing header)".into(),
    })?;
    let header = header.map_err(io_err(path))?;
    let cols = header.split(',').count();
    if cols == 0 || header.trim().is_empty() {
        return Err(Error::Parse { path: path.into(), line: 1, msg: "empty header row".into() });
    }
    let mut data = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("expected {cols} fields, found {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|e| Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("invalid float '{f}': {e}"),
            })?;
            data.push(v);
        }
    }
    Batch::from_vec(data, cols)
}
