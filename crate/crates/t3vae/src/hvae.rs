//! Two-level hierarchical models: heavy-tailed priors/encoders/decoders over
//! latents (z1, z2) with the closed-form hierarchical γ-loss, plus a Gaussian
//! hierarchical VAE baseline trained with the two-level ELBO.
//!
//! One shared precision variable couples both latent levels and the
//! observation noise, so the joint density is a single (m1+m2+n)-variate t
//! distribution and the loss constants C̃1, C̃2 come out in closed form. The
//! second-level encoder and the decoder take skip connections by
//! concatenation: q(z2|x, z1) reads [x, z1] and μ_θ reads [z1, z2].

use crate::autodiff::{Mat, Tape, Var};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::models::split_encoder_head;
use crate::nn::{reparam_with_noise, t_noise, Mlp, TapedMlp};
use crate::tdist::{log_norm_const, TParams};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierKind {
    T3Hvae,
    GaussianHvae,
}

impl std::str::FromStr for HierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t3hvae" => Ok(HierKind::T3Hvae),
            "gaussian_hvae" => Ok(HierKind::GaussianHvae),
            other => Err(Error::Config(format!("unknown hierarchical kind '{other}'"))),
        }
    }
}

/// Dimensions and fixed scalars of a two-level model.
#[derive(Debug, Clone, PartialEq)]
pub struct HierConfig {
    pub kind: HierKind,
    /// data dimension
    pub n: usize,
    /// first-level latent dimension
    pub m1: usize,
    /// second-level latent dimension
    pub m2: usize,
    /// degrees of freedom; ∞ for the Gaussian kind
    pub nu: f64,
    /// conditional prior scale σ_z
    pub sigma_z: f64,
    /// decoder scale σ_x
    pub sigma_x: f64,
}

impl HierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m1 == 0 || self.m2 == 0 {
            return Err(Error::Config("dimensions n, m1, m2 must be at least 1".into()));
        }
        for (name, v) in [("sigma_z", self.sigma_z), ("sigma_x", self.sigma_x)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        match self.kind {
            HierKind::T3Hvae => {
                if !(self.nu > 2.0) || !self.nu.is_finite() {
                    return Err(Error::Config(format!(
                        "t3hvae needs finite nu > 2, got {}",
                        self.nu
                    )));
                }
            }
            HierKind::GaussianHvae => {
                if !self.nu.is_infinite() {
                    return Err(Error::Config(
                        "gaussian_hvae uses the infinite-nu sentinel".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        -2.0 / (self.nu + (self.m1 + self.m2 + self.n) as f64)
    }
}

/// Constants of the hierarchical γ-loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierConstants {
    pub gamma: f64,
    pub c1_tilde: f64,
    pub c2_tilde: f64,
}

impl HierConstants {
    /// Coefficient of the log|Λ_φ| correction term, γνC̃1/(2C̃2); negative for
    /// every valid config, so large first-level scales are penalized.
    pub fn log_det_coeff(&self, nu: f64) -> f64 {
        self.gamma * nu * self.c1_tilde / (2.0 * self.c2_tilde)
    }
}

fn lnc(nu: f64, d: usize) -> Result<f64> {
    if d == 0 { Ok(0.0) } else { log_norm_const(nu, d) }
}

/// C̃1, C̃2 assembled in log space:
/// C̃1 = C_{ν+m1+n,m2}^{γ/(1+γ)}·(1+(m1+n)/ν)^{γm2/(2(1+γ))}·(1+m2/(ν+m1+n−2))^{1/(1+γ)},
/// C̃2 = (C_{ν,m1+m2+n}^γ·σ_z^{−γm2}·σ_x^{−γn})^{1/(1+γ)}·(1+(m1+m2+n)/(ν−2))^{−γ/(1+γ)}.
///
/// Accepts m1 = 0 or m2 = 0 so degenerate layers can be compared against the
/// flat model (validate() still rejects them for training).
pub fn hier_constants(cfg: &HierConfig) -> Result<HierConstants> {
    if cfg.kind != HierKind::T3Hvae {
        return Err(Error::Contract("loss constants are defined for the t3hvae kind".into()));
    }
    if !(cfg.nu > 2.0) || !cfg.nu.is_finite() {
        return Err(Error::Domain(format!("hier_constants needs finite nu > 2, got {}", cfg.nu)));
    }
    if cfg.n == 0 {
        return Err(Error::Config("data dimension n must be at least 1".into()));
    }
    let (nu, m1, m2, n) = (cfg.nu, cfg.m1 as f64, cfg.m2 as f64, cfg.n as f64);
    let gamma = cfg.gamma();
    let log_c1 = gamma / (1.0 + gamma) * lnc(nu + m1 + n, cfg.m2)?
        + gamma * m2 / (2.0 * (1.0 + gamma)) * ((m1 + n) / nu).ln_1p()
        + (m2 / (nu + m1 + n - 2.0)).ln_1p() / (1.0 + gamma);
    let log_c2 = (gamma * lnc(nu, cfg.m1 + cfg.m2 + cfg.n)?
        - gamma * m2 * cfg.sigma_z.ln()
        - gamma * n * cfg.sigma_x.ln())
        / (1.0 + gamma)
        - gamma / (1.0 + gamma) * ((m1 + m2 + n) / (nu - 2.0)).ln_1p();
    let out = HierConstants { gamma, c1_tilde: log_c1.exp(), c2_tilde: log_c2.exp() };
    if ![out.c1_tilde, out.c2_tilde].iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::Numeric(format!("hierarchical constants overflowed: {out:?}")));
    }
    Ok(out)
}

/// Per-sample encoder heads of both levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HierEncoderOutput {
    pub zeta_phi: Vec<f64>,
    pub log_lambda_phi: Vec<f64>,
    pub mu_phi: Vec<f64>,
    pub log_sigma_phi: Vec<f64>,
}

impl HierEncoderOutput {
    /// Split per-level network output rows (ζ_φ ‖ log λ_φ) and
    /// (μ_φ ‖ log σ_φ).
    pub fn from_rows(level1: &[f64], level2: &[f64]) -> HierEncoderOutput {
        let m1 = level1.len() / 2;
        let m2 = level2.len() / 2;
        HierEncoderOutput {
            zeta_phi: level1[..m1].to_vec(),
            log_lambda_phi: level1[m1..].to_vec(),
            mu_phi: level2[..m2].to_vec(),
            log_sigma_phi: level2[m2..].to_vec(),
        }
    }
}

/// First-level encoder distribution:
/// t_{m1}(ζ_φ, (1+n/ν)⁻¹·Λ_φ, ν+n), or N(ζ_φ, Λ_φ) for the Gaussian kind.
pub fn hier_encoder1_params(out: &HierEncoderOutput, cfg: &HierConfig) -> Result<TParams> {
    let lambda2: Vec<f64> = out.log_lambda_phi.iter().map(|l| (2.0 * l).exp()).collect();
    match cfg.kind {
        HierKind::T3Hvae => {
            let shrink = 1.0 / (1.0 + cfg.n as f64 / cfg.nu);
            TParams::new_diag(
                out.zeta_phi.clone(),
                lambda2.iter().map(|v| shrink * v).collect(),
                cfg.nu + cfg.n as f64,
            )
        }
        HierKind::GaussianHvae => {
            TParams::new_diag(out.zeta_phi.clone(), lambda2, f64::INFINITY)
        }
    }
}

/// Second-level encoder distribution:
/// t_{m2}(μ_φ, (1+(m1+n)/ν)⁻¹·Σ_φ, ν+m1+n), or N(μ_φ, Σ_φ).
pub fn hier_encoder2_params(out: &HierEncoderOutput, cfg: &HierConfig) -> Result<TParams> {
    let sigma2: Vec<f64> = out.log_sigma_phi.iter().map(|l| (2.0 * l).exp()).collect();
    match cfg.kind {
        HierKind::T3Hvae => {
            let shrink = 1.0 / (1.0 + (cfg.m1 + cfg.n) as f64 / cfg.nu);
            TParams::new_diag(
                out.mu_phi.clone(),
                sigma2.iter().map(|v| shrink * v).collect(),
                cfg.nu + (cfg.m1 + cfg.n) as f64,
            )
        }
        HierKind::GaussianHvae => TParams::new_diag(out.mu_phi.clone(), sigma2, f64::INFINITY),
    }
}

/// Scale factor of the conditional prior p(z2|z1):
/// ((1+‖z1‖²/ν)/(1+m1/ν))·σ_z².
pub fn hier_prior2_scale(z1_norm2: f64, cfg: &HierConfig) -> f64 {
    let s2 = cfg.sigma_z * cfg.sigma_z;
    if cfg.nu.is_infinite() {
        return s2;
    }
    (1.0 + z1_norm2 / cfg.nu) / (1.0 + cfg.m1 as f64 / cfg.nu) * s2
}

/// Conditional prior over z2 given z1: t_{m2}(ζ_θ(z1), hier_prior2_scale·I,
/// ν+m1), or N(ζ_θ(z1), σ_z²I).
pub fn hier_prior2_params(z1: &[f64], zeta_theta_z1: &[f64], cfg: &HierConfig) -> Result<TParams> {
    if zeta_theta_z1.len() != cfg.m2 {
        return Err(Error::Contract(format!(
            "conditional prior mean has dimension {}, expected m2 = {}",
            zeta_theta_z1.len(),
            cfg.m2
        )));
    }
    let scale = hier_prior2_scale(z1.iter().map(|v| v * v).sum(), cfg);
    let df = if cfg.nu.is_infinite() { f64::INFINITY } else { cfg.nu + cfg.m1 as f64 };
    TParams::new_diag(zeta_theta_z1.to_vec(), vec![scale; cfg.m2], df)
}

/// Scale factor of the decoder distribution:
/// ((1+‖z1‖²/ν+‖z2−ζ_θ(z1)‖²/(νσ_z²))/(1+(m1+m2)/ν))·σ_x².
pub fn hier_decoder_scale(z1_norm2: f64, dz2_norm2: f64, cfg: &HierConfig) -> f64 {
    let s2 = cfg.sigma_x * cfg.sigma_x;
    if cfg.nu.is_infinite() {
        return s2;
    }
    let nu = cfg.nu;
    (1.0 + z1_norm2 / nu + dz2_norm2 / (nu * cfg.sigma_z * cfg.sigma_z))
        / (1.0 + (cfg.m1 + cfg.m2) as f64 / nu)
        * s2
}

/// Observation distribution given (z1, z2): t_n(μ_θ, hier_decoder_scale·I,
/// ν+m1+m2), or N(μ_θ, σ_x²I).
pub fn hier_decoder_params(
    z1: &[f64],
    z2: &[f64],
    zeta_theta_z1: &[f64],
    mu_theta: &[f64],
    cfg: &HierConfig,
) -> Result<TParams> {
    if mu_theta.len() != cfg.n {
        return Err(Error::Contract(format!(
            "decoder mean has dimension {}, expected n = {}",
            mu_theta.len(),
            cfg.n
        )));
    }
    let z1n2: f64 = z1.iter().map(|v| v * v).sum();
    let dz2n2: f64 = z2
        .iter()
        .zip(zeta_theta_z1)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let scale = hier_decoder_scale(z1n2, dz2n2, cfg);
    let df = if cfg.nu.is_infinite() {
        f64::INFINITY
    } else {
        cfg.nu + (cfg.m1 + cfg.m2) as f64
    };
    TParams::new_diag(mu_theta.to_vec(), vec![scale; cfg.n], df)
}

/// log p_θ(x, z1, z2) = log C_{ν,m1+m2+n} − m2·log σ_z − n·log σ_x
/// − ((ν+m1+m2+n)/2)·log(1 + (‖z1‖² + ‖z2−ζ_θ(z1)‖²/σ_z² + ‖x−μ_θ‖²/σ_x²)/ν).
pub fn hier_joint_log_density(
    x: &[f64],
    z1: &[f64],
    z2: &[f64],
    zeta_theta_z1: &[f64],
    mu_theta: &[f64],
    cfg: &HierConfig,
) -> Result<f64> {
    if cfg.kind != HierKind::T3Hvae {
        return Err(Error::Contract("joint power form is defined for the t3hvae kind".into()));
    }
    if x.len() != cfg.n
        || z1.len() != cfg.m1
        || z2.len() != cfg.m2
        || zeta_theta_z1.len() != cfg.m2
        || mu_theta.len() != cfg.n
    {
        return Err(Error::Contract("joint density argument dimensions do not match".into()));
    }
    let (nu, m2, n) = (cfg.nu, cfg.m2 as f64, cfg.n as f64);
    let z1n2: f64 = z1.iter().map(|v| v * v).sum();
    let dz2n2: f64 = z2
        .iter()
        .zip(zeta_theta_z1)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / (cfg.sigma_z * cfg.sigma_z);
    let rn2: f64 = x
        .iter()
        .zip(mu_theta)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / (cfg.sigma_x * cfg.sigma_x);
    let d = cfg.m1 + cfg.m2 + cfg.n;
    Ok(log_norm_const(nu, d)? - m2 * cfg.sigma_z.ln() - n * cfg.sigma_x.ln()
        - 0.5 * (nu + d as f64) * ((z1n2 + dz2n2 + rn2) / nu).ln_1p())
}

/// Latent noise factor pairs (F1, F2) for `mc` nested reparametrized samples:
/// F1 draws δ1 ~ χ²(ν+n), F2 draws δ2 ~ χ²(ν+m1+n); plain Gaussian pairs for
/// the Gaussian kind.
pub fn hier_sample_noise(
    cfg: &HierConfig,
    rows: usize,
    mc: usize,
    rng: &mut impl Rng,
) -> Vec<(Mat, Mat)> {
    (0..mc)
        .map(|_| {
            (
                t_noise(rows, cfg.m1, cfg.nu, cfg.n, rng),
                t_noise(rows, cfg.m2, cfg.nu, cfg.m1 + cfg.n, rng),
            )
        })
        .collect()
}

fn check_out_dim(tape: &Tape, v: Var, want: usize, what: &str) -> Result<()> {
    let (_, cols) = tape.shape(v);
    if cols != want {
        return Err(Error::Contract(format!("{what} emits {cols} columns, expected {want}")));
    }
    Ok(())
}

struct HierForward {
    recon: Var,
    level2: Var,
    zeta_phi: Var,
    log_lambda: Var,
}

/// Shared forward structure of both hierarchical losses: level-1 head, then
/// per-path z1 → enc2([x, z1]) → z2 → decoder([z1, z2]), with per-path
/// reconstruction and level-2 columns averaged over the noise pairs. `level2`
/// is built by the caller-supplied closure from (μ_φ, log σ_φ, ζ_θ(z1)).
fn hier_forward(
    tape: &mut Tape,
    x: Var,
    enc1: &TapedMlp,
    enc2: &TapedMlp,
    prior2: &TapedMlp,
    dec: &TapedMlp,
    cfg: &HierConfig,
    noise: &[(Mat, Mat)],
    level2_terms: impl Fn(&mut Tape, Var, Var, Var) -> Result<Var>,
) -> Result<HierForward> {
    let head1 = enc1.forward(tape, x)?;
    let (zeta_phi, log_lambda) = split_encoder_head(tape, head1, cfg.m1)?;
    let mut recon_acc: Option<Var> = None;
    let mut level2_acc: Option<Var> = None;
    for (f1, f2) in noise {
        let z1 = reparam_with_noise(tape, zeta_phi, log_lambda, f1.clone());
        let xin2 = tape.concat(x, z1);
        let head2 = enc2.forward(tape, xin2)?;
        let (mu2, ls2) = split_encoder_head(tape, head2, cfg.m2)?;
        let z2 = reparam_with_noise(tape, mu2, ls2, f2.clone());
        let zeta_t = prior2.forward(tape, z1)?;
        check_out_dim(tape, zeta_t, cfg.m2, "conditional prior network")?;
        let din = tape.concat(z1, z2);
        let mu_theta = dec.forward(tape, din)?;
        check_out_dim(tape, mu_theta, cfg.n, "decoder network")?;

        let resid = tape.sub(x, mu_theta);
        let sq = tape.square(resid);
        let rcol = tape.row_sums(sq);
        recon_acc = Some(match recon_acc {
            None => rcol,
            Some(a) => tape.add(a, rcol),
        });
        let lcol = level2_terms(tape, mu2, ls2, zeta_t)?;
        level2_acc = Some(match level2_acc {
            None => lcol,
            Some(a) => tape.add(a, lcol),
        });
    }
    let recon = recon_acc.ok_or_else(|| Error::Contract("mc_samples must be at least 1".into()))?;
    let level2 = level2_acc.expect("same length as recon");
    let inv_l = 1.0 / noise.len() as f64;
    Ok(HierForward {
        recon: tape.scale(recon, inv_l),
        level2: tape.scale(level2, inv_l),
        zeta_phi,
        log_lambda,
    })
}

/// Hierarchical γ-loss of a batch on the tape:
/// ½·mean[ σ_x⁻²·E‖x−μ_θ(z1,z2)‖²
/// + ‖ζ_φ‖² + (ν/(ν+n−2))·tr Λ_φ + (γνC̃1/(2C̃2))·log|Λ_φ|
/// + σ_z⁻²·E_{z1}[ ‖μ_φ−ζ_θ(z1)‖² + (ν/(ν+m1+n−2))·tr Σ_φ
///   − (νσ_z²C̃1/C̃2)·|Σ_φ|^{−γ/(2(1+γ))} ] ].
pub fn hier_gamma_loss(
    tape: &mut Tape,
    x: Var,
    enc1: &TapedMlp,
    enc2: &TapedMlp,
    prior2: &TapedMlp,
    dec: &TapedMlp,
    cfg: &HierConfig,
    consts: &HierConstants,
    noise: &[(Mat, Mat)],
) -> Result<Var> {
    if cfg.kind != HierKind::T3Hvae {
        return Err(Error::Contract("hier_gamma_loss applies to the t3hvae kind".into()));
    }
    let (nu, m1, n) = (cfg.nu, cfg.m1 as f64, cfg.n as f64);
    let sz2 = cfg.sigma_z * cfg.sigma_z;
    let ratio = consts.c1_tilde / consts.c2_tilde;
    let fwd = hier_forward(tape, x, enc1, enc2, prior2, dec, cfg, noise, |t, mu2, ls2, zeta_t| {
        let d = t.sub(mu2, zeta_t);
        let dsq = t.square(d);
        let dsq = t.row_sums(dsq);
        let two_ls = t.scale(ls2, 2.0);
        let s2 = t.exp(two_ls);
        let tr = t.row_sums(s2);
        let tr = t.scale(tr, nu / (nu + m1 + n - 2.0));
        let ls_sum = t.row_sums(ls2);
        let ls_sum = t.scale(ls_sum, -consts.gamma / (1.0 + consts.gamma));
        let det_pow = t.exp(ls_sum);
        let det = t.scale(det_pow, -nu * sz2 * ratio);
        let bracket = t.add(dsq, tr);
        let bracket = t.add(bracket, det);
        Ok(t.scale(bracket, 1.0 / sz2))
    })?;

    let recon = tape.scale(fwd.recon, 1.0 / (cfg.sigma_x * cfg.sigma_x));
    let zsq = tape.square(fwd.zeta_phi);
    let zsq = tape.row_sums(zsq);
    let two_ll = tape.scale(fwd.log_lambda, 2.0);
    let lam2 = tape.exp(two_ll);
    let tr1 = tape.row_sums(lam2);
    let tr1 = tape.scale(tr1, nu / (nu + n - 2.0));
    // log|Λ_φ| = 2·Σ log λ, so the (γνC̃1/(2C̃2)) coefficient doubles
    let ll_sum = tape.row_sums(fwd.log_lambda);
    let log_det = tape.scale(ll_sum, 2.0 * consts.log_det_coeff(nu));

    let sum = tape.add(recon, zsq);
    let sum = tape.add(sum, tr1);
    let sum = tape.add(sum, log_det);
    let sum = tape.add(sum, fwd.level2);
    let mean = tape.mean_all(sum);
    let loss = tape.scale(mean, 0.5);
    if !tape.scalar_value(loss).is_finite() {
        return Err(Error::Numeric("hierarchical gamma-loss is not finite".into()));
    }
    Ok(loss)
}

/// Negated two-level ELBO (up to an additive constant) on the tape:
/// mean[ ‖x−μ_θ‖²/(2σ_x²) + E_{z1}[KL(N(μ_φ,Σ_φ) ‖ N(ζ_θ(z1),σ_z²I))]
/// + KL(N(ζ_φ,Λ_φ) ‖ N(0,I)) ].
pub fn hier_elbo_loss(
    tape: &mut Tape,
    x: Var,
    enc1: &TapedMlp,
    enc2: &TapedMlp,
    prior2: &TapedMlp,
    dec: &TapedMlp,
    cfg: &HierConfig,
    noise: &[(Mat, Mat)],
) -> Result<Var> {
    if cfg.kind != HierKind::GaussianHvae {
        return Err(Error::Contract("hier_elbo_loss applies to the gaussian_hvae kind".into()));
    }
    let sz2 = cfg.sigma_z * cfg.sigma_z;
    let m2 = cfg.m2 as f64;
    let fwd = hier_forward(tape, x, enc1, enc2, prior2, dec, cfg, noise, |t, mu2, ls2, zeta_t| {
        // KL(N(μ_φ, diag e^{2ls}) ‖ N(ζ_θ, σ_z²I))
        // = ½·[Σ(e^{2ls} + (μ_φ−ζ_θ)²)/σ_z² − m2 − Σ2ls + m2·log σ_z²]
        let d = t.sub(mu2, zeta_t);
        let dsq = t.square(d);
        let dsq = t.row_sums(dsq);
        let two_ls = t.scale(ls2, 2.0);
        let s2 = t.exp(two_ls);
        let s2 = t.row_sums(s2);
        let quad = t.add(dsq, s2);
        let quad = t.scale(quad, 1.0 / sz2);
        let ls_sum = t.row_sums(ls2);
        let ls_sum = t.scale(ls_sum, -2.0);
        let kl = t.add(quad, ls_sum);
        let kl = t.add_const(kl, m2 * sz2.ln() - m2);
        Ok(t.scale(kl, 0.5))
    })?;

    let recon = tape.scale(fwd.recon, 0.5 / (cfg.sigma_x * cfg.sigma_x));
    // KL(N(ζ_φ, Λ_φ) ‖ N(0, I)) = ½·Σ(ζ² + λ² − 1 − 2 log λ)
    let zsq = tape.square(fwd.zeta_phi);
    let zsq = tape.row_sums(zsq);
    let two_ll = tape.scale(fwd.log_lambda, 2.0);
    let lam2 = tape.exp(two_ll);
    let lam2 = tape.row_sums(lam2);
    let ll_sum = tape.row_sums(fwd.log_lambda);
    let ll_sum = tape.scale(ll_sum, -2.0);
    let kl1 = tape.add(zsq, lam2);
    let kl1 = tape.add(kl1, ll_sum);
    let kl1 = tape.add_const(kl1, -(cfg.m1 as f64));
    let kl1 = tape.scale(kl1, 0.5);

    let sum = tape.add(recon, fwd.level2);
    let sum = tape.add(sum, kl1);
    let loss = tape.mean_all(sum);
    if !tape.scalar_value(loss).is_finite() {
        return Err(Error::Numeric("hierarchical elbo-loss is not finite".into()));
    }
    Ok(loss)
}

fn batch_to_mat(b: &Batch) -> Mat {
    Mat::from_vec(b.rows(), b.cols(), b.data().to_vec())
}

/// Ancestral sampling: z1 from the first-level prior, z2 from p(z2|z1), x
/// from the decoder distribution.
pub fn hier_generate(
    count: usize,
    cfg: &HierConfig,
    prior2: &Mlp,
    dec: &Mlp,
    rng: &mut impl Rng,
) -> Result<Batch> {
    cfg.validate()?;
    if prior2.in_dim() != cfg.m1 || prior2.out_dim() != cfg.m2 {
        return Err(Error::Contract(format!(
            "conditional prior network maps {} → {}, expected {} → {}",
            prior2.in_dim(),
            prior2.out_dim(),
            cfg.m1,
            cfg.m2
        )));
    }
    if dec.in_dim() != cfg.m1 + cfg.m2 || dec.out_dim() != cfg.n {
        return Err(Error::Contract(format!(
            "decoder maps {} → {}, expected {} → {}",
            dec.in_dim(),
            dec.out_dim(),
            cfg.m1 + cfg.m2,
            cfg.n
        )));
    }
    let t3 = cfg.kind == HierKind::T3Hvae;
    let z1 = if t3 {
        TParams::new_diag(vec![0.0; cfg.m1], vec![1.0; cfg.m1], cfg.nu)?.sample(count, rng)?
    } else {
        TParams::new_diag(vec![0.0; cfg.m1], vec![1.0; cfg.m1], f64::INFINITY)?
            .sample(count, rng)?
    };
    let zeta = prior2.forward(&batch_to_mat(&z1))?;

    let mut z2 = Batch::zeros(count, cfg.m2);
    if t3 {
        let df = cfg.nu + cfg.m1 as f64;
        let chi2 = ChiSquared::<f64>::new(df).expect("positive df");
        for i in 0..count {
            let z1n2: f64 = z1.row(i).iter().map(|v| v * v).sum();
            let sd = hier_prior2_scale(z1n2, cfg).sqrt();
            let mix = (df / chi2.sample(rng)).sqrt();
            for (j, r) in z2.row_mut(i).iter_mut().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                *r = zeta.get(i, j) + sd * mix * eps;
            }
        }
    } else {
        for i in 0..count {
            for (j, r) in z2.row_mut(i).iter_mut().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                *r = zeta.get(i, j) + cfg.sigma_z * eps;
            }
        }
    }

    let mut din = Batch::zeros(count, cfg.m1 + cfg.m2);
    for i in 0..count {
        let row = din.row_mut(i);
        row[..cfg.m1].copy_from_slice(z1.row(i));
        row[cfg.m1..].copy_from_slice(z2.row(i));
    }
    let mu = dec.forward(&batch_to_mat(&din))?;

    let mut out = Batch::zeros(count, cfg.n);
    if t3 {
        let df = cfg.nu + (cfg.m1 + cfg.m2) as f64;
        let chi2 = ChiSquared::<f64>::new(df).expect("positive df");
        for i in 0..count {
            let z1n2: f64 = z1.row(i).iter().map(|v| v * v).sum();
            let dz2n2: f64 = z2
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| (v - zeta.get(i, j)) * (v - zeta.get(i, j)))
                .sum();
            let sd = hier_decoder_scale(z1n2, dz2n2, cfg).sqrt();
            let mix = (df / chi2.sample(rng)).sqrt();
            for (j, r) in out.row_mut(i).iter_mut().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                *r = mu.get(i, j) + sd * mix * eps;
            }
        }
    } else {
        for i in 0..count {
            for (j, r) in out.row_mut(i).iter_mut().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                *r = mu.get(i, j) + cfg.sigma_x * eps;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::data::stream_rng;
    use crate::models::{derive_constants, ModelConfig, ModelKind};
    use crate::quadrature::{integrate, t_tail_radius};

    fn t3_cfg(nu: f64, m1: usize, m2: usize, n: usize, sz: f64, sx: f64) -> HierConfig {
        HierConfig { kind: HierKind::T3Hvae, n, m1, m2, nu, sigma_z: sz, sigma_x: sx }
    }

    fn gauss_cfg(m1: usize, m2: usize, n: usize, sz: f64, sx: f64) -> HierConfig {
        HierConfig {
            kind: HierKind::GaussianHvae,
            n,
            m1,
            m2,
            nu: f64::INFINITY,
            sigma_z: sz,
            sigma_x: sx,
        }
    }

    #[test]
    fn constants_match_high_precision_references() {
        // frozen 40-digit evaluations of the printed formulas
        let c = hier_constants(&t3_cfg(10.0, 2, 1, 3, 1.0, 1.0)).unwrap();
        assert!((c.gamma + 0.125).abs() < 1e-16);
        assert!((c.c1_tilde - 1.208_511_169_045_732_5).abs() < 1e-10);
        assert!((c.c2_tilde - 2.211_107_040_455_733_3).abs() < 1e-10);

        let c = hier_constants(&t3_cfg(6.0, 2, 1, 3, 1.2, 0.8)).unwrap();
        assert!((c.gamma + 1.0 / 6.0).abs() < 1e-16);
        assert!((c.c1_tilde - 1.289_360_036_143_527_7).abs() < 1e-10);
        assert!((c.c2_tilde - 2.797_877_314_038_028_7).abs() < 1e-10);
    }

    #[test]
    fn constants_limits_and_degeneration() {
        // empty second layer: C̃1 → 1
        let c = hier_constants(&t3_cfg(7.0, 2, 0, 3, 1.0, 1.0)).unwrap();
        assert!((c.c1_tilde - 1.0).abs() < 1e-14);
        // ν → ∞: both → 1
        let c = hier_constants(&t3_cfg(1e8, 2, 1, 3, 1.0, 1.0)).unwrap();
        assert!((c.c1_tilde - 1.0).abs() < 1e-6);
        assert!((c.c2_tilde - 1.0).abs() < 1e-6);
        // empty first layer with σ_z = 1 reproduces the flat constants
        for (nu, m, n, sigma) in [(9.0, 2usize, 3usize, 1.3), (5.0, 1, 1, 0.8)] {
            let hier = hier_constants(&t3_cfg(nu, 0, m, n, 1.0, sigma)).unwrap();
            let flat = derive_constants(&ModelConfig {
                kind: ModelKind::T3Vae,
                n,
                m,
                nu,
                sigma,
                beta: 1.0,
            })
            .unwrap();
            assert!((hier.gamma - flat.gamma).abs() < 1e-16);
            assert!((hier.c1_tilde - flat.c1).abs() < 1e-12, "{} vs {}", hier.c1_tilde, flat.c1);
            assert!((hier.c2_tilde - flat.c2).abs() < 1e-12, "{} vs {}", hier.c2_tilde, flat.c2);
        }
        assert!(hier_constants(&t3_cfg(2.0, 1, 1, 1, 1.0, 1.0)).is_err());
    }

    #[test]
    fn log_det_coefficient_is_negative() {
        for (nu, m1, m2, n) in [(3.0, 1, 1, 1), (10.0, 2, 1, 3), (50.0, 4, 2, 8)] {
            let cfg = t3_cfg(nu, m1, m2, n, 1.1, 0.9);
            let c = hier_constants(&cfg).unwrap();
            assert!(c.log_det_coeff(nu) < 0.0);
        }
    }

    #[test]
    fn joint_factors_into_prior_chain() {
        let cfg = t3_cfg(6.0, 2, 1, 2, 1.2, 0.9);
        let prior1 = TParams::new_diag(vec![0.0; 2], vec![1.0; 2], 6.0).unwrap();
        let mut rng = stream_rng(71, 0);
        for _ in 0..50 {
            let z1 = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let z2 = [rng.random_range(-3.0..3.0)];
            let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let zeta = [rng.random_range(-2.0..2.0)];
            let mu = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let joint = hier_joint_log_density(&x, &z1, &z2, &zeta, &mu, &cfg).unwrap();
            let chained = prior1.log_density(&z1).unwrap()
                + hier_prior2_params(&z1, &zeta, &cfg).unwrap().log_density(&z2).unwrap()
                + hier_decoder_params(&z1, &z2, &zeta, &mu, &cfg)
                    .unwrap()
                    .log_density(&x)
                    .unwrap();
            assert!((joint - chained).abs() < 1e-10, "gap {}", joint - chained);
        }
    }

    #[test]
    fn joint_integrates_to_one() {
        // m1 = m2 = n = 1 with linear ζ_θ and μ_θ; iterated adaptive
        // quadrature over the ancestral factorization domains
        let cfg = t3_cfg(5.0, 1, 1, 1, 1.1, 0.9);
        let zeta = |z1: f64| 0.5 * z1 - 0.2;
        let mu = |z1: f64, z2: f64| z2 - 0.3 * z1 + 0.1;
        let r1 = t_tail_radius(5.0, 1e-9).unwrap();
        let r2 = t_tail_radius(6.0, 1e-9).unwrap();
        let r3 = t_tail_radius(7.0, 1e-9).unwrap();
        let total = integrate(
            |z1| {
                let s2 = hier_prior2_scale(z1 * z1, &cfg).sqrt();
                integrate(
                    |z2| {
                        let z1n2 = z1 * z1;
                        let dz2 = z2 - zeta(z1);
                        let sx = hier_decoder_scale(z1n2, dz2 * dz2, &cfg).sqrt();
                        let m = mu(z1, z2);
                        integrate(
                            |x| {
                                hier_joint_log_density(
                                    &[x],
                                    &[z1],
                                    &[z2],
                                    &[zeta(z1)],
                                    &[mu(z1, z2)],
                                    &cfg,
                                )
                                .unwrap()
                                .exp()
                            },
                            m - r3 * sx,
                            m + r3 * sx,
                            1e-13,
                            1e-10,
                        )
                        .unwrap()
                        .value
                    },
                    zeta(z1) - r2 * s2,
                    zeta(z1) + r2 * s2,
                    1e-12,
                    1e-9,
                )
                .unwrap()
                .value
            },
            -r1,
            r1,
            1e-10,
            1e-7,
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-4, "integral {total}");
    }

    #[test]
    fn monte_carlo_bracket_matches_closed_expectations() {
        // E_q[p^γ] / (C_{ν,m1+m2+n}σ_z^{-m2}σ_x^{-n})^γ against the analytic
        // bracket for constant encoder heads, linear ζ_θ, linear-in-z2 μ_θ
        let cfg = t3_cfg(7.0, 1, 1, 1, 1.2, 0.9);
        let x = 0.8;
        let (zeta_phi, lam) = (0.4, 0.7);
        let (mu_phi, sig) = (-0.3, 0.6);
        let (a, b) = (0.5, -0.2); // ζ_θ(z1) = a·z1 + b
        let (d, e) = (0.8, 0.1); // μ_θ(z1,z2) = d·z2 + e
        let nu = cfg.nu;

        let var_z1 = nu / (nu + 1.0 - 2.0) * lam * lam;
        let e_level1 = zeta_phi * zeta_phi + var_z1;
        let var_z2 = nu / (nu + 2.0 - 2.0) * sig * sig;
        // E_{z1}[(μ_φ − a·z1 − b)²] = (μ_φ − a·ζ_φ − b)² + a²·Var(z1)
        let dm = mu_phi - a * zeta_phi - b;
        let e_level2 = dm * dm + a * a * var_z1 + var_z2;
        // E[(x − d·z2 − e)²] = (x − d·μ_φ − e)² + d²·Var(z2)
        let dr = x - d * mu_phi - e;
        let e_recon = dr * dr + d * d * var_z2;
        let analytic = 1.0
            + e_level1 / nu
            + e_level2 / (nu * cfg.sigma_z * cfg.sigma_z)
            + e_recon / (nu * cfg.sigma_x * cfg.sigma_x);

        let log_c = log_norm_const(nu, 3).unwrap() - cfg.sigma_z.ln() - cfg.sigma_x.ln();
        let mut rng = stream_rng(72, 0);
        let reps = 400_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..reps {
            let f1 = t_noise(1, 1, nu, 1, &mut rng);
            let z1 = zeta_phi + lam * f1.get(0, 0);
            let f2 = t_noise(1, 1, nu, 2, &mut rng);
            let z2 = mu_phi + sig * f2.get(0, 0);
            let lp = hier_joint_log_density(
                &[x],
                &[z1],
                &[z2],
                &[a * z1 + b],
                &[d * z2 + e],
                &cfg,
            )
            .unwrap();
            let bracket = (cfg.gamma() * (lp - log_c)).exp();
            sum += bracket;
            sum_sq += bracket * bracket;
        }
        let mean = sum / reps as f64;
        let var = (sum_sq / reps as f64 - mean * mean).max(0.0);
        let stderr = (var / reps as f64).sqrt();
        assert!(
            (mean - analytic).abs() < 3.0 * stderr,
            "mc {mean} vs analytic {analytic} (stderr {stderr})"
        );
    }

    fn small_nets(cfg: &HierConfig, rng: &mut impl Rng) -> (Mlp, Mlp, Mlp, Mlp) {
        let enc1 = Mlp::new(&[cfg.n, 4, 2 * cfg.m1], rng).unwrap();
        let enc2 = Mlp::new(&[cfg.n + cfg.m1, 4, 2 * cfg.m2], rng).unwrap();
        let prior2 = Mlp::new(&[cfg.m1, 4, cfg.m2], rng).unwrap();
        let dec = Mlp::new(&[cfg.m1 + cfg.m2, 4, cfg.n], rng).unwrap();
        (enc1, enc2, prior2, dec)
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = stream_rng(73, 0);
        for kind in [HierKind::T3Hvae, HierKind::GaussianHvae] {
            let cfg = match kind {
                HierKind::T3Hvae => t3_cfg(6.0, 2, 1, 2, 1.1, 0.9),
                HierKind::GaussianHvae => gauss_cfg(2, 1, 2, 1.1, 0.9),
            };
            let consts = (kind == HierKind::T3Hvae).then(|| hier_constants(&cfg).unwrap());
            let nets = small_nets(&cfg, &mut rng);
            let x = Mat::from_fn(5, cfg.n, |_, _| rng.random_range(-2.0..2.0));
            let noise = hier_sample_noise(&cfg, 5, 2, &mut rng);
            let mut leaves: Vec<Mat> = Vec::new();
            let all = [&nets.0, &nets.1, &nets.2, &nets.3];
            for net in all {
                for l in &net.layers {
                    leaves.push(l.w.clone());
                    leaves.push(l.b.clone());
                }
            }
            let layer_counts: Vec<usize> = all.iter().map(|n| n.layers.len()).collect();
            let in_dims = [cfg.n, cfg.n + cfg.m1, cfg.m1, cfg.m1 + cfg.m2];
            let err = grad_check(&leaves, |t, v| {
                let pairs: Vec<(Var, Var)> = v.chunks(2).map(|c| (c[0], c[1])).collect();
                let mut taped = Vec::new();
                let mut off = 0;
                for (k, &count) in layer_counts.iter().enumerate() {
                    taped.push(TapedMlp::from_vars(
                        pairs[off..off + count].to_vec(),
                        in_dims[k],
                    ));
                    off += count;
                }
                let xv = t.leaf(x.clone());
                match &consts {
                    Some(c) => hier_gamma_loss(
                        t, xv, &taped[0], &taped[1], &taped[2], &taped[3], &cfg, c, &noise,
                    )
                    .unwrap(),
                    None => hier_elbo_loss(
                        t, xv, &taped[0], &taped[1], &taped[2], &taped[3], &cfg, &noise,
                    )
                    .unwrap(),
                }
            });
            assert!(err < 1e-4, "{kind:?}: gradient error {err}");
        }
    }

    /// Nets that emit constants regardless of input: level-1 head
    /// (ζ_φ ‖ log λ), level-2 head (μ_φ ‖ log σ), prior2 → ζ_θ, and a decoder
    /// reading only z1 with weight `w` and bias `bias`.
    fn pinned_nets(
        cfg: &HierConfig,
        head1: &[f64],
        head2: &[f64],
        zeta_t: &[f64],
        w: f64,
        bias: f64,
    ) -> (Mlp, Mlp, Mlp, Mlp) {
        let mut rng = stream_rng(74, 9);
        let mut enc1 = Mlp::new(&[cfg.n, 2 * cfg.m1], &mut rng).unwrap();
        enc1.layers[0].w.data_mut().fill(0.0);
        enc1.layers[0].b.data_mut().copy_from_slice(head1);
        let mut enc2 = Mlp::new(&[cfg.n + cfg.m1, 2 * cfg.m2], &mut rng).unwrap();
        enc2.layers[0].w.data_mut().fill(0.0);
        enc2.layers[0].b.data_mut().copy_from_slice(head2);
        let mut prior2 = Mlp::new(&[cfg.m1, cfg.m2], &mut rng).unwrap();
        prior2.layers[0].w.data_mut().fill(0.0);
        prior2.layers[0].b.data_mut().copy_from_slice(zeta_t);
        let mut dec = Mlp::new(&[cfg.m1 + cfg.m2, cfg.n], &mut rng).unwrap();
        dec.layers[0].w.data_mut().fill(0.0);
        dec.layers[0].w.data_mut()[0] = w;
        dec.layers[0].b.data_mut().fill(bias);
        (enc1, enc2, prior2, dec)
    }

    #[test]
    fn pinned_second_level_recovers_flat_loss_structure() {
        // pin level 2 to pass-through (μ_φ = ζ_θ, Σ_φ → 0, decoder ignores
        // z2): after removing each objective's own determinant/log terms, the
        // reconstruction and level-1 terms coincide with the flat γ-loss
        // evaluated on the same z1 noise
        let nu = 5.0;
        let (zeta_phi, ll) = (0.4, -0.3);
        let (w, bias) = (0.8, 0.2);
        let hier_cfg = t3_cfg(nu, 1, 1, 1, 1.0, 1.0);
        let hier_c = hier_constants(&hier_cfg).unwrap();
        let flat_cfg = ModelConfig {
            kind: ModelKind::T3Vae,
            n: 1,
            m: 1,
            nu,
            sigma: 1.0,
            beta: 1.0,
        };
        let flat_c = derive_constants(&flat_cfg).unwrap();

        let rows = 8;
        let mut rng = stream_rng(74, 0);
        let x = Mat::from_fn(rows, 1, |_, _| rng.random_range(-2.0..2.0));
        let f1 = t_noise(rows, 1, nu, 1, &mut rng);

        let ls2 = -200.0; // Σ_φ underflows to zero; det power stays analytic
        let (enc1, enc2, prior2, dec) =
            pinned_nets(&hier_cfg, &[zeta_phi, ll], &[0.7, ls2], &[0.7], w, bias);
        let mut tape = Tape::new();
        let nets: Vec<TapedMlp> =
            [&enc1, &enc2, &prior2, &dec].iter().map(|n| n.bind(&mut tape)).collect();
        let xv = tape.leaf(x.clone());
        let noise = vec![(f1.clone(), Mat::zeros(rows, 1))];
        let hier_loss = hier_gamma_loss(
            &mut tape, xv, &nets[0], &nets[1], &nets[2], &nets[3], &hier_cfg, &hier_c, &noise,
        )
        .unwrap();
        let hier_val = tape.scalar_value(hier_loss);
        // remove the hierarchical-only terms: the log|Λ| correction and the
        // level-2 determinant power (trace and mean gap vanish exactly)
        let log_det_term = 2.0 * hier_c.log_det_coeff(nu) * ll;
        let det2_term = -nu * hier_c.c1_tilde / hier_c.c2_tilde
            * (-hier_c.gamma / (1.0 + hier_c.gamma) * ls2).exp();
        let hier_core = hier_val - 0.5 * (log_det_term + det2_term);

        let mut encoder = Mlp::new(&[1, 2], &mut stream_rng(74, 1)).unwrap();
        encoder.layers[0].w.data_mut().fill(0.0);
        encoder.layers[0].b.data_mut().copy_from_slice(&[zeta_phi, ll]);
        let mut decoder = Mlp::new(&[1, 1], &mut stream_rng(74, 2)).unwrap();
        decoder.layers[0].w.data_mut()[0] = w;
        decoder.layers[0].b.data_mut()[0] = bias;
        let mut tape = Tape::new();
        let enc = encoder.bind(&mut tape);
        let de = decoder.bind(&mut tape);
        let xv = tape.leaf(x);
        let flat_loss = crate::models::gamma_loss(
            &mut tape,
            xv,
            &enc,
            &de,
            &flat_cfg,
            &flat_c,
            &[f1],
        )
        .unwrap();
        let det_flat = -nu * flat_c.c1 / flat_c.c2
            * (-flat_c.gamma / (1.0 + flat_c.gamma) * ll).exp();
        let flat_core = tape.scalar_value(flat_loss) - 0.5 * det_flat;
        assert!(
            (hier_core - flat_core).abs() < 1e-12,
            "hier {hier_core} vs flat {flat_core}"
        );
    }

    #[test]
    fn elbo_special_case_and_kl_form() {
        // all heads zero, σ_z = 1: both KL terms vanish and the loss is pure
        // reconstruction
        let cfg = gauss_cfg(1, 1, 1, 1.0, 1.0);
        let (enc1, enc2, prior2, dec) =
            pinned_nets(&cfg, &[0.0, 0.0], &[0.0, 0.0], &[0.0], 0.0, 0.25);
        let rows = 4;
        let x = Mat::from_fn(rows, 1, |_, _| 0.25);
        let mut rng = stream_rng(75, 0);
        let noise = hier_sample_noise(&cfg, rows, 1, &mut rng);
        let mut tape = Tape::new();
        let nets: Vec<TapedMlp> =
            [&enc1, &enc2, &prior2, &dec].iter().map(|n| n.bind(&mut tape)).collect();
        let xv = tape.leaf(x);
        let loss = hier_elbo_loss(
            &mut tape, xv, &nets[0], &nets[1], &nets[2], &nets[3], &cfg, &noise,
        )
        .unwrap();
        assert!(tape.scalar_value(loss).abs() < 1e-12, "loss {}", tape.scalar_value(loss));

        // level-2 KL against the general Gaussian formula
        let cfg = gauss_cfg(1, 2, 1, 1.7, 1.0);
        let mut rng = stream_rng(75, 1);
        for _ in 0..20 {
            let mu2: [f64; 2] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let ls2: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let zeta: [f64; 2] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let sz2 = cfg.sigma_z * cfg.sigma_z;
            let manual: f64 = (0..2)
                .map(|i| {
                    let s2 = (2.0 * ls2[i]).exp();
                    0.5 * ((s2 + (mu2[i] - zeta[i]).powi(2)) / sz2 - 1.0
                        + (sz2 / s2).ln())
                })
                .sum();
            let q = crate::divergence::GaussianParams::new_diag(
                mu2.to_vec(),
                ls2.iter().map(|l| (2.0 * l).exp()).collect(),
            )
            .unwrap();
            let p = crate::divergence::GaussianParams::new_diag(
                zeta.to_vec(),
                vec![sz2; 2],
            )
            .unwrap();
            let kl = crate::divergence::kl_gaussian(&q, &p).unwrap();
            assert!((manual - kl).abs() < 1e-12);
        }
    }

    #[test]
    fn decoder_scale_and_df() {
        let cfg = t3_cfg(5.0, 2, 1, 3, 1.3, 0.7);
        let z1 = [0.6, -1.1];
        let z2 = [0.9];
        let zeta = [0.4];
        let z1n2 = z1.iter().map(|v| v * v).sum::<f64>();
        let dz2n2 = (z2[0] - zeta[0]) * (z2[0] - zeta[0]);
        let manual = (1.0 + z1n2 / 5.0 + dz2n2 / (5.0 * 1.3 * 1.3)) / (1.0 + 3.0 / 5.0)
            * 0.7
            * 0.7;
        assert!((hier_decoder_scale(z1n2, dz2n2, &cfg) - manual).abs() < 1e-15);
        let p = hier_decoder_params(&z1, &z2, &zeta, &[0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(p.nu, 5.0 + 3.0);
        // z1 = 0, z2 = ζ_θ gives scale σ_x²/(1+(m1+m2)/ν)
        assert!(
            (hier_decoder_scale(0.0, 0.0, &cfg) - 0.49 / 1.6).abs() < 1e-15
        );
        // prior2 scale at ‖z1‖² = m1 is exactly σ_z²
        assert!((hier_prior2_scale(2.0, &cfg) - 1.69).abs() < 1e-15);
    }

    #[test]
    fn generate_shapes_and_gaussian_variance() {
        // zero prior2 and additive decoder: x = z1 + z2 + σ_x·ε, so
        // Var x = 1 + σ_z² + σ_x² for the Gaussian kind
        let cfg = gauss_cfg(1, 1, 1, 0.8, 0.5);
        let mut rng = stream_rng(76, 0);
        let mut prior2 = Mlp::new(&[1, 1], &mut rng).unwrap();
        prior2.layers[0].w.data_mut()[0] = 0.0;
        prior2.layers[0].b.data_mut()[0] = 0.0;
        let mut dec = Mlp::new(&[2, 1], &mut rng).unwrap();
        dec.layers[0].w.data_mut().copy_from_slice(&[1.0, 1.0]);
        dec.layers[0].b.data_mut()[0] = 0.0;
        let out = hier_generate(100_000, &cfg, &prior2, &dec, &mut rng).unwrap();
        assert_eq!((out.rows(), out.cols()), (100_000, 1));
        let var = out.data().iter().map(|v| v * v).sum::<f64>() / out.rows() as f64;
        let expect = 1.0 + 0.64 + 0.25;
        assert!((var - expect).abs() < 0.04, "var {var} vs {expect}");

        // t3 kind: same nets, check dims and heavy-tail draws exist
        let cfg = t3_cfg(5.0, 1, 1, 1, 0.8, 0.5);
        let out = hier_generate(50_000, &cfg, &prior2, &dec, &mut rng).unwrap();
        assert_eq!((out.rows(), out.cols()), (50_000, 1));
        assert!(out.data().iter().all(|v| v.is_finite()));
        let extreme = out.data().iter().filter(|v| v.abs() > 10.0).count();
        assert!(extreme > 0, "heavy-tailed generation produced no |x| > 10 draws");
    }

    #[test]
    fn config_validation() {
        assert!(t3_cfg(5.0, 1, 1, 1, 1.0, 1.0).validate().is_ok());
        assert!(t3_cfg(2.0, 1, 1, 1, 1.0, 1.0).validate().is_err());
        assert!(t3_cfg(5.0, 0, 1, 1, 1.0, 1.0).validate().is_err());
        assert!(t3_cfg(5.0, 1, 0, 1, 1.0, 1.0).validate().is_err());
        assert!(t3_cfg(5.0, 1, 1, 1, 0.0, 1.0).validate().is_err());
        assert!(t3_cfg(5.0, 1, 1, 1, 1.0, -1.0).validate().is_err());
        assert!(gauss_cfg(1, 1, 1, 1.0, 1.0).validate().is_ok());
        let mut g = gauss_cfg(1, 1, 1, 1.0, 1.0);
        g.nu = 7.0;
        assert!(g.validate().is_err());
    }
}
