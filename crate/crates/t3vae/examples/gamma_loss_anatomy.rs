//! What the closed-form training objective is made of: the constants C1 and
//! C2, the alternative prior scale τ², the regularizer weight α, and the
//! exact decomposition of the regularizer into a scaled divergence from the
//! alternative prior.
//!
//! Run with `cargo run --example gamma_loss_anatomy`.

use t3vae::divergence::gamma_divergence_tt;
use t3vae::models::{
    derive_constants, elbo_loss_value, encoder_params, gamma_loss_value, regularizer_value,
    EncoderOutput, ModelConfig, ModelKind,
};
use t3vae::tdist::TParams;

fn config(nu: f64) -> ModelConfig {
    ModelConfig { kind: ModelKind::T3Vae, n: 1, m: 1, nu, sigma: 1.0, beta: 1.0 }
}

fn main() -> t3vae::Result<()> {
    // the loss constants vary smoothly with the dof
    println!(
        "{:>8}  {:>10} {:>10} {:>10} {:>10} {:>10}",
        "nu", "gamma", "C1", "C2", "tau^2", "alpha"
    );
    for nu in [3.0, 5.0, 9.0, 18.0, 50.0, 1e6] {
        let c = derive_constants(&config(nu))?;
        println!(
            "{nu:>8}  {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            c.gamma, c.c1, c.c2, c.tau2, c.alpha
        );
    }
    println!("(all five tend to the Gaussian values gamma->0, C->1, tau^2->1, alpha->1)\n");

    // the floor of the loss: a perfect decoder with a point posterior at the
    // origin cannot push the loss below (1/2)(nu m/(nu+n-2) - nu C1/C2)
    let cfg = config(9.0);
    let c = derive_constants(&cfg)?;
    let tight = EncoderOutput { mu_phi: vec![0.0], log_sigma_phi: vec![0.0] };
    let floor = 0.5 * (9.0 * 1.0 / (9.0 + 1.0 - 2.0) - 9.0 * c.c1 / c.c2);
    println!("perfect-reconstruction loss at unit posterior: {:.9}", gamma_loss_value(0.0, &tight, &cfg, &c));
    println!("analytic floor term:                            {floor:.9}");
    assert_eq!(gamma_loss_value(0.0, &tight, &cfg, &c), floor);

    // the regularizer is, up to an additive constant, alpha times the
    // divergence from the alternative prior t(0, tau^2 I, nu+n)
    let p_star = TParams::new_diag(vec![0.0], vec![c.tau2], cfg.nu + cfg.n as f64)?;
    let constant = -(cfg.nu + cfg.n as f64) * c.tau2 / 2.0;
    println!("\nregularizer(q) = alpha * D_gamma(q || p*) {constant:+.6}");
    println!("{:>24}  {:>12} {:>12}", "encoder output", "direct", "via divergence");
    for (mu, ls) in [(0.0, 0.0), (0.5, -0.2), (-1.0, 0.3), (2.0, -0.5)] {
        let out = EncoderOutput { mu_phi: vec![mu], log_sigma_phi: vec![ls] };
        let direct = regularizer_value(&out, &cfg, &c);
        let q = encoder_params(&out, &cfg)?;
        let via = c.alpha * gamma_divergence_tt(&q, &p_star)? + constant;
        println!("{:>24}  {direct:>12.8} {via:>12.8}", format!("mu={mu}, log_sigma={ls}"));
        assert!((direct - via).abs() < 1e-10);
    }

    // with huge nu the objective collapses onto the usual negated ELBO,
    // once the additive constant -(nu+n) tau^2 / 2 is put back
    let big = config(1e6);
    let cb = derive_constants(&big)?;
    let out = EncoderOutput { mu_phi: vec![0.7], log_sigma_phi: vec![-0.3] };
    let recon = 0.42;
    let offset = (big.nu + big.n as f64) * cb.tau2 / 2.0;
    let heavy = gamma_loss_value(recon, &out, &big, &cb) + offset;
    let gauss = ModelConfig { kind: ModelKind::GaussianVae, nu: f64::INFINITY, ..big };
    let elbo = elbo_loss_value(recon, &out, &gauss);
    println!("\nnu = 1e6: shifted gamma-loss {heavy:.8} vs negated ELBO {elbo:.8}");
    assert!((heavy - elbo).abs() < 1e-3);
    Ok(())
}
