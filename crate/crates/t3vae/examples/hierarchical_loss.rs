//! The two-level heavy-tailed model: its loss constants, the exact
//! factorization of the three-block joint density, degeneration to the flat
//! model when the first level is switched off, and ancestral sampling.
//!
//! Run with `cargo run --release --example hierarchical_loss`.

use t3vae::data::{gen_bivariate, stream_rng};
use t3vae::hvae::{
    hier_constants, hier_generate, hier_joint_log_density, HierConfig, HierKind,
};
use t3vae::models::{derive_constants, ModelConfig, ModelKind};
use t3vae::nn::Mlp;
use t3vae::tdist::TParams;

fn main() -> t3vae::Result<()> {
    let cfg = HierConfig {
        kind: HierKind::T3Hvae,
        n: 2,
        m1: 2,
        m2: 1,
        nu: 10.0,
        sigma_z: 1.0,
        sigma_x: 1.0,
    };
    let c = hier_constants(&cfg)?;
    println!("two-level constants at nu = {}: gamma = {:.6}", cfg.nu, c.gamma);
    println!("  C1~ = {:.9}, C2~ = {:.9}", c.c1_tilde, c.c2_tilde);
    println!("  log-det coefficient (level 1): {:.9} (< 0)", c.log_det_coeff(cfg.nu));
    assert!(c.log_det_coeff(cfg.nu) < 0.0);

    // with m1 = 0 the two-level constants collapse onto the flat ones
    let degenerate = HierConfig { m1: 0, m2: 2, n: 3, nu: 9.0, sigma_x: 1.3, ..cfg.clone() };
    let hc = hier_constants(&degenerate)?;
    let flat = ModelConfig { kind: ModelKind::T3Vae, n: 3, m: 2, nu: 9.0, sigma: 1.3, beta: 1.0 };
    let fc = derive_constants(&flat)?;
    println!("\nm1 = 0 degeneration:");
    println!("  C1~ = {:.12} vs flat C1 = {:.12}", hc.c1_tilde, fc.c1);
    println!("  C2~ = {:.12} vs flat C2 = {:.12}", hc.c2_tilde, fc.c2);
    assert!((hc.c1_tilde - fc.c1).abs() < 1e-12);
    assert!((hc.c2_tilde - fc.c2).abs() < 1e-12);

    // the joint density factorizes exactly: p(z1) p(z2|z1) p(x|z1,z2)
    let z1 = [0.4, -0.9];
    let z2 = [0.7];
    let zeta = [0.2]; // prior-net output at z1
    let mu = [1.0, -0.3]; // decoder output at (z1, z2)
    let joint = hier_joint_log_density(&[1.1, -0.2], &z1, &z2, &zeta, &mu, &cfg)?;
    let p1 = TParams::new_diag(vec![0.0; 2], vec![1.0; 2], cfg.nu)?.log_density(&z1)?;
    let p2 = t3vae::hvae::hier_prior2_params(&z1, &zeta, &cfg)?.log_density(&z2)?;
    let px = t3vae::hvae::hier_decoder_params(&z1, &z2, &zeta, &mu, &cfg)?
        .log_density(&[1.1, -0.2])?;
    println!("\njoint log density  : {joint:.12}");
    println!("sum of three blocks: {:.12}", p1 + p2 + px);
    assert!((joint - (p1 + p2 + px)).abs() < 1e-10);

    // train a small instance for a few epochs on the noisy curve
    let train_data = gen_bivariate(3_000, &mut stream_rng(61, 1));
    let val_data = gen_bivariate(1_500, &mut stream_rng(61, 2));
    let run = t3vae::config::RunConfig::from_json(
        r#"{"model":"t3hvae","nu":10.0,"n":2,"m1":2,"m2":1,"sigma_z":1.0,"sigma_x":1.0,
            "seed":61,"dataset":"bivariate","max_epochs":8,"batch_size":128,
            "hidden_sizes":[32,32]}"#,
    )?;
    let out = t3vae::train::train(&run, &train_data, &val_data)?;
    println!(
        "\ntrained {} epochs: val loss {:+.5} -> {:+.5}",
        out.epochs_run,
        out.log[0].val_loss,
        out.log.last().unwrap().val_loss
    );
    println!("checkpoint carries nets {:?}", out.checkpoint.net_names());

    // ancestral sampling: z1 ~ t(0,I,nu), z2 | z1, then x | z1, z2
    let prior2 = out.checkpoint.net("prior2")?;
    let decoder = out.checkpoint.net("decoder")?;
    let samples = hier_generate(20_000, &cfg, &prior2, &decoder, &mut stream_rng(61, 9))?;
    let max_radius = samples
        .data()
        .chunks(2)
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .fold(0.0f64, f64::max);
    println!("20K generated points, largest radius {max_radius:.1}");

    // an untrained Gaussian counterpart stays comparatively tame
    let gcfg = HierConfig { kind: HierKind::GaussianHvae, nu: f64::INFINITY, ..cfg.clone() };
    let mut rng = stream_rng(61, 12);
    let gp = Mlp::new(&[2, 16, 1], &mut rng)?;
    let gd = Mlp::new(&[3, 16, 2], &mut rng)?;
    let gs = hier_generate(20_000, &gcfg, &gp, &gd, &mut stream_rng(61, 13))?;
    let g_radius = gs
        .data()
        .chunks(2)
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .fold(0.0f64, f64::max);
    println!("Gaussian two-level counterpart, largest radius {g_radius:.1}");
    Ok(())
}
