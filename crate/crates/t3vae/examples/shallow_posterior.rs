//! For a linear decoder the exact posterior over the latent is itself a
//! Student-t with a closed form. This example computes it and verifies it
//! against brute-force Bayes via quadrature on the joint density.
//!
//! Run with `cargo run --example shallow_posterior`.

use nalgebra::{DMatrix, DVector};
use t3vae::models::{joint_log_density, shallow_posterior, ModelConfig, ModelKind};
use t3vae::quadrature::integrate;

fn main() -> t3vae::Result<()> {
    let cfg = ModelConfig { kind: ModelKind::T3Vae, n: 2, m: 1, nu: 6.0, sigma: 0.8, beta: 1.0 };
    // decoder mu_theta(z) = W z + b
    let w = DMatrix::from_row_slice(2, 1, &[1.5, -0.7]);
    let b = DVector::from_row_slice(&[0.3, 0.1]);
    let x = [1.2, -0.4];

    let post = shallow_posterior(&w, &b, &cfg, &x)?;
    println!("observation x = {x:?}");
    println!("posterior over z:");
    println!("  mean  : {:.8}", post.mu[0]);
    println!("  scale : {:.8}", post.scale_matrix()[(0, 0)]);
    println!("  dof   : {} (= nu + n)", post.nu);
    assert_eq!(post.nu, cfg.nu + cfg.n as f64);

    // Bayes check: p(z|x) = p(x,z) / p(x) with the evidence integrated out
    let wv = w.clone();
    let bv = b.clone();
    let cfg_j = cfg.clone();
    let joint = move |z: f64| -> f64 {
        let mu = &wv * DVector::from_row_slice(&[z]) + &bv;
        joint_log_density(&x, &[z], mu.as_slice(), &cfg_j).unwrap().exp()
    };
    let evidence = integrate(&joint, -60.0, 60.0, 1e-13, 1e-11)?.value;
    println!("\nevidence p(x) = {evidence:.10}");

    println!("{:>6}  {:>14} {:>14}", "z", "closed form", "Bayes");
    for z in [-1.0, -0.2, 0.4, 1.1] {
        let closed = post.log_density(&[z])?.exp();
        let bayes = joint(z) / evidence;
        println!("{z:>6}  {closed:>14.10} {bayes:>14.10}");
        assert!((closed - bayes).abs() < 1e-8);
    }

    // the posterior mean responds linearly to the observation through W
    println!("\nposterior means along a line of observations:");
    for t in [-2.0, 0.0, 2.0] {
        let xt = [t, -0.4];
        let p = shallow_posterior(&w, &b, &cfg, &xt)?;
        println!("  x0 = {t:>4}: mean {:.6}, dof {}", p.mu[0], p.nu);
    }
    Ok(())
}
