//! The γ-power divergence between Student-t distributions in closed form,
//! cross-checked against direct numerical integration, plus its Kullback-
//! Leibler limit as the tails thin out.
//!
//! Run with `cargo run --example divergence_closed_form`.

use t3vae::divergence::{
    gamma_divergence_numeric, gamma_divergence_tt, gamma_entropy_numeric, gamma_entropy_t,
    gamma_for, kl_gaussian, power_domain, GaussianParams,
};
use t3vae::tdist::TParams;

fn main() -> t3vae::Result<()> {
    // the index is tied to the dof: gamma = -2/(nu+d), always in (-1, 0)
    let nu = 5.0;
    let gamma = gamma_for(nu, 1)?;
    println!("nu = {nu}, d = 1  =>  gamma = {:.6}", gamma.value());

    let q = TParams::new_diag(vec![0.0], vec![1.0], nu)?;
    let p = TParams::new_diag(vec![1.0], vec![2.0], nu)?;

    // entropy: closed form vs quadrature
    let h_closed = gamma_entropy_t(&q)?;
    let domain = power_domain(&q, &q, gamma, 1e-14)?;
    let (h_numeric, h_err) = gamma_entropy_numeric(|x| q.log_density(x).unwrap(), gamma, &domain)?;
    println!("entropy   closed {h_closed:.12}  numeric {h_numeric:.12} (+/- {h_err:.1e})");
    assert!((h_closed - h_numeric).abs() < 1e-9);

    // divergence: closed form vs quadrature
    let d_closed = gamma_divergence_tt(&q, &p)?;
    let domain = power_domain(&q, &p, gamma, 1e-14)?;
    let (d_numeric, d_err) = gamma_divergence_numeric(
        |x| q.log_density(x).unwrap(),
        |x| p.log_density(x).unwrap(),
        gamma,
        &domain,
    )?;
    println!("divergence closed {d_closed:.12}  numeric {d_numeric:.12} (+/- {d_err:.1e})");
    assert!((d_closed - d_numeric).abs() < 1e-9);

    // axioms: non-negative, zero iff equal
    assert!(d_closed > 0.0);
    assert!(gamma_divergence_tt(&q, &q)?.abs() < 1e-14);
    println!("D(q||q) = {:.1e}, D(q||p) = {:.6} > 0", gamma_divergence_tt(&q, &q)?, d_closed);

    // a correlated 2-d pair
    let q2 = TParams::new_diag(vec![0.0, 0.0], vec![1.0, 1.0], 5.0)?;
    let scale = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
    let p2 = TParams::new_full(vec![1.0, -0.5], scale, 5.0)?;
    println!("2-d divergence: {:.12}", gamma_divergence_tt(&q2, &p2)?);

    // as nu grows, gamma -> 0 and the divergence approaches the KL of the
    // limiting Gaussians: here KL(N(0,1) || N(1,2)) = (1/2) ln 2
    let kl = kl_gaussian(
        &GaussianParams::new_diag(vec![0.0], vec![1.0])?,
        &GaussianParams::new_diag(vec![1.0], vec![2.0])?,
    )?;
    println!("\nKL(N(0,1) || N(1,2)) = {kl:.9} = ln(2)/2");
    println!("{:>10}  {:>14}  {:>10}", "nu", "D_gamma", "gap");
    let mut last_gap = f64::INFINITY;
    for nu in [1e2, 1e3, 1e4, 1e5, 1e6] {
        let q = TParams::new_diag(vec![0.0], vec![1.0], nu)?;
        let p = TParams::new_diag(vec![1.0], vec![2.0], nu)?;
        let d = gamma_divergence_tt(&q, &p)?;
        let gap = (d - kl).abs();
        println!("{nu:>10.0}  {d:>14.9}  {gap:>10.2e}");
        assert!(gap < last_gap, "convergence must be monotone here");
        last_gap = gap;
    }
    assert!(last_gap < 1e-3);
    Ok(())
}
