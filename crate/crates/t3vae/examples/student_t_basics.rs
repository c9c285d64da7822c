//! Multivariate Student-t essentials: densities, moments, sampling, tails,
//! and the Gaussian limit.
//!
//! Run with `cargo run --example student_t_basics`.

use t3vae::data::stream_rng;
use t3vae::quadrature::t_tail_radius;
use t3vae::tdist::{log_norm_const, TParams};

fn main() -> t3vae::Result<()> {
    // a heavy-tailed scalar distribution: location 0, scale 1, 5 dof
    let t5 = TParams::new_diag(vec![0.0], vec![1.0], 5.0)?;
    println!("t(0, 1, 5)");
    for x in [0.0, 1.0, 3.0, 6.0] {
        println!("  log density at {x:>4}: {:+.6}", t5.log_density(&[x])?);
    }
    println!("  P(X <= 2)          : {:.6}", t5.cdf1(2.0)?);
    println!("  variance           : {:.6} (scale is 1, fat tails widen it)",
        t5.covariance()?[(0, 0)]);

    // sampling matches the analytic variance nu/(nu-2)
    let mut rng = stream_rng(1, 0);
    let draws = t5.sample(200_000, &mut rng)?;
    let var: f64 =
        draws.data().iter().map(|v| v * v).sum::<f64>() / draws.rows() as f64;
    println!("  sample variance    : {:.4} over {} draws", var, draws.rows());
    assert!((var - 5.0 / 3.0).abs() < 0.05);

    // tail mass beyond |x| > 6: small but vastly larger than Gaussian
    let exceed = draws.data().iter().filter(|v| v.abs() > 6.0).count();
    let exact = 2.0 * (1.0 - t5.cdf1(6.0)?);
    println!(
        "  P(|X| > 6)         : empirical {:.5}, exact {:.5}",
        exceed as f64 / draws.rows() as f64,
        exact
    );

    // radius that captures all but eps of the mass, used to bound integrals
    println!("  99.9% of mass lies within |x| < {:.2}", t_tail_radius(5.0, 1e-3)?);

    // normalizing constants compose across dimension splits:
    // C_{nu,m+n} = C_{nu+m,n} * C_{nu,m} * (1 + m/nu)^{n/2}
    let (nu, m, n) = (7.0, 2usize, 3usize);
    let lhs = log_norm_const(nu, m + n)?;
    let rhs = log_norm_const(nu + m as f64, n)?
        + log_norm_const(nu, m)?
        + 0.5 * n as f64 * (m as f64 / nu).ln_1p();
    println!("\nsplit identity: {lhs:.12} vs {rhs:.12}");
    assert!((lhs - rhs).abs() < 1e-12);

    // a correlated 2-d member via a full scale matrix
    let scale = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
    let t2 = TParams::new_full(vec![1.0, -0.5], scale, 6.0)?;
    println!("\n2-d t, nu = 6");
    println!("  log density at mode: {:+.6}", t2.log_density(&[1.0, -0.5])?);
    println!("  covariance:\n{}", t2.covariance()?);

    // large nu converges to the Gaussian
    let near_gauss = TParams::new_diag(vec![0.0], vec![1.0], 1e8)?;
    let normal = -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5;
    println!(
        "nu = 1e8 log density at 1: {:+.9} (Gaussian {:+.9})",
        near_gauss.log_density(&[1.0])?,
        normal
    );
    assert!((near_gauss.log_density(&[1.0])? - normal).abs() < 1e-6);
    Ok(())
}
