//! Unscrambled Sobol points mapped to Gaussian space, compared with
//! pseudo-random draws on a smooth expectation.

use smoothbasket::sampling::{inv_norm_cdf, normal_vector, sobol_points, RngSpec, SobolStream};

fn main() -> smoothbasket::Result<()> {
    for p in sobol_points(3, 8, 0)? {
        println!("{p:?}");
    }

    // E[exp(Σ z_i / 4)] over 8 dimensions
    let d = 8;
    let exact = (d as f64 / 32.0).exp();
    let g = |z: &[f64]| (z.iter().sum::<f64>() / 4.0).exp();
    for m in [10, 14, 18] {
        let n = 1usize << m;
        let mut sobol = SobolStream::with_skip(d, 1)?;
        let mut u = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut qmc = 0.0;
        for _ in 0..n {
            sobol.next_into(&mut u);
            for (zi, ui) in z.iter_mut().zip(&u) {
                *zi = inv_norm_cdf(*ui)?;
            }
            qmc += g(&z);
        }
        let mc: f64 = (0..n as u64).map(|k| g(&normal_vector(RngSpec::new(7, k), d))).sum();
        println!(
            "n = 2^{m:<2}  QMC error {:.2e}   MC error {:.2e}",
            (qmc / n as f64 - exact).abs(),
            (mc / n as f64 - exact).abs()
        );
    }
    Ok(())
}
