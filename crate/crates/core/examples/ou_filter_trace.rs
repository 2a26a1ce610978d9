//! Simulates an OU path, samples it with power-limited noise and filters it;
//! the empirical MSE approaches the average variance.

use collabsense::ouprocess::{avar, simulate_filtering, OUSamplingScheme};

fn main() -> collabsense::Result<()> {
    let base = OUSamplingScheme::new(1.0, 1.0, 1.0, 1.0, 2.5)?;
    for period in [3.0, 0.75, 0.1] {
        let scheme = base.with_period(period)?;
        let runs: Vec<f64> = (0..200)
            .map(|seed| simulate_filtering(&scheme, 30.0, 1600, None, seed).map(|r| r.mse()))
            .collect::<collabsense::Result<_>>()?;
        let mse = runs.iter().sum::<f64>() / runs.len() as f64;
        println!("T = {period:<4}  MSE over 200 paths = {mse:.4}  Avar = {:.4}", avar(&scheme));
    }

    let run = simulate_filtering(&base.with_period(0.75)?, 30.0, 1600, None, 1)?;
    println!("\nfirst seconds of one path (T = 0.75):");
    println!("{:>6}  {:>8}  {:>8}", "t", "theta", "estimate");
    for i in (0..160).step_by(16) {
        println!("{:>6.3}  {:>8.4}  {:>8.4}", run.times[i], run.theta[i], run.estimates[i]);
    }
    Ok(())
}
