//! Conditional variance of the OU estimate over one sampling period, for
//! several periods at the same power, with the average and limiting variance.

use collabsense::ouprocess::{variance_profile, OUSamplingScheme};

fn main() -> collabsense::Result<()> {
    // eta^2 = 1, tau = 1 s, c P / eta^2 = 2.5
    let base = OUSamplingScheme::new(1.0, 1.0, 1.0, 1.0, 2.5)?;
    println!("Var0 = {:.6}", base.var0());
    for period in [3.0, 1.5, 0.75, 0.1] {
        let scheme = base.with_period(period)?;
        let p = variance_profile(&scheme, 7)?;
        let row: Vec<String> = p.variances.iter().map(|v| format!("{v:.4}")).collect();
        println!(
            "T = {period:<4}  J = {:<6.3}  Avar = {:.5}  Var(t) = [{}]",
            scheme.fisher(),
            p.avar,
            row.join(", ")
        );
    }
    Ok(())
}
