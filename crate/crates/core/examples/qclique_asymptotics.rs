//! Large-network Fisher information of Q-clique networks: closed forms
//! against a finite network of 2000 nodes.

use collabsense::asymptotic::{h_q, j_eq_asym, j_opt_asym, AsymptoticConfig};
use collabsense::gains::{GainModel, SensorField};
use collabsense::snapshot::{strategy_fisher, Strategy};
use collabsense::topology::q_clique;

fn main() -> collabsense::Result<()> {
    let n = 2000;
    let energy = 0.7;
    let rayleigh = GainModel::Rayleigh { alpha: 1.0 };

    for sigma2 in [1.0, 2.0] {
        let field = SensorField::new(rayleigh.sample(n, 7)?, rayleigh.sample(n, 8)?, 1.0, sigma2, 1.0)?;
        println!("sigma^2 = {sigma2}");
        println!("{:>3}  {:>8}  {:>9}  {:>9}  {:>9}  {:>9}", "Q", "H_Q", "J_opt", "theory", "J_eq", "theory");
        for q in [1, 2, 5, 10, 20] {
            let cfg = AsymptoticConfig::rayleigh_unit(energy, sigma2, q);
            let topo = q_clique(n, q)?;
            println!(
                "{q:>3}  {:>8.5}  {:>9.5}  {:>9.5}  {:>9.5}  {:>9.5}",
                h_q(q, cfg.lambda().unwrap())?,
                strategy_fisher(Strategy::Optimal, &field, &topo, energy)?,
                j_opt_asym(&cfg)?,
                strategy_fisher(Strategy::Equal, &field, &topo, energy)?,
                j_eq_asym(&cfg)?,
            );
        }
        println!();
    }
    Ok(())
}
