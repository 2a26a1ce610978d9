//! Compares optimal and equal energy allocation on one random network as
//! the nearest-neighbor collaboration grows.

use collabsense::gains::{GainModel, SensorField};
use collabsense::snapshot::{equal_ea, evaluate, optimal_ea, SnapshotMetrics};
use collabsense::topology::{nearest_neighbor, uniform_positions};

fn main() -> collabsense::Result<()> {
    let n = 500;
    let energy = 0.7;
    let rayleigh = GainModel::Rayleigh { alpha: 1.0 };
    let field = SensorField::new(rayleigh.sample(n, 1)?, rayleigh.sample(n, 2)?, 1.0, 1.0, 1.0)?;
    let positions = uniform_positions(n, 3);

    println!("{:>3}  {:>10}  {:>10}  {:>10}", "Q", "J_opt", "J_eq", "D_opt");
    for q in [1, 2, 3, 5, 8, 12] {
        let topo = nearest_neighbor(&positions, q)?;
        let opt = optimal_ea(&field, &topo, energy)?;
        let eq = evaluate(&field, &equal_ea(&field, &topo, energy)?)?;
        let m = evaluate(&field, &opt.weights)?;
        println!("{q:>3}  {:>10.6}  {:>10.6}  {:>10.6}", opt.fisher, eq.fisher, m.distortion);
    }

    let topo = nearest_neighbor(&positions, 5)?;
    let m = evaluate(&field, &optimal_ea(&field, &topo, energy)?.weights)?;
    println!("\n{}\n{}", SnapshotMetrics::CSV_HEADER, m.to_csv_record());
    Ok(())
}
