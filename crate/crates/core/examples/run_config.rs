//! Runs an experiment from a config string and prints the result table.

use collabsense::harness::{run, ExperimentConfig};

const CONFIG: &str = "
# average variance on nearest-neighbor networks
kind     = ou-avar
topology = nn
n_nodes  = 400
q        = 1, 3, 8
strategy = both
power    = 1.4
periods  = 0.7, 0.4, 0.1
trials   = 8
seed     = 3
";

fn main() -> collabsense::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    print!("{}", run(&cfg)?.to_csv());
    Ok(())
}
