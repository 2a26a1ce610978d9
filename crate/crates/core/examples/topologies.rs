//! Builds the three collaboration topologies on the same 20-node deployment
//! and prints their link counts and edge lists.

use collabsense::topology::{nearest_neighbor, q_clique, rgg, rgg_radius, uniform_positions};

fn main() -> collabsense::Result<()> {
    let n = 20;
    let positions = uniform_positions(n, 42);

    let clique = q_clique(n, 4)?;
    let nn = nearest_neighbor(&positions, 3)?;
    let geo = rgg(&positions, 0.2)?;

    println!("4-clique:           {} links", clique.n_links());
    println!("2-nearest-neighbor: {} links (directed)", nn.n_links());
    println!(
        "RGG r = 0.2:        {} links, symmetric = {}",
        geo.n_links(),
        geo.is_symmetric()
    );
    println!(
        "radius for 10 expected neighbors at N = 2000: {:.5}",
        rgg_radius(2000, 10.0)
    );

    println!("\nnearest-neighbor edge list (receiver source):");
    print!("{}", nn.to_edge_list());
    Ok(())
}
