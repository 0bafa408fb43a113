//! Counter-based noise: every Gaussian increment is a pure function of
//! `(seed, replica, generation, step)`, so branching and parallel scheduling
//! cannot change a trajectory.

use amsim::rng::{derive_seed, RngKey};

fn main() {
    let key = RngKey::new(42, 3, 0, 0);
    println!("replica 3, step 10: {:?}", key.at_step(10).normals(3));
    println!("again:              {:?}", RngKey::new(42, 3, 0, 10).normals(3));
    println!("replica 4, step 10: {:?}", RngKey::new(42, 4, 0, 10).normals(3));
    println!("generation 1:       {:?}", RngKey::new(42, 3, 1, 10).normals(3));
    println!("derived seeds: {:#018x} {:#018x}", derive_seed(42, 0), derive_seed(42, 1));
}
