//! Prints the bundled observed-data file from its pinned seeds.
//!
//! cargo run -p abc-core --example generate_observed > crates/core/data/observed.json

use abc_core::benchmarks::coalescent::generate_coalescent_data;

fn main() {
    let data = serde_json::json!({
        "conjugate_normal": { "observed_mean": 1.2 },
        "coalescent_msat": generate_coalescent_data(),
    });
    println!("{}", serde_json::to_string_pretty(&data).unwrap());
}
