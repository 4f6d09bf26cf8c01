//! SPSA attack on a fixed node set, printing the objective as it climbs.
//!
//! cargo run --release --example spsa_attack -- [checkpoint]

mod common;

use diffattack::attack::{influence, run_attack_observed, AttackConfig, AttackSet, Perturbation};
use diffattack::evaluation::{aai, aair};

fn main() -> diffattack::Result<()> {
    let s = common::setup()?;
    let start = s.dataset.test_starts()[0];
    let (x, _) = s.dataset.sample(start);
    let set = AttackSet::new([3, 17, 29, 41, 52], s.graph.n_nodes())?;
    let cfg = AttackConfig::default();

    let mut trace = Vec::new();
    let out = run_attack_observed(&s.model, &x, &set, &cfg, |n, u| {
        if n % 5_000 == 0 {
            trace.push((n, Perturbation::new(u.clone(), set.clone())));
        }
    })?;
    for (n, u) in &trace {
        println!("iteration {n:>6}: Phi = {:.3}", influence(&s.model, &x, u, &cfg)?.total);
    }

    let phi = &out.influence.phi;
    println!("attack set {:?}, {} model calls", set.nodes(), out.evaluations);
    println!("AAI {:.4} km/h, AAIR {:.4}", aai(phi), aair(phi, &out.influence.baseline)?.value);
    let u = out.perturbation.matrix();
    for &i in set.nodes() {
        let row = u.row(i);
        println!(
            "  node {i:>2}: perturbation range [{:.2}, {:.2}] km/h",
            row.fold(f64::INFINITY, |a, &b| a.min(b)),
            row.fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        );
    }
    Ok(())
}
