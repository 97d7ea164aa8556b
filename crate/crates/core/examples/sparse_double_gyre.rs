//! Delete 80% of all observations at random and cluster what is left.

use coherent_sets::diagnostics::{hard_partition, partition_agreement};
use coherent_sets::flows::{integrate_ensemble, FlowSpec, Seeding};
use coherent_sets::{run, thin_ensemble, AvailabilityIndex, FcmConfig, Geometry};

fn main() -> coherent_sets::Result<()> {
    let full = integrate_ensemble(&FlowSpec::double_gyre(Seeding::UniformGrid { n: 512 }, 5.0))?;
    let sparse = thin_ensemble(&full, 0.8, 11)?;
    let index = AvailabilityIndex::build(&sparse);
    let shortest = (0..sparse.n()).map(|i| sparse.support_len(i)).min().unwrap();
    println!(
        "kept {} of {} observations; slice sizes {}..{}; shortest trajectory has {shortest} points",
        sparse.observation_count(),
        full.observation_count(),
        (0..index.num_times()).map(|t| index.at(t).len()).min().unwrap(),
        (0..index.num_times()).map(|t| index.at(t).len()).max().unwrap(),
    );

    let g = Geometry::euclidean();
    let cfg = FcmConfig::new(2, 2.0).with_seed(3);
    let a = run(&full, &g, cfg.clone())?;
    let b = run(&sparse, &g, cfg.clone())?;
    let c = run(&sparse, &g, cfg.with_normalize_by_support(true))?;
    println!("full vs thinned agreement: {:.3}", partition_agreement(&hard_partition(&a), &hard_partition(&b)));
    println!(
        "full vs thinned (1/|T_i| weights) agreement: {:.3}",
        partition_agreement(&hard_partition(&a), &hard_partition(&c))
    );
    Ok(())
}
