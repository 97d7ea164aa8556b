//! Three-interval circle map: recover the three cyclically permuted thirds
//! of [0, 1) with K = 3, then see what happens with one cluster too many.

use coherent_sets::diagnostics::{diagnose, partition_agreement, DiagnosticsOptions};
use coherent_sets::flows::{integrate_ensemble, interval_index, FlowSpec, Seeding};
use coherent_sets::{run, FcmConfig, Geometry, Initialization};

fn main() -> coherent_sets::Result<()> {
    let e = integrate_ensemble(&FlowSpec::interval_map(Seeding::UniformRandom { n: 1000, seed: 1 }, 9))?;
    let g = Geometry::circle();
    let truth: Vec<usize> = (0..e.n()).map(|i| interval_index(e.position(i, 0)[0])).collect();

    for k in [3, 4] {
        let cfg = FcmConfig::new(k, 1.1)
            .with_init(Initialization::RandomMemberships)
            .with_restarts(5)
            .with_seed(1);
        let state = run(&e, &g, cfg)?;
        let d = diagnose(&e, &g, &state, &DiagnosticsOptions::default())?;
        println!(
            "K={k}: {} iterations, objective {:.3}, mean entropy {:.4}, agreement with thirds {:.3}",
            state.iterations(),
            state.objective().unwrap(),
            d.mean_entropy(),
            partition_agreement(&truth, &d.hard_labels),
        );
        for c in &d.confidence_counts {
            println!("  {} trajectories with max membership > {}", c.count, c.threshold);
        }
        let sizes: Vec<usize> = (0..k).map(|c| d.hard_labels.iter().filter(|&&l| l == c).count()).collect();
        println!("  cluster sizes {sizes:?}, data diameter {:.3}", d.collapse.diameter);
        for p in &d.collapse.pairs {
            println!("  centers {} and {} nearly coincide ({:.3} of diameter)", p.k, p.other, p.relative);
        }
    }
    Ok(())
}
