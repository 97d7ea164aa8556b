//! Transitory double gyre on the unit square, written out as CSV with the
//! entropy of every trajectory for plotting.

use coherent_sets::diagnostics::{entropy_field, hard_partition};
use coherent_sets::ensemble::{save_ensemble, CsvLayout};
use coherent_sets::flows::{integrate_ensemble, FlowSpec, Seeding};
use coherent_sets::{run, FcmConfig, Geometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = integrate_ensemble(&FlowSpec::transitory_double_gyre(Seeding::UniformGrid { n: 1600 }, 1.0))?;
    let state = run(&e, &Geometry::euclidean(), FcmConfig::new(2, 1.5).with_seed(2))?;
    let h = entropy_field(&state)?;
    let labels = hard_partition(&state);
    let share = labels.iter().filter(|&&l| l == 0).count() as f64 / labels.len() as f64;
    println!("converged={} after {} iterations; cluster 0 holds {:.1}%", state.converged(), state.iterations(), 100.0 * share);

    let dir = std::env::temp_dir().join("coherent-sets-transitory");
    std::fs::create_dir_all(&dir)?;
    save_ensemble(&e, &dir.join("trajectories.csv"), CsvLayout::WideCsv)?;
    let mut w = csv::Writer::from_path(dir.join("initial_entropy.csv"))?;
    w.write_record(["x", "y", "label", "h"])?;
    for i in 0..e.n() {
        let p = e.position(i, 0);
        w.write_record([p[0].to_string(), p[1].to_string(), labels[i].to_string(), h[i].to_string()])?;
    }
    w.flush()?;
    println!("wrote {}", dir.display());
    Ok(())
}
