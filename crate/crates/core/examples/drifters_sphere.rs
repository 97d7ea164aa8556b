//! Drifter-style data on the sphere: a long CSV of (id, month, lon, lat)
//! with gaps, clustered with the cosine dissimilarity on unit vectors.

use coherent_sets::diagnostics::hard_partition;
use coherent_sets::ensemble::{load_ensemble, CsvLayout};
use coherent_sets::{FcmConfig, FuzzyCMeans, Geometry};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("coherent-sets-drifters");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("drifters.csv");

    // Two basins straddling the dateline and one in the Atlantic; every
    // drifter reports in only some of the 24 months.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["id", "t", "c0", "c1"])?;
    let basins = [(175.0, 30.0), (-175.0, -30.0), (-35.0, 20.0)];
    for id in 0..300 {
        let (lon0, lat0) = basins[id % 3];
        let (mut lon, mut lat) = (lon0 + rng.random_range(-8.0..8.0), lat0 + rng.random_range(-6.0..6.0));
        for month in 0..24 {
            lon += 0.5 * (month as f64 * 0.3).cos() + rng.random_range(-0.5..0.5);
            lat += rng.random_range(-0.3..0.3);
            if rng.random_bool(0.6) || month == 0 {
                let wrapped = (lon + 180.0f64).rem_euclid(360.0) - 180.0;
                w.write_record([format!("drifter{id}"), format!("2001-{:02}", month + 1), wrapped.to_string(), lat.to_string()])?;
            }
        }
    }
    w.flush()?;
    std::fs::write(dir.join("drifters.json"), r#"{"format":"long-csv","d":2,"coordinates":"lonlat-degrees"}"#)?;

    let e = load_ensemble(&path, CsvLayout::LongCsv)?;
    println!("{} drifters over {} months, {} fixes", e.n(), e.num_times(), e.observation_count());
    let model = FuzzyCMeans::new(&e, &Geometry::sphere(), FcmConfig::new(3, 1.5).with_seed(1).with_restarts(3))?;
    let state = model.run()?;
    let labels = hard_partition(&state);
    let centers = model.centers_in_data_space(&state);
    for k in 0..3 {
        let members = labels.iter().filter(|&&l| l == k).count();
        let first = &centers[k * e.num_times() * 2..k * e.num_times() * 2 + 2];
        println!("cluster {k}: {members} drifters, center in {} at ({:.1}°, {:.1}°)", e.time_label(0), first[0], first[1]);
    }
    Ok(())
}
