//! The four node correlation functions on small hand-made inputs.
//!
//! `cargo run --example correlation_functions`

use std::f64::consts::PI;

use fedgraph::graph::{corr_db, corr_knn, corr_pcc, corr_plv, Adjacency};
use fedgraph::prelude::*;
use fedgraph::signal::ElectrodePositions;

fn show(name: &str, a: &Adjacency) {
    println!("{name}");
    for i in 0..a.n() {
        let row: Vec<String> = (0..a.n()).map(|j| format!("{:6.3}", a.weight(i, j))).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> fedgraph::Result<()> {
    let pos = ElectrodePositions::new(vec![
        ("F3".into(), [0.0, 0.0, 0.0]),
        ("C3".into(), [1.0, 0.0, 0.0]),
        ("O1".into(), [3.0, 0.0, 0.0]),
        ("F4".into(), [0.0, 2.0, 0.0]),
    ])?;
    show("distance kernel", &corr_db(&pos, &CorrConfig::default())?);

    let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0], [6.0, 1.0]])?;
    let knn = CorrConfig {
        kind: CorrKind::Knn,
        k: 1,
        ..CorrConfig::default()
    };
    show("1-nearest neighbours", &corr_knn(&x, &knn)?);

    show(
        "|pearson|, expect 0.866 for the first pair",
        &corr_pcc(&Matrix::from_rows(&[[1.0, 2.0, 3.0], [1.0, 1.0, 2.0], [3.0, 2.0, 1.0]])?)?,
    );

    let wave = |f: f64, off: f64| -> Vec<f64> { (0..64).map(|k| (2.0 * PI * f * k as f64 / 64.0 + off).cos()).collect() };
    let rows = [wave(4.0, 0.0), wave(4.0, 1.0), wave(9.0, 0.3)];
    show("phase locking: same frequency locks, different frequency does not", &corr_plv(&Matrix::from_rows(&rows)?)?);
    Ok(())
}
