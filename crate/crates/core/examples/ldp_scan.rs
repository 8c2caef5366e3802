//! Decay rates of scaled Green's measures against the quasipotential, written
//! as CSV to standard output.

use greenldp::diagnostics::{ldp_scan, write_scan_csv, ScanOptions};
use greenldp::model::WalkModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let walk = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3])?;
    let grid: Vec<u64> = (1..=8).map(|k| 10 * k).collect();
    let series = ldp_scan(&walk, &[0.0], &[-1.0], 0.25, &grid, &ScanOptions::default())?;

    write_scan_csv(std::io::stdout().lock(), &series)?;
    eprintln!(
        "fit {:.5} ± {:.5} (correction {:.3}/n), predicted {:.5}, relative error {:.2}%",
        series.slope_fit,
        series.fit_stderr,
        series.fit_correction,
        series.predicted,
        100.0 * series.relative_error()
    );
    Ok(())
}
