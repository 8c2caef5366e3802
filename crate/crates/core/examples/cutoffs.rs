//! Short- and long-time cutoffs for the 1-D walk, and a localization scan
//! over truncation radii.

use greenldp::diagnostics::{cutoffs, localization_scan};
use greenldp::green::TargetSet;
use greenldp::model::WalkModel;

fn main() -> greenldp::Result<()> {
    let walk = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3])?;
    let a_level = 1.0;
    let report = cutoffs(&walk, a_level, 1.0, &[0.0], &[-1.0], 0.25, 1.0, &[10, 20, 40])?;

    let s = &report.short;
    println!("short time: c = {}, M_c = {:.6}, kappa = {:.6}", s.c, s.m_c, s.kappa);
    for c in &s.checks {
        println!("  n = {:>3}: mass before step {:>3} is {:.3e}, (1/n) log = {:.4}", c.n, c.cut, c.sum, c.log_rate);
    }
    println!("  holds: {}", s.holds());

    let l = &report.long;
    println!("long time: Lambda*(0) = {:.6}, delta0 = {}, K = {}", l.rate_at_rest, l.delta0, l.k);
    for c in &l.checks {
        println!("  n = {:>3}: mass after step {:>4} is {:.3e}, (1/n) log = {:.4}", c.n, c.cut, c.sum, c.log_rate);
    }
    println!("  holds: {}", l.holds());

    let target = TargetSet::new(vec![-1.0], 0.25, 20)?;
    let loc = localization_scan(&walk, &[0.0], &target, a_level, &[1.5, 2.0, 3.0, 4.0], 20)?;
    println!("\nlocalization at n = {}", loc.n);
    for row in &loc.rows {
        println!("  R = {:>3}: gap {:.3e}, (1/n) log gap = {:.4}", row.radius, row.gap, row.log_rate);
    }
    println!("  smallest R reaching -A: {:?}, monotone: {}", loc.smallest_radius, loc.monotone);
    Ok(())
}
