//! Green's functions on the lattice: the truncated series on a ball, the
//! full-lattice limit, and the gap between them as the ball grows.

use greenldp::green::{green_full, green_truncated, localization_gaps, GreenQuery, Horizon, TargetSet};
use greenldp::model::WalkModel;

fn main() -> greenldp::Result<()> {
    let walk = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3])?;

    // expected visits to 0 and to -5; a renewal argument gives 2.5 and 2.5·(3/7)^5
    for y in [0, -5] {
        let g = green_full(&walk, &[0], &TargetSet::point(&[y]), 1e-10)?;
        println!("G(0, {y:>2}) = {:.10}  (R = {}, {} steps)", g.value, g.truncation, g.steps);
    }
    println!("closed forms: {:.10}, {:.10}", 2.5, 2.5 * (3.0f64 / 7.0).powi(5));

    let plane = WalkModel::homogeneous(
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
        vec![0.4, 0.3, 0.2, 0.1],
    )?;
    let origin = TargetSet::point(&[0, 0]);
    println!("\ntruncated G_R(0, 0) for the planar walk");
    for r in [5.0, 10.0, 20.0, 40.0] {
        let g = green_truncated(
            &plane,
            &GreenQuery {
                source: vec![0, 0],
                target: origin.clone(),
                truncation: r,
                horizon: Horizon::Auto,
            },
        )?;
        println!("  R = {r:>4}: {:.12}", g.value);
    }

    // scaled target n·B(q', δ) seen from n·q0, and how fast G_{nR} approaches G
    let n = 20;
    let ball = TargetSet::new(vec![-1.0, 0.0], 0.25, n)?;
    let radii = [1.5, 2.0, 3.0];
    let gaps = localization_gaps(&plane, n, &[0.0, 0.0], &ball, &radii)?;
    println!("\nlocalization gaps at n = {n}");
    for (r, gap) in radii.iter().zip(&gaps) {
        println!("  R = {r}: gap {gap:.3e}, (1/n) log gap = {:.4}", gap.ln() / n as f64);
    }
    Ok(())
}
