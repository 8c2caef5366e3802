//! The Legendre transform Λ* of the 1-D walk against its closed form, and the
//! finite-horizon rate T·Λ*((q' − q)/T) as a function of T.

use greenldp::cgf::legendre;
use greenldp::model::WalkModel;
use greenldp::quasipotential::rate_finite_t;

fn closed_form(v: f64, p: f64) -> f64 {
    let q = 1.0 - p;
    let up = (1.0 + v) / 2.0;
    let down = (1.0 - v) / 2.0;
    let term = |w: f64, r: f64| if w > 0.0 { w * (w / r).ln() } else { 0.0 };
    term(up, p) + term(down, q)
}

fn main() -> greenldp::Result<()> {
    let model = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3])?;

    println!("{:>6} {:>14} {:>14} {:>10}", "v", "Lambda*(v)", "closed form", "converged");
    for i in 0..=8 {
        let v = -1.0 + 0.25 * i as f64;
        let r = legendre(&model, &[v])?;
        println!("{v:>6.2} {:>14.10} {:>14.10} {:>10}", r.value, closed_form(v, 0.7), r.converged);
    }
    let outside = legendre(&model, &[1.5])?;
    println!("v = 1.5 lies outside the hull: {}", outside.value);

    println!("\nrate of moving from 0 to -1 in time T");
    for t in [0.5, 1.0, 2.0, 2.5, 3.0, 5.0, 10.0] {
        let r = rate_finite_t(&model, t, &[0.0], &[-1.0])?;
        println!("T = {t:>5}: {:.8}", r.value);
    }
    Ok(())
}
