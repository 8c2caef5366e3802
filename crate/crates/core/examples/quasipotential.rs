//! Quasipotentials by both routes: the infimum over T of the finite-horizon
//! rate, and the support function of the level set {φ ≤ 1}.

use greenldp::model::load_model_file;
use greenldp::quasipotential::{identity_suite, quasipotential, Method};

fn main() -> greenldp::Result<()> {
    let model = load_model_file(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/walk2d.toml"))?;
    let origin = [0.0, 0.0];

    println!("{:>14} {:>12} {:>12} {:>10}", "q'", "inf over T", "support", "T*");
    for target in [[-1.0, 0.0], [0.0, -1.0], [-1.0, -1.0], [1.0, 1.0], [1.0, -2.0]] {
        let a = quasipotential(&model, &origin, &target, Method::InfOverT)?;
        let b = quasipotential(&model, &origin, &target, Method::SupportFunction)?;
        println!(
            "{:>14} {:>12.8} {:>12.8} {:>10.4}",
            format!("{target:?}"),
            a.value,
            b.value,
            a.t_star
        );
    }

    let report = identity_suite(&model, 200, 11)?;
    println!("\nidentity suite (tolerance {:e})", report.tolerance);
    for c in &report.checks {
        println!("  {:<15} max violation {:.3e} over {} samples", c.name, c.max_violation, c.samples);
    }
    println!("passed: {}", report.passed());
    Ok(())
}
