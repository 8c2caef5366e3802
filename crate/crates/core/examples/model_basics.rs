//! Load a model from TOML, inspect its drift and the communication constant θ.
//!
//! cargo run --example model_basics [-- path/to/model.toml]

use greenldp::cgf::phi;
use greenldp::model::{communication_theta, load_model_file};

fn main() -> greenldp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/walk2d.toml").into());
    let model = load_model_file(&path)?;

    println!("dimension  {}", model.dim());
    println!("drift      {:?}", model.drift());
    println!("transient  {}", model.is_transient());

    let d = model.dim();
    let axes: Vec<Vec<f64>> = (0..d)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut e = vec![0.0; d];
                e[i] = s;
                e
            })
        })
        .collect();
    let cert = communication_theta(&model, &axes)?;
    println!("theta      {:.6}", cert.theta);
    for w in &cert.witnesses {
        println!(
            "  direction {:?}: cost {:.6}, path to {:?} with -log p = {:.6}",
            w.direction, w.unit_cost, w.displacement, w.neg_log_prob
        );
    }

    // round trip through the canonical config text
    let text = model.to_config_string();
    let again = greenldp::model::load_model(&text)?;
    assert_eq!(again, model);
    println!("\n{text}");

    let at_zero = phi(&model, &vec![0.0; d])?;
    println!("phi(0) = {}, grad Lambda(0) = {:?}", at_zero.phi, at_zero.grad);
    Ok(())
}
