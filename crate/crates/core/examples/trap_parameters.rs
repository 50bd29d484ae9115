//! Mathieu parameters of the monitored trap, for both axes.
//!
//!     cargo run --example trap_parameters [scenario]

use paultrap::scenario::Scenario;
use paultrap::trapmodel::{
    derive_frequency_coefficients, dimensionless, measurement_damping, Axis,
};

fn main() -> paultrap::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/barium.scenario").into()
    });
    let s = Scenario::load(path.as_ref())?;
    for axis in [Axis::X, Axis::Z] {
        let c = derive_frequency_coefficients(&s.trap, axis)?;
        let damping = measurement_damping(s.measurement(axis), &s.trap);
        let d = dimensionless(&s.axis(axis)?.effective_frequency()?)?;
        println!(
            "{} axis: U = {:e}, V = {:e}, damping = {:e}",
            axis.label(),
            c.u,
            c.v,
            damping
        );
        println!("  p = {}, q = {}, ratio = {}", d.p, d.q, d.alpha);
    }
    Ok(())
}
