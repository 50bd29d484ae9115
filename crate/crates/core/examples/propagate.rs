//! Restricted propagator for both axes of a scenario, split into its parts.
//!
//!     cargo run --example propagate [scenario]

use paultrap::propagator::restricted_propagator;
use paultrap::scenario::Scenario;
use paultrap::trapmodel::Axis;

fn main() -> paultrap::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/scenarios/dimensionless.scenario"
        )
        .into()
    });
    let s = Scenario::load(path.as_ref())?;
    for axis in [Axis::X, Axis::Z] {
        let r = restricted_propagator(&s.axis(axis)?, &s.propagation_options())?;
        println!("{} axis ({:?}, {:?})", axis.label(), r.route, r.method);
        println!("  ln U         = {}", r.log_amplitude);
        println!("  i S / hbar   = {}", r.action_term);
        println!("  ln prefactor = {}", r.prefactor_term);
        println!("  record term  = {}", r.record_term);
        println!("  caustics     = {}", r.prefactor.caustics());
    }
    Ok(())
}
