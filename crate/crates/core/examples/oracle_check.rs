//! Compares the propagator with the sliced path integral at N and 2N slices
//! and their Richardson extrapolation.

use paultrap::oracle::extrapolated_propagator;
use paultrap::propagator::restricted_propagator;
use paultrap::scenario::Scenario;
use paultrap::trapmodel::Axis;

fn main() -> paultrap::Result<()> {
    let s = Scenario::load(
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/scenarios/dimensionless.scenario"
        )
        .as_ref(),
    )?;
    for axis in [Axis::X, Axis::Z] {
        let a = s.axis(axis)?;
        let pipeline = restricted_propagator(&a, &s.propagation_options())?.log_amplitude;
        println!("{} axis: pipeline {pipeline:.10}", axis.label());
        for n in [256, 1024, 4096] {
            let (vn, v2n, r) = extrapolated_propagator(&a, n)?;
            println!(
                "  N = {n:5}: |ln U_N - ln U| = {:.2e}, |ln U_2N - ln U| = {:.2e}, richardson {:.2e} (est. {:.1e})",
                (vn - pipeline).norm(),
                (v2n - pipeline).norm(),
                (r.value - pipeline).norm(),
                r.error
            );
        }
    }
    Ok(())
}
