//! The closed-form single-solution prefactor for the two-term series, set
//! against the D-function prefactor on windows where the series has no zero.

use paultrap::propagator::{reconcile, zero_free_windows, TYPO_LEDGER};
use paultrap::scenario::Scenario;
use paultrap::trapmodel::{dimensionless, Axis};

fn main() -> paultrap::Result<()> {
    let s =
        Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/barium.scenario").as_ref())?;
    let spec = s.axis(Axis::X)?.effective_frequency()?;
    let d = dimensionless(&spec)?;
    for w in zero_free_windows(d.alpha, spec.drive_omega) {
        let r = reconcile(&d, spec.drive_omega, s.trap.mass, s.trap.hbar, w, 1e-11)?;
        println!(
            "[{:.4e}, {:.4e}] s: relative difference {:.2e}",
            w.0, w.1, r.rel_diff
        );
    }
    println!("\ncorrections to the printed expression:");
    for e in TYPO_LEDGER {
        println!("- {}\n  -> {}\n  ({})", e.printed, e.implemented, e.reason);
    }
    Ok(())
}
