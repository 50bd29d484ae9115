//! Truncated cosine series for the x-axis Mathieu equation, checked against a
//! numeric solution with the same initial data.

use std::f64::consts::PI;

use paultrap::mathieu::{
    evaluate_f, evaluate_f_derivative, integrate_mathieu_ode, mathieu_series, max_residual,
    MathieuEquation,
};
use paultrap::scenario::Scenario;
use paultrap::trapmodel::{dimensionless, Axis};

fn main() -> paultrap::Result<()> {
    let s =
        Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/barium.scenario").as_ref())?;
    let d = dimensionless(&s.axis(Axis::X)?.effective_frequency()?)?;
    for n in 1..=4 {
        let c = mathieu_series(&d, n)?;
        println!(
            "{n} terms: max residual on [0, pi] = {:.3e}",
            max_residual(&c, 0.0, PI, 2001)
        );
    }

    let c = mathieu_series(&d, 4)?;
    let grid: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 8.0).collect();
    let init = (evaluate_f(&c, 0.0), evaluate_f_derivative(&c, 0.0));
    let ode = integrate_mathieu_ode(
        MathieuEquation::from(d),
        (0.0, PI),
        init,
        1e-12,
        Some(&grid),
    )?;
    println!("{:>8} {:>28} {:>28}", "t", "series", "ode");
    for (t, psi) in grid.iter().zip(&ode.psi) {
        println!(
            "{t:8.4} {:>28} {:>28}",
            format!("{:.6}", evaluate_f(&c, *t)),
            format!("{psi:.6}")
        );
    }
    Ok(())
}
