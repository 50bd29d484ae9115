//! Ranks constant x-axis records by probability.  Only differences of log P
//! are meaningful, so the output is given as log-odds against the best one.

use paultrap::probability::rank_records;
use paultrap::records::{render, RecordSpec};
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
    let m = s.measurement(Axis::X);
    let mut candidates = Vec::new();
    for a in [-0.4, -0.2, 0.0, 0.2, 0.4] {
        let rec = render(&RecordSpec::Constant { amplitude: a }, m, 101)?;
        candidates.push((format!("a = {a:+.1}"), s.axis_with_record(Axis::X, rec)));
    }
    for r in rank_records(&candidates, &s.propagation_options())? {
        println!(
            "{:10} log P = {:+.6}  log-odds = {:+.6}",
            r.id, r.log_p, r.log_odds
        );
    }
    Ok(())
}
