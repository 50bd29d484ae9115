//! Scenario files: one TOML document describing the trap, both measured axes,
//! their boundary positions and records, and the numerical settings.
//!
//! ```toml
//! [trap]
//! charge = 1.602176634e-19
//! mass = 2.28e-25
//! half_gap = 8e-3
//! dc_voltage = 10.0
//! ac_voltage = 100.0
//! drive_omega = 2e6
//!
//! [measurement_x]
//! t_start = 0.0
//! t_end = 30.0
//! resolution = 2e-6     # `inf` switches the measurement off
//!
//! [boundary_x]
//! x_start = 0.0
//! x_end = 1e-8
//!
//! [record_x]
//! kind = "constant"     # or "sinusoid" (amplitude, omega, phase) or "samples" (values)
//! amplitude = 1e-6
//!
//! # ... the same three sections for z ...
//!
//! [numerics]
//! tol = 1e-10
//! n_samples = 1001
//! oracle_n = 2048
//! f_source = "ode"      # or "series"
//! ```
//!
//! Boundary times are those of the axis' measurement window.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{AxisScenario, BoundaryConditions, PropagationOptions};
use crate::records::{render, MeasurementRecord, RecordSpec};
use crate::trapmodel::{Axis, MeasurementConfig, TrapParameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPositions {
    pub x_start: f64,
    pub x_end: f64,
}

/// Which `f` feeds the single-solution prefactor in cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSourceKind {
    /// Four-term Mathieu cosine series.
    Series,
    /// Numeric integration of the frequency equation.
    #[default]
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub tol: f64,
    /// Samples used to render parametric records.
    pub n_samples: usize,
    /// Coarse oracle lattice; the Richardson partner uses twice as many slices.
    pub oracle_n: usize,
    pub f_source: FSourceKind,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            tol: 1e-10,
            n_samples: 1001,
            oracle_n: 2048,
            f_source: FSourceKind::Ode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub trap: TrapParameters,
    pub measurement_x: MeasurementConfig,
    pub measurement_z: MeasurementConfig,
    pub boundary_x: BoundaryPositions,
    pub boundary_z: BoundaryPositions,
    pub record_x: RecordSpec,
    pub record_z: RecordSpec,
    #[serde(default)]
    pub numerics: Numerics,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::invalid("scenario", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("scenario", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario fields are all TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        if !(self.numerics.tol > 0.0 && self.numerics.tol < 1.0) {
            return Err(Error::invalid(
                "tol",
                format!("must lie in (0, 1), got {}", self.numerics.tol),
            ));
        }
        if self.numerics.oracle_n < 2 {
            return Err(Error::invalid(
                "oracle_n",
                format!("need at least 2, got {}", self.numerics.oracle_n),
            ));
        }
        for axis in [Axis::X, Axis::Z] {
            self.axis(axis)?.validate()?;
        }
        Ok(())
    }

    pub fn measurement(&self, axis: Axis) -> &MeasurementConfig {
        match axis {
            Axis::X => &self.measurement_x,
            Axis::Z => &self.measurement_z,
        }
    }

    pub fn record_spec(&self, axis: Axis) -> &RecordSpec {
        match axis {
            Axis::X => &self.record_x,
            Axis::Z => &self.record_z,
        }
    }

    pub fn boundary(&self, axis: Axis) -> BoundaryConditions {
        let b = match axis {
            Axis::X => self.boundary_x,
            Axis::Z => self.boundary_z,
        };
        let m = self.measurement(axis);
        BoundaryConditions {
            x_start: b.x_start,
            x_end: b.x_end,
            t_start: m.t_start,
            t_end: m.t_end,
        }
    }

    /// The axis problem with its configured record.
    pub fn axis(&self, axis: Axis) -> Result<AxisScenario> {
        let rec = render(
            self.record_spec(axis),
            self.measurement(axis),
            self.numerics.n_samples,
        )?;
        Ok(self.axis_with_record(axis, rec))
    }

    /// The axis problem with `record` in place of the configured one.
    pub fn axis_with_record(&self, axis: Axis, record: MeasurementRecord) -> AxisScenario {
        AxisScenario {
            params: self.trap,
            axis,
            measurement: *self.measurement(axis),
            record,
            boundary: self.boundary(axis),
        }
    }

    /// A joint probability needs both axes observed over the same window.
    pub fn check_joint_windows(&self) -> Result<()> {
        let (x, z) = (&self.measurement_x, &self.measurement_z);
        if x.t_start != z.t_start || x.t_end != z.t_end {
            return Err(Error::invalid(
                "measurement_z",
                format!(
                    "window [{}, {}] differs from x window [{}, {}]",
                    z.t_start, z.t_end, x.t_start, x.t_end
                ),
            ));
        }
        Ok(())
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions::with_tol(self.numerics.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[trap]
charge = 1.0
mass = 1.0
half_gap = 1.0
dc_voltage = 0.3
ac_voltage = 0.6
drive_omega = 2.0
hbar = 1.0

[measurement_x]
t_start = 0.0
t_end = 1.5
resolution = 2.0

[measurement_z]
t_start = 0.0
t_end = 1.5
resolution = inf

[boundary_x]
x_start = 0.1
x_end = -0.2

[boundary_z]
x_start = 0.0
x_end = 0.3

[record_x]
kind = "sinusoid"
amplitude = 0.4
omega = 1.1

[record_z]
kind = "samples"
values = [0.0, 0.1, 0.2, 0.1]

[numerics]
n_samples = 65
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let s = Scenario::from_toml_str(TEXT).unwrap();
        assert_eq!(s.numerics.n_samples, 65);
        assert_eq!(s.numerics.tol, 1e-10);
        assert!(!s.measurement_z.is_active());
        assert_eq!(
            s.record_x,
            RecordSpec::Sinusoid {
                amplitude: 0.4,
                omega: 1.1,
                phase: 0.0
            }
        );
        let z = s.axis(Axis::Z).unwrap();
        assert_eq!(z.record.len(), 4);
        assert_eq!(z.boundary.t_end, 1.5);
        s.check_joint_windows().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let s = Scenario::from_toml_str(TEXT).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn default_hbar_is_si() {
        let text = TEXT.replace("hbar = 1.0\n", "");
        let s = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s.trap.hbar, crate::trapmodel::HBAR);
    }

    #[test]
    fn unknown_and_bad_fields_are_rejected() {
        let typo = TEXT.replace("half_gap", "halfgap");
        assert!(matches!(
            Scenario::from_toml_str(&typo),
            Err(Error::InvalidParameter { .. })
        ));
        let bad = TEXT.replace("mass = 1.0", "mass = -1.0");
        assert!(matches!(
            Scenario::from_toml_str(&bad),
            Err(Error::InvalidParameter { field: "mass", .. })
        ));
        let kind = TEXT.replace("\"samples\"", "\"sawtooth\"");
        assert!(Scenario::from_toml_str(&kind).is_err());
    }

    #[test]
    fn mismatched_windows_block_joint() {
        let text = TEXT.replacen(
            "t_end = 1.5\nresolution = inf",
            "t_end = 1.4\nresolution = inf",
            1,
        );
        let s = Scenario::from_toml_str(&text).unwrap();
        assert!(matches!(
            s.check_joint_windows(),
            Err(Error::InvalidParameter {
                field: "measurement_z",
                ..
            })
        ));
    }
}
