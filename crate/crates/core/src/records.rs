//! Candidate measurement outputs `a(t)` on a uniform grid, and the two
//! functionals of them the propagator needs: the forcing
//! `F(t) = −4iħ a(t) / (T Δa²)` and the norm integral `∫ a² dt`.
//!
//! Records are piecewise linear between samples; every integral of them is
//! done exactly on that interpolant.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trapmodel::{MeasurementConfig, TrapParameters};

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl MeasurementRecord {
    pub fn new(t_start: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::BadGrid(samples.len()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("samples", format!("non-finite value {bad}")));
        }
        Ok(MeasurementRecord {
            t_start,
            dt,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Segment index holding `t`, clamped to the record.
    pub fn segment(&self, t: f64) -> usize {
        let s = ((t - self.t_start) / self.dt).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.samples.len() - 2)
        }
    }

    /// Piecewise-linear value; constant extrapolation outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let s = ((t - self.time(k)) / self.dt).clamp(0.0, 1.0);
        self.samples[k] + s * (self.samples[k + 1] - self.samples[k])
    }

    pub fn scaled(&self, lambda: f64) -> MeasurementRecord {
        MeasurementRecord {
            t_start: self.t_start,
            dt: self.dt,
            samples: self.samples.iter().map(|v| lambda * v).collect(),
        }
    }

    /// Checks that the record spans exactly `[t′, t″]` of `meas`.
    pub fn check_window(&self, meas: &MeasurementConfig) -> Result<()> {
        let slack = 1e-9 * meas.duration();
        if (self.t_start - meas.t_start).abs() > slack || (self.t_end() - meas.t_end).abs() > slack
        {
            return Err(Error::RecordWindowMismatch {
                record_start: self.t_start,
                record_end: self.t_end(),
                window_start: meas.t_start,
                window_end: meas.t_end,
            });
        }
        Ok(())
    }

    /// Reads a `time_s,value_m` CSV with a header row and uniform spacing.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::invalid("record", e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "time_s" || &headers[1] != "value_m" {
            return Err(Error::invalid(
                "record",
                format!(
                    "expected header `time_s,value_m`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::invalid("record", e.to_string()))?;
            let parse = |i: usize| -> Result<f64> {
                row.get(i)
                    .ok_or_else(|| {
                        Error::invalid("record", format!("row {}: missing column", line + 2))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::invalid("record", format!("row {}: {e}", line + 2)))
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        if times.len() < 2 {
            return Err(Error::BadGrid(times.len()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            let expected = times[0] + k as f64 * dt;
            if (t - expected).abs() > 1e-6 * dt {
                return Err(Error::invalid(
                    "record",
                    format!("time column is not uniformly spaced at row {}", k + 2),
                ));
            }
        }
        MeasurementRecord::new(times[0], dt, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        let io = |e: csv::Error| Error::invalid("record", e.to_string());
        w.write_record(["time_s", "value_m"]).map_err(io)?;
        for (k, v) in self.samples.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.time(k)), format!("{v:.16e}")])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::invalid("record", e.to_string()))?;
        Ok(())
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid("record", format!("{}: {e}", path.display())))?;
        Self::read_csv(file)
    }
}

/// Parametric record families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RecordSpec {
    Constant {
        amplitude: f64,
    },
    /// `A cos(Ω t + φ)` in absolute time.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Samples {
        values: Vec<f64>,
    },
}

pub fn render(
    spec: &RecordSpec,
    meas: &MeasurementConfig,
    n_samples: usize,
) -> Result<MeasurementRecord> {
    let n = match spec {
        RecordSpec::Samples { values } => values.len(),
        _ => n_samples,
    };
    if n < 2 {
        return Err(Error::BadGrid(n));
    }
    let dt = meas.duration() / (n - 1) as f64;
    let samples = match spec {
        RecordSpec::Constant { amplitude } => vec![*amplitude; n],
        RecordSpec::Sinusoid {
            amplitude,
            omega,
            phase,
        } => (0..n)
            .map(|k| amplitude * (omega * (meas.t_start + k as f64 * dt) + phase).cos())
            .collect(),
        RecordSpec::Samples { values } => values.clone(),
    };
    MeasurementRecord::new(meas.t_start, dt, samples)
}

/// `∫ a²(t) dt` over the record, exact for the piecewise-linear interpolant.
pub fn record_norm_integral(rec: &MeasurementRecord) -> f64 {
    rec.samples
        .windows(2)
        .map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
        .sum::<f64>()
        * rec.dt
}

/// The exponent `−(2 / (T Δa²)) ∫ a² dt` of the weight functional.
pub fn record_term(rec: &MeasurementRecord, meas: &MeasurementConfig) -> f64 {
    if !meas.is_active() {
        return 0.0;
    }
    -meas.weight_strength() * record_norm_integral(rec)
}

/// Sampled complex forcing on the record grid, linear between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub t_start: f64,
    pub dt: f64,
    pub values: Vec<C64>,
}

impl Forcing {
    pub fn zero(t_start: f64, t_end: f64) -> Self {
        Forcing {
            t_start,
            dt: t_end - t_start,
            values: vec![C64::new(0.0, 0.0); 2],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }

    pub fn segment(&self, t: f64) -> usize {
        let s = ((t - self.t_start) / self.dt).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.values.len() - 2)
        }
    }

    pub fn node_time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn eval(&self, t: f64) -> C64 {
        let k = self.segment(t);
        let s = ((t - self.node_time(k)) / self.dt).clamp(0.0, 1.0);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }

    /// Value at `origin + tau`, with the offset from the grid start formed
    /// before adding `tau` so that small `tau` keeps full relative precision.
    pub fn eval_local(&self, origin: f64, tau: f64) -> C64 {
        let d = (origin - self.t_start) + tau;
        let s = (d / self.dt).floor();
        let k = if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.values.len() - 2)
        };
        let u = ((d - k as f64 * self.dt) / self.dt).clamp(0.0, 1.0);
        self.values[k] + u * (self.values[k + 1] - self.values[k])
    }

    /// Slope `dF/dt` on segment `k`.
    pub fn slope(&self, k: usize) -> C64 {
        (self.values[k + 1] - self.values[k]) / self.dt
    }

    /// Interior node times, where the forcing has kinks.
    pub fn knots(&self) -> Vec<f64> {
        if self.is_zero() {
            return Vec::new();
        }
        (1..self.values.len() - 1)
            .map(|k| self.node_time(k))
            .collect()
    }

    pub fn add(&self, other: &Forcing) -> Forcing {
        assert_eq!(self.values.len(), other.values.len());
        Forcing {
            t_start: self.t_start,
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

pub fn forcing(
    rec: &MeasurementRecord,
    meas: &MeasurementConfig,
    params: &TrapParameters,
) -> Forcing {
    // 4ħ/(i T Δa²) = −4iħ/(T Δa²) = −2iħλ
    let factor = if meas.is_active() {
        C64::new(0.0, -2.0 * params.hbar * meas.weight_strength())
    } else {
        C64::new(0.0, 0.0)
    };
    Forcing {
        t_start: rec.t_start,
        dt: rec.dt,
        values: rec.samples.iter().map(|a| factor * a).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trapmodel::ELEMENTARY_CHARGE;
    use proptest::prelude::*;

    fn meas() -> MeasurementConfig {
        MeasurementConfig::new(0.0, 30.0, 2e-6).unwrap()
    }

    #[test]
    fn render_families() {
        let m = meas();
        let zero = render(&RecordSpec::Constant { amplitude: 0.0 }, &m, 11).unwrap();
        assert!(zero.samples.iter().all(|v| *v == 0.0));
        let sin = render(
            &RecordSpec::Sinusoid {
                amplitude: 3e-6,
                omega: 2.0,
                phase: 0.0,
            },
            &m,
            101,
        )
        .unwrap();
        assert_eq!(sin.samples[0], 3e-6);
        assert_eq!(sin.t_start, 0.0);
        assert!((sin.t_end() - 30.0).abs() < 1e-12);
        let values = vec![1e-6, -2e-6, 0.5e-6, 0.0];
        let s = render(
            &RecordSpec::Samples {
                values: values.clone(),
            },
            &m,
            999,
        )
        .unwrap();
        assert_eq!(s.samples, values);
        assert!((s.dt - 10.0).abs() < 1e-12);
        assert_eq!(
            render(&RecordSpec::Constant { amplitude: 1.0 }, &m, 1),
            Err(Error::BadGrid(1))
        );
    }

    #[test]
    fn norm_integral_exact_cases() {
        let m = meas();
        let c = render(&RecordSpec::Constant { amplitude: 1.5e-6 }, &m, 7).unwrap();
        assert_eq!(record_norm_integral(&c), 1.5e-6 * 1.5e-6 * 30.0);
        let z = render(&RecordSpec::Constant { amplitude: 0.0 }, &m, 7).unwrap();
        assert_eq!(record_norm_integral(&z), 0.0);
    }

    #[test]
    fn norm_integral_of_sinusoid() {
        // Two full periods over T = 30 s, dense grid.
        let m = meas();
        let omega = 2.0 * std::f64::consts::PI * 2.0 / 30.0;
        let a = 2e-6;
        let r = render(
            &RecordSpec::Sinusoid {
                amplitude: a,
                omega,
                phase: 0.3,
            },
            &m,
            10_000,
        )
        .unwrap();
        let exact = a * a * 30.0 / 2.0;
        assert!(((record_norm_integral(&r) - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn refinement_is_second_order() {
        let m = MeasurementConfig::new(0.0, 2.0, 1.0).unwrap();
        let spec = RecordSpec::Sinusoid {
            amplitude: 1.0,
            omega: 3.1,
            phase: 0.2,
        };
        let exact = {
            // ∫ cos²(Ωt+φ) = t/2 + sin(2(Ωt+φ))/(4Ω)
            let g = |t: f64| t / 2.0 + (2.0 * (3.1 * t + 0.2)).sin() / (4.0 * 3.1);
            g(2.0) - g(0.0)
        };
        let err = |n: usize| (record_norm_integral(&render(&spec, &m, n).unwrap()) - exact).abs();
        let (e1, e2) = (err(101), err(201));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn forcing_of_constant_record() {
        let m = meas();
        let p = TrapParameters::new(ELEMENTARY_CHARGE, 2.28e-25, 8e-3, 10.0, 100.0, 2e6).unwrap();
        let r = render(&RecordSpec::Constant { amplitude: 1e-6 }, &m, 5).unwrap();
        let f = forcing(&r, &m, &p);
        for v in &f.values {
            assert_eq!(v.re, 0.0);
            assert!(v.im < 0.0);
            assert!(((v.norm() - 3.515e-30) / 3.515e-30).abs() < 1e-3, "{v}");
        }
        let z = forcing(
            &render(&RecordSpec::Constant { amplitude: 0.0 }, &m, 5).unwrap(),
            &m,
            &p,
        );
        assert!(z.is_zero());
    }

    #[test]
    fn forcing_off_without_measurement() {
        let m = MeasurementConfig::new(0.0, 1.0, f64::INFINITY).unwrap();
        let p = TrapParameters::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = render(&RecordSpec::Constant { amplitude: 2.0 }, &m, 3).unwrap();
        assert!(forcing(&r, &m, &p).is_zero());
        assert_eq!(record_term(&r, &m), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let m = meas();
        let r = render(
            &RecordSpec::Sinusoid {
                amplitude: 1e-6,
                omega: 0.7,
                phase: 1.0,
            },
            &m,
            31,
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("time_s,value_m\n"));
        let back = MeasurementRecord::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples, r.samples);
        assert!((back.dt - r.dt).abs() < 1e-12);
        back.check_window(&m).unwrap();
    }

    #[test]
    fn csv_needs_header_and_uniform_grid() {
        let no_header = "0.0,1.0\n1.0,2.0\n";
        assert!(MeasurementRecord::read_csv(no_header.as_bytes()).is_err());
        let ragged = "time_s,value_m\n0,1\n1,2\n3,4\n";
        assert!(MeasurementRecord::read_csv(ragged.as_bytes()).is_err());
    }

    #[test]
    fn window_mismatch_detected() {
        let r = MeasurementRecord::new(0.0, 1.0, vec![0.0; 5]).unwrap();
        assert!(r
            .check_window(&MeasurementConfig::new(0.0, 4.0, 1.0).unwrap())
            .is_ok());
        assert!(matches!(
            r.check_window(&MeasurementConfig::new(0.0, 5.0, 1.0).unwrap()),
            Err(Error::RecordWindowMismatch { .. })
        ));
    }

    fn arb_record() -> impl Strategy<Value = MeasurementRecord> {
        prop::collection::vec(-1e-5f64..1e-5, 2..40)
            .prop_map(|s| MeasurementRecord::new(0.0, 30.0 / (s.len() - 1) as f64, s).unwrap())
    }

    proptest! {
        #[test]
        fn norm_integral_is_quadratic_and_nonnegative(r in arb_record(), lam in -50.0f64..50.0) {
            let base = record_norm_integral(&r);
            prop_assert!(base >= 0.0);
            if r.samples.iter().any(|v| *v != 0.0) {
                prop_assert!(base > 0.0);
            }
            let scaled = record_norm_integral(&r.scaled(lam));
            prop_assert!((scaled - lam * lam * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
        }

        #[test]
        fn forcing_is_linear(
            a in prop::collection::vec(-1e-5f64..1e-5, 8),
            b in prop::collection::vec(-1e-5f64..1e-5, 8),
        ) {
            let m = meas();
            let p = TrapParameters::new(ELEMENTARY_CHARGE, 2.28e-25, 8e-3, 10.0, 100.0, 2e6).unwrap();
            let ra = MeasurementRecord::new(0.0, 30.0 / 7.0, a.clone()).unwrap();
            let rb = MeasurementRecord::new(0.0, 30.0 / 7.0, b.clone()).unwrap();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let rs = MeasurementRecord::new(0.0, 30.0 / 7.0, sum).unwrap();
            let fab = forcing(&ra, &m, &p).add(&forcing(&rb, &m, &p));
            let fs = forcing(&rs, &m, &p);
            for (x, y) in fab.values.iter().zip(&fs.values) {
                prop_assert!((x - y).norm() <= 1e-12 * y.norm().max(1e-40));
            }
        }
    }
}
