//! Trap constants, per-axis frequency coefficients and the measurement-shifted
//! effective frequency.
//!
//! The monitored coordinate obeys `ẍ + w̃²(t) x = F(t)/m` with
//!
//! ```text
//! w̃²(t) = Ũ − V cos(ωt),      Ũ = U − 4iħ / (m T Δa²)
//! ```
//!
//! where `U = ±eŪ/(mr²)` and `V = ±eV̄/(mr²)` carry the sign of the axis
//! (`+` along x, `−` along z).  In the reduced time `t̃ = ωt/2` this is the
//! Mathieu equation `ψ'' + (p − 2q cos 2t̃) ψ = 0` with `p = 4Ũ/ω²`,
//! `q = 2V/ω²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (2018 SI value).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapParameters {
    /// Particle charge, C.
    pub charge: f64,
    /// Particle mass, kg.
    pub mass: f64,
    /// Half the electrode separation, m.
    pub half_gap: f64,
    /// DC electrode voltage Ū, V.
    pub dc_voltage: f64,
    /// RF amplitude V̄, V.
    pub ac_voltage: f64,
    /// RF drive angular frequency ω, rad/s.
    pub drive_omega: f64,
    /// ħ in J·s. Only overridden for unit-system experiments.
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    HBAR
}

impl TrapParameters {
    pub fn new(
        charge: f64,
        mass: f64,
        half_gap: f64,
        dc_voltage: f64,
        ac_voltage: f64,
        drive_omega: f64,
    ) -> Result<Self> {
        let params = TrapParameters {
            charge,
            mass,
            half_gap,
            dc_voltage,
            ac_voltage,
            drive_omega,
            hbar: HBAR,
        };
        params.validate()?;
        Ok(params)
    }

    /// Replaces ħ, e.g. `1.0` for natural-unit test problems.
    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("half_gap", self.half_gap)?;
        positive("drive_omega", self.drive_omega)?;
        positive("hbar", self.hbar)?;
        finite("charge", self.charge)?;
        finite("dc_voltage", self.dc_voltage)?;
        finite("ac_voltage", self.ac_voltage)?;
        Ok(())
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

fn finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite, got {value}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    /// Sign of the quadrupole potential along this axis.
    pub fn sign(self) -> f64 {
        match self {
            Axis::X => 1.0,
            Axis::Z => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Z => "z",
        }
    }
}

/// `U` and `V` in s⁻² for one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyCoefficients {
    pub u: f64,
    pub v: f64,
    pub axis: Axis,
}

/// Monitoring window and position resolution.
///
/// `resolution = f64::INFINITY` switches the measurement off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub resolution: f64,
}

impl MeasurementConfig {
    pub fn new(t_start: f64, t_end: f64, resolution: f64) -> Result<Self> {
        let meas = MeasurementConfig {
            t_start,
            t_end,
            resolution,
        };
        meas.validate()?;
        Ok(meas)
    }

    pub fn validate(&self) -> Result<()> {
        finite("t_start", self.t_start)?;
        finite("t_end", self.t_end)?;
        if !(self.t_end > self.t_start) {
            return Err(Error::invalid(
                "t_end",
                format!(
                    "window must have t_end > t_start ({} <= {})",
                    self.t_end, self.t_start
                ),
            ));
        }
        if self.resolution.is_nan() || self.resolution <= 0.0 {
            return Err(Error::invalid(
                "resolution",
                format!(
                    "must be > 0 (inf disables the measurement), got {}",
                    self.resolution
                ),
            ));
        }
        Ok(())
    }

    /// Duration T = t″ − t′.
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Gaussian weight strength λ = 2 / (T Δa²), in m⁻² s⁻¹.
    pub fn weight_strength(&self) -> f64 {
        2.0 / (self.duration() * self.resolution * self.resolution)
    }

    pub fn is_active(&self) -> bool {
        self.resolution.is_finite()
    }
}

/// A time-dependent squared frequency `w̃²(t)` of a linear oscillator.
pub trait Frequency: Sync {
    fn w2(&self, t: f64) -> Complex64;

    /// Period of `w̃²`, if it is periodic.
    fn period(&self) -> Option<f64> {
        None
    }
}

/// The Paul-trap frequency shifted by the measurement: `Ũ − V cos(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFrequencySpec {
    pub u_tilde: Complex64,
    pub v: f64,
    pub drive_omega: f64,
}

impl EffectiveFrequencySpec {
    /// A constant, real `ω₀²` (no drive).
    pub fn constant(omega0_sq: f64) -> Self {
        EffectiveFrequencySpec {
            u_tilde: Complex64::new(omega0_sq, 0.0),
            v: 0.0,
            drive_omega: 1.0,
        }
    }
}

impl Frequency for EffectiveFrequencySpec {
    fn w2(&self, t: f64) -> Complex64 {
        self.u_tilde - self.v * (self.drive_omega * t).cos()
    }

    fn period(&self) -> Option<f64> {
        if self.v == 0.0 {
            None
        } else {
            Some(2.0 * std::f64::consts::PI / self.drive_omega)
        }
    }
}

/// Mathieu parameters `p`, `q` and the series ratio `α = (p − 1 − q)/q`.
///
/// For a z-axis spec the same fields hold p̂, q̂ and β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub p: Complex64,
    pub q: f64,
    pub alpha: Complex64,
}

impl DimensionlessParams {
    pub fn new(p: Complex64, q: f64) -> Result<Self> {
        if q == 0.0 {
            return Err(Error::ZeroQ);
        }
        Ok(DimensionlessParams {
            p,
            q,
            alpha: (p - 1.0 - q) / q,
        })
    }
}

pub fn derive_frequency_coefficients(
    params: &TrapParameters,
    axis: Axis,
) -> Result<FrequencyCoefficients> {
    params.validate()?;
    let scale = axis.sign() * params.charge / (params.mass * params.half_gap * params.half_gap);
    Ok(FrequencyCoefficients {
        u: scale * params.dc_voltage,
        v: scale * params.ac_voltage,
        axis,
    })
}

/// Imaginary shift magnitude `4ħ/(m T Δa²)` of `Ũ`; zero with the measurement off.
pub fn measurement_damping(meas: &MeasurementConfig, params: &TrapParameters) -> f64 {
    if !meas.is_active() {
        return 0.0;
    }
    2.0 * params.hbar * meas.weight_strength() / params.mass
}

pub fn effective_frequency(
    coeffs: &FrequencyCoefficients,
    meas: &MeasurementConfig,
    params: &TrapParameters,
) -> EffectiveFrequencySpec {
    // 4ħ/(i m T Δa²) with 1/i = −i.
    let shift = Complex64::new(0.0, -measurement_damping(meas, params));
    EffectiveFrequencySpec {
        u_tilde: coeffs.u + shift,
        v: coeffs.v,
        drive_omega: params.drive_omega,
    }
}

pub fn dimensionless(spec: &EffectiveFrequencySpec) -> Result<DimensionlessParams> {
    let w2 = spec.drive_omega * spec.drive_omega;
    DimensionlessParams::new(4.0 * spec.u_tilde / w2, 2.0 * spec.v / w2)
}
