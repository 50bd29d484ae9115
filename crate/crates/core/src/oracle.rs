//! Brute-force check of the restricted propagator: the time-sliced path
//! integral evaluated as an exact finite-dimensional Gaussian integral.
//!
//! Nothing here goes through the effective frequency or the classical path.
//! The integrand is built from the real trap frequency and the measurement
//! weight `exp{−λ∫(x − a)²}` directly, and the `N − 1` intermediate positions
//! are integrated out one after another.  Each elimination is a scalar
//! Gaussian integral, so the whole evaluation stays in the log domain and
//! costs `O(N)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagator::AxisScenario;
use crate::trapmodel::Axis;

type C64 = Complex64;

/// Where `w²`, the record and the weight are sampled inside a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Slice midpoints `t′ + (k + ½)ε`; second order in `ε`.
    #[default]
    Midpoint,
    /// Slice starts `t′ + kε`; first order, kept for convergence demos.
    LeftEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicedLattice {
    pub n_slices: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub epsilon: f64,
}

impl SlicedLattice {
    pub fn new(n_slices: usize, t_start: f64, t_end: f64) -> Result<Self> {
        if n_slices < 2 {
            return Err(Error::invalid(
                "n_slices",
                format!("need at least 2, got {n_slices}"),
            ));
        }
        if !(t_end > t_start) {
            return Err(Error::invalid(
                "window",
                format!("need t'' > t', got [{t_start}, {t_end}]"),
            ));
        }
        Ok(SlicedLattice {
            n_slices,
            t_start,
            t_end,
            epsilon: (t_end - t_start) / n_slices as f64,
        })
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_slices {
            self.t_end
        } else {
            self.t_start + k as f64 * self.epsilon
        }
    }

    pub fn sample_time(&self, k: usize, sampling: Sampling) -> f64 {
        match sampling {
            Sampling::Midpoint => self.t_start + (k as f64 + 0.5) * self.epsilon,
            Sampling::LeftEndpoint => self.node(k),
        }
    }
}

/// `∫ exp{c₂x² + c₁x} dx = √(π/a) · exp{c₁²/(4a)}` with `a = −c₂`.
fn log_gaussian(c2: C64, c1: C64) -> (C64, C64) {
    let a = -c2;
    (0.5 * (std::f64::consts::PI / a).ln(), c1 * c1 / (4.0 * a))
}

/// `ln U` on a lattice of `n` slices with midpoint sampling.
pub fn discrete_propagator(scenario: &AxisScenario, n: usize) -> Result<C64> {
    let b = &scenario.boundary;
    discrete_propagator_with(
        scenario,
        &SlicedLattice::new(n, b.t_start, b.t_end)?,
        Sampling::Midpoint,
    )
}

pub fn discrete_propagator_with(
    scenario: &AxisScenario,
    lattice: &SlicedLattice,
    sampling: Sampling,
) -> Result<C64> {
    scenario.validate()?;
    let p = &scenario.params;
    let (m, hbar) = (p.mass, p.hbar);
    let sign = match scenario.axis {
        Axis::X => 1.0,
        Axis::Z => -1.0,
    };
    let k_trap = sign * p.charge / (m * p.half_gap * p.half_gap);
    let (u, v, omega) = (k_trap * p.dc_voltage, k_trap * p.ac_voltage, p.drive_omega);
    let meas = &scenario.measurement;
    let lambda = if meas.resolution.is_finite() {
        2.0 / ((meas.t_end - meas.t_start) * meas.resolution * meas.resolution)
    } else {
        0.0
    };

    let n = lattice.n_slices;
    let eps = lattice.epsilon;
    let i = C64::new(0.0, 1.0);
    let kinetic = i * m / (2.0 * hbar * eps);

    // Exponent = Σ c2[j] x_j² + c1[j] x_j + Σ cross[k] x_k x_{k+1} + c0.
    let mut c2 = vec![C64::new(0.0, 0.0); n + 1];
    let mut c1 = vec![C64::new(0.0, 0.0); n + 1];
    let mut cross = vec![C64::new(0.0, 0.0); n];
    let mut c0 = C64::new(0.0, 0.0);
    for k in 0..n {
        let t = lattice.sample_time(k, sampling);
        let w2 = u - v * (omega * t).cos();
        let a = scenario.record.eval(t);
        let pot = 0.5 * eps * (-i * m * w2 / (2.0 * hbar) - lambda);
        for j in [k, k + 1] {
            c2[j] += pot + kinetic;
            c1[j] += eps * lambda * a;
        }
        cross[k] -= 2.0 * kinetic;
        c0 -= eps * lambda * a * a;
    }

    let (x1, x2) = (scenario.boundary.x_start, scenario.boundary.x_end);
    c0 += c2[0] * x1 * x1 + c1[0] * x1 + c2[n] * x2 * x2 + c1[n] * x2;
    c1[1] += cross[0] * x1;
    c1[n - 1] += cross[n - 1] * x2;
    cross[n - 1] = C64::new(0.0, 0.0);

    let pivot_floor = 1e-12 * m / (hbar * eps);
    let mut log = c0;
    for j in 1..n {
        if (-c2[j]).norm() < pivot_floor {
            return Err(Error::SingularSlice {
                index: j,
                n_slices: n,
                magnitude: c2[j].norm(),
            });
        }
        let a = -c2[j];
        let (norm, shift) = log_gaussian(c2[j], c1[j]);
        log += norm + shift;
        if j + 1 < n {
            let (cj, xj) = (c1[j], cross[j]);
            c2[j + 1] += xj * xj / (4.0 * a);
            c1[j + 1] += cj * xj / (2.0 * a);
        }
    }
    // (m / (2πiħε))^{N/2}
    let half_log = 0.5 * (m / (2.0 * std::f64::consts::PI * hbar * eps)).ln();
    let normalization = n as f64 * C64::new(half_log, -std::f64::consts::FRAC_PI_4);
    Ok(log + normalization)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: C64,
    pub error: f64,
}

/// One Richardson step for an `O(ε²)` sequence: `(4v₂ₙ − vₙ)/3`.
pub fn richardson(v_n: C64, v_2n: C64) -> Extrapolated {
    Extrapolated {
        value: (4.0 * v_2n - v_n) / 3.0,
        error: (v_2n - v_n).norm() / 3.0,
    }
}

/// Oracle at `n` and `2n` slices, extrapolated.
pub fn extrapolated_propagator(
    scenario: &AxisScenario,
    n: usize,
) -> Result<(C64, C64, Extrapolated)> {
    let (a, b) = rayon::join(
        || discrete_propagator(scenario, n),
        || discrete_propagator(scenario, 2 * n),
    );
    let (a, b) = (a?, b?);
    Ok((a, b, richardson(a, b)))
}
