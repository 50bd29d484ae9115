//! The Mathieu equation `ψ'' + (p − 2q cos 2t̃) ψ = 0` in reduced time.
//!
//! Two routes are provided: the even cosine series with at most four odd
//! harmonics (`cos t̃, cos 3t̃, cos 5t̃, cos 7t̃`), and a numeric integrator
//! that serves as the reference for it.  The series is only a truncation; its
//! residual is available in closed form as a cosine sum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::trapmodel::{DimensionlessParams, Frequency};

type C64 = Complex64;

pub const MAX_TERMS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    /// `c₁, c₃, …` in order of harmonic `2k + 1`.
    pub coefficients: Vec<C64>,
    pub params: DimensionlessParams,
}

impl SeriesCoefficients {
    pub fn n_terms(&self) -> usize {
        self.coefficients.len()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| ((2 * k + 1) as f64, *c))
    }
}

pub fn mathieu_series(params: &DimensionlessParams, n_terms: usize) -> Result<SeriesCoefficients> {
    if !(1..=MAX_TERMS).contains(&n_terms) {
        return Err(Error::OutOfRange {
            what: "n_terms",
            value: n_terms as i64,
            range: "1..=4",
        });
    }
    let (p, q) = (params.p, params.q);
    if q == 0.0 {
        return Err(Error::ZeroQ);
    }
    let c3 = (p - 1.0 - q) / q;
    let c5_num = (p - 9.0) * (p - 1.0 - q) - q * q;
    let c5 = c5_num / (q * q);
    let c7 = (p - 25.0) * c5_num / (q * q * q);
    let all = [C64::new(1.0, 0.0), c3, c5, c7];
    Ok(SeriesCoefficients {
        coefficients: all[..n_terms].to_vec(),
        params: *params,
    })
}

pub fn evaluate_f(coeffs: &SeriesCoefficients, t_tilde: f64) -> C64 {
    coeffs.terms().map(|(n, c)| c * (n * t_tilde).cos()).sum()
}

pub fn evaluate_f_derivative(coeffs: &SeriesCoefficients, t_tilde: f64) -> C64 {
    -coeffs
        .terms()
        .map(|(n, c)| n * c * (n * t_tilde).sin())
        .sum::<C64>()
}

pub fn evaluate_f_second_derivative(coeffs: &SeriesCoefficients, t_tilde: f64) -> C64 {
    -coeffs
        .terms()
        .map(|(n, c)| n * n * c * (n * t_tilde).cos())
        .sum::<C64>()
}

/// Cosine coefficients `(harmonic, r_j)` of `f'' + (p − 2q cos 2t̃) f` for the
/// truncated series.  Harmonics with an exactly zero coefficient are kept.
pub fn residual_coefficients(coeffs: &SeriesCoefficients) -> Vec<(u32, C64)> {
    let (p, q) = (coeffs.params.p, coeffs.params.q);
    let n = coeffs.n_terms();
    let mut out: Vec<C64> = vec![C64::new(0.0, 0.0); n + 1];
    for (k, c) in coeffs.coefficients.iter().enumerate() {
        let h = (2 * k + 1) as f64;
        out[k] += c * (p - h * h);
        // −2q cos 2t̃ · c cos(h t̃) = −q c [cos((h+2)t̃) + cos((h−2)t̃)]
        out[k + 1] -= q * c;
        if k == 0 {
            out[0] -= q * c; // cos(−t̃) = cos t̃
        } else {
            out[k - 1] -= q * c;
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(k, r)| ((2 * k + 1) as u32, r))
        .collect()
}

pub fn residual(coeffs: &SeriesCoefficients, t_tilde: f64) -> C64 {
    residual_coefficients(coeffs)
        .into_iter()
        .map(|(h, r)| r * (h as f64 * t_tilde).cos())
        .sum()
}

/// Largest |residual| over `[a, b]`, sampled on `samples` uniform points.
pub fn max_residual(coeffs: &SeriesCoefficients, a: f64, b: f64, samples: usize) -> f64 {
    let n = samples.max(2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .map(|t| residual(coeffs, t).norm())
        .fold(0.0, f64::max)
}

/// Bound on |f(t̃) − ψ(t̃)| for the exact solution ψ with the same value and
/// slope at t̃ = 0, from the comparison problem `E'' = K E + R`:
/// `E(t̃) = R (cosh(√K t̃) − 1) / K`, `K = |p| + 2|q|`, `R = max |residual|` on `[0, t̃]`.
pub fn truncation_error_bound(coeffs: &SeriesCoefficients, t_tilde: f64) -> f64 {
    let k = coeffs.params.p.norm() + 2.0 * coeffs.params.q.abs();
    let r = max_residual(coeffs, 0.0, t_tilde, 2001);
    if k == 0.0 {
        return 0.5 * r * t_tilde * t_tilde;
    }
    r * ((k.sqrt() * t_tilde).cosh() - 1.0) / k
}

/// `p` and `q` of a Mathieu equation without requiring `q ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuEquation {
    pub p: C64,
    pub q: f64,
}

impl From<DimensionlessParams> for MathieuEquation {
    fn from(d: DimensionlessParams) -> Self {
        MathieuEquation { p: d.p, q: d.q }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub grid: Vec<f64>,
    pub psi: Vec<C64>,
    pub psi_dot: Vec<C64>,
}

/// Integrates the Mathieu equation over `span` from `(ψ₀, ψ̇₀)`.
///
/// With `t_eval` the solution is reported exactly at those points (they must
/// be ascending and inside the span); otherwise at every accepted step.
pub fn integrate_mathieu_ode(
    eq: MathieuEquation,
    span: (f64, f64),
    init: (C64, C64),
    tol: f64,
    t_eval: Option<&[f64]>,
) -> Result<OdeSolution> {
    let (a, b) = span;
    let rhs = |t: f64, y: &[C64; 2]| [y[1], -(eq.p - 2.0 * eq.q * (2.0 * t).cos()) * y[0]];
    let mut sol = OdeSolution {
        grid: vec![a],
        psi: vec![init.0],
        psi_dot: vec![init.1],
    };
    let stops: Vec<f64> = match t_eval {
        Some(ts) => {
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("t_eval", "must be strictly ascending"));
            }
            if ts.iter().any(|&t| t < a || t > b) {
                return Err(Error::invalid("t_eval", "points must lie inside the span"));
            }
            ts.to_vec()
        }
        None => Vec::new(),
    };
    let keep_all = t_eval.is_none();
    ode::integrate(
        rhs,
        a,
        [init.0, init.1],
        b,
        &stops,
        &OdeOptions::with_tol(tol),
        |s| {
            if keep_all || stops.contains(&s.t1) {
                sol.grid.push(s.t1);
                sol.psi.push(s.y1[0]);
                sol.psi_dot.push(s.y1[1]);
            }
        },
    )?;
    if let Some(ts) = t_eval {
        // Keep exactly the requested points.
        let mut grid = Vec::with_capacity(ts.len());
        let mut psi = Vec::with_capacity(ts.len());
        let mut psi_dot = Vec::with_capacity(ts.len());
        for &t in ts {
            if let Some(i) = sol.grid.iter().position(|&g| g == t) {
                grid.push(t);
                psi.push(sol.psi[i]);
                psi_dot.push(sol.psi_dot[i]);
            }
        }
        sol = OdeSolution { grid, psi, psi_dot };
    }
    Ok(sol)
}

/// The squared frequency for which a truncated series is an exact solution:
/// `w̃²_f(t) = −f̈(t)/f(t)` with `f(t) = Σ cₖ cos((2k+1) ωt/2)`.
#[derive(Debug, Clone)]
pub struct SeriesFrequency {
    pub coeffs: SeriesCoefficients,
    pub drive_omega: f64,
}

impl SeriesFrequency {
    pub fn f(&self, t: f64) -> C64 {
        evaluate_f(&self.coeffs, 0.5 * self.drive_omega * t)
    }

    pub fn f_dot(&self, t: f64) -> C64 {
        0.5 * self.drive_omega * evaluate_f_derivative(&self.coeffs, 0.5 * self.drive_omega * t)
    }
}

impl Frequency for SeriesFrequency {
    fn w2(&self, t: f64) -> C64 {
        let tt = 0.5 * self.drive_omega * t;
        let scale = 0.25 * self.drive_omega * self.drive_omega;
        -scale * evaluate_f_second_derivative(&self.coeffs, tt) / evaluate_f(&self.coeffs, tt)
    }

    fn period(&self) -> Option<f64> {
        Some(2.0 * std::f64::consts::PI / self.drive_omega)
    }
}
