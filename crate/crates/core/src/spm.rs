//! Stationary-phase tunneling times.
//!
//! For a cell of width b with transmission phase δ(E), τ = δ′ + b/(2k). For N
//! cells with period s the closed-form phase φ_N gives τ_N = φ_N′ − s/(2k) + b/(2k),
//! which is the same as differentiating the full phase Φ = φ_N − kNs and adding
//! the free-flight term over the traversed length (N − 1)s + b.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::periodic::{t_periodic, PeriodicSpec};
use crate::potential::PiecewiseConstantPotential;
use crate::transfer::{self, unwrap_phase};

/// Default convergence tolerance for [`saturation_scan`].
pub const SATURATION_TOLERANCE: f64 = 1e-6;

/// Largest jump between neighbouring stencil phases (after unwrapping) that is
/// still treated as resolved.
const MAX_STENCIL_JUMP: f64 = std::f64::consts::FRAC_PI_2;

/// Finite-difference step for [`phase_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Step {
    /// h = max(|E|, 1)·ε^{1/3}.
    #[default]
    Auto,
    Fixed(f64),
}

impl Step {
    fn at(self, energy: f64) -> f64 {
        match self {
            Step::Auto => energy.abs().max(1.0) * f64::EPSILON.cbrt(),
            Step::Fixed(h) => h,
        }
    }
}

impl From<Option<f64>> for Step {
    fn from(h: Option<f64>) -> Self {
        h.map_or(Step::Auto, Step::Fixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMethod {
    NumericSpm,
    RectAnalytic,
    PeriodicSpm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelingTimeResult {
    pub tau: f64,
    /// δ′ (or φ_N′ for periodic systems).
    pub phase_derivative: f64,
    /// b/(2k), or (b − s)/(2k) for periodic systems.
    pub geometric_term: f64,
    pub method: TimeMethod,
    pub energy: f64,
}

impl TunnelingTimeResult {
    fn compose(
        phase_derivative: f64,
        geometric_term: f64,
        method: TimeMethod,
        energy: f64,
    ) -> Self {
        TunnelingTimeResult {
            tau: phase_derivative + geometric_term,
            phase_derivative,
            geometric_term,
            method,
            energy,
        }
    }
}

/// dφ/dE by the five-point central stencil (Richardson extrapolation of the
/// three-point difference), after unwrapping the stencil phases.
///
/// `phase_fn` may return wrapped phases. A near-singular point inside the
/// stencil, or neighbouring phases more than π/2 apart after unwrapping, is
/// reported as [`Error::ResonanceProximity`].
pub fn phase_derivative<F>(phase_fn: F, energy: f64, step: Step) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = step.at(energy);
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!(
            "derivative step must be positive, got {h}"
        )));
    }
    if !(energy.is_finite() && energy - 2.0 * h > 0.0) {
        return Err(invalid(format!(
            "stencil around E = {energy} with step {h} crosses E <= 0"
        )));
    }
    // representable step
    let h = (energy + h) - energy;

    let mut phases = [0.0; 5];
    for (slot, offset) in phases.iter_mut().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
        *slot = match phase_fn(energy + offset * h) {
            Ok(p) => p,
            Err(Error::NearSingular { .. }) | Err(Error::ResonanceProximity { .. }) => {
                return Err(Error::ResonanceProximity { energy })
            }
            Err(e) => return Err(e),
        };
    }
    let p = unwrap_phase(&phases);
    if p.windows(2).any(|w| (w[1] - w[0]).abs() > MAX_STENCIL_JUMP) {
        return Err(Error::ResonanceProximity { energy });
    }
    Ok((p[0] - 8.0 * p[1] + 8.0 * p[3] - p[4]) / (12.0 * h))
}

/// τ = δ′ + b/(2k) for a single cell.
pub fn tunneling_time_single(
    potential: &PiecewiseConstantPotential,
    energy: f64,
    step: Step,
) -> Result<TunnelingTimeResult> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid(format!("energy must be positive, got {energy}")));
    }
    // d/dE (δ + kb) = δ′ + b/2k; differentiating the delay avoids the
    // rounding carried by a phase of size kb
    let delay = phase_derivative(|e| transfer::phase_delay(potential, e), energy, step)?;
    let geometric = potential.width() / (2.0 * energy.sqrt());
    Ok(TunnelingTimeResult::compose(
        delay - geometric,
        geometric,
        TimeMethod::NumericSpm,
        energy,
    ))
}

/// Closed-form τ for a rectangular barrier in the tunneling regime 0 < E < V:
/// the energy derivative of arctan(A·tanh(qb)) with A = (k² − q²)/(2kq).
pub fn tunneling_time_rect_analytic(
    height: f64,
    width: f64,
    energy: f64,
) -> Result<TunnelingTimeResult> {
    check_regime(height, energy)?;
    if !(width.is_finite() && width > 0.0) {
        return Err(invalid(format!(
            "barrier width must be positive, got {width}"
        )));
    }
    let q = (height - energy).sqrt();
    let p = energy * (height - energy); // (kq)²
    let a = (2.0 * energy - height) / (2.0 * p.sqrt());
    // dA/dE = V²/(4 (kq)³)
    let da = height * height / (4.0 * p * p.sqrt());
    let decay = (-2.0 * q * width).exp();
    let tanh = (1.0 - decay) / (1.0 + decay);
    let sech2 = 4.0 * decay / ((1.0 + decay) * (1.0 + decay));
    // d tanh(qb)/dE = −b sech²(qb) / (2q)
    let dtanh = -width * sech2 / (2.0 * q);
    let tau = (da * tanh + a * dtanh) / (1.0 + a * a * tanh * tanh);
    Ok(TunnelingTimeResult {
        tau,
        phase_derivative: tau - width / (2.0 * energy.sqrt()),
        geometric_term: width / (2.0 * energy.sqrt()),
        method: TimeMethod::RectAnalytic,
        energy,
    })
}

/// Thick-barrier limit 1/(qk) of the rectangular tunneling time.
pub fn hartman_limit_rect(height: f64, energy: f64) -> Result<f64> {
    check_regime(height, energy)?;
    Ok(1.0 / ((height - energy).sqrt() * energy.sqrt()))
}

fn check_regime(height: f64, energy: f64) -> Result<()> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid(format!("energy must be positive, got {energy}")));
    }
    if !height.is_finite() {
        return Err(invalid(format!(
            "barrier height must be finite, got {height}"
        )));
    }
    if energy >= height {
        return Err(Error::OutOfRegime { energy, height });
    }
    Ok(())
}

/// Closed-form periodic phase φ_N at `energy`; near-singular points are errors.
pub fn periodic_phase(
    cell: &PiecewiseConstantPotential,
    spec: &PeriodicSpec,
    energy: f64,
) -> Result<f64> {
    let trans = transfer::transmission_of(cell, energy)?;
    let p = t_periodic(&trans, spec, energy.sqrt());
    if p.near_singular {
        return Err(Error::NearSingular { chi: p.chi });
    }
    Ok(p.phi_n)
}

/// τ_N = φ_N′ − s/(2k) + b/(2k).
pub fn tunneling_time_periodic(
    cell: &PiecewiseConstantPotential,
    spec: &PeriodicSpec,
    energy: f64,
    step: Step,
) -> Result<TunnelingTimeResult> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid(format!("energy must be positive, got {energy}")));
    }
    let d = phase_derivative(|e| periodic_phase(cell, spec, e), energy, step)?;
    let k = energy.sqrt();
    let geometric = (cell.width() - spec.period()) / (2.0 * k);
    Ok(TunnelingTimeResult::compose(
        d,
        geometric,
        TimeMethod::PeriodicSpm,
        energy,
    ))
}

/// Thickness scan of the single-cell tunneling time.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationScan {
    pub thickness: Vec<f64>,
    /// τ(b) per grid point; `None` where the point was excluded.
    pub tau: Vec<Option<f64>>,
    /// Thicknesses dropped because of resonance proximity.
    pub excluded: Vec<f64>,
    pub tau_0_estimate: Option<f64>,
    pub converged: bool,
}

/// Evaluates τ(b) for `cell_family(b)` over an increasing thickness grid.
///
/// Converged when, over the last three evaluated points, both successive
/// absolute differences are below `tolerance` and the later one does not
/// exceed the earlier (differences under 1e−3·`tolerance` count as rounding
/// and are not ordered). The estimate of τ₀ is the last evaluated value.
pub fn saturation_scan<F>(
    cell_family: F,
    energy: f64,
    thickness: &[f64],
    tolerance: f64,
    step: Step,
) -> Result<SaturationScan>
where
    F: Fn(f64) -> Result<PiecewiseConstantPotential> + Sync,
{
    if thickness.len() < 4 {
        return Err(invalid("saturation scan needs at least 4 thickness points"));
    }
    if thickness.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("thickness grid must be strictly increasing"));
    }
    if !(tolerance > 0.0) {
        return Err(invalid(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }

    let tau = thickness
        .par_iter()
        .map(|&b| {
            let cell = cell_family(b)?;
            match tunneling_time_single(&cell, energy, step) {
                Ok(r) => Ok(Some(r.tau)),
                Err(Error::ResonanceProximity { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let excluded = thickness
        .iter()
        .zip(&tau)
        .filter(|(_, t)| t.is_none())
        .map(|(&b, _)| b)
        .collect();
    let values: Vec<f64> = tau.iter().flatten().copied().collect();
    let converged = match values.as_slice() {
        [.., a, b, c] => {
            let (d1, d2) = ((b - a).abs(), (c - b).abs());
            let floor = 1e-3 * tolerance;
            d1 < tolerance && d2 < tolerance && (d2 <= d1 || d2 < floor)
        }
        _ => false,
    };

    Ok(SaturationScan {
        thickness: thickness.to_vec(),
        tau_0_estimate: values.last().copied(),
        tau,
        excluded,
        converged,
    })
}
