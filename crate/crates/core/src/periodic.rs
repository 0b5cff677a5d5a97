//! Transmission through N copies of a unit cell separated by free gaps.
//!
//! If the cell has t₁ = 1/M₁ with M₁ = √v·e^{−iδ} and the copies start at
//! multiples of the period s = b + L, then
//!
//! ```text
//! t_N = e^{−ikNs} / (M₁ e^{−iks} U_{N−1}(χ) − U_{N−2}(χ)),   χ = √v cos(δ + ks)
//! ```
//!
//! and the denominator equals T_N(χ) − i √v sin(δ + ks) U_{N−1}(χ). The
//! Chebyshev values grow like (2χ)^{N−1}, so they are carried with a separate
//! log scale, and the whole denominator is log-scaled so that cells with √v
//! far beyond the f64 range still evaluate.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::potential::{PiecewiseConstantPotential, Segment};
use crate::transfer::{self, wrap_phase, TransmissionCoefficient};

/// Both |T̃_N| and the scaled numerator below this mark a near-singular point.
pub const NEAR_SINGULAR: f64 = 1e-12;

// ln √v above which √v·sin is folded into the log scale.
const LOG_SQRT_V_DIRECT: f64 = 600.0;
// ln|χ| above which U_{N-1}(χ) = (2χ)^{N-1} to full precision.
const LOG_CHI_ASYMPTOTIC: f64 = 300.0;

/// Repetition count N, gap L and the resulting period s = b + L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSpec {
    repetitions: usize,
    gap: f64,
    cell_width: f64,
}

impl PeriodicSpec {
    pub fn new(repetitions: usize, gap: f64, cell_width: f64) -> Result<Self> {
        if repetitions == 0 {
            return Err(invalid("repetition count N must be at least 1"));
        }
        if !(gap.is_finite() && gap >= 0.0) {
            return Err(invalid(format!(
                "gap L must be finite and non-negative, got {gap}"
            )));
        }
        if !(cell_width.is_finite() && cell_width > 0.0) {
            return Err(invalid(format!(
                "cell width must be positive, got {cell_width}"
            )));
        }
        Ok(PeriodicSpec {
            repetitions,
            gap,
            cell_width,
        })
    }

    pub fn for_cell(
        cell: &PiecewiseConstantPotential,
        repetitions: usize,
        gap: f64,
    ) -> Result<Self> {
        Self::new(repetitions, gap, cell.width())
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    /// s = b + L.
    pub fn period(&self) -> f64 {
        self.cell_width + self.gap
    }

    /// (N − 1)s + b.
    pub fn total_width(&self) -> f64 {
        (self.repetitions - 1) as f64 * self.period() + self.cell_width
    }
}

/// Point-level result of the Chebyshev closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicTransmission {
    /// χ = √v cos(δ + ks); infinite when √v itself overflows.
    pub chi: f64,
    /// φ_N, wrapped to (−π, π].
    pub phi_n: f64,
    /// Φ = φ_N − kNs (not wrapped).
    pub big_phase: f64,
    /// ln|t_N|.
    pub log_magnitude: f64,
    pub energy: f64,
    /// Set when T_N and the sine term both (nearly) vanish in scaled units.
    pub near_singular: bool,
}

impl PeriodicTransmission {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.big_phase)
    }
}

/// χ = √v·cos(δ + ks).
pub fn chi(trans: &TransmissionCoefficient, k: f64, period: f64) -> f64 {
    trans.log_sqrt_v().exp() * (trans.phase + k * period).cos()
}

/// σ_N = U_{N−2}(χ)/U_{N−1}(χ) and ρ_N = U_{N−1}(χ)/T_N(χ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevRatios {
    pub sigma: f64,
    pub rho: f64,
}

/// Continued-fraction evaluation σ₁ = 0, σ_{j+1} = 1/(2χ − σ_j), ρ_N = 1/(χ − σ_N).
///
/// A vanishing pivot means U_j(χ) or T_N(χ) is (numerically) zero and is
/// reported as [`Error::NearSingular`].
pub fn chebyshev_ratios(chi: f64, n: usize) -> Result<ChebyshevRatios> {
    if n == 0 {
        return Err(invalid("Chebyshev ratio order N must be at least 1"));
    }
    if chi.is_nan() {
        return Err(invalid("chi is NaN"));
    }
    let tiny = f64::EPSILON * chi.abs().max(1.0);
    let mut sigma = 0.0;
    for _ in 1..n {
        let pivot = 2.0 * chi - sigma;
        if pivot.abs() < tiny {
            return Err(Error::NearSingular { chi });
        }
        sigma = 1.0 / pivot;
    }
    let pivot = chi - sigma;
    if pivot.abs() < tiny {
        return Err(Error::NearSingular { chi });
    }
    Ok(ChebyshevRatios {
        sigma,
        rho: 1.0 / pivot,
    })
}

/// (U_{n−1}(χ), U_{n−2}(χ)) as stored values times e^{log_scale}, by the
/// forward recurrence U_j = 2χU_{j−1} − U_{j−2} with power-of-two renormalisation.
fn chebyshev_u_scaled(chi: f64, n: usize) -> (f64, f64, f64) {
    let (mut prev, mut cur, mut log_scale) = (0.0f64, 1.0f64, 0.0f64);
    for _ in 1..n {
        let next = 2.0 * chi * cur - prev;
        prev = cur;
        cur = next;
        let max = cur.abs().max(prev.abs());
        if max > 1.0 && max.is_finite() {
            let exp = max.log2().floor() as i32;
            let f = 2f64.powi(-exp);
            cur *= f;
            prev *= f;
            log_scale += f64::from(exp) * std::f64::consts::LN_2;
        }
    }
    (cur, prev, log_scale)
}

/// Closed-form N-cell transmission from the single-cell coefficient.
pub fn t_periodic(
    trans: &TransmissionCoefficient,
    spec: &PeriodicSpec,
    k: f64,
) -> PeriodicTransmission {
    let n = spec.repetitions();
    let s = spec.period();
    let theta = trans.phase + k * s;
    let (sin_t, cos_t) = theta.sin_cos();
    let log_sqrt_v = trans.log_sqrt_v();
    let log_abs_chi = log_sqrt_v + cos_t.abs().ln();

    // Denominator D = e^{log_d} · e^{i arg_d}; φ_N = −arg D.
    let (log_d, arg_d, near_singular) = if log_abs_chi > LOG_CHI_ASYMPTOTIC {
        // U_{N−1} = (2χ)^{N−1}(1 + O(χ⁻²)) and T_N − ... collapses to √v e^{−iθ} U_{N−1}.
        let flips = if cos_t < 0.0 { (n - 1) % 2 } else { 0 };
        let log_u = (n - 1) as f64 * (std::f64::consts::LN_2 + log_abs_chi);
        (
            log_sqrt_v + log_u,
            -theta + flips as f64 * std::f64::consts::PI,
            false,
        )
    } else {
        let chi = cos_t.signum() * log_abs_chi.exp();
        let (u1, u2, log_u) = chebyshev_u_scaled(chi, n);
        let t_n = chi * u1 - u2;
        let numer = sin_t * u1;
        let (mant, log_d) = if log_sqrt_v <= LOG_SQRT_V_DIRECT {
            let sqrt_v = log_sqrt_v.exp();
            (Complex64::new(t_n, -sqrt_v * numer), log_u)
        } else {
            (
                Complex64::new((-log_sqrt_v).exp() * t_n, -numer),
                log_u + log_sqrt_v,
            )
        };
        let scaled_numer = if log_sqrt_v <= LOG_SQRT_V_DIRECT {
            log_sqrt_v.exp() * numer.abs()
        } else {
            f64::INFINITY
        };
        let singular = (t_n.abs() < NEAR_SINGULAR && scaled_numer < NEAR_SINGULAR)
            || mant.norm() == 0.0
            || !mant.is_finite();
        (log_d + mant.norm().ln(), mant.arg(), singular)
    };

    let phi_n = wrap_phase(-arg_d);
    PeriodicTransmission {
        chi: chi(trans, k, s),
        phi_n,
        big_phase: phi_n - k * n as f64 * s,
        log_magnitude: -log_d,
        energy: trans.energy,
        near_singular,
    }
}

/// Closed-form N-cell transmission of `cell` at `energy`.
pub fn periodic_transmission_of(
    cell: &PiecewiseConstantPotential,
    spec: &PeriodicSpec,
    energy: f64,
) -> Result<PeriodicTransmission> {
    let trans = transfer::transmission_of(cell, energy)?;
    Ok(t_periodic(&trans, spec, energy.sqrt()))
}

/// Explicit segment list [cell, gap, cell, …, cell] with N cells and N − 1
/// zero-height gaps of width L. With L = 0 the cells are placed back to back.
pub fn direct_array(
    cell: &PiecewiseConstantPotential,
    spec: &PeriodicSpec,
) -> PiecewiseConstantPotential {
    let n = spec.repetitions();
    let mut segments = Vec::with_capacity(n * (cell.segments().len() + 1));
    for i in 0..n {
        if i > 0 && spec.gap() > 0.0 {
            segments.push(Segment::new(spec.gap(), 0.0));
        }
        segments.extend_from_slice(cell.segments());
    }
    PiecewiseConstantPotential::from_segments(segments)
        .expect("segments of a valid cell and a positive gap form a valid potential")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{cell_matrix, transmission, transmission_of};

    fn rect(v: f64, b: f64) -> PiecewiseConstantPotential {
        PiecewiseConstantPotential::rectangular(v, b).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(PeriodicSpec::new(0, 1.0, 1.0).is_err());
        assert!(PeriodicSpec::new(2, -0.1, 1.0).is_err());
        let spec = PeriodicSpec::new(3, 0.5, 1.0).unwrap();
        assert_eq!(spec.period(), 1.5);
        assert_eq!(spec.total_width(), 4.0);
    }

    #[test]
    fn chi_examples() {
        let unit = TransmissionCoefficient {
            log_magnitude: 0.0,
            phase: 0.0,
            energy: 1.0,
        };
        assert!((chi(&unit, 1.0, std::f64::consts::PI) + 1.0).abs() < 1e-15);

        let t = transmission_of(&rect(2.0, 1.0), 1.0).unwrap();
        let want = 1.0f64.cosh() * 1.0f64.cos();
        assert!((chi(&t, 1.0, 2.0) - want).abs() < 1e-12);
        assert!((chi(&t, 1.0, 2.0) - 0.83373).abs() < 1e-5);

        let t = transmission_of(&rect(2.0, 30.0), 1.0).unwrap();
        // δ = −30 at E = V/2, so s = 30 gives cos(δ + ks) = 1
        let s = 30.0;
        let c = chi(&t, 1.0, s);
        assert!((c - 30f64.cosh()).abs() / 30f64.cosh() < 1e-12);
        assert!(c > 5.3e12 && c < 5.4e12);
    }

    #[test]
    fn ratio_examples() {
        let r = chebyshev_ratios(2.0, 2).unwrap();
        assert!((r.sigma - 0.25).abs() < 1e-15);
        assert!((r.rho - 4.0 / 7.0).abs() < 1e-15);

        let r = chebyshev_ratios(0.5, 2).unwrap();
        assert!((r.rho + 2.0).abs() < 1e-15);

        let r = chebyshev_ratios(1e8, 5).unwrap();
        assert!((r.rho - 1e-8).abs() / 1e-8 < 1e-6);

        let r = chebyshev_ratios(0.3, 1).unwrap();
        assert_eq!(r.sigma, 0.0);
        assert!((r.rho - 1.0 / 0.3).abs() < 1e-14);
    }

    #[test]
    fn ratio_flags_vanishing_pivot() {
        // U_1(0) = 0: the first pivot 2χ − σ₁ vanishes.
        assert!(matches!(
            chebyshev_ratios(0.0, 2),
            Err(Error::NearSingular { .. })
        ));
        // T_1(0) = 0
        assert!(matches!(
            chebyshev_ratios(0.0, 1),
            Err(Error::NearSingular { .. })
        ));
        assert!(chebyshev_ratios(1.0, 0).is_err());
    }

    #[test]
    fn single_cell_reduction() {
        let cell = rect(2.0, 1.3);
        for gap in [0.0, 0.7, 4.0] {
            let spec = PeriodicSpec::for_cell(&cell, 1, gap).unwrap();
            let t = transmission_of(&cell, 0.8).unwrap();
            let p = t_periodic(&t, &spec, 0.8f64.sqrt());
            assert!((p.log_magnitude - t.log_magnitude).abs() < 1e-12);
            let want = wrap_phase(t.phase + 0.8f64.sqrt() * spec.period());
            assert!((wrap_phase(p.phi_n - want)).abs() < 1e-12);
            assert!((wrap_phase(p.big_phase - t.phase)).abs() < 1e-12);
        }
    }

    #[test]
    fn two_cells_match_explicit_array() {
        let cell = rect(2.0, 1.0);
        let spec = PeriodicSpec::for_cell(&cell, 2, 1.0).unwrap();
        let array = direct_array(&cell, &spec);
        assert_eq!(array.segments().len(), 3);
        let direct = transmission(&cell_matrix(1.0, &array).unwrap(), 1.0).unwrap();
        let closed = periodic_transmission_of(&cell, &spec, 1.0).unwrap();
        assert!((closed.log_magnitude - direct.log_magnitude).abs() < 1e-10);
        assert!(wrap_phase(closed.big_phase - direct.phase).abs() < 1e-10);
    }

    #[test]
    fn opaque_cells_reach_phase_limit() {
        let cell = rect(2.0, 30.0);
        let spec = PeriodicSpec::for_cell(&cell, 3, 5.0).unwrap();
        let t = transmission_of(&cell, 1.0).unwrap();
        let p = t_periodic(&t, &spec, 1.0);
        assert!(wrap_phase(p.phi_n - (t.phase + spec.period())).abs() < 1e-9);
        assert!(!p.near_singular);
    }

    #[test]
    fn extremely_opaque_cells_stay_finite() {
        // √v = cosh(800) overflows f64; the log-scaled path must carry it.
        let cell = rect(2.0, 800.0);
        let spec = PeriodicSpec::for_cell(&cell, 4, 1.5).unwrap();
        let t = transmission_of(&cell, 1.0).unwrap();
        let p = t_periodic(&t, &spec, 1.0);
        assert!(p.log_magnitude.is_finite());
        assert!(wrap_phase(p.phi_n - (t.phase + spec.period())).abs() < 1e-9);
        // Each cell adds ≈ ln v plus the gap bookkeeping: |t_N| ≈ |t|^N (2 cos θ)^{-(N-1)}
        let theta = t.phase + spec.period();
        let want = 4.0 * t.log_magnitude - 3.0 * (2.0 * theta.cos().abs()).ln();
        assert!((p.log_magnitude - want).abs() < 1e-9);
    }

    #[test]
    fn direct_array_layout() {
        let cell = rect(2.0, 1.0);
        let a = direct_array(&cell, &PeriodicSpec::for_cell(&cell, 2, 1.0).unwrap());
        let pairs: Vec<_> = a.segments().iter().map(|s| (s.width, s.height)).collect();
        assert_eq!(pairs, vec![(1.0, 2.0), (1.0, 0.0), (1.0, 2.0)]);
        assert_eq!(a.width(), 3.0);

        let single = direct_array(&cell, &PeriodicSpec::for_cell(&cell, 1, 7.0).unwrap());
        assert_eq!(single, cell);

        let three = direct_array(&cell, &PeriodicSpec::for_cell(&cell, 3, 0.5).unwrap());
        assert_eq!(three.width(), 4.0);

        let fused = direct_array(&cell, &PeriodicSpec::for_cell(&cell, 3, 0.0).unwrap());
        assert_eq!(fused.width(), 3.0);
        assert_eq!(fused.segments().len(), 3);
    }

    #[test]
    fn fused_rectangles_equal_one_wide_barrier() {
        let cell = rect(2.0, 0.8);
        let spec = PeriodicSpec::for_cell(&cell, 3, 0.0).unwrap();
        let closed = periodic_transmission_of(&cell, &spec, 1.4).unwrap();
        let wide = transmission_of(&rect(2.0, 2.4), 1.4).unwrap();
        assert!((closed.log_magnitude - wide.log_magnitude).abs() < 1e-11);
        assert!(wrap_phase(closed.big_phase - wide.phase).abs() < 1e-11);
    }
}
