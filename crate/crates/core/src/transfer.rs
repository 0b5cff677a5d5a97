//! Transfer matrices for piecewise-constant potentials.
//!
//! Outside the potential the wave function is written as A·e^{ikx} + B·e^{-ikx}
//! with k = √E and both amplitudes referenced to the global origin x = 0. The
//! matrix M maps the right-hand amplitudes to the left-hand ones,
//! (A_L, B_L) = M·(A_R, B_R), so a zero potential gives the identity and an
//! incident wave from the left has t = 1/M11 and r = M21/M11.
//!
//! Opaque barriers make the entries grow like e^{qb}. [`ScaledMatrix2`] keeps
//! that growth in a separate natural-log exponent so the stored entries stay O(1).

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::potential::PiecewiseConstantPotential;

/// Relative width of the band around E = height handled by the series branch.
pub const SERIES_SWITCH: f64 = 1e-8;

/// 2×2 complex matrix stored as e^scale · [[m11, m12], [m21, m22]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix2 {
    entries: [Complex64; 4],
    scale: f64,
}

impl ScaledMatrix2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ScaledMatrix2 {
            entries: [one, zero, zero, one],
            scale: 0.0,
        }
    }

    /// Builds a matrix from row-major stored entries and a log-scale exponent,
    /// renormalising so the largest stored entry is O(1).
    pub fn new(entries: [Complex64; 4], scale: f64) -> Self {
        let mut m = ScaledMatrix2 { entries, scale };
        m.renormalize();
        m
    }

    /// Stored entries, row-major.
    pub fn entries(&self) -> [Complex64; 4] {
        self.entries
    }

    /// Natural-log scale σ; the true matrix is e^σ times the stored entries.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True (unscaled) entry at `(row, col)`, zero-based. Overflows to infinity
    /// for very opaque potentials.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[2 * row + col] * self.scale.exp()
    }

    /// Determinant of the true matrix.
    pub fn determinant(&self) -> Complex64 {
        let [a, b, c, d] = self.entries;
        (a * d - b * c) * (2.0 * self.scale).exp()
    }

    /// Entries re-expressed relative to e^`scale`, for comparing matrices
    /// whose stored scales differ.
    pub fn entries_at_scale(&self, scale: f64) -> [Complex64; 4] {
        let f = (self.scale - scale).exp();
        self.entries.map(|z| z * f)
    }

    // Power-of-two rescaling keeps the stored entries free of rounding.
    fn renormalize(&mut self) {
        let max = self
            .entries
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max);
        if max == 0.0 || !max.is_finite() {
            return;
        }
        let exp = max.log2().floor() as i32;
        if exp == 0 {
            return;
        }
        let factor = 2f64.powi(-exp);
        for z in &mut self.entries {
            *z *= factor;
        }
        self.scale += f64::from(exp) * std::f64::consts::LN_2;
    }
}

impl Mul for ScaledMatrix2 {
    type Output = ScaledMatrix2;

    fn mul(self, rhs: ScaledMatrix2) -> ScaledMatrix2 {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        ScaledMatrix2::new(
            [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
            self.scale + rhs.scale,
        )
    }
}

/// Transmission amplitude t = e^{log_magnitude} · e^{i·phase} at one energy.
///
/// `phase` is the single-point value δ wrapped to (−π, π]; unwrapping only
/// makes sense along an energy scan (see [`unwrap_phase`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionCoefficient {
    pub log_magnitude: f64,
    pub phase: f64,
    pub energy: f64,
}

impl TransmissionCoefficient {
    /// ln √v = −ln|t|.
    pub fn log_sqrt_v(&self) -> f64 {
        -self.log_magnitude
    }

    /// v = 1/|t|². Overflows to infinity for extremely opaque cells.
    pub fn v(&self) -> f64 {
        (-2.0 * self.log_magnitude).exp()
    }

    /// |t|².
    pub fn probability(&self) -> f64 {
        (2.0 * self.log_magnitude).exp()
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    /// M₁ = √v·e^{−iδ}, the cell matrix entry whose inverse is t.
    pub fn m1(&self) -> Complex64 {
        Complex64::from_polar(self.log_sqrt_v().exp(), -self.phase)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shifts each phase by a multiple of 2π so consecutive differences lie in (−π, π].
pub fn unwrap_phase(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut iter = series.iter();
    let Some(&first) = iter.next() else {
        return out;
    };
    out.push(first);
    let mut prev = first;
    for &x in iter {
        let d = x - prev;
        let mut m = -(d / TAU).round();
        if d + m * TAU <= -PI {
            m += 1.0;
        } else if d + m * TAU > PI {
            m -= 1.0;
        }
        prev = x + m * TAU;
        out.push(prev);
    }
    out
}

fn wavevector(energy: f64) -> Result<f64> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid(format!(
            "energy must be positive and finite, got {energy}"
        )));
    }
    Ok(energy.sqrt())
}

/// Transfer matrix across a constant segment of `height` on [x0, x0 + width].
///
/// With z = E − height the in-segment propagator only needs cos(κw),
/// sin(κw)/κ and κ·sin(κw), which are entire in z: they become cosh/sinh for
/// z < 0 and a short Taylor series near z = 0.
pub fn segment_matrix(energy: f64, height: f64, width: f64, x0: f64) -> Result<ScaledMatrix2> {
    if !x0.is_finite() {
        return Err(invalid("segment position must be finite"));
    }
    let k = wavevector(energy)?;
    let (diag, gamma, scale) = segment_parts(k, energy, height, width)?;
    let x1 = x0 + width;
    let diag = Complex64::cis(k * width) * diag;
    let off = Complex64::cis(-k * (x0 + x1)) * Complex64::new(0.0, gamma);
    Ok(ScaledMatrix2::new(
        [diag, off, off.conj(), diag.conj()],
        scale,
    ))
}

/// Segment matrix with amplitudes referenced to the segment's own edges.
/// Edge-referenced matrices of adjacent segments multiply directly and carry
/// no e^{ikx} factors.
fn local_segment_matrix(energy: f64, height: f64, width: f64) -> Result<ScaledMatrix2> {
    let k = wavevector(energy)?;
    let (diag, gamma, scale) = segment_parts(k, energy, height, width)?;
    let off = Complex64::new(0.0, gamma);
    Ok(ScaledMatrix2::new(
        [diag, off, off.conj(), diag.conj()],
        scale,
    ))
}

// (cos κw − iβ, γ, scale), with the first two multiplied by e^{-scale}
fn segment_parts(k: f64, energy: f64, height: f64, width: f64) -> Result<(Complex64, f64, f64)> {
    if !(width.is_finite() && width > 0.0) {
        return Err(invalid(format!(
            "segment width must be positive, got {width}"
        )));
    }
    if !height.is_finite() {
        return Err(invalid("segment height must be finite"));
    }

    let z = energy - height;
    let w = width;
    // (cos κw, sin κw / κ, κ sin κw), all multiplied by e^{-scale}
    let (cos_kw, sinc_kw, ksin_kw, scale) = if use_series(z, height, w) {
        let u = z * w * w;
        let c = 1.0 - u / 2.0 + u * u / 24.0 - u * u * u / 720.0;
        let s = w * (1.0 - u / 6.0 + u * u / 120.0 - u * u * u / 5040.0);
        (c, s, z * s, 0.0)
    } else if z > 0.0 {
        let kappa = z.sqrt();
        let (sin, cos) = (kappa * w).sin_cos();
        (cos, sin / kappa, kappa * sin, 0.0)
    } else {
        let q = (-z).sqrt();
        let qw = q * w;
        let decay = (-2.0 * qw).exp();
        let one_minus = -(-2.0 * qw).exp_m1();
        (
            0.5 * (1.0 + decay),
            0.5 * one_minus / q,
            -0.5 * q * one_minus,
            qw,
        )
    };

    let beta = 0.5 * (k * sinc_kw + ksin_kw / k);
    let gamma = 0.5 * (k * sinc_kw - ksin_kw / k);
    Ok((Complex64::new(cos_kw, -beta), gamma, scale))
}

fn use_series(z: f64, height: f64, width: f64) -> bool {
    z == 0.0 || (z.abs() < SERIES_SWITCH * height.abs().max(1.0) && z.abs() * width * width < 1e-3)
}

/// Cell transfer matrix with the potential laid out from x = 0.
pub fn cell_matrix(energy: f64, potential: &PiecewiseConstantPotential) -> Result<ScaledMatrix2> {
    cell_matrix_at(energy, potential, 0.0)
}

/// Cell transfer matrix with the potential laid out from x = `origin`.
pub fn cell_matrix_at(
    energy: f64,
    potential: &PiecewiseConstantPotential,
    origin: f64,
) -> Result<ScaledMatrix2> {
    let mut x = origin;
    let mut m = ScaledMatrix2::identity();
    for seg in potential.segments() {
        m = m * segment_matrix(energy, seg.height, seg.width, x)?;
        x += seg.width;
    }
    Ok(m)
}

/// Phase delay δ + kW of a cell of total width W, wrapped to (−π, π].
///
/// Equal to the transmission phase of the cell relative to free propagation
/// over its width, but computed without ever forming the e^{ikW} factor, so it
/// carries no rounding proportional to kW.
pub fn phase_delay(potential: &PiecewiseConstantPotential, energy: f64) -> Result<f64> {
    let mut m = ScaledMatrix2::identity();
    for seg in potential.segments() {
        m = m * local_segment_matrix(energy, seg.height, seg.width)?;
    }
    Ok(transmission(&m, energy)?.phase)
}

/// t = 1/M11 in log-magnitude/phase form.
pub fn transmission(m: &ScaledMatrix2, energy: f64) -> Result<TransmissionCoefficient> {
    let m11 = m.entries[0];
    if m11.norm() == 0.0 || !m11.is_finite() {
        return Err(Error::DegenerateMatrix);
    }
    Ok(TransmissionCoefficient {
        log_magnitude: -(m.scale + m11.norm().ln()),
        phase: wrap_phase(-m11.arg()),
        energy,
    })
}

/// r = M21/M11; the common scale cancels.
pub fn reflection(m: &ScaledMatrix2) -> Result<Complex64> {
    let m11 = m.entries[0];
    if m11.norm() == 0.0 || !m11.is_finite() {
        return Err(Error::DegenerateMatrix);
    }
    Ok(m.entries[2] / m11)
}

/// Transmission of `potential` at `energy`.
pub fn transmission_of(
    potential: &PiecewiseConstantPotential,
    energy: f64,
) -> Result<TransmissionCoefficient> {
    transmission(&cell_matrix(energy, potential)?, energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(v: f64, b: f64) -> PiecewiseConstantPotential {
        PiecewiseConstantPotential::rectangular(v, b).unwrap()
    }

    fn assert_identity(m: &ScaledMatrix2, tol: f64) {
        let want = [1.0, 0.0, 0.0, 1.0];
        for (i, w) in want.iter().enumerate() {
            let got = m.entry(i / 2, i % 2);
            assert!(
                (got - Complex64::new(*w, 0.0)).norm() < tol,
                "entry {i}: {got}"
            );
        }
    }

    #[test]
    fn free_segment_is_identity() {
        let m = segment_matrix(1.0, 0.0, 2.5, 0.0).unwrap();
        assert_identity(&m, 1e-14);
        let t = transmission(&m, 1.0).unwrap();
        assert!(t.log_magnitude.abs() < 1e-14 && t.phase.abs() < 1e-14);
    }

    #[test]
    fn evanescent_segment_matches_closed_form() {
        // k = q = 1: M11 = e^{ib} cosh(b)
        let m = segment_matrix(1.0, 2.0, 1.0, 0.0).unwrap();
        let m11 = m.entry(0, 0);
        assert!((m11.norm() - 1.0f64.cosh()).abs() < 1e-12);
        assert!((m11.arg() - 1.0).abs() < 1e-12);
        assert!((m.determinant() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn series_branch_at_band_coincidence() {
        let m = segment_matrix(1.0, 1.0, 2.0, 0.0).unwrap();
        assert!(m.entries().iter().all(|z| z.is_finite()));
        assert!((m.determinant() - 1.0).norm() < 1e-12);
        // z = 0: cos = 1, sin(κw)/κ = w, so M11 = e^{ikw}(1 - i k w / 2)
        let want = Complex64::cis(2.0) * Complex64::new(1.0, -1.0);
        assert!((m.entry(0, 0) - want).norm() < 1e-14);
    }

    #[test]
    fn series_branch_is_continuous() {
        let below = segment_matrix(1.0, 1.0 + 2e-8, 2.0, 0.3).unwrap();
        let near = segment_matrix(1.0, 1.0 + 5e-9, 2.0, 0.3).unwrap();
        let above = segment_matrix(1.0, 1.0 - 2e-8, 2.0, 0.3).unwrap();
        for m in [below, above] {
            for i in 0..4 {
                assert!((m.entry(i / 2, i % 2) - near.entry(i / 2, i % 2)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn segment_rejects_non_positive_energy() {
        assert!(matches!(
            segment_matrix(0.0, 1.0, 1.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(segment_matrix(-1.0, 1.0, 1.0, 0.0).is_err());
        assert!(segment_matrix(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn free_cell_is_identity() {
        assert_identity(&cell_matrix(1.0, &rect(0.0, 7.0)).unwrap(), 1e-13);
    }

    #[test]
    fn rectangular_transmission_at_symmetric_point() {
        let t = transmission_of(&rect(2.0, 1.0), 1.0).unwrap();
        let sech = 1.0 / 1.0f64.cosh();
        assert!((t.probability() - sech * sech).abs() < 1e-12);
        assert!((t.log_magnitude.exp() - 0.648054).abs() < 1e-6);
        assert!((t.phase + 1.0).abs() < 1e-12);

        let t2 = transmission_of(&rect(2.0, 2.0), 1.0).unwrap();
        assert!((t2.v() - 2.0f64.cosh().powi(2)).abs() < 1e-10);
        assert!((t2.v() - 14.15412).abs() < 1e-5);
        assert!((t2.phase + 2.0).abs() < 1e-12);
    }

    #[test]
    fn opaque_barrier_does_not_overflow() {
        let m = cell_matrix(1.0, &rect(2.0, 30.0)).unwrap();
        let t = transmission(&m, 1.0).unwrap();
        // sech(30) = 2 e^{-30} / (1 + e^{-60})
        assert!((t.log_magnitude - (2f64.ln() - 30.0)).abs() < 1e-12);

        let deep = transmission_of(&rect(2.0, 2000.0), 1.0).unwrap();
        assert!((deep.log_magnitude - (2f64.ln() - 2000.0)).abs() < 1e-9);
        assert!(deep.phase.is_finite());
    }

    #[test]
    fn reflection_and_unitarity() {
        let id = ScaledMatrix2::identity();
        assert_eq!(reflection(&id).unwrap(), Complex64::new(0.0, 0.0));

        let m = cell_matrix(1.0, &rect(2.0, 1.0)).unwrap();
        let r = reflection(&m).unwrap();
        let sech2 = 1.0 / 1.0f64.cosh().powi(2);
        assert!((r.norm_sqr() - (1.0 - sech2)).abs() < 1e-12);
        assert!((r.norm_sqr() - 0.58003).abs() < 1e-5);

        let over = cell_matrix(4.0, &rect(2.0, 1.0)).unwrap();
        let t = transmission(&over, 4.0).unwrap();
        let r = reflection(&over).unwrap();
        assert!((t.probability() + r.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_matrix_is_reported() {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let m = ScaledMatrix2::new([zero, one, one, zero], 0.0);
        assert_eq!(transmission(&m, 1.0), Err(Error::DegenerateMatrix));
        assert_eq!(reflection(&m), Err(Error::DegenerateMatrix));
    }

    #[test]
    fn split_cells_compose() {
        let p =
            PiecewiseConstantPotential::from_pairs(&[(0.7, 3.0), (1.1, 0.0), (0.4, -1.0)]).unwrap();
        let (left, right) = p.split_at(1).unwrap();
        let whole = cell_matrix(1.3, &p).unwrap();
        let parts = cell_matrix_at(1.3, &left, 0.0).unwrap()
            * cell_matrix_at(1.3, &right, left.width()).unwrap();
        let a = whole.entries();
        let b = parts.entries_at_scale(whole.scale());
        for i in 0..4 {
            assert!((a[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_phase(&[0.1, 0.2, 0.3]), vec![0.1, 0.2, 0.3]);

        let u = unwrap_phase(&[3.1, -3.1]);
        assert_eq!(u[0], 3.1);
        assert!((u[1] - (-3.1 + TAU)).abs() < 1e-15);
        assert!((u[1] - 3.183185).abs() < 1e-6);

        let u = unwrap_phase(&[-3.0, 3.0, -2.9]);
        assert!((u[1] - (3.0 - TAU)).abs() < 1e-15);
        assert!((u[1] + 3.283185).abs() < 1e-6);
        assert!((u[2] - (-2.9)).abs() < 1e-15);
        for pair in u.windows(2) {
            let d = pair[1] - pair[0];
            assert!(d > -PI && d <= PI);
        }

        assert!(unwrap_phase(&[]).is_empty());
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_phase(TAU + 0.25) - 0.25).abs() < 1e-14);
    }
}
