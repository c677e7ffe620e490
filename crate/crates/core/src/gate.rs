//! Spectral gate: sector membership, spectral intersection and the common
//! shift `lambda` that moves both spectra into a sector.
//!
//! Shifting `a` and `b` by the same `lambda` leaves the equation
//! `ax - xb = c` unchanged, so every solver downstream runs on the shifted
//! pair and reports solutions of the original problem.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::numerics::{eigenvalues, SpectrumReport};

/// Default relative margin used by [`choose_shift`].
pub const DEFAULT_SECTOR_MARGIN: f64 = 0.05;

/// Relative factor for the default intersection tolerance.
pub const INTERSECTION_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorParams {
    alpha: f64,
    lambda_shift: f64,
}

impl SectorParams {
    pub fn new(alpha: f64, lambda_shift: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda_shift >= 0.0 && lambda_shift.is_finite()) {
            return Err(Error::Parameter(format!(
                "shift must be a finite non-negative number, got {lambda_shift}"
            )));
        }
        Ok(Self {
            alpha,
            lambda_shift,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda_shift(&self) -> f64 {
        self.lambda_shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub in_sector_a: bool,
    pub in_sector_b: bool,
    pub spectra_intersect: bool,
    pub intersection_tolerance: f64,
    pub suggested_lambda: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "sector half-angle must lie in (0, pi/2), got {alpha}"
        )))
    }
}

/// True iff every eigenvalue is nonzero with `|arg z| < alpha`.
pub fn sector_contains(spectrum: &SpectrumReport, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(spectrum
        .eigenvalues
        .iter()
        .all(|z| *z != Complex64::new(0.0, 0.0) && z.arg().abs() < alpha))
}

/// True iff all eigenvalues lie in the open right half-plane.
pub fn in_right_half_plane(spectrum: &SpectrumReport) -> bool {
    spectrum.eigenvalues.iter().all(|z| z.re > 0.0)
}

/// True iff some pair of eigenvalues is within `tol` of each other.
pub fn spectra_intersect(sa: &SpectrumReport, sb: &SpectrumReport, tol: f64) -> bool {
    sa.eigenvalues
        .iter()
        .any(|x| sb.eigenvalues.iter().any(|y| (x - y).norm() <= tol))
}

/// `1e-8 * (|a|_F + |b|_F)`.
pub fn default_intersection_tolerance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    INTERSECTION_REL_TOL * (a.norm_fro() + b.norm_fro())
}

/// Smallest shift found by [`choose_shift`] for the default margin.
pub fn choose_shift(sa: &SpectrumReport, sb: &SpectrumReport, alpha: f64) -> Result<SectorParams> {
    choose_shift_with_margin(sa, sb, alpha, DEFAULT_SECTOR_MARGIN)
}

/// Finds a small `lambda >= 0` such that every shifted eigenvalue `w = z + lambda`
/// keeps a distance of at least `margin * |w|` from the boundary of the
/// sector and satisfies `Re w >= margin * max(1, rho)`, where `rho` is the
/// largest unshifted modulus.
///
/// Both conditions are monotone in `lambda`, so a geometric scan followed by
/// bisection to three significant digits finds the threshold.
pub fn choose_shift_with_margin(
    sa: &SpectrumReport,
    sb: &SpectrumReport,
    alpha: f64,
    margin: f64,
) -> Result<SectorParams> {
    check_alpha(alpha)?;
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::Parameter(format!(
            "sector margin must lie in [0, 1), got {margin}"
        )));
    }
    let rho = sa.max_modulus().max(sb.max_modulus()).max(1.0);
    let min_re = margin * rho;
    // distance to the boundary ray is |w| sin(alpha - |arg w|)
    let angle_slack = margin.asin();
    let accepts = |lambda: f64| {
        sa.eigenvalues.iter().chain(&sb.eigenvalues).all(|z| {
            let w = z + Complex64::new(lambda, 0.0);
            w.re > 0.0 && w.re >= min_re && alpha - w.arg().abs() > angle_slack
        })
    };
    if accepts(0.0) {
        return SectorParams::new(alpha, 0.0);
    }
    let base = 1e-3 * rho;
    let mut lo = 0.0;
    let mut hi = base;
    let mut steps = 0;
    while !accepts(hi) {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 200 || !hi.is_finite() {
            return Err(Error::Numeric("no admissible spectral shift found".into()));
        }
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if accepts(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    SectorParams::new(alpha, hi)
}

/// Full gate classification of the pair `(a, b)` against `Lambda_alpha`.
pub fn gate_report(a: &ComplexMatrix, b: &ComplexMatrix, alpha: f64) -> Result<GateReport> {
    let sa = eigenvalues(a)?;
    let sb = eigenvalues(b)?;
    gate_report_from_spectra(&sa, &sb, alpha, default_intersection_tolerance(a, b))
}

pub fn gate_report_from_spectra(
    sa: &SpectrumReport,
    sb: &SpectrumReport,
    alpha: f64,
    intersection_tolerance: f64,
) -> Result<GateReport> {
    Ok(GateReport {
        in_sector_a: sector_contains(sa, alpha)?,
        in_sector_b: sector_contains(sb, alpha)?,
        spectra_intersect: spectra_intersect(sa, sb, intersection_tolerance),
        intersection_tolerance,
        suggested_lambda: choose_shift(sa, sb, alpha)?.lambda_shift(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn spectrum(z: &[(f64, f64)]) -> SpectrumReport {
        SpectrumReport::from_eigenvalues(z.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    #[test]
    fn sector_membership_examples() {
        assert!(sector_contains(&spectrum(&[(1.0, 0.0), (2.0, 0.0)]), FRAC_PI_4).unwrap());
        assert!(!sector_contains(&spectrum(&[(0.0, 1.0)]), FRAC_PI_4).unwrap());
        assert!(sector_contains(&spectrum(&[(1.0, 1.0)]), FRAC_PI_3).unwrap());
        // arg = pi/4 exactly is on the boundary
        assert!(!sector_contains(&spectrum(&[(1.0, 1.0)]), FRAC_PI_4).unwrap());
        assert!(!sector_contains(&spectrum(&[(0.0, 0.0)]), FRAC_PI_4).unwrap());
        assert!(matches!(
            sector_contains(&spectrum(&[(1.0, 0.0)]), FRAC_PI_2),
            Err(Error::Parameter(_))
        ));
        assert!(sector_contains(&spectrum(&[(1.0, 0.0)]), 0.0).is_err());
    }

    #[test]
    fn intersection_examples() {
        assert!(!spectra_intersect(
            &spectrum(&[(2.0, 0.0)]),
            &spectrum(&[(1.0, 0.0)]),
            1e-8
        ));
        assert!(spectra_intersect(
            &spectrum(&[(1.0, 0.0)]),
            &spectrum(&[(1.0, 0.0)]),
            1e-8
        ));
        assert!(spectra_intersect(
            &spectrum(&[(1.0, 0.0), (1.0, 0.0)]),
            &spectrum(&[(1.0, 0.0)]),
            1e-8
        ));
    }

    #[test]
    fn shift_is_zero_inside_sector() {
        let p = choose_shift(
            &spectrum(&[(1.0, 0.0), (2.0, 0.0)]),
            &spectrum(&[(1.0, 0.0)]),
            FRAC_PI_4,
        )
        .unwrap();
        assert_eq!(p.lambda_shift(), 0.0);
    }

    #[test]
    fn shift_for_negative_real_spectra() {
        let sa = spectrum(&[(-1.0, 0.0)]);
        let sb = spectrum(&[(-2.0, 0.0)]);
        let p = choose_shift(&sa, &sb, FRAC_PI_4).unwrap();
        assert!(
            p.lambda_shift() > 2.0 && p.lambda_shift() < 3.0,
            "{}",
            p.lambda_shift()
        );
        assert!(sector_contains(&sa.shifted(p.lambda_shift()), FRAC_PI_4).unwrap());
        assert!(sector_contains(&sb.shifted(p.lambda_shift()), FRAC_PI_4).unwrap());
    }

    #[test]
    fn shift_for_imaginary_spectrum() {
        let sa = spectrum(&[(0.0, 1.0)]);
        let p = choose_shift(&sa, &sa, FRAC_PI_4).unwrap();
        assert!(p.lambda_shift() > 1.0);
        assert!(sector_contains(&sa.shifted(p.lambda_shift()), FRAC_PI_4).unwrap());
    }

    #[test]
    fn intersection_is_shift_invariant() {
        let sa = spectrum(&[(1.0, 2.0), (-3.0, 0.5)]);
        let sb = spectrum(&[(-3.0, 0.5)]);
        for lambda in [0.0, 0.7, 12.5] {
            assert!(spectra_intersect(
                &sa.shifted(lambda),
                &sb.shifted(lambda),
                1e-8
            ));
        }
    }

    #[test]
    fn sector_params_validate() {
        assert!(SectorParams::new(FRAC_PI_4, -1.0).is_err());
        assert!(SectorParams::new(2.0, 0.0).is_err());
        assert!(SectorParams::new(FRAC_PI_4, 0.5).is_ok());
    }
}
