//! Regular companion equations: `a c̄ + c̄ b = c`, the offset `r`, the
//! generalized operator `A² + AB + B²`, and the regular Sylvester solve.
//!
//! `c̄` is computed two ways. The direct method solves the vectorized system
//! and is authoritative. The quadrature method evaluates
//! `∫₀^∞ e^{-ta} c e^{-tb} dt` and exists to cross-validate the integral
//! representation.

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{in_right_half_plane, sector_contains};
use crate::matrix::{ratio, ComplexMatrix};
use crate::numerics::{
    condition_number, eigenvalues, kron_vec_operator, lu_solve, mat_exp, OperatorSign,
};

/// Condition number of `A + B` above which a `c̄` solve is flagged.
pub const CBAR_CONDITION_WARNING: f64 = 1e10;

/// Gauss–Legendre nodes per quadrature panel.
pub const QUADRATURE_NODES: usize = 32;

/// Largest number of integrand evaluations before giving up.
pub const QUADRATURE_NODE_BUDGET: usize = QUADRATURE_NODES << 16;

/// Fraction of the spectral gap used in the exponential decay model.
const DECAY_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularMethod {
    Direct,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularSolveResult {
    pub cbar: ComplexMatrix,
    pub method: RegularMethod,
    /// `‖a c̄ + c̄ b − c‖_F`.
    pub residual: f64,
    pub truncation_t: Option<f64>,
    pub nodes_used: Option<usize>,
    /// 2-norm condition number of the vectorized operator `A + B`.
    pub condition_estimate: Option<f64>,
    /// True when the condition estimate exceeds [`CBAR_CONDITION_WARNING`].
    pub ill_conditioned: bool,
}

fn check_shapes(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> Result<(usize, usize)> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "a and b must be square, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n, m) = (a.nrows(), b.nrows());
    if c.shape() != (n, m) {
        return Err(Error::Dimension(format!(
            "c must be {n}x{m}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    Ok((n, m))
}

fn require_right_half_plane(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    let sa = eigenvalues(a)?;
    let sb = eigenvalues(b)?;
    if !in_right_half_plane(&sa) || !in_right_half_plane(&sb) {
        return Err(Error::Gate(format!(
            "spectra must lie in the open right half-plane (min real parts {:.3e}, {:.3e})",
            sa.min_real_part, sb.min_real_part
        )));
    }
    Ok(())
}

/// `‖a x + sign · x b − c‖_F`.
pub fn sylvester_residual(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    x: &ComplexMatrix,
    c: &ComplexMatrix,
    sign: OperatorSign,
) -> f64 {
    let xb = x * b;
    let lhs = match sign {
        OperatorSign::Plus => a * x + xb,
        OperatorSign::Minus => a * x - xb,
    };
    lhs.distance(c)
}

/// Unique `c̄` with `a c̄ + c̄ b = c` by a direct solve of the vectorized
/// system. Requires both spectra in the open right half-plane.
pub fn solve_cbar_direct(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<RegularSolveResult> {
    let (n, m) = check_shapes(a, b, c)?;
    require_right_half_plane(a, b)?;
    let k = kron_vec_operator(a, b, OperatorSign::Plus)?;
    let condition_estimate = condition_number(&k)?;
    let z = lu_solve(&k, &c.vec())?;
    let cbar = ComplexMatrix::from_vec(&z, n, m)?;
    Ok(RegularSolveResult {
        residual: sylvester_residual(a, b, &cbar, c, OperatorSign::Plus),
        cbar,
        method: RegularMethod::Direct,
        truncation_t: None,
        nodes_used: None,
        ill_conditioned: condition_estimate.is_none_or(|k| k > CBAR_CONDITION_WARNING),
        condition_estimate,
    })
}

/// Unique `x` with `a x − x b = c` for disjoint spectra. Fails with
/// [`Error::Singular`] when the operator is numerically singular.
pub fn solve_sylvester_direct(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (n, m) = check_shapes(a, b, c)?;
    let k = kron_vec_operator(a, b, OperatorSign::Minus)?;
    ComplexMatrix::from_vec(&lu_solve(&k, &c.vec())?, n, m)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|p, q| p.0.total_cmp(&q.0));
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `max(1, max_{t ∈ {1,2,4}} ‖e^{-ta}‖ e^{t δ})`: sampled constant in the
/// decay model `‖e^{-ta}‖ ≤ C e^{-tδ}`.
fn sampled_decay_constant(a: &ComplexMatrix, delta: f64) -> Result<f64> {
    let mut c: f64 = 1.0;
    for t in [1.0, 2.0, 4.0] {
        let e = mat_exp(&a.scale_real(-t))?;
        c = c.max(e.norm2() * (t * delta).exp());
    }
    Ok(c)
}

/// Composite Gauss–Legendre sum over `panels` equal panels of `[0, t_end]`.
///
/// With `h = t_end / panels`, every panel integral is `E_a^p G E_b^p` for the
/// first-panel integral `G` and the one-step propagators `E_a = e^{-ha}`,
/// `E_b = e^{-hb}`.
fn panel_sum(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    rule: &[(f64, f64)],
    t_end: f64,
    panels: usize,
) -> Result<ComplexMatrix> {
    let h = t_end / panels as f64;
    let mut g = ComplexMatrix::zeros(c.nrows(), c.ncols());
    for &(x, w) in rule {
        let tau = 0.5 * h * (1.0 + x);
        let ea = mat_exp(&a.scale_real(-tau))?;
        let eb = mat_exp(&b.scale_real(-tau))?;
        g = g + (ea * c * eb).scale_real(0.5 * h * w);
    }
    let step_a = mat_exp(&a.scale_real(-h))?;
    let step_b = mat_exp(&b.scale_real(-h))?;
    let mut term = g;
    let mut sum = ComplexMatrix::zeros(c.nrows(), c.ncols());
    for _ in 0..panels {
        sum = sum + &term;
        term = &step_a * &term * &step_b;
    }
    Ok(sum)
}

/// `c̄ = ∫₀^∞ e^{-ta} c e^{-tb} dt` by truncated composite Gauss–Legendre
/// quadrature, to relative tolerance `tol`.
pub fn solve_cbar_quadrature(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    tol: f64,
) -> Result<RegularSolveResult> {
    check_shapes(a, b, c)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Parameter(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let sa = eigenvalues(a)?;
    let sb = eigenvalues(b)?;
    let delta = sa.min_real_part.min(sb.min_real_part);
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Precondition(format!(
            "quadrature needs spectra with positive real parts, min real part is {delta:.3e}"
        )));
    }
    let c_norm = c.norm_fro();
    if c_norm == 0.0 {
        return Ok(RegularSolveResult {
            cbar: c.clone(),
            method: RegularMethod::Quadrature,
            residual: 0.0,
            truncation_t: Some(0.0),
            nodes_used: Some(0),
            condition_estimate: None,
            ill_conditioned: false,
        });
    }

    let da = DECAY_FRACTION * sa.min_real_part;
    let db = DECAY_FRACTION * sb.min_real_part;
    let gamma = da + db;
    let bound = sampled_decay_constant(a, da)? * sampled_decay_constant(b, db)?;
    // ‖c‖ ≤ (‖a‖ + ‖b‖)‖c̄‖ gives a lower bound for the integral's size.
    let target = tol * c_norm / (a.norm2() + b.norm2());
    let mut t_end = ((bound * c_norm / (target * gamma)).ln() / gamma).max(1.0 / gamma);
    loop {
        let tail = mat_exp(&a.scale_real(-t_end))? * c * mat_exp(&b.scale_real(-t_end))?;
        if tail.norm_fro() / gamma <= 0.25 * target {
            break;
        }
        t_end *= 1.5;
        if !t_end.is_finite() || t_end * gamma > 1e4 {
            return Err(Error::Convergence("integrand does not decay".into()));
        }
    }

    let rule = gauss_legendre(QUADRATURE_NODES);
    let rho = sa.max_modulus().max(sb.max_modulus());
    let mut panels = ((t_end * rho / 16.0).ceil() as usize)
        .max(1)
        .next_power_of_two();
    let mut previous = panel_sum(a, b, c, &rule, t_end, panels)?;
    loop {
        panels *= 2;
        let nodes = panels * QUADRATURE_NODES;
        if nodes > QUADRATURE_NODE_BUDGET {
            return Err(Error::Convergence(format!(
                "quadrature did not reach tolerance {tol:e} within {QUADRATURE_NODE_BUDGET} nodes"
            )));
        }
        let current = panel_sum(a, b, c, &rule, t_end, panels)?;
        let change = ratio(current.distance(&previous), current.norm_fro());
        if change <= 0.5 * tol {
            return Ok(RegularSolveResult {
                residual: sylvester_residual(a, b, &current, c, OperatorSign::Plus),
                cbar: current,
                method: RegularMethod::Quadrature,
                truncation_t: Some(t_end),
                nodes_used: Some(nodes),
                condition_estimate: None,
                ill_conditioned: false,
            });
        }
        previous = current;
    }
}

/// `r = a⁻¹ c̄ b + a c̄ b⁻¹`.
pub fn compute_r(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cbar: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_shapes(a, b, cbar)?;
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    Ok(a_inv * cbar * b + a * cbar * b_inv)
}

/// Unique `ξ` with `a² ξ + a ξ b + ξ b² = rhs`. Requires both spectra in
/// the sector `|arg z| < π/3`, where `A² + AB + B²` is invertible.
pub fn solve_generalized_regular(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    rhs: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (n, m) = check_shapes(a, b, rhs)?;
    let sa = eigenvalues(a)?;
    let sb = eigenvalues(b)?;
    if !sector_contains(&sa, FRAC_PI_3)? || !sector_contains(&sb, FRAC_PI_3)? {
        return Err(Error::Gate(
            "spectra must lie in the sector |arg z| < pi/3".into(),
        ));
    }
    let left = kron_vec_operator(a, &ComplexMatrix::zeros(m, m), OperatorSign::Plus)?;
    let right = kron_vec_operator(&ComplexMatrix::zeros(n, n), b, OperatorSign::Plus)?;
    let op = &left * &left + &left * &right + &right * &right;
    ComplexMatrix::from_vec(&lu_solve(&op, &rhs.vec())?, n, m)
}
