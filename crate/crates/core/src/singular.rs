//! Solvability of `a x − x b = c` when the spectra of `a` and `b` may meet.
//!
//! With `c̄` the solution of `a c̄ + c̄ b = c` and `r = a⁻¹c̄b + a c̄ b⁻¹`,
//! the equation is solvable iff some pair `(u, v)` satisfies
//!
//! ```text
//! a v + u b = c̄
//! a³v + a²vb + ub³ + aub² = 0
//! ```
//!
//! and then `x = a⁻¹ub² + ub = −(a²vb⁻¹ + av)` is a particular solution.
//! Any such pair also satisfies `a u + v b = c̄ + r` and `u + v = a⁻¹cb⁻¹`,
//! and `q = v − u` satisfies `q b − a q = r`.
//!
//! All work happens on the shifted pair `(a + λ, b + λ)`, which leaves the
//! equation unchanged and places both spectra in the sector `Λ_α`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{choose_shift, gate_report_from_spectra, sector_contains, GateReport};
use crate::matrix::{hstack, ratio, vstack, ComplexMatrix};
use crate::numerics::{eigenvalues, kron_vec_operator, lstsq_solve, OperatorSign, SpectrumReport};
use crate::oracle::{oracle_solve_with, OracleAnswer, OracleQuery};
use crate::regular::{compute_r, solve_cbar_direct, solve_cbar_quadrature};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_ALPHA: f64 = FRAC_PI_4;

/// Residuals within this factor of the threshold are reported as
/// ill-conditioned.
pub const ILL_CONDITIONED_BAND: f64 = 10.0;

/// Tolerance used for the quadrature cross-check of `c̄`.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SylvesterProblem {
    /// Shifted left coefficient `a + λ`.
    pub a: ComplexMatrix,
    /// Shifted right coefficient `b + λ`.
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub original_a: ComplexMatrix,
    pub original_b: ComplexMatrix,
    pub lambda_shift: f64,
    pub alpha: f64,
    pub gate: GateReport,
    pub spectrum_a: SpectrumReport,
    pub spectrum_b: SpectrumReport,
}

impl SylvesterProblem {
    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.b.nrows())
    }
}

fn check_shapes(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> Result<()> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "a and b must be square, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if c.shape() != (a.nrows(), b.nrows()) {
        return Err(Error::Dimension(format!(
            "c must be {}x{}, got {}x{}",
            a.nrows(),
            b.nrows(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}

/// Shifts `(a, b)` by a common `λ ≥ 0` so that both spectra lie in `Λ_α`.
///
/// `α` may not exceed `π/4`, the sector on which the `(u, v)`
/// characterization holds.
pub fn prepare(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    alpha: f64,
) -> Result<SylvesterProblem> {
    check_shapes(a, b, c)?;
    if !(alpha > 0.0 && alpha <= FRAC_PI_4) {
        return Err(Error::Parameter(format!(
            "sector half-angle must lie in (0, pi/4], got {alpha}"
        )));
    }
    let params = choose_shift(&eigenvalues(a)?, &eigenvalues(b)?, alpha)?;
    let lambda = Complex64::new(params.lambda_shift(), 0.0);
    let sa_shift = a.shift_diagonal(lambda);
    let sb_shift = b.shift_diagonal(lambda);
    let spectrum_a = eigenvalues(&sa_shift)?;
    let spectrum_b = eigenvalues(&sb_shift)?;
    if !sector_contains(&spectrum_a, alpha)? || !sector_contains(&spectrum_b, alpha)? {
        return Err(Error::Gate(format!(
            "shift {} did not move the spectra into the sector",
            params.lambda_shift()
        )));
    }
    let tol = crate::gate::default_intersection_tolerance(&sa_shift, &sb_shift);
    let gate = gate_report_from_spectra(&spectrum_a, &spectrum_b, alpha, tol)?;
    Ok(SylvesterProblem {
        a: sa_shift,
        b: sb_shift,
        c: c.clone(),
        original_a: a.clone(),
        original_b: b.clone(),
        lambda_shift: params.lambda_shift(),
        alpha,
        gate,
        spectrum_a,
        spectrum_b,
    })
}

/// The equations satisfied by a solvability witness `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WitnessEquation {
    /// `a v + u b = c̄`
    #[serde(rename = "av_plus_ub")]
    AvPlusUb,
    /// `a u + v b = c̄ + r`
    #[serde(rename = "au_plus_vb")]
    AuPlusVb,
    /// `u + v = a⁻¹ c b⁻¹`
    #[serde(rename = "u_plus_v")]
    UPlusV,
    /// `a³v + a²vb + ub³ + aub² = 0`
    #[serde(rename = "cubic")]
    Cubic,
    /// `q b − a q = r` for `q = v − u`
    #[serde(rename = "difference")]
    Difference,
}

impl WitnessEquation {
    /// The four equations in `(u, v)` proper.
    pub const PRIMARY: [WitnessEquation; 4] = [
        WitnessEquation::AvPlusUb,
        WitnessEquation::AuPlusVb,
        WitnessEquation::UPlusV,
        WitnessEquation::Cubic,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UVWitness {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub cbar: ComplexMatrix,
    pub r: ComplexMatrix,
    /// `v − u`.
    pub q: ComplexMatrix,
    /// Relative residual of each equation.
    pub residuals: BTreeMap<WitnessEquation, f64>,
}

impl UVWitness {
    pub fn new(
        p: &SylvesterProblem,
        u: ComplexMatrix,
        v: ComplexMatrix,
        cbar: ComplexMatrix,
        r: ComplexMatrix,
    ) -> Result<Self> {
        let residuals = witness_residuals(p, &u, &v, &cbar, &r)?;
        Ok(Self {
            q: &v - &u,
            u,
            v,
            cbar,
            r,
            residuals,
        })
    }

    pub fn residual(&self, eq: WitnessEquation) -> f64 {
        self.residuals[&eq]
    }

    pub fn all_pass(&self, tol: f64) -> bool {
        self.residuals.values().all(|&r| r <= tol)
    }

    /// `sqrt(‖u‖² + ‖v‖²)`.
    pub fn norm(&self) -> f64 {
        self.u.norm_fro().hypot(self.v.norm_fro())
    }
}

/// Relative residuals of all five witness equations.
pub fn witness_residuals(
    p: &SylvesterProblem,
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    cbar: &ComplexMatrix,
    r: &ComplexMatrix,
) -> Result<BTreeMap<WitnessEquation, f64>> {
    let (a, b) = (&p.a, &p.b);
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    let na = a.norm_fro();
    let nb = b.norm_fro();
    let (nu, nv) = (u.norm_fro(), v.norm_fro());
    let target = &a_inv * &p.c * &b_inv;
    let q = v - u;
    let a2 = a * a;
    let b2 = b * b;
    let cubic = &a2 * a * v + &a2 * v * b + u * &b2 * b + a * u * &b2;

    let mut out = BTreeMap::new();
    out.insert(
        WitnessEquation::AvPlusUb,
        ratio(
            (a * v + u * b).distance(cbar),
            na * nv + nu * nb + cbar.norm_fro(),
        ),
    );
    out.insert(
        WitnessEquation::AuPlusVb,
        ratio(
            (a * u + v * b).distance(&(cbar + r)),
            na * nu + nv * nb + cbar.norm_fro() + r.norm_fro(),
        ),
    );
    out.insert(
        WitnessEquation::UPlusV,
        ratio((u + v).distance(&target), nu + nv + target.norm_fro()),
    );
    out.insert(
        WitnessEquation::Cubic,
        ratio(
            cubic.norm_fro(),
            na.powi(3) * nv + na * na * nv * nb + nu * nb.powi(3) + na * nu * nb * nb,
        ),
    );
    out.insert(
        WitnessEquation::Difference,
        ratio(
            (&q * b - a * &q).distance(r),
            q.norm_fro() * (na + nb) + r.norm_fro(),
        ),
    );
    Ok(out)
}

/// Left multiplication `x -> a x` and right multiplication `x -> x b` on
/// column-stacked `n x m` matrices.
fn multiplication_operators(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n, m) = (a.nrows(), b.nrows());
    let left = kron_vec_operator(a, &ComplexMatrix::zeros(m, m), OperatorSign::Plus)?;
    let right = kron_vec_operator(&ComplexMatrix::zeros(n, n), b, OperatorSign::Plus)?;
    Ok((left, right))
}

/// Operator rows of one witness equation, acting on `(vec v, vec u)`.
fn equation_operator(
    eq: WitnessEquation,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (left, right) = multiplication_operators(a, b)?;
    let (on_v, on_u) = match eq {
        WitnessEquation::AvPlusUb => (left, right),
        WitnessEquation::AuPlusVb => (right, left),
        WitnessEquation::UPlusV => {
            let id = ComplexMatrix::identity(left.nrows());
            (id.clone(), id)
        }
        WitnessEquation::Cubic => {
            let l2 = &left * &left;
            let r2 = &right * &right;
            (&l2 * &left + &l2 * &right, &r2 * &right + &left * &r2)
        }
        WitnessEquation::Difference => {
            return Err(Error::Parameter(
                "the difference equation is not one of the four (u, v) equations".into(),
            ))
        }
    };
    Ok(hstack(&on_v, &on_u))
}

fn equation_rhs(
    eq: WitnessEquation,
    p: &SylvesterProblem,
    cbar: &ComplexMatrix,
    r: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    Ok(match eq {
        WitnessEquation::AvPlusUb => cbar.clone(),
        WitnessEquation::AuPlusVb => cbar + r,
        WitnessEquation::UPlusV => p.a.inverse()? * &p.c * p.b.inverse()?,
        WitnessEquation::Cubic => ComplexMatrix::zeros(cbar.nrows(), cbar.ncols()),
        WitnessEquation::Difference => {
            return Err(Error::Parameter(
                "the difference equation is not one of the four (u, v) equations".into(),
            ))
        }
    })
}

fn stacked_system(
    p: &SylvesterProblem,
    cbar: &ComplexMatrix,
    r: &ComplexMatrix,
    first: WitnessEquation,
    second: WitnessEquation,
) -> Result<(ComplexMatrix, DVector<Complex64>)> {
    let k = vstack(
        &equation_operator(first, &p.a, &p.b)?,
        &equation_operator(second, &p.a, &p.b)?,
    );
    let top = equation_rhs(first, p, cbar, r)?.vec();
    let bottom = equation_rhs(second, p, cbar, r)?.vec();
    let mut rhs = DVector::zeros(top.len() + bottom.len());
    rhs.rows_mut(0, top.len()).copy_from(&top);
    rhs.rows_mut(top.len(), bottom.len()).copy_from(&bottom);
    Ok((k, rhs))
}

fn split_vu(z: &DVector<Complex64>, n: usize, m: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let nm = n * m;
    let v = ComplexMatrix::from_vec(&z.rows(0, nm).into_owned(), n, m)?;
    let u = ComplexMatrix::from_vec(&z.rows(nm, nm).into_owned(), n, m)?;
    Ok((u, v))
}

/// Outcome of the stacked least-squares solve for `(u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvSystemSolution {
    /// Present iff the system was declared consistent.
    pub witness: Option<UVWitness>,
    pub consistent: bool,
    pub ill_conditioned: bool,
    /// Absolute least-squares residual.
    pub residual: f64,
    /// `τ (‖c̄‖ + ‖a‖³‖v‖ + ‖b‖³‖u‖)` for the minimum-norm `(u, v)`.
    pub threshold: f64,
    pub rank: usize,
    pub nullity: usize,
    pub near_cutoff: bool,
    pub cbar_condition: Option<f64>,
    pub cbar_ill_conditioned: bool,
}

impl UvSystemSolution {
    /// `residual / (threshold / τ)`, comparable to `τ`.
    pub fn relative_residual(&self, tol: f64) -> f64 {
        ratio(self.residual * tol, self.threshold)
    }
}

/// Decides consistency of `a v + u b = c̄`, `a³v + a²vb + ub³ + aub² = 0`
/// and returns the minimum-norm witness when consistent.
pub fn solve_uv_system(p: &SylvesterProblem, tol: f64) -> Result<UvSystemSolution> {
    let (n, m) = p.dims();
    let cbar_solve = solve_cbar_direct(&p.a, &p.b, &p.c)?;
    let cbar = cbar_solve.cbar;
    let r = compute_r(&p.a, &p.b, &cbar)?;
    let (k, rhs) = stacked_system(
        p,
        &cbar,
        &r,
        WitnessEquation::AvPlusUb,
        WitnessEquation::Cubic,
    )?;
    let ls = lstsq_solve(&k, &rhs)?;
    let (u, v) = split_vu(&ls.solution, n, m)?;
    let threshold = tol
        * (cbar.norm_fro()
            + p.a.norm_fro().powi(3) * v.norm_fro()
            + p.b.norm_fro().powi(3) * u.norm_fro());
    let consistent = ls.residual_norm <= threshold;
    let in_band = ls.residual_norm > threshold / ILL_CONDITIONED_BAND
        && ls.residual_norm <= threshold * ILL_CONDITIONED_BAND;
    let witness = if consistent {
        Some(UVWitness::new(p, u, v, cbar, r)?)
    } else {
        None
    };
    Ok(UvSystemSolution {
        witness,
        consistent,
        ill_conditioned: in_band || ls.near_cutoff || cbar_solve.ill_conditioned,
        residual: ls.residual_norm,
        threshold,
        rank: ls.rank,
        nullity: k.ncols() - ls.rank,
        near_cutoff: ls.near_cutoff,
        cbar_condition: cbar_solve.condition_estimate,
        cbar_ill_conditioned: cbar_solve.ill_conditioned,
    })
}

/// Minimum-norm least-squares `(u, v)` for any two of the four witness
/// equations, with the residuals of all five.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSolution {
    pub equations: (WitnessEquation, WitnessEquation),
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub residuals: BTreeMap<WitnessEquation, f64>,
}

impl PairSolution {
    /// Largest residual among the two equations that were solved.
    pub fn pair_residual(&self) -> f64 {
        self.residuals[&self.equations.0].max(self.residuals[&self.equations.1])
    }

    /// Largest residual among the four primary equations.
    pub fn max_primary_residual(&self) -> f64 {
        WitnessEquation::PRIMARY
            .iter()
            .map(|eq| self.residuals[eq])
            .fold(0.0, f64::max)
    }
}

pub fn solve_pair(
    p: &SylvesterProblem,
    first: WitnessEquation,
    second: WitnessEquation,
) -> Result<PairSolution> {
    if first == second {
        return Err(Error::Parameter(
            "a pair needs two distinct equations".into(),
        ));
    }
    let (n, m) = p.dims();
    let cbar = solve_cbar_direct(&p.a, &p.b, &p.c)?.cbar;
    let r = compute_r(&p.a, &p.b, &cbar)?;
    let (k, rhs) = stacked_system(p, &cbar, &r, first, second)?;
    let ls = lstsq_solve(&k, &rhs)?;
    let (u, v) = split_vu(&ls.solution, n, m)?;
    let residuals = witness_residuals(p, &u, &v, &cbar, &r)?;
    Ok(PairSolution {
        equations: (first, second),
        u,
        v,
        residuals,
    })
}

/// Both particular-solution formulas with their agreement and certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticularSolution {
    /// `a⁻¹ u b² + u b`.
    pub x_u: ComplexMatrix,
    /// `−(a² v b⁻¹ + a v)`.
    pub x_v: ComplexMatrix,
    /// `‖x_u − x_v‖` relative to the magnitude of the terms in both formulas.
    pub difference: f64,
    /// `‖a x_u − x_u b − c‖ / ((‖a‖ + ‖b‖)‖x_u‖ + ‖c‖)`.
    pub residual: f64,
}

pub fn particular_solution_parts(
    w: &UVWitness,
    p: &SylvesterProblem,
) -> Result<ParticularSolution> {
    let (a, b) = (&p.a, &p.b);
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    let b2 = b * b;
    let ub = &w.u * b;
    let x_u = &a_inv * &w.u * &b2 + &ub;
    let av = a * &w.v;
    let x_v = -(a * &av * &b_inv + &av);
    let terms = a_inv.norm_fro() * w.u.norm_fro() * b2.norm_fro()
        + ub.norm_fro()
        + a.norm_fro() * av.norm_fro() * b_inv.norm_fro()
        + av.norm_fro();
    Ok(ParticularSolution {
        difference: ratio(x_u.distance(&x_v), terms),
        residual: solution_residual(a, b, &x_u, &p.c),
        x_u,
        x_v,
    })
}

/// `‖a x − x b − c‖ / ((‖a‖ + ‖b‖)‖x‖ + ‖c‖)`.
pub fn solution_residual(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    x: &ComplexMatrix,
    c: &ComplexMatrix,
) -> f64 {
    ratio(
        (a * x - x * b).distance(c),
        (a.norm_fro() + b.norm_fro()) * x.norm_fro() + c.norm_fro(),
    )
}

/// Particular solution from a witness. Fails with
/// [`Error::InternalConsistency`] when the two formulas disagree or the
/// result does not solve the equation.
pub fn particular_solution(w: &UVWitness, p: &SylvesterProblem, tol: f64) -> Result<ComplexMatrix> {
    let parts = particular_solution_parts(w, p)?;
    if parts.difference > tol {
        return Err(Error::InternalConsistency(format!(
            "x_u and x_v differ by {:.3e} (tolerance {tol:e})",
            parts.difference
        )));
    }
    if parts.residual > tol {
        return Err(Error::InternalConsistency(format!(
            "particular solution residual {:.3e} exceeds {tol:e}",
            parts.residual
        )));
    }
    Ok(parts.x_u)
}

/// Oracle answers for the reduced equations `a u − u b = a c̄ b⁻¹` and
/// `a v − v b = −a⁻¹ c̄ b`, with `v` rebuilt from the `u` route as
/// `a⁻¹c̄ − a⁻¹ub`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRoutes {
    pub u_route: Option<ComplexMatrix>,
    pub v_route: Option<ComplexMatrix>,
    pub reconstructed_v: Option<ComplexMatrix>,
    /// Relative residual of `a v + u b = c̄` for the rebuilt pair.
    pub reconstructed_residual: Option<f64>,
}

pub fn check_lemma_uvsyl(p: &SylvesterProblem, tol: f64) -> Result<ReducedRoutes> {
    let (a, b) = (&p.a, &p.b);
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    let cbar = solve_cbar_direct(a, b, &p.c)?.cbar;
    let u_rhs = a * &cbar * &b_inv;
    let v_rhs = -(&a_inv * &cbar * b);
    let pick = |ans: OracleAnswer| ans.solution.and_then(|mut s| s.pop());
    let u_route = pick(oracle_solve_with(
        &OracleQuery::Sylvester { a, b, c: &u_rhs },
        tol,
    )?);
    let v_route = pick(oracle_solve_with(
        &OracleQuery::Sylvester { a, b, c: &v_rhs },
        tol,
    )?);
    let (reconstructed_v, reconstructed_residual) = match &u_route {
        Some(u) => {
            let v = &a_inv * &cbar - &a_inv * u * b;
            let res = ratio(
                (a * &v + u * b).distance(&cbar),
                a.norm_fro() * v.norm_fro() + u.norm_fro() * b.norm_fro() + cbar.norm_fro(),
            );
            (Some(v), Some(res))
        }
        None => (None, None),
    };
    Ok(ReducedRoutes {
        u_route,
        v_route,
        reconstructed_v,
        reconstructed_residual,
    })
}

fn commutator_ratio(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    ratio(
        (x * y - y * x).norm_fro(),
        2.0 * x.norm_fro() * y.norm_fro(),
    )
}

/// Relative residual of `U' N₀² V' = N₀⁻ U' V' N₀⁻` for
/// `U' = [[a, u], [0, b']]` and `V' = [[a', v], [0, b]]`.
pub fn part_c_residual(
    w: &UVWitness,
    p: &SylvesterProblem,
    a_prime: &ComplexMatrix,
    b_prime: &ComplexMatrix,
    tol: f64,
) -> Result<f64> {
    use crate::block::{block_chain, BlockMatrix};
    let (n, m) = p.dims();
    if a_prime.shape() != (n, n) || b_prime.shape() != (m, m) {
        return Err(Error::Dimension(
            "commutant elements have the wrong size".into(),
        ));
    }
    if commutator_ratio(a_prime, &p.a) > tol || commutator_ratio(b_prime, &p.b) > tol {
        return Err(Error::Precondition(
            "a' must commute with a and b' must commute with b".into(),
        ));
    }
    let u_blk = BlockMatrix::upper(p.a.clone(), w.u.clone(), b_prime.clone())?;
    let v_blk = BlockMatrix::upper(a_prime.clone(), w.v.clone(), p.b.clone())?;
    let n0_sq = BlockMatrix::n0_squared(&p.a, &p.b);
    let n0_minus = BlockMatrix::n0_minus(&p.a, &p.b);
    let lhs = block_chain(&[&u_blk, &n0_sq, &v_blk])?;
    let rhs = block_chain(&[&n0_minus, &u_blk, &v_blk, &n0_minus])?;
    Ok(ratio(lhs.distance(&rhs), lhs.norm_fro() + rhs.norm_fro()))
}

pub fn verify_theorem_part_c(
    w: &UVWitness,
    p: &SylvesterProblem,
    a_prime: &ComplexMatrix,
    b_prime: &ComplexMatrix,
    tol: f64,
) -> Result<bool> {
    Ok(part_c_residual(w, p, a_prime, b_prime, tol)? <= tol)
}

/// Which member of an `Ω` pair is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSide {
    Z,
    W,
}

/// A pair `(z, w)` with `a z = w b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaPair {
    pub z: ComplexMatrix,
    pub w: ComplexMatrix,
    /// `‖a z − w b‖ / (‖a‖‖z‖ + ‖w‖‖b‖)`.
    pub residual: f64,
}

/// Completes `(z, w) ∈ Ω` from either side: `w = a z b⁻¹` or `z = a⁻¹ w b`.
pub fn omega_witness(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    given: &ComplexMatrix,
    side: OmegaSide,
) -> Result<OmegaPair> {
    check_shapes(a, b, given)?;
    let (z, w) = match side {
        OmegaSide::Z => (given.clone(), a * given * b.inverse()?),
        OmegaSide::W => (a.inverse()? * given * b, given.clone()),
    };
    let residual = ratio(
        (a * &z).distance(&(&w * b)),
        a.norm_fro() * z.norm_fro() + w.norm_fro() * b.norm_fro(),
    );
    Ok(OmegaPair { z, w, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Solvable,
    Unsolvable,
    IllConditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witness: Option<UVWitness>,
    pub solution: Option<ComplexMatrix>,
    /// Relative residual of `solution` when present, otherwise the relative
    /// least-squares residual of the `(u, v)` system.
    pub certificate_residual: f64,
    pub oracle_agreement: Option<bool>,
    pub tolerance: f64,
    pub alpha: f64,
    pub lambda_shift: f64,
    pub uv_residual: f64,
    pub uv_threshold: f64,
    /// Relative disagreement between the two particular-solution formulas.
    pub solution_difference: Option<f64>,
    pub witness_norm: Option<f64>,
    pub solution_norm: Option<f64>,
    pub cbar_condition: Option<f64>,
    /// Relative gap between the direct and quadrature `c̄`, when requested.
    pub cbar_quadrature_difference: Option<f64>,
    pub oracle: Option<OracleAnswer>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub alpha: f64,
    pub tol: f64,
    /// Attach a Kronecker oracle cross-check.
    pub oracle: bool,
    /// Recompute `c̄` by quadrature and report the gap.
    pub quadrature: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            tol: DEFAULT_TOL,
            oracle: false,
            quadrature: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub problem: SylvesterProblem,
    pub uv: Option<UvSystemSolution>,
    pub verdict: Verdict,
}

/// Full pipeline: shift, `(u, v)` solve, particular solution, optional
/// cross-checks.
pub fn diagnose(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    opts: &DiagnoseOptions,
) -> Result<Diagnosis> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Parameter(format!(
            "tolerance must lie in (0, 1), got {}",
            opts.tol
        )));
    }
    let p = prepare(a, b, c, opts.alpha)?;
    let tol = opts.tol;
    let mut notes = Vec::new();

    let (uv, mut verdict) = if c.max_abs() == 0.0 {
        let (n, m) = p.dims();
        let zero = ComplexMatrix::zeros(n, m);
        let witness = UVWitness::new(&p, zero.clone(), zero.clone(), zero.clone(), zero.clone())?;
        notes.push("c = 0: x = 0 with u = v = 0".to_string());
        let verdict = Verdict {
            status: VerdictStatus::Solvable,
            witness: Some(witness),
            solution: Some(zero),
            certificate_residual: 0.0,
            oracle_agreement: None,
            tolerance: tol,
            alpha: p.alpha,
            lambda_shift: p.lambda_shift,
            uv_residual: 0.0,
            uv_threshold: 0.0,
            solution_difference: Some(0.0),
            witness_norm: Some(0.0),
            solution_norm: Some(0.0),
            cbar_condition: None,
            cbar_quadrature_difference: None,
            oracle: None,
            notes: Vec::new(),
        };
        (None, verdict)
    } else {
        let uv = solve_uv_system(&p, tol)?;
        if uv.cbar_ill_conditioned {
            notes.push("regular companion solve for c̄ is ill-conditioned".to_string());
        }
        if uv.near_cutoff {
            notes.push(
                "a singular value of the (u, v) system sits near the rank cutoff".to_string(),
            );
        }
        let mut status = match (uv.consistent, uv.ill_conditioned) {
            (_, true) => VerdictStatus::IllConditioned,
            (true, false) => VerdictStatus::Solvable,
            (false, false) => VerdictStatus::Unsolvable,
        };
        let mut solution = None;
        let mut certificate_residual = uv.relative_residual(tol);
        let mut solution_difference = None;
        if let Some(w) = &uv.witness {
            let parts = particular_solution_parts(w, &p)?;
            solution_difference = Some(parts.difference);
            certificate_residual = parts.residual;
            if parts.difference > tol || parts.residual > tol {
                notes.push(format!(
                    "witness certificate failed: formula gap {:.3e}, residual {:.3e}",
                    parts.difference, parts.residual
                ));
                status = VerdictStatus::IllConditioned;
            }
            solution = Some(parts.x_u);
        }
        let verdict = Verdict {
            status,
            witness_norm: uv.witness.as_ref().map(UVWitness::norm),
            solution_norm: solution.as_ref().map(ComplexMatrix::norm_fro),
            witness: uv.witness.clone(),
            solution,
            certificate_residual,
            oracle_agreement: None,
            tolerance: tol,
            alpha: p.alpha,
            lambda_shift: p.lambda_shift,
            uv_residual: uv.residual,
            uv_threshold: uv.threshold,
            solution_difference,
            cbar_condition: uv.cbar_condition,
            cbar_quadrature_difference: None,
            oracle: None,
            notes: Vec::new(),
        };
        (Some(uv), verdict)
    };

    if opts.oracle {
        let answer = oracle_solve_with(
            &OracleQuery::Sylvester {
                a: &p.a,
                b: &p.b,
                c: &p.c,
            },
            tol,
        )?;
        let decided = uv.as_ref().is_none_or(|s| s.consistent);
        verdict.oracle_agreement = Some(answer.consistent == decided);
        if answer.near_cutoff {
            notes.push("oracle rank decision sits near the cutoff".to_string());
        }
        verdict.oracle = Some(answer);
    }
    if opts.quadrature && c.max_abs() != 0.0 {
        let direct = solve_cbar_direct(&p.a, &p.b, &p.c)?.cbar;
        let quad = solve_cbar_quadrature(&p.a, &p.b, &p.c, QUADRATURE_TOL.min(tol))?;
        verdict.cbar_quadrature_difference =
            Some(ratio(quad.cbar.distance(&direct), direct.norm_fro()));
    }
    verdict.notes = notes;
    Ok(Diagnosis {
        problem: p,
        uv,
        verdict,
    })
}

/// The problem `a x − x a = I`, which has no solution since the left side
/// is traceless.
pub fn check_trace_obstruction(a: &ComplexMatrix, opts: &DiagnoseOptions) -> Result<Verdict> {
    if !a.is_square() {
        return Err(Error::Dimension(
            "trace obstruction needs a square matrix".into(),
        ));
    }
    let id = ComplexMatrix::identity(a.nrows());
    let opts = DiagnoseOptions {
        oracle: true,
        ..*opts
    };
    Ok(diagnose(a, a, &id, &opts)?.verdict)
}
