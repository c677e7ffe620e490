//! Square roots of `N0^2 = diag(a^2, b^2)` and the quadratic block equation
//! `Y o N1 o Y = N2`.
//!
//! Nonzero solutions of the homogeneous equations `a x = x b` and
//! `b y = y a` are exactly the off-diagonal blocks of nonprimary square roots
//! of `N0^2` that are similar to `N0- = diag(a, -b)`. The inhomogeneous
//! problem is recast as `Y o N1 o Y = N2` with
//! `N1 = [[a, -c̄], [0, -b]]` and `N2 = [[a, -c̄ - r], [0, -b]]`; a solution of
//! the unipotent form `[[1, q], [0, 1]]` exists iff `q b - a q = r` has a
//! solution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::block::{block_chain, block_inverse, block_mul, commutes_with_n0_plus, BlockMatrix};
use crate::error::{Error, Result};
use crate::matrix::{ratio, ComplexMatrix};
use crate::numerics::{
    default_rank_eps, kron_vec_operator, lstsq_solve_scaled, nullspace_scaled, principal_sqrt,
    smallest_singular_pair, OperatorSign,
};
use crate::regular::solve_cbar_direct;
use crate::singular::SylvesterProblem;

/// Default relative tolerance for root and intertwining residuals.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;
/// Default relative tolerance for `Y o N1 o Y = N2`.
pub const DEFAULT_QUADRATIC_TOL: f64 = 1e-8;
/// Default per-entry tolerance of the unipotent filter.
pub const DEFAULT_UNIPOTENT_TOL: f64 = 1e-7;

/// Which homogeneous equation the off-diagonal block solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSide {
    /// `x` with `a x = x b`, placed in the upper-right block.
    Upper,
    /// `y` with `b y = y a`, placed in the lower-left block.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCandidate {
    pub root: BlockMatrix,
    pub is_square_root: bool,
    pub is_primary: bool,
    /// `U` with `U^-1 o N0- o U = root`.
    pub similarity_to_n0_minus: Option<BlockMatrix>,
    /// Relative residuals keyed by check name.
    pub residuals: BTreeMap<String, f64>,
}

fn norm_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.norm_fro() + b.norm_fro()
}

/// `‖a x − x b‖ / ((‖a‖ + ‖b‖) ‖x‖)`.
fn intertwining_residual(a: &ComplexMatrix, b: &ComplexMatrix, x: &ComplexMatrix) -> f64 {
    let r = (a * x - x * b).norm_fro();
    ratio(r, norm_sum(a, b) * x.norm_fro())
}

fn square_residual(root: &BlockMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let target = BlockMatrix::n0_squared(a, b);
    let sq = block_mul(root, root)?;
    Ok(ratio(
        sq.distance(&target),
        root.norm_fro().powi(2) + target.norm_fro(),
    ))
}

/// A square root is primary when it is block diagonal with diagonal blocks
/// that square to `a^2` and `b^2`.
fn primary_residual(root: &BlockMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let off = root.a12().norm_fro().hypot(root.a21().norm_fro());
    let off = ratio(off, root.norm_fro());
    let a2 = a * a;
    let b2 = b * b;
    let d1 = ratio(
        (root.a11() * root.a11()).distance(&a2),
        root.a11().norm_fro().powi(2) + a2.norm_fro(),
    );
    let d2 = ratio(
        (root.a22() * root.a22()).distance(&b2),
        root.a22().norm_fro().powi(2) + b2.norm_fro(),
    );
    off.max(d1).max(d2)
}

fn candidate(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    x: &ComplexMatrix,
    side: RootSide,
    tol: f64,
) -> Result<RootCandidate> {
    let mut residuals = BTreeMap::new();
    let (root, similarity, bar) = match side {
        RootSide::Upper => {
            residuals.insert("intertwining".to_string(), intertwining_residual(a, b, x));
            let bar = solve_cbar_direct(a, b, x)?.cbar;
            residuals.insert(
                "bar_equation".to_string(),
                ratio(
                    (a * &bar + &bar * b).distance(x),
                    norm_sum(a, b) * bar.norm_fro() + x.norm_fro(),
                ),
            );
            residuals.insert(
                "bar_intertwining".to_string(),
                intertwining_residual(a, b, &bar),
            );
            let root = BlockMatrix::upper(a.clone(), x.clone(), -b)?;
            (root, BlockMatrix::unipotent_upper(&bar), bar)
        }
        RootSide::Lower => {
            residuals.insert("intertwining".to_string(), intertwining_residual(b, a, x));
            let bar = solve_cbar_direct(b, a, x)?.cbar;
            residuals.insert(
                "bar_equation".to_string(),
                ratio(
                    (b * &bar + &bar * a).distance(x),
                    norm_sum(a, b) * bar.norm_fro() + x.norm_fro(),
                ),
            );
            residuals.insert(
                "bar_intertwining".to_string(),
                intertwining_residual(b, a, &bar),
            );
            let root = BlockMatrix::lower(a.clone(), x.clone(), -b)?;
            (root, BlockMatrix::unipotent_lower(&-&bar), bar)
        }
    };
    let n0_minus = BlockMatrix::n0_minus(a, b);
    let conjugated = block_chain(&[&block_inverse(&similarity)?, &n0_minus, &similarity])?;
    let scale = n0_minus.norm_fro() * (1.0 + bar.norm_fro()).powi(2);
    residuals.insert(
        "similarity".to_string(),
        ratio(conjugated.distance(&root), scale),
    );
    let square = square_residual(&root, a, b)?;
    residuals.insert("square".to_string(), square);
    let primary = primary_residual(&root, a, b);
    Ok(RootCandidate {
        is_square_root: square <= tol,
        is_primary: square <= tol && primary <= tol,
        similarity_to_n0_minus: Some(similarity),
        residuals,
        root,
    })
}

/// Square root `N_x = [[a, x], [0, -b]]` (upper) or `[[a, 0], [y, -b]]`
/// (lower) of `N0^2` built from a homogeneous solution, with the similarity
/// `[[1, x̄], [0, 1]]` (resp. `[[1, 0], [-ȳ, 1]]`) to `N0-`, where
/// `a x̄ + x̄ b = x` (resp. `b ȳ + ȳ a = y`).
pub fn build_nx(
    p: &SylvesterProblem,
    x: &ComplexMatrix,
    side: RootSide,
    tol: f64,
) -> Result<RootCandidate> {
    let (n, m) = p.dims();
    let expected = match side {
        RootSide::Upper => (n, m),
        RootSide::Lower => (m, n),
    };
    if x.shape() != expected {
        return Err(Error::Dimension(format!(
            "off-diagonal block must be {}x{}, got {:?}",
            expected.0,
            expected.1,
            x.shape()
        )));
    }
    let out = candidate(&p.a, &p.b, x, side, tol)?;
    let r = out.residuals["intertwining"];
    if r > tol {
        return Err(Error::Precondition(format!(
            "block does not intertwine the coefficients (relative residual {r:.3e})"
        )));
    }
    Ok(out)
}

fn homogeneous_basis_of(left: &ComplexMatrix, right: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let k = kron_vec_operator(left, right, OperatorSign::Minus)?;
    let dim = k.nrows();
    let scale = left.norm2() + right.norm2();
    nullspace_scaled(&k, default_rank_eps(dim, dim), scale)?
        .iter()
        .map(|z| ComplexMatrix::from_vec(z, left.nrows(), right.nrows()))
        .collect()
}

/// Orthonormal bases of the solutions of `a x = x b` and `b y = y a`.
pub fn homogeneous_nullspaces(
    p: &SylvesterProblem,
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    Ok((
        homogeneous_basis_of(&p.a, &p.b)?,
        homogeneous_basis_of(&p.b, &p.a)?,
    ))
}

/// The three equivalent statements for intersecting spectra: a nonzero
/// homogeneous solution, a nonprimary square root of `N0^2` similar to
/// `N0-`, and a non-block-diagonal element of `M0` commuting with `N0+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootEquivalence {
    pub nonzero_solution: bool,
    pub nonprimary_root: bool,
    pub commuting_unipotent: bool,
    pub nullity: usize,
    /// Relative residual of the homogeneous equation for the block used.
    pub intertwining_residual: f64,
    pub square_residual: f64,
    pub commutator_residual: f64,
}

impl RootEquivalence {
    pub fn consistent(&self) -> bool {
        self.nonzero_solution == self.nonprimary_root
            && self.nonprimary_root == self.commuting_unipotent
    }
}

/// Evaluates the three statements constructively. The block used for the
/// root and the commuting element is the first nullspace vector, or the
/// smallest right singular vector when the nullspace is trivial, so that
/// each statement is actually tested.
pub fn root_equivalence(p: &SylvesterProblem, tol: f64) -> Result<RootEquivalence> {
    let (n, m) = p.dims();
    let (basis, _) = homogeneous_nullspaces(p)?;
    let x = match basis.first() {
        Some(x) => x.clone(),
        None => {
            let k = kron_vec_operator(&p.a, &p.b, OperatorSign::Minus)?;
            let (_, z) = smallest_singular_pair(&k)?;
            ComplexMatrix::from_vec(&z, n, m)?
        }
    };
    let root = candidate(&p.a, &p.b, &x, RootSide::Upper, tol)?;
    let u = BlockMatrix::unipotent_upper(&x);
    let commutator_residual = crate::block::n0_plus_commutator(&u, &p.a, &p.b)?;
    Ok(RootEquivalence {
        nonzero_solution: !basis.is_empty(),
        nonprimary_root: root.is_square_root && !root.is_primary,
        commuting_unipotent: commutes_with_n0_plus(&u, &p.a, &p.b, tol)?,
        nullity: basis.len(),
        intertwining_residual: root.residuals["intertwining"],
        square_residual: root.residuals["square"],
        commutator_residual,
    })
}

fn i_times(m: &ComplexMatrix) -> ComplexMatrix {
    m.scale(Complex64::i())
}

/// The four roots `[[1, -e1], [0, 1]] o diag(±√a, ±i√b) o [[1, e1], [0, 1]]`
/// of `N1 = [[a, -c̄], [0, -b]]`, where `a e1 + e1 b = -c̄`. Ordered by
/// branch `(k1, k2)` = (0,0), (0,1), (1,0), (1,1), with `(-1)^k` signs on
/// the two diagonal factors.
pub fn block_roots_of_n1(
    p: &SylvesterProblem,
    cbar: &ComplexMatrix,
    tol: f64,
) -> Result<Vec<BlockMatrix>> {
    let e1 = solve_cbar_direct(&p.a, &p.b, &-cbar)?.cbar;
    let n1 = BlockMatrix::upper(p.a.clone(), -cbar, -&p.b)?;
    roots_from_e(&p.a, &p.b, &e1, &n1, tol)
}

fn roots_from_e(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    e: &ComplexMatrix,
    target: &BlockMatrix,
    tol: f64,
) -> Result<Vec<BlockMatrix>> {
    let sa = principal_sqrt(a)?;
    let sb = i_times(&principal_sqrt(b)?);
    let left = BlockMatrix::unipotent_upper(&-e);
    let right = BlockMatrix::unipotent_upper(e);
    let mut roots = Vec::with_capacity(4);
    for (k1, k2) in [(false, false), (false, true), (true, false), (true, true)] {
        let d1 = if k1 { -&sa } else { sa.clone() };
        let d2 = if k2 { -&sb } else { sb.clone() };
        let root = block_chain(&[&left, &BlockMatrix::diag(d1, d2), &right])?;
        let sq = block_mul(&root, &root)?;
        let residual = ratio(sq.distance(target), target.norm_fro());
        if residual > tol {
            return Err(Error::InternalConsistency(format!(
                "branch ({}, {}) squares to N1 only within {residual:.3e}",
                k1 as u8, k2 as u8
            )));
        }
        roots.push(root);
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticOptions {
    /// Relative tolerance for `Y o N1 o Y = N2` and for the off-diagonal
    /// equation of each block-structured root.
    pub tol: f64,
    /// Per-entry tolerance of the unipotent filter, scaled by `√n`, `√m`
    /// and `√(nm) ‖Y‖` for the three blocks.
    pub unipotent_tol: f64,
    pub root_tol: f64,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_QUADRATIC_TOL,
            unipotent_tol: DEFAULT_UNIPOTENT_TOL,
            root_tol: DEFAULT_ROOT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSolveResult {
    pub n1: BlockMatrix,
    pub n2: BlockMatrix,
    pub e1: ComplexMatrix,
    pub e2: ComplexMatrix,
    pub roots_of_n1: Vec<BlockMatrix>,
    pub y_solutions: Vec<BlockMatrix>,
    /// Relative residual of `Y o N1 o Y = N2` for each entry of
    /// `y_solutions`.
    pub y_residuals: Vec<f64>,
    /// Upper-right blocks of the solutions of the form `±[[1, q], [0, 1]]`.
    pub yq_solutions: Vec<ComplexMatrix>,
    pub notes: Vec<String>,
}

impl QuadraticSolveResult {
    pub fn has_unipotent(&self) -> bool {
        !self.yq_solutions.is_empty()
    }
}

/// Diagonal sign patterns `(ξ, η)` of block-structured roots of
/// `P = [[a^2, P12], [0, b^2]]` besides the principal one.
const SIGN_VARIANTS: [(f64, f64); 3] = [(1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Roots `[[ξ, z], [0, η]]` of an upper block-triangular `P` whose diagonal
/// blocks are `a^2` and `b^2`: the principal root of the flattened matrix
/// plus the sign variants `ξ = ±a`, `η = ±b` for which `ξ z + z η = P12` is
/// solvable.
fn roots_of_p(
    pm: &BlockMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: f64,
    notes: &mut Vec<String>,
    branch: usize,
) -> Result<Vec<BlockMatrix>> {
    let (n, _) = pm.dims();
    let mut out = Vec::new();
    match principal_sqrt(&pm.to_flat()) {
        Ok(z) => out.push(BlockMatrix::from_flat(&z, n)?),
        Err(Error::BranchCut(z)) => notes.push(format!(
            "branch {branch}: principal root skipped, eigenvalue {z} on the branch cut"
        )),
        Err(e) => return Err(e),
    }
    let p12 = pm.a12();
    for (s1, s2) in SIGN_VARIANTS {
        let xi = a.scale_real(s1);
        let eta = b.scale_real(s2);
        let k = kron_vec_operator(&xi, &eta, OperatorSign::Plus)?;
        let dim = k.nrows();
        let sol = lstsq_solve_scaled(
            &k,
            &p12.vec(),
            default_rank_eps(dim, dim),
            xi.norm2() + eta.norm2(),
        )?;
        let z = ComplexMatrix::from_vec(&sol.solution, n, b.nrows())?;
        let residual = ratio(
            (&xi * &z + &z * &eta).distance(p12),
            norm_sum(&xi, &eta) * z.norm_fro() + p12.norm_fro(),
        );
        if residual <= tol {
            out.push(BlockMatrix::upper(xi, z, eta)?);
        }
    }
    Ok(out)
}

fn unipotent_block(y: &BlockMatrix, tol: f64) -> Option<ComplexMatrix> {
    let (n, m) = y.dims();
    let scale = y.norm_fro();
    for cand in [y.clone(), y.neg()] {
        let d1 = cand.a11().distance(&ComplexMatrix::identity(n));
        let d2 = cand.a22().distance(&ComplexMatrix::identity(m));
        let low = cand.a21().norm_fro();
        if d1 <= tol * (n as f64).sqrt()
            && d2 <= tol * (m as f64).sqrt()
            && low <= tol * ((n * m) as f64).sqrt() * scale
        {
            return Some(cand.a12().clone());
        }
    }
    None
}

fn push_distinct(list: &mut Vec<BlockMatrix>, y: BlockMatrix) -> bool {
    let dup = list
        .iter()
        .any(|z| z.distance(&y) <= 1e-8 * y.norm_fro().max(z.norm_fro()));
    if !dup {
        list.push(y);
    }
    !dup
}

/// Solves `Y o N1 o Y = N2` over the enumerated family
/// `Y = S^-1 o Z o S^-1`, with `S` ranging over the four roots of `N1` and
/// `Z` over the block-structured roots of `P = S o N2 o S`.
///
/// The family is finite while the full solution set is not, so an empty
/// `yq_solutions` means no unipotent solution was found in it; the
/// `(u, v)` system remains the authoritative test.
pub fn solve_quadratic_yny(
    p: &SylvesterProblem,
    cbar: &ComplexMatrix,
    r: &ComplexMatrix,
    opts: &QuadraticOptions,
) -> Result<QuadraticSolveResult> {
    let (a, b) = (&p.a, &p.b);
    let c2 = cbar + r;
    let e1 = solve_cbar_direct(a, b, &-cbar)?.cbar;
    let e2 = solve_cbar_direct(a, b, &-&c2)?.cbar;
    let n1 = BlockMatrix::upper(a.clone(), -cbar, -b)?;
    let n2 = BlockMatrix::upper(a.clone(), -&c2, -b)?;
    let roots = roots_from_e(a, b, &e1, &n1, opts.root_tol)?;
    let mut notes = Vec::new();
    let mut y_solutions = Vec::new();
    let mut y_residuals = Vec::new();
    for (branch, s) in roots.iter().enumerate() {
        let s_inv = block_inverse(s)?;
        let pm = block_chain(&[s, &n2, s])?;
        for z in roots_of_p(&pm, a, b, opts.tol, &mut notes, branch)? {
            let y = block_chain(&[&s_inv, &z, &s_inv])?;
            let lhs = block_chain(&[&y, &n1, &y])?;
            let residual = ratio(
                lhs.distance(&n2),
                y.norm_fro().powi(2) * n1.norm_fro() + n2.norm_fro(),
            );
            if residual <= opts.tol && push_distinct(&mut y_solutions, y) {
                y_residuals.push(residual);
            }
        }
    }
    let mut yq_solutions: Vec<ComplexMatrix> = Vec::new();
    for y in &y_solutions {
        if let Some(q) = unipotent_block(y, opts.unipotent_tol) {
            let dup = yq_solutions
                .iter()
                .any(|w| w.distance(&q) <= 1e-8 * q.norm_fro().max(w.norm_fro()).max(1.0));
            if !dup {
                yq_solutions.push(q);
            }
        }
    }
    if yq_solutions.is_empty() {
        notes.push("no unipotent solution found in the enumerated family".into());
    }
    Ok(QuadraticSolveResult {
        n1,
        n2,
        e1,
        e2,
        roots_of_n1: roots,
        y_solutions,
        y_residuals,
        yq_solutions,
        notes,
    })
}

/// Residuals of `[[1, q], [0, 1]] o N1 o [[1, q], [0, 1]] = N2` and of the
/// equivalent `q b − a q = r`, on the common scale
/// `‖q‖ (‖a‖ + ‖b‖) + ‖r‖ + ‖c̄‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnipotentCheck {
    pub block_residual: f64,
    pub sylvester_residual: f64,
    pub tol: f64,
}

impl UnipotentCheck {
    pub fn holds(&self) -> bool {
        self.block_residual <= self.tol && self.sylvester_residual <= self.tol
    }

    /// Whether the two forms reach the same decision.
    pub fn forms_agree(&self) -> bool {
        (self.block_residual <= self.tol) == (self.sylvester_residual <= self.tol)
    }
}

pub fn verify_unipotent_solution(
    q: &ComplexMatrix,
    p: &SylvesterProblem,
    cbar: &ComplexMatrix,
    r: &ComplexMatrix,
    tol: f64,
) -> Result<UnipotentCheck> {
    let (a, b) = (&p.a, &p.b);
    let (n, m) = p.dims();
    for (name, mat) in [("q", q), ("c̄", cbar), ("r", r)] {
        if mat.shape() != (n, m) {
            return Err(Error::Dimension(format!(
                "{name} must be {n}x{m}, got {:?}",
                mat.shape()
            )));
        }
    }
    let yq = BlockMatrix::unipotent_upper(q);
    let n1 = BlockMatrix::upper(a.clone(), -cbar, -b)?;
    let n2 = BlockMatrix::upper(a.clone(), -(cbar + r), -b)?;
    let lhs = block_chain(&[&yq, &n1, &yq])?;
    let scale = q.norm_fro() * norm_sum(a, b) + r.norm_fro() + cbar.norm_fro();
    Ok(UnipotentCheck {
        block_residual: ratio(lhs.distance(&n2), scale),
        sylvester_residual: ratio((q * b - a * q).distance(r), scale),
        tol,
    })
}
