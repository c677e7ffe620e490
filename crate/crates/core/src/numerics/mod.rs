//! Dense complex kernels: spectra, matrix functions, vectorized operators and
//! rank-revealing least squares.

mod expm;
mod sqrtm;

pub use expm::mat_exp;
pub use sqrtm::principal_sqrt;

use nalgebra::{DMatrix, DVector, Schur, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ONE, ZERO};

/// Default rank cutoff factor: `eps_rank = max(rows, cols) * 2^-40`.
pub fn default_rank_eps(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * 2f64.powi(-40)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub min_real_part: f64,
    /// 2-norm condition number of the matrix; `None` when it is exactly
    /// singular.
    pub condition_estimate: Option<f64>,
}

impl SpectrumReport {
    /// Wraps a list of eigenvalues without a condition estimate.
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let min_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        Self {
            eigenvalues,
            min_real_part,
            condition_estimate: None,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Spectrum of `m + lambda * I`.
    pub fn shifted(&self, lambda: f64) -> Self {
        let mut out = Self::from_eigenvalues(
            self.eigenvalues
                .iter()
                .map(|z| z + Complex64::new(lambda, 0.0))
                .collect(),
        );
        out.condition_estimate = None;
        out
    }
}

fn require_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn is_upper_triangular(m: &DMatrix<Complex64>) -> bool {
    (0..m.ncols()).all(|j| ((j + 1)..m.nrows()).all(|i| m[(i, j)] == ZERO))
}

fn is_lower_triangular(m: &DMatrix<Complex64>) -> bool {
    (0..m.ncols()).all(|j| (0..j).all(|i| m[(i, j)] == ZERO))
}

/// Complex Schur form `m = q t q^H` with `t` upper triangular.
pub(crate) fn schur(m: &ComplexMatrix) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = require_square(m, "Schur input")?;
    if is_upper_triangular(m.as_inner()) {
        return Ok((DMatrix::identity(n, n), m.as_inner().clone()));
    }
    let decomposition = Schur::try_new(m.as_inner().clone(), f64::EPSILON, 10_000 * n.max(10))
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (q, mut t) = decomposition.unpack();
    // Complex Schur forms are triangular; clear roundoff below the diagonal.
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

/// Eigenvalues of a square matrix, as an unordered multiset.
///
/// Triangular input returns its diagonal exactly.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<SpectrumReport> {
    require_square(m, "eigenvalue input")?;
    let inner = m.as_inner();
    let eigenvalues: Vec<Complex64> = if is_upper_triangular(inner) || is_lower_triangular(inner) {
        m.diagonal()
    } else {
        let (_, t) = schur(m)?;
        t.diagonal().iter().copied().collect()
    };
    if eigenvalues
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    let mut report = SpectrumReport::from_eigenvalues(eigenvalues);
    report.condition_estimate = condition_number(m)?;
    Ok(report)
}

/// Thin singular value decomposition `m = u diag(s) vᴴ`.
pub(crate) struct Svd {
    pub u: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<Complex64>,
}

pub(crate) fn svd(m: &DMatrix<Complex64>) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let mat = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let decomposition = mat
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (
        decomposition.U(),
        decomposition.S().column_vector(),
        decomposition.V(),
    );
    let singular_values: Vec<f64> = (0..p).map(|j| s[j].re).collect();
    if singular_values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite singular value".into()));
    }
    Ok(Svd {
        u: DMatrix::from_fn(rows, p, |i, j| u[(i, j)]),
        singular_values,
        v: DMatrix::from_fn(cols, p, |i, j| v[(i, j)]),
    })
}

/// 2-norm condition number; `None` for an exactly singular matrix.
pub fn condition_number(m: &ComplexMatrix) -> Result<Option<f64>> {
    let s = svd(m.as_inner())?;
    let max = s.singular_values.iter().copied().fold(0.0, f64::max);
    let min = s
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { Some(max / min) } else { None })
}

/// Sign of the right multiplication in [`kron_vec_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSign {
    Plus,
    Minus,
}

impl OperatorSign {
    fn factor(self) -> Complex64 {
        match self {
            OperatorSign::Plus => ONE,
            OperatorSign::Minus => -ONE,
        }
    }
}

/// Matrix of `x -> a x + sign * x b` acting on column-stacked `n x m`
/// matrices: `I_m (x) a + sign * (b^T (x) I_n)`.
pub fn kron_vec_operator(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    sign: OperatorSign,
) -> Result<ComplexMatrix> {
    let n = require_square(a, "left factor")?;
    let m = require_square(b, "right factor")?;
    let s = sign.factor();
    let dim = n * m;
    let mut k = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..m {
        for i in 0..n {
            let row = i + j * n;
            for p in 0..n {
                k[(row, p + j * n)] += a.get(i, p);
            }
            for l in 0..m {
                k[(row, i + l * n)] += s * b.get(l, j);
            }
        }
    }
    Ok(ComplexMatrix::from_inner(k))
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

/// Matrix of `x -> sum_k l_k x r_k` under column stacking, using
/// `vec(l x r) = (r^T (x) l) vec(x)`.
pub fn sandwich_operator(terms: &[(&ComplexMatrix, &ComplexMatrix)]) -> Result<ComplexMatrix> {
    let (first_l, first_r) = terms
        .first()
        .ok_or_else(|| Error::Parameter("empty operator expansion".into()))?;
    let rows = first_l.nrows() * first_r.ncols();
    let cols = first_l.ncols() * first_r.nrows();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for (l, r) in terms {
        if l.nrows() * r.ncols() != rows || l.ncols() * r.nrows() != cols {
            return Err(Error::Dimension("inconsistent operator terms".into()));
        }
        out = out + kron(&r.transpose(), l);
    }
    Ok(out)
}

/// Outcome of [`lstsq_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub solution: DVector<Complex64>,
    pub residual_norm: f64,
    pub rank: usize,
    /// Absolute singular-value cutoff used for the rank decision.
    pub cutoff: f64,
    /// Largest singular value of the system matrix.
    pub sigma_max: f64,
    /// Some singular value sits within a factor 10 of the cutoff, so the
    /// rank decision is fragile.
    pub near_cutoff: bool,
}

/// Minimum-norm least-squares solve with the default rank cutoff.
pub fn lstsq_solve(k: &ComplexMatrix, rhs: &DVector<Complex64>) -> Result<LstsqSolution> {
    lstsq_solve_with(k, rhs, default_rank_eps(k.nrows(), k.ncols()))
}

/// Minimum-norm least-squares solve; singular values `<= eps_rank * sigma_max`
/// are treated as zero.
pub fn lstsq_solve_with(
    k: &ComplexMatrix,
    rhs: &DVector<Complex64>,
    eps_rank: f64,
) -> Result<LstsqSolution> {
    lstsq_solve_scaled(k, rhs, eps_rank, 0.0)
}

/// Like [`lstsq_solve_with`], with the cutoff taken relative to
/// `max(sigma_max, scale)`. Passing the natural magnitude of an operator
/// (for `x -> a x − x b`, `‖a‖ + ‖b‖`) keeps operators that cancel to
/// roundoff from being treated as full rank.
pub fn lstsq_solve_scaled(
    k: &ComplexMatrix,
    rhs: &DVector<Complex64>,
    eps_rank: f64,
    scale: f64,
) -> Result<LstsqSolution> {
    if rhs.len() != k.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, system has {} rows",
            rhs.len(),
            k.nrows()
        )));
    }
    let decomposition = svd(k.as_inner())?;
    let (u, v) = (&decomposition.u, &decomposition.v);
    let sv = &decomposition.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = eps_rank * sigma_max.max(scale);
    let mut solution = DVector::<Complex64>::zeros(k.ncols());
    let mut rank = 0;
    let mut near_cutoff = false;
    for (idx, &s) in sv.iter().enumerate() {
        if s > cutoff / 10.0 && s <= cutoff * 10.0 {
            near_cutoff = true;
        }
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coeff = u.column(idx).dotc(rhs) / s;
            solution += v.column(idx) * coeff;
        }
    }
    let residual_norm = (k.as_inner() * &solution - rhs).norm();
    Ok(LstsqSolution {
        solution,
        residual_norm,
        rank,
        cutoff,
        sigma_max,
        near_cutoff,
    })
}

/// Solves the square system `k z = rhs` by partial-pivot LU. Fails when the
/// pivot ratio signals numerical singularity.
pub fn lu_solve(k: &ComplexMatrix, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let n = require_square(k, "system matrix")?;
    if rhs.len() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, system has {n} rows",
            rhs.len()
        )));
    }
    let lu = LU::new(k.as_inner().clone());
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= max * f64::EPSILON * n as f64 {
        return Err(Error::Singular(format!(
            "pivot ratio {:.3e} below working precision",
            if max == 0.0 { 0.0 } else { min / max }
        )));
    }
    let z = lu
        .solve(rhs)
        .ok_or_else(|| Error::Singular("LU factor has a zero pivot".into()))?;
    if z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
        return Err(Error::Singular("solution overflowed".into()));
    }
    Ok(z)
}

/// Orthonormal basis of the nullspace of `k`, from right singular vectors
/// whose singular value falls under the cutoff.
///
/// Ordering is by singular value, ascending. Each vector is rotated so its
/// first non-negligible component is real and positive.
pub fn nullspace(k: &ComplexMatrix, eps_rank: f64) -> Result<Vec<DVector<Complex64>>> {
    nullspace_scaled(k, eps_rank, 0.0)
}

/// [`nullspace`] with the cutoff relative to `max(sigma_max, scale)`.
pub fn nullspace_scaled(
    k: &ComplexMatrix,
    eps_rank: f64,
    scale: f64,
) -> Result<Vec<DVector<Complex64>>> {
    let (rows, cols) = k.shape();
    // Pad wide systems with zero rows so the SVD yields a full right basis.
    let padded = if rows < cols {
        let mut p = DMatrix::<Complex64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(k.as_inner());
        p
    } else {
        k.as_inner().clone()
    };
    let decomposition = svd(&padded)?;
    let v = &decomposition.v;
    let sv = &decomposition.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = eps_rank * sigma_max.max(scale);
    let mut kernel: Vec<(f64, DVector<Complex64>)> = sv
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(idx, &s)| (s, v.column(idx).into_owned()))
        .collect();
    kernel.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(kernel.into_iter().map(|(_, v)| fix_phase(v)).collect())
}

/// Smallest singular value of `k` with its right singular vector,
/// phase-normalized like [`nullspace`].
pub fn smallest_singular_pair(k: &ComplexMatrix) -> Result<(f64, DVector<Complex64>)> {
    let (rows, cols) = k.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::<Complex64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(k.as_inner());
        p
    } else {
        k.as_inner().clone()
    };
    let decomposition = svd(&padded)?;
    let (idx, &sigma) = decomposition
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::Dimension("empty matrix".into()))?;
    Ok((sigma, fix_phase(decomposition.v.column(idx).into_owned())))
}

fn fix_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(pivot) = v
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-8 * scale.max(f64::MIN_POSITIVE))
    {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    v
}
