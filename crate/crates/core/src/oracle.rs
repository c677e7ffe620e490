//! Brute-force reference solver. Every linear matrix equation in the crate
//! is vectorized into an explicit Kronecker system and answered by
//! minimum-norm least squares with the shared rank cutoff.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hstack, ratio, vstack, ComplexMatrix};
use crate::numerics::{default_rank_eps, lstsq_solve_scaled, nullspace_scaled, sandwich_operator};

/// Default relative residual threshold for the consistency decision.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationId {
    /// `a x − x b = c`
    Sylvester,
    /// `a x + x b = c`
    RegularPlus,
    /// `a² ξ + a ξ b + ξ b² = rhs`
    GenSquare,
    /// `a v + u b = c̄` stacked over `a³v + a²vb + ub³ + aub² = 0`, unknowns `(v, u)`
    UvStacked,
    /// `a x = x b`
    Homogeneous,
    /// `b y = y a`
    AdjointHomogeneous,
}

/// One oracle question: an equation together with its data.
#[derive(Debug, Clone, Copy)]
pub enum OracleQuery<'a> {
    Sylvester {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
        c: &'a ComplexMatrix,
    },
    RegularPlus {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
        c: &'a ComplexMatrix,
    },
    GenSquare {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
        rhs: &'a ComplexMatrix,
    },
    UvStacked {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
        cbar: &'a ComplexMatrix,
    },
    Homogeneous {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
    },
    AdjointHomogeneous {
        a: &'a ComplexMatrix,
        b: &'a ComplexMatrix,
    },
}

impl OracleQuery<'_> {
    pub fn equation(&self) -> EquationId {
        match self {
            Self::Sylvester { .. } => EquationId::Sylvester,
            Self::RegularPlus { .. } => EquationId::RegularPlus,
            Self::GenSquare { .. } => EquationId::GenSquare,
            Self::UvStacked { .. } => EquationId::UvStacked,
            Self::Homogeneous { .. } => EquationId::Homogeneous,
            Self::AdjointHomogeneous { .. } => EquationId::AdjointHomogeneous,
        }
    }

    fn pair(&self) -> (&ComplexMatrix, &ComplexMatrix) {
        match *self {
            Self::Sylvester { a, b, .. }
            | Self::RegularPlus { a, b, .. }
            | Self::GenSquare { a, b, .. }
            | Self::UvStacked { a, b, .. }
            | Self::Homogeneous { a, b }
            | Self::AdjointHomogeneous { a, b } => (a, b),
        }
    }

    /// Right-hand side as an `(n·m)`-row matrix stack, column-stacked.
    fn rhs(&self) -> Result<DVector<Complex64>> {
        let (a, b) = self.pair();
        let (n, m) = (a.nrows(), b.nrows());
        let check = |x: &ComplexMatrix, what: &str| {
            if x.shape() != (n, m) {
                return Err(Error::Dimension(format!(
                    "{what} must be {n}x{m}, got {}x{}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            Ok(x.vec())
        };
        match *self {
            Self::Sylvester { c, .. } | Self::RegularPlus { c, .. } => check(c, "c"),
            Self::GenSquare { rhs, .. } => check(rhs, "rhs"),
            Self::UvStacked { cbar, .. } => {
                let top = check(cbar, "cbar")?;
                let mut out = DVector::zeros(2 * n * m);
                out.rows_mut(0, n * m).copy_from(&top);
                Ok(out)
            }
            Self::Homogeneous { .. } => Ok(DVector::zeros(n * m)),
            Self::AdjointHomogeneous { .. } => Ok(DVector::zeros(n * m)),
        }
    }
}

/// Explicit matrix of a vectorized matrix equation.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerOperator {
    pub matrix: ComplexMatrix,
    pub description: EquationId,
    /// Shapes of the unknowns, stacked in this order.
    pub unknowns: Vec<(usize, usize)>,
    /// Upper bound for the operator norm from the coefficient norms; the
    /// rank cutoff is taken relative to it.
    pub scale: f64,
}

impl KroneckerOperator {
    /// Applies the operator to the stacked vectorization of `unknowns`.
    pub fn apply(&self, unknowns: &[ComplexMatrix]) -> Result<DVector<Complex64>> {
        Ok(self.matrix.as_inner() * self.stack(unknowns)?)
    }

    pub fn stack(&self, unknowns: &[ComplexMatrix]) -> Result<DVector<Complex64>> {
        if unknowns.len() != self.unknowns.len()
            || unknowns
                .iter()
                .zip(&self.unknowns)
                .any(|(x, s)| x.shape() != *s)
        {
            return Err(Error::Dimension(format!(
                "expected unknowns of shapes {:?}",
                self.unknowns
            )));
        }
        let parts: Vec<DVector<Complex64>> = unknowns.iter().map(ComplexMatrix::vec).collect();
        let total = parts.iter().map(|p| p.len()).sum();
        let mut out = DVector::zeros(total);
        let mut offset = 0;
        for p in parts {
            out.rows_mut(offset, p.len()).copy_from(&p);
            offset += p.len();
        }
        Ok(out)
    }

    /// Splits a stacked vector back into matrices of the unknown shapes.
    pub fn split(&self, z: &DVector<Complex64>) -> Result<Vec<ComplexMatrix>> {
        let mut offset = 0;
        let mut out = Vec::with_capacity(self.unknowns.len());
        for &(r, c) in &self.unknowns {
            let part = z.rows(offset, r * c).into_owned();
            out.push(ComplexMatrix::from_vec(&part, r, c)?);
            offset += r * c;
        }
        Ok(out)
    }
}

fn require_square_pair(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(usize, usize)> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "a and b must be square, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a.nrows(), b.nrows()))
}

/// Builds the explicit operator for `query`.
pub fn kronecker_operator(query: &OracleQuery<'_>) -> Result<KroneckerOperator> {
    let (a, b) = query.pair();
    let (n, m) = require_square_pair(a, b)?;
    let i_n = ComplexMatrix::identity(n);
    let i_m = ComplexMatrix::identity(m);
    let neg_i_n = -&i_n;
    let equation = query.equation();
    let (na, nb) = (a.norm2(), b.norm2());
    let scale = match equation {
        EquationId::GenSquare => na * na + na * nb + nb * nb,
        EquationId::UvStacked => {
            (na + nb).max(na.powi(3) + na * na * nb + nb.powi(3) + na * nb * nb)
        }
        _ => na + nb,
    };
    let (matrix, unknowns) = match equation {
        EquationId::Sylvester | EquationId::Homogeneous => (
            sandwich_operator(&[(a, &i_m), (&neg_i_n, b)])?,
            vec![(n, m)],
        ),
        EquationId::RegularPlus => (sandwich_operator(&[(a, &i_m), (&i_n, b)])?, vec![(n, m)]),
        EquationId::GenSquare => {
            let a2 = a * a;
            let b2 = b * b;
            (
                sandwich_operator(&[(&a2, &i_m), (a, b), (&i_n, &b2)])?,
                vec![(n, m)],
            )
        }
        EquationId::UvStacked => {
            let a2 = a * a;
            let a3 = &a2 * a;
            let b2 = b * b;
            let b3 = &b2 * b;
            let top = hstack(
                &sandwich_operator(&[(a, &i_m)])?,
                &sandwich_operator(&[(&i_n, b)])?,
            );
            let bottom = hstack(
                &sandwich_operator(&[(&a3, &i_m), (&a2, b)])?,
                &sandwich_operator(&[(&i_n, &b3), (a, &b2)])?,
            );
            (vstack(&top, &bottom), vec![(n, m), (n, m)])
        }
        EquationId::AdjointHomogeneous => {
            let neg_i_m = -&i_m;
            (
                sandwich_operator(&[(b, &i_n), (&neg_i_m, a)])?,
                vec![(m, n)],
            )
        }
    };
    Ok(KroneckerOperator {
        matrix,
        description: equation,
        unknowns,
        scale,
    })
}

/// Left-hand side of the equation evaluated directly on matrices, stacked
/// the same way as the operator's output.
pub fn equation_lhs(
    query: &OracleQuery<'_>,
    unknowns: &[ComplexMatrix],
) -> Result<DVector<Complex64>> {
    let (a, b) = query.pair();
    let single = || {
        unknowns
            .first()
            .filter(|_| unknowns.len() == 1)
            .ok_or_else(|| Error::Dimension("expected one unknown".into()))
    };
    let out = match query.equation() {
        EquationId::Sylvester | EquationId::Homogeneous => {
            let x = single()?;
            (a * x - x * b).vec()
        }
        EquationId::RegularPlus => {
            let x = single()?;
            (a * x + x * b).vec()
        }
        EquationId::GenSquare => {
            let x = single()?;
            (a * a * x + a * x * b + x * b * b).vec()
        }
        EquationId::AdjointHomogeneous => {
            let y = single()?;
            (b * y - y * a).vec()
        }
        EquationId::UvStacked => {
            let [v, u] = unknowns else {
                return Err(Error::Dimension("expected unknowns (v, u)".into()));
            };
            let top = (a * v + u * b).vec();
            let a2 = a * a;
            let b2 = b * b;
            let bottom = (&a2 * a * v + &a2 * v * b + u * &b2 * b + a * u * &b2).vec();
            let mut out = DVector::zeros(top.len() + bottom.len());
            out.rows_mut(0, top.len()).copy_from(&top);
            out.rows_mut(top.len(), bottom.len()).copy_from(&bottom);
            out
        }
    };
    Ok(out)
}

/// Oracle verdict for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAnswer {
    pub equation: EquationId,
    /// Minimum-norm solution when consistent.
    pub solution: Option<Vec<ComplexMatrix>>,
    /// `‖K z − rhs‖` for the minimum-norm least-squares `z`.
    pub residual: f64,
    /// `residual / (scale ‖z‖ + ‖rhs‖)` with the operator's coefficient scale.
    pub relative_residual: f64,
    pub threshold: f64,
    pub consistent: bool,
    pub rank: usize,
    pub nullity: usize,
    /// The rank decision sits within a factor 10 of the cutoff.
    pub near_cutoff: bool,
}

/// Minimum-norm least-squares answer with the default threshold.
pub fn oracle_solve(query: &OracleQuery<'_>) -> Result<OracleAnswer> {
    oracle_solve_with(query, ORACLE_TOL)
}

pub fn oracle_solve_with(query: &OracleQuery<'_>, tol: f64) -> Result<OracleAnswer> {
    let op = kronecker_operator(query)?;
    let rhs = query.rhs()?;
    let (rows, cols) = op.matrix.shape();
    let ls = lstsq_solve_scaled(&op.matrix, &rhs, default_rank_eps(rows, cols), op.scale)?;
    let scale = op.scale * ls.solution.norm() + rhs.norm();
    let relative_residual = ratio(ls.residual_norm, scale);
    let consistent = relative_residual <= tol;
    Ok(OracleAnswer {
        equation: op.description,
        solution: if consistent {
            Some(op.split(&ls.solution)?)
        } else {
            None
        },
        residual: ls.residual_norm,
        relative_residual,
        threshold: tol,
        consistent,
        rank: ls.rank,
        nullity: op.matrix.ncols() - ls.rank,
        near_cutoff: ls.near_cutoff,
    })
}

/// Orthonormal kernel basis of the query's operator, each element split
/// into its unknown matrices.
pub fn oracle_kernel(query: &OracleQuery<'_>) -> Result<Vec<Vec<ComplexMatrix>>> {
    let op = kronecker_operator(query)?;
    let (rows, cols) = op.matrix.shape();
    nullspace_scaled(&op.matrix, default_rank_eps(rows, cols), op.scale)?
        .iter()
        .map(|z| op.split(z))
        .collect()
}

/// Basis of `{x : a x = x b}` as `n x m` matrices.
pub fn homogeneous_basis(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    flatten_single(oracle_kernel(&OracleQuery::Homogeneous { a, b })?)
}

/// Basis of `{y : b y = y a}` as `m x n` matrices.
pub fn adjoint_homogeneous_basis(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<Vec<ComplexMatrix>> {
    flatten_single(oracle_kernel(&OracleQuery::AdjointHomogeneous { a, b })?)
}

fn flatten_single(kernel: Vec<Vec<ComplexMatrix>>) -> Result<Vec<ComplexMatrix>> {
    kernel
        .into_iter()
        .map(|mut parts| {
            parts
                .pop()
                .ok_or_else(|| Error::InternalConsistency("empty kernel element".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(x: f64) -> ComplexMatrix {
        ComplexMatrix::scalar(Complex64::new(x, 0.0))
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn sylvester_scalar_examples() {
        let ans = oracle_solve(&OracleQuery::Sylvester {
            a: &s(2.0),
            b: &s(1.0),
            c: &s(3.0),
        })
        .unwrap();
        assert!(ans.consistent);
        assert_eq!(ans.nullity, 0);
        assert!(ans.solution.unwrap()[0].distance(&s(3.0)) < 1e-15);
        assert!(ans.residual < 1e-15);

        let ans = oracle_solve(&OracleQuery::Sylvester {
            a: &s(1.0),
            b: &s(1.0),
            c: &s(1.0),
        })
        .unwrap();
        assert!(!ans.consistent);
        assert!(ans.solution.is_none());
        assert_eq!(ans.nullity, 1);
        assert!((ans.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn operators_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random(&mut rng, 3, 3);
        let b = random(&mut rng, 2, 2);
        let c = random(&mut rng, 3, 2);
        let x = random(&mut rng, 3, 2);
        let y = random(&mut rng, 2, 3);
        let v = random(&mut rng, 3, 2);
        let cases: Vec<(OracleQuery<'_>, Vec<ComplexMatrix>)> = vec![
            (
                OracleQuery::Sylvester {
                    a: &a,
                    b: &b,
                    c: &c,
                },
                vec![x.clone()],
            ),
            (
                OracleQuery::RegularPlus {
                    a: &a,
                    b: &b,
                    c: &c,
                },
                vec![x.clone()],
            ),
            (
                OracleQuery::GenSquare {
                    a: &a,
                    b: &b,
                    rhs: &c,
                },
                vec![x.clone()],
            ),
            (
                OracleQuery::UvStacked {
                    a: &a,
                    b: &b,
                    cbar: &c,
                },
                vec![v, x.clone()],
            ),
            (OracleQuery::Homogeneous { a: &a, b: &b }, vec![x]),
            (OracleQuery::AdjointHomogeneous { a: &a, b: &b }, vec![y]),
        ];
        for (query, unknowns) in cases {
            let op = kronecker_operator(&query).unwrap();
            let applied = op.apply(&unknowns).unwrap();
            let direct = equation_lhs(&query, &unknowns).unwrap();
            assert!(
                (&applied - &direct).norm() <= 1e-12 * direct.norm(),
                "{:?}",
                query.equation()
            );
        }
    }

    #[test]
    fn homogeneous_bases() {
        assert!(homogeneous_basis(&s(2.0), &s(1.0)).unwrap().is_empty());
        assert!(adjoint_homogeneous_basis(&s(2.0), &s(1.0))
            .unwrap()
            .is_empty());
        let x = homogeneous_basis(&s(1.0), &s(1.0)).unwrap();
        assert_eq!(x.len(), 1);
        assert!(x[0].distance(&s(1.0)) < 1e-15);

        let a = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let x = homogeneous_basis(&a, &s(1.0)).unwrap();
        assert_eq!(x.len(), 1);
        let e1 = ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]).unwrap();
        assert!(x[0].distance(&e1) < 1e-15);
        let y = adjoint_homogeneous_basis(&a, &s(1.0)).unwrap();
        assert!(y[0].distance(&e1.transpose()) < 1e-15);
    }

    #[test]
    fn uv_stacked_on_jordan_instance() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let b = s(1.0);
        let c = ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]).unwrap();
        let direct = oracle_solve(&OracleQuery::Sylvester {
            a: &a,
            b: &b,
            c: &c,
        })
        .unwrap();
        assert!(direct.consistent);
        assert_eq!(direct.nullity, 1);

        let cbar = crate::regular::solve_cbar_direct(&a, &b, &c).unwrap().cbar;
        let ans = oracle_solve(&OracleQuery::UvStacked {
            a: &a,
            b: &b,
            cbar: &cbar,
        })
        .unwrap();
        assert!(ans.consistent);
        let sol = ans.solution.unwrap();
        let (v, u) = (&sol[0], &sol[1]);
        // x_u = a⁻¹ u b² + u b solves the original equation
        let x = a.inverse().unwrap() * u * &b * &b + u * &b;
        assert!((&a * &x - &x * &b).distance(&c) < 1e-12);
        assert!(v.is_finite());
    }
}
