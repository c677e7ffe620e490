//! The 2x2 block monoid over `(A1, M, K, A2)`.
//!
//! A [`BlockMatrix`] `[[a11, a12], [a21, a22]]` has an `n x n` block from the
//! left algebra, an `n x m` block from the module `M`, an `m x n` block from
//! the reverse module `K` and an `m x m` block from the right algebra. The
//! product is the typed one:
//!
//! ```text
//! [[a1, m1], [k1, b1]] o [[a2, m2], [k2, b2]]
//!     = [[a1 a2, a1 m2 + m1 b2], [k1 a2 + b1 k2, b1 b2]]
//! ```
//!
//! There is no `M x K -> A1` pairing, so the `m1 k2` and `k1 m2` terms of the
//! ordinary flattened product never appear. On block-triangular operands the
//! two products coincide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ratio, ComplexMatrix};
use crate::numerics::{condition_number, default_rank_eps};

/// Default relative tolerance for commutation residuals.
pub const DEFAULT_COMMUTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockMatrixRepr", into = "BlockMatrixRepr")]
pub struct BlockMatrix {
    a11: ComplexMatrix,
    a12: ComplexMatrix,
    a21: ComplexMatrix,
    a22: ComplexMatrix,
    trivial_k: bool,
}

#[derive(Serialize, Deserialize)]
struct BlockMatrixRepr {
    a11: ComplexMatrix,
    a12: ComplexMatrix,
    a21: ComplexMatrix,
    a22: ComplexMatrix,
    #[serde(default)]
    trivial_k: bool,
}

impl TryFrom<BlockMatrixRepr> for BlockMatrix {
    type Error = Error;

    fn try_from(r: BlockMatrixRepr) -> Result<Self> {
        let mut out = BlockMatrix::new(r.a11, r.a12, r.a21, r.a22)?;
        if r.trivial_k {
            if out.a21.max_abs() != 0.0 {
                return Err(Error::Parameter("trivial K block must be zero".into()));
            }
            out.trivial_k = true;
        }
        Ok(out)
    }
}

impl From<BlockMatrix> for BlockMatrixRepr {
    fn from(b: BlockMatrix) -> Self {
        Self {
            a11: b.a11,
            a12: b.a12,
            a21: b.a21,
            a22: b.a22,
            trivial_k: b.trivial_k,
        }
    }
}

impl BlockMatrix {
    pub fn new(
        a11: ComplexMatrix,
        a12: ComplexMatrix,
        a21: ComplexMatrix,
        a22: ComplexMatrix,
    ) -> Result<Self> {
        let n = a11.nrows();
        let m = a22.nrows();
        let ok = a11.shape() == (n, n)
            && a22.shape() == (m, m)
            && a12.shape() == (n, m)
            && a21.shape() == (m, n);
        if !ok {
            return Err(Error::Dimension(format!(
                "incoherent blocks: a11 {:?}, a12 {:?}, a21 {:?}, a22 {:?}",
                a11.shape(),
                a12.shape(),
                a21.shape(),
                a22.shape()
            )));
        }
        Ok(Self {
            a11,
            a12,
            a21,
            a22,
            trivial_k: false,
        })
    }

    /// Upper block-triangular element `[[a11, a12], [0, a22]]`.
    pub fn upper(a11: ComplexMatrix, a12: ComplexMatrix, a22: ComplexMatrix) -> Result<Self> {
        let zero = ComplexMatrix::zeros(a22.nrows(), a11.nrows());
        Self::new(a11, a12, zero, a22)
    }

    /// Lower block-triangular element `[[a11, 0], [a21, a22]]`.
    pub fn lower(a11: ComplexMatrix, a21: ComplexMatrix, a22: ComplexMatrix) -> Result<Self> {
        let zero = ComplexMatrix::zeros(a11.nrows(), a22.nrows());
        Self::new(a11, zero, a21, a22)
    }

    pub fn diag(a11: ComplexMatrix, a22: ComplexMatrix) -> Self {
        let (n, m) = (a11.nrows(), a22.nrows());
        Self::new(
            a11,
            ComplexMatrix::zeros(n, m),
            ComplexMatrix::zeros(m, n),
            a22,
        )
        .expect("square diagonal blocks are coherent")
    }

    /// Element over the trivial module `K = {0}`; the lower-left block is
    /// pinned to zero through every product and inverse.
    pub fn with_trivial_k(
        a11: ComplexMatrix,
        a12: ComplexMatrix,
        a22: ComplexMatrix,
    ) -> Result<Self> {
        let mut out = Self::upper(a11, a12, a22)?;
        out.trivial_k = true;
        Ok(out)
    }

    /// The unit `1_M`.
    pub fn identity(n: usize, m: usize) -> Self {
        Self::diag(ComplexMatrix::identity(n), ComplexMatrix::identity(m))
    }

    /// `[[1, q], [0, 1]]`.
    pub fn unipotent_upper(q: &ComplexMatrix) -> Self {
        let (n, m) = q.shape();
        Self::upper(
            ComplexMatrix::identity(n),
            q.clone(),
            ComplexMatrix::identity(m),
        )
        .expect("unipotent blocks are coherent")
    }

    /// `[[1, 0], [k, 1]]`.
    pub fn unipotent_lower(k: &ComplexMatrix) -> Self {
        let (m, n) = k.shape();
        Self::lower(
            ComplexMatrix::identity(n),
            k.clone(),
            ComplexMatrix::identity(m),
        )
        .expect("unipotent blocks are coherent")
    }

    /// `N0+ = diag(a, b)`.
    pub fn n0_plus(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self::diag(a.clone(), b.clone())
    }

    /// `N0- = diag(a, -b)`.
    pub fn n0_minus(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self::diag(a.clone(), -b)
    }

    /// `N0^2 = diag(a^2, b^2)`.
    pub fn n0_squared(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self::diag(a * a, b * b)
    }

    pub fn a11(&self) -> &ComplexMatrix {
        &self.a11
    }

    pub fn a12(&self) -> &ComplexMatrix {
        &self.a12
    }

    pub fn a21(&self) -> &ComplexMatrix {
        &self.a21
    }

    pub fn a22(&self) -> &ComplexMatrix {
        &self.a22
    }

    pub fn has_trivial_k(&self) -> bool {
        self.trivial_k
    }

    /// `(n, m)`: sizes of the two diagonal blocks.
    pub fn dims(&self) -> (usize, usize) {
        (self.a11.nrows(), self.a22.nrows())
    }

    pub fn into_parts(self) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        (self.a11, self.a12, self.a21, self.a22)
    }

    pub fn norm_fro(&self) -> f64 {
        (self.a11.norm_fro().powi(2)
            + self.a12.norm_fro().powi(2)
            + self.a21.norm_fro().powi(2)
            + self.a22.norm_fro().powi(2))
        .sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm_fro()
    }

    fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self {
            a11: f(&self.a11),
            a12: f(&self.a12),
            a21: f(&self.a21),
            a22: f(&self.a22),
            trivial_k: self.trivial_k,
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            a11: &self.a11 - &other.a11,
            a12: &self.a12 - &other.a12,
            a21: &self.a21 - &other.a21,
            a22: &self.a22 - &other.a22,
            trivial_k: self.trivial_k && other.trivial_k,
        }
    }

    /// Ordinary `(n + m) x (n + m)` matrix with the same blocks.
    pub fn to_flat(&self) -> ComplexMatrix {
        let (n, m) = self.dims();
        let mut out = ComplexMatrix::zeros(n + m, n + m);
        out.set_block(0, 0, &self.a11);
        out.set_block(0, n, &self.a12);
        out.set_block(n, 0, &self.a21);
        out.set_block(n, n, &self.a22);
        out
    }

    /// Splits an `(n + m)` square matrix into blocks with leading size `n`.
    pub fn from_flat(flat: &ComplexMatrix, n: usize) -> Result<Self> {
        if !flat.is_square() || n == 0 || n >= flat.nrows() {
            return Err(Error::Dimension(format!(
                "cannot split a {}x{} matrix at {n}",
                flat.nrows(),
                flat.ncols()
            )));
        }
        let m = flat.nrows() - n;
        Self::new(
            flat.block(0, 0, n, n),
            flat.block(0, n, n, m),
            flat.block(n, 0, m, n),
            flat.block(n, n, m, m),
        )
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        self.a21.norm_fro() <= tol * self.norm_fro()
    }
}

fn check_compatible(x: &BlockMatrix, y: &BlockMatrix) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::Dimension(format!(
            "block dimensions {:?} and {:?} differ",
            x.dims(),
            y.dims()
        )));
    }
    Ok(())
}

/// The typed product `x o y`.
pub fn block_mul(x: &BlockMatrix, y: &BlockMatrix) -> Result<BlockMatrix> {
    check_compatible(x, y)?;
    let trivial_k = x.trivial_k && y.trivial_k;
    let a21 = if trivial_k {
        ComplexMatrix::zeros(x.a21.nrows(), x.a21.ncols())
    } else {
        &x.a21 * &y.a11 + &x.a22 * &y.a21
    };
    Ok(BlockMatrix {
        a11: &x.a11 * &y.a11,
        a12: &x.a11 * &y.a12 + &x.a12 * &y.a22,
        a21,
        a22: &x.a22 * &y.a22,
        trivial_k,
    })
}

/// Product of a chain of block matrices, left to right.
pub fn block_chain(factors: &[&BlockMatrix]) -> Result<BlockMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Parameter("empty product".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, f| block_mul(&acc, f))
}

/// Inverse for the typed product:
/// `[[a^-1, -a^-1 m b^-1], [-b^-1 k a^-1, b^-1]]`.
///
/// Requires invertible diagonal blocks; the formula holds for full
/// (non-triangular) elements as well.
pub fn block_inverse(x: &BlockMatrix) -> Result<BlockMatrix> {
    let a_inv = x
        .a11
        .inverse()
        .map_err(|e| Error::Singular(format!("upper-left block: {e}")))?;
    let b_inv = x
        .a22
        .inverse()
        .map_err(|e| Error::Singular(format!("lower-right block: {e}")))?;
    let a12 = -(&a_inv * &x.a12 * &b_inv);
    let a21 = if x.trivial_k {
        ComplexMatrix::zeros(x.a21.nrows(), x.a21.ncols())
    } else {
        -(&b_inv * &x.a21 * &a_inv)
    };
    Ok(BlockMatrix {
        a11: a_inv,
        a12,
        a21,
        a22: b_inv,
        trivial_k: x.trivial_k,
    })
}

/// Membership flags for the submonoid `M0` (upper triangular, diagonal
/// blocks commuting with `a` and `b`) and the group `M0^-1` (additionally
/// invertible diagonal blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct M0Membership {
    pub is_upper_triangular: bool,
    pub commutes_with_a: bool,
    pub commutes_with_b: bool,
    pub invertible_diagonal: bool,
}

impl M0Membership {
    pub fn in_m0(&self) -> bool {
        self.is_upper_triangular && self.commutes_with_a && self.commutes_with_b
    }

    pub fn in_m0_group(&self) -> bool {
        self.in_m0() && self.invertible_diagonal
    }
}

fn commutator_ratio(u: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    let r = (u * a - a * u).norm_fro();
    ratio(r, 2.0 * u.norm_fro() * a.norm_fro())
}

fn well_invertible(u: &ComplexMatrix) -> bool {
    match condition_number(u) {
        Ok(Some(k)) => k.recip() > default_rank_eps(u.nrows(), u.ncols()),
        _ => false,
    }
}

pub fn m0_classify(
    x: &BlockMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: f64,
) -> Result<M0Membership> {
    let (n, m) = x.dims();
    if a.shape() != (n, n) || b.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "block dims {:?} do not match a {:?} and b {:?}",
            x.dims(),
            a.shape(),
            b.shape()
        )));
    }
    Ok(M0Membership {
        is_upper_triangular: x.is_upper_triangular(tol),
        commutes_with_a: commutator_ratio(&x.a11, a) <= tol,
        commutes_with_b: commutator_ratio(&x.a22, b) <= tol,
        invertible_diagonal: well_invertible(&x.a11) && well_invertible(&x.a22),
    })
}

/// Relative residual of `x o N0+ - N0+ o x`.
pub fn n0_plus_commutator(x: &BlockMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let n0 = BlockMatrix::n0_plus(a, b);
    let lhs = block_mul(x, &n0)?;
    let rhs = block_mul(&n0, x)?;
    Ok(ratio(lhs.distance(&rhs), lhs.norm_fro() + rhs.norm_fro()))
}

/// Whether an element of `M0` commutes with `N0+ = diag(a, b)`. For such
/// elements this holds iff the upper-right block intertwines `a` and `b`.
pub fn commutes_with_n0_plus(
    x: &BlockMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: f64,
) -> Result<bool> {
    let membership = m0_classify(x, a, b, tol)?;
    if !membership.in_m0() {
        return Err(Error::Precondition(format!(
            "element is not in M0: {membership:?}"
        )));
    }
    Ok(n0_plus_commutator(x, a, b)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn rand_block(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BlockMatrix {
        BlockMatrix::new(
            rand_mat(rng, n, n),
            rand_mat(rng, n, m),
            rand_mat(rng, m, n),
            rand_mat(rng, m, m),
        )
        .unwrap()
    }

    fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::identity(n).scale_real(2.0) + rand_mat(rng, n, n).scale_real(0.5 / n as f64)
    }

    #[test]
    fn identity_is_a_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = rand_block(&mut rng, 2, 3);
        let id = BlockMatrix::identity(2, 3);
        assert!(block_mul(&id, &x).unwrap().distance(&x) < 1e-15);
        assert!(block_mul(&x, &id).unwrap().distance(&x) < 1e-15);
    }

    #[test]
    fn typed_product_drops_module_pairings() {
        let x = BlockMatrix::new(
            ComplexMatrix::identity(1),
            ComplexMatrix::scalar(Complex64::new(2.0, 0.0)),
            ComplexMatrix::scalar(Complex64::new(3.0, 0.0)),
            ComplexMatrix::identity(1),
        )
        .unwrap();
        let p = block_mul(&x, &x).unwrap();
        // flattened product would give 1 + 2*3 in the corner
        assert_eq!(p.a11(), &ComplexMatrix::identity(1));
        assert_eq!(p.a12().get(0, 0), Complex64::new(4.0, 0.0));
        assert_eq!(p.a21().get(0, 0), Complex64::new(6.0, 0.0));
    }

    #[test]
    fn n0_minus_squares_to_n0_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = well_conditioned(&mut rng, 3);
        let b = well_conditioned(&mut rng, 2);
        let sq = block_mul(
            &BlockMatrix::n0_minus(&a, &b),
            &BlockMatrix::n0_minus(&a, &b),
        )
        .unwrap();
        assert!(sq.distance(&BlockMatrix::n0_squared(&a, &b)) < 1e-13);
    }

    #[test]
    fn intertwiner_root_squares_to_n0_squared() {
        let a = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::identity(1);
        let x = ComplexMatrix::from_real_rows(&[&[0.7], &[0.0]]).unwrap();
        let nx = BlockMatrix::upper(a.clone(), x, -&b).unwrap();
        let sq = block_mul(&nx, &nx).unwrap();
        assert!(sq.distance(&BlockMatrix::n0_squared(&a, &b)) < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let id = BlockMatrix::identity(2, 2);
        assert_eq!(block_inverse(&id).unwrap(), id);
        let p = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let inv = block_inverse(&BlockMatrix::unipotent_upper(&p)).unwrap();
        assert_eq!(inv, BlockMatrix::unipotent_upper(&-&p));

        let singular = BlockMatrix::diag(ComplexMatrix::zeros(1, 1), ComplexMatrix::identity(1));
        assert!(matches!(block_inverse(&singular), Err(Error::Singular(_))));
    }

    #[test]
    fn inverse_of_full_element_under_typed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = rand_block(&mut rng, 3, 2);
        x.a11 = well_conditioned(&mut rng, 3);
        x.a22 = well_conditioned(&mut rng, 2);
        let inv = block_inverse(&x).unwrap();
        let id = BlockMatrix::identity(3, 2);
        assert!(block_mul(&x, &inv).unwrap().distance(&id) < 1e-12);
        assert!(block_mul(&inv, &x).unwrap().distance(&id) < 1e-12);
    }

    #[test]
    fn m0_classification_examples() {
        let a = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]]).unwrap();
        let b = ComplexMatrix::from_real_rows(&[&[1.0]]).unwrap();
        let id = m0_classify(&BlockMatrix::identity(2, 1), &a, &b, 1e-9).unwrap();
        assert!(id.in_m0_group());
        let n0 = m0_classify(&BlockMatrix::n0_plus(&a, &b), &a, &b, 1e-9).unwrap();
        assert!(n0.in_m0_group());
        let n0m = m0_classify(&BlockMatrix::n0_minus(&a, &b), &a, &b, 1e-9).unwrap();
        assert!(n0m.in_m0_group());

        let k = ComplexMatrix::from_real_rows(&[&[1.0, 0.0]]).unwrap();
        let lower = m0_classify(&BlockMatrix::unipotent_lower(&k), &a, &b, 1e-9).unwrap();
        assert!(!lower.is_upper_triangular);
        assert!(!lower.in_m0());

        // singular a: N0+ is in M0 but not in the group
        let a0 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let n0 = m0_classify(&BlockMatrix::n0_plus(&a0, &b), &a0, &b, 1e-9).unwrap();
        assert!(n0.in_m0() && !n0.in_m0_group());
    }

    #[test]
    fn commutation_with_n0_plus() {
        let a = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::identity(1);
        let id = BlockMatrix::identity(2, 1);
        assert!(commutes_with_n0_plus(&id, &a, &b, 1e-9).unwrap());

        let t = ComplexMatrix::from_real_rows(&[&[0.4], &[0.0]]).unwrap();
        assert!(commutes_with_n0_plus(&BlockMatrix::unipotent_upper(&t), &a, &b, 1e-9).unwrap());

        let generic = ComplexMatrix::from_real_rows(&[&[0.4], &[0.3]]).unwrap();
        assert!(
            !commutes_with_n0_plus(&BlockMatrix::unipotent_upper(&generic), &a, &b, 1e-9).unwrap()
        );

        let k = ComplexMatrix::from_real_rows(&[&[1.0, 0.0]]).unwrap();
        assert!(matches!(
            commutes_with_n0_plus(&BlockMatrix::unipotent_lower(&k), &a, &b, 1e-9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trivial_k_stays_trivial() {
        let x = BlockMatrix::with_trivial_k(
            ComplexMatrix::identity(2),
            ComplexMatrix::zeros(2, 1),
            ComplexMatrix::identity(1),
        )
        .unwrap();
        let k = ComplexMatrix::from_real_rows(&[&[1.0, 5.0]]).unwrap();
        let mut y = BlockMatrix::unipotent_lower(&k);
        y.trivial_k = true;
        let p = block_mul(&x, &y).unwrap();
        assert!(p.has_trivial_k());
        assert_eq!(p.a21().max_abs(), 0.0);
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = rand_block(&mut rng, 2, 3);
        assert_eq!(BlockMatrix::from_flat(&x.to_flat(), 2).unwrap(), x);
        assert!(BlockMatrix::from_flat(&x.to_flat(), 5).is_err());
    }

    #[test]
    fn serde_rejects_incoherent_blocks() {
        let json = r#"{"a11":[[[1,0]]],"a12":[[[1,0],[2,0]]],"a21":[[[0,0]]],"a22":[[[1,0]]]}"#;
        assert!(serde_json::from_str::<BlockMatrix>(json).is_err());
        let x = BlockMatrix::identity(1, 2);
        let back: BlockMatrix = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        assert_eq!(back, x);
    }
}
