//! Seeded random problem generators with known structure.
//!
//! Singular families share an eigenvalue between `a` and `b`, either inside
//! Jordan blocks or semisimply, and hide the structure behind a random
//! similarity. The right-hand side is placed inside the range of
//! `x -> a x − x b` (from a known solution), outside it (by adding a left
//! null vector), or set to zero.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::numerics::{default_rank_eps, kron_vec_operator, nullspace_scaled, OperatorSign};

/// Minimum distance between unshared eigenvalues of `a` and `b`.
const EIGEN_SEPARATION: f64 = 0.4;

/// Size of the random perturbation in `S = I + SIMILARITY_SPREAD · R / √n`.
const SIMILARITY_SPREAD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFamily {
    /// Disjoint spectra.
    Regular,
    /// A common eigenvalue carried by Jordan blocks in `a` and `b`, at
    /// least one of size two or more.
    SharedJordan,
    /// A common eigenvalue, both matrices diagonalizable.
    SharedSemisimple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangePlacement {
    Inside,
    Outside,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub label: String,
    pub family: InstanceFamily,
    pub placement: RangePlacement,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    /// A solution of `a x − x b = c` when `c` was built from one.
    pub known_solution: Option<ComplexMatrix>,
}

impl Instance {
    /// Whether the construction guarantees solvability.
    pub fn expected_solvable(&self) -> bool {
        self.placement != RangePlacement::Outside
    }
}

pub fn random_complex(rng: &mut impl Rng, radius: f64) -> Complex64 {
    Complex64::new(
        rng.gen_range(-radius..radius),
        rng.gen_range(-radius..radius),
    )
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng, 1.0))
}

/// `I + SIMILARITY_SPREAD · R / √n` with its inverse.
fn random_similarity(rng: &mut impl Rng, n: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    loop {
        let s = ComplexMatrix::identity(n)
            + random_matrix(rng, n, n).scale_real(SIMILARITY_SPREAD / (n as f64).sqrt());
        if let Ok(inv) = s.inverse() {
            return Ok((s, inv));
        }
    }
}

fn random_eigenvalue(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.5..2.5), rng.gen_range(-1.0..1.0))
}

/// Draws `count` eigenvalues at distance at least [`EIGEN_SEPARATION`] from
/// every entry of `avoid`.
fn eigenvalues_avoiding(rng: &mut impl Rng, count: usize, avoid: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = random_eigenvalue(rng);
        if avoid.iter().all(|w| (z - w).norm() >= EIGEN_SEPARATION) {
            out.push(z);
        }
    }
    out
}

/// Upper triangular matrix with the given diagonal, a Jordan chain of
/// length `jordan` at the top-left, and nothing else above the diagonal.
fn jordan_form(diagonal: &[Complex64], jordan: usize) -> ComplexMatrix {
    let n = diagonal.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diagonal[i]
        } else if j == i + 1 && j < jordan {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn conjugate(rng: &mut impl Rng, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (s, s_inv) = random_similarity(rng, t.nrows())?;
    Ok(s * t * s_inv)
}

/// Random pair `(a, b)` of the given family, before any right-hand side.
pub fn random_pair(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    family: InstanceFamily,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if n == 0 || m == 0 {
        return Err(Error::Dimension("instance sizes must be positive".into()));
    }
    let (diag_a, diag_b, jordan_a, jordan_b) = match family {
        InstanceFamily::Regular => {
            let da = eigenvalues_avoiding(rng, n, &[]);
            let db = eigenvalues_avoiding(rng, m, &da);
            (da, db, 0, 0)
        }
        InstanceFamily::SharedJordan => {
            if n.max(m) < 2 {
                return Err(Error::Dimension(
                    "a shared Jordan block needs n >= 2 or m >= 2".into(),
                ));
            }
            let mu = random_eigenvalue(rng);
            let (ka, kb) = loop {
                let ka = rng.gen_range(1..=n);
                let kb = rng.gen_range(1..=m);
                if ka.max(kb) >= 2 {
                    break (ka, kb);
                }
            };
            let mut da = vec![mu; ka];
            da.extend(eigenvalues_avoiding(rng, n - ka, &[mu]));
            let mut db = vec![mu; kb];
            db.extend(eigenvalues_avoiding(rng, m - kb, &da));
            (da, db, ka, kb)
        }
        InstanceFamily::SharedSemisimple => {
            if n + m < 3 {
                return Err(Error::Dimension(
                    "a shared semisimple pair needs n + m >= 3".into(),
                ));
            }
            let mu = random_eigenvalue(rng);
            // a = b = mu I would make the operator vanish identically
            let (ka, kb) = loop {
                let ka = rng.gen_range(1..=n);
                let kb = rng.gen_range(1..=m);
                if ka < n || kb < m {
                    break (ka, kb);
                }
            };
            let mut da = vec![mu; ka];
            da.extend(eigenvalues_avoiding(rng, n - ka, &[mu]));
            let mut db = vec![mu; kb];
            db.extend(eigenvalues_avoiding(rng, m - kb, &da));
            (da, db, 0, 0)
        }
    };
    let a = conjugate(rng, &jordan_form(&diag_a, jordan_a))?;
    let b = conjugate(rng, &jordan_form(&diag_b, jordan_b))?;
    Ok((a, b))
}

/// Unit-norm element orthogonal to the range of `x -> a x − x b`, if any.
fn range_complement(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Option<ComplexMatrix>> {
    let k = kron_vec_operator(a, b, OperatorSign::Minus)?;
    let (rows, cols) = k.shape();
    let scale = a.norm2() + b.norm2();
    let left = nullspace_scaled(&k.adjoint(), default_rank_eps(rows, cols), scale)?;
    match left.first() {
        Some(y) => Ok(Some(ComplexMatrix::from_vec(y, a.nrows(), b.nrows())?)),
        None => Ok(None),
    }
}

pub fn generate(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    family: InstanceFamily,
    placement: RangePlacement,
) -> Result<Instance> {
    let (a, b) = random_pair(rng, n, m, family)?;
    let (c, known_solution) = match placement {
        RangePlacement::Zero => (ComplexMatrix::zeros(n, m), Some(ComplexMatrix::zeros(n, m))),
        RangePlacement::Inside => {
            let x0 = random_matrix(rng, n, m);
            (&a * &x0 - &x0 * &b, Some(x0))
        }
        RangePlacement::Outside => {
            let x0 = random_matrix(rng, n, m);
            let inside = &a * &x0 - &x0 * &b;
            let w = range_complement(&a, &b)?.ok_or_else(|| {
                Error::Parameter("operator is onto; no right-hand side outside its range".into())
            })?;
            let size = inside.norm_fro().max(1.0);
            (inside + w.scale_real(size), None)
        }
    };
    Ok(Instance {
        label: format!(
            "{}-{}-n{n}m{m}",
            family_name(family),
            placement_name(placement)
        ),
        family,
        placement,
        a,
        b,
        c,
        known_solution,
    })
}

fn family_name(f: InstanceFamily) -> &'static str {
    match f {
        InstanceFamily::Regular => "regular",
        InstanceFamily::SharedJordan => "jordan",
        InstanceFamily::SharedSemisimple => "semisimple",
    }
}

fn placement_name(p: RangePlacement) -> &'static str {
    match p {
        RangePlacement::Inside => "inside",
        RangePlacement::Outside => "outside",
        RangePlacement::Zero => "zero",
    }
}

/// Singular instances cycling through both shared-eigenvalue families and
/// both range placements. Sizes are drawn from `1..=max_dim`, with
/// `n + m >= 3`. Labels carry the seed and index.
pub fn singular_corpus(seed: u64, count: usize, max_dim: usize) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        (InstanceFamily::SharedJordan, RangePlacement::Inside),
        (InstanceFamily::SharedJordan, RangePlacement::Outside),
        (InstanceFamily::SharedSemisimple, RangePlacement::Inside),
        (InstanceFamily::SharedSemisimple, RangePlacement::Outside),
    ];
    (0..count)
        .map(|i| {
            let (family, placement) = kinds[i % kinds.len()];
            let (n, m) = loop {
                let n = rng.gen_range(1..=max_dim);
                let m = rng.gen_range(1..=max_dim);
                let fits = match family {
                    InstanceFamily::SharedJordan => n.max(m) >= 2,
                    _ => n + m >= 3,
                };
                if fits {
                    break (n, m);
                }
            };
            let mut inst = generate(&mut rng, n, m, family, placement)?;
            inst.label = format!("{}-s{seed}-{i}", inst.label);
            Ok(inst)
        })
        .collect()
}

/// Random `n x n` matrix whose spectrum lies in `Λ_α` with some margin:
/// a similarity of an upper triangular matrix with eigenvalues of argument
/// at most `0.8 α` and modulus in `[0.5, 3]`.
pub fn random_in_sector(rng: &mut impl Rng, n: usize, alpha: f64) -> Result<ComplexMatrix> {
    let diag: Vec<Complex64> = (0..n)
        .map(|_| {
            Complex64::from_polar(
                rng.gen_range(0.5..3.0),
                rng.gen_range(-0.8 * alpha..0.8 * alpha),
            )
        })
        .collect();
    let t = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if j > i {
            random_complex(rng, 0.3)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    conjugate(rng, &t)
}
