//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham 2005 degree selection).

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Odd/even split `u = a * sum b_{2k+1} a^{2k}`, `v = sum b_{2k} a^{2k}` for
/// the low-degree approximants.
fn pade_low(a: &DMatrix<Complex64>, coeffs: &[f64]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::<Complex64>::identity(n, n);
    let mut u_inner = DMatrix::<Complex64>::zeros(n, n);
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for pair in coeffs.chunks(2) {
        v += &power * re(pair[0]);
        u_inner += &power * re(pair[1]);
        power = &power * &a2;
    }
    (a * u_inner, v)
}

fn pade_13(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let b = PADE_13;
    let n = a.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_high = &a6 * (&a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]));
    let u = a * (u_high + &a6 * re(b[7]) + &a4 * re(b[5]) + &a2 * re(b[3]) + &id * re(b[1]));
    let v_high = &a6 * (&a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]));
    let v = v_high + &a6 * re(b[6]) + &a4 * re(b[4]) + &a2 * re(b[2]) + &id * re(b[0]);
    (u, v)
}

/// Matrix exponential. `exp(0) = I` exactly.
pub fn mat_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square input, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let a = m.as_inner();
    if a.iter().all(|&z| z == ZERO) {
        return Ok(ComplexMatrix::identity(n));
    }
    let norm = norm1(a);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &PADE_3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &PADE_5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &PADE_7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &PADE_9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0);
        if !s.is_finite() || s > 1000.0 {
            return Err(Error::Numeric(format!(
                "matrix exponential scaling overflow (1-norm {norm:e})"
            )));
        }
        let scaled = a * re(0.5f64.powi(s as i32));
        let (u, v) = pade_13(&scaled);
        (u, v, s as u32)
    };
    // exp(a) ~ (v - u)^{-1} (v + u)
    let p = &v + &u;
    let q = &v - &u;
    let mut result = LU::new(q)
        .solve(&p)
        .ok_or_else(|| Error::Numeric("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    let out = ComplexMatrix::from_inner(result);
    if !out.is_finite() {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_maps_to_identity_exactly() {
        assert_eq!(
            mat_exp(&ComplexMatrix::zeros(2, 2)).unwrap(),
            ComplexMatrix::identity(2)
        );
    }

    #[test]
    fn diagonal_and_nilpotent_cases() {
        let d = mat_exp(&ComplexMatrix::from_real_diagonal(&[1.0, 2.0])).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[1f64.exp(), 2f64.exp()]);
        assert!(d.distance(&expected) < 1e-14 * expected.norm_fro());

        let nil = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let e = mat_exp(&nil).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(e.distance(&expected) < 1e-15);
    }

    #[test]
    fn rotation_generator() {
        let t = 0.7;
        let g = ComplexMatrix::from_real_rows(&[&[0.0, -t], &[t, 0.0]]).unwrap();
        let e = mat_exp(&g).unwrap();
        let expected =
            ComplexMatrix::from_real_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]).unwrap();
        assert!(e.distance(&expected) < 1e-15);
    }

    #[test]
    fn inverse_pairs_for_every_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 30.0] {
            let m = ComplexMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
            });
            let prod = mat_exp(&m).unwrap() * mat_exp(&-&m).unwrap();
            let bound = 1e-10 * (1.0 + m.norm_fro()).powi(2) * (2.0 * m.norm_fro()).exp().max(1.0);
            assert!(
                prod.distance(&ComplexMatrix::identity(4)) <= bound,
                "scale {scale}"
            );
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            mat_exp(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }
}
