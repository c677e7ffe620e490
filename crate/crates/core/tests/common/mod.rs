//! Test-side reference computations that share no code with the library.
#![allow(dead_code)]

use num_complex::Complex64;
use sylvester_core::ComplexMatrix;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

type Dense = Vec<Vec<Complex64>>;

pub fn dense(m: &ComplexMatrix) -> Dense {
    m.rows()
}

fn matmul(x: &Dense, y: &Dense) -> Dense {
    let (n, k, m) = (x.len(), y.len(), y.first().map_or(0, Vec::len));
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            let xil = x[i][l];
            for j in 0..m {
                out[i][j] += xil * y[l][j];
            }
        }
    }
    out
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of
/// `det(zI − m)` by the Faddeev–LeVerrier recurrence.
pub fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
    let a = dense(m);
    let n = a.len();
    let mut coeffs = vec![c(1.0, 0.0)];
    let mut mk = vec![vec![c(0.0, 0.0); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I and c_k = -tr(A M_k) / k.
        let mut m_new = matmul(&a, &mk);
        for (i, row) in m_new.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        let am = matmul(&a, &m_new);
        let trace: Complex64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-trace / k as f64);
        mk = m_new;
    }
    coeffs
}

/// All roots of a monic polynomial by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().fold(c(0.0, 0.0), |acc, &k| acc * z + k);
    let radius = 1.0 + coeffs[1..].iter().map(|k| k.norm()).fold(0.0, f64::max);
    let seed = c(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let denom: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| roots[i] - roots[j])
                .product();
            if denom.norm() == 0.0 {
                roots[i] += c(1e-8, 1e-8);
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    roots
}

pub fn oracle_eigenvalues(m: &ComplexMatrix) -> Vec<Complex64> {
    poly_roots(&char_poly(m))
}

/// Largest distance from a point of `x` to its nearest point of `y`, both
/// ways.
pub fn hausdorff(x: &[Complex64], y: &[Complex64]) -> f64 {
    let one_way = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|z| {
                q.iter()
                    .map(|w| (z - w).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(x, y).max(one_way(y, x))
}

pub fn min_gap(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter()
        .flat_map(|z| y.iter().map(move |w| (z - w).norm()))
        .fold(f64::INFINITY, f64::min)
}

/// Numerical rank by Gaussian elimination with complete pivoting; pivots
/// below `tol · max|entry|` count as zero.
pub fn elimination_rank(rows: &Dense, tol: f64) -> usize {
    let mut a = rows.clone();
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for step in 0..n.min(m) {
        let mut best = (step, step, 0.0);
        for (i, row) in a.iter().enumerate().skip(step) {
            for (j, z) in row.iter().enumerate().skip(step) {
                if z.norm() > best.2 {
                    best = (i, j, z.norm());
                }
            }
        }
        if best.2 <= tol * scale {
            break;
        }
        a.swap(step, best.0);
        for row in a.iter_mut() {
            row.swap(step, best.1);
        }
        let (top, rest) = a.split_at_mut(step + 1);
        let pivot_row = &top[step];
        for row in rest.iter_mut() {
            let f = row[step] / pivot_row[step];
            if f.norm() == 0.0 {
                continue;
            }
            for (x, &p) in row.iter_mut().zip(pivot_row).skip(step) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    rank
}

/// Matrix of `x -> a x − x b` on column-stacked `x`, assembled column by
/// column from the images of the unit matrices.
pub fn sylvester_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Dense {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for q in 0..m {
        for p in 0..n {
            let unit = ComplexMatrix::from_fn(n, m, |i, j| {
                if (i, j) == (p, q) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            let image = a * &unit - &unit * b;
            for j in 0..m {
                for i in 0..n {
                    out[i + j * n][p + q * n] = image.get(i, j);
                }
            }
        }
    }
    out
}

pub fn augmented(k: &Dense, rhs: &ComplexMatrix) -> Dense {
    let v = rhs.vec();
    k.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.push(v[i]);
            r
        })
        .collect()
}
