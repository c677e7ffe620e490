//! Property tests for the algebraic invariants of the solver stack.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sylvester_core::block::{block_inverse, block_mul, BlockMatrix};
use sylvester_core::instances::{generate, random_matrix, InstanceFamily, RangePlacement};
use sylvester_core::oracle::{oracle_solve, OracleQuery};
use sylvester_core::roots::{build_nx, homogeneous_nullspaces, RootSide, DEFAULT_ROOT_TOL};
use sylvester_core::singular::{
    diagnose, prepare, solution_residual, solve_pair, DiagnoseOptions, VerdictStatus,
    WitnessEquation, DEFAULT_ALPHA, DEFAULT_TOL,
};
use sylvester_core::ComplexMatrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BlockMatrix {
    // Diagonal blocks shifted away from singularity.
    let a11 = random_matrix(rng, n, n) + ComplexMatrix::identity(n).scale_real(3.0);
    let a22 = random_matrix(rng, m, m) + ComplexMatrix::identity(m).scale_real(3.0);
    BlockMatrix::new(a11, random_matrix(rng, n, m), random_matrix(rng, m, n), a22).unwrap()
}

fn singular_kind(selector: u8) -> (InstanceFamily, RangePlacement) {
    match selector % 4 {
        0 => (InstanceFamily::SharedJordan, RangePlacement::Inside),
        1 => (InstanceFamily::SharedJordan, RangePlacement::Outside),
        2 => (InstanceFamily::SharedSemisimple, RangePlacement::Inside),
        _ => (InstanceFamily::SharedSemisimple, RangePlacement::Outside),
    }
}

fn dims_for(family: InstanceFamily, n: usize, m: usize) -> (usize, usize) {
    match family {
        InstanceFamily::SharedJordan if n.max(m) < 2 => (2, m),
        InstanceFamily::SharedSemisimple if n + m < 3 => (n + 1, m),
        _ => (n, m),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_product_is_associative(seed in any::<u64>(), n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let (x, y, z) = (random_block(&mut r, n, m), random_block(&mut r, n, m), random_block(&mut r, n, m));
        let left = block_mul(&block_mul(&x, &y).unwrap(), &z).unwrap();
        let right = block_mul(&x, &block_mul(&y, &z).unwrap()).unwrap();
        prop_assert!(left.distance(&right) <= 1e-12 * left.norm_fro());
    }

    #[test]
    fn block_inverse_is_two_sided(seed in any::<u64>(), n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let x = random_block(&mut r, n, m);
        let inv = block_inverse(&x).unwrap();
        let id = BlockMatrix::identity(n, m);
        let scale = x.norm_fro() * inv.norm_fro();
        prop_assert!(block_mul(&x, &inv).unwrap().distance(&id) <= 1e-12 * scale);
        prop_assert!(block_mul(&inv, &x).unwrap().distance(&id) <= 1e-12 * scale);
    }

    #[test]
    fn intertwiners_give_similar_nonprimary_roots(seed in any::<u64>(), sel in any::<u8>(), n in 1usize..4, m in 1usize..4) {
        let (family, _) = singular_kind(sel);
        let (n, m) = dims_for(family, n, m);
        let inst = generate(&mut rng(seed), n, m, family, RangePlacement::Zero).unwrap();
        let p = prepare(&inst.a, &inst.b, &inst.c, DEFAULT_ALPHA).unwrap();
        let (xs, ys) = homogeneous_nullspaces(&p).unwrap();
        prop_assert!(!xs.is_empty() && !ys.is_empty());
        for (blocks, side) in [(&xs, RootSide::Upper), (&ys, RootSide::Lower)] {
            for x in blocks {
                let cand = build_nx(&p, x, side, DEFAULT_ROOT_TOL).unwrap();
                prop_assert!(cand.is_square_root && !cand.is_primary);
                prop_assert!(cand.residuals["similarity"] <= 1e-9, "{:?}", cand.residuals);
                prop_assert!(cand.residuals["bar_intertwining"] <= 1e-9, "{:?}", cand.residuals);
            }
        }
    }

    #[test]
    fn any_two_witness_equations_imply_all_four(seed in any::<u64>(), sel in any::<u8>(), n in 1usize..4, m in 1usize..4) {
        let (family, placement) = singular_kind(sel);
        let (n, m) = dims_for(family, n, m);
        let inst = generate(&mut rng(seed), n, m, family, placement).unwrap();
        let p = prepare(&inst.a, &inst.b, &inst.c, DEFAULT_ALPHA).unwrap();
        let eqs = WitnessEquation::PRIMARY;
        for i in 0..eqs.len() {
            for j in i + 1..eqs.len() {
                let pair = solve_pair(&p, eqs[i], eqs[j]).unwrap();
                if pair.pair_residual() <= DEFAULT_TOL {
                    prop_assert!(
                        pair.max_primary_residual() <= 10.0 * DEFAULT_TOL,
                        "{:?}: {:?}", pair.equations, pair.residuals
                    );
                }
            }
        }
    }

    #[test]
    fn verdict_agrees_with_oracle_and_construction(seed in any::<u64>(), sel in any::<u8>(), n in 1usize..4, m in 1usize..4) {
        let (family, placement) = singular_kind(sel);
        let (n, m) = dims_for(family, n, m);
        let inst = generate(&mut rng(seed), n, m, family, placement).unwrap();
        let d = diagnose(&inst.a, &inst.b, &inst.c, &DiagnoseOptions::default()).unwrap();
        let oracle = oracle_solve(&OracleQuery::Sylvester { a: &inst.a, b: &inst.b, c: &inst.c }).unwrap();
        prop_assume!(d.verdict.status != VerdictStatus::IllConditioned);
        let solvable = d.verdict.status == VerdictStatus::Solvable;
        prop_assert_eq!(solvable, oracle.consistent);
        prop_assert_eq!(solvable, inst.expected_solvable());
        if let Some(x) = &d.verdict.solution {
            prop_assert!(solution_residual(&inst.a, &inst.b, x, &inst.c) <= DEFAULT_TOL);
        }
    }

    #[test]
    fn verdict_is_shift_invariant(seed in any::<u64>(), sel in any::<u8>(), n in 1usize..4, m in 1usize..4, mu in -1.0f64..2.0) {
        let (family, placement) = singular_kind(sel);
        let (n, m) = dims_for(family, n, m);
        let inst = generate(&mut rng(seed), n, m, family, placement).unwrap();
        let shift = Complex64::new(mu, 0.0);
        let opts = DiagnoseOptions::default();
        let base = diagnose(&inst.a, &inst.b, &inst.c, &opts).unwrap().verdict;
        let moved = diagnose(&inst.a.shift_diagonal(shift), &inst.b.shift_diagonal(shift), &inst.c, &opts)
            .unwrap()
            .verdict;
        prop_assume!(base.status != VerdictStatus::IllConditioned && moved.status != VerdictStatus::IllConditioned);
        prop_assert_eq!(base.status, moved.status);
        if let Some(x) = &moved.solution {
            prop_assert!(solution_residual(&inst.a, &inst.b, x, &inst.c) <= DEFAULT_TOL);
        }
    }
}
