//! End-to-end checks on a fixed seeded corpus of singular instances.

use sylvester_core::instances::singular_corpus;
use sylvester_core::regular::{compute_r, solve_cbar_direct};
use sylvester_core::roots::{
    root_equivalence, solve_quadratic_yny, verify_unipotent_solution, QuadraticOptions,
};
use sylvester_core::singular::{diagnose, solution_residual, DiagnoseOptions, VerdictStatus};

#[test]
fn verdicts_agree_with_oracle_and_construction() {
    let corpus = singular_corpus(2024, 240, 4).unwrap();
    let opts = DiagnoseOptions {
        oracle: true,
        ..Default::default()
    };
    let mut decided = 0;
    for inst in &corpus {
        let v = diagnose(&inst.a, &inst.b, &inst.c, &opts).unwrap().verdict;
        if v.status == VerdictStatus::IllConditioned {
            continue;
        }
        decided += 1;
        let solvable = v.status == VerdictStatus::Solvable;
        assert_eq!(Some(true), v.oracle_agreement, "{}", inst.label);
        assert_eq!(
            solvable,
            v.oracle.as_ref().unwrap().consistent,
            "{}",
            inst.label
        );
        assert_eq!(solvable, inst.expected_solvable(), "{}", inst.label);
        if solvable {
            let x = v.solution.as_ref().unwrap();
            assert!(
                solution_residual(&inst.a, &inst.b, x, &inst.c) <= 1e-8,
                "{}",
                inst.label
            );
            assert!(v.solution_difference.unwrap() <= 1e-8, "{}", inst.label);
        }
    }
    assert!(decided >= 230, "only {decided} decided");
}

#[test]
fn unipotent_solutions_exist_exactly_for_solvable_instances() {
    let corpus = singular_corpus(77, 60, 3).unwrap();
    for inst in &corpus {
        let d = diagnose(&inst.a, &inst.b, &inst.c, &DiagnoseOptions::default()).unwrap();
        if d.verdict.status == VerdictStatus::IllConditioned {
            continue;
        }
        let p = &d.problem;
        let cbar = solve_cbar_direct(&p.a, &p.b, &p.c).unwrap().cbar;
        let r = compute_r(&p.a, &p.b, &cbar).unwrap();
        let res = solve_quadratic_yny(p, &cbar, &r, &QuadraticOptions::default()).unwrap();
        assert_eq!(
            res.has_unipotent(),
            d.verdict.status == VerdictStatus::Solvable,
            "{}",
            inst.label
        );
        assert!(res.y_residuals.iter().all(|&e| e <= 1e-8));
        for q in &res.yq_solutions {
            let check = verify_unipotent_solution(q, p, &cbar, &r, 1e-8).unwrap();
            assert!(
                check.holds() && check.forms_agree(),
                "{}: {check:?}",
                inst.label
            );
        }
        let eq = root_equivalence(p, 1e-9).unwrap();
        assert!(
            eq.consistent() && eq.nonzero_solution,
            "{}: {eq:?}",
            inst.label
        );
    }
}
