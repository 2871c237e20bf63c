use proptest::prelude::*;
use sylsep::bivarcalc::apply;
use sylsep::families;
use sylsep::matcore::{eigenvalues, op_norm};
use sylsep::polyops::divided_difference;
use sylsep::regions::{level_set_box, vp_grid};
use sylsep::solvers::{self, SolveOptions, SylvesterProblem};
use sylsep::{CMatrix, Poly, C64};

fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn poly(max_degree: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..=max_degree + 1).prop_map(|v| {
        let mut coeffs: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let last = coeffs.len() - 1;
        coeffs[last] += C64::new(1.5, 0.0);
        Poly::new(coeffs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // q(A,B)(AX − XB) = p(A)X − Xp(B)
    #[test]
    fn divided_difference_factors_the_sylvester_map(
        a in complex_matrix(3),
        b in complex_matrix(3),
        x in complex_matrix(3),
        p in poly(4),
    ) {
        let s = &(&a * &x) - &(&x * &b);
        let lhs = apply(&divided_difference(&p), &a, &b, &s).unwrap();
        let rhs = &(&p.eval_matrix(&a).unwrap() * &x) - &(&x * &p.eval_matrix(&b).unwrap());
        let scale = 1.0 + rhs.frobenius_norm();
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-11 * scale);
    }

    #[test]
    fn series_solvers_track_the_oracle(seed in 0u64..5_000, m in 1usize..5, n in 1usize..5) {
        let inst = families::shifted_random(m, n, seed);
        let mut opts = SolveOptions { tol: 1e-11, ..SolveOptions::default() };
        let p = SylvesterProblem::with_options(inst.a.clone(), inst.b.clone(), inst.c.clone(), opts.clone()).unwrap();
        let x0 = solvers::solve_oracle(&p).unwrap().x;
        for method in [solvers::Method::SignNewton, solvers::Method::Heinz, solvers::Method::Rosenblum] {
            opts.method = method;
            let p = SylvesterProblem::with_options(inst.a.clone(), inst.b.clone(), inst.c.clone(), opts.clone()).unwrap();
            let x = solvers::solve(&p).unwrap().x;
            let err = (&x - &x0).frobenius_norm() / x0.frobenius_norm();
            prop_assert!(err <= 1e-7, "{}: {err:e}", method.name());
        }
    }

    #[test]
    fn lemniscate_grid_holds_the_spectrum(t in complex_matrix(4), p in poly(3)) {
        let level = op_norm(&p.eval_matrix(&t).unwrap());
        let eig = eigenvalues(&t).unwrap().eigenvalues;
        let g = vp_grid(&p, level, level_set_box(&p, level, &eig), 96).unwrap();
        for z in eig {
            prop_assert!(g.inside(z) || !g.clearly_outside(z), "{z}");
        }
    }
}
