//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails. Tolerances are fixed here on purpose.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sylsep::families::{self, SelfadjointOptions};
use sylsep::matcore::{eigenvalues, inverse, op_norm};
use sylsep::multicentric::{
    assemble_poly, bnm_table, exact, phi_germ_piecewise_constant, phi_germ_polynomial,
    taylor_coeffs_with_roots, Side,
};
use sylsep::polyops::PolySpec;
use sylsep::regions::{
    center_grid, default_margin, eta_estimate, leja_order, leja_poly, level_set_box,
    pseudospectrum_grid, search_separating_poly, separation_certificate, vp_grid, CertificateMode,
    CertificateOptions, EtaCandidates, GridBox, GridRegion, SearchOptions, SeparationStatus,
};
use sylsep::solvers::{
    self, residual, sign_series_coefficients, truncation_bound_disc, Method, Shift, SolveOptions,
    SylvesterProblem,
};
use sylsep::{CMatrix, Poly, C64};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(x: &CMatrix, y: &CMatrix) -> f64 {
    (x - y).frobenius_norm() / y.frobenius_norm().max(1e-300)
}

fn problem(
    a: &CMatrix,
    b: &CMatrix,
    cc: &CMatrix,
    f: impl FnOnce(&mut SolveOptions),
) -> SylvesterProblem {
    let mut o = SolveOptions::default();
    f(&mut o);
    SylvesterProblem::with_options(a.clone(), b.clone(), cc.clone(), o).expect("valid problem")
}

fn random_complex(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(m, n, |_, _| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn random_poly(rng: &mut ChaCha8Rng, degrees: std::ops::RangeInclusive<usize>) -> Poly {
    let degree = rng.gen_range(degrees);
    let mut coeffs: Vec<C64> = (0..=degree)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    // keep the leading coefficient away from zero
    coeffs[degree] = C64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..6.28));
    Poly::new(coeffs)
}

fn compose(f: &Poly, p: &Poly) -> Poly {
    let mut out = Poly::zero();
    for &a in f.coeffs().iter().rev() {
        out = out.mul(p).add(&Poly::constant(a));
    }
    out
}

struct Fixture {
    name: &'static str,
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
    poly: Option<Poly>,
}

fn load_fixture(name: &'static str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let v: serde_json::Value = serde_json::from_str(&text).expect("fixture json");
    let matrix = |key: &str| -> CMatrix {
        let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v[key].clone()).expect("matrix rows");
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| c(p[0], p[1])).collect())
            .collect();
        CMatrix::from_rows(&rows).expect("rectangular")
    };
    let poly = (!v["poly"].is_null()).then(|| {
        let spec: PolySpec = serde_json::from_value(v["poly"].clone()).expect("poly");
        spec.to_poly().expect("poly")
    });
    Fixture {
        name,
        a: matrix("a"),
        b: matrix("b"),
        c: matrix("c"),
        poly,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_correctness() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..50u64 {
        let (m, n) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let inst = families::shifted_random(m, n, 1000 + k);
        let rep = solvers::solve_oracle(&problem(&inst.a, &inst.b, &inst.c, |_| {}))
            .map_err(|e| e.to_string())?;
        worst = worst.max(rep.residual);
        ensure(rep.residual <= 1e-10, || {
            format!("instance {k} ({m}×{n}): residual {:.3e}", rep.residual)
        })?;
    }
    let (a, b, cc) = (2.5, -0.75, 1.3);
    let rep = solvers::solve_oracle(&problem(
        &CMatrix::diag_real(&[a]),
        &CMatrix::diag_real(&[b]),
        &CMatrix::diag_real(&[cc]),
        |_| {},
    ))
    .map_err(|e| e.to_string())?;
    let err = (rep.x.get(0, 0) - cc / (a - b)).norm();
    ensure(err <= 1e-14, || format!("scalar error {err:.3e}"))?;
    Ok(format!("max residual {worst:.2e}, scalar error {err:.1e}"))
}

fn cross_method_agreement() -> Outcome {
    let quartic = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let linear = Poly::from_real(&[-1.0, 1.0]);
    let opts = SelfadjointOptions {
        positive: true,
        alpha: 0.5625,
        c_scale: 0.05,
    };
    let mut worst = vec![0.0f64; 6];
    let methods = [
        Method::Rosenblum,
        Method::DiscSeries,
        Method::Heinz,
        Method::SignNewton,
        Method::Multicentric,
        Method::SignSeriesM2,
    ];
    for k in 0..20u64 {
        let inst = families::selfadjoint_pair_with(2 + (k as usize % 3), 200 + k, opts);
        let x0 = solvers::solve_oracle(&problem(&inst.a, &inst.b, &inst.c, |_| {}))
            .map_err(|e| e.to_string())?
            .x;
        for (i, &method) in methods.iter().enumerate() {
            let prob = problem(&inst.a, &inst.b, &inst.c, |o| {
                o.method = method;
                o.tol = 1e-10;
                match method {
                    Method::DiscSeries => o.poly = Some(linear.clone()),
                    Method::Multicentric => o.poly = Some(quartic.clone()),
                    Method::Heinz | Method::SignNewton => o.shift = Shift::Midpoint,
                    _ => {}
                }
            });
            let rep = solvers::solve(&prob)
                .map_err(|e| format!("instance {k}, {}: {e}", method.name()))?;
            let err = rel(&rep.x, &x0);
            worst[i] = worst[i].max(err);
            ensure(err <= 1e-6, || {
                format!("instance {k}, {}: relative error {err:.3e}", method.name())
            })?;
        }
    }
    let summary: Vec<String> = methods
        .iter()
        .zip(&worst)
        .map(|(m, w)| format!("{} {w:.1e}", m.name()))
        .collect();
    Ok(summary.join(", "))
}

fn symmetric_skew_fixture() -> Outcome {
    let fx = load_fixture("symmetric-skew");
    let p = fx.poly.clone().ok_or("fixture has no polynomial")?;
    let prob = problem(&fx.a, &fx.b, &fx.c, |o| {
        o.method = Method::Heinz;
        o.poly = Some(p);
        o.tol = 1e-12;
    });
    let rep = solvers::solve(&prob).map_err(|e| e.to_string())?;
    ensure(rep.method.ends_with("+modified"), || {
        format!("route was {}", rep.method)
    })?;
    // recompute against the original equation, not the squared one
    let r = residual(&fx.a, &fx.b, &fx.c, &rep.x);
    ensure(r <= 1e-8, || format!("residual {r:.3e}"))?;
    Ok(format!("{} via {}, residual {r:.2e}", fx.name, rep.method))
}

fn sign_series_fixture() -> Outcome {
    let coeffs = sign_series_coefficients(4);
    let want = [(1, 1), (-1, 2), (3, 8), (-5, 16)];
    for (got, (n, d)) in coeffs.iter().zip(want) {
        let w = BigRational::new(BigInt::from(n), BigInt::from(d));
        ensure(*got == w, || format!("coefficient {got} ≠ {w}"))?;
    }

    let fx = load_fixture("selfadjoint-pair");
    let mm = CMatrix::upper_block(&fx.a, &fx.c, &fx.b).map_err(|e| e.to_string())?;
    let m4 = mm.powi(4).map_err(|e| e.to_string())?;
    let rho = eigenvalues(&(&m4 - &CMatrix::identity(mm.rows())))
        .map_err(|e| e.to_string())?
        .spectral_radius();
    ensure(rho < 1.0, || format!("ρ(M⁴ − I) = {rho:.4} on the fixture"))?;
    let series = solvers::solve_sign_series_m2(&problem(&fx.a, &fx.b, &fx.c, |o| o.tol = 1e-10))
        .map_err(|e| e.to_string())?;
    ensure(series.residual <= 1e-7, || {
        format!("series residual {:.3e}", series.residual)
    })?;
    // the multicentric route with p = z⁴ − 1
    let quartic = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let multi = solvers::solve_multicentric(&problem(&fx.a, &fx.b, &fx.c, |o| {
        o.poly = Some(quartic);
        o.tol = 1e-10;
    }))
    .map_err(|e| e.to_string())?;
    let gap = (&series.x - &multi.x).frobenius_norm();
    ensure(gap <= 1e-7, || format!("routes differ by {gap:.3e}"))?;

    // every instance with computed ρ(M⁴ − I) < 1 must converge
    let mut checked = 0;
    for seed in 0..10u64 {
        let inst = families::selfadjoint_pair(3, 500 + seed);
        let mm = CMatrix::upper_block(&inst.a, &inst.c, &inst.b).map_err(|e| e.to_string())?;
        let m4 = mm.powi(4).map_err(|e| e.to_string())?;
        let rho = eigenvalues(&(&m4 - &CMatrix::identity(mm.rows())))
            .map_err(|e| e.to_string())?
            .spectral_radius();
        if rho >= 1.0 {
            continue;
        }
        checked += 1;
        let rep =
            solvers::solve_sign_series_m2(&problem(&inst.a, &inst.b, &inst.c, |o| o.tol = 1e-10))
                .map_err(|e| format!("seed {seed} (ρ = {rho:.3}): {e}"))?;
        ensure(rep.residual <= 1e-7, || {
            format!("seed {seed}: residual {:.3e}", rep.residual)
        })?;
    }
    Ok(format!(
        "ρ = {rho:.3}, N = {}, residual {:.2e}, route gap {gap:.1e}, {checked} extra instances",
        series.order.unwrap_or(0),
        series.residual
    ))
}

fn multicentric_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    // (a) chain rule table
    let mut worst_a = 0.0f64;
    for _ in 0..20 {
        let p = random_poly(&mut rng, 1..=4);
        let f = random_poly(&mut rng, 1..=6);
        let fp = compose(&f, &p);
        let table = bnm_table(&p, 5);
        let z = C64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.28));
        for n in 0..=5 {
            let lhs = fp.derivative(n).eval(z);
            let rhs: C64 = (0..=n)
                .map(|m| table.get(n, m).eval(z) * f.derivative(m).eval(p.eval(z)))
                .sum();
            let err = (lhs - rhs).norm() / lhs.norm().max(1.0);
            worst_a = worst_a.max(err);
            ensure(err <= 1e-9, || {
                format!("b_nm identity n={n}: error {err:.3e}")
            })?;
        }
    }
    // (b) polynomial reconstruction
    let mut worst_b = 0.0f64;
    let mut worst_tail = 0.0f64;
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let roots: Vec<C64> = (0..d)
            .map(|k| C64::from_polar(1.0, 6.28 * k as f64 / d as f64 + rng.gen_range(-0.3..0.3)))
            .collect();
        let p = Poly::from_roots(&roots);
        let phi = random_poly(&mut rng, 0..=6);
        let order = 10;
        let germ = phi_germ_polynomial(&phi, &roots, order);
        let series =
            taylor_coeffs_with_roots(&p, &roots, &germ, order).map_err(|e| e.to_string())?;
        let top = phi.degree().unwrap_or(0) / d;
        let tail = series
            .coefficients
            .iter()
            .flat_map(|row| row.iter().skip(top + 1))
            .map(|a| a.norm())
            .fold(0.0, f64::max);
        worst_tail = worst_tail.max(tail);
        ensure(tail <= 1e-10, || format!("coefficient tail {tail:.3e}"))?;
        let back = assemble_poly(&series, &p).map_err(|e| e.to_string())?;
        let err = back.sub(&phi).max_abs_coeff() / phi.max_abs_coeff().max(1.0);
        worst_b = worst_b.max(err);
        ensure(err <= 1e-10, || format!("reconstruction error {err:.3e}"))?;
    }
    // (c) exact against floating
    let cases: [(&[((i64, i64), (i64, i64))], &[Side]); 3] = [
        (
            &[((1, 1), (0, 1)), ((-1, 1), (0, 1))],
            &[Side::Plus, Side::Minus],
        ),
        (
            &[
                ((1, 1), (0, 1)),
                ((-1, 1), (0, 1)),
                ((0, 1), (1, 1)),
                ((0, 1), (-1, 1)),
            ],
            &[Side::Plus, Side::Plus, Side::Minus, Side::Minus],
        ),
        (
            &[((3, 2), (1, 4)), ((-1, 2), (0, 1)), ((1, 3), (-5, 4))],
            &[Side::Plus, Side::Minus, Side::Minus],
        ),
    ];
    let mut worst_c = 0.0f64;
    for (roots, sides) in cases {
        let order = 12;
        let ex: Vec<_> = roots
            .iter()
            .map(|&(re, im)| exact::gaussian(re, im))
            .collect();
        let table = exact::taylor_coeffs_exact(&ex, sides, order).map_err(|e| e.to_string())?;
        let fr: Vec<C64> = ex.iter().map(exact::to_c64).collect();
        let p = Poly::from_roots(&fr);
        let germ = phi_germ_piecewise_constant(sides, order);
        let series = taylor_coeffs_with_roots(&p, &fr, &germ, order).map_err(|e| e.to_string())?;
        for (er, fr) in table.iter().zip(&series.coefficients) {
            for (x, y) in er.iter().zip(fr) {
                let x = exact::to_c64(x);
                let err = (x - y).norm() / x.norm().max(1.0);
                worst_c = worst_c.max(err);
                ensure(err <= 1e-12, || format!("exact/float gap {err:.3e}"))?;
            }
        }
    }
    Ok(format!(
        "b_nm {worst_a:.1e}, reconstruction {worst_b:.1e} (tail {worst_tail:.1e}), exact gap {worst_c:.1e}"
    ))
}

fn projector_laws() -> Outcome {
    let quartic = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let mut worst_ratio = 0.0f64;
    let mut worst_bound = 0.0f64;
    for seed in 0..6u64 {
        let inst = families::selfadjoint_pair(2 + seed as usize % 3, 600 + seed);
        let rep = solvers::solve_multicentric(&problem(&inst.a, &inst.b, &inst.c, |o| {
            o.poly = Some(quartic.clone());
            o.tol = 1e-7;
        }))
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let bound = rep.diagnostics["phi_bound"];
        worst_bound = worst_bound.max(bound);
        ensure(bound <= 1e-6, || {
            format!("seed {seed}: bound {bound:.3e} at N = {:?}", rep.order)
        })?;
        for key in ["idempotency_defect", "q11_defect", "q22_norm"] {
            let v = rep.diagnostics[key];
            worst_ratio = worst_ratio.max(v / bound);
            ensure(v <= 4.0 * bound, || {
                format!("seed {seed}: {key} = {v:.3e}, bound {bound:.3e}")
            })?;
        }
    }
    Ok(format!(
        "max defect/bound {worst_ratio:.2e}, max bound {worst_bound:.2e}"
    ))
}

fn truncation_bound_soundness() -> Outcome {
    let p = Poly::monomial(1);
    let eps = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checks = 0;
    let mut tightest = 0.0f64;
    for k in 0..20 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(2..=5);
        let ga = random_complex(&mut rng, m, m);
        let a = ga.scale_real(rng.gen_range(0.25..0.5) / op_norm(&ga));
        let gn = random_complex(&mut rng, n, n);
        let b = &CMatrix::identity(n).scale_real(2.0) + &gn.scale_real(0.3 / op_norm(&gn));
        let cc = random_complex(&mut rng, m, n);
        let db = truncation_bound_disc(&p, &a, &b, eps, None, 128)
            .map_err(|e| format!("instance {k}: {e}"))?;
        let x = solvers::solve_oracle(&problem(&a, &b, &cc, |_| {}))
            .map_err(|e| e.to_string())?
            .x;
        let binv = inverse(&b).map_err(|e| e.to_string())?;
        // X_N = −Σ_{k≤N} A^k C B^{−(k+1)}
        let mut term = &cc * &binv;
        let mut acc = CMatrix::zeros(m, n);
        for order in 0..=40 {
            acc = &acc - &term;
            let err = (&acc - &x).frobenius_norm();
            let bound = db.x_error_bound(cc.frobenius_norm(), order);
            if bound < 1e-13 {
                break;
            }
            checks += 1;
            tightest = tightest.max(err / bound);
            ensure(err <= bound, || {
                format!("instance {k}, N = {order}: error {err:.3e} > bound {bound:.3e}")
            })?;
            term = &(&a * &term) * &binv;
        }
    }
    Ok(format!(
        "{checks} truncation orders checked, max error/bound {tightest:.3}"
    ))
}

fn eta_disc() -> Outcome {
    let mut worst = 0.0f64;
    let mut best_run = 0.0f64;
    for (n, seed) in [(6, 0u64), (8, 3), (5, 9)] {
        let inst = families::normal_disc(n, seed);
        let binv = inverse(&inst.b).map_err(|e| e.to_string())?;
        for d in 1..=8 {
            let pa = inst.a.powi(d).map_err(|e| e.to_string())?;
            let pb = binv.powi(d).map_err(|e| e.to_string())?;
            let eta = (op_norm(&pa) * op_norm(&pb)).powf(1.0 / d as f64);
            worst = worst.max((eta - 0.25).abs());
            ensure((eta - 0.25).abs() <= 1e-10, || {
                format!("n={n}, d={d}: η̂ = {eta:.12}")
            })?;
        }
        let est =
            eta_estimate(&inst.a, &inst.b, 8, EtaCandidates::Both).map_err(|e| e.to_string())?;
        let run = est.running_min[7];
        best_run = best_run.max(run);
        ensure(run <= 0.2625, || {
            format!("n={n}: search reaches only {run:.4} by d = 8")
        })?;
    }
    Ok(format!("|η̂ − 0.25| ≤ {worst:.1e}, search {best_run:.4}"))
}

fn contains(g: &GridRegion, z: C64) -> bool {
    // the grid resolves membership only up to one cell
    g.inside(z) || !g.clearly_outside(z)
}

fn region_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for k in 0..50 {
        let n = rng.gen_range(1..=6);
        let t = random_complex(&mut rng, n, n);
        let p = random_poly(&mut rng, 1..=4);
        let pt = p.eval_matrix(&t).map_err(|e| e.to_string())?;
        let level = op_norm(&pt);
        let eig = eigenvalues(&t).map_err(|e| e.to_string())?.eigenvalues;
        let bbox = level_set_box(&p, level, &eig);
        let g = vp_grid(&p, level, bbox, 128).map_err(|e| e.to_string())?;
        for &z in &eig {
            ensure(p.eval(z).norm() <= level * (1.0 + 1e-12), || {
                format!("instance {k}: |p(λ)| > ‖p(T)‖")
            })?;
            ensure(contains(&g, z), || {
                format!("instance {k}: eigenvalue {z} outside V_p(T)")
            })?;
        }
        // nesting in the level and in ε
        let lower = vp_grid(&p, 0.5 * level, bbox, 128).map_err(|e| e.to_string())?;
        ensure(
            lower.mask.iter().zip(&g.mask).all(|(&x, &y)| !x || y),
            || format!("instance {k}: V_p not monotone in the level"),
        )?;
        // σ_min(z − T) ≤ |z − λ|, so a cell half-diagonal below ε keeps σ(T) in Σ_ε
        let near = GridBox::square_around(&eig, 0.5);
        let (dx, dy) = vp_grid(&p, level, near, 128)
            .map_err(|e| e.to_string())?
            .cell_size();
        ensure(0.5 * dx.hypot(dy) < 0.1, || {
            format!("instance {k}: grid too coarse for ε = 0.1")
        })?;
        let ps = [0.1, 0.3].map(|eps| pseudospectrum_grid(&t, eps, near, 128));
        let (small, big) = match ps {
            [Ok(s), Ok(b)] => (s, b),
            _ => return Err(format!("instance {k}: pseudospectrum grid failed")),
        };
        ensure(
            small.mask.iter().zip(&big.mask).all(|(&x, &y)| !x || y),
            || format!("instance {k}: Σ_ε not monotone in ε"),
        )?;
        for &z in &eig {
            ensure(contains(&small, z), || {
                format!("instance {k}: eigenvalue outside Σ_ε")
            })?;
        }
    }

    let mut report = vec![];
    let mut separated = 0;
    for name in ["symmetric-skew", "selfadjoint-pair", "disc-eta"] {
        let fx = load_fixture(name);
        let poly = fx
            .poly
            .clone()
            .unwrap_or_else(|| Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]));
        let mode = if name == "disc-eta" {
            CertificateMode::DiscA { eps: None }
        } else {
            CertificateMode::BlockM
        };
        let base = match mode {
            CertificateMode::DiscA { .. } => {
                op_norm(&poly.eval_matrix(&fx.a).map_err(|e| e.to_string())?)
            }
            _ => op_norm(
                &poly
                    .eval_matrix(
                        &CMatrix::upper_block(&fx.a, &fx.c, &fx.b).map_err(|e| e.to_string())?,
                    )
                    .map_err(|e| e.to_string())?,
            ),
        };
        let t = default_margin(&poly, base, 0.05);
        let status = |resolution| {
            let opts = CertificateOptions {
                mode,
                bbox: None,
                resolution,
            };
            separation_certificate(&poly, &fx.a, &fx.b, &fx.c, t, &opts).map(|c| c.status)
        };
        // refining may settle an inconclusive grid, but never undo a verdict
        let mut seen = vec![];
        for resolution in [128, 256, 512] {
            let now = status(resolution).map_err(|e| e.to_string())?;
            if let Some(&(r, before)) = seen.last() {
                let undone =
                    before == SeparationStatus::Separated && now != SeparationStatus::Separated;
                let flipped =
                    before == SeparationStatus::NotSeparated && now == SeparationStatus::Separated;
                ensure(!undone && !flipped, || {
                    format!("{name}: {before:?} at {r}, {now:?} at {resolution}")
                })?;
            }
            seen.push((resolution, now));
        }
        let trail: Vec<String> = seen.iter().map(|(r, s)| format!("{s:?}@{r}")).collect();
        if seen.last().map(|x| x.1) == Some(SeparationStatus::Separated) {
            separated += 1;
        }
        report.push(format!("{name} {}", trail.join("→")));
    }
    ensure(separated >= 2, || {
        format!("only {separated} fixtures certified: {}", report.join(", "))
    })?;
    Ok(format!("50 random (T,p) sound; {}", report.join(", ")))
}

fn necessity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut worst = f64::INFINITY;
    let mut candidates = 0;
    for k in 0..6u64 {
        let n = 2 + k as usize % 4;
        let a = random_complex(&mut rng, n, n);
        let cc = random_complex(&mut rng, n, n);
        let eig = eigenvalues(&a).map_err(|e| e.to_string())?.eigenvalues;
        let leja = leja_order(&eig);
        let mut polys: Vec<Poly> = (1..=4).map(|d| leja_poly(&leja, d)).collect();
        for z in center_grid(&eig, 4) {
            polys.push(Poly::from_roots(&[z, z]));
            polys.push(Poly::from_roots(&[z]));
        }
        for _ in 0..10 {
            polys.push(random_poly(&mut rng, 1..=5));
        }
        for p in &polys {
            let pa = p.eval_matrix(&a).map_err(|e| e.to_string())?;
            let spec = eigenvalues(&pa).map_err(|e| e.to_string())?;
            // p(B) singular: no inverse, the product is unbounded
            let Ok(inv) = inverse(&pa) else { continue };
            let product = spec.spectral_radius()
                * eigenvalues(&inv)
                    .map_err(|e| e.to_string())?
                    .spectral_radius();
            candidates += 1;
            worst = worst.min(product);
            ensure(product >= 1.0 - 1e-8, || {
                format!("instance {k}: ρ̂ product {product:.12}")
            })?;
        }
        let out = search_separating_poly(&a, &a, &cc, &SearchOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(!out.certificate.is_separated(), || {
            format!("instance {k}: search claims separation")
        })?;
    }
    Ok(format!(
        "{candidates} candidates, min product {worst:.12}; search never separates"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle correctness", oracle_correctness),
        ("cross-method agreement", cross_method_agreement),
        (
            "symmetric/skew fixture, modified route",
            symmetric_skew_fixture,
        ),
        ("self-adjoint fixture, sign series", sign_series_fixture),
        ("multicentric engine", multicentric_engine),
        ("projector laws", projector_laws),
        ("truncation bound soundness", truncation_bound_soundness),
        ("disc separation rate", eta_disc),
        ("region soundness", region_soundness),
        ("necessity for equal spectra", necessity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
