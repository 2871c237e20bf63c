//! Solvers for `AX − XB = C`.
//!
//! Every solver returns a [`SolveReport`] whose residual is recomputed from
//! the returned `X`, never taken from the method's own convergence test.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::GaussLegendre;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bivarcalc::{apply, block_poly, op_norm_estimate, BlockPowerLadder};
use crate::contour::{Circle, CircleSet};
use crate::matcore::{
    eigenvalues, expm, inverse, op_norm, smallest_singular_value, solve_linear, CMatrix, C64,
};
use crate::multicentric::{
    accumulate_series, contour_coeffs, decay_constants, phi_germ_piecewise_constant,
    taylor_coeffs_with_roots, truncation_order, truncation_tail, Side,
};
use crate::polyops::{divided_difference, lagrange_basis, Poly};
use crate::regions::{
    default_box, default_margin, pseudospectrum_grid, separation_certificate, vp_grid,
    CertificateMode, CertificateOptions, GridBox, GridRegion, SeparationCertificate,
    SeparationStatus, DEFAULT_RESOLUTION,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Oracle,
    Rosenblum,
    DiscSeries,
    Heinz,
    SignNewton,
    Multicentric,
    SignSeriesM2,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Oracle,
        Method::Rosenblum,
        Method::DiscSeries,
        Method::Heinz,
        Method::SignNewton,
        Method::Multicentric,
        Method::SignSeriesM2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Rosenblum => "rosenblum",
            Method::DiscSeries => "disc-series",
            Method::Heinz => "heinz",
            Method::SignNewton => "sign-newton",
            Method::Multicentric => "multicentric",
            Method::SignSeriesM2 => "sign-series-m2",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown method {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Constant subtracted from both `A` and `B` before the half-plane methods.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    #[default]
    None,
    /// Average of `max Re σ(B)` and `min Re σ(A)`.
    Midpoint,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// Separating polynomial; required by the series methods.
    pub poly: Option<Poly>,
    pub contour: Option<CircleSet>,
    /// Pseudospectral level for the certified disc-series truncation.
    pub eps: Option<f64>,
    /// Absolute margin `t` added to `‖p(M)‖`.
    pub margin: Option<f64>,
    pub resolution: usize,
    pub shift: Shift,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Oracle,
            tol: 1e-10,
            max_iter: 10_000,
            poly: None,
            contour: None,
            eps: None,
            margin: None,
            resolution: DEFAULT_RESOLUTION,
            shift: Shift::None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SylvesterProblem {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub options: SolveOptions,
}

impl SylvesterProblem {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix) -> Result<Self> {
        Self::with_options(a, b, c, SolveOptions::default())
    }

    pub fn with_options(a: CMatrix, b: CMatrix, c: CMatrix, options: SolveOptions) -> Result<Self> {
        if !a.is_square() || !b.is_square() || c.shape() != (a.rows(), b.rows()) {
            return Err(Error::dim(
                "SylvesterProblem",
                format!("A {:?}, B {:?}, C {:?}", a.shape(), b.shape(), c.shape()),
            ));
        }
        if !(options.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol = {} must be positive",
                options.tol
            )));
        }
        for (m, what) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            if !m.is_finite() {
                return Err(Error::NonFinite { what });
            }
        }
        Ok(SylvesterProblem { a, b, c, options })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.b.rows()
    }

    fn with(&self, a: CMatrix, b: CMatrix, c: CMatrix) -> SylvesterProblem {
        SylvesterProblem {
            a,
            b,
            c,
            options: self.options.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: String,
    pub x: CMatrix,
    /// `‖AX − XB − C‖_F / ‖C‖_F`, or the absolute residual when `C = 0`.
    pub residual: f64,
    /// Truncation order of a series method.
    pub order: Option<usize>,
    pub iterations: Option<usize>,
    /// A-priori bound on `‖X̃ − X‖`, when the method provides one.
    pub bound: Option<f64>,
    pub certificate: Option<SeparationCertificate>,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    fn new(method: impl Into<String>, prob: &SylvesterProblem, x: CMatrix) -> Self {
        let residual = residual(&prob.a, &prob.b, &prob.c, &x);
        SolveReport {
            method: method.into(),
            x,
            residual,
            order: None,
            iterations: None,
            bound: None,
            certificate: None,
            diagnostics: BTreeMap::new(),
            warnings: vec![],
        }
    }

    fn diag(&mut self, key: &str, v: f64) {
        self.diagnostics.insert(key.to_string(), v);
    }
}

pub fn residual(a: &CMatrix, b: &CMatrix, c: &CMatrix, x: &CMatrix) -> f64 {
    let r = &(&(a * x) - &(x * b)) - c;
    let nc = c.frobenius_norm();
    if nc == 0.0 {
        r.frobenius_norm()
    } else {
        r.frobenius_norm() / nc
    }
}

/// `‖[[I, −X], [0, I]]·diag(A, B)·[[I, X], [0, I]] − M‖_F`.
pub fn factorization_defect(a: &CMatrix, b: &CMatrix, c: &CMatrix, x: &CMatrix) -> Result<f64> {
    let (m, n) = (a.rows(), b.rows());
    let left = CMatrix::upper_block(
        &CMatrix::identity(m),
        &x.scale_real(-1.0),
        &CMatrix::identity(n),
    )?;
    let right = CMatrix::upper_block(&CMatrix::identity(m), x, &CMatrix::identity(n))?;
    let mid = CMatrix::direct_sum(a, b);
    let lhs = &(&left * &mid) * &right;
    Ok((&lhs - &CMatrix::upper_block(a, c, b)?).frobenius_norm())
}

/// Smallest `|λ − μ|` over `λ ∈ σ(A)`, `μ ∈ σ(B)`, with the pair attaining it.
pub fn spectral_gap(a: &CMatrix, b: &CMatrix) -> Result<(f64, C64, C64)> {
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let mut best = (f64::INFINITY, C64::default(), C64::default());
    for &x in &ea {
        for &y in &eb {
            let d = (x - y).norm();
            if d < best.0 {
                best = (d, x, y);
            }
        }
    }
    Ok(best)
}

/// Dispatch on `prob.options.method`. With a polynomial, the half-plane
/// methods solve the modified equation `p(A)Y − Yp(B) = C` and return
/// `X = q(A,B)(Y)`.
pub fn solve(prob: &SylvesterProblem) -> Result<SolveReport> {
    let method = prob.options.method;
    match method {
        Method::Oracle => solve_oracle(prob),
        Method::Rosenblum => solve_rosenblum(prob),
        Method::DiscSeries => solve_disc_series(prob),
        Method::Heinz | Method::SignNewton if prob.options.poly.is_some() => {
            solve_modified(prob, method)
        }
        Method::Heinz => solve_heinz(prob),
        Method::SignNewton => solve_sign_newton(prob),
        Method::Multicentric => solve_multicentric(prob),
        Method::SignSeriesM2 => solve_sign_series_m2(prob),
    }
}

pub fn solve_oracle(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (a, b, c) = (&prob.a, &prob.b, &prob.c);
    let (gap, la, lb) = spectral_gap(a, b)?;
    let scale = 1.0 + op_norm(a) + op_norm(b);
    if gap <= 1e-10 * scale {
        return Err(Error::SpectraOverlap {
            a: la,
            b: lb,
            distance: gap,
        });
    }
    let (m, n) = (prob.m(), prob.n());
    // vec(AX − XB) = (I ⊗ A − Bᵀ ⊗ I) vec X
    let k = &CMatrix::kron(&CMatrix::identity(n), a)
        - &CMatrix::kron(&b.transpose(), &CMatrix::identity(m));
    let v = solve_linear(&k, &c.vec())?;
    let x = CMatrix::unvec(&v, m, n)?;
    let mut rep = SolveReport::new(Method::Oracle.name(), prob, x);
    rep.diag("spectral_gap", gap);
    Ok(rep)
}

/// Circles enclosing `σ(A)` and excluding `σ(B)`: one circle when possible,
/// otherwise one per cluster of nearby eigenvalues.
pub fn auto_contour_a(a: &CMatrix, b: &CMatrix) -> Result<CircleSet> {
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let bx = GridBox::square_around(&ea, 0.0);
    let mid = (bx.lo + bx.hi) * 0.5;
    let reach = ea.iter().map(|z| (z - mid).norm()).fold(0.0, f64::max);
    let clear = eb
        .iter()
        .map(|z| (z - mid).norm())
        .fold(f64::INFINITY, f64::min);
    if clear > reach * 1.05 + 1e-12 {
        let radius = if clear.is_finite() {
            0.5 * (reach + clear)
        } else {
            reach + 1.0
        };
        return Ok(CircleSet::single(Circle::new(mid, radius.max(1e-8))));
    }
    // one circle per eigenvalue cluster, radius below half the distance to
    // σ(B) and to other clusters
    let scale = 1.0 + op_norm(a) + op_norm(b);
    let mut clusters: Vec<Vec<C64>> = vec![];
    for &z in &ea {
        match clusters
            .iter_mut()
            .find(|cl| cl.iter().any(|w| (w - z).norm() <= 1e-6 * scale))
        {
            Some(cl) => cl.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let centers: Vec<(C64, f64)> = clusters
        .iter()
        .map(|cl| {
            let c = cl.iter().sum::<C64>() / cl.len() as f64;
            let spread = cl.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
            (c, spread)
        })
        .collect();
    let mut circles = vec![];
    for (i, &(c, spread)) in centers.iter().enumerate() {
        let to_b = eb
            .iter()
            .map(|z| (z - c).norm())
            .fold(f64::INFINITY, f64::min);
        let to_other = centers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &(w, s))| (w - c).norm() - s)
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * to_b).min(0.45 * to_other);
        if !(radius > spread) {
            return Err(Error::Certificate(format!(
                "no circle around eigenvalue cluster at {c} avoids σ(B) and the other clusters"
            )));
        }
        circles.push(Circle::new(c, radius));
    }
    Ok(CircleSet(circles))
}

fn check_contour_a(contour: &CircleSet, a: &CMatrix, b: &CMatrix) -> Result<()> {
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let scale = 1.0 + op_norm(a) + op_norm(b);
    if !contour.is_disjoint() {
        return Err(Error::Certificate("contour circles overlap".into()));
    }
    for z in &ea {
        if contour.winding(*z) != 1 || contour.distance_to(*z) <= 1e-8 * scale {
            return Err(Error::Certificate(format!(
                "eigenvalue {z} of A is not strictly enclosed once"
            )));
        }
    }
    for z in &eb {
        if contour.winding(*z) != 0 || contour.distance_to(*z) <= 1e-8 * scale {
            return Err(Error::Certificate(format!(
                "eigenvalue {z} of B is not strictly outside the contour"
            )));
        }
    }
    Ok(())
}

/// `(λI − A)^{−1} C (λI − B)^{−1}`.
fn resolvent_sandwich(a: &CMatrix, b: &CMatrix, c: &CMatrix, lambda: C64) -> Result<CMatrix> {
    let z = solve_linear(
        &CMatrix::identity(a.rows()).scale(lambda).checked_sub(a)?,
        c,
    )?;
    let rb = CMatrix::identity(b.rows()).scale(lambda).checked_sub(b)?;
    Ok(solve_linear(&rb.transpose(), &z.transpose())?.transpose())
}

pub fn solve_rosenblum(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (a, b, c) = (&prob.a, &prob.b, &prob.c);
    let contour = match &prob.options.contour {
        Some(cs) => cs.clone(),
        None => auto_contour_a(a, b)?,
    };
    check_contour_a(&contour, a, b)?;
    let tol = prob.options.tol;
    let quad = |k: usize, phase: f64| -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(c.rows(), c.cols());
        for circle in contour.circles() {
            for node in circle.nodes(k, phase) {
                acc = &acc + &resolvent_sandwich(a, b, c, node.z)?.scale(node.dz);
            }
        }
        Ok(acc.scale(C64::new(0.0, -1.0 / (2.0 * PI))))
    };
    let mut k = 16usize;
    let mut x = quad(k, 0.0)?;
    loop {
        if k >= 1 << 16 {
            return Err(Error::NoConvergence {
                what: "Rosenblum trapezoidal rule",
                iterations: k,
            });
        }
        // doubling: the new nodes sit halfway between the old ones
        let refined = (&x + &quad(k, 0.5)?).scale_real(0.5);
        k *= 2;
        let change = (&refined - &x).frobenius_norm();
        x = refined;
        if change <= tol * x.frobenius_norm() || x.frobenius_norm() == 0.0 {
            break;
        }
    }
    let mut rep = SolveReport::new(Method::Rosenblum.name(), prob, x);
    rep.iterations = Some(k);
    rep.diag("nodes_per_circle", k as f64);
    rep.diag("circles", contour.circles().len() as f64);
    Ok(rep)
}

/// Outcome of summing `−Σ_n P^n R Q^{n+1}`.
struct SeriesSum {
    value: CMatrix,
    order: usize,
}

fn neumann_sum(
    pa: &CMatrix,
    pb_inv: &CMatrix,
    rhs: &CMatrix,
    fixed: Option<usize>,
    tol: f64,
    max_iter: usize,
) -> Result<SeriesSum> {
    let mut term = rhs * pb_inv;
    let mut sum = term.clone();
    let first = term.frobenius_norm();
    if first == 0.0 {
        return Ok(SeriesSum {
            value: sum.scale_real(-1.0),
            order: 0,
        });
    }
    let mut prev = first;
    let mut streak = 0;
    let mut n = 0;
    loop {
        if let Some(nf) = fixed {
            if n >= nf {
                break;
            }
        } else if n >= max_iter {
            return Err(Error::NoConvergence {
                what: "disc series",
                iterations: n,
            });
        }
        term = &(pa * &term) * pb_inv;
        n += 1;
        sum = &sum + &term;
        let cur = term.frobenius_norm();
        if !cur.is_finite() {
            return Err(Error::Divergence(format!("term {n} is not finite")));
        }
        streak = if cur > prev { streak + 1 } else { 0 };
        if streak >= 5 && cur > first {
            return Err(Error::Divergence(format!(
                "series terms grew for 5 consecutive orders (‖term_{n}‖ = {cur:.3e})"
            )));
        }
        if fixed.is_none() {
            let ratio = if prev > 0.0 { cur / prev } else { 0.0 };
            if ratio < 1.0 && cur <= tol * (1.0 - ratio) * sum.frobenius_norm() {
                break;
            }
            if cur == 0.0 {
                break;
            }
        }
        prev = cur;
    }
    Ok(SeriesSum {
        value: sum.scale_real(-1.0),
        order: n,
    })
}

pub fn solve_disc_series(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (a, b, c) = (&prob.a, &prob.b, &prob.c);
    let p = prob
        .options
        .poly
        .clone()
        .unwrap_or_else(|| Poly::monomial(1));
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let rho_a = ea.iter().map(|&z| p.eval(z).norm()).fold(0.0, f64::max);
    let min_b = eb
        .iter()
        .map(|&z| p.eval(z).norm())
        .fold(f64::INFINITY, f64::min);
    let product = rho_a / min_b;
    if !(product < 1.0) {
        return Err(Error::Applicability {
            method: "disc-series",
            detail: format!("ρ(p(A))·ρ(p(B)^-1) = {product:.4} is not below 1"),
        });
    }
    let pa = p.eval_matrix(a)?;
    let pb = p.eval_matrix(b)?;
    let pb_inv = inverse(&pb)?;
    let q = divided_difference(&p);
    let tol = prob.options.tol;

    let mut bound = None;
    let mut fixed = None;
    let mut cert = None;
    if let Some(eps) = prob.options.eps {
        let db = truncation_bound_disc(
            &p,
            a,
            b,
            eps,
            prob.options.contour.as_ref(),
            prob.options.resolution,
        )?;
        let cn = c.frobenius_norm();
        // absolute target relative to the size of the data
        let target = tol * cn.max(f64::MIN_POSITIVE);
        let n = db.order_for(cn, target)?;
        bound = Some(db.x_error_bound(cn, n));
        fixed = Some(n);
        cert = Some(db.certificate);
    }
    if c.frobenius_norm() == 0.0 {
        fixed = Some(0);
    }
    let y = neumann_sum(&pa, &pb_inv, c, fixed, tol, prob.options.max_iter)?;
    let x = apply(&q, a, b, &y.value)?;
    // pre-processed order: the same series applied to q(A,B)(C)
    let qc = apply(&q, a, b, c)?;
    let x2 = neumann_sum(&pa, &pb_inv, &qc, fixed, tol, prob.options.max_iter)?;
    let gap = (&x - &x2.value).frobenius_norm() / x.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut rep = SolveReport::new(Method::DiscSeries.name(), prob, x);
    rep.order = Some(y.order);
    rep.bound = bound;
    rep.certificate = cert;
    rep.diag("rho_product", product);
    rep.diag("variant_gap", gap);
    rep.diag("variant_order", x2.order as f64);
    if gap > 100.0 * tol.max(1e-12) {
        rep.warnings
            .push(format!("series orders disagree: relative gap {gap:.3e}"));
    }
    Ok(rep)
}

/// Certified truncation data for the disc series under `V_p(A) ∩ Σ_ε(B) = ∅`.
#[derive(Debug, Clone)]
pub struct DiscBound {
    pub eps: f64,
    /// `min_γ |p| − ‖p(A)‖`.
    pub delta: f64,
    /// Length `ℓ_B` of the contour.
    pub length: f64,
    /// `‖p(A)‖/(‖p(A)‖+δ)`.
    pub r: f64,
    pub p_a_norm: f64,
    /// Right-hand side of the resolvent-sum bound on `‖S(p(A),p(B))^{−1}‖`.
    pub inverse_bound: f64,
    /// Coefficient bound on the map `Y ↦ q(A,B)(Y)`.
    pub q_norm: f64,
    /// Smallest `N` with `r^{N+1} < 2πε(1−r)·tol/(ℓ_B‖q‖)` for the `tol`
    /// passed to [`DiscBound::literal_order`].
    pub contour: CircleSet,
    pub certificate: SeparationCertificate,
}

impl DiscBound {
    fn radius(&self) -> f64 {
        self.p_a_norm + self.delta
    }

    /// Certified `‖X̃_N − X‖_F` for data with `‖C‖_F = c_norm`:
    /// `‖q‖·(ℓ_B/2πε)·‖C‖·r^{N+1}/((1−r)(‖p(A)‖+δ))`.
    pub fn x_error_bound(&self, c_norm: f64, n: usize) -> f64 {
        self.q_norm * self.length / (2.0 * PI * self.eps) * c_norm * self.r.powi(n as i32 + 1)
            / ((1.0 - self.r) * self.radius())
    }

    /// Smallest `N` whose certified error is below `tol`.
    pub fn order_for(&self, c_norm: f64, tol: f64) -> Result<usize> {
        let pref = self.q_norm * self.length / (2.0 * PI * self.eps) * c_norm / self.radius();
        // truncation_order solves C r^{N+1}/(1−r) < 2·tol
        truncation_order(self.r, pref, tol / 2.0)
    }

    /// The order from the literal rule `r^{N+1} < 2πε(1−r)·tol/(ℓ_B‖q‖)`,
    /// which omits the factors `‖C‖` and `1/(‖p(A)‖+δ)`.
    pub fn literal_order(&self, tol: f64) -> Result<usize> {
        let pref = self.length * self.q_norm / (2.0 * PI * self.eps);
        truncation_order(self.r, pref, tol / 2.0)
    }
}

fn circle_for(b: &GridBox, pad: f64) -> Circle {
    let mid = (b.lo + b.hi) * 0.5;
    Circle::new(mid, (b.hi - mid).norm() + pad)
}

/// Smallest circle containing both.
fn enclose(x: &Circle, y: &Circle) -> Circle {
    let d = (y.center - x.center).norm();
    if d + y.radius <= x.radius {
        return *x;
    }
    if d + x.radius <= y.radius {
        return *y;
    }
    let r = 0.5 * (d + x.radius + y.radius);
    let center = x.center + (y.center - x.center) * ((r - x.radius) / d);
    Circle::new(center, r)
}

/// Merge intersecting circles whose tags agree (`None` matches anything).
fn merge_tagged(mut items: Vec<(Option<Side>, Circle)>) -> Result<Vec<(Option<Side>, Circle)>> {
    'outer: loop {
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                if !items[i].1.intersects(&items[j].1) {
                    continue;
                }
                let tag = match (items[i].0, items[j].0) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(Error::Certificate(
                            "enclosing circles of opposite components intersect".into(),
                        ))
                    }
                    (x, y) => x.or(y),
                };
                let merged = enclose(&items[i].1, &items[j].1);
                items.swap_remove(j);
                items[i] = (tag, merged);
                continue 'outer;
            }
        }
        return Ok(items);
    }
}

fn component_circles(
    grid: &GridRegion,
    tags: &BTreeMap<u32, Side>,
    pad_cells: f64,
) -> Result<Vec<(Option<Side>, Circle)>> {
    let (dx, dy) = grid.cell_size();
    let pad = pad_cells * dx.max(dy);
    let mut items = vec![];
    for label in 1..=grid.components {
        if let Some(bx) = grid.component_bbox(label) {
            items.push((tags.get(&label).copied(), circle_for(&bx, pad)));
        }
    }
    merge_tagged(items)
}

/// Build and verify `γ_B` and the data of the certified disc bound.
pub fn truncation_bound_disc(
    p: &Poly,
    a: &CMatrix,
    b: &CMatrix,
    eps: f64,
    contour: Option<&CircleSet>,
    resolution: usize,
) -> Result<DiscBound> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ε = {eps} must be positive"
        )));
    }
    let zero_c = CMatrix::zeros(a.rows(), b.rows());
    let opts = CertificateOptions {
        mode: CertificateMode::DiscA { eps: Some(eps) },
        bbox: None,
        resolution,
    };
    let certificate = separation_certificate(p, a, b, &zero_c, 0.0, &opts)?;
    if certificate.status != SeparationStatus::Separated {
        return Err(Error::Certificate(format!(
            "V_p(A) ∩ Σ_ε(B) = ∅ not certified: {}",
            certificate.cause.clone().unwrap_or_default()
        )));
    }
    let pa_norm = op_norm(&p.eval_matrix(a)?);
    let roots = p.roots()?;
    let eb = eigenvalues(b)?.eigenvalues;
    let bbox = certificate.bbox.unwrap_or(default_box(a, b)?);
    let vpa = vp_grid(p, pa_norm, bbox, resolution)?;

    let verify = |cs: &CircleSet| -> Result<f64> {
        if !cs.is_disjoint() {
            return Err(Error::Certificate("γ_B circles overlap".into()));
        }
        if let Some(z) = eb.iter().find(|&&z| cs.winding(z) != 1) {
            return Err(Error::Certificate(format!(
                "γ_B does not enclose eigenvalue {z} of B once"
            )));
        }
        if let Some(z) = roots.iter().find(|&&z| cs.winding(z) != 0) {
            return Err(Error::Certificate(format!(
                "γ_B encloses the root {z} of p"
            )));
        }
        let inside_vpa = (0..vpa.values.len())
            .any(|k| vpa.mask[k] && cs.winding(vpa.center(k % vpa.nx, k / vpa.nx)) != 0);
        if inside_vpa {
            return Err(Error::Certificate("γ_B winds around part of V_p(A)".into()));
        }
        let id = CMatrix::identity(b.rows());
        let mut min_p = f64::INFINITY;
        for node in cs.nodes(1024) {
            let s = smallest_singular_value(&(&id.scale(node.z) - b));
            if s < eps {
                return Err(Error::Certificate(format!(
                    "γ_B enters Σ_ε(B) at {}",
                    node.z
                )));
            }
            min_p = min_p.min(p.eval(node.z).norm());
        }
        if !(min_p > pa_norm) {
            return Err(Error::Certificate("|p| ≤ ‖p(A)‖ somewhere on γ_B".into()));
        }
        Ok(min_p - pa_norm)
    };

    let (contour, delta) = match contour {
        Some(cs) => (cs.clone(), verify(cs)?),
        None => {
            let ps = pseudospectrum_grid(b, eps, bbox, resolution)?;
            let mut last = Error::Certificate("no γ_B candidate".into());
            let mut found = None;
            for pad in [2.0, 4.0, 1.0, 8.0] {
                let built = component_circles(&ps, &BTreeMap::new(), pad)
                    .map(|items| CircleSet(items.into_iter().map(|(_, c)| c).collect()));
                match built.and_then(|cs| verify(&cs).map(|d| (cs, d))) {
                    Ok(v) => {
                        found = Some(v);
                        break;
                    }
                    Err(e) => last = e,
                }
            }
            found.ok_or(last)?
        }
    };
    let length = contour.length();
    let radius = pa_norm + delta;
    let r = pa_norm / radius;
    let q_norm = op_norm_estimate(&divided_difference(p), a, b)?.upper;
    Ok(DiscBound {
        eps,
        delta,
        length,
        r,
        p_a_norm: pa_norm,
        inverse_bound: length / (2.0 * PI * eps) / (radius * (1.0 - r)),
        q_norm,
        contour,
        certificate,
    })
}

/// Half-plane shift for the pair, and the strict separation check.
fn halfplane_shift(
    method: &'static str,
    a: &CMatrix,
    b: &CMatrix,
    shift: Shift,
) -> Result<(f64, f64, f64)> {
    let sa = eigenvalues(a)?;
    let sb = eigenvalues(b)?;
    let (amin, bmax) = (sa.min_real(), sb.max_real());
    let s = match shift {
        Shift::None => 0.0,
        Shift::Midpoint => 0.5 * (amin + bmax),
        Shift::Value(v) => v,
    };
    let (ba, bb) = (amin - s, s - bmax);
    if !(ba > 0.0 && bb > 0.0) {
        return Err(Error::Applicability {
            method,
            detail: format!("needs min Re σ(A) > {s} > max Re σ(B); got {amin:.4e} and {bmax:.4e}"),
        });
    }
    Ok((s, ba, bb))
}

fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(points).expect("positive order"))
        .as_node_weight_pairs()
        .to_vec()
}

pub fn solve_heinz(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (s, beta_a, beta_b) = halfplane_shift("heinz", &prob.a, &prob.b, prob.options.shift)?;
    let shift = C64::new(s, 0.0);
    let a = prob.a.shift(shift)?;
    let b = prob.b.shift(shift)?;
    let c = &prob.c;
    let beta = beta_a + beta_b;
    let tol = prob.options.tol;

    // transient constant: max over samples of ‖e^{−tA}‖‖e^{tB}‖e^{βt}
    let tau = 1.0 / beta;
    let mut kappa: f64 = 1.0;
    for k in 0..8 {
        let t = tau * 2f64.powi(k - 3);
        let ea = expm(&a.scale_real(-t))?;
        let eb = expm(&b.scale_real(t))?;
        kappa = kappa.max(op_norm(&ea) * op_norm(&eb) * (beta * t).exp());
    }
    let scale = op_norm(&a) + op_norm(&b);
    let horizon = ((10.0 * kappa * scale / (tol * beta)).ln() / beta).max(tau);

    let rule = gauss_legendre(16);
    let quad = |panels: usize| -> Result<CMatrix> {
        let h = horizon / panels as f64;
        let mut g = CMatrix::zeros(c.rows(), c.cols());
        for &(x, w) in &rule {
            let t = 0.5 * h * (x + 1.0);
            let ea = expm(&a.scale_real(-t))?;
            let eb = expm(&b.scale_real(t))?;
            g = &g + &(&(&ea * c) * &eb).scale_real(0.5 * h * w);
        }
        // panel p contributes e^{−phA} G e^{phB}
        let sa = expm(&a.scale_real(-h))?;
        let sb = expm(&b.scale_real(h))?;
        let mut acc = g.clone();
        let mut cur = g;
        for _ in 1..panels {
            cur = &(&sa * &cur) * &sb;
            acc = &acc + &cur;
        }
        Ok(acc)
    };
    let mut panels = ((horizon * scale / 4.0).ceil() as usize).clamp(4, 1 << 12);
    let mut x = quad(panels)?;
    loop {
        if panels >= 1 << 16 {
            return Err(Error::NoConvergence {
                what: "Gauss-Legendre panel refinement",
                iterations: panels,
            });
        }
        panels *= 2;
        let refined = quad(panels)?;
        let change = (&refined - &x).frobenius_norm();
        x = refined;
        if change <= tol * x.frobenius_norm() || x.frobenius_norm() == 0.0 {
            break;
        }
    }
    let mut rep = SolveReport::new(Method::Heinz.name(), prob, x);
    rep.iterations = Some(panels);
    rep.diag("horizon", horizon);
    rep.diag("kappa", kappa);
    rep.diag("shift", s);
    Ok(rep)
}

pub fn solve_sign_newton(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (s, _, _) = halfplane_shift("sign-newton", &prob.a, &prob.b, prob.options.shift)?;
    let shift = C64::new(s, 0.0);
    let a = prob.a.shift(shift)?;
    let b = prob.b.shift(shift)?;
    let (m, n) = (prob.m(), prob.n());
    let tol = prob.options.tol;
    let mut cur = CMatrix::upper_block(&a, &prob.c, &b)?;
    let mut last_change = f64::INFINITY;
    let mut iters = 0;
    let cap = prob.options.max_iter.min(200);
    loop {
        if iters >= cap {
            return Err(Error::NoConvergence {
                what: "sign-function Newton iteration",
                iterations: iters,
            });
        }
        let inv = inverse(&cur).map_err(|e| match e {
            Error::Singular { condition } => Error::Conditioning(format!(
                "Newton iterate is singular to working precision (condition {condition:.3e})"
            )),
            other => other,
        })?;
        let next = (&cur + &inv).scale_real(0.5);
        iters += 1;
        let change = (&next - &cur).frobenius_norm();
        let size = next.frobenius_norm();
        cur = next;
        if change <= tol * size {
            break;
        }
        // rounding floor reached: the change stopped shrinking
        if change <= 1e-8 * size && change >= 0.5 * last_change {
            break;
        }
        last_change = change;
    }
    let sq = &cur * &cur;
    let inv_defect = (&sq - &CMatrix::identity(m + n)).frobenius_norm();
    let size = cur.frobenius_norm();
    if inv_defect > 1e-6 * size * size {
        return Err(Error::Conditioning(format!(
            "computed sign matrix is not an involution: ‖S² − I‖_F = {inv_defect:.3e}"
        )));
    }
    let x = cur.block(0, m, m, n).scale_real(0.5);
    let mut rep = SolveReport::new(Method::SignNewton.name(), prob, x);
    rep.iterations = Some(iters);
    rep.diag("involution_defect", inv_defect);
    rep.diag(
        "block11_defect",
        (&cur.block(0, 0, m, m) - &CMatrix::identity(m)).frobenius_norm(),
    );
    rep.diag("block21_norm", cur.block(m, 0, n, m).frobenius_norm());
    rep.diag(
        "block22_defect",
        (&cur.block(m, m, n, n) + &CMatrix::identity(n)).frobenius_norm(),
    );
    rep.diag("shift", s);
    Ok(rep)
}

/// Taylor coefficients of `(1+w)^{−1/2}`, exactly.
pub fn sign_series_coefficients(count: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(count);
    let mut beta = BigRational::from_integer(BigInt::from(1));
    for k in 0..count {
        if k > 0 {
            let num = -BigInt::from(2 * k as i64 - 1);
            beta *= BigRational::new(num, BigInt::from(2 * k as i64));
        }
        out.push(beta.clone());
    }
    out
}

pub fn solve_sign_series_m2(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (a, b) = (&prob.a, &prob.b);
    let (m, n) = (prob.m(), prob.n());
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let rho = ea
        .iter()
        .chain(&eb)
        .map(|z| (z.powu(4) - 1.0).norm())
        .fold(0.0, f64::max);
    if !(rho < 1.0) {
        return Err(Error::Divergence(format!(
            "ρ(M⁴ − I) = {rho:.4} is not below 1"
        )));
    }
    let mm = CMatrix::upper_block(a, &prob.c, b)?;
    let m2 = &mm * &mm;
    let w = &(&m2 * &m2) - &CMatrix::identity(m + n);
    let tol = prob.options.tol;
    let mut power = CMatrix::identity(m + n);
    let mut sum = power.clone();
    let mut beta = 1.0f64;
    let mut prev = f64::INFINITY;
    let mut first = None;
    let mut streak = 0;
    let mut k = 0;
    loop {
        if k >= prob.options.max_iter {
            return Err(Error::NoConvergence {
                what: "sign series in M⁴ − I",
                iterations: k,
            });
        }
        k += 1;
        beta *= -((2 * k - 1) as f64) / ((2 * k) as f64);
        power = &power * &w;
        let term = power.scale_real(beta);
        let norm = term.frobenius_norm();
        sum = &sum + &term;
        let first_norm = *first.get_or_insert(norm);
        if !norm.is_finite() {
            return Err(Error::Divergence("series term overflowed".into()));
        }
        streak = if norm > prev { streak + 1 } else { 0 };
        if streak >= 5 && norm > first_norm {
            return Err(Error::Divergence(format!(
                "terms grew for 5 consecutive orders at k = {k}"
            )));
        }
        if norm <= tol * (1.0 - rho) * sum.frobenius_norm() {
            break;
        }
        prev = norm;
    }
    let sgn = &m2 * &sum;
    // sgn(M²) = [[I, 2Z], [0, −I]] with A²Z − ZB² = AC + CB, and Z = X
    let x = sgn.block(0, m, m, n).scale_real(0.5);
    let mut rep = SolveReport::new(Method::SignSeriesM2.name(), prob, x);
    rep.order = Some(k);
    rep.diag("rho_m4", rho);
    rep.diag(
        "involution_defect",
        (&(&sgn * &sgn) - &CMatrix::identity(m + n)).frobenius_norm(),
    );
    Ok(rep)
}

/// Solve `p(A)Y − Yp(B) = C` with `inner`, then `X = q(A,B)(Y)`.
pub fn solve_modified(prob: &SylvesterProblem, inner: Method) -> Result<SolveReport> {
    let p = prob
        .options
        .poly
        .clone()
        .ok_or_else(|| Error::Applicability {
            method: "modified equation",
            detail: "requires a polynomial p".into(),
        })?;
    let pa = p.eval_matrix(&prob.a)?;
    let pb = p.eval_matrix(&prob.b)?;
    let mut sub = prob.with(pa, pb, prob.c.clone());
    sub.options.poly = None;
    sub.options.method = inner;
    let inner_rep = solve(&sub)?;
    let x = apply(&divided_difference(&p), &prob.a, &prob.b, &inner_rep.x)?;
    let mut rep = SolveReport::new(format!("{}+modified", inner.name()), prob, x);
    rep.order = inner_rep.order;
    rep.iterations = inner_rep.iterations;
    rep.warnings = inner_rep.warnings;
    for (k, v) in inner_rep.diagnostics {
        rep.diagnostics.insert(format!("inner_{k}"), v);
    }
    rep.diag("inner_residual", inner_rep.residual);
    Ok(rep)
}

/// Contour and germ data for the multicentric projector.
struct McSetup {
    level: f64,
    margin: f64,
    circles: CircleSet,
    roots: Vec<C64>,
    root_sides: Vec<Side>,
    circle_sides: Vec<Side>,
    decay: Vec<f64>,
    certificate: SeparationCertificate,
}

fn multicentric_setup(
    p: &Poly,
    prob: &SylvesterProblem,
    base_level: f64,
    t: f64,
) -> Result<McSetup> {
    let (a, b, c) = (&prob.a, &prob.b, &prob.c);
    let mut res = prob.options.resolution;
    let cert = loop {
        let opts = CertificateOptions {
            mode: CertificateMode::BlockM,
            bbox: None,
            resolution: res,
        };
        let cert = separation_certificate(p, a, b, c, t, &opts)?;
        match cert.status {
            SeparationStatus::Separated => break cert,
            SeparationStatus::NotSeparated => {
                return Err(Error::Applicability {
                    method: "multicentric",
                    detail: cert
                        .cause
                        .unwrap_or_else(|| "spectra not separated by p".into()),
                })
            }
            SeparationStatus::Inconclusive if res < 1024 => res *= 2,
            SeparationStatus::Inconclusive => {
                return Err(Error::Certificate(
                    cert.cause.unwrap_or_else(|| "inconclusive".into()),
                ))
            }
        }
    };
    let level = base_level + t;
    let bbox = cert
        .bbox
        .ok_or_else(|| Error::Certificate("certificate without grid".into()))?;
    let grid = vp_grid(p, level, bbox, res)?;
    if !grid.border_labels().is_empty() {
        return Err(Error::Certificate("level set reaches the grid edge".into()));
    }
    let mut tags = BTreeMap::new();
    let labelled = cert
        .components_a
        .iter()
        .map(|&l| (l, Side::Plus))
        .chain(cert.components_b.iter().map(|&l| (l, Side::Minus)));
    for (l, side) in labelled {
        if tags.insert(l, side).is_some_and(|old| old != side) {
            return Err(Error::Applicability {
                method: "multicentric",
                detail: format!("component {l} holds eigenvalues of both A and B"),
            });
        }
    }
    let roots = p.roots()?;
    let ea = &cert.eig_a;
    let eb = &cert.eig_b;
    let mut last = Error::Certificate("no contour candidate".into());
    for pad in [2.0, 4.0, 1.0] {
        let items = match component_circles(&grid, &tags, pad) {
            Ok(v) => v,
            Err(e) => {
                last = e;
                continue;
            }
        };
        let side_at = |z: C64| -> Option<Side> {
            let hits: Vec<_> = items.iter().filter(|(_, c)| c.contains(z)).collect();
            match hits.as_slice() {
                [(tag, _)] => Some(tag.unwrap_or(Side::Plus)),
                _ => None,
            }
        };
        if ea.iter().any(|&z| side_at(z) != Some(Side::Plus))
            || eb.iter().any(|&z| side_at(z) != Some(Side::Minus))
        {
            last = Error::Certificate("eigenvalues not enclosed by circles of their side".into());
            continue;
        }
        let root_sides: Option<Vec<Side>> = roots.iter().map(|&z| side_at(z)).collect();
        let Some(root_sides) = root_sides else {
            last = Error::Certificate("a root of p is not enclosed by exactly one circle".into());
            continue;
        };
        let circles = CircleSet(items.iter().map(|(_, c)| *c).collect());
        match decay_constants(p, level, &roots, &circles) {
            Ok(decay) => {
                return Ok(McSetup {
                    level,
                    margin: t,
                    circles,
                    roots,
                    root_sides,
                    circle_sides: items.iter().map(|(s, _)| s.unwrap_or(Side::Plus)).collect(),
                    decay,
                    certificate: cert,
                })
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

pub fn solve_multicentric(prob: &SylvesterProblem) -> Result<SolveReport> {
    let (a, b, c) = (&prob.a, &prob.b, &prob.c);
    let (m, n) = (prob.m(), prob.n());
    let p = prob
        .options
        .poly
        .clone()
        .ok_or_else(|| Error::Applicability {
            method: "multicentric",
            detail: "requires a polynomial p".into(),
        })?;
    if p.degree().map_or(true, |d| d == 0) {
        return Err(Error::InvalidArgument("p must have degree ≥ 1".into()));
    }
    if let Some((i, j, d)) = Poly::coincident_pair(&p.roots()?) {
        return Err(Error::Conditioning(format!(
            "roots {i} and {j} of p are {d:.3e} apart"
        )));
    }
    let base_level = op_norm(&block_poly(&p, a, b, c)?.assemble());
    let mut t = prob
        .options
        .margin
        .unwrap_or_else(|| default_margin(&p, base_level, 0.05));
    let mut attempt = 0;
    let setup = loop {
        match multicentric_setup(&p, prob, base_level, t) {
            Ok(s) => break s,
            Err(e) if e.is_applicability() && !matches!(e, Error::Certificate(_)) => return Err(e),
            Err(e) if attempt >= 6 => return Err(e),
            Err(_) => {
                attempt += 1;
                t *= 0.5;
            }
        }
    };

    // work with p/R so the contour level is 1
    let level = setup.level;
    let p_hat = p.scale(C64::new(1.0 / level, 0.0));
    let r = base_level / level;
    let basis = lagrange_basis(&setup.roots)?;
    let mm = CMatrix::upper_block(a, c, b)?;
    let deltas = basis
        .basis
        .iter()
        .map(|d| d.eval_matrix(&mm))
        .collect::<Result<Vec<_>>>()?;
    let prefactor: f64 = deltas
        .iter()
        .zip(&setup.decay)
        .map(|(d, l)| l * op_norm(d))
        .sum();
    let tol = prob.options.tol;
    let order = truncation_order(r, prefactor, tol)?;
    if order > 50_000 {
        return Err(Error::Range(format!(
            "truncation order {order} is impractically large"
        )));
    }
    let values: Vec<C64> = setup
        .circle_sides
        .iter()
        .map(|s| C64::new(s.sign(), 0.0))
        .collect();
    let series = contour_coeffs(&p_hat, &setup.roots, &setup.circles, &values, order)?
        .with_decay(setup.decay.clone(), 1.0)?;
    // the derivative recursion is exact in exact arithmetic but loses digits
    // with the order; compare on the leading coefficients only
    let low = order.min(12);
    let germ = phi_germ_piecewise_constant(&setup.root_sides, low);
    let reference = taylor_coeffs_with_roots(&p_hat, &setup.roots, &germ, low)?;
    let recursion_gap = reference
        .coefficients
        .iter()
        .zip(&series.coefficients)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).norm()))
        .fold(0.0, f64::max);
    let mut ladder = BlockPowerLadder::new(block_poly(&p_hat, a, b, c)?);
    let id = CMatrix::identity(m + n);
    let phi = accumulate_series(&series, &deltas, &id, order, |_| {
        Ok(ladder.step().assemble())
    })?;
    let q = (&phi + &id).scale_real(0.5);
    let x = q.block(0, m, m, n);

    let phi_bound = truncation_tail(r, prefactor, order);
    let mut rep = SolveReport::new(Method::Multicentric.name(), prob, x);
    rep.order = Some(order);
    rep.bound = Some(0.5 * phi_bound);
    rep.diag("phi_bound", phi_bound);
    rep.diag("ratio", r);
    rep.diag("prefactor", prefactor);
    rep.diag("level", level);
    rep.diag("margin", setup.margin);
    rep.diag("circles", setup.circles.circles().len() as f64);
    rep.diag("recursion_gap", recursion_gap);
    rep.diag(
        "decay_violation",
        series.decay_violation().unwrap_or(f64::NAN),
    );
    let idem = (&(&q * &q) - &q).frobenius_norm();
    rep.diag("idempotency_defect", idem);
    rep.diag(
        "q11_defect",
        (&q.block(0, 0, m, m) - &CMatrix::identity(m)).frobenius_norm(),
    );
    rep.diag("q21_norm", q.block(m, 0, n, m).frobenius_norm());
    rep.diag("q22_norm", q.block(m, m, n, n).frobenius_norm());
    let slack = 1e-9 * (1.0 + q.frobenius_norm().powi(2));
    if idem > 4.0 * phi_bound + slack {
        rep.warnings.push(format!(
            "‖Q² − Q‖_F = {idem:.3e} exceeds four times the truncation bound {phi_bound:.3e}"
        ));
    }
    rep.certificate = Some(setup.certificate);
    Ok(rep)
}
