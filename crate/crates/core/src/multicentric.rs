//! Multicentric representation `φ(z) = Σ_j δ_j(z) f_j(p(z))`.
//!
//! The branch functions `f_j` are never formed; only their Taylor coefficients
//! at `w = 0` are produced, algebraically from the derivatives of `φ` at the
//! roots of `p`.
//!
//! Floating-point coefficients are obtained from a locally rescaled form of
//! the recursion. Around each root we expand in `u` with `z = λ_j + ρ_j u`,
//! `ρ_j = 1/|p′(λ_j)|`, so that the divisor `(ρ_j p′(λ_j))^n` has unit modulus.
//! Rescaled `b`-values `b_{m,l}(λ_j)·l!/m!·ρ_j^m` are the coefficients
//! `[u^m] (p(λ_j + ρ_j u))^l`, which are accumulated as truncated power series.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};

use crate::contour::CircleSet;
use crate::matcore::{op_norm, CMatrix, C64};
use crate::pairs;
use crate::polyops::{lagrange_basis, Poly};
use crate::{Error, Result};

/// Table of the polynomials `b_{n,m}` with
/// `dⁿ/dzⁿ f(p(z)) = Σ_m b_{n,m}(z) f^{(m)}(p(z))`.
#[derive(Debug, Clone)]
pub struct BnmTable {
    p: Poly,
    entries: Vec<Vec<Poly>>,
}

impl BnmTable {
    pub fn source(&self) -> &Poly {
        &self.p
    }

    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    /// `b_{n,m}`; zero for `m > n`.
    pub fn get(&self, n: usize, m: usize) -> Poly {
        if m > n || n > self.order() {
            return Poly::zero();
        }
        self.entries[n][m].clone()
    }
}

pub fn bnm_table(p: &Poly, order: usize) -> BnmTable {
    let dp = p.derivative(1);
    let mut entries: Vec<Vec<Poly>> = vec![vec![Poly::constant(C64::new(1.0, 0.0))]];
    for n in 0..order {
        let prev = &entries[n];
        let row: Vec<Poly> = (0..=n + 1)
            .map(|m| {
                let mut acc = Poly::zero();
                if m >= 1 && m - 1 <= n {
                    acc = acc.add(&prev[m - 1].mul(&dp));
                }
                if m <= n {
                    acc = acc.add(&prev[m].derivative(1));
                }
                acc
            })
            .collect();
        entries.push(row);
    }
    BnmTable {
        p: p.clone(),
        entries,
    }
}

/// Which side of the separation a root belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Derivatives `φ^{(n)}(λ_j)` for `0 ≤ n ≤ N`, one row per root.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiGerm {
    table: Vec<Vec<C64>>,
}

impl PhiGerm {
    pub fn from_table(table: Vec<Vec<C64>>) -> Result<Self> {
        let width = table.first().map_or(0, Vec::len);
        if width == 0 || table.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument(
                "germ table must be rectangular and nonempty".into(),
            ));
        }
        if table.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { what: "germ table" });
        }
        Ok(PhiGerm { table })
    }

    pub fn roots(&self) -> usize {
        self.table.len()
    }

    pub fn order(&self) -> usize {
        self.table[0].len() - 1
    }

    pub fn derivative(&self, j: usize, n: usize) -> C64 {
        self.table[j].get(n).copied().unwrap_or_default()
    }

    pub fn table(&self) -> &[Vec<C64>] {
        &self.table
    }
}

pub fn phi_germ_piecewise_constant(assignment: &[Side], order: usize) -> PhiGerm {
    let table = assignment
        .iter()
        .map(|s| {
            let mut row = vec![C64::zero(); order + 1];
            row[0] = C64::new(s.sign(), 0.0);
            row
        })
        .collect();
    PhiGerm { table }
}

/// Germ of `z ↦ z ± c` at each root.
pub fn phi_germ_shift(roots: &[C64], assignment: &[Side], c: f64, order: usize) -> Result<PhiGerm> {
    if roots.len() != assignment.len() {
        return Err(Error::dim(
            "phi_germ_shift",
            format!("{} roots but {} assignments", roots.len(), assignment.len()),
        ));
    }
    let table = roots
        .iter()
        .zip(assignment)
        .map(|(&r, s)| {
            let mut row = vec![C64::zero(); order + 1];
            row[0] = r + s.sign() * c;
            if order >= 1 {
                row[1] = C64::new(1.0, 0.0);
            }
            row
        })
        .collect();
    PhiGerm::from_table(table)
}

/// Germ of an entire polynomial `φ`; used for reconstruction checks.
pub fn phi_germ_polynomial(phi: &Poly, roots: &[C64], order: usize) -> PhiGerm {
    let derivs: Vec<Poly> = (0..=order).map(|n| phi.derivative(n)).collect();
    let table = roots
        .iter()
        .map(|&r| derivs.iter().map(|d| d.eval(r)).collect())
        .collect();
    PhiGerm { table }
}

/// Taylor data of the branch functions, `α_{j,n} = f_j^{(n)}(0)/n!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MulticentricSeries {
    #[serde(with = "pairs::vec")]
    pub roots: Vec<C64>,
    /// Leading coefficient of `p`; the roots fix the rest.
    #[serde(with = "pairs", default = "one_c64")]
    pub leading: C64,
    #[serde(with = "pairs::table")]
    pub coefficients: Vec<Vec<C64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default, rename = "L")]
    pub decay: Option<Vec<f64>>,
}

fn one_c64() -> C64 {
    C64::new(1.0, 0.0)
}

impl MulticentricSeries {
    pub fn order(&self) -> usize {
        self.coefficients
            .first()
            .map_or(0, |r| r.len().saturating_sub(1))
    }

    pub fn poly(&self) -> Poly {
        let p = Poly::from_roots(&self.roots);
        if self.leading == one_c64() {
            p
        } else {
            Poly::new(p.coeffs().iter().map(|&c| c * self.leading).collect())
        }
    }

    /// Attach `L_j` and the level radius; checks the coefficient bound
    /// `|α_{j,n}| ≤ L_j·radius^{−n}` (with 1e−6 relative slack).
    pub fn with_decay(mut self, decay: Vec<f64>, radius: f64) -> Result<Self> {
        if decay.len() != self.roots.len() {
            return Err(Error::dim("with_decay", "one constant per root"));
        }
        self.decay = Some(decay);
        self.radius = Some(radius);
        Ok(self)
    }

    /// Largest `|α_{j,n}|·radius^n / L_j` over the table; ≤ 1 when the
    /// Cauchy bound holds.
    pub fn decay_violation(&self) -> Option<f64> {
        let (l, r) = (self.decay.as_ref()?, self.radius?);
        let mut worst = 0.0f64;
        for (j, row) in self.coefficients.iter().enumerate() {
            let mut scale = 1.0;
            for a in row {
                worst = worst.max(a.norm() * scale / l[j]);
                scale *= r;
            }
        }
        Some(worst)
    }
}

/// Shared recursion over any field. Inputs are per root `j`:
/// `pu[j]` = coefficients of the local expansion `p(λ_j + ρ_j u)` (constant
/// term zero), `du[j][k]` = coefficients of `δ_k(λ_j + ρ_j u)`, and `phi[j][n]`
/// = `φ^{(n)}(λ_j)·ρ_j^n/n!`. Output `α_{j,n}`, independent of the `ρ_j`.
fn recursion<T: Num + Clone>(
    pu: &[Vec<T>],
    du: &[Vec<Vec<T>>],
    phi: &[Vec<T>],
    order: usize,
) -> Result<Vec<Vec<T>>> {
    let d = pu.len();
    let width = order + 1;
    let mut alpha = vec![vec![T::zero(); width]; d];
    // comp[j][k] = Σ_{l ≤ n} α_{k,l} (p(λ_j+ρ_j u))^l, truncated to degree N
    let mut comp = vec![vec![vec![T::zero(); width]; d]; d];
    // pow[j] = (p(λ_j+ρ_j u))^n
    let mut pow: Vec<Vec<T>> = (0..d)
        .map(|_| {
            let mut v = vec![T::zero(); width];
            v[0] = T::one();
            v
        })
        .collect();
    let mut epow = vec![T::one(); d];
    let e: Vec<T> = pu
        .iter()
        .map(|c| c.get(1).cloned().unwrap_or_else(T::zero))
        .collect();

    for n in 0..=order {
        for j in 0..d {
            let mut rhs = phi[j][n].clone();
            for k in 0..d {
                let dk = &du[j][k];
                let lo = (n + 1).saturating_sub(dk.len()).max(0);
                for m in lo..n {
                    let r = n - m;
                    if r < dk.len() {
                        rhs = rhs - dk[r].clone() * comp[j][k][m].clone();
                    }
                }
            }
            rhs = rhs - comp[j][j][n].clone();
            if epow[j].is_zero() {
                return Err(Error::Conditioning(format!(
                    "p′ vanishes at root {j}: roots are not simple"
                )));
            }
            alpha[j][n] = rhs / epow[j].clone();
        }
        if n == order {
            break;
        }
        for j in 0..d {
            for k in 0..d {
                let a = alpha[k][n].clone();
                if a.is_zero() {
                    continue;
                }
                for m in n..width {
                    comp[j][k][m] = comp[j][k][m].clone() + a.clone() * pow[j][m].clone();
                }
            }
            pow[j] = mul_truncated(&pow[j], &pu[j], width, n + 1);
            epow[j] = epow[j].clone() * e[j].clone();
        }
    }
    Ok(alpha)
}

/// Product of two series truncated to `width` terms; the result is known to
/// vanish below degree `low`.
fn mul_truncated<T: Num + Clone>(a: &[T], b: &[T], width: usize, low: usize) -> Vec<T> {
    let mut out = vec![T::zero(); width];
    for (m, slot) in out.iter_mut().enumerate().skip(low) {
        let mut acc = T::zero();
        for (r, br) in b.iter().enumerate().take(m + 1) {
            if br.is_zero() {
                continue;
            }
            acc = acc + a[m - r].clone() * br.clone();
        }
        *slot = acc;
    }
    out
}

/// Coefficients of `q(center + scale·h)` for `q` given by ascending coefficients.
fn taylor_shift_generic<T: Num + Clone>(q: &[T], center: &T, scale: &T) -> Vec<T> {
    // Horner in the polynomial ring: q(x) = (...(q_n x + q_{n-1}) x + ...) with x = center + scale h
    let mut out: Vec<T> = Vec::new();
    for c in q.iter().rev() {
        let mut next = vec![T::zero(); out.len() + 1];
        for (i, o) in out.iter().enumerate() {
            next[i] = next[i].clone() + o.clone() * center.clone();
            next[i + 1] = next[i + 1].clone() + o.clone() * scale.clone();
        }
        next[0] = next[0].clone() + c.clone();
        out = next;
    }
    out
}

fn from_roots_generic<T: Num + Clone>(roots: &[T]) -> Vec<T> {
    let mut c = vec![T::one()];
    for r in roots {
        let mut next = vec![T::zero(); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + ci.clone();
            next[i] = next[i].clone() - ci.clone() * r.clone();
        }
        c = next;
    }
    c
}

/// Taylor coefficients of the branch functions by the derivative recursion.
pub fn taylor_coeffs(p: &Poly, germ: &PhiGerm, order: usize) -> Result<MulticentricSeries> {
    let d = p
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::InvalidArgument("taylor_coeffs needs deg p ≥ 1".into()))?;
    if germ.roots() != d {
        return Err(Error::dim(
            "taylor_coeffs",
            format!("germ has {} rows, p has {d} roots", germ.roots()),
        ));
    }
    if germ.order() < order {
        return Err(Error::InvalidArgument(format!(
            "germ known to order {} but {order} requested",
            germ.order()
        )));
    }
    taylor_coeffs_with_roots(p, &p.roots()?, germ, order)
}

/// As [`taylor_coeffs`], with the roots of `p` supplied (and their order,
/// which indexes the germ rows and the output, kept).
pub fn taylor_coeffs_with_roots(
    p: &Poly,
    roots: &[C64],
    germ: &PhiGerm,
    order: usize,
) -> Result<MulticentricSeries> {
    let d = roots.len();
    if p.degree() != Some(d) || germ.roots() != d {
        return Err(Error::dim(
            "taylor_coeffs",
            format!(
                "deg p = {:?}, {d} roots, germ rows {}",
                p.degree(),
                germ.roots()
            ),
        ));
    }
    if germ.order() < order {
        return Err(Error::InvalidArgument(format!(
            "germ known to order {} but {order} requested",
            germ.order()
        )));
    }
    let roots = roots.to_vec();
    let sep = Poly::sep_tol(&roots);
    if let Some((i, j, dist)) = Poly::coincident_pair(&roots) {
        return Err(Error::Conditioning(format!(
            "roots {i} and {j} of p are {dist:.3e} apart (threshold {sep:.3e})"
        )));
    }
    let basis = lagrange_basis(&roots)?;
    let dp = p.derivative(1);

    let mut pu = Vec::with_capacity(d);
    let mut du = Vec::with_capacity(d);
    let mut phi = Vec::with_capacity(d);
    for (j, &lj) in roots.iter().enumerate() {
        let slope = dp.eval(lj);
        if !(slope.norm() > 0.0) || !slope.is_finite() {
            return Err(Error::Conditioning(format!("p′(λ_{j}) = {slope}")));
        }
        let rho = C64::new(1.0 / slope.norm(), 0.0);
        let mut local = p.taylor_shift(lj, rho).coeffs().to_vec();
        local.resize(d + 1, C64::zero());
        local[0] = C64::zero();
        pu.push(local);
        du.push(
            basis
                .basis
                .iter()
                .map(|dk| {
                    let mut v = dk.taylor_shift(lj, rho).coeffs().to_vec();
                    v.resize(d, C64::zero());
                    v
                })
                .collect::<Vec<_>>(),
        );
        let mut scaled = Vec::with_capacity(order + 1);
        let mut fac = 1.0;
        for n in 0..=order {
            if n > 0 {
                fac *= rho.re / n as f64;
            }
            scaled.push(germ.derivative(j, n) * fac);
        }
        phi.push(scaled);
    }

    let coefficients = recursion(&pu, &du, &phi, order)?;
    if coefficients.iter().flatten().any(|z| !z.is_finite()) {
        return Err(Error::Range(
            "branch coefficients overflowed; rescale p or lower the order".into(),
        ));
    }
    Ok(MulticentricSeries {
        roots,
        leading: p.leading(),
        coefficients,
        radius: None,
        decay: None,
    })
}

/// Exact arithmetic over `Q(i)`.
pub mod exact {
    use super::*;

    pub type Rational = BigRational;
    pub type Gaussian = Complex<BigRational>;

    pub fn gaussian(re: (i64, i64), im: (i64, i64)) -> Gaussian {
        Complex::new(
            Rational::new(re.0.into(), re.1.into()),
            Rational::new(im.0.into(), im.1.into()),
        )
    }

    pub fn to_c64(z: &Gaussian) -> C64 {
        use num_traits::ToPrimitive;
        C64::new(
            z.re.to_f64().unwrap_or(f64::NAN),
            z.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// `α_{j,n}` for the monic `p = Π(z − λ_j)` and the piecewise-constant
    /// germ, computed without rounding.
    pub fn taylor_coeffs_exact(
        roots: &[Gaussian],
        assignment: &[Side],
        order: usize,
    ) -> Result<Vec<Vec<Gaussian>>> {
        let d = roots.len();
        if d == 0 || assignment.len() != d {
            return Err(Error::dim("taylor_coeffs_exact", "one side per root"));
        }
        let p = from_roots_generic(roots);
        let one = Gaussian::one();
        let mut pu = Vec::with_capacity(d);
        let mut du = Vec::with_capacity(d);
        let mut phi = Vec::with_capacity(d);
        for (j, lj) in roots.iter().enumerate() {
            let mut local = taylor_shift_generic(&p, lj, &one);
            local[0] = Gaussian::zero();
            pu.push(local);
            let mut row = Vec::with_capacity(d);
            for k in 0..d {
                let others: Vec<Gaussian> = roots
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, r)| r.clone())
                    .collect();
                let mut denom = Gaussian::one();
                for r in &others {
                    denom = denom * (roots[k].clone() - r.clone());
                }
                if denom.is_zero() {
                    return Err(Error::Conditioning(format!("root {k} is repeated")));
                }
                let num = from_roots_generic(&others);
                let dk: Vec<Gaussian> = num.into_iter().map(|c| c / denom.clone()).collect();
                let mut shifted = taylor_shift_generic(&dk, lj, &one);
                shifted.resize(d, Gaussian::zero());
                row.push(shifted);
            }
            du.push(row);
            let mut germ = vec![Gaussian::zero(); order + 1];
            germ[0] = match assignment[j] {
                Side::Plus => Gaussian::one(),
                Side::Minus => -Gaussian::one(),
            };
            phi.push(germ);
        }
        recursion(&pu, &du, &phi, order)
    }
}

/// Result of evaluating a series at a matrix.
#[derive(Debug, Clone)]
pub struct SeriesEval {
    pub value: CMatrix,
    /// `‖p(T)‖ / radius` when the radius is known.
    pub ratio: Option<f64>,
    pub diverging: bool,
}

/// `Σ_j δ_j(T) Σ_{n≤N} α_{j,n} P^n` with the powers `P^n` supplied one at a
/// time by `powers` (called for `n = 1..=N`). Summation order is fixed:
/// ascending `n`, then ascending `j`.
pub fn accumulate_series(
    series: &MulticentricSeries,
    deltas: &[CMatrix],
    identity: &CMatrix,
    order: usize,
    mut powers: impl FnMut(usize) -> Result<CMatrix>,
) -> Result<CMatrix> {
    let d = series.roots.len();
    if deltas.len() != d {
        return Err(Error::dim("accumulate_series", "one δ_j(T) per root"));
    }
    if order > series.order() {
        return Err(Error::InvalidArgument(format!(
            "series has order {} but {order} requested",
            series.order()
        )));
    }
    let mut branch: Vec<CMatrix> = (0..d)
        .map(|j| identity.scale(series.coefficients[j][0]))
        .collect();
    for n in 1..=order {
        let pn = powers(n)?;
        for (j, acc) in branch.iter_mut().enumerate() {
            let a = series.coefficients[j][n];
            if a != C64::zero() {
                *acc = &*acc + &pn.scale(a);
            }
        }
    }
    let mut out = CMatrix::zeros(identity.rows(), identity.cols());
    for (dj, bj) in deltas.iter().zip(&branch) {
        out = &out + &dj.checked_mul(bj)?;
    }
    Ok(out)
}

/// `φ(T)` from the series. With `force = false`, a ratio ≥ 1 is an error.
pub fn series_eval_matrix(
    series: &MulticentricSeries,
    p: &Poly,
    t: &CMatrix,
    order: usize,
    force: bool,
) -> Result<SeriesEval> {
    if !t.is_square() {
        return Err(Error::dim("series_eval_matrix", "T must be square"));
    }
    let pt = p.eval_matrix(t)?;
    let ratio = series.radius.map(|r| op_norm(&pt) / r);
    let diverging = ratio.is_some_and(|r| r >= 1.0);
    if diverging && !force {
        return Err(Error::Divergence(format!(
            "‖p(T)‖/radius = {:.4} ≥ 1",
            ratio.unwrap_or(f64::NAN)
        )));
    }
    let basis = lagrange_basis(&series.roots)?;
    let deltas = basis
        .basis
        .iter()
        .map(|dj| dj.eval_matrix(t))
        .collect::<Result<Vec<_>>>()?;
    let id = CMatrix::identity(t.rows());
    let mut cur = id.clone();
    let value = accumulate_series(series, &deltas, &id, order, |_| {
        cur = cur.checked_mul(&pt)?;
        Ok(cur.clone())
    })?;
    Ok(SeriesEval {
        value,
        ratio,
        diverging,
    })
}

/// `L_j = (1/2π)∮_Γ |dλ|/|λ − λ_j|`, after checking `|p| > level` on Γ.
pub fn decay_constants(
    p: &Poly,
    level: f64,
    roots: &[C64],
    contour: &CircleSet,
) -> Result<Vec<f64>> {
    if contour.circles().is_empty() {
        return Err(Error::Certificate("empty contour".into()));
    }
    if !contour.is_disjoint() {
        return Err(Error::Certificate("contour circles overlap".into()));
    }
    let mut k = 64usize;
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let nodes = contour.nodes(k);
        if let Some(bad) = nodes.iter().find(|n| p.eval(n.z).norm() <= level) {
            return Err(Error::Certificate(format!(
                "contour meets the level set at {} (|p| = {:.4e} ≤ {level:.4e})",
                bad.z,
                p.eval(bad.z).norm()
            )));
        }
        let vals: Vec<f64> = roots
            .iter()
            .map(|&lj| {
                nodes
                    .iter()
                    .map(|n| n.dz.norm() / (n.z - lj).norm())
                    .sum::<f64>()
                    / (2.0 * std::f64::consts::PI)
            })
            .collect();
        if let Some(old) = &prev {
            let done = vals
                .iter()
                .zip(old)
                .all(|(v, o)| (v - o).abs() <= 1e-8 * v.abs());
            if done {
                return Ok(vals);
            }
        }
        if k >= 1 << 20 {
            return Err(Error::NoConvergence {
                what: "decay constant quadrature",
                iterations: 15,
            });
        }
        prev = Some(vals);
        k *= 2;
    }
}

/// `α_{j,n} = (1/2πi)∮_Γ φ(λ) dλ / ((λ − λ_j) p(λ)^n)` by the trapezoidal
/// rule, with `φ` constant (`values[c]`) on circle `c` of `contour`.
///
/// This follows from `1/(λ − z) = Σ_j δ_j(z) p(λ)/((λ − λ_j)(p(λ) − p(z)))`.
/// Unlike the derivative recursion, whose rounding errors grow
/// geometrically with `n`, the error here stays at the level of
/// `ε·L_j·max_Γ|p|^{−n}`, so high orders are usable.
pub fn contour_coeffs(
    p: &Poly,
    roots: &[C64],
    contour: &CircleSet,
    values: &[C64],
    order: usize,
) -> Result<MulticentricSeries> {
    let d = roots.len();
    if p.degree() != Some(d) || values.len() != contour.circles().len() {
        return Err(Error::dim(
            "contour_coeffs",
            format!(
                "deg p = {:?}, {d} roots, {} values for {} circles",
                p.degree(),
                values.len(),
                contour.circles().len()
            ),
        ));
    }
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    let sweep = |k: usize, phase: f64| -> Vec<Vec<C64>> {
        let mut table = vec![vec![C64::zero(); order + 1]; d];
        for (circle, &v) in contour.circles().iter().zip(values) {
            for node in circle.nodes(k, phase) {
                let w = C64::new(1.0, 0.0) / p.eval(node.z);
                for (j, row) in table.iter_mut().enumerate() {
                    let mut term = v * node.dz / ((node.z - roots[j]) * two_pi_i);
                    for a in row.iter_mut() {
                        *a += term;
                        term *= w;
                    }
                }
            }
        }
        table
    };
    let mut k = 64usize.max((4 * order).next_power_of_two());
    let mut table = sweep(k, 0.0);
    loop {
        let half = sweep(k, 0.5);
        let mut change = 0.0f64;
        let mut size = 0.0f64;
        for (row, other) in table.iter_mut().zip(&half) {
            for (a, b) in row.iter_mut().zip(other) {
                let refined = (*a + b) * 0.5;
                change = change.max((refined - *a).norm());
                size = size.max(refined.norm());
                *a = refined;
            }
        }
        k *= 2;
        if !size.is_finite() {
            return Err(Error::Range("contour coefficients overflowed".into()));
        }
        if change <= 1e-14 * size.max(1.0) {
            break;
        }
        if k >= 1 << 20 {
            return Err(Error::NoConvergence {
                what: "contour coefficient quadrature",
                iterations: k,
            });
        }
    }
    Ok(MulticentricSeries {
        roots: roots.to_vec(),
        leading: p.leading(),
        coefficients: table,
        radius: None,
        decay: None,
    })
}

/// Tail bound `C·r^{N+1}/(1−r)` of the truncated series.
pub fn truncation_tail(ratio: f64, prefactor: f64, order: usize) -> f64 {
    prefactor * ratio.powi(order as i32 + 1) / (1.0 - ratio)
}

/// Smallest `N` with `r^{N+1} < 2(1−r)·tol/C`.
pub fn truncation_order(ratio: f64, prefactor: f64, tol: f64) -> Result<usize> {
    if !(ratio < 1.0) {
        return Err(Error::Divergence(format!(
            "decay ratio {ratio:.4} ≥ 1 admits no finite truncation"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if ratio <= 0.0 || prefactor <= 0.0 {
        return Ok(0);
    }
    let thr = 2.0 * (1.0 - ratio) * tol / prefactor;
    if thr > 1.0 {
        return Ok(0);
    }
    let holds = |n: usize| ratio.powi(n as i32 + 1) < thr;
    let guess = (thr.ln() / ratio.ln() - 1.0).floor().max(0.0);
    if guess > 1e7 {
        return Err(Error::Range(format!(
            "truncation order {guess:.3e} too large"
        )));
    }
    let mut n = guess as usize;
    while n > 0 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n)
}

/// Polynomial `P(z) = Σ_i δ_i(z) P_i(p(z))` approximating `z ± c` on the
/// two groups of roots (so `Re P` separates them for suitable `c`).
///
/// The result is in the monomial basis, whose coefficients grow roughly like
/// `2^{N}`; for large `N` evaluate the series structurally instead.
pub fn build_halfplane_poly(p: &Poly, assignment: &[Side], c: f64, order: usize) -> Result<Poly> {
    let roots = p.roots()?;
    let germ = phi_germ_shift(&roots, assignment, c, order)?;
    let series = taylor_coeffs(p, &germ, order)?;
    assemble_poly(&series, p)
}

/// The polynomial `Σ_j δ_j(z) Σ_n α_{j,n} p(z)^n` of a truncated series.
pub fn assemble_poly(series: &MulticentricSeries, p: &Poly) -> Result<Poly> {
    let basis = lagrange_basis(&series.roots)?;
    let mut out = Poly::zero();
    for (dj, row) in basis.basis.iter().zip(&series.coefficients) {
        let mut branch = Poly::zero();
        for &a in row.iter().rev() {
            branch = branch.mul(p).add(&Poly::constant(a));
        }
        out = out.add(&dj.mul(&branch));
    }
    Ok(out)
}

/// Ratios `r = ‖p(A)‖/(‖p(A⊕B)‖+t)`, `s = ‖p(B)‖/(‖p(A⊕B)‖+t)` and the order
/// that makes the half-plane error bound `‖φ‖·Σ L_j‖δ_j‖·ρ^{N+1}/(1−ρ)` below
/// `target` for both groups.
pub fn halfplane_order(
    p: &Poly,
    a: &CMatrix,
    b: &CMatrix,
    t: f64,
    prefactor: f64,
    target: f64,
) -> Result<usize> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("margin t must be positive".into()));
    }
    let level = op_norm(&p.eval_matrix(&CMatrix::direct_sum(a, b))?) + t;
    let r = op_norm(&p.eval_matrix(a)?) / level;
    let s = op_norm(&p.eval_matrix(b)?) / level;
    let worst = r.max(s);
    truncation_order(worst, prefactor, target / 2.0)
}
