//! Bivariate polynomial calculus `f(A,B): C ↦ Σ α_ij A^i C B^j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{op_norm, CMatrix, C64};
use crate::polyops::Poly;

/// One monomial `coeff·λ^i μ^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub i: usize,
    pub j: usize,
    pub coeff: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BivarPoly {
    /// Explicit term list.
    Terms(Vec<Term>),
    /// `(p(λ) − p(μ))/(λ − μ)` for the stored `p`, never expanded.
    DividedDifference(Poly),
}

impl BivarPoly {
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        BivarPoly::Terms(
            terms
                .into_iter()
                .map(|(i, j, coeff)| Term { i, j, coeff })
                .collect(),
        )
    }

    pub fn one() -> Self {
        Self::from_terms([(0, 0, C64::new(1.0, 0.0))])
    }

    /// `S(λ,μ) = λ − μ`, whose calculus is the Sylvester operator.
    pub fn sylvester() -> Self {
        Self::from_terms([(1, 0, C64::new(1.0, 0.0)), (0, 1, C64::new(-1.0, 0.0))])
    }

    /// `p(λ) − p(μ)`.
    pub fn difference(p: &Poly) -> Self {
        let mut terms = Vec::new();
        for (k, &a) in p.coeffs().iter().enumerate().skip(1) {
            terms.push((k, 0, a));
            terms.push((0, k, -a));
        }
        Self::from_terms(terms)
    }

    pub fn eval(&self, lambda: C64, mu: C64) -> C64 {
        match self {
            BivarPoly::Terms(t) => t
                .iter()
                .map(|t| t.coeff * lambda.powu(t.i as u32) * mu.powu(t.j as u32))
                .sum(),
            BivarPoly::DividedDifference(p) => {
                // q_k(λ,μ) = λ q_{k-1} + μ^k, q_0 = 1
                let mut q = C64::new(1.0, 0.0);
                let mut mu_pow = C64::new(1.0, 0.0);
                let mut acc = C64::new(0.0, 0.0);
                for (k, &a) in p.coeffs().iter().enumerate().skip(1) {
                    if k > 1 {
                        mu_pow *= mu;
                        q = lambda * q + mu_pow;
                    }
                    acc += a * q;
                }
                acc
            }
        }
    }

    /// Expanded, like-term-combined monomial list.
    pub fn to_terms(&self) -> Vec<Term> {
        let raw: Vec<Term> = match self {
            BivarPoly::Terms(t) => t.clone(),
            BivarPoly::DividedDifference(p) => p
                .coeffs()
                .iter()
                .enumerate()
                .skip(1)
                .flat_map(|(k, &a)| {
                    (0..k).map(move |i| Term {
                        i,
                        j: k - 1 - i,
                        coeff: a,
                    })
                })
                .collect(),
        };
        combine(raw)
    }

    pub fn mul(&self, other: &BivarPoly) -> BivarPoly {
        let a = self.to_terms();
        let b = other.to_terms();
        let prod = a
            .iter()
            .flat_map(|s| {
                b.iter().map(move |t| Term {
                    i: s.i + t.i,
                    j: s.j + t.j,
                    coeff: s.coeff * t.coeff,
                })
            })
            .collect();
        BivarPoly::Terms(combine(prod))
    }
}

fn combine(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by_key(|t| (t.i, t.j));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.i == t.i && last.j == t.j => last.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != C64::new(0.0, 0.0));
    out
}

fn check_shapes(op: &'static str, a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<()> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::dim(op, "A and B must be square"));
    }
    if c.rows() != a.rows() || c.cols() != b.rows() {
        return Err(Error::dim(
            op,
            format!(
                "C is {}x{}, expected {}x{}",
                c.rows(),
                c.cols(),
                a.rows(),
                b.rows()
            ),
        ));
    }
    Ok(())
}

/// Powers `T^0..=T^k` by ascending multiplication.
fn powers(t: &CMatrix, k: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(CMatrix::identity(t.rows()));
    for i in 1..=k {
        out.push(&out[i - 1] * t);
    }
    out
}

/// `f(A,B)(C)`.
///
/// The divided-difference form is evaluated with the power-sum recursion
/// `q_k(A,B)(C) = A·q_{k−1}(A,B)(C) + C·B^k`, `q_0(A,B)(C) = C`.
pub fn apply(f: &BivarPoly, a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    check_shapes("bivarcalc::apply", a, b, c)?;
    match f {
        BivarPoly::Terms(terms) => {
            let max_i = terms.iter().map(|t| t.i).max().unwrap_or(0);
            let max_j = terms.iter().map(|t| t.j).max().unwrap_or(0);
            let b_pows = powers(b, max_j);
            // Σ_i A^i (C Σ_j α_ij B^j), accumulated Horner-style in A.
            let mut acc = CMatrix::zeros(c.rows(), c.cols());
            for i in (0..=max_i).rev() {
                let mut right = CMatrix::zeros(b.rows(), b.cols());
                let mut any = false;
                for t in terms.iter().filter(|t| t.i == i) {
                    right = &right + &b_pows[t.j].scale(t.coeff);
                    any = true;
                }
                acc = a * &acc;
                if any {
                    acc = &acc + &(c * &right);
                }
            }
            Ok(acc)
        }
        BivarPoly::DividedDifference(p) => {
            let mut q = c.clone();
            let mut b_pow = CMatrix::identity(b.rows());
            let mut acc = CMatrix::zeros(c.rows(), c.cols());
            for (k, &alpha) in p.coeffs().iter().enumerate().skip(1) {
                if k > 1 {
                    b_pow = &b_pow * b;
                    q = &(a * &q) + &(c * &b_pow);
                }
                acc = &acc + &q.scale(alpha);
            }
            Ok(acc)
        }
    }
}

/// `‖g(A,B)(f(A,B)(C)) − (gf)(A,B)(C)‖_F`.
pub fn composition_check(
    g: &BivarPoly,
    f: &BivarPoly,
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
) -> Result<f64> {
    let inner = apply(f, a, b, c)?;
    let lhs = apply(g, a, b, &inner)?;
    let rhs = apply(&g.mul(f), a, b, c)?;
    Ok((&lhs - &rhs).frobenius_norm())
}

/// Upper block-triangular matrix `[[tl, tr], [0, br]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTriangular {
    pub tl: CMatrix,
    pub tr: CMatrix,
    pub br: CMatrix,
}

impl BlockTriangular {
    pub fn assemble(&self) -> CMatrix {
        CMatrix::upper_block(&self.tl, &self.tr, &self.br).expect("conformable blocks")
    }

    pub fn identity(m: usize, n: usize) -> Self {
        BlockTriangular {
            tl: CMatrix::identity(m),
            tr: CMatrix::zeros(m, n),
            br: CMatrix::identity(n),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        BlockTriangular {
            tl: self.tl.scale_real(s),
            tr: self.tr.scale_real(s),
            br: self.br.scale_real(s),
        }
    }
}

/// Successive powers of `[[R, T], [0, S]]` using
/// `P^k = [[R^k, q_{k−1}(R,S)(T)], [0, S^k]]`.
#[derive(Debug, Clone)]
pub struct BlockPowerLadder {
    base: BlockTriangular,
    current: BlockTriangular,
    k: usize,
}

impl BlockPowerLadder {
    pub fn new(base: BlockTriangular) -> Self {
        let (m, n) = (base.tl.rows(), base.br.rows());
        BlockPowerLadder {
            current: BlockTriangular::identity(m, n),
            base,
            k: 0,
        }
    }

    pub fn power(&self) -> usize {
        self.k
    }

    pub fn current(&self) -> &BlockTriangular {
        &self.current
    }

    /// Advances to the next power and returns it.
    pub fn step(&mut self) -> &BlockTriangular {
        let r = &self.base.tl;
        let t = &self.base.tr;
        let s = &self.base.br;
        // q_k(R,S)(T) = R q_{k-1}(R,S)(T) + T S^k
        let tr = &(r * &self.current.tr) + &(t * &self.current.br);
        self.current = BlockTriangular {
            tl: r * &self.current.tl,
            tr,
            br: s * &self.current.br,
        };
        self.k += 1;
        &self.current
    }
}

/// `p(M)` for `M = [[A, C], [0, B]]`: `[[p(A), q(A,B)(C)], [0, p(B)]]`.
pub fn block_poly(p: &Poly, a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<BlockTriangular> {
    check_shapes("block_poly", a, b, c)?;
    Ok(BlockTriangular {
        tl: p.eval_matrix(a)?,
        tr: apply(&BivarPoly::DividedDifference(p.clone()), a, b, c)?,
        br: p.eval_matrix(b)?,
    })
}

/// `p(M)^k` in block form.
pub fn block_poly_power(
    p: &Poly,
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    k: usize,
) -> Result<BlockTriangular> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "block_poly_power needs k ≥ 1".into(),
        ));
    }
    let mut ladder = BlockPowerLadder::new(block_poly(p, a, b, c)?);
    for _ in 0..k {
        ladder.step();
    }
    Ok(ladder.current)
}

/// Bounds on the norm of the map `C ↦ f(A,B)(C)` (Frobenius norm on `C`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// `Σ |α_ij| ‖A‖^i ‖B‖^j`.
    pub upper: f64,
    /// Largest `‖f(A,B)(C)‖_F` over a few random unit-norm probes.
    pub lower: f64,
}

pub fn op_norm_estimate(f: &BivarPoly, a: &CMatrix, b: &CMatrix) -> Result<NormEstimate> {
    let na = op_norm(a);
    let nb = op_norm(b);
    let upper = f
        .to_terms()
        .iter()
        .map(|t| t.coeff.norm() * na.powi(t.i as i32) * nb.powi(t.j as i32))
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut lower: f64 = 0.0;
    for _ in 0..4 {
        let probe = CMatrix::from_fn(a.rows(), b.rows(), |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let nrm = probe.frobenius_norm();
        if nrm == 0.0 {
            continue;
        }
        let unit = probe.scale_real(1.0 / nrm);
        lower = lower.max(apply(f, a, b, &unit)?.frobenius_norm());
    }
    Ok(NormEstimate { upper, lower })
}
