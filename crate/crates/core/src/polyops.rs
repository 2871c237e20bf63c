//! Scalar complex polynomials.

use serde::{Deserialize, Serialize};

use crate::bivarcalc::BivarPoly;
use crate::error::{Error, Result};
use crate::matcore::{eigenvalues, CMatrix, C64};
use crate::pairs;

/// Residual tolerance for roots: `|p(root)| ≤ TOL_ROOT·(1 + max|coeff|)`.
pub const TOL_ROOT: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A polynomial stored by ascending coefficients, optionally carrying the
/// roots it was built from.
///
/// The zero polynomial has an empty coefficient list and no degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
    roots: Option<Vec<C64>>,
}

impl Poly {
    /// Trailing exact zeros are dropped so the leading coefficient is nonzero.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Poly {
            coeffs,
            roots: None,
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![ZERO; k + 1];
        c[k] = ONE;
        Self::new(c)
    }

    /// Monic polynomial `Π (z − r_i)`; the roots are remembered.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
        Poly {
            coeffs,
            roots: Some(roots.to_vec()),
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn stored_roots(&self) -> Option<&[C64]> {
        self.roots.as_deref()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == ONE
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `p(T)` by Horner's rule.
    pub fn eval_matrix(&self, t: &CMatrix) -> Result<CMatrix> {
        if !t.is_square() {
            return Err(Error::dim("Poly::eval_matrix", "matrix must be square"));
        }
        let n = t.rows();
        let mut acc = CMatrix::zeros(n, n);
        for &c in self.coeffs.iter().rev() {
            acc = (&acc * t).shift(-c)?;
        }
        Ok(acc)
    }

    /// k-th derivative.
    pub fn derivative(&self, k: usize) -> Poly {
        if k >= self.coeffs.len() {
            return Poly::zero();
        }
        let coeffs = (k..self.coeffs.len())
            .map(|i| {
                let falling: f64 = ((i - k + 1)..=i).map(|m| m as f64).product();
                self.coeffs[i] * falling
            })
            .collect();
        Poly::new(coeffs)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut p = Poly::new(self.coeffs.iter().map(|&c| c * s).collect());
        if s != ZERO {
            p.roots = self.roots.clone();
        }
        p
    }

    /// Coefficients of `h ↦ p(center + scale·h)`.
    pub fn taylor_shift(&self, center: C64, scale: C64) -> Poly {
        // Horner in the variable h: p(center + scale h) = (...(a_d (c + s h) + a_{d-1})(c + s h) ...)
        let lin = Poly::new(vec![center, scale]);
        let mut acc = Poly::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::constant(c));
        }
        acc
    }

    /// Roots: the stored ones if present, otherwise companion-matrix
    /// eigenvalues polished by a few Newton steps.
    pub fn roots(&self) -> Result<Vec<C64>> {
        if let Some(r) = &self.roots {
            return Ok(r.clone());
        }
        let d = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => {
                return Err(Error::InvalidArgument(
                    "roots() needs a polynomial of degree at least 1".into(),
                ))
            }
        };
        let lead = self.leading();
        let comp = CMatrix::from_fn(d, d, |i, j| {
            if i == 0 {
                -self.coeffs[d - 1 - j] / lead
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let mut roots = eigenvalues(&comp)?.eigenvalues;
        let dp = self.derivative(1);
        for r in roots.iter_mut() {
            for _ in 0..4 {
                let v = self.eval(*r);
                let dv = dp.eval(*r);
                if dv == ZERO {
                    break;
                }
                let cand = *r - v / dv;
                if self.eval(cand).norm() < v.norm() {
                    *r = cand;
                } else {
                    break;
                }
            }
        }
        let tol = TOL_ROOT * (1.0 + self.max_abs_coeff());
        if roots.iter().any(|&r| self.eval(r).norm() > tol) {
            return Err(Error::NoConvergence {
                what: "polynomial root refinement",
                iterations: 4,
            });
        }
        Ok(roots)
    }

    /// Separation threshold for "simple roots": `1e-6·(1 + max|root|)`.
    pub fn sep_tol(roots: &[C64]) -> f64 {
        1e-6 * (1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
    }

    /// Returns the closest pair `(i, j, distance)` if any two roots are closer
    /// than [`Poly::sep_tol`].
    pub fn coincident_pair(roots: &[C64]) -> Option<(usize, usize, f64)> {
        let tol = Self::sep_tol(roots);
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                let d = (roots[i] - roots[j]).norm();
                if d <= tol && worst.is_none_or(|w| d < w.2) {
                    worst = Some((i, j, d));
                }
            }
        }
        worst
    }

    pub fn has_simple_roots(&self) -> Result<bool> {
        Ok(Self::coincident_pair(&self.roots()?).is_none())
    }
}

/// Serialized polynomial: either ascending coefficients or roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PolySpec {
    Coeffs {
        #[serde(with = "pairs::vec")]
        coeffs: Vec<C64>,
    },
    Roots {
        #[serde(with = "pairs::vec")]
        roots: Vec<C64>,
        monic: bool,
    },
}

impl PolySpec {
    pub fn to_poly(&self) -> Result<Poly> {
        match self {
            PolySpec::Coeffs { coeffs } => {
                if coeffs
                    .iter()
                    .any(|z| !z.re.is_finite() || !z.im.is_finite())
                {
                    return Err(Error::NonFinite {
                        what: "polynomial coefficients",
                    });
                }
                Ok(Poly::new(coeffs.clone()))
            }
            PolySpec::Roots { roots, monic } => {
                if !monic {
                    return Err(Error::InvalidArgument(
                        "root-form polynomials must be monic".into(),
                    ));
                }
                Ok(Poly::from_roots(roots))
            }
        }
    }
}

impl From<&Poly> for PolySpec {
    fn from(p: &Poly) -> Self {
        match (&p.roots, p.is_monic()) {
            (Some(r), true) => PolySpec::Roots {
                roots: r.clone(),
                monic: true,
            },
            _ => PolySpec::Coeffs {
                coeffs: p.coeffs.clone(),
            },
        }
    }
}

/// Lagrange basis `δ_j(z) = Π_{k≠j} (z − λ_k)/(λ_j − λ_k)` on distinct nodes.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub roots: Vec<C64>,
    pub basis: Vec<Poly>,
}

pub fn lagrange_basis(roots: &[C64]) -> Result<LagrangeBasis> {
    if let Some((i, j, d)) = Poly::coincident_pair(roots) {
        return Err(Error::Conditioning(format!(
            "nodes {i} ({}) and {j} ({}) are {d:.3e} apart",
            roots[i], roots[j]
        )));
    }
    let basis = (0..roots.len())
        .map(|j| {
            let others: Vec<C64> = roots
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &r)| r)
                .collect();
            let denom: C64 = others.iter().map(|&r| roots[j] - r).product();
            let mut p = Poly::from_roots(&others).scale(ONE / denom);
            p.roots = None;
            p
        })
        .collect();
    Ok(LagrangeBasis {
        roots: roots.to_vec(),
        basis,
    })
}

/// Divided difference `q(λ,μ) = (p(λ) − p(μ))/(λ − μ)`, kept in structural form.
pub fn divided_difference(p: &Poly) -> BivarPoly {
    BivarPoly::DividedDifference(p.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_derivative_from_roots() {
        let p = Poly::from_real(&[-1.0, 0.0, 1.0]);
        assert_eq!(p.eval(c(2.0, 0.0)), c(3.0, 0.0));
        let q = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]).derivative(1);
        assert_eq!(q, Poly::from_real(&[0.0, 0.0, 0.0, 4.0]));
        let r = Poly::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(r.coeffs(), p.coeffs());
        assert!(r.is_monic());
    }

    #[test]
    fn higher_derivative_and_zero() {
        let p = Poly::from_real(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(p.derivative(2), Poly::from_real(&[2.0, 6.0]));
        assert!(p.derivative(4).is_zero());
        assert_eq!(Poly::zero().degree(), None);
    }

    #[test]
    fn companion_roots() {
        let p = Poly::from_real(&[2.0, -3.0, 1.0]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_abs_diff_eq!(r[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].re, 2.0, epsilon = 1e-12);
        assert!(Poly::constant(c(1.0, 0.0)).roots().is_err());
    }

    #[test]
    fn taylor_shift_matches_eval() {
        let p = Poly::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let center = c(0.3, -1.2);
        let s = c(0.5, 0.25);
        let q = p.taylor_shift(center, s);
        for h in [c(0.0, 0.0), c(1.0, 0.0), c(-0.4, 0.7)] {
            assert_abs_diff_eq!(
                (q.eval(h) - p.eval(center + s * h)).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn matrix_eval_on_diagonal() {
        let p = Poly::from_real(&[-1.0, 0.0, 1.0]);
        let t = CMatrix::diag_real(&[2.0, 3.0]);
        assert_eq!(p.eval_matrix(&t).unwrap(), CMatrix::diag_real(&[3.0, 8.0]));
    }

    #[test]
    fn lagrange_pm_one() {
        let b = lagrange_basis(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(b.basis[0], Poly::from_real(&[0.5, 0.5]));
        assert_eq!(b.basis[1], Poly::from_real(&[0.5, -0.5]));
    }

    #[test]
    fn lagrange_single_node_is_one() {
        let b = lagrange_basis(&[c(0.7, 2.0)]).unwrap();
        assert_eq!(b.basis[0], Poly::constant(c(1.0, 0.0)));
    }

    #[test]
    fn lagrange_kronecker_property() {
        let nodes = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let b = lagrange_basis(&nodes).unwrap();
        for (j, dj) in b.basis.iter().enumerate() {
            for (k, &l) in nodes.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((dj.eval(l) - want).norm(), 0.0, epsilon = TOL_ROOT);
            }
        }
    }

    #[test]
    fn lagrange_near_coincident_names_pair() {
        let err = lagrange_basis(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0 + 1e-9, 0.0)]).unwrap_err();
        match err {
            Error::Conditioning(msg) => assert!(msg.contains("nodes 1") && msg.contains("and 2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn polyspec_roundtrip() {
        let p = Poly::from_roots(&[c(1.0, 0.5), c(-2.0, 0.0)]);
        let spec = PolySpec::from(&p);
        assert!(matches!(spec, PolySpec::Roots { .. }));
        assert_eq!(spec.to_poly().unwrap(), p);
        let json = serde_json::to_string(&PolySpec::from(&Poly::from_real(&[1.0, 2.0]))).unwrap();
        assert_eq!(json, r#"{"coeffs":[[1.0,0.0],[2.0,0.0]]}"#);
        let back: PolySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_poly().unwrap(), Poly::from_real(&[1.0, 2.0]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cplx() -> impl Strategy<Value = C64> {
            (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| C64::new(r, i))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn partition_of_unity(nodes in proptest::collection::vec(cplx(), 1..7),
                                  samples in proptest::collection::vec(cplx(), 100)) {
                prop_assume!(Poly::coincident_pair(&nodes).is_none());
                let min_gap = (0..nodes.len())
                    .flat_map(|i| ((i + 1)..nodes.len()).map(move |j| (i, j)))
                    .map(|(i, j)| (nodes[i] - nodes[j]).norm())
                    .fold(f64::INFINITY, f64::min);
                prop_assume!(min_gap > 0.1);
                let b = lagrange_basis(&nodes).unwrap();
                for z in samples {
                    let s: C64 = b.basis.iter().map(|d| d.eval(z)).sum();
                    prop_assert!((s - 1.0).norm() <= 1e-10);
                }
            }

            #[test]
            fn roots_roundtrip(roots in proptest::collection::vec(cplx(), 1..11)) {
                let min_gap = (0..roots.len())
                    .flat_map(|i| ((i + 1)..roots.len()).map(move |j| (i, j)))
                    .map(|(i, j)| (roots[i] - roots[j]).norm())
                    .fold(f64::INFINITY, f64::min);
                prop_assume!(min_gap > 0.3);
                let p = Poly::new(Poly::from_roots(&roots).coeffs().to_vec());
                let found = p.roots().unwrap();
                prop_assert_eq!(found.len(), roots.len());
                let haus = |xs: &[C64], ys: &[C64]| xs.iter()
                    .map(|x| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                prop_assert!(haus(&roots, &found).max(haus(&found, &roots)) <= 1e-8);
            }
        }
    }
}
