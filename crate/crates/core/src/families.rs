//! Seeded generators for test instances. Each instance carries stamps that
//! record the spectral properties it was built to have, checked on the
//! computed matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matcore::{eigenvalues, op_norm, smallest_singular_value, CMatrix, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SymmetricSkew,
    SelfadjointPair,
    ShiftedRandom,
    JordanNonnormal,
    NormalDisc,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::SymmetricSkew,
        Family::SelfadjointPair,
        Family::ShiftedRandom,
        Family::JordanNonnormal,
        Family::NormalDisc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SymmetricSkew => "symmetric-skew",
            Family::SelfadjointPair => "selfadjoint-pair",
            Family::ShiftedRandom => "shifted-random",
            Family::JordanNonnormal => "jordan-nonnormal",
            Family::NormalDisc => "normal-disc",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

/// A checked property of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub property: String,
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub family: Family,
    pub seed: u64,
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub stamps: Vec<Stamp>,
}

impl Instance {
    pub fn all_hold(&self) -> bool {
        self.stamps.iter().all(|s| s.holds)
    }

    fn stamp(&mut self, property: &str, value: f64, holds: bool) {
        self.stamps.push(Stamp {
            property: property.to_string(),
            value,
            holds,
        });
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_real(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

fn uniform_complex(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(m, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    uniform_real(rng, n, n).qr().q()
}

fn complexify(m: &DMatrix<f64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

fn defect(x: &CMatrix, y: &CMatrix) -> f64 {
    (x - y).frobenius_norm()
}

/// Values in `[lo, hi]` with alternating signs.
fn signed_magnitudes(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let v = rng.gen_range(lo..=hi);
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Real symmetric `A` with eigenvalues `±[0.5, 1.5]` and real skew `B` with
/// eigenvalues `±iω`, `ω ∈ [0.5, 1.5]`. `n` is rounded up to even.
pub fn symmetric_skew(n: usize, seed: u64) -> Instance {
    let n = (n.max(2) + 1) / 2 * 2;
    let mut r = rng(seed);
    let qa = orthogonal(&mut r, n);
    let da = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(signed_magnitudes(
        &mut r, n, 0.5, 1.5,
    )));
    let a = &qa * da * qa.transpose();
    let mut s = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        let w = r.gen_range(0.5..=1.5);
        s[(2 * k, 2 * k + 1)] = w;
        s[(2 * k + 1, 2 * k)] = -w;
    }
    let qb = orthogonal(&mut r, n);
    let b = &qb * s * qb.transpose();
    // symmetrize away rounding so the stamps hold exactly
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b - b.transpose()) * 0.5;
    let c = uniform_real(&mut r, n, n);
    let (a, b, c) = (complexify(&a), complexify(&b), complexify(&c));
    let mut inst = Instance {
        family: Family::SymmetricSkew,
        seed,
        stamps: vec![],
        a,
        b,
        c,
    };
    let (sym, skew) = (
        defect(&inst.a, &inst.a.transpose()),
        defect(&inst.b, &-&inst.b.transpose()),
    );
    let (sa, sb) = (
        smallest_singular_value(&inst.a),
        smallest_singular_value(&inst.b),
    );
    inst.stamp("A_symmetric_defect", sym, sym == 0.0);
    inst.stamp("B_skew_defect", skew, skew == 0.0);
    inst.stamp("A_smallest_singular_value", sa, sa > 0.25);
    inst.stamp("B_smallest_singular_value", sb, sb > 0.25);
    inst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfadjointOptions {
    /// All eigenvalues of `A` positive instead of alternating in sign.
    pub positive: bool,
    /// Eigenvalue magnitudes of `A` and `H` lie in `[√alpha, 1]`.
    pub alpha: f64,
    pub c_scale: f64,
}

impl Default for SelfadjointOptions {
    fn default() -> Self {
        SelfadjointOptions {
            positive: false,
            alpha: 0.5,
            c_scale: 0.02,
        }
    }
}

pub fn selfadjoint_pair(n: usize, seed: u64) -> Instance {
    selfadjoint_pair_with(n, seed, SelfadjointOptions::default())
}

/// Self-adjoint `A` and `B = −iH` with `H` self-adjoint, both of norm ≤ 1,
/// and a small `C`.
pub fn selfadjoint_pair_with(n: usize, seed: u64, opts: SelfadjointOptions) -> Instance {
    let n = n.max(1);
    let lo = opts.alpha.clamp(0.0, 1.0).sqrt();
    let mut r = rng(seed);
    let mut ev = signed_magnitudes(&mut r, n, lo, 1.0);
    if opts.positive {
        ev.iter_mut().for_each(|v| *v = v.abs());
    }
    let qa = complexify(&orthogonal(&mut r, n));
    let a = &(&qa * &CMatrix::diag_real(&ev)) * &qa.adjoint();
    let a = (&a + &a.adjoint()).scale_real(0.5);
    let eh = signed_magnitudes(&mut r, n, lo, 1.0);
    let qh = complexify(&orthogonal(&mut r, n));
    let h = &(&qh * &CMatrix::diag_real(&eh)) * &qh.adjoint();
    let h = (&h + &h.adjoint()).scale_real(0.5);
    let b = h.scale(C64::new(0.0, -1.0));
    let c = uniform_complex(&mut r, n, n).scale_real(opts.c_scale);
    let mut inst = Instance {
        family: Family::SelfadjointPair,
        seed,
        stamps: vec![],
        a,
        b,
        c,
    };
    let ib = inst.b.scale(C64::new(0.0, 1.0));
    let (da, db) = (
        defect(&inst.a, &inst.a.adjoint()),
        defect(&ib, &ib.adjoint()),
    );
    let (na, nb) = (op_norm(&inst.a), op_norm(&inst.b));
    inst.stamp("A_selfadjoint_defect", da, da == 0.0);
    inst.stamp("iB_selfadjoint_defect", db, db == 0.0);
    inst.stamp("A_norm", na, na <= 1.0 + 1e-12);
    inst.stamp("B_norm", nb, nb <= 1.0 + 1e-12);
    inst
}

/// Random complex `A` (m×m) and `B` (n×n) shifted so that
/// `min Re σ(A) = 1` and `max Re σ(B) = −1`.
pub fn shifted_random(m: usize, n: usize, seed: u64) -> Instance {
    let (m, n) = (m.max(1), n.max(1));
    let mut r = rng(seed);
    let ga = uniform_complex(&mut r, m, m);
    let gb = uniform_complex(&mut r, n, n);
    let c = uniform_complex(&mut r, m, n);
    let sa = eigenvalues(&ga).map(|s| s.min_real()).unwrap_or(0.0);
    let sb = eigenvalues(&gb).map(|s| s.max_real()).unwrap_or(0.0);
    let a = ga.shift(C64::new(sa - 1.0, 0.0)).expect("square");
    let b = gb.shift(C64::new(sb + 1.0, 0.0)).expect("square");
    let mut inst = Instance {
        family: Family::ShiftedRandom,
        seed,
        stamps: vec![],
        a,
        b,
        c,
    };
    let amin = eigenvalues(&inst.a)
        .map(|s| s.min_real())
        .unwrap_or(f64::NAN);
    let bmax = eigenvalues(&inst.b)
        .map(|s| s.max_real())
        .unwrap_or(f64::NAN);
    inst.stamp("A_min_real_eigenvalue", amin, amin > 0.0);
    inst.stamp("B_max_real_eigenvalue", bmax, bmax < 0.0);
    inst
}

/// Jordan-type `A = 1.5I + J + E` and `B = −1.5I + 0.5Jᵀ + E'` with small
/// random perturbations, so both are far from normal.
pub fn jordan_nonnormal(n: usize, seed: u64) -> Instance {
    let n = n.max(1);
    let mut r = rng(seed);
    let shift_up = CMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let ea = uniform_complex(&mut r, n, n).scale_real(0.05);
    let eb = uniform_complex(&mut r, n, n).scale_real(0.05);
    let a = &(&CMatrix::identity(n).scale_real(1.5) + &shift_up) + &ea;
    let b = &(&CMatrix::identity(n).scale_real(-1.5) + &shift_up.transpose().scale_real(0.5)) + &eb;
    let c = uniform_complex(&mut r, n, n);
    let mut inst = Instance {
        family: Family::JordanNonnormal,
        seed,
        stamps: vec![],
        a,
        b,
        c,
    };
    let amin = eigenvalues(&inst.a)
        .map(|s| s.min_real())
        .unwrap_or(f64::NAN);
    let bmax = eigenvalues(&inst.b)
        .map(|s| s.max_real())
        .unwrap_or(f64::NAN);
    let dep = defect(
        &(&inst.a * &inst.a.adjoint()),
        &(&inst.a.adjoint() * &inst.a),
    );
    inst.stamp("A_min_real_eigenvalue", amin, amin > 0.0);
    inst.stamp("B_max_real_eigenvalue", bmax, bmax < 0.0);
    inst.stamp("A_normality_defect", dep, dep > 0.1);
    inst
}

/// Normal `A` with eigenvalues `0.5·e^{2πik/n}` (rotated by a random angle)
/// and `B = 2I`.
pub fn normal_disc(n: usize, seed: u64) -> Instance {
    let n = n.max(1);
    let mut r = rng(seed);
    let offset = r.gen_range(0.0..1.0);
    let ev: Vec<C64> = (0..n)
        .map(|k| {
            C64::from_polar(
                0.5,
                2.0 * std::f64::consts::PI * (k as f64 + offset) / n as f64,
            )
        })
        .collect();
    let q = complexify(&orthogonal(&mut r, n));
    let a = &(&q * &CMatrix::diag(&ev)) * &q.adjoint();
    let b = CMatrix::identity(n).scale_real(2.0);
    let c = uniform_complex(&mut r, n, n);
    let mut inst = Instance {
        family: Family::NormalDisc,
        seed,
        stamps: vec![],
        a,
        b,
        c,
    };
    let dep = defect(
        &(&inst.a * &inst.a.adjoint()),
        &(&inst.a.adjoint() * &inst.a),
    );
    let radius = eigenvalues(&inst.a)
        .map(|s| s.spectral_radius())
        .unwrap_or(f64::NAN);
    inst.stamp("A_normality_defect", dep, dep <= 1e-12);
    inst.stamp("A_spectral_radius", radius, (radius - 0.5).abs() <= 1e-10);
    inst
}

/// Dispatch by family; `size` is the common dimension of `A` and `B`.
pub fn generate(family: Family, size: usize, seed: u64) -> Instance {
    match family {
        Family::SymmetricSkew => symmetric_skew(size, seed),
        Family::SelfadjointPair => selfadjoint_pair(size, seed),
        Family::ShiftedRandom => shifted_random(size, size, seed),
        Family::JordanNonnormal => jordan_nonnormal(size, seed),
        Family::NormalDisc => normal_disc(size, seed),
    }
}
