//! Spectral inclusion sets on grids, separation certificates, `η(A,B)`
//! estimates and a heuristic search for separating polynomials.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matcore::{eigenvalues, op_norm, smallest_singular_value, CMatrix, C64};
use crate::pairs;
use crate::polyops::{Poly, PolySpec};
use crate::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 256;
pub const MIN_RESOLUTION: usize = 16;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBox {
    #[serde(with = "pairs")]
    pub lo: C64,
    #[serde(with = "pairs")]
    pub hi: C64,
}

impl GridBox {
    pub fn new(lo: C64, hi: C64) -> Result<Self> {
        if !(hi.re > lo.re && hi.im > lo.im) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "degenerate box {lo} .. {hi}"
            )));
        }
        Ok(GridBox { lo, hi })
    }

    /// Square centred on the bounding box of `points`, inflated by `pad` on
    /// every side.
    pub fn square_around(points: &[C64], pad: f64) -> Self {
        let (mut lo, mut hi) = (
            C64::new(f64::INFINITY, f64::INFINITY),
            C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for z in points {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        if points.is_empty() {
            lo = C64::new(0.0, 0.0);
            hi = lo;
        }
        let mid = (lo + hi) * 0.5;
        let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) + pad.max(1e-3);
        GridBox {
            lo: mid - C64::new(half, half),
            hi: mid + C64::new(half, half),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.lo.re && z.re <= self.hi.re && z.im >= self.lo.im && z.im <= self.hi.im
    }

    pub fn union(&self, other: &GridBox) -> GridBox {
        GridBox {
            lo: C64::new(self.lo.re.min(other.lo.re), self.lo.im.min(other.lo.im)),
            hi: C64::new(self.hi.re.max(other.hi.re), self.hi.im.max(other.hi.im)),
        }
    }
}

/// Default box: a square over `σ(A) ∪ σ(B)` inflated by `0.5(‖A‖+‖B‖)`.
pub fn default_box(a: &CMatrix, b: &CMatrix) -> Result<GridBox> {
    let mut pts = eigenvalues(a)?.eigenvalues;
    pts.extend(eigenvalues(b)?.eigenvalues);
    Ok(GridBox::square_around(
        &pts,
        0.5 * (op_norm(a) + op_norm(b)),
    ))
}

/// Values on a uniform grid of cell centres, thresholded at `level`, with
/// 4-connected component labels (0 = outside, components numbered from 1).
#[derive(Debug, Clone)]
pub struct GridRegion {
    pub bbox: GridBox,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `iy` runs along increasing real part.
    pub values: Vec<f64>,
    pub level: f64,
    pub mask: Vec<bool>,
    pub labels: Vec<u32>,
    pub components: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub bbox: GridBox,
    pub nx: usize,
    pub ny: usize,
    pub level: f64,
    pub components: u32,
    pub cells_inside: usize,
}

impl GridRegion {
    fn build(
        bbox: GridBox,
        nx: usize,
        ny: usize,
        level: f64,
        f: impl Fn(C64) -> f64 + Sync,
    ) -> Result<Self> {
        if nx < MIN_RESOLUTION || ny < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution {nx}×{ny} below {MIN_RESOLUTION}×{MIN_RESOLUTION}"
            )));
        }
        if !(level >= 0.0) {
            return Err(Error::InvalidArgument(format!("level {level} must be ≥ 0")));
        }
        let mut g = GridRegion {
            bbox,
            nx,
            ny,
            values: Vec::new(),
            level,
            mask: Vec::new(),
            labels: Vec::new(),
            components: 0,
        };
        g.values = (0..nx * ny)
            .into_par_iter()
            .map(|k| f(g.center(k % nx, k / nx)))
            .collect();
        g.relevel(level);
        Ok(g)
    }

    /// Recompute mask and labels for a new threshold.
    pub fn relevel(&mut self, level: f64) {
        self.level = level;
        self.mask = self.values.iter().map(|&v| v <= level).collect();
        self.label();
    }

    fn label(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        self.labels = vec![0; nx * ny];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..nx * ny {
            if !self.mask[start] || self.labels[start] != 0 {
                continue;
            }
            next += 1;
            self.labels[start] = next;
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                let (ix, iy) = (k % nx, k / nx);
                let mut visit = |j: usize| {
                    if self.mask[j] && self.labels[j] == 0 {
                        self.labels[j] = next;
                        queue.push_back(j);
                    }
                };
                if ix > 0 {
                    visit(k - 1);
                }
                if ix + 1 < nx {
                    visit(k + 1);
                }
                if iy > 0 {
                    visit(k - nx);
                }
                if iy + 1 < ny {
                    visit(k + nx);
                }
            }
        }
        self.components = next;
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.bbox.hi.re - self.bbox.lo.re) / self.nx as f64,
            (self.bbox.hi.im - self.bbox.lo.im) / self.ny as f64,
        )
    }

    pub fn center(&self, ix: usize, iy: usize) -> C64 {
        let (dx, dy) = self.cell_size();
        self.bbox.lo + C64::new((ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dy)
    }

    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        let (dx, dy) = self.cell_size();
        let fx = ((z.re - self.bbox.lo.re) / dx).floor();
        let fy = ((z.im - self.bbox.lo.im) / dy).floor();
        if fx < 0.0
            || fy < 0.0
            || fx >= self.nx as f64
            || fy >= self.ny as f64
            || fx.is_nan()
            || fy.is_nan()
        {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn inside(&self, z: C64) -> bool {
        self.cell_of(z)
            .is_some_and(|(ix, iy)| self.mask[iy * self.nx + ix])
    }

    /// Component label of the cell containing `z` (0 if outside the mask).
    pub fn label_at(&self, z: C64) -> u32 {
        self.cell_of(z)
            .map_or(0, |(ix, iy)| self.labels[iy * self.nx + ix])
    }

    /// Labels of components that touch the outer edge of the grid.
    pub fn border_labels(&self) -> BTreeSet<u32> {
        let (nx, ny) = (self.nx, self.ny);
        let edge = (0..nx)
            .flat_map(|ix| [ix, (ny - 1) * nx + ix])
            .chain((0..ny).flat_map(|iy| [iy * nx, iy * nx + nx - 1]));
        edge.map(|k| self.labels[k]).filter(|&l| l != 0).collect()
    }

    /// The 3×3 block of cells around `z`; `None` entries lie off the grid.
    fn neighbourhood(&self, z: C64) -> Option<Vec<Option<usize>>> {
        let (ix, iy) = self.cell_of(z)?;
        let mut out = Vec::with_capacity(9);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                    out.push(None);
                } else {
                    out.push(Some(y as usize * self.nx + x as usize));
                }
            }
        }
        Some(out)
    }

    /// True unless `z` and its eight neighbouring cells all lie in one component.
    pub fn near_boundary(&self, z: C64) -> bool {
        let label = self.label_at(z);
        if label == 0 {
            return true;
        }
        match self.neighbourhood(z) {
            None => true,
            Some(cells) => cells
                .iter()
                .any(|c| c.map_or(true, |k| self.labels[k] != label)),
        }
    }

    /// True when `z` and its eight neighbours are all outside the mask.
    pub fn clearly_outside(&self, z: C64) -> bool {
        match self.neighbourhood(z) {
            None => !self.bbox.contains(z),
            Some(cells) => cells.iter().all(|c| c.map_or(true, |k| !self.mask[k])),
        }
    }

    pub fn component_bbox(&self, label: u32) -> Option<GridBox> {
        let (dx, dy) = self.cell_size();
        let mut found: Option<GridBox> = None;
        for (k, &l) in self.labels.iter().enumerate() {
            if l != label || l == 0 {
                continue;
            }
            let c = self.center(k % self.nx, k / self.nx);
            let cell = GridBox {
                lo: c - C64::new(dx / 2.0, dy / 2.0),
                hi: c + C64::new(dx / 2.0, dy / 2.0),
            };
            found = Some(found.map_or(cell, |b| b.union(&cell)));
        }
        found
    }

    /// Mask with bounded holes filled, an approximation of the polynomially
    /// convex hull of the grid set.
    pub fn filled_mask(&self) -> Vec<bool> {
        let (nx, ny) = (self.nx, self.ny);
        let mut reach = vec![false; nx * ny];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for k in 0..nx * ny {
            let (ix, iy) = (k % nx, k / nx);
            let edge = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
            if edge && !self.mask[k] {
                reach[k] = true;
                queue.push_back(k);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (ix, iy) = (k % nx, k / nx);
            let mut nb = Vec::with_capacity(4);
            if ix > 0 {
                nb.push(k - 1);
            }
            if ix + 1 < nx {
                nb.push(k + 1);
            }
            if iy > 0 {
                nb.push(k - nx);
            }
            if iy + 1 < ny {
                nb.push(k + nx);
            }
            for j in nb {
                if !self.mask[j] && !reach[j] {
                    reach[j] = true;
                    queue.push_back(j);
                }
            }
        }
        reach.iter().map(|r| !r).collect()
    }

    pub fn cells_inside(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            bbox: self.bbox,
            nx: self.nx,
            ny: self.ny,
            level: self.level,
            components: self.components,
            cells_inside: self.cells_inside(),
        }
    }

    /// Plain PGM (P2) of `log₁₀(value)` scaled to 0–255, top row = largest
    /// imaginary part.
    pub fn to_pgm(&self) -> String {
        let logs: Vec<f64> = self.values.iter().map(|v| v.max(1e-300).log10()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P2\n{} {}\n255\n", self.nx, self.ny);
        for iy in (0..self.ny).rev() {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| {
                    let q = ((logs[iy * self.nx + ix] - lo) / span * 255.0).round();
                    (q.clamp(0.0, 255.0) as u8).to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,value,inside,component\n");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let k = iy * self.nx + ix;
                let c = self.center(ix, iy);
                let _ = writeln!(
                    out,
                    "{:.12e},{:.12e},{:.12e},{},{}",
                    c.re, c.im, self.values[k], self.mask[k] as u8, self.labels[k]
                );
            }
        }
        out
    }
}

/// `{z : |p(z)| ≤ level}` on a `res × res` grid.
pub fn vp_grid(p: &Poly, level: f64, bbox: GridBox, resolution: usize) -> Result<GridRegion> {
    GridRegion::build(bbox, resolution, resolution, level, |z| p.eval(z).norm())
}

/// `{z : σ_min(zI − T) ≤ ε}` on a `res × res` grid.
pub fn pseudospectrum_grid(
    t: &CMatrix,
    eps: f64,
    bbox: GridBox,
    resolution: usize,
) -> Result<GridRegion> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ε = {eps} must be positive"
        )));
    }
    if !t.is_square() {
        return Err(Error::dim("pseudospectrum_grid", "T must be square"));
    }
    let id = CMatrix::identity(t.rows());
    GridRegion::build(bbox, resolution, resolution, eps, |z| {
        smallest_singular_value(&(&id.scale(z) - t))
    })
}

/// Which inclusion set the certificate is built on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CertificateMode {
    /// Components of `V_p(M)` with `M = [[A, C], [0, B]]`.
    BlockM,
    /// Components of `V_p(A ⊕ B)` (ignores `C`).
    DirectSum,
    /// `σ(B)` outside `V_p(A)`; with `eps`, also `Σ_ε(B) ∩ V_p(A) = ∅`.
    DiscA { eps: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationStatus {
    Separated,
    NotSeparated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub poly: PolySpec,
    pub mode: CertificateMode,
    pub level: f64,
    pub margin: f64,
    pub bbox: Option<GridBox>,
    pub resolution: usize,
    /// Component of each eigenvalue of `A` (0 = not inside the set).
    pub components_a: Vec<u32>,
    pub components_b: Vec<u32>,
    pub component_count: u32,
    pub status: SeparationStatus,
    pub cause: Option<String>,
    /// `max(1 − max|p(σ_A)|/min|p(σ_B)|, 1 − max|p(σ_B)|/min|p(σ_A)|)`;
    /// positive when `|p|` alone splits the spectra.
    pub score: f64,
    #[serde(with = "pairs::vec")]
    pub eig_a: Vec<C64>,
    #[serde(with = "pairs::vec")]
    pub eig_b: Vec<C64>,
}

impl SeparationCertificate {
    pub fn is_separated(&self) -> bool {
        self.status == SeparationStatus::Separated
    }

    /// All `A`-eigenvalues in one component and all `B`-eigenvalues in another.
    pub fn is_two_component(&self) -> bool {
        let sa: BTreeSet<_> = self.components_a.iter().collect();
        let sb: BTreeSet<_> = self.components_b.iter().collect();
        self.is_separated() && sa.len() == 1 && sb.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct CertificateOptions {
    pub mode: CertificateMode,
    pub bbox: Option<GridBox>,
    pub resolution: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            mode: CertificateMode::BlockM,
            bbox: None,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

fn spectral_score(p: &Poly, ea: &[C64], eb: &[C64]) -> f64 {
    let vals = |e: &[C64]| e.iter().map(|&z| p.eval(z).norm()).collect::<Vec<_>>();
    let (va, vb) = (vals(ea), vals(eb));
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let side = |hi: f64, lo: f64| {
        let r = 1.0 - hi / lo;
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    };
    side(max(&va), min(&vb)).max(side(max(&vb), min(&va)))
}

/// Cauchy-type radius outside which `|p| > level`.
pub fn escape_radius(p: &Poly, level: f64) -> f64 {
    let d = p.degree().unwrap_or(0);
    let lead = p.leading().norm();
    let rest: f64 = (0..d).map(|k| p.coeff(k).norm()).sum();
    ((level + rest) / lead).max(1.0)
}

/// Margin `t` for a certificate at `‖p(·)‖ = base`: a fraction of `base`,
/// but large enough that near each root the set `{|p| ≤ base + t}` spans
/// about a tenth of the root spacing, so it stays resolvable on a grid when
/// `base` is tiny.
pub fn default_margin(p: &Poly, base: f64, fraction: f64) -> f64 {
    let roots = p.roots().unwrap_or_default();
    let dp = p.derivative(1);
    let slope = roots
        .iter()
        .map(|&z| dp.eval(z).norm())
        .fold(f64::INFINITY, f64::min);
    let mut spacing = f64::INFINITY;
    for (i, x) in roots.iter().enumerate() {
        for y in &roots[i + 1..] {
            spacing = spacing.min((x - y).norm());
        }
    }
    if !spacing.is_finite() {
        spacing = 1.0;
    }
    let floor = 0.1 * spacing * slope;
    let t = (fraction * base).max(floor - base);
    if t.is_finite() && t > 0.0 {
        t
    } else {
        fraction * base.max(1e-12)
    }
}

/// Square containing `points` and the whole set `{|p| ≤ level}`.
pub fn level_set_box(p: &Poly, level: f64, points: &[C64]) -> GridBox {
    // a little slack so the set does not touch the edge
    let r = 1.1 * escape_radius(p, level);
    GridBox::square_around(points, 0.0).union(&GridBox {
        lo: C64::new(-r, -r),
        hi: C64::new(r, r),
    })
}

/// Grid the inclusion set for `mode` and classify the eigenvalues.
pub fn separation_certificate(
    p: &Poly,
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    t: f64,
    opts: &CertificateOptions,
) -> Result<SeparationCertificate> {
    if !a.is_square() || !b.is_square() || c.shape() != (a.rows(), b.rows()) {
        return Err(Error::dim(
            "separation_certificate",
            format!("A {:?}, B {:?}, C {:?}", a.shape(), b.shape(), c.shape()),
        ));
    }
    if p.degree().map_or(true, |d| d == 0) {
        return Err(Error::InvalidArgument("p must have degree ≥ 1".into()));
    }
    let mut cert = SeparationCertificate {
        poly: PolySpec::from(p),
        mode: opts.mode,
        level: f64::NAN,
        margin: t,
        bbox: opts.bbox,
        resolution: opts.resolution,
        components_a: vec![],
        components_b: vec![],
        component_count: 0,
        status: SeparationStatus::Inconclusive,
        cause: None,
        score: f64::NEG_INFINITY,
        eig_a: vec![],
        eig_b: vec![],
    };
    let (ea, eb) = match (eigenvalues(a), eigenvalues(b)) {
        (Ok(x), Ok(y)) => (x.eigenvalues, y.eigenvalues),
        (Err(e), _) | (_, Err(e)) => {
            cert.cause = Some(format!("eigenvalue computation failed: {e}"));
            return Ok(cert);
        }
    };
    cert.score = spectral_score(p, &ea, &eb);
    cert.eig_a = ea.clone();
    cert.eig_b = eb.clone();

    let base = match opts.mode {
        CertificateMode::BlockM => p.eval_matrix(&CMatrix::upper_block(a, c, b)?)?,
        CertificateMode::DirectSum => p.eval_matrix(&CMatrix::direct_sum(a, b))?,
        CertificateMode::DiscA { .. } => p.eval_matrix(a)?,
    };
    let level = op_norm(&base) + t;
    cert.level = level;

    let mut bbox = match opts.bbox {
        Some(b) => b,
        None => default_box(a, b)?,
    };
    let mut grid = vp_grid(p, level, bbox, opts.resolution)?;
    if opts.bbox.is_none() && !grid.border_labels().is_empty() {
        // the set reaches the edge: regrid over a box known to contain it
        let mut pts = ea.clone();
        pts.extend(&eb);
        bbox = level_set_box(p, level, &pts);
        grid = vp_grid(p, level, bbox, opts.resolution)?;
    }
    cert.bbox = Some(bbox);
    cert.component_count = grid.components;
    // components cut by the box edge may join outside it
    let open = grid.border_labels();
    let canon = |l: u32| if open.contains(&l) { u32::MAX } else { l };

    match opts.mode {
        CertificateMode::BlockM | CertificateMode::DirectSum => {
            cert.components_a = ea.iter().map(|&z| grid.label_at(z)).collect();
            cert.components_b = eb.iter().map(|&z| grid.label_at(z)).collect();
            // a component shared by well-inside eigenvalues is conclusive
            let robust = |e: &[C64], l: &[u32]| -> BTreeSet<u32> {
                e.iter()
                    .zip(l)
                    .filter(|(z, _)| !grid.near_boundary(**z))
                    .map(|(_, &l)| canon(l))
                    .collect()
            };
            let ra = robust(&ea, &cert.components_a);
            let rb = robust(&eb, &cert.components_b);
            if let Some(&l) = ra.intersection(&rb).next() {
                cert.status = SeparationStatus::NotSeparated;
                cert.cause = Some(format!(
                    "component {} holds eigenvalues of both A and B",
                    if l == u32::MAX {
                        "at the grid edge".to_string()
                    } else {
                        l.to_string()
                    }
                ));
                return Ok(cert);
            }
            if let Some(z) = ea.iter().chain(&eb).find(|&&z| grid.near_boundary(z)) {
                cert.cause = Some(format!(
                    "eigenvalue {z} lies within one cell of the set boundary"
                ));
                return Ok(cert);
            }
            cert.status = SeparationStatus::Separated;
        }
        CertificateMode::DiscA { eps } => {
            cert.components_a = ea.iter().map(|&z| grid.label_at(z)).collect();
            cert.components_b = eb.iter().map(|&z| grid.label_at(z)).collect();
            if let Some(z) = eb
                .iter()
                .find(|&&z| grid.inside(z) || p.eval(z).norm() <= level)
            {
                cert.status = SeparationStatus::NotSeparated;
                cert.cause = Some(format!("eigenvalue {z} of B lies in V_p(A)"));
                return Ok(cert);
            }
            if let Some(z) = eb.iter().find(|&&z| !grid.clearly_outside(z)) {
                cert.cause = Some(format!(
                    "eigenvalue {z} of B lies within one cell of V_p(A)"
                ));
                return Ok(cert);
            }
            if let Some(eps) = eps {
                let ps = pseudospectrum_grid(b, eps, bbox, opts.resolution)?;
                let hull = grid.filled_mask();
                if hull.iter().zip(&ps.mask).any(|(&h, &s)| h && s) {
                    cert.status = SeparationStatus::NotSeparated;
                    cert.cause = Some(format!("Σ_ε(B) with ε = {eps} meets V_p(A)"));
                    return Ok(cert);
                }
            }
            cert.status = SeparationStatus::Separated;
        }
    }
    Ok(cert)
}

/// One polynomial's `(‖p(A)‖·‖p(B)^{−1}‖)^{1/d}`.
#[derive(Debug, Clone, Serialize)]
pub struct EtaCandidate {
    pub degree: usize,
    pub poly: PolySpec,
    pub label: String,
    pub value: f64,
    /// `(ρ(p(A))·ρ(p(B)^{−1}))^{1/d}`, a lower companion of `value`.
    pub spectral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaEstimate {
    /// Best candidate for each degree `1..=dmax` (index `d − 1`).
    pub per_degree: Vec<Option<EtaCandidate>>,
    /// `min_{d' ≤ d} η̂_{d'}`.
    pub running_min: Vec<f64>,
    pub evaluated: usize,
    pub skipped: Vec<String>,
}

impl EtaEstimate {
    pub fn best(&self) -> Option<&EtaCandidate> {
        self.per_degree
            .iter()
            .flatten()
            .min_by(|x, y| x.value.total_cmp(&y.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaCandidates {
    Leja,
    Powers,
    Both,
}

/// Leja ordering of `points`: start at the largest modulus, then maximise
/// the product of distances to the points already chosen.
pub fn leja_order(points: &[C64]) -> Vec<C64> {
    let mut rest: Vec<C64> = points.to_vec();
    let mut out = Vec::with_capacity(rest.len());
    if rest.is_empty() {
        return out;
    }
    let first = (0..rest.len())
        .max_by(|&i, &j| rest[i].norm().total_cmp(&rest[j].norm()))
        .unwrap_or(0);
    out.push(rest.swap_remove(first));
    while !rest.is_empty() {
        let score = |z: C64| {
            out.iter()
                .map(|w| (z - w).norm().max(1e-300).ln())
                .sum::<f64>()
        };
        let k = (0..rest.len())
            .max_by(|&i, &j| score(rest[i]).total_cmp(&score(rest[j])))
            .unwrap_or(0);
        out.push(rest.swap_remove(k));
    }
    out
}

/// Degree-`d` polynomial with roots cycling through a Leja ordering.
pub fn leja_poly(ordered: &[C64], d: usize) -> Poly {
    let roots: Vec<C64> = (0..d).map(|k| ordered[k % ordered.len()]).collect();
    Poly::from_roots(&roots)
}

/// `k × k` grid of centres over the bounding box of `points` (padded so a
/// single point still gets a neighbourhood), plus the points' centroid.
pub fn center_grid(points: &[C64], k: usize) -> Vec<C64> {
    let diam = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let scale = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bx = GridBox::square_around(points, 0.1 * diam.max(scale).max(1e-3));
    let mut out = Vec::with_capacity(k * k + 1);
    let k = k.max(1);
    for iy in 0..k {
        for ix in 0..k {
            let fx = if k == 1 {
                0.5
            } else {
                ix as f64 / (k - 1) as f64
            };
            let fy = if k == 1 {
                0.5
            } else {
                iy as f64 / (k - 1) as f64
            };
            out.push(C64::new(
                bx.lo.re + fx * (bx.hi.re - bx.lo.re),
                bx.lo.im + fy * (bx.hi.im - bx.lo.im),
            ));
        }
    }
    if !points.is_empty() {
        out.push(points.iter().sum::<C64>() / points.len() as f64);
    }
    out
}

fn eta_value(p: &Poly, a: &CMatrix, b: &CMatrix, d: usize) -> Result<(f64, f64)> {
    let pa = p.eval_matrix(a)?;
    let pb = p.eval_matrix(b)?;
    let inv = crate::matcore::inverse(&pb)?;
    let value = (op_norm(&pa) * op_norm(&inv)).powf(1.0 / d as f64);
    let ra = eigenvalues(&pa)?.spectral_radius();
    let mb = eigenvalues(&pb)?.min_modulus();
    Ok((value, (ra / mb).powf(1.0 / d as f64)))
}

/// Upper estimates of `η(A,B)` from explicit candidate polynomials.
pub fn eta_estimate(
    a: &CMatrix,
    b: &CMatrix,
    dmax: usize,
    candidates: EtaCandidates,
) -> Result<EtaEstimate> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::dim("eta_estimate", "A and B must be square"));
    }
    if dmax == 0 {
        return Err(Error::InvalidArgument("dmax must be ≥ 1".into()));
    }
    let ea = eigenvalues(a)?.eigenvalues;
    let leja = leja_order(&ea);
    let centers = center_grid(&ea, 11);
    let mut est = EtaEstimate {
        per_degree: Vec::with_capacity(dmax),
        running_min: Vec::with_capacity(dmax),
        evaluated: 0,
        skipped: vec![],
    };
    for d in 1..=dmax {
        let mut cands: Vec<(String, Poly)> = vec![];
        if matches!(candidates, EtaCandidates::Leja | EtaCandidates::Both) {
            cands.push((format!("leja-{d}"), leja_poly(&leja, d)));
        }
        if matches!(candidates, EtaCandidates::Powers | EtaCandidates::Both) {
            for &c in &centers {
                cands.push((
                    format!("power-{d}@({:.4},{:.4})", c.re, c.im),
                    Poly::from_roots(&vec![c; d]),
                ));
            }
        }
        let scored: Vec<(String, Poly, Result<(f64, f64)>)> = cands
            .into_par_iter()
            .map(|(label, p)| {
                let r = eta_value(&p, a, b, d);
                (label, p, r)
            })
            .collect();
        let mut best: Option<EtaCandidate> = None;
        for (label, p, r) in scored {
            match r {
                Ok((value, spectral)) if value.is_finite() => {
                    est.evaluated += 1;
                    if best.as_ref().map_or(true, |b| value < b.value) {
                        best = Some(EtaCandidate {
                            degree: d,
                            poly: PolySpec::from(&p),
                            label,
                            value,
                            spectral,
                        });
                    }
                }
                Ok(_) => est.skipped.push(format!("{label}: non-finite value")),
                Err(e) => est.skipped.push(format!("{label}: {e}")),
            }
        }
        let prev = est.running_min.last().copied().unwrap_or(f64::INFINITY);
        let cur = best.as_ref().map_or(f64::INFINITY, |b| b.value);
        est.running_min.push(prev.min(cur));
        est.per_degree.push(best);
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStrategy {
    UserRoots,
    LejaA,
    LejaSplit,
    ShiftedPowers,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub degrees: std::ops::RangeInclusive<usize>,
    pub user_roots: Option<Vec<C64>>,
    /// Modes tried for every candidate, in order.
    pub modes: Vec<CertificateMode>,
    pub resolution: usize,
    /// Margin `t` as a fraction of `‖p(·)‖`.
    pub margin_fraction: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            degrees: 1..=4,
            user_roots: None,
            modes: vec![
                CertificateMode::BlockM,
                CertificateMode::DiscA { eps: None },
            ],
            resolution: DEFAULT_RESOLUTION,
            margin_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchAttempt {
    pub strategy: SearchStrategy,
    pub label: String,
    pub mode: CertificateMode,
    pub status: SeparationStatus,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub poly: PolySpec,
    pub strategy: SearchStrategy,
    pub certificate: SeparationCertificate,
    pub attempts: Vec<SearchAttempt>,
}

fn candidates_for(
    strategy: SearchStrategy,
    d: usize,
    ea: &[C64],
    eb: &[C64],
    opts: &SearchOptions,
) -> Vec<(String, Poly)> {
    match strategy {
        SearchStrategy::UserRoots => match &opts.user_roots {
            Some(r) if r.len() == d => vec![("user".into(), Poly::from_roots(r))],
            _ => vec![],
        },
        SearchStrategy::LejaA => {
            let ord = leja_order(ea);
            vec![(format!("leja-A-{d}"), leja_poly(&ord, d))]
        }
        SearchStrategy::LejaSplit => {
            // roots drawn alternately from the two half-planes of A ⊕ B
            let mut all: Vec<C64> = ea.to_vec();
            all.extend(eb);
            let right = leja_order(
                &all.iter()
                    .copied()
                    .filter(|z| z.re >= 0.0)
                    .collect::<Vec<_>>(),
            );
            let left = leja_order(
                &all.iter()
                    .copied()
                    .filter(|z| z.re < 0.0)
                    .collect::<Vec<_>>(),
            );
            let mut roots = vec![];
            let (mut i, mut j) = (0, 0);
            while roots.len() < d {
                if (roots.len() % 2 == 0 && !right.is_empty()) || left.is_empty() {
                    roots.push(right[i % right.len()]);
                    i += 1;
                } else {
                    roots.push(left[j % left.len()]);
                    j += 1;
                }
            }
            vec![(format!("leja-split-{d}"), Poly::from_roots(&roots))]
        }
        SearchStrategy::ShiftedPowers => {
            let mut out = vec![];
            let mut all: Vec<C64> = ea.to_vec();
            all.extend(eb);
            for c in center_grid(&all, 5) {
                out.push((
                    format!("(z-({:.4},{:.4}))^{d}", c.re, c.im),
                    Poly::from_roots(&vec![c; d]),
                ));
            }
            // z^d − s with s at the centre of σ(A)^d
            if d >= 2 {
                let pw: Vec<C64> = ea.iter().map(|z| z.powu(d as u32)).collect();
                let bx = GridBox::square_around(&pw, 0.0);
                let mid = (bx.lo + bx.hi) * 0.5;
                let mean = pw.iter().sum::<C64>() / pw.len().max(1) as f64;
                for s in [mid, mean] {
                    let mut coeffs = vec![C64::new(0.0, 0.0); d + 1];
                    coeffs[0] = -s;
                    coeffs[d] = C64::new(1.0, 0.0);
                    out.push((
                        format!("z^{d}-({:.4},{:.4})", s.re, s.im),
                        Poly::new(coeffs),
                    ));
                }
            }
            out
        }
    }
}

/// Try candidate polynomials until one is certified; otherwise report the
/// best-scoring failure. Heuristic only: failure does not prove that no
/// separating polynomial exists.
pub fn search_separating_poly(
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let ea = eigenvalues(a)?.eigenvalues;
    let eb = eigenvalues(b)?.eigenvalues;
    let mut attempts = vec![];
    let mut best: Option<(SearchStrategy, SeparationCertificate)> = None;
    let strategies = [
        SearchStrategy::UserRoots,
        SearchStrategy::LejaA,
        SearchStrategy::LejaSplit,
        SearchStrategy::ShiftedPowers,
    ];
    for strategy in strategies {
        for d in opts.degrees.clone() {
            for (label, p) in candidates_for(strategy, d, &ea, &eb, opts) {
                for &mode in &opts.modes {
                    let base = match mode {
                        CertificateMode::BlockM => {
                            op_norm(&p.eval_matrix(&CMatrix::upper_block(a, c, b)?)?)
                        }
                        CertificateMode::DirectSum => {
                            op_norm(&p.eval_matrix(&CMatrix::direct_sum(a, b))?)
                        }
                        CertificateMode::DiscA { .. } => op_norm(&p.eval_matrix(a)?),
                    };
                    let t = default_margin(&p, base, opts.margin_fraction);
                    let copts = CertificateOptions {
                        mode,
                        bbox: None,
                        resolution: opts.resolution,
                    };
                    let cert = separation_certificate(&p, a, b, c, t, &copts)?;
                    attempts.push(SearchAttempt {
                        strategy,
                        label: label.clone(),
                        mode,
                        status: cert.status,
                        score: cert.score,
                    });
                    if cert.is_separated() {
                        return Ok(SearchOutcome {
                            poly: PolySpec::from(&p),
                            strategy,
                            certificate: cert,
                            attempts,
                        });
                    }
                    if best.as_ref().map_or(true, |(_, b)| cert.score > b.score) {
                        best = Some((strategy, cert));
                    }
                }
            }
        }
    }
    let (strategy, certificate) =
        best.ok_or_else(|| Error::InvalidArgument("no candidates generated".into()))?;
    Ok(SearchOutcome {
        poly: certificate.poly.clone(),
        strategy,
        certificate,
        attempts,
    })
}
