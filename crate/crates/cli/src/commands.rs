use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sylsep::families::{self, Family};
use sylsep::matcore::{eigenvalues, op_norm};
use sylsep::pairs::{self, Pair};
use sylsep::polyops::PolySpec;
use sylsep::regions::{
    eta_estimate, level_set_box, pseudospectrum_grid, search_separating_poly,
    separation_certificate, vp_grid, CertificateMode, CertificateOptions, EtaCandidates,
    EtaEstimate, GridBox, GridRegion, GridSummary, SearchAttempt, SearchOptions, SearchStrategy,
    SeparationCertificate, DEFAULT_RESOLUTION,
};
use sylsep::solvers::{solve, Method, SolveOptions, SylvesterProblem};
use sylsep::{CMatrix, Error, Poly, C64};

use crate::config::{
    to_rows, EtaConfig, Generated, MatrixRows, ProblemConfig, RegionTarget, SearchConfig,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_NOT_APPLICABLE: u8 = 2;

/// Flags that override config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub tol: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl ErrorInfo {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        ErrorInfo {
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    fn from_core(e: &Error) -> Self {
        let kind = match e {
            Error::Dimension { .. } => "dimension",
            Error::NonFinite { .. } => "non-finite",
            Error::Singular { .. } => "singular",
            Error::NoConvergence { .. } => "no-convergence",
            Error::Range(_) => "range",
            Error::Conditioning(_) => "conditioning",
            Error::Certificate(_) => "certificate",
            Error::Applicability { .. } => "applicability",
            Error::Divergence(_) => "divergence",
            Error::SpectraOverlap { .. } => "spectra-overlap",
            Error::InvalidArgument(_) => "invalid-argument",
        };
        ErrorInfo::new(kind, e.to_string())
    }
}

fn exit_for(e: &Error) -> u8 {
    if e.is_applicability() {
        EXIT_NOT_APPLICABLE
    } else {
        EXIT_FAILURE
    }
}

/// Every report has this shape; `body` fields are inlined.
#[derive(Debug, Serialize)]
struct Envelope<T: Serialize> {
    command: &'static str,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    timestamp: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten)]
    body: T,
    error: Option<ErrorInfo>,
}

pub struct Outcome {
    pub code: u8,
    pub report: String,
}

fn finish<T: Serialize>(
    command: &'static str,
    seed: Option<u64>,
    body: T,
    error: Option<ErrorInfo>,
    code: u8,
) -> Outcome {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let env = Envelope {
        command,
        timestamp,
        seed,
        body,
        error,
    };
    let mut report = serde_json::to_string_pretty(&env).expect("report serializes");
    report.push('\n');
    Outcome { code, report }
}

/// A report for a config that could not be loaded.
pub fn config_failure(command: &'static str, message: String) -> Outcome {
    finish(
        command,
        None,
        BTreeMap::<String, ()>::new(),
        Some(ErrorInfo::new("config", message)),
        EXIT_FAILURE,
    )
}

fn pair_list(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|&z| pairs::to_pair(z)).collect()
}

#[derive(Debug, Default, Serialize)]
struct SolveBody {
    method: Option<Method>,
    route: Option<String>,
    tol: f64,
    #[serde(rename = "X")]
    x: Option<MatrixRows>,
    residual: Option<f64>,
    #[serde(rename = "N")]
    order: Option<usize>,
    iterations: Option<usize>,
    bound: Option<f64>,
    certificate: Option<SeparationCertificate>,
    diagnostics: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

fn solve_options(cfg: &ProblemConfig, ov: &Overrides) -> Result<SolveOptions, Error> {
    let mut o = SolveOptions::default();
    o.method = ov.method.or(cfg.method).unwrap_or(Method::Oracle);
    if let Some(t) = ov.tol.or(cfg.tol) {
        o.tol = t;
    }
    if let Some(k) = cfg.max_iter {
        o.max_iter = k;
    }
    o.poly = cfg.poly.as_ref().map(PolySpec::to_poly).transpose()?;
    o.contour = cfg.contour.clone();
    o.eps = cfg.eps;
    o.margin = cfg.margin;
    o.resolution = ov
        .resolution
        .or(cfg.resolution)
        .unwrap_or(DEFAULT_RESOLUTION);
    o.shift = cfg.shift.unwrap_or_default();
    Ok(o)
}

pub fn cmd_solve(cfg: &ProblemConfig, ov: &Overrides) -> Outcome {
    let seed = ov.seed.or(cfg.seed);
    let mut body = SolveBody::default();
    let result = (|| {
        let opts = solve_options(cfg, ov)?;
        body.method = Some(opts.method);
        body.tol = opts.tol;
        let (a, b, c) = cfg.matrices()?;
        let prob = SylvesterProblem::with_options(a, b, c, opts)?;
        solve(&prob)
    })();
    match result {
        Ok(rep) => {
            let tol = body.tol;
            body.route = Some(rep.method.clone());
            body.x = Some(to_rows(&rep.x));
            body.residual = Some(rep.residual);
            body.order = rep.order;
            body.iterations = rep.iterations;
            body.bound = rep.bound;
            body.certificate = rep.certificate;
            body.diagnostics = rep.diagnostics;
            body.warnings = rep.warnings;
            if rep.residual <= tol {
                finish("solve", seed, body, None, EXIT_OK)
            } else {
                let msg = format!("residual {:.3e} exceeds tol {tol:.3e}", rep.residual);
                finish(
                    "solve",
                    seed,
                    body,
                    Some(ErrorInfo::new("residual", msg)),
                    EXIT_FAILURE,
                )
            }
        }
        Err(e) => finish(
            "solve",
            seed,
            body,
            Some(ErrorInfo::from_core(&e)),
            exit_for(&e),
        ),
    }
}

#[derive(Debug, Serialize)]
struct GridReport {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    summary: GridSummary,
    /// Every eigenvalue of the target lies in the computed set, up to one
    /// cell (eigenvalues often sit exactly on the boundary).
    contains_spectrum: bool,
    artifacts: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
struct RegionBody {
    target: Option<RegionTarget>,
    poly: Option<PolySpec>,
    eigenvalues: Vec<Pair>,
    grids: Vec<GridReport>,
    certificate: Option<SeparationCertificate>,
}

fn artifact_stem(cfg: &ProblemConfig, ov: &Overrides) -> Option<PathBuf> {
    if let Some(g) = cfg.output.as_ref().and_then(|o| o.grid.as_ref()) {
        return Some(PathBuf::from(g));
    }
    ov.out.as_ref().map(|p| p.with_extension(""))
}

fn write_grid(grid: &GridRegion, stem: Option<&Path>, suffix: &str) -> Result<Vec<String>, String> {
    let Some(stem) = stem else { return Ok(vec![]) };
    let mut names = vec![];
    for (ext, text) in [("pgm", grid.to_pgm()), ("csv", grid.to_csv())] {
        let name = format!(
            "{}{suffix}.{ext}",
            stem.file_name()
                .and_then(|s| s.to_str())
                .unwrap_or("region")
        );
        let path = stem.with_file_name(&name);
        std::fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        names.push(name);
    }
    Ok(names)
}

pub fn cmd_region(cfg: &ProblemConfig, ov: &Overrides) -> Outcome {
    let seed = ov.seed.or(cfg.seed);
    let mut body = RegionBody::default();
    let rc = cfg.region.clone().unwrap_or_default();
    body.target = Some(rc.target);
    let stem = artifact_stem(cfg, ov);
    let resolution = ov
        .resolution
        .or(cfg.resolution)
        .unwrap_or(DEFAULT_RESOLUTION);

    let result: Result<(), (ErrorInfo, u8)> = (|| {
        let core = |e: Error| (ErrorInfo::from_core(&e), exit_for(&e));
        let io = |m: String| (ErrorInfo::new("io", m), EXIT_FAILURE);
        let (a, b, c) = cfg.matrices().map_err(core)?;
        let t = match rc.target {
            RegionTarget::M => CMatrix::upper_block(&a, &c, &b).map_err(core)?,
            RegionTarget::A => a.clone(),
            RegionTarget::B => b.clone(),
            RegionTarget::DirectSum => CMatrix::direct_sum(&a, &b),
        };
        let eig = eigenvalues(&t).map_err(core)?.eigenvalues;
        body.eigenvalues = pair_list(&eig);
        let p = cfg
            .poly
            .as_ref()
            .map(PolySpec::to_poly)
            .transpose()
            .map_err(core)?;
        let mut eps_levels: Vec<f64> = cfg.eps.into_iter().collect();
        eps_levels.extend(&rc.eps_sweep);
        if p.is_none() && eps_levels.is_empty() {
            return Err(core(Error::InvalidArgument(
                "region needs a polynomial or eps".into(),
            )));
        }
        let contains = |g: &GridRegion| eig.iter().all(|&z| !g.clearly_outside(z));

        if let Some(p) = &p {
            body.poly = Some(PolySpec::from(p));
            let level = match rc.level {
                Some(l) => l,
                None => op_norm(&p.eval_matrix(&t).map_err(core)?) + cfg.margin.unwrap_or(0.0),
            };
            let bbox = cfg.bbox.unwrap_or_else(|| level_set_box(p, level, &eig));
            let grid = vp_grid(p, level, bbox, resolution).map_err(core)?;
            let artifacts = write_grid(&grid, stem.as_deref(), "").map_err(io)?;
            body.grids.push(GridReport {
                kind: "level-set",
                eps: None,
                contains_spectrum: contains(&grid),
                summary: grid.summary(),
                artifacts,
            });
            let mode = rc.mode.or(match rc.target {
                RegionTarget::M => Some(CertificateMode::BlockM),
                RegionTarget::DirectSum => Some(CertificateMode::DirectSum),
                _ => None,
            });
            if let Some(mode) = mode {
                let opts = CertificateOptions {
                    mode,
                    bbox: cfg.bbox,
                    resolution,
                };
                let cert = separation_certificate(p, &a, &b, &c, cfg.margin.unwrap_or(0.0), &opts)
                    .map_err(core)?;
                body.certificate = Some(cert);
            }
        }
        let scale = op_norm(&t);
        for (k, &eps) in eps_levels.iter().enumerate() {
            let bbox = cfg
                .bbox
                .unwrap_or_else(|| GridBox::square_around(&eig, 0.5 * scale + 2.0 * eps));
            let grid = pseudospectrum_grid(&t, eps, bbox, resolution).map_err(core)?;
            let artifacts = write_grid(&grid, stem.as_deref(), &format!(".eps{k}")).map_err(io)?;
            body.grids.push(GridReport {
                kind: "pseudospectrum",
                eps: Some(eps),
                contains_spectrum: contains(&grid),
                summary: grid.summary(),
                artifacts,
            });
        }
        Ok(())
    })();
    match result {
        Ok(()) => finish("region", seed, body, None, EXIT_OK),
        Err((info, code)) => finish("region", seed, body, Some(info), code),
    }
}

#[derive(Debug, Serialize)]
struct PolyOut {
    roots: Vec<Pair>,
    coeffs: Vec<Pair>,
}

impl PolyOut {
    fn of(p: &Poly) -> Self {
        PolyOut {
            roots: p.roots().map(|r| pair_list(&r)).unwrap_or_default(),
            coeffs: pair_list(p.coeffs()),
        }
    }
}

#[derive(Debug, Serialize)]
struct EtaRow {
    degree: usize,
    eta: Option<f64>,
    spectral: Option<f64>,
    running_min: f64,
    label: Option<String>,
    poly: Option<PolyOut>,
}

#[derive(Debug, Serialize)]
struct EtaTable {
    candidates: EtaCandidates,
    rows: Vec<EtaRow>,
    evaluated: usize,
    skipped: Vec<String>,
}

impl EtaTable {
    fn of(est: &EtaEstimate, candidates: EtaCandidates) -> Self {
        let rows = est
            .per_degree
            .iter()
            .zip(&est.running_min)
            .enumerate()
            .map(|(k, (cand, &rm))| EtaRow {
                degree: k + 1,
                eta: cand.as_ref().map(|c| c.value),
                spectral: cand.as_ref().map(|c| c.spectral),
                running_min: rm,
                label: cand.as_ref().map(|c| c.label.clone()),
                poly: cand
                    .as_ref()
                    .and_then(|c| c.poly.to_poly().ok())
                    .map(|p| PolyOut::of(&p)),
            })
            .collect();
        EtaTable {
            candidates,
            rows,
            evaluated: est.evaluated,
            skipped: est.skipped.clone(),
        }
    }
}

#[derive(Debug, Default, Serialize)]
struct SearchBody {
    user_roots: Option<Vec<Pair>>,
    best: Option<PolyOut>,
    strategy: Option<SearchStrategy>,
    separated: Option<bool>,
    /// Spectral score of the best candidate; ≤ 0 when `|p|` cannot split
    /// the spectra.
    separation_margin: Option<f64>,
    certificate: Option<SeparationCertificate>,
    attempts: Vec<SearchAttempt>,
    eta: Option<EtaTable>,
    eta_error: Option<String>,
}

pub fn cmd_search(cfg: &ProblemConfig, ov: &Overrides) -> Outcome {
    let seed = ov.seed.or(cfg.seed);
    let sc = cfg.search.clone().unwrap_or_default();
    let mut body = SearchBody {
        user_roots: sc.user_roots.as_deref().map(pair_list),
        ..Default::default()
    };
    let result = (|| {
        let (a, b, c) = cfg.matrices()?;
        let opts = search_options(&sc, cfg, ov)?;
        let out = search_separating_poly(&a, &b, &c, &opts)?;
        let p = out.poly.to_poly()?;
        body.best = Some(PolyOut::of(&p));
        body.strategy = Some(out.strategy);
        body.separated = Some(out.certificate.is_separated());
        body.separation_margin = Some(out.certificate.score);
        body.certificate = Some(out.certificate);
        body.attempts = out.attempts;
        match eta_estimate(&a, &b, *opts.degrees.end(), EtaCandidates::Both) {
            Ok(est) => body.eta = Some(EtaTable::of(&est, EtaCandidates::Both)),
            Err(e) => body.eta_error = Some(e.to_string()),
        }
        Ok::<_, Error>(())
    })();
    match result {
        Ok(()) => finish("search", seed, body, None, EXIT_OK),
        Err(e) => finish(
            "search",
            seed,
            body,
            Some(ErrorInfo::from_core(&e)),
            exit_for(&e),
        ),
    }
}

fn search_options(
    sc: &SearchConfig,
    cfg: &ProblemConfig,
    ov: &Overrides,
) -> Result<SearchOptions, Error> {
    let [lo, hi] = sc.degrees;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "degree range [{lo}, {hi}] is empty or starts at 0"
        )));
    }
    let mut opts = SearchOptions {
        degrees: lo..=hi,
        user_roots: sc.user_roots.clone(),
        resolution: ov
            .resolution
            .or(cfg.resolution)
            .unwrap_or(DEFAULT_RESOLUTION),
        ..Default::default()
    };
    if let Some(m) = &sc.modes {
        opts.modes = m.clone();
    }
    if let Some(f) = sc.margin_fraction {
        opts.margin_fraction = f;
    }
    Ok(opts)
}

#[derive(Debug, Default, Serialize)]
struct EtaBody {
    dmax: usize,
    eta: Option<EtaTable>,
    best: Option<f64>,
}

pub fn cmd_eta(cfg: &ProblemConfig, ov: &Overrides) -> Outcome {
    let seed = ov.seed.or(cfg.seed);
    let ec = cfg.eta.clone().unwrap_or(EtaConfig {
        dmax: 4,
        candidates: EtaCandidates::Both,
    });
    let mut body = EtaBody {
        dmax: ec.dmax,
        ..Default::default()
    };
    let result = (|| {
        let (a, b, _) = cfg.matrices()?;
        let est = eta_estimate(&a, &b, ec.dmax, ec.candidates)?;
        body.best = est.best().map(|c| c.value);
        body.eta = Some(EtaTable::of(&est, ec.candidates));
        Ok::<_, Error>(())
    })();
    match result {
        Ok(()) => finish("eta", seed, body, None, EXIT_OK),
        Err(e) => finish(
            "eta",
            seed,
            body,
            Some(ErrorInfo::from_core(&e)),
            exit_for(&e),
        ),
    }
}

/// Config for a generated instance, with method and polynomial chosen to
/// suit the family.
pub fn cmd_generate(family: Family, size: usize, seed: u64) -> ProblemConfig {
    let inst = families::generate(family, size, seed);
    let mut cfg = ProblemConfig {
        a: to_rows(&inst.a),
        b: to_rows(&inst.b),
        c: Some(to_rows(&inst.c)),
        method: None,
        poly: None,
        tol: None,
        max_iter: None,
        margin: None,
        eps: None,
        shift: None,
        contour: None,
        bbox: None,
        resolution: None,
        region: None,
        search: None,
        eta: None,
        output: None,
        seed: Some(seed),
        generated: Some(Generated {
            family,
            size: inst.a.rows(),
            seed,
            stamps: inst.stamps.clone(),
        }),
    };
    let real = |c: &[f64]| Some(PolySpec::from(&Poly::from_real(c)));
    match family {
        Family::SymmetricSkew => {
            // A² and B² sit in the right and left half-planes
            cfg.method = Some(Method::Heinz);
            cfg.poly = real(&[0.0, 0.0, 1.0]);
            cfg.tol = Some(1e-10);
        }
        Family::SelfadjointPair => {
            cfg.method = Some(Method::SignSeriesM2);
            cfg.tol = Some(1e-10);
        }
        Family::ShiftedRandom => {
            cfg.method = Some(Method::Oracle);
            cfg.tol = Some(1e-10);
        }
        Family::JordanNonnormal => {
            cfg.method = Some(Method::Rosenblum);
            cfg.tol = Some(1e-10);
        }
        Family::NormalDisc => {
            cfg.method = Some(Method::DiscSeries);
            cfg.poly = real(&[0.0, 1.0]);
            cfg.tol = Some(1e-10);
            cfg.eta = Some(EtaConfig {
                dmax: 8,
                candidates: EtaCandidates::Both,
            });
            cfg.search = Some(SearchConfig {
                degrees: [1, 8],
                ..Default::default()
            });
        }
    }
    cfg
}
