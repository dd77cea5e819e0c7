//! Convergence-study driver: h-refinement and p-elevation studies with
//! slope fitting against the guaranteed exponents, CSV tables, and SVG
//! log-log charts.

mod checks;
mod output;

pub use checks::{
    check_determinism, check_norm_equivalence, check_projector_suite, check_structural,
    CheckResult,
};
pub use output::{csv_string, emit_outputs, write_csv, write_svg};

use crate::assembly::{
    assemble_fosls, FoslsSolution, QuadConfig, ScalarSpace, VectorSpace,
};
use crate::basis::VectorFamily;
use crate::errors::{compute_errors, ErrorReport};
use crate::mesh::{make_disk_mesh, make_square_mesh, Mesh};
use crate::oracle::manufactured;
use crate::solve::{solve_spd, SolveOptions};
use crate::{FoslsError, Result};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Square,
    Disk,
}

impl DomainKind {
    pub fn parse(s: &str) -> Result<DomainKind> {
        match s {
            "square" => Ok(DomainKind::Square),
            "disk" => Ok(DomainKind::Disk),
            other => Err(FoslsError::InvalidConfig(format!(
                "unknown domain `{other}` (square|disk)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    HRefinement,
    PElevation,
}

/// Per-norm convergence exponents guaranteed for data regularity s.
///
/// For Raviart-Thomas pairs: the scalar L² error converges with
/// min(s+1, p_s, p_v + 1/2) + 1 (p_v > 1; min(s+1, 2) at lowest order),
/// its gradient with min(s+1, p_s, p_v + 1/2), and both the vector L²
/// error and its boundary normal trace with min(s + 1/2, p_s + 1/2, p_v).
/// Brezzi-Douglas-Marini replaces p_v + 1/2 and p_v by p_v + 1. The
/// divergence error follows the best approximation of ∇·φ: min(s, p_v).
#[derive(Debug, Clone, Copy)]
pub struct RateExponents {
    pub u: f64,
    pub grad_u: f64,
    pub phi: f64,
    pub phi_n: f64,
    pub div_phi: f64,
}

/// Approximation-theory ceiling of the employed spaces for a solution
/// with u in H^{s+2} (so φ in H^{s+1} and ∇·φ in H^s): the best rate any
/// method using these spaces could deliver.
pub fn best_possible_exponents(
    family: VectorFamily,
    p_s: usize,
    p_v: usize,
    s: f64,
) -> RateExponents {
    let ps = p_s as f64;
    let pv = match family {
        VectorFamily::RaviartThomas => p_v as f64,
        VectorFamily::BrezziDouglasMarini => p_v as f64 + 1.0,
    };
    RateExponents {
        u: (s + 2.0).min(ps + 1.0),
        grad_u: (s + 1.0).min(ps),
        phi: (s + 1.0).min(pv),
        phi_n: (s + 1.0).min(pv),
        div_phi: s.min(pv),
    }
}

pub fn predicted_exponents(
    family: VectorFamily,
    p_s: usize,
    p_v: usize,
    s: f64,
) -> RateExponents {
    let ps = p_s as f64;
    let pv = p_v as f64;
    let pv_eff = match family {
        VectorFamily::RaviartThomas => pv + 0.5,
        VectorFamily::BrezziDouglasMarini => pv + 1.0,
    };
    let pv_flux = match family {
        VectorFamily::RaviartThomas => pv,
        VectorFamily::BrezziDouglasMarini => pv + 1.0,
    };
    let u = if p_v == 1 {
        (s + 1.0).min(2.0)
    } else {
        (s + 1.0).min(ps).min(pv_eff) + 1.0
    };
    RateExponents {
        u,
        grad_u: (s + 1.0).min(ps).min(pv_eff),
        phi: (s + 0.5).min(ps + 0.5).min(pv_flux),
        phi_n: (s + 0.5).min(ps + 0.5).min(pv_flux),
        div_phi: s.min(pv),
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub domain: DomainKind,
    pub family: VectorFamily,
    pub p_s: usize,
    pub p_v: usize,
    pub mode: StudyMode,
    /// Refinement levels for h-studies (level 0 is the coarse mesh).
    pub levels: usize,
    /// Largest degree for p-studies (p_s = p_v = 1..=p_max).
    pub p_max: usize,
    pub case: String,
    pub gamma: f64,
    pub alpha: f64,
    /// Data regularity s entering the predicted exponents
    /// (`f64::INFINITY` for smooth cases).
    pub regularity: f64,
    pub solver: SolveOptions,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Points of the fit window (finest levels / largest degrees).
    pub fit_window: usize,
}

impl StudyConfig {
    pub fn defaults() -> StudyConfig {
        StudyConfig {
            domain: DomainKind::Disk,
            family: VectorFamily::RaviartThomas,
            p_s: 1,
            p_v: 1,
            mode: StudyMode::HRefinement,
            levels: 5,
            p_max: 8,
            case: "radial_step".to_string(),
            gamma: 2.0,
            alpha: 1.0,
            regularity: 0.5,
            solver: SolveOptions::default(),
            out_dir: None,
            seed: 0,
            fit_window: 3,
        }
    }

    /// Parse a flat `key = value` config file; unknown keys are errors.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FoslsError::InvalidConfig(format!("line {}: expected key = value", ln + 1))
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| FoslsError::InvalidConfig(format!("bad {what}: `{value}`"));
        match key {
            "domain" => self.domain = DomainKind::parse(value)?,
            "family" => {
                self.family = match value {
                    "rt" => VectorFamily::RaviartThomas,
                    "bdm" => VectorFamily::BrezziDouglasMarini,
                    _ => return Err(bad("family (rt|bdm)")),
                }
            }
            "ps" => self.p_s = value.parse().map_err(|_| bad("ps"))?,
            "pv" => self.p_v = value.parse().map_err(|_| bad("pv"))?,
            "mode" => {
                self.mode = match value {
                    "h" => StudyMode::HRefinement,
                    "p" => StudyMode::PElevation,
                    _ => return Err(bad("mode (h|p)")),
                }
            }
            "levels" => self.levels = value.parse().map_err(|_| bad("levels"))?,
            "pmax" => self.p_max = value.parse().map_err(|_| bad("pmax"))?,
            "case" => self.case = value.to_string(),
            "gamma" => self.gamma = value.parse().map_err(|_| bad("gamma"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "regularity" => {
                self.regularity = if value == "inf" {
                    f64::INFINITY
                } else {
                    value.parse().map_err(|_| bad("regularity"))?
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "fit_window" => self.fit_window = value.parse().map_err(|_| bad("fit_window"))?,
            "tolerance" => {
                self.solver.tolerance = value.parse().map_err(|_| bad("tolerance"))?
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            other => {
                return Err(FoslsError::InvalidConfig(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_s < 1 || self.p_v < 1 {
            return Err(FoslsError::InvalidConfig(
                "degrees must satisfy p_s >= 1 and p_v >= 1".into(),
            ));
        }
        if self.mode == StudyMode::HRefinement && self.levels < 3 {
            return Err(FoslsError::InvalidConfig(
                "rate fitting needs at least 3 levels".into(),
            ));
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance <= 1e-6) {
            return Err(FoslsError::InvalidConfig(
                "solver tolerance must lie in (0, 1e-6]".into(),
            ));
        }
        let disk_case = self.case == "radial_step" || self.case == "disk_smooth";
        let square_case = self.case == "square_cos_cosh";
        if (disk_case && self.domain != DomainKind::Disk)
            || (square_case && self.domain != DomainKind::Square)
        {
            return Err(FoslsError::InvalidConfig(format!(
                "case `{}` does not match the requested domain",
                self.case
            )));
        }
        Ok(())
    }
}

/// Mesh of the requested domain at a refinement level (the square coarse
/// mesh is n = 1, doubled per level).
pub fn mesh_for_level(domain: DomainKind, level: usize) -> Result<Mesh> {
    match domain {
        DomainKind::Square => make_square_mesh(1 << level),
        DomainKind::Disk => make_disk_mesh(level),
    }
}

/// Per-norm fitted slopes with the least-squares fit quality.
#[derive(Debug, Clone, Copy)]
pub struct FittedSlopes {
    pub u: f64,
    pub grad_u: f64,
    pub phi: f64,
    pub phi_n: f64,
    pub div_phi: f64,
    pub b: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub mode: StudyMode,
    /// Abscissas: mesh sizes h (h-mode) or degrees p (p-mode).
    pub xs: Vec<f64>,
    pub rows: Vec<ErrorReport>,
    pub fitted: FittedSlopes,
    pub predicted: RateExponents,
    pub fit_window: usize,
    /// Data regularity of the study case (infinite for smooth cases).
    pub regularity: f64,
    /// Approximation ceiling of the employed spaces.
    pub best_possible: RateExponents,
}

/// Ordinary least squares on (ln x, ln y) over the final `window` points.
/// Returns (slope, r²). For h-studies the slope convention is positive for
/// decreasing errors: slope of ln err against ln h.
pub fn fit_loglog(xs: &[f64], ys: &[f64], window: usize) -> (f64, f64) {
    let n = xs.len();
    let w = window.min(n);
    if w < 2 {
        return (f64::NAN, f64::NAN);
    }
    let lx: Vec<f64> = xs[n - w..].iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys[n - w..].iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / w as f64;
    let my = ly.iter().sum::<f64>() / w as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, r2)
}

fn fit_all(xs: &[f64], rows: &[ErrorReport], window: usize) -> FittedSlopes {
    let pick = |f: fn(&ErrorReport) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let (u, r2) = fit_loglog(xs, &pick(|r| r.err_u_l2), window);
    let (grad_u, _) = fit_loglog(xs, &pick(|r| r.err_grad_u), window);
    let (phi, _) = fit_loglog(xs, &pick(|r| r.err_phi_l2), window);
    let (phi_n, _) = fit_loglog(xs, &pick(|r| r.err_phi_n), window);
    let (div_phi, _) = fit_loglog(xs, &pick(|r| r.err_div_phi), window);
    let (b, _) = fit_loglog(xs, &pick(|r| r.err_b), window);
    FittedSlopes {
        u,
        grad_u,
        phi,
        phi_n,
        div_phi,
        b,
        r_squared: r2,
    }
}

/// Solve one discrete problem and measure its errors.
pub fn solve_level(
    mesh: &Mesh,
    config: &StudyConfig,
    p_s: usize,
    p_v: usize,
) -> Result<ErrorReport> {
    let exact = manufactured(&config.case, config.gamma, config.alpha)?;
    let vspace = VectorSpace::new(mesh, config.family, p_v);
    let sspace = ScalarSpace::new(mesh, p_s);
    let quad = QuadConfig::for_degrees(p_s, p_v);
    let (a, rhs) = assemble_fosls(mesh, &vspace, &sspace, &exact.problem, &quad)?;
    let x = solve_spd(&a, &rhs, &config.solver)?;
    let sol = FoslsSolution::from_block_vector(vspace.n_dofs(), &x);
    compute_errors(mesh, &vspace, &sspace, &sol, &exact, &quad)
}

/// h-version study: uniform refinements at fixed degrees.
pub fn run_h_study(config: &StudyConfig) -> Result<RateTable> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    for level in 0..config.levels {
        let mesh = mesh_for_level(config.domain, level)?;
        let report = solve_level(&mesh, config, config.p_s, config.p_v).map_err(|e| {
            FoslsError::StudyLevel {
                level,
                source: Box::new(e),
            }
        })?;
        xs.push(report.h);
        rows.push(report);
    }
    let fitted = fit_all(&xs, &rows, config.fit_window);
    let predicted =
        predicted_exponents(config.family, config.p_s, config.p_v, config.regularity);
    let best_possible =
        best_possible_exponents(config.family, config.p_s, config.p_v, config.regularity);
    Ok(RateTable {
        mode: StudyMode::HRefinement,
        xs,
        rows,
        fitted,
        predicted,
        fit_window: config.fit_window,
        regularity: config.regularity,
        best_possible,
    })
}

/// p-version study on the fixed coarse mesh with p_s = p_v = p.
pub fn run_p_study(config: &StudyConfig) -> Result<RateTable> {
    config.validate()?;
    if config.family != VectorFamily::RaviartThomas {
        return Err(FoslsError::InvalidConfig(
            "the p-study uses the Raviart-Thomas family".into(),
        ));
    }
    let mesh = mesh_for_level(config.domain, 0)?;
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    for p in 1..=config.p_max {
        let report =
            solve_level(&mesh, config, p, p).map_err(|e| FoslsError::StudyLevel {
                level: p,
                source: Box::new(e),
            })?;
        xs.push(p as f64);
        rows.push(report);
    }
    let window = 4.min(config.p_max);
    let fitted = fit_all(&xs, &rows, window);
    // for finite regularity the guaranteed exponents are the same for all
    // p >= 2; smooth cases have no p-uniform algebraic ceiling, so anchor
    // at the largest degree
    let anchor = if config.regularity.is_finite() {
        2
    } else {
        config.p_max
    };
    let predicted = predicted_exponents(config.family, anchor, anchor, config.regularity);
    let best_possible =
        best_possible_exponents(config.family, anchor, anchor, config.regularity);
    Ok(RateTable {
        mode: StudyMode::PElevation,
        xs,
        rows,
        fitted,
        predicted,
        fit_window: window,
        regularity: config.regularity,
        best_possible,
    })
}

/// Rate-floor violations: fitted slope more than 0.15 below the guaranteed
/// exponent (h-mode), or decay shallower than exponent - 0.15 (p-mode).
///
/// A p-elevation study of a finite-regularity case is still pre-asymptotic
/// at desk-scale degrees, so only the desk-scale thresholds are enforced
/// there: scalar decay at least p^-2 and trace decay at least p^-1.
pub fn rate_floor_violations(table: &RateTable) -> Vec<String> {
    let mut out = Vec::new();
    if table.mode == StudyMode::PElevation && table.regularity.is_finite() {
        if !(table.fitted.u <= -2.0) {
            out.push(format!(
                "err_u_l2: fitted p-slope {:.3} above the -2.0 threshold",
                table.fitted.u
            ));
        }
        if !(table.fitted.phi_n <= -1.0) {
            out.push(format!(
                "err_phi_n_l2: fitted p-slope {:.3} above the -1.0 threshold",
                table.fitted.phi_n
            ));
        }
        return out;
    }
    let pairs = [
        ("err_u_l2", table.fitted.u, table.predicted.u),
        ("err_grad_u_l2", table.fitted.grad_u, table.predicted.grad_u),
        ("err_phi_l2", table.fitted.phi, table.predicted.phi),
        ("err_phi_n_l2", table.fitted.phi_n, table.predicted.phi_n),
        ("err_div_phi_l2", table.fitted.div_phi, table.predicted.div_phi),
    ];
    for (name, fitted, predicted) in pairs {
        if !predicted.is_finite() || !fitted.is_finite() {
            continue;
        }
        let ok = match table.mode {
            StudyMode::HRefinement => fitted >= predicted - 0.15,
            StudyMode::PElevation => fitted <= -(predicted - 0.15),
        };
        if !ok {
            out.push(format!(
                "{name}: fitted {fitted:.3} vs guaranteed {predicted:.3}"
            ));
        }
    }
    out
}
