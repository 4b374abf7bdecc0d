//! The full pipeline: domain checks, covers, the distortion bound and the final
//! inequality `η̃ₙ Mₙ ar(P₀,I) < 1`.

use crate::arith::{div_up, mul_up};
use crate::cover::{self, BuildStats, Cover, CoverError, CoverParams, Target};
use crate::domain::verify::{verify_domain_inclusions, DomainReport, VerifyError};
use crate::domain::{Geometry, P_IN};
use crate::koebe::{m_upper, DistortionError, DistortionReport, Uniformizer};
use crate::map::FeigenbaumMap;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("domain verification could not be completed: {0}")]
    Domain(#[from] VerifyError),
    #[error("domain verification failed; refusing to continue")]
    DomainsFailed,
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// The only place a verdict is decided.
pub fn verdict_for(product: Option<f64>) -> Verdict {
    match product {
        Some(p) if p.is_finite() && p < 1.0 => Verdict::Certified,
        _ => Verdict::NotCertified,
    }
}

#[derive(Debug, Clone)]
pub struct CertifyConfig {
    pub n: u32,
    pub x_spacing_exp: u32,
    pub sigma_spacing_exp: u32,
    pub p0_depth: u32,
    pub p0_spacing_exp: u32,
    pub max_steps: u32,
    /// A coarser cover of `X̃ₙ` to refine instead of starting from scratch.
    pub refine_from: Option<Cover>,
    pub out_dir: Option<PathBuf>,
}

impl CertifyConfig {
    /// Runs in about a minute on one core.
    pub fn desk() -> Self {
        CertifyConfig {
            n: 6,
            x_spacing_exp: 9,
            sigma_spacing_exp: 9,
            p0_depth: 2,
            p0_spacing_exp: 6,
            max_steps: cover::DEFAULT_MAX_STEPS,
            refine_from: None,
            out_dir: None,
        }
    }

    /// `r = 2⁻¹⁷√2` for `X̃₆`, `2⁻¹¹√2` for `Σ₆`, `t = 2⁻⁶√2` for `P₀`.
    pub fn paper() -> Self {
        CertifyConfig { n: 6, x_spacing_exp: 17, sigma_spacing_exp: 11, ..Self::desk() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub coeff_checksum: String,
    pub x_spacing_exp: u32,
    pub sigma_spacing_exp: u32,
    pub p0_depth: u32,
    pub p0_spacing_exp: u32,
    pub max_steps: u32,
    pub x_cells: usize,
    pub sigma_cells: usize,
    pub p0_cells: usize,
    pub domain_checks_passed: bool,
    /// Largest point-image enclosure radius met in the domain checks.
    pub domain_max_error: f64,
    pub m_witness: Option<(f64, f64)>,
    pub dropped_pairs: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Certificate {
    pub n: u32,
    /// Upper bound on `η̃ₙ`, using `ar(P¹₀,I) ≥ λ² ar(Pin)`.
    pub eta_upper: f64,
    /// Upper bound on `Mₙ`; absent when the packing gives no bound.
    pub m_upper: Option<f64>,
    /// Upper bound on `ar(P₀,I)`.
    pub area_p0_upper: f64,
    /// Area of the cover of `X̃ₙ` in the first quadrant.
    pub area_x_upper: f64,
    /// Upper bound on `η̃ₙ Mₙ ar(P₀,I) = ar(X̃ₙ ∩ P¹₀,I) Mₙ / λ²`.
    pub product: Option<f64>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct CertifyOutcome {
    pub certificate: Certificate,
    pub domains: DomainReport,
    pub x_cover: Cover,
    pub sigma_cover: Cover,
    pub p0_cover: Cover,
    pub distortion: DistortionReport,
    pub stats: [BuildStats; 3],
}

/// Lower bound on `λ²`.
fn lambda_sq_lower(map: &FeigenbaumMap) -> f64 {
    let l2 = map.lambda.pow(2);
    (l2.center.re - l2.radius).next_down()
}

/// Upper bound on `η̃ₙ` from the area of a first-quadrant cover of `X̃ₙ`.
pub fn eta_upper(map: &FeigenbaumMap, area_x: f64) -> f64 {
    let pin_lower = (P_IN.0 * P_IN.1).next_down();
    div_up(area_x, (lambda_sq_lower(map) * pin_lower).next_down())
}

pub fn run_certify(map: &FeigenbaumMap, geom: &Geometry, config: &CertifyConfig) -> Result<CertifyOutcome, CertifyError> {
    let domains = verify_domain_inclusions(map, geom)?;
    if !domains.passed {
        return Err(CertifyError::DomainsFailed);
    }
    let x_params = CoverParams {
        target: Target::Xtilde,
        n: config.n,
        max_steps: config.max_steps,
        spacing_exp: config.x_spacing_exp,
    };
    let (x_cover, x_stats) = match &config.refine_from {
        Some(c) => {
            if c.target != Target::Xtilde || c.n != config.n || c.max_steps != config.max_steps {
                return Err(CoverError::Mismatch("refinement source is not a cover of the same X̃ₙ".into()).into());
            }
            cover::refine_to(map, geom, c, config.x_spacing_exp)?
        }
        None => cover::build_cover(map, geom, &x_params)?,
    };
    let (sigma_cover, s_stats) = cover::build_cover(
        map,
        geom,
        &CoverParams { target: Target::Sigma, spacing_exp: config.sigma_spacing_exp, ..x_params },
    )?;
    let (p0_cover, p_stats) = cover::build_cover(
        map,
        geom,
        &CoverParams { target: Target::P0, n: config.p0_depth, max_steps: 0, spacing_exp: config.p0_spacing_exp },
    )?;
    let distortion = m_upper(&Uniformizer::new(map), &sigma_cover, &p0_cover)?;

    let area_x = x_cover.area_bound().bound;
    let product = distortion.m_upper.map(|m| mul_up(div_up(area_x, lambda_sq_lower(map)), m));
    let certificate = Certificate {
        n: config.n,
        eta_upper: eta_upper(map, area_x),
        m_upper: distortion.m_upper,
        area_p0_upper: p0_cover.area_bound().bound,
        area_x_upper: area_x,
        product,
        verdict: verdict_for(product),
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            coeff_checksum: map.poly.checksum.clone(),
            x_spacing_exp: config.x_spacing_exp,
            sigma_spacing_exp: config.sigma_spacing_exp,
            p0_depth: config.p0_depth,
            p0_spacing_exp: config.p0_spacing_exp,
            max_steps: config.max_steps,
            x_cells: x_cover.cells.len(),
            sigma_cells: sigma_cover.cells.len(),
            p0_cells: p0_cover.cells.len(),
            domain_checks_passed: domains.passed,
            domain_max_error: domains.checks.iter().map(|c| c.error_bound).fold(0.0, f64::max),
            m_witness: distortion.m_upper.map(|_| distortion.witness),
            dropped_pairs: distortion.dropped_pairs,
        },
    };
    let outcome = CertifyOutcome {
        certificate,
        domains,
        x_cover,
        sigma_cover,
        p0_cover,
        distortion,
        stats: [x_stats, s_stats, p_stats],
    };
    if let Some(dir) = &config.out_dir {
        write_outcome(dir, &outcome)?;
    }
    Ok(outcome)
}

pub fn write_outcome(dir: &Path, o: &CertifyOutcome) -> Result<(), CertifyError> {
    std::fs::create_dir_all(dir)?;
    o.x_cover.save(&dir.join("cover_xtilde.txt"))?;
    o.sigma_cover.save(&dir.join("cover_sigma.txt"))?;
    o.p0_cover.save(&dir.join("cover_p0.txt"))?;
    std::fs::write(dir.join("domains.json"), serde_json::to_string_pretty(&o.domains)?)?;
    std::fs::write(dir.join("distortion.json"), serde_json::to_string_pretty(&o.distortion)?)?;
    std::fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&o.certificate)?)?;
    Ok(())
}

/// One line of the recursive-estimate table
/// `η̃ₙ₊ₘ ≤ Mₙ,ₘ ar(P₀,I) η̃ₙ η̃ₘ₊₁`.
#[derive(Debug, Clone, Serialize)]
pub struct RecursiveRow {
    pub n: u32,
    pub m: u32,
    pub lhs_eta_upper: f64,
    pub eta_n_upper: f64,
    pub eta_m1_upper: f64,
    /// Upper bound on `Mₙ,ₘ`; `None` when no packing of `Σₙ,ₘ` is certified.
    pub m_nm_upper: Option<f64>,
    pub area_p0_upper: f64,
    pub rhs_upper: Option<f64>,
    /// Cells of the `Σₙ` packing at this resolution.
    pub sigma_n_cells: usize,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecursiveReport {
    pub spacing_exp: u32,
    pub max_steps: u32,
    /// `(n, η̃ₙ upper bound)` for every level used.
    pub eta_table: Vec<(u32, f64)>,
    pub eta_monotone: bool,
    pub rows: Vec<RecursiveRow>,
    pub violations: usize,
}

/// Relative slack allowed before an inversion counts as a violation.
pub const RECURSIVE_SLACK: f64 = 1e-9;

/// Tabulates both sides of the recursive estimate from covers at one resolution.
///
/// `Mₙ,ₘ` is bounded only from a packing of `λ⁻ⁿΣₙ,ₘ`; the escape criterion
/// certifies packings of `Σₙ` and no sub-packing avoiding `W⁽ⁿ⁺ᵐ⁾` is built, so
/// the right-hand side is reported unbounded.
pub fn report_recursive_estimate(
    map: &FeigenbaumMap,
    geom: &Geometry,
    pairs: &[(u32, u32)],
    spacing_exp: u32,
    max_steps: u32,
    p0: &Cover,
) -> Result<RecursiveReport, CertifyError> {
    let mut levels: Vec<u32> = pairs.iter().flat_map(|&(n, m)| [n, m + 1, n + m]).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut eta_table = Vec::new();
    for &k in &levels {
        let params = CoverParams { target: Target::Xtilde, n: k, max_steps, spacing_exp };
        let (c, _) = cover::build_cover(map, geom, &params)?;
        eta_table.push((k, eta_upper(map, c.area_bound().bound)));
    }
    let eta = |k: u32| eta_table.iter().find(|e| e.0 == k).map(|e| e.1).unwrap_or(f64::INFINITY);
    let eta_monotone = eta_table.windows(2).all(|w| w[1].1 <= w[0].1);
    let area_p0 = p0.area_bound().bound;
    let mut rows = Vec::new();
    for &(n, m) in pairs {
        let (sigma, _) = cover::build_cover(
            map,
            geom,
            &CoverParams { target: Target::Sigma, n, max_steps, spacing_exp },
        )?;
        let m_nm_upper: Option<f64> = None;
        let rhs_upper = m_nm_upper.map(|mm| mul_up(mul_up(mul_up(mm, area_p0), eta(n)), eta(m + 1)));
        let lhs = eta(n + m);
        let violation = rhs_upper.is_some_and(|r| lhs > r * (1.0 + RECURSIVE_SLACK));
        rows.push(RecursiveRow {
            n,
            m,
            lhs_eta_upper: lhs,
            eta_n_upper: eta(n),
            eta_m1_upper: eta(m + 1),
            m_nm_upper,
            area_p0_upper: area_p0,
            rhs_upper,
            sigma_n_cells: sigma.cells.len(),
            violation,
        });
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(RecursiveReport { spacing_exp, max_steps, eta_table, eta_monotone, rows, violations })
}
