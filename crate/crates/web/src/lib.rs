//! Browser demo: orbit explorer, small cover builds and the distortion bound.
//!
//! Each export returns a JSON (or SVG) string so the page needs no glue beyond
//! `JSON.parse`. The plain functions are also callable natively.

use feigencert::cover::{self, CoverParams, Target};
use feigencert::domain::Geometry;
use feigencert::koebe::Uniformizer;
use feigencert::map::{OrbitState, StepPolicy};
use feigencert::plot::render_svg;
use feigencert::{Ball, FeigenbaumMap};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Finest grid the page may request; finer builds take too long in a tab.
pub const MAX_WEB_SPACING_EXP: u32 = 8;

#[derive(Serialize)]
struct OrbitPoint {
    re: f64,
    im: f64,
    radius: f64,
    /// Certified shell level of the point, `None` outside `W`.
    shell: Option<u32>,
    iterates: u64,
    deriv_abs: f64,
}

#[derive(Serialize)]
struct OrbitTrace {
    points: Vec<OrbitPoint>,
    /// Why the trace stopped early, if it did.
    stopped: Option<String>,
}

/// Accelerated first-return orbit of a point, as JSON.
pub fn orbit_json(re: f64, im: f64, steps: u32) -> String {
    let map = FeigenbaumMap::global();
    let geom = Geometry::global();
    let policy = StepPolicy { strict: false, max_exponent: None };
    let mut state = OrbitState::start(Ball::point(Complex64::new(re, im)));
    let mut points = Vec::new();
    let mut stopped = None;
    for k in 0..=steps {
        let z = state.current;
        points.push(OrbitPoint {
            re: z.center.re,
            im: z.center.im,
            radius: z.radius,
            shell: geom.max_wn_shell(&z).certified_level(),
            iterates: state.total_iterates,
            deriv_abs: state.deriv.abs_upper(),
        });
        if k == steps {
            break;
        }
        if geom.outside_w_out_shell(&z, 0) {
            stopped = Some("left W".to_string());
            break;
        }
        match map.first_return_step(&state, geom, policy) {
            Ok(s) => state = s,
            Err(e) => {
                stopped = Some(e.to_string());
                break;
            }
        }
    }
    serde_json::to_string(&OrbitTrace { points, stopped }).expect("orbit serializes")
}

/// Builds a small cover and renders it as SVG.
pub fn cover_svg(target: &str, n: u32, spacing_exp: u32) -> Result<String, String> {
    let target = match target {
        "xtilde" => Target::Xtilde,
        "sigma" => Target::Sigma,
        "p0" => Target::P0,
        other => return Err(format!("unknown target {other}")),
    };
    if spacing_exp > MAX_WEB_SPACING_EXP {
        return Err(format!("spacing exponent above {MAX_WEB_SPACING_EXP} is too slow for the browser"));
    }
    let geom = Geometry::global();
    let params = CoverParams { target, n, max_steps: cover::DEFAULT_MAX_STEPS, spacing_exp };
    let (c, _) = cover::build_cover(FeigenbaumMap::global(), geom, &params).map_err(|e| e.to_string())?;
    Ok(render_svg(Some(&c), geom))
}

#[derive(Serialize)]
struct DistortionPoint {
    rho_lower: f64,
    rho_upper: f64,
    c_upper: f64,
}

/// Pseudo-hyperbolic distance and distortion bound between two points, as JSON.
pub fn distortion_json(zre: f64, zim: f64, wre: f64, wim: f64) -> Result<String, String> {
    let u = Uniformizer::new(FeigenbaumMap::global());
    let z = Ball::point(Complex64::new(zre, zim));
    let w = Ball::point(Complex64::new(wre, wim));
    let (rho_lower, rho_upper) = u.pseudo_hyperbolic(&z, &w).map_err(|e| e.to_string())?;
    let c_upper = u.distortion_upper(&z, &w).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&DistortionPoint { rho_lower, rho_upper, c_upper }).expect("serializes"))
}

#[wasm_bindgen]
pub fn orbit(re: f64, im: f64, steps: u32) -> String {
    orbit_json(re, im, steps.min(200))
}

#[wasm_bindgen]
pub fn cover(target: &str, n: u32, spacing_exp: u32) -> Result<String, JsValue> {
    cover_svg(target, n, spacing_exp).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn distortion(zre: f64, zim: f64, wre: f64, wim: f64) -> Result<String, JsValue> {
    distortion_json(zre, zim, wre, wim).map_err(|e| JsValue::from_str(&e))
}
