//! Grid covers of `X̃ₙ` and `P₀,I` and packings of `λ⁻ⁿΣₙ`.
//!
//! All three sets are handled in the first quadrant on a dyadic grid with the
//! origin at 0. A grid of exponent `e` has square cells of side `h = 2^{1-e}`,
//! each inscribed in a disk of radius `r = 2^{-e}√2`. Cells are tested through
//! their circumscribed disks, so a cell left out of an upper cover contains no
//! point of the target, and a cell kept in a packing lies inside it.
//!
//! Every build is hierarchical: it starts from the trivial grid at
//! [`BASE_EXP`] and refines one level at a time. For upper covers only the
//! children of retained cells are tested; for packings the children of included
//! cells are included (their disks lie in the parent disk) and all other cells
//! are tested. A two-stage build therefore reproduces the direct build exactly.

use crate::arith::{add_up, Ball};
use crate::domain::{DomainSet, Geometry, P_IN, P_OUT};
use crate::map::{FeigenbaumMap, OrbitState, StepPolicy};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::path::Path;
use thiserror::Error;

/// Coarsest level of every hierarchical build.
pub const BASE_EXP: u32 = 2;
pub const DEFAULT_MAX_STEPS: u32 = 20;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("malformed cover file: {0}")]
    Format(String),
    #[error("cover parameters do not match: {0}")]
    Mismatch(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    Upper,
    Packing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Xtilde,
    Sigma,
    P0,
}

impl Target {
    pub fn kind(self) -> CoverKind {
        match self {
            Target::Sigma => CoverKind::Packing,
            Target::Xtilde | Target::P0 => CoverKind::Upper,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Xtilde => "xtilde",
            Target::Sigma => "sigma",
            Target::P0 => "p0",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "xtilde" => Some(Target::Xtilde),
            "sigma" => Some(Target::Sigma),
            "p0" => Some(Target::P0),
            _ => None,
        }
    }

    /// Upper-right corner of the first-quadrant box the grid must cover,
    /// rounded up.
    fn extent(self, map: &FeigenbaumMap) -> (f64, f64) {
        match self {
            Target::Xtilde => {
                let l = map.lambda.pow(1);
                let hi = add_up(l.center.re, l.radius);
                ((P_OUT.0 * hi).next_up(), (P_OUT.1 * hi).next_up())
            }
            Target::Sigma | Target::P0 => P_OUT,
        }
    }
}

impl fmt::Display for CoverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverKind::Upper => "upper",
            CoverKind::Packing => "packing",
        })
    }
}

/// A dyadic grid anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub spacing_exp: u32,
    pub nx: u32,
    pub ny: u32,
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

impl GridSpec {
    /// The grid of exponent `e` nested in the base grid covering the target box.
    pub fn for_target(target: Target, spacing_exp: u32, map: &FeigenbaumMap) -> Result<Self, CoverError> {
        if spacing_exp < BASE_EXP || spacing_exp > 40 {
            return Err(CoverError::Params(format!("spacing exponent {} outside {}..=40", spacing_exp, BASE_EXP)));
        }
        let (w, h) = target.extent(map);
        let h0 = pow2(1 - BASE_EXP as i32);
        let shift = spacing_exp - BASE_EXP;
        Ok(GridSpec {
            spacing_exp,
            nx: ((w / h0).ceil() as u32) << shift,
            ny: ((h / h0).ceil() as u32) << shift,
        })
    }

    /// Cell side `h`, exact.
    pub fn spacing(&self) -> f64 {
        pow2(1 - self.spacing_exp as i32)
    }

    /// Upper bound on the circumscribed radius `h√2/2`.
    pub fn radius(&self) -> f64 {
        std::f64::consts::SQRT_2.next_up() * pow2(-(self.spacing_exp as i32))
    }

    /// Exact cell centre.
    pub fn center(&self, ix: u32, iy: u32) -> Complex64 {
        let h = self.spacing();
        Complex64::new((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h)
    }

    /// Lower-left corner of the cell, exact.
    pub fn corner(&self, ix: u32, iy: u32) -> Complex64 {
        let h = self.spacing();
        Complex64::new(ix as f64 * h, iy as f64 * h)
    }

    pub fn refined(&self) -> GridSpec {
        GridSpec { spacing_exp: self.spacing_exp + 1, nx: self.nx * 2, ny: self.ny * 2 }
    }

    pub fn cell_count(&self) -> u64 {
        self.nx as u64 * self.ny as u64
    }
}

/// Parameters fixing what a cover certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverParams {
    pub target: Target,
    /// Level `n` for `X̃ₙ`/`Σₙ`; the depth `m` for `P₀`.
    pub n: u32,
    /// First-return steps `K` (unused for `P₀`).
    pub max_steps: u32,
    pub spacing_exp: u32,
}

impl CoverParams {
    pub fn validate(&self) -> Result<(), CoverError> {
        match self.target {
            Target::Xtilde | Target::Sigma if self.n < 3 => Err(CoverError::Params("n must be at least 3".into())),
            Target::P0 if !(1..=8).contains(&self.n) => Err(CoverError::Params("m must be in 1..=8".into())),
            _ if self.n > 40 => Err(CoverError::Params("n too large".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub kind: CoverKind,
    pub target: Target,
    pub n: u32,
    pub max_steps: u32,
    pub grid: GridSpec,
    /// Sorted, distinct `(ix, iy)` cell indices.
    pub cells: Vec<(u32, u32)>,
    pub checksum: String,
}

/// Total area of a cover's cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaBound {
    pub cell_count: u64,
    pub cell_area: f64,
    /// Upper bound for covers, lower bound for packings.
    pub bound: f64,
}

impl Cover {
    /// The level-`BASE_EXP` cover from which every build starts: all cells for
    /// upper covers, none for packings.
    pub fn trivial(params: &CoverParams, map: &FeigenbaumMap) -> Result<Cover, CoverError> {
        params.validate()?;
        let grid = GridSpec::for_target(params.target, BASE_EXP, map)?;
        let kind = params.target.kind();
        let cells = match kind {
            CoverKind::Upper => (0..grid.nx).flat_map(|ix| (0..grid.ny).map(move |iy| (ix, iy))).collect(),
            CoverKind::Packing => Vec::new(),
        };
        Ok(Cover {
            kind,
            target: params.target,
            n: params.n,
            max_steps: params.max_steps,
            grid,
            cells,
            checksum: map.poly.checksum.clone(),
        })
    }

    pub fn area_bound(&self) -> AreaBound {
        let h = self.grid.spacing();
        // Powers of two and counts below 2^53: the product is exact.
        let cell_area = h * h;
        let count = self.cells.len() as u64;
        AreaBound { cell_count: count, cell_area, bound: count as f64 * cell_area }
    }

    pub fn contains_cell(&self, ix: u32, iy: u32) -> bool {
        self.cells.binary_search(&(ix, iy)).is_ok()
    }

    /// Whether the point lies in the closed union of the cover's cells.
    pub fn covers_point(&self, z: Complex64) -> bool {
        let h = self.grid.spacing();
        let (fx, fy) = (z.re / h, z.im / h);
        if fx < 0.0 || fy < 0.0 {
            return false;
        }
        let (ix, iy) = (fx.floor() as u32, fy.floor() as u32);
        // Points on cell edges belong to both neighbours.
        let xs: &[u32] = if fx == fx.floor() && ix > 0 { &[ix - 1, ix] } else { &[ix] };
        let ys: &[u32] = if fy == fy.floor() && iy > 0 { &[iy - 1, iy] } else { &[iy] };
        xs.iter().any(|&a| ys.iter().any(|&b| self.contains_cell(a, b)))
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# feigencert cover");
        let _ = writeln!(s, "kind {}", self.kind);
        let _ = writeln!(s, "target {}", self.target.name());
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "K {}", self.max_steps);
        let _ = writeln!(s, "origin 0 0");
        let _ = writeln!(s, "spacing_exp {}", self.grid.spacing_exp);
        let _ = writeln!(s, "spacing {:e}", self.grid.spacing());
        let _ = writeln!(s, "extent {} {}", self.grid.nx, self.grid.ny);
        let _ = writeln!(s, "coeff_checksum {}", self.checksum);
        let _ = writeln!(s, "cells {}", self.cells.len());
        for (ix, iy) in &self.cells {
            let _ = writeln!(s, "{} {}", ix, iy);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Cover, CoverError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let mut field = |key: &str| -> Result<String, CoverError> {
            let line = lines.next().ok_or_else(|| CoverError::Format(format!("missing {}", key)))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| CoverError::Format(format!("expected {}, found {:?}", key, line)))
        };
        let num = |v: &str, what: &str| -> Result<u32, CoverError> {
            v.parse().map_err(|_| CoverError::Format(format!("bad {}: {:?}", what, v)))
        };
        let kind = match field("kind")?.as_str() {
            "upper" => CoverKind::Upper,
            "packing" => CoverKind::Packing,
            k => return Err(CoverError::Format(format!("unknown kind {:?}", k))),
        };
        let tname = field("target")?;
        let target = Target::parse(&tname).ok_or_else(|| CoverError::Format(format!("unknown target {:?}", tname)))?;
        if target.kind() != kind {
            return Err(CoverError::Format("kind does not match target".into()));
        }
        let n = num(&field("n")?, "n")?;
        let max_steps = num(&field("K")?, "K")?;
        if field("origin")? != "0 0" {
            return Err(CoverError::Format("only the origin 0 0 is supported".into()));
        }
        let spacing_exp = num(&field("spacing_exp")?, "spacing_exp")?;
        let spacing: f64 =
            field("spacing")?.parse().map_err(|_| CoverError::Format("bad spacing".into()))?;
        if spacing != pow2(1 - spacing_exp as i32) {
            return Err(CoverError::Format("spacing does not match spacing_exp".into()));
        }
        let ext = field("extent")?;
        let (a, b) = ext.split_once(' ').ok_or_else(|| CoverError::Format("bad extent".into()))?;
        let grid = GridSpec { spacing_exp, nx: num(a, "extent")?, ny: num(b.trim(), "extent")? };
        let checksum = field("coeff_checksum")?;
        let count = num(&field("cells")?, "cell count")? as usize;
        let mut cells = Vec::with_capacity(count);
        for line in lines {
            let (a, b) = line.trim().split_once(' ').ok_or_else(|| CoverError::Format(format!("bad cell line {:?}", line)))?;
            let cell = (num(a, "ix")?, num(b.trim(), "iy")?);
            if cell.0 >= grid.nx || cell.1 >= grid.ny {
                return Err(CoverError::Format(format!("cell {:?} outside the extent", cell)));
            }
            if cells.last().is_some_and(|last| *last >= cell) {
                return Err(CoverError::Format("cells are not sorted and distinct".into()));
            }
            cells.push(cell);
        }
        if cells.len() != count {
            return Err(CoverError::Format(format!("expected {} cells, found {}", count, cells.len())));
        }
        Ok(Cover { kind, target, n, max_steps, grid, cells, checksum })
    }

    pub fn save(&self, path: &Path) -> Result<(), CoverError> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Cover, CoverError> {
        Cover::parse(&std::fs::read_to_string(path)?)
    }
}

/// Counters collected during a build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BuildStats {
    pub cells_tested: u64,
    pub levels: u32,
}

/// Everything a cell test needs.
pub struct CellTester<'a> {
    pub map: &'a FeigenbaumMap,
    pub geom: &'a Geometry,
    pub n: u32,
    pub max_steps: u32,
    capture: DomainSet,
    policy: StepPolicy,
    lambda_n_upper: f64,
}

/// Outer approximation of the capture set `W̃ₙ`.
pub fn capture_set(g: &Geometry, n: u32) -> DomainSet {
    match n {
        // W̃₃ = W¹ and W̃ₙ ⊂ W⁽ⁿ⁻¹⁾.
        0..=3 => g.w_out.scaled(1),
        4 | 5 => g.w_out.scaled(n as i32 - 1),
        // W̃ₙ ⊂ λ^{n-6} W̃₆.
        _ => g.wtilde6.scaled(n as i32 - 6),
    }
}

/// Outcome of following one orbit until it certifiably leaves `H¹`.
enum Escape {
    /// Certified outside `Ĥout¹` at this state, every earlier state certified
    /// outside the capture set.
    At(OrbitState),
    /// The orbit may have met the capture set, or 0.
    Captured,
    /// No certified exit within `K` steps.
    Exhausted,
    /// The map could not be evaluated.
    Failed,
}

impl<'a> CellTester<'a> {
    pub fn new(map: &'a FeigenbaumMap, geom: &'a Geometry, n: u32, max_steps: u32) -> Self {
        CellTester {
            map,
            geom,
            n,
            max_steps,
            capture: capture_set(geom, n),
            // Shell membership is resolved to the certified lower level; the cap
            // keeps steps within the first return from W⁽ⁿ⁻¹⁾.
            policy: StepPolicy { strict: false, max_exponent: Some(n.saturating_sub(2)) },
            lambda_n_upper: {
                let p = map.lambda.pow(n as i32);
                add_up(p.center.re, p.radius)
            },
        }
    }

    /// Accelerated orbit of `state` until it certifiably leaves `H¹`.
    /// `skip_first_capture` exempts the initial point from the capture test.
    fn run_to_escape(&self, mut state: OrbitState, skip_first_capture: bool) -> Escape {
        let g = self.geom;
        for k in 0..self.max_steps {
            let z = state.current;
            if z.contains_zero() {
                return Escape::Captured;
            }
            if !(k == 0 && skip_first_capture) && !self.capture.certainly_outside(&z, &g.lambda) {
                return Escape::Captured;
            }
            // The escape criteria only need some certified exit, not the first
            // one, so undecided membership in H¹ just means iterating on.
            if g.outside_h1_out(&z) {
                return Escape::At(state);
            }
            state = match self.map.first_return_step(&state, g, self.policy) {
                Ok(s) => s,
                Err(_) => return Escape::Failed,
            };
        }
        Escape::Exhausted
    }

    /// Upper-cover test for `X̃ₙ`: whether the disk `D(c, r)` may meet it.
    pub fn xtilde_retains(&self, c: Complex64, r: f64) -> bool {
        match self.run_to_escape(OrbitState::start(Ball::point(c)), false) {
            Escape::At(s) => {
                let bound = 4.0 * r * s.deriv.abs_upper();
                !(self.geom.dist_to_v2star(&s.current) > bound.next_up())
            }
            _ => true,
        }
    }

    /// Packing test for `λ⁻ⁿΣₙ`: whether the disk `D(c, r)` certainly lies in it.
    pub fn sigma_includes(&self, c: Complex64, r: f64) -> bool {
        // The first exit of z from H¹; the capture set plays no role here.
        let mut s = OrbitState::start(Ball::point(c));
        let mut exit = None;
        for _ in 0..self.max_steps {
            if s.current.contains_zero() {
                return false;
            }
            if self.geom.outside_h1_out(&s.current) {
                exit = Some(s);
                break;
            }
            if !self.geom.in_h1_in(&s.current) {
                return false;
            }
            s = match self.map.first_return_step(&s, self.geom, self.policy) {
                Ok(next) => next,
                Err(_) => return false,
            };
        }
        let Some(zk) = exit else { return false };
        // w = λⁿ Fᵏ(z) must lie in W⁽ⁿ⁾ for it to be a point of Yₙ.
        if !self.geom.w_in.certainly_inside(&zk.current, &self.geom.lambda) {
            return false;
        }
        let w = zk.current * self.map.lambda.pow(self.n as i32);
        match self.run_to_escape(OrbitState::start(w), true) {
            Escape::At(e) => {
                // The disk D(λⁿc, λⁿr) is mapped by a branch with derivative
                // DFˡ(w)·DFᵏ(c); Koebe needs R > 4λⁿr·|DFˡ(w)||DFᵏ(c)|.
                let bound = 4.0 * r * (self.lambda_n_upper * e.deriv.abs_upper()).next_up();
                let bound = (bound * zk.deriv.abs_upper()).next_up();
                self.geom.dist_to_v2star(&e.current) > bound.next_up()
            }
            _ => false,
        }
    }

    /// Upper-cover test for `P₀,I` with depth `m`: whether `D(c, t)` may meet it.
    pub fn p0_retains(&self, c: Complex64, t: f64, m: u32) -> bool {
        let g = self.geom;
        // Disks meeting Pin are kept.
        let dx = (c.re - P_IN.0).max(0.0);
        let dy = (c.im - P_IN.1).max(0.0);
        if (dx * dx + dy * dy).sqrt() * (1.0 - 1e-15) <= t {
            return true;
        }
        let lm = self.map.lambda.pow(m as i32);
        let mut b = Ball::new(c, t) * lm;
        let mut q = Ball::from_parts(0.1, 0.1, 0.0) * lm;
        for _ in 1..(1u32 << m) {
            b = match self.map.eval_f(&b) {
                Ok(v) => v,
                Err(_) => return true,
            };
            q = match self.map.eval_f(&q) {
                Ok(v) => v,
                Err(_) => return true,
            };
            if b.contains_zero() {
                return true;
            }
            if g.w_out.certainly_outside(&b, &g.lambda) {
                return false;
            }
            if let Some((sx, sy)) = open_quadrant(&q) {
                if misses_closed_quadrant(&b, sx, sy) {
                    return false;
                }
            }
        }
        true
    }

    /// The test for one cell of the given cover grid.
    fn keep(&self, target: Target, grid: &GridSpec, ix: u32, iy: u32, box_hi: (f64, f64)) -> bool {
        let corner = grid.corner(ix, iy);
        // A cell beyond the open target box contains no point of the target.
        if corner.re >= box_hi.0 || corner.im >= box_hi.1 {
            return false;
        }
        let c = grid.center(ix, iy);
        let r = grid.radius();
        match target {
            Target::Xtilde => self.xtilde_retains(c, r),
            Target::Sigma => self.sigma_includes(c, r),
            Target::P0 => self.p0_retains(c, r, self.n),
        }
    }
}

/// Signs of the open quadrant certainly containing the ball, if any.
fn open_quadrant(b: &Ball) -> Option<(bool, bool)> {
    let r = b.radius;
    if b.center.re.abs() > r && b.center.im.abs() > r {
        Some((b.center.re > 0.0, b.center.im > 0.0))
    } else {
        None
    }
}

/// Whether the ball misses the closed quadrant with the given signs.
fn misses_closed_quadrant(b: &Ball, pos_re: bool, pos_im: bool) -> bool {
    let r = b.radius;
    let off_re = if pos_re { -b.center.re > r } else { b.center.re > r };
    let off_im = if pos_im { -b.center.im > r } else { b.center.im > r };
    off_re || off_im
}

/// Builds a cover directly from the base level.
pub fn build_cover(
    map: &FeigenbaumMap,
    geom: &Geometry,
    params: &CoverParams,
) -> Result<(Cover, BuildStats), CoverError> {
    let start = Cover::trivial(params, map)?;
    refine_to(map, geom, &start, params.spacing_exp)
}

/// Refines an existing cover level by level up to `spacing_exp`.
pub fn refine_to(
    map: &FeigenbaumMap,
    geom: &Geometry,
    from: &Cover,
    spacing_exp: u32,
) -> Result<(Cover, BuildStats), CoverError> {
    if from.checksum != map.poly.checksum {
        return Err(CoverError::Mismatch("coefficient checksum differs".into()));
    }
    if spacing_exp < from.grid.spacing_exp {
        return Err(CoverError::Mismatch(format!(
            "cannot refine spacing exponent {} down to {}",
            from.grid.spacing_exp, spacing_exp
        )));
    }
    let expected = GridSpec::for_target(from.target, from.grid.spacing_exp, map)?;
    if expected != from.grid {
        return Err(CoverError::Mismatch("grid extent is not the standard one for this target".into()));
    }
    let tester = CellTester::new(map, geom, from.n, from.max_steps);
    let box_hi = from.target.extent(map);
    let mut cover = from.clone();
    let mut stats = BuildStats::default();
    while cover.grid.spacing_exp < spacing_exp {
        let (next, tested) = refine_once(&tester, &cover, box_hi);
        stats.cells_tested += tested;
        stats.levels += 1;
        cover = next;
    }
    Ok((cover, stats))
}

fn children(ix: u32, iy: u32) -> [(u32, u32); 4] {
    let (a, b) = (2 * ix, 2 * iy);
    [(a, b), (a, b + 1), (a + 1, b), (a + 1, b + 1)]
}

fn refine_once(tester: &CellTester, cover: &Cover, box_hi: (f64, f64)) -> (Cover, u64) {
    let grid = cover.grid.refined();
    let (inherited, candidates): (Vec<(u32, u32)>, Vec<(u32, u32)>) = match cover.kind {
        CoverKind::Upper => (Vec::new(), cover.cells.iter().flat_map(|&(x, y)| children(x, y)).collect()),
        CoverKind::Packing => {
            let inherited: Vec<_> = cover.cells.iter().flat_map(|&(x, y)| children(x, y)).collect();
            let candidates = (0..cover.grid.nx)
                .flat_map(|ix| (0..cover.grid.ny).map(move |iy| (ix, iy)))
                .filter(|&(ix, iy)| !cover.contains_cell(ix, iy))
                .flat_map(|(x, y)| children(x, y))
                .collect();
            (inherited, candidates)
        }
    };
    let tested = candidates.len() as u64;
    let mut cells: Vec<(u32, u32)> = candidates
        .into_par_iter()
        .filter(|&(ix, iy)| tester.keep(cover.target, &grid, ix, iy, box_hi))
        .collect();
    cells.extend(inherited);
    cells.par_sort_unstable();
    (Cover { grid, cells, ..cover.clone() }, tested)
}
