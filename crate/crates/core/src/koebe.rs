//! Distortion bounds on the slit plane `ℂ_λ = ℂ ∖ ((-∞, a] ∪ [b, ∞))` with
//! `a = -1/λ`, `b = F(λ)/λ²`.
//!
//! `ψ(z) = √((z-a)/(b-z))` maps `ℂ_λ` onto the right half-plane, and
//! `H_w(z) = (ψ(z) - ψ(w)) / (ψ(z) + conj ψ(w))` onto the unit disk with
//! `H_w(w) = 0`. Koebe distortion for univalent maps of the disk gives
//!
//! ```text
//! C(z, w) ≤ (1 + |H_w(z)|)/(1 - |H_w(z)|)³ · |H_w'(z)| / |H_w'(w)|.
//! ```

use crate::arith::{add_up, div_up, mul_up, ArithError, Ball};
use crate::cover::{Cover, CoverKind, Target};
use crate::domain::SlitPlane;
use crate::map::FeigenbaumMap;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DistortionError {
    #[error("point {0} is not certified inside the slit plane")]
    OffDomain(Complex64),
    #[error("pseudo-hyperbolic distance not certified below 1")]
    Unbounded,
    #[error("{0}")]
    Arith(#[from] ArithError),
    #[error("wrong cover: {0}")]
    WrongCover(String),
}

/// `ψ` and the data of one point that the bounds consume.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub z: Complex64,
    pub psi: Ball,
    /// Bounds on `|ψ'(z)|`.
    pub dpsi_lo: f64,
    pub dpsi_hi: f64,
    /// Lower bound on the distance from `z` to the slits.
    pub slit_dist: f64,
}

/// The uniformisation of `ℂ_λ`.
#[derive(Debug, Clone)]
pub struct Uniformizer {
    pub a: Ball,
    pub b: Ball,
    slits: SlitPlane,
}

impl Uniformizer {
    pub fn new(map: &FeigenbaumMap) -> Self {
        let a = -map.lambda.pow(-1);
        let b = map.constants.slit_right;
        Uniformizer { a, b, slits: SlitPlane { left_slit_end: a, right_slit_start: b } }
    }

    pub fn psi(&self, z: &Ball) -> Result<Ball, DistortionError> {
        Ok(self.psi_parts(z)?.0)
    }

    /// `ψ(z)` and `ψ'(z) = (b - a) / (2 ψ(z) (b - z)²)`.
    fn psi_parts(&self, z: &Ball) -> Result<(Ball, Ball), DistortionError> {
        if !self.slits.certainly_avoids(z) {
            return Err(DistortionError::OffDomain(z.center));
        }
        let bz = self.b - *z;
        let q = (*z - self.a).div(&bz)?;
        let psi = q.sqrt()?;
        let d = (self.b - self.a).div(&(psi.scale(2.0) * bz.sqr()))?;
        Ok((psi, d))
    }

    pub fn node(&self, z: Complex64) -> Result<Node, DistortionError> {
        let (psi, d) = self.psi_parts(&Ball::point(z))?;
        if psi.center.re - psi.radius <= 0.0 {
            return Err(DistortionError::OffDomain(z));
        }
        let (dpsi_lo, dpsi_hi) = d.abs_bounds();
        Ok(Node { z, psi, dpsi_lo, dpsi_hi, slit_dist: self.slits.dist_lower(&Ball::point(z)) })
    }

    /// Certified enclosure `(lo, hi)` of `|H_w(z)|`.
    pub fn pseudo_hyperbolic(&self, z: &Ball, w: &Ball) -> Result<(f64, f64), DistortionError> {
        let p = self.psi(z)?;
        let q = self.psi(w)?;
        let h = (p - q).div(&(p + q.conj()))?;
        let (lo, hi) = h.abs_bounds();
        Ok((lo, hi.min(1.0)))
    }

    /// Upper bound on `C(z, w)`.
    pub fn distortion_upper(&self, z: &Ball, w: &Ball) -> Result<f64, DistortionError> {
        let nz = self.node_ball(z)?;
        let nw = self.node_ball(w)?;
        pair_bound(&nz, &nw).ok_or(DistortionError::Unbounded)
    }

    fn node_ball(&self, z: &Ball) -> Result<Node, DistortionError> {
        let (psi, d) = self.psi_parts(z)?;
        if psi.center.re - psi.radius <= 0.0 {
            return Err(DistortionError::OffDomain(z.center));
        }
        let (dpsi_lo, dpsi_hi) = d.abs_bounds();
        Ok(Node { z: z.center, psi, dpsi_lo, dpsi_hi, slit_dist: self.slits.dist_lower(z) })
    }
}

/// `(1 + x)/(1 - x)³`, rounded up; `None` unless `x < 1`.
pub fn koebe_factor(x: f64) -> Option<f64> {
    if !(0.0..1.0).contains(&x) {
        return None;
    }
    let one_minus = (1.0 - x).next_down();
    if one_minus <= 0.0 {
        return None;
    }
    let cube = (one_minus * one_minus).next_down() * one_minus;
    Some(div_up(add_up(1.0, x), cube.next_down()))
}

/// Upper bound on `C(z, w)` from precomputed nodes; `None` when `|H_w(z)|` is
/// not certified below 1.
pub fn pair_bound(z: &Node, w: &Node) -> Option<f64> {
    let p = z.psi;
    let q = w.psi;
    let num = p - q;
    let den = p + q.conj();
    let (den_lo, _) = den.abs_bounds();
    if den_lo <= 0.0 {
        return None;
    }
    let h = div_up(num.abs_upper(), den_lo);
    let k = koebe_factor(h)?;
    // |H_w'(z)| / |H_w'(w)| = |ψ'(z)| (2 Re ψ(w))² / (|ψ(z) + conj ψ(w)|² |ψ'(w)|).
    let two_re = add_up(2.0 * q.center.re, 2.0 * q.radius);
    let top = mul_up(z.dpsi_hi, mul_up(two_re, two_re));
    let bottom = ((den_lo * den_lo).next_down() * w.dpsi_lo).next_down();
    if bottom <= 0.0 {
        return None;
    }
    Some(mul_up(k, div_up(top, bottom)))
}

/// Largest within-disk factor `sup C(c, u)` over `u ∈ D(c, ρ)`, by Koebe on
/// the disk of radius `R = dist(c, ∂ℂ_λ)`.
pub fn disk_factor(rho: f64, slit_dist: f64) -> Option<f64> {
    if slit_dist <= 0.0 {
        return None;
    }
    koebe_factor(div_up(rho, slit_dist))
}

/// A packing prepared for repeated density evaluations.
#[derive(Debug, Clone)]
pub struct PackingNodes {
    pub nodes: Vec<Node>,
    /// Within-disk factors for each node.
    pub factors: Vec<f64>,
    /// Area credited to each member: the inscribed square, `2r² = h²`.
    pub cell_area: f64,
}

impl PackingNodes {
    pub fn new(u: &Uniformizer, packing: &Cover) -> Result<Self, DistortionError> {
        if packing.kind != CoverKind::Packing {
            return Err(DistortionError::WrongCover("density needs a packing".into()));
        }
        let r = packing.grid.radius();
        let mut nodes = Vec::with_capacity(packing.cells.len());
        let mut factors = Vec::with_capacity(packing.cells.len());
        for &(ix, iy) in &packing.cells {
            let n = u.node(packing.grid.center(ix, iy))?;
            factors.push(disk_factor(r, n.slit_dist).ok_or(DistortionError::Unbounded)?);
            nodes.push(n);
        }
        let h = packing.grid.spacing();
        Ok(PackingNodes { nodes, factors, cell_area: h * h })
    }

    /// Lower bound on `g_A(z)` for every `z` within `D(z_node.z, ρ)`, where
    /// `outer` is the within-disk factor of that disk (1 for the point itself).
    pub fn density_lower(&self, z: &Node, outer: f64) -> (f64, u64) {
        let mut sum = 0.0f64;
        let mut dropped = 0u64;
        for (w, kw) in self.nodes.iter().zip(&self.factors) {
            match pair_bound(z, w) {
                Some(c) => {
                    let c = mul_up(mul_up(outer, c), *kw);
                    let term = (self.cell_area / mul_up(c, c)).next_down();
                    sum = (sum + term).next_down();
                }
                // A missing term only lowers the sum.
                None => dropped += 1,
            }
        }
        (sum.max(0.0), dropped)
    }
}

/// Lower bound on `g_A(z)` at a point for `A` the union of the packing's cells.
pub fn g_density(u: &Uniformizer, z: Complex64, packing: &Cover) -> Result<f64, DistortionError> {
    let nodes = PackingNodes::new(u, packing)?;
    let zn = u.node(z)?;
    Ok(nodes.density_lower(&zn, 1.0).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    /// `None` when some density bound is zero (e.g. an empty packing).
    pub m_upper: Option<f64>,
    /// Centre of the `P₀` cover disk attaining the maximum.
    pub witness: (f64, f64),
    pub g_min: f64,
    pub packing_cells: usize,
    pub p0_cells: usize,
    pub dropped_pairs: u64,
    /// `(x, y, g)` for every centre of the `P₀` cover.
    pub g_values: Vec<(f64, f64, f64)>,
}

/// Certified upper bound on `M(A)` for `A ⊇` the packing, with the infimum of
/// `g_A` taken over the disks of the `P₀` cover.
pub fn m_upper(u: &Uniformizer, packing: &Cover, p0: &Cover) -> Result<DistortionReport, DistortionError> {
    if p0.target != Target::P0 {
        return Err(DistortionError::WrongCover("the second cover must cover P0".into()));
    }
    if p0.cells.is_empty() {
        return Err(DistortionError::WrongCover("empty P0 cover".into()));
    }
    let nodes = PackingNodes::new(u, packing)?;
    let t = p0.grid.radius();
    let results: Vec<Result<(f64, f64, f64, u64), DistortionError>> = p0
        .cells
        .par_iter()
        .map(|&(ix, iy)| {
            let zn = u.node(p0.grid.center(ix, iy))?;
            let kz = disk_factor(t, zn.slit_dist).ok_or(DistortionError::Unbounded)?;
            let (g, dropped) = nodes.density_lower(&zn, kz);
            Ok((zn.z.re, zn.z.im, g, dropped))
        })
        .collect();
    let mut g_values = Vec::with_capacity(results.len());
    let mut dropped_pairs = 0;
    for r in results {
        let (x, y, g, d) = r?;
        dropped_pairs += d;
        g_values.push((x, y, g));
    }
    let (wx, wy, g_min) = g_values
        .iter()
        .copied()
        .fold((0.0, 0.0, f64::INFINITY), |acc, v| if v.2 < acc.2 { v } else { acc });
    let m = if g_min > 0.0 { Some(div_up(1.0, g_min)) } else { None };
    Ok(DistortionReport {
        m_upper: m,
        witness: (wx, wy),
        g_min,
        packing_cells: packing.cells.len(),
        p0_cells: p0.cells.len(),
        dropped_pairs,
        g_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Uniformizer {
        Uniformizer::new(FeigenbaumMap::global())
    }

    #[test]
    fn self_distortion_is_one() {
        let u = u();
        let z = Ball::from_parts(0.3, 0.7, 0.0);
        let c = u.distortion_upper(&z, &z).unwrap();
        assert!((1.0..1.0 + 1e-10).contains(&c), "{}", c);
    }

    #[test]
    fn psi_maps_interval_to_positive_axis() {
        let u = u();
        for x in [-2.0, 0.0, 1.0, 2.4] {
            let p = u.psi(&Ball::real(x)).unwrap();
            assert!(p.center.re > 0.0 && p.center.im.abs() <= p.radius);
        }
        assert!(u.psi(&Ball::real(-3.0)).is_err());
    }

    #[test]
    fn koebe_factor_values() {
        let k0 = koebe_factor(0.0).unwrap();
        // Directed rounding may push the exact value 1 up by a few ulps.
        assert!((1.0..1.0 + 8.0 * f64::EPSILON).contains(&k0), "{k0}");
        assert!((koebe_factor(0.5).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(koebe_factor(1.0), None);
    }
}
