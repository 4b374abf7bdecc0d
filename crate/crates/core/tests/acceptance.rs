//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. The headline run (criterion 8) takes hours and only runs
//! with `FEIGENCERT_HEADLINE=1`.

mod common;

use common::{rng, Cdd, Dd, Oracle};
use feigencert::bigfix::Fix;
use feigencert::certify::{self, report_recursive_estimate, CertifyConfig, Verdict};
use feigencert::cover::{build_cover, refine_to, Cover, CoverKind, CoverParams, GridSpec, Target};
use feigencert::domain::verify::verify_domain_inclusions;
use feigencert::domain::{DomainSet, Geometry};
use feigencert::koebe::{m_upper, Uniformizer};
use feigencert::map::{OrbitState, StepPolicy};
use feigencert::solver::solve_fixed_point;
use feigencert::{Ball, FeigenbaumMap};
use num_complex::Complex64;
use rand::Rng;
use std::time::Instant;

/// Grid exponents for cell sides `2⁻⁹` and `2⁻⁷` (cell side is `2^(1-e)`).
const E_FINE: u32 = 10;
const E_COARSE: u32 = 8;
const K: u32 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn map() -> &'static FeigenbaumMap {
    FeigenbaumMap::global()
}

fn geom() -> &'static Geometry {
    Geometry::global()
}

fn build(target: Target, n: u32, e: u32) -> Cover {
    build_cover(map(), geom(), &CoverParams { target, n, max_steps: K, spacing_exp: e }).unwrap().0
}

// ---------------------------------------------------------------- 1

fn lambda_reproduction() -> Outcome {
    let sol = solve_fixed_point(40, 40).unwrap();
    let prec = sol.lambda.prec();
    let lam = sol.lambda.clone();
    let inv = Fix::one(prec).div(&lam);
    let d_lam = (lam - Fix::parse_decimal("0.3995352805231344898575", prec).unwrap()).abs();
    let d_inv = (inv - Fix::parse_decimal("2.5029078750958928222839", prec).unwrap()).abs();
    // One unit in the twentieth significant digit.
    let ok = d_lam <= Fix::parse_decimal("1e-20", prec).unwrap_or_else(|| Fix::from_f64(1e-20, prec))
        && d_inv <= Fix::parse_decimal("1e-19", prec).unwrap_or_else(|| Fix::from_f64(1e-19, prec));
    outcome(
        ok,
        format!(
            "lambda = {}, 1/lambda = {} (|dev| {:.1e}, {:.1e})",
            sol.lambda.to_decimal(22),
            Fix::one(prec).div(&sol.lambda).to_decimal(22),
            d_lam.approx(),
            d_inv.approx()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn map_identities() -> Outcome {
    let m = map();
    let lam = m.lambda.pow(1);
    let inv = m.lambda.pow(-1);
    let x0 = m.constants.x0;
    let cases: [(&str, Ball, Ball, f64); 5] = [
        ("F(0)=1", Ball::real(0.0), Ball::real(1.0), 5.3e-14),
        ("F(1)=-lambda", Ball::real(1.0), -lam, 5.3e-14),
        ("F(lambda x0)=x0", x0 * lam, x0, 6.5e-13),
        ("F(x0)=0", x0, Ball::real(0.0), 6.5e-13),
        ("F(x0/lambda)=-1/lambda", x0 * inv, -inv, 5.1e-7),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for (name, z, want, bound) in cases {
        let got = m.eval_f(&Ball::point(z.center)).unwrap();
        let dev = (got.center - want.center).norm();
        // The point value must be consistent with the reference and the
        // enclosure no wider than the published radius.
        let pass = dev <= got.radius + want.radius + z.radius * 4.0 && got.radius <= bound && dev <= bound;
        ok &= pass;
        parts.push(format!("{name}: dev {dev:.1e} rad {:.1e} <= {bound:.1e} {}", got.radius, if pass { "ok" } else { "X" }));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 3

fn domain_verification() -> Outcome {
    let t0 = Instant::now();
    let r = verify_domain_inclusions(map(), geom()).unwrap();
    let get = |id: char, key: &str| r.checks.iter().find(|c| c.id == id).unwrap().margins[key];
    let err = |id: char| r.checks.iter().find(|c| c.id == id).unwrap().error_bound;
    let within = |ours: f64, theirs: f64| (ours - theirs).abs() <= 0.2 * theirs.abs();
    let checks = [
        ("slit clearance", within(get('a', "direct_clearance"), 5.4e-4), get('a', "direct_clearance")),
        ("H-image margin", within(get('b', "margin"), 0.004), get('b', "margin")),
        ("F3 gap", within(get('c', "gap"), 1.5e-3) && err('c') <= 4e-5, get('c', "gap")),
        ("T1", within(get('d', "t1_distance"), 0.01) && err('d') <= 1.7e-6, get('d', "t1_distance")),
        ("T2", within(get('d', "t2_distance"), 0.22) && err('d') <= 1.7e-6, get('d', "t2_distance")),
        ("gamma Re", within(get('e', "gamma_re_max"), -0.024) && err('e') <= 2.3e-6, get('e', "gamma_re_max")),
        ("F54 clearance", within(get('f', "clearance"), 3.2e-4) && err('f') <= 1.3e-10, get('f', "clearance")),
    ];
    let ok = r.passed && checks.iter().all(|c| c.1);
    let detail = checks
        .iter()
        .map(|(n, p, v)| format!("{n} {v:.4e}{}", if *p { "" } else { " X" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, format!("all six pass: {}; {detail}; {:.1?}", r.passed, t0.elapsed()))
}

// ---------------------------------------------------------------- 4

const ERROR_TABLE: [(u32, f64, f64); 5] =
    [(1, 6.45e-13, 5.59e-12), (5, 2.15e-10, 4.45e-9), (10, 2.14e-7, 1.43e-5), (15, 2.13e-4, 4.57e-2), (18, 1.20e-2, 15.14)];

fn error_ledger() -> Outcome {
    let g = geom();
    let w1 = g.w_in.scaled(1);
    let policy = StepPolicy { strict: false, max_exponent: None };
    let mut r = rng(4);
    let (xh, yh) = (2.07 * 0.4, 2.06 * 0.4);
    let mut orbits = 0;
    let mut reached = [0u32; 19];
    let mut worst = [(0.0f64, 0.0f64); 19];
    let mut ok = true;
    while orbits < 10_000 {
        let z = Complex64::new(r.gen_range(-xh..xh), r.gen_range(-yh..yh));
        if !w1.certainly_inside(&Ball::point(z), &g.lambda) {
            continue;
        }
        orbits += 1;
        let mut s = OrbitState::start(Ball::point(z));
        for k in 1..=18usize {
            s = match map().first_return_step(&s, g, policy) {
                Ok(s) => s,
                Err(_) => break,
            };
            if !w1.certainly_inside(&s.current, &g.lambda) {
                break;
            }
            reached[k] += 1;
            let (eps, del) = (s.current.radius, s.deriv.radius);
            worst[k] = (worst[k].0.max(eps), worst[k].1.max(del));
            // Errors only grow with k, so each k is held to the next table row.
            let row = ERROR_TABLE.iter().find(|t| t.0 as usize >= k).unwrap();
            if eps > row.1 || del > row.2 {
                ok = false;
            }
        }
    }
    let detail = ERROR_TABLE
        .iter()
        .map(|&(k, _, _)| {
            let k = k as usize;
            format!("k={k}: {} orbits, eps {:.2e}, delta {:.2e}", reached[k], worst[k].0, worst[k].1)
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok && reached[1] > 0, format!("{orbits} orbits; {detail}"))
}

// ---------------------------------------------------------------- 5

/// Shell exponent for a double-double point, as the certified orbit uses it.
fn oracle_exponent(z: Cdd, cap: u32) -> u32 {
    let m = geom().max_wn_shell(&Ball::point(z.to_c64())).certified_level().unwrap_or(0);
    m.saturating_sub(1).min(cap)
}

fn may_be_in(set: &DomainSet, z: Cdd) -> bool {
    !set.certainly_outside(&Ball::point(z.to_c64()), &geom().lambda)
}

/// Follows `steps` first-return steps of `z` by direct iteration of `F`,
/// returning the first iterate index `j ≥ 1` that may lie in `target`, and
/// whether the orbit had already been certainly outside Ŵout by then.
fn oracle_hits(oracle: &Oracle, z: Cdd, steps: u32, cap: u32, target: &DomainSet) -> Option<(u64, bool)> {
    let mut z = z;
    let mut j = 0u64;
    let mut left = false;
    for _ in 0..steps {
        let i = oracle_exponent(z, cap);
        let mut hit = None;
        let res = oracle.iterate(z, 1u64 << i, |v| {
            j += 1;
            if may_be_in(target, v) {
                hit = Some((j, left));
                return false;
            }
            left |= !may_be_in(&geom().w_out, v);
            true
        });
        if hit.is_some() {
            return hit;
        }
        match res {
            Ok(v) => z = v,
            // The orbit left the region where F is defined or affordable.
            Err(_) => return None,
        }
    }
    None
}

fn sample_outside_cover(n: u32) -> Outcome {
    let oracle = Oracle::bundled();
    let x = build(Target::Xtilde, n, E_FINE);
    let g = geom();
    let w1 = g.w_in.scaled(1);
    let target = g.w_in.scaled(n as i32);
    let mut r = rng(50);
    let (xh, yh) = (x.grid.nx as f64 * x.grid.spacing(), x.grid.ny as f64 * x.grid.spacing());
    let (mut tested, mut bad, mut after_leaving) = (0, 0, 0);
    let mut first_bad = None;
    while tested < 10_000 {
        let z = Complex64::new(r.gen_range(0.0..xh), r.gen_range(0.0..yh));
        if x.covers_point(z) || !w1.certainly_inside(&Ball::point(z), &g.lambda) {
            continue;
        }
        tested += 1;
        if let Some((j, left)) = oracle_hits(&oracle, Cdd::from_c64(z), 40, n - 2, &target) {
            bad += 1;
            after_leaving += usize::from(left);
            first_bad.get_or_insert((z, j));
        }
    }
    outcome(
        bad == 0,
        format!(
            "{tested} points outside D_{n} ({} cells), {bad} entered lambda^{n} W_in \
             ({after_leaving} only after leaving W_out) {first_bad:?}",
            x.cells.len()
        ),
    )
}

/// Checks sampled points of the packing's disks against the defining
/// property of `Σₙ` under the oracle.
fn sample_packing(n: u32, e: u32) -> Outcome {
    let oracle = Oracle::bundled();
    let s = build(Target::Sigma, n, e);
    if s.cells.is_empty() {
        return outcome(false, format!("E_{n} is empty at this resolution: no disk to sample"));
    }
    let g = geom();
    let lam_n = Dd::from_f64(map().lambda.pow(n as i32).center.re);
    let own = g.w_in.scaled(n as i32);
    let mut r = rng(51);
    let rad = s.grid.radius();
    let (mut tested, mut bad) = (0, 0);
    let mut why = None;
    while tested < 1000 {
        let (ix, iy) = s.cells[r.gen_range(0..s.cells.len())];
        let c = s.grid.center(ix, iy);
        let (t, a): (f64, f64) = (r.gen_range(0.0..1.0f64).sqrt() * rad, r.gen_range(0.0..std::f64::consts::TAU));
        let z = c + Complex64::from_polar(t, a);
        tested += 1;
        match packing_point_ok(&oracle, Cdd::from_c64(z), n, lam_n, &own) {
            Ok(()) => {}
            Err(e) => {
                bad += 1;
                why.get_or_insert((z, e));
            }
        }
    }
    outcome(bad == 0, format!("{tested} points in {} disks of E_{n}, {bad} failed {why:?}", s.cells.len()))
}

fn packing_point_ok(oracle: &Oracle, z: Cdd, n: u32, lam_n: Dd, own: &DomainSet) -> Result<(), &'static str> {
    let g = geom();
    let h1 = &g.h1_out;
    // The first-return orbit must leave H¹ within K steps.
    let mut z = z;
    let mut exited = false;
    for _ in 0..K {
        if !may_be_in(h1, z) {
            exited = true;
            break;
        }
        let i = oracle_exponent(z, n - 2);
        z = oracle.iterate(z, 1u64 << i, |_| true).map_err(|_| "z-orbit left the domain")?;
    }
    if !exited {
        return Err("z-orbit did not leave H1");
    }
    // w = λⁿ zₖ is a point of W⁽ⁿ⁾ ...
    if g.w_out.certainly_outside(&Ball::point(z.to_c64()), &g.lambda) {
        return Err("exit point outside W");
    }
    let w = z.scale(lam_n);
    // ... whose orbit escapes H¹ and never comes back to λⁿ Ŵin.
    let mut v = w;
    let mut escaped = false;
    for _ in 0..40 {
        if !may_be_in(h1, v) {
            escaped = true;
        }
        let i = oracle_exponent(v, n - 2);
        let mut back = false;
        let res = oracle.iterate(v, 1u64 << i, |u| {
            back |= may_be_in(own, u);
            !back
        });
        if back {
            return Err("w returned to W(n)");
        }
        match res {
            Ok(u) => v = u,
            Err(_) => break,
        }
    }
    if escaped {
        Ok(())
    } else {
        Err("w did not escape H1")
    }
}

fn eta_monotone() -> Outcome {
    let etas: Vec<f64> =
        (3..=5).map(|n| certify::eta_upper(map(), build(Target::Xtilde, n, E_FINE).area_bound().bound)).collect();
    let ok = etas.windows(2).all(|w| w[1] <= w[0]);
    outcome(ok, format!("eta_3..5 <= {:.4e}, {:.4e}, {:.4e}", etas[0], etas[1], etas[2]))
}

fn refinement_matches_direct(n: u32) -> Outcome {
    let mut parts = vec![];
    let mut ok = true;
    for target in [Target::Xtilde, Target::Sigma] {
        let coarse = build(target, n, E_COARSE);
        let (refined, _) = refine_to(map(), geom(), &coarse, E_FINE).unwrap();
        let direct = build(target, n, E_FINE);
        let same = refined.to_file_string() == direct.to_file_string();
        ok &= same;
        parts.push(format!("{} {} cells {}", target.name(), direct.cells.len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(ok, parts.join(", "))
}

// ---------------------------------------------------------------- 6

fn distortion_properties() -> Outcome {
    let u = Uniformizer::new(map());
    let mut r = rng(6);
    let mut worst_self = 1.0f64;
    let mut self_ok = true;
    let mut sym_ok = true;
    for _ in 0..1000 {
        let z = Ball::new(Complex64::new(r.gen_range(-2.3..2.4), r.gen_range(0.01..2.8)), r.gen_range(0.0..1e-9));
        let w = Ball::new(Complex64::new(r.gen_range(-2.3..2.4), r.gen_range(0.01..2.8)), r.gen_range(0.0..1e-9));
        let c = u.distortion_upper(&Ball::point(z.center), &Ball::point(z.center)).unwrap();
        self_ok &= (1.0..=1.0 + 1e-10).contains(&c);
        worst_self = worst_self.max(c);
        let (a0, a1) = u.pseudo_hyperbolic(&z, &w).unwrap();
        let (b0, b1) = u.pseudo_hyperbolic(&w, &z).unwrap();
        sym_ok &= a0 <= b1 && b0 <= a1;
    }
    // Nested synthetic packings: disks of growing radius around one point.
    let grid = GridSpec::for_target(Target::Sigma, 7, map()).unwrap();
    let p0 = build(Target::P0, 2, 4);
    let centre = Complex64::new(0.5, 0.5);
    let ms: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
        .iter()
        .map(|&rho| {
            let cells = (0..grid.nx)
                .flat_map(|ix| (0..grid.ny).map(move |iy| (ix, iy)))
                .filter(|&(ix, iy)| (grid.center(ix, iy) - centre).norm() <= rho)
                .collect();
            let c = Cover {
                kind: CoverKind::Packing,
                target: Target::Sigma,
                n: 6,
                max_steps: K,
                grid,
                cells,
                checksum: map().poly.checksum.clone(),
            };
            m_upper(&u, &c, &p0).unwrap().m_upper.unwrap()
        })
        .collect();
    let mono = ms.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        self_ok && sym_ok && mono,
        format!("max C(z,z) = {worst_self:.3e} (+{:.1e}); symmetry {sym_ok}; nested M {ms:.4?}", worst_self - 1.0),
    )
}

// ---------------------------------------------------------------- 7

fn recursive_estimate() -> Outcome {
    let p0 = build(Target::P0, 2, 6);
    let r = report_recursive_estimate(map(), geom(), &[(3, 3), (3, 4), (4, 3)], 8, K, &p0).unwrap();
    let vacuous = r.rows.iter().all(|row| row.rhs_upper.is_none());
    let rows = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "({},{}) lhs {:.3e} rhs {}",
                row.n,
                row.m,
                row.lhs_eta_upper,
                row.rhs_upper.map_or("unbounded".into(), |v| format!("{v:.3e}"))
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let note = if vacuous { " [vacuous: no certified Sigma_{n,m} packing, M_{n,m} unbounded]" } else { "" };
    outcome(r.violations == 0, format!("{} violations; {rows}{note}", r.violations))
}

// ---------------------------------------------------------------- 8

fn headline() -> Option<Outcome> {
    if std::env::var("FEIGENCERT_HEADLINE").as_deref() != Ok("1") {
        return None;
    }
    let o = certify::run_certify(map(), geom(), &CertifyConfig::paper()).unwrap();
    let c = &o.certificate;
    let m_ok = c.m_upper.is_some_and(|m| m < 9.4);
    let eta_ok = c.eta_upper * c.area_p0_upper < 0.09;
    let ok = c.verdict == Verdict::Certified && c.product.is_some_and(|p| p < 1.0);
    Some(outcome(
        ok,
        format!(
            "M {:?} (<9.4: {m_ok}), eta*ar(P0) {:.4} (<0.09: {eta_ok}), product {:?}, {:?}",
            c.m_upper,
            c.eta_upper * c.area_p0_upper,
            c.product,
            c.verdict
        ),
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1  lambda reproduction", lambda_reproduction),
        ("2  map identities", map_identities),
        ("3  domain verification", domain_verification),
        ("4  worst-case error ledger", error_ledger),
        ("5a cover soundness: outside D_4", || sample_outside_cover(4)),
        ("5b cover soundness: inside E_4", || sample_packing(4, E_FINE)),
        ("5b supplementary: inside E_6", || sample_packing(6, 9)),
        ("5c eta monotone n=3,4,5", eta_monotone),
        ("5d refinement equals direct", || refinement_matches_direct(4)),
        ("6  distortion properties", distortion_properties),
        ("7  recursive-estimate consistency", recursive_estimate),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t0 = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!("{} criterion {name}: {} ({:.1?})", if o.pass { "PASS" } else { "FAIL" }, o.detail, t0.elapsed());
    }
    match headline() {
        Some(o) => {
            failed += usize::from(!o.pass);
            println!("{} criterion 8  headline: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        }
        None => println!("SKIP criterion 8  headline: long run, set FEIGENCERT_HEADLINE=1"),
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
