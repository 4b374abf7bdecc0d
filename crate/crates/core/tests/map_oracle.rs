mod common;

use common::{rng, Cdd, Dd, Oracle};
use feigencert::map::{value_error, LAMBDA_DIGITS};
use feigencert::solver::solve_fixed_point;
use feigencert::{Ball, FeigenbaumMap, LanfordPolynomial};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn map() -> &'static FeigenbaumMap {
    FeigenbaumMap::global()
}

#[test]
fn eval_f_encloses_oracle_on_random_points() {
    let oracle = Oracle::bundled();
    let mut r = rng(11);
    let mut checked = 0;
    for _ in 0..2000 {
        let rad: f64 = r.gen_range(0.0..2.3);
        let th: f64 = r.gen_range(0.0..std::f64::consts::TAU);
        let z = Complex64::from_polar(rad, th);
        let Ok(b) = map().eval_f(&Ball::point(z)) else { continue };
        let Ok(o) = oracle.f(Cdd::from_c64(z)) else { continue };
        // Measured in double-double: rounding the oracle to f64 first would
        // add up to half an ulp, comparable to the tightest radii here.
        let d = (Cdd::from_c64(b.center) - o).norm();
        assert!(d <= b.radius * (1.0 + 1e-9) + 1e-300, "z={z} dist={d:e} radius={:e}", b.radius);
        checked += 1;
    }
    assert!(checked > 1900);
}

#[test]
fn eval_df_encloses_oracle_on_random_points() {
    let oracle = Oracle::bundled();
    let mut r = rng(12);
    let mut checked = 0;
    for _ in 0..2000 {
        let z = Complex64::from_polar(r.gen_range(0.0..1.2), r.gen_range(0.0..std::f64::consts::TAU));
        let Ok(b) = map().eval_df(&Ball::point(z)) else { continue };
        let Ok(o) = oracle.df(Cdd::from_c64(z)) else { continue };
        let d = (Cdd::from_c64(b.center) - o).norm();
        assert!(d <= b.radius * (1.0 + 1e-9) + 1e-300, "z={z} dist={d:e} radius={:e}", b.radius);
        checked += 1;
    }
    assert_eq!(checked, 2000);
}

#[test]
fn ball_radius_is_within_table_bound_near_origin() {
    for z in [Complex64::new(0.3, 0.4), Complex64::new(-0.9, 0.2), Complex64::new(0.0, 1.1)] {
        let b = map().eval_f(&Ball::point(z)).unwrap();
        let tab = value_error(1.224).unwrap();
        // Truncation error plus a small multiple of the rounding error.
        assert!(b.radius < tab + 1e-14, "{z}: {:e}", b.radius);
    }
}

#[test]
fn functional_equation_residual_is_small() {
    let mut r = rng(5);
    for _ in 0..300 {
        let z = Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let lz = Ball::point(z) * map().lambda.pow(1);
        let Ok(inner) = map().eval_f(&lz) else { continue };
        let Ok(outer) = map().eval_f(&inner) else { continue };
        let rhs = -(outer * map().lambda.pow(-1));
        let lhs = map().eval_f(&Ball::point(z)).unwrap();
        let gap = (lhs.center - rhs.center).norm();
        assert!(gap <= lhs.radius + rhs.radius, "z={z} gap={gap:e}");
    }
}

#[test]
fn bundled_coefficients_match_solver() {
    let sol = solve_fixed_point(40, 40).unwrap();
    let poly = LanfordPolynomial::bundled().unwrap();
    for (k, (a, s)) in sol.coefficients.iter().zip(&poly.decimals).enumerate() {
        let ours = Dd::from_fix(a);
        let file = Dd::parse(s);
        let d = (ours - file).to_f64().abs();
        assert!(d < 1e-24, "a_{k}: {d:e}");
    }
    let lam = Dd::from_fix(&sol.lambda);
    assert!((lam - Dd::parse(LAMBDA_DIGITS)).to_f64().abs() < 1e-21);
}

#[test]
fn coefficient_file_rejects_tampering() {
    let text = LanfordPolynomial::bundled().unwrap().to_file_string();
    let lines: Vec<&str> = text.lines().collect();
    let mut tampered: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    // Change one digit of a_3.
    let l = &mut tampered[4];
    let last = l.pop().unwrap();
    l.push(if last == '1' { '2' } else { '1' });
    assert!(LanfordPolynomial::parse(&tampered.join("\n")).is_err());
    assert!(LanfordPolynomial::parse(&text).is_ok());
}

proptest! {
    #[test]
    fn ball_products_enclose_exact_products(
        ar in -4.0f64..4.0, ai in -4.0f64..4.0, br in -4.0f64..4.0, bi in -4.0f64..4.0,
        ra in 0.0f64..1e-3, rb in 0.0f64..1e-3,
        tx in -1.0f64..1.0, ty in -1.0f64..1.0, sx in -1.0f64..1.0, sy in -1.0f64..1.0,
    ) {
        let a = Ball::new(Complex64::new(ar, ai), ra);
        let b = Ball::new(Complex64::new(br, bi), rb);
        // Points of each ball, scaled into the disk.
        let (tn, sn) = ((tx * tx + ty * ty).sqrt().max(1.0), (sx * sx + sy * sy).sqrt().max(1.0));
        let pa = Cdd::new(Dd::from_f64(ar) + Dd::from_f64(ra * tx / tn), Dd::from_f64(ai) + Dd::from_f64(ra * ty / tn));
        let pb = Cdd::new(Dd::from_f64(br) + Dd::from_f64(rb * sx / sn), Dd::from_f64(bi) + Dd::from_f64(rb * sy / sn));
        for (ball, exact) in [(a * b, pa * pb), (a + b, pa + pb), (a - b, pa - pb)] {
            let d = Cdd::from_c64(ball.center) - exact;
            let dist = (d.re * d.re + d.im * d.im).to_f64().sqrt();
            prop_assert!(dist <= ball.radius * (1.0 + 1e-12), "dist {:e} > radius {:e}", dist, ball.radius);
        }
    }

    #[test]
    fn sqr_and_sqrt_enclose(x in 0.01f64..9.0, y in -3.0f64..3.0) {
        let z = Ball::point(Complex64::new(x, y));
        let s = z.sqrt().unwrap();
        let back = s.sqr();
        prop_assert!(back.may_contain(z.center));
        let e = Cdd::from_c64(Complex64::new(x, y)).sqr();
        prop_assert!(z.sqr().may_contain(e.to_c64()));
    }
}
