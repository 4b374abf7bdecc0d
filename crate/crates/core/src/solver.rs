//! Newton solver for the even fixed point of period-doubling renormalisation,
//! `F(z) = -(1/λ) F(F(λ z))`, `F(0) = 1`, truncated to a polynomial in `z²`.
//!
//! Writing `F(z) = h(z²)` with `h(w) = 1 + Σ_{i=1..N} a_i w^i`, the equation
//! becomes `λ h(w) + h(h(λ² w)²) = 0`. The unknowns `a_1..a_N, λ` are fixed by
//! matching the coefficients of `w^0..w^N`.

use crate::bigfix::Fix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("newton iteration did not converge within {0} steps (last update {1:e})")]
    NoConvergence(usize, f64),
    #[error("singular jacobian at column {0}")]
    Singular(usize),
    #[error("order must be at least 2, got {0}")]
    BadOrder(usize),
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    /// `a_0..a_N` in `w = z²`; `a_0 = 1`.
    pub coefficients: Vec<Fix>,
    pub lambda: Fix,
    /// Size of the final Newton update, as a double.
    pub last_update: f64,
    pub iterations: usize,
}

/// Working precision in bits for `digits` significant decimal digits.
pub fn precision_bits(digits: u32) -> u32 {
    (digits as f64 * 3.3219280948873626).ceil() as u32 + 64
}

// Truncated power-series helpers on coefficient vectors of equal length.
fn series_mul(a: &[Fix], b: &[Fix], prec: u32) -> Vec<Fix> {
    let n = a.len();
    let mut out = vec![Fix::zero(prec); n];
    for i in 0..n {
        if a[i].mantissa().bits() == 0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] = &out[i + j] + &(&a[i] * &b[j]);
        }
    }
    out
}

struct Residual {
    r: Vec<Fix>,
    jac: Vec<Vec<Fix>>,
}

fn residual_and_jacobian(a: &[Fix], lambda: &Fix, prec: u32) -> Residual {
    let n = a.len() - 1;
    let l2 = lambda * lambda;
    // g = h(λ² w), gl = ∂g/∂λ
    let mut g = Vec::with_capacity(n + 1);
    let mut gl = Vec::with_capacity(n + 1);
    let mut lp = Fix::one(prec);
    for (i, ai) in a.iter().enumerate() {
        g.push(ai * &lp);
        // ∂(λ^{2i})/∂λ = 2i λ^{2i-1} = 2i λ^{2i} / λ
        if i == 0 {
            gl.push(Fix::zero(prec));
        } else {
            gl.push((ai * &lp).mul_int(2 * i as i64).div(lambda));
        }
        lp = &lp * &l2;
    }
    let q = series_mul(&g, &g, prec);
    let mut qpow = vec![{
        let mut e = vec![Fix::zero(prec); n + 1];
        e[0] = Fix::one(prec);
        e
    }];
    for j in 1..=n {
        let next = series_mul(&qpow[j - 1], &q, prec);
        qpow.push(next);
    }
    // h(q) and h'(q)
    let mut hq = vec![Fix::zero(prec); n + 1];
    let mut dhq = vec![Fix::zero(prec); n + 1];
    for j in 0..=n {
        for i in 0..=n {
            hq[i] = &hq[i] + &(&a[j] * &qpow[j][i]);
            if j >= 1 {
                dhq[i] = &dhq[i] + &(&a[j].mul_int(j as i64) * &qpow[j - 1][i]);
            }
        }
    }
    let r: Vec<Fix> = (0..=n).map(|i| &(lambda * &a[i]) + &hq[i]).collect();
    // c = h'(q) · 2g
    let two_g: Vec<Fix> = g.iter().map(|x| x.mul_int(2)).collect();
    let c = series_mul(&dhq, &two_g, prec);
    // jacobian: rows i = 0..N, columns a_1..a_N, λ
    let mut jac = vec![vec![Fix::zero(prec); n + 1]; n + 1];
    let mut l2j = Fix::one(prec);
    for j in 1..=n {
        l2j = &l2j * &l2;
        for i in 0..=n {
            let mut v = qpow[j][i].clone();
            if i == j {
                v = &v + lambda;
            }
            if i >= j {
                v = &v + &(&l2j * &c[i - j]);
            }
            jac[i][j - 1] = v;
        }
    }
    let cl = series_mul(&c, &gl, prec);
    for i in 0..=n {
        jac[i][n] = &a[i] + &cl[i];
    }
    Residual { r, jac }
}

fn gauss_solve(mut m: Vec<Vec<Fix>>, mut rhs: Vec<Fix>) -> Result<Vec<Fix>, SolverError> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().cmp(&m[y][col].abs())).unwrap();
        if m[piv][col].mantissa().bits() == 0 {
            return Err(SolverError::Singular(col));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            if m[row][col].mantissa().bits() == 0 {
                continue;
            }
            let f = m[row][col].div(&m[col][col]);
            for k in col..n {
                let t = &f * &m[col][k];
                m[row][k] = &m[row][k] - &t;
            }
            let t = &f * &rhs[col];
            rhs[row] = &rhs[row] - &t;
        }
    }
    let prec = rhs[0].prec();
    let mut x = vec![Fix::zero(prec); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in row + 1..n {
            acc = &acc - &(&m[row][k] * &x[k]);
        }
        x[row] = acc.div(&m[row][row]);
    }
    Ok(x)
}

/// Solves for the order-`order` truncation (coefficients `a_0..a_order` in
/// `z²`) with roughly `digits` significant decimal digits of working precision.
pub fn solve_fixed_point(order: usize, digits: u32) -> Result<FixedPointSolution, SolverError> {
    if order < 2 {
        return Err(SolverError::BadOrder(order));
    }
    let prec = precision_bits(digits);
    // Start from the classical low-order approximation and continue in order.
    let seed = [1.0, -1.5276330, 0.1048152, 0.0267057, -0.0035274, 0.0000816, 0.0000254, -0.0000027];
    let mut a: Vec<Fix> = (0..=order)
        .map(|i| Fix::from_f64(*seed.get(i).unwrap_or(&0.0), prec))
        .collect();
    let mut lambda = Fix::from_f64(0.39953528, prec);
    let mut iterations = 0;
    // Stop a few words short of the working precision to avoid chasing noise.
    let target = digits as f64 * 3.3219280948873626 - 16.0;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        iterations += 1;
        let Residual { r, jac } = residual_and_jacobian(&a, &lambda, prec);
        let neg_r: Vec<Fix> = r.iter().map(|x| -x).collect();
        let dx = gauss_solve(jac, neg_r)?;
        let mut norm = 0f64;
        for j in 1..=order {
            a[j] = &a[j] + &dx[j - 1];
            norm = norm.max(dx[j - 1].approx().abs());
        }
        lambda = &lambda + &dx[order];
        norm = norm.max(dx[order].approx().abs());
        last = norm;
        if norm == 0.0 || -norm.log2() > target {
            return Ok(FixedPointSolution { coefficients: a, lambda, last_update: norm, iterations });
        }
    }
    Err(SolverError::NoConvergence(iterations, last))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_lambda() {
        let s = solve_fixed_point(8, 30).unwrap();
        assert!((s.lambda.approx() - 0.39953528).abs() < 1e-6);
        assert!((s.coefficients[1].approx() + 1.527633).abs() < 1e-5);
    }
}
