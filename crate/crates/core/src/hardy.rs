//! The Hardy space `H₊` of Fourier images of functions on the half-line, discretized
//! through the Cayley transform.
//!
//! Fourier convention: `Fu(ξ) = ∫₀^∞ e^{−ixξ} u(x) dx`. With the Cayley coordinate
//! `w = (ξ + i)/(ξ − i)` the orthonormal basis of `H₊` (inner product
//! `(1/2π)∫ u v̄ dξ`) is `ψ_n(ξ) = √2 wⁿ/(1 + iξ)`, the Fourier images of the
//! Laguerre functions `√2 e^{−x} L_n(2x)`. Multiplication by `w` is the forward
//! shift, so Toeplitz matrices are `T(σ)[j,k] = σ_{j−k}` for `σ = Σ σ_m w^m`.
//!
//! Circle functions are sampled at the offset nodes `φ_m = 2π(m + ½)/M`, so the
//! point `w = 1` (`ξ = ±∞`) is never evaluated.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::error::{BdmError, Result};
use crate::grid::C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Cayley coordinate of a real `ξ2`.
pub fn cayley(xi: f64) -> C64 {
    (C64::new(xi, 1.0)) / C64::new(xi, -1.0)
}

/// Real line point of the circle angle `φ` (`w = e^{iφ}`): `ξ = cot(φ/2)`.
pub fn xi_of_angle(phi: f64) -> f64 {
    1.0 / (phi / 2.0).tan()
}

/// Offset circle nodes `2π(m + ½)/M`.
pub fn circle_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|k| 2.0 * PI * (k as f64 + 0.5) / m as f64).collect()
}

/// Hardy basis function `ψ_n` at `ξ`.
pub fn hardy_basis(n: usize, xi: f64) -> C64 {
    C64::new(SQRT_2, 0.0) * cayley(xi).powu(n as u32) / C64::new(1.0, xi)
}

/// Fourier coefficients `c_j`, `−L ≤ j ≤ L`, of a circle function sampled on the offset
/// nodes. Returned in order `j = −L..=L`.
pub fn circle_coefficients(samples: &[C64], l: usize) -> Vec<C64> {
    let m = samples.len();
    assert!(2 * l < m, "not enough nodes for {l} modes");
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    (-(l as i64)..=l as i64)
        .map(|j| {
            let k = j.rem_euclid(m as i64) as usize;
            buf[k] * scale * C64::from_polar(1.0, -(j as f64) * PI / m as f64)
        })
        .collect()
}

/// Evaluates `Σ_j c_j e^{ijφ}` (coefficients `j = −L..=L`) on `M` offset nodes.
pub fn circle_samples(coeffs: &[C64], m: usize) -> Vec<C64> {
    let l = (coeffs.len() / 2) as i64;
    assert!(coeffs.len() as i64 <= m as i64, "too few nodes");
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (idx, c) in coeffs.iter().enumerate() {
        let j = idx as i64 - l;
        let k = j.rem_euclid(m as i64) as usize;
        buf[k] += c * C64::from_polar(1.0, j as f64 * PI / m as f64);
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf
}

/// Hardy-basis coefficients `⟨f, ψ_j⟩`, `0 ≤ j < n`, of a function on the line,
/// computed by Cayley-circle quadrature with `m` nodes.
pub fn hardy_coefficients<F: Fn(f64) -> C64>(f: F, n: usize, m: usize) -> Vec<C64> {
    let samples: Vec<C64> = circle_nodes(m)
        .into_iter()
        .map(|phi| {
            let xi = xi_of_angle(phi);
            f(xi) * C64::new(1.0, xi) / SQRT_2
        })
        .collect();
    let full = circle_coefficients(&samples, n.min(m / 2 - 1));
    let l = full.len() / 2;
    let mut out: Vec<C64> = full[l..].to_vec();
    out.resize(n, C64::new(0.0, 0.0));
    out
}

/// Π′ on an element of `H₊` given by its Hardy coefficients: the boundary value at
/// `x2 = 0+` of `Σ u_n √2 e^{−x} L_n(2x)`, i.e. `√2 Σ u_n`.
pub fn pi_prime_hardy(coeffs: &[C64]) -> C64 {
    coeffs.iter().sum::<C64>() * SQRT_2
}

/// Π′ on a function of `H₊ ⊕ H₋` given by its Cayley-circle Fourier coefficients
/// (order `j = −L..=L`). Such functions vanish at `w = 1`; the `H₋` part has zero
/// boundary value from the right and the `H₊` part contributes `−2 Σ_{m≥1} m c_m`.
pub fn pi_prime_circle(coeffs: &[C64], tol: f64) -> Result<C64> {
    let l = coeffs.len() / 2;
    let at_infinity: C64 = coeffs.iter().sum();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    if at_infinity.norm() > tol * scale {
        return Err(BdmError::NonDecaying(at_infinity.norm()));
    }
    Ok(coeffs[l + 1..]
        .iter()
        .enumerate()
        .map(|(k, c)| c * (-2.0 * (k + 1) as f64))
        .sum())
}

/// Π′ of a function on the line sampled through `f`, using `m` circle nodes.
pub fn pi_prime_line<F: Fn(f64) -> C64>(f: F, m: usize, tol: f64) -> Result<C64> {
    let samples: Vec<C64> = circle_nodes(m).into_iter().map(|phi| f(xi_of_angle(phi))).collect();
    pi_prime_circle(&circle_coefficients(&samples, m / 2 - 1), tol)
}

/// `(1/2π) ∫ f dξ` for an integrable function on the line, by trapezoid quadrature on
/// the Cayley circle (`dξ = (1 + ξ²)/2 dφ`).
pub fn line_integral_over_2pi<F: Fn(f64) -> C64>(f: F, m: usize) -> C64 {
    let s: C64 = circle_nodes(m)
        .into_iter()
        .map(|phi| {
            let xi = xi_of_angle(phi);
            f(xi) * (1.0 + xi * xi) / 2.0
        })
        .sum();
    s / m as f64
}

/// Toeplitz matrix `T(σ)[j,k] = σ_{j−k}` of a circle symbol with coefficients
/// `σ_m`, `m = −K..=K`.
pub fn toeplitz_matrix(sigma: &[C64], n: usize) -> DMatrix<C64> {
    let k = (sigma.len() / 2) as i64;
    DMatrix::from_fn(n, n, |j, l| {
        let m = j as i64 - l as i64;
        if m.abs() <= k {
            sigma[(m + k) as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Matrix of the integral operator `u ↦ (1/2π) ∫ g(·, η) u(η) dη` in the first `n`
/// Hardy basis functions, with `m` quadrature nodes per variable.
pub fn green_from_kernel<G: Fn(f64, f64) -> C64>(g: G, n: usize, m: usize) -> DMatrix<C64> {
    let nodes = circle_nodes(m);
    let xis: Vec<f64> = nodes.iter().map(|&p| xi_of_angle(p)).collect();
    // G[j,k] = (1/2π)² ∫∫ g(ξ,η) ψ_k(η) conj ψ_j(ξ) dη dξ, each dξ = (1 + ξ²)/2 dφ
    let mut psi = DMatrix::from_element(m, n, C64::new(0.0, 0.0));
    for (a, &xi) in xis.iter().enumerate() {
        let w = cayley(xi);
        let mut v = C64::new(SQRT_2, 0.0) / C64::new(1.0, xi);
        for k in 0..n {
            psi[(a, k)] = v * (1.0 + xi * xi) / 2.0;
            v *= w;
        }
    }
    let kernel = DMatrix::from_fn(m, m, |a, b| g(xis[a], xis[b]));
    let scale = 1.0 / (m as f64 * m as f64);
    let left = psi.adjoint();
    (left * kernel * psi).map(|z| z * scale)
}

/// First `n_cols` columns (rows `0..n_rows`) of the compressed dilation
/// `u(ξ) ↦ λ^{1/2} u(λξ)` in the Hardy basis.
pub fn kappa_columns(lambda: f64, n_rows: usize, n_cols: usize) -> Result<DMatrix<C64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(BdmError::NonPositiveDilation(lambda));
    }
    let spread = lambda.max(1.0 / lambda);
    let need = (4.0 * spread * (n_rows.max(n_cols) as f64) + 64.0) as usize;
    let m = need.next_power_of_two().max(256);
    let nodes = circle_nodes(m);
    let sqrt_l = lambda.sqrt();
    let planner_fft = FftPlanner::new().plan_fft_forward(m);
    // h_k(φ) = λ^{1/2} ψ_k(λξ) (1 + iξ)/√2; K[j,k] = coefficient of w^j in h_k
    let mut base = Vec::with_capacity(m);
    let mut step = Vec::with_capacity(m);
    for &phi in &nodes {
        let xi = xi_of_angle(phi);
        base.push(C64::new(sqrt_l, 0.0) * C64::new(1.0, xi) / C64::new(1.0, lambda * xi));
        step.push(cayley(lambda * xi));
    }
    let mut out = DMatrix::from_element(n_rows, n_cols, C64::new(0.0, 0.0));
    let mut cur = base;
    for k in 0..n_cols {
        let mut buf = cur.clone();
        planner_fft.process(&mut buf);
        for j in 0..n_rows {
            out[(j, k)] = buf[j] / m as f64 * C64::from_polar(1.0, -(j as f64) * PI / m as f64);
        }
        for (c, s) in cur.iter_mut().zip(&step) {
            *c *= s;
        }
    }
    Ok(out)
}

/// Full `n × n` compressed dilation matrix.
pub fn kappa_matrix(lambda: f64, n: usize) -> Result<DMatrix<C64>> {
    kappa_columns(lambda, n, n)
}

/// Applies `T(σ)` to a finitely supported Hardy vector; the result has length
/// `min(cap, len + K)`.
pub fn toeplitz_apply(sigma: &[C64], v: &DVector<C64>, cap: usize) -> DVector<C64> {
    let k = sigma.len() / 2;
    let out_len = (v.len() + k).min(cap);
    let mut out = DVector::from_element(out_len, C64::new(0.0, 0.0));
    for (l, &x) in v.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let lo = l.saturating_sub(k);
        let hi = (l + k + 1).min(out_len);
        for j in lo..hi {
            out[j] += sigma[j + k - l] * x;
        }
    }
    out
}

/// `b ↦ b T(σ)` for a finitely supported row covector.
pub fn toeplitz_apply_row(sigma: &[C64], b: &DVector<C64>, cap: usize) -> DVector<C64> {
    let k = sigma.len() / 2;
    let out_len = (b.len() + k).min(cap);
    let mut out = DVector::from_element(out_len, C64::new(0.0, 0.0));
    for (j, &x) in b.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let lo = j.saturating_sub(k);
        let hi = (j + k + 1).min(out_len);
        for c in lo..hi {
            // (bT)[c] = Σ_j b[j] σ_{j−c}
            out[c] += x * sigma[j + k - c];
        }
    }
    out
}

/// Semi-commutator `T(σ1)T(σ2) − T(σ1σ2)` on `H₊`, exactly:
/// `−Σ_{m≥1} σ1_{j+m} σ2_{−m−k}`, supported in the leading `K1 × K2` block.
pub fn semicommutator(sigma1: &[C64], sigma2: &[C64]) -> DMatrix<C64> {
    let k1 = (sigma1.len() / 2) as i64;
    let k2 = (sigma2.len() / 2) as i64;
    DMatrix::from_fn(k1 as usize, k2 as usize, |j, l| {
        let mut acc = C64::new(0.0, 0.0);
        for m in 1..=k1 {
            let a = j as i64 + m;
            let b = -m - l as i64;
            if a <= k1 && -b <= k2 {
                acc -= sigma1[(a + k1) as usize] * sigma2[(b + k2) as usize];
            }
        }
        acc
    })
}

/// Laguerre polynomial `L_n(t)` by the three-term recurrence.
pub fn laguerre(n: usize, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0 - t);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = ((2 * k + 1) as f64 - t) * b / (k + 1) as f64 - k as f64 * a / (k + 1) as f64;
        a = b;
        b = c;
    }
    b
}

/// Inverse Fourier transform of `Σ u_n ψ_n` at `x > 0`.
pub fn hardy_inverse_transform(coeffs: &[C64], x: f64) -> C64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, u)| u * SQRT_2 * (-x).exp() * laguerre(n, 2.0 * x))
        .sum()
}
