//! Boundary-preserving diffeomorphisms of the half-cylinder acting on symbols, the
//! crossed product by finitely supported functions on the group, and the cochains
//! read off at the identity.
//!
//! A group element is `γ(x1, x2) = (x1 + θ0, λ(x1) x2)` with `θ0 = 2πp/q` and
//! `log λ(x1) = c0 + 2 Re Σ_{k≥1} c_k e^{ikx1}`. It acts on interior symbols by
//! `(γa)(y, η) = a(γ⁻¹y, dγᵗη)` and on boundary operators by
//! `A ↦ κ_λ A(x1 − θ0) κ_λ⁻¹`, so that `γ1(γ2 a) = (γ1γ2) a`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cocycles::{cocycle_residuals, fedosov_integral, phi1_value, phi3_value, CocycleReport};
use crate::cohomology::{Algebra, Cochain};
use crate::error::{BdmError, Result};
use crate::grid::{integrate_sstar_x, signed_mode, BoundaryFunction, GridSet, C64};
use crate::hardy::{cayley, circle_coefficients, circle_nodes, kappa_columns, xi_of_angle};
use crate::parallel;
use crate::symbol::{
    cap_matrix, cap_vector, component, trim_matrix, trim_vector, BoundaryBlock, BoundarySymbol, FullSymbol,
    InteriorSymbol, SIGNS,
};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const KEY_SCALE: f64 = 1e9;
const COEFF_DROP: f64 = 1e-14;
const SNAP: f64 = 1e-9;
const STENCIL: usize = 8;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// JSON form of a group element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    /// `[p, q]`: rotation by `2πp/q`.
    #[serde(default = "no_shift")]
    pub shift: [i64; 2],
    /// `c_k` as `[re, im]`, `k = 0, 1, …`.
    #[serde(default)]
    pub log_lambda: Vec<[f64; 2]>,
}

fn no_shift() -> [i64; 2] {
    [0, 1]
}

impl Default for GroupDescriptor {
    fn default() -> Self {
        GroupDescriptor {
            shift: no_shift(),
            log_lambda: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    p: i64,
    q: i64,
    log_lambda: Vec<C64>,
}

impl GroupElement {
    pub fn new(p: i64, q: i64, log_lambda: Vec<C64>) -> Result<Self> {
        if q <= 0 {
            return Err(BdmError::Config(format!("rotation denominator must be positive, got {q}")));
        }
        if let Some(c0) = log_lambda.first() {
            if c0.im.abs() > 1e-12 {
                return Err(BdmError::Config(format!("constant term of log λ must be real, got {c0}")));
            }
        }
        if log_lambda.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(BdmError::Config("log λ coefficients must be finite".into()));
        }
        Ok(GroupElement::normalized(p, q, log_lambda))
    }

    fn normalized(p: i64, q: i64, mut log_lambda: Vec<C64>) -> Self {
        let g = gcd(p, q).max(1);
        let (p, q) = (p / g, q / g);
        if let Some(c0) = log_lambda.first_mut() {
            c0.im = 0.0;
        }
        while log_lambda.last().is_some_and(|c| c.norm() < COEFF_DROP) {
            log_lambda.pop();
        }
        GroupElement {
            p: p.rem_euclid(q),
            q,
            log_lambda,
        }
    }

    pub fn identity() -> Self {
        GroupElement {
            p: 0,
            q: 1,
            log_lambda: Vec::new(),
        }
    }

    /// Rotation of `S¹_{x1}` by `2πp/q`.
    pub fn rotation(p: i64, q: i64) -> Result<Self> {
        GroupElement::new(p, q, Vec::new())
    }

    /// Constant normal dilation `x2 ↦ λ x2`.
    pub fn dilation(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(BdmError::NonPositiveDilation(lambda));
        }
        GroupElement::new(0, 1, vec![C64::new(lambda.ln(), 0.0)])
    }

    pub fn from_descriptor(d: &GroupDescriptor) -> Result<Self> {
        GroupElement::new(d.shift[0], d.shift[1], d.log_lambda.iter().map(|z| C64::new(z[0], z[1])).collect())
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        GroupDescriptor {
            shift: [self.p, self.q],
            log_lambda: self.log_lambda.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.p == 0 && self.log_lambda.is_empty()
    }

    /// `θ0 ∈ [0, 2π)`.
    pub fn shift_angle(&self) -> f64 {
        2.0 * PI * self.p as f64 / self.q as f64
    }

    pub fn rotation_fraction(&self) -> (i64, i64) {
        (self.p, self.q)
    }

    pub fn log_lambda(&self) -> &[C64] {
        &self.log_lambda
    }

    /// No normal stretching at all.
    pub fn is_isometry(&self) -> bool {
        self.log_lambda.is_empty()
    }

    pub fn has_constant_dilation(&self) -> bool {
        self.log_lambda.len() <= 1
    }

    fn log_lambda_at(&self, x1: f64) -> (f64, f64) {
        let mut v = self.log_lambda.first().map_or(0.0, |c| c.re);
        let mut dv = 0.0;
        for (k, c) in self.log_lambda.iter().enumerate().skip(1) {
            let e = c * C64::from_polar(1.0, k as f64 * x1);
            v += 2.0 * e.re;
            dv += 2.0 * (e * C64::new(0.0, k as f64)).re;
        }
        (v, dv)
    }

    pub fn lambda(&self, x1: f64) -> f64 {
        self.log_lambda_at(x1).0.exp()
    }

    pub fn lambda_derivative(&self, x1: f64) -> f64 {
        let (v, dv) = self.log_lambda_at(x1);
        v.exp() * dv
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        // log λ(x) = log λ_self(x + θ_other) + log λ_other(x)
        let theta = other.shift_angle();
        let len = self.log_lambda.len().max(other.log_lambda.len());
        let coeffs = (0..len)
            .map(|k| {
                let a = self.log_lambda.get(k).map_or(ZERO, |c| c * C64::from_polar(1.0, k as f64 * theta));
                a + other.log_lambda.get(k).copied().unwrap_or(ZERO)
            })
            .collect();
        GroupElement::normalized(self.p * other.q + other.p * self.q, self.q * other.q, coeffs)
    }

    pub fn inverse(&self) -> GroupElement {
        let theta = self.shift_angle();
        let coeffs = self
            .log_lambda
            .iter()
            .enumerate()
            .map(|(k, c)| -c * C64::from_polar(1.0, -(k as f64) * theta))
            .collect();
        GroupElement::normalized(-self.p, self.q, coeffs)
    }

    pub fn power(&self, n: i64) -> GroupElement {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(GroupElement::identity(), |acc, _| acc.compose(&base))
    }

    fn key(&self) -> Vec<i64> {
        let mut k = vec![self.p, self.q];
        for c in &self.log_lambda {
            k.push((c.re * KEY_SCALE).round() as i64);
            k.push((c.im * KEY_SCALE).round() as i64);
        }
        while k.len() > 2 && k[k.len() - 2..] == [0, 0] {
            k.truncate(k.len() - 2);
        }
        k
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for GroupElement {}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Whole grid steps of the rotation, if it is one.
fn grid_steps(gamma: &GroupElement, n: usize) -> Option<usize> {
    let (p, q) = gamma.rotation_fraction();
    let num = p * n as i64;
    (num % q == 0).then(|| (num / q).rem_euclid(n as i64) as usize)
}

/// `out[i] = f(x_i − θ0)` for a periodic sequence, spectrally.
fn shift_series(values: &[C64], theta0: f64) -> Vec<C64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let m = signed_mode(k, n);
        if 2 * k == n {
            *v *= (m as f64 * theta0).cos();
        } else {
            *v *= C64::from_polar(1.0 / n as f64, -(m as f64) * theta0);
        }
    }
    if n.is_multiple_of(2) {
        buf[n / 2] /= n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

fn shift_samples(grid: &GridSet, samples: &[C64], gamma: &GroupElement) -> Vec<C64> {
    let (n1, n2, nt) = (grid.n_x1, grid.n_x2, grid.n_theta);
    let slab = n2 * nt;
    if let Some(s) = grid_steps(gamma, n1) {
        let mut out = Vec::with_capacity(samples.len());
        for i1 in 0..n1 {
            let src = (i1 + n1 - s) % n1;
            out.extend_from_slice(&samples[src * slab..(src + 1) * slab]);
        }
        return out;
    }
    let theta0 = gamma.shift_angle();
    let lines = parallel::map_range(slab, |line| {
        let v: Vec<C64> = (0..n1).map(|i1| samples[i1 * slab + line]).collect();
        shift_series(&v, theta0)
    });
    let mut out = vec![ZERO; samples.len()];
    for (line, v) in lines.iter().enumerate() {
        for (i1, z) in v.iter().enumerate() {
            out[i1 * slab + line] = *z;
        }
    }
    out
}

/// Lagrange weights on `STENCIL` consecutive nodes for the fractional index `t`.
fn lagrange(t: f64, n: usize) -> (usize, Vec<f64>) {
    let w = STENCIL.min(n);
    let nearest = t.round();
    if (t - nearest).abs() < SNAP && nearest >= 0.0 && (nearest as usize) < n {
        return (nearest as usize, vec![1.0]);
    }
    let start = (t.floor() as i64 - (w as i64 / 2 - 1)).clamp(0, (n - w) as i64) as usize;
    let weights = (0..w)
        .map(|j| {
            let xj = (start + j) as f64;
            (0..w)
                .filter(|&m| m != j)
                .map(|m| {
                    let xm = (start + m) as f64;
                    (t - xm) / (xj - xm)
                })
                .product()
        })
        .collect();
    (start, weights)
}

/// `Σ_k c_k e^{i m_k θ}` over FFT-ordered coefficients, Nyquist taken as a cosine.
fn fourier_eval(c: &[C64], theta: f64) -> C64 {
    let n = c.len();
    let z = C64::from_polar(1.0, theta);
    let mut acc = c[0];
    let mut zp = C64::new(1.0, 0.0);
    for m in 1..=n / 2 {
        zp *= z;
        if 2 * m == n {
            acc += c[m] * zp.re;
        } else {
            acc += c[m] * zp + c[n - m] * zp.conj();
        }
    }
    acc
}

/// Pullback of the interior part.
pub fn act_interior(gamma: &GroupElement, a: &InteriorSymbol) -> Result<InteriorSymbol> {
    if gamma.is_identity() {
        return Ok(a.clone());
    }
    let grid = a.grid().clone();
    let shifted = shift_samples(&grid, a.samples(), gamma);
    if gamma.is_isometry() {
        return InteriorSymbol::new(grid, shifted, a.unit_part());
    }
    let (n1, n2, nt) = (grid.n_x1, grid.n_x2, grid.n_theta);
    let h2 = grid.h_x2();
    let theta0 = gamma.shift_angle();
    let fft = FftPlanner::new().plan_fft_forward(nt);
    let slabs = parallel::map_range(n1, |i1| {
        let x1 = grid.x1(i1) - theta0;
        let (lam, dlam) = (gamma.lambda(x1), gamma.lambda_derivative(x1));
        let base = i1 * n2 * nt;
        let modes: Vec<Vec<C64>> = (0..n2)
            .map(|i2| {
                let mut buf = shifted[base + i2 * nt..base + (i2 + 1) * nt].to_vec();
                fft.process(&mut buf);
                buf.iter_mut().for_each(|z| *z /= nt as f64);
                buf
            })
            .collect();
        let mut slab = vec![ZERO; n2 * nt];
        for i2 in 0..n2 {
            let x2 = grid.x2(i2) / lam;
            let t = x2 / h2;
            if t > (n2 - 1) as f64 + SNAP {
                continue;
            }
            let (start, w) = lagrange(t, n2);
            let mut c = vec![ZERO; nt];
            for (j, wj) in w.iter().enumerate() {
                for (ck, mk) in c.iter_mut().zip(&modes[start + j]) {
                    *ck += mk * *wj;
                }
            }
            for it in 0..nt {
                let (s, co) = grid.theta(it).sin_cos();
                let theta = (lam * s).atan2(co + dlam * x2 * s);
                slab[i2 * nt + it] = fourier_eval(&c, theta);
            }
        }
        slab
    });
    InteriorSymbol::new(grid, slabs.concat(), a.unit_part())
}

/// `σ(λξ)` re-expanded in `2K + 1` Cayley modes.
pub fn dilate_toeplitz(sigma: &[C64], lambda: f64, nodes: usize) -> Vec<C64> {
    let k = sigma.len() / 2;
    if sigma.iter().all(|z| *z == ZERO) {
        return sigma.to_vec();
    }
    let m = nodes.max(4 * k + 4);
    let samples: Vec<C64> = circle_nodes(m)
        .into_iter()
        .map(|phi| {
            let w = cayley(lambda * xi_of_angle(phi));
            let wi = w.inv();
            let (mut pos, mut neg) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
            let mut acc = sigma[k];
            for j in 1..=k {
                pos *= w;
                neg *= wi;
                acc += sigma[k + j] * pos + sigma[k - j] * neg;
            }
            acc
        })
        .collect();
    circle_coefficients(&samples, k)
}

/// `κ_λ A κ_λ⁻¹` for one block, given the leading columns of `κ_λ` (rows = Hardy rank).
fn conjugate_block(b: &BoundaryBlock, lambda: f64, kappa: &DMatrix<C64>, nodes: usize, cap: usize) -> BoundaryBlock {
    let cols = |n: usize| kappa.columns(0, n);
    let green = if b.green.is_empty() {
        b.green.clone()
    } else {
        let (r, c) = (b.green.nrows(), b.green.ncols());
        cap_matrix(trim_matrix(&(cols(r) * &b.green * cols(c).adjoint())), cap)
    };
    let potential = if b.potential.is_empty() {
        b.potential.clone()
    } else {
        cap_vector(trim_vector(&(cols(b.potential.len()) * &b.potential)), cap)
    };
    let trace_row = if b.trace_row.is_empty() {
        b.trace_row.clone()
    } else {
        let t: DVector<C64> = cols(b.trace_row.len()).conjugate() * &b.trace_row;
        cap_vector(trim_vector(&t), cap)
    };
    BoundaryBlock {
        sigma: dilate_toeplitz(&b.sigma, lambda, nodes),
        green,
        potential,
        trace_row,
        scalar: b.scalar,
    }
}

fn block_width(b: &BoundaryBlock) -> usize {
    b.green.nrows().max(b.green.ncols()).max(b.potential.len()).max(b.trace_row.len())
}

/// Blocks `A(x1_i − θ0)` along one component, spectrally unless the shift is a whole
/// number of grid steps.
fn shift_blocks(row: &[BoundaryBlock], gamma: &GroupElement) -> Vec<BoundaryBlock> {
    let n = row.len();
    if let Some(s) = grid_steps(gamma, n) {
        return (0..n).map(|i| row[(i + n - s) % n].clone()).collect();
    }
    let theta0 = gamma.shift_angle();
    let modes = row[0].sigma.len();
    let rows = row.iter().map(|b| b.green.nrows()).max().unwrap_or(0);
    let cols = row.iter().map(|b| b.green.ncols()).max().unwrap_or(0);
    let plen = row.iter().map(|b| b.potential.len()).max().unwrap_or(0);
    let blen = row.iter().map(|b| b.trace_row.len()).max().unwrap_or(0);
    let mut out: Vec<BoundaryBlock> = (0..n)
        .map(|_| BoundaryBlock {
            sigma: vec![ZERO; modes],
            green: DMatrix::from_element(rows, cols, ZERO),
            potential: DVector::from_element(plen, ZERO),
            trace_row: DVector::from_element(blen, ZERO),
            scalar: ZERO,
        })
        .collect();
    let series = |get: &dyn Fn(&BoundaryBlock) -> C64| -> Vec<C64> {
        let v: Vec<C64> = row.iter().map(get).collect();
        if v.iter().all(|z| *z == ZERO) {
            v
        } else {
            shift_series(&v, theta0)
        }
    };
    for m in 0..modes {
        for (o, v) in out.iter_mut().zip(series(&|b| b.sigma[m])) {
            o.sigma[m] = v;
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            let get = |b: &BoundaryBlock| if i < b.green.nrows() && j < b.green.ncols() { b.green[(i, j)] } else { ZERO };
            for (o, v) in out.iter_mut().zip(series(&get)) {
                o.green[(i, j)] = v;
            }
        }
    }
    for i in 0..plen {
        for (o, v) in out.iter_mut().zip(series(&|b| b.potential.get(i).copied().unwrap_or(ZERO))) {
            o.potential[i] = v;
        }
    }
    for i in 0..blen {
        for (o, v) in out.iter_mut().zip(series(&|b| b.trace_row.get(i).copied().unwrap_or(ZERO))) {
            o.trace_row[i] = v;
        }
    }
    for (o, v) in out.iter_mut().zip(series(&|b| b.scalar)) {
        o.scalar = v;
    }
    for o in out.iter_mut() {
        o.green = trim_matrix(&o.green);
        o.potential = trim_vector(&o.potential);
        o.trace_row = trim_vector(&o.trace_row);
    }
    out
}

/// Pullback along the base map followed by conjugation with `κ_{λ(x1 − θ0)}`.
pub fn act_boundary(gamma: &GroupElement, a: &BoundarySymbol) -> Result<BoundarySymbol> {
    if gamma.is_identity() {
        return Ok(a.clone());
    }
    let grid = a.grid().clone();
    let n = grid.n_x1;
    let cap = grid.hardy_dim;
    let mut blocks = Vec::with_capacity(2 * n);
    for sign in SIGNS {
        let c = component(sign);
        blocks.extend(shift_blocks(&a.blocks()[c * n..(c + 1) * n], gamma));
    }
    if gamma.is_isometry() {
        return BoundarySymbol::new(grid, blocks, a.unit_part());
    }
    let width = blocks.iter().map(block_width).max().unwrap_or(0);
    let theta0 = gamma.shift_angle();
    let lambdas: Vec<f64> = (0..n).map(|i| gamma.lambda(grid.x1(i) - theta0)).collect();
    let shared = if gamma.has_constant_dilation() {
        Some(kappa_columns(lambdas[0], cap, width)?)
    } else {
        None
    };
    let out = parallel::map_range(2 * n, |k| -> Result<BoundaryBlock> {
        let lam = lambdas[k % n];
        let local;
        let kappa = match &shared {
            Some(m) => m,
            None => {
                local = kappa_columns(lam, cap, block_width(&blocks[k]))?;
                &local
            }
        };
        Ok(conjugate_block(&blocks[k], lam, kappa, grid.n_xi2, cap))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    BoundarySymbol::new(grid, out, a.unit_part())
}

/// The action on a full symbol.
pub fn act(gamma: &GroupElement, a: &FullSymbol) -> Result<FullSymbol> {
    if gamma.is_identity() {
        return Ok(a.clone());
    }
    FullSymbol::from_parts(act_interior(gamma, &a.interior)?, act_boundary(gamma, &a.boundary)?)
}

/// Finitely supported function on the group with values in the symbol algebra.
#[derive(Clone, Debug)]
pub struct CrossedElement {
    grid: Arc<GridSet>,
    terms: BTreeMap<GroupElement, FullSymbol>,
}

impl CrossedElement {
    pub fn zero(grid: Arc<GridSet>) -> Self {
        CrossedElement {
            grid,
            terms: BTreeMap::new(),
        }
    }

    /// `a δ_γ`.
    pub fn single(gamma: GroupElement, a: FullSymbol) -> Self {
        let grid = a.grid().clone();
        let mut terms = BTreeMap::new();
        terms.insert(gamma, a);
        CrossedElement { grid, terms }
    }

    /// `a δ_e`.
    pub fn at_identity(a: FullSymbol) -> Self {
        CrossedElement::single(GroupElement::identity(), a)
    }

    pub fn delta(grid: Arc<GridSet>, gamma: GroupElement) -> Self {
        CrossedElement::single(gamma, FullSymbol::unit(grid))
    }

    pub fn grid(&self) -> &Arc<GridSet> {
        &self.grid
    }

    pub fn terms(&self) -> &BTreeMap<GroupElement, FullSymbol> {
        &self.terms
    }

    pub fn coefficient(&self, gamma: &GroupElement) -> Option<&FullSymbol> {
        self.terms.get(gamma)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    /// Adds `a δ_γ`.
    pub fn accumulate(&mut self, gamma: GroupElement, a: FullSymbol) {
        match self.terms.get_mut(&gamma) {
            Some(existing) => *existing = existing.add(&a),
            None => {
                self.terms.insert(gamma, a);
            }
        }
    }

    pub fn with(mut self, gamma: GroupElement, a: FullSymbol) -> Self {
        self.accumulate(gamma, a);
        self
    }

    pub fn add(&self, other: &CrossedElement) -> CrossedElement {
        let mut out = self.clone();
        for (g, a) in &other.terms {
            out.accumulate(g.clone(), a.clone());
        }
        out
    }

    pub fn scale(&self, c: C64) -> CrossedElement {
        CrossedElement {
            grid: self.grid.clone(),
            terms: self.terms.iter().map(|(g, a)| (g.clone(), a.scale(c))).collect(),
        }
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_difference(&self, other: &CrossedElement) -> f64 {
        let zero = FullSymbol::zero(self.grid.clone());
        let mut worst: f64 = 0.0;
        for g in self.terms.keys().chain(other.terms.keys()) {
            let a = self.terms.get(g).unwrap_or(&zero);
            let b = other.terms.get(g).unwrap_or(&zero);
            worst = worst.max(a.max_difference(b));
        }
        worst
    }
}

/// `(f·g)(γ) = Σ_{γ1γ2=γ} f(γ1) γ1(g(γ2))`.
pub fn crossed_mul(f: &CrossedElement, g: &CrossedElement) -> Result<CrossedElement> {
    let pairs: Vec<(&GroupElement, &FullSymbol, &GroupElement, &FullSymbol)> = f
        .terms
        .iter()
        .flat_map(|(g1, a)| g.terms.iter().map(move |(g2, b)| (g1, a, g2, b)))
        .collect();
    let products = parallel::map_slice(&pairs, |(g1, a, g2, b)| -> Result<(GroupElement, FullSymbol)> {
        Ok((g1.compose(g2), a.try_mul(&act(g1, b)?)?))
    });
    let mut out = CrossedElement::zero(f.grid.clone());
    for p in products {
        let (gamma, c) = p?;
        out.accumulate(gamma, c);
    }
    Ok(out)
}

/// The crossed product of the symbol algebra on one grid.
#[derive(Clone, Debug)]
pub struct CrossedAlgebra {
    pub grid: Arc<GridSet>,
    pub tolerance: f64,
}

impl CrossedAlgebra {
    pub fn new(grid: Arc<GridSet>) -> Self {
        CrossedAlgebra { grid, tolerance: 1e-6 }
    }
}

impl Algebra for CrossedAlgebra {
    type Elem = CrossedElement;

    fn mul(&self, a: &CrossedElement, b: &CrossedElement) -> CrossedElement {
        crossed_mul(a, b).expect("action on admissible symbols")
    }

    fn add(&self, a: &CrossedElement, b: &CrossedElement) -> CrossedElement {
        a.add(b)
    }

    fn scale(&self, a: &CrossedElement, c: C64) -> CrossedElement {
        a.scale(c)
    }

    fn unit(&self) -> CrossedElement {
        CrossedElement::at_identity(FullSymbol::unit(self.grid.clone()))
    }

    fn zero(&self) -> CrossedElement {
        CrossedElement::zero(self.grid.clone())
    }

    fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Argument lists `(a0(γ0), γ0 a1(γ1), γ0γ1 a2(γ2), …)` over all `γ0⋯γn = e`.
pub fn identity_paths(args: &[CrossedElement]) -> Result<Vec<Vec<FullSymbol>>> {
    fn walk(
        args: &[CrossedElement],
        prefix: &GroupElement,
        chosen: &mut Vec<(GroupElement, GroupElement)>,
        out: &mut Vec<Vec<(GroupElement, GroupElement)>>,
    ) {
        let i = chosen.len();
        if i + 1 == args.len() {
            let last = prefix.inverse();
            if args[i].terms.contains_key(&last) {
                chosen.push((prefix.clone(), last));
                out.push(chosen.clone());
                chosen.pop();
            }
            return;
        }
        for g in args[i].terms.keys() {
            chosen.push((prefix.clone(), g.clone()));
            walk(args, &prefix.compose(g), chosen, out);
            chosen.pop();
        }
    }
    let mut paths = Vec::new();
    walk(args, &GroupElement::identity(), &mut Vec::new(), &mut paths);
    parallel::map_slice(&paths, |path| {
        path.iter()
            .zip(args)
            .map(|((prefix, g), x)| act(prefix, &x.terms[g]))
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect()
}

/// Lifts a cochain on symbols to the crossed product by evaluating it on every path
/// through the identity and summing in path order.
pub fn lift_cochain(base: Cochain<FullSymbol>) -> Cochain<CrossedElement> {
    let degree = base.degree();
    Cochain::new(degree, move |args: &[CrossedElement]| {
        let paths = identity_paths(args)?;
        let values = parallel::map_slice(&paths, |p| base.evaluate(p));
        let mut acc: Option<C64> = None;
        for v in values {
            let v = v?;
            acc = Some(acc.map_or(v, |a| a + v));
        }
        Ok(acc.unwrap_or(ZERO))
    })
}

/// `½ ∫_{S*X} tr′(a0 da1 − a1 da0)(e)`.
pub fn phi1_crossed() -> Cochain<CrossedElement> {
    lift_cochain(Cochain::new(1, |a: &[FullSymbol]| phi1_value(&a[0], &a[1])))
}

/// `∫_{S*M} (a0 da1 da2 da3)(e)`.
pub fn phi3_crossed() -> Cochain<CrossedElement> {
    lift_cochain(Cochain::new(3, |a: &[FullSymbol]| phi3_value(&a[0], &a[1], &a[2], &a[3])))
}

/// The cocycle relations over the crossed product at `a[0..5]`.
pub fn crossed_residuals(alg: &Arc<CrossedAlgebra>, a: &[CrossedElement]) -> Result<CocycleReport> {
    cocycle_residuals(alg, &phi1_crossed(), &phi3_crossed(), a)
}

/// Boundary symbols with an extra form degree in `x1` (the `dx1` coefficient for
/// degree one), supported on finitely many group elements.
#[derive(Clone, Debug)]
pub struct BoundaryForm {
    pub degree: u8,
    pub terms: BTreeMap<GroupElement, BoundarySymbol>,
}

impl BoundaryForm {
    pub fn single(degree: u8, gamma: GroupElement, a: BoundarySymbol) -> Result<Self> {
        if degree > 1 {
            return Err(BdmError::FormDegree {
                expected: 1,
                found: degree as usize,
            });
        }
        let mut terms = BTreeMap::new();
        terms.insert(gamma, a);
        Ok(BoundaryForm { degree, terms })
    }

    /// Graded product; forms of degree two vanish on `S*X`.
    pub fn mul(&self, other: &BoundaryForm) -> Result<BoundaryForm> {
        let degree = self.degree + other.degree;
        let mut terms: BTreeMap<GroupElement, BoundarySymbol> = BTreeMap::new();
        if degree > 1 {
            return Ok(BoundaryForm { degree, terms });
        }
        for (g1, a) in &self.terms {
            for (g2, b) in &other.terms {
                let c = a.mul(&act_boundary(g1, b)?);
                let key = g1.compose(g2);
                match terms.get_mut(&key) {
                    Some(e) => *e = e.axpy(C64::new(1.0, 0.0), &c),
                    None => {
                        terms.insert(key, c);
                    }
                }
            }
        }
        Ok(BoundaryForm { degree, terms })
    }
}

/// Which of the two model situations a group element falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCase {
    Identity,
    /// `λ ≡ 1`, rotation only.
    Pullback,
    /// No rotation, constant `λ`.
    Dilation,
    /// Anything else; the trace formula is evaluated without a proof behind it.
    Mixed,
}

pub fn action_case(gamma: &GroupElement) -> ActionCase {
    if gamma.is_identity() {
        ActionCase::Identity
    } else if gamma.is_isometry() {
        ActionCase::Pullback
    } else if gamma.rotation_fraction().0 == 0 && gamma.has_constant_dilation() {
        ActionCase::Dilation
    } else {
        ActionCase::Mixed
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceFormulaReport {
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub gap: f64,
    pub cases: Vec<ActionCase>,
    pub outside_proof_cases: bool,
}

/// `∫_{S*X} tr′[ω1, ω2](e)` against `−i ∫_{S*X} Π′(∂ξ2 σ1 · γ1(σ2))` summed over
/// `γ1γ2 = e`, with `σ` the Toeplitz symbols.
pub fn trace_formula_check(w1: &BoundaryForm, w2: &BoundaryForm) -> Result<TraceFormulaReport> {
    let sign = if w1.degree * w2.degree % 2 == 1 { -1.0 } else { 1.0 };
    let e = GroupElement::identity();
    let left = w1.mul(w2)?;
    let right = w2.mul(w1)?;
    let mut lhs = ZERO;
    if let Some(x) = left.terms.get(&e) {
        lhs += integrate_sstar_x(&x.tr_prime())?;
    }
    if let Some(y) = right.terms.get(&e) {
        lhs -= integrate_sstar_x(&y.tr_prime())? * sign;
    }
    let mut rhs = ZERO;
    let mut cases = Vec::new();
    if w1.degree + w2.degree <= 1 {
        for (g1, a1) in &w1.terms {
            let Some(a2) = w2.terms.get(&g1.inverse()) else {
                continue;
            };
            cases.push(action_case(g1));
            let twisted = act_boundary(g1, a2)?;
            let n = a1.grid().n_x1;
            let values: Vec<C64> = (0..2 * n)
                .map(|k| fedosov_integral(&a1.blocks()[k].sigma, &twisted.blocks()[k].sigma))
                .collect();
            rhs += integrate_sstar_x(&BoundaryFunction::new(values[..n].to_vec(), values[n..].to_vec()))?;
        }
    }
    Ok(TraceFormulaReport {
        lhs: [lhs.re, lhs.im],
        rhs: [rhs.re, rhs.im],
        gap: (lhs - rhs).norm(),
        outside_proof_cases: cases.contains(&ActionCase::Mixed),
        cases,
    })
}

/// `|tr′(κ_λ A κ_λ⁻¹) − tr′(A)|` with `κ_λ` truncated to rank `n`.
pub fn dilation_trace_defect(block: &BoundaryBlock, lambda: f64, n: usize) -> Result<f64> {
    let kappa = kappa_columns(lambda, n, block_width(block))?;
    let modes = block.modes();
    let conj = conjugate_block(block, lambda, &kappa, 4 * modes + 4, n);
    Ok((conj.tr_prime() - block.tr_prime()).norm())
}
