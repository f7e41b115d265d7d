//! Discretization of the cosphere bundles of the half-cylinder and its boundary.
//!
//! `S*M` is sampled on `x1 ∈ S¹` (periodic, circumference 2π), `x2 ∈ [0, x2_max]`
//! (uniform, endpoints included) and the fiber angle `θ ∈ S¹` with `ξ = (cos θ, sin θ)`.
//! Flat sample arrays use the layout `(i1 * n_x2 + i2) * n_theta + it`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{BdmError, Result};
use crate::parallel;

pub type C64 = Complex64;

/// Discretization parameters shared by every symbol of one computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSet {
    pub n_x1: usize,
    pub n_x2: usize,
    pub x2_max: f64,
    pub n_theta: usize,
    /// Points on the Cayley circle used for boundary-side quadrature.
    pub n_xi2: usize,
    /// Hardy-space truncation rank N.
    pub hardy_dim: usize,
    /// Number K of retained Cayley-circle modes on each side of zero.
    pub symbol_modes: usize,
    /// Order of the x2 difference stencils and of the matching quadrature: 4, 6 or 8.
    #[serde(default = "default_fd_order")]
    pub fd_order: usize,
}

fn default_fd_order() -> usize {
    4
}

impl Default for GridSet {
    fn default() -> Self {
        GridSet {
            n_x1: 64,
            n_x2: 64,
            x2_max: 1.0,
            n_theta: 64,
            n_xi2: 256,
            hardy_dim: 256,
            symbol_modes: 32,
            fd_order: 4,
        }
    }
}

impl GridSet {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_x1", self.n_x1),
            ("n_x2", self.n_x2),
            ("n_theta", self.n_theta),
            ("n_xi2", self.n_xi2),
            ("hardy_dim", self.hardy_dim),
        ] {
            if n < 4 || n % 2 != 0 {
                return Err(BdmError::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 4"
                )));
            }
        }
        if ![4, 6, 8].contains(&self.fd_order) {
            return Err(BdmError::InvalidGrid(format!(
                "fd_order = {} must be 4, 6 or 8",
                self.fd_order
            )));
        }
        if self.n_x2 < 2 * self.fd_order {
            return Err(BdmError::InvalidGrid(format!(
                "n_x2 must be at least {} for order-{} stencils",
                2 * self.fd_order,
                self.fd_order
            )));
        }
        if !(self.x2_max > 0.0 && self.x2_max.is_finite()) {
            return Err(BdmError::InvalidGrid(format!(
                "x2_max = {} must be positive",
                self.x2_max
            )));
        }
        if self.symbol_modes == 0 {
            return Err(BdmError::InvalidGrid("symbol_modes must be positive".into()));
        }
        Ok(())
    }

    /// Every count doubled (the refinement step of convergence sweeps).
    pub fn refined(&self) -> GridSet {
        GridSet {
            n_x1: 2 * self.n_x1,
            n_x2: 2 * self.n_x2,
            x2_max: self.x2_max,
            n_theta: 2 * self.n_theta,
            n_xi2: 2 * self.n_xi2,
            hardy_dim: 2 * self.hardy_dim,
            symbol_modes: 2 * self.symbol_modes,
            fd_order: self.fd_order,
        }
    }

    pub fn len(&self) -> usize {
        self.n_x1 * self.n_x2 * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_x1(&self) -> f64 {
        2.0 * PI / self.n_x1 as f64
    }

    pub fn h_x2(&self) -> f64 {
        self.x2_max / (self.n_x2 - 1) as f64
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.h_x1()
    }

    pub fn x2(&self, i: usize) -> f64 {
        i as f64 * self.h_x2()
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.h_theta()
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, it: usize) -> usize {
        (i1 * self.n_x2 + i2) * self.n_theta + it
    }

    /// Samples `f(x1, x2, θ)` on the grid.
    pub fn sample<F>(&self, f: F) -> Vec<C64>
    where
        F: Fn(f64, f64, f64) -> C64 + Sync,
    {
        let (n2, nt) = (self.n_x2, self.n_theta);
        let rows = parallel::map_range(self.n_x1, |i1| {
            let x1 = self.x1(i1);
            let mut row = Vec::with_capacity(n2 * nt);
            for i2 in 0..n2 {
                let x2 = self.x2(i2);
                for it in 0..nt {
                    row.push(f(x1, x2, self.theta(it)));
                }
            }
            row
        });
        rows.concat()
    }

    /// Quadrature weights in x2: Gregory-corrected trapezoid rule of order `fd_order`.
    pub fn x2_weights(&self) -> Vec<f64> {
        let n = self.n_x2;
        let h = self.h_x2();
        let mut w = vec![h; n];
        for (k, e) in gregory_ends(self.fd_order).iter().enumerate() {
            w[k] = h * e;
            w[n - 1 - k] = h * e;
        }
        w
    }
}

/// Coordinate directions on `S*M`, in the orientation order `(x1, x2, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X1,
    X2,
    Theta,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X1, Direction::X2, Direction::Theta];

    pub fn axis(self) -> usize {
        match self {
            Direction::X1 => 0,
            Direction::X2 => 1,
            Direction::Theta => 2,
        }
    }
}

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Spectral derivative of one periodic sequence sampled on `[0, period)`.
/// The Nyquist mode is discarded.
pub fn spectral_derivative(values: &[C64], period: f64) -> Vec<C64> {
    let n = values.len();
    let (fwd, inv) = fft_pair(n);
    let mut buf = values.to_vec();
    spectral_derivative_in_place(&mut buf, period, fwd.as_ref(), inv.as_ref());
    buf
}

fn spectral_derivative_in_place(buf: &mut [C64], period: f64, fwd: &dyn Fft<f64>, inv: &dyn Fft<f64>) {
    let n = buf.len();
    fwd.process(buf);
    let scale = 2.0 * PI / period / n as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let m = signed_mode(k, n);
        if 2 * k == n {
            *v = C64::new(0.0, 0.0);
        } else {
            *v *= C64::new(0.0, m as f64 * scale);
        }
    }
    inv.process(buf);
}

/// Maps an FFT bin to its signed frequency.
#[inline]
pub fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Gregory end weights (in units of `h`) for the given order.
pub fn gregory_ends(order: usize) -> Vec<f64> {
    const GAMMA: [f64; 6] = [
        1.0 / 12.0,
        1.0 / 24.0,
        19.0 / 720.0,
        3.0 / 160.0,
        863.0 / 60480.0,
        275.0 / 24192.0,
    ];
    let terms = order - 2;
    let mut w = vec![1.0; terms + 1];
    w[0] = 0.5;
    // left end: Σ_k (−1)^{k+1} γ_k Δ^k f_0
    for (k, g) in GAMMA.iter().enumerate().take(terms) {
        let k = k + 1;
        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
        let mut binom = 1.0;
        for j in 0..=k {
            let sj = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            w[j] += s * g * sj * binom;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    w
}

/// Weights of the first derivative at `x0` from values at `nodes`.
fn derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut total = 0.0;
            for m in (0..n).filter(|&m| m != j) {
                let mut term = 1.0 / (nodes[j] - nodes[m]);
                for l in (0..n).filter(|&l| l != j && l != m) {
                    term *= (x0 - nodes[l]) / (nodes[j] - nodes[l]);
                }
                total += term;
            }
            total
        })
        .collect()
}

/// Stencil start and weights (unit spacing) for every point of an `n`-point line.
fn stencils(n: usize, order: usize) -> Vec<(usize, Vec<f64>)> {
    let width = order + 1;
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(order / 2).min(n - width);
            let nodes: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
            (start, derivative_weights(&nodes, i as f64))
        })
        .collect()
}

/// First derivative on a uniform grid with centered stencils of the given even order,
/// one-sided near both ends.
pub fn fd_derivative(values: &[C64], h: f64, order: usize) -> Vec<C64> {
    let n = values.len();
    assert!(n > order, "order-{order} stencil needs more than {order} points");
    apply_stencils(values, h, &stencils(n, order))
}

fn apply_stencils(values: &[C64], h: f64, st: &[(usize, Vec<f64>)]) -> Vec<C64> {
    st.iter()
        .map(|(start, w)| {
            let s: C64 = w.iter().enumerate().map(|(k, wk)| values[start + k] * *wk).sum();
            s / h
        })
        .collect()
}

/// Fourth-order first derivative on a uniform grid, one-sided at both ends.
pub fn fd4_derivative(values: &[C64], h: f64) -> Vec<C64> {
    fd_derivative(values, h, 4)
}

/// Partial derivative of a sampled function on `S*M`: spectral in `x1` and `θ`,
/// fourth-order finite differences in `x2`.
pub fn differentiate(grid: &GridSet, f: &[C64], direction: Direction) -> Result<Vec<C64>> {
    if f.len() != grid.len() {
        return Err(BdmError::Shape {
            expected: grid.len(),
            found: f.len(),
        });
    }
    let (n1, n2, nt) = (grid.n_x1, grid.n_x2, grid.n_theta);
    match direction {
        Direction::Theta => {
            let (fwd, inv) = fft_pair(nt);
            let lines = parallel::map_range(n1 * n2, |line| {
                let mut buf = f[line * nt..(line + 1) * nt].to_vec();
                spectral_derivative_in_place(&mut buf, 2.0 * PI, fwd.as_ref(), inv.as_ref());
                buf
            });
            Ok(lines.concat())
        }
        Direction::X1 => {
            let (fwd, inv) = fft_pair(n1);
            // one line per (i2, it); gather, differentiate, scatter
            let lines = parallel::map_range(n2 * nt, |line| {
                let mut buf: Vec<C64> = (0..n1).map(|i1| f[i1 * n2 * nt + line]).collect();
                spectral_derivative_in_place(&mut buf, 2.0 * PI, fwd.as_ref(), inv.as_ref());
                buf
            });
            let mut out = vec![C64::new(0.0, 0.0); f.len()];
            for (line, buf) in lines.iter().enumerate() {
                for (i1, v) in buf.iter().enumerate() {
                    out[i1 * n2 * nt + line] = *v;
                }
            }
            Ok(out)
        }
        Direction::X2 => {
            let h = grid.h_x2();
            let st = stencils(n2, grid.fd_order);
            let slabs = parallel::map_range(n1, |i1| {
                let base = i1 * n2 * nt;
                let mut slab = vec![C64::new(0.0, 0.0); n2 * nt];
                let mut col = vec![C64::new(0.0, 0.0); n2];
                for it in 0..nt {
                    for i2 in 0..n2 {
                        col[i2] = f[base + i2 * nt + it];
                    }
                    let d = apply_stencils(&col, h, &st);
                    for i2 in 0..n2 {
                        slab[i2 * nt + it] = d[i2];
                    }
                }
                slab
            });
            Ok(slabs.concat())
        }
    }
}

/// Integral of a sampled function over `S*M` with respect to `dx1 dx2 dθ`.
pub fn integrate_volume(grid: &GridSet, f: &[C64]) -> Result<C64> {
    if f.len() != grid.len() {
        return Err(BdmError::Shape {
            expected: grid.len(),
            found: f.len(),
        });
    }
    let (n2, nt) = (grid.n_x2, grid.n_theta);
    let w2 = grid.x2_weights();
    let cell = grid.h_x1() * grid.h_theta();
    let partial = parallel::map_range(grid.n_x1, |i1| {
        let mut acc = C64::new(0.0, 0.0);
        for (i2, w) in w2.iter().enumerate() {
            let base = (i1 * n2 + i2) * nt;
            let s: C64 = f[base..base + nt].iter().sum();
            acc += s * *w;
        }
        acc
    });
    Ok(partial.into_iter().sum::<C64>() * cell)
}

/// Point of the fiber circle over the boundary reached from `(ξ1, ξ2) = (sign, ξ2)`
/// after normalization: `(sign/√(ξ2²+1), ξ2/√(ξ2²+1))`. Infinite `ξ2` maps to `(0, ±1)`.
pub fn boundary_chart(xi2: f64, sign: i8) -> (f64, f64) {
    if xi2.is_infinite() {
        return (0.0, xi2.signum());
    }
    let r = (xi2 * xi2 + 1.0).sqrt();
    (sign as f64 / r, xi2 / r)
}

/// Fiber angle θ of [`boundary_chart`].
pub fn boundary_chart_angle(xi2: f64, sign: i8) -> f64 {
    let (c, s) = boundary_chart(xi2, sign);
    s.atan2(c)
}

/// A function on `S*X = S¹ × {+1, −1}`: one periodic `x1` sample row per component,
/// `values[0]` at `ξ1 = +1` and `values[1]` at `ξ1 = −1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction {
    pub values: Vec<Vec<C64>>,
}

impl BoundaryFunction {
    pub fn new(plus: Vec<C64>, minus: Vec<C64>) -> Self {
        BoundaryFunction {
            values: vec![plus, minus],
        }
    }

    fn check(&self) -> Result<usize> {
        if self.values.len() != 2 {
            return Err(BdmError::MissingComponent(self.values.len()));
        }
        let n = self.values[0].len();
        if n == 0 || self.values[1].len() != n {
            return Err(BdmError::Shape {
                expected: n,
                found: self.values[1].len(),
            });
        }
        Ok(n)
    }
}

/// Periodic trapezoid rule in `x1`, summed over both components of `S*X`.
pub fn integrate_sstar_x(f: &BoundaryFunction) -> Result<C64> {
    let n = f.check()?;
    let h = 2.0 * PI / n as f64;
    Ok(f.values.iter().flatten().sum::<C64>() * h)
}

/// Integral over `S*X` oriented as the boundary of the co-ball bundle: the
/// `ξ1 = −1` component enters with a minus sign. Cochains on boundary symbols use this one.
pub fn integrate_sstar_x_oriented(f: &BoundaryFunction) -> Result<C64> {
    let n = f.check()?;
    let h = 2.0 * PI / n as f64;
    let plus: C64 = f.values[0].iter().sum();
    let minus: C64 = f.values[1].iter().sum();
    Ok((plus - minus) * h)
}
