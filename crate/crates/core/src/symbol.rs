//! The unitized Boutet de Monvel symbol algebra.
//!
//! A [`FullSymbol`] is `u·1 + (a, a_X)` with an interior symbol `a` sampled on `S*M`
//! and a boundary symbol `a_X` which, at every point of `S*X`, is the operator
//!
//! ```text
//!     ( T(σ) + G   c )
//!     (    b       r )   on  H₊ ⊕ C
//! ```
//!
//! `T(σ)` is the (infinite) Toeplitz operator of the restricted interior symbol and is
//! kept symbolically through the Cayley-circle coefficients of `σ`; `G`, `c`, `b` are
//! finitely supported in the Hardy basis (at most `N` entries) and `r` is a scalar.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::error::{BdmError, Result};
use crate::grid::{differentiate, spectral_derivative, Direction, GridSet, C64};
use crate::hardy::{semicommutator, toeplitz_apply, toeplitz_apply_row};
use crate::parallel;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Magnitude below which Green, potential and trace coefficients are dropped.
pub const DROP_TOL: f64 = 1e-12;

/// Default tolerance for the transmission check at the boundary.
pub const TRANSMISSION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionReport {
    pub max_violation: f64,
}

impl TransmissionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Degree-0 interior symbol on `S*M` plus the coefficient of the adjoined unit.
#[derive(Clone, Debug)]
pub struct InteriorSymbol {
    grid: Arc<GridSet>,
    samples: Arc<Vec<C64>>,
    unit_part: C64,
    gradient: Arc<OnceLock<[Vec<C64>; 3]>>,
}

impl InteriorSymbol {
    pub fn new(grid: Arc<GridSet>, samples: Vec<C64>, unit_part: C64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(BdmError::Shape {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        Ok(InteriorSymbol {
            grid,
            samples: Arc::new(samples),
            unit_part,
            gradient: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn<F>(grid: Arc<GridSet>, unit_part: C64, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> C64 + Sync,
    {
        let samples = grid.sample(f);
        InteriorSymbol::new(grid, samples, unit_part).expect("sampled on its own grid")
    }

    pub fn constant(grid: Arc<GridSet>, unit_part: C64) -> Self {
        let n = grid.len();
        InteriorSymbol::new(grid, vec![ZERO; n], unit_part).expect("sized from grid")
    }

    pub fn grid(&self) -> &Arc<GridSet> {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn unit_part(&self) -> C64 {
        self.unit_part
    }

    /// Full value `unit + a` at a flat grid index.
    #[inline]
    pub fn value(&self, k: usize) -> C64 {
        self.samples[k] + self.unit_part
    }

    /// `(∂x1 a, ∂x2 a, ∂θ a)`, computed once and cached.
    pub fn gradient(&self) -> &[Vec<C64>; 3] {
        self.gradient.get_or_init(|| {
            let d = |dir| differentiate(&self.grid, &self.samples, dir).expect("own grid");
            [d(Direction::X1), d(Direction::X2), d(Direction::Theta)]
        })
    }

    pub fn mul(&self, other: &InteriorSymbol) -> InteriorSymbol {
        let (u1, u2) = (self.unit_part, other.unit_part);
        let samples = self
            .samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| a * b + a * u2 + b * u1)
            .collect();
        InteriorSymbol::new(self.grid.clone(), samples, u1 * u2).expect("same grid")
    }

    pub fn add(&self, other: &InteriorSymbol) -> InteriorSymbol {
        let samples = self.samples.iter().zip(other.samples.iter()).map(|(a, b)| a + b).collect();
        InteriorSymbol::new(self.grid.clone(), samples, self.unit_part + other.unit_part).expect("same grid")
    }

    pub fn scale(&self, c: C64) -> InteriorSymbol {
        let samples = self.samples.iter().map(|a| a * c).collect();
        InteriorSymbol::new(self.grid.clone(), samples, self.unit_part * c).expect("same grid")
    }

    /// θ-Fourier coefficients (normalized, FFT order) of the samples at `(i1, x2 = 0)`.
    fn boundary_theta_modes(&self, i1: usize) -> Vec<C64> {
        let nt = self.grid.n_theta;
        let base = self.grid.index(i1, 0, 0);
        let mut buf = self.samples[base..base + nt].to_vec();
        FftPlanner::new().plan_fft_forward(nt).process(&mut buf);
        buf.iter_mut().for_each(|z| *z /= nt as f64);
        buf
    }

    /// Largest odd fiber mode at the boundary: for degree-0 symbols the transmission
    /// property is evenness `a(x1, 0, −ξ) = a(x1, 0, ξ)`.
    pub fn check_transmission(&self) -> TransmissionReport {
        let nt = self.grid.n_theta;
        let worst = parallel::map_range(self.grid.n_x1, |i1| {
            self.boundary_theta_modes(i1)
                .iter()
                .enumerate()
                .filter(|(k, _)| k % 2 == 1)
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max)
        });
        let _ = nt;
        TransmissionReport {
            max_violation: worst.into_iter().fold(0.0, f64::max),
        }
    }

    /// Largest sample in the last `rows` x2-layers (the symbol must vanish there).
    pub fn tail_magnitude(&self, rows: usize) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for i1 in 0..g.n_x1 {
            for i2 in g.n_x2.saturating_sub(rows)..g.n_x2 {
                for it in 0..g.n_theta {
                    m = m.max(self.samples[g.index(i1, i2, it)].norm());
                }
            }
        }
        m
    }

    /// Cayley-circle coefficients `σ_m`, `m = −K..=K`, of
    /// `σ(ξ2) = a(x1, 0, chart(ξ2, sign))` (unit part excluded).
    ///
    /// On `ξ1 = +1` the fiber mode `e^{2ikθ}` becomes `(−1)^k w^{−k}`, on `ξ1 = −1`
    /// it becomes `(−1)^k w^{k}`; odd modes have no continuous restriction.
    pub fn restrict_to_boundary(&self, i1: usize, sign: i8, modes: usize, tol: f64) -> Result<Vec<C64>> {
        let nt = self.grid.n_theta;
        let c = self.boundary_theta_modes(i1);
        let mut sigma = vec![ZERO; 2 * modes + 1];
        let mut odd: f64 = 0.0;
        let mut dropped: f64 = 0.0;
        for (bin, z) in c.iter().enumerate() {
            let q = crate::grid::signed_mode(bin, nt);
            if q % 2 != 0 {
                odd = odd.max(z.norm());
                continue;
            }
            let k = q / 2;
            let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
            let m = if sign > 0 { -k } else { k };
            if m.unsigned_abs() as usize > modes {
                dropped = dropped.max(z.norm());
                continue;
            }
            sigma[(m + modes as i64) as usize] += z * parity;
        }
        if odd > tol {
            return Err(BdmError::Transmission(odd));
        }
        if dropped > tol {
            return Err(BdmError::Incompatible(format!(
                "boundary symbol needs more than {modes} Cayley modes (dropped {dropped:.2e})"
            )));
        }
        Ok(sigma)
    }
}

/// One boundary operator `(T(σ) + G, c; b, r)` without the unit part.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryBlock {
    /// `σ_m`, `m = −K..=K`.
    pub sigma: Vec<C64>,
    pub green: DMatrix<C64>,
    pub potential: DVector<C64>,
    pub trace_row: DVector<C64>,
    pub scalar: C64,
}

fn band(sigma: &[C64]) -> &[C64] {
    let k = sigma.len() / 2;
    let mut b = 0;
    for m in 1..=k {
        if sigma[k + m] != ZERO || sigma[k - m] != ZERO {
            b = m;
        }
    }
    &sigma[k - b..=k + b]
}

fn grow(m: &DMatrix<C64>, rows: usize, cols: usize) -> DMatrix<C64> {
    if m.nrows() == rows && m.ncols() == cols {
        return m.clone();
    }
    let mut out = DMatrix::from_element(rows, cols, ZERO);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

fn grow_vec(v: &DVector<C64>, len: usize) -> DVector<C64> {
    if v.len() == len {
        return v.clone();
    }
    let mut out = DVector::from_element(len, ZERO);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// `acc += c·m`, enlarging `acc` as needed.
fn add_matrix(acc: &mut DMatrix<C64>, m: &DMatrix<C64>, c: C64) {
    if m.is_empty() || c == ZERO {
        return;
    }
    if m.nrows() > acc.nrows() || m.ncols() > acc.ncols() {
        *acc = grow(acc, acc.nrows().max(m.nrows()), acc.ncols().max(m.ncols()));
    }
    let mut view = acc.view_mut((0, 0), (m.nrows(), m.ncols()));
    view += m * c;
}

fn add_vector(acc: &mut DVector<C64>, v: &DVector<C64>, c: C64) {
    if v.is_empty() || c == ZERO {
        return;
    }
    if v.len() > acc.len() {
        *acc = grow_vec(acc, v.len());
    }
    let mut view = acc.rows_mut(0, v.len());
    view += v * c;
}

pub(crate) fn trim_matrix(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut rows = 0;
    let mut cols = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)].norm() > DROP_TOL {
                rows = rows.max(i + 1);
                cols = cols.max(j + 1);
            }
        }
    }
    m.view((0, 0), (rows, cols)).into_owned()
}

pub(crate) fn trim_vector(v: &DVector<C64>) -> DVector<C64> {
    let len = v.iter().rposition(|z| z.norm() > DROP_TOL).map_or(0, |p| p + 1);
    v.rows(0, len).into_owned()
}

fn convolve(a: &[C64], b: &[C64], modes: usize) -> Vec<C64> {
    let (ka, kb) = ((a.len() / 2) as i64, (b.len() / 2) as i64);
    let k = modes as i64;
    let mut out = vec![ZERO; 2 * modes + 1];
    for (i, x) in a.iter().enumerate() {
        if *x == ZERO {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            let m = (i as i64 - ka) + (j as i64 - kb);
            if m.abs() <= k {
                out[(m + k) as usize] += x * y;
            }
        }
    }
    out
}

impl BoundaryBlock {
    pub fn zero(modes: usize) -> Self {
        BoundaryBlock {
            sigma: vec![ZERO; 2 * modes + 1],
            green: DMatrix::from_element(0, 0, ZERO),
            potential: DVector::from_element(0, ZERO),
            trace_row: DVector::from_element(0, ZERO),
            scalar: ZERO,
        }
    }

    pub fn modes(&self) -> usize {
        self.sigma.len() / 2
    }

    /// Regularized trace: matrix trace of the Green part plus the scalar entry.
    pub fn tr_prime(&self) -> C64 {
        let d = self.green.nrows().min(self.green.ncols());
        (0..d).map(|i| self.green[(i, i)]).sum::<C64>() + self.scalar
    }

    pub fn scale(&self, c: C64) -> Self {
        BoundaryBlock {
            sigma: self.sigma.iter().map(|z| z * c).collect(),
            green: &self.green * c,
            potential: &self.potential * c,
            trace_row: &self.trace_row * c,
            scalar: self.scalar * c,
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: C64, other: &BoundaryBlock) -> Self {
        let mut out = self.clone();
        for (a, b) in out.sigma.iter_mut().zip(&other.sigma) {
            *a += b * c;
        }
        add_matrix(&mut out.green, &other.green, c);
        add_vector(&mut out.potential, &other.potential, c);
        add_vector(&mut out.trace_row, &other.trace_row, c);
        out.scalar += other.scalar * c;
        out
    }

    /// Product of `(u1 + A1)(u2 + A2)` minus the `u1 u2` unit term, with Hardy rank `cap`.
    pub fn compose(u1: C64, a1: &BoundaryBlock, u2: C64, a2: &BoundaryBlock, cap: usize) -> BoundaryBlock {
        let modes = a1.modes();
        let s1 = band(&a1.sigma);
        let s2 = band(&a2.sigma);
        let mut sigma = convolve(s1, s2, modes);
        for ((z, x), y) in sigma.iter_mut().zip(&a1.sigma).zip(&a2.sigma) {
            *z += y * u1 + x * u2;
        }

        // Green: u1 G2 + u2 G1 + [T(σ1)T(σ2) − T(σ1σ2)] + T(σ1)G2 + G1T(σ2) + G1G2 + c1⊗b2
        let mut green = DMatrix::from_element(0, 0, ZERO);
        add_matrix(&mut green, &a2.green, u1);
        add_matrix(&mut green, &a1.green, u2);
        add_matrix(&mut green, &semicommutator(s1, s2), C64::new(1.0, 0.0));
        if !a2.green.is_empty() {
            let cols: Vec<DVector<C64>> = (0..a2.green.ncols())
                .map(|j| toeplitz_apply(s1, &a2.green.column(j).into_owned(), cap))
                .collect();
            let rows = cols.iter().map(|c| c.len()).max().unwrap_or(0);
            let m = DMatrix::from_fn(rows, cols.len(), |i, j| if i < cols[j].len() { cols[j][i] } else { ZERO });
            add_matrix(&mut green, &m, C64::new(1.0, 0.0));
        }
        if !a1.green.is_empty() {
            let rows: Vec<DVector<C64>> = (0..a1.green.nrows())
                .map(|i| toeplitz_apply_row(s2, &a1.green.row(i).transpose(), cap))
                .collect();
            let ncols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
            let m = DMatrix::from_fn(rows.len(), ncols, |i, j| if j < rows[i].len() { rows[i][j] } else { ZERO });
            add_matrix(&mut green, &m, C64::new(1.0, 0.0));
        }
        if !a1.green.is_empty() && !a2.green.is_empty() {
            let inner = a1.green.ncols().max(a2.green.nrows());
            let g1 = grow(&a1.green, a1.green.nrows(), inner);
            let g2 = grow(&a2.green, inner, a2.green.ncols());
            add_matrix(&mut green, &(g1 * g2), C64::new(1.0, 0.0));
        }
        if !a1.potential.is_empty() && !a2.trace_row.is_empty() {
            add_matrix(&mut green, &(&a1.potential * a2.trace_row.transpose()), C64::new(1.0, 0.0));
        }

        // potential: u1 c2 + u2 c1 + T(σ1)c2 + G1 c2 + c1 r2
        let mut potential = DVector::from_element(0, ZERO);
        add_vector(&mut potential, &a2.potential, u1 + ZERO);
        add_vector(&mut potential, &a1.potential, u2 + a2.scalar);
        add_vector(&mut potential, &toeplitz_apply(s1, &a2.potential, cap), C64::new(1.0, 0.0));
        if !a1.green.is_empty() && !a2.potential.is_empty() {
            let inner = a1.green.ncols().max(a2.potential.len());
            let gc = grow(&a1.green, a1.green.nrows(), inner) * grow_vec(&a2.potential, inner);
            add_vector(&mut potential, &gc, C64::new(1.0, 0.0));
        }

        // trace row: u1 b2 + u2 b1 + b1 T(σ2) + b1 G2 + r1 b2
        let mut trace_row = DVector::from_element(0, ZERO);
        add_vector(&mut trace_row, &a2.trace_row, u1 + a1.scalar);
        add_vector(&mut trace_row, &a1.trace_row, u2);
        add_vector(&mut trace_row, &toeplitz_apply_row(s2, &a1.trace_row, cap), C64::new(1.0, 0.0));
        if !a1.trace_row.is_empty() && !a2.green.is_empty() {
            let inner = a2.green.nrows().max(a1.trace_row.len());
            let bg = (grow_vec(&a1.trace_row, inner).transpose() * grow(&a2.green, inner, a2.green.ncols())).transpose();
            add_vector(&mut trace_row, &bg, C64::new(1.0, 0.0));
        }

        // scalar: u1 r2 + u2 r1 + b1·c2 + r1 r2
        let inner = a1.trace_row.len().min(a2.potential.len());
        let bc: C64 = (0..inner).map(|i| a1.trace_row[i] * a2.potential[i]).sum();
        let scalar = a2.scalar * u1 + a1.scalar * u2 + bc + a1.scalar * a2.scalar;

        BoundaryBlock {
            sigma,
            green: cap_matrix(trim_matrix(&green), cap),
            potential: cap_vector(trim_vector(&potential), cap),
            trace_row: cap_vector(trim_vector(&trace_row), cap),
            scalar,
        }
    }

    /// Largest entry of `self − other` over all blocks.
    pub fn max_difference(&self, other: &BoundaryBlock) -> f64 {
        let d = self.axpy(C64::new(-1.0, 0.0), other);
        let m = d.sigma.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let g = d.green.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let c = d.potential.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let b = d.trace_row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        m.max(g).max(c).max(b).max(d.scalar.norm())
    }

    /// Dense `(n+1) × (n+1)` matrix of `T(σ) + G ⊕ r` compressed to the first `n` Hardy modes.
    pub fn dense(&self, n: usize) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(n + 1, n + 1, ZERO);
        let t = crate::hardy::toeplitz_matrix(&self.sigma, n);
        out.view_mut((0, 0), (n, n)).copy_from(&t);
        for i in 0..self.green.nrows().min(n) {
            for j in 0..self.green.ncols().min(n) {
                out[(i, j)] += self.green[(i, j)];
            }
        }
        for i in 0..self.potential.len().min(n) {
            out[(i, n)] += self.potential[i];
        }
        for j in 0..self.trace_row.len().min(n) {
            out[(n, j)] += self.trace_row[j];
        }
        out[(n, n)] += self.scalar;
        out
    }
}

pub(crate) fn cap_matrix(m: DMatrix<C64>, cap: usize) -> DMatrix<C64> {
    if m.nrows() <= cap && m.ncols() <= cap {
        m
    } else {
        m.view((0, 0), (m.nrows().min(cap), m.ncols().min(cap))).into_owned()
    }
}

pub(crate) fn cap_vector(v: DVector<C64>, cap: usize) -> DVector<C64> {
    if v.len() <= cap {
        v
    } else {
        v.rows(0, cap).into_owned()
    }
}

/// Boundary symbol over `S*X`: blocks at `(x1_i, ξ1 = +1)` for `i < n_x1`, followed by
/// the blocks at `ξ1 = −1`.
#[derive(Clone, Debug)]
pub struct BoundarySymbol {
    grid: Arc<GridSet>,
    blocks: Arc<Vec<BoundaryBlock>>,
    unit_part: C64,
}

/// Component index of `ξ1 = sign`.
pub fn component(sign: i8) -> usize {
    if sign > 0 {
        0
    } else {
        1
    }
}

pub const SIGNS: [i8; 2] = [1, -1];

impl BoundarySymbol {
    pub fn new(grid: Arc<GridSet>, blocks: Vec<BoundaryBlock>, unit_part: C64) -> Result<Self> {
        if blocks.len() != 2 * grid.n_x1 {
            return Err(BdmError::Shape {
                expected: 2 * grid.n_x1,
                found: blocks.len(),
            });
        }
        if let Some(b) = blocks.iter().find(|b| b.sigma.len() != 2 * grid.symbol_modes + 1) {
            return Err(BdmError::Incompatible(format!(
                "toeplitz symbol with {} coefficients, grid expects {}",
                b.sigma.len(),
                2 * grid.symbol_modes + 1
            )));
        }
        Ok(BoundarySymbol {
            grid,
            blocks: Arc::new(blocks),
            unit_part,
        })
    }

    pub fn grid(&self) -> &Arc<GridSet> {
        &self.grid
    }

    pub fn blocks(&self) -> &[BoundaryBlock] {
        &self.blocks
    }

    pub fn block(&self, i1: usize, sign: i8) -> &BoundaryBlock {
        &self.blocks[component(sign) * self.grid.n_x1 + i1]
    }

    pub fn unit_part(&self) -> C64 {
        self.unit_part
    }

    pub fn mul(&self, other: &BoundarySymbol) -> BoundarySymbol {
        let cap = self.grid.hardy_dim;
        let (u1, u2) = (self.unit_part, other.unit_part);
        let blocks = parallel::map_range(self.blocks.len(), |k| {
            BoundaryBlock::compose(u1, &self.blocks[k], u2, &other.blocks[k], cap)
        });
        BoundarySymbol::new(self.grid.clone(), blocks, u1 * u2).expect("same grid")
    }

    pub fn axpy(&self, c: C64, other: &BoundarySymbol) -> BoundarySymbol {
        let blocks = self.blocks.iter().zip(other.blocks.iter()).map(|(a, b)| a.axpy(c, b)).collect();
        BoundarySymbol::new(self.grid.clone(), blocks, self.unit_part + other.unit_part * c).expect("same grid")
    }

    pub fn scale(&self, c: C64) -> BoundarySymbol {
        let blocks = self.blocks.iter().map(|b| b.scale(c)).collect();
        BoundarySymbol::new(self.grid.clone(), blocks, self.unit_part * c).expect("same grid")
    }

    /// `tr′` at every point of `S*X`.
    pub fn tr_prime(&self) -> crate::grid::BoundaryFunction {
        let n = self.grid.n_x1;
        let plus = self.blocks[..n].iter().map(|b| b.tr_prime()).collect();
        let minus = self.blocks[n..].iter().map(|b| b.tr_prime()).collect();
        crate::grid::BoundaryFunction::new(plus, minus)
    }

    /// Exterior derivative along `S*X`: entrywise spectral `x1`-derivative of every
    /// block (the `dx1` coefficient; the unit part drops).
    pub fn d_boundary(&self) -> BoundarySymbol {
        let n = self.grid.n_x1;
        let mut blocks = Vec::with_capacity(2 * n);
        for comp in 0..2 {
            let row = &self.blocks[comp * n..(comp + 1) * n];
            blocks.extend(differentiate_blocks(row));
        }
        BoundarySymbol::new(self.grid.clone(), blocks, ZERO).expect("same grid")
    }

    pub fn max_difference(&self, other: &BoundarySymbol) -> f64 {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .map(|(a, b)| a.max_difference(b))
            .fold((self.unit_part - other.unit_part).norm(), f64::max)
    }
}

/// Spectral `x1`-derivative of a periodic row of blocks.
pub fn differentiate_blocks(row: &[BoundaryBlock]) -> Vec<BoundaryBlock> {
    let n = row.len();
    let modes = row[0].modes();
    let rows = row.iter().map(|b| b.green.nrows()).max().unwrap_or(0);
    let cols = row.iter().map(|b| b.green.ncols()).max().unwrap_or(0);
    let plen = row.iter().map(|b| b.potential.len()).max().unwrap_or(0);
    let blen = row.iter().map(|b| b.trace_row.len()).max().unwrap_or(0);
    let series = |get: &dyn Fn(&BoundaryBlock) -> C64| -> Vec<C64> {
        let v: Vec<C64> = row.iter().map(get).collect();
        if v.iter().all(|z| *z == ZERO) {
            v
        } else {
            spectral_derivative(&v, 2.0 * PI)
        }
    };
    let mut out: Vec<BoundaryBlock> = (0..n)
        .map(|_| BoundaryBlock {
            sigma: vec![ZERO; 2 * modes + 1],
            green: DMatrix::from_element(rows, cols, ZERO),
            potential: DVector::from_element(plen, ZERO),
            trace_row: DVector::from_element(blen, ZERO),
            scalar: ZERO,
        })
        .collect();
    for m in 0..2 * modes + 1 {
        let d = series(&|b| b.sigma[m]);
        for (o, v) in out.iter_mut().zip(d) {
            o.sigma[m] = v;
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            let d = series(&|b| if i < b.green.nrows() && j < b.green.ncols() { b.green[(i, j)] } else { ZERO });
            for (o, v) in out.iter_mut().zip(d) {
                o.green[(i, j)] = v;
            }
        }
    }
    for i in 0..plen {
        let d = series(&|b| b.potential.get(i).copied().unwrap_or(ZERO));
        for (o, v) in out.iter_mut().zip(d) {
            o.potential[i] = v;
        }
    }
    for i in 0..blen {
        let d = series(&|b| b.trace_row.get(i).copied().unwrap_or(ZERO));
        for (o, v) in out.iter_mut().zip(d) {
            o.trace_row[i] = v;
        }
    }
    let d = series(&|b| b.scalar);
    for (o, v) in out.iter_mut().zip(d) {
        o.scalar = v;
    }
    for o in out.iter_mut() {
        o.green = trim_matrix(&o.green);
        o.potential = trim_vector(&o.potential);
        o.trace_row = trim_vector(&o.trace_row);
    }
    out
}

/// Finite-rank boundary data added on top of the Toeplitz part at one point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GreenData {
    pub green: Option<DMatrix<C64>>,
    pub potential: Option<DVector<C64>>,
    pub trace_row: Option<DVector<C64>>,
    pub scalar: C64,
}

/// A unitized Boutet de Monvel symbol `(a, a_X)`.
#[derive(Clone, Debug)]
pub struct FullSymbol {
    pub interior: InteriorSymbol,
    pub boundary: BoundarySymbol,
}

impl FullSymbol {
    /// Builds a symbol whose Toeplitz parts are the boundary restrictions of `interior`;
    /// `extra(i1, sign)` supplies the Green, potential, trace and scalar entries.
    pub fn from_interior<F>(interior: InteriorSymbol, extra: F) -> Result<Self>
    where
        F: Fn(usize, i8) -> GreenData + Sync,
    {
        let grid = interior.grid().clone();
        let n = grid.n_x1;
        let modes = grid.symbol_modes;
        let blocks = parallel::map_range(2 * n, |k| -> Result<BoundaryBlock> {
            let (comp, i1) = (k / n, k % n);
            let sign = SIGNS[comp];
            let sigma = interior.restrict_to_boundary(i1, sign, modes, TRANSMISSION_TOL)?;
            let e = extra(i1, sign);
            Ok(BoundaryBlock {
                sigma,
                green: trim_matrix(&e.green.unwrap_or_else(|| DMatrix::from_element(0, 0, ZERO))),
                potential: trim_vector(&e.potential.unwrap_or_else(|| DVector::from_element(0, ZERO))),
                trace_row: trim_vector(&e.trace_row.unwrap_or_else(|| DVector::from_element(0, ZERO))),
                scalar: e.scalar,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let unit = interior.unit_part();
        Ok(FullSymbol {
            boundary: BoundarySymbol::new(grid, blocks, unit)?,
            interior,
        })
    }

    pub fn from_parts(interior: InteriorSymbol, boundary: BoundarySymbol) -> Result<Self> {
        if interior.grid() != boundary.grid() && **interior.grid() != **boundary.grid() {
            return Err(BdmError::Incompatible("interior and boundary grids differ".into()));
        }
        if interior.unit_part() != boundary.unit_part() {
            return Err(BdmError::Incompatible("unit parts differ".into()));
        }
        Ok(FullSymbol { interior, boundary })
    }

    pub fn unit(grid: Arc<GridSet>) -> Self {
        FullSymbol::scalar(grid, C64::new(1.0, 0.0))
    }

    pub fn zero(grid: Arc<GridSet>) -> Self {
        FullSymbol::scalar(grid, ZERO)
    }

    pub fn scalar(grid: Arc<GridSet>, c: C64) -> Self {
        let blocks = vec![BoundaryBlock::zero(grid.symbol_modes); 2 * grid.n_x1];
        FullSymbol {
            interior: InteriorSymbol::constant(grid.clone(), c),
            boundary: BoundarySymbol::new(grid, blocks, c).expect("sized from grid"),
        }
    }

    pub fn grid(&self) -> &Arc<GridSet> {
        self.interior.grid()
    }

    pub fn unit_part(&self) -> C64 {
        self.interior.unit_part()
    }

    fn check_same_grid(&self, other: &FullSymbol) -> Result<()> {
        if Arc::ptr_eq(self.grid(), other.grid()) || self.grid() == other.grid() {
            Ok(())
        } else {
            Err(BdmError::Incompatible("symbols live on different grids".into()))
        }
    }

    /// Product in the symbol algebra.
    pub fn try_mul(&self, other: &FullSymbol) -> Result<FullSymbol> {
        self.check_same_grid(other)?;
        Ok(FullSymbol {
            interior: self.interior.mul(&other.interior),
            boundary: self.boundary.mul(&other.boundary),
        })
    }

    pub fn mul(&self, other: &FullSymbol) -> FullSymbol {
        self.try_mul(other).expect("compatible symbols")
    }

    pub fn add(&self, other: &FullSymbol) -> FullSymbol {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &FullSymbol) -> FullSymbol {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn axpy(&self, c: C64, other: &FullSymbol) -> FullSymbol {
        FullSymbol {
            interior: self.interior.add(&other.interior.scale(c)),
            boundary: self.boundary.axpy(c, &other.boundary),
        }
    }

    pub fn scale(&self, c: C64) -> FullSymbol {
        FullSymbol {
            interior: self.interior.scale(c),
            boundary: self.boundary.scale(c),
        }
    }

    /// Largest gap between each Toeplitz symbol and the boundary restriction of the interior.
    pub fn compatibility_defect(&self) -> Result<f64> {
        let g = self.grid();
        let mut worst: f64 = 0.0;
        for sign in SIGNS {
            for i1 in 0..g.n_x1 {
                let s = self.interior.restrict_to_boundary(i1, sign, g.symbol_modes, f64::INFINITY)?;
                let b = &self.boundary.block(i1, sign).sigma;
                for (x, y) in s.iter().zip(b) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn max_difference(&self, other: &FullSymbol) -> f64 {
        let i = self
            .interior
            .samples()
            .iter()
            .zip(other.interior.samples())
            .map(|(a, b)| (a - b).norm())
            .fold((self.unit_part() - other.unit_part()).norm(), f64::max);
        i.max(self.boundary.max_difference(&other.boundary))
    }
}

/// `tr′` of a single boundary operator.
pub fn tr_prime(block: &BoundaryBlock) -> C64 {
    block.tr_prime()
}
