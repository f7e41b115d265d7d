//! The odd cochains on the symbol algebra and the checks of their cocycle relations.
//!
//! ```text
//! φ1(a0, a1)         = ½ ∫_{S*X} tr′(a0 da1 − a1 da0)
//! φ3(a0, a1, a2, a3) = ∫_{S*M} a0 da1 da2 da3
//! ```
//!
//! `S*X` carries the boundary orientation of the co-ball bundle, so its `ξ1 = −1`
//! component counts negatively.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cohomology::{connes_b, connes_b0, hochschild_b, Algebra, Cochain};
use crate::error::{BdmError, Result};
use crate::forms::{integrate_sstar_m, wedge, Form};
use crate::grid::{integrate_sstar_x_oriented, BoundaryFunction, GridSet, C64};
use crate::parallel;
use crate::symbol::{BoundaryBlock, BoundarySymbol, FullSymbol, SIGNS};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `i/(4π)`, the weight of the degree-3 cochain in the class.
pub fn class_weight() -> C64 {
    C64::new(0.0, 1.0 / (4.0 * PI))
}

/// The weight for which `bφ1 = −w·Bφ3` holds with `B = N B0`: a third of
/// [`class_weight`], since `N` contributes three equal rotations on `B0φ3`.
pub fn consistent_weight() -> C64 {
    class_weight() / 3.0
}

/// The unitized symbol algebra on a fixed grid.
#[derive(Clone, Debug)]
pub struct SymbolAlgebra {
    pub grid: Arc<GridSet>,
    pub tolerance: f64,
}

impl SymbolAlgebra {
    pub fn new(grid: Arc<GridSet>) -> Self {
        SymbolAlgebra { grid, tolerance: 1e-6 }
    }
}

impl Algebra for SymbolAlgebra {
    type Elem = FullSymbol;

    fn mul(&self, a: &FullSymbol, b: &FullSymbol) -> FullSymbol {
        a.mul(b)
    }

    fn add(&self, a: &FullSymbol, b: &FullSymbol) -> FullSymbol {
        a.add(b)
    }

    fn scale(&self, a: &FullSymbol, c: C64) -> FullSymbol {
        a.scale(c)
    }

    fn unit(&self) -> FullSymbol {
        FullSymbol::unit(self.grid.clone())
    }

    fn zero(&self) -> FullSymbol {
        FullSymbol::zero(self.grid.clone())
    }

    fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

fn same_grid(args: &[&FullSymbol]) -> Result<()> {
    let g = args[0].grid();
    if args.iter().all(|a| Arc::ptr_eq(a.grid(), g) || a.grid() == g) {
        Ok(())
    } else {
        Err(BdmError::Incompatible("cochain arguments live on different grids".into()))
    }
}

/// `∫_{S*M} a0 da1 da2 da3` over the interior parts.
pub fn phi3_value(a0: &FullSymbol, a1: &FullSymbol, a2: &FullSymbol, a3: &FullSymbol) -> Result<C64> {
    same_grid(&[a0, a1, a2, a3])?;
    let grid = a0.grid();
    let one_form = |a: &FullSymbol| {
        let g = a.interior.gradient();
        Form::new(1, g.to_vec())
    };
    let vol = wedge(&wedge(&one_form(a1)?, &one_form(a2)?)?, &one_form(a3)?)?;
    let weight: Vec<C64> = (0..grid.len()).map(|k| a0.interior.value(k)).collect();
    integrate_sstar_m(grid, &vol.scale_by(&weight))
}

/// `tr′(x·y)` at every point of `S*X` for boundary symbols `x` (with unit) and `y`.
fn tr_prime_of_product(x: &BoundarySymbol, y: &BoundarySymbol) -> BoundaryFunction {
    let cap = x.grid().hardy_dim;
    let n = x.grid().n_x1;
    let (u, v) = (x.unit_part(), y.unit_part());
    let values = parallel::map_range(2 * n, |k| {
        BoundaryBlock::compose(u, &x.blocks()[k], v, &y.blocks()[k], cap).tr_prime()
    });
    BoundaryFunction::new(values[..n].to_vec(), values[n..].to_vec())
}

/// `½ ∫_{S*X} tr′(a0 da1 − a1 da0)`.
pub fn phi1_value(a0: &FullSymbol, a1: &FullSymbol) -> Result<C64> {
    same_grid(&[a0, a1])?;
    let left = tr_prime_of_product(&a0.boundary, &a1.boundary.d_boundary());
    let right = tr_prime_of_product(&a1.boundary, &a0.boundary.d_boundary());
    let diff = BoundaryFunction {
        values: left
            .values
            .iter()
            .zip(&right.values)
            .map(|(l, r)| l.iter().zip(r).map(|(a, b)| a - b).collect())
            .collect(),
    };
    Ok(integrate_sstar_x_oriented(&diff)? * 0.5)
}

pub fn phi1() -> Cochain<FullSymbol> {
    Cochain::new(1, |a: &[FullSymbol]| phi1_value(&a[0], &a[1]))
}

pub fn phi3() -> Cochain<FullSymbol> {
    Cochain::new(3, |a: &[FullSymbol]| phi3_value(&a[0], &a[1], &a[2], &a[3]))
}

/// Residuals of the three cocycle relations at one tuple.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CocycleReport {
    /// `|(Bφ1)(a0)|`
    pub res_bphi1_connes: f64,
    /// `|(bφ3)(a0, …, a4)|`
    pub res_bphi3: f64,
    /// `|(bφ1)(a0,a1,a2) + (i/4π)(Bφ3)(a0,a1,a2)|`
    pub res_mixed: f64,
    /// Same with the weight `i/(12π)`.
    pub res_mixed_consistent: f64,
    pub b_phi1: [f64; 2],
    pub connes_b_phi3: [f64; 2],
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Evaluates the relations through the generic operators on `a[0..5]`.
pub fn symbol_residuals(alg: &Arc<SymbolAlgebra>, a: &[FullSymbol]) -> Result<CocycleReport> {
    cocycle_residuals(alg, &phi1(), &phi3(), a)
}

/// The relations for an arbitrary pair of odd cochains over any algebra.
pub fn cocycle_residuals<A: Algebra>(
    alg: &Arc<A>,
    p1: &Cochain<A::Elem>,
    p3: &Cochain<A::Elem>,
    a: &[A::Elem],
) -> Result<CocycleReport> {
    if a.len() < 5 {
        return Err(BdmError::Arity { degree: 4, args: a.len() });
    }
    let big_b1 = connes_b(alg, p1)?.evaluate(&a[..1])?;
    let b3 = hochschild_b(alg, p3).evaluate(&a[..5])?;
    let b1 = hochschild_b(alg, p1).evaluate(&a[..3])?;
    let big_b3 = connes_b(alg, p3)?.evaluate(&a[..3])?;
    Ok(CocycleReport {
        res_bphi1_connes: big_b1.norm(),
        res_bphi3: b3.norm(),
        res_mixed: (b1 + class_weight() * big_b3).norm(),
        res_mixed_consistent: (b1 + consistent_weight() * big_b3).norm(),
        b_phi1: pair(b1),
        connes_b_phi3: pair(big_b3),
    })
}

/// `∫∫ a0 (a1_x1 a2_ξ2 − a1_ξ2 a2_x1) |_{ξ1=−1}^{ξ1=1} dx1 dξ2` from the Toeplitz symbols.
///
/// On the Cayley circle `ξ2 = cot(φ/2)` the measure `dξ2` and one `ξ2`-derivative cancel,
/// leaving `−∫_0^{2π} σ0 (σ1_x1 ∂φσ2 − ∂φσ1 σ2_x1) dφ`, evaluated exactly on Fourier modes.
pub fn chart_double_integral(a0: &FullSymbol, a1: &FullSymbol, a2: &FullSymbol) -> Result<C64> {
    same_grid(&[a0, a1, a2])?;
    let grid = a0.grid();
    let n = grid.n_x1;
    let d1 = a1.boundary.d_boundary();
    let d2 = a2.boundary.d_boundary();
    let mut total = ZERO;
    for sign in SIGNS.iter() {
        let rows = parallel::map_range(n, |i1| {
            let s0 = with_unit(&a0.boundary.block(i1, *sign).sigma, a0.unit_part());
            let s1 = &a1.boundary.block(i1, *sign).sigma;
            let s2 = &a2.boundary.block(i1, *sign).sigma;
            let s1x = &d1.block(i1, *sign).sigma;
            let s2x = &d2.block(i1, *sign).sigma;
            let t = triple_mean(&s0, s1x, &angle_derivative(s2)) - triple_mean(&s0, &angle_derivative(s1), s2x);
            -t * (2.0 * PI)
        });
        let sum: C64 = rows.iter().sum();
        total += sum * (2.0 * PI / n as f64) * (*sign as f64);
    }
    Ok(total)
}

fn with_unit(sigma: &[C64], u: C64) -> Vec<C64> {
    let mut s = sigma.to_vec();
    let k = s.len() / 2;
    s[k] += u;
    s
}

fn angle_derivative(sigma: &[C64]) -> Vec<C64> {
    let k = (sigma.len() / 2) as i64;
    sigma
        .iter()
        .enumerate()
        .map(|(i, z)| z * C64::new(0.0, (i as i64 - k) as f64))
        .collect()
}

/// Zero mode of the product of three circle functions.
fn triple_mean(a: &[C64], b: &[C64], c: &[C64]) -> C64 {
    let k = (a.len() / 2) as i64;
    let mut acc = ZERO;
    for (i, x) in a.iter().enumerate() {
        if *x == ZERO {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            let m = -((i as i64 - k) + (j as i64 - k));
            if m.abs() <= k {
                acc += x * y * c[(m + k) as usize];
            }
        }
    }
    acc
}

/// `∫_{x2=0} a0 da1 ∧ da2` over the torus `(x1, θ)` from interior samples.
pub fn boundary_torus_integral(a0: &FullSymbol, a1: &FullSymbol, a2: &FullSymbol) -> Result<C64> {
    same_grid(&[a0, a1, a2])?;
    let g = a0.grid();
    let (g1, g2) = (a1.interior.gradient(), a2.interior.gradient());
    let mut acc = ZERO;
    for i1 in 0..g.n_x1 {
        for it in 0..g.n_theta {
            let k = g.index(i1, 0, it);
            acc += a0.interior.value(k) * (g1[0][k] * g2[2][k] - g1[2][k] * g2[0][k]);
        }
    }
    Ok(acc * g.h_x1() * g.h_theta())
}

/// The links of the boundary reduction of `Bφ3`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StokesChainReport {
    /// `(Bφ3)(a0, a1, a2)` through the generic operators.
    pub connes_b: [f64; 2],
    /// `(B0φ3)(a0, a1, a2) = ∫_{S*M} da0 da1 da2`.
    pub b0: [f64; 2],
    /// `∫_{∂S*M} a0 da1 da2`.
    pub torus: [f64; 2],
    /// Chart-side double integral.
    pub chart: [f64; 2],
    /// `|Bφ3 − chart|`.
    pub gap_direct: f64,
    /// `|B0φ3 − torus|` (Stokes).
    pub gap_stokes: f64,
    /// `|torus − chart|` (change of variables).
    pub gap_chart: f64,
    /// `|Bφ3 − 3·chart|`.
    pub gap_rotations: f64,
}

pub fn stokes_chain(alg: &Arc<SymbolAlgebra>, a0: &FullSymbol, a1: &FullSymbol, a2: &FullSymbol) -> Result<StokesChainReport> {
    let args = [a0.clone(), a1.clone(), a2.clone()];
    let big_b = connes_b(alg, &phi3())?.evaluate(&args)?;
    let b0 = connes_b0(alg, &phi3())?.evaluate(&args)?;
    let torus = boundary_torus_integral(a0, a1, a2)?;
    let chart = chart_double_integral(a0, a1, a2)?;
    Ok(StokesChainReport {
        connes_b: pair(big_b),
        b0: pair(b0),
        torus: pair(torus),
        chart: pair(chart),
        gap_direct: (big_b - chart).norm(),
        gap_stokes: (b0 - torus).norm(),
        gap_chart: (torus - chart).norm(),
        gap_rotations: (big_b - chart * 3.0).norm(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FedosovReport {
    /// `2(bφ1)(a0, a1, a2)`
    pub lhs: [f64; 2],
    /// `−(i/2π)` times the chart-side double integral.
    pub rhs: [f64; 2],
    pub gap: f64,
}

/// Both sides of the commutator-trace step for `bφ1`.
pub fn fedosov_step_check(alg: &Arc<SymbolAlgebra>, a0: &FullSymbol, a1: &FullSymbol, a2: &FullSymbol) -> Result<FedosovReport> {
    let lhs = hochschild_b(alg, &phi1()).evaluate(&[a0.clone(), a1.clone(), a2.clone()])? * 2.0;
    let rhs = C64::new(0.0, -1.0 / (2.0 * PI)) * chart_double_integral(a0, a1, a2)?;
    Ok(FedosovReport {
        lhs: pair(lhs),
        rhs: pair(rhs),
        gap: (lhs - rhs).norm(),
    })
}

/// `tr′[T(σ1), T(σ2)]` through the structured block product.
pub fn commutator_tr_prime(sigma1: &[C64], sigma2: &[C64], cap: usize) -> C64 {
    let block = |s: &[C64]| BoundaryBlock {
        sigma: s.to_vec(),
        ..BoundaryBlock::zero(s.len() / 2)
    };
    let (a, b) = (block(sigma1), block(sigma2));
    let ab = BoundaryBlock::compose(ZERO, &a, ZERO, &b, cap);
    let ba = BoundaryBlock::compose(ZERO, &b, ZERO, &a, cap);
    ab.tr_prime() - ba.tr_prime()
}

/// `−(i/2π) ∫ σ1′ σ2 dξ2` from circle coefficients (`= −Σ_m m σ1_m σ2_{−m}`).
pub fn fedosov_integral(sigma1: &[C64], sigma2: &[C64]) -> C64 {
    let k = (sigma1.len() / 2) as i64;
    let k2 = (sigma2.len() / 2) as i64;
    let mut acc = ZERO;
    for m in -k.min(k2)..=k.min(k2) {
        acc -= sigma1[(m + k) as usize] * sigma2[(k2 - m) as usize] * m as f64;
    }
    acc
}
