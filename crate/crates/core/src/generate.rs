//! Serializable generator descriptors for admissible symbols, and seeded random draws.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BdmError, Result};
use crate::grid::{GridSet, C64};
use crate::symbol::{FullSymbol, GreenData, InteriorSymbol, TRANSMISSION_TOL};

fn cplx(z: [f64; 2]) -> C64 {
    C64::new(z[0], z[1])
}

/// Smooth cutoff in `x2`: one on `[0, flat]`, zero from `support` on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub flat: f64,
    pub support: f64,
}

impl Default for Profile {
    fn default() -> Self {
        Profile { flat: 0.0, support: 0.95 }
    }
}

impl Profile {
    pub fn eval(&self, x2: f64) -> f64 {
        if x2 <= self.flat {
            return 1.0;
        }
        if x2 >= self.support {
            return 0.0;
        }
        let s = (x2 - self.flat) / (self.support - self.flat);
        let bump = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        bump(1.0 - s) / (bump(1.0 - s) + bump(s))
    }
}

/// `coeff · e^{i p x1} · e^{i q θ} · x2^power · χ(x2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorTerm {
    pub coeff: [f64; 2],
    pub x1_mode: i64,
    pub theta_mode: i64,
    #[serde(default)]
    pub x2_power: u32,
}

/// `coeff · e^{i p x1} · left ⊗ right` in the Hardy basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenTerm {
    pub coeff: [f64; 2],
    pub x1_mode: i64,
    pub left: Vec<[f64; 2]>,
    pub right: Vec<[f64; 2]>,
    /// Restricts the term to one component of `S*X` (`1` or `−1`).
    #[serde(default)]
    pub component: Option<i8>,
}

/// `coeff · e^{i p x1} · vector` (potential column or trace row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorTerm {
    pub coeff: [f64; 2],
    pub x1_mode: i64,
    pub vector: Vec<[f64; 2]>,
    #[serde(default)]
    pub component: Option<i8>,
}

/// `coeff · e^{i p x1}` in the scalar corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarTerm {
    pub coeff: [f64; 2],
    pub x1_mode: i64,
    #[serde(default)]
    pub component: Option<i8>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolDescriptor {
    pub unit: [f64; 2],
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub interior: Vec<InteriorTerm>,
    #[serde(default)]
    pub green: Vec<GreenTerm>,
    #[serde(default)]
    pub potential: Vec<VectorTerm>,
    #[serde(default)]
    pub trace_row: Vec<VectorTerm>,
    #[serde(default)]
    pub scalar: Vec<ScalarTerm>,
}

fn on(component: Option<i8>, sign: i8) -> bool {
    component.is_none_or(|c| c == sign)
}

fn vector(entries: &[[f64; 2]]) -> DVector<C64> {
    DVector::from_iterator(entries.len(), entries.iter().map(|z| cplx(*z)))
}

impl SymbolDescriptor {
    pub fn scalar_unit(unit: C64) -> Self {
        SymbolDescriptor {
            unit: [unit.re, unit.im],
            ..Default::default()
        }
    }

    /// Odd fiber modes must vanish at the boundary.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.interior.iter().find(|t| t.theta_mode % 2 != 0 && t.x2_power == 0) {
            return Err(BdmError::Transmission(cplx(t.coeff).norm()));
        }
        if !(self.profile.flat >= 0.0 && self.profile.flat < self.profile.support) {
            return Err(BdmError::Config("profile needs 0 ≤ flat < support".into()));
        }
        Ok(())
    }

    pub fn interior_value(&self, x1: f64, x2: f64, theta: f64) -> C64 {
        let chi = self.profile.eval(x2);
        if chi == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.interior
            .iter()
            .map(|t| {
                cplx(t.coeff)
                    * C64::from_polar(1.0, t.x1_mode as f64 * x1 + t.theta_mode as f64 * theta)
                    * (x2.powi(t.x2_power as i32) * chi)
            })
            .sum()
    }

    fn green_data(&self, x1: f64, sign: i8) -> GreenData {
        let phase = |p: i64| C64::from_polar(1.0, p as f64 * x1);
        let mut out = GreenData {
            scalar: self
                .scalar
                .iter()
                .filter(|t| on(t.component, sign))
                .map(|t| cplx(t.coeff) * phase(t.x1_mode))
                .sum(),
            ..Default::default()
        };
        let terms: Vec<&GreenTerm> = self.green.iter().filter(|t| on(t.component, sign)).collect();
        if !terms.is_empty() {
            let rows = terms.iter().map(|t| t.left.len()).max().unwrap_or(0);
            let cols = terms.iter().map(|t| t.right.len()).max().unwrap_or(0);
            let mut g = DMatrix::from_element(rows, cols, C64::new(0.0, 0.0));
            for t in terms {
                let c = cplx(t.coeff) * phase(t.x1_mode);
                for (i, l) in t.left.iter().enumerate() {
                    for (j, r) in t.right.iter().enumerate() {
                        g[(i, j)] += c * cplx(*l) * cplx(*r);
                    }
                }
            }
            out.green = Some(g);
        }
        let sum_vectors = |list: &[VectorTerm]| -> Option<DVector<C64>> {
            let terms: Vec<&VectorTerm> = list.iter().filter(|t| on(t.component, sign)).collect();
            if terms.is_empty() {
                return None;
            }
            let len = terms.iter().map(|t| t.vector.len()).max().unwrap_or(0);
            let mut v = DVector::from_element(len, C64::new(0.0, 0.0));
            for t in terms {
                let c = cplx(t.coeff) * phase(t.x1_mode);
                v.rows_mut(0, t.vector.len()).zip_apply(&vector(&t.vector), |a, b| *a += c * b);
            }
            Some(v)
        };
        out.potential = sum_vectors(&self.potential);
        out.trace_row = sum_vectors(&self.trace_row);
        out
    }

    /// Samples the descriptor on `grid`.
    pub fn materialize(&self, grid: &Arc<GridSet>) -> Result<FullSymbol> {
        self.validate()?;
        let interior = InteriorSymbol::from_fn(grid.clone(), cplx(self.unit), |x1, x2, t| self.interior_value(x1, x2, t));
        let report = interior.check_transmission();
        if !report.passes(TRANSMISSION_TOL) {
            return Err(BdmError::Transmission(report.max_violation));
        }
        let xs: Vec<f64> = (0..grid.n_x1).map(|i| grid.x1(i)).collect();
        FullSymbol::from_interior(interior, |i1, sign| self.green_data(xs[i1], sign))
    }
}

/// Ranges for random admissible symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProfile {
    /// Largest `|k|` of the even fiber modes `e^{2ikθ}`.
    pub even_modes: i64,
    /// Largest `|p|` of `e^{ipx1}`.
    pub x1_degree: i64,
    /// Number of odd fiber terms, damped by `x2`.
    pub odd_terms: usize,
    pub green_rank: usize,
    pub green_dim: usize,
    pub amplitude: f64,
    pub profile: Profile,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        GeneratorProfile {
            even_modes: 2,
            x1_degree: 2,
            odd_terms: 2,
            green_rank: 2,
            green_dim: 3,
            amplitude: 0.4,
            profile: Profile::default(),
        }
    }
}

impl SymbolDescriptor {
    pub fn random(seed: u64, p: &GeneratorProfile) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = |scale: f64| -> [f64; 2] {
            let r = scale * rng.gen_range(0.0..1.0);
            let a = rng.gen_range(0.0..2.0 * PI);
            [r * a.cos(), r * a.sin()]
        };
        let amp = p.amplitude;
        let unit = {
            let d = z(0.5);
            [1.0 + d[0], d[1]]
        };
        let mut interior = Vec::new();
        for k in -p.even_modes..=p.even_modes {
            for q in -p.x1_degree..=p.x1_degree {
                let decay = 1.0 / (1 + k.abs() + q.abs()) as f64;
                interior.push(InteriorTerm {
                    coeff: z(amp * decay),
                    x1_mode: q,
                    theta_mode: 2 * k,
                    x2_power: 0,
                });
            }
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        for _ in 0..p.odd_terms {
            let k = rng2.gen_range(-p.even_modes..p.even_modes.max(1));
            let q = rng2.gen_range(-p.x1_degree..=p.x1_degree);
            interior.push(InteriorTerm {
                coeff: z(amp),
                x1_mode: q,
                theta_mode: 2 * k + 1,
                x2_power: 1,
            });
        }
        let mut green = Vec::new();
        for _ in 0..p.green_rank {
            let q = rng2.gen_range(-p.x1_degree..=p.x1_degree);
            let coeff = z(amp);
            let left = decaying(p.green_dim, &mut z);
            let right = decaying(p.green_dim, &mut z);
            green.push(GreenTerm {
                coeff,
                x1_mode: q,
                left,
                right,
                component: None,
            });
        }
        let q = rng2.gen_range(-p.x1_degree..=p.x1_degree);
        let coeff = z(amp);
        let potential = vec![VectorTerm {
            coeff,
            x1_mode: q,
            vector: decaying(p.green_dim, &mut z),
            component: None,
        }];
        let q = rng2.gen_range(-p.x1_degree..=p.x1_degree);
        let coeff = z(amp);
        let trace_row = vec![VectorTerm {
            coeff,
            x1_mode: q,
            vector: decaying(p.green_dim, &mut z),
            component: None,
        }];
        let scalar = (-1..=1)
            .map(|q| ScalarTerm {
                coeff: z(amp),
                x1_mode: q,
                component: None,
            })
            .collect();
        SymbolDescriptor {
            unit,
            profile: p.profile,
            interior,
            green,
            potential,
            trace_row,
            scalar,
        }
    }
}

fn decaying(len: usize, z: &mut dyn FnMut(f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    (0..len).map(|i| z(1.0 / (1 + i) as f64)).collect()
}

/// Random admissible symbol; redraws a bounded number of times if a validator fails.
pub fn generate_symbol(grid: &Arc<GridSet>, seed: u64, profile: &GeneratorProfile) -> Result<FullSymbol> {
    generate_descriptor(grid, seed, profile).map(|(_, s)| s)
}

/// As [`generate_symbol`], also returning the descriptor that produced the symbol.
pub fn generate_descriptor(grid: &Arc<GridSet>, seed: u64, profile: &GeneratorProfile) -> Result<(SymbolDescriptor, FullSymbol)> {
    let mut last = None;
    for attempt in 0..4u64 {
        let d = SymbolDescriptor::random(seed.wrapping_add(attempt << 32), profile);
        match d.materialize(grid) {
            Ok(s) => return Ok((d, s)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(BdmError::Config("generator failed".into())))
}
