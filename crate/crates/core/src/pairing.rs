//! Odd K-theory classes over matrices of symbols, their pairing with the class of
//! `(φ1, (i/4π)φ3)`, and two independent integer-valued checks: the winding of the
//! boundary determinant and the degree of an interior map into `SU(2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycles::{class_weight, phi1, phi3};
use crate::cohomology::Cochain;
use crate::error::{BdmError, Result};
use crate::generate::Profile;
use crate::grid::{GridSet, C64};
use crate::parallel;
use crate::symbol::{FullSymbol, GreenData, InteriorSymbol, SIGNS};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest defect of `u·u⁻¹ = 1` accepted for a representative.
pub const INVERSE_TOL: f64 = 1e-8;
/// Largest distance to an integer accepted after calibration.
pub const INTEGRALITY_TOL: f64 = 1e-3;

/// Square matrix of symbols; `None` entries are exact zeros and are skipped by cochains.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    grid: Arc<GridSet>,
    n: usize,
    entries: Vec<Option<FullSymbol>>,
}

impl SymbolMatrix {
    pub fn new(grid: Arc<GridSet>, n: usize, entries: Vec<Option<FullSymbol>>) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(BdmError::Shape {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(SymbolMatrix { grid, n, entries })
    }

    pub fn identity(grid: Arc<GridSet>, n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| (k / n == k % n).then(|| FullSymbol::unit(grid.clone())))
            .collect();
        SymbolMatrix { grid, n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Arc<GridSet> {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&FullSymbol> {
        self.entries[i * self.n + j].as_ref()
    }

    pub fn mul(&self, other: &SymbolMatrix) -> SymbolMatrix {
        let n = self.n;
        let entries = parallel::map_range(n * n, |k| {
            let (i, j) = (k / n, k % n);
            let mut acc: Option<FullSymbol> = None;
            for l in 0..n {
                if let (Some(a), Some(b)) = (self.entry(i, l), other.entry(l, j)) {
                    let p = a.mul(b);
                    acc = Some(match acc {
                        Some(s) => s.add(&p),
                        None => p,
                    });
                }
            }
            acc
        });
        SymbolMatrix {
            grid: self.grid.clone(),
            n,
            entries,
        }
    }

    /// `self − 1`.
    pub fn minus_identity(&self) -> SymbolMatrix {
        let n = self.n;
        let one = FullSymbol::unit(self.grid.clone());
        let entries = (0..n * n)
            .map(|k| {
                let e = self.entries[k].clone();
                if k / n == k % n {
                    Some(e.map_or_else(|| one.scale(-ONE), |a| a.sub(&one)))
                } else {
                    e
                }
            })
            .collect();
        SymbolMatrix {
            grid: self.grid.clone(),
            n,
            entries,
        }
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &SymbolMatrix) -> SymbolMatrix {
        let n = self.n + other.n;
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                match (i < self.n, j < self.n) {
                    (true, true) => self.entry(i, j).cloned(),
                    (false, false) => other.entry(i - self.n, j - self.n).cloned(),
                    _ => None,
                }
            })
            .collect();
        SymbolMatrix {
            grid: self.grid.clone(),
            n,
            entries,
        }
    }

    pub fn max_difference(&self, other: &SymbolMatrix) -> f64 {
        let zero = FullSymbol::zero(self.grid.clone());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| match (a, b) {
                (None, None) => 0.0,
                (a, b) => a.as_ref().unwrap_or(&zero).max_difference(b.as_ref().unwrap_or(&zero)),
            })
            .fold(0.0, f64::max)
    }
}

/// `(φ#tr)(A0, …, Ak) = Σ φ(A0[i0,i1], A1[i1,i2], …, Ak[ik,i0])`.
pub fn matrix_amplify(phi: &Cochain<FullSymbol>, n: usize) -> Cochain<SymbolMatrix> {
    let phi = phi.clone();
    Cochain::new(phi.degree(), move |args: &[SymbolMatrix]| {
        if let Some(m) = args.iter().find(|m| m.n != n) {
            return Err(BdmError::Incompatible(format!("{}×{} argument for a {n}×{n} cochain", m.n, m.n)));
        }
        let k = args.len();
        let tuples: Vec<Vec<usize>> = (0..n.pow(k as u32))
            .map(|mut t| {
                (0..k)
                    .map(|_| {
                        let d = t % n;
                        t /= n;
                        d
                    })
                    .collect()
            })
            .filter(|idx: &Vec<usize>| (0..k).all(|j| args[j].entry(idx[j], idx[(j + 1) % k]).is_some()))
            .collect();
        let values = parallel::map_slice(&tuples, |idx| {
            let entries: Vec<FullSymbol> = (0..k)
                .map(|j| args[j].entry(idx[j], idx[(j + 1) % k]).cloned().expect("filtered"))
                .collect();
            phi.evaluate(&entries)
        });
        let mut acc = ZERO;
        for v in values {
            acc += v?;
        }
        Ok(acc)
    })
}

/// An invertible matrix of symbols equal to the identity at infinity, with its inverse.
#[derive(Clone, Debug)]
pub struct K1Representative {
    u: SymbolMatrix,
    inverse: SymbolMatrix,
}

impl K1Representative {
    pub fn new(u: SymbolMatrix, inverse: SymbolMatrix) -> Result<Self> {
        if u.n != inverse.n {
            return Err(BdmError::Incompatible("representative and inverse differ in size".into()));
        }
        let n = u.n;
        for m in [&u, &inverse] {
            for i in 0..n {
                for j in 0..n {
                    let unit = m.entry(i, j).map_or(ZERO, |a| a.unit_part());
                    let expect = if i == j { ONE } else { ZERO };
                    if (unit - expect).norm() > 0.0 {
                        return Err(BdmError::Incompatible(format!(
                            "entry ({i},{j}) is not trivial at infinity (unit part {unit})"
                        )));
                    }
                }
            }
        }
        let id = SymbolMatrix::identity(u.grid.clone(), n);
        let residual = u.mul(&inverse).max_difference(&id).max(inverse.mul(&u).max_difference(&id));
        if residual > INVERSE_TOL {
            return Err(BdmError::NotInvertible(residual));
        }
        Ok(K1Representative { u, inverse })
    }

    pub fn u(&self) -> &SymbolMatrix {
        &self.u
    }

    pub fn inverse(&self) -> &SymbolMatrix {
        &self.inverse
    }

    pub fn size(&self) -> usize {
        self.u.n
    }

    pub fn direct_sum(&self, other: &K1Representative) -> Result<K1Representative> {
        K1Representative::new(self.u.direct_sum(&other.u), self.inverse.direct_sum(&other.inverse))
    }

    pub fn product(&self, other: &K1Representative) -> Result<K1Representative> {
        K1Representative::new(self.u.mul(&other.u), other.inverse.mul(&self.inverse))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingConstants {
    /// Overall normalization, `[re, im]`.
    pub n1: [f64; 2],
    /// Relative weight of the degree-3 term, `[re, im]`.
    pub c3: [f64; 2],
}

impl PairingConstants {
    pub fn new(n1: C64, c3: C64) -> Self {
        PairingConstants {
            n1: [n1.re, n1.im],
            c3: [c3.re, c3.im],
        }
    }

    pub fn n1(&self) -> C64 {
        C64::new(self.n1[0], self.n1[1])
    }

    pub fn c3(&self) -> C64 {
        C64::new(self.c3[0], self.c3[1])
    }

    /// `N1 = c3 = 1`.
    pub fn raw() -> Self {
        PairingConstants::new(ONE, ONE)
    }
}

/// The two cochain values entering the pairing and their weighted sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingTerms {
    /// `φ1#tr(u⁻¹ − 1, u − 1)`
    pub phi1: C64,
    /// `φ3#tr(u⁻¹ − 1, u − 1, u⁻¹ − 1, u − 1)`
    pub phi3: C64,
    pub pairing: C64,
}

impl PairingTerms {
    pub fn with_constants(&self, k: &PairingConstants) -> C64 {
        k.n1() * (self.phi1 + k.c3() * class_weight() * self.phi3)
    }
}

pub fn chern_pairing(u: &K1Representative, constants: &PairingConstants) -> Result<PairingTerms> {
    let n = u.size();
    let a = u.inverse.minus_identity();
    let b = u.u.minus_identity();
    let p1 = matrix_amplify(&phi1(), n).evaluate(&[a.clone(), b.clone()])?;
    let p3 = matrix_amplify(&phi3(), n).evaluate(&[a.clone(), b.clone(), a, b])?;
    let mut t = PairingTerms {
        phi1: p1,
        phi3: p3,
        pairing: ZERO,
    };
    t.pairing = t.with_constants(constants);
    Ok(t)
}

/// Winding of `x1 ↦ det u(x1)` on each component of `S*X`, summed with the boundary
/// orientation (the `ξ1 = −1` component counts negatively).
pub fn det_winding_oracle(u: &K1Representative) -> Result<i64> {
    let m = u.u();
    let g = m.grid().clone();
    let n = m.size();
    let mut dim = 1;
    for e in m.entries.iter().flatten() {
        for b in e.boundary.blocks() {
            if b.sigma.iter().any(|z| z.norm() > 1e-12) {
                return Err(BdmError::Oracle("boundary part is not unit plus trace class".into()));
            }
            dim = dim.max(b.green.nrows()).max(b.green.ncols()).max(b.potential.len()).max(b.trace_row.len());
        }
    }
    let mut total = 0i64;
    for sign in SIGNS {
        let dets = parallel::map_range(g.n_x1, |i1| {
            let size = n * (dim + 1);
            let mut big = DMatrix::from_element(size, size, ZERO);
            for i in 0..n {
                for j in 0..n {
                    let Some(e) = m.entry(i, j) else { continue };
                    let mut blk = e.boundary.block(i1, sign).dense(dim);
                    for d in 0..=dim {
                        blk[(d, d)] += e.unit_part();
                    }
                    big.view_mut((i * (dim + 1), j * (dim + 1)), (dim + 1, dim + 1)).copy_from(&blk);
                }
            }
            big.determinant()
        });
        let mut turns = 0.0;
        for i in 0..dets.len() {
            let (d0, d1) = (dets[i], dets[(i + 1) % dets.len()]);
            if d0.norm() < 1e-8 {
                return Err(BdmError::Oracle(format!("determinant {:.2e} too close to zero", d0.norm())));
            }
            let step = (d1 / d0).arg();
            if step.abs() > PI / 2.0 {
                return Err(BdmError::Oracle("determinant phase under-resolved; refine n_x1".into()));
            }
            turns += step;
        }
        let w = turns / (2.0 * PI);
        if (w - w.round()).abs() > 1e-6 {
            return Err(BdmError::Oracle(format!("non-integral winding {w}")));
        }
        total += sign as i64 * w.round() as i64;
    }
    Ok(total)
}

fn quaternion(u: &SymbolMatrix, k: usize) -> Vector4<f64> {
    let val = |i: usize, j: usize| u.entry(i, j).map_or(ZERO, |a| a.interior.value(k));
    let (a, b) = (val(0, 0), val(0, 1));
    // u = [[a0 + i a3, a2 + i a1], [−a2 + i a1, a0 − i a3]]
    Vector4::new(a.re, b.im, b.re, a.im)
}

/// Orthonormal tangent frame at `q` with `det[q, v1, v2, v3] = 1`.
fn tangent_frame(q: &Vector4<f64>) -> [Vector4<f64>; 3] {
    let mut basis: Vec<Vector4<f64>> = vec![*q];
    for e in 0..4 {
        let mut v = Vector4::zeros();
        v[e] = 1.0;
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 0.3 && basis.len() < 4 {
            basis.push(v.normalize());
        }
    }
    let m = nalgebra::Matrix4::from_columns(&basis);
    if m.determinant() < 0.0 {
        basis[3] = -basis[3];
    }
    [basis[1], basis[2], basis[3]]
}

/// Signed count of preimages of `q` under the piecewise-linear interpolation of the
/// interior map on the Freudenthal triangulation of the grid.
fn preimage_count(u: &SymbolMatrix, q: &Vector4<f64>) -> Result<i64> {
    let g = u.grid().clone();
    let (n1, n2, nt) = (g.n_x1, g.n_x2, g.n_theta);
    let frame = tangent_frame(q);
    let chart = |k: usize| -> Option<Vector3<f64>> {
        let a = quaternion(u, k);
        let a = a / a.norm();
        let h = a.dot(q);
        (h > 0.2).then(|| Vector3::new(a.dot(&frame[0]), a.dot(&frame[1]), a.dot(&frame[2])) / h)
    };
    const PERMS: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([2, 1, 0], -1.0),
    ];
    let counts = parallel::map_range(n1, |i1| -> Result<i64> {
        let mut count = 0;
        for i2 in 0..n2 - 1 {
            for it in 0..nt {
                for (perm, orient) in PERMS {
                    let mut idx = [i1, i2, it];
                    let mut pts = Vec::with_capacity(4);
                    let at = |idx: [usize; 3]| g.index(idx[0] % n1, idx[1], idx[2] % nt);
                    pts.push(chart(at(idx)));
                    for axis in perm {
                        idx[axis] += 1;
                        pts.push(chart(at(idx)));
                    }
                    let Some(y): Option<Vec<Vector3<f64>>> = pts.into_iter().collect() else {
                        continue;
                    };
                    let m = Matrix3::from_columns(&[y[1] - y[0], y[2] - y[0], y[3] - y[0]]);
                    let det = m.determinant();
                    if det == 0.0 {
                        continue;
                    }
                    let Some(inv) = m.try_inverse() else { continue };
                    let lam = inv * (-y[0]);
                    let l0 = 1.0 - lam.sum();
                    let bary = [l0, lam[0], lam[1], lam[2]];
                    if bary.iter().all(|&b| b > 0.0) {
                        if bary.iter().any(|&b| b < 1e-10) {
                            return Err(BdmError::Oracle("regular value too close to a critical value".into()));
                        }
                        count += (orient * det.signum()) as i64;
                    }
                }
            }
        }
        Ok(count)
    });
    counts.into_iter().sum()
}

/// Degree of the interior map of a 2×2 representative into `SU(2) ≅ S³`, by majority vote
/// over three random regular values in the hemisphere opposite the identity.
pub fn degree_oracle(u: &K1Representative, seed: u64) -> Result<i64> {
    if u.size() != 2 {
        return Err(BdmError::Oracle(format!("degree needs a 2×2 representative, got {}", u.size())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut votes = Vec::new();
    let mut attempts = 0;
    while votes.len() < 3 {
        attempts += 1;
        if attempts > 12 {
            return Err(BdmError::Oracle("no regular value found".into()));
        }
        let mut q: Vector4<f64> = Vector4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        q[0] = -q[0].abs() - 0.2;
        let q = q.normalize();
        match preimage_count(u.u(), &q) {
            Ok(d) => votes.push(d),
            Err(BdmError::Oracle(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    votes.sort();
    if votes[0] != votes[1] && votes[1] != votes[2] {
        return Err(BdmError::Oracle(format!("inconsistent preimage counts {votes:?}")));
    }
    Ok(votes[1])
}

/// JSON description of a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassDescriptor {
    Unit {
        #[serde(default = "one_size")]
        size: usize,
    },
    /// `1 + (z(x1) − 1)P` on one component, `z = e^{ikx1}(1 + wobble·cos x1)`,
    /// `P` the projection on the first Hardy mode.
    BoundaryWinding {
        k: i64,
        #[serde(default = "plus")]
        component: i8,
        #[serde(default)]
        wobble: f64,
    },
    /// `cos f + i (sin f/r) p·σ` on an ellipsoid in `(x1, x2, θ)`, `f = π·step(r)` with
    /// a smooth step falling from 1 at the center to 0 on the ellipsoid.
    Bott {
        center: [f64; 3],
        radii: [f64; 3],
        #[serde(default)]
        reflect: bool,
    },
    /// `e^{i·amplitude·χ}` for a bump `χ` in the interior.
    ScalarInterior {
        center: [f64; 3],
        radii: [f64; 3],
        amplitude: f64,
    },
    Sum {
        parts: Vec<ClassDescriptor>,
    },
}

fn one_size() -> usize {
    1
}

fn plus() -> i8 {
    1
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

/// Normalized offsets from an ellipsoid center; the periodic directions wrap.
fn local(center: &[f64; 3], radii: &[f64; 3], x1: f64, x2: f64, t: f64) -> [f64; 3] {
    [
        wrap(x1 - center[0]) / radii[0],
        (x2 - center[1]) / radii[1],
        wrap(t - center[2]) / radii[2],
    ]
}

fn scalar_matrix(grid: &Arc<GridSet>, f: impl Fn(f64, f64, f64) -> C64 + Sync) -> Result<FullSymbol> {
    let interior = InteriorSymbol::from_fn(grid.clone(), ONE, |x1, x2, t| f(x1, x2, t) - 1.0);
    FullSymbol::from_interior(interior, |_, _| GreenData::default())
}

fn interior_entry(grid: &Arc<GridSet>, unit: C64, f: impl Fn(f64, f64, f64) -> C64 + Sync) -> Result<FullSymbol> {
    let interior = InteriorSymbol::from_fn(grid.clone(), unit, |x1, x2, t| f(x1, x2, t) - unit);
    FullSymbol::from_interior(interior, |_, _| GreenData::default())
}

impl ClassDescriptor {
    pub fn id(&self) -> String {
        match self {
            ClassDescriptor::Unit { size } => format!("unit{size}"),
            ClassDescriptor::BoundaryWinding { k, component, wobble } => {
                format!("winding(k={k},component={component},wobble={wobble})")
            }
            ClassDescriptor::Bott { reflect, .. } => format!("bott(reflect={reflect})"),
            ClassDescriptor::ScalarInterior { amplitude, .. } => format!("scalar(amplitude={amplitude})"),
            ClassDescriptor::Sum { parts } => {
                let ids: Vec<String> = parts.iter().map(|p| p.id()).collect();
                format!("sum[{}]", ids.join(","))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassDescriptor::Unit { size } if *size == 0 => Err(BdmError::Config("unit class of size 0".into())),
            ClassDescriptor::BoundaryWinding { component, wobble, .. } => {
                if *component != 1 && *component != -1 {
                    return Err(BdmError::Config(format!("component must be ±1, got {component}")));
                }
                if wobble.abs() >= 1.0 {
                    return Err(BdmError::Config("wobble must stay below 1 to keep the family invertible".into()));
                }
                Ok(())
            }
            ClassDescriptor::Bott { center, radii, .. } | ClassDescriptor::ScalarInterior { center, radii, .. } => {
                check_box(center, radii)
            }
            ClassDescriptor::Sum { parts } if parts.is_empty() => Err(BdmError::Config("empty sum".into())),
            ClassDescriptor::Sum { parts } => parts.iter().try_for_each(|p| p.validate()),
            _ => Ok(()),
        }
    }

    pub fn build(&self, grid: &Arc<GridSet>) -> Result<K1Representative> {
        self.validate()?;
        match self {
            ClassDescriptor::Unit { size } => {
                let id = SymbolMatrix::identity(grid.clone(), *size);
                K1Representative::new(id.clone(), id)
            }
            ClassDescriptor::BoundaryWinding { k, component, wobble } => {
                let z = |x1: f64| C64::from_polar(1.0 + wobble * x1.cos(), *k as f64 * x1);
                let entry = |inv: bool| -> Result<FullSymbol> {
                    let interior = InteriorSymbol::constant(grid.clone(), ONE);
                    let xs: Vec<f64> = (0..grid.n_x1).map(|i| grid.x1(i)).collect();
                    FullSymbol::from_interior(interior, |i1, sign| {
                        if sign != *component {
                            return GreenData::default();
                        }
                        let v = if inv { z(xs[i1]).inv() } else { z(xs[i1]) };
                        GreenData {
                            green: Some(DMatrix::from_element(1, 1, v - 1.0)),
                            ..Default::default()
                        }
                    })
                };
                let one = |e| SymbolMatrix::new(grid.clone(), 1, vec![Some(e)]);
                K1Representative::new(one(entry(false)?)?, one(entry(true)?)?)
            }
            ClassDescriptor::Bott {
                center,
                radii,
                reflect,
            } => {
                let step = Profile { flat: 0.0, support: 1.0 };
                // u = cos f + i s (p·σ), s = sin f / r
                let field = move |x1: f64, x2: f64, t: f64| -> (f64, [f64; 3]) {
                    let mut p = local(center, radii, x1, x2, t);
                    if *reflect {
                        p[0] = -p[0];
                    }
                    let r2 = p.iter().map(|v| v * v).sum::<f64>();
                    if r2 >= 1.0 {
                        return (1.0, [0.0; 3]);
                    }
                    let r = r2.sqrt();
                    let f = PI * step.eval(r);
                    let s = if r < 1e-12 { 0.0 } else { f.sin() / r };
                    (f.cos(), [s * p[0], s * p[1], s * p[2]])
                };
                let build = |conj: bool| -> Result<SymbolMatrix> {
                    let sg = if conj { -1.0 } else { 1.0 };
                    let e00 = interior_entry(grid, ONE, |x1, x2, t| {
                        let (c, v) = field(x1, x2, t);
                        C64::new(c, sg * v[2])
                    })?;
                    let e01 = interior_entry(grid, ZERO, |x1, x2, t| {
                        let (_, v) = field(x1, x2, t);
                        C64::new(v[1], v[0]) * sg
                    })?;
                    let e10 = interior_entry(grid, ZERO, |x1, x2, t| {
                        let (_, v) = field(x1, x2, t);
                        C64::new(-v[1], v[0]) * sg
                    })?;
                    let e11 = interior_entry(grid, ONE, |x1, x2, t| {
                        let (c, v) = field(x1, x2, t);
                        C64::new(c, -sg * v[2])
                    })?;
                    SymbolMatrix::new(grid.clone(), 2, vec![Some(e00), Some(e01), Some(e10), Some(e11)])
                };
                K1Representative::new(build(false)?, build(true)?)
            }
            ClassDescriptor::ScalarInterior {
                center,
                radii,
                amplitude,
            } => {
                let bump = Profile { flat: 0.0, support: 1.0 };
                let phase = move |x1: f64, x2: f64, t: f64| {
                    let p = local(center, radii, x1, x2, t);
                    amplitude * bump.eval(p.iter().map(|v| v * v).sum::<f64>().sqrt())
                };
                let u = scalar_matrix(grid, |x1, x2, t| C64::from_polar(1.0, phase(x1, x2, t)))?;
                let v = scalar_matrix(grid, |x1, x2, t| C64::from_polar(1.0, -phase(x1, x2, t)))?;
                K1Representative::new(
                    SymbolMatrix::new(grid.clone(), 1, vec![Some(u)])?,
                    SymbolMatrix::new(grid.clone(), 1, vec![Some(v)])?,
                )
            }
            ClassDescriptor::Sum { parts } => {
                let mut acc = parts[0].build(grid)?;
                for p in &parts[1..] {
                    acc = acc.direct_sum(&p.build(grid)?)?;
                }
                Ok(acc)
            }
        }
    }

    /// The integer the pairing must reproduce, from the oracle matching the class.
    pub fn oracle(&self, grid: &Arc<GridSet>, seed: u64) -> Result<i64> {
        match self {
            ClassDescriptor::Unit { .. } | ClassDescriptor::BoundaryWinding { .. } | ClassDescriptor::ScalarInterior { .. } => {
                det_winding_oracle(&self.build(grid)?)
            }
            ClassDescriptor::Bott { .. } => degree_oracle(&self.build(grid)?, seed),
            ClassDescriptor::Sum { parts } => parts.iter().map(|p| p.oracle(grid, seed)).sum(),
        }
    }
}

fn check_box(center: &[f64; 3], radii: &[f64; 3]) -> Result<()> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii[0] > PI || radii[2] > PI {
        return Err(BdmError::Config(format!("invalid radii {radii:?}")));
    }
    if center[1] - radii[1] <= 0.0 {
        return Err(BdmError::Config("interior classes must stay away from the boundary x2 = 0".into()));
    }
    Ok(())
}

/// Boundary classes `k = −2..=2` on the `ξ1 = +1` component.
pub fn boundary_family() -> Vec<ClassDescriptor> {
    (-2..=2)
        .map(|k| ClassDescriptor::BoundaryWinding {
            k,
            component: 1,
            wobble: 0.0,
        })
        .collect()
}

/// The standard Bott class and its mirror image.
pub fn interior_family() -> Vec<ClassDescriptor> {
    [false, true]
        .into_iter()
        .map(|reflect| ClassDescriptor::Bott {
            center: [PI, 0.5, PI],
            radii: [2.5, 0.4, 2.5],
            reflect,
        })
        .collect()
}

/// One class with its raw cochain values and oracle.
#[derive(Clone, Debug)]
pub struct CalibrationSample {
    pub class_id: String,
    pub terms: PairingTerms,
    pub oracle: i64,
}

pub fn sample(desc: &ClassDescriptor, grid: &Arc<GridSet>, seed: u64) -> Result<CalibrationSample> {
    let u = desc.build(grid)?;
    Ok(CalibrationSample {
        class_id: desc.id(),
        terms: chern_pairing(&u, &PairingConstants::raw())?,
        oracle: desc.oracle(grid, seed)?,
    })
}

/// `N1` by least squares on the boundary samples, then `c3` by least squares on the
/// interior samples; every sample must land within [`INTEGRALITY_TOL`] of its oracle.
pub fn calibrate(boundary: &[CalibrationSample], interior: &[CalibrationSample]) -> Result<PairingConstants> {
    if boundary.is_empty() || interior.is_empty() {
        return Err(BdmError::Calibration("both oracle families must be non-empty".into()));
    }
    let (mut num, mut den) = (ZERO, 0.0);
    for s in boundary {
        num += s.terms.phi1.conj() * s.oracle as f64;
        den += s.terms.phi1.norm_sqr();
    }
    if den == 0.0 {
        return Err(BdmError::Calibration("boundary family has no φ1 signal".into()));
    }
    let n1 = num / den;
    let (mut num, mut den) = (ZERO, 0.0);
    for s in interior {
        let w = class_weight() * s.terms.phi3;
        num += w.conj() * (C64::new(s.oracle as f64, 0.0) / n1 - s.terms.phi1);
        den += w.norm_sqr();
    }
    if den == 0.0 {
        return Err(BdmError::Calibration("interior family has no φ3 signal".into()));
    }
    let constants = PairingConstants::new(n1, num / den);
    for s in boundary.iter().chain(interior) {
        let p = s.terms.with_constants(&constants);
        let gap = (p - C64::new(s.oracle as f64, 0.0)).norm();
        if gap > INTEGRALITY_TOL {
            return Err(BdmError::Calibration(format!(
                "{}: pairing {p} misses oracle {} by {gap:.3e}",
                s.class_id, s.oracle
            )));
        }
    }
    Ok(constants)
}

/// JSON record of one pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub class_id: String,
    pub phi1_term: [f64; 2],
    pub phi3_term: [f64; 2],
    pub pairing: [f64; 2],
    pub nearest_integer: i64,
    pub oracle: i64,
    pub gap: f64,
}

pub fn pairing_report(desc: &ClassDescriptor, grid: &Arc<GridSet>, constants: &PairingConstants, seed: u64) -> Result<PairingReport> {
    let s = sample(desc, grid, seed)?;
    let p = s.terms.with_constants(constants);
    Ok(PairingReport {
        class_id: s.class_id,
        phi1_term: [s.terms.phi1.re, s.terms.phi1.im],
        phi3_term: [s.terms.phi3.re, s.terms.phi3.im],
        pairing: [p.re, p.im],
        nearest_integer: p.re.round() as i64,
        oracle: s.oracle,
        gap: (p - C64::new(s.oracle as f64, 0.0)).norm(),
    })
}

/// Pairings along a path of classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub values: Vec<[f64; 2]>,
    /// Largest difference between two points of the path.
    pub spread: f64,
    pub nearest_integer: i64,
    /// Largest distance of a point to that integer.
    pub integrality_gap: f64,
}

pub fn homotopy_sweep(path: &[ClassDescriptor], grid: &Arc<GridSet>, constants: &PairingConstants) -> Result<HomotopyReport> {
    if path.is_empty() {
        return Err(BdmError::Config("empty homotopy path".into()));
    }
    let values = path
        .iter()
        .map(|d| Ok(chern_pairing(&d.build(grid)?, constants)?.pairing))
        .collect::<Result<Vec<C64>>>()?;
    let mut spread: f64 = 0.0;
    for a in &values {
        for b in &values {
            spread = spread.max((a - b).norm());
        }
    }
    let nearest = values[0].re.round();
    let gap = values.iter().map(|v| (v - nearest).norm()).fold(0.0, f64::max);
    Ok(HomotopyReport {
        values: values.iter().map(|v| [v.re, v.im]).collect(),
        spread,
        nearest_integer: nearest as i64,
        integrality_gap: gap,
    })
}

/// Calibrates on the standard boundary and interior families over `grid`.
pub fn calibrate_on(grid: &Arc<GridSet>, seed: u64) -> Result<PairingConstants> {
    let take = |family: Vec<ClassDescriptor>| family.iter().map(|d| sample(d, grid, seed)).collect::<Result<Vec<_>>>();
    calibrate(&take(boundary_family())?, &take(interior_family())?)
}
