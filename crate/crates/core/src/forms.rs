//! Sampled differential forms on `S*M` in the coordinate basis `dx1, dx2, dθ`.

use std::io::Write;

use crate::error::{BdmError, Result};
use crate::grid::{differentiate, integrate_volume, Direction, GridSet, C64};
use crate::parallel;

/// Basis multi-indices of each degree, as bitmasks over `(x1, x2, θ)` in
/// lexicographic order.
const BASIS: [&[u8]; 4] = [&[0b000], &[0b001, 0b010, 0b100], &[0b011, 0b101, 0b110], &[0b111]];

fn basis_position(degree: usize, mask: u8) -> usize {
    BASIS[degree].iter().position(|&m| m == mask).expect("valid mask")
}

/// Sign of `e_I ∧ e_J` relative to `e_{I∪J}` for disjoint index sets.
fn merge_sign(left: u8, right: u8) -> f64 {
    // count pairs (i in left, j in right) with i > j
    let mut inversions = 0;
    for i in 0..3 {
        if left & (1 << i) == 0 {
            continue;
        }
        for j in 0..i {
            if right & (1 << j) != 0 {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub degree: usize,
    /// One sample array per basis element, `C(3, degree)` in total.
    pub components: Vec<Vec<C64>>,
}

impl Form {
    pub fn new(degree: usize, components: Vec<Vec<C64>>) -> Result<Self> {
        if degree > 3 {
            return Err(BdmError::DegreeOverflow(degree, 0));
        }
        if components.len() != BASIS[degree].len() {
            return Err(BdmError::Shape {
                expected: BASIS[degree].len(),
                found: components.len(),
            });
        }
        let n = components[0].len();
        if let Some(bad) = components.iter().find(|c| c.len() != n) {
            return Err(BdmError::Shape {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Form { degree, components })
    }

    pub fn zero(grid: &GridSet, degree: usize) -> Self {
        Form {
            degree,
            components: vec![vec![C64::new(0.0, 0.0); grid.len()]; BASIS[degree].len()],
        }
    }

    pub fn function(f: Vec<C64>) -> Self {
        Form {
            degree: 0,
            components: vec![f],
        }
    }

    /// `f dx_i` for a single direction.
    pub fn one_form(f: Vec<C64>, direction: Direction) -> Self {
        let n = f.len();
        let mut components = vec![vec![C64::new(0.0, 0.0); n]; 3];
        components[direction.axis()] = f;
        Form {
            degree: 1,
            components,
        }
    }

    /// Exterior derivative of a 0-form.
    pub fn exterior_derivative(grid: &GridSet, f: &[C64]) -> Result<Self> {
        let components = Direction::ALL
            .iter()
            .map(|&d| differentiate(grid, f, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Form {
            degree: 1,
            components,
        })
    }

    /// Pointwise multiplication by a function.
    pub fn scale_by(&self, f: &[C64]) -> Self {
        Form {
            degree: self.degree,
            components: self
                .components
                .iter()
                .map(|c| c.iter().zip(f).map(|(a, b)| a * b).collect())
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Writes a `component,index,re,im` CSV dump.
    pub fn dump_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "component,index,re,im")?;
        for (c, comp) in self.components.iter().enumerate() {
            for (i, z) in comp.iter().enumerate() {
                writeln!(out, "{c},{i},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Pointwise exterior product.
pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    let degree = a.degree + b.degree;
    if degree > 3 {
        return Err(BdmError::DegreeOverflow(a.degree, b.degree));
    }
    let n = a.components[0].len();
    if b.components[0].len() != n {
        return Err(BdmError::Shape {
            expected: n,
            found: b.components[0].len(),
        });
    }
    // (target position, sign, left index, right index)
    let mut terms = Vec::new();
    for (i, &ma) in BASIS[a.degree].iter().enumerate() {
        for (j, &mb) in BASIS[b.degree].iter().enumerate() {
            if ma & mb != 0 {
                continue;
            }
            terms.push((basis_position(degree, ma | mb), merge_sign(ma, mb), i, j));
        }
    }
    let n_out = BASIS[degree].len();
    let components = parallel::map_range(n_out, |k| {
        let mut out = vec![C64::new(0.0, 0.0); n];
        for &(pos, sign, i, j) in &terms {
            if pos != k {
                continue;
            }
            for ((o, x), y) in out.iter_mut().zip(&a.components[i]).zip(&b.components[j]) {
                *o += x * y * sign;
            }
        }
        out
    });
    Ok(Form { degree, components })
}

/// Integral of a 3-form over `S*M`, oriented by `dx1 ∧ dx2 ∧ dθ`.
pub fn integrate_sstar_m(grid: &GridSet, form: &Form) -> Result<C64> {
    if form.degree != 3 {
        return Err(BdmError::FormDegree {
            expected: 3,
            found: form.degree,
        });
    }
    integrate_volume(grid, &form.components[0])
}
