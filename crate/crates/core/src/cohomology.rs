//! Hochschild and cyclic operators on multilinear cochains over a unital algebra.
//!
//! A cochain of degree `n` takes `n + 1` arguments. With `λ` the signed cyclic
//! rotation `(λφ)(a0,…,an) = (−1)^n φ(an, a0, …, a_{n−1})`:
//!
//! ```text
//! (bφ)(a0,…,a_{n+1}) = Σ_{j≤n} (−1)^j φ(…, a_j a_{j+1}, …) + (−1)^{n+1} φ(a_{n+1}a0, a1, …, an)
//! (B0φ)(a0,…,a_{n−1}) = φ(1, a0, …, a_{n−1}) − (−1)^n φ(a0, …, a_{n−1}, 1)
//! N = Σ_j λ^j,   B = N B0
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{BdmError, Result};
use crate::grid::C64;
use crate::parallel;

pub trait Algebra: Send + Sync + 'static {
    type Elem: Clone + Send + Sync + 'static;

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, c: C64) -> Self::Elem;
    fn unit(&self) -> Self::Elem;
    fn zero(&self) -> Self::Elem;
    /// Absolute tolerance appropriate for identities checked in this algebra.
    fn tolerance(&self) -> f64;
}

type Eval<E> = dyn Fn(&[E]) -> Result<C64> + Send + Sync;

/// A multilinear functional of fixed degree.
pub struct Cochain<E> {
    degree: usize,
    eval: Arc<Eval<E>>,
}

impl<E> Clone for Cochain<E> {
    fn clone(&self) -> Self {
        Cochain {
            degree: self.degree,
            eval: self.eval.clone(),
        }
    }
}

impl<E> fmt::Debug for Cochain<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cochain(degree {})", self.degree)
    }
}

impl<E: Clone + Send + Sync + 'static> Cochain<E> {
    pub fn new<F>(degree: usize, f: F) -> Self
    where
        F: Fn(&[E]) -> Result<C64> + Send + Sync + 'static,
    {
        Cochain {
            degree,
            eval: Arc::new(f),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn arity(&self) -> usize {
        self.degree + 1
    }

    pub fn evaluate(&self, args: &[E]) -> Result<C64> {
        if args.len() != self.arity() {
            return Err(BdmError::Arity {
                degree: self.degree,
                args: args.len(),
            });
        }
        (self.eval)(args)
    }

    pub fn zero(degree: usize) -> Self {
        Cochain::new(degree, |_| Ok(C64::new(0.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let inner = self.clone();
        Cochain::new(self.degree, move |args| Ok(inner.evaluate(args)? * c))
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: C64, other: &Cochain<E>) -> Result<Self> {
        if self.degree != other.degree {
            return Err(BdmError::Incompatible(format!(
                "adding cochains of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(Cochain::new(self.degree, move |args| Ok(a.evaluate(args)? + b.evaluate(args)? * c)))
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Evaluates the terms in parallel and sums them in index order.
fn sum_terms<F>(n: usize, term: F) -> Result<C64>
where
    F: Fn(usize) -> Result<C64> + Sync + Send,
{
    let values = parallel::map_range(n, term);
    let mut acc = C64::new(0.0, 0.0);
    for v in values {
        acc += v?;
    }
    Ok(acc)
}

/// Hochschild coboundary.
pub fn hochschild_b<A: Algebra>(alg: &Arc<A>, phi: &Cochain<A::Elem>) -> Cochain<A::Elem> {
    let n = phi.degree();
    let (alg, phi) = (alg.clone(), phi.clone());
    Cochain::new(n + 1, move |a: &[A::Elem]| {
        sum_terms(n + 2, |j| {
            if j <= n {
                let mut args: Vec<A::Elem> = Vec::with_capacity(n + 1);
                args.extend_from_slice(&a[..j]);
                args.push(alg.mul(&a[j], &a[j + 1]));
                args.extend_from_slice(&a[j + 2..]);
                Ok(phi.evaluate(&args)? * sign(j))
            } else {
                let mut args = Vec::with_capacity(n + 1);
                args.push(alg.mul(&a[n + 1], &a[0]));
                args.extend_from_slice(&a[1..=n]);
                Ok(phi.evaluate(&args)? * sign(n + 1))
            }
        })
    })
}

/// `(B0φ)(a0,…,a_{n−1}) = φ(1, a0, …) − (−1)^n φ(a0, …, 1)`.
pub fn connes_b0<A: Algebra>(alg: &Arc<A>, phi: &Cochain<A::Elem>) -> Result<Cochain<A::Elem>> {
    let n = phi.degree();
    if n == 0 {
        return Err(BdmError::DegreeZero);
    }
    let (alg, phi) = (alg.clone(), phi.clone());
    Ok(Cochain::new(n - 1, move |a: &[A::Elem]| {
        let one = alg.unit();
        sum_terms(2, |t| {
            let mut args = Vec::with_capacity(n + 1);
            if t == 0 {
                args.push(one.clone());
                args.extend_from_slice(a);
                phi.evaluate(&args)
            } else {
                args.extend_from_slice(a);
                args.push(one.clone());
                Ok(phi.evaluate(&args)? * (-sign(n)))
            }
        })
    }))
}

/// Cyclic antisymmetrization `N = Σ_j λ^j`.
pub fn cyclic_n<E: Clone + Send + Sync + 'static>(psi: &Cochain<E>) -> Cochain<E> {
    let m = psi.degree();
    let psi = psi.clone();
    Cochain::new(m, move |a: &[E]| {
        // (−1)^{mj} φ(a_j, …, a_m, a_0, …, a_{j−1})
        sum_terms(m + 1, |j| {
            let args: Vec<E> = (0..=m).map(|i| a[(i + j) % (m + 1)].clone()).collect();
            Ok(psi.evaluate(&args)? * sign(m * j))
        })
    })
}

/// Connes' boundary `B = N B0`.
pub fn connes_b<A: Algebra>(alg: &Arc<A>, phi: &Cochain<A::Elem>) -> Result<Cochain<A::Elem>> {
    Ok(cyclic_n(&connes_b0(alg, phi)?))
}

/// Whether `φ(a_n, a0, …, a_{n−1}) = (−1)^n φ(a0, …, a_n)` on the given arguments,
/// returning the largest defect.
pub fn cyclicity_defect<E: Clone + Send + Sync + 'static>(phi: &Cochain<E>, args: &[E]) -> Result<f64> {
    let n = phi.degree();
    let base = phi.evaluate(args)?;
    let rotated: Vec<E> = (0..=n).map(|i| args[(i + n) % (n + 1)].clone()).collect();
    Ok((phi.evaluate(&rotated)? - base * sign(n)).norm())
}

/// Square complex matrices of a fixed size.
#[derive(Clone, Debug)]
pub struct MatrixAlgebra {
    pub dim: usize,
    pub tolerance: f64,
}

impl MatrixAlgebra {
    pub fn new(dim: usize) -> Self {
        MatrixAlgebra { dim, tolerance: 1e-10 }
    }
}

impl Algebra for MatrixAlgebra {
    type Elem = DMatrix<C64>;

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a * b
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a + b
    }

    fn scale(&self, a: &Self::Elem, c: C64) -> Self::Elem {
        a * c
    }

    fn unit(&self) -> Self::Elem {
        DMatrix::identity(self.dim, self.dim)
    }

    fn zero(&self) -> Self::Elem {
        DMatrix::zeros(self.dim, self.dim)
    }

    fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// `tr(a0 a1 ⋯ an)`; cyclic in the sense of `λφ = φ` only for even `n`.
pub fn trace_cochain(degree: usize) -> Cochain<DMatrix<C64>> {
    Cochain::new(degree, |a: &[DMatrix<C64>]| {
        let mut p = a[0].clone();
        for x in &a[1..] {
            p = &p * x;
        }
        Ok(p.trace())
    })
}
