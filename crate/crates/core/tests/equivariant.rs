use std::f64::consts::PI;
use std::sync::Arc;

use bdm_core::cocycles::{symbol_residuals, SymbolAlgebra};
use bdm_core::cohomology::Algebra;
use bdm_core::equivariant::*;
use bdm_core::generate::{generate_symbol, GeneratorProfile, Profile};
use bdm_core::grid::{integrate_sstar_x, GridSet, C64};
use bdm_core::hardy::{cayley, line_integral_over_2pi};
use bdm_core::symbol::{BoundaryBlock, BoundarySymbol, FullSymbol, InteriorSymbol};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn grid() -> Arc<GridSet> {
    Arc::new(GridSet {
        n_x1: 16,
        n_x2: 48,
        x2_max: 1.0,
        n_theta: 32,
        n_xi2: 128,
        hardy_dim: 64,
        symbol_modes: 16,
        fd_order: 4,
    })
}

fn narrow() -> GeneratorProfile {
    GeneratorProfile {
        profile: Profile { flat: 0.0, support: 0.45 },
        ..Default::default()
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rot_dil() -> GroupElement {
    GroupElement::rotation(1, 8).unwrap().compose(&GroupElement::dilation(2.0).unwrap())
}

/// Toeplitz-only boundary symbol with `σ(x1)` given as Cayley coefficients `m = −K..=K`.
fn toeplitz_symbol<F: Fn(f64) -> Vec<(i64, C64)>>(g: &Arc<GridSet>, f: F) -> BoundarySymbol {
    let k = g.symbol_modes as i64;
    let mut blocks = Vec::new();
    for _sign in [1, -1] {
        for i in 0..g.n_x1 {
            let mut b = BoundaryBlock::zero(g.symbol_modes);
            for (m, z) in f(g.x1(i)) {
                b.sigma[(m + k) as usize] += z;
            }
            blocks.push(b);
        }
    }
    BoundarySymbol::new(g.clone(), blocks, c(0.0, 0.0)).unwrap()
}

fn evaluate_sigma(sigma: &[C64], xi: f64) -> C64 {
    let k = (sigma.len() / 2) as i32;
    let w = cayley(xi);
    sigma.iter().enumerate().map(|(j, s)| s * w.powi(j as i32 - k)).sum()
}

#[test]
fn identity_acts_trivially() {
    let g = grid();
    let a = generate_symbol(&g, 5, &narrow()).unwrap();
    let b = act(&GroupElement::identity(), &a).unwrap();
    assert_eq!(a.max_difference(&b), 0.0);
}

#[test]
fn grid_rotation_is_an_exact_roll() {
    let g = grid();
    let a = generate_symbol(&g, 6, &narrow()).unwrap();
    let r = GroupElement::rotation(1, 8).unwrap();
    let b = act(&r, &a).unwrap();
    let step = g.n_x1 / 8;
    for i1 in 0..g.n_x1 {
        let src = (i1 + g.n_x1 - step) % g.n_x1;
        for i2 in 0..g.n_x2 {
            for it in 0..g.n_theta {
                assert_eq!(b.interior.value(g.index(i1, i2, it)), a.interior.value(g.index(src, i2, it)));
            }
        }
        assert_eq!(b.boundary.block(i1, -1), a.boundary.block(src, -1));
    }
}

#[test]
fn off_grid_rotation_matches_the_shifted_formula() {
    let g = grid();
    let f = |x1: f64, x2: f64, t: f64| c((-(x2 / 0.2).powi(2)).exp(), 0.0) * (C64::from_polar(1.0, 2.0 * x1) + (2.0 * t).cos());
    let a = InteriorSymbol::from_fn(g.clone(), c(1.0, 0.0), f);
    let r = GroupElement::rotation(1, 7).unwrap();
    let b = act_interior(&r, &a).unwrap();
    let th = r.shift_angle();
    let mut worst: f64 = 0.0;
    for i1 in 0..g.n_x1 {
        for i2 in [0, 3, 11] {
            for it in 0..g.n_theta {
                let expect = f(g.x1(i1) - th, g.x2(i2), g.theta(it)) + 1.0;
                worst = worst.max((b.value(g.index(i1, i2, it)) - expect).norm());
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn constant_dilation_matches_the_chart_composition() {
    let g = grid();
    // a(x1, x2, θ) = e^{−(x2/0.2)²} (sin²θ + e^{ix1} cos 2θ) + x2 e^{−(x2/0.2)²} cos θ
    let f = |x1: f64, x2: f64, t: f64| {
        let bump = (-(x2 / 0.2).powi(2)).exp();
        c(bump * t.sin().powi(2), 0.0) + C64::from_polar(bump, x1) * (2.0 * t).cos() + x2 * bump * t.cos()
    };
    let a = InteriorSymbol::from_fn(g.clone(), c(0.0, 0.0), f);
    let lam = 2.0;
    let b = act_interior(&GroupElement::dilation(lam).unwrap(), &a).unwrap();
    let mut worst: f64 = 0.0;
    for i1 in [0, 5] {
        for i2 in [0, 1, 4, 9, 17] {
            for it in [0, 3, 7, 12, 20] {
                // covector (cos θ, sin θ) pulls back to (cos θ, λ sin θ)
                let (s, co) = g.theta(it).sin_cos();
                let src = (lam * s).atan2(co);
                let expect = f(g.x1(i1), g.x2(i2) / lam, src);
                worst = worst.max((b.value(g.index(i1, i2, it)) - expect).norm());
            }
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn action_is_a_group_action_and_multiplicative() {
    let g = Arc::new(GridSet { n_x2: 96, n_theta: 64, fd_order: 8, ..(*grid()).clone() });
    let a = generate_symbol(&g, 11, &narrow()).unwrap();
    let b = generate_symbol(&g, 12, &narrow()).unwrap();
    let g1 = GroupElement::rotation(1, 4).unwrap();
    let g2 = GroupElement::dilation(2.0).unwrap();
    let nested = act(&g1, &act(&g2, &a).unwrap()).unwrap();
    let direct = act(&g1.compose(&g2), &a).unwrap();
    assert!(nested.max_difference(&direct) < 1e-12);
    let lhs = act(&g2, &a.mul(&b)).unwrap();
    let rhs = act(&g2, &a).unwrap().mul(&act(&g2, &b).unwrap());
    assert!(lhs.max_difference(&rhs) < 1e-5, "{}", lhs.max_difference(&rhs));
    let back = act(&g2.inverse(), &act(&g2, &a).unwrap()).unwrap();
    assert!(back.max_difference(&a) < 1e-4, "{}", back.max_difference(&a));
    assert!(act(&g2, &a).unwrap().compatibility_defect().unwrap() < 1e-5);
}

#[test]
fn rotation_preserves_the_boundary_trace_integral() {
    let g = grid();
    let a = generate_symbol(&g, 13, &narrow()).unwrap();
    let base = integrate_sstar_x(&a.boundary.tr_prime()).unwrap();
    for r in [GroupElement::rotation(3, 8).unwrap(), GroupElement::rotation(1, 5).unwrap()] {
        let moved = integrate_sstar_x(&act_boundary(&r, &a.boundary).unwrap().tr_prime()).unwrap();
        assert!((moved - base).norm() < 1e-12);
    }
}

fn smooth_green(dim: usize, rho: f64) -> DMatrix<C64> {
    let u = DVector::from_fn(dim, |j, _| C64::from_polar(rho.powi(j as i32), 0.7 * j as f64));
    let v = DVector::from_fn(dim, |j, _| C64::from_polar(rho.powi(j as i32) * 0.5, -1.3 * j as f64 + 0.2));
    let w = DVector::from_fn(dim, |j, _| C64::new(0.0, 1.0) * (rho * 0.9).powi(j as i32));
    &u * v.adjoint() + &w * u.adjoint()
}

#[test]
fn dilation_conjugation_keeps_the_regularized_trace() {
    let mut block = BoundaryBlock::zero(4);
    block.green = smooth_green(24, 0.5);
    block.scalar = c(0.3, -0.1);
    for lam in [0.25, 0.5, 2.0, 4.0] {
        let coarse = dilation_trace_defect(&block, lam, 24).unwrap();
        let fine = dilation_trace_defect(&block, lam, 256).unwrap();
        assert!(fine <= 1e-10, "λ = {lam}: {fine}");
        assert!(fine <= coarse || coarse <= 1e-12, "λ = {lam}: {coarse} → {fine}");
    }
}

#[test]
fn crossed_products_of_deltas_compose() {
    let g = grid();
    let a = generate_symbol(&g, 21, &narrow()).unwrap();
    let b = generate_symbol(&g, 22, &narrow()).unwrap();
    let gam = rot_dil();
    let e = GroupElement::identity();
    let ee = crossed_mul(&CrossedElement::at_identity(a.clone()), &CrossedElement::at_identity(b.clone())).unwrap();
    assert_eq!(ee.coefficient(&e).unwrap().max_difference(&a.mul(&b)), 0.0);
    let f = CrossedElement::single(gam.clone(), a.clone());
    let h = CrossedElement::single(gam.inverse(), b.clone());
    let fh = crossed_mul(&f, &h).unwrap();
    assert_eq!(fh.support().count(), 1);
    let expect = a.mul(&act(&gam, &b).unwrap());
    assert_eq!(fh.coefficient(&e).unwrap().max_difference(&expect), 0.0);
    let r = GroupElement::rotation(1, 4).unwrap();
    let dd = crossed_mul(&CrossedElement::delta(g.clone(), gam.clone()), &CrossedElement::delta(g.clone(), r.clone())).unwrap();
    let unit = FullSymbol::unit(g.clone());
    assert!(dd.coefficient(&gam.compose(&r)).unwrap().max_difference(&unit) < 1e-12);
}

#[test]
fn crossed_product_is_associative() {
    let g = Arc::new(GridSet { n_x2: 96, n_theta: 64, fd_order: 8, ..(*grid()).clone() });
    let p = narrow();
    let s = |seed| generate_symbol(&g, seed, &p).unwrap();
    let r = GroupElement::rotation(1, 4).unwrap();
    let d = GroupElement::dilation(2.0).unwrap();
    let x = CrossedElement::at_identity(s(31)).with(r.clone(), s(32));
    let y = CrossedElement::single(d.clone(), s(33)).with(r.inverse(), s(34));
    let z = CrossedElement::at_identity(s(35)).with(d.inverse(), s(36));
    let left = crossed_mul(&crossed_mul(&x, &y).unwrap(), &z).unwrap();
    let right = crossed_mul(&x, &crossed_mul(&y, &z).unwrap()).unwrap();
    assert_eq!(left.support().count(), right.support().count());
    assert!(left.max_difference(&right) < 1e-5, "{}", left.max_difference(&right));
}

#[test]
fn trace_formula_for_a_rotation() {
    let g = grid();
    let r = GroupElement::rotation(1, 8).unwrap();
    let w = |_x1: f64| vec![(1, c(1.0, 0.0))];
    let s1 = toeplitz_symbol(&g, w);
    // σ2 = w̄ e^{ix1}: both sides vanish after the x1 integration
    let s2 = toeplitz_symbol(&g, |x1| vec![(-1, C64::from_polar(1.0, x1))]);
    let w1 = BoundaryForm::single(0, r.clone(), s1.clone()).unwrap();
    let w2 = BoundaryForm::single(0, r.inverse(), s2).unwrap();
    let rep = trace_formula_check(&w1, &w2).unwrap();
    assert!(rep.gap <= 1e-10 && rep.lhs[0].abs() < 1e-10, "{rep:?}");
    assert_eq!(rep.cases, vec![ActionCase::Pullback]);
    // σ2 = w̄: tr′[T(w), T(w̄)] = −1 on both components
    let s3 = toeplitz_symbol(&g, |_| vec![(-1, c(1.0, 0.0))]);
    let w3 = BoundaryForm::single(0, r.inverse(), s3).unwrap();
    let rep = trace_formula_check(&w1, &w3).unwrap();
    assert!((rep.lhs[0] + 4.0 * PI).abs() < 1e-10 && rep.gap < 1e-10, "{rep:?}");
}

#[test]
fn trace_formula_for_a_dilation_matches_the_substituted_line_integral() {
    let g = Arc::new(GridSet { symbol_modes: 32, hardy_dim: 128, n_xi2: 256, ..(*grid()).clone() });
    let lam = 2.0;
    let d = GroupElement::dilation(lam).unwrap();
    let t1 = vec![(1, c(1.0, 0.0)), (2, c(0.3, -0.2)), (-1, c(0.1, 0.0))];
    let t2 = [(-1, c(1.0, 0.0)), (1, c(0.0, 0.4)), (-2, c(-0.25, 0.0))];
    let s1 = toeplitz_symbol(&g, |_| t1.clone());
    let s2 = toeplitz_symbol(&g, |x1| t2.iter().map(|(m, z)| (*m, z * (1.0 + 0.5 * x1.cos()))).collect());
    let w1 = BoundaryForm::single(0, d.clone(), s1.clone()).unwrap();
    let w2 = BoundaryForm::single(0, d.inverse(), s2.clone()).unwrap();
    let rep = trace_formula_check(&w1, &w2).unwrap();
    assert_eq!(rep.cases, vec![ActionCase::Dilation]);
    assert!(!rep.outside_proof_cases);
    assert!(rep.gap <= 1e-5, "{rep:?}");
    // −i ∫ Π′(σ1′ σ2(λ·)) = −(i/2π) ∫ σ1′(η/λ) σ2(η) dη/λ, by direct line quadrature
    let k = g.symbol_modes;
    let s1b = &s1.block(0, 1).sigma;
    let deriv = |xi: f64| {
        let h = 1e-5 * (1.0 + xi.abs());
        (evaluate_sigma(s1b, xi + h) - evaluate_sigma(s1b, xi - h)) / (2.0 * h)
    };
    let mut oracle = c(0.0, 0.0);
    for i in 0..g.n_x1 {
        let s2b = &s2.block(i, 1).sigma;
        let line = line_integral_over_2pi(|eta| deriv(eta / lam) * evaluate_sigma(s2b, eta) / lam, 4096);
        oracle += line * c(0.0, -1.0) * (2.0 * 2.0 * PI / g.n_x1 as f64);
    }
    assert!((oracle - c(rep.rhs[0], rep.rhs[1])).norm() < 1e-6, "{oracle} vs {:?}", rep.rhs);
    let _ = k;
}

#[test]
fn mixed_elements_are_flagged() {
    let g = grid();
    let m = GroupElement::new(1, 8, vec![c(0.2, 0.0), c(0.05, 0.02)]).unwrap();
    let s1 = toeplitz_symbol(&g, |_| vec![(1, c(1.0, 0.0))]);
    let s2 = toeplitz_symbol(&g, |_| vec![(-1, c(1.0, 0.0))]);
    let rep = trace_formula_check(
        &BoundaryForm::single(0, m.clone(), s1).unwrap(),
        &BoundaryForm::single(0, m.inverse(), s2).unwrap(),
    )
    .unwrap();
    assert!(rep.outside_proof_cases);
    assert!(rep.gap.is_finite());
}

#[test]
fn identity_supported_elements_reproduce_the_plain_residuals() {
    let g = Arc::new(GridSet { n_x1: 8, n_x2: 24, n_theta: 16, ..(*grid()).clone() });
    let a: Vec<FullSymbol> = (0..5).map(|i| generate_symbol(&g, 40 + i, &GeneratorProfile::default()).unwrap()).collect();
    let plain = symbol_residuals(&Arc::new(SymbolAlgebra::new(g.clone())), &a).unwrap();
    let crossed: Vec<CrossedElement> = a.iter().cloned().map(CrossedElement::at_identity).collect();
    let lifted = crossed_residuals(&Arc::new(CrossedAlgebra::new(g.clone())), &crossed).unwrap();
    assert_eq!(plain, lifted);
}

#[test]
fn paths_missing_the_identity_give_zero() {
    let g = Arc::new(GridSet { n_x1: 8, n_x2: 24, n_theta: 16, ..(*grid()).clone() });
    let r = GroupElement::rotation(1, 8).unwrap();
    let s = |seed| generate_symbol(&g, seed, &narrow()).unwrap();
    let args: Vec<CrossedElement> = (0..4).map(|i| CrossedElement::single(r.clone(), s(50 + i))).collect();
    assert_eq!(phi3_crossed().evaluate(&args).unwrap(), c(0.0, 0.0));
    let pair = [CrossedElement::single(r.clone(), s(60)), CrossedElement::single(r.clone(), s(61))];
    assert_eq!(phi1_crossed().evaluate(&pair).unwrap(), c(0.0, 0.0));
    // two-sided supports {γ, γ⁻¹} on every slot of an odd-arity cochain never multiply to e
    let both = |seed| CrossedElement::single(r.clone(), s(seed)).with(r.inverse(), s(seed + 1));
    let args: Vec<CrossedElement> = (0..4).map(|i| both(70 + 2 * i)).collect();
    assert_ne!(phi3_crossed().evaluate(&args).unwrap(), c(0.0, 0.0));
    let alg = CrossedAlgebra::new(g.clone());
    assert_eq!(alg.unit().support().count(), 1);
}

#[test]
fn crossed_cocycle_relations_hold_for_rotation_with_dilation() {
    let g = Arc::new(GridSet {
        n_x1: 16,
        n_x2: 128,
        n_theta: 64,
        fd_order: 8,
        ..(*grid()).clone()
    });
    let gam = rot_dil();
    let s = |seed| generate_symbol(&g, seed, &narrow()).unwrap();
    let args: Vec<CrossedElement> = (0..5)
        .map(|i| {
            let x = CrossedElement::at_identity(s(80 + i));
            if i == 0 || i == 2 {
                x.with(gam.clone(), s(90 + i)).with(gam.inverse(), s(95 + i))
            } else {
                x
            }
        })
        .collect();
    let rep = crossed_residuals(&Arc::new(CrossedAlgebra::new(g.clone())), &args).unwrap();
    assert!(rep.res_bphi1_connes <= 1e-12);
    assert!(rep.res_bphi3 <= 1e-5, "{rep:?}");
    assert!(rep.res_mixed_consistent <= 1e-5, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn group_law_holds(p1 in 0i64..12, q1 in 1i64..12, p2 in 0i64..12, q2 in 1i64..12,
                       l1 in -1.0f64..1.0, l2 in -1.0f64..1.0, c1 in -0.3f64..0.3, x in 0.0f64..std::f64::consts::TAU) {
        let a = GroupElement::new(p1, q1, vec![c(l1, 0.0), c(c1, 0.1)]).unwrap();
        let b = GroupElement::new(p2, q2, vec![c(l2, 0.0)]).unwrap();
        prop_assert!(a.compose(&a.inverse()).is_identity());
        let ab = a.compose(&b);
        prop_assert!((ab.lambda(x) - a.lambda(x + b.shift_angle()) * b.lambda(x)).abs() < 1e-12 * ab.lambda(x));
        prop_assert_eq!(ab.inverse(), b.inverse().compose(&a.inverse()));
        let cc = GroupElement::rotation(1, 3).unwrap();
        prop_assert_eq!(ab.compose(&cc), a.compose(&b.compose(&cc)));
    }

    #[test]
    fn trace_is_dilation_invariant(lam in 0.25f64..4.0, rho in 0.1f64..0.5) {
        let mut block = BoundaryBlock::zero(2);
        block.green = smooth_green(16, rho);
        prop_assert!(dilation_trace_defect(&block, lam, 256).unwrap() <= 1e-6);
    }
}
