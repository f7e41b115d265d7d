use std::f64::consts::PI;
use std::sync::Arc;

use bdm_core::cocycles::{class_weight, phi1, phi3};
use bdm_core::generate::generate_symbol;
use bdm_core::grid::{GridSet, C64};
use bdm_core::pairing::*;
use bdm_core::symbol::FullSymbol;
use bdm_core::BdmError;

fn grid_with(n: usize, n_x2: usize) -> Arc<GridSet> {
    Arc::new(GridSet {
        n_x1: n,
        n_x2,
        x2_max: 1.0,
        n_theta: n,
        n_xi2: 64,
        hardy_dim: 32,
        symbol_modes: 16,
        fd_order: 8,
    })
}

fn grid() -> Arc<GridSet> {
    grid_with(32, 64)
}

fn small() -> Arc<GridSet> {
    Arc::new(GridSet {
        n_x1: 8,
        n_x2: 32,
        x2_max: 1.0,
        n_theta: 8,
        n_xi2: 32,
        hardy_dim: 16,
        symbol_modes: 8,
        fd_order: 4,
    })
}

fn winding(k: i64) -> ClassDescriptor {
    ClassDescriptor::BoundaryWinding {
        k,
        component: 1,
        wobble: 0.0,
    }
}

fn bott(reflect: bool) -> ClassDescriptor {
    interior_family().into_iter().find(|d| matches!(d, ClassDescriptor::Bott { reflect: r, .. } if *r == reflect)).unwrap()
}

fn random_matrix(g: &Arc<GridSet>, n: usize, seed: u64) -> SymbolMatrix {
    let entries = (0..n * n)
        .map(|k| Some(generate_symbol(g, seed * 100 + k as u64, &Default::default()).unwrap()))
        .collect();
    SymbolMatrix::new(g.clone(), n, entries).unwrap()
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

#[test]
fn amplified_cochains_follow_the_index_contraction() {
    let g = small();
    let (a, b) = (random_matrix(&g, 2, 1), random_matrix(&g, 2, 2));
    let e = |m: &SymbolMatrix, i: usize, j: usize| m.entry(i, j).unwrap().clone();
    let mut want1 = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            want1 += phi1().evaluate(&[e(&a, i, j), e(&b, j, i)]).unwrap();
        }
    }
    let got1 = matrix_amplify(&phi1(), 2).evaluate(&[a.clone(), b.clone()]).unwrap();
    assert!(close(got1, want1, 1e-12), "{got1} vs {want1}");

    let mut want3 = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    want3 += phi3()
                        .evaluate(&[e(&a, i, j), e(&b, j, k), e(&a, k, l), e(&b, l, i)])
                        .unwrap();
                }
            }
        }
    }
    let got3 = matrix_amplify(&phi3(), 2).evaluate(&[a.clone(), b.clone(), a, b]).unwrap();
    assert!(close(got3, want3, 1e-12), "{got3} vs {want3}");
}

#[test]
fn missing_entries_behave_as_zero() {
    let g = small();
    let a = random_matrix(&g, 2, 3);
    let b = random_matrix(&g, 2, 4);
    let sparse = |m: &SymbolMatrix, zero: bool| {
        let entries = (0..4)
            .map(|k| match (k, zero) {
                (1, true) => Some(FullSymbol::zero(g.clone())),
                (1, false) => None,
                _ => m.entry(k / 2, k % 2).cloned(),
            })
            .collect();
        SymbolMatrix::new(g.clone(), 2, entries).unwrap()
    };
    let cochain = matrix_amplify(&phi1(), 2);
    let with_none = cochain.evaluate(&[sparse(&a, false), b.clone()]).unwrap();
    let with_zero = cochain.evaluate(&[sparse(&a, true), b]).unwrap();
    assert!(close(with_none, with_zero, 1e-12));
}

#[test]
fn one_by_one_amplification_is_the_cochain_itself() {
    let g = small();
    let (a, b) = (random_matrix(&g, 1, 5), random_matrix(&g, 1, 6));
    let direct = phi1()
        .evaluate(&[a.entry(0, 0).unwrap().clone(), b.entry(0, 0).unwrap().clone()])
        .unwrap();
    assert_eq!(matrix_amplify(&phi1(), 1).evaluate(&[a, b]).unwrap(), direct);
}

#[test]
fn size_mismatch_is_rejected() {
    let g = small();
    let err = matrix_amplify(&phi1(), 2).evaluate(&[random_matrix(&g, 1, 7), random_matrix(&g, 1, 8)]);
    assert!(matches!(err, Err(BdmError::Incompatible(_))));
}

#[test]
fn representatives_must_be_invertible_and_trivial_at_infinity() {
    let g = grid();
    let u = winding(1).build(&g).unwrap();
    let bad = K1Representative::new(u.u().clone(), u.u().clone());
    assert!(matches!(bad, Err(BdmError::NotInvertible(r)) if r > 1e-3));
    let twice = SymbolMatrix::new(g.clone(), 1, vec![Some(FullSymbol::scalar(g.clone(), C64::new(2.0, 0.0)))]).unwrap();
    let half = SymbolMatrix::new(g.clone(), 1, vec![Some(FullSymbol::scalar(g.clone(), C64::new(0.5, 0.0)))]).unwrap();
    assert!(matches!(K1Representative::new(twice, half), Err(BdmError::Incompatible(_))));
}

#[test]
fn boundary_windings_match_the_determinant_oracle() {
    let g = grid();
    for k in -2..=2 {
        for wobble in [0.0, 0.5] {
            let d = ClassDescriptor::BoundaryWinding { k, component: 1, wobble };
            let u = d.build(&g).unwrap();
            assert_eq!(det_winding_oracle(&u).unwrap(), k);
            let t = chern_pairing(&u, &PairingConstants::raw()).unwrap();
            assert!(close(t.phi1, C64::new(0.0, 2.0 * PI * k as f64), 1e-10), "k={k} wobble={wobble}: {}", t.phi1);
            assert_eq!(t.phi3, C64::new(0.0, 0.0));
        }
    }
    // the other component of S*X carries the opposite orientation
    let minus = ClassDescriptor::BoundaryWinding {
        k: 1,
        component: -1,
        wobble: 0.0,
    };
    assert_eq!(minus.oracle(&g, 0).unwrap(), -1);
    let t = chern_pairing(&minus.build(&g).unwrap(), &PairingConstants::raw()).unwrap();
    assert!(close(t.phi1, C64::new(0.0, -2.0 * PI), 1e-10));
}

#[test]
fn identity_classes_are_trivial() {
    let g = small();
    let u = ClassDescriptor::Unit { size: 2 }.build(&g).unwrap();
    assert_eq!(det_winding_oracle(&u).unwrap(), 0);
    let t = chern_pairing(&u, &PairingConstants::raw()).unwrap();
    assert_eq!((t.phi1, t.phi3), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    let a = generate_symbol(&g, 3, &Default::default()).unwrap();
    let one = SymbolMatrix::new(g.clone(), 1, vec![Some(a)]).unwrap();
    assert!(K1Representative::new(one.clone(), one).is_err());
}

#[test]
fn products_of_windings_add() {
    let g = grid();
    let k = PairingConstants::new(C64::new(0.0, -1.0 / (2.0 * PI)), C64::new(-1.0 / 3.0, 0.0));
    let u = winding(2).build(&g).unwrap().product(&winding(-1).build(&g).unwrap()).unwrap();
    assert_eq!(det_winding_oracle(&u).unwrap(), 1);
    let p = chern_pairing(&u, &k).unwrap().pairing;
    assert!(close(p, C64::new(1.0, 0.0), 1e-10), "{p}");
}

#[test]
fn bott_classes_have_degree_minus_one_and_one() {
    let g = grid();
    assert_eq!(degree_oracle(&bott(false).build(&g).unwrap(), 11).unwrap(), -1);
    assert_eq!(degree_oracle(&bott(true).build(&g).unwrap(), 11).unwrap(), 1);
    assert_eq!(bott(false).build(&g).unwrap().size(), 2);
    let w = winding(1).build(&g).unwrap();
    assert!(matches!(degree_oracle(&w, 1), Err(BdmError::Oracle(_))));
}

#[test]
fn bott_classes_have_no_boundary_term() {
    let g = grid();
    for reflect in [false, true] {
        let u = bott(reflect).build(&g).unwrap();
        assert_eq!(det_winding_oracle(&u).unwrap(), 0);
        let t = chern_pairing(&u, &PairingConstants::raw()).unwrap();
        assert!(t.phi1.norm() < 1e-12);
        // (i/4π)φ3 is three turns of 2πi per unit of degree
        let turns = class_weight() * t.phi3 / C64::new(0.0, 2.0 * PI);
        let deg = if reflect { 1.0 } else { -1.0 };
        assert!(close(turns, C64::new(-3.0 * deg, 0.0), 1e-6), "{turns}");
    }
}

#[test]
fn calibration_recovers_the_normalization() {
    let g = grid();
    let k = calibrate_on(&g, 3).unwrap();
    assert!(close(k.n1(), C64::new(0.0, -1.0 / (2.0 * PI)), 1e-6), "{:?}", k);
    assert!(close(k.c3(), C64::new(-1.0 / 3.0, 0.0), 1e-5), "{:?}", k);
}

#[test]
fn calibration_is_stable_under_grid_doubling() {
    let coarse = calibrate_on(&grid_with(32, 64), 3).unwrap();
    let fine = calibrate_on(&grid_with(64, 128), 3).unwrap();
    assert!((coarse.n1() - fine.n1()).norm() <= 1e-6);
    assert!((coarse.c3() - fine.c3()).norm() <= 1e-6, "{:?} vs {:?}", coarse, fine);
}

#[test]
fn calibration_needs_both_families() {
    let g = grid();
    let b: Vec<_> = boundary_family().iter().map(|d| sample(d, &g, 0).unwrap()).collect();
    let i: Vec<_> = interior_family().iter().map(|d| sample(d, &g, 0).unwrap()).collect();
    assert!(matches!(calibrate(&[], &i), Err(BdmError::Calibration(_))));
    assert!(matches!(calibrate(&b, &[]), Err(BdmError::Calibration(_))));
    // interior classes carry no φ1 signal, boundary classes no φ3 signal
    assert!(matches!(calibrate(&i, &b), Err(BdmError::Calibration(_))));
    let mut wrong = b.clone();
    wrong[4].oracle = 7;
    assert!(matches!(calibrate(&wrong, &i), Err(BdmError::Calibration(_))));
}

#[test]
fn pairing_is_constant_along_homotopies() {
    let g = grid();
    let k = calibrate_on(&g, 3).unwrap();
    let wobbles: Vec<ClassDescriptor> = (0..10)
        .map(|t| ClassDescriptor::BoundaryWinding {
            k: -2,
            component: 1,
            wobble: 0.09 * t as f64,
        })
        .collect();
    let r = homotopy_sweep(&wobbles, &g, &k).unwrap();
    assert_eq!(r.nearest_integer, -2);
    assert!(r.spread <= 1e-3 && r.integrality_gap <= 1e-3, "{r:?}");

    let moving: Vec<ClassDescriptor> = (0..10)
        .map(|t| {
            let s = t as f64 / 9.0;
            ClassDescriptor::Bott {
                center: [PI + s, 0.5 + 0.05 * s, PI - 0.5 * s],
                radii: [2.5 - 0.3 * s, 0.4, 2.5],
                reflect: false,
            }
        })
        .collect();
    let r = homotopy_sweep(&moving, &g, &k).unwrap();
    assert_eq!(r.nearest_integer, -1);
    assert!(r.spread <= 1e-3 && r.integrality_gap <= 1e-3, "{r:?}");
}

#[test]
fn pairing_is_additive_over_direct_sums() {
    let g = grid();
    let k = calibrate_on(&g, 3).unwrap();
    let parts = vec![winding(2), bott(false), winding(-1)];
    let sum = ClassDescriptor::Sum { parts: parts.clone() };
    let total = pairing_report(&sum, &g, &k, 3).unwrap();
    let separate: f64 = parts.iter().map(|p| pairing_report(p, &g, &k, 3).unwrap().pairing[0]).sum();
    assert!((total.pairing[0] - separate).abs() <= 1e-9);
    assert_eq!(total.oracle, 0);
    assert_eq!(total.nearest_integer, 0);
    assert!(total.gap <= 1e-3);
}

#[test]
fn stabilizing_by_the_identity_changes_nothing() {
    let g = grid();
    let u = winding(1).build(&g).unwrap();
    let big = u.direct_sum(&ClassDescriptor::Unit { size: 2 }.build(&g).unwrap()).unwrap();
    let (a, b) = (
        chern_pairing(&u, &PairingConstants::raw()).unwrap(),
        chern_pairing(&big, &PairingConstants::raw()).unwrap(),
    );
    assert!(close(a.phi1, b.phi1, 1e-12) && close(a.phi3, b.phi3, 1e-12));
}

#[test]
fn scalar_interior_classes_pair_to_zero() {
    let g = grid();
    let k = calibrate_on(&g, 3).unwrap();
    for amplitude in [1.0, 4.0] {
        let d = ClassDescriptor::ScalarInterior {
            center: [1.0, 0.5, 2.0],
            radii: [1.5, 0.35, 2.0],
            amplitude,
        };
        let r = pairing_report(&d, &g, &k, 3).unwrap();
        assert_eq!(r.oracle, 0);
        assert!(C64::new(r.phi3_term[0], r.phi3_term[1]).norm() <= 1e-9, "{r:?}");
        assert!(r.gap <= 1e-9, "{r:?}");
    }
}

#[test]
fn descriptors_round_trip_and_validate() {
    let all = vec![
        winding(1),
        bott(true),
        ClassDescriptor::Unit { size: 3 },
        ClassDescriptor::Sum {
            parts: vec![winding(-1), bott(false)],
        },
    ];
    for d in &all {
        let json = serde_json::to_string(d).unwrap();
        assert_eq!(&serde_json::from_str::<ClassDescriptor>(&json).unwrap(), d);
    }
    let parsed: ClassDescriptor = serde_json::from_str(r#"{"kind":"boundary_winding","k":3}"#).unwrap();
    assert_eq!(
        parsed,
        ClassDescriptor::BoundaryWinding {
            k: 3,
            component: 1,
            wobble: 0.0
        }
    );
    let g = grid();
    let touching = ClassDescriptor::Bott {
        center: [0.0, 0.3, 0.0],
        radii: [1.0, 0.4, 1.0],
        reflect: false,
    };
    assert!(matches!(touching.build(&g), Err(BdmError::Config(_))));
    let degenerate = ClassDescriptor::BoundaryWinding {
        k: 1,
        component: 1,
        wobble: 1.5,
    };
    assert!(matches!(degenerate.build(&g), Err(BdmError::Config(_))));
    assert!(matches!(ClassDescriptor::Sum { parts: vec![] }.build(&g), Err(BdmError::Config(_))));
}
