// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use foldtorus::cohomology_cone::{
    cone_contains, is_unconstrained, make_unconstrained, max_ratio, pair_with_e0, standard_refinement,
    standard_subdivide, CohomologyClass, ConeVerdict, H1Basis, SubdivisionState,
};
use foldtorus::mapping_torus::{CellKind, TrapezoidComplex};
use foldtorus::rational::{q, qr, Q};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn class(a: i64, b: i64) -> CohomologyClass {
    CohomologyClass::from_coords(vec![q(a), q(b)])
}

fn setup() -> (TrapezoidComplex, H1Basis) {
    let x = common::torus(&common::running());
    let b = H1Basis::compute(&x).unwrap();
    (x, b)
}

/// Checks a dual certificate directly: a nonnegative unit-mass cycle on
/// which the representative is nonpositive.
fn check_certificate(x: &TrapezoidComplex, z: &[Q], cycle: &[Q], pairing: &Q) {
    assert!(cycle.iter().all(|v| !v.is_negative()));
    assert_eq!(cycle.iter().sum::<Q>(), q(1));
    let mut flux = vec![q(0); x.cells0.len()];
    for (c, y) in x.cells1.iter().zip(cycle) {
        flux[c.terminus] += y;
        flux[c.origin] -= y;
    }
    assert!(flux.iter().all(|v| v.is_zero()));
    let value: Q = z.iter().zip(cycle).map(|(a, b)| a * b).sum();
    assert_eq!(&value, pairing);
    assert!(!value.is_positive());
}

#[test]
fn running_example_basis() {
    let (x, b) = setup();
    assert_eq!(b.dim(), 2);
    let u0 = b.coordinates(&x, &x.canonical_cocycle()).unwrap();
    assert_eq!(u0.coords, vec![q(1), q(0)]);
    assert!(u0.primitive);
    for u in [class(1, 0), class(0, 1)] {
        let z = b.representative(&u);
        assert!(x.is_cocycle(&z));
        assert_eq!(pair_with_e0(&x, &z), q(-2));
    }
}

#[test]
fn cone_verdicts_carry_verified_certificates() {
    let (x, b) = setup();
    let mut inside = 0;
    let mut outside = 0;
    for a in -3..=4 {
        for c in -3..=3 {
            if a == 0 && c == 0 {
                continue;
            }
            let u = class(a, c);
            let z = b.representative(&u);
            match cone_contains(&x, &b, &u).unwrap() {
                ConeVerdict::Inside { witness, margin } => {
                    inside += 1;
                    assert!(margin.is_positive());
                    assert!(witness.values.iter().all(|v| v.is_positive()));
                    assert_eq!(b.coordinates(&x, &witness.values).unwrap().coords, u.coords);
                }
                ConeVerdict::Outside { cycle, pairing } => {
                    outside += 1;
                    check_certificate(&x, &z, &cycle, &pairing);
                }
            }
        }
    }
    assert!(inside > 0 && outside > 0);
    for u in [class(1, 0), class(2, 1), class(3, 1), class(4, 1), class(5, 2)] {
        assert!(cone_contains(&x, &b, &u).unwrap().is_inside());
    }
    assert!(!cone_contains(&x, &b, &class(-1, 0)).unwrap().is_inside());
}

#[test]
fn refinement_fixture_values() {
    let (pieces, verticals) = standard_refinement(&q(10), &q(6), &q(1), &[q(1), q(2), q(2)], 1);
    assert_eq!(pieces, vec![q(2), q(4), q(4)]);
    assert_eq!(verticals, vec![q(5), q(3)]);
    // Each new trapezoid is a cocycle cell: bottom + right = left + top.
    let sides = [q(6), q(5), q(3), q(1)];
    for (i, (p, t)) in pieces.iter().zip([q(1), q(2), q(2)]).enumerate() {
        assert_eq!(p + &sides[i + 1], &sides[i] + t);
    }
}

#[test]
fn canonical_cocycle_needs_no_rounds() {
    let (x, _) = setup();
    let run = make_unconstrained(&x, &x.canonical_cocycle(), 64, 200_000).unwrap();
    assert_eq!(run.rounds.len(), 1);
    assert_eq!(run.rounds[0].constrained, 0);
    let z = x.canonical_cocycle();
    assert!(x.trapezoids.iter().all(|t| is_unconstrained(t, &z)));
}

/// Old skew cell values split over their pieces without loss.
fn check_conservation(old: &SubdivisionState, new: &SubdivisionState) {
    for (c, v) in old.complex.cells1.iter().zip(&old.z) {
        if c.kind != CellKind::Skew {
            continue;
        }
        let prefix = format!("{}.", c.label);
        let total: Q = new
            .complex
            .cells1
            .iter()
            .zip(&new.z)
            .filter(|(n, _)| {
                n.kind == CellKind::Skew
                    && (n.label == c.label
                        || n.label.strip_prefix(&prefix).is_some_and(|r| r.chars().all(|ch| ch.is_ascii_digit())))
            })
            .map(|(_, w)| w.clone())
            .sum();
        assert_eq!(&total, v, "{}", c.label);
    }
}

#[test]
fn forced_rounds_shrink_the_skew_maximum() {
    let (x, b) = setup();
    for u in [class(1, 0), class(2, 1)] {
        let ConeVerdict::Inside { witness, .. } = cone_contains(&x, &b, &u).unwrap() else { panic!("inside") };
        let mut st = SubdivisionState::new(&x, witness.values).unwrap();
        let mut s = vec![st.skew_max()];
        for _ in 0..6 {
            let rho = max_ratio(&st.complex, &st.z);
            let (next, _) = standard_subdivide(&st).unwrap();
            assert!(max_ratio(&next.complex, &next.z) <= rho.max(qr(1, 2)));
            check_conservation(&st, &next);
            assert_eq!(next.complex.euler_characteristic(), 0);
            st = next;
            s.push(st.skew_max());
        }
        assert!(s.windows(2).all(|w| w[1] <= w[0]), "{s:?}");
        assert!(s[6] < s[0], "no decrease over an epoch: {s:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cone_membership_is_scale_invariant(a in -4i64..5, c in -4i64..5, num in 1i64..7, den in 1i64..5) {
        prop_assume!(a != 0 || c != 0);
        let (x, b) = setup();
        let u = class(a, c);
        let v = u.scale(&qr(num, den));
        prop_assert_eq!(
            cone_contains(&x, &b, &u).unwrap().is_inside(),
            cone_contains(&x, &b, &v).unwrap().is_inside()
        );
    }
}
