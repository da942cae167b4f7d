// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::sync::OnceLock;

use foldtorus::cohomology_cone::{
    cone_contains, make_unconstrained, pair_with_e0, CohomologyClass, ConeVerdict, H1Basis,
};
use foldtorus::mapping_torus::{Cell0, Cell1, CellKind, StripSummary, Trapezoid, TrapezoidComplex};
use foldtorus::rational::{q, to_f64, Q};
use foldtorus::section_dynamics::{
    analyze_class, build_section, crossing_matrix, first_return, heights, monodromy_certificates, stretch_factor,
    ClassOptions, ClassReport, Closure, ReturnMap, SectionGraph,
};

struct Fixture {
    x: TrapezoidComplex,
    basis: H1Basis,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let x = common::torus(&common::running());
        let basis = H1Basis::compute(&x).unwrap();
        Fixture { x, basis }
    })
}

fn class(a: i64, b: i64) -> CohomologyClass {
    CohomologyClass::from_coords(vec![q(a), q(b)])
}

/// Section and return map of an integral class, built step by step.
fn traced(a: i64, b: i64) -> (TrapezoidComplex, Vec<Q>, SectionGraph, ReturnMap) {
    let f = fixture();
    let ConeVerdict::Inside { witness, .. } = cone_contains(&f.x, &f.basis, &class(a, b)).unwrap() else {
        panic!("class is in the cone")
    };
    let run = make_unconstrained(&f.x, &witness.values, 64, 200_000).unwrap();
    let (y, z) = (run.state.complex, run.state.z);
    let h = heights(&y, &z).unwrap();
    let sec = build_section(&y, &z, &h).unwrap();
    let rm = first_return(&y, &z, &h, &sec, 256).unwrap();
    (y, z, sec, rm)
}

fn report(a: i64, b: i64) -> ClassReport {
    let f = fixture();
    analyze_class(&f.x, &f.basis, &class(a, b), ClassOptions { hyperbolic: true, ..Default::default() }).unwrap()
}

#[test]
fn canonical_class_section() {
    let (y, z, sec, _) = traced(1, 0);
    // One vertex per level crossing along each cell.
    let h = heights(&y, &z).unwrap();
    let crossings: i64 = y
        .cells1
        .iter()
        .zip(&z)
        .map(|(c, v)| {
            let lo = &h.lift[c.origin] - &h.x0;
            ((&lo + v).floor() - lo.floor()).to_integer().try_into().unwrap_or(0i64)
        })
        .sum();
    assert_eq!(sec.vertices.len() as i64, crossings);
    assert_eq!(sec.euler_characteristic, -2);
    assert_eq!(sec.vertices.len() as i64 - sec.edges.len() as i64, -2);
    assert_eq!(q(sec.euler_characteristic), pair_with_e0(&y, &z));
    assert!(sec.is_connected());
    let val = sec.valences();
    for (v, d) in sec.vertices.iter().zip(val) {
        assert_eq!(d, y.cells1[v.cell].degree);
    }
}

#[test]
fn canonical_class_stretch_factor_matches_the_map() {
    let r = report(1, 0);
    assert_eq!(r.rank(), Some(3));
    let (lo, hi) = r.stretch().unwrap();
    let lam = 1.0 + 2f64.sqrt();
    assert!(to_f64(&lo) <= lam && lam <= to_f64(&hi));
    assert!(to_f64(&hi) - to_f64(&lo) <= 1e-3);
    let own = common::running().transition_data().pf;
    assert!(lo <= own.hi && own.lo <= hi);
    let d = r.dynamics.unwrap();
    assert!(!d.upper_bound_only);
    assert!((d.entropy.lo - lam.ln()).abs() < 1e-6);
    let c = d.certificates.unwrap();
    assert!(c.train_track && c.expanding && c.irreducible && c.whitehead_connected);
    assert!(c.clean.is_some());
    assert_eq!(c.fully_irreducible, Some(true));
}

#[test]
fn doubled_class_splits_into_two_components() {
    let r = report(2, 0);
    let s = r.section.unwrap();
    assert_eq!(s.components, 2);
    assert_eq!(s.euler_characteristic, -4);
    assert!(r.dynamics.is_none());
}

#[test]
fn image_pieces_tile_each_edge() {
    for (a, b) in [(1, 0), (2, 1)] {
        let (_, _, sec, rm) = traced(a, b);
        for (e, ps) in sec.edges.iter().zip(&rm.pieces) {
            let (lo, hi) = if e.w_from < e.w_to { (&e.w_from, &e.w_to) } else { (&e.w_to, &e.w_from) };
            assert_eq!(&ps.first().unwrap().u0, lo);
            assert_eq!(&ps.last().unwrap().u1, hi);
            assert!(ps.windows(2).all(|w| w[0].u1 == w[1].u0));
            for p in ps {
                assert!(p.u0 < p.u1);
                let t = &sec.edges[p.target];
                let (tl, th) = if t.w_from < t.w_to { (&t.w_from, &t.w_to) } else { (&t.w_to, &t.w_from) };
                for w in [&p.w0, &p.w1] {
                    assert!(tl <= w && w <= th);
                }
            }
        }
    }
}

#[test]
fn closed_return_maps_are_tight_and_clean() {
    for (a, b) in [(1, 0), (4, 1)] {
        let (_, _, sec, rm) = traced(a, b);
        let Closure::Closed { map, .. } = &rm.closure else { panic!("closes") };
        for e in map.graph.positive_edges() {
            assert!(map.edge_map[e].is_tight(&map.graph));
        }
        for v in 0..map.graph.num_vertices() {
            assert!(map.whitehead_graph(v).is_connected());
        }
        let data = map.transition_data();
        assert!(data.irreducible);
        // Matrix of the square equals the square of the matrix.
        let a1 = map.transition_matrix();
        let n = a1.len();
        let sq: Vec<Vec<u64>> =
            (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a1[i][k] * a1[k][j]).sum()).collect()).collect();
        assert_eq!(map.compose(map).unwrap().transition_matrix(), sq);
        // On the original section edges the crossing counts agree with the closed map.
        let cross = crossing_matrix(&rm, sec.edges.len());
        assert_eq!(cross.len(), sec.edges.len());
    }
}

#[test]
fn return_maps_are_deterministic() {
    let (_, _, _, a) = traced(2, 1);
    let (_, _, _, b) = traced(2, 1);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn shallow_depth_gives_an_upper_bound() {
    let f = fixture();
    let opts = ClassOptions { depth_cap: 32, ..Default::default() };
    let shallow = analyze_class(&f.x, &f.basis, &class(2, 1), opts).unwrap();
    let deep = report(2, 1);
    let d = shallow.dynamics.clone().unwrap();
    assert!(d.upper_bound_only);
    assert!(d.certificates.is_none());
    assert!(shallow.stretch().unwrap().1 >= deep.stretch().unwrap().0);
}

#[test]
fn outside_class_has_no_section() {
    let r = report(-1, 0);
    assert!(!r.cone.is_inside());
    assert!(r.section.is_none());
}

/// One trapezoid glued to itself: a torus whose return map is the identity.
fn toy() -> TrapezoidComplex {
    let cell = |kind, label: &str| Cell1 {
        kind,
        origin: 0,
        terminus: 0,
        degree: 2,
        span: q(1),
        param_len: q(1),
        label: label.into(),
    };
    TrapezoidComplex {
        cells0: vec![Cell0 { label: "p".into(), height: Some(q(0)) }],
        cells1: vec![cell(CellKind::Skew, "s"), cell(CellKind::Vertical, "v")],
        trapezoids: vec![Trapezoid {
            width: q(1),
            bottom: 0,
            bottom_alpha: q(0),
            bottom_beta: q(1),
            top: vec![0],
            breaks: vec![q(0), q(1)],
            zeta: 1,
            flow_base: q(1),
            flow_slope: q(0),
            left: vec![1],
            right: vec![1],
            provenance: "toy".into(),
        }],
        strips: StripSummary { strips: 1, with_skew: 1, diagonals: vec![] },
        fiber_euler: 0,
    }
}

#[test]
fn toy_return_map_is_a_permutation() {
    let x = toy();
    let z = vec![q(1), q(1)];
    let h = heights(&x, &z).unwrap();
    let sec = build_section(&x, &z, &h).unwrap();
    assert_eq!(sec.euler_characteristic, 0);
    assert!(sec.is_connected());
    let rm = first_return(&x, &z, &h, &sec, 32).unwrap();
    let m = crossing_matrix(&rm, sec.edges.len());
    for row in &m {
        assert_eq!(row.iter().sum::<u64>(), 1);
    }
    for j in 0..m.len() {
        assert_eq!(m.iter().map(|r| r[j]).sum::<u64>(), 1);
    }
    let t = stretch_factor(&rm, &sec);
    assert_eq!(t.pf.lo, q(1));
    assert_eq!(t.pf.hi, q(1));
    let c = monodromy_certificates(&rm, true).unwrap();
    assert!(!c.expanding);
    assert_eq!(c.clean, None);
    assert_eq!(c.fully_irreducible, None);
}

#[test]
fn non_cocycle_heights_are_rejected() {
    let f = fixture();
    let mut z = f.x.canonical_cocycle();
    z[0] += q(1);
    assert!(heights(&f.x, &z).is_err());
}
