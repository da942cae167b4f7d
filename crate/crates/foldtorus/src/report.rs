// SPDX-License-Identifier: MIT OR Apache-2.0

//! Serialization helpers: exact rationals are written as `"p/q"` strings
//! next to a decimal approximation.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::rational::{self, Q};

pub fn ser_q<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational::fmt(x))
}

pub fn ser_qs<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<String> = xs.iter().map(rational::fmt).collect();
    v.serialize(s)
}

/// Exact value plus its decimal rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact(pub Q);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Exact", 2)?;
        st.serialize_field("exact", &rational::fmt(&self.0))?;
        st.serialize_field("decimal", &rational::to_f64(&self.0))?;
        st.end()
    }
}

pub fn ser_opt_q<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
    x.as_ref().map(rational::fmt).serialize(s)
}

use num_traits::Zero;

use crate::error::Result as CrateResult;
use crate::graph_maps::{Cleanliness, FullIrreducibility, GraphMap, HomotopyCheck, TrainTrackReport, TransitionData};
use crate::mapping_torus::{StripSummary, TrapezoidComplex};

#[derive(Clone, Debug, Serialize)]
pub struct WhiteheadSummary {
    pub vertex: String,
    pub nodes: Vec<String>,
    pub adjacencies: Vec<(String, String)>,
    pub connected: bool,
}

/// Certification of a graph map: everything that can be decided about it.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    /// `None` when regular.
    pub irregularity: Option<String>,
    pub tame: bool,
    pub homotopy_equivalence: Option<bool>,
    pub train_track: Option<TrainTrackReport>,
    pub expanding: bool,
    pub transition: TransitionData,
    pub gates: Vec<(String, Vec<Vec<String>>)>,
    pub whitehead: Vec<WhiteheadSummary>,
    pub cleanliness: Option<Cleanliness>,
    pub full_irreducibility: Option<FullIrreducibility>,
}

/// Runs every check of [`GraphMap`] and collects the verdicts.
pub fn check_map(m: &GraphMap, hyperbolic: bool) -> CrateResult<CheckReport> {
    let g = &m.graph;
    let names = |es: &[usize]| es.iter().map(|e| g.edge_names[*e].clone()).collect::<Vec<_>>();
    let irregularity = m.irregularity();
    let transition = m.transition_data();
    let expanding = m.is_expanding();
    let tame = m.is_tame();
    let gates = (0..g.num_vertices())
        .map(|v| (g.vertex_names[v].clone(), m.gates(v).iter().map(|c| names(c)).collect()))
        .collect();
    let mut report = CheckReport {
        irregularity,
        tame,
        homotopy_equivalence: None,
        train_track: None,
        expanding,
        transition,
        gates,
        whitehead: Vec::new(),
        cleanliness: None,
        full_irreducibility: None,
    };
    if report.irregularity.is_some() {
        return Ok(report);
    }
    report.whitehead = m
        .whitehead_graphs()
        .iter()
        .map(|w| WhiteheadSummary {
            vertex: g.vertex_names[w.vertex].clone(),
            nodes: names(&w.nodes),
            adjacencies: w.adjacencies.iter().map(|t| (g.edge_names[t.0].clone(), g.edge_names[t.1].clone())).collect(),
            connected: w.is_connected(),
        })
        .collect();
    if (0..g.num_vertices()).any(|v| g.valence(v) == 1) {
        return Ok(report);
    }
    report.homotopy_equivalence = Some(crate::folding::is_homotopy_equivalence(m)?);
    let tt = m.is_train_track(HomotopyCheck::Verify)?;
    let good = tt.verdict && expanding;
    report.train_track = Some(tt);
    if good {
        report.cleanliness = Some(m.cleanliness(HomotopyCheck::Verify)?);
        report.full_irreducibility = Some(m.full_irreducibility(hyperbolic, HomotopyCheck::Verify)?);
    }
    Ok(report)
}

/// Headline numbers of a folded mapping torus.
#[derive(Clone, Debug, Serialize)]
pub struct TorusSummary {
    pub folds: usize,
    pub cells0: usize,
    pub cells1: usize,
    pub vertical: usize,
    pub skew: usize,
    pub trapezoids: usize,
    pub euler_characteristic: i64,
    pub betti1: usize,
    pub strips: StripSummary,
    pub e0_boundary_zero: bool,
    pub canonical_cocycle: bool,
    #[serde(serialize_with = "ser_q")]
    pub canonical_pairing: Q,
}

impl TorusSummary {
    pub fn new(x: &TrapezoidComplex, folds: usize) -> CrateResult<Self> {
        let z0 = x.canonical_cocycle();
        Ok(TorusSummary {
            folds,
            cells0: x.cells0.len(),
            cells1: x.cells1.len(),
            vertical: x.num_vertical(),
            skew: x.num_skew(),
            trapezoids: x.trapezoids.len(),
            euler_characteristic: x.euler_characteristic(),
            betti1: x.betti1(),
            strips: x.strips.clone(),
            e0_boundary_zero: x.e0_boundary().iter().all(|c| c.is_zero()),
            canonical_cocycle: x.is_cocycle(&z0),
            canonical_pairing: crate::cohomology_cone::pair_with_e0(x, &z0),
        })
    }
}
