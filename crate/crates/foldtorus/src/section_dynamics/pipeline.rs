// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::Serialize;

use super::trace::{crossing_matrix, first_return, Closure, ReturnMap};
use super::{build_section, heights, SectionGraph};
use crate::cohomology_cone::{self, pair_with_e0, CohomologyClass, ConeVerdict, H1Basis};
use crate::error::{internal, precondition, Result};
use crate::graph_maps::{Cleanliness, FullIrreducibility, HomotopyCheck, Interval, TransitionData};
use crate::mapping_torus::TrapezoidComplex;
use crate::rational::{self, Q};

/// Width requested for stretch factor enclosures.
fn pf_width() -> Q {
    rational::qr(1, 1_000_000_000)
}

/// Transition data of the return map: the induced graph map when closed,
/// else the crossing matrix.
pub fn stretch_factor(rm: &ReturnMap, sec: &SectionGraph) -> TransitionData {
    match &rm.closure {
        Closure::Closed { map, .. } => map.transition_data(),
        Closure::Open { .. } => {
            let names = (0..sec.edges.len()).map(|i| format!("s{i}")).collect();
            TransitionData::from_matrix(names, crossing_matrix(rm, sec.edges.len()), &pf_width())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyReport {
    pub train_track: bool,
    pub expanding: bool,
    pub irreducible: bool,
    pub whitehead_connected: bool,
    pub clean: Option<u32>,
    pub fully_irreducible: Option<bool>,
}

/// Train-track, Whitehead and cleanliness checks on a closed return map.
pub fn monodromy_certificates(rm: &ReturnMap, hyperbolic: bool) -> Result<MonodromyReport> {
    let Closure::Closed { map, .. } = &rm.closure else {
        return precondition("return map did not close up; no graph map to certify");
    };
    let tt = map.is_train_track(HomotopyCheck::Assume)?.verdict;
    let expanding = map.is_expanding();
    let data = map.transition_data();
    let whitehead_connected = map.all_whitehead_connected();
    let (clean, fully_irreducible) = if tt && expanding {
        let clean = match map.cleanliness(HomotopyCheck::Assume)? {
            Cleanliness::Clean { power } => Some(power),
            Cleanliness::NotWeaklyClean { .. } => None,
        };
        let fi = match map.full_irreducibility(hyperbolic, HomotopyCheck::Assume)? {
            FullIrreducibility::FullyIrreducible { .. } => Some(true),
            FullIrreducibility::NotFullyIrreducible { .. } => Some(false),
            _ => None,
        };
        (clean, fi)
    } else {
        (None, None)
    };
    Ok(MonodromyReport {
        train_track: tt,
        expanding,
        irreducible: data.irreducible,
        whitehead_connected,
        clean,
        fully_irreducible,
    })
}

/// Section and dynamics summary for one class.
#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub class: CohomologyClass,
    pub cone: ConeVerdict,
    pub rounds: usize,
    pub cells1: usize,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub pairing: Q,
    pub section: Option<SectionSummary>,
    pub dynamics: Option<Dynamics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionSummary {
    pub vertices: usize,
    pub edges: usize,
    pub euler_characteristic: i64,
    pub rank: i64,
    pub components: usize,
    pub valence_law: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Dynamics {
    pub closure: Closure,
    /// Set when the return map stayed open: the crossing matrix then only
    /// bounds the stretch factor from above.
    pub upper_bound_only: bool,
    pub words: Vec<String>,
    pub transition: TransitionData,
    pub entropy: Interval,
    pub certificates: Option<MonodromyReport>,
}

impl ClassReport {
    pub fn stretch(&self) -> Option<(Q, Q)> {
        self.dynamics.as_ref().map(|d| (d.transition.pf.lo.clone(), d.transition.pf.hi.clone()))
    }

    pub fn rank(&self) -> Option<i64> {
        self.section.as_ref().map(|s| s.rank)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassOptions {
    pub max_rounds: usize,
    pub cell_budget: usize,
    pub depth_cap: usize,
    pub hyperbolic: bool,
}

impl Default for ClassOptions {
    fn default() -> Self {
        ClassOptions { max_rounds: 64, cell_budget: 200_000, depth_cap: 256, hyperbolic: false }
    }
}

/// Cone test, subdivision, section and return map for an integral class.
pub fn analyze_class(
    x: &TrapezoidComplex,
    basis: &H1Basis,
    u: &CohomologyClass,
    opts: ClassOptions,
) -> Result<ClassReport> {
    let cone = cohomology_cone::cone_contains(x, basis, u)?;
    let pairing = pair_with_e0(x, &basis.representative(u));
    let mut report = ClassReport {
        class: u.clone(),
        cone: cone.clone(),
        rounds: 0,
        cells1: 0,
        pairing,
        section: None,
        dynamics: None,
    };
    let ConeVerdict::Inside { witness, .. } = cone else {
        return Ok(report);
    };
    if !u.integral {
        return Ok(report);
    }
    let run = cohomology_cone::make_unconstrained(x, &witness.values, opts.max_rounds, opts.cell_budget)?;
    let y = &run.state.complex;
    let z = &run.state.z;
    report.rounds = run.rounds.len() - 1;
    report.cells1 = y.cells1.len();
    let h = heights(y, z)?;
    let sec = build_section(y, z, &h)?;
    let chi = sec.euler_characteristic;
    if rational::q(chi) != report.pairing {
        return internal("section Euler characteristic differs from the pairing with the E0 class");
    }
    let valence_law = sec.check_valence_law(y);
    report.section = Some(SectionSummary {
        vertices: sec.vertices.len(),
        edges: sec.edges.len(),
        euler_characteristic: chi,
        rank: 1 - chi,
        components: sec.components,
        valence_law,
    });
    if !sec.is_connected() {
        return Ok(report);
    }
    let rm = first_return(y, z, &h, &sec, opts.depth_cap)?;
    let transition = stretch_factor(&rm, &sec);
    let certificates = monodromy_certificates(&rm, opts.hyperbolic).ok();
    report.dynamics = Some(Dynamics {
        entropy: Interval::log_of(&transition.pf),
        upper_bound_only: matches!(rm.closure, Closure::Open { .. }),
        closure: rm.closure,
        words: rm.words,
        transition,
        certificates,
    });
    Ok(report)
}

/// Entropy `log λ` of the monodromy of a primitive integral class in the cone.
pub fn entropy_of_class(x: &TrapezoidComplex, basis: &H1Basis, u: &CohomologyClass) -> Result<Interval> {
    if !u.primitive {
        return precondition("class is not primitive integral");
    }
    let r = analyze_class(x, basis, u, ClassOptions::default())?;
    if !r.cone.is_inside() {
        return precondition("class is outside the positive cone");
    }
    match r.dynamics {
        Some(d) => Ok(d.entropy),
        None => internal("primitive class gave a disconnected section"),
    }
}

/// One row of a sweep along `base + k * dir`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub k: i64,
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub coords: Vec<Q>,
    pub rank: i64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// `rank · log λ` at the midpoint of the enclosure.
    pub n_log_lambda: f64,
    pub closed: bool,
}

/// Sweeps `base + k * dir` and keeps primitive integral members of the cone.
pub fn sweep(
    x: &TrapezoidComplex,
    basis: &H1Basis,
    base: &CohomologyClass,
    dir: &CohomologyClass,
    ks: std::ops::RangeInclusive<i64>,
    opts: ClassOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for k in ks {
        let u = base.add(&dir.scale(&rational::q(k)));
        if !u.primitive {
            continue;
        }
        let r = analyze_class(x, basis, &u, opts)?;
        let (Some(rank), Some((lo, hi))) = (r.rank(), r.stretch()) else { continue };
        let closed = r.dynamics.as_ref().is_some_and(|d| !d.upper_bound_only);
        let (lo, hi) = (rational::to_f64(&lo), rational::to_f64(&hi));
        let mid = (lo + hi) / 2.0;
        rows.push(SweepRow {
            k,
            coords: u.coords.clone(),
            rank,
            lambda_lo: lo,
            lambda_hi: hi,
            n_log_lambda: rank as f64 * mid.ln(),
            closed,
        });
    }
    Ok(rows)
}
