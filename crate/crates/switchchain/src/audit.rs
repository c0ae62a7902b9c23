//! Per-path invariant audit over a state space: validity, locality,
//! interesting arcs, encodings, repair and bad pairs.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use rand::Rng;
use serde::Serialize;

use crate::chain::trajectory_rng;
use crate::digraph::{sym_diff, Arc, Digraph};
use crate::encodings::{encoding_of, repair, z_violations};
use crate::enumeration::StateSpace;
use crate::exec::Exec;
use crate::flow::bad_pairs;
use crate::paths::{build_path_unchecked, count_pairings, enumerate_pairings, pairing_by_index, Pairing};
use crate::zoo::match_zoo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathSample {
    /// Every ordered pair and every pairing.
    All,
    /// `count` uniform `(G, G', ψ)` with `G ≠ G'`.
    Random { count: usize, seed: u64 },
}

/// Examples kept per failure kind (the least ones, so the result does not
/// depend on scheduling).
const KEEP: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Failures {
    pub count: usize,
    pub examples: Vec<String>,
}

impl Failures {
    fn add(&mut self, what: impl FnOnce() -> String) {
        self.count += 1;
        self.keep(vec![what()]);
    }

    fn keep(&mut self, more: Vec<String>) {
        self.examples.extend(more);
        self.examples.sort();
        self.examples.dedup();
        self.examples.truncate(KEEP);
    }

    fn merge(&mut self, o: Failures) {
        self.count += o.count;
        self.keep(o.examples);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathAudit {
    pub paths: usize,
    pub states: usize,
    pub max_length: usize,
    pub max_interesting: usize,
    pub max_disturbed_chords: usize,
    pub max_repair: usize,
    pub max_bad_pairs: usize,
    /// Repairs that needed the bounded search.
    pub searched_repairs: usize,
    /// Segments that needed the fallback 1-circuit phases.
    pub repaired_phases: usize,
    /// Construction errors, including well-pairedness and zoo mismatches
    /// caught while building.
    pub build: Failures,
    pub endpoints: Failures,
    pub too_long: Failures,
    pub not_simple: Failures,
    pub locality: Failures,
    pub interesting: Failures,
    pub z_validity: Failures,
    pub repair: Failures,
    pub bad_pairs: Failures,
}

impl PathAudit {
    /// Path-level criteria: valid paths, locality, interesting arcs.
    pub fn paths_ok(&self) -> bool {
        self.build.count == 0
            && self.endpoints.count == 0
            && self.too_long.count == 0
            && self.locality.count == 0
            && self.interesting.count == 0
    }

    /// Encoding criteria: Z-validity and repair within three switches.
    pub fn encodings_ok(&self) -> bool {
        self.z_validity.count == 0 && self.repair.count == 0
    }

    pub fn is_clean(&self) -> bool {
        self.paths_ok() && self.encodings_ok() && self.bad_pairs.count == 0 && self.not_simple.count == 0
    }

    fn merge(mut self, o: PathAudit) -> PathAudit {
        self.paths += o.paths;
        self.states += o.states;
        self.max_length = self.max_length.max(o.max_length);
        self.max_interesting = self.max_interesting.max(o.max_interesting);
        self.max_disturbed_chords = self.max_disturbed_chords.max(o.max_disturbed_chords);
        self.max_repair = self.max_repair.max(o.max_repair);
        self.max_bad_pairs = self.max_bad_pairs.max(o.max_bad_pairs);
        self.searched_repairs += o.searched_repairs;
        self.repaired_phases += o.repaired_phases;
        self.build.merge(o.build);
        self.endpoints.merge(o.endpoints);
        self.too_long.merge(o.too_long);
        self.not_simple.merge(o.not_simple);
        self.locality.merge(o.locality);
        self.interesting.merge(o.interesting);
        self.z_validity.merge(o.z_validity);
        self.repair.merge(o.repair);
        self.bad_pairs.merge(o.bad_pairs);
        self
    }
}

fn flipped(a: &Digraph, b: &Digraph) -> BTreeSet<Arc> {
    let mut out = BTreeSet::new();
    for (t, (x, y)) in a.rows().iter().zip(b.rows()).enumerate() {
        for h in crate::digraph::BitIter(x ^ y) {
            out.insert(Arc::new(t, h));
        }
    }
    out
}

/// Audits one canonical path.
pub fn audit_path(g: &Digraph, g2: &Digraph, psi: &Pairing, tag: &str, out: &mut PathAudit) {
    out.paths += 1;
    let t = match build_path_unchecked(g, g2, psi) {
        Ok(t) => t,
        Err(e) => {
            out.build.add(|| format!("{tag}: {e}"));
            return;
        }
    };
    if let Err(e) = t.check_valid(g, g2) {
        out.endpoints.add(|| format!("{tag}: {e}"));
    }
    out.max_length = out.max_length.max(t.len());
    if t.len() > g.n() * g.d() {
        out.too_long.add(|| format!("{tag}: length {}", t.len()));
    }
    if !t.is_simple() {
        out.not_simple.add(|| tag.to_string());
    }
    for s in &t.segments {
        let (a, b) = (&t.states[s.start_state], &t.states[s.start_state + s.step_count]);
        if flipped(a, b) != s.segment.walk.arc_set() || s.max_disturbed_chords > 3 {
            out.locality.add(|| format!("{tag}: segment {}", s.segment.walk));
        }
        out.max_disturbed_chords = out.max_disturbed_chords.max(s.max_disturbed_chords);
        out.repaired_phases += usize::from(s.repaired_phases);
    }
    for (k, st) in t.steps.iter().enumerate() {
        out.max_interesting = out.max_interesting.max(st.interesting.len());
        let lab: Vec<(Arc, i8)> = st.interesting.iter().map(|x| (x.arc, x.label)).collect();
        if lab.len() > 5 || (!lab.is_empty() && match_zoo(&lab).is_none()) {
            out.interesting.add(|| format!("{tag}: step {k}"));
        }
    }
    let h = sym_diff(g, g2).expect("same order");
    for (j, z) in t.states.iter().enumerate() {
        out.states += 1;
        let l = match encoding_of(g, g2, z) {
            Ok(l) => l,
            Err(e) => {
                out.z_validity.add(|| format!("{tag}: state {j}: {e}"));
                continue;
            }
        };
        let v = z_violations(&l, z);
        if !v.is_empty() {
            out.z_validity.add(|| format!("{tag}: state {j}: {}", v[0].clause));
        }
        match repair(&l, z) {
            Ok(r) => {
                out.max_repair = out.max_repair.max(r.steps.len());
                out.searched_repairs += usize::from(r.searched);
                let decreasing = r.steps.iter().all(|s| s.bad_after < s.bad_before);
                if r.steps.len() > 3 || !decreasing || !r.result.is_regular() {
                    out.repair.add(|| format!("{tag}: state {j}: {} steps", r.steps.len()));
                }
            }
            Err(e) => out.repair.add(|| format!("{tag}: state {j}: {e}")),
        }
        let bp = bad_pairs(&h, z, psi);
        out.max_bad_pairs = out.max_bad_pairs.max(bp.total());
        if !bp.within_bounds() {
            out.bad_pairs.add(|| format!("{tag}: state {j}: {} bad pairs", bp.total()));
        }
    }
}

/// Runs [`audit_path`] over the chosen sample.
pub fn audit_paths(space: &StateSpace, sample: PathSample, exec: Exec) -> PathAudit {
    let n = space.len();
    match sample {
        PathSample::All => exec.fold_range(
            n * n,
            PathAudit::default,
            |mut acc, k| {
                let (a, b) = (k / n, k % n);
                if a != b {
                    let (g, g2) = (space.state(a), space.state(b));
                    let h = sym_diff(g, g2).expect("same order");
                    for (i, psi) in enumerate_pairings(&h).expect("balanced").enumerate() {
                        audit_path(g, g2, &psi, &format!("{}->{} pairing {i}", a + 1, b + 1), &mut acc);
                    }
                }
                acc
            },
            PathAudit::merge,
        ),
        PathSample::Random { count, seed } => exec.fold_range(
            count,
            PathAudit::default,
            |mut acc, k| {
                let mut rng = trajectory_rng(seed, k as u64);
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                let (g, g2) = (space.state(a), space.state(b));
                let h = sym_diff(g, g2).expect("same order");
                let total = count_pairings(&h).expect("balanced").to_u64().expect("pairing count fits u64");
                let i = rng.gen_range(0..total);
                let psi = pairing_by_index(&h, i).expect("index in range");
                audit_path(g, g2, &psi, &format!("{}->{} pairing {i}", a + 1, b + 1), &mut acc);
                acc
            },
            PathAudit::merge,
        ),
    }
}
