//! Pairings, circuit decomposition and the canonical path between two
//! digraphs of `Ω(n,d)`.
//!
//! Closed alternating walks are stored as a [`Walk`]: a vertex string plus
//! a direction bit. Segments are always rotated so that the start vertex
//! sits at index 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::digraph::{resolve_zeta_chi, sym_diff, Arc, ColouredDiff, Digraph, DigraphError, Switch};
use crate::enumeration::{find_useful_arc, find_useful_neighbour, EnumError, UsefulTag};
use crate::zoo::{five_arc_structure, match_zoo};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("symmetric difference is not balanced")]
    Unbalanced,
    #[error("pairing does not match the symmetric difference: {0}")]
    BadPairing(String),
    #[error("pairing index {0} out of range")]
    PairingIndex(u64),
    #[error("malformed walk: {0}")]
    Malformed(String),
    #[error("{property} violated: {detail}")]
    Property { property: &'static str, detail: String },
    #[error("switch {switch} cannot be applied ({context})")]
    InvalidStep { switch: Switch, context: &'static str },
    #[error("endpoints coincide")]
    SameEndpoints,
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error(transparent)]
    Enum(#[from] EnumError),
}

fn violated(property: &'static str, detail: impl Into<String>) -> PathError {
    PathError::Property { property, detail: detail.into() }
}

// ---------------------------------------------------------------- pairings

/// One bijection: `blue[k]` is paired with `red[image[k]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Slot {
    blue: Vec<Arc>,
    red: Vec<Arc>,
    image: Vec<usize>,
}

/// A pairing `ψ`: at each vertex, blue in-arcs ↔ red in-arcs and blue
/// out-arcs ↔ red out-arcs.
///
/// Slots are ordered `(v, in)`, `(v, out)` for `v = 0, 1, …`; within a slot
/// the blue arcs are sorted. The serialised form is the concatenated image
/// sequence, and enumeration runs through it in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pairing {
    slots: Vec<Slot>,
}

fn empty_slots(h: &ColouredDiff) -> Result<Vec<Slot>, PathError> {
    if !h.is_balanced() {
        return Err(PathError::Unbalanced);
    }
    let mut slots = Vec::with_capacity(2 * h.n);
    for v in 0..h.n {
        for out in [false, true] {
            let at = |a: &&Arc| if out { a.tail == v } else { a.head == v };
            let blue: Vec<Arc> = h.blue.iter().filter(at).copied().collect();
            let red: Vec<Arc> = h.red.iter().filter(at).copied().collect();
            slots.push(Slot { image: (0..blue.len()).collect(), blue, red });
        }
    }
    Ok(slots)
}

fn factorial(m: usize) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, k| acc * k)
}

/// `|Ψ(G,G')| = ∏_v θ_v! φ_v!`.
pub fn count_pairings(h: &ColouredDiff) -> Result<BigUint, PathError> {
    if !h.is_balanced() {
        return Err(PathError::Unbalanced);
    }
    Ok((0..h.n).fold(BigUint::one(), |acc, v| acc * factorial(h.theta(v)) * factorial(h.phi(v))))
}

/// All pairings, each once, in canonical order.
pub fn enumerate_pairings(h: &ColouredDiff) -> Result<PairingIter, PathError> {
    let base = empty_slots(h)?;
    let perms: Vec<Vec<Vec<usize>>> = base
        .iter()
        .map(|s| {
            let m = s.blue.len();
            if m <= 1 {
                vec![(0..m).collect()]
            } else {
                (0..m).permutations(m).collect()
            }
        })
        .collect();
    Ok(PairingIter { base, counters: Some(vec![0; perms.len()]), perms })
}

pub struct PairingIter {
    base: Vec<Slot>,
    perms: Vec<Vec<Vec<usize>>>,
    counters: Option<Vec<usize>>,
}

impl Iterator for PairingIter {
    type Item = Pairing;

    fn next(&mut self) -> Option<Pairing> {
        let counters = self.counters.as_mut()?;
        let mut slots = self.base.clone();
        for (k, s) in slots.iter_mut().enumerate() {
            s.image = self.perms[k][counters[k]].clone();
        }
        // Odometer with the last slot fastest.
        let mut pos = counters.len();
        loop {
            if pos == 0 {
                self.counters = None;
                break;
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < self.perms[pos].len() {
                break;
            }
            counters[pos] = 0;
        }
        Some(Pairing { slots })
    }
}

/// The `idx`-th pairing (0-based) in canonical order.
pub fn pairing_by_index(h: &ColouredDiff, idx: u64) -> Result<Pairing, PathError> {
    let base = empty_slots(h)?;
    let total = count_pairings(h)?;
    if BigUint::from(idx) >= total {
        return Err(PathError::PairingIndex(idx));
    }
    let mut rest = idx;
    let mut slots = base;
    for s in slots.iter_mut().rev() {
        let m = s.blue.len() as u64;
        let f = (1..=m).product::<u64>();
        let mut r = rest % f;
        rest /= f;
        // r-th permutation in lexicographic order (factorial number system).
        let mut pool: Vec<usize> = (0..s.blue.len()).collect();
        let mut image = Vec::with_capacity(pool.len());
        for left in (1..=pool.len() as u64).rev() {
            let block = (1..left).product::<u64>();
            image.push(pool.remove((r / block) as usize));
            r %= block;
        }
        s.image = image;
    }
    Ok(Pairing { slots })
}

impl Pairing {
    /// The identity pairing (first in canonical order).
    pub fn first(h: &ColouredDiff) -> Result<Pairing, PathError> {
        Ok(Pairing { slots: empty_slots(h)? })
    }

    /// Build from explicit `(blue, red)` pairs; every arc must be covered.
    pub fn from_pairs(h: &ColouredDiff, pairs: &[(Arc, Arc)]) -> Result<Pairing, PathError> {
        let mut slots = empty_slots(h)?;
        let mut seen = vec![vec![false; 0]; slots.len()];
        for (s, seen) in slots.iter().zip(seen.iter_mut()) {
            *seen = vec![false; s.blue.len()];
        }
        for &(b, r) in pairs {
            let k = if b.head == r.head && b.tail != r.tail {
                2 * b.head
            } else if b.tail == r.tail && b.head != r.head {
                2 * b.tail + 1
            } else {
                return Err(PathError::BadPairing(format!("{b} and {r} share no endpoint role")));
            };
            let s = &mut slots[k];
            let bi = s.blue.binary_search(&b).map_err(|_| PathError::BadPairing(format!("{b} is not blue")))?;
            let ri = s.red.binary_search(&r).map_err(|_| PathError::BadPairing(format!("{r} is not red")))?;
            if seen[k][bi] {
                return Err(PathError::BadPairing(format!("{b} paired twice at one end")));
            }
            seen[k][bi] = true;
            s.image[bi] = ri;
        }
        for (s, seen) in slots.iter().zip(&seen) {
            if !seen.iter().all(|&x| x) || s.image.iter().copied().sorted().ne(0..s.image.len()) {
                return Err(PathError::BadPairing("incomplete or non-bijective".into()));
            }
        }
        Ok(Pairing { slots })
    }

    /// The arc paired with `a` at its endpoint `at`.
    pub fn partner(&self, a: Arc, at: usize) -> Option<Arc> {
        let k = if a.head == at {
            2 * at
        } else if a.tail == at {
            2 * at + 1
        } else {
            return None;
        };
        let s = self.slots.get(k)?;
        if let Ok(b) = s.blue.binary_search(&a) {
            return Some(s.red[s.image[b]]);
        }
        let r = s.red.binary_search(&a).ok()?;
        s.image.iter().position(|&x| x == r).map(|b| s.blue[b])
    }

    pub fn is_paired(&self, a: Arc, b: Arc, at: usize) -> bool {
        self.partner(a, at) == Some(b)
    }

    /// Serialised image sequence.
    pub fn images(&self) -> Vec<Vec<usize>> {
        self.slots.iter().map(|s| s.image.clone()).collect()
    }

    /// All `(blue, red)` pairs.
    pub fn pairs(&self) -> Vec<(Arc, Arc)> {
        self.slots.iter().flat_map(|s| s.blue.iter().enumerate().map(move |(k, &b)| (b, s.red[s.image[k]]))).collect()
    }

    fn check(&self, h: &ColouredDiff) -> Result<(), PathError> {
        let base = empty_slots(h)?;
        let ok = base.len() == self.slots.len()
            && base.iter().zip(&self.slots).all(|(a, b)| {
                a.blue == b.blue && a.red == b.red && b.image.iter().copied().sorted().eq(0..b.image.len())
            });
        if ok {
            Ok(())
        } else {
            Err(PathError::BadPairing("pairing built for a different difference".into()))
        }
    }
}

// ---------------------------------------------------------------- walks

/// A closed alternating walk `w₀ w₁ … w_{2k−1}`.
///
/// The arc between positions `p` and `p+1` is `ζ^rev (w_p, w_{p+1})` for
/// even `p` and `ζ^rev (w_{p+1}, w_p)` for odd `p`, cyclically. So
/// `rev = 0` is a forward circuit and `rev = 1` a reverse one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Walk {
    pub verts: Vec<usize>,
    pub rev: u8,
}

impl Walk {
    pub fn new(verts: Vec<usize>, rev: u8) -> Result<Walk, PathError> {
        let w = Walk { verts, rev: rev & 1 };
        if w.verts.len() < 4 || w.verts.len() % 2 == 1 {
            return Err(PathError::Malformed(format!("length {}", w.verts.len())));
        }
        let arcs = w.arcs();
        if arcs.iter().any(|a| a.tail == a.head) || arcs.iter().collect::<BTreeSet<_>>().len() != arcs.len() {
            return Err(PathError::Malformed(format!("repeated arc or loop in {w}")));
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    /// Vertex at cyclic position `p`.
    pub fn at(&self, p: isize) -> usize {
        self.verts[p.rem_euclid(self.len() as isize) as usize]
    }

    pub fn arc(&self, p: usize) -> Arc {
        let l = self.len();
        let (a, b) = (self.verts[p % l], self.verts[(p + 1) % l]);
        let base = if p % 2 == 0 { Arc::new(a, b) } else { Arc::new(b, a) };
        base.zeta(self.rev)
    }

    pub fn arcs(&self) -> Vec<Arc> {
        (0..self.len()).map(|p| self.arc(p)).collect()
    }

    pub fn arc_set(&self) -> BTreeSet<Arc> {
        self.arcs().into_iter().collect()
    }

    /// Start at position `k`. Odd shifts flip the direction bit.
    pub fn rotate(&self, k: usize) -> Walk {
        let l = self.len();
        let verts = (0..l).map(|p| self.verts[(p + k) % l]).collect();
        Walk { verts, rev: self.rev ^ (k % 2) as u8 }
    }

    /// Traverse the other way round from position 0.
    pub fn reversed(&self) -> Walk {
        let l = self.len();
        let verts = (0..l).map(|p| self.verts[(l - p) % l]).collect();
        Walk { verts, rev: self.rev }
    }

    /// Cyclic positions `[start, end)` closed up into a walk; needs
    /// `w[start] == w[end]` and an even span.
    fn piece(&self, start: usize, end: usize) -> Result<Walk, PathError> {
        let l = self.len();
        let span = (end + l - start) % l;
        let span = if span == 0 { l } else { span };
        if span % 2 == 1 || self.verts[start % l] != self.verts[end % l] {
            return Err(PathError::Malformed(format!("cannot cut {self} at {start},{end}")));
        }
        let verts = (0..span).map(|p| self.verts[(start + p) % l]).collect();
        Ok(Walk { verts, rev: self.rev ^ (start % 2) as u8 })
    }

    pub fn positions_of(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.verts[p] == v).collect()
    }

    pub fn distinct_vertices(&self) -> usize {
        self.verts.iter().collect::<BTreeSet<_>>().len()
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.verts.iter().map(|v| (v + 1).to_string()).join(" ");
        write!(f, "{s} ({})", if self.rev == 0 { "forward" } else { "reverse" })
    }
}

// ---------------------------------------------------------------- circuits

/// Split `H` into forward circuits following `ψ`.
pub fn decompose_circuits(h: &ColouredDiff, psi: &Pairing) -> Result<Vec<Walk>, PathError> {
    psi.check(h)?;
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    let bad = |a: Arc| PathError::BadPairing(format!("no partner for {a}"));
    for first in h.arcs() {
        if used.contains(&first) {
            continue;
        }
        used.insert(first);
        let w0 = first.tail;
        let mut verts = vec![w0, first.head];
        let mut cur = first;
        loop {
            let back = psi.partner(cur, cur.head).ok_or_else(|| bad(cur))?;
            let next = psi.partner(back, back.tail).ok_or_else(|| bad(back))?;
            if !used.insert(back) {
                return Err(PathError::BadPairing(format!("{back} reached twice")));
            }
            if next == first {
                break;
            }
            if !used.insert(next) {
                return Err(PathError::BadPairing(format!("{next} reached twice")));
            }
            verts.push(back.tail);
            verts.push(next.head);
            cur = next;
        }
        out.push(Walk::new(verts, 0)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RawKind {
    OneCircuit,
    TwoCircuit,
}

/// A raw 1- or 2-circuit with its start vertex at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub walk: Walk,
    pub kind: RawKind,
}

impl Segment {
    pub fn start(&self) -> usize {
        self.walk.verts[0]
    }
}

/// Successive arcs must be paired at every vertex other than the start.
pub fn is_well_paired(s: &Walk, psi: &Pairing) -> bool {
    let v = s.verts[0];
    (0..s.len()).filter(|&p| s.verts[p] != v).all(|p| {
        let prev = s.arc((p + s.len() - 1) % s.len());
        psi.is_paired(prev, s.arc(p), s.verts[p])
    })
}

/// Peel a circuit into raw 1-circuits and raw 2-circuits, in processing order.
pub fn split_raw_segments(c: &Walk, psi: &Pairing) -> Result<Vec<Segment>, PathError> {
    let v = c.verts[0];
    let mut cur = c.clone();
    let mut out = Vec::new();
    loop {
        let occ = cur.positions_of(v);
        if occ[0] != 0 {
            return Err(PathError::Malformed(format!("{cur} does not start at its start vertex")));
        }
        if occ.len() == 1 {
            out.push(Segment { walk: cur, kind: RawKind::OneCircuit });
            break;
        }
        let (p, q, l) = (occ[1], occ[occ.len() - 1], cur.len());
        if p % 2 == 0 {
            out.push(Segment { walk: cur.piece(0, p)?, kind: RawKind::OneCircuit });
            cur = cur.piece(p, l)?;
        } else if q % 2 == 0 {
            out.push(Segment { walk: cur.piece(q, l)?, kind: RawKind::OneCircuit });
            cur = cur.piece(0, q)?;
        } else {
            let mut verts = cur.verts[..p].to_vec();
            verts.extend_from_slice(&cur.verts[q..]);
            out.push(Segment { walk: Walk::new(verts, cur.rev)?, kind: RawKind::TwoCircuit });
            if p == q {
                break;
            }
            cur = cur.piece(p, q)?;
        }
    }
    let mut seen = BTreeSet::new();
    for s in &out {
        if !is_well_paired(&s.walk, psi) {
            return Err(violated("well-paired property", s.walk.to_string()));
        }
        let count = s.walk.positions_of(v).len();
        if count != if s.kind == RawKind::OneCircuit { 1 } else { 2 } {
            return Err(violated("start-vertex multiplicity", s.walk.to_string()));
        }
        for a in s.walk.arcs() {
            if !seen.insert(a) {
                return Err(violated("segments arc-disjoint", a.to_string()));
            }
        }
    }
    if seen != c.arc_set() {
        return Err(violated("segments cover the circuit", c.to_string()));
    }
    Ok(out)
}

// ---------------------------------------------------------------- stepping

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum StepType {
    /// A step while processing a 1-circuit.
    Type1,
    /// A shortcut or eccentric switch.
    Type2,
    /// A step while processing a triangle.
    Type3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormalCase {
    Na,
    Nb,
    Nc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentCase {
    OneCircuit,
    Normal(NormalCase),
    EccentricA(NormalCase),
    EccentricB(NormalCase),
    TriangleNeighbour,
    TriangleArc,
}

impl SegmentCase {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SegmentCase::OneCircuit => "one-circuit",
            SegmentCase::Normal(_) => "normal",
            SegmentCase::EccentricA(_) | SegmentCase::EccentricB(_) => "eccentric",
            SegmentCase::TriangleNeighbour | SegmentCase::TriangleArc => "triangle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct RawStep {
    switch: Switch,
    step_type: StepType,
    phase: Option<usize>,
}

/// Mutable state threaded through segment processing.
#[derive(Clone, Debug)]
struct Runner {
    z: Digraph,
    steps: Vec<RawStep>,
    states: Vec<Digraph>,
    max_chords: usize,
    phases: Vec<usize>,
    repaired: bool,
}

impl Runner {
    fn new(z: Digraph) -> Self {
        Runner { z, steps: Vec::new(), states: Vec::new(), max_chords: 0, phases: Vec::new(), repaired: false }
    }

    fn apply(&mut self, s: Switch, ty: StepType, phase: Option<usize>, ctx: &'static str) -> Result<(), PathError> {
        if !s.distinct() || !self.z.can_apply(&s) {
            return Err(PathError::InvalidStep { switch: s, context: ctx });
        }
        self.z.apply_switch_mut(&s)?;
        self.steps.push(RawStep { switch: s, step_type: ty, phase });
        self.states.push(self.z.clone());
        Ok(())
    }
}

/// Rows of the arcs in `arcs`.
fn mask(n: usize, arcs: impl IntoIterator<Item = Arc>) -> Vec<u64> {
    let mut m = vec![0u64; n];
    for a in arcs {
        m[a.tail] |= 1 << a.head;
    }
    m
}

fn diff_equals(a: &Digraph, b: &Digraph, m: &[u64]) -> bool {
    a.rows().iter().zip(b.rows()).zip(m).all(|((x, y), z)| x ^ y == *z)
}

// ---------------------------------------------------------------- 1-circuits

/// Outcome of processing one 1-circuit from a given state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneCircuitRun {
    pub switches: Vec<Switch>,
    /// Phase number (1-based) of each switch.
    pub phases: Vec<usize>,
    pub phase_count: usize,
    /// Largest number of odd chords off their starting status.
    pub max_disturbed: usize,
    pub repaired: bool,
}

pub fn process_one_circuit(s: &Walk, z: &Digraph) -> Result<OneCircuitRun, PathError> {
    let mut run = Runner::new(z.clone());
    run_one_circuit(&mut run, s)?;
    Ok(OneCircuitRun {
        switches: run.steps.iter().map(|s| s.switch).collect(),
        phases: run.steps.iter().map(|s| s.phase.unwrap_or(0)).collect(),
        phase_count: run.phases.iter().copied().max().unwrap_or(0),
        max_disturbed: run.max_chords,
        repaired: run.repaired,
    })
}

fn run_one_circuit(run: &mut Runner, s: &Walk) -> Result<(), PathError> {
    let l = s.len();
    if l < 4 {
        return Err(violated("1-circuit has k >= 2", s.to_string()));
    }
    let x0 = s.verts[0];
    if s.positions_of(x0).len() != 1 {
        return Err(violated("start vertex occurs once on a 1-circuit", s.to_string()));
    }
    if s.verts[1] == s.verts[l - 1] {
        return Err(violated("x1 and x_{2k-1} distinct", s.to_string()));
    }
    let w = if s.verts[l - 1] < s.verts[1] { s.reversed() } else { s.clone() };
    let x = &w.verts;
    let k = l / 2;
    let i = w.rev;
    let z0 = run.z.clone();
    let h = u8::from(!z0.has_arc(Arc::new(x0, x[1]).zeta(i)));
    let inz = |a: usize, b: usize| z0.has_zc(i, h, Arc::new(a, b));
    for t in 0..k {
        if !inz(x[2 * t], x[2 * t + 1]) || inz(x[(2 * t + 2) % l], x[2 * t + 1]) {
            return Err(violated("1-circuit status alternation", format!("{w} at t = {t}")));
        }
    }
    let chord_on = |u: usize| inz(x0, u);
    let last_seen: Vec<usize> =
        (1..k).filter(|&t| !chord_on(x[2 * t + 1]) && (t + 1..k).all(|m| x[2 * m + 1] != x[2 * t + 1])).collect();
    if last_seen.last() != Some(&(k - 1)) {
        return Err(violated("k-1 in B", w.to_string()));
    }
    let b = if phases_feasible(x, k, &last_seen, &chord_on) {
        last_seen
    } else {
        let b = repaired_phase_ends(x, k, &chord_on);
        if !phases_feasible(x, k, &b, &chord_on) {
            return Err(violated("repaired 1-circuit phases feasible", w.to_string()));
        }
        run.repaired = true;
        b
    };
    let own = w.arc_set();
    let chords: Vec<Arc> = (1..k)
        .map(|t| Arc::new(x0, x[2 * t + 1]).zeta(i))
        .filter(|a| !own.contains(a))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut prev = 0;
    for (ph, &t) in b.iter().enumerate() {
        for j in (prev + 1..=t).rev() {
            let sw = resolve_zeta_chi(i, h, x0, x[2 * j - 1], x[2 * j], x[2 * j + 1]);
            run.apply(sw, StepType::Type1, Some(ph + 1), "1-circuit step")?;
            let disturbed = chords.iter().filter(|&&a| run.z.has_arc(a) != z0.has_arc(a)).count();
            if disturbed > 3 {
                return Err(violated("at most three odd chords disturbed", w.to_string()));
            }
            run.max_chords = run.max_chords.max(disturbed);
        }
        run.phases.push(ph + 1);
        prev = t;
    }
    if !diff_equals(&z0, &run.z, &mask(z0.n(), own)) {
        return Err(violated("1-circuit flips exactly its arcs", w.to_string()));
    }
    Ok(())
}

/// Replays the odd-chord statuses under the given phase ends. Switch `j`
/// removes the chord to `x[2j-1]` and adds the chord to `x[2j+1]`.
fn phases_feasible(x: &[usize], k: usize, ends: &[usize], chord_on: &dyn Fn(usize) -> bool) -> bool {
    let mut on: BTreeMap<usize, bool> = (0..k).map(|t| (x[2 * t + 1], chord_on(x[2 * t + 1]))).collect();
    on.insert(x[1], true);
    let mut prev = 0;
    for &t in ends {
        for j in (prev + 1..=t).rev() {
            let (del, add) = (x[2 * j - 1], x[2 * j + 1]);
            if !on[&del] {
                return false;
            }
            on.insert(del, false);
            if on[&add] {
                return false;
            }
            on.insert(add, true);
        }
        prev = t;
    }
    prev == k - 1
}

/// Phase ends when the last-occurrence rule breaks down. The chord carried
/// between phases is treated as a token; a phase runs to the last occurrence
/// of the next absent chord vertex that is not interrupted by a third one.
fn repaired_phase_ends(x: &[usize], k: usize, chord_on: &dyn Fn(usize) -> bool) -> Vec<usize> {
    let x1 = x[1];
    let bad = |m: usize| x[2 * m + 1] == x1 || !chord_on(x[2 * m + 1]);
    let mut ends = Vec::new();
    let (mut t, mut a) = (0, x1);
    while t < k - 1 {
        let Some(m1) = (t + 1..k).find(|&m| bad(m) && x[2 * m + 1] != a) else {
            break;
        };
        let b = x[2 * m1 + 1];
        let mut q = m1;
        for m in m1 + 1..k {
            if bad(m) {
                let u = x[2 * m + 1];
                if u == b {
                    q = m;
                } else if u != a {
                    break;
                }
            }
        }
        ends.push(q);
        t = q;
        a = b;
    }
    ends
}

// ---------------------------------------------------------------- 2-circuits

/// A 2-circuit relabelled as `v x00 … x10 v x11 … x01` with `(v,x00)` the
/// least arc and `h` read off the current state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoLabels {
    pub walk: Walk,
    /// Position of the second `v`.
    pub p: usize,
    pub h: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TwoClass {
    Normal,
    Eccentric,
    Triangle,
}

impl TwoLabels {
    pub fn new(s: &Walk, z: &Digraph) -> Result<TwoLabels, PathError> {
        let v = s.verts[0];
        let occ = s.positions_of(v);
        if occ.len() != 2 || occ[0] != 0 || occ[1] % 2 == 0 {
            return Err(violated("2-circuit shape", s.to_string()));
        }
        let mut w = if s.rev == 1 { s.rotate(occ[1]) } else { s.clone() };
        if w.verts[w.len() - 1] < w.verts[1] {
            w = w.reversed();
        }
        let p = w.positions_of(v)[1];
        let h = u8::from(!z.has(v, w.verts[1]));
        let lab = TwoLabels { walk: w, p, h };
        let ok = z.has_zc(0, h, Arc::new(v, lab.x(0, 0)))
            && z.has_zc(0, h, Arc::new(lab.x(1, 0), v))
            && !z.has_zc(0, h, Arc::new(lab.x(1, 1), v))
            && !z.has_zc(0, h, Arc::new(v, lab.x(0, 1)));
        if !ok {
            return Err(violated("2-circuit status at v", lab.walk.to_string()));
        }
        Ok(lab)
    }

    pub fn v(&self) -> usize {
        self.walk.verts[0]
    }

    pub fn pos_x(&self, i: usize, j: usize) -> usize {
        match (i % 2, j % 2) {
            (0, 0) => 1,
            (1, 0) => self.p - 1,
            (1, 1) => self.p + 1,
            _ => self.walk.len() - 1,
        }
    }

    /// Direction leading away from `v` at `x_{i,j}`.
    pub fn step(&self, i: usize, j: usize) -> isize {
        if (i + j) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    fn nth(&self, i: usize, j: usize, k: isize) -> usize {
        self.walk.at(self.pos_x(i, j) as isize + k * self.step(i, j))
    }

    pub fn x(&self, i: usize, j: usize) -> usize {
        self.nth(i, j, 0)
    }

    pub fn y(&self, i: usize, j: usize) -> usize {
        self.nth(i, j, 1)
    }

    pub fn z(&self, i: usize, j: usize) -> usize {
        self.nth(i, j, 2)
    }

    pub fn classify(&self) -> TwoClass {
        let idx = [(0, 0), (0, 1), (1, 0), (1, 1)];
        if idx.iter().any(|&(i, j)| self.y(i, j) != self.x(i, j + 1)) {
            TwoClass::Normal
        } else if self.walk.distinct_vertices() == 3 {
            TwoClass::Triangle
        } else {
            TwoClass::Eccentric
        }
    }
}

pub fn classify_two_circuit(s: &Walk, z: &Digraph) -> Result<TwoClass, PathError> {
    let lab = TwoLabels::new(s, z)?;
    let c = lab.classify();
    if c == TwoClass::Eccentric {
        let v = lab.v();
        if [(0, 0), (0, 1), (1, 0), (1, 1)].iter().any(|&(i, j)| lab.z(i, j) == v) {
            return Err(violated("non-normal with v = z is a triangle", lab.walk.to_string()));
        }
    }
    Ok(c)
}

/// Extra checks applied when the normal 2-circuit comes from an eccentric one.
#[derive(Clone, Copy, Debug)]
struct EccentricContext {
    shortcut: Arc,
    switch: Switch,
}

fn run_normal(run: &mut Runner, lab: &TwoLabels, ecc: Option<EccentricContext>) -> Result<NormalCase, PathError> {
    let v = lab.v();
    let h = lab.h as usize;
    let (i, j) = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .find(|&(i, j)| lab.x(i, j) != lab.y(i, j + 1))
        .ok_or_else(|| violated("normal 2-circuit", lab.walk.to_string()))?;
    let hj = ((h + j) % 2) as u8;
    let shortcut = Arc::new(lab.y(i, j + 1), lab.x(i, j)).zeta(i as u8);
    let sw = resolve_zeta_chi(i as u8, hj, v, lab.x(i, j), lab.y(i, j + 1), lab.x(i, j + 1));
    let own = lab.walk.arc_set();
    if own.contains(&shortcut) {
        return run_na(run, lab, i, j, shortcut).map(|_| NormalCase::Na);
    }
    if let Some(ctx) = ecc {
        if shortcut != ctx.shortcut || !(sw.same_move(&ctx.switch) || sw.inverse().same_move(&ctx.switch)) {
            return Err(violated(
                "eccentric shortcut identity",
                format!("shortcut {shortcut} switch {sw}, expected {} {}", ctx.shortcut, ctx.switch),
            ));
        }
    }
    // S1: v, half j+1 from x_{i+1,j+1} to y_{i,j+1}, then half j from x_{i,j} to x_{i+1,j}.
    let mut verts = vec![v];
    let stop = lab.pos_x(i, j + 1) as isize + lab.step(i, j + 1);
    let mut pos = lab.pos_x(i + 1, j + 1) as isize;
    loop {
        verts.push(lab.walk.at(pos));
        if pos.rem_euclid(lab.walk.len() as isize) == stop.rem_euclid(lab.walk.len() as isize) {
            break;
        }
        pos += lab.step(i + 1, j + 1);
    }
    let mut pos = lab.pos_x(i, j) as isize;
    let end = lab.pos_x(i + 1, j) as isize;
    loop {
        verts.push(lab.walk.at(pos));
        if pos == end {
            break;
        }
        pos += lab.step(i, j);
    }
    let s1 = Walk::new(verts, ((i + 1) % 2) as u8)?;
    if !s1.arc_set().contains(&shortcut) {
        return Err(violated("shortcut lies on S1", s1.to_string()));
    }
    if let Some(ctx) = ecc {
        let ecc_arc = Arc::new(ctx.switch.k, ctx.switch.l);
        if s1.arc_set().contains(&ecc_arc) {
            return Err(violated("eccentric arc off the 1-circuit", s1.to_string()));
        }
    }
    let before = run.z.has_arc(shortcut);
    let present = run.z.has_zc(0, hj, shortcut);
    let case = if !present {
        run.apply(sw, StepType::Type2, None, "shortcut switch")?;
        run_one_circuit(run, &s1)?;
        NormalCase::Nb
    } else {
        run_one_circuit(run, &s1)?;
        run.apply(sw, StepType::Type2, None, "shortcut switch")?;
        NormalCase::Nc
    };
    if run.z.has_arc(shortcut) != before {
        return Err(violated("shortcut arc restored", shortcut.to_string()));
    }
    Ok(case)
}

fn run_na(run: &mut Runner, lab: &TwoLabels, i: usize, j: usize, shortcut: Arc) -> Result<(), PathError> {
    let w = &lab.walk;
    let l = w.len();
    let e = (0..l).find(|&e| w.arc(e) == shortcut).expect("shortcut on S");
    if w.arc(e).touches(lab.v()) {
        return Err(violated("shortcut not incident with v", shortcut.to_string()));
    }
    let half = usize::from(e >= lab.p);
    let endpoint = |vx: usize| if w.verts[e] == vx { e } else { (e + 1) % l };
    let (ca, cb) = if half == (j + 1) % 2 {
        (lab.pos_x(i, j), endpoint(lab.x(i, j)))
    } else {
        let y = (lab.pos_x(i, j + 1) as isize + lab.step(i, j + 1)).rem_euclid(l as isize) as usize;
        (y, endpoint(lab.y(i, j + 1)))
    };
    let (c1, c2) = (ca.min(cb), ca.max(cb));
    let a = w.piece(c1, c2)?;
    let b = w.piece(c2, c1)?;
    let vi = if i == 0 { 0 } else { lab.p };
    let (s1, s2) = if (c1..c2).contains(&vi) { (a, b) } else { (b, a) };
    let to_start = |s: Walk| -> Result<Walk, PathError> {
        let occ = s.positions_of(lab.v());
        if occ.len() != 1 {
            return Err(violated("Na pieces are 1-circuits", s.to_string()));
        }
        Ok(s.rotate(occ[0]))
    };
    let (s1, s2) = (to_start(s1)?, to_start(s2)?);
    let (m1, m2) = (s1.arc_set(), s2.arc_set());
    if !m1.is_disjoint(&m2) || m1.union(&m2).copied().collect::<BTreeSet<_>>() != w.arc_set() {
        return Err(violated("Na pieces partition A(S)", w.to_string()));
    }
    run_one_circuit(run, &s1)?;
    run_one_circuit(run, &s2)?;
    Ok(())
}

fn run_eccentric(run: &mut Runner, lab: &TwoLabels) -> Result<SegmentCase, PathError> {
    let v = lab.v();
    let p = lab.p;
    let h = lab.h;
    let (z10, x11, x10) = (lab.z(1, 0), lab.x(1, 1), lab.x(1, 0));
    if lab.walk.verts[p - 2] != x11 || lab.walk.verts[p - 3] != z10 {
        return Err(violated("eccentric shape", lab.walk.to_string()));
    }
    let ecc = Arc::new(z10, v);
    let sw = resolve_zeta_chi(0, h, z10, x11, x10, v);
    let mut verts = lab.walk.verts.clone();
    verts.drain(p - 2..p);
    let sp = Walk::new(verts, 0)?;
    let before = run.z.has_arc(ecc);
    let ctx = EccentricContext { shortcut: Arc::new(z10, x10), switch: Switch::new(x11, x10, z10, v) };
    let case = if !run.z.has_zc(0, h, ecc) {
        run.apply(sw, StepType::Type2, None, "eccentric switch")?;
        let lab2 = TwoLabels::new(&sp, &run.z)?;
        if lab2.classify() != TwoClass::Normal {
            return Err(violated("S' is normal", sp.to_string()));
        }
        SegmentCase::EccentricA(run_normal(run, &lab2, Some(ctx))?)
    } else {
        let lab2 = TwoLabels::new(&sp, &run.z)?;
        if lab2.classify() != TwoClass::Normal {
            return Err(violated("S' is normal", sp.to_string()));
        }
        let c = run_normal(run, &lab2, Some(ctx))?;
        run.apply(sw, StepType::Type2, None, "eccentric switch")?;
        SegmentCase::EccentricB(c)
    };
    if run.z.has_arc(ecc) != before {
        return Err(violated("eccentric arc restored", ecc.to_string()));
    }
    Ok(case)
}

fn run_triangle(run: &mut Runner, s: &Walk) -> Result<SegmentCase, PathError> {
    let mut t: Vec<usize> = s.verts.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    t.sort_unstable();
    let t: [usize; 3] = t.try_into().map_err(|_| violated("triangle has three vertices", s.to_string()))?;
    let z = run.z.clone();
    let ty = StepType::Type3;
    if let Some(nb) = find_useful_neighbour(&z, t)? {
        let (x, i, h) = (nb.x, nb.i, nb.h);
        let hits: Vec<usize> = t.iter().copied().filter(|&u| z.has_zc(i, h, Arc::new(u, x))).collect();
        let [a] = hits[..] else {
            return Err(violated("unique triangle vertex adjacent to the useful neighbour", format!("{hits:?}")));
        };
        let b = *t
            .iter()
            .find(|&&u| u != a && z.has_zc(i, h, Arc::new(a, u)))
            .ok_or_else(|| violated("triangle orientation", s.to_string()))?;
        let c = t.iter().copied().find(|&u| u != a && u != b).expect("three vertices");
        if !z.has_zc(i, h, Arc::new(b, c)) || !z.has_zc(i, h, Arc::new(c, a)) {
            return Err(violated("triangle orientation", s.to_string()));
        }
        for (p, q, r, u) in [(a, x, b, c), (b, x, c, a), (a, b, c, x)] {
            run.apply(resolve_zeta_chi(i, h, p, q, r, u), ty, None, "triangle with useful neighbour")?;
        }
        Ok(SegmentCase::TriangleNeighbour)
    } else {
        let (xy, tag) = find_useful_arc(&z, t)?.ok_or(EnumError::NoUsefulWitness(t.map(|x| x + 1)))?;
        let h = u8::from(tag == UsefulTag::U2);
        let (x, y) = (xy.tail, xy.head);
        let a = t[0];
        let b = *t
            .iter()
            .find(|&&u| u != a && z.has_zc(0, h, Arc::new(a, u)))
            .ok_or_else(|| violated("triangle orientation", s.to_string()))?;
        let c = t.iter().copied().find(|&u| u != a && u != b).expect("three vertices");
        for (p, q, r, u) in [(x, y, a, b), (a, y, b, c), (b, y, c, a), (x, b, c, y)] {
            run.apply(resolve_zeta_chi(0, h, p, q, r, u), ty, None, "triangle with useful arc")?;
        }
        Ok(SegmentCase::TriangleArc)
    }
}

/// Switches for one raw 2-circuit starting from `z`.
pub fn process_two_circuit(s: &Walk, z: &Digraph) -> Result<(SegmentCase, Vec<Switch>), PathError> {
    let mut run = Runner::new(z.clone());
    let case = run_two(&mut run, s)?;
    Ok((case, run.steps.iter().map(|s| s.switch).collect()))
}

fn run_two(run: &mut Runner, s: &Walk) -> Result<SegmentCase, PathError> {
    let lab = TwoLabels::new(s, &run.z)?;
    match classify_two_circuit(s, &run.z)? {
        TwoClass::Normal => Ok(SegmentCase::Normal(run_normal(run, &lab, None)?)),
        TwoClass::Eccentric => run_eccentric(run, &lab),
        TwoClass::Triangle => run_triangle(run, &lab.walk),
    }
}

// ---------------------------------------------------------------- paths

/// An arc off the current segment whose status differs from the
/// pre-segment state: label `-1` if now present, `2` if now absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Interesting {
    pub arc: Arc,
    pub label: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub switch: Switch,
    pub segment: usize,
    pub step_type: StepType,
    pub case: SegmentCase,
    pub phase: Option<usize>,
    pub interesting: Vec<Interesting>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SegmentRecord {
    pub circuit: usize,
    pub segment: Segment,
    pub case: SegmentCase,
    /// Index into `states` of the state before the segment.
    pub start_state: usize,
    pub step_count: usize,
    pub phase_count: usize,
    pub max_disturbed_chords: usize,
    /// A 1-circuit needed the fallback phase rule.
    pub repaired_phases: bool,
}

/// The canonical path `Z₀ = G, …, Z_M = G'` with per-step bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathTrace {
    pub states: Vec<Digraph>,
    pub steps: Vec<PathStep>,
    pub circuits: Vec<Walk>,
    pub segments: Vec<SegmentRecord>,
}

impl PathTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// No state repeats.
    pub fn is_simple(&self) -> bool {
        self.states.iter().collect::<BTreeSet<_>>().len() == self.states.len()
    }

    /// Endpoints, switch validity between consecutive states and `M ≤ dn`.
    pub fn check(&self, g: &Digraph, g2: &Digraph) -> Result<(), PathError> {
        self.check_valid(g, g2)?;
        if self.len() > g.n() * g.d() {
            return Err(violated("path length at most dn", self.len().to_string()));
        }
        Ok(())
    }

    /// Endpoints and switch validity only.
    pub fn check_valid(&self, g: &Digraph, g2: &Digraph) -> Result<(), PathError> {
        if self.states.first() != Some(g) || self.states.last() != Some(g2) {
            return Err(violated("path endpoints", "Z_0 != G or Z_M != G'"));
        }
        for (k, st) in self.steps.iter().enumerate() {
            let (a, b) = (&self.states[k], &self.states[k + 1]);
            if !a.can_apply(&st.switch) || a.apply_switch(&st.switch)? != *b || !b.is_regular() {
                return Err(violated("path validity", format!("step {k}: {}", st.switch)));
            }
        }
        Ok(())
    }
}

/// Interesting arcs of `z` relative to `zj`, ignoring arcs in `seg`.
pub fn interesting_arcs(z: &Digraph, zj: &Digraph, seg: &BTreeSet<Arc>) -> Vec<Interesting> {
    let mut out = Vec::new();
    for (t, (a, b)) in z.rows().iter().zip(zj.rows()).enumerate() {
        for h in crate::digraph::BitIter(a ^ b) {
            let arc = Arc::new(t, h);
            if !seg.contains(&arc) {
                out.push(Interesting { arc, label: if z.has_arc(arc) { -1 } else { 2 } });
            }
        }
    }
    out
}

pub fn build_canonical_path(g: &Digraph, g2: &Digraph, psi: &Pairing) -> Result<PathTrace, PathError> {
    let trace = build_path_unchecked(g, g2, psi)?;
    trace.check(g, g2)?;
    Ok(trace)
}

/// Like [`build_canonical_path`] but checks only validity, not `M ≤ dn`.
pub fn build_path_unchecked(g: &Digraph, g2: &Digraph, psi: &Pairing) -> Result<PathTrace, PathError> {
    if g == g2 {
        return Err(PathError::SameEndpoints);
    }
    let circuits = decompose_circuits(&sym_diff(g, g2)?, psi)?;
    build_path_with_circuits(g, g2, psi, circuits)
}

/// Builds the path from an explicit circuit order. Each circuit must be a
/// forward walk following `psi` and together they must cover `H` once.
pub fn build_path_with_circuits(
    g: &Digraph,
    g2: &Digraph,
    psi: &Pairing,
    circuits: Vec<Walk>,
) -> Result<PathTrace, PathError> {
    g.require_regular()?;
    g2.require_regular()?;
    if g == g2 {
        return Err(PathError::SameEndpoints);
    }
    let h = sym_diff(g, g2)?;
    psi.check(&h)?;
    let mut cover = BTreeSet::new();
    for c in &circuits {
        let l = c.len();
        for p in 0..l {
            let (a, b) = (c.arc(p), c.arc((p + 1) % l));
            if c.rev != 0 || h.is_blue(a) == h.is_blue(b) || !psi.is_paired(a, b, c.verts[(p + 1) % l]) {
                return Err(PathError::BadPairing(format!("{c} is not a forward circuit of the pairing")));
            }
            if !h.contains(a) || !cover.insert(a) {
                return Err(PathError::BadPairing(format!("{a} missing from H or covered twice")));
            }
        }
    }
    if cover.len() != h.len() {
        return Err(PathError::BadPairing("circuits do not cover H".into()));
    }
    let mut run = Runner::new(g.clone());
    let mut states = vec![g.clone()];
    let mut steps = Vec::new();
    let mut segments = Vec::new();
    for (ci, c) in circuits.iter().enumerate() {
        for seg in split_raw_segments(c, psi)? {
            let zj = run.z.clone();
            run.steps.clear();
            run.states.clear();
            run.max_chords = 0;
            run.phases.clear();
            run.repaired = false;
            let case = match seg.kind {
                RawKind::OneCircuit => {
                    run_one_circuit(&mut run, &seg.walk)?;
                    SegmentCase::OneCircuit
                }
                RawKind::TwoCircuit => run_two(&mut run, &seg.walk)?,
            };
            let own = seg.walk.arc_set();
            if !diff_equals(&zj, &run.z, &mask(g.n(), own.iter().copied())) {
                return Err(violated("segment locality", seg.walk.to_string()));
            }
            let sid = segments.len();
            segments.push(SegmentRecord {
                circuit: ci,
                segment: seg,
                case,
                start_state: states.len() - 1,
                step_count: run.steps.len(),
                phase_count: run.phases.len(),
                max_disturbed_chords: run.max_chords,
                repaired_phases: run.repaired,
            });
            let mut live: BTreeMap<Arc, i8> = BTreeMap::new();
            for (st, z) in run.steps.iter().zip(&run.states) {
                for a in st.switch.arcs().into_iter().filter(|a| !own.contains(a)) {
                    if live.remove(&a).is_none() {
                        live.insert(a, if z.has_arc(a) { -1 } else { 2 });
                    }
                }
                let inc: Vec<Interesting> = live.iter().map(|(&arc, &label)| Interesting { arc, label }).collect();
                if inc != interesting_arcs(z, &zj, &own) {
                    return Err(violated(
                        "incremental interesting arcs agree with recomputation",
                        st.switch.to_string(),
                    ));
                }
                let lab: Vec<(Arc, i8)> = inc.iter().map(|x| (x.arc, x.label)).collect();
                if match_zoo(&lab).is_none() {
                    return Err(violated("interesting arcs form a catalogue shape", format!("{lab:?}")));
                }
                if lab.len() == 5 && five_arc_structure(&lab).is_none() {
                    return Err(violated("five interesting arcs have the forced structure", format!("{lab:?}")));
                }
                steps.push(PathStep {
                    switch: st.switch,
                    segment: sid,
                    step_type: st.step_type,
                    case,
                    phase: st.phase,
                    interesting: inc,
                });
                states.push(z.clone());
            }
        }
    }
    if run.z != *g2 {
        return Err(violated("path ends at G'", "final state differs"));
    }
    let trace = PathTrace { states, steps, circuits, segments };
    trace.check_valid(g, g2)?;
    Ok(trace)
}
