//! Encodings `L = G + G' − Z`, their validity conditions, the repair
//! procedure back to a digraph, reverse-switch counting and a brute-force
//! preimage oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::digraph::{resolve_zeta_chi, sym_diff, Arc, Digraph, DigraphError, Switch};
use crate::enumeration::StateSpace;
use crate::exec::Exec;
use crate::paths::{build_canonical_path, enumerate_pairings, Pairing, PathError, StepType};
use crate::zoo::{match_zoo, Labelled};

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("size mismatch: {0}")]
    Size(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row or column {index} sums to {sum}, expected {d}")]
    Sum { index: usize, sum: i32, d: usize },
    #[error("entry {value} at {arc} outside {{-1,0,1,2}}")]
    Entry { arc: Arc, value: i32 },
    #[error("encoding is not valid for this state: {0:?}")]
    NotValid(Vec<Violation>),
    #[error("no {what} vertex for the {kind} step")]
    Missing { what: &'static str, kind: RepairKind },
    #[error("repair did not terminate after {0} steps")]
    Runaway(usize),
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// An `n×n` matrix over `{−1,0,1,2}` with zero diagonal and all line sums
/// equal to `d`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Encoding {
    n: usize,
    d: usize,
    e: Vec<i8>,
}

impl fmt::Debug for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Encoding{:?}", self.bad_arcs())
    }
}

impl Encoding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, a: Arc) -> i8 {
        self.e[a.tail * self.n + a.head]
    }

    /// `ζ^i L(x, y)`.
    pub fn at(&self, i: u8, x: usize, y: usize) -> i8 {
        self.get(Arc::new(x, y).zeta(i))
    }

    fn add(&mut self, a: Arc, delta: i8) {
        self.e[a.tail * self.n + a.head] += delta;
    }

    pub fn from_digraph(g: &Digraph) -> Self {
        let n = g.n();
        let mut e = vec![0i8; n * n];
        for a in g.arcs() {
            e[a.tail * n + a.head] = 1;
        }
        Encoding { n, d: g.d(), e }
    }

    /// Builds and validates an encoding from a row-major matrix.
    pub fn from_matrix(n: usize, d: usize, e: Vec<i8>) -> Result<Self, EncodingError> {
        if e.len() != n * n {
            return Err(EncodingError::Size(format!("{} entries for n = {n}", e.len())));
        }
        let l = Encoding { n, d, e };
        for t in 0..n {
            for h in 0..n {
                let v = l.get(Arc::new(t, h));
                if !(-1..=2).contains(&v) || (t == h && v != 0) {
                    return Err(EncodingError::Entry { arc: Arc::new(t, h), value: v.into() });
                }
            }
        }
        for k in 0..n {
            for sum in [l.row_sum(k), l.col_sum(k)] {
                if sum != d as i32 {
                    return Err(EncodingError::Sum { index: k + 1, sum, d });
                }
            }
        }
        Ok(l)
    }

    pub fn row_sum(&self, t: usize) -> i32 {
        (0..self.n).map(|h| i32::from(self.e[t * self.n + h])).sum()
    }

    pub fn col_sum(&self, h: usize) -> i32 {
        (0..self.n).map(|t| i32::from(self.e[t * self.n + h])).sum()
    }

    /// Bad arcs (`F(L)`) with their labels, in lexicographic order.
    pub fn bad_arcs(&self) -> Vec<Labelled> {
        let mut out = Vec::new();
        for t in 0..self.n {
            for h in 0..self.n {
                let v = self.e[t * self.n + h];
                if v == -1 || v == 2 {
                    out.push((Arc::new(t, h), v));
                }
            }
        }
        out
    }

    pub fn bad_count(&self) -> usize {
        self.e.iter().filter(|&&v| v == -1 || v == 2).count()
    }

    /// The digraph when there are no bad arcs.
    pub fn to_digraph(&self) -> Option<Digraph> {
        if self.bad_count() > 0 {
            return None;
        }
        let arcs = (0..self.n * self.n).filter(|&k| self.e[k] == 1).map(|k| Arc::new(k / self.n, k % self.n));
        Digraph::from_arcs(self.n, self.d, arcs).ok()
    }

    /// `[x y w z]`: lower `(x,y)`, `(w,z)` and raise `(x,z)`, `(w,y)`.
    pub fn can_switch(&self, s: &Switch) -> bool {
        s.distinct()
            && self.get(Arc::new(s.i, s.j)) > -1
            && self.get(Arc::new(s.k, s.l)) > -1
            && self.get(Arc::new(s.i, s.l)) < 2
            && self.get(Arc::new(s.k, s.j)) < 2
    }

    pub fn apply_switch(&self, s: &Switch) -> Option<Encoding> {
        if !self.can_switch(s) {
            return None;
        }
        let mut l = self.clone();
        for a in s.deleted() {
            l.add(a, -1);
        }
        for a in s.added() {
            l.add(a, 1);
        }
        Some(l)
    }

    /// Text format: `n d` header then `n` rows of `n` integers.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        for t in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|h| self.e[t * self.n + h].to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, EncodingError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse = |ln: usize, l: &str| -> Result<Vec<i64>, EncodingError> {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<i64>().map_err(|e| EncodingError::Parse { line: ln + 1, msg: format!("{t:?}: {e}") })
                })
                .collect()
        };
        let (ln, head) = lines.next().ok_or(EncodingError::Parse { line: 1, msg: "empty input".into() })?;
        let h = parse(ln, head)?;
        if h.len() != 2 || h[0] < 0 || h[1] < 0 {
            return Err(EncodingError::Parse { line: ln + 1, msg: "expected `n d`".into() });
        }
        let (n, d) = (h[0] as usize, h[1] as usize);
        let mut e = Vec::with_capacity(n * n);
        for (ln, l) in lines {
            let row = parse(ln, l)?;
            if row.len() != n {
                return Err(EncodingError::Parse { line: ln + 1, msg: format!("expected {n} entries") });
            }
            for v in row {
                e.push(i8::try_from(v).map_err(|_| EncodingError::Parse { line: ln + 1, msg: format!("entry {v}") })?);
            }
        }
        Encoding::from_matrix(n, d, e)
    }
}

/// `L = G + G' − Z`.
pub fn encoding_of(g: &Digraph, g2: &Digraph, z: &Digraph) -> Result<Encoding, EncodingError> {
    let n = g.n();
    if g2.n() != n || z.n() != n || g2.d() != g.d() || z.d() != g.d() {
        return Err(EncodingError::Size("G, G' and Z differ in n or d".into()));
    }
    let mut e = vec![0i8; n * n];
    for t in 0..n {
        for h in 0..n {
            e[t * n + h] = i8::from(g.has(t, h)) + i8::from(g2.has(t, h)) - i8::from(z.has(t, h));
        }
    }
    Encoding::from_matrix(n, g.d(), e)
}

// ---------------------------------------------------------------- handy tuples

/// `(i, α, β, γ)` with `ζ^i L(α,β) = 2` and `ζ^i L(α,γ) = −1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct HandyTuple {
    pub i: u8,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub very_handy: bool,
}

impl HandyTuple {
    /// The two bad arcs at the centre, as real arcs.
    pub fn arcs(&self) -> [Arc; 2] {
        [Arc::new(self.alpha, self.beta).zeta(self.i), Arc::new(self.alpha, self.gamma).zeta(self.i)]
    }
}

/// Whether `x` is the `ζ^i`-head of bad arcs with both labels.
fn mixed_head(l: &Encoding, i: u8, x: usize) -> bool {
    let labels: BTreeSet<i8> = (0..l.n).map(|y| l.at(i, y, x)).filter(|&v| v == -1 || v == 2).collect();
    labels.len() == 2
}

/// All handy tuples in lexicographic order.
pub fn handy_tuples(l: &Encoding) -> Vec<HandyTuple> {
    let mut out = Vec::new();
    for i in 0..2u8 {
        for alpha in 0..l.n {
            for beta in (0..l.n).filter(|&b| l.at(i, alpha, b) == 2) {
                for gamma in (0..l.n).filter(|&c| l.at(i, alpha, c) == -1) {
                    let mixed = usize::from(mixed_head(l, i, beta)) + usize::from(mixed_head(l, i, gamma));
                    out.push(HandyTuple { i, alpha, beta, gamma, very_handy: mixed <= 1 });
                }
            }
        }
    }
    out
}

fn independent(t1: &HandyTuple, t2: &HandyTuple) -> bool {
    t1.alpha != t2.alpha && t1.arcs().iter().all(|a| !t2.arcs().contains(a))
}

// ---------------------------------------------------------------- Z-validity

/// A failed clause of the validity conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub detail: String,
}

fn viol(clause: &'static str, detail: impl Into<String>) -> Violation {
    Violation { clause, detail: detail.into() }
}

/// Checks the entry range of `L + Z` and the six structural conditions.
/// Returns the list of violations (empty means valid).
pub fn z_violations(l: &Encoding, z: &Digraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if l.n != z.n() || l.d != z.d() {
        out.push(viol("size", "encoding and state differ in n or d"));
        return out;
    }
    let n = l.n;
    let mut h_deg = vec![0usize; n];
    for t in 0..n {
        for hd in 0..n {
            let s = l.get(Arc::new(t, hd)) + i8::from(z.has(t, hd));
            if !(0..=2).contains(&s) {
                out.push(viol("entry range", format!("L+Z = {s} at {}", Arc::new(t, hd))));
            }
            if s == 1 {
                h_deg[t] += 1;
                h_deg[hd] += 1;
            }
        }
    }
    let bad = l.bad_arcs();
    let handy = handy_tuples(l);
    if match_zoo(&bad).is_none() {
        out.push(viol("(i) bad arcs form a catalogue shape", format!("{bad:?}")));
    }
    if !handy.is_empty() && !handy.iter().any(|t| t.very_handy) {
        out.push(viol("(ii) handy implies very handy", format!("{handy:?}")));
    }
    if bad.len() == 5 && !five_bad_pair_exists(&handy) {
        out.push(viol("(iii) independent very handy and handy tuples", format!("{bad:?}")));
    }
    if bad.len() == 4 && handy.is_empty() {
        out.push(viol("(iv) four bad arcs give a handy tuple", format!("{bad:?}")));
    }
    let twos: Vec<Arc> = bad.iter().filter(|b| b.1 == 2).map(|b| b.0).collect();
    if l.d == 1 {
        for &a in &twos {
            if h_deg[a.tail] > 0 || h_deg[a.head] > 0 {
                out.push(viol("(v) no H arc meets a label-2 arc", a.to_string()));
            }
        }
        if !twos.is_empty() && bad.len() > 1 && (handy.is_empty() || bad.len() > 3 || twos.len() != 1) {
            out.push(viol("(v) label-2 arc with company", format!("{bad:?}")));
        }
        if bad.len() == 3 && twos.len() == 1 {
            let a = twos[0];
            for c in [a.tail, a.head] {
                if !handy.iter().any(|t| t.alpha == c) {
                    out.push(viol("(v) label-2 endpoints are handy centres", format!("{bad:?}")));
                }
            }
        }
    }
    if l.d == 2 {
        for x in (0..n).filter(|&x| h_deg[x] > 0) {
            let heads = twos.iter().filter(|a| a.head == x).count();
            let tails = twos.iter().filter(|a| a.tail == x).count();
            if heads > 1 || tails > 1 {
                out.push(viol("(vi) at most one label-2 arc per side", format!("vertex {}", x + 1)));
            }
        }
    }
    out
}

fn five_bad_pair_exists(handy: &[HandyTuple]) -> bool {
    handy.iter().filter(|t| t.very_handy).any(|t1| handy.iter().any(|t2| independent(t1, t2)))
}

pub fn is_z_valid(l: &Encoding, z: &Digraph) -> bool {
    z_violations(l, z).is_empty()
}

// ---------------------------------------------------------------- repair

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RepairKind {
    /// Clears one `−1` and one `2` at a common centre.
    MinusOneTwo,
    Two,
    MinusOne,
}

impl fmt::Display for RepairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairKind::MinusOneTwo => "(-1,2)",
            RepairKind::Two => "2",
            RepairKind::MinusOne => "-1",
        })
    }
}

/// `ζ^i [α β δ γ]`, as a tuple `(i, α, β, γ, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RepairTuple {
    pub i: u8,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub delta: usize,
}

impl RepairTuple {
    pub fn switch(&self) -> Switch {
        resolve_zeta_chi(self.i, 0, self.alpha, self.beta, self.delta, self.gamma)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepairStep {
    pub kind: RepairKind,
    pub tuple: RepairTuple,
    pub bad_before: usize,
    pub bad_after: usize,
}

fn has_handy(l: &Encoding) -> bool {
    (0..2u8).any(|i| (0..l.n).any(|a| (0..l.n).any(|b| l.at(i, a, b) == 2) && (0..l.n).any(|c| l.at(i, a, c) == -1)))
}

/// Number of bad arcs with `ζ^i`-tail `x`.
fn bad_tail_count(l: &Encoding, i: u8, x: usize, label: Option<i8>) -> usize {
    (0..l.n).map(|y| l.at(i, x, y)).filter(|&v| (v == -1 || v == 2) && label.is_none_or(|w| v == w)).count()
}

/// Whether `x` is the `ζ^i`-head of a bad arc (optionally of one label).
fn is_bad_head(l: &Encoding, i: u8, x: usize, label: Option<i8>) -> bool {
    (0..l.n).map(|y| l.at(i, y, x)).any(|v| (v == -1 || v == 2) && label.is_none_or(|w| v == w))
}

fn deltas(l: &Encoding, i: u8, a: usize, b: usize, c: usize) -> impl Iterator<Item = usize> + '_ {
    (0..l.n).filter(move |&x| x != a && x != b && x != c && l.at(i, x, c) == 1 && l.at(i, x, b) == 0)
}

/// The step the canonical repair order takes next, or `None` if there are
/// no bad arcs.
pub fn next_repair(l: &Encoding) -> Result<Option<(RepairKind, RepairTuple)>, EncodingError> {
    if l.bad_count() == 0 {
        return Ok(None);
    }
    let n = l.n;
    if has_handy(l) {
        let handy = handy_tuples(l);
        let very: Vec<&HandyTuple> = handy.iter().filter(|t| t.very_handy).collect();
        let preferred: Vec<&HandyTuple> =
            very.iter().copied().filter(|t1| handy.iter().any(|t2| independent(t1, t2))).collect();
        let pool = if preferred.is_empty() { very } else { preferred };
        for t in pool {
            if let Some(delta) = deltas(l, t.i, t.alpha, t.beta, t.gamma).next() {
                let tuple = RepairTuple { i: t.i, alpha: t.alpha, beta: t.beta, gamma: t.gamma, delta };
                return Ok(Some((RepairKind::MinusOneTwo, tuple)));
            }
        }
        return Err(EncodingError::Missing { what: "delta", kind: RepairKind::MinusOneTwo });
    }
    let any_two = l.e.contains(&2);
    if any_two {
        for i in 0..2u8 {
            for alpha in (0..n).filter(|&a| bad_tail_count(l, i, a, None) == 1) {
                for beta in (0..n).filter(|&b| l.at(i, alpha, b) == 2) {
                    for gamma in
                        (0..n).filter(|&c| c != alpha && l.at(i, alpha, c) == 0 && !is_bad_head(l, i, c, Some(2)))
                    {
                        if let Some(delta) = deltas(l, i, alpha, beta, gamma).next() {
                            return Ok(Some((RepairKind::Two, RepairTuple { i, alpha, beta, gamma, delta })));
                        }
                    }
                }
            }
        }
        return Err(EncodingError::Missing { what: "gamma/delta", kind: RepairKind::Two });
    }
    let doubled = (0..2u8).any(|i| (0..n).any(|a| bad_tail_count(l, i, a, Some(-1)) >= 2));
    for i in 0..2u8 {
        for alpha in (0..n).filter(|&a| !doubled || bad_tail_count(l, i, a, Some(-1)) >= 2) {
            for gamma in (0..n).filter(|&c| l.at(i, alpha, c) == -1) {
                for beta in (0..n).filter(|&b| l.at(i, alpha, b) == 1 && !is_bad_head(l, i, b, None)) {
                    if let Some(delta) = deltas(l, i, alpha, beta, gamma).next() {
                        return Ok(Some((RepairKind::MinusOne, RepairTuple { i, alpha, beta, gamma, delta })));
                    }
                }
            }
        }
    }
    Err(EncodingError::Missing { what: "beta/delta", kind: RepairKind::MinusOne })
}

/// Result of repairing an encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Repair {
    pub steps: Vec<RepairStep>,
    pub result: Digraph,
    /// The canonical choice got stuck and a bounded search was used.
    pub searched: bool,
}

/// Repairs a valid encoding to a digraph by the canonical procedure,
/// checking validity and the drop in bad arcs at every step.
pub fn repair_canonical(l: &Encoding, z: &Digraph) -> Result<(Vec<RepairStep>, Digraph), EncodingError> {
    let v = z_violations(l, z);
    if !v.is_empty() {
        return Err(EncodingError::NotValid(v));
    }
    let mut cur = l.clone();
    let mut steps = Vec::new();
    while let Some((kind, tuple)) = next_repair(&cur)? {
        if steps.len() >= 8 {
            return Err(EncodingError::Runaway(steps.len()));
        }
        let before = cur.bad_count();
        cur = cur.apply_switch(&tuple.switch()).ok_or(EncodingError::Missing { what: "legal switch", kind })?;
        let after = cur.bad_count();
        let drop = if kind == RepairKind::MinusOneTwo { 2 } else { 1 };
        if before != after + drop {
            return Err(EncodingError::NotValid(vec![viol(
                "bad-arc count drops",
                format!("{kind}: {before} -> {after}"),
            )]));
        }
        let v = z_violations(&cur, z);
        if !v.is_empty() {
            return Err(EncodingError::NotValid(v));
        }
        steps.push(RepairStep { kind, tuple, bad_before: before, bad_after: after });
    }
    let a = cur
        .to_digraph()
        .filter(Digraph::is_regular)
        .ok_or(EncodingError::Size("repair result is not regular".into()))?;
    Ok((steps, a))
}

/// Shortest sequence of at most `budget` switches, each lowering the number
/// of bad arcs and keeping validity, that ends at a digraph.
pub fn search_repair(l: &Encoding, z: &Digraph, budget: usize) -> Option<Vec<(Switch, usize)>> {
    (0..=budget).find_map(|depth| search_from(l, z, depth))
}

fn search_from(l: &Encoding, z: &Digraph, depth: usize) -> Option<Vec<(Switch, usize)>> {
    let before = l.bad_count();
    if before == 0 {
        return Some(Vec::new());
    }
    if depth == 0 {
        return None;
    }
    let n = l.n;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let s = Switch::new(a, b, c, d);
                    let Some(m) = l.apply_switch(&s) else { continue };
                    let after = m.bad_count();
                    if after >= before || !is_z_valid(&m, z) {
                        continue;
                    }
                    if let Some(mut rest) = search_from(&m, z, depth - 1) {
                        rest.insert(0, (s, after));
                        return Some(rest);
                    }
                }
            }
        }
    }
    None
}

/// Canonical repair, falling back to [`search_repair`] (budget 3) when the
/// canonical choice finds no `δ`.
pub fn repair(l: &Encoding, z: &Digraph) -> Result<Repair, EncodingError> {
    match repair_canonical(l, z) {
        Ok((steps, result)) => Ok(Repair { steps, result, searched: false }),
        Err(EncodingError::Missing { what, kind }) => {
            let path = search_repair(l, z, 3).ok_or(EncodingError::Missing { what, kind })?;
            let mut cur = l.clone();
            let mut steps = Vec::new();
            for (s, after) in path {
                let before = cur.bad_count();
                let prev = cur.clone();
                cur = cur.apply_switch(&s).expect("searched switch is legal");
                let tuple = RepairTuple { i: 0, alpha: s.i, beta: s.j, gamma: s.l, delta: s.k };
                let twos = |e: &Encoding| e.e.iter().filter(|&&v| v == 2).count();
                let kind = if before - after == 2 {
                    RepairKind::MinusOneTwo
                } else if twos(&cur) < twos(&prev) {
                    RepairKind::Two
                } else {
                    RepairKind::MinusOne
                };
                steps.push(RepairStep { kind, tuple, bad_before: before, bad_after: after });
            }
            let result = cur
                .to_digraph()
                .filter(Digraph::is_regular)
                .ok_or(EncodingError::Size("repair result is not regular".into()))?;
            Ok(Repair { steps, result, searched: true })
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------- reverse switches

/// Whether the forward `kind` step with this tuple is allowed in `l`
/// (ignoring the canonical tie-break).
fn forward_allowed(l: &Encoding, kind: RepairKind, t: &RepairTuple) -> bool {
    let (i, a, b, c, d) = (t.i, t.alpha, t.beta, t.gamma, t.delta);
    let common = l.at(i, d, c) == 1 && l.at(i, d, b) == 0;
    common
        && match kind {
            RepairKind::MinusOneTwo => {
                l.at(i, a, b) == 2
                    && l.at(i, a, c) == -1
                    && usize::from(mixed_head(l, i, b)) + usize::from(mixed_head(l, i, c)) <= 1
            }
            RepairKind::Two => {
                !has_handy(l)
                    && l.at(i, a, b) == 2
                    && bad_tail_count(l, i, a, None) == 1
                    && l.at(i, a, c) == 0
                    && !is_bad_head(l, i, c, Some(2))
            }
            RepairKind::MinusOne => {
                !l.e.contains(&2) && l.at(i, a, c) == -1 && l.at(i, a, b) == 1 && !is_bad_head(l, i, b, None)
            }
        }
}

/// Undo a `kind` step: the encoding it came from, if the tuple fits.
fn reverse_step(b: &Encoding, kind: RepairKind, t: &RepairTuple) -> Option<Encoding> {
    let (i, al, be, ga, de) = (t.i, t.alpha, t.beta, t.gamma, t.delta);
    let (ab, dg, ag, db) =
        (Arc::new(al, be).zeta(i), Arc::new(de, ga).zeta(i), Arc::new(al, ga).zeta(i), Arc::new(de, be).zeta(i));
    let (want, got): ([i8; 4], [i8; 4]) = match kind {
        RepairKind::MinusOneTwo => ([1, 0, 0, 1], [2, 1, -1, 0]),
        RepairKind::Two => ([1, 0, 1, 1], [2, 1, 0, 0]),
        RepairKind::MinusOne => ([0, 0, 0, 1], [1, 1, -1, 0]),
    };
    let arcs = [ab, dg, ag, db];
    if arcs.iter().zip(want).any(|(&a, w)| b.get(a) != w) {
        return None;
    }
    let mut l = b.clone();
    for (a, g) in arcs.iter().zip(got) {
        l.e[a.tail * l.n + a.head] = g;
    }
    Some(l)
}

/// Reverse-switch sequences allowed in the counting argument, in the order
/// they are undone.
pub fn reverse_types() -> BTreeSet<Vec<RepairKind>> {
    use RepairKind::*;
    let seeds = [
        [MinusOne, MinusOneTwo, MinusOneTwo],
        [Two, MinusOneTwo, MinusOneTwo],
        [MinusOne, MinusOne, MinusOneTwo],
        [MinusOne, Two, MinusOneTwo],
        [Two, Two, MinusOneTwo],
        [MinusOne, MinusOne, MinusOne],
        [MinusOne, MinusOne, Two],
        [MinusOne, Two, Two],
        [Two, Two, Two],
    ];
    let mut out = BTreeSet::new();
    for s in seeds {
        for mask in 0..8u8 {
            out.insert((0..3).filter(|k| mask >> k & 1 == 1).map(|k| s[k]).collect());
        }
    }
    out
}

pub fn reverse_bound(kind: RepairKind, n: usize, d: usize) -> u64 {
    let (n, d) = (n as u64, d as u64);
    match kind {
        RepairKind::MinusOne => 2 * d * d * n * (n - 2),
        RepairKind::Two => 2 * d * (d - 1) * (d - 1) * n,
        RepairKind::MinusOneTwo => 2 * d * d * (d + 1) * n,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReverseReport {
    /// Distinct valid encodings reached, including the start.
    pub total: usize,
    /// Distinct encodings per reverse type (keyed by e.g. `-1,(-1,2)`).
    pub per_type: BTreeMap<String, usize>,
    /// Largest `N_X(B)` seen for each kind.
    pub max_moves: BTreeMap<String, u64>,
    /// `N_X(B)` above its bound.
    pub bound_violations: Vec<String>,
}

/// Encodings obtainable from `a` by at most `budget` reverse switches in
/// the canonical order, each intermediate encoding valid for `z`.
pub fn count_reverse_reachable(z: &Digraph, a: &Digraph, budget: usize) -> ReverseReport {
    let (n, d) = (a.n(), a.d());
    let types = reverse_types();
    let start = Encoding::from_digraph(a);
    let mut report = ReverseReport::default();
    let mut all: BTreeSet<Encoding> = BTreeSet::new();
    all.insert(start.clone());
    let mut by_type: BTreeMap<Vec<RepairKind>, BTreeSet<Encoding>> = BTreeMap::new();
    by_type.entry(Vec::new()).or_default().insert(start.clone());
    let mut frontier = vec![(Vec::new(), start)];
    for _ in 0..budget {
        let mut next = Vec::new();
        for (seq, b) in &frontier {
            for kind in [RepairKind::MinusOne, RepairKind::Two, RepairKind::MinusOneTwo] {
                let mut ext = seq.clone();
                ext.push(kind);
                if !types.contains(&ext) {
                    continue;
                }
                let mut moves = 0u64;
                for i in 0..2u8 {
                    for alpha in 0..n {
                        for beta in 0..n {
                            for gamma in 0..n {
                                for delta in 0..n {
                                    let vs = [alpha, beta, gamma, delta];
                                    if (0..4).any(|x| (x + 1..4).any(|y| vs[x] == vs[y])) {
                                        continue;
                                    }
                                    let t = RepairTuple { i, alpha, beta, gamma, delta };
                                    let Some(l) = reverse_step(b, kind, &t) else { continue };
                                    if !forward_allowed(&l, kind, &t) || !is_z_valid(&l, z) {
                                        continue;
                                    }
                                    moves += 1;
                                    all.insert(l.clone());
                                    if by_type.entry(ext.clone()).or_default().insert(l.clone()) {
                                        next.push((ext.clone(), l));
                                    }
                                }
                            }
                        }
                    }
                }
                let key = kind.to_string();
                let m = report.max_moves.entry(key.clone()).or_insert(0);
                *m = (*m).max(moves);
                if moves > reverse_bound(kind, n, d) {
                    report.bound_violations.push(format!("N_{key} = {moves} > {}", reverse_bound(kind, n, d)));
                }
            }
        }
        frontier = next;
    }
    report.total = all.len();
    report.per_type = by_type
        .into_iter()
        .map(|(k, v)| (k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","), v.len()))
        .collect();
    report
}

pub fn poly_bound(n: usize, d: usize) -> u64 {
    25 * (d as u64).pow(6) * (n as u64).pow(6)
}

// ---------------------------------------------------------------- preimages

/// Colour-free key of a pairing: its pairs as sorted unordered arc pairs.
pub fn pairing_key(psi: &Pairing) -> Vec<(Arc, Arc)> {
    let mut v: Vec<(Arc, Arc)> = psi.pairs().into_iter().map(|(a, b)| if a <= b { (a, b) } else { (b, a) }).collect();
    v.sort();
    v
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct PreKey {
    z: usize,
    z2: usize,
    l: Encoding,
    psi: Vec<(Arc, Arc)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PreimageReport {
    /// Distinct `(Z, Z', L, ψ)` seen.
    pub keys: usize,
    pub max: usize,
    /// `histogram[c]` = number of keys with `c` preimages.
    pub histogram: BTreeMap<usize, usize>,
    /// Keys of Type 1 transitions with a unique preimage.
    pub unique_type1: usize,
}

/// For every transition on every canonical path of the space, the number
/// of `(G, G')` giving the same `(Z, Z', L, ψ)`.
pub fn preimage_counts(space: &StateSpace, exec: Exec) -> Result<PreimageReport, EncodingError> {
    let n = space.len();
    type Rows = Vec<(PreKey, usize, StepType)>;
    let per: Vec<Result<Rows, EncodingError>> = exec.map_range(n * n, |k| {
        let (a, b) = (k / n, k % n);
        let mut rows = Vec::new();
        if a == b {
            return Ok(rows);
        }
        let (g, g2) = (space.state(a), space.state(b));
        let h = sym_diff(g, g2)?;
        for psi in enumerate_pairings(&h)? {
            let trace = build_canonical_path(g, g2, &psi)?;
            let key = pairing_key(&psi);
            for (j, st) in trace.steps.iter().enumerate() {
                let zi =
                    space.index_of(&trace.states[j]).ok_or(EncodingError::Size("state outside the space".into()))?;
                let zi2 = space
                    .index_of(&trace.states[j + 1])
                    .ok_or(EncodingError::Size("state outside the space".into()))?;
                let l = encoding_of(g, g2, &trace.states[j])?;
                rows.push((PreKey { z: zi, z2: zi2, l, psi: key.clone() }, k, st.step_type));
            }
        }
        Ok(rows)
    });
    let mut map: BTreeMap<PreKey, (BTreeSet<usize>, bool)> = BTreeMap::new();
    for rows in per {
        for (key, pair, ty) in rows? {
            let e = map.entry(key).or_default();
            e.0.insert(pair);
            e.1 |= ty == StepType::Type1;
        }
    }
    let mut rep = PreimageReport { keys: map.len(), ..Default::default() };
    for (set, t1) in map.values() {
        rep.max = rep.max.max(set.len());
        *rep.histogram.entry(set.len()).or_insert(0) += 1;
        if *t1 && set.len() == 1 {
            rep.unique_type1 += 1;
        }
    }
    Ok(rep)
}
