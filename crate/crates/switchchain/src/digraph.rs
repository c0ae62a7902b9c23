//! Simple digraphs on `[n]`, switches, converse/complement and coloured
//! symmetric differences.
//!
//! Vertices are 0-based inside the crate. Everything that is printed or
//! parsed (text files, `Display`, JSON) uses 1-based labels.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported vertex count (one `u64` row per vertex).
pub const MAX_N: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DigraphError {
    #[error("vertex count {0} outside 1..=64")]
    BadOrder(usize),
    #[error("degree {d} out of range for n = {n}")]
    BadDegree { n: usize, d: usize },
    #[error("vertex {v} out of range for n = {n}")]
    VertexRange { v: usize, n: usize },
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("duplicate arc {0}")]
    Duplicate(Arc),
    #[error("arc {0} is not present")]
    MissingArc(Arc),
    #[error("switch {0} is not valid here")]
    InvalidSwitch(Switch),
    #[error("digraph is not {0}-regular")]
    NotRegular(usize),
    #[error("digraphs do not match: {0}")]
    Mismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An arc `(tail, head)`. Ordering is lexicographic on `(tail, head)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
}

impl Arc {
    pub const fn new(tail: usize, head: usize) -> Self {
        Arc { tail, head }
    }

    pub fn rev(self) -> Self {
        Arc::new(self.head, self.tail)
    }

    /// `ζ^i` applied to a single arc.
    pub fn zeta(self, i: u8) -> Self {
        if i & 1 == 1 {
            self.rev()
        } else {
            self
        }
    }

    pub fn touches(self, v: usize) -> bool {
        self.tail == v || self.head == v
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.tail + 1, self.head + 1)
    }
}

/// The switch `[i j k l]`: delete `(i,j)`, `(k,l)`; add `(i,l)`, `(k,j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Switch {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl Switch {
    pub const fn new(i: usize, j: usize, k: usize, l: usize) -> Self {
        Switch { i, j, k, l }
    }

    pub fn distinct(&self) -> bool {
        let v = [self.i, self.j, self.k, self.l];
        (0..4).all(|a| (a + 1..4).all(|b| v[a] != v[b]))
    }

    pub fn deleted(&self) -> [Arc; 2] {
        [Arc::new(self.i, self.j), Arc::new(self.k, self.l)]
    }

    pub fn added(&self) -> [Arc; 2] {
        [Arc::new(self.i, self.l), Arc::new(self.k, self.j)]
    }

    /// `[ijkl]` and `[klij]` are the same move; pick the smaller spelling.
    pub fn canonical(&self) -> Switch {
        let other = Switch::new(self.k, self.l, self.i, self.j);
        (*self).min(other)
    }

    /// The inverse move `[i l k j]`.
    pub fn inverse(&self) -> Switch {
        Switch::new(self.i, self.l, self.k, self.j)
    }

    pub fn same_move(&self, other: &Switch) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn arcs(&self) -> [Arc; 4] {
        let [a, b] = self.deleted();
        let [c, d] = self.added();
        [a, b, c, d]
    }
}

impl fmt::Display for Switch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {} {} {}]", self.i + 1, self.j + 1, self.k + 1, self.l + 1)
    }
}

/// `ζ^i χ^h [αβγδ]` resolved to a plain switch.
pub fn resolve_zeta_chi(i: u8, h: u8, a: usize, b: usize, c: usize, d: usize) -> Switch {
    match (i & 1, h & 1) {
        (0, 0) => Switch::new(a, b, c, d),
        (0, _) => Switch::new(a, d, c, b),
        (_, 0) => Switch::new(b, a, d, c),
        _ => Switch::new(b, c, d, a),
    }
}

/// A simple digraph on `n` vertices with nominal degree `d`.
///
/// Row `t` holds the out-neighbourhood of `t` as a bitmask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    d: usize,
    rows: Vec<u64>,
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digraph(n={}, d={}, ", self.n, self.d)?;
        f.debug_list().entries(self.arcs().map(|a| a.to_string())).finish()?;
        write!(f, ")")
    }
}

/// Row-major lexicographic order on the adjacency matrix bits.
impl Ord for Digraph {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.d).cmp(&(other.n, other.d)).then_with(|| {
            for (a, b) in self.rows.iter().zip(&other.rows) {
                match a.reverse_bits().cmp(&b.reverse_bits()) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Digraph {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_order(n: usize) -> Result<(), DigraphError> {
    if n == 0 || n > MAX_N {
        return Err(DigraphError::BadOrder(n));
    }
    Ok(())
}

impl Digraph {
    pub fn empty(n: usize, d: usize) -> Result<Self, DigraphError> {
        check_order(n)?;
        Ok(Digraph { n, d, rows: vec![0; n] })
    }

    pub fn from_arcs<I: IntoIterator<Item = Arc>>(n: usize, d: usize, arcs: I) -> Result<Self, DigraphError> {
        let mut g = Digraph::empty(n, d)?;
        for a in arcs {
            g.check_arc(a)?;
            if g.has_arc(a) {
                return Err(DigraphError::Duplicate(a));
            }
            g.set(a, true);
        }
        Ok(g)
    }

    /// Build from raw bit rows (bit `h` of `rows[t]` is the arc `(t,h)`).
    pub fn from_rows(n: usize, d: usize, rows: Vec<u64>) -> Result<Self, DigraphError> {
        check_order(n)?;
        if rows.len() != n {
            return Err(DigraphError::Mismatch(format!("{} rows for n = {n}", rows.len())));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        for (t, r) in rows.iter().enumerate() {
            if r & !mask != 0 {
                return Err(DigraphError::VertexRange { v: 64 - r.leading_zeros() as usize, n });
            }
            if r >> t & 1 == 1 {
                return Err(DigraphError::Loop(t + 1));
            }
        }
        Ok(Digraph { n, d, rows })
    }

    fn check_arc(&self, a: Arc) -> Result<(), DigraphError> {
        for v in [a.tail, a.head] {
            if v >= self.n {
                return Err(DigraphError::VertexRange { v: v + 1, n: self.n });
            }
        }
        if a.tail == a.head {
            return Err(DigraphError::Loop(a.tail + 1));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    #[inline]
    pub fn has(&self, tail: usize, head: usize) -> bool {
        self.rows[tail] >> head & 1 == 1
    }

    #[inline]
    pub fn has_arc(&self, a: Arc) -> bool {
        self.has(a.tail, a.head)
    }

    /// Membership in `ζ^i χ^h G`, i.e. arc `ζ^i a` present xor `h`.
    #[inline]
    pub fn has_zc(&self, i: u8, h: u8, a: Arc) -> bool {
        self.has_arc(a.zeta(i)) ^ (h & 1 == 1)
    }

    /// Raw mutation; callers keep the digraph simple.
    #[inline]
    pub fn set(&mut self, a: Arc, present: bool) {
        debug_assert!(a.tail != a.head);
        if present {
            self.rows[a.tail] |= 1 << a.head;
        } else {
            self.rows[a.tail] &= !(1 << a.head);
        }
    }

    pub fn arc_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        self.rows.iter().enumerate().flat_map(|(t, &r)| BitIter(r).map(move |h| Arc::new(t, h)))
    }

    pub fn out_neighbours(&self, v: usize) -> impl Iterator<Item = usize> {
        BitIter(self.rows[v])
    }

    pub fn in_neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&t| self.has(t, v))
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.rows[v].count_ones() as usize
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.rows.iter().filter(|r| *r >> v & 1 == 1).count()
    }

    pub fn is_regular(&self) -> bool {
        (0..self.n).all(|v| self.out_degree(v) == self.d && self.in_degree(v) == self.d)
    }

    pub fn require_regular(&self) -> Result<(), DigraphError> {
        if self.is_regular() {
            Ok(())
        } else {
            Err(DigraphError::NotRegular(self.d))
        }
    }

    /// The `k`-th arc in lexicographic order.
    pub fn arc_by_rank(&self, mut k: usize) -> Option<Arc> {
        for (t, &r) in self.rows.iter().enumerate() {
            let c = r.count_ones() as usize;
            if k < c {
                return BitIter(r).nth(k).map(|h| Arc::new(t, h));
            }
            k -= c;
        }
        None
    }

    /// Can the two arcs be switched? Needs four distinct endpoints and
    /// both new arcs absent.
    pub fn switch_valid(&self, a1: Arc, a2: Arc) -> Result<bool, DigraphError> {
        for a in [a1, a2] {
            if !self.has_arc(a) {
                return Err(DigraphError::MissingArc(a));
            }
        }
        if a1 == a2 {
            return Err(DigraphError::Duplicate(a1));
        }
        let s = Switch::new(a1.tail, a1.head, a2.tail, a2.head);
        Ok(s.distinct() && s.added().iter().all(|&a| !self.has_arc(a)))
    }

    /// Is `s` applicable as written (deleted arcs present, added absent)?
    pub fn can_apply(&self, s: &Switch) -> bool {
        s.distinct() && s.deleted().iter().all(|&a| self.has_arc(a)) && s.added().iter().all(|&a| !self.has_arc(a))
    }

    pub fn apply_switch(&self, s: &Switch) -> Result<Digraph, DigraphError> {
        let mut g = self.clone();
        g.apply_switch_mut(s)?;
        Ok(g)
    }

    pub fn apply_switch_mut(&mut self, s: &Switch) -> Result<(), DigraphError> {
        if !self.can_apply(s) {
            return Err(DigraphError::InvalidSwitch(*s));
        }
        for a in s.deleted() {
            self.set(a, false);
        }
        for a in s.added() {
            self.set(a, true);
        }
        Ok(())
    }

    /// ζ: reverse every arc.
    pub fn converse(&self) -> Digraph {
        let mut rows = vec![0u64; self.n];
        for a in self.arcs() {
            rows[a.head] |= 1 << a.tail;
        }
        Digraph { n: self.n, d: self.d, rows }
    }

    /// χ: complement inside the loopless complete digraph.
    pub fn complement(&self) -> Digraph {
        let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let rows = self.rows.iter().enumerate().map(|(t, r)| !r & full & !(1 << t)).collect();
        Digraph { n: self.n, d: (self.n - 1).saturating_sub(self.d), rows }
    }

    /// `ζ^i χ^h G`.
    pub fn zeta_chi(&self, i: u8, h: u8) -> Digraph {
        let g = if i & 1 == 1 { self.converse() } else { self.clone() };
        if h & 1 == 1 {
            g.complement()
        } else {
            g
        }
    }

    /// Text format: `n d` then one `tail head` line per arc (1-based).
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        for a in self.arcs() {
            s.push_str(&format!("{} {}\n", a.tail + 1, a.head + 1));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Digraph, DigraphError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or(DigraphError::Parse { line: 1, msg: "empty input".into() })?;
        let nums = parse_usizes(header, ln + 1)?;
        if nums.len() != 2 {
            return Err(DigraphError::Parse { line: ln + 1, msg: "expected `n d`".into() });
        }
        let (n, d) = (nums[0], nums[1]);
        let mut arcs = Vec::new();
        for (ln, l) in lines {
            let v = parse_usizes(l, ln + 1)?;
            if v.len() != 2 || v[0] == 0 || v[1] == 0 {
                return Err(DigraphError::Parse { line: ln + 1, msg: "expected `tail head` (1-based)".into() });
            }
            arcs.push(Arc::new(v[0] - 1, v[1] - 1));
        }
        Digraph::from_arcs(n, d, arcs)
    }
}

fn parse_usizes(line: &str, ln: usize) -> Result<Vec<usize>, DigraphError> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| DigraphError::Parse { line: ln, msg: format!("{t:?}: {e}") }))
        .collect()
}

/// Iterator over set bit positions, ascending.
#[derive(Clone, Copy)]
pub struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Deterministic start state: `v -> v+1, ..., v+d (mod n)`.
pub fn circulant(n: usize, d: usize) -> Result<Digraph, DigraphError> {
    if d == 0 || d >= n {
        return Err(DigraphError::BadDegree { n, d });
    }
    Digraph::from_arcs(n, d, (0..n).flat_map(|v| (1..=d).map(move |s| Arc::new(v, (v + s) % n))))
}

/// Symmetric difference with blue = G − G2 and red = G2 − G.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColouredDiff {
    pub n: usize,
    pub blue: Vec<Arc>,
    pub red: Vec<Arc>,
}

impl ColouredDiff {
    pub fn new(n: usize, mut blue: Vec<Arc>, mut red: Vec<Arc>) -> Self {
        blue.sort();
        red.sort();
        ColouredDiff { n, blue, red }
    }

    pub fn is_empty(&self) -> bool {
        self.blue.is_empty() && self.red.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blue.len() + self.red.len()
    }

    /// All arcs, sorted.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut v: Vec<Arc> = self.blue.iter().chain(&self.red).copied().collect();
        v.sort();
        v
    }

    pub fn is_blue(&self, a: Arc) -> bool {
        self.blue.binary_search(&a).is_ok()
    }

    pub fn contains(&self, a: Arc) -> bool {
        self.is_blue(a) || self.red.binary_search(&a).is_ok()
    }

    /// Blue in-degree `θ_v`.
    pub fn theta(&self, v: usize) -> usize {
        self.blue.iter().filter(|a| a.head == v).count()
    }

    /// Blue out-degree `φ_v`.
    pub fn phi(&self, v: usize) -> usize {
        self.blue.iter().filter(|a| a.tail == v).count()
    }

    pub fn is_balanced(&self) -> bool {
        let disjoint = self.blue.iter().all(|a| self.red.binary_search(a).is_err());
        disjoint
            && (0..self.n).all(|v| {
                let c = |arcs: &[Arc], f: fn(&Arc) -> usize| arcs.iter().filter(|a| f(a) == v).count();
                c(&self.blue, |a| a.head) == c(&self.red, |a| a.head)
                    && c(&self.blue, |a| a.tail) == c(&self.red, |a| a.tail)
            })
    }
}

pub fn sym_diff(g: &Digraph, g2: &Digraph) -> Result<ColouredDiff, DigraphError> {
    if g.n() != g2.n() || g.d() != g2.d() {
        return Err(DigraphError::Mismatch(format!("(n,d) = ({},{}) vs ({},{})", g.n(), g.d(), g2.n(), g2.d())));
    }
    let blue = g.arcs().filter(|&a| !g2.has_arc(a)).collect();
    let red = g2.arcs().filter(|&a| !g.has_arc(a)).collect();
    Ok(ColouredDiff::new(g.n(), blue, red))
}

/// `C(m, 2)`.
pub fn choose2(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}
