//! A hand-made pair on 23 named vertices whose canonical path has an
//! eccentric 2-circuit, a three-phase 1-circuit and a state with five
//! interesting arcs and sixteen bad pairs. The concrete digraphs are frozen
//! under `fixtures/worked/`; [`complete_pair`] derives them.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::digraph::{sym_diff, Arc, ColouredDiff, Digraph, DigraphError, Switch};
use crate::flow::{bad_pairs, BadPairReport, Colour};
use crate::paths::{build_path_with_circuits, Interesting, Pairing, PathError, PathTrace, Walk};

pub const N: usize = 23;
pub const D: usize = 5;

/// Vertex names in numbering order (first appearance along the circuits).
pub const NAMES: [&str; N] = [
    "v", "x00", "x01", "z00", "w1", "w2", "z10", "x11", "x10", "z11", "z01", "p2", "p1", "q1", "q2", "r1", "r2", "s2",
    "s1", "t1", "t2", "u2", "u1",
];

/// Forward circuits in processing order, with the colour of the first arc.
pub const CIRCUITS: [(&str, bool); 7] = [
    ("v x00 x01 z00 w1 w2 z10 x11 x10 v x11 x10 z11 z01 x00 x01", true),
    ("v p2 p1 z01", true),
    ("v x10 q1 q2", true),
    ("z10 x10 r1 r2", true),
    ("z10 v s2 s1", false),
    ("v w2 t1 t2", true),
    ("v u2 u1 z00", true),
];

/// Expected switches; the first [`ORDERED`] in this exact order, the rest
/// as a set.
pub const SWITCHES: [&str; 13] = [
    "z10 x11 x10 v",
    "v x00 x01 z00",
    "v x10 z11 z01",
    "v w2 z10 x10",
    "v z00 w1 w2",
    "v z01 x00 x01",
    "x11 x10 z10 v",
    "v p2 p1 z01",
    "v x10 q1 q2",
    "z10 x10 r1 r2",
    "z10 s1 s2 v",
    "v w2 t1 t2",
    "v u2 u1 z00",
];
pub const ORDERED: usize = 7;

/// State index with the most interesting arcs and bad pairs.
pub const PEAK: usize = 4;

pub const PEAK_INTERESTING: [(&str, &str); 5] = [("z10", "v"), ("z10", "x10"), ("v", "z01"), ("v", "w2"), ("v", "z00")];

type NamedArc = (&'static str, &'static str);

/// Bad pairs at the peak state: vertex, colour, the two arcs.
pub const PEAK_BAD_PAIRS: [(&str, Colour, NamedArc, NamedArc); 16] = [
    ("v", Colour::Green, ("z10", "v"), ("s2", "v")),
    ("v", Colour::Green, ("v", "z00"), ("v", "u2")),
    ("v", Colour::Green, ("v", "z01"), ("v", "p2")),
    ("v", Colour::Yellow, ("x11", "v"), ("x10", "v")),
    ("v", Colour::Yellow, ("v", "x00"), ("v", "x01")),
    ("v", Colour::Yellow, ("v", "w2"), ("v", "t2")),
    ("z10", Colour::Green, ("z10", "v"), ("z10", "s1")),
    ("z10", Colour::Yellow, ("z10", "x10"), ("z10", "r2")),
    ("x10", Colour::Green, ("x11", "x10"), ("z11", "x10")),
    ("x10", Colour::Yellow, ("z10", "x10"), ("r1", "x10")),
    ("z00", Colour::Green, ("v", "z00"), ("u1", "z00")),
    ("z00", Colour::Yellow, ("x01", "z00"), ("w1", "z00")),
    ("z01", Colour::Green, ("v", "z01"), ("p1", "z01")),
    ("z01", Colour::Yellow, ("z11", "z01"), ("x00", "z01")),
    ("w2", Colour::Green, ("w1", "w2"), ("z10", "w2")),
    ("w2", Colour::Yellow, ("v", "w2"), ("t1", "w2")),
];

#[derive(Debug, Error)]
pub enum WorkedError {
    #[error("unknown vertex name {0}")]
    Name(String),
    #[error("no {d}-regular completion of the difference")]
    NoCompletion { d: usize },
    #[error("fixture does not match the named difference: {0}")]
    Fixture(String),
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error(transparent)]
    Path(#[from] PathError),
}

pub fn vertex(name: &str) -> Result<usize, WorkedError> {
    NAMES.iter().position(|&x| x == name).ok_or_else(|| WorkedError::Name(name.into()))
}

pub fn name(v: usize) -> &'static str {
    NAMES[v]
}

fn arc(a: (&str, &str)) -> Result<Arc, WorkedError> {
    Ok(Arc::new(vertex(a.0)?, vertex(a.1)?))
}

fn quad(s: &str) -> Result<Vec<usize>, WorkedError> {
    s.split_whitespace().map(vertex).collect()
}

pub fn switch(s: &str) -> Result<Switch, WorkedError> {
    let v = quad(s)?;
    Ok(Switch::new(v[0], v[1], v[2], v[3]))
}

pub fn walks() -> Result<Vec<Walk>, WorkedError> {
    CIRCUITS.iter().map(|(s, _)| Ok(Walk::new(quad(s)?, 0)?)).collect()
}

/// `H` read off the circuits: colours alternate along each walk.
pub fn difference() -> Result<ColouredDiff, WorkedError> {
    let (mut blue, mut red) = (Vec::new(), Vec::new());
    for (w, &(_, first_blue)) in walks()?.iter().zip(CIRCUITS.iter()) {
        for (p, a) in w.arcs().into_iter().enumerate() {
            if (p % 2 == 0) == first_blue {
                blue.push(a);
            } else {
                red.push(a);
            }
        }
    }
    Ok(ColouredDiff::new(N, blue, red))
}

/// The pairing whose circuits are [`CIRCUITS`].
pub fn pairing(h: &ColouredDiff) -> Result<Pairing, WorkedError> {
    let mut pairs = Vec::new();
    for w in walks()? {
        let arcs = w.arcs();
        for p in 0..arcs.len() {
            let (a, b) = (arcs[p], arcs[(p + 1) % arcs.len()]);
            pairs.push(if h.is_blue(a) { (a, b) } else { (b, a) });
        }
    }
    Ok(Pairing::from_pairs(h, &pairs)?)
}

/// Shared arcs `C` with out-degree `d − blue_out` and in-degree
/// `d − blue_in` at each vertex, avoiding loops and `H`, so that
/// `G = blue ∪ C` and `G' = red ∪ C` are `d`-regular. Deterministic
/// augmenting-path search over the bipartite tail/head graph.
pub fn complete_pair(h: &ColouredDiff, d: usize) -> Result<(Digraph, Digraph), WorkedError> {
    let n = h.n;
    let none = || WorkedError::NoCompletion { d };
    let need_out: Vec<usize> = (0..n)
        .map(|v| d.checked_sub(h.blue.iter().filter(|a| a.tail == v).count()).ok_or_else(none))
        .collect::<Result<_, _>>()?;
    let need_in: Vec<usize> = (0..n)
        .map(|v| d.checked_sub(h.blue.iter().filter(|a| a.head == v).count()).ok_or_else(none))
        .collect::<Result<_, _>>()?;
    let banned: BTreeSet<Arc> = h.arcs().into_iter().collect();
    let allowed = |t: usize, u: usize| t != u && !banned.contains(&Arc::new(t, u));
    // chosen[t][u]: arc (t,u) in C; load[u]: heads used.
    let mut chosen = vec![vec![false; n]; n];
    let mut load = vec![0usize; n];
    // Try to give tail t one more arc, rerouting along alternating paths.
    fn augment(
        t: usize,
        chosen: &mut Vec<Vec<bool>>,
        load: &mut Vec<usize>,
        need_in: &[usize],
        seen: &mut Vec<bool>,
        allowed: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let n = load.len();
        for u in 0..n {
            if seen[u] || chosen[t][u] || !allowed(t, u) {
                continue;
            }
            seen[u] = true;
            if load[u] < need_in[u] {
                chosen[t][u] = true;
                load[u] += 1;
                return true;
            }
            // u is full: free one of its slots by moving another tail.
            for s in 0..n {
                if chosen[s][u] && s != t {
                    chosen[s][u] = false;
                    if augment(s, chosen, load, need_in, seen, allowed) {
                        chosen[t][u] = true;
                        return true;
                    }
                    chosen[s][u] = true;
                }
            }
        }
        false
    }
    for t in 0..n {
        for _ in 0..need_out[t] {
            let mut seen = vec![false; n];
            if !augment(t, &mut chosen, &mut load, &need_in, &mut seen, &allowed) {
                return Err(none());
            }
        }
    }
    let shared: Vec<Arc> = (0..n)
        .flat_map(|t| (0..n).map(move |u| (t, u)))
        .filter(|&(t, u)| chosen[t][u])
        .map(|(t, u)| Arc::new(t, u))
        .collect();
    let g = Digraph::from_arcs(n, d, h.blue.iter().copied().chain(shared.iter().copied()))?;
    let g2 = Digraph::from_arcs(n, d, h.red.iter().copied().chain(shared.iter().copied()))?;
    if !g.is_regular() || !g2.is_regular() {
        return Err(none());
    }
    Ok((g, g2))
}

/// Smallest `d` for which [`complete_pair`] succeeds on `H`.
pub fn smallest_completion(h: &ColouredDiff) -> Result<(usize, Digraph, Digraph), WorkedError> {
    for d in 1..h.n {
        if let Ok((g, g2)) = complete_pair(h, d) {
            return Ok((d, g, g2));
        }
    }
    Err(WorkedError::NoCompletion { d: h.n - 1 })
}

pub const FIXTURE_G: &str = include_str!("../fixtures/worked/g.txt");
pub const FIXTURE_G2: &str = include_str!("../fixtures/worked/g2.txt");

/// The frozen pair, checked against the named difference.
pub fn fixture() -> Result<(Digraph, Digraph), WorkedError> {
    let g = Digraph::from_text(FIXTURE_G)?;
    let g2 = Digraph::from_text(FIXTURE_G2)?;
    if g.n() != N || g.d() != D {
        return Err(WorkedError::Fixture(format!("order {} degree {}", g.n(), g.d())));
    }
    if sym_diff(&g, &g2)? != difference()? {
        return Err(WorkedError::Fixture("symmetric difference".into()));
    }
    Ok((g, g2))
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub what: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkedReport {
    pub transitions: usize,
    pub switches: Vec<String>,
    pub peak_interesting: Vec<Interesting>,
    pub peak_bad_pairs: BadPairReport,
    pub checks: Vec<Check>,
}

impl WorkedReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn show(s: &Switch) -> String {
    format!("[{} {} {} {}]", name(s.i), name(s.j), name(s.k), name(s.l))
}

fn show_arc(a: Arc) -> String {
    format!("({},{})", name(a.tail), name(a.head))
}

/// Processes the frozen pair with the named pairing and circuit order.
pub fn run() -> Result<(PathTrace, WorkedReport), WorkedError> {
    let (g, g2) = fixture()?;
    let h = difference()?;
    let psi = pairing(&h)?;
    let trace = build_path_with_circuits(&g, &g2, &psi, walks()?)?;
    trace.check(&g, &g2)?;
    let got: Vec<Switch> = trace.steps.iter().map(|s| s.switch).collect();
    let want: Vec<Switch> = SWITCHES.iter().map(|s| switch(s)).collect::<Result<_, _>>()?;
    let mut checks = Vec::new();
    let mut check = |what, holds, detail: String| checks.push(Check { what, holds, detail });
    check("13 transitions", got.len() == want.len(), got.len().to_string());
    let ordered = got.len() >= ORDERED && got[..ORDERED].iter().zip(&want[..ORDERED]).all(|(a, b)| a.same_move(b));
    check(
        "eccentric, three phases, shortcut in order",
        ordered,
        got.iter().take(ORDERED).map(show).collect::<Vec<_>>().join(" "),
    );
    let set = |v: &[Switch]| v.iter().map(|s| s.canonical().min(s.inverse().canonical())).collect::<BTreeSet<_>>();
    let rest_ok = got.len() == want.len() && set(&got[ORDERED..]) == set(&want[ORDERED..]);
    check("remaining 4-cycle switches", rest_ok, got.iter().skip(ORDERED).map(show).collect::<Vec<_>>().join(" "));
    let phases: BTreeSet<usize> = trace.steps.iter().filter(|s| s.segment == 0).filter_map(|s| s.phase).collect();
    check("1-circuit has three phases", phases.len() == 3, format!("{phases:?}"));
    let peak = trace.steps.get(PEAK - 1).map(|s| s.interesting.clone()).unwrap_or_default();
    let want_peak: BTreeSet<Arc> = PEAK_INTERESTING.iter().map(|&a| arc(a)).collect::<Result<_, _>>()?;
    let got_peak: BTreeSet<Arc> = peak.iter().map(|x| x.arc).collect();
    check(
        "five interesting arcs at the peak",
        got_peak == want_peak,
        got_peak.iter().map(|&a| show_arc(a)).collect::<Vec<_>>().join(" "),
    );
    let bp = bad_pairs(&h, &trace.states[PEAK], &psi);
    let norm = |x: Arc, y: Arc| if x < y { (x, y) } else { (y, x) };
    let got_bp: BTreeSet<(usize, Colour, (Arc, Arc))> =
        bp.pairs.iter().map(|p| (p.vertex, p.colour, norm(p.blue, p.red))).collect();
    let want_bp: BTreeSet<(usize, Colour, (Arc, Arc))> = PEAK_BAD_PAIRS
        .iter()
        .map(|&(v, c, a, b)| Ok((vertex(v)?, c, norm(arc(a)?, arc(b)?))))
        .collect::<Result<_, WorkedError>>()?;
    check("16 bad pairs at the peak", bp.total() == 16, bp.total().to_string());
    check(
        "bad pairs match the table",
        got_bp == want_bp,
        format!("{} of {} listed", got_bp.intersection(&want_bp).count(), want_bp.len()),
    );
    let report = WorkedReport {
        transitions: got.len(),
        switches: got.iter().map(show).collect(),
        peak_interesting: peak,
        peak_bad_pairs: bp,
        checks,
    };
    Ok((trace, report))
}
