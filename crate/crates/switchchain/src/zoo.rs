//! Catalogue of the labelled digraphs that interesting (and bad) arcs may
//! form, with a subdigraph matcher.
//!
//! Every shape is built on the same five arcs
//! `v→a (μ)`, `v→b (μ)`, `v→c (ν)`, `u→v (ξ)`, `u→p (ω)` with
//! `{μ,ν} = {ξ,ω} = {−1,2}`; the eight shapes differ in which of `u`, `p`
//! coincide with `a`, `b`, `c`. Matching is up to the two label swaps and
//! global arc reversal.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::digraph::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    Mu,
    Nu,
    Xi,
    Omega,
}

// Symbolic vertices of the base shape.
const V: usize = 0;
const A: usize = 1;
const B: usize = 2;
const C: usize = 3;
const U: usize = 4;
const P: usize = 5;

/// `(u, p)` identifications of the eight shapes, in catalogue order.
const IDENT: [(usize, usize); 8] = [(U, P), (U, A), (U, C), (A, P), (C, P), (A, B), (A, C), (C, A)];

pub const SHAPE_COUNT: usize = IDENT.len();

fn shape_arcs(k: usize) -> [(usize, usize, Sym); 5] {
    let (u, p) = IDENT[k];
    [(V, A, Sym::Mu), (V, B, Sym::Mu), (V, C, Sym::Nu), (u, V, Sym::Xi), (u, p, Sym::Omega)]
}

/// A labelled arc: label −1 or 2.
pub type Labelled = (Arc, i8);

/// How a labelled digraph sits inside a catalogue shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZooMatch {
    /// 1-based shape number.
    pub shape: usize,
    /// 1 if the arcs were reversed before matching.
    pub zeta: u8,
    pub mu: i8,
    pub xi: i8,
    /// Vertex of the input mapped to each used shape vertex (`v a b c u p`).
    pub image: Vec<Option<usize>>,
}

fn other(l: i8) -> i8 {
    if l == -1 {
        2
    } else {
        -1
    }
}

/// The concrete labelled arcs of shape `k` (0-based) for one label choice.
pub fn concrete_shape(k: usize, mu: i8, xi: i8) -> Vec<(usize, usize, i8)> {
    shape_arcs(k)
        .iter()
        .map(|&(s, t, sym)| {
            let l = match sym {
                Sym::Mu => mu,
                Sym::Nu => other(mu),
                Sym::Xi => xi,
                Sym::Omega => other(xi),
            };
            (s, t, l)
        })
        .collect()
}

fn embed(arcs: &[Labelled], shape: &[(usize, usize, i8)], map: &mut Vec<(usize, usize)>, k: usize) -> bool {
    if k == arcs.len() {
        return true;
    }
    let (arc, label) = arcs[k];
    let img = |m: &Vec<(usize, usize)>, x: usize| m.iter().find(|p| p.0 == x).map(|p| p.1);
    let used = |m: &Vec<(usize, usize)>, y: usize| m.iter().any(|p| p.1 == y);
    for &(s, t, l) in shape {
        if l != label {
            continue;
        }
        let mark = map.len();
        let ok_end = |m: &mut Vec<(usize, usize)>, x: usize, y: usize| match img(m, x) {
            Some(z) => z == y,
            None if !used(m, y) => {
                m.push((x, y));
                true
            }
            None => false,
        };
        if ok_end(map, arc.tail, s) && ok_end(map, arc.head, t) && embed(arcs, shape, map, k + 1) {
            return true;
        }
        map.truncate(mark);
    }
    false
}

/// Finds a catalogue shape containing the labelled digraph, trying shapes,
/// reversal and label assignments in a fixed order.
pub fn match_zoo(arcs: &[Labelled]) -> Option<ZooMatch> {
    if arcs.len() > 5 || arcs.iter().any(|&(_, l)| l != -1 && l != 2) {
        return None;
    }
    if arcs.iter().map(|p| p.0).collect::<BTreeSet<_>>().len() != arcs.len() {
        return None;
    }
    for k in 0..SHAPE_COUNT {
        for zeta in 0..2u8 {
            let input: Vec<Labelled> = arcs.iter().map(|&(a, l)| (a.zeta(zeta), l)).collect();
            for mu in [-1i8, 2] {
                for xi in [-1i8, 2] {
                    let shape = concrete_shape(k, mu, xi);
                    let mut map = Vec::new();
                    if embed(&input, &shape, &mut map, 0) {
                        let mut image = vec![None; 6];
                        for (x, y) in map {
                            image[y] = Some(x);
                        }
                        return Some(ZooMatch { shape: k + 1, zeta, mu, xi, image });
                    }
                }
            }
        }
    }
    None
}

/// Structure forced when there are exactly five arcs: a vertex `w` meeting
/// three of them on one side with mixed labels, a fourth on the other side
/// of `w` ending at `u`, and a fifth away from `w` meeting `u` on the same
/// side as the three. Returns `w` and `u`.
pub fn five_arc_structure(arcs: &[Labelled]) -> Option<(usize, usize)> {
    if arcs.len() != 5 {
        return None;
    }
    let verts: BTreeSet<usize> = arcs.iter().flat_map(|&(a, _)| [a.tail, a.head]).collect();
    for zeta in 0..2u8 {
        let z: Vec<Labelled> = arcs.iter().map(|&(a, l)| (a.zeta(zeta), l)).collect();
        // After reversal, "head of three" becomes "tail of three"; read the
        // three as tails and the fourth as a head.
        for &w in &verts {
            let three: Vec<&Labelled> = z.iter().filter(|(a, _)| a.tail == w).collect();
            if three.len() != 3 || three.iter().all(|&&(_, l)| l == three[0].1) {
                continue;
            }
            for &(fourth, _) in z.iter().filter(|(a, _)| a.head == w) {
                let u = fourth.tail;
                let ok = z.iter().any(|&(a, _)| a != fourth && !a.touches(w) && a.tail == u);
                if ok {
                    return Some((w, u));
                }
            }
        }
    }
    None
}
