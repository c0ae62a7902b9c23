//! Exhaustive enumeration of Ω(n,d), the switch metagraph, and the
//! W-set / useful-neighbour machinery for directed 3-cycles.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::digraph::{choose2, Arc, BitIter, Digraph, DigraphError};
use crate::exec::Exec;

/// Default refusal threshold for `enumerate_omega`.
pub const DEFAULT_CAP: usize = 1_000_000;
/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "SWITCHCHAIN_OMEGA_CAP";
/// Largest `n` accepted for exhaustive enumeration.
pub const MAX_ENUM_N: usize = 7;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("n = {0} too large for exhaustive enumeration (max {MAX_ENUM_N})")]
    TooLarge(usize),
    #[error("more than {cap} states for (n,d) = ({n},{d}); raise {CAP_ENV} to continue")]
    CapExceeded { n: usize, d: usize, cap: usize },
    #[error("vertex set U must be non-empty")]
    EmptyU,
    #[error("{0:?} does not induce a directed 3-cycle")]
    NotTriangle([usize; 3]),
    #[error("no useful neighbour or useful arc for triangle {0:?}")]
    NoUsefulWitness([usize; 3]),
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error("cache file: {0}")]
    Cache(String),
}

pub fn cap_from_env() -> usize {
    std::env::var(CAP_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_CAP)
}

/// All d-regular simple digraphs on `[n]` in canonical order.
#[derive(Clone, Debug)]
pub struct StateSpace {
    n: usize,
    d: usize,
    states: Vec<Digraph>,
    index: HashMap<Vec<u64>, usize>,
}

impl StateSpace {
    pub fn from_states(n: usize, d: usize, mut states: Vec<Digraph>) -> Self {
        states.sort();
        states.dedup();
        let index = states.iter().enumerate().map(|(k, g)| (g.rows().to_vec(), k)).collect();
        StateSpace { n, d, states, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Digraph] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &Digraph {
        &self.states[k]
    }

    pub fn index_of(&self, g: &Digraph) -> Option<usize> {
        self.index.get(g.rows()).copied()
    }

    /// `C(dn, 2)`: number of unordered arc pairs in any state.
    pub fn pair_count(&self) -> usize {
        choose2(self.n * self.d)
    }

    pub fn to_cache_text(&self) -> String {
        let mut s = format!("OMEGA {} {} {}\n", self.n, self.d, self.len());
        for g in &self.states {
            s.push_str(&g.to_text());
        }
        s
    }

    pub fn from_cache_text(text: &str) -> Result<Self, EnumError> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        let bad = |m: &str| EnumError::Cache(m.to_string());
        if header.len() != 4 || header[0] != "OMEGA" {
            return Err(bad("missing `OMEGA n d count` header"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|e| bad(&e.to_string()));
        let (n, d, count) = (num(header[1])?, num(header[2])?, num(header[3])?);
        let per = 1 + n * d;
        let body: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
        if body.len() != per * count {
            return Err(bad("block count does not match header"));
        }
        let states = body.chunks(per).map(|c| Digraph::from_text(&c.join("\n"))).collect::<Result<Vec<_>, _>>()?;
        if states.iter().any(|g| g.n() != n || g.d() != d || !g.is_regular()) {
            return Err(bad("state does not match header"));
        }
        Ok(StateSpace::from_states(n, d, states))
    }
}

/// Enumerate Ω(n,d) with the cap taken from the environment.
pub fn enumerate_omega(n: usize, d: usize) -> Result<StateSpace, EnumError> {
    enumerate_omega_capped(n, d, cap_from_env())
}

pub fn enumerate_omega_capped(n: usize, d: usize, cap: usize) -> Result<StateSpace, EnumError> {
    if n > MAX_ENUM_N {
        return Err(EnumError::TooLarge(n));
    }
    if n == 0 || d == 0 || d >= n {
        return Err(DigraphError::BadDegree { n, d }.into());
    }
    // Candidate rows for each vertex, ascending in canonical order.
    let mut rows = vec![0u64; n];
    let mut col = vec![0usize; n];
    let mut out = Vec::new();
    fill_row(n, d, 0, &mut rows, &mut col, &mut out, cap)?;
    let states = out.into_iter().map(|r| Digraph::from_rows(n, d, r)).collect::<Result<Vec<_>, _>>()?;
    Ok(StateSpace::from_states(n, d, states))
}

fn fill_row(
    n: usize,
    d: usize,
    r: usize,
    rows: &mut Vec<u64>,
    col: &mut Vec<usize>,
    out: &mut Vec<Vec<u64>>,
    cap: usize,
) -> Result<(), EnumError> {
    if r == n {
        if out.len() == cap {
            return Err(EnumError::CapExceeded { n, d, cap });
        }
        out.push(rows.clone());
        return Ok(());
    }
    // Columns that must be filled by the remaining rows.
    let remaining = n - r;
    let mut chosen = Vec::with_capacity(d);
    choose_cols(n, d, r, 0, &mut chosen, rows, col, out, cap, remaining)
}

#[allow(clippy::too_many_arguments)]
fn choose_cols(
    n: usize,
    d: usize,
    r: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    rows: &mut Vec<u64>,
    col: &mut Vec<usize>,
    out: &mut Vec<Vec<u64>>,
    cap: usize,
    remaining: usize,
) -> Result<(), EnumError> {
    if chosen.len() == d {
        // Every column needs d - col[c] more ones from the remaining - 1 rows
        // (column c cannot use row c).
        let ok = (0..n).all(|c| {
            let avail = remaining - 1 - usize::from(c > r);
            d - col[c] <= avail
        });
        if ok {
            rows[r] = chosen.iter().fold(0, |m, &c| m | 1 << c);
            fill_row(n, d, r + 1, rows, col, out, cap)?;
            rows[r] = 0;
        }
        return Ok(());
    }
    for c in from..n {
        if c == r || col[c] == d || n - c < d - chosen.len() {
            continue;
        }
        chosen.push(c);
        col[c] += 1;
        choose_cols(n, d, r, c + 1, chosen, rows, col, out, cap, remaining)?;
        col[c] -= 1;
        chosen.pop();
    }
    Ok(())
}

/// Switch adjacency on a state space.
#[derive(Clone, Debug)]
pub struct Metagraph {
    /// Sorted neighbour indices per state.
    pub adj: Vec<Vec<usize>>,
    /// `C(dn,2)` for the instance.
    pub pairs: usize,
}

/// Valid switches out of `g`, one per unordered arc pair, in arc-rank order.
pub fn valid_switch_results(g: &Digraph) -> Vec<Digraph> {
    let arcs: Vec<Arc> = g.arcs().collect();
    let mut out = Vec::new();
    for (p, &a) in arcs.iter().enumerate() {
        for &b in &arcs[p + 1..] {
            if g.switch_valid(a, b).unwrap_or(false) {
                let s = crate::digraph::Switch::new(a.tail, a.head, b.tail, b.head);
                out.push(g.apply_switch(&s).expect("valid switch"));
            }
        }
    }
    out
}

pub fn metagraph(space: &StateSpace, exec: Exec) -> Metagraph {
    let adj = exec.map(space.states(), |g| {
        let mut nb: Vec<usize> =
            valid_switch_results(g).iter().map(|h| space.index_of(h).expect("switch leaves the state space")).collect();
        nb.sort_unstable();
        nb
    });
    Metagraph { adj, pairs: space.pair_count() }
}

impl Metagraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn bfs(&self, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.bfs(0).iter().all(|&x| x != usize::MAX)
    }

    /// Exact diameter, or `None` when disconnected.
    pub fn diameter(&self, exec: Exec) -> Option<usize> {
        if !self.is_connected() {
            return None;
        }
        exec.map_range(self.adj.len(), |s| *self.bfs(s).iter().max().unwrap()).into_iter().max()
    }

    /// Number of rejected unordered pairs at each state (self-loop weight).
    pub fn rejections(&self) -> Vec<usize> {
        self.adj.iter().map(|nb| self.pairs - nb.len()).collect()
    }

    /// Are the adjacency lists symmetric?
    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(x, nb)| nb.iter().all(|&y| self.adj[y].binary_search(&x).is_ok()))
    }
}

/// The four sets `W^{(i,j)}(U, G)` as bitmasks, indexed `[i][j]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WSets {
    pub sets: [[u64; 2]; 2],
    pub u: u64,
}

impl WSets {
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.sets[i][j]
    }

    pub fn union(&self) -> u64 {
        self.sets[0][0] | self.sets[0][1] | self.sets[1][0] | self.sets[1][1]
    }

    pub fn contains(&self, i: usize, j: usize, x: usize) -> bool {
        self.sets[i][j] >> x & 1 == 1
    }

    pub fn members(&self, i: usize, j: usize) -> Vec<usize> {
        BitIter(self.sets[i][j]).collect()
    }
}

/// W-sets for a non-empty `U`.
pub fn w_sets(g: &Digraph, u: &[usize]) -> Result<WSets, EnumError> {
    if u.is_empty() {
        return Err(EnumError::EmptyU);
    }
    Ok(w_sets_unchecked(g, u))
}

/// W-sets allowing `U = ∅`, where every universal is vacuously true and
/// so every vertex lands in `W^{(1,1)}`.
pub fn w_sets_unchecked(g: &Digraph, u: &[usize]) -> WSets {
    let umask = u.iter().fold(0u64, |m, &x| m | 1 << x);
    let mut sets = [[0u64; 2]; 2];
    for x in (0..g.n()).filter(|&x| umask >> x & 1 == 0) {
        for (i, row) in sets.iter_mut().enumerate() {
            for (j, set) in row.iter_mut().enumerate() {
                if u.iter().all(|&y| g.has(x, y) == (i == 1) && g.has(y, x) == (j == 1)) {
                    *set |= 1 << x;
                }
            }
        }
    }
    WSets { sets, u: umask }
}

fn check_triangle(z: &Digraph, t: [usize; 3]) -> Result<(), EnumError> {
    let [a, b, c] = t;
    let distinct = a != b && b != c && a != c;
    let arcs = [(a, b), (b, c), (c, a), (b, a), (c, b), (a, c)].map(|(x, y)| distinct && z.has(x, y));
    let fwd = arcs[..3].iter().all(|&p| p) && arcs[3..].iter().all(|&p| !p);
    let bwd = arcs[3..].iter().all(|&p| p) && arcs[..3].iter().all(|&p| !p);
    if fwd || bwd {
        Ok(())
    } else {
        Err(EnumError::NotTriangle(t.map(|x| x + 1)))
    }
}

/// Every triangle `{a<b<c}` inducing a directed 3-cycle in `z`.
pub fn directed_triangles(z: &Digraph) -> Vec<[usize; 3]> {
    let n = z.n();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if check_triangle(z, [a, b, c]).is_ok() {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UsefulNeighbour {
    pub x: usize,
    pub i: u8,
    pub h: u8,
}

/// The minimum useful neighbour with its `(i,h)` class, if any.
pub fn find_useful_neighbour(z: &Digraph, t: [usize; 3]) -> Result<Option<UsefulNeighbour>, EnumError> {
    check_triangle(z, t)?;
    let w = w_sets(z, &t)?;
    let useless = w.union() | w.u;
    let Some(x) = (0..z.n()).find(|&x| useless >> x & 1 == 0) else {
        return Ok(None);
    };
    let outs = t.iter().filter(|&&u| z.has(u, x)).count();
    let ins = t.iter().filter(|&&u| z.has(x, u)).count();
    let (i, h) = if outs == 1 {
        (0, 0)
    } else if outs == 2 {
        (0, 1)
    } else if ins == 1 {
        (1, 0)
    } else if ins == 2 {
        (1, 1)
    } else {
        unreachable!("vertex outside every W-set has mixed adjacency")
    };
    Ok(Some(UsefulNeighbour { x, i, h }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UsefulTag {
    U1,
    U2,
}

/// The lexicographically least useful arc.
pub fn find_useful_arc(z: &Digraph, t: [usize; 3]) -> Result<Option<(Arc, UsefulTag)>, EnumError> {
    check_triangle(z, t)?;
    let w = w_sets(z, &t)?;
    let x1 = w.get(0, 0) | w.get(0, 1);
    let y1 = w.get(0, 0) | w.get(1, 0);
    let x2 = w.get(1, 0) | w.get(1, 1);
    let y2 = w.get(0, 1) | w.get(1, 1);
    for x in 0..z.n() {
        for y in (0..z.n()).filter(|&y| y != x) {
            let inx = |m: u64| m >> x & 1 == 1;
            let iny = |m: u64| m >> y & 1 == 1;
            if z.has(x, y) && inx(x1) && iny(y1) {
                return Ok(Some((Arc::new(x, y), UsefulTag::U1)));
            }
            if !z.has(x, y) && inx(x2) && iny(y2) {
                return Ok(Some((Arc::new(x, y), UsefulTag::U2)));
            }
        }
    }
    Ok(None)
}

/// A useful neighbour or else a useful arc; one of them must exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UsefulWitness {
    Neighbour(UsefulNeighbour),
    Arc(Arc, UsefulTag),
}

pub fn useful_witness(z: &Digraph, t: [usize; 3]) -> Result<UsefulWitness, EnumError> {
    if let Some(nb) = find_useful_neighbour(z, t)? {
        return Ok(UsefulWitness::Neighbour(nb));
    }
    find_useful_arc(z, t)?
        .map(|(a, tag)| UsefulWitness::Arc(a, tag))
        .ok_or(EnumError::NoUsefulWitness(t.map(|x| x + 1)))
}
