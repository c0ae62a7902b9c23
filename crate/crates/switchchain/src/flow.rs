//! Multicommodity flow along canonical paths: exact per-transition flow and
//! load, path statistics, and bad pairs along each path.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::chain::{trajectory_rng, Spectrum};
use crate::digraph::{sym_diff, Arc, ColouredDiff, Digraph};
use crate::enumeration::StateSpace;
use crate::exec::Exec;
use crate::paths::{build_path_unchecked, count_pairings, enumerate_pairings, pairing_by_index, Pairing};

/// Default cap on the number of path constructions for a full audit.
pub const FULL_AUDIT_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Colour {
    Green,
    Yellow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BadPair {
    pub vertex: usize,
    /// Paired at the tail (`true`) or the head of both arcs.
    pub out: bool,
    pub colour: Colour,
    pub blue: Arc,
    pub red: Arc,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BadPairReport {
    pub pairs: Vec<BadPair>,
    pub bad_vertices: Vec<usize>,
}

impl BadPairReport {
    pub fn total(&self) -> usize {
        self.pairs.len()
    }

    fn tally<K: Ord>(&self, key: impl Fn(&BadPair) -> K) -> usize {
        let mut m = BTreeMap::new();
        for p in &self.pairs {
            *m.entry(key(p)).or_insert(0) += 1;
        }
        m.into_values().max().unwrap_or(0)
    }

    /// Largest number of bad pairs of one colour at one vertex end.
    pub fn max_per_colour(&self) -> usize {
        self.tally(|p| (p.vertex, p.out, p.colour))
    }

    /// Largest number of bad pairs at one vertex end.
    pub fn max_per_end(&self) -> usize {
        self.tally(|p| (p.vertex, p.out))
    }

    pub fn within_bounds(&self) -> bool {
        self.total() <= 16 && self.max_per_colour() <= 2 && self.max_per_end() <= 4
    }
}

/// Pairs of `psi` whose two arcs have the same colour in `z`
/// (green: arc of `z`, yellow: not).
pub fn bad_pairs(h: &ColouredDiff, z: &Digraph, psi: &Pairing) -> BadPairReport {
    let colour = |a: Arc| if z.has_arc(a) { Colour::Green } else { Colour::Yellow };
    let mut pairs: Vec<BadPair> = psi
        .pairs()
        .into_iter()
        .filter(|&(b, r)| colour(b) == colour(r))
        .map(|(b, r)| {
            let out = b.tail == r.tail;
            BadPair { vertex: if out { b.tail } else { b.head }, out, colour: colour(b), blue: b, red: r }
        })
        .collect();
    debug_assert!(pairs.iter().all(|p| h.is_blue(p.blue) && h.contains(p.red)));
    pairs.sort();
    let mut bad_vertices: Vec<usize> = pairs.iter().map(|p| p.vertex).collect();
    bad_vertices.dedup();
    BadPairReport { pairs, bad_vertices }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowMode {
    /// Every pairing of every ordered pair.
    Full,
    /// `per_pair` uniform pairings per ordered pair; flows are estimates.
    Sampled { per_pair: usize, seed: u64 },
}

/// A path that revisits a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PathRef {
    pub from: usize,
    pub to: usize,
    pub pairing: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowAudit {
    pub n: usize,
    pub d: usize,
    pub states: usize,
    pub mode: FlowMode,
    /// `f(e)` for every transition `x → y` used by some path.
    pub flows: BTreeMap<(usize, usize), BigRational>,
    pub paths: u64,
    pub max_path_length: usize,
    pub simplicity_violations: Vec<PathRef>,
    /// Paths longer than `dn`.
    pub long_paths: Vec<PathRef>,
    /// Ordered pairs whose path flows do not sum to `1/N²`.
    pub conservation_failures: Vec<(usize, usize)>,
    /// Path construction errors, one line each.
    pub errors: Vec<String>,
    pub max_bad_pairs: usize,
    pub bad_pair_violations: Vec<PathRef>,
}

impl FlowAudit {
    /// `Q(e) = 1 / (N · C(dn, 2))`.
    pub fn capacity(&self) -> BigRational {
        let m = self.d * self.n;
        BigRational::new(BigInt::one(), BigInt::from(self.states) * BigInt::from(m * (m - 1) / 2))
    }

    pub fn max_flow(&self) -> Option<((usize, usize), &BigRational)> {
        self.flows.iter().max_by(|a, b| a.1.cmp(b.1)).map(|(&e, f)| (e, f))
    }

    /// `ρ(f) = max_e f(e) / Q(e)`.
    pub fn max_load(&self) -> BigRational {
        self.max_flow().map_or_else(BigRational::zero, |(_, f)| f / self.capacity())
    }

    pub fn is_clean(&self) -> bool {
        self.simplicity_violations.is_empty()
            && self.long_paths.is_empty()
            && self.conservation_failures.is_empty()
            && self.errors.is_empty()
            && self.bad_pair_violations.is_empty()
    }
}

#[derive(Default)]
struct Acc {
    // Unscaled flow: Σ (paths through e) / |Ψ| or / per_pair.
    flows: HashMap<(usize, usize), BigRational>,
    paths: u64,
    max_len: usize,
    nonsimple: Vec<PathRef>,
    long: Vec<PathRef>,
    conservation: Vec<(usize, usize)>,
    errors: Vec<String>,
    max_bad: usize,
    bad_viol: Vec<PathRef>,
}

impl Acc {
    fn merge(mut self, o: Acc) -> Acc {
        for (e, f) in o.flows {
            *self.flows.entry(e).or_insert_with(BigRational::zero) += f;
        }
        self.paths += o.paths;
        self.max_len = self.max_len.max(o.max_len);
        self.nonsimple.extend(o.nonsimple);
        self.long.extend(o.long);
        self.conservation.extend(o.conservation);
        self.errors.extend(o.errors);
        self.max_bad = self.max_bad.max(o.max_bad);
        self.bad_viol.extend(o.bad_viol);
        self
    }
}

/// Number of path constructions a full audit needs.
pub fn full_audit_size(space: &StateSpace, exec: Exec) -> u64 {
    let n = space.len();
    exec.fold_range(
        n * n,
        || 0u64,
        |acc, k| {
            let (a, b) = (k / n, k % n);
            if a == b {
                return acc;
            }
            let h = sym_diff(space.state(a), space.state(b)).expect("same order");
            let c = count_pairings(&h).expect("regular pair").to_u64().unwrap_or(u64::MAX);
            acc.saturating_add(c)
        },
        u64::saturating_add,
    )
}

fn run_pair(space: &StateSpace, a: usize, b: usize, mode: FlowMode, acc: &mut Acc) {
    let (g, g2) = (space.state(a), space.state(b));
    let h = sym_diff(g, g2).expect("same order");
    let total = count_pairings(&h).expect("regular pair");
    let pairings: Box<dyn Iterator<Item = (u64, Pairing)>> = match mode {
        FlowMode::Full => Box::new(enumerate_pairings(&h).expect("balanced").enumerate().map(|(k, p)| (k as u64, p))),
        FlowMode::Sampled { per_pair, seed } => {
            let t = total.to_u64().expect("pairing count fits u64");
            let mut rng = trajectory_rng(seed, (a * space.len() + b) as u64);
            let picks: Vec<(u64, Pairing)> = (0..per_pair)
                .map(|_| {
                    let k = rng.gen_range(0..t);
                    (k, pairing_by_index(&h, k).expect("index in range"))
                })
                .collect();
            Box::new(picks.into_iter())
        }
    };
    let weight_den = match mode {
        FlowMode::Full => total.clone(),
        FlowMode::Sampled { per_pair, .. } => BigUint::from(per_pair),
    };
    let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
    let mut done = 0u64;
    for (k, psi) in pairings {
        let r = PathRef { from: a, to: b, pairing: k };
        let t = match build_path_unchecked(g, g2, &psi) {
            Ok(t) => t,
            Err(e) => {
                acc.errors.push(format!("{a}->{b} pairing {k}: {e}"));
                continue;
            }
        };
        done += 1;
        acc.max_len = acc.max_len.max(t.len());
        if t.len() > space.n() * space.d() {
            acc.long.push(r);
        }
        if !t.is_simple() {
            acc.nonsimple.push(r);
        }
        let idx: Vec<usize> = t.states.iter().map(|z| space.index_of(z).expect("path state in space")).collect();
        for w in idx.windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }
        let mut worst = 0;
        let mut ok = true;
        for z in &t.states {
            let rep = bad_pairs(&h, z, &psi);
            worst = worst.max(rep.total());
            ok &= rep.within_bounds();
        }
        acc.max_bad = acc.max_bad.max(worst);
        if !ok {
            acc.bad_viol.push(r);
        }
    }
    acc.paths += done;
    // Σ over paths of 1/|Ψ| must be exactly 1 (the 1/N² factor is common).
    if mode == FlowMode::Full && BigUint::from(done) != total {
        acc.conservation.push((a, b));
    }
    let den = BigInt::from(weight_den);
    for (e, c) in counts {
        *acc.flows.entry(e).or_insert_with(BigRational::zero) += BigRational::new(BigInt::from(c), den.clone());
    }
}

/// Builds the flow over all ordered pairs `G ≠ G'`; each path carries
/// `1/(N²|Ψ|)` (full) or `1/(N²·per_pair)` (sampled).
pub fn build_flow(space: &StateSpace, mode: FlowMode, exec: Exec) -> FlowAudit {
    let n = space.len();
    let acc = exec.fold_range(
        n * n,
        Acc::default,
        |mut acc, k| {
            let (a, b) = (k / n, k % n);
            if a != b {
                run_pair(space, a, b, mode, &mut acc);
            }
            acc
        },
        Acc::merge,
    );
    let scale = BigRational::new(BigInt::one(), BigInt::from(n) * BigInt::from(n));
    let flows = acc.flows.into_iter().map(|(e, f)| (e, f * &scale)).collect();
    let mut nonsimple = acc.nonsimple;
    nonsimple.sort_by_key(|r| (r.from, r.to, r.pairing));
    let mut long = acc.long;
    long.sort_by_key(|r| (r.from, r.to, r.pairing));
    let mut conservation = acc.conservation;
    conservation.sort();
    let mut errors = acc.errors;
    errors.sort();
    let mut bad_viol = acc.bad_viol;
    bad_viol.sort_by_key(|r| (r.from, r.to, r.pairing));
    FlowAudit {
        n: space.n(),
        d: space.d(),
        states: n,
        mode,
        flows,
        paths: acc.paths,
        max_path_length: acc.max_len,
        simplicity_violations: nonsimple,
        long_paths: long,
        conservation_failures: conservation,
        errors,
        max_bad_pairs: acc.max_bad,
        bad_pair_violations: bad_viol,
    }
}

/// Full audit if it fits under `cap`, else `per_pair` sampled pairings.
pub fn build_flow_auto(space: &StateSpace, cap: u64, per_pair: usize, seed: u64, exec: Exec) -> FlowAudit {
    let mode = if full_audit_size(space, exec) <= cap { FlowMode::Full } else { FlowMode::Sampled { per_pair, seed } };
    build_flow(space, mode, exec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Compared in exact arithmetic.
    pub exact: bool,
}

impl BoundCheck {
    /// `rhs / lhs`, or infinity when `lhs` is zero.
    pub fn margin(&self) -> f64 {
        if self.lhs == 0.0 {
            f64::INFINITY
        } else {
            self.rhs / self.lhs
        }
    }
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

fn pow(b: usize, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(b), e as usize)
}

pub fn ratio_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Tolerance for the inequality involving the computed eigenvalue.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// Checks the flow, load, path-length and spectral inequalities. The ones
/// that need the complete flow are skipped for sampled audits.
pub fn verify_bounds(audit: &FlowAudit, spec: &Spectrum) -> Vec<BoundCheck> {
    let (n, d) = (audit.n, audit.d);
    let mut out = Vec::new();
    let ell = audit.max_path_length;
    out.push(BoundCheck { name: "ell <= dn", lhs: ell as f64, rhs: (d * n) as f64, holds: ell <= d * n, exact: true });
    if audit.mode != FlowMode::Full {
        return out;
    }
    let fmax = audit.max_flow().map_or_else(BigRational::zero, |(_, f)| f.clone());
    let flow_rhs = BigRational::new(big(100) * pow(d, 22) * pow(n, 6), BigInt::from(audit.states));
    out.push(BoundCheck {
        name: "f(e) <= 100 d^22 n^6 / N",
        lhs: ratio_f64(&fmax),
        rhs: ratio_f64(&flow_rhs),
        holds: fmax <= flow_rhs,
        exact: true,
    });
    let rho = audit.max_load();
    let rho_rhs = BigRational::from_integer(big(50) * pow(d, 24) * pow(n, 8));
    out.push(BoundCheck {
        name: "rho <= 50 d^24 n^8",
        lhs: ratio_f64(&rho),
        rhs: ratio_f64(&rho_rhs),
        holds: rho <= rho_rhs,
        exact: true,
    });
    let rho_ell = &rho * BigRational::from_integer(BigInt::from(ell));
    let prop_rhs = BigRational::from_integer(big(50) * pow(d, 25) * pow(n, 9));
    out.push(BoundCheck {
        name: "rho ell <= 50 d^25 n^9",
        lhs: ratio_f64(&rho_ell),
        rhs: ratio_f64(&prop_rhs),
        holds: rho_ell <= prop_rhs,
        exact: true,
    });
    let inv_gap = 1.0 / (1.0 - spec.lambda1());
    let re = ratio_f64(&rho_ell);
    out.push(BoundCheck {
        name: "1/(1-lambda1) <= rho ell",
        lhs: inv_gap,
        rhs: re,
        holds: inv_gap <= re + SPECTRAL_TOL * re.max(1.0),
        exact: false,
    });
    let pr = ratio_f64(&prop_rhs);
    out.push(BoundCheck {
        name: "1/(1-lambda1) <= 50 d^25 n^9",
        lhs: inv_gap,
        rhs: pr,
        holds: inv_gap <= pr + SPECTRAL_TOL * pr,
        exact: false,
    });
    out
}
