//! The switch chain: stepping, sampling, the exact transition matrix, its
//! spectrum, exact mixing times and the eigenvalue bounds.

use std::collections::HashMap;

use faer::{Mat, Side};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::digraph::{choose2, Digraph, Switch};
use crate::enumeration::{Metagraph, StateSpace};
use crate::exec::Exec;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("transition matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("eigen-residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("mixing horizon {horizon} exceeded from state {start}")]
    HorizonExceeded { start: usize, horizon: usize },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("parameters out of range: {0}")]
    BadParams(String),
    #[error("odd cycle for state {0} is invalid: {1}")]
    InvalidCycle(usize, String),
}

/// Unrank `k < C(m,2)` to the pair `(p, q)`, `p < q`, in lexicographic order.
pub fn unrank_pair(m: usize, mut k: usize) -> (usize, usize) {
    for p in 0..m {
        let row = m - 1 - p;
        if k < row {
            return (p, p + 1 + k);
        }
        k -= row;
    }
    panic!("pair rank out of range")
}

/// One transition: pick an unordered pair of distinct arcs uniformly and
/// switch them if that is valid.
pub fn step<R: Rng + ?Sized>(g: &Digraph, rng: &mut R) -> Digraph {
    let mut h = g.clone();
    step_mut(&mut h, rng);
    h
}

/// In-place [`step`]; returns whether the state changed.
pub fn step_mut<R: Rng + ?Sized>(g: &mut Digraph, rng: &mut R) -> bool {
    let m = g.arc_count();
    if m < 2 {
        return false;
    }
    let (p, q) = unrank_pair(m, rng.gen_range(0..choose2(m)));
    let a = g.arc_by_rank(p).expect("rank in range");
    let b = g.arc_by_rank(q).expect("rank in range");
    if g.switch_valid(a, b).expect("arcs present") {
        g.apply_switch_mut(&Switch::new(a.tail, a.head, b.tail, b.head)).expect("valid");
        true
    } else {
        false
    }
}

pub fn sample<R: Rng + ?Sized>(g0: &Digraph, steps: u64, rng: &mut R) -> Digraph {
    let mut g = g0.clone();
    for _ in 0..steps {
        step_mut(&mut g, rng);
    }
    g
}

/// Independent trajectory RNG: ChaCha8 seeded with `seed`, stream `k`.
pub fn trajectory_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Run `count` independent trajectories of length `steps`.
pub fn sample_many(g0: &Digraph, steps: u64, count: usize, seed: u64, exec: Exec) -> Vec<Digraph> {
    exec.map_range(count, |k| sample(g0, steps, &mut trajectory_rng(seed, k as u64)))
}

/// Exact sparse transition matrix. Off-diagonal entries are `1/denom`.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub denom: usize,
    pub adj: Vec<Vec<usize>>,
}

pub fn build_transition_matrix(meta: &Metagraph) -> TransitionMatrix {
    TransitionMatrix { denom: meta.pairs, adj: meta.adj.clone() }
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Numerator of `P(x,x)` over `denom`.
    pub fn diag_num(&self, x: usize) -> usize {
        self.denom - self.adj[x].len()
    }

    pub fn entry(&self, x: usize, y: usize) -> Rational64 {
        let den = self.denom as i64;
        if x == y {
            Rational64::new(self.diag_num(x) as i64, den)
        } else if self.adj[x].binary_search(&y).is_ok() {
            Rational64::new(1, den)
        } else {
            Rational64::from_integer(0)
        }
    }

    pub fn row_sum(&self, x: usize) -> Rational64 {
        self.entry(x, x) + Rational64::new(self.adj[x].len() as i64, self.denom as i64)
    }

    pub fn check_symmetric(&self) -> Result<(), ChainError> {
        for (x, nb) in self.adj.iter().enumerate() {
            if let Some(&y) = nb.iter().find(|&&y| self.adj[y].binary_search(&x).is_err()) {
                return Err(ChainError::NotSymmetric(x + 1, y + 1));
            }
        }
        Ok(())
    }

    /// Is the uniform distribution stationary (exactly)? With entries
    /// `1/denom` this is the column-sum identity.
    pub fn uniform_is_stationary(&self) -> bool {
        let mut col = vec![Rational64::from_integer(0); self.len()];
        for x in 0..self.len() {
            col[x] += self.entry(x, x);
            for &y in &self.adj[x] {
                col[y] += Rational64::new(1, self.denom as i64);
            }
        }
        col.iter().all(|c| *c == Rational64::from_integer(1))
    }

    /// `out = v P` (equivalently `P v`, by symmetry).
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.denom as f64;
        for (x, o) in out.iter_mut().enumerate() {
            let mut s = v[x] * self.diag_num(x) as f64;
            for &y in &self.adj[x] {
                s += v[y];
            }
            *o = s * inv;
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let inv = 1.0 / self.denom as f64;
        Mat::from_fn(self.len(), self.len(), |x, y| {
            if x == y {
                self.diag_num(x) as f64 * inv
            } else if self.adj[x].binary_search(&y).is_ok() {
                inv
            } else {
                0.0
            }
        })
    }

    pub fn trace(&self) -> f64 {
        (0..self.len()).map(|x| self.diag_num(x) as f64).sum::<f64>() / self.denom as f64
    }
}

/// Eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
}

impl Spectrum {
    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda1().max(self.lambda_min().abs())
    }
}

pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn spectrum(p: &TransitionMatrix) -> Result<Spectrum, ChainError> {
    p.check_symmetric()?;
    let eig = p.to_dense().self_adjoint_eigen(Side::Lower).map_err(|e| ChainError::Eigen(format!("{e:?}")))?;
    let n = p.len();
    let vals: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    let mut max_residual: f64 = 0.0;
    let mut pv = vec![0.0; n];
    for (k, &lam) in vals.iter().enumerate() {
        let v: Vec<f64> = eig.U().col(k).iter().copied().collect();
        p.mul_vec(&v, &mut pv);
        let r = pv.iter().zip(&v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        max_residual = max_residual.max(r);
    }
    if max_residual > RESIDUAL_TOL {
        return Err(ChainError::Residual(max_residual));
    }
    let mut eigenvalues = vals;
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { eigenvalues, max_residual })
}

/// Result of the exact mixing-time computation.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingReport {
    pub tau: usize,
    /// Worst start state (0-based).
    pub worst_start: usize,
    /// Iterations after which the spectral tail bound certified `≤ ε`.
    pub certified_after: usize,
    pub horizon: usize,
    /// `(start, t)` with `d(t+1) > d(t)`.
    pub nonmonotone: Vec<(usize, usize)>,
}

/// `64 (1-λ*)^{-1} log(N/ε)`.
pub fn mixing_horizon(lambda_star: f64, n_states: usize, eps: f64) -> usize {
    (64.0 / (1.0 - lambda_star) * (n_states as f64 / eps).ln()).ceil() as usize
}

/// Exact τ(ε) from every point mass.
///
/// Iterates each start until `½·sqrt(N-1)·λ*^t ≤ ε`, after which no later
/// time can exceed ε, so the last violation seen is final.
pub fn exact_mixing_time(
    p: &TransitionMatrix,
    spec: &Spectrum,
    eps: f64,
    exec: Exec,
) -> Result<MixingReport, ChainError> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(ChainError::BadParams(format!("eps = {eps}")));
    }
    let n = p.len();
    let ls = spec.lambda_star();
    if ls >= 1.0 - 1e-12 {
        return Err(ChainError::BadParams("chain is not ergodic".into()));
    }
    let horizon = mixing_horizon(ls, n, eps);
    let tail = |t: usize| 0.5 * ((n - 1) as f64).sqrt() * ls.powi(t as i32);
    let certified_after = (0..=horizon).find(|&t| tail(t) <= eps);
    let Some(stop) = certified_after else {
        return Err(ChainError::HorizonExceeded { start: 1, horizon });
    };
    let pi = 1.0 / n as f64;
    let per_start = exec.map_range(n, |x| {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        let mut w = vec![0.0; n];
        let tv = |v: &[f64]| 0.5 * v.iter().map(|a| (a - pi).abs()).sum::<f64>();
        let mut last_bad: Option<usize> = None;
        let mut prev = tv(&v);
        let mut nonmono = Vec::new();
        if prev > eps {
            last_bad = Some(0);
        }
        for t in 1..=stop {
            p.mul_vec(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
            let cur = tv(&v);
            if cur > prev + 1e-12 {
                nonmono.push((x, t - 1));
            }
            if cur > eps {
                last_bad = Some(t);
            }
            prev = cur;
        }
        (last_bad.map_or(0, |t| t + 1), nonmono)
    });
    let mut tau = 0;
    let mut worst_start = 0;
    let mut nonmonotone = Vec::new();
    for (x, (t, nm)) in per_start.into_iter().enumerate() {
        if t > tau {
            tau = t;
            worst_start = x;
        }
        nonmonotone.extend(nm);
    }
    Ok(MixingReport { tau, worst_start, certified_after: stop, horizon, nonmonotone })
}

/// `(1-λ*)^{-1} (log(1/π*) + log(1/ε))` with uniform π.
pub fn spectral_tau_bound(spec: &Spectrum, n_states: usize, eps: f64) -> f64 {
    ((n_states as f64).ln() + (1.0 / eps).ln()) / (1.0 - spec.lambda_star())
}

/// `50 d^25 n^9 (dn log(dn) + log(1/ε))`.
pub fn poly_tau_bound(n: usize, d: usize, eps: f64) -> Result<f64, ChainError> {
    if n < 4 || d == 0 || d >= n || !(0.0 < eps && eps < 1.0) {
        return Err(ChainError::BadParams(format!("n = {n}, d = {d}, eps = {eps}")));
    }
    let (nf, df) = (n as f64, d as f64);
    let dn = nf * df;
    Ok(50.0 * df.powi(25) * nf.powi(9) * (dn * dn.ln() + (1.0 / eps).ln()))
}

/// `(1-λ₁)^{-1} ≤ 50 d^25 n^9`.
pub fn second_eigenvalue_bound(n: usize, d: usize) -> f64 {
    50.0 * (d as f64).powi(25) * (n as f64).powi(9)
}

/// `(1+λ_{N-1})^{-1} ≤ d²n²/4`.
pub fn smallest_eigenvalue_bound(n: usize, d: usize) -> f64 {
    let dn = (n * d) as f64;
    dn * dn / 4.0
}

/// One odd closed walk per state: `cycles[x] = [x, c1, ..., c_{k-1}]`,
/// closing back to `x`; `[x]` is the self-loop.
#[derive(Clone, Debug)]
pub struct OddCycleSet {
    pub cycles: Vec<Vec<usize>>,
}

impl OddCycleSet {
    pub fn self_loops(n_states: usize) -> Self {
        OddCycleSet { cycles: (0..n_states).map(|x| vec![x]).collect() }
    }

    fn edges(c: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..c.len()).map(move |k| {
            let (a, b) = (c[k], c[(k + 1) % c.len()]);
            (a.min(b), a.max(b))
        })
    }
}

#[derive(Clone, Debug)]
pub struct EtaReport {
    pub eta: Rational64,
    pub eta_prime: Rational64,
    pub ell: usize,
    /// `(1+λ_{N-1})^{-1}`.
    pub lhs: f64,
    pub holds_eta: bool,
    pub holds_eta_prime: bool,
}

pub const INEQ_TOL: f64 = 1e-8;

pub fn eta_bounds(p: &TransitionMatrix, sigma: &OddCycleSet, spec: &Spectrum) -> Result<EtaReport, ChainError> {
    let n = p.len();
    if sigma.cycles.len() != n {
        return Err(ChainError::InvalidCycle(0, "wrong number of cycles".into()));
    }
    // Per unordered edge: Σ |σ_x| π(x) and Σ π(x), with π(x) = 1/N.
    let mut load: HashMap<(usize, usize), (i64, i64)> = HashMap::new();
    for (x, c) in sigma.cycles.iter().enumerate() {
        if c.first() != Some(&x) || c.len() % 2 == 0 {
            return Err(ChainError::InvalidCycle(x + 1, "must start at x and have odd length".into()));
        }
        let mut seen: Vec<(usize, usize)> = OddCycleSet::edges(c).collect();
        seen.sort_unstable();
        seen.dedup();
        for e in seen {
            if p.entry(e.0, e.1) == Rational64::from_integer(0) {
                return Err(ChainError::InvalidCycle(x + 1, format!("({},{}) is not a transition", e.0 + 1, e.1 + 1)));
            }
            let slot = load.entry(e).or_default();
            slot.0 += c.len() as i64;
            slot.1 += 1;
        }
    }
    let mut eta = Rational64::from_integer(0);
    let mut eta_prime = Rational64::from_integer(0);
    for (&(a, b), &(weighted, plain)) in &load {
        // 1/Q(e) = N / P(a,b); π(x) = 1/N, so the N cancels.
        let inv_p = p.entry(a, b).recip();
        eta = eta.max(inv_p * weighted);
        eta_prime = eta_prime.max(inv_p * plain);
    }
    let ell = sigma.cycles.iter().map(Vec::len).max().unwrap_or(1);
    let lhs = 1.0 / (1.0 + spec.lambda_min());
    let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
    Ok(EtaReport {
        eta,
        eta_prime,
        ell,
        lhs,
        holds_eta: lhs <= f(eta) / 2.0 + INEQ_TOL,
        holds_eta_prime: lhs <= f(eta_prime) * ell as f64 / 2.0 + INEQ_TOL,
    })
}

/// `max_x P(x,x)^{-1}`.
pub fn max_inverse_holding(p: &TransitionMatrix) -> Rational64 {
    (0..p.len()).map(|x| p.entry(x, x).recip()).max().unwrap_or_default()
}

/// Convenience bundle used by the CLI and the acceptance suite.
pub struct Instance {
    pub space: StateSpace,
    pub meta: Metagraph,
    pub p: TransitionMatrix,
}

impl Instance {
    pub fn build(n: usize, d: usize, exec: Exec) -> Result<Self, crate::enumeration::EnumError> {
        let space = crate::enumeration::enumerate_omega(n, d)?;
        let meta = crate::enumeration::metagraph(&space, exec);
        let p = build_transition_matrix(&meta);
        Ok(Instance { space, meta, p })
    }
}
