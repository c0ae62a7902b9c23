use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use switchchain::chain::*;
use switchchain::digraph::circulant;
use switchchain::Exec;

fn inst(n: usize, d: usize) -> Instance {
    Instance::build(n, d, Exec::Parallel).unwrap()
}

#[test]
fn exact_matrix_properties() {
    for (n, d) in [(4, 1), (5, 1), (4, 2), (5, 2)] {
        let i = inst(n, d);
        let p = &i.p;
        p.check_symmetric().unwrap();
        assert!(p.uniform_is_stationary());
        for x in 0..p.len() {
            assert_eq!(p.row_sum(x), Rational64::one());
            assert!(p.entry(x, x) >= Rational64::new(1, p.denom as i64));
            for &y in &p.adj[x] {
                assert_eq!(p.entry(x, y), Rational64::new(1, p.denom as i64));
                assert_eq!(p.entry(x, y), p.entry(y, x));
            }
        }
    }
    assert_eq!(inst(4, 1).p.denom, 6);
}

#[test]
fn spectrum_sanity() {
    for (n, d) in [(4, 1), (5, 1), (6, 1), (4, 2), (5, 2)] {
        let i = inst(n, d);
        let s = spectrum(&i.p).unwrap();
        assert!((s.lambda0() - 1.0).abs() < 1e-9);
        assert!(s.lambda_min() > -1.0);
        assert!(s.eigenvalues.iter().all(|&l| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&l)));
        let sum: f64 = s.eigenvalues.iter().sum();
        assert!((sum - i.p.trace()).abs() < 1e-8);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn eta_bounds_self_loops() {
    for (n, d) in [(4, 1), (5, 1), (4, 2), (5, 2)] {
        let i = inst(n, d);
        let s = spectrum(&i.p).unwrap();
        let r = eta_bounds(&i.p, &OddCycleSet::self_loops(i.p.len()), &s).unwrap();
        assert_eq!(r.ell, 1);
        assert_eq!(r.eta, r.eta_prime);
        assert_eq!(r.eta_prime, max_inverse_holding(&i.p));
        assert!(r.holds_eta && r.holds_eta_prime);
        assert!(r.lhs <= smallest_eigenvalue_bound(n, d) + INEQ_TOL);
    }
}

#[test]
fn eta_bounds_with_triangle_cycles() {
    // A 3-cycle x -> y -> z -> x through the metagraph where one exists;
    // otherwise fall back to the self-loop.
    let i = inst(5, 2);
    let s = spectrum(&i.p).unwrap();
    let cycles = (0..i.p.len())
        .map(|x| {
            for &y in &i.p.adj[x] {
                if let Some(&z) = i.p.adj[y].iter().find(|z| i.p.adj[x].binary_search(z).is_ok()) {
                    return vec![x, y, z];
                }
            }
            vec![x]
        })
        .collect();
    let r = eta_bounds(&i.p, &OddCycleSet { cycles }, &s).unwrap();
    assert!(r.holds_eta && r.holds_eta_prime);
    let bad = OddCycleSet { cycles: (0..i.p.len()).map(|x| vec![x, x]).collect() };
    assert!(eta_bounds(&i.p, &bad, &s).is_err());
}

/// Oracle: exact rational powers of the dense matrix.
fn tau_oracle(i: &Instance, eps: BigRational, t_max: usize) -> usize {
    let n = i.p.len();
    let big = |r: Rational64| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let p: Vec<Vec<BigRational>> = (0..n).map(|x| (0..n).map(|y| big(i.p.entry(x, y))).collect()).collect();
    let pi = BigRational::new(BigInt::one(), BigInt::from(n));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut tau = 0;
    for x in 0..n {
        let mut v: Vec<BigRational> =
            (0..n).map(|y| if y == x { BigRational::one() } else { BigRational::zero() }).collect();
        let mut last_bad = None;
        for t in 0..=t_max {
            let tv = v.iter().fold(BigRational::zero(), |s, a| s + (a - &pi).abs()) * &half;
            if tv > eps {
                last_bad = Some(t);
            }
            v = (0..n).map(|y| (0..n).fold(BigRational::zero(), |s, k| s + &v[k] * &p[k][y])).collect();
        }
        tau = tau.max(last_bad.map_or(0, |t| t + 1));
    }
    tau
}

#[test]
fn exact_tau_matches_rational_oracle() {
    let i = inst(4, 1);
    let s = spectrum(&i.p).unwrap();
    for (num, den) in [(1, 4), (1, 100)] {
        let eps = num as f64 / den as f64;
        let r = exact_mixing_time(&i.p, &s, eps, Exec::Sequential).unwrap();
        let oracle = tau_oracle(&i, BigRational::new(num.into(), den.into()), r.certified_after + 5);
        assert_eq!(r.tau, oracle, "eps = {eps}");
        assert_eq!(exact_mixing_time(&i.p, &s, eps, Exec::Parallel).unwrap(), r);
    }
}

#[test]
fn frozen_tau_four_one() {
    // From the rational oracle above.
    let i = inst(4, 1);
    let s = spectrum(&i.p).unwrap();
    assert_eq!(exact_mixing_time(&i.p, &s, 0.25, Exec::Parallel).unwrap().tau, 5);
}

#[test]
fn tau_zero_iff_point_masses_close() {
    let i = inst(4, 1);
    let s = spectrum(&i.p).unwrap();
    // d_TV(δ_x, π) = 1 - 1/N = 8/9.
    assert_eq!(exact_mixing_time(&i.p, &s, 0.9, Exec::Sequential).unwrap().tau, 0);
    assert!(exact_mixing_time(&i.p, &s, 0.88, Exec::Sequential).unwrap().tau > 0);
}

#[test]
fn mixing_bounds_hold() {
    for (n, d) in [(4, 1), (5, 1), (6, 1), (4, 2), (5, 2)] {
        let i = inst(n, d);
        let s = spectrum(&i.p).unwrap();
        for eps in [0.25, 0.01] {
            let r = exact_mixing_time(&i.p, &s, eps, Exec::Parallel).unwrap();
            let l1 = spectral_tau_bound(&s, i.p.len(), eps);
            assert!(r.tau as f64 <= l1, "({n},{d}) {eps}");
            assert!(l1 <= poly_tau_bound(n, d, eps).unwrap());
        }
        assert!(((i.p.len()) as f64).ln() <= (n * d) as f64 * ((n * d) as f64).ln());
        assert!(1.0 / (1.0 - s.lambda1()) <= second_eigenvalue_bound(n, d));
    }
}

#[test]
fn poly_tau_bound_shape() {
    assert!(poly_tau_bound(3, 1, 0.1).is_err());
    assert!(poly_tau_bound(4, 4, 0.1).is_err());
    assert!(poly_tau_bound(4, 1, 0.1).unwrap() < poly_tau_bound(4, 1, 0.01).unwrap());
}

#[test]
fn step_is_deterministic_and_lazy() {
    let g = circulant(5, 2).unwrap();
    let mut a = trajectory_rng(7, 0);
    let mut b = trajectory_rng(7, 0);
    assert_eq!(sample(&g, 100, &mut a), sample(&g, 100, &mut b));
    assert_eq!(sample(&g, 0, &mut a), g);
    let many = sample_many(&g, 20, 16, 3, Exec::Parallel);
    assert_eq!(many, sample_many(&g, 20, 16, 3, Exec::Sequential));
}

#[test]
fn unrank_covers_all_pairs() {
    let m = 7;
    let all: Vec<_> = (0..m * (m - 1) / 2).map(|k| unrank_pair(m, k)).collect();
    let expect: Vec<_> = (0..m).flat_map(|p| (p + 1..m).map(move |q| (p, q))).collect();
    assert_eq!(all, expect);
}

/// One-step frequencies against the exact row of P, within 3 standard errors.
#[test]
fn single_step_distribution() {
    let i = inst(4, 1);
    let x = 0;
    let g = i.space.state(x).clone();
    let draws = 1_000_000usize;
    let counts = Exec::Parallel.fold_range(
        draws / 10_000,
        || vec![0usize; i.p.len()],
        |mut c, k| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + k as u64);
            for _ in 0..10_000 {
                c[i.space.index_of(&step(&g, &mut rng)).unwrap()] += 1;
            }
            c
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(p, q)| *p += q);
            a
        },
    );
    for y in 0..i.p.len() {
        let e = i.p.entry(x, y);
        let p = *e.numer() as f64 / *e.denom() as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let f = counts[y] as f64 / draws as f64;
        assert!((f - p).abs() <= 3.0 * se + 1e-12, "state {y}: {f} vs {p}");
    }
}
