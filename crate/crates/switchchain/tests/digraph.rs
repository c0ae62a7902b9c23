use proptest::prelude::*;
use switchchain::digraph::*;

fn arcs(list: &[(usize, usize)]) -> Vec<Arc> {
    list.iter().map(|&(a, b)| Arc::new(a - 1, b - 1)).collect()
}

fn g(n: usize, d: usize, list: &[(usize, usize)]) -> Digraph {
    Digraph::from_arcs(n, d, arcs(list)).unwrap()
}

#[test]
fn switch_valid_cases() {
    let x = g(4, 1, &[(1, 2), (3, 4), (2, 3), (4, 1)]);
    let a = arcs(&[(1, 2), (3, 4), (2, 3)]);
    assert!(x.switch_valid(a[0], a[1]).unwrap());
    assert!(x.switch_valid(a[1], a[0]).unwrap());
    assert!(!x.switch_valid(a[0], a[2]).unwrap());
    let y = g(4, 1, &[(1, 2), (3, 4), (1, 4)]);
    assert!(!y.switch_valid(a[0], a[1]).unwrap());
    assert!(matches!(y.switch_valid(a[0], a[2]), Err(DigraphError::MissingArc(_))));
}

#[test]
fn apply_switch_examples() {
    let x = g(4, 1, &[(1, 2), (3, 4), (2, 3), (4, 1)]);
    let s = Switch::new(0, 1, 2, 3);
    let y = x.apply_switch(&s).unwrap();
    assert_eq!(y, g(4, 1, &[(1, 4), (3, 2), (2, 3), (4, 1)]));
    assert_eq!(y.apply_switch(&s.inverse()).unwrap(), x);
    assert!(x.apply_switch(&s.inverse()).is_err());
}

#[test]
fn operators() {
    let e = Digraph::empty(3, 0).unwrap();
    assert_eq!(e.complement().arc_count(), 6);
    let x = circulant(5, 2).unwrap();
    assert_eq!(x.converse().converse(), x);
    assert_eq!(x.complement().complement(), x);
    assert_eq!(x.converse().complement(), x.complement().converse());
}

#[test]
fn resolve_table() {
    assert_eq!(resolve_zeta_chi(0, 0, 1, 2, 3, 4), Switch::new(1, 2, 3, 4));
    assert_eq!(resolve_zeta_chi(0, 1, 1, 2, 3, 4), Switch::new(1, 4, 3, 2));
    assert_eq!(resolve_zeta_chi(1, 0, 1, 2, 3, 4), Switch::new(2, 1, 4, 3));
    assert_eq!(resolve_zeta_chi(1, 1, 1, 2, 3, 4), Switch::new(2, 3, 4, 1));
}

/// The resolved switch acts on G exactly as `[αβγδ]` acts on `ζ^iχ^h G`.
#[test]
fn resolve_table_conjugates() {
    let x = circulant(6, 2).unwrap();
    for i in 0..2u8 {
        for h in 0..2u8 {
            let t = x.zeta_chi(i, h);
            for (a, b, c, dd) in [(0, 1, 3, 4), (0, 2, 3, 5), (1, 3, 4, 0), (0, 3, 1, 4)] {
                let plain = Switch::new(a, b, c, dd);
                let resolved = resolve_zeta_chi(i, h, a, b, c, dd);
                assert_eq!(t.can_apply(&plain), x.can_apply(&resolved));
                if x.can_apply(&resolved) {
                    let lhs = x.apply_switch(&resolved).unwrap().zeta_chi(i, h);
                    assert_eq!(lhs, t.apply_switch(&plain).unwrap());
                }
            }
        }
    }
}

#[test]
fn circulant_examples() {
    assert_eq!(circulant(4, 1).unwrap(), g(4, 1, &[(1, 2), (2, 3), (3, 4), (4, 1)]));
    assert!(circulant(5, 2).unwrap().is_regular());
    assert_eq!(circulant(5, 4).unwrap().arc_count(), 20);
    assert!(circulant(4, 4).is_err());
    assert!(circulant(4, 0).is_err());
}

#[test]
fn text_round_trip() {
    let x = circulant(6, 2).unwrap();
    let t = x.to_text();
    assert!(t.starts_with("6 2\n1 2\n1 3\n2 3\n"));
    assert_eq!(Digraph::from_text(&t).unwrap().to_text(), t);
    let shuffled = "3 1\n3 1\n1 2\n2 3\n";
    assert_eq!(Digraph::from_text(shuffled).unwrap(), circulant(3, 1).unwrap());
    assert!(Digraph::from_text("3 1\n1 1\n").is_err());
    assert!(Digraph::from_text("3 1\n1 2\n1 2\n").is_err());
    assert!(Digraph::from_text("3 1\n1 x\n").is_err());
}

#[test]
fn sym_diff_examples() {
    let x = circulant(5, 2).unwrap();
    assert!(sym_diff(&x, &x).unwrap().is_empty());
    let a = x.arcs().collect::<Vec<_>>();
    let (p, q) = (a[0], a[5]);
    assert!(x.switch_valid(p, q).unwrap());
    let y = x.apply_switch(&Switch::new(p.tail, p.head, q.tail, q.head)).unwrap();
    let h = sym_diff(&x, &y).unwrap();
    assert_eq!(h.len(), 4);
    assert!(h.is_balanced());
    assert!(sym_diff(&x, &circulant(5, 1).unwrap()).is_err());
}

#[test]
fn ordering_is_row_major() {
    // (1,2) set in row 1 beats (1,3): row 1 bits read column 1 first, so
    // a 0 in column 2 comes before a 1.
    let a = g(3, 1, &[(1, 3), (2, 1), (3, 2)]);
    let b = g(3, 1, &[(1, 2), (2, 3), (3, 1)]);
    assert!(a < b);
}

#[test]
fn exhaustive_operator_laws_n4() {
    let cells: Vec<Arc> = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| Arc::new(i, j))).collect();
    for mask in 0u32..1 << 12 {
        let x = Digraph::from_arcs(4, 0, cells.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &a)| a))
            .unwrap();
        assert_eq!(x.converse().complement(), x.complement().converse());
        assert_eq!(x.converse().converse(), x);
        assert_eq!(x.complement().complement().rows(), x.rows());
    }
}

fn arb_regular() -> impl Strategy<Value = (Digraph, u64)> {
    (4usize..9, any::<u64>()).prop_flat_map(|(n, seed)| (1..n).prop_map(move |d| (n, d, seed))).prop_map(
        |(n, d, seed)| {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (switchchain::chain::sample(&circulant(n, d).unwrap(), 50, &mut rng), seed)
        },
    )
}

proptest! {
    #[test]
    fn valid_switches_preserve_degrees((x, seed) in arb_regular()) {
        let a: Vec<Arc> = x.arcs().collect();
        let p = (seed as usize) % a.len();
        let q = (seed as usize / 7 + 1 + p) % a.len();
        prop_assume!(p != q);
        let v = x.switch_valid(a[p], a[q]).unwrap();
        prop_assert_eq!(v, x.switch_valid(a[q], a[p]).unwrap());
        if v {
            let s1 = Switch::new(a[p].tail, a[p].head, a[q].tail, a[q].head);
            let s2 = Switch::new(a[q].tail, a[q].head, a[p].tail, a[p].head);
            let y = x.apply_switch(&s1).unwrap();
            prop_assert_eq!(&y, &x.apply_switch(&s2).unwrap());
            prop_assert!(y.is_regular());
            prop_assert_eq!(y.apply_switch(&s1.inverse()).unwrap(), x.clone());
        }
    }

    #[test]
    fn sym_diff_is_balanced((x, s1) in arb_regular(), s2 in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s1 ^ s2);
        let y = switchchain::chain::sample(&x, 30, &mut rng);
        let h = sym_diff(&x, &y).unwrap();
        prop_assert!(h.is_balanced());
        for v in 0..x.n() {
            prop_assert_eq!(h.theta(v), h.red.iter().filter(|a| a.head == v).count());
        }
    }
}
