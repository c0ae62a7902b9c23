use switchchain::digraph::{circulant, Arc, Digraph};
use switchchain::enumeration::*;
use switchchain::Exec;

/// Oracle: every zero-diagonal 0-1 matrix with all line sums d.
fn brute_force(n: usize, d: usize) -> Vec<Digraph> {
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u64..1 << cells.len() {
        if mask.count_ones() as usize != n * d {
            continue;
        }
        let arcs = cells.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &(i, j))| Arc::new(i, j));
        let g = Digraph::from_arcs(n, d, arcs).unwrap();
        if g.is_regular() {
            out.push(g);
        }
    }
    out.sort();
    out
}

#[test]
fn counts_match_brute_force() {
    for (n, d) in [(3, 1), (4, 1), (4, 2), (5, 1), (5, 2)] {
        let s = enumerate_omega(n, d).unwrap();
        assert_eq!(s.states(), brute_force(n, d).as_slice(), "({n},{d})");
    }
    assert_eq!(enumerate_omega(4, 1).unwrap().len(), 9);
    assert_eq!(enumerate_omega(5, 1).unwrap().len(), 44);
}

#[test]
fn frozen_counts() {
    // n <= 5 from the brute-force oracle; 265 = !6 (derangements).
    assert_eq!(enumerate_omega(4, 2).unwrap().len(), 9);
    assert_eq!(enumerate_omega(4, 3).unwrap().len(), 1);
    assert_eq!(enumerate_omega(5, 2).unwrap().len(), 216);
    assert_eq!(enumerate_omega(6, 1).unwrap().len(), 265);
}

#[test]
fn complement_bijection_counts() {
    for (n, d) in [(4, 1), (5, 1), (5, 2), (6, 2)] {
        let a = enumerate_omega(n, d).unwrap();
        let b = enumerate_omega(n, n - 1 - d).unwrap();
        assert_eq!(a.len(), b.len());
        for g in a.states() {
            assert!(b.index_of(&g.complement()).is_some());
        }
    }
}

#[test]
fn canonical_order_is_sorted_and_indexed() {
    let s = enumerate_omega(5, 2).unwrap();
    assert!(s.states().windows(2).all(|w| w[0] < w[1]));
    for (k, g) in s.states().iter().enumerate() {
        assert_eq!(s.index_of(g), Some(k));
    }
}

#[test]
fn cap_is_an_explicit_refusal() {
    match enumerate_omega_capped(5, 1, 10) {
        Err(EnumError::CapExceeded { cap: 10, .. }) => {}
        other => panic!("expected refusal, got {other:?}"),
    }
    assert!(matches!(enumerate_omega(8, 1), Err(EnumError::TooLarge(8))));
}

#[test]
fn cache_round_trip() {
    let s = enumerate_omega(4, 2).unwrap();
    let text = s.to_cache_text();
    assert!(text.starts_with("OMEGA 4 2 9\n"));
    let back = StateSpace::from_cache_text(&text).unwrap();
    assert_eq!(back.states(), s.states());
}

#[test]
fn metagraphs_connected_and_lazy() {
    for (n, d) in [(4, 1), (5, 1), (6, 1), (4, 2), (5, 2)] {
        let s = enumerate_omega(n, d).unwrap();
        let m = metagraph(&s, Exec::Parallel);
        assert!(m.is_connected(), "({n},{d})");
        assert!(m.is_symmetric());
        assert!(m.rejections().iter().all(|&r| r >= 1), "self-loop at every state ({n},{d})");
        let seq = metagraph(&s, Exec::Sequential);
        assert_eq!(seq.adj, m.adj);
    }
}

/// Oracle adjacency: symmetric difference is exactly one switch.
fn differ_by_switch(x: &Digraph, y: &Digraph) -> bool {
    let h = switchchain::digraph::sym_diff(x, y).unwrap();
    if h.blue.len() != 2 {
        return false;
    }
    let (a, b) = (h.blue[0], h.blue[1]);
    let s = switchchain::Switch::new(a.tail, a.head, b.tail, b.head);
    x.can_apply(&s) && x.apply_switch(&s).unwrap() == *y
}

fn floyd_diameter(states: &[Digraph]) -> usize {
    let n = states.len();
    let inf = usize::MAX / 4;
    let mut dist = vec![vec![inf; n]; n];
    for i in 0..n {
        dist[i][i] = 0;
        for j in 0..n {
            if i != j && differ_by_switch(&states[i], &states[j]) {
                dist[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                dist[i][j] = dist[i][j].min(dist[i][k] + dist[k][j]);
            }
        }
    }
    dist.iter().flatten().copied().max().unwrap()
}

#[test]
fn metagraph_matches_oracle() {
    for (n, d) in [(4, 1), (5, 1), (4, 2), (5, 2)] {
        let s = enumerate_omega(n, d).unwrap();
        let m = metagraph(&s, Exec::Sequential);
        for (i, nb) in m.adj.iter().enumerate() {
            let oracle: Vec<usize> =
                (0..s.len()).filter(|&j| j != i && differ_by_switch(s.state(i), s.state(j))).collect();
            assert_eq!(nb, &oracle);
        }
        assert_eq!(m.diameter(Exec::Parallel), Some(floyd_diameter(s.states())));
    }
}

#[test]
fn frozen_diameters() {
    // Values from the Floyd-Warshall oracle above.
    let dia = |n, d| metagraph(&enumerate_omega(n, d).unwrap(), Exec::Parallel).diameter(Exec::Parallel);
    assert_eq!(dia(4, 1), Some(3));
    assert_eq!(dia(4, 2), Some(3));
    assert_eq!(dia(5, 1), Some(4));
    assert_eq!(dia(5, 2), Some(6));
}

#[test]
fn w_sets_basics() {
    let g = circulant(5, 4).unwrap();
    let w = w_sets(&g, &[0]).unwrap();
    assert_eq!(w.members(1, 1), vec![1, 2, 3, 4]);
    assert_eq!(w.get(0, 0) | w.get(0, 1) | w.get(1, 0), 0);
    let e = w_sets_unchecked(&g, &[]);
    assert_eq!(e.members(1, 1), vec![0, 1, 2, 3, 4]);
    assert!(matches!(w_sets(&g, &[]), Err(EnumError::EmptyU)));
}

#[test]
fn three_cycle_in_four_one() {
    // A 3-cycle leaves a fixed point, which no derangement of 4 has.
    let s = enumerate_omega(4, 1).unwrap();
    assert!(s.states().iter().all(|g| directed_triangles(g).is_empty()));
}

#[test]
fn w_set_of_outside_vertex() {
    // Triangle 1->2->3->1 with vertex 4 joined both ways, then alone.
    let g = Digraph::from_arcs(
        4,
        2,
        [(0, 1), (1, 2), (2, 0), (0, 3), (3, 0), (1, 3), (3, 1), (2, 3), (3, 2)].map(|(a, b)| Arc::new(a, b)),
    )
    .unwrap();
    let w = w_sets(&g, &[0, 1, 2]).unwrap();
    assert!(w.contains(1, 1, 3));
    let h = Digraph::from_arcs(4, 1, [(0, 1), (1, 2), (2, 0)].map(|(a, b)| Arc::new(a, b))).unwrap();
    let w = w_sets(&h, &[0, 1, 2]).unwrap();
    assert!(w.contains(0, 0, 3));
}

#[test]
fn useful_neighbour_classes() {
    // Triangle 1->2->3->1; vertex 4 receives an arc from 1 only.
    let base = [(0, 1), (1, 2), (2, 0)];
    let g = Digraph::from_arcs(5, 2, base.iter().chain(&[(0, 3)]).map(|&(a, b)| Arc::new(a, b))).unwrap();
    let nb = find_useful_neighbour(&g, [0, 1, 2]).unwrap().unwrap();
    assert_eq!((nb.x, nb.i, nb.h), (3, 0, 0));
    let g = Digraph::from_arcs(5, 2, base.iter().chain(&[(0, 3), (1, 3)]).map(|&(a, b)| Arc::new(a, b))).unwrap();
    let nb = find_useful_neighbour(&g, [0, 1, 2]).unwrap().unwrap();
    assert_eq!((nb.x, nb.i, nb.h), (3, 0, 1));
    let g = Digraph::from_arcs(5, 2, base.iter().chain(&[(3, 2)]).map(|&(a, b)| Arc::new(a, b))).unwrap();
    let nb = find_useful_neighbour(&g, [0, 1, 2]).unwrap().unwrap();
    assert_eq!((nb.x, nb.i, nb.h), (3, 1, 0));
    assert!(find_useful_neighbour(&g, [0, 1, 3]).is_err());
}

#[test]
fn useful_arc_tags() {
    // Vertices 4,5 adjacent both ways to every triangle vertex, so both in
    // W^(1,1); no arc between them gives a U2 arc (4,5).
    let mut arcs = vec![(0, 1), (1, 2), (2, 0)];
    for x in [3, 4] {
        for t in 0..3 {
            arcs.push((x, t));
            arcs.push((t, x));
        }
    }
    let g = Digraph::from_arcs(5, 3, arcs.iter().map(|&(a, b)| Arc::new(a, b))).unwrap();
    assert_eq!(find_useful_neighbour(&g, [0, 1, 2]).unwrap(), None);
    assert_eq!(find_useful_arc(&g, [0, 1, 2]).unwrap(), Some((Arc::new(3, 4), UsefulTag::U2)));
    // x in W^(0,1) (in-neighbour only), y in W^(1,0) (out-neighbour only)
    // with (x,y) present: U1.
    let mut arcs = vec![(0, 1), (1, 2), (2, 0), (3, 4)];
    for t in 0..3 {
        arcs.push((t, 3));
        arcs.push((4, t));
    }
    let g = Digraph::from_arcs(5, 2, arcs.iter().map(|&(a, b)| Arc::new(a, b))).unwrap();
    assert_eq!(find_useful_arc(&g, [0, 1, 2]).unwrap(), Some((Arc::new(3, 4), UsefulTag::U1)));
}

#[test]
fn useful_witness_always_exists() {
    for (n, d) in [(5, 2), (6, 2), (6, 3)] {
        let s = enumerate_omega(n, d).unwrap();
        for g in s.states() {
            for t in directed_triangles(g) {
                useful_witness(g, t).unwrap();
            }
        }
    }
}

#[test]
fn w_sets_partition_outside_u() {
    let s = enumerate_omega(5, 2).unwrap();
    for g in s.states().iter().step_by(7) {
        for t in directed_triangles(g) {
            let w = w_sets(g, &t).unwrap();
            let sets = [w.get(0, 0), w.get(0, 1), w.get(1, 0), w.get(1, 1)];
            for a in 0..4 {
                assert_eq!(sets[a] & w.u, 0);
                for b in a + 1..4 {
                    assert_eq!(sets[a] & sets[b], 0);
                }
            }
            let nb = find_useful_neighbour(g, t).unwrap();
            let useless = w.union() | w.u;
            let first_useful = (0..5).find(|&x| useless >> x & 1 == 0);
            assert_eq!(nb.map(|u| u.x), first_useful);
        }
    }
}
