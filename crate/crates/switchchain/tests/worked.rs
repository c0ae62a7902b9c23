use switchchain::digraph::sym_diff;
use switchchain::worked::*;

#[test]
fn fixture_is_the_derived_completion() {
    let h = difference().unwrap();
    assert_eq!(h.len(), 40);
    assert!(h.is_balanced());
    let (d, g, g2) = smallest_completion(&h).unwrap();
    assert_eq!(d, D);
    assert_eq!(fixture().unwrap(), (g.clone(), g2.clone()));
    assert_eq!(sym_diff(&g, &g2).unwrap(), h);
    assert!(complete_pair(&h, D - 1).is_err());
}

#[test]
fn every_named_vertex_is_used() {
    let h = difference().unwrap();
    for v in 0..N {
        assert!(h.theta(v) + h.phi(v) > 0, "{}", name(v));
    }
    assert!(vertex("nope").is_err());
}

#[test]
fn worked_path_matches_expectations() {
    let (trace, report) = run().unwrap();
    for c in &report.checks {
        println!("{} {}: {}", if c.holds { "ok " } else { "BAD" }, c.what, c.detail);
    }
    println!("{}", report.switches.join(" "));
    assert!(report.holds());
    assert_eq!(trace.len(), 13);
    assert!(trace.is_simple());
}
