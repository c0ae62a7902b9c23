use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};
use switchchain::audit::{audit_paths, PathAudit, PathSample};
use switchchain::chain::{
    exact_mixing_time, max_inverse_holding, poly_tau_bound, sample, smallest_eigenvalue_bound, spectral_tau_bound,
    spectrum, trajectory_rng, ChainError, Instance, Spectrum, INEQ_TOL,
};
use switchchain::digraph::{circulant, sym_diff};
use switchchain::encodings::{count_reverse_reachable, poly_bound, preimage_counts};
use switchchain::enumeration::EnumError;
use switchchain::flow::{
    build_flow_auto, full_audit_size, ratio_f64, verify_bounds, FlowAudit, FlowMode, FULL_AUDIT_CAP,
};
use switchchain::paths::{build_path_unchecked, count_pairings, pairing_by_index, PathTrace};
use switchchain::{worked, Digraph, DigraphError, Exec};

#[derive(Parser)]
#[command(name = "switchchain", version, about = "Switch chain on d-regular digraphs")]
struct Cli {
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Size {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the chain from a start digraph and write the final state.
    Sample {
        #[command(flatten)]
        size: Size,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start digraph (arc list); defaults to the circulant.
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the state space and summarise the transition graph.
    Enumerate {
        #[command(flatten)]
        size: Size,
        /// Write the state list here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of the transition matrix and the smallest-eigenvalue bounds.
    Spectrum {
        #[command(flatten)]
        size: Size,
    },
    /// Exact mixing time against the spectral and polynomial bounds.
    Mixing {
        #[command(flatten)]
        size: Size,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
    },
    /// Build one canonical path, between enumerated states or two files.
    Path {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// 1-based state index.
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        g2: Option<PathBuf>,
        /// 0-based pairing index.
        #[arg(long, default_value_t = 0)]
        pairing: u64,
    },
    /// Multicommodity flow with exact loads, falling back to sampling above the cap.
    FlowAudit {
        #[command(flatten)]
        size: Size,
        #[arg(long, default_value_t = FULL_AUDIT_CAP)]
        cap: u64,
        #[arg(long, default_value_t = 4)]
        per_pair: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Every check on one instance; exits 1 if any fails.
    Verify {
        #[command(flatten)]
        size: Size,
        /// Path samples when the exhaustive audit is above the cap.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FULL_AUDIT_CAP)]
        cap: u64,
    },
    /// Reproduce the hand-checked 23-vertex path.
    Fixture,
}

struct Outcome {
    report: Value,
    ok: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, ok: true }
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(EnumError::CapExceeded { .. } | EnumError::TooLarge(_)) = cause.downcast_ref() {
            return 3;
        }
        if cause.is::<Usage>()
            || cause.is::<DigraphError>()
            || matches!(cause.downcast_ref(), Some(ChainError::BadParams(_)))
        {
            return 2;
        }
    }
    1
}

fn arcs_json(g: &Digraph) -> Value {
    json!(g.arcs().map(|a| [a.tail + 1, a.head + 1]).collect::<Vec<_>>())
}

fn read_digraph(p: &Path) -> Result<Digraph> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(Digraph::from_text(&text)?)
}

fn instance(size: Size, exec: Exec) -> Result<Instance> {
    if size.n < 4 || size.d == 0 || size.d >= size.n {
        return Err(usage(format!("need n >= 4 and 1 <= d < n, got n = {}, d = {}", size.n, size.d)));
    }
    Ok(Instance::build(size.n, size.d, exec)?)
}

fn spectral_checks(inst: &Instance, size: Size, spec: &Spectrum) -> Vec<Value> {
    let lhs = 1.0 / (1.0 + spec.lambda_min());
    let hold = max_inverse_holding(&inst.p);
    let half_hold = *hold.numer() as f64 / *hold.denom() as f64 / 2.0;
    let poly = smallest_eigenvalue_bound(size.n, size.d);
    vec![
        check("P symmetric", inst.p.check_symmetric().is_ok(), json!(null)),
        check("uniform stationary", inst.p.uniform_is_stationary(), json!(null)),
        check("lambdaMin > -1", spec.lambda_min() > -1.0, json!(spec.lambda_min())),
        check("1/(1+lambdaMin) <= d^2 n^2 / 4", lhs <= poly + INEQ_TOL, json!({"lhs": lhs, "rhs": poly})),
        check(
            "1/(1+lambdaMin) <= max 1/P(x,x) / 2",
            lhs <= half_hold + INEQ_TOL,
            json!({"lhs": lhs, "rhs": half_hold}),
        ),
    ]
}

fn check(name: &str, holds: bool, detail: Value) -> Value {
    json!({"check": name, "holds": holds, "detail": detail})
}

fn all_hold(checks: &[Value]) -> bool {
    checks.iter().all(|c| c["holds"] == json!(true))
}

fn mixing_json(inst: &Instance, size: Size, spec: &Spectrum, eps: f64, exec: Exec) -> Result<(Value, bool)> {
    let m = exact_mixing_time(&inst.p, spec, eps, exec)?;
    let l1 = spectral_tau_bound(spec, inst.space.len(), eps);
    let th = poly_tau_bound(size.n, size.d, eps)?;
    let ok = (m.tau as f64) <= l1 && l1 <= th;
    let v = json!({
        "eps": eps,
        "tauExact": m.tau,
        "tauLemma1": l1,
        "tauTheorem1": th,
        "worstStart": m.worst_start + 1,
        "certifiedAfter": m.certified_after,
        "nonmonotone": m.nonmonotone.len(),
        "ordered": ok,
    });
    Ok((v, ok))
}

fn path_json(t: &PathTrace) -> Value {
    let steps: Vec<Value> = t
        .steps
        .iter()
        .map(|s| {
            json!({
                "switch": [s.switch.i + 1, s.switch.j + 1, s.switch.k + 1, s.switch.l + 1],
                "stepType": format!("{:?}", s.step_type),
                "segmentKind": s.case.kind_name(),
                "segment": s.segment,
                "phase": s.phase,
                "interestingArcs": s.interesting.iter().map(|x| json!({"arc": [x.arc.tail + 1, x.arc.head + 1], "label": x.label})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "length": t.len(),
        "simple": t.is_simple(),
        "circuits": t.circuits.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "steps": steps,
    })
}

fn rational_json(r: &BigRational) -> Value {
    json!({"num": r.numer().to_string(), "den": r.denom().to_string(), "float": ratio_f64(r)})
}

fn flow_json(a: &FlowAudit, spec: &Spectrum) -> (Value, bool) {
    let bounds = verify_bounds(a, spec);
    let ok = a.is_clean() && bounds.iter().all(|b| b.holds);
    let refs = |v: &[switchchain::flow::PathRef]| {
        v.iter().take(5).map(|r| json!({"from": r.from + 1, "to": r.to + 1, "pairing": r.pairing})).collect::<Vec<_>>()
    };
    let mode = match a.mode {
        FlowMode::Full => json!("full"),
        FlowMode::Sampled { per_pair, seed } => json!({"sampled": {"perPair": per_pair, "seed": seed}}),
    };
    let v = json!({
        "n": a.n,
        "d": a.d,
        "states": a.states,
        "mode": mode,
        "paths": a.paths,
        "edgesUsed": a.flows.len(),
        "maxPathLength": a.max_path_length,
        "maxFlow": a.max_flow().map(|(e, f)| json!({"from": e.0 + 1, "to": e.1 + 1, "value": rational_json(f)})),
        "maxLoad": rational_json(&a.max_load()),
        "maxBadPairs": a.max_bad_pairs,
        "counts": {
            "simplicityViolations": a.simplicity_violations.len(),
            "longPaths": a.long_paths.len(),
            "conservationFailures": a.conservation_failures.len(),
            "errors": a.errors.len(),
            "badPairViolations": a.bad_pair_violations.len(),
        },
        "examples": {
            "simplicityViolations": refs(&a.simplicity_violations),
            "longPaths": refs(&a.long_paths),
            "errors": a.errors.iter().take(5).collect::<Vec<_>>(),
        },
        "bounds": bounds.iter().map(|b| json!({"name": b.name, "lhs": b.lhs, "rhs": b.rhs, "margin": b.margin(), "holds": b.holds, "exact": b.exact})).collect::<Vec<_>>(),
        "ok": ok,
    });
    (v, ok)
}

fn audit_json(a: &PathAudit) -> Value {
    serde_json::to_value(a).expect("plain data")
}

fn run(cmd: Cmd, exec: Exec) -> Result<Outcome> {
    match cmd {
        Cmd::Sample { size, steps, seed, start, out } => {
            let g0 = match start {
                Some(p) => read_digraph(&p)?,
                None => circulant(size.n, size.d)?,
            };
            if (g0.n(), g0.d()) != (size.n, size.d) {
                return Err(usage(format!("start digraph has (n,d) = ({},{})", g0.n(), g0.d())));
            }
            let g = sample(&g0, steps, &mut trajectory_rng(seed, 0));
            if let Some(p) = out {
                fs::write(&p, g.to_text()).with_context(|| format!("writing {}", p.display()))?;
            }
            let ok = g.is_regular();
            Ok(Outcome {
                report: json!({"n": size.n, "d": size.d, "steps": steps, "seed": seed, "regular": ok, "arcs": arcs_json(&g)}),
                ok,
            })
        }
        Cmd::Enumerate { size, out } => {
            let inst = instance(size, exec)?;
            if let Some(p) = out {
                fs::write(&p, inst.space.to_cache_text()).with_context(|| format!("writing {}", p.display()))?;
            }
            let m = &inst.meta;
            let connected = m.is_connected();
            let loops = m.rejections().iter().all(|&r| r >= 1);
            Ok(Outcome {
                report: json!({
                    "n": size.n,
                    "d": size.d,
                    "states": inst.space.len(),
                    "transitions": m.adj.iter().map(Vec::len).sum::<usize>() / 2,
                    "connected": connected,
                    "diameter": m.diameter(exec),
                    "selfLoopEverywhere": loops,
                    "symmetric": m.is_symmetric(),
                }),
                ok: connected && loops,
            })
        }
        Cmd::Spectrum { size } => {
            let inst = instance(size, exec)?;
            let spec = spectrum(&inst.p)?;
            let checks = spectral_checks(&inst, size, &spec);
            let ok = all_hold(&checks);
            Ok(Outcome {
                report: json!({
                    "states": inst.space.len(),
                    "lambda1": spec.lambda1(),
                    "lambdaMin": spec.lambda_min(),
                    "lambdaStar": spec.lambda_star(),
                    "maxResidual": spec.max_residual,
                    "checks": checks,
                }),
                ok,
            })
        }
        Cmd::Mixing { size, eps } => {
            let inst = instance(size, exec)?;
            let spec = spectrum(&inst.p)?;
            let (v, ok) = mixing_json(&inst, size, &spec, eps, exec)?;
            Ok(Outcome { report: v, ok })
        }
        Cmd::Path { n, d, from, to, g, g2, pairing } => {
            let (a, b) = match (n, d, from, to, g, g2) {
                (Some(n), Some(d), Some(x), Some(y), None, None) => {
                    let inst = instance(Size { n, d }, exec)?;
                    let len = inst.space.len();
                    if !(1..=len).contains(&x) || !(1..=len).contains(&y) {
                        return Err(usage(format!("state indices must lie in 1..={len}")));
                    }
                    (inst.space.state(x - 1).clone(), inst.space.state(y - 1).clone())
                }
                (None, None, None, None, Some(p), Some(q)) => (read_digraph(&p)?, read_digraph(&q)?),
                _ => return Err(usage("give either --n --d --from --to or --g --g2")),
            };
            let h = sym_diff(&a, &b)?;
            let total = count_pairings(&h)?;
            if BigUint::from(pairing) < total {
                let psi = pairing_by_index(&h, pairing)?;
                match build_path_unchecked(&a, &b, &psi).and_then(|t| t.check(&a, &b).map(|_| t)) {
                    Ok(t) => Ok(Outcome::ok(
                        json!({"pairing": pairing, "pairings": total.to_string(), "path": path_json(&t)}),
                    )),
                    Err(e) => Ok(Outcome { report: json!({"pairing": pairing, "error": e.to_string()}), ok: false }),
                }
            } else {
                Err(usage(format!("pairing index must be below {total}")))
            }
        }
        Cmd::FlowAudit { size, cap, per_pair, seed } => {
            let inst = instance(size, exec)?;
            let spec = spectrum(&inst.p)?;
            let a = build_flow_auto(&inst.space, cap, per_pair, seed, exec);
            let (v, ok) = flow_json(&a, &spec);
            Ok(Outcome { report: v, ok })
        }
        Cmd::Verify { size, samples, seed, cap } => verify(size, samples, seed, cap, exec),
        Cmd::Fixture => {
            let (t, r) = worked::run()?;
            Ok(Outcome {
                report: json!({
                    "transitions": t.len(),
                    "switches": r.switches,
                    "checks": r.checks,
                }),
                ok: r.holds(),
            })
        }
    }
}

/// State spaces this small also get the quadratic reverse-count and
/// preimage checks.
const SMALL_SPACE: usize = 60;

fn verify(size: Size, samples: usize, seed: u64, cap: u64, exec: Exec) -> Result<Outcome> {
    let inst = instance(size, exec)?;
    let spec = spectrum(&inst.p)?;
    let mut checks = vec![
        check("connected", inst.meta.is_connected(), json!({"states": inst.space.len()})),
        check("self-loop at every state", inst.meta.rejections().iter().all(|&r| r >= 1), json!(null)),
    ];
    checks.extend(spectral_checks(&inst, size, &spec));
    for eps in [0.25, 0.01] {
        let (v, ok) = mixing_json(&inst, size, &spec, eps, exec)?;
        checks.push(check("tauExact <= tauLemma1 <= tauTheorem1", ok, v));
    }
    let full = full_audit_size(&inst.space, exec) <= cap;
    let sample = if full { PathSample::All } else { PathSample::Random { count: samples, seed } };
    let pa = audit_paths(&inst.space, sample, exec);
    checks.push(check("paths valid, local, at most 5 interesting arcs", pa.paths_ok(), audit_json(&pa)));
    checks.push(check(
        "encodings valid, repair within 3",
        pa.encodings_ok(),
        json!({"maxRepair": pa.max_repair, "searched": pa.searched_repairs}),
    ));
    checks.push(check("bad pairs within bounds", pa.bad_pairs.count == 0, json!({"max": pa.max_bad_pairs})));
    checks.push(check("paths simple", pa.not_simple.count == 0, json!(pa.not_simple)));
    let n = inst.space.len();
    if n <= SMALL_SPACE {
        let pre = preimage_counts(&inst.space, exec)?;
        checks.push(check("at most 4 preimages per encoding", pre.max <= 4, json!({"max": pre.max, "keys": pre.keys})));
        let bound = poly_bound(size.n, size.d);
        let worst = exec.map_range(n * n, |k| {
            let r = count_reverse_reachable(inst.space.state(k / n), inst.space.state(k % n), 3);
            (r.total, r.bound_violations.len())
        });
        let max = worst.iter().map(|w| w.0).max().unwrap_or(0);
        let viol: usize = worst.iter().map(|w| w.1).sum();
        checks.push(check(
            "reverse counts within 25 d^6 n^6",
            viol == 0 && max as u64 <= bound,
            json!({"max": max, "bound": bound}),
        ));
    }
    let a = build_flow_auto(&inst.space, cap, 4, seed, exec);
    let (fv, fok) = flow_json(&a, &spec);
    checks.push(check("flow audit", fok, fv));
    let ok = all_hold(&checks);
    Ok(Outcome { report: json!({"n": size.n, "d": size.d, "pathSample": sample, "checks": checks, "ok": ok}), ok })
}

/// Ignores a closed stdout.
fn emit(s: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match run(cli.cmd, exec) {
        Ok(o) => {
            emit(&serde_json::to_string_pretty(&o.report).expect("json"));
            ExitCode::from(if o.ok { 0 } else { 1 })
        }
        Err(e) => {
            let code = exit_code(&e);
            emit(&json!({"error": format!("{e:#}"), "exitCode": code}).to_string());
            ExitCode::from(code)
        }
    }
}
