//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p mofix-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mofix::domains::{CmpOp, Guard, Stmt, VarId};
use mofix::engine::{Slot, ValidityReport};
use mofix::fmachine::generate_fm_program_traced;
use mofix::gen::{self, ProgramGen};
use mofix::wto::{exec_order_leq, gen_prog, wto_of_program};
use mofix::{
    default_config, generate_fm_program, optimal_config, run, run_reference, run_shadow,
    AbstractDomain, Cfg, ConstState, DiGraph, ExecOrder, IntervalState, MemoryConfiguration,
    NestingForest, NodeId, NodeProgram, Problem, RunOptions,
};
use rand::Rng;

use common::{fixture, initial_stores, node, random_cfg, reachable};

// pinned tolerances
const C3_SEEDS: u64 = 1000;
const C3_MAX_NODES: usize = 64;
const EDGE_PROBS: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
const C4_SEEDS: u64 = 1000;
const C4_MAX_NODES: usize = 16;
const C5_PROGRAM_SEEDS: u64 = 20;
const C6_MAX_RATIO: f64 = 0.5;
const C6_MIN_NODES: usize = 16;
const C7_EDGES: [usize; 2] = [10_000, 100_000];
const C7_RUNS: usize = 5;
const C7_MAX_GROWTH: f64 = 15.0;
const C8_HTOS: u64 = 500;
const C8_MAX_NODES: usize = 24;
const C8_TRACES: u64 = 500;
const C9_PROGRAMS: u64 = 200;
const C9_MAX_NODES: usize = 8;
const C9_MAX_VARS: usize = 4;
const C9_STATE_CAP: usize = 100_000;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, Check); 9] = [
        (1, "G1 golden suite", secs(1), c1_golden),
        (2, "generation trace on G1", secs(1), c2_trace),
        (
            3,
            "construction equals declarative maps",
            secs(30),
            c3_oracle,
        ),
        (4, "optimal configuration is valid", secs(120), c4_validity),
        (
            5,
            "known-invalid configurations are flagged",
            secs(1),
            c5_invalid,
        ),
        (6, "peak live values on nested loops", secs(10), c6_memory),
        (7, "construction time scaling", secs(120), c7_scaling),
        (8, "order properties", secs(10), c8_orders),
        (
            9,
            "domain soundness against concrete runs",
            secs(60),
            c9_soundness,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let took = t.elapsed();
        let over = took > budget;
        let pass = outcome.is_ok() && !over;
        let mut detail = match outcome {
            Ok(d) | Err(d) => d,
        };
        if over {
            detail.push_str(&format!("; over time budget of {}s", budget.as_secs()));
        }
        println!(
            "criterion {id} {}: {name} ({:.2}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
        if !pass {
            failed += 1;
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn labels_of(cfg: &Cfg, nodes: impl IntoIterator<Item = NodeId>) -> Vec<u64> {
    let mut v: Vec<u64> = nodes.into_iter().map(|x| cfg.labels.get(x)).collect();
    v.sort_unstable();
    v
}

fn c1_golden() -> Result<String, String> {
    let cfg = fixture("g1.cfg");
    let (p, m) = generate_fm_program(&cfg.graph, &cfg.checks);
    let text = p.display(&cfg.labels).to_string();
    ensure(
        text == "exec 1 ; exec 2 ; repeat 3 [repeat 4 [exec 5] ; exec 6] ; repeat 7 [exec 8] ; exec 9",
        || format!("program {text}"),
    )?;
    let w = wto_of_program(&p);
    let wtext = w.display(&cfg.labels).to_string();
    ensure(wtext == "1 2 (3 (4 5) 6) (7 8) 9", || {
        format!("wto {wtext}")
    })?;
    let nf = NestingForest::new(&w);
    let order = ExecOrder::new(&w, &nf);
    let seq: Vec<u64> = order
        .sequence()
        .iter()
        .map(|&v| cfg.labels.get(v))
        .collect();
    ensure(seq == [1, 2, 5, 4, 6, 3, 8, 7, 9], || {
        format!("exec order {seq:?}")
    })?;

    let dpost = [
        (1, 2),
        (2, 7),
        (3, 7),
        (8, 7),
        (4, 6),
        (5, 3),
        (6, 3),
        (7, 9),
        (9, 9),
    ];
    for (u, v) in dpost {
        let got = cfg.labels.get(m.dpost(node(&cfg, u)));
        ensure(got == v, || format!("dpost[{u}] = {got}, want {v}"))?;
    }
    let checked = labels_of(&cfg, m.checked_nodes());
    ensure(checked == [4, 9], || format!("checked nodes {checked:?}"))?;
    for (u, v) in [(4, 3), (9, 9)] {
        let got = m.achk(node(&cfg, u)).map(|a| cfg.labels.get(a));
        ensure(got == Some(v), || format!("achk[{u}] = {got:?}, want {v}"))?;
    }
    let dpostl: [(u64, &[u64]); 9] = [
        (1, &[1]),
        (2, &[2]),
        (3, &[3]),
        (4, &[4]),
        (5, &[3, 4, 5]),
        (6, &[3, 6]),
        (7, &[7]),
        (8, &[7, 8]),
        (9, &[9]),
    ];
    for (u, want) in dpostl {
        let got = labels_of(&cfg, m.dpostl(node(&cfg, u)).iter().copied());
        ensure(got == want, || {
            format!("dpostl[{u}] = {got:?}, want {want:?}")
        })?;
    }
    let dprel: [(u64, &[u64]); 2] = [(4, &[3]), (9, &[])];
    for (u, want) in dprel {
        let got = m
            .dprel(node(&cfg, u))
            .map(|s| labels_of(&cfg, s.iter().copied()));
        ensure(got.as_deref() == Some(want), || {
            format!("dprel[{u}] = {got:?}, want {want:?}")
        })?;
    }
    ensure(m == optimal_config(&cfg.graph, &w, &cfg.checks), || {
        "declarative maps differ from the construction".into()
    })?;
    Ok("program, wto, exec order and all four maps match".into())
}

fn c2_trace() -> Result<String, String> {
    let cfg = fixture("g1.cfg");
    let (_, m, trace) = generate_fm_program_traced(&cfg.graph, &cfg.checks);
    let l = |v: NodeId| cfg.labels.get(v);
    let pairs = |xs: &[(NodeId, NodeId)]| -> Vec<(u64, u64)> {
        let mut v: Vec<_> = xs.iter().map(|&(a, b)| (l(a), l(b))).collect();
        v.sort_unstable();
        v
    };
    let sets = |xs: &[Vec<NodeId>]| -> Vec<Vec<u64>> {
        xs.iter()
            .map(|s| labels_of(&cfg, s.iter().copied()))
            .collect()
    };

    let h4 = trace.step(node(&cfg, 4)).ok_or("no step for head 4")?;
    let body: Vec<u64> = h4.body.iter().map(|&v| l(v)).collect();
    ensure(body == [5], || format!("h=4 repeat body {body:?}"))?;
    let inst = h4.instruction.display(&cfg.labels).to_string();
    ensure(inst == "repeat 4 [exec 5]", || {
        format!("h=4 instruction {inst}")
    })?;
    ensure(pairs(&h4.body_dpost) == [(4, 5)], || {
        format!("h=4 dpost {:?}", pairs(&h4.body_dpost))
    })?;
    ensure(pairs(&h4.body_t) == [(4, 4)], || {
        format!("h=4 T {:?}", pairs(&h4.body_t))
    })?;
    let back: Vec<u64> = labels_of(&cfg, h4.back_sources.iter().copied());
    ensure(back == [5], || format!("h=4 back-edge sources {back:?}"))?;
    ensure(sets(&h4.merged_sets) == [vec![4], vec![5]], || {
        format!("h=4 merged {:?}", sets(&h4.merged_sets))
    })?;

    let h3 = trace.step(node(&cfg, 3)).ok_or("no step for head 3")?;
    let body: Vec<u64> = h3.body.iter().map(|&v| l(v)).collect();
    ensure(body == [4, 6], || format!("h=3 repeat body {body:?}"))?;
    let inst = h3.instruction.display(&cfg.labels).to_string();
    ensure(inst == "repeat 3 [repeat 4 [exec 5] ; exec 6]", || {
        format!("h=3 instruction {inst}")
    })?;
    ensure(pairs(&h3.body_dpost) == [(3, 4), (4, 6)], || {
        format!("h=3 dpost {:?}", pairs(&h3.body_dpost))
    })?;
    ensure(pairs(&h3.body_t) == [(3, 3), (4, 4)], || {
        format!("h=3 T {:?}", pairs(&h3.body_t))
    })?;
    let back: Vec<u64> = labels_of(&cfg, h3.back_sources.iter().copied());
    ensure(back == [5, 6], || format!("h=3 back-edge sources {back:?}"))?;
    ensure(
        sets(&h3.merged_sets) == [vec![3], vec![4, 5], vec![6]],
        || format!("h=3 merged {:?}", sets(&h3.merged_sets)),
    )?;

    // dpost[4] went 5 -> 6; back-edge sources end at their head
    ensure(l(m.dpost(node(&cfg, 4))) == 6, || {
        "final dpost[4] is not 6".into()
    })?;
    for u in [5, 6] {
        ensure(l(m.dpost(node(&cfg, u))) == 3, || {
            format!("final dpost[{u}] is not 3")
        })?;
    }
    Ok("rows at h=4 and h=3 match, dpost[4] goes 5 -> 6".into())
}

fn c3_oracle() -> Result<String, String> {
    let mut largest = 0;
    for seed in 0..C3_SEEDS {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=C3_MAX_NODES);
        let p = EDGE_PROBS[(seed as usize) % EDGE_PROBS.len()];
        let g = gen::random_graph(&mut rng, n, p);
        let checks: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let (prog, m) = generate_fm_program(&g, &checks);
        let w = wto_of_program(&prog);
        w.validate_against(&g)
            .map_err(|(u, v)| format!("seed {seed}: edge {u}->{v} breaks the ordering"))?;
        ensure(gen_prog(&w) == prog, || {
            format!("seed {seed}: program differs from genProg")
        })?;
        ensure(m == optimal_config(&g, &w, &checks), || {
            format!("seed {seed}: maps differ")
        })?;
        largest = largest.max(n);
    }
    Ok(format!(
        "{C3_SEEDS} graphs (up to {largest} nodes), 100% equal"
    ))
}

fn validity_of<D: AbstractDomain>(cfg: &Cfg, seed: u64) -> Result<(), String> {
    let prob = cfg.problem();
    let opts = RunOptions::default();
    let (p, m) = generate_fm_program(&cfg.graph, &cfg.checks);
    let dflt = default_config(&p, &cfg.checks);
    let err = |e: mofix::EngineError| format!("seed {seed} {}: {e}", D::NAME);
    let a = run::<D>(prob, &p, &m, &opts).map_err(err)?;
    let b = run::<D>(prob, &p, &dflt, &opts).map_err(err)?;
    let r = run_reference::<D>(prob, &wto_of_program(&p), &cfg.checks, &opts).map_err(err)?;
    ensure(a.ck == b.ck && b.ck == r.ck, || {
        format!(
            "seed {seed} {}: verdicts differ between optimal, default and reference",
            D::NAME
        )
    })?;
    let report = run_shadow::<D>(prob, &p, &m, &opts).map_err(err)?;
    ensure(report.valid && report.divergences.is_empty(), || {
        format!("seed {seed} {}: shadow run reports {report:?}", D::NAME)
    })
}

fn c4_validity() -> Result<String, String> {
    let mut checks = 0;
    for seed in 0..C4_SEEDS {
        let cfg = random_cfg(seed, C4_MAX_NODES, &EDGE_PROBS, 3);
        checks += cfg.checks.iter().filter(|&&c| c).count();
        validity_of::<IntervalState>(&cfg, seed)?;
        validity_of::<ConstState>(&cfg, seed)?;
    }
    Ok(format!(
        "{C4_SEEDS} inputs x 2 domains, {checks} checked nodes, no divergent reads"
    ))
}

/// G1 with random statements, an assert at 4 and at 9 and none elsewhere.
fn g1_with_programs(g1: &Cfg, seed: u64) -> Vec<NodeProgram> {
    let mut rng = gen::rng(1000 + seed);
    let pg = ProgramGen {
        var_count: 2,
        assert_prob: 0.0,
        ..ProgramGen::default()
    };
    g1.graph
        .nodes()
        .map(|v| {
            let mut stmts = pg.program(&mut rng).stmts().to_vec();
            if g1.checks[v.index()] {
                let ops = [
                    CmpOp::Le,
                    CmpOp::Ge,
                    CmpOp::Eq,
                    CmpOp::Ne,
                    CmpOp::Lt,
                    CmpOp::Gt,
                ];
                let g = Guard::new(
                    VarId::new(rng.gen_range(0..2)),
                    ops[rng.gen_range(0..ops.len())],
                    rng.gen_range(-8..=8),
                );
                stmts.push(Stmt::Assert(g));
            }
            NodeProgram::new(stmts)
        })
        .collect()
}

fn shadow_both(prob: Problem<'_>, p: &mofix::FmProgram, m: &MemoryConfiguration) -> bool {
    let opts = RunOptions::default();
    let invalid = |r: Result<ValidityReport, _>| r.is_ok_and(|r: ValidityReport| !r.valid);
    invalid(run_shadow::<IntervalState>(prob, p, m, &opts))
        || invalid(run_shadow::<ConstState>(prob, p, m, &opts))
}

fn c5_invalid() -> Result<String, String> {
    let g1 = fixture("g1.cfg");
    let n = |l| node(&g1, l);
    let (p, m_opt) = generate_fm_program(&g1.graph, &g1.checks);
    let perturbations: [(&str, Box<dyn Fn(&mut MemoryConfiguration)>); 4] = [
        ("Dpost[2]:=8", Box::new(|m| m.set_dpost(n(2), n(8)))),
        ("Dpost[5]:=4", Box::new(|m| m.set_dpost(n(5), n(4)))),
        ("Achk[4]:=4", Box::new(|m| m.set_achk(n(4), n(4)))),
        (
            "Dprel[4]:={3,4}",
            Box::new(|m| m.set_dprel(n(4), vec![n(3), n(4)])),
        ),
    ];
    let mut flagged = [0u32; 4];
    for seed in 0..C5_PROGRAM_SEEDS {
        let programs = g1_with_programs(&g1, seed);
        let prob = Problem {
            graph: &g1.graph,
            programs: &programs,
            var_count: 2,
        };
        ensure(!shadow_both(prob, &p, &m_opt), || {
            format!("seed {seed}: the optimal configuration itself is flagged")
        })?;
        for (i, (_, perturb)) in perturbations.iter().enumerate() {
            let mut m = m_opt.clone();
            perturb(&mut m);
            if shadow_both(prob, &p, &m) {
                flagged[i] += 1;
            }
        }
    }
    let summary: Vec<String> = perturbations
        .iter()
        .zip(flagged)
        .map(|((name, _), k)| format!("{name} flagged on {k}/{C5_PROGRAM_SEEDS}"))
        .collect();
    let summary = summary.join(", ");
    if flagged.iter().all(|&k| k > 0) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn c6_memory() -> Result<String, String> {
    let mut rows = Vec::new();
    for d in 1..=4 {
        for b in [4, 8] {
            let cfg = gen::nested_loops(d, b).build().map_err(|e| e.to_string())?;
            let prob = cfg.problem();
            let (p, m) = generate_fm_program(&cfg.graph, &cfg.checks);
            let dflt = default_config(&p, &cfg.checks);
            let opts = RunOptions::default();
            let a = run::<IntervalState>(prob, &p, &m, &opts).map_err(|e| e.to_string())?;
            let z = run::<IntervalState>(prob, &p, &dflt, &opts).map_err(|e| e.to_string())?;
            ensure(a.ck == z.ck, || format!("d={d} b={b}: verdicts differ"))?;
            let ratio = a.profile.peak_live as f64 / z.profile.peak_live as f64;
            rows.push((cfg.graph.node_count(), d, b, ratio));
        }
    }
    rows.sort_by_key(|r| r.0);
    let table: Vec<String> = rows
        .iter()
        .map(|(n, d, b, r)| format!("n={n}(d={d},b={b}):{r:.3}"))
        .collect();
    let mut problems = Vec::new();
    for &(n, d, b, r) in &rows {
        if n >= C6_MIN_NODES && r > C6_MAX_RATIO {
            problems.push(format!("d={d} b={b} ratio {r:.3} > {C6_MAX_RATIO}"));
        }
    }
    for w in rows.windows(2) {
        if w[1].3 >= w[0].3 {
            problems.push(format!(
                "ratio rises from {:.3} at n={} to {:.3} at n={}",
                w[0].3, w[0].0, w[1].3, w[1].0
            ));
        }
    }
    let table = table.join(" ");
    if problems.is_empty() {
        Ok(table)
    } else {
        Err(format!("{}; {table}", problems.join("; ")))
    }
}

fn median_generation_time(g: &DiGraph) -> Duration {
    let checks = vec![false; g.node_count()];
    let mut times: Vec<Duration> = (0..C7_RUNS)
        .map(|_| {
            let t = Instant::now();
            let out = generate_fm_program(g, &checks);
            let took = t.elapsed();
            drop(out);
            took
        })
        .collect();
    times.sort();
    times[C7_RUNS / 2]
}

fn c7_scaling() -> Result<String, String> {
    let [small, large] = C7_EDGES.map(|e| {
        // two edges per node on average
        let g = gen::random_sparse_graph(&mut gen::rng(e as u64), e / 2, e);
        median_generation_time(&g)
    });
    let growth = large.as_secs_f64() / small.as_secs_f64();
    let msg = format!(
        "median {:.2}ms at {} edges, {:.2}ms at {} edges, growth {growth:.1}x (limit {C7_MAX_GROWTH}x)",
        small.as_secs_f64() * 1e3,
        C7_EDGES[0],
        large.as_secs_f64() * 1e3,
        C7_EDGES[1]
    );
    if growth <= C7_MAX_GROWTH {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c8_orders() -> Result<String, String> {
    for seed in 0..C8_HTOS {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=C8_MAX_NODES);
        let w = gen::random_hto(&mut rng, n);
        let nf = NestingForest::new(&w);
        let order = ExecOrder::new(&w, &nf);
        let v = |i| NodeId::new(i);
        let le = |x, y| nf.nested_in(v(x), v(y));
        let ex = |x, y| exec_order_leq(&w, &nf, v(x), v(y));
        for x in 0..n {
            ensure(le(x, x), || {
                format!("hto {seed}: nesting not reflexive at {x}")
            })?;
            ensure(ex(x, x), || {
                format!("hto {seed}: exec order not reflexive at {x}")
            })?;
            for y in 0..n {
                if x != y {
                    ensure(!(le(x, y) && le(y, x)), || {
                        format!("hto {seed}: nesting not antisymmetric at {x},{y}")
                    })?;
                    ensure(ex(x, y) != ex(y, x), || {
                        format!("hto {seed}: exec order not total and antisymmetric at {x},{y}")
                    })?;
                }
                ensure(ex(x, y) == order.leq(v(x), v(y)), || {
                    format!("hto {seed}: ranks disagree with the comparator at {x},{y}")
                })?;
                for z in 0..n {
                    if le(x, y) && le(y, z) {
                        ensure(le(x, z), || format!("hto {seed}: nesting not transitive"))?;
                    }
                    if ex(x, y) && ex(y, z) {
                        ensure(ex(x, z), || {
                            format!("hto {seed}: exec order not transitive")
                        })?;
                    }
                    // forest: the elements above x form a chain
                    if le(x, y) && le(x, z) {
                        ensure(le(y, z) || le(z, y), || {
                            format!("hto {seed}: {y} and {z} above {x} are incomparable")
                        })?;
                    }
                }
            }
        }
    }

    // The read is attributed to the instruction whose preamble issues it
    // (the site) and to every instruction enclosing that site; all of them
    // must satisfy u ⊴ v.
    let (mut reads, mut violations, mut enclosing_ok) = (0usize, 0usize, 0usize);
    let mut first = None;
    for seed in 0..C8_TRACES {
        let cfg = random_cfg(50_000 + seed, C4_MAX_NODES, &EDGE_PROBS, 3);
        let (p, m) = generate_fm_program(&cfg.graph, &cfg.checks);
        let w = wto_of_program(&p);
        let nf = NestingForest::new(&w);
        let opts = RunOptions {
            record_reads: true,
            ..RunOptions::default()
        };
        let r = run::<IntervalState>(cfg.problem(), &p, &m, &opts).map_err(|e| e.to_string())?;
        for rd in r.reads.iter().filter(|rd| rd.slot == Slot::Post) {
            reads += 1;
            let during: Vec<NodeId> = nf.up_chain(rd.site).collect();
            let bad: Vec<NodeId> = during
                .iter()
                .copied()
                .filter(|&v| !exec_order_leq(&w, &nf, rd.node, v))
                .collect();
            if bad.is_empty() {
                continue;
            }
            violations += 1;
            if bad.len() < during.len() {
                enclosing_ok += 1;
            }
            first.get_or_insert_with(|| {
                format!(
                    "trace {seed}: Post[{}] read during Inst[{}] but not {} ⊴ {}",
                    rd.node, bad[0], rd.node, bad[0]
                )
            });
        }
    }
    match first {
        None => Ok(format!(
            "{C8_HTOS} orderings without violations; {reads} Post reads over {C8_TRACES} traces respect the exec order"
        )),
        Some(f) => Err(format!(
            "{violations} of {reads} Post reads violate u ⊴ v ({enclosing_ok} of them hold for some enclosing instruction); first: {f}"
        )),
    }
}

fn sound_for<D: AbstractDomain>(
    cfg: &Cfg,
    seed: u64,
    init: &[Vec<i64>],
) -> Result<(bool, usize), String> {
    let prob = cfg.problem();
    let (p, _) = generate_fm_program(&cfg.graph, &cfg.checks);
    let r = run_reference::<D>(
        prob,
        &wto_of_program(&p),
        &cfg.checks,
        &RunOptions::default(),
    )
    .map_err(|e| format!("seed {seed}: {e}"))?;
    let reached = reachable(&prob, init, C9_STATE_CAP);
    let mut stores = 0;
    for v in cfg.graph.nodes() {
        for s in &reached.pre[v.index()] {
            stores += 1;
            ensure(r.pre[v.index()].contains(s), || {
                format!(
                    "seed {seed} {}: store {s:?} at node {v} is outside Pre",
                    D::NAME
                )
            })?;
        }
        for s in &reached.post[v.index()] {
            ensure(r.post[v.index()].contains(s), || {
                format!(
                    "seed {seed} {}: store {s:?} after node {v} is outside Post",
                    D::NAME
                )
            })?;
        }
        if reached.assert_failed[v.index()] {
            ensure(r.ck.get(v) != Some(true), || {
                format!(
                    "seed {seed} {}: node {v} proven but an assert fails",
                    D::NAME
                )
            })?;
        }
    }
    Ok((reached.truncated, stores))
}

fn c9_soundness() -> Result<String, String> {
    let mut stores = 0;
    let mut truncated = 0;
    for seed in 0..C9_PROGRAMS {
        let cfg = random_cfg(90_000 + seed, C9_MAX_NODES, &EDGE_PROBS, C9_MAX_VARS);
        let init = initial_stores(cfg.vars.len());
        let (t, s) = sound_for::<IntervalState>(&cfg, seed, &init)?;
        sound_for::<ConstState>(&cfg, seed, &init)?;
        stores += s;
        truncated += t as usize;
    }
    Ok(format!(
        "{C9_PROGRAMS} programs, {stores} reached stores contained in both domains ({truncated} searches hit the {C9_STATE_CAP}-state cap)"
    ))
}
