//! The built-in table of checks run by `run-suite`: the refinement, prophecy,
//! stuttering and reachability results for every example, each on a pinned
//! model.

use std::process::ExitCode;
use std::time::Instant;

use auxcheck::catalog::{self, mapping_setup};
use auxcheck::explorer::{self, Options, Verdict};
use auxcheck::expr::Lambda;
use auxcheck::history::check_history_projection;
use auxcheck::prophecy::{check_proph_conditions, new_pset_by_filter};
use auxcheck::stuttering::{check_stutter_runtime_conditions, stutter_constant_condition};
use auxcheck::value::{fcn_set, new_pset, partial_injections, subset_of, SetV, Value};
use auxcheck::ModelConfig;
use serde_json::json;

use crate::BoxError;

/// One observed result: a label, whether it matched the expectation, and
/// the JSON that must not depend on the worker count.
struct Outcome {
    what: String,
    ok: bool,
    json: String,
}

fn verdict(what: &str, v: &Verdict, want_pass: bool) -> Outcome {
    Outcome {
        what: format!("{what} ({} states)", v.states),
        ok: v.is_pass() == want_pass,
        json: v.to_json().to_string(),
    }
}

fn fact(what: String, ok: bool) -> Outcome {
    Outcome {
        json: json!({"what": what, "ok": ok}).to_string(),
        what,
        ok,
    }
}

fn ints(lo: i64, hi: i64) -> Vec<Value> {
    (lo..=hi).map(Value::int).collect()
}

fn atoms(names: &[&str]) -> Vec<Value> {
    names.iter().map(|n| Value::atom(n)).collect()
}

fn refinement(spec: &str, mapping: &str, cfg: &ModelConfig, opts: &Options) -> Result<Outcome, BoxError> {
    let ms = mapping_setup(spec, mapping, cfg)?;
    let v = explorer::check_refinement(&ms.low, &ms.mapping, &ms.high, opts)?;
    Ok(verdict(&format!("{spec} refines {} under {mapping}", ms.high.name()), &v, true))
}

fn minmax() -> ModelConfig {
    ModelConfig::new().substitute("Int", ints(-2, 2))
}

fn snapshot(writers: &[&str], readers: &[&str], max_writes: i64) -> ModelConfig {
    ModelConfig::new()
        .substitute("Readers", atoms(readers))
        .substitute("Writers", atoms(writers))
        .substitute("RegVals", ints(0, 1))
        .constant("InitRegVal", 0)
        .bound("MaxLen", 3)
        .bound("MaxWrites", max_writes)
}

type Check = fn(&Options) -> Result<Vec<Outcome>, BoxError>;

fn minmax_forward(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    Ok(vec![refinement("MinMax1", "to-MinMax2", &minmax(), o)?])
}

fn minmax_history(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = minmax();
    let base = catalog::build("MinMax2", &cfg)?;
    let ext = catalog::build("MinMax2H", &cfg)?;
    let v = check_history_projection(&base, &ext, o)?;
    Ok(vec![
        refinement("MinMax2H", "to-MinMax1", &cfg, o)?,
        verdict("MinMax2H projects onto MinMax2", &v, true),
    ])
}

fn minmax_coarse(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = minmax();
    let a = explorer::explore(&catalog::build("MinMax2H", &cfg)?, o)?;
    let b = explorer::explore(&catalog::build("MinMax2HCoarse", &cfg)?, o)?;
    Ok(vec![fact(
        format!("per-subaction and coarse MinMax2H graphs are equal ({} states)", a.len()),
        a.state_set() == b.state_set() && a.pairs() == b.pairs(),
    )])
}

fn sendint(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = ModelConfig::new().substitute("Int", ints(0, 2));
    let e = catalog::entry("SendInt1")?;
    let s = e.build(&cfg)?;
    let v = explorer::check_action_property(&s, o, &(e.action_prop("OnePrediction")?.build)(&s))?;
    Ok(vec![
        refinement("SendInt1P", "to-SendInt2", &cfg, o)?,
        verdict("SendInt1 one-prediction condition", &v, true),
    ])
}

fn sendset(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = ModelConfig::new().substitute("Data", ints(1, 3));
    let e = catalog::entry("SendSetUndoP")?;
    let s = e.build(&cfg)?;
    let v = explorer::check_invariant(&s, o, &(e.invariant("PType")?.build)(&s))?;
    Ok(vec![
        refinement("SendSetUndoP", "to-SendSet", &cfg, o)?,
        verdict("SendSetUndoP invariant PType", &v, true),
    ])
}

fn sendseq(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = ModelConfig::new().substitute("Data", ints(1, 2)).bound("MaxLen", 3);
    let ps = catalog::entry("SendSeqUndoP")?.prophecy_setup(&cfg)?;
    let v = check_proph_conditions(&ps.base, &ps.shape, &ps.table, o)?;
    Ok(vec![
        verdict("SendSeqUndo prophecy conditions", &v, true),
        refinement("SendSeqUndoP", "to-SendSeq", &cfg, o)?,
    ])
}

fn new_pset_agrees(_: &Options) -> Result<Vec<Outcome>, BoxError> {
    let mut cases = 0usize;
    let mut bad = 0usize;
    for n in 0..=3 {
        for m in 0..=3 {
            for k in 0..=2usize {
                let dom: SetV = ints(1, n).into_iter().collect();
                let dom_p: SetV = ints(1, m).into_iter().collect();
                let pi: SetV = atoms(&["a", "b"][..k]).into_iter().collect();
                let injs = partial_injections(&dom, &dom_p)?;
                let pds = subset_of(&dom)?;
                for p in fcn_set(&dom, &pi)?.iter() {
                    for inj in injs.iter() {
                        for pd in pds.iter() {
                            let (p, inj, pd) = (p.as_fcn()?, inj.as_fcn()?, pd.as_set()?);
                            cases += 1;
                            if new_pset(p, inj, pd, &dom_p, &pi)?
                                != new_pset_by_filter(p, inj, pd, &dom_p, &pi)?
                            {
                                bad += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(vec![fact(format!("NewPSet agrees with filtering on {cases} cases"), bad == 0)])
}

fn hour(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = ModelConfig::new();
    let mut out = vec![refinement("HourS", "to-HourMin", &cfg, o)?];
    let n = explorer::count_states(&catalog::build("HourMin", &cfg)?, o)?;
    out.push(fact(format!("HourMin has {n} states"), n == 1440));
    let hs = catalog::entry("HourS")?.stutter_setup(&cfg)?;
    let snap = catalog::entry("NewLinearSnapshotPS")?;
    let snap_cfg = (snap.defaults)();
    let st = snap.stutter_setup(&snap_cfg)?;
    for (label, sigma, bot, decr) in &hs.constants {
        out.push(fact(label.clone(), stutter_constant_condition(&cfg, sigma, bot, decr)?));
    }
    for (label, sigma, bot, decr) in &st.constants {
        out.push(fact(label.clone(), stutter_constant_condition(&snap_cfg, sigma, bot, decr)?));
    }
    let sigma: SetV = ints(0, 1).into_iter().collect();
    let identity = Lambda::new("j", |j| j);
    out.push(fact(
        "StutterConstantCondition({0,1}, 0, LAMBDA j : j) is false".into(),
        !stutter_constant_condition(&cfg, &sigma, &Value::int(0), &identity)?,
    ));
    Ok(out)
}

fn snapshot_ps(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = snapshot(&["w1", "w2"], &["r1"], 2);
    let e = catalog::entry("NewLinearSnapshotPS")?;
    let ps = e.prophecy_setup(&cfg)?;
    let v1 = check_proph_conditions(&ps.base, &ps.shape, &ps.table, o)?;
    let st = e.stutter_setup(&cfg)?;
    let v2 = check_stutter_runtime_conditions(&st.base, &st.table, o)?;
    Ok(vec![
        verdict("NewLinearSnapshotNxt prophecy conditions", &v1, true),
        verdict("NewLinearSnapshotP stuttering conditions", &v2, true),
        refinement("NewLinearSnapshotPS", "to-LinearSnapshot", &cfg, o)?,
    ])
}

fn afek_h(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = snapshot(&["w1", "w2"], &["r1"], 2);
    Ok(vec![refinement("AfekSimplifiedH", "to-NewLinearSnapshot", &cfg, o)?])
}

fn afek_stale(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = snapshot(&["w1"], &["r1"], 2);
    let e = catalog::entry("AfekSimplifiedHObs")?;
    let s = e.build(&cfg)?;
    let v = explorer::find_trace(&s, o, &(e.target("StaleRead")?.build)(&s))?;
    let steps = v.trace_steps().unwrap_or(usize::MAX);
    let mut out = vec![verdict("AfekSimplifiedHObs reaches StaleRead", &v, false)];
    out.push(fact(format!("stale read trace has {steps} steps"), steps <= 15));
    let ms = mapping_setup("AfekSimplified", "to-LinearSnapshot-naive", &cfg)?;
    let v = explorer::check_refinement(&ms.low, &ms.mapping, &ms.high, o)?;
    out.push(verdict("AfekSimplified does not refine LinearSnapshot naively", &v, false));
    Ok(out)
}

fn afek_long(o: &Options) -> Result<Vec<Outcome>, BoxError> {
    let cfg = snapshot(&["w1", "w2"], &["r1", "r2"], 3);
    Ok(vec![refinement("AfekSimplifiedH", "to-NewLinearSnapshot", &cfg, o)?])
}

const TABLE: [(u32, Check); 11] = [
    (1, minmax_forward),
    (2, minmax_history),
    (3, minmax_coarse),
    (4, sendint),
    (5, sendset),
    (6, sendseq),
    (7, new_pset_agrees),
    (8, hour),
    (9, snapshot_ps),
    (10, afek_h),
    (11, afek_stale),
];

pub fn run(opts: &Options, json_out: bool, determinism: bool, long: bool) -> Result<ExitCode, BoxError> {
    let mut table: Vec<(u32, Check)> = TABLE.to_vec();
    if long {
        table.push((13, afek_long));
    }
    let mut all_ok = true;
    let mut seen = Vec::new();
    for (id, check) in &table {
        let t = Instant::now();
        let outs = check(opts)?;
        let secs = t.elapsed().as_secs_f64();
        for o in &outs {
            all_ok &= o.ok;
            if json_out {
                println!("{}", json!({"check": id, "what": o.what, "ok": o.ok, "result": o.json}));
            } else {
                println!("[{id:>2}] {} {} ({secs:.2}s)", if o.ok { "PASS" } else { "FAIL" }, o.what);
            }
        }
        seen.push(outs.into_iter().map(|o| o.json).collect::<Vec<_>>());
    }
    if determinism {
        let mut same = true;
        for workers in [1, 4] {
            let o = opts.workers(workers);
            for ((_, check), want) in table.iter().zip(&seen) {
                let got: Vec<String> = check(&o)?.into_iter().map(|o| o.json).collect();
                same &= &got == want;
            }
        }
        all_ok &= same;
        let what = "JSON results identical with 1 and 4 workers";
        if json_out {
            println!("{}", json!({"check": 12, "what": what, "ok": same}));
        } else {
            println!("[12] {} {what}", if same { "PASS" } else { "FAIL" });
        }
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
