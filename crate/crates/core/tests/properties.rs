//! Properties of successor enumeration, exploration and the auxiliary
//! variable constructions, checked exhaustively on the example models.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use auxcheck::catalog::{self, mapping_setup};
use auxcheck::explorer::{self, explore, find_trace, replay, Options};
use auxcheck::expr::{Env, Scope};
use auxcheck::history::check_projection;
use auxcheck::spec::map_state;
use auxcheck::stuttering::top;
use auxcheck::value::{SetV, Value};
use auxcheck::{ModelConfig, SpecDef, State};
use proptest::prelude::*;

fn opts() -> Options {
    Options::default().workers(2)
}

fn default_spec(name: &str) -> SpecDef {
    catalog::entry(name).unwrap().build_default().unwrap()
}

/// Breadth-first distances computed straight from `successors`, keeping
/// only successors inside the state constraint.
fn distances(spec: &SpecDef) -> BTreeMap<State, usize> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in spec.enumerate_init().unwrap() {
        if spec.within(&s).unwrap() && !dist.contains_key(&s) {
            dist.insert(s.clone(), 0);
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        for m in spec.successors(&s).unwrap() {
            if m.within && !dist.contains_key(&m.state) {
                dist.insert(m.state.clone(), d + 1);
                queue.push_back(m.state);
            }
        }
    }
    dist
}

const SMALL: [&str; 8] = [
    "MinMax1",
    "MinMax2H",
    "SendInt1P",
    "SendSetUndoP",
    "SendSeqUndoP",
    "Hour",
    "HourS",
    "NewLinearSnapshotPS",
];

#[test]
fn successors_are_deterministic_well_formed_and_context_sound() {
    for name in SMALL {
        let spec = default_spec(name);
        let g = explore(&spec, &opts()).unwrap();
        for s in g.state_set() {
            let a = spec.successors(&s).unwrap();
            let b = spec.successors(&s).unwrap();
            assert_eq!(a, b, "{name}");
            for m in &a {
                assert_eq!(m.state.len(), spec.vars().len(), "{name}");
                let ctx = &spec.leaves()[m.leaf as usize].context;
                assert_eq!(m.env.0.len(), ctx.len(), "{name}");
                let mut env = Env::new();
                for ((binder, dom), (bound, v)) in ctx.iter().zip(&m.env.0) {
                    assert_eq!(binder, bound);
                    let d = dom.eval_set(&Scope::state(spec.config(), &s), &mut env).unwrap();
                    assert!(d.contains(v), "{name}: {binder} = {v} outside its domain");
                    env.push(bound.clone(), v.clone());
                }
            }
        }
    }
}

#[test]
fn traces_replay_and_are_shortest() {
    let cases = [("Hour", "h=23"), ("SendSeq", "FullQueue")];
    for (name, target) in cases {
        let e = catalog::entry(name).unwrap();
        let spec = e.build_default().unwrap();
        let t = (e.target(target).unwrap().build)(&spec);
        let v = find_trace(&spec, &opts(), &t).unwrap();
        let trace = v.trace.clone().unwrap();
        replay(&spec, &trace).unwrap();
        let best = distances(&spec)
            .into_iter()
            .filter(|(s, _)| spec.eval_state_expr(&t, s).unwrap() == Value::Bool(true))
            .map(|(_, d)| d)
            .min()
            .unwrap();
        assert_eq!(v.trace_steps(), Some(best), "{name}");
    }
    let v = find_trace(&default_spec("Hour"), &opts(), &(catalog::entry("Hour").unwrap().targets[0].build)(&default_spec("Hour"))).unwrap();
    assert_eq!(v.trace_steps(), Some(23));
}

#[test]
fn invariant_violation_trace_is_shortest() {
    use auxcheck::expr::int;
    let spec = default_spec("Hour");
    let v = explorer::check_invariant(&spec, &opts(), &spec.v("h").e().lt(int(23))).unwrap();
    assert!(!v.is_pass());
    assert_eq!(v.trace_steps(), Some(23));
    replay(&spec, v.trace.as_ref().unwrap()).unwrap();
}

#[test]
fn exploration_matches_a_plain_bfs() {
    for name in SMALL {
        let spec = default_spec(name);
        let g = explore(&spec, &opts()).unwrap();
        let mine: BTreeSet<State> = distances(&spec).into_keys().collect();
        assert_eq!(g.state_set(), mine, "{name}");
    }
}

/// A refines C under `g` after `f` when every step of A maps to a step or
/// stutter of C.
#[test]
fn refinement_composes_along_the_minmax_chain() {
    let cfg = (catalog::entry("MinMax2H").unwrap().defaults)();
    let ab = mapping_setup("MinMax2H", "to-MinMax1", &cfg).unwrap();
    let bc = mapping_setup("MinMax1", "to-MinMax2", &cfg).unwrap();
    for ms in [&ab, &bc] {
        let v = explorer::check_refinement(&ms.low, &ms.mapping, &ms.high, &opts()).unwrap();
        assert!(v.is_pass());
    }
    let f = ab.mapping.resolve(&ab.low, &ab.high).unwrap();
    let g = bc.mapping.resolve(&bc.low, &bc.high).unwrap();
    let compose = |s: &State| map_state(&bc.low, &g, &map_state(&ab.low, &f, s).unwrap()).unwrap();
    let c = &bc.high;
    let c_init: BTreeSet<State> = c.enumerate_init().unwrap().into_iter().collect();
    for s in ab.low.enumerate_init().unwrap() {
        assert!(c_init.contains(&compose(&s)));
    }
    let graph = explore(&ab.low, &opts()).unwrap();
    for (s, t) in graph.pairs() {
        let (cs, ct) = (compose(&s), compose(&t));
        if cs != ct {
            assert!(c.successors(&cs).unwrap().iter().any(|m| m.state == ct));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn worker_count_does_not_change_the_graph(workers in 1usize..=4, which in 0usize..SMALL.len()) {
        let spec = default_spec(SMALL[which]);
        let one = explore(&spec, &Options::default().workers(1)).unwrap();
        let many = explore(&spec, &Options::default().workers(workers)).unwrap();
        prop_assert_eq!(one.state_set(), many.state_set());
        prop_assert_eq!(one.labelled(&spec), many.labelled(&spec));
    }
}

/// Leaf ids with at least one successor at `s`.
fn enabled(spec: &SpecDef, s: &[Value]) -> BTreeSet<String> {
    spec.successors(s)
        .unwrap()
        .iter()
        .map(|m| spec.leaves()[m.leaf as usize].id.to_string())
        .collect()
}

#[test]
fn history_variables_leave_enabledness_alone() {
    for (base, ext) in [("MinMax2", "MinMax2H"), ("AfekSimplified", "AfekSimplifiedH")] {
        let cfg = if base == "MinMax2" {
            (catalog::entry(base).unwrap().defaults)()
        } else {
            ModelConfig::new()
                .substitute("Readers", [Value::atom("r1")])
                .substitute("Writers", [Value::atom("w1")])
                .substitute("RegVals", [Value::int(0), Value::int(1)])
                .constant("InitRegVal", 0)
                .bound("MaxWrites", 2)
        };
        let b = catalog::build(base, &cfg).unwrap();
        let e = catalog::build(ext, &cfg).unwrap();
        let k = b.vars().len();
        for s in explore(&e, &opts()).unwrap().state_set() {
            assert_eq!(enabled(&e, &s), enabled(&b, &s[..k]), "{ext}");
        }
    }
}

#[test]
fn auxiliary_variables_project_onto_their_base() {
    let pairs = [
        ("MinMax2", "MinMax2H"),
        ("SendInt1", "SendInt1P"),
        ("SendSetUndo", "SendSetUndoP"),
        ("SendSeqUndo", "SendSeqUndoP"),
    ];
    for (base, ext) in pairs {
        let cfg = (catalog::entry(ext).unwrap().defaults)();
        let b = catalog::build(base, &cfg).unwrap();
        let e = catalog::build(ext, &cfg).unwrap();
        let v = check_projection(&b, &e, &opts()).unwrap();
        assert!(v.is_pass(), "{ext}: {:?}", v.violation);
    }
}

#[test]
fn stuttering_specs_refine_their_base() {
    for (name, mapping) in [("HourS", "to-Hour"), ("NewLinearSnapshotPS", "to-NewLinearSnapshot")] {
        let cfg = (catalog::entry(name).unwrap().defaults)();
        let ms = mapping_setup(name, mapping, &cfg).unwrap();
        let v = explorer::check_refinement(&ms.low, &ms.mapping, &ms.high, &opts()).unwrap();
        assert!(v.is_pass(), "{name}: {:?}", v.violation);
    }
}

#[test]
fn hour_ticks_after_exactly_59_stuttering_steps() {
    let spec = default_spec("HourS");
    let mut s = spec.enumerate_init().unwrap().remove(0);
    let mut quiet = 0;
    let mut ticks = 0;
    for _ in 0..1440 {
        let succ = spec.successors(&s).unwrap();
        assert_eq!(succ.len(), 1);
        let t = succ[0].state.clone();
        if t[0] == s[0] {
            quiet += 1;
        } else {
            assert_eq!(quiet, 59);
            quiet = 0;
            ticks += 1;
        }
        s = t;
    }
    assert_eq!(ticks, 24);
    assert_eq!(s, spec.enumerate_init().unwrap()[0]);
}

#[test]
fn stuttering_records_stay_in_their_declared_range() {
    let readers: SetV = [Value::atom("r1")].into_iter().collect();
    let reader_sets = auxcheck::value::subset_of(&readers).unwrap();
    let cases: [(&str, Vec<(&str, SetV)>); 2] = [
        ("HourS", vec![("Next", SetV::range(1, 59))]),
        (
            "NewLinearSnapshotPS",
            vec![("BeginRd", SetV::range(0, 1)), ("DoWr", reader_sets)],
        ),
    ];
    for (name, sigmas) in cases {
        let spec = default_spec(name);
        let si = spec.v("s").index;
        for st in explore(&spec, &opts()).unwrap().state_set() {
            let s = &st[si];
            if *s == top() {
                continue;
            }
            let rec = s.as_fcn().unwrap();
            let id = rec.get(&Value::atom("id")).unwrap().as_atom().unwrap().to_string();
            let sigma = &sigmas.iter().find(|(a, _)| *a == id).unwrap_or_else(|| panic!("{name}: id {id}")).1;
            assert!(sigma.contains(rec.get(&Value::atom("val")).unwrap()), "{name}: {s}");
        }
    }
}
