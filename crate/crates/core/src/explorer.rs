//! Breadth-first exploration and the checks built on it.
//!
//! Exploration is level-synchronous: every state of the current frontier is
//! expanded (and checked) in parallel, then the results are merged
//! sequentially in frontier order. Because the merge order depends only on
//! discovery order, the explored graph, the first violation found and its
//! trace are the same for every worker count.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::expr::{Env, EvalError, Expr};
use crate::spec::{map_state, RefinementMapping, SiteError, SpecDef, SpecError, State, Succ};
use crate::value::Value;

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Eval(#[from] SiteError),
    #[error("{spec}: {what}: {err}")]
    Check {
        spec: String,
        what: String,
        err: EvalError,
    },
    #[error("state space exceeds the cap of {cap} states")]
    StateCap { cap: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Setup(String),
}

pub type ExploreResult<T> = Result<T, ExploreError>;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub state_cap: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            workers: 0,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

impl Options {
    pub fn workers(mut self, n: usize) -> Self {
        self.workers = n;
        self
    }

    pub fn state_cap(mut self, n: usize) -> Self {
        self.state_cap = n;
        self
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> ExploreResult<R> {
        if self.workers == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| ExploreError::Setup(e.to_string()))?;
        Ok(pool.install(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub state: Json,
    pub action: String,
}

/// Outcome of a check. A failing verdict always carries a trace that starts
/// at an initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub trace: Option<Vec<TraceStep>>,
    pub violation: Option<String>,
    /// Distinct states explored by the check.
    pub states: usize,
}

impl Verdict {
    pub fn pass(states: usize) -> Self {
        Verdict {
            status: Status::Pass,
            trace: None,
            violation: None,
            states,
        }
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }

    /// Number of steps in the trace (one less than its number of states).
    pub fn trace_steps(&self) -> Option<usize> {
        self.trace.as_ref().map(|t| t.len().saturating_sub(1))
    }

    pub fn to_json(&self) -> Json {
        let mut m = serde_json::Map::new();
        m.insert(
            "status".into(),
            json!(match self.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
            }),
        );
        m.insert("states".into(), json!(self.states));
        if let Some(v) = &self.violation {
            m.insert("violation".into(), json!(v));
        }
        if let Some(t) = &self.trace {
            m.insert(
                "trace".into(),
                Json::Array(
                    t.iter()
                        .map(|s| json!({"state": s.state, "action": s.action}))
                        .collect(),
                ),
            );
        }
        Json::Object(m)
    }

    pub fn from_json(j: &Json) -> Option<Verdict> {
        let status = match j.get("status")?.as_str()? {
            "pass" => Status::Pass,
            "fail" => Status::Fail,
            _ => return None,
        };
        let states = j.get("states")?.as_u64()? as usize;
        let violation = match j.get("violation") {
            None => None,
            Some(v) => Some(v.as_str()?.to_string()),
        };
        let trace = match j.get("trace") {
            None => None,
            Some(t) => Some(
                t.as_array()?
                    .iter()
                    .map(|s| {
                        Some(TraceStep {
                            state: s.get("state")?.clone(),
                            action: s.get("action")?.as_str()?.to_string(),
                        })
                    })
                    .collect::<Option<Vec<_>>>()?,
            ),
        };
        Some(Verdict {
            status,
            trace,
            violation,
            states,
        })
    }
}

/// Per-state and per-transition hooks run during exploration. Both are
/// called from worker threads and must be deterministic.
pub trait Checker: Sync {
    /// A message if `s` violates the property.
    fn on_state(&self, _s: &State) -> ExploreResult<Option<String>> {
        Ok(None)
    }

    /// The index and message of the first violating step among the
    /// successors of `s` that lie within the state constraint.
    fn on_steps(&self, _s: &State, _steps: &[Succ]) -> ExploreResult<Option<(usize, String)>> {
        Ok(None)
    }
}

struct NoCheck;
impl Checker for NoCheck {}

/// The reachable state graph.
#[derive(Debug, Clone, Default)]
pub struct StateGraph {
    pub states: Vec<State>,
    pub inits: Vec<u32>,
    /// `(from, leaf, context, to)` in discovery order.
    pub edges: Vec<(u32, u32, Env, u32)>,
    index: FxHashMap<State, u32>,
    parent: Vec<Option<(u32, u32, Env)>>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &[Value]) -> bool {
        self.index.contains_key(s)
    }

    pub fn index_of(&self, s: &[Value]) -> Option<u32> {
        self.index.get(s).copied()
    }

    /// A shortest trace from an initial state to state `i`.
    pub fn trace(&self, spec: &SpecDef, i: u32) -> Vec<TraceStep> {
        trace_to(spec, &self.states, &self.parent, i)
    }

    pub fn state_set(&self) -> BTreeSet<State> {
        self.states.iter().cloned().collect()
    }

    /// Unlabelled transitions.
    pub fn pairs(&self) -> BTreeSet<(State, State)> {
        self.edges
            .iter()
            .map(|(a, _, _, b)| (self.states[*a as usize].clone(), self.states[*b as usize].clone()))
            .collect()
    }

    /// Transitions labelled with subaction id and context.
    pub fn labelled(&self, spec: &SpecDef) -> BTreeSet<(State, String, Env, State)> {
        self.edges
            .iter()
            .map(|(a, l, env, b)| {
                (
                    self.states[*a as usize].clone(),
                    spec.leaves()[*l as usize].id.to_string(),
                    env.clone(),
                    self.states[*b as usize].clone(),
                )
            })
            .collect()
    }
}

struct Found {
    trace: Vec<TraceStep>,
    message: String,
}

struct Run {
    states: usize,
    found: Option<Found>,
    graph: Option<StateGraph>,
}

struct Expanded {
    state_violation: Option<String>,
    succs: Vec<Succ>,
    step_violation: Option<(usize, String)>,
}

fn trace_to(
    spec: &SpecDef,
    states: &[State],
    parent: &[Option<(u32, u32, Env)>],
    mut at: u32,
) -> Vec<TraceStep> {
    let mut rev = Vec::new();
    loop {
        let s = &states[at as usize];
        match &parent[at as usize] {
            None => {
                rev.push(TraceStep {
                    state: spec.state_json(s),
                    action: "Init".into(),
                });
                break;
            }
            Some((p, leaf, env)) => {
                rev.push(TraceStep {
                    state: spec.state_json(s),
                    action: spec.label(*leaf, env),
                });
                at = *p;
            }
        }
    }
    rev.reverse();
    rev
}

fn bfs(spec: &SpecDef, opts: &Options, checker: &dyn Checker, keep_graph: bool) -> ExploreResult<Run> {
    let inits = spec.enumerate_init()?;
    let mut states: Vec<State> = Vec::new();
    let mut parent: Vec<Option<(u32, u32, Env)>> = Vec::new();
    let mut index: FxHashMap<State, u32> = FxHashMap::default();
    let mut edges = Vec::new();
    let mut frontier = Vec::new();
    for s in inits {
        if index.contains_key(&s) {
            continue;
        }
        let id = states.len() as u32;
        index.insert(s.clone(), id);
        states.push(s);
        parent.push(None);
        frontier.push(id);
    }
    if states.len() > opts.state_cap {
        return Err(ExploreError::StateCap {
            cap: opts.state_cap,
        });
    }
    let init_ids = frontier.clone();
    while !frontier.is_empty() {
        let level: Vec<State> = frontier.iter().map(|&i| states[i as usize].clone()).collect();
        let expanded: Vec<ExploreResult<Expanded>> = opts.install(|| {
            level
                .par_iter()
                .map(|s| {
                    let state_violation = checker.on_state(s)?;
                    if state_violation.is_some() {
                        return Ok(Expanded {
                            state_violation,
                            succs: Vec::new(),
                            step_violation: None,
                        });
                    }
                    let mut succs = spec.successors(s)?;
                    succs.retain(|m| m.within);
                    let step_violation = checker.on_steps(s, &succs)?;
                    Ok(Expanded {
                        state_violation: None,
                        succs,
                        step_violation,
                    })
                })
                .collect()
        })?;
        let mut next = Vec::new();
        for (&from, ex) in frontier.iter().zip(expanded) {
            let ex = ex?;
            if let Some(message) = ex.state_violation {
                return Ok(Run {
                    states: states.len(),
                    found: Some(Found {
                        trace: trace_to(spec, &states, &parent, from),
                        message,
                    }),
                    graph: None,
                });
            }
            if let Some((i, message)) = ex.step_violation {
                let m = &ex.succs[i];
                let mut trace = trace_to(spec, &states, &parent, from);
                trace.push(TraceStep {
                    state: spec.state_json(&m.state),
                    action: spec.label(m.leaf, &m.env),
                });
                return Ok(Run {
                    states: states.len(),
                    found: Some(Found { trace, message }),
                    graph: None,
                });
            }
            for m in ex.succs {
                let to = match index.get(&m.state) {
                    Some(&id) => id,
                    None => {
                        let id = states.len() as u32;
                        if states.len() >= opts.state_cap {
                            return Err(ExploreError::StateCap {
                                cap: opts.state_cap,
                            });
                        }
                        index.insert(m.state.clone(), id);
                        states.push(m.state);
                        parent.push(Some((from, m.leaf, m.env.clone())));
                        next.push(id);
                        id
                    }
                };
                if keep_graph {
                    edges.push((from, m.leaf, m.env, to));
                }
            }
        }
        frontier = next;
    }
    let n = states.len();
    let graph = keep_graph.then_some(StateGraph {
        states,
        inits: init_ids,
        edges,
        index,
        parent,
    });
    Ok(Run {
        states: n,
        found: None,
        graph,
    })
}

fn verdict(run: Run) -> Verdict {
    match run.found {
        None => Verdict::pass(run.states),
        Some(f) => Verdict {
            status: Status::Fail,
            trace: Some(f.trace),
            violation: Some(f.message),
            states: run.states,
        },
    }
}

/// The full reachable graph, with every labelled transition.
pub fn explore(spec: &SpecDef, opts: &Options) -> ExploreResult<StateGraph> {
    Ok(bfs(spec, opts, &NoCheck, true)?
        .graph
        .expect("graph requested"))
}

/// Number of reachable states, without keeping transitions.
pub fn count_states(spec: &SpecDef, opts: &Options) -> ExploreResult<usize> {
    Ok(bfs(spec, opts, &NoCheck, false)?.states)
}

/// Runs a custom checker over the reachable graph.
pub fn check_with(spec: &SpecDef, opts: &Options, checker: &dyn Checker) -> ExploreResult<Verdict> {
    Ok(verdict(bfs(spec, opts, checker, false)?))
}

struct Invariant<'a> {
    spec: &'a SpecDef,
    inv: &'a Expr,
    negate: bool,
    what: &'a str,
}

impl Checker for Invariant<'_> {
    fn on_state(&self, s: &State) -> ExploreResult<Option<String>> {
        let v = self
            .spec
            .eval_state_expr(self.inv, s)
            .and_then(|v| v.as_bool().map_err(EvalError::from))
            .map_err(|err| ExploreError::Check {
                spec: self.spec.name().to_string(),
                what: self.what.to_string(),
                err,
            })?;
        Ok((v == self.negate).then(|| {
            if self.negate {
                format!("reached a state satisfying {}", self.inv)
            } else {
                format!("invariant {} violated", self.inv)
            }
        }))
    }
}

/// Checks that `inv` holds in every reachable state. A failure carries a
/// shortest trace to a violating state.
pub fn check_invariant(spec: &SpecDef, opts: &Options, inv: &Expr) -> ExploreResult<Verdict> {
    check_with(
        spec,
        opts,
        &Invariant {
            spec,
            inv,
            negate: false,
            what: "invariant",
        },
    )
}

/// Searches for a reachable state satisfying `target`. Returns a failing
/// verdict with a shortest trace if one exists, a passing one otherwise.
pub fn find_trace(spec: &SpecDef, opts: &Options, target: &Expr) -> ExploreResult<Verdict> {
    check_with(
        spec,
        opts,
        &Invariant {
            spec,
            inv: target,
            negate: true,
            what: "target",
        },
    )
}

/// An action property `[][P]_vars` as a list of named conjuncts. A conjunct
/// bound to a subaction id is `A => P` and may read A's context binders;
/// an unbound one applies to every transition.
#[derive(Clone, Default)]
pub struct ActionProperty {
    pub conjuncts: Vec<(Option<String>, String, Expr)>,
}

impl ActionProperty {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `P` for every transition.
    pub fn always(mut self, name: &str, p: Expr) -> Self {
        self.conjuncts.push((None, name.to_string(), p));
        self
    }

    /// Adds `A => P` for the subaction with id `leaf`.
    pub fn on(mut self, leaf: &str, name: &str, p: Expr) -> Self {
        self.conjuncts
            .push((Some(leaf.to_string()), name.to_string(), p));
        self
    }
}

struct ActionCheck<'a> {
    spec: &'a SpecDef,
    // per leaf: conjuncts that apply to it
    per_leaf: Vec<Vec<(&'a str, &'a Expr)>>,
}

impl Checker for ActionCheck<'_> {
    fn on_steps(&self, s: &State, steps: &[Succ]) -> ExploreResult<Option<(usize, String)>> {
        for (i, m) in steps.iter().enumerate() {
            if m.state == *s {
                continue;
            }
            for (name, p) in &self.per_leaf[m.leaf as usize] {
                let ok = self
                    .spec
                    .eval_action_pred(p, s, &m.state, &m.env)
                    .map_err(|err| ExploreError::Check {
                        spec: self.spec.name().to_string(),
                        what: format!("{name} on {}", self.spec.label(m.leaf, &m.env)),
                        err,
                    })?;
                if !ok {
                    return Ok(Some((
                        i,
                        format!("{name} fails on {}", self.spec.label(m.leaf, &m.env)),
                    )));
                }
            }
        }
        Ok(None)
    }
}

/// Checks `[][P]_vars` over every explored non-stuttering transition.
pub fn check_action_property(
    spec: &SpecDef,
    opts: &Options,
    prop: &ActionProperty,
) -> ExploreResult<Verdict> {
    let mut per_leaf = vec![Vec::new(); spec.leaves().len()];
    for (leaf, name, p) in &prop.conjuncts {
        match leaf {
            None => {
                for v in per_leaf.iter_mut() {
                    v.push((name.as_str(), p));
                }
            }
            Some(id) => {
                let i = spec.leaf_index(id).ok_or_else(|| {
                    ExploreError::Setup(format!(
                        "{}: property `{name}` names unknown subaction `{id}`",
                        spec.name()
                    ))
                })?;
                per_leaf[i].push((name.as_str(), p));
            }
        }
    }
    check_with(spec, opts, &ActionCheck { spec, per_leaf })
}

struct Refinement<'a> {
    low: &'a SpecDef,
    high: &'a SpecDef,
    exprs: Vec<Expr>,
    mapping: &'a str,
}

impl Refinement<'_> {
    fn map(&self, s: &State) -> ExploreResult<State> {
        map_state(self.low, &self.exprs, s).map_err(|err| ExploreError::Check {
            spec: self.low.name().to_string(),
            what: format!("mapping `{}`", self.mapping),
            err,
        })
    }
}

impl Checker for Refinement<'_> {
    fn on_steps(&self, s: &State, steps: &[Succ]) -> ExploreResult<Option<(usize, String)>> {
        if steps.is_empty() {
            return Ok(None);
        }
        let sb = self.map(s)?;
        let mut high: Option<FxHashSet<State>> = None;
        for (i, m) in steps.iter().enumerate() {
            let tb = self.map(&m.state)?;
            if tb == sb {
                continue;
            }
            if high.is_none() {
                high = Some(
                    self.high
                        .successors(&sb)?
                        .into_iter()
                        .map(|m| m.state)
                        .collect(),
                );
            }
            if !high.as_ref().is_some_and(|h| h.contains(&tb)) {
                return Ok(Some((
                    i,
                    format!(
                        "step {} maps to [{}] -> [{}], which is not a step of {}",
                        self.low.label(m.leaf, &m.env),
                        self.high.show_state(&sb),
                        self.high.show_state(&tb),
                        self.high.name()
                    ),
                )));
            }
        }
        Ok(None)
    }
}

/// Checks that every behavior of `low` maps, under `mapping`, to a behavior
/// of `high`: mapped initial states are initial, and every mapped step is a
/// high step or a stutter. The high spec's state constraint is not applied.
pub fn check_refinement(
    low: &SpecDef,
    mapping: &RefinementMapping,
    high: &SpecDef,
    opts: &Options,
) -> ExploreResult<Verdict> {
    let exprs = mapping.resolve(low, high)?;
    let chk = Refinement {
        low,
        high,
        exprs,
        mapping: &mapping.name,
    };
    let high_inits: FxHashSet<State> = high.enumerate_init()?.into_iter().collect();
    let low_inits = low.enumerate_init()?;
    for s in &low_inits {
        let sb = chk.map(s)?;
        if !high_inits.contains(&sb) {
            return Ok(Verdict {
                status: Status::Fail,
                trace: Some(vec![TraceStep {
                    state: low.state_json(s),
                    action: "Init".into(),
                }]),
                violation: Some(format!(
                    "initial state maps to [{}], which is not an initial state of {}",
                    high.show_state(&sb),
                    high.name()
                )),
                states: low_inits.len(),
            });
        }
    }
    check_with(low, opts, &chk)
}

/// Mutual refinement. The state count is the sum over both directions.
pub fn check_equivalence(
    a: &SpecDef,
    map_ab: &RefinementMapping,
    b: &SpecDef,
    map_ba: &RefinementMapping,
    opts: &Options,
) -> ExploreResult<Verdict> {
    let first = check_refinement(a, map_ab, b, opts)?;
    if !first.is_pass() {
        return Ok(first);
    }
    let mut second = check_refinement(b, map_ba, a, opts)?;
    second.states += first.states;
    Ok(second)
}

/// Replays a trace against the spec: the first state must be initial and
/// each later state a successor of the previous one under the named action.
pub fn replay(spec: &SpecDef, trace: &[TraceStep]) -> Result<(), String> {
    let decode_state = |j: &Json| -> Result<State, String> {
        let obj = j.as_object().ok_or("state is not an object")?;
        let mut vals = Vec::new();
        for n in spec.vars() {
            let v = obj.get(&**n).ok_or_else(|| format!("missing variable {n}"))?;
            vals.push(crate::encode::decode(v).map_err(|e| e.to_string())?);
        }
        if obj.len() != spec.vars().len() {
            return Err("extra variables in state".into());
        }
        Ok(State::from(vals))
    };
    let Some(first) = trace.first() else {
        return Err("empty trace".into());
    };
    let mut cur = decode_state(&first.state)?;
    let inits = spec.enumerate_init().map_err(|e| e.to_string())?;
    if !inits.contains(&cur) {
        return Err("trace does not start at an initial state".into());
    }
    for (k, step) in trace.iter().enumerate().skip(1) {
        let next = decode_state(&step.state)?;
        let succs = spec.successors(&cur).map_err(|e| e.to_string())?;
        if !succs
            .iter()
            .any(|m| m.state == next && spec.label(m.leaf, &m.env) == step.action)
        {
            return Err(format!("step {k} ({}) is not a transition", step.action));
        }
        cur = next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::expr::*;
    use crate::spec::*;

    fn counter(modulus: i64) -> SpecDef {
        let mut vs = Vars::new();
        let h = vs.add("h");
        SpecDef::new(
            "Counter",
            vs.into_names(),
            vec![set(&h, int(0))],
            leaf("Next", vec![set(&h, h.e().add(int(1)).modulo(int(modulus)))]),
            None,
            ModelConfig::new(),
        )
        .unwrap()
    }

    #[test]
    fn explores_cycle() {
        let spec = counter(24);
        let g = explore(&spec, &Options::default()).unwrap();
        assert_eq!(g.len(), 24);
        assert_eq!(g.edges.len(), 24);
        assert_eq!(g.inits, vec![0]);
    }

    #[test]
    fn invariant_failure_has_shortest_trace() {
        let spec = counter(24);
        let h = spec.v("h");
        let v = check_invariant(&spec, &Options::default(), &h.e().lt(int(23))).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.trace_steps(), Some(23));
        replay(&spec, v.trace.as_ref().unwrap()).unwrap();
        let ok = check_invariant(&spec, &Options::default(), &h.e().in_(range(int(0), int(23)))).unwrap();
        assert!(ok.is_pass());
        assert_eq!(ok.states, 24);
    }

    #[test]
    fn state_cap_is_enforced() {
        let spec = counter(100);
        let r = count_states(&spec, &Options::default().state_cap(10));
        assert!(matches!(r, Err(ExploreError::StateCap { cap: 10 })));
    }

    #[test]
    fn verdict_json_round_trip() {
        let spec = counter(5);
        let h = spec.v("h");
        let v = find_trace(&spec, &Options::default(), &h.e().eq(int(3))).unwrap();
        let j = v.to_json();
        assert_eq!(Verdict::from_json(&j).unwrap(), v);
        assert_eq!(j["trace"][0]["action"], "Init");
        assert_eq!(j["trace"][3]["state"]["h"], 3);
    }

    #[test]
    fn action_property_skips_stutters() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let spec = SpecDef::new(
            "S",
            vs.into_names(),
            vec![set(&x, int(0))],
            disj([
                leaf("Inc", vec![require(x.e().lt(int(2))), set(&x, x.e().add(int(1)))]),
                leaf("Idle", vec![unchanged([&x])]),
            ]),
            None,
            ModelConfig::new(),
        )
        .unwrap();
        let unchanged_x = ActionProperty::new().on("Idle", "still", x.p().eq(x.e()).not());
        assert!(check_action_property(&spec, &Options::default(), &unchanged_x)
            .unwrap()
            .is_pass());
        let never_moves = ActionProperty::new().always("frozen", x.p().eq(x.e()));
        let v = check_action_property(&spec, &Options::default(), &never_moves).unwrap();
        assert_eq!(v.trace_steps(), Some(1));
    }
}
