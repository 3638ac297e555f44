//! History variables.
//!
//! A history variable `h` is added by conjoining `h = exp_Init` to the
//! initial predicate and `h' = exp_A` to every subaction `A` of a chosen
//! disjunctive representation. As long as `h` never influences the other
//! variables (checked syntactically here) the new spec is equivalent to the
//! old one with `h` hidden.

use std::collections::{BTreeMap, BTreeSet};

use crate::explorer::{
    check_refinement, explore, ExploreError, ExploreResult, Options, Status, TraceStep, Verdict,
};
use crate::expr::{Env, Expr, ExprInfo, Name, VarRef};
use crate::spec::{set, RefinementMapping, SpecDef, SpecError, State, Step};
use crate::value::Value;

/// How to compute a history variable.
#[derive(Clone)]
pub struct HistorySpec {
    pub name: String,
    pub init: Expr,
    /// `exp_A` for every subaction id.
    pub updates: BTreeMap<String, Expr>,
}

impl HistorySpec {
    pub fn new(name: &str, init: Expr) -> Self {
        HistorySpec {
            name: name.to_string(),
            init,
            updates: BTreeMap::new(),
        }
    }

    pub fn on(mut self, leaf: &str, e: Expr) -> Self {
        self.updates.insert(leaf.to_string(), e);
        self
    }
}

fn err(spec: &SpecDef, msg: String) -> SpecError {
    SpecError::Invalid {
        spec: spec.name().to_string(),
        msg: format!("history variable: {msg}"),
    }
}

fn only_vars(
    spec: &SpecDef,
    info: &ExprInfo,
    h: &VarRef,
    what: &str,
) -> Result<(), SpecError> {
    for v in info.vars() {
        let known = spec.var(&v.name).is_some_and(|w| w.index == v.index)
            || (v.name == h.name && v.index == h.index);
        if !known {
            return Err(err(
                spec,
                format!("{what} reads `{}`, which is not a variable of the spec", v.name),
            ));
        }
    }
    Ok(())
}

/// Adds a history variable to `spec`. The new variable comes last.
pub fn attach_history(spec: &SpecDef, hs: &HistorySpec) -> Result<SpecDef, SpecError> {
    if spec.var(&hs.name).is_some() {
        return Err(err(spec, format!("`{}` is already a variable", hs.name)));
    }
    let h = spec.next_var(&hs.name);
    let init_info = hs.init.info();
    only_vars(spec, &init_info, &h, "the initial expression")?;
    if init_info.vars().any(|v| v.name == h.name) {
        return Err(err(spec, "the initial expression reads the history variable".into()));
    }
    if !init_info.primed.is_empty() {
        return Err(err(spec, "the initial expression reads primed variables".into()));
    }
    let ids: BTreeSet<&str> = spec.leaves().iter().map(|l| &*l.id).collect();
    for k in hs.updates.keys() {
        if !ids.contains(k.as_str()) {
            return Err(err(spec, format!("update for unknown subaction `{k}`")));
        }
    }
    let next = spec.next().map_leaves(&mut |id, ctx, body: &[Step]| {
        let e = hs
            .updates
            .get(id)
            .ok_or_else(|| err(spec, format!("no update for subaction `{id}`")))?;
        let info = e.info();
        only_vars(spec, &info, &h, &format!("update for `{id}`"))?;
        if info.primed.iter().any(|v| v.name == h.name) {
            return Err(err(spec, format!("update for `{id}` reads {}'", h.name)));
        }
        let binders: BTreeSet<&str> = ctx.iter().map(|(n, _)| &**n).collect();
        if let Some(f) = info.free.iter().find(|f| !binders.contains(f.as_str())) {
            return Err(err(
                spec,
                format!("update for `{id}` uses `{f}`, which is not a context binder"),
            ));
        }
        let mut b = body.to_vec();
        b.push(set(&h, e.clone()));
        Ok(b)
    })?;
    let mut init = spec.init_steps().to_vec();
    init.push(set(&h, hs.init.clone()));
    let mut vars: Vec<Name> = spec.vars().to_vec();
    vars.push(h.name.clone());
    SpecDef::new(
        &format!("{}+{}", spec.name(), hs.name),
        vars,
        init,
        next,
        spec.constraint().cloned(),
        spec.config().clone(),
    )
}

/// Renames a spec produced by one of the attach functions.
pub fn renamed(spec: SpecDef, name: &str) -> Result<SpecDef, SpecError> {
    SpecDef::new(
        name,
        spec.vars().to_vec(),
        spec.init_steps().to_vec(),
        spec.next().clone(),
        spec.constraint().cloned(),
        spec.config().clone(),
    )
}

/// The erase-auxiliary mapping from an extended spec to its base: each base
/// variable maps to itself.
pub fn erase_mapping(ext: &SpecDef, base: &SpecDef) -> RefinementMapping {
    RefinementMapping::identity(&format!("erase-to-{}", base.name()), ext, base)
}

fn projector(ext: &SpecDef, base: &SpecDef) -> Result<Vec<usize>, SpecError> {
    base.vars()
        .iter()
        .map(|n| {
            ext.var(n).map(|v| v.index).ok_or_else(|| SpecError::Invalid {
                spec: ext.name().to_string(),
                msg: format!("has no variable `{n}` of {}", base.name()),
            })
        })
        .collect()
}

fn project(idx: &[usize], s: &[Value]) -> State {
    idx.iter().map(|&i| s[i].clone()).collect()
}

fn fail(trace: Vec<TraceStep>, msg: String, states: usize) -> Verdict {
    Verdict {
        status: Status::Fail,
        trace: Some(trace),
        violation: Some(msg),
        states,
    }
}

/// Checks that an extended spec projects exactly onto its base:
/// the reachable states and labelled transitions of `ext`, with the
/// auxiliary variables erased, are exactly those of `base`, and `ext`
/// refines `base` under the erase mapping.
pub fn check_projection(base: &SpecDef, ext: &SpecDef, opts: &Options) -> ExploreResult<Verdict> {
    let idx = projector(ext, base)?;
    let gb = explore(base, opts)?;
    let ge = explore(ext, opts)?;
    // states
    let mut seen: BTreeSet<State> = BTreeSet::new();
    for (i, s) in ge.states.iter().enumerate() {
        let p = project(&idx, s);
        if !gb.contains(&p) {
            return Ok(fail(
                ge.trace(ext, i as u32),
                format!("projected state [{}] is not reachable in {}", base.show_state(&p), base.name()),
                ge.len(),
            ));
        }
        seen.insert(p);
    }
    for (i, s) in gb.states.iter().enumerate() {
        if !seen.contains(s) {
            return Ok(fail(
                gb.trace(base, i as u32),
                format!("state of {} has no reachable lift in {}", base.name(), ext.name()),
                ge.len(),
            ));
        }
    }
    // labelled transitions
    let label = |spec: &SpecDef, l: u32, env: &Env| (spec.leaves()[l as usize].id.to_string(), env.clone());
    let mut base_edges: BTreeMap<(State, String, Env, State), u32> = BTreeMap::new();
    for (a, l, env, b) in &gb.edges {
        let (id, env) = label(base, *l, env);
        base_edges
            .entry((gb.states[*a as usize].clone(), id, env, gb.states[*b as usize].clone()))
            .or_insert(*a);
    }
    let mut lifted = BTreeSet::new();
    for (a, l, env, b) in &ge.edges {
        let (id, env) = label(ext, *l, env);
        let key = (
            project(&idx, &ge.states[*a as usize]),
            id,
            env,
            project(&idx, &ge.states[*b as usize]),
        );
        if !base_edges.contains_key(&key) {
            let mut trace = ge.trace(ext, *a);
            trace.push(TraceStep {
                state: ext.state_json(&ge.states[*b as usize]),
                action: ext.label(*l, &key.2),
            });
            return Ok(fail(
                trace,
                format!("transition {} projects to a non-transition of {}", key.1, base.name()),
                ge.len(),
            ));
        }
        lifted.insert(key);
    }
    for (key, from) in &base_edges {
        if !lifted.contains(key) {
            return Ok(fail(
                gb.trace(base, *from),
                format!("transition {} of {} has no lift", key.1, base.name()),
                ge.len(),
            ));
        }
    }
    let r = check_refinement(ext, &erase_mapping(ext, base), base, opts)?;
    if !r.is_pass() {
        return Ok(r);
    }
    Ok(Verdict::pass(ge.len()))
}

/// Projection check for a spec produced by [`attach_history`].
pub fn check_history_projection(
    spec: &SpecDef,
    spec_h: &SpecDef,
    opts: &Options,
) -> ExploreResult<Verdict> {
    if spec_h.vars().len() <= spec.vars().len() {
        return Err(ExploreError::Setup(format!(
            "{} has no variables beyond those of {}",
            spec_h.name(),
            spec.name()
        )));
    }
    check_projection(spec, spec_h, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::expr::*;
    use crate::spec::*;

    fn toggler() -> SpecDef {
        let mut vs = Vars::new();
        let x = vs.add("x");
        SpecDef::new(
            "Toggle",
            vs.into_names(),
            vec![set(&x, int(0))],
            exists_ctx("k", lit(Value::int_range(1, 2)), |k| {
                leaf("Flip", vec![set(&x, k.sub(x.e()).modulo(int(2)))])
            }),
            None,
            ModelConfig::new(),
        )
        .unwrap()
    }

    #[test]
    fn counts_steps() {
        let spec = toggler();
        let h = spec.next_var("n");
        let hs = HistorySpec::new("n", int(0)).on("Flip", ite(h.e().lt(int(3)), h.e().add(int(1)), h.e()));
        let sh = attach_history(&spec, &hs).unwrap();
        assert_eq!(sh.vars().len(), 2);
        let g = explore(&sh, &Options::default()).unwrap();
        // n = 0 only with x = 0, then both values of x for n = 1..3
        assert_eq!(g.len(), 7);
        assert!(check_history_projection(&spec, &sh, &Options::default())
            .unwrap()
            .is_pass());
    }

    #[test]
    fn rejects_primed_history_and_foreign_names() {
        let spec = toggler();
        let h = spec.next_var("h");
        let bad = HistorySpec::new("h", int(0)).on("Flip", h.p());
        assert!(attach_history(&spec, &bad).is_err());
        let bad = HistorySpec::new("h", int(0)).on("Flip", bound("j"));
        assert!(attach_history(&spec, &bad).is_err());
        let ok = HistorySpec::new("h", int(0)).on("Flip", bound("k"));
        assert!(attach_history(&spec, &ok).is_ok());
        let missing = HistorySpec::new("h", int(0));
        assert!(attach_history(&spec, &missing).is_err());
        let ghost = VarRef::new("ghost", 7);
        let bad = HistorySpec::new("h", ghost.e()).on("Flip", int(0));
        assert!(attach_history(&spec, &bad).is_err());
    }

    #[test]
    fn constant_history_projects() {
        let spec = toggler();
        let h = spec.next_var("h");
        let sh = attach_history(&spec, &HistorySpec::new("h", int(0)).on("Flip", h.e())).unwrap();
        let v = check_history_projection(&spec, &sh, &Options::default()).unwrap();
        assert!(v.is_pass());
        assert_eq!(v.states, explore(&spec, &Options::default()).unwrap().len());
    }

    #[test]
    fn detects_history_that_blocks_steps() {
        // a "history" spliced in by hand that disables Flip once it is 1
        let spec = toggler();
        let h = spec.next_var("h");
        let next = spec
            .next()
            .map_leaves(&mut |_, _, body| {
                let mut b = vec![require(h.e().eq(int(0)))];
                b.extend(body.iter().cloned());
                b.push(set(&h, int(1)));
                Ok::<_, SpecError>(b)
            })
            .unwrap();
        let mut init = spec.init_steps().to_vec();
        init.push(set(&h, int(0)));
        let mut vars = spec.vars().to_vec();
        vars.push(h.name.clone());
        let bad = SpecDef::new("Bad", vars, init, next, None, ModelConfig::new()).unwrap();
        let v = check_history_projection(&spec, &bad, &Options::default()).unwrap();
        assert_eq!(v.status, Status::Fail);
    }
}
