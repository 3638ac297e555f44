//! Stuttering variables.
//!
//! A stuttering variable `s` inserts a bounded number of steps that leave
//! the original variables unchanged, before or after the steps of chosen
//! subactions. It is `top` when no stuttering is in progress and otherwise a
//! record `[id |-> actionId, ctxt |-> context, val |-> v]` where `v` counts
//! down to `bot` through `decr`.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::ModelConfig;
use crate::explorer::{
    check_action_property, check_with, ActionProperty, Checker, ExploreError, ExploreResult,
    Options, Verdict,
};
use crate::expr::{atom, ite, lit, record, EvalError, EvalResult, Expr, Lambda, Name, VarRef};
use crate::spec::{require, set, unchanged, when, SpecDef, SpecError, State, Step};
use crate::value::{SetV, Value};

/// `[top |-> "top"]`
pub fn top() -> Value {
    Value::record([("top", Value::atom("top"))])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Exactly `initVal`-many (counted down to `bot`) steps after `A`.
    Post,
    /// Stuttering steps before `A`, while `enabled` holds.
    Pre,
    /// Like `Post`, but no stuttering at all when `initVal = bot`.
    MayPost,
    /// Like `Pre`, but no stuttering at all when `initVal = bot`.
    MayPre,
}

/// The arguments of one stuttering wrapper.
#[derive(Clone)]
pub struct Stutter {
    pub kind: Kind,
    pub action_id: String,
    pub context: Expr,
    /// `Sigma`, for the runtime condition `initVal \in Sigma`.
    pub sigma: Expr,
    pub bot: Expr,
    pub init_val: Expr,
    pub decr: Lambda,
    /// The `enabled` argument of the Pre variants.
    pub enabled: Option<Expr>,
}

impl Stutter {
    pub fn post(action_id: &str, context: Expr, sigma: Expr, bot: Expr, init_val: Expr, decr: Lambda) -> Self {
        Stutter {
            kind: Kind::Post,
            action_id: action_id.to_string(),
            context,
            sigma,
            bot,
            init_val,
            decr,
            enabled: None,
        }
    }

    pub fn may_post(action_id: &str, context: Expr, sigma: Expr, bot: Expr, init_val: Expr, decr: Lambda) -> Self {
        Stutter {
            kind: Kind::MayPost,
            ..Self::post(action_id, context, sigma, bot, init_val, decr)
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn pre(
        enabled: Expr,
        action_id: &str,
        context: Expr,
        sigma: Expr,
        bot: Expr,
        init_val: Expr,
        decr: Lambda,
    ) -> Self {
        Stutter {
            kind: Kind::Pre,
            enabled: Some(enabled),
            ..Self::post(action_id, context, sigma, bot, init_val, decr)
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn may_pre(
        enabled: Expr,
        action_id: &str,
        context: Expr,
        sigma: Expr,
        bot: Expr,
        init_val: Expr,
        decr: Lambda,
    ) -> Self {
        Stutter {
            kind: Kind::MayPre,
            ..Self::pre(enabled, action_id, context, sigma, bot, init_val, decr)
        }
    }
}

/// How each subaction is wrapped.
#[derive(Clone)]
pub enum Wrap {
    /// `NoStutter(A)`
    Plain,
    Stutter(Stutter),
}

pub type StutterTable = BTreeMap<String, Wrap>;

/// `NoStutter(A) == (s = top) /\ A /\ (s' = s)`
pub fn no_stutter(a: &[Step], s: &VarRef) -> Vec<Step> {
    let mut b = vec![require(s.e().eq(lit(top())))];
    b.extend(a.iter().cloned());
    b.push(set(s, s.e()));
    b
}

fn rec(st: &Stutter, val: Expr) -> Expr {
    record([
        ("id", atom(&st.action_id)),
        ("ctxt", st.context.clone()),
        ("val", val),
    ])
}

fn countdown(s: &VarRef, st: &Stutter) -> Expr {
    s.e().except(atom("val"), st.decr.call(s.e().field("val")))
}

/// The body of the wrapped subaction. `vars` are the original variables.
pub fn wrap(a: &[Step], vars: &[VarRef], s: &VarRef, st: &Stutter) -> Vec<Step> {
    let is_top = s.e().eq(lit(top()));
    let same_id = require(s.e().field("id").eq(atom(&st.action_id)));
    let with = |mut steps: Vec<Step>, tail: Vec<Step>| {
        steps.extend(tail);
        steps
    };
    let pre_else = vec![
        same_id.clone(),
        when(
            s.e().field("val").eq(st.bot.clone()),
            with(
                with(vec![require(s.e().field("ctxt").eq(st.context.clone()))], a.to_vec()),
                vec![set(s, lit(top()))],
            ),
            vec![unchanged(vars), set(s, countdown(s, st))],
        ),
    ];
    let enabled = st.enabled.clone().unwrap_or_else(crate::expr::tt);
    let step = match st.kind {
        Kind::Post => when(
            is_top,
            with(a.to_vec(), vec![set(s, rec(st, st.init_val.clone()))]),
            vec![
                same_id,
                unchanged(vars),
                set(
                    s,
                    ite(s.e().field("val").eq(st.bot.clone()), lit(top()), countdown(s, st)),
                ),
            ],
        ),
        Kind::MayPost => when(
            is_top,
            with(
                a.to_vec(),
                vec![set(
                    s,
                    ite(st.init_val.eq(st.bot.clone()), s.e(), rec(st, st.init_val.clone())),
                )],
            ),
            vec![
                same_id,
                unchanged(vars),
                set(
                    s,
                    ite(
                        st.decr.call(s.e().field("val")).eq(st.bot.clone()),
                        lit(top()),
                        countdown(s, st),
                    ),
                ),
            ],
        ),
        Kind::Pre => when(
            is_top,
            vec![
                require(enabled),
                unchanged(vars),
                set(s, rec(st, st.init_val.clone())),
            ],
            pre_else,
        ),
        Kind::MayPre => when(
            is_top,
            vec![
                require(enabled),
                when(
                    st.init_val.eq(st.bot.clone()),
                    with(a.to_vec(), vec![set(s, s.e())]),
                    vec![
                        unchanged(vars),
                        set(s, rec(st, st.decr.call(st.init_val.clone()))),
                    ],
                ),
            ],
            pre_else,
        ),
    };
    vec![step]
}

fn err(spec: &SpecDef, msg: String) -> SpecError {
    SpecError::Invalid {
        spec: spec.name().to_string(),
        msg: format!("stuttering variable: {msg}"),
    }
}

fn check_table(spec: &SpecDef, table: &StutterTable) -> Result<(), SpecError> {
    let ids: BTreeSet<&str> = spec.leaves().iter().map(|l| &*l.id).collect();
    for k in table.keys() {
        if !ids.contains(k.as_str()) {
            return Err(err(spec, format!("entry for unknown subaction `{k}`")));
        }
    }
    let mut action_ids = BTreeSet::new();
    for l in spec.leaves() {
        match table.get(&*l.id) {
            None => return Err(err(spec, format!("no entry for subaction `{}`", l.id))),
            Some(Wrap::Stutter(st)) => {
                if !action_ids.insert(st.action_id.as_str()) {
                    return Err(err(spec, format!("action id `{}` used twice", st.action_id)));
                }
                if matches!(st.kind, Kind::Pre | Kind::MayPre) && st.enabled.is_none() {
                    return Err(err(spec, format!("`{}` needs an enabled predicate", l.id)));
                }
            }
            Some(Wrap::Plain) => {}
        }
    }
    Ok(())
}

/// Adds stuttering variable `name` to `spec`, wrapping every subaction as
/// the table says. `Init^s` is `Init /\ s = top`.
pub fn attach_stuttering(spec: &SpecDef, name: &str, table: &StutterTable) -> Result<SpecDef, SpecError> {
    if spec.var(name).is_some() {
        return Err(err(spec, format!("`{name}` is already a variable")));
    }
    check_table(spec, table)?;
    let s = spec.next_var(name);
    let vars: Vec<VarRef> = spec.vars().iter().map(|n| spec.v(n)).collect();
    let next = spec.next().map_leaves(&mut |id, _ctx, body: &[Step]| {
        Ok::<_, SpecError>(match &table[id] {
            Wrap::Plain => no_stutter(body, &s),
            Wrap::Stutter(st) => wrap(body, &vars, &s, st),
        })
    })?;
    let mut init = spec.init_steps().to_vec();
    init.push(set(&s, lit(top())));
    let mut names: Vec<Name> = spec.vars().to_vec();
    names.push(s.name.clone());
    SpecDef::new(
        &format!("{}+{name}", spec.name()),
        names,
        init,
        next,
        spec.constraint().cloned(),
        spec.config().clone(),
    )
}

/// Whether every element of `sigma` reaches `bot` by iterating `decr`
/// without leaving `sigma`, computed as the least fixpoint of
/// `R = {bot} \cup {x \in sigma \ R : decr(x) \in R}`.
pub fn stutter_constant_condition(
    cfg: &ModelConfig,
    sigma: &SetV,
    bot: &Value,
    decr: &Lambda,
) -> EvalResult<bool> {
    let mut reached = SetV::from_iter([bot.clone()]);
    loop {
        let mut grown = Vec::new();
        for x in sigma.minus(&reached).iter() {
            if reached.contains(&decr.apply_const(cfg, x)?) {
                grown.push(x.clone());
            }
        }
        if grown.is_empty() {
            break;
        }
        reached = reached.union(&grown.into_iter().collect());
    }
    Ok(reached == *sigma)
}

struct EnabledCheck<'a> {
    spec: &'a SpecDef,
    wrapped: Vec<(usize, &'a Expr)>,
}

impl EnabledCheck<'_> {
    fn fail(&self, what: String, err: EvalError) -> ExploreError {
        ExploreError::Check {
            spec: self.spec.name().to_string(),
            what,
            err,
        }
    }
}

impl Checker for EnabledCheck<'_> {
    fn on_state(&self, s: &State) -> ExploreResult<Option<String>> {
        for &(li, enabled) in &self.wrapped {
            let id = &self.spec.leaves()[li].id;
            let envs = self
                .spec
                .context_envs(li, s)
                .map_err(|e| self.fail(format!("context of {id}"), e))?;
            for env in envs {
                let mut e = env.clone();
                let claimed = enabled
                    .eval_bool(&crate::expr::Scope::state(self.spec.config(), s), &mut e)
                    .map_err(|e| self.fail(format!("enabled of {id}"), e))?;
                let actual = self
                    .spec
                    .is_enabled(li, s, &env)
                    .map_err(|e| self.fail(format!("ENABLED {id}"), e))?;
                if claimed != actual {
                    return Ok(Some(format!(
                        "enabled argument of {} is {claimed} but ENABLED is {actual}",
                        self.spec.label(li as u32, &env)
                    )));
                }
            }
        }
        Ok(None)
    }
}

/// Checks, over the reachable behaviors of the unwrapped `spec`, that every
/// wrapped subaction step has `initVal \in Sigma`, and that the `enabled`
/// argument of each Pre variant always equals `ENABLED A`.
pub fn check_stutter_runtime_conditions(
    spec: &SpecDef,
    table: &StutterTable,
    opts: &Options,
) -> ExploreResult<Verdict> {
    check_table(spec, table)?;
    let mut prop = ActionProperty::new();
    let mut wrapped = Vec::new();
    for (li, l) in spec.leaves().iter().enumerate() {
        if let Wrap::Stutter(st) = &table[&*l.id] {
            prop = prop.on(&l.id, "initVal \\in Sigma", st.init_val.in_(st.sigma.clone()));
            if let Some(e) = &st.enabled {
                wrapped.push((li, e));
            }
        }
    }
    let first = check_action_property(spec, opts, &prop)?;
    if !first.is_pass() || wrapped.is_empty() {
        return Ok(first);
    }
    check_with(spec, opts, &EnabledCheck { spec, wrapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{explore, Status};
    use crate::expr::*;
    use crate::value::Value;

    fn cfg() -> ModelConfig {
        ModelConfig::new()
    }

    #[test]
    fn constant_condition_examples() {
        let sigma = SetV::from_iter([Value::Int(0), Value::Int(1)]);
        let minus_one = Lambda::new("j", |j| j.sub(int(1)));
        assert!(stutter_constant_condition(&cfg(), &sigma, &Value::Int(0), &minus_one).unwrap());
        let id = Lambda::new("j", |j| j);
        assert!(!stutter_constant_condition(&cfg(), &sigma, &Value::Int(0), &id).unwrap());
        let readers = Value::set([Value::atom("r1"), Value::atom("r2")]);
        let subsets = crate::value::subset_of(readers.as_set().unwrap()).unwrap();
        let drop_min = Lambda::new("S", |s| s.without(s.choose_min()));
        assert!(stutter_constant_condition(&cfg(), &subsets, &Value::empty_set(), &drop_min).unwrap());
        // bot outside sigma can never be the whole of sigma
        let plus_one = Lambda::new("j", |j| j.add(int(1)));
        assert!(!stutter_constant_condition(&cfg(), &sigma, &Value::Int(0), &plus_one).unwrap());
    }

    fn counter() -> SpecDef {
        let mut vs = crate::spec::Vars::new();
        let x = vs.add("x");
        SpecDef::new(
            "C",
            vs.into_names(),
            vec![set(&x, int(0))],
            crate::spec::leaf("Inc", vec![set(&x, x.e().add(int(1)).modulo(int(3)))]),
            None,
            cfg(),
        )
        .unwrap()
    }

    fn table(st: Stutter) -> StutterTable {
        let mut t = StutterTable::new();
        t.insert("Inc".into(), Wrap::Stutter(st));
        t
    }

    #[test]
    fn may_post_with_bot_is_plain_step() {
        let spec = counter();
        let st = Stutter::may_post("Inc", atom(""), lit(Value::int_range(0, 2)), int(0), int(0), Lambda::new("j", |j| j.sub(int(1))));
        let ss = attach_stuttering(&spec, "s", &table(st)).unwrap();
        let g = explore(&ss, &Options::default()).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.states.iter().all(|s| s[1] == top()));
    }

    #[test]
    fn post_stutter_counts_down() {
        let spec = counter();
        let st = Stutter::post("Inc", atom(""), lit(Value::int_range(0, 2)), int(0), int(2), Lambda::new("j", |j| j.sub(int(1))));
        let ss = attach_stuttering(&spec, "s", &table(st)).unwrap();
        // each x has one top state and val in {2, 1, 0} after the step
        assert_eq!(explore(&ss, &Options::default()).unwrap().len(), 3 * 4);
    }

    #[test]
    fn pre_stutter_and_wrong_enabled() {
        let spec = counter();
        let x = spec.v("x");
        let mk = |enabled: Expr| {
            Stutter::pre(enabled, "Inc", atom(""), lit(Value::int_range(1, 3)), int(3), int(1), Lambda::new("j", |j| j.add(int(1))))
        };
        let ss = attach_stuttering(&spec, "s", &table(mk(tt()))).unwrap();
        assert_eq!(explore(&ss, &Options::default()).unwrap().len(), 3 * 4);
        assert!(check_stutter_runtime_conditions(&spec, &table(mk(tt())), &Options::default())
            .unwrap()
            .is_pass());
        let v = check_stutter_runtime_conditions(&spec, &table(mk(x.e().lt(int(2)))), &Options::default()).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.trace_steps(), Some(2));
    }

    #[test]
    fn init_val_outside_sigma_fails() {
        let spec = counter();
        let st = Stutter::post("Inc", atom(""), lit(Value::int_range(0, 1)), int(0), int(2), Lambda::new("j", |j| j.sub(int(1))));
        let v = check_stutter_runtime_conditions(&spec, &table(st), &Options::default()).unwrap();
        assert_eq!(v.status, Status::Fail);
    }

    #[test]
    fn duplicate_action_ids_rejected() {
        let mut vs = crate::spec::Vars::new();
        let x = vs.add("x");
        let spec = SpecDef::new(
            "C2",
            vs.into_names(),
            vec![set(&x, int(0))],
            crate::spec::disj([
                crate::spec::leaf("A", vec![set(&x, int(1))]),
                crate::spec::leaf("B", vec![set(&x, int(0))]),
            ]),
            None,
            cfg(),
        )
        .unwrap();
        let st = Stutter::post("Same", atom(""), lit(Value::int_range(0, 1)), int(0), int(1), Lambda::new("j", |j| j.sub(int(1))));
        let mut t = StutterTable::new();
        t.insert("A".into(), Wrap::Stutter(st.clone()));
        t.insert("B".into(), Wrap::Stutter(st));
        assert!(attach_stuttering(&spec, "s", &t).is_err());
    }
}
