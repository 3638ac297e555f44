//! Specifications as data: variables, an initial predicate, a disjunctive
//! representation of the next-state action and an optional state constraint.
//!
//! A subaction body is a list of [`Step`]s read left to right like a TLA+
//! conjunction: `Set` assigns a primed variable (or tests it if it is already
//! assigned), `Pick` chooses one from a finite set, `Require` filters. Post-state
//! enumeration is a depth-first walk over these steps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::config::{ConfigError, ModelConfig};
use crate::encode::encode;
use crate::expr::{
    EvalError, EvalErrorKind, EvalResult, Env, Expr, ExprInfo, Name, Scope, VarRef,
};
use crate::value::Value;

/// A total assignment of values to a spec's variables, in declaration order.
pub type State = Arc<[Value]>;

#[derive(Clone)]
pub enum Step {
    Require(Expr),
    /// `x' = e`
    Set(VarRef, Expr),
    /// `x' \in S`
    Pick(VarRef, Expr),
    Unchanged(Vec<VarRef>),
    If(Expr, Vec<Step>, Vec<Step>),
    /// A disjunction inside a subaction.
    Any(Vec<Vec<Step>>),
    /// `\E x \in S : ...` that does not contribute to the context.
    Local(Name, Expr, Vec<Step>),
    Let(Name, Expr, Vec<Step>),
}

pub fn require(e: Expr) -> Step {
    Step::Require(e)
}

pub fn set(v: &VarRef, e: impl Into<Expr>) -> Step {
    Step::Set(v.clone(), e.into())
}

pub fn pick(v: &VarRef, s: impl Into<Expr>) -> Step {
    Step::Pick(v.clone(), s.into())
}

pub fn unchanged<'a, I: IntoIterator<Item = &'a VarRef>>(vs: I) -> Step {
    Step::Unchanged(vs.into_iter().cloned().collect())
}

pub fn when(c: Expr, then: Vec<Step>, otherwise: Vec<Step>) -> Step {
    Step::If(c, then, otherwise)
}

pub fn any<I: IntoIterator<Item = Vec<Step>>>(branches: I) -> Step {
    Step::Any(branches.into_iter().collect())
}

pub fn local(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Vec<Step>) -> Step {
    Step::Local(Arc::from(name), dom, f(crate::expr::bound(name)))
}

pub fn let_step(name: &str, def: Expr, f: impl FnOnce(Expr) -> Vec<Step>) -> Step {
    Step::Let(Arc::from(name), def, f(crate::expr::bound(name)))
}

/// A tree of disjunctions and bounded existentials over named subactions.
#[derive(Clone)]
pub enum DisjRep {
    Leaf { id: Name, body: Vec<Step> },
    Or(Vec<DisjRep>),
    Exists(Name, Expr, Box<DisjRep>),
}

pub fn leaf(id: &str, body: Vec<Step>) -> DisjRep {
    DisjRep::Leaf {
        id: Arc::from(id),
        body,
    }
}

pub fn disj<I: IntoIterator<Item = DisjRep>>(parts: I) -> DisjRep {
    DisjRep::Or(parts.into_iter().collect())
}

pub fn exists_ctx(name: &str, dom: Expr, f: impl FnOnce(Expr) -> DisjRep) -> DisjRep {
    DisjRep::Exists(
        Arc::from(name),
        dom,
        Box::new(f(crate::expr::bound(name))),
    )
}

impl DisjRep {
    /// Rebuilds the tree with every leaf body replaced. The callback sees the
    /// leaf id and its context binders.
    pub fn map_leaves<E>(
        &self,
        f: &mut impl FnMut(&str, &[(Name, Expr)], &[Step]) -> Result<Vec<Step>, E>,
    ) -> Result<DisjRep, E> {
        fn go<E>(
            d: &DisjRep,
            ctx: &mut Vec<(Name, Expr)>,
            f: &mut impl FnMut(&str, &[(Name, Expr)], &[Step]) -> Result<Vec<Step>, E>,
        ) -> Result<DisjRep, E> {
            Ok(match d {
                DisjRep::Leaf { id, body } => DisjRep::Leaf {
                    id: id.clone(),
                    body: f(id, ctx, body)?,
                },
                DisjRep::Or(parts) => DisjRep::Or(
                    parts
                        .iter()
                        .map(|p| go(p, ctx, f))
                        .collect::<Result<_, _>>()?,
                ),
                DisjRep::Exists(n, dom, body) => {
                    ctx.push((n.clone(), dom.clone()));
                    let b = go(body, ctx, f);
                    ctx.pop();
                    DisjRep::Exists(n.clone(), dom.clone(), Box::new(b?))
                }
            })
        }
        go(self, &mut Vec::new(), f)
    }

    fn flatten(&self, ctx: &mut Vec<(Name, Expr)>, out: &mut Vec<Leaf>) {
        match self {
            DisjRep::Leaf { id, body } => out.push(Leaf {
                id: id.clone(),
                context: ctx.clone(),
                body: body.clone(),
            }),
            DisjRep::Or(parts) => {
                for p in parts {
                    p.flatten(ctx, out);
                }
            }
            DisjRep::Exists(n, dom, body) => {
                ctx.push((n.clone(), dom.clone()));
                body.flatten(ctx, out);
                ctx.pop();
            }
        }
    }
}

/// A subaction together with its context `<k; K>`.
#[derive(Clone)]
pub struct Leaf {
    pub id: Name,
    pub context: Vec<(Name, Expr)>,
    pub body: Vec<Step>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("spec `{spec}`: {msg}")]
    Invalid { spec: String, msg: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn invalid(spec: &str, msg: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        spec: spec.to_string(),
        msg: msg.into(),
    }
}

/// One enumerated transition out of a state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Succ {
    pub state: State,
    pub leaf: u32,
    pub env: Env,
    /// False if the state violates the spec's state constraint.
    pub within: bool,
}

/// An evaluation error located at a subaction or at the initial predicate.
#[derive(Debug, Clone, Error)]
#[error("{spec}: evaluating {site}: {err}")]
pub struct SiteError {
    pub spec: String,
    pub site: String,
    pub err: EvalError,
}

pub struct SpecDef {
    name: String,
    vars: Vec<Name>,
    init: Vec<Step>,
    next: DisjRep,
    leaves: Vec<Leaf>,
    constraint: Option<Expr>,
    cfg: Arc<ModelConfig>,
}

impl fmt::Debug for SpecDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpecDef")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .field(
                "leaves",
                &self.leaves.iter().map(|l| l.id.clone()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// Collects variable references for shorthand construction.
pub struct Vars(Vec<Name>);

impl Vars {
    pub fn new() -> Self {
        Vars(Vec::new())
    }

    pub fn from_names<'a, I: IntoIterator<Item = &'a Name>>(names: I) -> Self {
        Vars(names.into_iter().cloned().collect())
    }

    pub fn add(&mut self, name: &str) -> VarRef {
        self.0.push(Arc::from(name));
        VarRef::new(name, self.0.len() - 1)
    }

    pub fn names(&self) -> &[Name] {
        &self.0
    }

    pub fn into_names(self) -> Vec<Name> {
        self.0
    }
}

impl Default for Vars {
    fn default() -> Self {
        Self::new()
    }
}

impl SpecDef {
    pub fn new(
        name: &str,
        vars: Vec<Name>,
        init: Vec<Step>,
        next: DisjRep,
        constraint: Option<Expr>,
        cfg: ModelConfig,
    ) -> Result<SpecDef, SpecError> {
        let mut leaves = Vec::new();
        next.flatten(&mut Vec::new(), &mut leaves);
        let spec = SpecDef {
            name: name.to_string(),
            vars,
            init,
            next,
            leaves,
            constraint,
            cfg: Arc::new(cfg),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), SpecError> {
        let n = &self.name;
        let mut names = BTreeSet::new();
        for v in &self.vars {
            if !names.insert(v.clone()) {
                return Err(invalid(n, format!("variable `{v}` declared twice")));
            }
        }
        let mut ids = BTreeSet::new();
        for l in &self.leaves {
            if !ids.insert(l.id.clone()) {
                return Err(invalid(n, format!("subaction id `{}` used twice", l.id)));
            }
        }
        let mut symbols = BTreeSet::new();
        // initial predicate: unprimed variables denote the new state
        let mut scope = Vec::new();
        self.check_steps(&self.init, &mut scope, true, &mut symbols)
            .map_err(|m| invalid(n, format!("Init: {m}")))?;
        for l in &self.leaves {
            let site = |m: String| invalid(n, format!("subaction `{}`: {m}", l.id));
            let mut scope: Vec<Name> = Vec::new();
            for (b, dom) in &l.context {
                if scope.contains(b) {
                    return Err(site(format!("binder `{b}` shadows another binder")));
                }
                let info = dom.info();
                if !info.primed.is_empty() {
                    return Err(site(format!(
                        "domain of `{b}` reads primed variables; context domains are state expressions"
                    )));
                }
                self.check_info(&info, &scope, &mut symbols).map_err(site)?;
                scope.push(b.clone());
            }
            self.check_steps(&l.body, &mut scope, false, &mut symbols)
                .map_err(site)?;
        }
        if let Some(c) = &self.constraint {
            let info = c.info();
            if !info.primed.is_empty() {
                return Err(invalid(n, "state constraint reads primed variables"));
            }
            self.check_info(&info, &[], &mut symbols)
                .map_err(|m| invalid(n, format!("constraint: {m}")))?;
        }
        for s in &symbols {
            self.cfg.substitution(s)?;
        }
        Ok(())
    }

    fn check_var(&self, v: &VarRef) -> Result<(), String> {
        match self.vars.get(v.index) {
            Some(name) if *name == v.name => Ok(()),
            _ => Err(format!("reference to undeclared variable `{}`", v.name)),
        }
    }

    fn check_info(
        &self,
        info: &ExprInfo,
        scope: &[Name],
        symbols: &mut BTreeSet<String>,
    ) -> Result<(), String> {
        for v in info.vars() {
            self.check_var(v)?;
        }
        for f in &info.free {
            if !scope.iter().any(|s| &**s == f) {
                return Err(format!("identifier `{f}` is not bound"));
            }
        }
        if info.nested_prime {
            return Err("primed variable inside a primed expression".into());
        }
        symbols.extend(info.symbols.iter().cloned());
        Ok(())
    }

    fn check_expr(
        &self,
        e: &Expr,
        scope: &[Name],
        init: bool,
        symbols: &mut BTreeSet<String>,
    ) -> Result<(), String> {
        let info = e.info();
        if init && !info.primed.is_empty() {
            return Err("the initial predicate cannot read primed variables".into());
        }
        self.check_info(&info, scope, symbols)
    }

    fn check_steps(
        &self,
        steps: &[Step],
        scope: &mut Vec<Name>,
        init: bool,
        symbols: &mut BTreeSet<String>,
    ) -> Result<(), String> {
        for s in steps {
            match s {
                Step::Require(e) => self.check_expr(e, scope, init, symbols)?,
                Step::Set(v, e) | Step::Pick(v, e) => {
                    self.check_var(v)?;
                    self.check_expr(e, scope, init, symbols)?;
                }
                Step::Unchanged(vs) => {
                    if init {
                        return Err("UNCHANGED in the initial predicate".into());
                    }
                    for v in vs {
                        self.check_var(v)?;
                    }
                }
                Step::If(c, t, e) => {
                    self.check_expr(c, scope, init, symbols)?;
                    self.check_steps(t, scope, init, symbols)?;
                    self.check_steps(e, scope, init, symbols)?;
                }
                Step::Any(bs) => {
                    for b in bs {
                        self.check_steps(b, scope, init, symbols)?;
                    }
                }
                Step::Local(n, d, body) | Step::Let(n, d, body) => {
                    self.check_expr(d, scope, init, symbols)?;
                    scope.push(n.clone());
                    let r = self.check_steps(body, scope, init, symbols);
                    scope.pop();
                    r?;
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    pub fn var(&self, name: &str) -> Option<VarRef> {
        self.vars
            .iter()
            .position(|v| &**v == name)
            .map(|i| VarRef::new(name, i))
    }

    /// Looks up a variable that must exist.
    pub fn v(&self, name: &str) -> VarRef {
        self.var(name)
            .unwrap_or_else(|| panic!("spec `{}` has no variable `{name}`", self.name))
    }

    /// A reference for a new variable appended after the existing ones.
    pub fn next_var(&self, name: &str) -> VarRef {
        VarRef::new(name, self.vars.len())
    }

    pub fn init_steps(&self) -> &[Step] {
        &self.init
    }

    pub fn next(&self) -> &DisjRep {
        &self.next
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf_index(&self, id: &str) -> Option<usize> {
        self.leaves.iter().position(|l| &*l.id == id)
    }

    pub fn constraint(&self) -> Option<&Expr> {
        self.constraint.as_ref()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn site_err(&self, site: impl Into<String>, err: EvalError) -> SiteError {
        SiteError {
            spec: self.name.clone(),
            site: site.into(),
            err,
        }
    }

    /// All states satisfying the initial predicate and the state constraint,
    /// sorted canonically.
    pub fn enumerate_init(&self) -> Result<Vec<State>, SiteError> {
        let mut out = Vec::new();
        let ex = Exec {
            cfg: &self.cfg,
            pre: &[],
            init: true,
            vars: &self.vars,
        };
        let mut post = vec![None; self.vars.len()];
        let mut conts = vec![&self.init[..]];
        ex.run(&mut conts, &mut post, &mut Env::new(), &mut |s| {
            out.push(s);
            false
        })
        .map_err(|e| self.site_err("Init", e))?;
        let mut kept = Vec::with_capacity(out.len());
        for s in out {
            if self.within(&s).map_err(|e| self.site_err("constraint", e))? {
                kept.push(s);
            }
        }
        kept.sort();
        kept.dedup();
        Ok(kept)
    }

    /// Whether `s` satisfies the state constraint.
    pub fn within(&self, s: &[Value]) -> EvalResult<bool> {
        match &self.constraint {
            None => Ok(true),
            Some(c) => c.eval_bool(&Scope::state(&self.cfg, s), &mut Env::new()),
        }
    }

    /// All binder environments of a leaf's context at `s`, in canonical order.
    pub fn context_envs(&self, leaf: usize, s: &[Value]) -> EvalResult<Vec<Env>> {
        let ctx = &self.leaves[leaf].context;
        let mut out = Vec::new();
        let sc = Scope::state(&self.cfg, s);
        fn go(
            ctx: &[(Name, Expr)],
            sc: &Scope,
            env: &mut Env,
            out: &mut Vec<Env>,
        ) -> EvalResult<()> {
            let Some(((n, dom), rest)) = ctx.split_first() else {
                out.push(env.clone());
                return Ok(());
            };
            let d = dom.eval_set(sc, env)?;
            for x in d.iter() {
                env.push(n.clone(), x.clone());
                let r = go(rest, sc, env, out);
                env.pop();
                r?;
            }
            Ok(())
        }
        go(ctx, &sc, &mut Env::new(), &mut out)?;
        Ok(out)
    }

    /// Post-states of one leaf at `s` under a context environment.
    pub fn leaf_posts(&self, leaf: usize, s: &[Value], env: &Env) -> EvalResult<Vec<State>> {
        let mut out = Vec::new();
        self.walk_leaf(leaf, s, env, &mut |t| {
            out.push(t);
            false
        })?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn walk_leaf(
        &self,
        leaf: usize,
        s: &[Value],
        env: &Env,
        sink: &mut dyn FnMut(State) -> bool,
    ) -> EvalResult<bool> {
        let ex = Exec {
            cfg: &self.cfg,
            pre: s,
            init: false,
            vars: &self.vars,
        };
        let mut post = vec![None; self.vars.len()];
        let mut env = env.clone();
        let mut conts = vec![&self.leaves[leaf].body[..]];
        ex.run(&mut conts, &mut post, &mut env, sink)
    }

    /// `ENABLED A` for a leaf under a context environment.
    pub fn is_enabled(&self, leaf: usize, s: &[Value], env: &Env) -> EvalResult<bool> {
        self.walk_leaf(leaf, s, env, &mut |_| true)
    }

    /// Every `(subaction, context, successor)` triple out of `s`, sorted.
    /// Successors outside the state constraint are included with
    /// `within == false`.
    pub fn successors(&self, s: &[Value]) -> Result<Vec<Succ>, SiteError> {
        let mut out = Vec::new();
        for li in 0..self.leaves.len() {
            let envs = self
                .context_envs(li, s)
                .map_err(|e| self.site_err(format!("context of {}", self.leaves[li].id), e))?;
            for env in envs {
                let posts = self
                    .leaf_posts(li, s, &env)
                    .map_err(|e| self.site_err(self.label(li as u32, &env), e))?;
                for t in posts {
                    let within = self
                        .within(&t)
                        .map_err(|e| self.site_err("constraint", e))?;
                    out.push(Succ {
                        state: t,
                        leaf: li as u32,
                        env: env.clone(),
                        within,
                    });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Human-readable subaction label, e.g. `Undo(S = {"d1"})`.
    pub fn label(&self, leaf: u32, env: &Env) -> String {
        let id = &self.leaves[leaf as usize].id;
        if env.is_empty() {
            id.to_string()
        } else {
            format!("{id}({env})")
        }
    }

    pub fn eval_state_expr(&self, e: &Expr, s: &[Value]) -> EvalResult<Value> {
        e.eval(&Scope::state(&self.cfg, s), &mut Env::new())
    }

    pub fn eval_action_pred(
        &self,
        p: &Expr,
        s: &[Value],
        t: &[Value],
        env: &Env,
    ) -> EvalResult<bool> {
        let post: Vec<Option<Value>> = t.iter().cloned().map(Some).collect();
        let mut env = env.clone();
        p.eval_bool(&Scope::action(&self.cfg, s, &post), &mut env)
    }

    pub fn state_json(&self, s: &[Value]) -> serde_json::Value {
        serde_json::Value::Object(
            self.vars
                .iter()
                .zip(s.iter())
                .map(|(n, v)| (n.to_string(), encode(v)))
                .collect(),
        )
    }

    pub fn show_state(&self, s: &[Value]) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .zip(s.iter())
            .map(|(n, v)| format!("{n} = {v}"))
            .collect();
        parts.join(", ")
    }

    /// Builds a state from `(name, value)` pairs, which must cover every
    /// variable.
    pub fn make_state<'a, I: IntoIterator<Item = (&'a str, Value)>>(
        &self,
        pairs: I,
    ) -> Option<State> {
        let map: BTreeMap<&str, Value> = pairs.into_iter().collect();
        if map.len() != self.vars.len() {
            return None;
        }
        self.vars
            .iter()
            .map(|n| map.get(&**n).cloned())
            .collect::<Option<Vec<_>>>()
            .map(State::from)
    }
}

struct Exec<'a> {
    cfg: &'a ModelConfig,
    pre: &'a [Value],
    init: bool,
    vars: &'a [Name],
}

impl<'a> Exec<'a> {
    fn scope<'b>(&'b self, post: &'b [Option<Value>]) -> Scope<'b> {
        Scope {
            cfg: self.cfg,
            pre: self.pre,
            post: Some(post),
            in_post: self.init,
        }
    }

    /// Runs the remaining steps (innermost continuation last). Returns true
    /// when the sink asked to stop.
    fn run(
        &self,
        conts: &mut Vec<&'a [Step]>,
        post: &mut Vec<Option<Value>>,
        env: &mut Env,
        sink: &mut dyn FnMut(State) -> bool,
    ) -> EvalResult<bool> {
        let Some(top) = conts.pop() else {
            let mut vals = Vec::with_capacity(post.len());
            for (i, v) in post.iter().enumerate() {
                match v {
                    Some(v) => vals.push(v.clone()),
                    None => {
                        return Err(EvalError::new(EvalErrorKind::NotAssigned(
                            self.vars[i].to_string(),
                        )))
                    }
                }
            }
            return Ok(sink(State::from(vals)));
        };
        let r = match top.split_first() {
            None => self.run(conts, post, env, sink),
            Some((step, rest)) => {
                conts.push(rest);
                let r = self.step(step, conts, post, env, sink);
                conts.pop();
                r
            }
        };
        conts.push(top);
        r
    }

    fn assign(
        &self,
        v: &VarRef,
        val: Value,
        conts: &mut Vec<&'a [Step]>,
        post: &mut Vec<Option<Value>>,
        env: &mut Env,
        sink: &mut dyn FnMut(State) -> bool,
    ) -> EvalResult<bool> {
        match &post[v.index] {
            Some(old) => {
                if *old == val {
                    self.run(conts, post, env, sink)
                } else {
                    Ok(false)
                }
            }
            None => {
                post[v.index] = Some(val);
                let r = self.run(conts, post, env, sink);
                post[v.index] = None;
                r
            }
        }
    }

    fn step(
        &self,
        step: &'a Step,
        conts: &mut Vec<&'a [Step]>,
        post: &mut Vec<Option<Value>>,
        env: &mut Env,
        sink: &mut dyn FnMut(State) -> bool,
    ) -> EvalResult<bool> {
        match step {
            Step::Require(e) => {
                if e.eval_bool(&self.scope(post), env)? {
                    self.run(conts, post, env, sink)
                } else {
                    Ok(false)
                }
            }
            Step::Set(v, e) => {
                let val = e
                    .eval(&self.scope(post), env)
                    .map_err(|e| e.within(format!("{}' =", v.name)))?;
                self.assign(v, val, conts, post, env, sink)
            }
            Step::Pick(v, e) => {
                if let Some(cur) = &post[v.index] {
                    let cur = cur.clone();
                    return if e.member(&cur, &self.scope(post), env)? {
                        self.run(conts, post, env, sink)
                    } else {
                        Ok(false)
                    };
                }
                let s = e
                    .eval_set(&self.scope(post), env)
                    .map_err(|e| e.within(format!("{}' \\in", v.name)))?;
                for x in s.iter() {
                    post[v.index] = Some(x.clone());
                    let r = self.run(conts, post, env, sink);
                    post[v.index] = None;
                    if r? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Step::Unchanged(vs) => {
                let mut fresh = Vec::new();
                let mut ok = true;
                for v in vs {
                    let old = &self.pre[v.index];
                    match &post[v.index] {
                        Some(cur) => {
                            if cur != old {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            post[v.index] = Some(old.clone());
                            fresh.push(v.index);
                        }
                    }
                }
                let r = if ok {
                    self.run(conts, post, env, sink)
                } else {
                    Ok(false)
                };
                for i in fresh {
                    post[i] = None;
                }
                r
            }
            Step::If(c, t, e) => {
                let branch = if c.eval_bool(&self.scope(post), env)? {
                    t
                } else {
                    e
                };
                conts.push(branch);
                let r = self.run(conts, post, env, sink);
                conts.pop();
                r
            }
            Step::Any(branches) => {
                for b in branches {
                    conts.push(b);
                    let r = self.run(conts, post, env, sink);
                    conts.pop();
                    if r? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Step::Local(n, dom, body) => {
                let d = dom.eval_set(&self.scope(post), env)?;
                let mark = env.len();
                for x in d.iter() {
                    env.push(n.clone(), x.clone());
                    conts.push(body);
                    let r = self.run(conts, post, env, sink);
                    conts.pop();
                    env.truncate(mark);
                    if r? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Step::Let(n, def, body) => {
                let x = def.eval(&self.scope(post), env)?;
                let mark = env.len();
                env.push(n.clone(), x);
                conts.push(body);
                let r = self.run(conts, post, env, sink);
                conts.pop();
                env.truncate(mark);
                r
            }
        }
    }
}

/// A high-level variable for each high spec variable, as a state expression
/// over the low spec.
#[derive(Clone)]
pub struct RefinementMapping {
    pub name: String,
    pub target: String,
    pub exprs: Vec<(String, Expr)>,
}

impl RefinementMapping {
    pub fn new<'a, I: IntoIterator<Item = (&'a str, Expr)>>(
        name: &str,
        target: &str,
        exprs: I,
    ) -> Self {
        RefinementMapping {
            name: name.to_string(),
            target: target.to_string(),
            exprs: exprs
                .into_iter()
                .map(|(k, e)| (k.to_string(), e))
                .collect(),
        }
    }

    /// Each high variable mapped to the low variable of the same name.
    pub fn identity(name: &str, low: &SpecDef, high: &SpecDef) -> Self {
        RefinementMapping {
            name: name.to_string(),
            target: high.name().to_string(),
            exprs: high
                .vars()
                .iter()
                .filter_map(|n| low.var(n).map(|v| (n.to_string(), v.e())))
                .collect(),
        }
    }

    /// Checks coverage and variable usage, returning the expressions in high
    /// variable order.
    pub fn resolve(&self, low: &SpecDef, high: &SpecDef) -> Result<Vec<Expr>, SpecError> {
        let err = |m: String| {
            invalid(
                low.name(),
                format!("mapping `{}` to `{}`: {m}", self.name, high.name()),
            )
        };
        let mut by_name: BTreeMap<&str, &Expr> = BTreeMap::new();
        for (k, e) in &self.exprs {
            if high.var(k).is_none() {
                return Err(err(format!("`{k}` is not a variable of the target")));
            }
            if by_name.insert(k, e).is_some() {
                return Err(err(format!("`{k}` mapped twice")));
            }
            let info = e.info();
            if !info.primed.is_empty() {
                return Err(err(format!("expression for `{k}` reads primed variables")));
            }
            if let Some(f) = info.free.iter().next() {
                return Err(err(format!("expression for `{k}` uses unbound `{f}`")));
            }
            for v in info.vars() {
                low.check_var(v).map_err(|m| err(format!("`{k}`: {m}")))?;
            }
            for s in &info.symbols {
                low.config().substitution(s)?;
            }
        }
        high.vars()
            .iter()
            .map(|n| {
                by_name
                    .get(&**n)
                    .map(|e| (*e).clone())
                    .ok_or_else(|| err(format!("no expression for high variable `{n}`")))
            })
            .collect()
    }
}

/// Evaluates resolved mapping expressions at a low state.
pub fn map_state(low: &SpecDef, exprs: &[Expr], s: &[Value]) -> EvalResult<State> {
    let mut out = Vec::with_capacity(exprs.len());
    for e in exprs {
        out.push(low.eval_state_expr(e, s)?);
    }
    Ok(State::from(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::*;
    use crate::value::{sentinel, Value};

    fn hour() -> SpecDef {
        let mut vs = Vars::new();
        let h = vs.add("h");
        SpecDef::new(
            "Hour",
            vs.into_names(),
            vec![set(&h, int(0))],
            leaf("Next", vec![set(&h, h.e().add(int(1)).modulo(int(24)))]),
            None,
            ModelConfig::new(),
        )
        .unwrap()
    }

    #[test]
    fn hour_init_and_next() {
        let spec = hour();
        let inits = spec.enumerate_init().unwrap();
        assert_eq!(inits, vec![State::from(vec![Value::Int(0)])]);
        let succ = spec.successors(&inits[0]).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].state[0], Value::Int(1));
        assert_eq!(spec.label(succ[0].leaf, &succ[0].env), "Next");
        let s23 = [Value::Int(23)];
        assert_eq!(spec.successors(&s23).unwrap()[0].state[0], Value::Int(0));
        assert!(spec.is_enabled(0, &s23, &Env::new()).unwrap());
    }

    #[test]
    fn pick_in_init_enumerates() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let z = vs.add("z");
        let cfg = ModelConfig::new().substitute("Int", [Value::Int(0), Value::Int(1)]);
        let spec = SpecDef::new(
            "SendInt2",
            vs.into_names(),
            vec![set(&x, lit(sentinel::not_int())), pick(&z, symbolic("Int"))],
            leaf("Stay", vec![unchanged([&x, &z])]),
            None,
            cfg,
        )
        .unwrap();
        assert_eq!(spec.enumerate_init().unwrap().len(), 2);
    }

    #[test]
    fn unsubstituted_symbol_is_config_error() {
        let mut vs = Vars::new();
        let z = vs.add("z");
        let r = SpecDef::new(
            "S",
            vs.into_names(),
            vec![pick(&z, symbolic("Int"))],
            leaf("Stay", vec![unchanged([&z])]),
            None,
            ModelConfig::new(),
        );
        assert!(matches!(r, Err(SpecError::Config(ConfigError::MissingSubstitution(_)))));
    }

    #[test]
    fn unassigned_variable_is_reported() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let y = vs.add("y");
        let spec = SpecDef::new(
            "S",
            vs.into_names(),
            vec![set(&x, int(0)), set(&y, int(0))],
            leaf("Bad", vec![set(&x, int(1))]),
            None,
            ModelConfig::new(),
        )
        .unwrap();
        let err = spec.successors(&[Value::Int(0), Value::Int(0)]).unwrap_err();
        assert!(matches!(err.err.kind, EvalErrorKind::NotAssigned(_)));
    }

    #[test]
    fn set_on_assigned_variable_tests_equality() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let spec = SpecDef::new(
            "S",
            vs.into_names(),
            vec![set(&x, int(0))],
            disj([
                leaf("Same", vec![set(&x, int(1)), set(&x, int(1))]),
                leaf("Clash", vec![set(&x, int(1)), set(&x, int(2))]),
            ]),
            None,
            ModelConfig::new(),
        )
        .unwrap();
        let succ = spec.successors(&[Value::Int(0)]).unwrap();
        assert_eq!(succ.len(), 1);
        assert!(!spec.is_enabled(1, &[Value::Int(0)], &Env::new()).unwrap());
    }

    #[test]
    fn context_binders_and_labels() {
        let mut vs = Vars::new();
        let y = vs.add("y");
        let spec = SpecDef::new(
            "Undo",
            vs.into_names(),
            vec![set(&y, lit(Value::set([Value::atom("d")])))],
            exists_ctx("S", y.e().powerset(), |s| {
                leaf("Undo", vec![set(&y, y.e().minus(s))])
            }),
            None,
            ModelConfig::new(),
        )
        .unwrap();
        let s0 = spec.enumerate_init().unwrap().remove(0);
        let succ = spec.successors(&s0).unwrap();
        let labels: Vec<String> = succ.iter().map(|m| spec.label(m.leaf, &m.env)).collect();
        assert_eq!(labels.len(), 2);
        assert!(labels.contains(&"Undo(S = {})".to_string()));
        assert!(labels.contains(&"Undo(S = {\"d\"})".to_string()));
    }

    #[test]
    fn construction_rejects_bad_references() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let ghost = VarRef::new("ghost", 1);
        let r = SpecDef::new(
            "S",
            vs.into_names(),
            vec![set(&x, int(0))],
            leaf("A", vec![set(&x, ghost.e())]),
            None,
            ModelConfig::new(),
        );
        assert!(r.is_err());
        let r = SpecDef::new(
            "S",
            vec![Arc::from("x")],
            vec![set(&x, int(0))],
            leaf("A", vec![set(&x, bound("k"))]),
            None,
            ModelConfig::new(),
        );
        assert!(r.is_err());
        let r = SpecDef::new(
            "S",
            vec![Arc::from("x")],
            vec![set(&x, int(0))],
            exists_ctx("k", set_of([x.p()]), |k| leaf("A", vec![set(&x, k)])),
            None,
            ModelConfig::new(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn state_constraint_marks_successors() {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let spec = SpecDef::new(
            "Count",
            vs.into_names(),
            vec![set(&x, int(0))],
            leaf("Inc", vec![set(&x, x.e().add(int(1)))]),
            Some(x.e().le(int(1))),
            ModelConfig::new(),
        )
        .unwrap();
        assert!(spec.successors(&[Value::Int(0)]).unwrap()[0].within);
        assert!(!spec.successors(&[Value::Int(1)]).unwrap()[0].within);
    }
}
