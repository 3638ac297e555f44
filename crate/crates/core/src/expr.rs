//! State and action expressions.
//!
//! Expressions are a small first-order AST evaluated against a pre-state, an
//! optional (possibly partial) post-state, a stack of bound identifiers and a
//! model config. Keeping them as data rather than closures lets the
//! auxiliary-variable transformations check which variables an expression
//! reads before accepting it.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::config::ModelConfig;
use crate::value::{self, Fcn, SetV, Value, ValueError};

pub type Name = Arc<str>;

/// A reference to a specification variable by name and slot.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: Name,
    pub index: usize,
}

impl VarRef {
    pub fn new(name: &str, index: usize) -> Self {
        VarRef {
            name: Arc::from(name),
            index,
        }
    }

    /// The unprimed variable as an expression.
    pub fn e(&self) -> Expr {
        Expr::new(Node::Var(self.clone()))
    }

    /// The primed variable `x'`.
    pub fn p(&self) -> Expr {
        Expr::new(Node::Primed(self.clone()))
    }
}

impl fmt::Debug for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mod,
    In,
    NotIn,
    Union,
    Inter,
    Minus,
    SubsetEq,
    Apply,
    Range,
    Append,
    Concat,
    FcnSet,
    PartialInjections,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Domain,
    Powerset,
    BigUnion,
    Len,
    Head,
    Tail,
    SetMin,
    SetMax,
    ChooseMin,
    Card,
    IdFcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comp {
    /// `{x \in S : P}`
    Filter,
    /// `{e : x \in S}`
    Map,
    /// `[x \in S |-> e]`
    Fcn,
}

pub type OpFn = dyn Fn(&[Value]) -> Result<Value, ValueError> + Send + Sync;

/// A named pure operator on values, for definitions that are awkward as
/// expressions (recursive filters, object `Apply` functions, ...).
#[derive(Clone)]
pub struct Op {
    pub name: Name,
    pub f: Arc<OpFn>,
}

impl Op {
    pub fn new(
        name: &str,
        f: impl Fn(&[Value]) -> Result<Value, ValueError> + Send + Sync + 'static,
    ) -> Op {
        Op {
            name: Arc::from(name),
            f: Arc::new(f),
        }
    }

    pub fn call(&self, args: Vec<Expr>) -> Expr {
        Expr::new(Node::Call(self.clone(), args))
    }
}

pub enum Node {
    Lit(Value),
    Var(VarRef),
    Primed(VarRef),
    /// Evaluate the inner expression in the post-state (`e'` for a state
    /// expression `e`).
    InPost(Expr),
    Bound(Name),
    /// A set the model config must substitute (`Int`, `Nat`, ...).
    Symbolic(Name),
    Let(Name, Expr, Expr),
    Not(Expr),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Expr, Expr),
    If(Expr, Expr, Expr),
    Bin(BinOp, Expr, Expr),
    Un(UnOp, Expr),
    SetEnum(Vec<Expr>),
    Tuple(Vec<Expr>),
    Record(Vec<(Name, Expr)>),
    Quant(Quant, Name, Expr, Expr),
    Comp(Comp, Name, Expr, Expr),
    Except(Expr, Expr, Expr),
    Call(Op, Vec<Expr>),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("identifier `{0}` is not bound")]
    Unbound(String),
    #[error("primed variable `{0}'` read before it was assigned")]
    Unassigned(String),
    #[error("`{0}` needs a post-state but none is available")]
    NoPostState(String),
    #[error("symbolic set `{0}` has no substitution in the model config")]
    Unsubstituted(String),
    #[error("variable `{0}` left unassigned")]
    NotAssigned(String),
    #[error("{0}")]
    Other(String),
}

/// An evaluation failure together with the chain of expression nodes (outermost
/// first) that led to it.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub path: Vec<String>,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.path.is_empty() {
            let path: Vec<&str> = self.path.iter().rev().map(String::as_str).collect();
            write!(f, " (at {})", path.join(" > "))?;
        }
        Ok(())
    }
}

impl EvalError {
    pub fn new(kind: EvalErrorKind) -> Self {
        EvalError { kind, path: vec![] }
    }

    pub fn within(mut self, frame: impl Into<String>) -> Self {
        self.path.push(frame.into());
        self
    }
}

impl From<ValueError> for EvalError {
    fn from(e: ValueError) -> Self {
        EvalError::new(EvalErrorKind::Value(e))
    }
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Bound identifiers, innermost last.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Env(pub Vec<(Name, Value)>);

impl Env {
    pub fn new() -> Self {
        Env(Vec::new())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0
            .iter()
            .rev()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }

    pub fn push(&mut self, name: Name, v: Value) {
        self.0.push((name, v));
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.0.truncate(n);
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n} = {v}")?;
        }
        Ok(())
    }
}

/// What an expression may read.
#[derive(Clone, Copy)]
pub struct Scope<'a> {
    pub cfg: &'a ModelConfig,
    pub pre: &'a [Value],
    /// Post-state slots; `None` entries are not yet assigned.
    pub post: Option<&'a [Option<Value>]>,
    /// When set, unprimed variables read the post-state (used for `InPost`
    /// and for initial predicates).
    pub in_post: bool,
}

impl<'a> Scope<'a> {
    pub fn state(cfg: &'a ModelConfig, pre: &'a [Value]) -> Self {
        Scope {
            cfg,
            pre,
            post: None,
            in_post: false,
        }
    }

    pub fn action(cfg: &'a ModelConfig, pre: &'a [Value], post: &'a [Option<Value>]) -> Self {
        Scope {
            cfg,
            pre,
            post: Some(post),
            in_post: false,
        }
    }

    /// Evaluation with no variables at all, for constant expressions.
    pub fn constant(cfg: &'a ModelConfig) -> Self {
        Scope {
            cfg,
            pre: &[],
            post: None,
            in_post: false,
        }
    }

    fn read_post(&self, v: &VarRef) -> EvalResult<Value> {
        let post = self
            .post
            .ok_or_else(|| EvalError::new(EvalErrorKind::NoPostState(format!("{}'", v.name))))?;
        match post.get(v.index) {
            Some(Some(x)) => Ok(x.clone()),
            Some(None) => Err(EvalError::new(EvalErrorKind::Unassigned(v.name.to_string()))),
            None => Err(EvalError::new(EvalErrorKind::Other(format!(
                "variable `{}` is not in this state",
                v.name
            )))),
        }
    }
}

fn other(msg: impl Into<String>) -> EvalError {
    EvalError::new(EvalErrorKind::Other(msg.into()))
}

impl Expr {
    pub fn new(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn as_lit(&self) -> Option<&Value> {
        match self.node() {
            Node::Lit(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self.node(), Node::Lit(Value::Bool(true)))
    }

    fn label(&self) -> String {
        match self.node() {
            Node::Lit(_) => "literal".into(),
            Node::Var(v) => v.name.to_string(),
            Node::Primed(v) => format!("{}'", v.name),
            Node::InPost(_) => "(...)'".into(),
            Node::Bound(n) => n.to_string(),
            Node::Symbolic(n) => n.to_string(),
            Node::Let(n, _, _) => format!("LET {n}"),
            Node::Not(_) => "~".into(),
            Node::And(_) => "/\\".into(),
            Node::Or(_) => "\\/".into(),
            Node::Implies(_, _) => "=>".into(),
            Node::If(_, _, _) => "IF".into(),
            Node::Bin(op, _, _) => format!("{op:?}"),
            Node::Un(op, _) => format!("{op:?}"),
            Node::SetEnum(_) => "{...}".into(),
            Node::Tuple(_) => "<<...>>".into(),
            Node::Record(_) => "[...]".into(),
            Node::Quant(q, n, _, _) => format!("{q:?} {n}"),
            Node::Comp(c, n, _, _) => format!("{c:?} {n}"),
            Node::Except(_, _, _) => "EXCEPT".into(),
            Node::Call(op, _) => op.name.to_string(),
        }
    }

    pub fn eval(&self, sc: &Scope, env: &mut Env) -> EvalResult<Value> {
        self.eval_node(sc, env).map_err(|e| e.within(self.label()))
    }

    pub fn eval_bool(&self, sc: &Scope, env: &mut Env) -> EvalResult<bool> {
        let v = self.eval(sc, env)?;
        v.as_bool().map_err(|e| EvalError::from(e).within(self.label()))
    }

    pub fn eval_set(&self, sc: &Scope, env: &mut Env) -> EvalResult<SetV> {
        match self.eval(sc, env)? {
            Value::Set(s) => Ok(s),
            v => Err(EvalError::from(ValueError::Type {
                expected: "set",
                found: v.to_string(),
            })
            .within(self.label())),
        }
    }

    fn eval_node(&self, sc: &Scope, env: &mut Env) -> EvalResult<Value> {
        Ok(match self.node() {
            Node::Lit(v) => v.clone(),
            Node::Var(v) => {
                if sc.in_post {
                    sc.read_post(v)?
                } else {
                    sc.pre
                        .get(v.index)
                        .cloned()
                        .ok_or_else(|| other(format!("variable `{}` is not in this state", v.name)))?
                }
            }
            Node::Primed(v) => {
                if sc.in_post {
                    return Err(other(format!("`{}'` inside a primed expression", v.name)));
                }
                sc.read_post(v)?
            }
            Node::InPost(e) => {
                if sc.post.is_none() {
                    return Err(EvalError::new(EvalErrorKind::NoPostState(e.to_string())));
                }
                let inner = Scope {
                    in_post: true,
                    ..*sc
                };
                e.eval(&inner, env)?
            }
            Node::Bound(n) => env
                .get(n)
                .cloned()
                .ok_or_else(|| EvalError::new(EvalErrorKind::Unbound(n.to_string())))?,
            Node::Symbolic(n) => Value::Set(
                sc.cfg
                    .substitution(n)
                    .map_err(|_| EvalError::new(EvalErrorKind::Unsubstituted(n.to_string())))?
                    .clone(),
            ),
            Node::Let(n, def, body) => {
                let v = def.eval(sc, env)?;
                env.push(n.clone(), v);
                let r = body.eval(sc, env);
                env.pop();
                r?
            }
            Node::Not(e) => Value::Bool(!e.eval_bool(sc, env)?),
            Node::And(es) => {
                for e in es {
                    if !e.eval_bool(sc, env)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Node::Or(es) => {
                for e in es {
                    if e.eval_bool(sc, env)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Node::Implies(a, b) => Value::Bool(!a.eval_bool(sc, env)? || b.eval_bool(sc, env)?),
            Node::If(c, t, e) => {
                if c.eval_bool(sc, env)? {
                    t.eval(sc, env)?
                } else {
                    e.eval(sc, env)?
                }
            }
            Node::Bin(op, a, b) => self.eval_bin(*op, a, b, sc, env)?,
            Node::Un(op, a) => {
                let v = a.eval(sc, env)?;
                eval_un(*op, &v)?
            }
            Node::SetEnum(es) => {
                let mut items = Vec::with_capacity(es.len());
                for e in es {
                    items.push(e.eval(sc, env)?);
                }
                Value::set(items)
            }
            Node::Tuple(es) => {
                let mut items = Vec::with_capacity(es.len());
                for e in es {
                    items.push(e.eval(sc, env)?);
                }
                Value::seq(items)
            }
            Node::Record(fields) => {
                let mut pairs = Vec::with_capacity(fields.len());
                for (k, e) in fields {
                    pairs.push((Value::Atom(k.clone()), e.eval(sc, env)?));
                }
                Value::fcn(pairs)
            }
            Node::Quant(q, n, dom, body) => {
                let d = dom.eval_set(sc, env)?;
                let want = matches!(q, Quant::Exists);
                let mark = env.len();
                let mut found = !want;
                for x in d.iter() {
                    env.push(n.clone(), x.clone());
                    let r = body.eval_bool(sc, env);
                    env.truncate(mark);
                    if r? == want {
                        found = want;
                        break;
                    }
                }
                Value::Bool(found)
            }
            Node::Comp(c, n, dom, body) => {
                let d = dom.eval_set(sc, env)?;
                let mark = env.len();
                match c {
                    Comp::Filter => {
                        let mut out = Vec::new();
                        for x in d.iter() {
                            env.push(n.clone(), x.clone());
                            let r = body.eval_bool(sc, env);
                            env.truncate(mark);
                            if r? {
                                out.push(x.clone());
                            }
                        }
                        Value::Set(SetV::from_sorted(out))
                    }
                    Comp::Map => {
                        let mut out = Vec::with_capacity(d.len());
                        for x in d.iter() {
                            env.push(n.clone(), x.clone());
                            let r = body.eval(sc, env);
                            env.truncate(mark);
                            out.push(r?);
                        }
                        Value::set(out)
                    }
                    Comp::Fcn => {
                        let mut out = Vec::with_capacity(d.len());
                        for x in d.iter() {
                            env.push(n.clone(), x.clone());
                            let r = body.eval(sc, env);
                            env.truncate(mark);
                            out.push((x.clone(), r?));
                        }
                        Value::Fcn(Fcn::from_sorted(out))
                    }
                }
            }
            Node::Except(f, k, v) => {
                let fv = f.eval(sc, env)?;
                let kv = k.eval(sc, env)?;
                let vv = v.eval(sc, env)?;
                Value::Fcn(fv.as_fcn()?.except(&kv, vv)?)
            }
            Node::Call(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(sc, env)?);
                }
                (op.f)(&vals)?
            }
        })
    }

    fn eval_bin(
        &self,
        op: BinOp,
        a: &Expr,
        b: &Expr,
        sc: &Scope,
        env: &mut Env,
    ) -> EvalResult<Value> {
        if matches!(op, BinOp::In | BinOp::NotIn) {
            let x = a.eval(sc, env)?;
            let m = b.member(&x, sc, env)?;
            return Ok(Value::Bool(m == (op == BinOp::In)));
        }
        let x = a.eval(sc, env)?;
        let y = b.eval(sc, env)?;
        Ok(match op {
            BinOp::Eq => Value::Bool(x == y),
            BinOp::Ne => Value::Bool(x != y),
            BinOp::Lt => Value::Bool(x.as_int()? < y.as_int()?),
            BinOp::Le => Value::Bool(x.as_int()? <= y.as_int()?),
            BinOp::Gt => Value::Bool(x.as_int()? > y.as_int()?),
            BinOp::Ge => Value::Bool(x.as_int()? >= y.as_int()?),
            BinOp::Add => Value::Int(value::checked_add(x.as_int()?, y.as_int()?)?),
            BinOp::Sub => Value::Int(value::checked_sub(x.as_int()?, y.as_int()?)?),
            BinOp::Mod => {
                let d = y.as_int()?;
                if d <= 0 {
                    return Err(other("% needs a positive divisor"));
                }
                Value::Int(x.as_int()?.rem_euclid(d))
            }
            BinOp::Union => Value::Set(x.as_set()?.union(y.as_set()?)),
            BinOp::Inter => Value::Set(x.as_set()?.intersect(y.as_set()?)),
            BinOp::Minus => Value::Set(x.as_set()?.minus(y.as_set()?)),
            BinOp::SubsetEq => Value::Bool(x.as_set()?.is_subset(y.as_set()?)),
            BinOp::Apply => x.apply(&y)?,
            BinOp::Range => Value::Set(SetV::range(x.as_int()?, y.as_int()?)),
            BinOp::Append => Value::Fcn(value::append(x.as_fcn()?, y)?),
            BinOp::Concat => Value::Fcn(value::concat(x.as_fcn()?, y.as_fcn()?)?),
            BinOp::FcnSet => Value::Set(value::fcn_set(x.as_set()?, y.as_set()?)?),
            BinOp::PartialInjections => {
                Value::Set(value::partial_injections(x.as_set()?, y.as_set()?)?)
            }
            BinOp::In | BinOp::NotIn => unreachable!(),
        })
    }

    /// `x \in self`, without enumerating sets that have a direct membership
    /// test.
    pub fn member(&self, x: &Value, sc: &Scope, env: &mut Env) -> EvalResult<bool> {
        let r: EvalResult<bool> = match self.node() {
            Node::Bin(BinOp::FcnSet, d, r) => {
                let d = d.eval_set(sc, env)?;
                let r = r.eval_set(sc, env)?;
                Ok(value::in_fcn_set(x, &d, &r))
            }
            Node::Bin(BinOp::PartialInjections, u, v) => {
                let u = u.eval_set(sc, env)?;
                let v = v.eval_set(sc, env)?;
                Ok(value::is_partial_injection(x, &u, &v))
            }
            Node::Bin(BinOp::Range, lo, hi) => {
                let lo = lo.eval(sc, env)?.as_int()?;
                let hi = hi.eval(sc, env)?.as_int()?;
                Ok(matches!(x, Value::Int(i) if lo <= *i && *i <= hi))
            }
            Node::Un(UnOp::Powerset, s) => {
                let s = s.eval_set(sc, env)?;
                Ok(matches!(x, Value::Set(t) if t.is_subset(&s)))
            }
            _ => {
                let s = self.eval_set(sc, env)?;
                Ok(s.contains(x))
            }
        };
        r.map_err(|e| e.within(self.label()))
    }

    /// Variables, bound identifiers and symbolic sets this expression reads.
    pub fn info(&self) -> ExprInfo {
        let mut info = ExprInfo::default();
        let mut bound = Vec::new();
        self.collect(&mut info, &mut bound, false);
        info
    }

    fn collect(&self, info: &mut ExprInfo, bound: &mut Vec<Name>, in_post: bool) {
        let sub = |e: &Expr, info: &mut ExprInfo, bound: &mut Vec<Name>| {
            e.collect(info, bound, in_post)
        };
        match self.node() {
            Node::Lit(_) => {}
            Node::Var(v) => {
                if in_post {
                    info.primed.insert(v.clone());
                } else {
                    info.unprimed.insert(v.clone());
                }
            }
            Node::Primed(v) => {
                info.primed.insert(v.clone());
                if in_post {
                    info.nested_prime = true;
                }
            }
            Node::InPost(e) => e.collect(info, bound, true),
            Node::Bound(n) => {
                if !bound.iter().any(|b| b == n) {
                    info.free.insert(n.to_string());
                }
            }
            Node::Symbolic(n) => {
                info.symbols.insert(n.to_string());
            }
            Node::Let(n, d, b) | Node::Quant(_, n, d, b) | Node::Comp(_, n, d, b) => {
                sub(d, info, bound);
                bound.push(n.clone());
                sub(b, info, bound);
                bound.pop();
            }
            Node::Not(e) | Node::Un(_, e) => sub(e, info, bound),
            Node::And(es) | Node::Or(es) | Node::SetEnum(es) | Node::Tuple(es) => {
                for e in es {
                    sub(e, info, bound);
                }
            }
            Node::Call(_, es) => {
                for e in es {
                    sub(e, info, bound);
                }
            }
            Node::Record(fs) => {
                for (_, e) in fs {
                    sub(e, info, bound);
                }
            }
            Node::Implies(a, b) | Node::Bin(_, a, b) => {
                sub(a, info, bound);
                sub(b, info, bound);
            }
            Node::If(a, b, c) | Node::Except(a, b, c) => {
                sub(a, info, bound);
                sub(b, info, bound);
                sub(c, info, bound);
            }
        }
    }
}

/// Syntactic summary of an expression.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExprInfo {
    pub unprimed: BTreeSet<VarRef>,
    pub primed: BTreeSet<VarRef>,
    /// Identifiers used but not bound inside the expression.
    pub free: BTreeSet<String>,
    pub symbols: BTreeSet<String>,
    /// A primed variable occurs inside an already primed expression.
    pub nested_prime: bool,
}

impl ExprInfo {
    pub fn merge(&mut self, other: ExprInfo) {
        self.unprimed.extend(other.unprimed);
        self.primed.extend(other.primed);
        self.free.extend(other.free);
        self.symbols.extend(other.symbols);
        self.nested_prime |= other.nested_prime;
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarRef> {
        self.unprimed.iter().chain(self.primed.iter())
    }
}

fn eval_un(op: UnOp, v: &Value) -> EvalResult<Value> {
    Ok(match op {
        UnOp::Domain => Value::Set(v.as_fcn()?.domain()),
        UnOp::Powerset => Value::Set(value::subset_of(v.as_set()?)?),
        UnOp::BigUnion => {
            let mut acc = SetV::empty();
            for s in v.as_set()?.iter() {
                acc = acc.union(s.as_set()?);
            }
            Value::Set(acc)
        }
        UnOp::Len => Value::Int(value::len(v.as_fcn()?)? as i64),
        UnOp::Head => value::head(v.as_fcn()?)?,
        UnOp::Tail => Value::Fcn(value::tail(v.as_fcn()?)?),
        UnOp::SetMin => Value::Int(value::set_min(v.as_set()?)?),
        UnOp::SetMax => Value::Int(value::set_max(v.as_set()?)?),
        UnOp::ChooseMin => v
            .as_set()?
            .first()
            .cloned()
            .ok_or(ValueError::Empty {
                op: "CHOOSE",
                what: "set",
            })?,
        UnOp::Card => Value::Int(v.as_set()?.len() as i64),
        UnOp::IdFcn => Value::Fcn(value::id_fcn(v.as_set()?)),
    })
}

// ---------------------------------------------------------------------------
// Construction helpers.

pub fn lit(v: impl Into<Value>) -> Expr {
    Expr::new(Node::Lit(v.into()))
}

pub fn int(i: i64) -> Expr {
    lit(Value::Int(i))
}

pub fn atom(s: &str) -> Expr {
    lit(Value::atom(s))
}

pub fn tt() -> Expr {
    lit(Value::Bool(true))
}

pub fn ff() -> Expr {
    lit(Value::Bool(false))
}

pub fn bound(name: &str) -> Expr {
    Expr::new(Node::Bound(Arc::from(name)))
}

pub fn symbolic(name: &str) -> Expr {
    Expr::new(Node::Symbolic(Arc::from(name)))
}

pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
    Expr::new(Node::If(c, t, e))
}

pub fn and<I: IntoIterator<Item = Expr>>(es: I) -> Expr {
    Expr::new(Node::And(es.into_iter().collect()))
}

pub fn or<I: IntoIterator<Item = Expr>>(es: I) -> Expr {
    Expr::new(Node::Or(es.into_iter().collect()))
}

pub fn set_of<I: IntoIterator<Item = Expr>>(es: I) -> Expr {
    Expr::new(Node::SetEnum(es.into_iter().collect()))
}

pub fn tuple<I: IntoIterator<Item = Expr>>(es: I) -> Expr {
    Expr::new(Node::Tuple(es.into_iter().collect()))
}

pub fn record<'a, I: IntoIterator<Item = (&'a str, Expr)>>(fields: I) -> Expr {
    Expr::new(Node::Record(
        fields.into_iter().map(|(k, e)| (Arc::from(k), e)).collect(),
    ))
}

pub fn let_in(name: &str, def: Expr, body: Expr) -> Expr {
    Expr::new(Node::Let(Arc::from(name), def, body))
}

fn binder<F: FnOnce(Expr) -> Expr>(name: &str, f: F) -> (Name, Expr) {
    (Arc::from(name), f(bound(name)))
}

pub fn forall(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Expr) -> Expr {
    let (n, b) = binder(name, f);
    Expr::new(Node::Quant(Quant::Forall, n, dom, b))
}

pub fn exists(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Expr) -> Expr {
    let (n, b) = binder(name, f);
    Expr::new(Node::Quant(Quant::Exists, n, dom, b))
}

pub fn filter(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Expr) -> Expr {
    let (n, b) = binder(name, f);
    Expr::new(Node::Comp(Comp::Filter, n, dom, b))
}

pub fn map_set(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Expr) -> Expr {
    let (n, b) = binder(name, f);
    Expr::new(Node::Comp(Comp::Map, n, dom, b))
}

pub fn fcn(name: &str, dom: Expr, f: impl FnOnce(Expr) -> Expr) -> Expr {
    let (n, b) = binder(name, f);
    Expr::new(Node::Comp(Comp::Fcn, n, dom, b))
}

/// `e'` for a state expression `e`.
pub fn primed(e: Expr) -> Expr {
    Expr::new(Node::InPost(e))
}

pub fn empty_set() -> Expr {
    lit(Value::empty_set())
}

pub fn empty_fcn() -> Expr {
    lit(Value::empty_fcn())
}

pub fn range(lo: Expr, hi: Expr) -> Expr {
    Expr::new(Node::Bin(BinOp::Range, lo, hi))
}

pub fn fcn_set(dom: Expr, rng: Expr) -> Expr {
    Expr::new(Node::Bin(BinOp::FcnSet, dom, rng))
}

pub fn partial_injections(u: Expr, v: Expr) -> Expr {
    Expr::new(Node::Bin(BinOp::PartialInjections, u, v))
}

/// A one-argument operator written as an expression over a bound parameter,
/// like TLA+'s `LAMBDA x : e`.
#[derive(Clone)]
pub struct Lambda {
    pub param: Name,
    pub body: Expr,
}

impl Lambda {
    pub fn new(param: &str, f: impl FnOnce(Expr) -> Expr) -> Lambda {
        Lambda {
            param: Arc::from(param),
            body: f(bound(param)),
        }
    }

    pub fn call(&self, arg: Expr) -> Expr {
        Expr::new(Node::Let(self.param.clone(), arg, self.body.clone()))
    }

    /// Applies the lambda to a value in a constant context.
    pub fn apply_const(&self, cfg: &ModelConfig, arg: &Value) -> EvalResult<Value> {
        self.call(lit(arg.clone()))
            .eval(&Scope::constant(cfg), &mut Env::new())
    }

    /// What the body reads, with the parameter treated as bound.
    pub fn info(&self) -> ExprInfo {
        let mut info = self.body.info();
        info.free.remove(&*self.param);
        info
    }
}

macro_rules! bin_methods {
    ($($name:ident => $op:ident),* $(,)?) => {
        impl Expr {
            $(
                pub fn $name(&self, other: impl Into<Expr>) -> Expr {
                    Expr::new(Node::Bin(BinOp::$op, self.clone(), other.into()))
                }
            )*
        }
    };
}

bin_methods! {
    eq => Eq, ne => Ne, lt => Lt, le => Le, gt => Gt, ge => Ge,
    add => Add, sub => Sub, modulo => Mod,
    in_ => In, not_in => NotIn,
    union => Union, inter => Inter, minus => Minus, subset_eq => SubsetEq,
    apply => Apply, append => Append, concat => Concat,
}

macro_rules! un_methods {
    ($($name:ident => $op:ident),* $(,)?) => {
        impl Expr {
            $(
                pub fn $name(&self) -> Expr {
                    Expr::new(Node::Un(UnOp::$op, self.clone()))
                }
            )*
        }
    };
}

un_methods! {
    domain => Domain, powerset => Powerset, big_union => BigUnion,
    len => Len, head => Head, tail => Tail,
    set_min => SetMin, set_max => SetMax, choose_min => ChooseMin,
    card => Card, id_fcn => IdFcn,
}

impl Expr {
    pub fn not(&self) -> Expr {
        Expr::new(Node::Not(self.clone()))
    }

    pub fn and(&self, other: impl Into<Expr>) -> Expr {
        and([self.clone(), other.into()])
    }

    pub fn or(&self, other: impl Into<Expr>) -> Expr {
        or([self.clone(), other.into()])
    }

    pub fn implies(&self, other: impl Into<Expr>) -> Expr {
        Expr::new(Node::Implies(self.clone(), other.into()))
    }

    /// `[self EXCEPT ![k] = v]`
    pub fn except(&self, k: impl Into<Expr>, v: impl Into<Expr>) -> Expr {
        Expr::new(Node::Except(self.clone(), k.into(), v.into()))
    }

    /// Record field access `self.name`.
    pub fn field(&self, name: &str) -> Expr {
        self.apply(atom(name))
    }

    /// `self \cup {x}`
    pub fn with(&self, x: impl Into<Expr>) -> Expr {
        self.union(set_of([x.into()]))
    }

    /// `self \ {x}`
    pub fn without(&self, x: impl Into<Expr>) -> Expr {
        self.minus(set_of([x.into()]))
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Self {
        lit(v)
    }
}

impl From<&VarRef> for Expr {
    fn from(v: &VarRef) -> Self {
        v.e()
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Self {
        int(i)
    }
}

impl From<&str> for Expr {
    fn from(s: &str) -> Self {
        atom(s)
    }
}

impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Self {
        e.clone()
    }
}

// ---------------------------------------------------------------------------
// Printing, TLA+-flavoured. Used in diagnostics only.

fn bin_sym(op: BinOp) -> &'static str {
    match op {
        BinOp::Eq => "=",
        BinOp::Ne => "#",
        BinOp::Lt => "<",
        BinOp::Le => "=<",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mod => "%",
        BinOp::In => "\\in",
        BinOp::NotIn => "\\notin",
        BinOp::Union => "\\cup",
        BinOp::Inter => "\\cap",
        BinOp::Minus => "\\",
        BinOp::SubsetEq => "\\subseteq",
        BinOp::Apply => "",
        BinOp::Range => "..",
        BinOp::Append => "Append",
        BinOp::Concat => "\\o",
        BinOp::FcnSet => "->",
        BinOp::PartialInjections => "PartialInjections",
    }
}

fn comma_list(f: &mut fmt::Formatter<'_>, es: &[Expr], sep: &str) -> fmt::Result {
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Lit(v) => write!(f, "{v}"),
            Node::Var(v) => write!(f, "{}", v.name),
            Node::Primed(v) => write!(f, "{}'", v.name),
            Node::InPost(e) => write!(f, "({e})'"),
            Node::Bound(n) | Node::Symbolic(n) => write!(f, "{n}"),
            Node::Let(n, d, b) => write!(f, "LET {n} == {d} IN {b}"),
            Node::Not(e) => write!(f, "~({e})"),
            Node::And(es) => {
                write!(f, "(")?;
                comma_list(f, es, " /\\ ")?;
                write!(f, ")")
            }
            Node::Or(es) => {
                write!(f, "(")?;
                comma_list(f, es, " \\/ ")?;
                write!(f, ")")
            }
            Node::Implies(a, b) => write!(f, "({a} => {b})"),
            Node::If(c, t, e) => write!(f, "IF {c} THEN {t} ELSE {e}"),
            Node::Bin(BinOp::Apply, a, b) => write!(f, "{a}[{b}]"),
            Node::Bin(BinOp::FcnSet, a, b) => write!(f, "[{a} -> {b}]"),
            Node::Bin(op @ (BinOp::Append | BinOp::PartialInjections), a, b) => {
                write!(f, "{}({a}, {b})", bin_sym(*op))
            }
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", bin_sym(*op)),
            Node::Un(op, e) => write!(f, "{op:?}({e})"),
            Node::SetEnum(es) => {
                write!(f, "{{")?;
                comma_list(f, es, ", ")?;
                write!(f, "}}")
            }
            Node::Tuple(es) => {
                write!(f, "<<")?;
                comma_list(f, es, ", ")?;
                write!(f, ">>")
            }
            Node::Record(fs) => {
                write!(f, "[")?;
                for (i, (k, e)) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} |-> {e}")?;
                }
                write!(f, "]")
            }
            Node::Quant(q, n, d, b) => {
                let sym = if *q == Quant::Forall { "\\A" } else { "\\E" };
                write!(f, "({sym} {n} \\in {d} : {b})")
            }
            Node::Comp(Comp::Filter, n, d, b) => write!(f, "{{{n} \\in {d} : {b}}}"),
            Node::Comp(Comp::Map, n, d, b) => write!(f, "{{{b} : {n} \\in {d}}}"),
            Node::Comp(Comp::Fcn, n, d, b) => write!(f, "[{n} \\in {d} |-> {b}]"),
            Node::Except(g, k, v) => write!(f, "[{g} EXCEPT ![{k}] = {v}]"),
            Node::Call(op, args) => {
                write!(f, "{}(", op.name)?;
                comma_list(f, args, ", ")?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::sentinel;

    fn cfg() -> ModelConfig {
        ModelConfig::new().substitute("Int", [Value::Int(0), Value::Int(1)])
    }

    fn eval_at(e: &Expr, pre: &[Value]) -> EvalResult<Value> {
        e.eval(&Scope::state(&cfg(), pre), &mut Env::new())
    }

    #[test]
    fn min_bar_mapping() {
        let y = VarRef::new("y", 0);
        let min_bar = ite(
            y.e().eq(empty_set()),
            lit(sentinel::infinity()),
            y.e().set_min(),
        );
        let pre = [Value::set([Value::Int(2), Value::Int(5)])];
        assert_eq!(eval_at(&min_bar, &pre).unwrap(), Value::Int(2));
        assert_eq!(
            eval_at(&min_bar, &[Value::empty_set()]).unwrap(),
            sentinel::infinity()
        );
    }

    #[test]
    fn stuttering_pair_predicate() {
        let x = VarRef::new("x", 0);
        let pre = [Value::Int(3)];
        let post = [Some(Value::Int(3))];
        let c = cfg();
        let sc = Scope::action(&c, &pre, &post);
        assert!(x.p().eq(x.e()).eval_bool(&sc, &mut Env::new()).unwrap());
    }

    #[test]
    fn apply_on_non_function_reports_path() {
        let x = VarRef::new("x", 0);
        let e = ite(tt(), x.e().apply(int(1)), int(0));
        let err = eval_at(&e, &[Value::Int(4)]).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Value(ValueError::Type { .. })));
        let msg = err.to_string();
        assert!(msg.contains("IF > Apply"), "{msg}");
    }

    #[test]
    fn unsubstituted_symbol() {
        let e = symbolic("Nat");
        let err = eval_at(&e, &[]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::Unsubstituted("Nat".into()));
        assert_eq!(eval_at(&symbolic("Int"), &[]).unwrap().as_set().unwrap().len(), 2);
    }

    #[test]
    fn quantifiers_and_comprehensions() {
        let s = lit(Value::int_range(1, 4));
        assert_eq!(
            eval_at(&exists("i", s.clone(), |i| i.eq(int(3))), &[]).unwrap(),
            Value::Bool(true)
        );
        assert_eq!(
            eval_at(&forall("i", s.clone(), |i| i.lt(int(4))), &[]).unwrap(),
            Value::Bool(false)
        );
        assert_eq!(
            eval_at(&filter("i", s.clone(), |i| i.gt(int(2))), &[]).unwrap(),
            Value::set([Value::Int(3), Value::Int(4)])
        );
        assert_eq!(
            eval_at(&map_set("i", s.clone(), |i| i.modulo(int(2))), &[]).unwrap(),
            Value::set([Value::Int(0), Value::Int(1)])
        );
        let f = fcn("i", lit(Value::int_range(1, 2)), |i| i.add(int(10)));
        assert_eq!(
            eval_at(&f, &[]).unwrap(),
            Value::seq([Value::Int(11), Value::Int(12)])
        );
    }

    #[test]
    fn lazy_membership() {
        let d = lit(Value::int_range(1, 20));
        let r = lit(Value::int_range(1, 20));
        // [1..20 -> 1..20] is far too large to enumerate
        let f = fcn("i", d.clone(), |i| i);
        assert_eq!(eval_at(&f.in_(fcn_set(d.clone(), r)), &[]).unwrap(), Value::Bool(true));
        assert_eq!(
            eval_at(&lit(Value::set([Value::Int(3)])).in_(d.powerset()), &[]).unwrap(),
            Value::Bool(true)
        );
    }

    #[test]
    fn in_post_reads_post_state() {
        let y = VarRef::new("y", 0);
        let dom = y.e().domain();
        let pre = [Value::seq([Value::Int(1)])];
        let post = [Some(Value::seq([Value::Int(1), Value::Int(2)]))];
        let c = cfg();
        let sc = Scope::action(&c, &pre, &post);
        assert_eq!(
            primed(dom.clone()).eval(&sc, &mut Env::new()).unwrap(),
            Value::int_range(1, 2)
        );
        assert_eq!(dom.eval(&sc, &mut Env::new()).unwrap(), Value::int_range(1, 1));
        let unassigned = [None];
        let sc = Scope::action(&c, &pre, &unassigned);
        assert!(matches!(
            y.p().eval(&sc, &mut Env::new()).unwrap_err().kind,
            EvalErrorKind::Unassigned(_)
        ));
    }

    #[test]
    fn info_tracks_reads() {
        let x = VarRef::new("x", 0);
        let h = VarRef::new("h", 1);
        let e = h.e().union(set_of([x.p()])).union(filter("d", symbolic("Int"), |d| d.eq(bound("k"))));
        let info = e.info();
        assert!(info.unprimed.contains(&h));
        assert!(info.primed.contains(&x));
        assert!(info.free.contains("k"));
        assert!(!info.free.contains("d"));
        assert!(info.symbols.contains("Int"));
        let lam = Lambda::new("j", |j| j.add(int(1)));
        assert!(lam.info().free.is_empty());
        assert_eq!(lam.apply_const(&cfg(), &Value::Int(4)).unwrap(), Value::Int(5));
    }

    #[test]
    fn display_is_readable() {
        let x = VarRef::new("x", 0);
        let e = ite(x.e().eq(int(1)), x.p(), empty_set());
        assert_eq!(e.to_string(), "IF (x = 1) THEN x' ELSE {}");
    }
}
