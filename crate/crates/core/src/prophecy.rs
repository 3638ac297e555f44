//! Prophecy variables.
//!
//! A prophecy variable `p` is a function in `[Dom -> Pi]` predicting future
//! choices. Each subaction `A` is replaced by
//! `A /\ Pred_A(p) /\ p' \in NewPSet(p, DomInj_A, PredDom_A)`, where
//! `NewPSet` keeps the predictions that `A` neither used nor discarded
//! (shifted along `DomInj_A`) and lets every other position of `p'` range
//! over `Pi`.

use std::collections::{BTreeMap, BTreeSet};

use crate::explorer::{check_action_property, ActionProperty, ExploreResult, Options, Verdict};
use crate::expr::{
    and, exists, fcn_set, forall, lit, partial_injections, primed, set_of, Expr, Lambda, Name, Op,
};
use crate::spec::{pick, require, SpecDef, SpecError, Step};
use crate::value::{self, Value, ValueError};

pub use crate::value::new_pset;

/// `p`, `Pi` and `Dom` of a prophecy variable. `dom` is a state expression
/// over the base spec; the post-state domain is `dom` evaluated in the
/// post-state.
#[derive(Clone)]
pub struct ProphecyShape {
    pub name: String,
    pub pi: Expr,
    pub dom: Expr,
}

impl ProphecyShape {
    pub fn new(name: &str, pi: Expr, dom: Expr) -> Self {
        ProphecyShape {
            name: name.to_string(),
            pi,
            dom,
        }
    }

    /// `Dom'`
    pub fn dom_prime(&self) -> Expr {
        primed(self.dom.clone())
    }
}

/// `Pred_A`, `DomInj_A` and `PredDom_A` for one subaction. The predicate
/// takes the prophecy function as its parameter and may also read the
/// subaction's context binders and primed or unprimed spec variables.
#[derive(Clone)]
pub struct SubactionProphecy {
    pub pred: Lambda,
    /// `None` means the identity on `Dom \cap Dom'`.
    pub dom_inj: Option<Expr>,
    pub pred_dom: Expr,
}

impl SubactionProphecy {
    pub fn new(pred: Lambda, dom_inj: Option<Expr>, pred_dom: Expr) -> Self {
        SubactionProphecy {
            pred,
            dom_inj,
            pred_dom,
        }
    }

    /// A subaction that neither reads nor consumes predictions.
    pub fn keep() -> Self {
        SubactionProphecy {
            pred: Lambda::new("q", |_| crate::expr::tt()),
            dom_inj: None,
            pred_dom: crate::expr::empty_set(),
        }
    }

    fn dom_inj_expr(&self, shape: &ProphecyShape) -> Expr {
        self.dom_inj
            .clone()
            .unwrap_or_else(|| shape.dom.inter(shape.dom_prime()).id_fcn())
    }
}

pub type ProphecyTable = BTreeMap<String, SubactionProphecy>;

fn new_pset_op() -> Op {
    Op::new("NewPSet", |args: &[Value]| {
        let [p, inj, pd, dp, pi] = args else {
            unreachable!("NewPSet takes five arguments")
        };
        Ok(Value::Set(value::new_pset(
            p.as_fcn()?,
            inj.as_fcn()?,
            pd.as_set()?,
            dp.as_set()?,
            pi.as_set()?,
        )?))
    })
}

fn err(spec: &SpecDef, msg: String) -> SpecError {
    SpecError::Invalid {
        spec: spec.name().to_string(),
        msg: format!("prophecy variable: {msg}"),
    }
}

fn check_table(spec: &SpecDef, shape: &ProphecyShape, table: &ProphecyTable) -> Result<(), SpecError> {
    let ids: BTreeSet<&str> = spec.leaves().iter().map(|l| &*l.id).collect();
    for k in table.keys() {
        if !ids.contains(k.as_str()) {
            return Err(err(spec, format!("entry for unknown subaction `{k}`")));
        }
    }
    for l in spec.leaves() {
        if !table.contains_key(&*l.id) {
            return Err(err(spec, format!("no entry for subaction `{}`", l.id)));
        }
    }
    let info = shape.dom.info();
    if !info.primed.is_empty() || !info.free.is_empty() {
        return Err(err(spec, "Dom must be a closed state expression".into()));
    }
    let info = shape.pi.info();
    if info.vars().next().is_some() || !info.free.is_empty() {
        return Err(err(spec, "Pi must be a constant set".into()));
    }
    Ok(())
}

/// Adds prophecy variable `shape.name` to `spec`. Returns a spec whose
/// initial predicate is `Init /\ p \in [Dom -> Pi]` and whose subactions are
/// the corresponding prophecy actions.
pub fn attach_prophecy(
    spec: &SpecDef,
    shape: &ProphecyShape,
    table: &ProphecyTable,
) -> Result<SpecDef, SpecError> {
    if spec.var(&shape.name).is_some() {
        return Err(err(spec, format!("`{}` is already a variable", shape.name)));
    }
    check_table(spec, shape, table)?;
    let p = spec.next_var(&shape.name);
    let op = new_pset_op();
    let next = spec.next().map_leaves(&mut |id, ctx, body: &[Step]| {
        let t = &table[id];
        let binders: BTreeSet<&str> = ctx.iter().map(|(n, _)| &**n).collect();
        for (what, info) in [
            ("Pred", t.pred.info()),
            ("DomInj", t.dom_inj_expr(shape).info()),
            ("PredDom", t.pred_dom.info()),
        ] {
            if let Some(f) = info.free.iter().find(|f| !binders.contains(f.as_str())) {
                return Err(err(spec, format!("{what} of `{id}` uses unbound `{f}`")));
            }
            if info.vars().any(|v| v.name == p.name) {
                return Err(err(spec, format!("{what} of `{id}` reads the prophecy variable")));
            }
        }
        let mut b = body.to_vec();
        if !t.pred.body.is_true() {
            b.push(require(t.pred.call(p.e())));
        }
        b.push(pick(
            &p,
            op.call(vec![
                p.e(),
                t.dom_inj_expr(shape),
                t.pred_dom.clone(),
                shape.dom_prime(),
                shape.pi.clone(),
            ]),
        ));
        Ok(b)
    })?;
    let mut init = spec.init_steps().to_vec();
    init.push(pick(&p, fcn_set(shape.dom.clone(), shape.pi.clone())));
    let mut vars: Vec<Name> = spec.vars().to_vec();
    vars.push(p.name.clone());
    SpecDef::new(
        &format!("{}+{}", spec.name(), shape.name),
        vars,
        init,
        next,
        spec.constraint().cloned(),
        spec.config().clone(),
    )
}

/// What a single-prediction subaction does with `p` after using it.
#[derive(Clone)]
pub enum Setp {
    /// `p' = p`; only allowed when the predicate is `TRUE`.
    Keep,
    /// `p' \in Pi`
    Refresh,
}

/// The single domain element used to encode a one-value prophecy as a
/// function.
pub const SINGLE_KEY: &str = "on";

/// The prediction itself, `p["on"]`, for a spec built by [`single_prediction`].
pub fn single_value(p: &Expr) -> Expr {
    p.apply(crate::expr::atom(SINGLE_KEY))
}

/// A one-value prophecy `p \in Pi`. Each entry gives `Pred_A` as a function
/// of the predicted value together with the `Setp_A` choice. The variable is
/// represented as a function on the one-element domain `{"on"}`, so the
/// prediction is read as `p["on"]`.
pub fn single_prediction(
    spec: &SpecDef,
    name: &str,
    pi: Expr,
    table: &BTreeMap<String, (Lambda, Setp)>,
) -> Result<SpecDef, SpecError> {
    let shape = ProphecyShape::new(name, pi, set_of([crate::expr::atom(SINGLE_KEY)]));
    let mut full = ProphecyTable::new();
    for (id, (pred, setp)) in table {
        if matches!(setp, Setp::Keep) && !pred.body.is_true() {
            return Err(err(
                spec,
                format!("`{id}` keeps the prediction but its predicate is not TRUE"),
            ));
        }
        let pd = match setp {
            Setp::Keep => crate::expr::empty_set(),
            Setp::Refresh => set_of([crate::expr::atom(SINGLE_KEY)]),
        };
        let pred = pred.clone();
        let pred = Lambda::new("q", move |q| pred.call(single_value(&q)));
        full.insert(id.clone(), SubactionProphecy::new(pred, None, pd));
    }
    attach_prophecy(spec, &shape, &full)
}

/// `\E q \in [Dom -> Pi] : Pred(q)`
pub fn exists_good_prophecy(shape: &ProphecyShape, pred: &Lambda) -> Expr {
    exists("q", fcn_set(shape.dom.clone(), shape.pi.clone()), |q| pred.call(q))
}

/// `DomInj \in PartialInjections(Dom, Dom')`
pub fn is_dom_inj(shape: &ProphecyShape, dom_inj: &Expr) -> Expr {
    dom_inj.in_(partial_injections(shape.dom.clone(), shape.dom_prime()))
}

/// `PredDom \subseteq Dom /\ \A q, r \in [Dom -> Pi] :
///   (\A d \in PredDom : q[d] = r[d]) => (Pred(q) = Pred(r))`
pub fn is_pred_dom(shape: &ProphecyShape, pred_dom: &Expr, pred: &Lambda) -> Expr {
    let fs = fcn_set(shape.dom.clone(), shape.pi.clone());
    let same = forall("q", fs.clone(), |q| {
        forall("r", fs.clone(), |r| {
            forall("d", pred_dom.clone(), |d| q.apply(d.clone()).eq(r.apply(d)))
                .implies(pred.call(q.clone()).eq(pred.call(r)))
        })
    });
    and([pred_dom.subset_eq(shape.dom.clone()), same])
}

/// The three conjuncts of the prophecy condition for every subaction, as
/// an action property of the base spec.
pub fn proph_condition(spec: &SpecDef, shape: &ProphecyShape, table: &ProphecyTable) -> Result<ActionProperty, SpecError> {
    check_table(spec, shape, table)?;
    let mut prop = ActionProperty::new();
    for l in spec.leaves() {
        let t = &table[&*l.id];
        prop = prop
            .on(&l.id, "ExistsGoodProphecy", exists_good_prophecy(shape, &t.pred))
            .on(&l.id, "IsDomInj", is_dom_inj(shape, &t.dom_inj_expr(shape)))
            .on(&l.id, "IsPredDom", is_pred_dom(shape, &t.pred_dom, &t.pred));
    }
    Ok(prop)
}

/// Checks the prophecy condition over the base spec's reachable
/// non-stuttering transitions.
pub fn check_proph_conditions(
    spec: &SpecDef,
    shape: &ProphecyShape,
    table: &ProphecyTable,
    opts: &Options,
) -> ExploreResult<Verdict> {
    let prop = proph_condition(spec, shape, table)?;
    check_action_property(spec, opts, &prop)
}

/// The set `{q \in [dom_prime -> pi] : ...}` computed by filtering the
/// whole function space. Used as an independent reference for [`new_pset`].
pub fn new_pset_by_filter(
    p: &value::Fcn,
    dom_inj: &value::Fcn,
    pred_dom: &value::SetV,
    dom_prime: &value::SetV,
    pi: &value::SetV,
) -> Result<value::SetV, ValueError> {
    let all = value::fcn_set(dom_prime, pi)?;
    let keep = dom_inj.domain().minus(pred_dom);
    Ok(all
        .iter()
        .filter(|q| {
            keep.iter().all(|d| {
                let target = dom_inj.get(d).expect("in domain");
                q.as_fcn().ok().and_then(|qf| qf.get(target)).cloned() == p.get(d).cloned()
            })
        })
        .cloned()
        .collect())
}

/// Shorthand for a constant literal set of atoms.
pub fn atoms(names: &[&str]) -> Expr {
    lit(Value::set(names.iter().map(|n| Value::atom(n))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::explorer::{explore, Status};
    use crate::expr::*;
    use crate::history::check_projection;
    use crate::spec::*;
    use crate::value::{Fcn, SetV};

    /// x alternates between NotInt and a sent integer.
    fn send_int() -> SpecDef {
        let mut vs = Vars::new();
        let x = vs.add("x");
        let not_int = lit(crate::value::sentinel::not_int());
        let cfg = ModelConfig::new().substitute("Int", [Value::Int(0), Value::Int(1)]);
        SpecDef::new(
            "SendInt",
            vs.into_names(),
            vec![set(&x, not_int.clone())],
            disj([
                leaf("Send", vec![require(x.e().eq(not_int.clone())), pick(&x, symbolic("Int"))]),
                leaf("Rcv", vec![require(x.e().ne(not_int.clone())), set(&x, not_int)]),
            ]),
            None,
            cfg,
        )
        .unwrap()
    }

    fn single_table(spec: &SpecDef) -> BTreeMap<String, (Lambda, Setp)> {
        let x = spec.v("x");
        let mut t = BTreeMap::new();
        t.insert("Send".into(), (Lambda::new("i", |i| x.p().eq(i)), Setp::Refresh));
        t.insert("Rcv".into(), (Lambda::new("i", |_| tt()), Setp::Keep));
        t
    }

    #[test]
    fn single_prediction_projects() {
        let spec = send_int();
        let sp = single_prediction(&spec, "p", symbolic("Int"), &single_table(&spec)).unwrap();
        assert_eq!(explore(&sp, &Options::default()).unwrap().len(), 2 + 4);
        assert!(check_projection(&spec, &sp, &Options::default()).unwrap().is_pass());
    }

    #[test]
    fn keep_requires_true_predicate() {
        let spec = send_int();
        let x = spec.v("x");
        let mut t = single_table(&spec);
        t.insert("Rcv".into(), (Lambda::new("i", |i| x.e().eq(i)), Setp::Keep));
        assert!(single_prediction(&spec, "p", symbolic("Int"), &t).is_err());
    }

    #[test]
    fn missing_entry_is_an_error() {
        let spec = send_int();
        let mut t = single_table(&spec);
        t.remove("Rcv");
        assert!(single_prediction(&spec, "p", symbolic("Int"), &t).is_err());
    }

    #[test]
    fn pred_dom_must_cover_what_pred_reads() {
        let spec = send_int();
        let x = spec.v("x");
        let shape = ProphecyShape::new("p", symbolic("Int"), set_of([atom(SINGLE_KEY)]));
        let mut table = ProphecyTable::new();
        let pred = Lambda::new("q", |q| x.p().eq(single_value(&q)));
        table.insert("Send".into(), SubactionProphecy::new(pred.clone(), None, set_of([atom(SINGLE_KEY)])));
        table.insert("Rcv".into(), SubactionProphecy::keep());
        assert!(check_proph_conditions(&spec, &shape, &table, &Options::default())
            .unwrap()
            .is_pass());
        table.insert("Send".into(), SubactionProphecy::new(pred, None, empty_set()));
        let v = check_proph_conditions(&spec, &shape, &table, &Options::default()).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert!(v.violation.unwrap().contains("IsPredDom"));
    }

    #[test]
    fn new_pset_examples() {
        let send = Value::atom("send");
        let undo = Value::atom("undo");
        let pi = SetV::from_iter([send.clone(), undo.clone()]);
        let p = Fcn::seq([send.clone(), undo.clone()]);
        let inj = Fcn::from_pairs([(Value::Int(2), Value::Int(1))]);
        let pd = SetV::from_iter([Value::Int(1)]);
        let dp = SetV::from_iter([Value::Int(1)]);
        let got = new_pset(&p, &inj, &pd, &dp, &pi).unwrap();
        assert_eq!(got, SetV::from_iter([Value::seq([undo.clone()])]));
        assert_eq!(got, new_pset_by_filter(&p, &inj, &pd, &dp, &pi).unwrap());
        let all = new_pset(&p, &Fcn::empty(), &p.domain(), &p.domain(), &pi).unwrap();
        assert_eq!(all.len(), 4);
        let none = new_pset(&p, &Fcn::empty(), &SetV::empty(), &SetV::empty(), &pi).unwrap();
        assert_eq!(none, SetV::from_iter([Value::empty_fcn()]));
    }
}
