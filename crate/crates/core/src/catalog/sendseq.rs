//! Sending a queue of chosen data items, with an optional `Undo(i)` that
//! removes the `i`-th queued item.

use super::{ints, CatalogResult, ExampleEntry, MappingEntry, NamedExpr, ProphecySetup};
use crate::config::ModelConfig;
use crate::expr::{
    atom, empty_fcn, fcn, forall, int, ite, lit, range, set_of, symbolic, Expr, Lambda, Op,
};
use crate::history::renamed;
use crate::prophecy::{atoms, attach_prophecy, ProphecyShape, ProphecyTable, SubactionProphecy};
use crate::spec::{
    disj, exists_ctx, leaf, local, require, set, DisjRep, RefinementMapping, SpecDef, Step, Vars,
};
use crate::value::{sentinel, Fcn, Value};

fn defaults() -> ModelConfig {
    ModelConfig::new()
        .substitute("Data", ints(1, 2))
        .bound("MaxLen", 3)
}

fn non_data() -> Expr {
    lit(sentinel::non_data())
}

/// `RemoveEltFrom(i, seq)`
pub(crate) fn remove_elt_from(i: Expr, seq: Expr) -> Expr {
    fcn("j", range(int(1), seq.len().sub(int(1))), |j| {
        ite(j.lt(i), seq.apply(j.clone()), seq.apply(j.add(int(1))))
    })
}

fn parts(undo: bool) -> (Vars, DisjRep, Vec<Step>, Expr) {
    let mut vs = Vars::new();
    let x = vs.add("x");
    let y = vs.add("y");
    let init = vec![set(&x, non_data()), set(&y, empty_fcn())];
    let data = symbolic("Data");
    let mut subs = vec![
        leaf(
            "Choose",
            vec![
                local("d", data.clone(), |d| vec![set(&y, y.e().append(d))]),
                set(&x, x.e()),
            ],
        ),
        leaf(
            "Send",
            vec![
                require(x.e().eq(non_data()).and(y.e().ne(empty_fcn()))),
                set(&x, y.e().head()),
                set(&y, y.e().tail()),
            ],
        ),
        leaf(
            "Rcv",
            vec![
                require(x.e().in_(data)),
                set(&x, non_data()),
                set(&y, y.e()),
            ],
        ),
    ];
    if undo {
        subs.push(exists_ctx("i", range(int(1), y.e().len()), |i| {
            leaf(
                "Undo",
                vec![set(&y, remove_elt_from(i, y.e())), set(&x, x.e())],
            )
        }));
    }
    let len = y.e().len();
    (vs, disj(subs), init, len)
}

fn constraint(cfg: &ModelConfig, len: Expr) -> CatalogResult<Option<Expr>> {
    Ok(cfg.constraint_bound("MaxLen")?.map(|n| len.le(int(n))))
}

fn build(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, next, init, len) = parts(false);
    Ok(SpecDef::new("SendSeq", vs.into_names(), init, next, constraint(cfg, len)?, cfg.clone())?)
}

fn build_undo(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, next, init, len) = parts(true);
    Ok(SpecDef::new(
        "SendSeqUndo",
        vs.into_names(),
        init,
        next,
        constraint(cfg, len)?,
        cfg.clone(),
    )?)
}

fn pi() -> Expr {
    atoms(&["send", "undo"])
}

fn prophecy(cfg: &ModelConfig) -> CatalogResult<ProphecySetup> {
    let base = build_undo(cfg)?;
    let y = base.v("y").e();
    let dom = y.domain();
    let shape = ProphecyShape::new("p", pi(), dom.clone());
    let identity = fcn("d", dom.clone(), |d| d);
    let keep = || {
        SubactionProphecy::new(
            Lambda::new("q", |_| crate::expr::tt()),
            Some(identity.clone()),
            crate::expr::empty_set(),
        )
    };
    let mut table = ProphecyTable::new();
    table.insert("Choose".into(), keep());
    table.insert(
        "Send".into(),
        SubactionProphecy::new(
            Lambda::new("q", |q| q.apply(int(1)).eq(atom("send"))),
            Some(fcn("i", range(int(2), y.len()), |i| i.sub(int(1)))),
            set_of([int(1)]),
        ),
    );
    table.insert("Rcv".into(), keep());
    let i = crate::expr::bound("i");
    table.insert(
        "Undo".into(),
        SubactionProphecy::new(
            Lambda::new("q", |q| q.apply(i.clone()).eq(atom("undo"))),
            Some(fcn(
                "j",
                range(int(1), y.len()).without(i.clone()),
                |j| ite(j.lt(i.clone()), j.clone(), j.sub(int(1))),
            )),
            set_of([i.clone()]),
        ),
    );
    Ok(ProphecySetup { base, shape, table })
}

fn build_undo_p(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let ps = prophecy(cfg)?;
    Ok(renamed(attach_prophecy(&ps.base, &ps.shape, &ps.table)?, "SendSeqUndoP")?)
}

/// The subsequence of `yseq` at the positions where `pseq` says "send".
fn y_bar_value(yseq: &Fcn, pseq: &Fcn) -> Result<Value, crate::value::ValueError> {
    let mut kept = Vec::new();
    for (k, v) in yseq.pairs() {
        if pseq.get(k) == Some(&Value::atom("send")) {
            kept.push(v.clone());
        }
    }
    Ok(Value::seq(kept))
}

/// `yBar`, the items of `y` predicted to be sent, in order.
pub(crate) fn y_bar(y: Expr, p: Expr) -> Expr {
    let op = Op::new("yBar", |args: &[Value]| {
        let [y, p] = args else {
            unreachable!("yBar takes two arguments")
        };
        y_bar_value(y.as_fcn()?, p.as_fcn()?)
    });
    op.call(vec![y, p])
}

fn to_sendseq(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-SendSeq",
        "SendSeq",
        [
            ("x", low.v("x").e()),
            ("y", y_bar(low.v("y").e(), low.v("p").e())),
        ],
    )
}

fn erase_p(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-SendSeqUndo",
        "SendSeqUndo",
        [("x", low.v("x").e()), ("y", low.v("y").e())],
    )
}

fn p_type(s: &SpecDef) -> Expr {
    s.v("p")
        .e()
        .in_(crate::expr::fcn_set(s.v("y").e().domain(), pi()))
}

fn len_bound(s: &SpecDef) -> Expr {
    let n = s.config().constraint_bound("MaxLen").ok().flatten().unwrap_or(0);
    s.v("y").e().len().le(int(n))
}

fn full_queue(s: &SpecDef) -> Expr {
    let n = s.config().constraint_bound("MaxLen").ok().flatten().unwrap_or(0);
    s.v("y").e().len().eq(int(n))
}

fn items_are_data(s: &SpecDef) -> Expr {
    let y = s.v("y").e();
    forall("k", y.domain(), |k| y.apply(k).in_(symbolic("Data")))
}

pub(super) static ENTRIES: [ExampleEntry; 3] = [
    ExampleEntry {
        name: "SendSeq",
        about: "appends chosen data items to a queue and sends from its head",
        required_params: &["Data", "MaxLen"],
        defaults,
        build,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "ItemsAreData",
            about: "every queued item is in Data",
            build: items_are_data,
        }],
        targets: &[NamedExpr {
            name: "FullQueue",
            about: "Len(y) = MaxLen",
            build: full_queue,
        }],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendSeqUndo",
        about: "SendSeq where any queued item can be removed",
        required_params: &["Data", "MaxLen"],
        defaults,
        build: build_undo,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "LenBound",
            about: "Len(y) =< MaxLen",
            build: len_bound,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendSeqUndoP",
        about: "SendSeqUndo with a prophecy sequence predicting send or undo for each item",
        required_params: &["Data", "MaxLen"],
        defaults,
        build: build_undo_p,
        mappings: &[
            MappingEntry {
                name: "to-SendSeq",
                target: "SendSeq",
                build: to_sendseq,
            },
            MappingEntry {
                name: "to-SendSeqUndo",
                target: "SendSeqUndo",
                build: erase_p,
            },
        ],
        invariants: &[NamedExpr {
            name: "PType",
            about: "p \\in [DOMAIN y -> Pi]",
            build: p_type,
        }],
        targets: &[],
        action_props: &[],
        prophecy: Some(prophecy),
        stuttering: None,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value;

    #[test]
    fn y_bar_filters_in_order() {
        let y = Fcn::seq([Value::int(1), Value::int(2), Value::int(1)]);
        let p = Fcn::seq(["send", "undo", "send"].map(Value::atom));
        assert_eq!(
            y_bar_value(&y, &p).unwrap(),
            Value::seq([Value::int(1), Value::int(1)])
        );
        assert_eq!(
            y_bar_value(&Fcn::empty(), &Fcn::empty()).unwrap(),
            Value::empty_fcn()
        );
    }

    /// `R(yseq, pseq)` written with Head, Tail and concatenation.
    fn recursive(y: &Fcn, p: &Fcn) -> Fcn {
        if y.is_empty() {
            return y.clone();
        }
        let (hy, ty) = (value::head(y).unwrap(), value::tail(y).unwrap());
        let (hp, tp) = (value::head(p).unwrap(), value::tail(p).unwrap());
        let rest = recursive(&ty, &tp);
        if hp == Value::atom("send") {
            value::concat(&Fcn::seq([hy]), &rest).unwrap()
        } else {
            rest
        }
    }

    #[test]
    fn y_bar_matches_the_recursive_definition() {
        let data = [Value::int(1), Value::int(2)];
        let pi = [Value::atom("send"), Value::atom("undo")];
        for n in 0..=4u32 {
            for yi in 0..2usize.pow(n) {
                for pi_i in 0..2usize.pow(n) {
                    let pick = |code: usize, from: &[Value; 2]| {
                        Fcn::seq((0..n).map(|k| from[(code >> k) & 1].clone()))
                    };
                    let (y, p) = (pick(yi, &data), pick(pi_i, &pi));
                    assert_eq!(y_bar_value(&y, &p).unwrap(), Value::Fcn(recursive(&y, &p)));
                }
            }
        }
    }
}
