//! Sending elements of a set of chosen data items, with an optional `Undo`
//! that drops chosen items before they are sent.

use super::{ints, CatalogResult, ExampleEntry, MappingEntry, NamedExpr, ProphecySetup};
use crate::config::ModelConfig;
use crate::expr::{atom, empty_set, fcn_set, filter, forall, lit, set_of, symbolic, Expr, Lambda};
use crate::history::renamed;
use crate::prophecy::{atoms, attach_prophecy, ProphecyShape, ProphecyTable, SubactionProphecy};
use crate::spec::{disj, exists_ctx, leaf, local, pick, require, set, DisjRep, RefinementMapping, SpecDef, Vars};
use crate::value::sentinel;

fn defaults() -> ModelConfig {
    ModelConfig::new().substitute("Data", ints(1, 2))
}

fn non_data() -> Expr {
    lit(sentinel::non_data())
}

fn parts(undo: bool) -> (Vars, DisjRep, Vec<crate::spec::Step>) {
    let mut vs = Vars::new();
    let x = vs.add("x");
    let y = vs.add("y");
    let init = vec![set(&x, non_data()), set(&y, empty_set())];
    let data = symbolic("Data");
    let mut subs = vec![
        leaf(
            "Choose",
            vec![
                local("d", data.minus(y.e()), |d| vec![set(&y, y.e().with(d))]),
                set(&x, x.e()),
            ],
        ),
        leaf(
            "Send",
            vec![
                require(x.e().eq(non_data())),
                pick(&x, y.e()),
                set(&y, y.e().without(x.p())),
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
        subs.push(exists_ctx("S", y.e().powerset(), |s| {
            leaf("Undo", vec![set(&y, y.e().minus(s)), set(&x, x.e())])
        }));
    }
    (vs, disj(subs), init)
}

fn build(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, next, init) = parts(false);
    Ok(SpecDef::new("SendSet", vs.into_names(), init, next, None, cfg.clone())?)
}

fn build_undo(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, next, init) = parts(true);
    Ok(SpecDef::new("SendSetUndo", vs.into_names(), init, next, None, cfg.clone())?)
}

fn pi() -> Expr {
    atoms(&["send", "undo"])
}

fn prophecy(cfg: &ModelConfig) -> CatalogResult<ProphecySetup> {
    let base = build_undo(cfg)?;
    let x = base.v("x");
    let y = base.v("y");
    let shape = ProphecyShape::new("p", pi(), y.e());
    let mut table = ProphecyTable::new();
    table.insert("Choose".into(), SubactionProphecy::keep());
    table.insert(
        "Send".into(),
        SubactionProphecy::new(
            Lambda::new("q", |q| q.apply(x.p()).eq(atom("send"))),
            None,
            set_of([x.p()]),
        ),
    );
    table.insert("Rcv".into(), SubactionProphecy::keep());
    table.insert(
        "Undo".into(),
        SubactionProphecy::new(
            Lambda::new("q", |q| {
                forall("d", crate::expr::bound("S"), |d| q.apply(d).eq(atom("undo")))
            }),
            None,
            crate::expr::bound("S"),
        ),
    );
    Ok(ProphecySetup { base, shape, table })
}

fn build_undo_p(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let ps = prophecy(cfg)?;
    Ok(renamed(attach_prophecy(&ps.base, &ps.shape, &ps.table)?, "SendSetUndoP")?)
}

fn to_sendset(low: &SpecDef) -> RefinementMapping {
    let p = low.v("p").e();
    RefinementMapping::new(
        "to-SendSet",
        "SendSet",
        [
            ("x", low.v("x").e()),
            ("y", filter("d", low.v("y").e(), |d| p.apply(d).eq(atom("send")))),
        ],
    )
}

fn erase_p(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-SendSetUndo",
        "SendSetUndo",
        [("x", low.v("x").e()), ("y", low.v("y").e())],
    )
}

fn p_type(s: &SpecDef) -> Expr {
    s.v("p").e().in_(fcn_set(s.v("y").e(), pi()))
}

pub(super) static ENTRIES: [ExampleEntry; 3] = [
    ExampleEntry {
        name: "SendSet",
        about: "chooses data items into a set and sends them one at a time",
        required_params: &["Data"],
        defaults,
        build,
        mappings: &[],
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendSetUndo",
        about: "SendSet where chosen items can be dropped before they are sent",
        required_params: &["Data"],
        defaults,
        build: build_undo,
        mappings: &[],
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendSetUndoP",
        about: "SendSetUndo with a prophecy array predicting send or undo for each item",
        required_params: &["Data"],
        defaults,
        build: build_undo_p,
        mappings: &[
            MappingEntry {
                name: "to-SendSet",
                target: "SendSet",
                build: to_sendset,
            },
            MappingEntry {
                name: "to-SendSetUndo",
                target: "SendSetUndo",
                build: erase_p,
            },
        ],
        invariants: &[NamedExpr {
            name: "PType",
            about: "p \\in [y -> Pi]",
            build: p_type,
        }],
        targets: &[],
        action_props: &[],
        prophecy: Some(prophecy),
        stuttering: None,
    },
];
