//! Sending integers. `SendInt1` picks the value when it is sent;
//! `SendInt2` picks it in advance and keeps it in `z`.

use std::collections::BTreeMap;

use super::{ints, not_int, CatalogResult, ExampleEntry, MappingEntry, NamedAction, NamedExpr};
use crate::config::ModelConfig;
use crate::explorer::ActionProperty;
use crate::expr::{exists, ite, symbolic, tt, Expr, Lambda};
use crate::history::renamed;
use crate::prophecy::{single_prediction, single_value, Setp};
use crate::spec::{disj, leaf, pick, require, set, RefinementMapping, SpecDef, Vars};

fn defaults() -> ModelConfig {
    ModelConfig::new().substitute("Int", ints(0, 2))
}

fn build1(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let x = vs.add("x");
    let next = disj([
        leaf(
            "Send",
            vec![require(x.e().eq(not_int())), pick(&x, symbolic("Int"))],
        ),
        leaf(
            "Rcv",
            vec![require(x.e().in_(symbolic("Int"))), set(&x, not_int())],
        ),
    ]);
    Ok(SpecDef::new(
        "SendInt1",
        vs.into_names(),
        vec![set(&x, not_int())],
        next,
        None,
        cfg.clone(),
    )?)
}

fn build2(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let x = vs.add("x");
    let z = vs.add("z");
    let init = vec![set(&x, not_int()), pick(&z, symbolic("Int"))];
    let next = disj([
        leaf(
            "Send",
            vec![
                require(x.e().eq(not_int())),
                set(&x, z.e()),
                set(&z, not_int()),
            ],
        ),
        leaf(
            "Rcv",
            vec![
                require(x.e().in_(symbolic("Int"))),
                set(&x, not_int()),
                pick(&z, symbolic("Int")),
            ],
        ),
    ]);
    Ok(SpecDef::new("SendInt2", vs.into_names(), init, next, None, cfg.clone())?)
}

/// `PredSend(i) == x' = i`
fn pred_send(base: &SpecDef) -> Lambda {
    let x = base.v("x");
    Lambda::new("i", |i| x.p().eq(i))
}

fn with_prophecy(cfg: &ModelConfig, name: &str, rcv: Setp) -> CatalogResult<SpecDef> {
    let base = build1(cfg)?;
    let mut table = BTreeMap::new();
    table.insert("Send".to_string(), (pred_send(&base), Setp::Refresh));
    table.insert("Rcv".to_string(), (Lambda::new("i", |_| tt()), rcv));
    let sp = single_prediction(&base, "p", symbolic("Int"), &table)?;
    Ok(renamed(sp, name)?)
}

fn build1p(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    with_prophecy(cfg, "SendInt1P", Setp::Keep)
}

/// The prediction is also redrawn on every `Rcv` step.
fn build1p_refresh(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    with_prophecy(cfg, "SendInt1PRefresh", Setp::Refresh)
}

fn to_sendint2(low: &SpecDef) -> RefinementMapping {
    let x = low.v("x").e();
    let p = low.v("p").e();
    RefinementMapping::new(
        "to-SendInt2",
        "SendInt2",
        [
            ("x", x.clone()),
            ("z", ite(x.eq(not_int()), single_value(&p), not_int())),
        ],
    )
}

fn one_prediction(s: &SpecDef) -> ActionProperty {
    let pred = pred_send(s);
    ActionProperty::new().on(
        "Send",
        "\\E i \\in Pi : PredSend(i)",
        exists("i", symbolic("Int"), |i| pred.call(i)),
    )
}

fn type_ok1(s: &SpecDef) -> Expr {
    s.v("x").e().in_(symbolic("Int").with(not_int()))
}

fn type_ok1p(s: &SpecDef) -> Expr {
    type_ok1(s).and(single_value(&s.v("p").e()).in_(symbolic("Int")))
}

static TYPE_OK_P: [NamedExpr; 1] = [NamedExpr {
    name: "TypeOK",
    about: "x \\in Int \\cup {NotInt} /\\ p \\in Pi",
    build: type_ok1p,
}];

static TO_SENDINT2: [MappingEntry; 1] = [MappingEntry {
    name: "to-SendInt2",
    target: "SendInt2",
    build: to_sendint2,
}];

pub(super) static ENTRIES: [ExampleEntry; 4] = [
    ExampleEntry {
        name: "SendInt1",
        about: "sends integers chosen at send time",
        required_params: &["Int"],
        defaults,
        build: build1,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "TypeOK",
            about: "x \\in Int \\cup {NotInt}",
            build: type_ok1,
        }],
        targets: &[],
        action_props: &[NamedAction {
            name: "OnePrediction",
            about: "[][Send => \\E i \\in Pi : PredSend(i)]_vars",
            build: one_prediction,
        }],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendInt2",
        about: "sends integers chosen in advance",
        required_params: &["Int"],
        defaults,
        build: build2,
        mappings: &[],
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendInt1P",
        about: "SendInt1 with a one-prediction prophecy of the next value sent",
        required_params: &["Int"],
        defaults,
        build: build1p,
        mappings: &TO_SENDINT2,
        invariants: &TYPE_OK_P,
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "SendInt1PRefresh",
        about: "SendInt1P where Rcv also makes a fresh prediction",
        required_params: &["Int"],
        defaults,
        build: build1p_refresh,
        mappings: &TO_SENDINT2,
        invariants: &TYPE_OK_P,
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
];
