//! An hour clock, an hour-minute clock, and the hour clock with 59
//! stuttering steps before each tick so that it refines the hour-minute
//! clock.

use super::{CatalogResult, ExampleEntry, MappingEntry, NamedExpr, StutterSetup};
use crate::config::ModelConfig;
use crate::expr::{atom, int, ite, lit, range, tt, Expr, Lambda};
use crate::history::renamed;
use crate::spec::{leaf, set, RefinementMapping, SpecDef, Vars};
use crate::stuttering::{attach_stuttering, top, Stutter, StutterTable, Wrap};
use crate::value::{SetV, Value};

fn defaults() -> ModelConfig {
    ModelConfig::new()
}

fn build(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let h = vs.add("h");
    let next = leaf("Next", vec![set(&h, h.e().add(int(1)).modulo(int(24)))]);
    Ok(SpecDef::new("Hour", vs.into_names(), vec![set(&h, int(0))], next, None, cfg.clone())?)
}

fn build_min(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let h = vs.add("h");
    let m = vs.add("m");
    let next = leaf(
        "Next",
        vec![
            set(&m, m.e().add(int(1)).modulo(int(60))),
            set(
                &h,
                ite(m.p().eq(int(0)), h.e().add(int(1)).modulo(int(24)), h.e()),
            ),
        ],
    );
    Ok(SpecDef::new(
        "HourMin",
        vs.into_names(),
        vec![set(&h, int(0)), set(&m, int(0))],
        next,
        None,
        cfg.clone(),
    )?)
}

fn successor() -> Lambda {
    Lambda::new("j", |j| j.add(int(1)))
}

fn stuttering(cfg: &ModelConfig) -> CatalogResult<StutterSetup> {
    let base = build(cfg)?;
    let mut table = StutterTable::new();
    table.insert(
        "Next".into(),
        Wrap::Stutter(Stutter::pre(
            tt(),
            "Next",
            atom(""),
            range(int(1), int(59)),
            int(59),
            int(1),
            successor(),
        )),
    );
    Ok(StutterSetup {
        base,
        table,
        constants: vec![(
            "StutterConstantCondition(1..59, 59, LAMBDA j : j+1)".into(),
            SetV::range(1, 59),
            Value::int(59),
            successor(),
        )],
    })
}

fn build_s(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let st = stuttering(cfg)?;
    Ok(renamed(attach_stuttering(&st.base, "s", &st.table)?, "HourS")?)
}

fn to_hour_min(low: &SpecDef) -> RefinementMapping {
    let s = low.v("s").e();
    RefinementMapping::new(
        "to-HourMin",
        "HourMin",
        [
            ("h", low.v("h").e()),
            ("m", ite(s.eq(lit(top())), int(0), s.field("val"))),
        ],
    )
}

fn erase_s(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new("to-Hour", "Hour", [("h", low.v("h").e())])
}

fn hour_range(s: &SpecDef) -> Expr {
    s.v("h").e().in_(range(int(0), int(23)))
}

fn last_hour(s: &SpecDef) -> Expr {
    s.v("h").e().eq(int(23))
}

fn minute_range(s: &SpecDef) -> Expr {
    hour_range(s).and(s.v("m").e().in_(range(int(0), int(59))))
}

pub(super) static ENTRIES: [ExampleEntry; 3] = [
    ExampleEntry {
        name: "Hour",
        about: "a 24-hour clock showing only the hour",
        required_params: &[],
        defaults,
        build,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "TypeOK",
            about: "h ∈ 0..23",
            build: hour_range,
        }],
        targets: &[NamedExpr {
            name: "h=23",
            about: "h = 23",
            build: last_hour,
        }],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "HourMin",
        about: "a 24-hour clock showing hours and minutes",
        required_params: &[],
        defaults,
        build: build_min,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "TypeOK",
            about: "h ∈ 0..23 ∧ m ∈ 0..59",
            build: minute_range,
        }],
        targets: &[NamedExpr {
            name: "h=23",
            about: "h = 23",
            build: last_hour,
        }],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "HourS",
        about: "the hour clock with 59 stuttering steps before each tick",
        required_params: &[],
        defaults,
        build: build_s,
        mappings: &[
            MappingEntry {
                name: "to-HourMin",
                target: "HourMin",
                build: to_hour_min,
            },
            MappingEntry {
                name: "to-Hour",
                target: "Hour",
                build: erase_s,
            },
        ],
        invariants: &[NamedExpr {
            name: "TypeOK",
            about: "h ∈ 0..23",
            build: hour_range,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: Some(stuttering),
    },
];
