//! A system that reads integers and reports whether each one is the
//! smallest or largest seen so far. `MinMax1` remembers the whole input
//! set, `MinMax2` only the current minimum and maximum.

use super::{atoms_v, ints, CatalogResult, ExampleEntry, MappingEntry, NamedExpr};
use crate::config::ModelConfig;
use crate::expr::{and, atom, empty_set, ite, lit, or, symbolic, Expr, VarRef};
use crate::history::{attach_history, renamed, HistorySpec};
use crate::spec::{any, disj, leaf, pick, require, set, unchanged, RefinementMapping, SpecDef, Step, Vars};
use crate::value::sentinel;

fn defaults() -> ModelConfig {
    ModelConfig::new().substitute("Int", ints(-1, 1))
}

fn infinity() -> Expr {
    lit(sentinel::infinity())
}

fn minus_infinity() -> Expr {
    lit(sentinel::minus_infinity())
}

/// The report for `x` given the new minimum and maximum.
fn report(x: &Expr, max: Expr, min: Expr) -> Expr {
    ite(
        x.eq(max),
        ite(x.eq(min.clone()), atom("Both"), atom("Hi")),
        ite(x.eq(min), atom("Lo"), atom("None")),
    )
}

fn input_num(x: &VarRef, turn: &VarRef, rest: &[&VarRef]) -> Vec<Step> {
    vec![
        require(turn.e().eq(atom("input"))),
        set(turn, atom("output")),
        pick(x, symbolic("Int")),
        unchanged(rest.iter().copied()),
    ]
}

fn build1(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let x = vs.add("x");
    let turn = vs.add("turn");
    let y = vs.add("y");
    let init = vec![
        set(&x, atom("None")),
        set(&turn, atom("input")),
        set(&y, empty_set()),
    ];
    let respond = vec![
        require(turn.e().eq(atom("output"))),
        set(&turn, atom("input")),
        set(&y, y.e().with(x.e())),
        set(&x, report(&x.e(), y.p().set_max(), y.p().set_min())),
    ];
    let next = disj([
        leaf("InputNum", input_num(&x, &turn, &[&y])),
        leaf("Respond", respond),
    ]);
    Ok(SpecDef::new("MinMax1", vs.into_names(), init, next, None, cfg.clone())?)
}

fn is_leq(i: Expr, j: Expr) -> Expr {
    or([j.eq(infinity()), i.le(j)])
}

fn is_geq(i: Expr, j: Expr) -> Expr {
    or([j.eq(minus_infinity()), i.ge(j)])
}

struct MinMax2Vars {
    x: VarRef,
    turn: VarRef,
    min: VarRef,
    max: VarRef,
}

fn parts2() -> (Vars, MinMax2Vars, Vec<Step>, Vec<Step>, Vec<Step>) {
    let mut vs = Vars::new();
    let v = MinMax2Vars {
        x: vs.add("x"),
        turn: vs.add("turn"),
        min: vs.add("min"),
        max: vs.add("max"),
    };
    let init = vec![
        set(&v.x, atom("None")),
        set(&v.turn, atom("input")),
        set(&v.min, infinity()),
        set(&v.max, minus_infinity()),
    ];
    let input = input_num(&v.x, &v.turn, &[&v.min, &v.max]);
    let x = v.x.e();
    let respond = vec![
        require(v.turn.e().eq(atom("output"))),
        set(&v.turn, atom("input")),
        set(&v.min, ite(is_leq(x.clone(), v.min.e()), x.clone(), v.min.e())),
        set(&v.max, ite(is_geq(x.clone(), v.max.e()), x.clone(), v.max.e())),
        set(&v.x, report(&x, v.max.p(), v.min.p())),
    ];
    (vs, v, init, input, respond)
}

fn build2(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, _, init, input, respond) = parts2();
    let next = disj([leaf("InputNum", input), leaf("Respond", respond)]);
    Ok(SpecDef::new("MinMax2", vs.into_names(), init, next, None, cfg.clone())?)
}

/// `MinMax2` with history `h`, one update per subaction.
fn build2h(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let base = build2(cfg)?;
    let h = base.next_var("h");
    let x = base.v("x");
    let hs = HistorySpec::new("h", empty_set())
        .on("InputNum", h.e())
        .on("Respond", h.e().with(x.e()));
    Ok(renamed(attach_history(&base, &hs)?, "MinMax2H")?)
}

/// The same history added to `Next` as a single subaction, with the update
/// chosen by the value of `turn`.
fn build2h_coarse(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (mut vs, v, mut init, input, respond) = parts2();
    let h = vs.add("h");
    init.push(set(&h, empty_set()));
    let body = vec![
        any([input, respond]),
        any([
            vec![require(v.turn.e().eq(atom("input"))), set(&h, h.e())],
            vec![
                require(v.turn.e().eq(atom("output"))),
                set(&h, h.e().with(v.x.e())),
            ],
        ]),
    ];
    Ok(SpecDef::new(
        "MinMax2HCoarse",
        vs.into_names(),
        init,
        leaf("Next", body),
        None,
        cfg.clone(),
    )?)
}

/// `min` and `max` as functions of the set of inputs.
fn bar_bounds(y: Expr) -> (Expr, Expr) {
    (
        ite(y.eq(empty_set()), infinity(), y.set_min()),
        ite(y.eq(empty_set()), minus_infinity(), y.set_max()),
    )
}

fn to_minmax2(low: &SpecDef) -> RefinementMapping {
    let (min, max) = bar_bounds(low.v("y").e());
    RefinementMapping::new(
        "to-MinMax2",
        "MinMax2",
        [
            ("x", low.v("x").e()),
            ("turn", low.v("turn").e()),
            ("min", min),
            ("max", max),
        ],
    )
}

fn to_minmax1(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-MinMax1",
        "MinMax1",
        [
            ("x", low.v("x").e()),
            ("turn", low.v("turn").e()),
            ("y", low.v("h").e()),
        ],
    )
}

fn erase_h(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-MinMax2",
        "MinMax2",
        ["x", "turn", "min", "max"].map(|n| (n, low.v(n).e())),
    )
}

fn type_ok1(s: &SpecDef) -> Expr {
    let reports = lit(crate::value::Value::set(atoms_v(&["Lo", "Hi", "Both", "None"])));
    and([
        s.v("x").e().in_(symbolic("Int").union(reports)),
        s.v("turn").e().in_(lit(crate::value::Value::set(atoms_v(&["input", "output"])))),
        s.v("y").e().subset_eq(symbolic("Int")),
    ])
}

fn min_le_max(s: &SpecDef) -> Expr {
    let (min, max) = (s.v("min").e(), s.v("max").e());
    or([
        and([min.eq(infinity()), max.eq(minus_infinity())]),
        min.le(max),
    ])
}

fn bounds_match_history(s: &SpecDef) -> Expr {
    let (min, max) = bar_bounds(s.v("h").e());
    and([s.v("min").e().eq(min), s.v("max").e().eq(max)])
}

pub(super) static ENTRIES: [ExampleEntry; 4] = [
    ExampleEntry {
        name: "MinMax1",
        about: "reads integers and reports Lo/Hi/Both/None against the set of inputs",
        required_params: &["Int"],
        defaults,
        build: build1,
        mappings: &[MappingEntry {
            name: "to-MinMax2",
            target: "MinMax2",
            build: to_minmax2,
        }],
        invariants: &[NamedExpr {
            name: "TypeOK",
            about: "x, turn and y are well typed",
            build: type_ok1,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "MinMax2",
        about: "the same reports computed from the running minimum and maximum",
        required_params: &["Int"],
        defaults,
        build: build2,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "MinLeMax",
            about: "min and max are both unset or min =< max",
            build: min_le_max,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "MinMax2H",
        about: "MinMax2 with history h of all inputs, one update per subaction",
        required_params: &["Int"],
        defaults,
        build: build2h,
        mappings: &[
            MappingEntry {
                name: "to-MinMax1",
                target: "MinMax1",
                build: to_minmax1,
            },
            MappingEntry {
                name: "to-MinMax2",
                target: "MinMax2",
                build: erase_h,
            },
        ],
        invariants: &[NamedExpr {
            name: "BoundsMatchHistory",
            about: "min and max are the extremes of h",
            build: bounds_match_history,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "MinMax2HCoarse",
        about: "MinMax2H with Next as one subaction and a turn-conditional update of h",
        required_params: &["Int"],
        defaults,
        build: build2h_coarse,
        mappings: &[
            MappingEntry {
                name: "to-MinMax1",
                target: "MinMax1",
                build: to_minmax1,
            },
            MappingEntry {
                name: "to-MinMax2",
                target: "MinMax2",
                build: erase_h,
            },
        ],
        invariants: &[NamedExpr {
            name: "BoundsMatchHistory",
            about: "min and max are the extremes of h",
            build: bounds_match_history,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
];
