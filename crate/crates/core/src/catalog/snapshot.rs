//! The snapshot spec in which a reader chooses its output as late as
//! possible, its `IEndRd` decomposition, and that decomposition with a
//! prophecy variable and a stuttering variable added so that it refines the
//! linearizable snapshot.

use super::linear::{init_mem, mem_vals, not_mem_val, not_reg_val, snapshot_defaults};
use super::{nat_range, CatalogResult, ExampleEntry, MappingEntry, NamedExpr, ProphecySetup, StutterSetup};
use crate::config::ModelConfig;
use crate::expr::{
    and, atom, empty_fcn, empty_set, fcn, filter, forall, int, ite, lit, or, range, set_of, symbolic,
    tt, tuple, Expr, Lambda, VarRef,
};
use crate::history::renamed;
use crate::prophecy::{attach_prophecy, ProphecyShape, ProphecyTable, SubactionProphecy};
use crate::spec::{
    disj, exists_ctx, leaf, local, require, set, unchanged, DisjRep, RefinementMapping, SpecDef, SpecError,
    Step, Vars,
};
use crate::stuttering::{attach_stuttering, top, Stutter, StutterTable, Wrap};
use crate::value::{subset_of, SetV, Value};

struct V {
    mem: VarRef,
    interface: VarRef,
    rstate: VarRef,
    wstate: VarRef,
}

fn vars() -> (Vars, V) {
    let mut vs = Vars::new();
    let v = V {
        mem: vs.add("mem"),
        interface: vs.add("interface"),
        rstate: vs.add("rstate"),
        wstate: vs.add("wstate"),
    };
    (vs, v)
}

fn readers() -> Expr {
    symbolic("Readers")
}

fn writers() -> Expr {
    symbolic("Writers")
}

fn init(v: &V, cfg: &ModelConfig) -> CatalogResult<Vec<Step>> {
    let im = init_mem(cfg)?;
    let im2 = im.clone();
    Ok(vec![
        set(&v.mem, im),
        set(
            &v.interface,
            fcn("i", readers().union(writers()), |i| {
                ite(i.in_(readers()), im2, not_reg_val())
            }),
        ),
        set(&v.rstate, fcn("i", readers(), |_| empty_fcn())),
        set(&v.wstate, fcn("i", writers(), |_| not_reg_val())),
    ])
}

fn begin_rd(v: &V, i: &Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).in_(mem_vals())),
        set(&v.interface, v.interface.e().except(i.clone(), not_mem_val())),
        set(&v.rstate, v.rstate.e().except(i.clone(), tuple([v.mem.e()]))),
        unchanged([&v.mem, &v.wstate]),
    ]
}

fn begin_wr(v: &V, i: &Expr, cmd: Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).eq(not_reg_val())),
        set(&v.interface, v.interface.e().except(i.clone(), cmd.clone())),
        set(&v.wstate, v.wstate.e().except(i.clone(), cmd)),
        unchanged([&v.mem, &v.rstate]),
    ]
}

fn do_wr(v: &V, i: &Expr) -> Vec<Step> {
    let at_if = v.interface.e().apply(i.clone());
    let rstate = v.rstate.e();
    let mem_p = v.mem.p();
    vec![
        require(at_if.in_(symbolic("RegVals"))),
        require(v.wstate.e().apply(i.clone()).eq(at_if.clone())),
        set(&v.mem, v.mem.e().except(i.clone(), at_if)),
        set(&v.wstate, v.wstate.e().except(i.clone(), not_reg_val())),
        set(
            &v.rstate,
            fcn("j", readers(), |j| {
                ite(
                    rstate.apply(j.clone()).eq(empty_fcn()),
                    empty_fcn(),
                    rstate.apply(j).append(mem_p),
                )
            }),
        ),
        set(&v.interface, v.interface.e()),
    ]
}

/// The body of `EndRd(i)` once `j` is fixed, which is `IEndRd(i, j)`.
fn i_end_rd(v: &V, i: &Expr, j: Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).eq(not_mem_val())),
        set(
            &v.interface,
            v.interface
                .e()
                .except(i.clone(), v.rstate.e().apply(i.clone()).apply(j)),
        ),
        set(&v.rstate, v.rstate.e().except(i.clone(), empty_fcn())),
        unchanged([&v.mem, &v.wstate]),
    ]
}

fn end_rd(v: &V, i: &Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).eq(not_mem_val())),
        local("j", range(int(1), v.rstate.e().apply(i.clone()).len()), |j| {
            vec![set(
                &v.interface,
                v.interface
                    .e()
                    .except(i.clone(), v.rstate.e().apply(i.clone()).apply(j)),
            )]
        }),
        set(&v.rstate, v.rstate.e().except(i.clone(), empty_fcn())),
        unchanged([&v.mem, &v.wstate]),
    ]
}

fn end_wr(v: &V, i: &Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).in_(symbolic("RegVals"))),
        require(v.wstate.e().apply(i.clone()).eq(not_reg_val())),
        set(
            &v.interface,
            v.interface.e().except(i.clone(), v.wstate.e().apply(i.clone())),
        ),
        unchanged([&v.mem, &v.rstate, &v.wstate]),
    ]
}

fn writer_part(v: &V) -> DisjRep {
    exists_ctx("i", writers(), |i| {
        disj([
            exists_ctx("cmd", symbolic("RegVals"), |cmd| leaf("BeginWr", begin_wr(v, &i, cmd))),
            leaf("DoWr", do_wr(v, &i)),
            leaf("EndWr", end_wr(v, &i)),
        ])
    })
}

/// `\A r \in Readers : Len(rstate[r]) =< MaxLen`, when the bound is set.
fn len_constraint(v: &V, cfg: &ModelConfig) -> CatalogResult<Option<Expr>> {
    let rstate = v.rstate.e();
    Ok(cfg.constraint_bound("MaxLen")?.map(|n| {
        forall("r", readers(), |r| rstate.apply(r).len().le(int(n)))
    }))
}

fn build(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, v) = vars();
    let next = disj([
        exists_ctx("i", readers(), |i| {
            disj([leaf("BeginRd", begin_rd(&v, &i)), leaf("EndRd", end_rd(&v, &i))])
        }),
        writer_part(&v),
    ]);
    Ok(SpecDef::new(
        "NewLinearSnapshot",
        vs.into_names(),
        init(&v, cfg)?,
        next,
        len_constraint(&v, cfg)?,
        cfg.clone(),
    )?)
}

fn build_nxt(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let (vs, v) = vars();
    let next = disj([
        exists_ctx("i", readers(), |i| {
            disj([
                leaf("BeginRd", begin_rd(&v, &i)),
                exists_ctx("j", range(int(1), v.rstate.e().apply(i.clone()).len()), |j| {
                    leaf("IEndRd", i_end_rd(&v, &i, j))
                }),
            ])
        }),
        writer_part(&v),
    ]);
    Ok(SpecDef::new(
        "NewLinearSnapshotNxt",
        vs.into_names(),
        init(&v, cfg)?,
        next,
        len_constraint(&v, cfg)?,
        cfg.clone(),
    )?)
}

/// `Dom == {r \in Readers : rstate[r] # << >>}`
fn dom(rstate: Expr) -> Expr {
    filter("r", readers(), |r| rstate.apply(r).ne(empty_fcn()))
}

fn prophecy(cfg: &ModelConfig) -> CatalogResult<ProphecySetup> {
    let base = build_nxt(cfg)?;
    let rstate = base.v("rstate").e();
    let d = dom(rstate);
    let shape = ProphecyShape::new("p", nat_range(cfg, "MaxLen", 1)?, d.clone());
    let keep = || SubactionProphecy::new(Lambda::new("q", |_| tt()), Some(d.id_fcn()), empty_set());
    let i = crate::expr::bound("i");
    let j = crate::expr::bound("j");
    let mut table = ProphecyTable::new();
    table.insert("BeginRd".into(), keep());
    table.insert(
        "IEndRd".into(),
        SubactionProphecy::new(
            Lambda::new("q", |q| j.eq(q.apply(i.clone()))),
            Some(shape.dom_prime().id_fcn()),
            set_of([i.clone()]),
        ),
    );
    table.insert("BeginWr".into(), keep());
    table.insert("DoWr".into(), keep());
    table.insert("EndWr".into(), keep());
    Ok(ProphecySetup { base, shape, table })
}

fn build_p(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let ps = prophecy(cfg)?;
    Ok(renamed(attach_prophecy(&ps.base, &ps.shape, &ps.table)?, "NewLinearSnapshotP")?)
}

fn count_down() -> Lambda {
    Lambda::new("j", |j| j.sub(int(1)))
}

fn drop_one() -> Lambda {
    Lambda::new("S", |s| s.without(s.choose_min()))
}

fn stuttering(cfg: &ModelConfig) -> CatalogResult<StutterSetup> {
    let base = build_p(cfg)?;
    let p = base.v("p");
    let rstate = base.v("rstate");
    let i = crate::expr::bound("i");
    let mut table = StutterTable::new();
    table.insert(
        "BeginRd".into(),
        Wrap::Stutter(Stutter::may_post(
            "BeginRd",
            i.clone(),
            lit(Value::set([Value::int(0), Value::int(1)])),
            int(0),
            ite(p.p().apply(i.clone()).eq(int(1)), int(1), int(0)),
            count_down(),
        )),
    );
    table.insert(
        "DoWr".into(),
        Wrap::Stutter(Stutter::may_post(
            "DoWr",
            i,
            readers().powerset(),
            empty_set(),
            filter("j", readers(), |j| {
                and([
                    rstate.e().apply(j.clone()).ne(empty_fcn()),
                    p.e().apply(j.clone()).eq(rstate.p().apply(j).len()),
                ])
            }),
            drop_one(),
        )),
    );
    for id in ["IEndRd", "BeginWr", "EndWr"] {
        table.insert(id.into(), Wrap::Plain);
    }
    let subsets = subset_of(cfg.substitution("Readers")?).map_err(|e| SpecError::Invalid {
        spec: "NewLinearSnapshotPS".into(),
        msg: e.to_string(),
    })?;
    Ok(StutterSetup {
        base,
        table,
        constants: vec![
            (
                "StutterConstantCondition({0,1}, 0, LAMBDA j : j-1)".into(),
                SetV::from_iter([Value::int(0), Value::int(1)]),
                Value::int(0),
                count_down(),
            ),
            (
                "StutterConstantCondition(SUBSET Readers, {}, LAMBDA S : S \\ {CHOOSE x \\in S : TRUE})"
                    .into(),
                subsets,
                Value::empty_set(),
                drop_one(),
            ),
        ],
    })
}

fn build_ps(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let st = stuttering(cfg)?;
    Ok(renamed(attach_stuttering(&st.base, "s", &st.table)?, "NewLinearSnapshotPS")?)
}

/// `istateBar`: writers show their write state, idle readers their
/// interface, and an active reader the snapshot its prophecy picks unless
/// the chosen point has not been reached yet.
fn istate_bar(low: &SpecDef) -> Expr {
    let (interface, rstate, wstate) = (low.v("interface").e(), low.v("rstate").e(), low.v("wstate").e());
    let (p, s) = (low.v("p").e(), low.v("s").e());
    let not_top = s.ne(lit(top()));
    fcn("i", readers().union(writers()), |i| {
        let ri = rstate.apply(i.clone());
        let pi = p.apply(i.clone());
        ite(
            i.in_(writers()),
            wstate.apply(i.clone()),
            ite(
                ri.eq(empty_fcn()),
                interface.apply(i.clone()),
                ite(
                    pi.eq(int(1)),
                    ite(
                        and([
                            not_top.clone(),
                            s.field("id").eq(atom("BeginRd")),
                            s.field("ctxt").eq(i.clone()),
                        ]),
                        not_mem_val(),
                        ri.apply(int(1)),
                    ),
                    ite(
                        or([
                            pi.gt(ri.len()),
                            and([
                                not_top,
                                s.field("id").eq(atom("DoWr")),
                                i.in_(s.field("val")),
                            ]),
                        ]),
                        not_mem_val(),
                        ri.apply(pi),
                    ),
                ),
            ),
        )
    })
}

fn to_linear_snapshot(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-LinearSnapshot",
        "LinearSnapshot",
        [
            ("mem", low.v("mem").e()),
            ("interface", low.v("interface").e()),
            ("istate", istate_bar(low)),
        ],
    )
}

fn identity_to(name: &'static str) -> impl Fn(&SpecDef) -> RefinementMapping {
    move |low| {
        RefinementMapping::new(
            &format!("to-{name}"),
            name,
            ["mem", "interface", "rstate", "wstate"].map(|n| (n, low.v(n).e())),
        )
    }
}

fn to_new(low: &SpecDef) -> RefinementMapping {
    identity_to("NewLinearSnapshot")(low)
}

fn to_nxt(low: &SpecDef) -> RefinementMapping {
    identity_to("NewLinearSnapshotNxt")(low)
}

fn rstate_bounded(s: &SpecDef) -> Expr {
    let n = s.config().constraint_bound("MaxLen").ok().flatten().unwrap_or(0);
    let rstate = s.v("rstate").e();
    forall("r", readers(), |r| rstate.apply(r).len().le(int(n)))
}

fn p_type(s: &SpecDef) -> Expr {
    let rstate = s.v("rstate").e();
    let pi = match nat_range(s.config(), "MaxLen", 1) {
        Ok(e) => e,
        Err(_) => empty_set(),
    };
    s.v("p").e().in_(crate::expr::fcn_set(dom(rstate), pi))
}

static NLS_MAPPINGS: [MappingEntry; 1] = [MappingEntry {
    name: "to-NewLinearSnapshotNxt",
    target: "NewLinearSnapshotNxt",
    build: to_nxt,
}];

static NXT_MAPPINGS: [MappingEntry; 1] = [MappingEntry {
    name: "to-NewLinearSnapshot",
    target: "NewLinearSnapshot",
    build: to_new,
}];

pub(super) static ENTRIES: [ExampleEntry; 4] = [
    ExampleEntry {
        name: "NewLinearSnapshot",
        about: "snapshot spec where a read returns any memory value seen during the read",
        required_params: &["Readers", "Writers", "RegVals", "InitRegVal"],
        defaults: snapshot_defaults,
        build,
        mappings: &NLS_MAPPINGS,
        invariants: &[NamedExpr {
            name: "RStateBound",
            about: "every rstate has at most MaxLen entries",
            build: rstate_bounded,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "NewLinearSnapshotNxt",
        about: "NewLinearSnapshot with EndRd split into IEndRd(i, j) by the returned entry j",
        required_params: &["Readers", "Writers", "RegVals", "InitRegVal"],
        defaults: snapshot_defaults,
        build: build_nxt,
        mappings: &NXT_MAPPINGS,
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "NewLinearSnapshotP",
        about: "NewLinearSnapshotNxt with prophecy p predicting which entry each read returns",
        required_params: &["Readers", "Writers", "RegVals", "InitRegVal", "MaxLen"],
        defaults: snapshot_defaults,
        build: build_p,
        mappings: &[MappingEntry {
            name: "to-NewLinearSnapshotNxt",
            target: "NewLinearSnapshotNxt",
            build: to_nxt,
        }],
        invariants: &[NamedExpr {
            name: "PType",
            about: "p \\in [Dom -> Pi]",
            build: p_type,
        }],
        targets: &[],
        action_props: &[],
        prophecy: Some(prophecy),
        stuttering: None,
    },
    ExampleEntry {
        name: "NewLinearSnapshotPS",
        about: "NewLinearSnapshotP with stuttering after BeginRd and DoWr",
        required_params: &["Readers", "Writers", "RegVals", "InitRegVal", "MaxLen"],
        defaults: snapshot_defaults,
        build: build_ps,
        mappings: &[
            MappingEntry {
                name: "to-LinearSnapshot",
                target: "LinearSnapshot",
                build: to_linear_snapshot,
            },
            MappingEntry {
                name: "to-NewLinearSnapshot",
                target: "NewLinearSnapshot",
                build: to_new,
            },
        ],
        invariants: &[NamedExpr {
            name: "PType",
            about: "p \\in [Dom -> Pi]",
            build: p_type,
        }],
        targets: &[],
        action_props: &[],
        prophecy: Some(prophecy),
        stuttering: Some(stuttering),
    },
];
