//! The simplified Afek et al. snapshot algorithm, in which a reader scans
//! the memory twice and accepts the scan when both reads agree, plus its
//! extension with the history variable `h` that records what
//! `NewLinearSnapshot` keeps in `rstate`.

use super::linear::{mem_vals, not_mem_val, not_reg_val, snapshot_defaults};
use super::{const_param, CatalogResult, ExampleEntry, MappingEntry, NamedExpr};
use crate::config::ModelConfig;
use crate::expr::{
    and, atom, empty_fcn, exists, fcn, forall, int, ite, or, primed, symbolic, tuple, Expr, VarRef,
};
use crate::history::{attach_history, renamed, HistorySpec};
use crate::spec::{
    disj, exists_ctx, leaf, local, require, set, unchanged, when, RefinementMapping, SpecDef, Step,
    Vars,
};

fn readers() -> Expr {
    symbolic("Readers")
}

fn writers() -> Expr {
    symbolic("Writers")
}

fn reg_vals() -> Expr {
    symbolic("RegVals")
}

/// `AddToFcn(f, x, v)`
pub(crate) fn add_to_fcn(f: Expr, x: Expr, v: Expr) -> Expr {
    fcn("y", f.domain().union(crate::expr::set_of([x.clone()])), |y| {
        ite(y.eq(x), v, f.apply(y))
    })
}

struct V {
    imem: VarRef,
    interface: VarRef,
    wr_num: VarRef,
    rd_val1: VarRef,
    rd_val2: VarRef,
}

fn begin_wr(v: &V, i: &Expr, cmd: Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).eq(not_reg_val())),
        set(
            &v.wr_num,
            v.wr_num
                .e()
                .except(i.clone(), v.wr_num.e().apply(i.clone()).add(int(1))),
        ),
        set(&v.interface, v.interface.e().except(i.clone(), cmd)),
        unchanged([&v.imem, &v.rd_val1, &v.rd_val2]),
    ]
}

fn do_wr(v: &V, i: &Expr) -> Vec<Step> {
    let at_if = v.interface.e().apply(i.clone());
    let wr = v.wr_num.e().apply(i.clone());
    vec![
        require(at_if.in_(reg_vals())),
        require(v.imem.e().apply(i.clone()).apply(int(2)).ne(wr.clone())),
        set(&v.imem, v.imem.e().except(i.clone(), tuple([at_if, wr]))),
        unchanged([&v.interface, &v.wr_num, &v.rd_val1, &v.rd_val2]),
    ]
}

fn end_wr(v: &V, i: &Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).in_(reg_vals())),
        require(
            v.imem
                .e()
                .apply(i.clone())
                .apply(int(2))
                .eq(v.wr_num.e().apply(i.clone())),
        ),
        set(&v.interface, v.interface.e().except(i.clone(), not_reg_val())),
        unchanged([&v.imem, &v.wr_num, &v.rd_val1, &v.rd_val2]),
    ]
}

fn begin_rd(v: &V, i: &Expr) -> Vec<Step> {
    vec![
        require(v.interface.e().apply(i.clone()).in_(mem_vals())),
        set(&v.interface, v.interface.e().except(i.clone(), not_mem_val())),
        unchanged([&v.imem, &v.wr_num, &v.rd_val1, &v.rd_val2]),
    ]
}

fn rd(v: &V, i: &Expr, first: bool) -> Vec<Step> {
    let (this, other) = if first {
        (&v.rd_val1, &v.rd_val2)
    } else {
        (&v.rd_val2, &v.rd_val1)
    };
    let mut steps = vec![require(v.interface.e().apply(i.clone()).eq(not_mem_val()))];
    if !first {
        steps.push(require(v.rd_val1.e().apply(i.clone()).domain().eq(writers())));
    }
    let mine = this.e().apply(i.clone());
    steps.push(local("j", writers().minus(mine.domain()), |j| {
        vec![set(
            this,
            this.e()
                .except(i.clone(), add_to_fcn(mine, j.clone(), v.imem.e().apply(j))),
        )]
    }));
    steps.push(unchanged([&v.interface, &v.imem, &v.wr_num, other]));
    steps
}

fn try_end_rd(v: &V, i: &Expr) -> Vec<Step> {
    let r1 = v.rd_val1.e().apply(i.clone());
    let r2 = v.rd_val2.e().apply(i.clone());
    vec![
        require(v.interface.e().apply(i.clone()).eq(not_mem_val())),
        require(r1.domain().eq(writers())),
        require(r2.domain().eq(writers())),
        when(
            r1.eq(r2),
            vec![set(
                &v.interface,
                v.interface.e().except(
                    i.clone(),
                    fcn("j", writers(), |j| r1.apply(j).apply(int(1))),
                ),
            )],
            vec![set(&v.interface, v.interface.e())],
        ),
        set(&v.rd_val1, v.rd_val1.e().except(i.clone(), empty_fcn())),
        set(&v.rd_val2, v.rd_val2.e().except(i.clone(), empty_fcn())),
        unchanged([&v.imem, &v.wr_num]),
    ]
}

fn build(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let mut vs = Vars::new();
    let v = V {
        imem: vs.add("imem"),
        interface: vs.add("interface"),
        wr_num: vs.add("wrNum"),
        rd_val1: vs.add("rdVal1"),
        rd_val2: vs.add("rdVal2"),
    };
    let init_val = const_param(cfg, "InitRegVal")?;
    let init_mem = {
        let iv = init_val.clone();
        fcn("i", writers(), move |_| iv)
    };
    let init = vec![
        set(&v.imem, fcn("i", writers(), |_| tuple([init_val, int(0)]))),
        set(
            &v.interface,
            fcn("i", readers().union(writers()), |i| {
                ite(i.in_(readers()), init_mem, not_reg_val())
            }),
        ),
        set(&v.wr_num, fcn("i", writers(), |_| int(0))),
        set(&v.rd_val1, fcn("i", readers(), |_| empty_fcn())),
        set(&v.rd_val2, fcn("i", readers(), |_| empty_fcn())),
    ];
    let next = disj([
        exists_ctx("i", readers(), |i| {
            disj([
                leaf("BeginRd", begin_rd(&v, &i)),
                leaf("Rd1", rd(&v, &i, true)),
                leaf("Rd2", rd(&v, &i, false)),
                leaf("TryEndRd", try_end_rd(&v, &i)),
            ])
        }),
        exists_ctx("i", writers(), |i| {
            disj([
                exists_ctx("cmd", reg_vals(), |cmd| leaf("BeginWr", begin_wr(&v, &i, cmd))),
                leaf("DoWr", do_wr(&v, &i)),
                leaf("EndWr", end_wr(&v, &i)),
            ])
        }),
    ]);
    let wr_num = v.wr_num.e();
    let constraint = cfg
        .constraint_bound("MaxWrites")?
        .map(|n| forall("w", writers(), |w| wr_num.apply(w).le(int(n))));
    Ok(SpecDef::new("AfekSimplified", vs.into_names(), init, next, constraint, cfg.clone())?)
}

/// `memBar == [i \in Writers |-> imem[i][1]]`
fn mem_bar(imem: Expr) -> Expr {
    fcn("i", writers(), |i| imem.apply(i).apply(int(1)))
}

fn build_h(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let base = build(cfg)?;
    let h = base.next_var("h").e();
    let imem = base.v("imem");
    let i = crate::expr::bound("i");
    let hs = HistorySpec::new("h", fcn("i", readers(), |_| empty_fcn()))
        .on("BeginWr", h.clone())
        .on(
            "DoWr",
            fcn("j", readers(), |j| {
                let hj = h.apply(j);
                ite(
                    hj.eq(empty_fcn()),
                    empty_fcn(),
                    hj.append(primed(mem_bar(imem.e()))),
                )
            }),
        )
        .on("EndWr", h.clone())
        .on("BeginRd", h.except(i.clone(), tuple([mem_bar(imem.e())])))
        .on("Rd1", h.clone())
        .on("Rd2", h.clone())
        .on(
            "TryEndRd",
            ite(
                base.v("rdVal1")
                    .e()
                    .apply(i.clone())
                    .eq(base.v("rdVal2").e().apply(i.clone())),
                h.except(i, empty_fcn()),
                h.clone(),
            ),
        );
    Ok(renamed(attach_history(&base, &hs)?, "AfekSimplifiedH")?)
}

/// Adds `obs`, where `obs[r][w]` follows the writes of `w` during the
/// current read of `r`: "begun" once a write starts, then the written value
/// once that write ends.
fn build_obs(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    let base = build_h(cfg)?;
    let obs = base.next_var("obs").e();
    let interface = base.v("interface").e();
    let i = crate::expr::bound("i");
    let reading = |r: Expr| interface.apply(r).eq(not_mem_val());
    let none_row = || fcn("w", writers(), |_| atom("none"));
    let begun = fcn("r", readers(), |r| {
        ite(
            reading(r.clone()),
            obs.apply(r.clone()).except(i.clone(), atom("begun")),
            obs.apply(r),
        )
    });
    let ended = fcn("r", readers(), |r| {
        ite(
            and([
                reading(r.clone()),
                obs.apply(r.clone()).apply(i.clone()).eq(atom("begun")),
            ]),
            obs.apply(r.clone())
                .except(i.clone(), interface.apply(i.clone())),
            obs.apply(r),
        )
    });
    let hs = HistorySpec::new("obs", fcn("r", readers(), |_| none_row()))
        .on("BeginWr", begun)
        .on("DoWr", obs.clone())
        .on("EndWr", ended)
        .on("BeginRd", obs.except(i, none_row()))
        .on("Rd1", obs.clone())
        .on("Rd2", obs.clone())
        .on("TryEndRd", obs.clone());
    Ok(renamed(attach_history(&base, &hs)?, "AfekSimplifiedHObs")?)
}

/// `wstateBar`
fn wstate_bar(low: &SpecDef) -> Expr {
    let interface = low.v("interface").e();
    let wr_num = low.v("wrNum").e();
    let imem = low.v("imem").e();
    fcn("i", writers(), |i| {
        ite(
            or([
                interface.apply(i.clone()).eq(not_reg_val()),
                wr_num.apply(i.clone()).eq(imem.apply(i.clone()).apply(int(2))),
            ]),
            not_reg_val(),
            interface.apply(i),
        )
    })
}

fn to_new_linear_snapshot(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-NewLinearSnapshot",
        "NewLinearSnapshot",
        [
            ("mem", mem_bar(low.v("imem").e())),
            ("interface", low.v("interface").e()),
            ("rstate", low.v("h").e()),
            ("wstate", wstate_bar(low)),
        ],
    )
}

/// The obvious candidate without auxiliary variables: the internal state
/// of every process is guessed to be its interface value.
fn to_linear_snapshot_naive(low: &SpecDef) -> RefinementMapping {
    let interface = low.v("interface").e();
    RefinementMapping::new(
        "to-LinearSnapshot-naive",
        "LinearSnapshot",
        [
            ("mem", mem_bar(low.v("imem").e())),
            ("interface", interface.clone()),
            ("istate", interface),
        ],
    )
}

fn erase_obs(low: &SpecDef) -> RefinementMapping {
    RefinementMapping::new(
        "to-AfekSimplifiedH",
        "AfekSimplifiedH",
        ["imem", "interface", "wrNum", "rdVal1", "rdVal2", "h"].map(|n| (n, low.v(n).e())),
    )
}

fn writes_bounded(s: &SpecDef) -> Expr {
    let n = s.config().constraint_bound("MaxWrites").ok().flatten().unwrap_or(0);
    let wr_num = s.v("wrNum").e();
    forall("w", writers(), |w| wr_num.apply(w).le(int(n)))
}

/// A completed read returned, for some writer, a value other than the one
/// written by a write that began and ended while the read was running.
fn stale_read(s: &SpecDef) -> Expr {
    let interface = s.v("interface").e();
    let obs = s.v("obs").e();
    exists("r", readers(), |r| {
        let out = interface.apply(r.clone());
        and([
            out.in_(mem_vals()),
            exists("w", writers(), |w| {
                let seen = obs.apply(r).apply(w.clone());
                and([seen.in_(reg_vals()), out.apply(w).ne(seen)])
            }),
        ])
    })
}

const PARAMS: &[&str] = &["Readers", "Writers", "RegVals", "InitRegVal", "MaxWrites"];

pub(super) static ENTRIES: [ExampleEntry; 3] = [
    ExampleEntry {
        name: "AfekSimplified",
        about: "the simplified Afek et al. snapshot algorithm with double scans",
        required_params: PARAMS,
        defaults: snapshot_defaults,
        build,
        mappings: &[MappingEntry {
            name: "to-LinearSnapshot-naive",
            target: "LinearSnapshot",
            build: to_linear_snapshot_naive,
        }],
        invariants: &[NamedExpr {
            name: "WritesBounded",
            about: "no writer has begun more than MaxWrites writes",
            build: writes_bounded,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "AfekSimplifiedH",
        about: "AfekSimplified with history h recording the memory values each read may return",
        required_params: PARAMS,
        defaults: snapshot_defaults,
        build: build_h,
        mappings: &[MappingEntry {
            name: "to-NewLinearSnapshot",
            target: "NewLinearSnapshot",
            build: to_new_linear_snapshot,
        }],
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "AfekSimplifiedHObs",
        about: "AfekSimplifiedH with observer obs tracking writes that overlap each read",
        required_params: PARAMS,
        defaults: snapshot_defaults,
        build: build_obs,
        mappings: &[MappingEntry {
            name: "to-AfekSimplifiedH",
            target: "AfekSimplifiedH",
            build: erase_obs,
        }],
        invariants: &[],
        targets: &[NamedExpr {
            name: "StaleRead",
            about: "a read returned a value older than a write that ran entirely during it",
            build: stale_read,
        }],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{lit, Env, Scope};
    use crate::value::{self, Fcn, Value};

    #[test]
    fn add_to_fcn_agrees_with_the_value_helper() {
        let cfg = ModelConfig::new();
        let f = Fcn::from_pairs([(Value::atom("a"), Value::int(1))]);
        for (x, v) in [("a", 5), ("b", 2)] {
            let e = add_to_fcn(lit(Value::Fcn(f.clone())), atom(x), int(v));
            let got = e.eval(&Scope::constant(&cfg), &mut Env::new()).unwrap();
            assert_eq!(got, Value::Fcn(value::add_to_fcn(&f, Value::atom(x), Value::int(v))));
        }
    }
}
