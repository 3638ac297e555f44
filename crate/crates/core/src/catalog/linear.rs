//! Linearizable objects. [`linearizability`] builds the generic spec from
//! its parameters; the catalog instantiates it as a read/write register and
//! as the linearizable snapshot object.

use std::sync::Arc;

use super::{const_param, ints, CatalogResult, ExampleEntry, NamedExpr};
use crate::config::ModelConfig;
use crate::expr::{
    and, atom, fcn, fcn_set, forall, ite, lit, map_set, record, set_of, symbolic, Env, EvalResult,
    Expr, Lambda, Scope,
};
use crate::spec::{disj, exists_ctx, leaf, let_step, require, set, unchanged, SpecDef, SpecError, Vars};
use crate::value::{sentinel, SetV, Value};

pub type ApplyFn = Arc<dyn Fn(Expr, Expr, Expr) -> Expr + Send + Sync>;

/// The constant parameters of a linearizable object.
#[derive(Clone)]
pub struct LinearParams {
    /// Name of the object variable (`object` in the generic spec).
    pub object: String,
    pub procs: Expr,
    pub commands: Lambda,
    pub outputs: Lambda,
    pub init_output: Lambda,
    pub init_obj: Expr,
    /// `Apply(i, cmd, obj)`, a record with fields `output` and `newState`.
    pub apply: ApplyFn,
}

/// The safety spec of the linearizable object with parameters `p`.
pub fn linearizability(name: &str, p: &LinearParams, cfg: &ModelConfig) -> Result<SpecDef, SpecError> {
    let mut vs = Vars::new();
    let object = vs.add(&p.object);
    let interface = vs.add("interface");
    let istate = vs.add("istate");
    let init = vec![
        set(&object, p.init_obj.clone()),
        set(&interface, fcn("i", p.procs.clone(), |i| p.init_output.call(i))),
        set(&istate, fcn("i", p.procs.clone(), |i| p.init_output.call(i))),
    ];
    let next = exists_ctx("i", p.procs.clone(), |i| {
        let at = |v: &crate::expr::VarRef| v.e().apply(i.clone());
        disj([
            exists_ctx("cmd", p.commands.call(i.clone()), |cmd| {
                leaf(
                    "BeginOp",
                    vec![
                        require(at(&interface).in_(p.outputs.call(i.clone()))),
                        set(&interface, interface.e().except(i.clone(), cmd.clone())),
                        set(&istate, istate.e().except(i.clone(), cmd)),
                        set(&object, object.e()),
                    ],
                )
            }),
            leaf(
                "DoOp",
                vec![
                    require(at(&interface).in_(p.commands.call(i.clone()))),
                    require(at(&istate).eq(at(&interface))),
                    let_step(
                        "result",
                        (p.apply)(i.clone(), at(&interface), object.e()),
                        |r| {
                            vec![
                                set(&object, r.field("newState")),
                                set(&istate, istate.e().except(i.clone(), r.field("output"))),
                            ]
                        },
                    ),
                    set(&interface, interface.e()),
                ],
            ),
            leaf(
                "EndOp",
                vec![
                    require(at(&interface).in_(p.commands.call(i.clone()))),
                    require(at(&istate).in_(p.outputs.call(i.clone()))),
                    set(&interface, interface.e().except(i.clone(), at(&istate))),
                    unchanged([&object, &istate]),
                ],
            ),
        ])
    });
    SpecDef::new(name, vs.into_names(), init, next, None, cfg.clone())
}

fn eval_const(cfg: &ModelConfig, e: &Expr) -> EvalResult<Value> {
    e.eval(&Scope::constant(cfg), &mut Env::new())
}

/// The objects reachable from `InitObj` by applying commands, computed as
/// the union of `ApplyITimes[n]` for `n` up to `depth` (or until no new
/// objects appear).
pub fn obj_values(p: &LinearParams, cfg: &ModelConfig, depth: usize) -> EvalResult<SetV> {
    let procs = eval_const(cfg, &p.procs)?.as_set().cloned().map_err(crate::expr::EvalError::from)?;
    let mut all = SetV::from_iter([eval_const(cfg, &p.init_obj)?]);
    let mut layer = all.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for i in procs.iter() {
            let cmds = p.commands.apply_const(cfg, i)?;
            for cmd in cmds.as_set().map_err(crate::expr::EvalError::from)?.iter() {
                for obj in layer.iter() {
                    let r = eval_const(cfg, &(p.apply)(lit(i.clone()), lit(cmd.clone()), lit(obj.clone())))?;
                    next.push(r.apply(&Value::atom("newState")).map_err(crate::expr::EvalError::from)?);
                }
            }
        }
        let fresh: SetV = SetV::from_iter(next).minus(&all);
        if fresh.is_empty() {
            break;
        }
        all = all.union(&fresh);
        layer = fresh;
    }
    Ok(all)
}

/// `LinearAssumps` with `ObjValues` given explicitly.
pub fn linear_assumps(p: &LinearParams, cfg: &ModelConfig, obj_values: &SetV) -> EvalResult<bool> {
    let ov = lit(Value::Set(obj_values.clone()));
    let e = and([
        p.init_obj.in_(ov.clone()),
        forall("i", p.procs.clone(), |i| {
            and([
                p.init_output.call(i.clone()).in_(p.outputs.call(i.clone())),
                p.outputs
                    .call(i.clone())
                    .inter(p.commands.call(i.clone()))
                    .eq(crate::expr::empty_set()),
                forall("obj", ov.clone(), |obj| {
                    forall("cmd", p.commands.call(i.clone()), |cmd| {
                        let r = (p.apply)(i.clone(), cmd, obj);
                        and([
                            r.field("output").in_(p.outputs.call(i.clone())),
                            r.field("newState").in_(ov.clone()),
                        ])
                    })
                }),
            ])
        }),
    ]);
    eval_const(cfg, &e)?.as_bool().map_err(crate::expr::EvalError::from)
}

/// A read/write register: reads return the value, writes return "ok".
pub fn register_params(cfg: &ModelConfig) -> CatalogResult<LinearParams> {
    let init = const_param(cfg, "InitRegVal")?;
    let vals = symbolic("RegVals");
    let ok = record([("ret", atom("ok"))]);
    let commands = {
        let vals = vals.clone();
        Lambda::new("i", move |_| {
            set_of([record([("op", atom("read"))])])
                .union(map_set("v", vals, |v| record([("op", atom("write")), ("arg", v)])))
        })
    };
    let outputs = {
        let (vals, ok) = (vals.clone(), ok.clone());
        Lambda::new("i", move |_| {
            map_set("v", vals, |v| record([("ret", v)])).with(ok)
        })
    };
    let ok2 = ok.clone();
    Ok(LinearParams {
        object: "object".into(),
        procs: symbolic("Procs"),
        commands,
        outputs,
        init_output: Lambda::new("i", move |_| ok.clone()),
        init_obj: init,
        apply: Arc::new(move |_i, cmd, obj| {
            ite(
                cmd.field("op").eq(atom("read")),
                record([("newState", obj.clone()), ("output", record([("ret", obj)]))]),
                record([("newState", cmd.field("arg")), ("output", ok2.clone())]),
            )
        }),
    })
}

pub(crate) fn mem_vals() -> Expr {
    fcn_set(symbolic("Writers"), symbolic("RegVals"))
}

pub(crate) fn init_mem(cfg: &ModelConfig) -> CatalogResult<Expr> {
    let v = const_param(cfg, "InitRegVal")?;
    Ok(fcn("i", symbolic("Writers"), move |_| v))
}

pub(crate) fn not_mem_val() -> Expr {
    lit(sentinel::not_mem_val())
}

pub(crate) fn not_reg_val() -> Expr {
    lit(sentinel::not_reg_val())
}

/// The parameters of the linearizable snapshot object over `mem`.
pub fn snapshot_params(cfg: &ModelConfig) -> CatalogResult<LinearParams> {
    let readers = symbolic("Readers");
    let is_reader = {
        let r = readers.clone();
        move |i: Expr| i.in_(r.clone())
    };
    let ir = is_reader.clone();
    let commands = Lambda::new("i", move |i| ite(ir(i), set_of([not_mem_val()]), symbolic("RegVals")));
    let ir = is_reader.clone();
    let outputs = Lambda::new("i", move |i| ite(ir(i), mem_vals(), set_of([not_reg_val()])));
    let im = init_mem(cfg)?;
    let ir = is_reader.clone();
    let im2 = im.clone();
    let init_output = Lambda::new("i", move |i| ite(ir(i), im2, not_reg_val()));
    let ir = is_reader;
    Ok(LinearParams {
        object: "mem".into(),
        procs: readers.union(symbolic("Writers")),
        commands,
        outputs,
        init_output,
        init_obj: im,
        apply: Arc::new(move |i, cmd, obj| {
            ite(
                ir(i.clone()),
                record([("newState", obj.clone()), ("output", obj.clone())]),
                record([
                    ("newState", obj.except(i, cmd)),
                    ("output", not_reg_val()),
                ]),
            )
        }),
    })
}

pub(crate) fn snapshot_defaults() -> ModelConfig {
    ModelConfig::new()
        .substitute("Readers", [Value::atom("r1")])
        .substitute("Writers", [Value::atom("w1"), Value::atom("w2")])
        .substitute("RegVals", ints(0, 1))
        .constant("InitRegVal", 0)
        .bound("MaxLen", 3)
        .bound("MaxWrites", 2)
}

fn register_defaults() -> ModelConfig {
    ModelConfig::new()
        .substitute("Procs", [Value::atom("p1"), Value::atom("p2")])
        .substitute("RegVals", ints(0, 1))
        .constant("InitRegVal", 0)
}

fn build_register(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    Ok(linearizability("Linearizability", &register_params(cfg)?, cfg)?)
}

fn build_snapshot(cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    Ok(linearizability("LinearSnapshot", &snapshot_params(cfg)?, cfg)?)
}

fn reader_outputs_are_mem_vals(s: &SpecDef) -> Expr {
    let interface = s.v("interface").e();
    forall("r", symbolic("Readers"), |r| {
        interface.apply(r.clone()).in_(mem_vals().with(not_mem_val()))
    })
}

pub(super) static ENTRIES: [ExampleEntry; 2] = [
    ExampleEntry {
        name: "Linearizability",
        about: "the generic linearizable object, instantiated as a read/write register",
        required_params: &["Procs", "RegVals", "InitRegVal"],
        defaults: register_defaults,
        build: build_register,
        mappings: &[],
        invariants: &[],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
    ExampleEntry {
        name: "LinearSnapshot",
        about: "the linearizable snapshot object over single-writer registers",
        required_params: &["Readers", "Writers", "RegVals", "InitRegVal"],
        defaults: snapshot_defaults,
        build: build_snapshot,
        mappings: &[],
        invariants: &[NamedExpr {
            name: "ReaderInterface",
            about: "every reader's interface is a memory value or NotMemVal",
            build: reader_outputs_are_mem_vals,
        }],
        targets: &[],
        action_props: &[],
        prophecy: None,
        stuttering: None,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{count_states, Options};

    #[test]
    fn snapshot_object_values_are_the_memory_values() {
        let cfg = snapshot_defaults();
        let p = snapshot_params(&cfg).unwrap();
        let ov = obj_values(&p, &cfg, 10).unwrap();
        let mv = eval_const(&cfg, &mem_vals()).unwrap();
        assert_eq!(Value::Set(ov.clone()), mv);
        assert!(linear_assumps(&p, &cfg, &ov).unwrap());
        // any depth past the fixpoint gives the same set
        assert_eq!(obj_values(&p, &cfg, 50).unwrap(), ov);
    }

    #[test]
    fn register_assumptions_hold_and_fail_when_truncated() {
        let cfg = register_defaults();
        let p = register_params(&cfg).unwrap();
        let ov = obj_values(&p, &cfg, 10).unwrap();
        assert_eq!(ov, SetV::range(0, 1));
        assert!(linear_assumps(&p, &cfg, &ov).unwrap());
        let only_init = obj_values(&p, &cfg, 0).unwrap();
        assert!(!linear_assumps(&p, &cfg, &only_init).unwrap());
    }

    #[test]
    fn register_explores() {
        let spec = build_register(&register_defaults()).unwrap();
        assert!(count_states(&spec, &Options::default()).unwrap() > 1);
    }
}
