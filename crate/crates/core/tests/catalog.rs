//! Every mapping in the catalog checked at its entry's default model.

use auxcheck::catalog::{self, mapping_setup};
use auxcheck::explorer::{check_invariant, check_refinement, Options};

/// Mappings that exist to demonstrate that no refinement is possible
/// without auxiliary variables.
fn expected_to_fail(mapping: &str) -> bool {
    mapping.ends_with("-naive")
}

#[test]
fn every_mapping_holds_at_its_default_model() {
    let opts = Options::default().workers(2);
    for e in catalog::entries() {
        let cfg = (e.defaults)();
        for m in e.mappings {
            let ms = mapping_setup(e.name, m.name, &cfg).unwrap();
            let v = check_refinement(&ms.low, &ms.mapping, &ms.high, &opts).unwrap();
            assert_eq!(
                v.is_pass(),
                !expected_to_fail(m.name),
                "{} {}: {:?}",
                e.name,
                m.name,
                v.violation
            );
        }
    }
}

#[test]
fn every_named_invariant_holds_at_its_default_model() {
    let opts = Options::default().workers(2);
    for e in catalog::entries() {
        let spec = e.build_default().unwrap();
        for inv in e.invariants {
            let v = check_invariant(&spec, &opts, &(inv.build)(&spec)).unwrap();
            assert!(v.is_pass(), "{} {}: {:?}", e.name, inv.name, v.violation);
        }
    }
}

#[test]
fn naive_afek_mapping_fails_with_a_replayable_trace() {
    let cfg = auxcheck::ModelConfig::new()
        .substitute("Readers", [auxcheck::Value::atom("r1")])
        .substitute("Writers", [auxcheck::Value::atom("w1")])
        .substitute("RegVals", [auxcheck::Value::int(0), auxcheck::Value::int(1)])
        .constant("InitRegVal", 0)
        .bound("MaxWrites", 2);
    let ms = mapping_setup("AfekSimplified", "to-LinearSnapshot-naive", &cfg).unwrap();
    let v = check_refinement(&ms.low, &ms.mapping, &ms.high, &Options::default()).unwrap();
    assert!(!v.is_pass());
    auxcheck::explorer::replay(&ms.low, v.trace.as_ref().unwrap()).unwrap();
}

#[test]
fn build_examples() {
    let minmax = catalog::build(
        "MinMax1",
        &auxcheck::ModelConfig::new().substitute("Int", (-1..=1).map(auxcheck::Value::int)),
    )
    .unwrap();
    assert_eq!(minmax.vars().len(), 3);
    let hour = catalog::build("Hour", &auxcheck::ModelConfig::new()).unwrap();
    assert_eq!(hour.vars().len(), 1);
    assert_eq!(auxcheck::explorer::count_states(&hour, &Options::default()).unwrap(), 24);
}
