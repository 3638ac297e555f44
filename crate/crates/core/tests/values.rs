//! Value-level properties checked against hand-written reference
//! implementations.

use auxcheck::value::{
    self, add_to_fcn, fcn_set, new_pset, partial_injections, remove_elt_from, Fcn, SetV, Value,
};
use proptest::prelude::*;

fn small_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-3i64..3).prop_map(Value::int),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Value::atom),
    ]
}

fn small_fcn() -> impl Strategy<Value = Fcn> {
    prop::collection::vec((small_value(), small_value()), 0..5).prop_map(Fcn::from_pairs)
}

proptest! {
    #[test]
    fn add_to_fcn_sets_the_new_point(f in small_fcn(), x in small_value(), v in small_value()) {
        let g = add_to_fcn(&f, x.clone(), v.clone());
        prop_assert_eq!(g.get(&x), Some(&v));
        prop_assert!(g.len() <= f.len() + 1);
        for (k, w) in f.pairs() {
            if *k != x {
                prop_assert_eq!(g.get(k), Some(w));
            }
        }
    }

    #[test]
    fn new_pset_stays_inside_the_function_space(
        n in 0i64..=3,
        m in 0i64..=3,
        k in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let dom: SetV = (1..=n).map(Value::int).collect();
        let dom_p: SetV = (1..=m).map(Value::int).collect();
        let pi: SetV = ["x", "y", "z"][..k].iter().map(|a| Value::atom(a)).collect();
        let injs = partial_injections(&dom, &dom_p).unwrap();
        let ps = fcn_set(&dom, &pi).unwrap();
        let inj = injs.as_slice()[(seed as usize) % injs.len()].as_fcn().unwrap().clone();
        let p = ps.as_slice()[(seed as usize / 7) % ps.len()].as_fcn().unwrap().clone();
        let pd: SetV = dom.iter().filter(|d| (seed >> (d.as_int().unwrap() + 10)) & 1 == 1).cloned().collect();
        let space = fcn_set(&dom_p, &pi).unwrap();
        let got = new_pset(&p, &inj, &pd, &dom_p, &pi).unwrap();
        prop_assert!(got.is_subset(&space));
        for q in space.iter() {
            let q = q.as_fcn().unwrap();
            let agrees = inj
                .pairs()
                .iter()
                .all(|(d, t)| pd.contains(d) || q.get(t) == p.get(d));
            prop_assert_eq!(got.contains(&Value::Fcn(q.clone())), agrees);
        }
    }
}

/// Every subset of `u`, by bitmask.
fn subsets(u: &[Value]) -> Vec<Vec<Value>> {
    (0..1usize << u.len())
        .map(|m| (0..u.len()).filter(|i| m >> i & 1 == 1).map(|i| u[i].clone()).collect())
        .collect()
}

/// Every function from `dom` to `rng`.
fn functions(dom: &[Value], rng: &[Value]) -> Vec<Fcn> {
    let mut out = vec![Vec::new()];
    for d in dom {
        let mut next = Vec::new();
        for partial in &out {
            for r in rng {
                let mut g: Vec<(Value, Value)> = partial.clone();
                g.push((d.clone(), r.clone()));
                next.push(g);
            }
        }
        out = next;
    }
    out.into_iter().map(Fcn::from_pairs).collect()
}

#[test]
fn partial_injections_match_the_filtered_union() {
    for nu in 0..=3 {
        for nv in 0..=3 {
            let u: Vec<Value> = (1..=nu).map(Value::int).collect();
            let v: Vec<Value> = ["p", "q", "r"][..nv as usize].iter().map(|a| Value::atom(a)).collect();
            let mut want = Vec::new();
            for d in subsets(&u) {
                for f in functions(&d, &v) {
                    let images: Vec<&Value> = f.pairs().iter().map(|(_, y)| y).collect();
                    let distinct = images.iter().enumerate().all(|(i, a)| images[..i].iter().all(|b| b != a));
                    if distinct {
                        want.push(Value::Fcn(f));
                    }
                }
            }
            let want: SetV = want.into_iter().collect();
            let got = partial_injections(&u.iter().cloned().collect(), &v.iter().cloned().collect()).unwrap();
            assert_eq!(got, want, "|U| = {nu}, |V| = {nv}");
        }
    }
}

/// Puts `x` back at position `i` of `seq`.
fn insert_at(i: usize, x: Value, seq: &Fcn) -> Fcn {
    let mut items: Vec<Value> = seq.pairs().iter().map(|(_, v)| v.clone()).collect();
    items.insert(i - 1, x);
    Fcn::seq(items)
}

#[test]
fn remove_then_reinsert_is_identity() {
    let alphabet = [Value::atom("a"), Value::atom("b")];
    for n in 0..=4u32 {
        for code in 0..2usize.pow(n) {
            let seq = Fcn::seq((0..n).map(|k| alphabet[(code >> k) & 1].clone()));
            for i in 1..=n as usize {
                let removed = remove_elt_from(i as i64, &seq).unwrap();
                assert_eq!(value::len(&removed).unwrap(), n as usize - 1);
                let x = seq.get(&Value::int(i as i64)).unwrap().clone();
                assert_eq!(insert_at(i, x, &removed), seq);
            }
        }
    }
}
