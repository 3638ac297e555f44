//! Immutable first-order values: integers, booleans, atoms, finite sets and
//! finite functions.
//!
//! Sequences and records are not separate kinds. A sequence of length `n` is a
//! function with domain `1..n` and a record is a function whose domain is a set
//! of atoms. Sets and function graphs are stored as sorted, duplicate-free
//! slices, so structural equality, hashing and the total order all agree.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Upper bound on the size of any set materialized by an enumerating operator
/// (powersets, function sets, partial injections).
pub const ENUMERATION_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("expected {expected}, found {found}")]
    Type { expected: &'static str, found: String },
    #[error("{0} is not in the domain of {1}")]
    NotInDomain(String, String),
    #[error("{op} of an empty {what}")]
    Empty { op: &'static str, what: &'static str },
    #[error("index {index} out of range for sequence of length {len}")]
    Index { index: i64, len: usize },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("enumerating {what} would produce more than {cap} elements")]
    TooLarge { what: &'static str, cap: usize },
}

pub type ValueResult<T> = Result<T, ValueError>;

/// A closed first-order value.
///
/// Variant order fixes the canonical total order: `Int < Bool < Atom < Set <
/// Fcn`, lexicographic within each kind.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Atom(Arc<str>),
    Set(SetV),
    Fcn(Fcn),
}

/// A finite set, kept sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetV(Arc<[Value]>);

/// A finite function, stored as its graph sorted by argument.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fcn(Arc<[(Value, Value)]>);

/// Reserved atoms standing for `CHOOSE v : v \notin S` style values.
pub mod sentinel {
    use super::Value;

    pub const NOT_INT: &str = "NotInt";
    pub const INFINITY: &str = "Infinity";
    pub const MINUS_INFINITY: &str = "MinusInfinity";
    pub const NOT_MEM_VAL: &str = "NotMemVal";
    pub const NOT_REG_VAL: &str = "NotRegVal";
    pub const NON_DATA: &str = "NonData";

    pub const ALL: [&str; 6] = [
        NOT_INT,
        INFINITY,
        MINUS_INFINITY,
        NOT_MEM_VAL,
        NOT_REG_VAL,
        NON_DATA,
    ];

    pub fn is_reserved(name: &str) -> bool {
        ALL.contains(&name)
    }

    /// The sentinel atom with the given reserved name.
    ///
    /// # Panics
    /// If `name` is not in the registry.
    pub fn get(name: &str) -> Value {
        assert!(is_reserved(name), "{name} is not a registered sentinel");
        Value::atom(name)
    }

    pub fn not_int() -> Value {
        get(NOT_INT)
    }
    pub fn infinity() -> Value {
        get(INFINITY)
    }
    pub fn minus_infinity() -> Value {
        get(MINUS_INFINITY)
    }
    pub fn not_mem_val() -> Value {
        get(NOT_MEM_VAL)
    }
    pub fn not_reg_val() -> Value {
        get(NOT_REG_VAL)
    }
    pub fn non_data() -> Value {
        get(NON_DATA)
    }
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Int(i)
    }

    pub fn bool(b: bool) -> Value {
        Value::Bool(b)
    }

    pub fn atom(name: &str) -> Value {
        Value::Atom(Arc::from(name))
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(SetV::from_iter(items))
    }

    pub fn empty_set() -> Value {
        Value::Set(SetV::empty())
    }

    /// Function from `(argument, result)` pairs. Later pairs override earlier
    /// ones with the same argument.
    pub fn fcn<I: IntoIterator<Item = (Value, Value)>>(pairs: I) -> Value {
        Value::Fcn(Fcn::from_pairs(pairs))
    }

    pub fn empty_fcn() -> Value {
        Value::Fcn(Fcn::empty())
    }

    /// The sequence `<<items[0], ..., items[n-1]>>`, i.e. a function on `1..n`.
    pub fn seq<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Fcn(Fcn::seq(items))
    }

    /// A record `[k1 |-> v1, ...]`.
    pub fn record<'a, I: IntoIterator<Item = (&'a str, Value)>>(fields: I) -> Value {
        Value::fcn(fields.into_iter().map(|(k, v)| (Value::atom(k), v)))
    }

    pub fn int_range(lo: i64, hi: i64) -> Value {
        Value::Set(SetV::range(lo, hi))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Bool(_) => "boolean",
            Value::Atom(_) => "atom",
            Value::Set(_) => "set",
            Value::Fcn(_) => "function",
        }
    }

    fn type_err(&self, expected: &'static str) -> ValueError {
        ValueError::Type {
            expected,
            found: self.to_string(),
        }
    }

    pub fn as_int(&self) -> ValueResult<i64> {
        match self {
            Value::Int(i) => Ok(*i),
            _ => Err(self.type_err("integer")),
        }
    }

    pub fn as_bool(&self) -> ValueResult<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            _ => Err(self.type_err("boolean")),
        }
    }

    pub fn as_atom(&self) -> ValueResult<&str> {
        match self {
            Value::Atom(a) => Ok(a),
            _ => Err(self.type_err("atom")),
        }
    }

    pub fn as_set(&self) -> ValueResult<&SetV> {
        match self {
            Value::Set(s) => Ok(s),
            _ => Err(self.type_err("set")),
        }
    }

    pub fn as_fcn(&self) -> ValueResult<&Fcn> {
        match self {
            Value::Fcn(f) => Ok(f),
            _ => Err(self.type_err("function")),
        }
    }

    /// Function application `f[x]`.
    pub fn apply(&self, arg: &Value) -> ValueResult<Value> {
        self.as_fcn()?
            .get(arg)
            .cloned()
            .ok_or_else(|| ValueError::NotInDomain(arg.to_string(), self.to_string()))
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, Value::Atom(a) if sentinel::is_reserved(a))
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::atom(s)
    }
}

impl From<SetV> for Value {
    fn from(s: SetV) -> Self {
        Value::Set(s)
    }
}

impl From<Fcn> for Value {
    fn from(f: Fcn) -> Self {
        Value::Fcn(f)
    }
}

impl SetV {
    pub fn empty() -> SetV {
        SetV(Arc::from(Vec::new()))
    }

    /// Builds a set from an already sorted, duplicate-free vector.
    pub(crate) fn from_sorted(v: Vec<Value>) -> SetV {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        SetV(Arc::from(v))
    }

    pub fn range(lo: i64, hi: i64) -> SetV {
        if hi < lo {
            return SetV::empty();
        }
        SetV::from_sorted((lo..=hi).map(Value::Int).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.0.binary_search(v).is_ok()
    }

    pub fn union(&self, other: &SetV) -> SetV {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match x.cmp(y) {
                    std::cmp::Ordering::Less => out.push(a.next().unwrap().clone()),
                    std::cmp::Ordering::Greater => out.push(b.next().unwrap().clone()),
                    std::cmp::Ordering::Equal => {
                        out.push(a.next().unwrap().clone());
                        b.next();
                    }
                },
                (Some(_), None) => out.push(a.next().unwrap().clone()),
                (None, Some(_)) => out.push(b.next().unwrap().clone()),
                (None, None) => break,
            }
        }
        SetV::from_sorted(out)
    }

    pub fn intersect(&self, other: &SetV) -> SetV {
        SetV::from_sorted(
            self.0
                .iter()
                .filter(|v| other.contains(v))
                .cloned()
                .collect(),
        )
    }

    pub fn minus(&self, other: &SetV) -> SetV {
        if other.is_empty() {
            return self.clone();
        }
        SetV::from_sorted(
            self.0
                .iter()
                .filter(|v| !other.contains(v))
                .cloned()
                .collect(),
        )
    }

    pub fn insert(&self, v: Value) -> SetV {
        match self.0.binary_search(&v) {
            Ok(_) => self.clone(),
            Err(pos) => {
                let mut out = self.0.to_vec();
                out.insert(pos, v);
                SetV::from_sorted(out)
            }
        }
    }

    pub fn remove(&self, v: &Value) -> SetV {
        match self.0.binary_search(v) {
            Ok(pos) => {
                let mut out = self.0.to_vec();
                out.remove(pos);
                SetV::from_sorted(out)
            }
            Err(_) => self.clone(),
        }
    }

    pub fn is_subset(&self, other: &SetV) -> bool {
        self.len() <= other.len() && self.0.iter().all(|v| other.contains(v))
    }

    /// Smallest member under the canonical order; the deterministic
    /// realization of `CHOOSE x \in S : TRUE`.
    pub fn first(&self) -> Option<&Value> {
        self.0.first()
    }
}

impl FromIterator<Value> for SetV {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut v: Vec<Value> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SetV(Arc::from(v))
    }
}

impl<'a> IntoIterator for &'a SetV {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Fcn {
    pub fn empty() -> Fcn {
        Fcn(Arc::from(Vec::new()))
    }

    pub fn from_pairs<I: IntoIterator<Item = (Value, Value)>>(pairs: I) -> Fcn {
        let mut v: Vec<(Value, Value)> = pairs.into_iter().collect();
        // stable sort keeps insertion order among equal keys; keep the last
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Value, Value)> = Vec::with_capacity(v.len());
        for (k, val) in v {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 = val,
                _ => out.push((k, val)),
            }
        }
        Fcn(Arc::from(out))
    }

    pub(crate) fn from_sorted(v: Vec<(Value, Value)>) -> Fcn {
        debug_assert!(v.windows(2).all(|w| w[0].0 < w[1].0));
        Fcn(Arc::from(v))
    }

    pub fn seq<I: IntoIterator<Item = Value>>(items: I) -> Fcn {
        Fcn::from_sorted(
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| (Value::Int(i as i64 + 1), v))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(Value, Value)] {
        &self.0
    }

    pub fn get(&self, k: &Value) -> Option<&Value> {
        // sequences are the common case: argument i sits at position i-1
        if let Value::Int(i) = k {
            if *i >= 1 && (*i as usize) <= self.0.len() {
                let (key, v) = &self.0[*i as usize - 1];
                if key == k {
                    return Some(v);
                }
            }
        }
        self.0
            .binary_search_by(|(key, _)| key.cmp(k))
            .ok()
            .map(|pos| &self.0[pos].1)
    }

    pub fn domain(&self) -> SetV {
        SetV::from_sorted(self.0.iter().map(|(k, _)| k.clone()).collect())
    }

    pub fn range(&self) -> SetV {
        self.0.iter().map(|(_, v)| v.clone()).collect()
    }

    /// `[f EXCEPT ![k] = v]`; `k` must already be in the domain.
    pub fn except(&self, k: &Value, v: Value) -> ValueResult<Fcn> {
        let pos = self
            .0
            .binary_search_by(|(key, _)| key.cmp(k))
            .map_err(|_| ValueError::NotInDomain(k.to_string(), Value::Fcn(self.clone()).to_string()))?;
        let mut out = self.0.to_vec();
        out[pos].1 = v;
        Ok(Fcn(Arc::from(out)))
    }

    /// Length if this function is a sequence (domain exactly `1..n`).
    pub fn seq_len(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .all(|(i, (k, _))| *k == Value::Int(i as i64 + 1))
            .then_some(self.0.len())
    }

    pub fn is_injective(&self) -> bool {
        let mut vals: Vec<&Value> = self.0.iter().map(|(_, v)| v).collect();
        vals.sort_unstable();
        vals.windows(2).all(|w| w[0] != w[1])
    }
}

/// Canonical text form, close to TLA+ notation. Sequences print as `<<...>>`
/// and records as `[k |-> v]`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Value::Atom(a) => write!(f, "{a:?}"),
            Value::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Fcn(g) => {
                if g.seq_len().filter(|n| *n > 0).is_some() {
                    write!(f, "<<")?;
                    for (i, (_, v)) in g.pairs().iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    return write!(f, ">>");
                }
                if g.is_empty() {
                    return write!(f, "<<>>");
                }
                let record = g.pairs().iter().all(|(k, _)| matches!(k, Value::Atom(_)));
                write!(f, "[")?;
                for (i, (k, v)) in g.pairs().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match k {
                        Value::Atom(a) if record => write!(f, "{a} |-> {v}")?,
                        _ => write!(f, "{k} |-> {v}")?,
                    }
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for SetV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Value::Set(self.clone()), f)
    }
}

impl fmt::Debug for Fcn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Value::Fcn(self.clone()), f)
    }
}

// ---------------------------------------------------------------------------
// Operators used by the specifications.

fn ints(s: &SetV) -> ValueResult<impl Iterator<Item = i64> + '_> {
    for v in s.iter() {
        v.as_int()?;
    }
    Ok(s.iter().map(|v| match v {
        Value::Int(i) => *i,
        _ => unreachable!(),
    }))
}

/// `CHOOSE t \in S : \A s \in S : t >= s`
pub fn set_max(s: &SetV) -> ValueResult<i64> {
    ints(s)?.max().ok_or(ValueError::Empty {
        op: "setMax",
        what: "set",
    })
}

/// `CHOOSE t \in S : \A s \in S : t =< s`
pub fn set_min(s: &SetV) -> ValueResult<i64> {
    ints(s)?.min().ok_or(ValueError::Empty {
        op: "setMin",
        what: "set",
    })
}

/// `[y \in DOMAIN f \cup {x} |-> IF y = x THEN v ELSE f[y]]`
pub fn add_to_fcn(f: &Fcn, x: Value, v: Value) -> Fcn {
    let mut out = f.pairs().to_vec();
    match out.binary_search_by(|(k, _)| k.cmp(&x)) {
        Ok(pos) => out[pos].1 = v,
        Err(pos) => out.insert(pos, (x, v)),
    }
    Fcn::from_sorted(out)
}

pub fn id_fcn(s: &SetV) -> Fcn {
    Fcn::from_sorted(s.iter().map(|v| (v.clone(), v.clone())).collect())
}

fn as_seq(f: &Fcn) -> ValueResult<&[(Value, Value)]> {
    match f.seq_len() {
        Some(_) => Ok(f.pairs()),
        None => Err(ValueError::Type {
            expected: "sequence",
            found: Value::Fcn(f.clone()).to_string(),
        }),
    }
}

pub fn len(seq: &Fcn) -> ValueResult<usize> {
    as_seq(seq).map(|p| p.len())
}

pub fn append(seq: &Fcn, v: Value) -> ValueResult<Fcn> {
    let items = as_seq(seq)?;
    let mut out = items.to_vec();
    out.push((Value::Int(items.len() as i64 + 1), v));
    Ok(Fcn::from_sorted(out))
}

pub fn concat(a: &Fcn, b: &Fcn) -> ValueResult<Fcn> {
    let xs = as_seq(a)?;
    let ys = as_seq(b)?;
    Ok(Fcn::seq(
        xs.iter().chain(ys.iter()).map(|(_, v)| v.clone()),
    ))
}

pub fn head(seq: &Fcn) -> ValueResult<Value> {
    as_seq(seq)?
        .first()
        .map(|(_, v)| v.clone())
        .ok_or(ValueError::Empty {
            op: "Head",
            what: "sequence",
        })
}

pub fn tail(seq: &Fcn) -> ValueResult<Fcn> {
    let items = as_seq(seq)?;
    if items.is_empty() {
        return Err(ValueError::Empty {
            op: "Tail",
            what: "sequence",
        });
    }
    Ok(Fcn::seq(items[1..].iter().map(|(_, v)| v.clone())))
}

/// `[j \in 1..(Len(seq)-1) |-> IF j < i THEN seq[j] ELSE seq[j+1]]`
pub fn remove_elt_from(i: i64, seq: &Fcn) -> ValueResult<Fcn> {
    let items = as_seq(seq)?;
    if i < 1 || i as usize > items.len() {
        return Err(ValueError::Index {
            index: i,
            len: items.len(),
        });
    }
    let skip = i as usize - 1;
    Ok(Fcn::seq(
        items
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != skip)
            .map(|(_, (_, v))| v.clone()),
    ))
}

fn check_cap(what: &'static str, n: u128) -> ValueResult<usize> {
    if n > ENUMERATION_CAP as u128 {
        Err(ValueError::TooLarge {
            what,
            cap: ENUMERATION_CAP,
        })
    } else {
        Ok(n as usize)
    }
}

/// `SUBSET s`
pub fn subset_of(s: &SetV) -> ValueResult<SetV> {
    if s.len() >= 64 {
        return Err(ValueError::TooLarge {
            what: "SUBSET",
            cap: ENUMERATION_CAP,
        });
    }
    let n = check_cap("SUBSET", 1u128 << s.len())?;
    let items = s.as_slice();
    Ok((0..n)
        .map(|mask| {
            Value::Set(SetV::from_sorted(
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, v)| v.clone())
                    .collect(),
            ))
        })
        .collect())
}

/// `[dom -> range]`
pub fn fcn_set(dom: &SetV, range: &SetV) -> ValueResult<SetV> {
    let n = (range.len() as u128)
        .checked_pow(dom.len() as u32)
        .unwrap_or(u128::MAX);
    check_cap("function set", n)?;
    let mut out = Vec::with_capacity(n as usize);
    let keys = dom.as_slice();
    let mut idx = vec![0usize; keys.len()];
    if range.is_empty() && !keys.is_empty() {
        return Ok(SetV::empty());
    }
    loop {
        out.push(Value::Fcn(Fcn::from_sorted(
            keys.iter()
                .zip(&idx)
                .map(|(k, &i)| (k.clone(), range.as_slice()[i].clone()))
                .collect(),
        )));
        // odometer increment
        let mut pos = keys.len();
        loop {
            if pos == 0 {
                return Ok(out.into_iter().collect());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < range.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Membership in `[dom -> range]` without enumerating it.
pub fn in_fcn_set(v: &Value, dom: &SetV, range: &SetV) -> bool {
    match v {
        Value::Fcn(f) => {
            f.len() == dom.len()
                && f
                    .pairs()
                    .iter()
                    .zip(dom.iter())
                    .all(|((k, x), d)| k == d && range.contains(x))
        }
        _ => false,
    }
}

/// All injective functions whose domain is a subset of `u` and whose range is
/// a subset of `v`.
pub fn partial_injections(u: &SetV, v: &SetV) -> ValueResult<SetV> {
    let mut out = Vec::new();
    let keys = u.as_slice();
    // each key is either unmapped or mapped to an unused element of v
    fn go(
        keys: &[Value],
        targets: &[Value],
        used: &mut Vec<bool>,
        acc: &mut Vec<(Value, Value)>,
        out: &mut Vec<Value>,
    ) -> ValueResult<()> {
        let Some((k, rest)) = keys.split_first() else {
            check_cap("partial injections", out.len() as u128 + 1)?;
            out.push(Value::Fcn(Fcn::from_sorted(acc.clone())));
            return Ok(());
        };
        go(rest, targets, used, acc, out)?;
        for (j, t) in targets.iter().enumerate() {
            if !used[j] {
                used[j] = true;
                acc.push((k.clone(), t.clone()));
                go(rest, targets, used, acc, out)?;
                acc.pop();
                used[j] = false;
            }
        }
        Ok(())
    }
    let mut used = vec![false; v.len()];
    go(keys, v.as_slice(), &mut used, &mut Vec::new(), &mut out)?;
    Ok(out.into_iter().collect())
}

/// Membership in `partial_injections(u, v)` without enumerating it.
pub fn is_partial_injection(f: &Value, u: &SetV, v: &SetV) -> bool {
    match f {
        Value::Fcn(g) => {
            g.pairs()
                .iter()
                .all(|(k, x)| u.contains(k) && v.contains(x))
                && g.is_injective()
        }
        _ => false,
    }
}

/// The set of possible new prophecy values:
/// `{q \in [dom_prime -> pi] : \A d \in DOMAIN dom_inj \ pred_dom : q[dom_inj[d]] = p[d]}`.
///
/// Built directly: every position of `dom_prime` that is the image of a
/// retained `d` is forced to `p[d]`; the remaining positions range over `pi`.
pub fn new_pset(
    p: &Fcn,
    dom_inj: &Fcn,
    pred_dom: &SetV,
    dom_prime: &SetV,
    pi: &SetV,
) -> ValueResult<SetV> {
    let mut forced: Vec<Option<Value>> = vec![None; dom_prime.len()];
    for (d, target) in dom_inj.pairs() {
        if pred_dom.contains(d) {
            continue;
        }
        let pos = dom_prime
            .as_slice()
            .binary_search(target)
            .map_err(|_| ValueError::NotInDomain(target.to_string(), Value::Set(dom_prime.clone()).to_string()))?;
        let pd = p
            .get(d)
            .cloned()
            .ok_or_else(|| ValueError::NotInDomain(d.to_string(), Value::Fcn(p.clone()).to_string()))?;
        match &forced[pos] {
            Some(prev) if *prev != pd => return Ok(SetV::empty()),
            _ => forced[pos] = Some(pd),
        }
    }
    // a forced value outside pi rules out every q in [dom_prime -> pi]
    if forced.iter().flatten().any(|v| !pi.contains(v)) {
        return Ok(SetV::empty());
    }
    let free: Vec<usize> = (0..forced.len()).filter(|&i| forced[i].is_none()).collect();
    let n = (pi.len() as u128)
        .checked_pow(free.len() as u32)
        .unwrap_or(u128::MAX);
    check_cap("NewPSet", n)?;
    if n == 0 {
        return Ok(SetV::empty());
    }
    let keys = dom_prime.as_slice();
    let mut idx = vec![0usize; free.len()];
    let mut out = Vec::with_capacity(n as usize);
    loop {
        let mut vals = forced.clone();
        for (slot, &i) in free.iter().zip(&idx) {
            vals[*slot] = Some(pi.as_slice()[i].clone());
        }
        out.push(Value::Fcn(Fcn::from_sorted(
            keys.iter()
                .cloned()
                .zip(vals.into_iter().map(|v| v.unwrap()))
                .collect(),
        )));
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return Ok(out.into_iter().collect());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < pi.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

pub fn checked_add(a: i64, b: i64) -> ValueResult<i64> {
    a.checked_add(b).ok_or(ValueError::Overflow("+"))
}

pub fn checked_sub(a: i64, b: i64) -> ValueResult<i64> {
    a.checked_sub(b).ok_or(ValueError::Overflow("-"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints_set(xs: &[i64]) -> SetV {
        xs.iter().map(|&i| Value::Int(i)).collect()
    }

    fn a(s: &str) -> Value {
        Value::atom(s)
    }

    #[test]
    fn max_and_min() {
        assert_eq!(set_max(&ints_set(&[1, 3, 2])), Ok(3));
        assert_eq!(set_min(&ints_set(&[5])), Ok(5));
        assert_eq!(set_max(&ints_set(&[-2, -7])), Ok(-2));
        assert_eq!(set_min(&ints_set(&[-2, -7])), Ok(-7));
    }

    #[test]
    fn max_of_empty_or_non_int_is_domain_error() {
        assert!(matches!(set_max(&SetV::empty()), Err(ValueError::Empty { .. })));
        let mixed: SetV = [Value::Int(1), a("x")].into_iter().collect();
        assert!(matches!(set_min(&mixed), Err(ValueError::Type { .. })));
    }

    #[test]
    fn add_to_fcn_cases() {
        let f = add_to_fcn(&Fcn::empty(), a("a"), Value::Int(1));
        assert_eq!(Value::Fcn(f.clone()), Value::fcn([(a("a"), Value::Int(1))]));
        let g = add_to_fcn(&f, a("a"), Value::Int(2));
        assert_eq!(Value::Fcn(g), Value::fcn([(a("a"), Value::Int(2))]));
        let h = add_to_fcn(
            Value::fcn([(Value::Int(1), a("x"))]).as_fcn().unwrap(),
            Value::Int(2),
            a("y"),
        );
        assert_eq!(Value::Fcn(h), Value::seq([a("x"), a("y")]));
    }

    #[test]
    fn remove_elt_cases() {
        let abc = Fcn::seq([a("a"), a("b"), a("c")]);
        assert_eq!(remove_elt_from(2, &abc).unwrap(), Fcn::seq([a("a"), a("c")]));
        assert_eq!(remove_elt_from(3, &abc).unwrap(), Fcn::seq([a("a"), a("b")]));
        assert_eq!(remove_elt_from(1, &Fcn::seq([a("a")])).unwrap(), Fcn::empty());
        assert!(matches!(remove_elt_from(0, &abc), Err(ValueError::Index { .. })));
        assert!(matches!(remove_elt_from(4, &abc), Err(ValueError::Index { .. })));
    }

    #[test]
    fn sequence_ops() {
        let s = Fcn::seq([Value::Int(1), Value::Int(2)]);
        assert_eq!(tail(&s).unwrap(), Fcn::seq([Value::Int(2)]));
        assert_eq!(head(&s).unwrap(), Value::Int(1));
        assert_eq!(len(&s).unwrap(), 2);
        assert_eq!(
            append(&s, Value::Int(9)).unwrap(),
            Fcn::seq([Value::Int(1), Value::Int(2), Value::Int(9)])
        );
        assert!(head(&Fcn::empty()).is_err());
        assert!(tail(&Fcn::empty()).is_err());
        let rec = Value::record([("a", Value::Int(1))]);
        assert!(len(rec.as_fcn().unwrap()).is_err());
    }

    #[test]
    fn id_fcn_and_powerset() {
        assert_eq!(
            Value::Fcn(id_fcn(&ints_set(&[3, 7]))),
            Value::fcn([(Value::Int(3), Value::Int(3)), (Value::Int(7), Value::Int(7))])
        );
        let p = subset_of(&[a("a")].into_iter().collect()).unwrap();
        assert_eq!(
            Value::Set(p),
            Value::set([Value::empty_set(), Value::set([a("a")])])
        );
    }

    #[test]
    fn partial_injections_examples() {
        let ab: SetV = [a("a"), a("b")].into_iter().collect();
        let got = partial_injections(&ints_set(&[1]), &ab).unwrap();
        let want: SetV = [
            Value::empty_fcn(),
            Value::fcn([(Value::Int(1), a("a"))]),
            Value::fcn([(Value::Int(1), a("b"))]),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        let got = partial_injections(&SetV::empty(), &ab).unwrap();
        assert_eq!(Value::Set(got), Value::set([Value::empty_fcn()]));
        let got = partial_injections(&ints_set(&[1, 2]), &[a("a")].into_iter().collect()).unwrap();
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn canonical_order_between_kinds() {
        let mut vs = [Value::empty_fcn(),
            Value::empty_set(),
            a("x"),
            Value::Bool(false),
            Value::Int(7)];
        vs.sort();
        assert_eq!(vs[0], Value::Int(7));
        assert_eq!(vs[1], Value::Bool(false));
        assert_eq!(vs[2], a("x"));
        assert_eq!(vs[3], Value::empty_set());
        assert_eq!(vs[4], Value::empty_fcn());
    }

    #[test]
    fn sentinels_are_distinct() {
        let all: Vec<Value> = sentinel::ALL.iter().map(|n| sentinel::get(n)).collect();
        for (i, x) in all.iter().enumerate() {
            assert!(x.is_sentinel());
            for (j, y) in all.iter().enumerate() {
                assert_eq!(i == j, x == y);
            }
            assert_ne!(*x, Value::Int(0));
            assert_ne!(*x, Value::Bool(true));
            assert_ne!(*x, Value::empty_set());
            assert_ne!(*x, Value::empty_fcn());
        }
    }

    #[test]
    fn set_dedups_and_sorts() {
        let s = Value::set([Value::Int(3), Value::Int(1), Value::Int(3)]);
        assert_eq!(s, Value::set([Value::Int(1), Value::Int(3)]));
        assert_eq!(s.to_string(), "{1, 3}");
    }

    #[test]
    fn new_pset_send_case() {
        let pi: SetV = [a("send"), a("undo")].into_iter().collect();
        let p = Fcn::seq([a("send"), a("undo")]);
        let dom_inj = Fcn::from_pairs([(Value::Int(2), Value::Int(1))]);
        let got = new_pset(&p, &dom_inj, &ints_set(&[1]), &ints_set(&[1]), &pi).unwrap();
        assert_eq!(Value::Set(got), Value::set([Value::seq([a("undo")])]));
    }

    #[test]
    fn new_pset_unconstrained_and_empty() {
        let pi: SetV = [a("send"), a("undo")].into_iter().collect();
        let dom = ints_set(&[1, 2]);
        let p = Fcn::seq([a("send"), a("undo")]);
        let got = new_pset(&p, &Fcn::empty(), &dom, &dom, &pi).unwrap();
        assert_eq!(got, fcn_set(&dom, &pi).unwrap());
        let got = new_pset(&p, &Fcn::empty(), &dom, &SetV::empty(), &pi).unwrap();
        assert_eq!(Value::Set(got), Value::set([Value::empty_fcn()]));
    }

    #[test]
    fn fcn_set_membership_matches_enumeration() {
        let dom = ints_set(&[1, 2]);
        let range: SetV = [a("x"), a("y")].into_iter().collect();
        let all = fcn_set(&dom, &range).unwrap();
        assert_eq!(all.len(), 4);
        for f in all.iter() {
            assert!(in_fcn_set(f, &dom, &range));
        }
        assert!(!in_fcn_set(&Value::seq([a("x")]), &dom, &range));
        assert_eq!(fcn_set(&SetV::empty(), &range).unwrap().len(), 1);
        assert_eq!(fcn_set(&dom, &SetV::empty()).unwrap().len(), 0);
    }
}
