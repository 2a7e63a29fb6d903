//! Registered functions and argument matching.

use std::collections::BTreeMap;

use dynabuf_core::histogram::bin_data;
use dynabuf_core::{RData, RValue, NA_INTEGER};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Longest sequence `seq` will build.
const MAX_SEQ_LEN: f64 = 1e7;
/// Largest sample `gaussian` will draw.
const MAX_SAMPLE: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    /// The argument list does not satisfy the function's parameters.
    #[error("{0}")]
    BadArguments(String),
    /// The function itself failed.
    #[error("{0}")]
    Failed(String),
}

/// What a parameter accepts; checked before the function runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Any,
    /// Non-NA integer or real of length one.
    Number,
    /// Integer, real or logical vector of any length.
    Numeric,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub required: bool,
    pub kind: Kind,
}

const fn req(name: &'static str, kind: Kind) -> Param {
    Param { name, required: true, kind }
}

const fn opt(name: &'static str, kind: Kind) -> Param {
    Param { name, required: false, kind }
}

/// Arguments after matching, in parameter order.
pub type Args = Vec<Option<RValue>>;

type Body = fn(&Args) -> Result<RValue, String>;

#[derive(Clone)]
pub struct Function {
    pub params: Vec<Param>,
    body: Body,
}

impl Function {
    pub fn new(params: Vec<Param>, body: Body) -> Self {
        Function { params, body }
    }
}

/// Functions callable by name. Immutable once built.
#[derive(Clone, Default)]
pub struct Registry {
    functions: BTreeMap<String, Function>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `identity`, `sum`, `seq`, `gaussian` and `bin_histogram`.
    pub fn builtin() -> Self {
        use Kind::*;
        let mut r = Self::new();
        r.register("identity", Function::new(vec![req("x", Any)], |a| Ok(arg(a, 0).clone())));
        r.register("sum", Function::new(vec![req("x", Any)], |a| sum(arg(a, 0))));
        r.register(
            "seq",
            Function::new(vec![opt("from", Number), opt("to", Number), opt("by", Number)], seq),
        );
        r.register(
            "gaussian",
            Function::new(
                vec![req("n", Number), opt("mean", Number), opt("sd", Number), req("seed", Number)],
                gaussian,
            ),
        );
        r.register(
            "bin_histogram",
            Function::new(vec![req("points", Numeric), req("breaks", Numeric)], bin_histogram),
        );
        r
    }

    pub fn register(&mut self, name: impl Into<String>, f: Function) {
        self.functions.insert(name.into(), f);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    /// Calls `name` with `args`, a list whose `names` attribute, when
    /// present, names some or all elements.
    pub fn call(&self, name: &str, args: &RValue) -> Result<RValue, CallError> {
        let f = self
            .functions
            .get(name)
            .ok_or_else(|| CallError::UnknownFunction(name.to_string()))?;
        let matched = match_args(&f.params, args).map_err(CallError::BadArguments)?;
        (f.body)(&matched).map_err(CallError::Failed)
    }
}

/// Exact name matches first, then unnamed arguments fill the remaining
/// parameters in declaration order.
pub fn match_args(params: &[Param], args: &RValue) -> Result<Args, String> {
    let RData::List(items) = &args.data else {
        return Err(format!("arguments must be a list, got {}", args.kind_name()));
    };
    let names: Vec<Option<&str>> = match args.names() {
        Some(n) if n.len() == items.len() => n.iter().map(|s| s.as_deref().filter(|s| !s.is_empty())).collect(),
        Some(n) => return Err(format!("{} names for {} arguments", n.len(), items.len())),
        None => vec![None; items.len()],
    };

    let mut out: Args = vec![None; params.len()];
    let mut positional = Vec::new();
    for (item, name) in items.iter().zip(&names) {
        match name {
            Some(name) => {
                let i = params
                    .iter()
                    .position(|p| p.name == *name)
                    .ok_or_else(|| format!("unused argument `{name}`"))?;
                if out[i].is_some() {
                    return Err(format!("argument `{name}` matched more than once"));
                }
                out[i] = Some(item.clone());
            }
            None => positional.push(item),
        }
    }
    let mut free = (0..params.len()).filter(|i| out[*i].is_none()).collect::<Vec<_>>().into_iter();
    for item in positional {
        let i = free.next().ok_or("too many arguments")?;
        out[i] = Some(item.clone());
    }

    for (p, v) in params.iter().zip(&out) {
        match v {
            None if p.required => return Err(format!("argument `{}` is missing", p.name)),
            None => {}
            Some(v) => check_kind(p, v)?,
        }
    }
    Ok(out)
}

fn check_kind(p: &Param, v: &RValue) -> Result<(), String> {
    let ok = match p.kind {
        Kind::Any => true,
        Kind::Number => number(v).is_some(),
        Kind::Numeric => matches!(v.data, RData::Int(_) | RData::Real(_) | RData::Logical(_)),
    };
    if ok {
        Ok(())
    } else {
        let want = match p.kind {
            Kind::Number => "a single number",
            _ => "a numeric vector",
        };
        Err(format!("argument `{}` must be {want}, got {} of length {}", p.name, v.kind_name(), v.len()))
    }
}

fn arg(a: &Args, i: usize) -> &RValue {
    a[i].as_ref().expect("required argument checked")
}

fn number(v: &RValue) -> Option<f64> {
    match &v.data {
        RData::Int(x) if x.len() == 1 && x[0] != NA_INTEGER => Some(f64::from(x[0])),
        RData::Real(x) if x.len() == 1 && !x[0].is_nan() => Some(x[0]),
        _ => None,
    }
}

fn number_or(a: &Args, i: usize, default: f64) -> f64 {
    a[i].as_ref().and_then(number).unwrap_or(default)
}

fn reals(v: &RValue) -> Vec<f64> {
    match &v.data {
        RData::Int(x) => x
            .iter()
            .map(|&i| if i == NA_INTEGER { f64::NAN } else { f64::from(i) })
            .collect(),
        RData::Real(x) => x.clone(),
        RData::Logical(x) => x
            .iter()
            .map(|b| b.map_or(f64::NAN, |b| f64::from(u8::from(b))))
            .collect(),
        _ => Vec::new(),
    }
}

fn count(what: &str, x: f64, max: f64) -> Result<usize, String> {
    if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
        return Err(format!("invalid `{what}`: {x}"));
    }
    if x > max {
        return Err(format!("`{what}` {x} exceeds the limit of {max}"));
    }
    Ok(x as usize)
}

/// Integer sum for integer and logical input, real sum otherwise; NA
/// propagates.
fn sum(x: &RValue) -> Result<RValue, String> {
    let ints = |it: &mut dyn Iterator<Item = Option<i32>>| -> Result<RValue, String> {
        let mut acc: i32 = 0;
        for v in it {
            let Some(v) = v else { return Ok(RValue::int(vec![NA_INTEGER])) };
            acc = acc
                .checked_add(v)
                .filter(|s| *s != NA_INTEGER)
                .ok_or("integer overflow in sum; use real input")?;
        }
        Ok(RValue::int(vec![acc]))
    };
    match &x.data {
        RData::Null => Ok(RValue::int(vec![0])),
        RData::Int(v) => ints(&mut v.iter().map(|&i| (i != NA_INTEGER).then_some(i))),
        RData::Logical(v) => ints(&mut v.iter().map(|b| b.map(i32::from))),
        RData::Real(v) => Ok(RValue::real(vec![v.iter().sum()])),
        _ => Err(format!("invalid type ({}) of argument", x.kind_name())),
    }
}

/// Arithmetic progression from `from` towards `to`. Without `by` the step
/// is ±1 and integral endpoints give an integer result.
fn seq(a: &Args) -> Result<RValue, String> {
    let from = number_or(a, 0, 1.0);
    let to = number_or(a, 1, 1.0);
    let explicit_by = a[2].is_some();
    let by = number_or(a, 2, if to >= from { 1.0 } else { -1.0 });
    if !from.is_finite() || !to.is_finite() || !by.is_finite() {
        return Err("`from`, `to` and `by` must be finite".into());
    }
    if from == to {
        return Ok(if !explicit_by && from.fract() == 0.0 && from.abs() < i32::MAX as f64 {
            RValue::int(vec![from as i32])
        } else {
            RValue::real(vec![from])
        });
    }
    if by == 0.0 || (to - from).signum() != by.signum() {
        return Err("wrong sign in `by` argument".into());
    }
    let steps = ((to - from) / by + 1e-10).floor();
    let n = count("length", steps + 1.0, MAX_SEQ_LEN)?;
    let values = (0..n).map(|i| from + i as f64 * by);
    let integral = !explicit_by && from.fract() == 0.0 && from.abs() < i32::MAX as f64 && to.abs() < i32::MAX as f64;
    Ok(if integral {
        RValue::int(values.map(|v| v as i32).collect())
    } else {
        RValue::real(values.collect())
    })
}

/// `n` normal draws from a generator seeded with `seed`.
fn gaussian(a: &Args) -> Result<RValue, String> {
    let n = count("n", number_or(a, 0, 0.0), MAX_SAMPLE)?;
    let mean = number_or(a, 1, 0.0);
    let sd = number_or(a, 2, 1.0);
    let seed = number_or(a, 3, 0.0);
    if seed < 0.0 || seed.fract() != 0.0 || seed >= u64::MAX as f64 {
        return Err(format!("invalid `seed`: {seed}"));
    }
    if !(sd >= 0.0 && sd.is_finite() && mean.is_finite()) {
        return Err(format!("invalid distribution parameters: mean {mean}, sd {sd}"));
    }
    let normal = Normal::new(mean, sd).map_err(|e| format!("invalid distribution parameters: {e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    Ok(RValue::real((0..n).map(|_| normal.sample(&mut rng)).collect()))
}

/// Bins `points` into `breaks`; the result lists breaks, counts and the
/// out-of-range tallies.
fn bin_histogram(a: &Args) -> Result<RValue, String> {
    let binned = bin_data(&reals(arg(a, 0)), &reals(arg(a, 1))).map_err(|e| e.to_string())?;
    Ok(RValue::named_list([
        ("breaks", RValue::real(binned.histogram.breaks)),
        ("counts", RValue::int(binned.histogram.counts)),
        ("underflow", RValue::real(vec![binned.underflow as f64])),
        ("overflow", RValue::real(vec![binned.overflow as f64])),
        ("missing", RValue::real(vec![binned.missing as f64])),
    ]))
}
