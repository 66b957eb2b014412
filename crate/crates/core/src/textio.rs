//! Canonical text format for categories, spaceoids, bundles and morphisms.
//!
//! Documents are JSON objects `{"kind", "version", "payload"}`. Complex
//! numbers are `[re, im]` pairs; dense tensors carry a `shape` header next to
//! their row-major nested `data`. The writer sorts keys and prints every
//! float as `{:.16e}`, so equal values give equal bytes.

use std::fmt::Write as _;

use num_complex::Complex;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::cstar::{CStarCategory, StarFunctor, Tensor3};
use crate::enriched::{BaseCategory, EnrichedBundle};
use crate::monoidal::{LineBundle, LineBundles, LineMap, OneDimCStarCat, OneDimCats, OneDimFunctor};
use crate::numlin::CMatrix;
use crate::spaceoid::{Spaceoid, SpaceoidMorphism};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("dimension mismatch at {path}: {detail}")]
    DimensionMismatch { path: String, detail: String },
}

pub type TextResult<T> = std::result::Result<T, TextError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    CStarCategory,
    Spaceoid,
    EnrichedBundle,
    Morphism,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::CStarCategory => "cstar-category",
            Kind::Spaceoid => "spaceoid",
            Kind::EnrichedBundle => "enriched-bundle",
            Kind::Morphism => "morphism",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Payload {
    CStar(CStarCategory<f64>),
    Spaceoid(Spaceoid<f64>),
    LineBundle(EnrichedBundle<f64, LineBundles>),
    CField(EnrichedBundle<f64, OneDimCats>),
    SpaceoidMorphism { source: Spaceoid<f64>, target: Spaceoid<f64>, morphism: SpaceoidMorphism<f64> },
    StarFunctor { source: CStarCategory<f64>, target: CStarCategory<f64>, functor: StarFunctor<f64> },
}

#[derive(Clone, Debug)]
pub struct Document {
    pub version: String,
    pub payload: Payload,
}

impl Document {
    pub fn new(payload: Payload) -> Self {
        Document { version: FORMAT_VERSION.into(), payload }
    }

    pub fn kind(&self) -> Kind {
        match self.payload {
            Payload::CStar(_) => Kind::CStarCategory,
            Payload::Spaceoid(_) => Kind::Spaceoid,
            Payload::LineBundle(_) | Payload::CField(_) => Kind::EnrichedBundle,
            Payload::SpaceoidMorphism { .. } | Payload::StarFunctor { .. } => Kind::Morphism,
        }
    }
}

// ---------------------------------------------------------------------------
// Writing

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(format!("{x}")), Value::Number)
}

fn cx(z: Complex<f64>) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

fn ints(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&i| Value::from(i)).collect())
}

fn strings(v: &[String]) -> Value {
    Value::Array(v.iter().map(|s| Value::String(s.clone())).collect())
}

fn arr<I: IntoIterator<Item = Value>>(it: I) -> Value {
    Value::Array(it.into_iter().collect())
}

fn obj(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn matrix_value(m: &CMatrix<f64>) -> Value {
    obj(vec![
        ("shape", ints(&[m.rows(), m.cols()])),
        ("data", arr((0..m.rows()).map(|i| arr((0..m.cols()).map(|j| cx(m[(i, j)])))))),
    ])
}

fn tensor_value(t: &Tensor3<f64>) -> Value {
    let [d0, d1, d2] = t.dims();
    obj(vec![
        ("shape", ints(&[d0, d1, d2])),
        ("data", arr((0..d0).map(|i| arr((0..d1).map(|j| arr((0..d2).map(|k| cx(t.get(i, j, k))))))))),
    ])
}

fn cstar_value(c: &CStarCategory<f64>) -> Value {
    let k = c.n_objects();
    obj(vec![
        ("objects", strings(c.objects())),
        ("hom_dims", arr((0..k).map(|a| ints(&(0..k).map(|b| c.hom_dim(a, b)).collect::<Vec<_>>())))),
        ("comp", arr((0..k).map(|a| arr((0..k).map(|b| arr((0..k).map(|cc| tensor_value(c.comp(a, b, cc))))))))),
        ("inv", arr((0..k).map(|a| arr((0..k).map(|b| matrix_value(c.inv(a, b))))))),
        ("units", arr((0..k).map(|a| arr(c.unit_coords(a).iter().map(|z| cx(*z)))))),
    ])
}

fn spaceoid_value(s: &Spaceoid<f64>) -> Value {
    obj(vec![
        ("points", strings(&s.points)),
        ("objects", strings(&s.objects)),
        ("metric", arr(s.metric.iter().map(|m| arr(m.iter().map(|r| arr(r.iter().map(|h| num(*h)))))))),
        (
            "comp",
            arr(s.comp.iter().map(|m| arr(m.iter().map(|r| arr(r.iter().map(|v| arr(v.iter().map(|z| cx(*z)))))))))
        ),
        ("inv", arr(s.inv.iter().map(|m| arr(m.iter().map(|r| arr(r.iter().map(|z| cx(*z)))))))),
    ])
}

fn one_dim_value(o: &OneDimCStarCat<f64>) -> Value {
    obj(vec![
        ("objects", strings(&o.objects)),
        ("metric", arr(o.metric.iter().map(|r| arr(r.iter().map(|h| num(*h)))))),
        ("comp", arr(o.comp.iter().map(|r| arr(r.iter().map(|v| arr(v.iter().map(|z| cx(*z)))))))),
        ("inv", arr(o.inv.iter().map(|r| arr(r.iter().map(|z| cx(*z)))))),
    ])
}

fn one_dim_map_value(f: &OneDimFunctor<f64>) -> Value {
    obj(vec![
        ("object_map", ints(&f.object_map)),
        ("scalars", arr(f.scalars.iter().map(|r| arr(r.iter().map(|z| cx(*z)))))),
    ])
}

fn line_map_value(m: &LineMap<f64>) -> Value {
    arr(m.scalars.iter().map(|z| cx(*z)))
}

fn base_value(b: &BaseCategory) -> Value {
    let comp = b
        .composable_pairs()
        .into_iter()
        .map(|(x, y)| ints(&[x, y, b.compose(x, y).expect("composable")]))
        .collect::<Vec<_>>();
    obj(vec![
        ("objects", strings(b.object_names())),
        ("arrows", arr(b.arrows().iter().map(|&(t, s)| ints(&[t, s])))),
        ("composition", Value::Array(comp)),
        (
            "involution",
            if b.has_involution() {
                ints(&(0..b.n_arrows()).map(|x| b.star(x).expect("involution")).collect::<Vec<_>>())
            } else {
                Value::Null
            },
        ),
        ("identities", ints(&(0..b.n_objects()).map(|a| b.identity(a)).collect::<Vec<_>>())),
    ])
}

fn bundle_value<M>(
    b: &EnrichedBundle<f64, M>,
    enriching: &str,
    extra: Vec<(&'static str, Value)>,
    fiber: impl Fn(&M::Obj) -> Value,
    map: impl Fn(&M::Mor) -> Value,
) -> Value
where
    M: crate::monoidal::MonoidalStarCategory<f64>,
{
    let mu = b
        .base
        .composable_pairs()
        .into_iter()
        .map(|(x, y)| obj(vec![("pair", ints(&[x, y])), ("map", map(b.mu[x][y].as_ref().expect("composable")))]))
        .collect::<Vec<_>>();
    let mut entries = vec![
        ("enriching", Value::String(enriching.into())),
        ("base", base_value(&b.base)),
        ("fibers", arr(b.fiber.iter().map(&fiber))),
        ("mu", Value::Array(mu)),
        ("j", arr(b.j.iter().map(&map))),
        ("nu", b.nu.as_ref().map_or(Value::Null, |v| arr(v.iter().map(&map)))),
    ];
    entries.extend(extra);
    obj(entries)
}

fn payload_value(p: &Payload) -> Value {
    match p {
        Payload::CStar(c) => cstar_value(c),
        Payload::Spaceoid(s) => spaceoid_value(s),
        Payload::LineBundle(b) => bundle_value(
            b,
            "line-bundles",
            vec![("points", strings(&b.enriching.point_names))],
            |e: &LineBundle<f64>| arr(e.metric.iter().map(|h| num(*h))),
            line_map_value,
        ),
        Payload::CField(b) => bundle_value(
            b,
            "one-dim-cstar",
            vec![("fiber_objects", Value::from(b.enriching.n_objects))],
            one_dim_value,
            one_dim_map_value,
        ),
        Payload::SpaceoidMorphism { source, target, morphism } => obj(vec![
            ("morphism_kind", Value::String("spaceoid".into())),
            ("source", spaceoid_value(source)),
            ("target", spaceoid_value(target)),
            ("f_delta", ints(&morphism.f_delta)),
            ("f_rel", ints(&morphism.f_rel)),
            (
                "scalars",
                arr(morphism.scalars.iter().map(|m| arr(m.iter().map(|r| arr(r.iter().map(|z| cx(*z))))))),
            ),
        ]),
        Payload::StarFunctor { source, target, functor } => obj(vec![
            ("morphism_kind", Value::String("star-functor".into())),
            ("source", cstar_value(source)),
            ("target", cstar_value(target)),
            ("object_map", ints(&functor.object_map)),
            ("arrow_maps", arr(functor.arrow_maps.iter().map(|r| arr(r.iter().map(matrix_value))))),
        ]),
    }
}

fn depth(v: &Value) -> usize {
    match v {
        Value::Array(a) => 1 + a.iter().map(depth).max().unwrap_or(0),
        Value::Object(_) => usize::MAX / 2,
        _ => 0,
    }
}

fn write_scalar(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) => match n.as_u64() {
            Some(i) if !n.is_f64() => write!(out, "{i}").expect("string write"),
            _ => {
                let x = n.as_f64().expect("finite");
                write!(out, "{x:.16e}").expect("string write")
            }
        },
        other => out.push_str(&serde_json::to_string(other).expect("scalar")),
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, val)) in m.iter().enumerate() {
                out.push_str(&" ".repeat(indent + 2));
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, val, indent + 2);
                if i + 1 < m.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) if depth(v) <= 2 => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&" ".repeat(indent + 2));
                write_value(out, x, indent + 2);
                if i + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&" ".repeat(indent));
            out.push(']');
        }
        scalar => write_scalar(out, scalar),
    }
}

/// Canonical text of a document, newline-terminated.
pub fn serialize(doc: &Document) -> String {
    let v = obj(vec![
        ("kind", Value::String(doc.kind().name().into())),
        ("version", Value::String(doc.version.clone())),
        ("payload", payload_value(&doc.payload)),
    ]);
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Reading

fn schema(path: &str, reason: impl Into<String>) -> TextError {
    TextError::Schema { path: path.into(), reason: reason.into() }
}

fn dims(path: &str, detail: impl Into<String>) -> TextError {
    TextError::DimensionMismatch { path: path.into(), detail: detail.into() }
}

fn join(path: &str, key: impl std::fmt::Display) -> String {
    format!("{path}.{key}")
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

/// An object with exactly the allowed keys, each required unless listed optional.
fn fields<'a>(v: &'a Value, path: &str, required: &[&str], optional: &[&str]) -> TextResult<&'a Map<String, Value>> {
    let m = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    for k in m.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(schema(&join(path, k), "unknown field"));
        }
    }
    for k in required {
        if !m.contains_key(*k) {
            return Err(schema(&join(path, k), "missing field"));
        }
    }
    Ok(m)
}

fn get<'a>(m: &'a Map<String, Value>, key: &str) -> &'a Value {
    m.get(key).unwrap_or(&Value::Null)
}

fn array<'a>(v: &'a Value, path: &str) -> TextResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn array_of_len<'a>(v: &'a Value, path: &str, len: usize) -> TextResult<&'a Vec<Value>> {
    let a = array(v, path)?;
    if a.len() != len {
        return Err(dims(path, format!("expected {len} entries, found {}", a.len())));
    }
    Ok(a)
}

fn float(v: &Value, path: &str) -> TextResult<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema(path, "number out of range")),
        _ => Err(schema(path, "expected a number")),
    }
}

fn uint(v: &Value, path: &str) -> TextResult<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn text(v: &Value, path: &str) -> TextResult<String> {
    v.as_str().map(str::to_string).ok_or_else(|| schema(path, "expected a string"))
}

fn complex(v: &Value, path: &str) -> TextResult<Complex<f64>> {
    let a = array(v, path)?;
    if a.len() != 2 {
        return Err(schema(path, "complex numbers are [re, im] pairs"));
    }
    Ok(Complex::new(float(&a[0], &index(path, 0))?, float(&a[1], &index(path, 1))?))
}

/// Nested array with the given shape, leaves read by `leaf`.
fn nested<T>(
    v: &Value,
    path: &str,
    shape: &[usize],
    leaf: &dyn Fn(&Value, &str) -> TextResult<T>,
) -> TextResult<Vec<T>> {
    match shape.split_first() {
        None => Ok(vec![leaf(v, path)?]),
        Some((&n, rest)) => {
            let a = array_of_len(v, path, n)?;
            let mut out = Vec::new();
            for (i, x) in a.iter().enumerate() {
                out.extend(nested(x, &index(path, i), rest, leaf)?);
            }
            Ok(out)
        }
    }
}

fn list<T>(v: &Value, path: &str, leaf: &dyn Fn(&Value, &str) -> TextResult<T>) -> TextResult<Vec<T>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| leaf(x, &index(path, i))).collect()
}

fn grid<T: Clone>(flat: Vec<T>, n: usize) -> Vec<Vec<T>> {
    if n == 0 {
        return Vec::new();
    }
    flat.chunks(n).map(<[T]>::to_vec).collect()
}

fn shape_header(m: &Map<String, Value>, path: &str, want: &[usize]) -> TextResult<()> {
    let p = join(path, "shape");
    let got = list(get(m, "shape"), &p, &uint)?;
    if got != want {
        return Err(dims(&p, format!("declared {got:?}, expected {want:?}")));
    }
    Ok(())
}

fn read_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> TextResult<CMatrix<f64>> {
    let m = fields(v, path, &["shape", "data"], &[])?;
    shape_header(m, path, &[rows, cols])?;
    let data = nested(get(m, "data"), &join(path, "data"), &[rows, cols], &complex)?;
    if rows == 0 || cols == 0 {
        return Ok(CMatrix::zeros(rows, cols));
    }
    CMatrix::from_rows(&grid(data, cols)).map_err(|e| dims(path, e.to_string()))
}

fn read_tensor(v: &Value, path: &str, want: [usize; 3]) -> TextResult<Tensor3<f64>> {
    let m = fields(v, path, &["shape", "data"], &[])?;
    shape_header(m, path, &want)?;
    let data = nested(get(m, "data"), &join(path, "data"), &want, &complex)?;
    Tensor3::from_data(want, data).map_err(|e| dims(path, e.to_string()))
}

fn read_cstar(v: &Value, path: &str) -> TextResult<CStarCategory<f64>> {
    let m = fields(v, path, &["objects", "hom_dims", "comp", "inv", "units"], &[])?;
    let objects = list(get(m, "objects"), &join(path, "objects"), &text)?;
    let k = objects.len();
    let hd = grid(nested(get(m, "hom_dims"), &join(path, "hom_dims"), &[k, k], &uint)?, k);
    let p = join(path, "comp");
    let rows = array_of_len(get(m, "comp"), &p, k)?;
    let mut comp = Vec::with_capacity(k);
    for (a, row) in rows.iter().enumerate() {
        let pa = index(&p, a);
        let cols = array_of_len(row, &pa, k)?;
        let mut ca = Vec::with_capacity(k);
        for (b, col) in cols.iter().enumerate() {
            let pb = index(&pa, b);
            let ts = array_of_len(col, &pb, k)?;
            let cb = ts
                .iter()
                .enumerate()
                .map(|(c, t)| read_tensor(t, &index(&pb, c), [hd[a][b], hd[b][c], hd[a][c]]))
                .collect::<TextResult<Vec<_>>>()?;
            ca.push(cb);
        }
        comp.push(ca);
    }
    let p = join(path, "inv");
    let rows = array_of_len(get(m, "inv"), &p, k)?;
    let mut inv = Vec::with_capacity(k);
    for (a, row) in rows.iter().enumerate() {
        let pa = index(&p, a);
        let cols = array_of_len(row, &pa, k)?;
        inv.push(
            cols.iter()
                .enumerate()
                .map(|(b, x)| read_matrix(x, &index(&pa, b), hd[a][b], hd[b][a]))
                .collect::<TextResult<Vec<_>>>()?,
        );
    }
    let p = join(path, "units");
    let rows = array_of_len(get(m, "units"), &p, k)?;
    let units = rows
        .iter()
        .enumerate()
        .map(|(a, u)| nested(u, &index(&p, a), &[hd[a][a]], &complex))
        .collect::<TextResult<Vec<_>>>()?;
    CStarCategory::new(objects, hd, comp, inv, units).map_err(|e| dims(path, e.to_string()))
}

fn read_spaceoid(v: &Value, path: &str) -> TextResult<Spaceoid<f64>> {
    let m = fields(v, path, &["points", "objects", "metric", "comp", "inv"], &[])?;
    let points = list(get(m, "points"), &join(path, "points"), &text)?;
    let objects = list(get(m, "objects"), &join(path, "objects"), &text)?;
    let (n, k) = (points.len(), objects.len());
    if n == 0 || k == 0 {
        return Err(schema(path, "a spaceoid needs at least one point and one object"));
    }
    let metric = grid(grid(nested(get(m, "metric"), &join(path, "metric"), &[n, k, k], &float)?, k), k);
    let comp = grid(grid(grid(nested(get(m, "comp"), &join(path, "comp"), &[n, k, k, k], &complex)?, k), k), k);
    let inv = grid(grid(nested(get(m, "inv"), &join(path, "inv"), &[n, k, k], &complex)?, k), k);
    Ok(Spaceoid { points, objects, metric, comp, inv })
}

fn read_one_dim(v: &Value, path: &str, k: usize) -> TextResult<OneDimCStarCat<f64>> {
    let m = fields(v, path, &["objects", "metric", "comp", "inv"], &[])?;
    let objects = list(get(m, "objects"), &join(path, "objects"), &text)?;
    if objects.len() != k {
        return Err(dims(&join(path, "objects"), format!("expected {k} objects, found {}", objects.len())));
    }
    Ok(OneDimCStarCat {
        objects,
        metric: grid(nested(get(m, "metric"), &join(path, "metric"), &[k, k], &float)?, k),
        comp: grid(grid(nested(get(m, "comp"), &join(path, "comp"), &[k, k, k], &complex)?, k), k),
        inv: grid(nested(get(m, "inv"), &join(path, "inv"), &[k, k], &complex)?, k),
    })
}

fn read_base(v: &Value, path: &str) -> TextResult<BaseCategory> {
    let m = fields(v, path, &["objects", "arrows", "composition", "involution", "identities"], &[])?;
    let names = list(get(m, "objects"), &join(path, "objects"), &text)?;
    let pair = |x: &Value, p: &str| -> TextResult<(usize, usize)> {
        let v = nested(x, p, &[2], &uint)?;
        Ok((v[0], v[1]))
    };
    let arrows = list(get(m, "arrows"), &join(path, "arrows"), &pair)?;
    let n = arrows.len();
    let mut comp = vec![vec![None; n]; n];
    let p = join(path, "composition");
    for (i, t) in array(get(m, "composition"), &p)?.iter().enumerate() {
        let pi = index(&p, i);
        let t = nested(t, &pi, &[3], &uint)?;
        if t.iter().any(|&x| x >= n) {
            return Err(schema(&pi, "arrow index out of range"));
        }
        if comp[t[0]][t[1]].replace(t[2]).is_some() {
            return Err(schema(&pi, "composite listed twice"));
        }
    }
    let star = match get(m, "involution") {
        Value::Null => None,
        x => Some(nested(x, &join(path, "involution"), &[n], &uint)?),
    };
    let ids = list(get(m, "identities"), &join(path, "identities"), &uint)?;
    BaseCategory::new(names.len(), arrows, comp, star, ids)
        .and_then(|b| b.with_object_names(names))
        .map_err(|e| schema(path, e.to_string()))
}

/// Structure-map table from the `mu` list, which must cover every composable pair once.
fn read_mu<M>(
    v: &Value,
    path: &str,
    base: &BaseCategory,
    map: &dyn Fn(&Value, &str, usize, usize) -> TextResult<M>,
) -> TextResult<Vec<Vec<Option<M>>>> {
    let n = base.n_arrows();
    let mut mu: Vec<Vec<Option<M>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
    let entries = array(v, path)?;
    let want = base.composable_pairs().len();
    if entries.len() != want {
        return Err(dims(path, format!("expected {want} composable pairs, found {}", entries.len())));
    }
    for (i, e) in entries.iter().enumerate() {
        let pi = index(path, i);
        let m = fields(e, &pi, &["pair", "map"], &[])?;
        let xy = nested(get(m, "pair"), &join(&pi, "pair"), &[2], &uint)?;
        let (x, y) = (xy[0], xy[1]);
        if x >= n || y >= n || base.compose(x, y).is_none() {
            return Err(schema(&join(&pi, "pair"), "not a composable pair"));
        }
        if mu[x][y].is_some() {
            return Err(schema(&join(&pi, "pair"), "pair listed twice"));
        }
        mu[x][y] = Some(map(get(m, "map"), &join(&pi, "map"), x, y)?);
    }
    Ok(mu)
}

fn read_bundle(v: &Value, path: &str) -> TextResult<Payload> {
    let m = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    let enriching = text(get(m, "enriching"), &join(path, "enriching"))?;
    match enriching.as_str() {
        "line-bundles" => {
            let m = fields(v, path, &["enriching", "base", "points", "fibers", "mu", "j", "nu"], &[])?;
            let base = read_base(get(m, "base"), &join(path, "base"))?;
            let points = list(get(m, "points"), &join(path, "points"), &text)?;
            let np = points.len();
            let line = |x: &Value, p: &str| -> TextResult<LineMap<f64>> {
                Ok(LineMap { scalars: nested(x, p, &[np], &complex)? })
            };
            let p = join(path, "fibers");
            let fibers = array_of_len(get(m, "fibers"), &p, base.n_arrows())?
                .iter()
                .enumerate()
                .map(|(i, x)| Ok(LineBundle { metric: nested(x, &index(&p, i), &[np], &float)? }))
                .collect::<TextResult<Vec<_>>>()?;
            let mu = read_mu(get(m, "mu"), &join(path, "mu"), &base, &|x, p, _, _| line(x, p))?;
            let p = join(path, "j");
            let j = array_of_len(get(m, "j"), &p, base.n_objects())?
                .iter()
                .enumerate()
                .map(|(i, x)| line(x, &index(&p, i)))
                .collect::<TextResult<Vec<_>>>()?;
            let nu = match get(m, "nu") {
                Value::Null => None,
                x => {
                    let p = join(path, "nu");
                    Some(
                        array_of_len(x, &p, base.n_arrows())?
                            .iter()
                            .enumerate()
                            .map(|(i, x)| line(x, &index(&p, i)))
                            .collect::<TextResult<Vec<_>>>()?,
                    )
                }
            };
            EnrichedBundle::new(base, LineBundles::named(points), fibers, mu, j, nu)
                .map(Payload::LineBundle)
                .map_err(|e| dims(path, e.to_string()))
        }
        "one-dim-cstar" => {
            let m = fields(v, path, &["enriching", "base", "fiber_objects", "fibers", "mu", "j", "nu"], &[])?;
            let base = read_base(get(m, "base"), &join(path, "base"))?;
            let k = uint(get(m, "fiber_objects"), &join(path, "fiber_objects"))?;
            let p = join(path, "fibers");
            let fibers = array_of_len(get(m, "fibers"), &p, base.n_arrows())?
                .iter()
                .enumerate()
                .map(|(i, x)| read_one_dim(x, &index(&p, i), k))
                .collect::<TextResult<Vec<_>>>()?;
            let functor = |x: &Value, p: &str, src: usize, dst: usize| -> TextResult<OneDimFunctor<f64>> {
                let m = fields(x, p, &["object_map", "scalars"], &[])?;
                Ok(OneDimFunctor {
                    source: fibers[src].clone(),
                    target: fibers[dst].clone(),
                    object_map: nested(get(m, "object_map"), &join(p, "object_map"), &[k], &uint)?,
                    scalars: grid(nested(get(m, "scalars"), &join(p, "scalars"), &[k, k], &complex)?, k),
                })
            };
            // μ_{x,y}: E_x ⊗ E_y = E_x -> E_{xy}; j_a: E_{id} -> E_{id}; ν_x: E_x -> E_{x*}
            let mu = read_mu(get(m, "mu"), &join(path, "mu"), &base, &|x, p, a, b| {
                functor(x, p, a, base.compose(a, b).expect("composable"))
            })?;
            let p = join(path, "j");
            let j = array_of_len(get(m, "j"), &p, base.n_objects())?
                .iter()
                .enumerate()
                .map(|(a, x)| functor(x, &index(&p, a), base.identity(a), base.identity(a)))
                .collect::<TextResult<Vec<_>>>()?;
            let nu = match get(m, "nu") {
                Value::Null => None,
                x => {
                    let p = join(path, "nu");
                    if !base.has_involution() {
                        return Err(schema(&p, "involution maps over a base without involution"));
                    }
                    Some(
                        array_of_len(x, &p, base.n_arrows())?
                            .iter()
                            .enumerate()
                            .map(|(i, x)| functor(x, &index(&p, i), i, base.star(i).expect("involution")))
                            .collect::<TextResult<Vec<_>>>()?,
                    )
                }
            };
            EnrichedBundle::new(base, OneDimCats { n_objects: k }, fibers, mu, j, nu)
                .map(Payload::CField)
                .map_err(|e| dims(path, e.to_string()))
        }
        other => Err(schema(&join(path, "enriching"), format!("unknown enriching category {other:?}"))),
    }
}

fn read_morphism(v: &Value, path: &str) -> TextResult<Payload> {
    let m = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    let kind = text(get(m, "morphism_kind"), &join(path, "morphism_kind"))?;
    match kind.as_str() {
        "spaceoid" => {
            let m = fields(v, path, &["morphism_kind", "source", "target", "f_delta", "f_rel", "scalars"], &[])?;
            let source = read_spaceoid(get(m, "source"), &join(path, "source"))?;
            let target = read_spaceoid(get(m, "target"), &join(path, "target"))?;
            let (n, k) = (source.n_points(), source.n_objects());
            let morphism = SpaceoidMorphism {
                f_delta: nested(get(m, "f_delta"), &join(path, "f_delta"), &[n], &uint)?,
                f_rel: nested(get(m, "f_rel"), &join(path, "f_rel"), &[k], &uint)?,
                scalars: grid(grid(nested(get(m, "scalars"), &join(path, "scalars"), &[n, k, k], &complex)?, k), k),
            };
            Ok(Payload::SpaceoidMorphism { source, target, morphism })
        }
        "star-functor" => {
            let m = fields(v, path, &["morphism_kind", "source", "target", "object_map", "arrow_maps"], &[])?;
            let source = read_cstar(get(m, "source"), &join(path, "source"))?;
            let target = read_cstar(get(m, "target"), &join(path, "target"))?;
            let k = source.n_objects();
            let object_map = nested(get(m, "object_map"), &join(path, "object_map"), &[k], &uint)?;
            let p = join(path, "object_map");
            if object_map.iter().any(|&o| o >= target.n_objects()) {
                return Err(schema(&p, "object index out of range"));
            }
            let p = join(path, "arrow_maps");
            let rows = array_of_len(get(m, "arrow_maps"), &p, k)?;
            let mut arrow_maps = Vec::with_capacity(k);
            for (a, row) in rows.iter().enumerate() {
                let pa = index(&p, a);
                let cols = array_of_len(row, &pa, k)?;
                arrow_maps.push(
                    cols.iter()
                        .enumerate()
                        .map(|(b, x)| {
                            read_matrix(
                                x,
                                &index(&pa, b),
                                target.hom_dim(object_map[a], object_map[b]),
                                source.hom_dim(a, b),
                            )
                        })
                        .collect::<TextResult<Vec<_>>>()?,
                );
            }
            Ok(Payload::StarFunctor { source, target, functor: StarFunctor { object_map, arrow_maps } })
        }
        other => Err(schema(&join(path, "morphism_kind"), format!("unknown morphism kind {other:?}"))),
    }
}

/// Parses and validates a document.
pub fn parse(input: &str) -> TextResult<Document> {
    let v: Value = serde_json::from_str(input)
        .map_err(|e| TextError::Syntax { line: e.line(), col: e.column(), message: e.to_string() })?;
    let m = fields(&v, "$", &["kind", "version", "payload"], &[])?;
    let version = text(get(m, "version"), "$.version")?;
    if version != FORMAT_VERSION {
        return Err(schema("$.version", format!("unsupported version {version:?}")));
    }
    let kind = text(get(m, "kind"), "$.kind")?;
    let payload = get(m, "payload");
    let payload = match kind.as_str() {
        "cstar-category" => Payload::CStar(read_cstar(payload, "$.payload")?),
        "spaceoid" => Payload::Spaceoid(read_spaceoid(payload, "$.payload")?),
        "enriched-bundle" => read_bundle(payload, "$.payload")?,
        "morphism" => read_morphism(payload, "$.payload")?,
        other => return Err(schema("$.kind", format!("unknown kind {other:?}"))),
    };
    Ok(Document { version, payload })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar::diagonal_functions;
    use crate::spectra::{generate, generate_spaceoid, tg_cfield, tg_linebundle};

    fn round_trip(doc: &Document) -> String {
        let text = serialize(doc);
        let again = serialize(&parse(&text).unwrap());
        assert_eq!(text, again);
        text
    }

    #[test]
    fn minimal_category_parses() {
        let text = r#"{"kind": "cstar-category", "version": "1", "payload": {
            "objects": ["A"], "hom_dims": [[1]],
            "comp": [[[{"shape": [1, 1, 1], "data": [[[[1.0, 0.0]]]]}]]],
            "inv": [[{"shape": [1, 1], "data": [[[1.0, 0.0]]]}]],
            "units": [[[1.0, 0.0]]]}}"#;
        let doc = parse(text).unwrap();
        match doc.payload {
            Payload::CStar(c) => assert!(c.verify_cstar(1e-12).passed()),
            _ => panic!("wrong payload"),
        }
    }

    #[test]
    fn long_row_is_a_dimension_mismatch() {
        let text = serialize(&Document::new(Payload::CStar(diagonal_functions(2))));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["payload"]["units"][0].as_array_mut().unwrap().push(serde_json::json!([1.0, 0.0]));
        let text = v.to_string();
        match parse(&text) {
            Err(TextError::DimensionMismatch { path, .. }) => assert_eq!(path, "$.payload.units[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"kind": "spaceoid", "version": "1", "payload": {}, "extra": 1}"#;
        assert!(matches!(parse(text), Err(TextError::Schema { .. })));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse("{\n  \"kind\": ,\n}") {
            Err(TextError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_numbers() {
        let text = serialize(&Document::new(Payload::Spaceoid(Spaceoid::trivial(1, 1))));
        assert!(text.contains("1.0000000000000000e0"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn every_payload_round_trips() {
        let s = generate_spaceoid::<f64>(3, 2, 3).unwrap();
        round_trip(&Document::new(Payload::Spaceoid(s.clone())));
        round_trip(&Document::new(Payload::CStar(generate(4, 2, 2).unwrap())));
        round_trip(&Document::new(Payload::LineBundle(tg_linebundle(&s).unwrap())));
        round_trip(&Document::new(Payload::CField(tg_cfield(&s).unwrap())));
        let m = crate::spaceoid::identity_morphism(&s);
        round_trip(&Document::new(Payload::SpaceoidMorphism { source: s.clone(), target: s, morphism: m }));
        let c = generate::<f64>(5, 2, 2).unwrap();
        let f = StarFunctor::identity(&c);
        round_trip(&Document::new(Payload::StarFunctor { source: c.clone(), target: c, functor: f }));
    }
}
