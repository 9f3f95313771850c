//! Barcodes of filtered complexes, bar counting, beginning/end maps and audits.
//!
//! Bars are half-open intervals `(a, b]`; a bar covers `t` iff `a < t <= b`.
//! The sublevel complex at `t` consists of generators with filtration `< t`,
//! which makes every dimension function left-semicontinuous.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exact::{sort_exact, ExactReal};

#[derive(Clone, Debug, PartialEq)]
pub struct Bar {
    pub a: ExactReal,
    /// `None` is an infinite bar.
    pub b: Option<ExactReal>,
    pub deg: i64,
}

impl Bar {
    pub fn finite(a: ExactReal, b: ExactReal, deg: i64) -> Self {
        Bar { a, b: Some(b), deg }
    }

    pub fn infinite(a: ExactReal, deg: i64) -> Self {
        Bar { a, b: None, deg }
    }

    pub fn covers(&self, t: &ExactReal) -> Result<bool> {
        if !self.a.lt(t)? {
            return Ok(false);
        }
        match &self.b {
            None => Ok(true),
            Some(b) => t.le(b),
        }
    }

    pub fn length(&self) -> Option<ExactReal> {
        self.b.as_ref().map(|b| b - &self.a)
    }

    fn cmp_key(&self, other: &Bar) -> Result<Ordering> {
        let o = self.a.cmp_exact(&other.a)?;
        if o != Ordering::Equal {
            return Ok(o);
        }
        let o = match (&self.b, &other.b) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => x.cmp_exact(y)?,
        };
        Ok(o.then(self.deg.cmp(&other.deg)))
    }
}

impl Serialize for Bar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let b = match &self.b {
            Some(b) => b.to_json(),
            None => Value::String("inf".into()),
        };
        let mut m = serde_json::Map::new();
        m.insert("a".into(), self.a.to_json());
        m.insert("b".into(), b);
        m.insert("deg".into(), Value::from(self.deg));
        Value::Object(m).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Value::deserialize(d)?;
        let o = v
            .as_object()
            .ok_or_else(|| D::Error::custom("bar must be an object"))?;
        let a = ExactReal::from_json(
            o.get("a")
                .ok_or_else(|| D::Error::custom("bar needs 'a'"))?,
        )
        .map_err(D::Error::custom)?;
        let b = match o.get("b") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if s == "inf" => None,
            Some(x) => Some(ExactReal::from_json(x).map_err(D::Error::custom)?),
        };
        let deg = o
            .get("deg")
            .and_then(Value::as_i64)
            .ok_or_else(|| D::Error::custom("bar needs integer 'deg'"))?;
        Ok(Bar { a, b, deg })
    }
}

#[derive(Serialize, Deserialize)]
struct RawBarcode {
    field: u64,
    bars: Vec<Bar>,
}

/// A multiset of degree-tagged bars, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBarcode", into = "RawBarcode")]
pub struct Barcode {
    field: u64,
    bars: Vec<Bar>,
}

impl TryFrom<RawBarcode> for Barcode {
    type Error = Error;
    fn try_from(r: RawBarcode) -> Result<Self> {
        Barcode::new(r.field, r.bars)
    }
}

impl From<Barcode> for RawBarcode {
    fn from(b: Barcode) -> Self {
        RawBarcode {
            field: b.field,
            bars: b.bars,
        }
    }
}

fn sort_bars(bars: &mut [Bar]) -> Result<()> {
    let mut err = None;
    bars.sort_by(|x, y| match x.cmp_key(y) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    err.map_or(Ok(()), Err)
}

impl Barcode {
    pub fn new(field: u64, mut bars: Vec<Bar>) -> Result<Self> {
        check_field(field)?;
        for bar in &bars {
            if bar.a.is_negative()? {
                return Err(Error::MalformedComplex(format!(
                    "bar born at negative level {}",
                    bar.a
                )));
            }
            if let Some(b) = &bar.b {
                if !bar.a.lt(b)? {
                    return Err(Error::MalformedComplex(format!(
                        "empty bar ({}, {}]",
                        bar.a, b
                    )));
                }
            }
        }
        sort_bars(&mut bars)?;
        Ok(Barcode { field, bars })
    }

    pub fn field(&self) -> u64 {
        self.field
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Sorted distinct finite endpoints.
    pub fn spectrum(&self) -> Result<Vec<ExactReal>> {
        let mut v: Vec<ExactReal> = Vec::new();
        for bar in &self.bars {
            v.push(bar.a.clone());
            if let Some(b) = &bar.b {
                v.push(b.clone());
            }
        }
        sort_exact(&mut v)?;
        v.dedup();
        Ok(v)
    }

    /// The same bars with every degree shifted by `s`.
    pub fn shift_degrees(&self, s: i64) -> Barcode {
        Barcode {
            field: self.field,
            bars: self
                .bars
                .iter()
                .map(|b| Bar {
                    a: b.a.clone(),
                    b: b.b.clone(),
                    deg: b.deg + s,
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

fn check_field(field: u64) -> Result<()> {
    if field == 0 || is_prime(field) {
        Ok(())
    } else {
        Err(Error::MalformedComplex(format!(
            "field characteristic {field} is not 0 or a prime"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTerm {
    pub id: String,
    pub coef: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub deg: i64,
    pub filt: ExactReal,
    /// Boundary of this generator as an integer combination of other generators.
    #[serde(default)]
    pub boundary: Vec<BoundaryTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredComplex {
    pub field: u64,
    pub generators: Vec<Generator>,
}

trait FieldOps {
    type E: Clone;
    fn from_int(&self, n: &BigInt) -> Self::E;
    fn is_zero(&self, x: &Self::E) -> bool;
    fn add(&self, x: &Self::E, y: &Self::E) -> Self::E;
    fn mul(&self, x: &Self::E, y: &Self::E) -> Self::E;
    fn neg(&self, x: &Self::E) -> Self::E;
    fn inv(&self, x: &Self::E) -> Self::E;
}

struct Fp(u64);

impl FieldOps for Fp {
    type E = u64;
    fn from_int(&self, n: &BigInt) -> u64 {
        let p = BigInt::from(self.0);
        ((n % &p + &p) % &p).to_u64().expect("reduced")
    }
    fn is_zero(&self, x: &u64) -> bool {
        *x == 0
    }
    fn add(&self, x: &u64, y: &u64) -> u64 {
        ((*x as u128 + *y as u128) % self.0 as u128) as u64
    }
    fn mul(&self, x: &u64, y: &u64) -> u64 {
        ((*x as u128 * *y as u128) % self.0 as u128) as u64
    }
    fn neg(&self, x: &u64) -> u64 {
        (self.0 - x % self.0) % self.0
    }
    fn inv(&self, x: &u64) -> u64 {
        // Fermat: x^(p-2)
        let (mut base, mut e, mut acc) = (*x, self.0 - 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }
}

struct Q;

impl FieldOps for Q {
    type E = BigRational;
    fn from_int(&self, n: &BigInt) -> BigRational {
        BigRational::from_integer(n.clone())
    }
    fn is_zero(&self, x: &BigRational) -> bool {
        x.is_zero()
    }
    fn add(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x + y
    }
    fn mul(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x * y
    }
    fn neg(&self, x: &BigRational) -> BigRational {
        -x
    }
    fn inv(&self, x: &BigRational) -> BigRational {
        x.recip()
    }
}

type Column<E> = BTreeMap<usize, E>;

fn axpy<F: FieldOps>(f: &F, col: &mut Column<F::E>, c: &F::E, other: &Column<F::E>) {
    for (r, v) in other {
        let add = f.mul(c, v);
        let e = col.entry(*r).or_insert_with(|| f.from_int(&BigInt::zero()));
        *e = f.add(e, &add);
        if f.is_zero(e) {
            col.remove(r);
        }
    }
}

struct Prepared {
    ids: Vec<String>,
    degs: Vec<i64>,
    filts: Vec<ExactReal>,
    /// Boundary columns with integer coefficients, indexed by generator.
    cols: Vec<Vec<(usize, BigInt)>>,
}

fn prepare(cx: &FilteredComplex) -> Result<Prepared> {
    check_field(cx.field)?;
    let mut index = BTreeMap::new();
    for (i, g) in cx.generators.iter().enumerate() {
        if index.insert(g.id.clone(), i).is_some() {
            return Err(Error::MalformedComplex(format!(
                "duplicate generator '{}'",
                g.id
            )));
        }
        if g.filt.is_negative()? {
            return Err(Error::MalformedComplex(format!(
                "negative filtration at '{}'",
                g.id
            )));
        }
    }
    let mut cols = Vec::with_capacity(cx.generators.len());
    for g in &cx.generators {
        let mut col: BTreeMap<usize, BigInt> = BTreeMap::new();
        for t in &g.boundary {
            let r = *index.get(&t.id).ok_or_else(|| {
                Error::MalformedComplex(format!("unknown generator '{}' in boundary", t.id))
            })?;
            *col.entry(r).or_insert_with(BigInt::zero) += t.coef;
        }
        col.retain(|_, v| !v.is_zero());
        cols.push(col.into_iter().collect());
    }
    Ok(Prepared {
        ids: cx.generators.iter().map(|g| g.id.clone()).collect(),
        degs: cx.generators.iter().map(|g| g.deg).collect(),
        filts: cx.generators.iter().map(|g| g.filt.clone()).collect(),
        cols,
    })
}

fn to_field_col<F: FieldOps>(f: &F, col: &[(usize, BigInt)]) -> Column<F::E> {
    col.iter()
        .filter_map(|(r, v)| {
            let x = f.from_int(v);
            (!f.is_zero(&x)).then_some((*r, x))
        })
        .collect()
}

fn validate<F: FieldOps>(f: &F, p: &Prepared) -> Result<Vec<Column<F::E>>> {
    let cols: Vec<Column<F::E>> = p.cols.iter().map(|c| to_field_col(f, c)).collect();
    for (j, col) in cols.iter().enumerate() {
        for r in col.keys() {
            if p.degs[*r] != p.degs[j] - 1 {
                return Err(Error::MalformedComplex(format!(
                    "boundary of '{}' (degree {}) contains '{}' of degree {}",
                    p.ids[j], p.degs[j], p.ids[*r], p.degs[*r]
                )));
            }
            if p.filts[j].lt(&p.filts[*r])? {
                return Err(Error::FiltrationViolation(format!(
                    "boundary of '{}' (filtration {}) contains '{}' (filtration {})",
                    p.ids[j], p.filts[j], p.ids[*r], p.filts[*r]
                )));
            }
        }
    }
    for (j, col) in cols.iter().enumerate() {
        let mut dd: Column<F::E> = BTreeMap::new();
        for (r, v) in col {
            axpy(f, &mut dd, v, &cols[*r]);
        }
        if !dd.is_empty() {
            return Err(Error::BoundaryNotSquareZero {
                generator: p.ids[j].clone(),
            });
        }
    }
    Ok(cols)
}

fn reduce<F: FieldOps>(f: &F, p: &Prepared) -> Result<Vec<Bar>> {
    let cols = validate(f, p)?;
    let n = p.ids.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut err = None;
    order.sort_by(|x, y| match p.filts[*x].cmp_exact(&p.filts[*y]) {
        Ok(o) => o.then(p.degs[*x].cmp(&p.degs[*y])).then(x.cmp(y)),
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut pos = vec![0usize; n];
    for (i, g) in order.iter().enumerate() {
        pos[*g] = i;
    }
    // Columns re-indexed by position in the filtration order.
    let mut work: Vec<Column<F::E>> = order
        .iter()
        .map(|g| cols[*g].iter().map(|(r, v)| (pos[*r], v.clone())).collect())
        .collect();
    let mut pivot_of_low: BTreeMap<usize, usize> = BTreeMap::new();
    let mut is_low = vec![false; n];
    for j in 0..n {
        loop {
            let Some((&low, lv)) = work[j].iter().next_back() else {
                break;
            };
            match pivot_of_low.get(&low) {
                Some(&i) => {
                    let piv = work[i].get(&low).expect("pivot entry").clone();
                    let c = f.neg(&f.mul(lv, &f.inv(&piv)));
                    let other = work[i].clone();
                    axpy(f, &mut work[j], &c, &other);
                }
                None => {
                    pivot_of_low.insert(low, j);
                    is_low[low] = true;
                    break;
                }
            }
        }
    }
    let mut bars = Vec::new();
    for j in 0..n {
        let gj = order[j];
        if let Some((&low, _)) = work[j].iter().next_back() {
            let gl = order[low];
            if p.filts[gl].lt(&p.filts[gj])? {
                bars.push(Bar::finite(
                    p.filts[gl].clone(),
                    p.filts[gj].clone(),
                    p.degs[gl],
                ));
            }
        } else if !is_low[j] {
            bars.push(Bar::infinite(p.filts[gj].clone(), p.degs[gj]));
        }
    }
    Ok(bars)
}

/// Persistence barcode of a filtered complex by column reduction.
pub fn barcode_from_filtered_complex(cx: &FilteredComplex) -> Result<Barcode> {
    let p = prepare(cx)?;
    let bars = if cx.field == 0 {
        reduce(&Q, &p)?
    } else {
        reduce(&Fp(cx.field), &p)?
    };
    Barcode::new(cx.field, bars)
}

/// Number of bars covering `t`, optionally restricted to degree `m`.
pub fn dim_at(bc: &Barcode, t: &ExactReal, m: Option<i64>) -> Result<usize> {
    let mut n = 0;
    for bar in &bc.bars {
        if m.is_some_and(|m| m != bar.deg) {
            continue;
        }
        if bar.covers(t)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Dimensions per degree at `t`.
pub fn dims_at(bc: &Barcode, t: &ExactReal) -> Result<BTreeMap<i64, usize>> {
    let mut out = BTreeMap::new();
    for bar in &bc.bars {
        if bar.covers(t)? {
            *out.entry(bar.deg).or_insert(0) += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zeta {
    /// Bars of degree `m-1` ending at the level.
    pub minus: usize,
    /// Bars of degree `m` beginning at the level.
    pub plus: usize,
    pub total: usize,
}

pub fn zeta_counts(bc: &Barcode, a: &ExactReal) -> Result<BTreeMap<i64, Zeta>> {
    let mut out: BTreeMap<i64, Zeta> = BTreeMap::new();
    for bar in &bc.bars {
        if bar.a.cmp_exact(a)? == Ordering::Equal {
            let z = out.entry(bar.deg).or_default();
            z.plus += 1;
            z.total += 1;
        }
        if let Some(b) = &bar.b {
            if b.cmp_exact(a)? == Ordering::Equal {
                let z = out.entry(bar.deg + 1).or_default();
                z.minus += 1;
                z.total += 1;
            }
        }
    }
    Ok(out)
}

/// Local homology of one orbit (or of the distinguished element at level 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitHomology {
    pub label: String,
    pub action: ExactReal,
    /// Dimension of local homology per degree.
    pub sh: BTreeMap<i64, usize>,
    pub mu_minus: i64,
    pub mu_plus: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BegEnd {
    /// Orbit index (into the orbit list) of the beginning of each bar, in bar order.
    pub beg: Vec<usize>,
    /// Orbit index of the end of each bar; `None` for infinite bars.
    pub en: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BegEndReport {
    pub holds: bool,
    pub violations: Vec<String>,
    /// Bars where the index gap `mu-(en) - mu+(beg)` reaches its maximum 2.
    pub extremal_bars: Vec<usize>,
}

fn group_actions(orbits: &[OrbitHomology], bc: &Barcode) -> Result<Vec<ExactReal>> {
    let mut v: Vec<ExactReal> = orbits.iter().map(|o| o.action.clone()).collect();
    v.extend(bc.spectrum()?);
    sort_exact(&mut v)?;
    v.dedup();
    Ok(v)
}

/// Checks that bar counts at every level match the local homology of the orbits there.
pub fn check_bars_vs_orbits(bc: &Barcode, orbits: &[OrbitHomology]) -> Result<()> {
    for a in group_actions(orbits, bc)? {
        let zeta = zeta_counts(bc, &a)?;
        let mut local: BTreeMap<i64, usize> = BTreeMap::new();
        for o in orbits {
            if o.action.cmp_exact(&a)? == Ordering::Equal {
                for (m, d) in &o.sh {
                    *local.entry(*m).or_insert(0) += d;
                }
            }
        }
        let degrees: Vec<i64> = zeta.keys().chain(local.keys()).copied().collect();
        for m in degrees {
            let bars = zeta.get(&m).map_or(0, |z| z.total);
            let loc = local.get(&m).copied().unwrap_or(0);
            if bars != loc {
                return Err(Error::ZetaMismatch {
                    action: a.to_string(),
                    degree: m,
                    bars,
                    orbits: loc,
                });
            }
        }
    }
    Ok(())
}

/// Assigns to every bar an orbit where it begins and one where it ends by
/// consuming, level by level and degree by degree, a basis adapted to the
/// decomposition of local homology into orbits.
pub fn beg_end_assignment(bc: &Barcode, orbits: &[OrbitHomology]) -> Result<BegEnd> {
    check_bars_vs_orbits(bc, orbits)?;
    let levels = group_actions(orbits, bc)?;
    let level_of = |x: &ExactReal| -> Result<usize> {
        for (i, l) in levels.iter().enumerate() {
            if l.cmp_exact(x)? == Ordering::Equal {
                return Ok(i);
            }
        }
        unreachable!("level collected above")
    };
    // slots[(level, degree)] = orbit indices, one per basis vector.
    let mut slots: BTreeMap<(usize, i64), Vec<usize>> = BTreeMap::new();
    for (i, o) in orbits.iter().enumerate() {
        let l = level_of(&o.action)?;
        for (m, d) in &o.sh {
            slots
                .entry((l, *m))
                .or_default()
                .extend(std::iter::repeat_n(i, *d));
        }
    }
    let mut cursor: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    let mut take = |l: usize, m: i64| -> Result<usize> {
        let c = cursor.entry((l, m)).or_insert(0);
        let s = slots
            .get(&(l, m))
            .and_then(|v| v.get(*c))
            .copied()
            .ok_or_else(|| Error::ZetaMismatch {
                action: levels[l].to_string(),
                degree: m,
                bars: *c + 1,
                orbits: *c,
            })?;
        *c += 1;
        Ok(s)
    };
    let mut beg = Vec::with_capacity(bc.len());
    let mut en = Vec::with_capacity(bc.len());
    for bar in &bc.bars {
        beg.push(take(level_of(&bar.a)?, bar.deg)?);
        en.push(match &bar.b {
            Some(b) => Some(take(level_of(b)?, bar.deg + 1)?),
            None => None,
        });
    }
    Ok(BegEnd { beg, en })
}

/// Checks the defining properties of beginning/end maps and the index inequalities they imply.
pub fn check_beg_end(bc: &Barcode, orbits: &[OrbitHomology], be: &BegEnd) -> Result<BegEndReport> {
    let mut violations = Vec::new();
    let mut extremal_bars = Vec::new();
    if be.beg.len() != bc.len() || be.en.len() != bc.len() {
        violations.push("map lengths differ from bar count".to_string());
    }
    let mut used: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    for (i, bar) in bc
        .bars
        .iter()
        .enumerate()
        .take(be.beg.len().min(be.en.len()))
    {
        let x = &orbits[be.beg[i]];
        if x.action.cmp_exact(&bar.a)? != Ordering::Equal {
            violations.push(format!(
                "bar {i}: beginning orbit {} has action {} != {}",
                x.label, x.action, bar.a
            ));
        }
        if x.sh.get(&bar.deg).copied().unwrap_or(0) == 0 {
            violations.push(format!(
                "bar {i}: degree {} not in the support of {}",
                bar.deg, x.label
            ));
        }
        *used.entry((be.beg[i], bar.deg)).or_insert(0) += 1;
        match (&bar.b, be.en[i]) {
            (Some(b), Some(yi)) => {
                let y = &orbits[yi];
                if y.action.cmp_exact(b)? != Ordering::Equal {
                    violations.push(format!(
                        "bar {i}: end orbit {} has action {} != {}",
                        y.label, y.action, b
                    ));
                }
                if y.sh.get(&(bar.deg + 1)).copied().unwrap_or(0) == 0 {
                    violations.push(format!(
                        "bar {i}: degree {} not in the support of {}",
                        bar.deg + 1,
                        y.label
                    ));
                }
                *used.entry((yi, bar.deg + 1)).or_insert(0) += 1;
                let gap = y.mu_minus - x.mu_plus;
                if gap > 2 {
                    violations.push(format!(
                        "bar {i}: mu-({}) - mu+({}) = {gap} > 2",
                        y.label, x.label
                    ));
                }
                if gap == 2 {
                    extremal_bars.push(i);
                    if bar.deg != x.mu_plus + 1 || y.mu_minus != bar.deg + 1 {
                        violations.push(format!(
                            "bar {i}: extremal index gap without deg = mu+(beg)+1 = mu-(en)-1"
                        ));
                    }
                }
            }
            (None, None) => {}
            _ => violations.push(format!("bar {i}: end assignment does not match finiteness")),
        }
    }
    for ((o, m), n) in used {
        let cap = orbits[o].sh.get(&m).copied().unwrap_or(0);
        if n > cap {
            violations.push(format!(
                "orbit {} used {n} times in degree {m}, local dimension {cap}",
                orbits[o].label
            ));
        }
    }
    Ok(BegEndReport {
        holds: violations.is_empty(),
        violations,
        extremal_bars,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Half of the ambient dimension plus one; with `chi` enables the Euler check.
    pub n: Option<i64>,
    pub chi: Option<i64>,
    /// Upper bound for the boundary depth.
    pub depth_bound: Option<ExactReal>,
    pub primes: Vec<u64>,
    /// Cluster of every level; with `cluster_margin` enables the inter-cluster check.
    pub level_clusters: Vec<(ExactReal, usize)>,
    pub cluster_margin: Option<ExactReal>,
    /// Explicit sample points; by default every spectrum point and every midpoint.
    pub samples: Option<Vec<ExactReal>>,
    /// Levels above the horizon are not sampled; defaults to the largest finite endpoint.
    pub horizon: Option<ExactReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarcodeAudit {
    pub passed: bool,
    pub samples: usize,
    pub boundary_depth: Option<ExactReal>,
    pub checks: Vec<Check>,
}

/// Default sample levels: every spectrum point up to the horizon, every
/// midpoint between consecutive points and the midpoint below the first.
pub fn default_samples(bc: &Barcode, horizon: &ExactReal) -> Result<Vec<ExactReal>> {
    let spectrum = bc.spectrum()?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut out = Vec::new();
    let mut prev = ExactReal::zero();
    for s in spectrum {
        if horizon.lt(&s)? {
            break;
        }
        if s.is_positive()? {
            out.push((&prev + &s).mul_rational(&half));
            out.push(s.clone());
        }
        prev = s;
    }
    Ok(out)
}

fn horizon_of(bc: &Barcode) -> Result<ExactReal> {
    let mut h = ExactReal::zero();
    for bar in &bc.bars {
        h = h.max(bar.b.as_ref().unwrap_or(&bar.a))?;
    }
    Ok(h)
}

/// Euler profile, boundary depth, Smith inequality and inter-cluster checks.
pub fn barcode_audit(bc: &Barcode, opts: &AuditOptions) -> Result<BarcodeAudit> {
    let horizon = match &opts.horizon {
        Some(h) => h.clone(),
        None => horizon_of(bc)?,
    };
    let samples = match &opts.samples {
        Some(s) => s.clone(),
        None => default_samples(bc, &horizon)?,
    };
    let mut checks = Vec::new();
    if let (Some(n), Some(chi)) = (opts.n, opts.chi) {
        let expected = if n % 2 == 0 { chi } else { -chi };
        let mut bad = None;
        for t in &samples {
            let e: i64 = dims_at(bc, t)?
                .iter()
                .map(|(m, d)| {
                    if m.rem_euclid(2) == 0 {
                        *d as i64
                    } else {
                        -(*d as i64)
                    }
                })
                .sum();
            if e != expected {
                bad = Some(format!("euler {e} at t={t}"));
                break;
            }
        }
        checks.push(Check {
            name: "euler".into(),
            holds: bad.is_none(),
            detail: bad
                .unwrap_or_else(|| format!("constant {expected} on {} samples", samples.len())),
        });
    }
    let mut depth: Option<ExactReal> = None;
    for bar in &bc.bars {
        if let Some(l) = bar.length() {
            depth = Some(match depth {
                Some(d) => d.max(&l)?,
                None => l,
            });
        }
    }
    if let Some(bound) = &opts.depth_bound {
        let holds = match &depth {
            Some(d) => d.le(bound)?,
            None => true,
        };
        checks.push(Check {
            name: "boundary-depth".into(),
            holds,
            detail: format!(
                "max finite bar length {} vs bound {bound}",
                depth.as_ref().map_or("none".to_string(), |d| d.to_string())
            ),
        });
    }
    for p in &opts.primes {
        let mut bad = None;
        let mut tested = 0;
        for t in &samples {
            let pt = t.mul_int(*p as i64);
            if horizon.lt(&pt)? {
                continue;
            }
            tested += 1;
            let lo = dim_at(bc, t, None)?;
            let hi = dim_at(bc, &pt, None)?;
            if hi < lo {
                bad = Some(format!("dim at {pt} is {hi} < dim at {t} = {lo}"));
                break;
            }
        }
        checks.push(Check {
            name: format!("smith-{p}"),
            holds: bad.is_none(),
            detail: bad.unwrap_or_else(|| format!("{tested} samples")),
        });
    }
    if let Some(margin) = &opts.cluster_margin {
        let cluster_of = |x: &ExactReal| -> Result<Option<usize>> {
            for (l, c) in &opts.level_clusters {
                if l.cmp_exact(x)? == Ordering::Equal {
                    return Ok(Some(*c));
                }
            }
            Ok(None)
        };
        let threshold = match &opts.depth_bound {
            Some(c) => c + margin,
            None => margin.clone(),
        };
        let mut bad = None;
        for bar in &bc.bars {
            let Some(b) = &bar.b else { continue };
            if !threshold.lt(&bar.a)? {
                continue;
            }
            if let (Some(x), Some(y)) = (cluster_of(&bar.a)?, cluster_of(b)?) {
                if x != y {
                    bad = Some(format!("bar ({}, {b}] joins clusters {x} and {y}", bar.a));
                    break;
                }
            }
        }
        checks.push(Check {
            name: "inter-cluster".into(),
            holds: bad.is_none(),
            detail: bad
                .unwrap_or_else(|| format!("no bar born above {threshold} joins two clusters")),
        });
    }
    Ok(BarcodeAudit {
        passed: checks.iter().all(|c| c.holds),
        samples: samples.len(),
        boundary_depth: depth,
        checks,
    })
}

/// Rank of homology in every degree of the sublevel complex `{filt < t}`,
/// computed directly by Gaussian elimination (independent of the reduction above).
pub fn sublevel_homology_ranks(
    cx: &FilteredComplex,
    t: &ExactReal,
) -> Result<BTreeMap<i64, usize>> {
    let p = prepare(cx)?;
    if cx.field == 0 {
        sublevel_ranks(&Q, &p, t)
    } else {
        sublevel_ranks(&Fp(cx.field), &p, t)
    }
}

fn rank<F: FieldOps>(f: &F, mut rows: Vec<Vec<F::E>>, ncols: usize) -> usize {
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|i| !f.is_zero(&rows[*i][c])) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = f.inv(&rows[r][c]);
        for i in 0..rows.len() {
            if i != r && !f.is_zero(&rows[i][c]) {
                let factor = f.neg(&f.mul(&rows[i][c], &inv));
                for k in c..ncols {
                    let add = f.mul(&factor, &rows[r][k]);
                    rows[i][k] = f.add(&rows[i][k], &add);
                }
            }
        }
        r += 1;
    }
    r
}

fn sublevel_ranks<F: FieldOps>(f: &F, p: &Prepared, t: &ExactReal) -> Result<BTreeMap<i64, usize>> {
    let cols = validate(f, p)?;
    let mut alive = Vec::new();
    for (i, fl) in p.filts.iter().enumerate() {
        if fl.lt(t)? {
            alive.push(i);
        }
    }
    let mut by_deg: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in &alive {
        by_deg.entry(p.degs[*i]).or_default().push(*i);
    }
    // rank of the boundary from degree m to m-1
    let zero = f.from_int(&BigInt::zero());
    let mut bd_rank: BTreeMap<i64, usize> = BTreeMap::new();
    for (m, gens) in &by_deg {
        let Some(targets) = by_deg.get(&(m - 1)) else {
            bd_rank.insert(*m, 0);
            continue;
        };
        let rows: Vec<Vec<F::E>> = gens
            .iter()
            .map(|g| {
                targets
                    .iter()
                    .map(|r| cols[*g].get(r).cloned().unwrap_or_else(|| zero.clone()))
                    .collect()
            })
            .collect();
        bd_rank.insert(*m, rank(f, rows, targets.len()));
    }
    let mut out = BTreeMap::new();
    for (m, gens) in &by_deg {
        let ker = gens.len() - bd_rank[m];
        let im = bd_rank.get(&(m + 1)).copied().unwrap_or(0);
        let h = ker - im;
        if h > 0 {
            out.insert(*m, h);
        }
    }
    Ok(out)
}
