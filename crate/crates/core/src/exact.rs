//! Exact real scalars.
//!
//! An [`ExactReal`] is either a finite rational combination of square roots of
//! square-free integers (which covers rationals and quadratic irrationals and is
//! closed under the field operations) or a guarded decimal: an arbitrary
//! precision center with an explicit guard radius.  Every comparison, floor and
//! nearest-integer query on the exact kind is decided exactly; on the guarded
//! kind it either succeeds unambiguously or returns [`Error::Precision`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Relative error allowed per term of the cached floating-point approximation.
const APPROX_REL: f64 = 4e-15;
const MAX_BITS: u64 = 1 << 16;

#[derive(Clone, Debug)]
pub struct ExactReal {
    repr: Repr,
    approx: f64,
    err: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    /// Coefficient of `sqrt(d)` keyed by square-free `d`; `d = 1` is the rational part.
    /// Zero coefficients are never stored.
    Surd(BTreeMap<u64, BigRational>),
    Guarded {
        center: BigRational,
        radius: BigRational,
    },
}

impl PartialEq for ExactReal {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
    }
}

impl Eq for ExactReal {}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn floor_rat(q: &BigRational) -> BigInt {
    q.floor().to_integer()
}

/// Splits `n` as `s^2 * d` with `d` square-free.
pub fn square_free_split(n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut d = 1u64;
    let mut m = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            s *= p;
        }
        if e % 2 == 1 {
            d *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    d *= m;
    (s, d)
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    n
}

/// `floor(k*x)` from an approximation `approx` of `x` with absolute error at most
/// `err`, or `None` when the enclosure straddles an integer.
#[inline]
pub(crate) fn certified_scaled_floor(approx: f64, err: f64, k: i64) -> Option<i64> {
    let kf = k as f64;
    let v = approx * kf;
    let e = err * kf.abs() + v.abs() * 4.0 * f64::EPSILON;
    let a = (v - e).floor();
    (a == (v + e).floor() && a.abs() < 9.0e15).then_some(a as i64)
}

impl ExactReal {
    /// `(approximation, error bound)` for exact values with a finite approximation.
    pub(crate) fn certified_approx(&self) -> Option<(f64, f64)> {
        (self.fast_ok() && !self.is_guarded()).then_some((self.approx, self.err))
    }

    fn from_terms(mut terms: BTreeMap<u64, BigRational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        let mut approx = 0.0;
        let mut mag = 0.0;
        for (d, c) in &terms {
            let t = rat_f64(c) * (*d as f64).sqrt();
            approx += t;
            mag += t.abs();
        }
        let err = mag * APPROX_REL + f64::MIN_POSITIVE;
        ExactReal {
            repr: Repr::Surd(terms),
            approx,
            err,
        }
    }

    fn from_interval(center: BigRational, radius: BigRational) -> Self {
        let c = rat_f64(&center);
        let r = rat_f64(&radius);
        ExactReal {
            repr: Repr::Guarded { center, radius },
            approx: c,
            err: r * (1.0 + 1e-12) + c.abs() * APPROX_REL + f64::MIN_POSITIVE,
        }
    }

    pub fn zero() -> Self {
        Self::from_terms(BTreeMap::new())
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn big_integer(n: BigInt) -> Self {
        Self::rational(BigRational::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::rational(rat(n, d))
    }

    pub fn rational(q: BigRational) -> Self {
        let mut t = BTreeMap::new();
        t.insert(1, q);
        Self::from_terms(t)
    }

    /// `sqrt(n)` for a non-negative integer `n`, reduced to square-free form.
    pub fn sqrt(n: u64) -> Self {
        let (s, d) = square_free_split(n);
        let mut t = BTreeMap::new();
        if n != 0 {
            t.insert(d, BigRational::from_integer(BigInt::from(s)));
        }
        Self::from_terms(t)
    }

    /// `a + b*sqrt(d)`.
    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Self {
        Self::rational(a) + Self::rational(b) * Self::sqrt(d)
    }

    /// A guarded decimal with center `center` and guard radius `radius > 0`.
    pub fn guarded(center: BigRational, radius: BigRational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::InvalidParams("guard radius must be positive".into()));
        }
        Ok(Self::from_interval(center, radius))
    }

    pub fn is_guarded(&self) -> bool {
        matches!(self.repr, Repr::Guarded { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.repr, Repr::Surd(t) if t.is_empty())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match &self.repr {
            Repr::Surd(t) if t.is_empty() => Some(BigRational::zero()),
            Repr::Surd(t) if t.len() == 1 => t.get(&1).cloned(),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    /// Returns `(a, b, d)` when the value is `a + b*sqrt(d)` with a single radical.
    pub fn as_quadratic(&self) -> Option<(BigRational, BigRational, u64)> {
        let Repr::Surd(t) = &self.repr else {
            return None;
        };
        let radicals: Vec<_> = t.iter().filter(|(d, _)| **d != 1).collect();
        if radicals.len() != 1 {
            return None;
        }
        let a = t.get(&1).cloned().unwrap_or_else(BigRational::zero);
        Some((a, radicals[0].1.clone(), *radicals[0].0))
    }

    /// Terms `(d, coefficient)` of an exact value; `None` for guarded decimals.
    pub fn surd_terms(&self) -> Option<Vec<(u64, BigRational)>> {
        match &self.repr {
            Repr::Surd(t) => Some(t.iter().map(|(d, c)| (*d, c.clone())).collect()),
            Repr::Guarded { .. } => None,
        }
    }

    pub fn guard(&self) -> Option<(BigRational, BigRational)> {
        match &self.repr {
            Repr::Guarded { center, radius } => Some((center.clone(), radius.clone())),
            Repr::Surd(_) => None,
        }
    }

    /// Floating-point approximation (display and heuristics only).
    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    /// Absolute error bound of [`Self::to_f64`].
    pub fn approx_error(&self) -> f64 {
        self.err
    }

    fn fast_ok(&self) -> bool {
        self.approx.is_finite() && self.err.is_finite()
    }

    /// Rational enclosure `[lo, hi]` of the value using `bits` of precision per radical.
    pub fn enclosure(&self, bits: u64) -> (BigRational, BigRational) {
        match &self.repr {
            Repr::Guarded { center, radius } => (center - radius, center + radius),
            Repr::Surd(t) => {
                let mut lo = BigRational::zero();
                let mut hi = BigRational::zero();
                let scale = BigInt::one() << bits;
                for (d, c) in t {
                    if *d == 1 {
                        lo += c;
                        hi += c;
                        continue;
                    }
                    let s = (BigUint::from(*d) << (2 * bits)).sqrt();
                    let s = BigInt::from_biguint(Sign::Plus, s);
                    let l = BigRational::new(s.clone(), scale.clone());
                    let h = BigRational::new(s + 1, scale.clone());
                    if c.is_positive() {
                        lo += c * l;
                        hi += c * h;
                    } else {
                        lo += c * h;
                        hi += c * l;
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Refines enclosures until `pred(lo, hi)` yields a decision.
    fn refine<T>(
        &self,
        what: &str,
        mut pred: impl FnMut(&BigRational, &BigRational) -> Option<T>,
    ) -> Result<T> {
        let mut bits = 64;
        loop {
            let (lo, hi) = self.enclosure(bits);
            if let Some(v) = pred(&lo, &hi) {
                return Ok(v);
            }
            if self.is_guarded() {
                return Err(Error::Precision(format!(
                    "{what} of {self} is within its guard"
                )));
            }
            bits *= 2;
            if bits > MAX_BITS {
                return Err(Error::Precision(format!("{what} of {self} not resolved")));
            }
        }
    }

    /// Sign as -1, 0 or 1.
    pub fn signum(&self) -> Result<i32> {
        if let Some(q) = self.as_rational() {
            return Ok(if q.is_positive() {
                1
            } else if q.is_negative() {
                -1
            } else {
                0
            });
        }
        if self.fast_ok() && self.approx.abs() > self.err {
            return Ok(if self.approx > 0.0 { 1 } else { -1 });
        }
        self.refine("sign", |lo, hi| {
            if lo.is_positive() {
                Some(1)
            } else if hi.is_negative() {
                Some(-1)
            } else {
                None
            }
        })
    }

    pub fn is_positive(&self) -> Result<bool> {
        Ok(self.signum()? > 0)
    }

    pub fn is_negative(&self) -> Result<bool> {
        Ok(self.signum()? < 0)
    }

    pub fn cmp_exact(&self, other: &Self) -> Result<Ordering> {
        if self.fast_ok() && other.fast_ok() {
            let gap = self.approx - other.approx;
            if gap.abs() > (self.err + other.err) * 1.0000001 {
                return Ok(if gap > 0.0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                });
            }
        }
        if !self.is_guarded() && !other.is_guarded() && self == other {
            return Ok(Ordering::Equal);
        }
        Ok(match (self - other).signum()? {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        })
    }

    pub fn lt(&self, other: &Self) -> Result<bool> {
        Ok(self.cmp_exact(other)? == Ordering::Less)
    }

    pub fn le(&self, other: &Self) -> Result<bool> {
        Ok(self.cmp_exact(other)? != Ordering::Greater)
    }

    pub fn abs(&self) -> Result<Self> {
        Ok(if self.signum()? < 0 {
            -self
        } else {
            self.clone()
        })
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        Ok(if self.lt(other)? {
            other.clone()
        } else {
            self.clone()
        })
    }

    pub fn min(&self, other: &Self) -> Result<Self> {
        Ok(if other.lt(self)? {
            other.clone()
        } else {
            self.clone()
        })
    }

    /// Exact integrality test. Guarded values whose interval meets an integer fail.
    pub fn is_integer(&self) -> Result<bool> {
        match &self.repr {
            Repr::Surd(_) => Ok(self.as_rational().is_some_and(|q| q.is_integer())),
            Repr::Guarded { center, radius } => {
                let lo = center - radius;
                let hi = center + radius;
                if floor_rat(&hi) >= lo.ceil().to_integer() {
                    Err(Error::Precision(format!(
                        "{self} is within its guard of an integer"
                    )))
                } else {
                    Ok(false)
                }
            }
        }
    }

    pub fn floor(&self) -> Result<BigInt> {
        if let Some(q) = self.as_rational() {
            return Ok(floor_rat(&q));
        }
        if let Repr::Guarded { .. } = self.repr {
            self.is_integer()?;
            let (lo, _) = self.enclosure(0);
            return Ok(floor_rat(&lo));
        }
        if self.fast_ok() {
            let a = (self.approx - self.err).floor();
            let b = (self.approx + self.err).floor();
            if a == b && a.abs() < 9.0e15 {
                return Ok(BigInt::from(a as i64));
            }
        }
        self.refine("floor", |lo, hi| {
            let a = floor_rat(lo);
            (a == floor_rat(hi)).then_some(a)
        })
    }

    pub fn floor_i64(&self) -> Result<i64> {
        self.floor()?
            .to_i64()
            .ok_or_else(|| Error::Overflow(format!("floor of {self}")))
    }

    pub fn ceil(&self) -> Result<BigInt> {
        Ok(-(-self).floor()?)
    }

    /// Nearest integer; an exact half-integer has none.
    pub fn nearest(&self) -> Result<BigInt> {
        let half = Self::ratio(1, 2);
        if let Repr::Guarded { .. } = self.repr {
            let shifted = self + &half;
            if shifted.is_integer().is_err() {
                return Err(Error::Precision(format!(
                    "{self} is within its guard of a half-integer"
                )));
            }
            return shifted.floor();
        }
        let shifted = self + &half;
        if shifted.is_integer()? {
            return Err(Error::HalfIntegerAmbiguity(self.to_string()));
        }
        shifted.floor()
    }

    pub fn nearest_i64(&self) -> Result<i64> {
        self.nearest()?
            .to_i64()
            .ok_or_else(|| Error::Overflow(format!("nearest integer of {self}")))
    }

    /// `x - floor(x)`, in `[0, 1)`.
    pub fn frac(&self) -> Result<Self> {
        Ok(self - &Self::big_integer(self.floor()?))
    }

    /// Distance to the nearest integer.
    pub fn dist_to_int(&self) -> Result<Self> {
        let f = self.frac()?;
        let g = Self::one() - &f;
        f.min(&g)
    }

    /// Decides `dist(k*self, Z) < eps` without allocating in the common case.
    pub fn scaled_dist_lt(&self, k: u64, eps: &Self) -> Result<bool> {
        if self.fast_ok() && eps.fast_ok() && !self.is_guarded() && eps.approx < 0.5 {
            let kf = k as f64;
            let v = self.approx * kf;
            let e = self.err * kf + v.abs() * 4.0 * f64::EPSILON;
            if e < 1e-3 {
                let d = (v - v.round()).abs();
                if d + e < eps.approx - eps.err {
                    return Ok(true);
                }
                if d - e > eps.approx + eps.err {
                    return Ok(false);
                }
            }
        }
        self.mul_int(k as i64).dist_to_int()?.lt(eps)
    }

    /// `floor(k*self)` with a floating-point fast path.
    pub fn scaled_floor(&self, k: i64) -> Result<i64> {
        if self.fast_ok() && !self.is_guarded() {
            if let Some(a) = certified_scaled_floor(self.approx, self.err, k) {
                return Ok(a);
            }
        }
        self.mul_int(k).floor_i64()
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self.mul_big(&BigInt::from(k))
    }

    pub fn mul_big(&self, k: &BigInt) -> Self {
        match &self.repr {
            Repr::Surd(t) => {
                let q = BigRational::from_integer(k.clone());
                Self::from_terms(t.iter().map(|(d, c)| (*d, c * &q)).collect())
            }
            Repr::Guarded { center, radius } => {
                let q = BigRational::from_integer(k.clone());
                Self::from_interval(center * &q, radius * q.abs())
            }
        }
    }

    pub fn mul_rational(&self, q: &BigRational) -> Self {
        match &self.repr {
            Repr::Surd(t) => Self::from_terms(t.iter().map(|(d, c)| (*d, c * q)).collect()),
            Repr::Guarded { center, radius } => Self::from_interval(center * q, radius * q.abs()),
        }
    }

    fn interval_parts(&self) -> (BigRational, BigRational) {
        match &self.repr {
            Repr::Guarded { center, radius } => (center.clone(), radius.clone()),
            Repr::Surd(_) => match self.as_rational() {
                Some(q) => (q, BigRational::zero()),
                None => {
                    let (lo, hi) = self.enclosure(192);
                    let two = rat(2, 1);
                    ((&lo + &hi) / &two, (&hi - &lo) / two)
                }
            },
        }
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<Self> {
        match &self.repr {
            Repr::Guarded { .. } => {
                let (c, r) = self.interval_parts();
                if c.abs() <= r {
                    return Err(Error::Precision(format!(
                        "inverse of {self}: interval contains zero"
                    )));
                }
                let ac = c.abs();
                let nr = &r / (&ac * (&ac - &r));
                Ok(Self::from_interval(c.recip(), nr))
            }
            Repr::Surd(t) => {
                if t.is_empty() {
                    return Err(Error::DivisionByZero);
                }
                // Multiply by conjugates one prime at a time until the product is rational.
                let mut num = Self::one();
                let mut den = self.clone();
                loop {
                    if let Some(q) = den.as_rational() {
                        return Ok(num.mul_rational(&q.recip()));
                    }
                    let Repr::Surd(dt) = &den.repr else {
                        unreachable!()
                    };
                    let d = *dt.keys().find(|d| **d != 1).expect("irrational");
                    let p = smallest_prime_factor(d);
                    let conj: BTreeMap<u64, BigRational> = dt
                        .iter()
                        .map(|(d, c)| (*d, if d % p == 0 { -c.clone() } else { c.clone() }))
                        .collect();
                    let conj = Self::from_terms(conj);
                    num = &num * &conj;
                    den = &den * &conj;
                }
            }
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    /// Parses `p/q`, decimals, `sqrt<D>`, `sqrt(<D>)` and sums such as `a+b*sqrt5`.
    /// `value~guard` builds a guarded decimal.
    pub fn parse(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        if let Some((v, g)) = s.split_once('~') {
            let c = parse_rational_literal(v)?;
            let r = parse_rational_literal(g)?;
            return Self::guarded(c, r);
        }
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        let chars: Vec<char> = s.chars().collect();
        for (i, ch) in chars.iter().enumerate() {
            let after_exp = i > 0 && matches!(chars[i - 1], 'e' | 'E') && !cur.ends_with("sqrt");
            if (*ch == '+' || *ch == '-') && !after_exp {
                if !cur.is_empty() {
                    terms.push((neg, std::mem::take(&mut cur)));
                } else if i > 0 {
                    return Err(Error::Parse(format!("malformed number '{s}'")));
                }
                neg = *ch == '-';
            } else {
                cur.push(*ch);
            }
        }
        if cur.is_empty() {
            return Err(Error::Parse(format!("malformed number '{s}'")));
        }
        terms.push((neg, cur));
        let mut acc = Self::zero();
        for (neg, t) in terms {
            let v = parse_term(&t)?;
            acc = if neg { acc - v } else { acc + v };
        }
        Ok(acc)
    }
}

fn parse_term(t: &str) -> Result<ExactReal> {
    let t = t.replace('√', "sqrt");
    let (coef, root) = match t.find("sqrt") {
        Some(i) => {
            let (c, r) = t.split_at(i);
            let c = c.strip_suffix('*').unwrap_or(c);
            (
                c.to_string(),
                Some(
                    r[4..]
                        .trim_start_matches('(')
                        .trim_end_matches(')')
                        .to_string(),
                ),
            )
        }
        None => (t.clone(), None),
    };
    let c = if coef.is_empty() {
        if root.is_none() {
            return Err(Error::Parse(format!("malformed term '{t}'")));
        }
        BigRational::one()
    } else {
        parse_rational_literal(&coef)?
    };
    match root {
        None => Ok(ExactReal::rational(c)),
        Some(r) => {
            let n: u64 = r
                .parse()
                .map_err(|_| Error::Parse(format!("bad radicand in '{t}'")))?;
            Ok(ExactReal::sqrt(n).mul_rational(&c))
        }
    }
}

/// Parses an integer, `p/q` or a decimal with optional exponent into an exact rational.
pub fn parse_rational_literal(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("malformed rational '{s}'"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_rational_literal(p)?;
        let q = parse_rational_literal(q)?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(p / q);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (body, 0),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let e = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if e >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, e as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-e) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

fn add_terms(
    a: &BTreeMap<u64, BigRational>,
    b: &BTreeMap<u64, BigRational>,
    sign: bool,
) -> ExactReal {
    let mut t = a.clone();
    for (d, c) in b {
        let e = t.entry(*d).or_insert_with(BigRational::zero);
        if sign {
            *e += c;
        } else {
            *e -= c;
        }
    }
    ExactReal::from_terms(t)
}

fn mul_terms(a: &BTreeMap<u64, BigRational>, b: &BTreeMap<u64, BigRational>) -> ExactReal {
    let mut t: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (d1, c1) in a {
        for (d2, c2) in b {
            let g = d1.gcd(d2);
            let d = (d1 / g)
                .checked_mul(d2 / g)
                .expect("radicand overflow in exact product");
            let e = t.entry(d).or_insert_with(BigRational::zero);
            *e += c1 * c2 * BigRational::from_integer(BigInt::from(g));
        }
    }
    ExactReal::from_terms(t)
}

impl<'a> std::ops::Add<&'a ExactReal> for &'a ExactReal {
    type Output = ExactReal;
    fn add(self, rhs: &ExactReal) -> ExactReal {
        match (&self.repr, &rhs.repr) {
            (Repr::Surd(a), Repr::Surd(b)) => add_terms(a, b, true),
            _ => {
                let (c1, r1) = self.interval_parts();
                let (c2, r2) = rhs.interval_parts();
                ExactReal::from_interval(c1 + c2, r1 + r2)
            }
        }
    }
}

impl<'a> std::ops::Sub<&'a ExactReal> for &'a ExactReal {
    type Output = ExactReal;
    fn sub(self, rhs: &ExactReal) -> ExactReal {
        match (&self.repr, &rhs.repr) {
            (Repr::Surd(a), Repr::Surd(b)) => add_terms(a, b, false),
            _ => {
                let (c1, r1) = self.interval_parts();
                let (c2, r2) = rhs.interval_parts();
                ExactReal::from_interval(c1 - c2, r1 + r2)
            }
        }
    }
}

impl<'a> std::ops::Mul<&'a ExactReal> for &'a ExactReal {
    type Output = ExactReal;
    fn mul(self, rhs: &ExactReal) -> ExactReal {
        match (&self.repr, &rhs.repr) {
            (Repr::Surd(a), Repr::Surd(b)) => mul_terms(a, b),
            _ => {
                let (c1, r1) = self.interval_parts();
                let (c2, r2) = rhs.interval_parts();
                let r = c1.abs() * &r2 + c2.abs() * &r1 + &r1 * &r2;
                ExactReal::from_interval(c1 * c2, r)
            }
        }
    }
}

impl std::ops::Neg for &ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        match &self.repr {
            Repr::Surd(t) => {
                ExactReal::from_terms(t.iter().map(|(d, c)| (*d, -c.clone())).collect())
            }
            Repr::Guarded { center, radius } => {
                ExactReal::from_interval(-center.clone(), radius.clone())
            }
        }
    }
}

impl std::ops::Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        -&self
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr<ExactReal> for ExactReal {
            type Output = ExactReal;
            fn $m(self, rhs: ExactReal) -> ExactReal {
                (&self).$m(&rhs)
            }
        }
        impl<'a> std::ops::$tr<&'a ExactReal> for ExactReal {
            type Output = ExactReal;
            fn $m(self, rhs: &ExactReal) -> ExactReal {
                (&self).$m(rhs)
            }
        }
        impl<'a> std::ops::$tr<ExactReal> for &'a ExactReal {
            type Output = ExactReal;
            fn $m(self, rhs: ExactReal) -> ExactReal {
                self.$m(&rhs)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl std::iter::Sum for ExactReal {
    fn sum<I: Iterator<Item = ExactReal>>(iter: I) -> Self {
        iter.fold(ExactReal::zero(), |a, b| a + b)
    }
}

impl From<i64> for ExactReal {
    fn from(n: i64) -> Self {
        ExactReal::integer(n)
    }
}

impl From<BigRational> for ExactReal {
    fn from(q: BigRational) -> Self {
        ExactReal::rational(q)
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Guarded { center, radius } => write!(f, "{center}~{radius}"),
            Repr::Surd(t) => {
                if t.is_empty() {
                    return write!(f, "0");
                }
                let mut first = true;
                for (d, c) in t {
                    let neg = c.is_negative();
                    let a = c.abs();
                    if first {
                        if neg {
                            write!(f, "-")?;
                        }
                    } else {
                        write!(f, "{}", if neg { "-" } else { "+" })?;
                    }
                    first = false;
                    if *d == 1 {
                        write!(f, "{a}")?;
                    } else if a.is_one() {
                        write!(f, "sqrt{d}")?;
                    } else {
                        write!(f, "{a}*sqrt{d}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ExactReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExactReal::parse(s)
    }
}

impl ExactReal {
    /// JSON form: rationals as `"p/q"` strings, single radicals as
    /// `{"kind":"quad","a","b","d"}`, longer sums as `{"kind":"surd","terms":[...]}`
    /// and guarded decimals as `{"kind":"guarded","value","guard"}`.
    pub fn to_json(&self) -> Value {
        if let Some(q) = self.as_rational() {
            return Value::String(q.to_string());
        }
        if let Some((a, b, d)) = self.as_quadratic() {
            return json!({"kind": "quad", "a": a.to_string(), "b": b.to_string(), "d": d});
        }
        match &self.repr {
            Repr::Guarded { center, radius } => {
                json!({"kind": "guarded", "value": center.to_string(), "guard": radius.to_string()})
            }
            Repr::Surd(t) => {
                let terms: Vec<Value> = t
                    .iter()
                    .map(|(d, c)| json!({"d": d, "c": c.to_string()}))
                    .collect();
                json!({"kind": "surd", "terms": terms})
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |o: &serde_json::Map<String, Value>, k: &str| -> Result<BigRational> {
            match o.get(k) {
                Some(Value::String(s)) => parse_rational_literal(s),
                Some(Value::Number(n)) => parse_rational_literal(&n.to_string()),
                _ => Err(Error::Parse(format!("missing field '{k}'"))),
            }
        };
        match v {
            Value::String(s) => ExactReal::parse(s),
            Value::Number(n) => Ok(ExactReal::rational(parse_rational_literal(&n.to_string())?)),
            Value::Object(o) => match o.get("kind").and_then(Value::as_str) {
                Some("rat") => Ok(ExactReal::rational(field(o, "value")?)),
                Some("quad") => {
                    let d = o
                        .get("d")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| Error::Parse("quad needs integer 'd'".into()))?;
                    if d < 2 || square_free_split(d).0 != 1 {
                        return Err(Error::Parse(format!(
                            "quad radicand {d} is not square-free >= 2"
                        )));
                    }
                    let b = field(o, "b")?;
                    if b.is_zero() {
                        return Err(Error::Parse("quad coefficient b must be nonzero".into()));
                    }
                    Ok(ExactReal::quadratic(field(o, "a")?, b, d))
                }
                Some("surd") => {
                    let terms = o
                        .get("terms")
                        .and_then(Value::as_array)
                        .ok_or_else(|| Error::Parse("surd needs 'terms'".into()))?;
                    let mut acc = ExactReal::zero();
                    for t in terms {
                        let to = t
                            .as_object()
                            .ok_or_else(|| Error::Parse("bad surd term".into()))?;
                        let d = to
                            .get("d")
                            .and_then(Value::as_u64)
                            .ok_or_else(|| Error::Parse("surd term needs 'd'".into()))?;
                        acc = acc + ExactReal::sqrt(d).mul_rational(&field(to, "c")?);
                    }
                    Ok(acc)
                }
                Some("guarded") => ExactReal::guarded(field(o, "value")?, field(o, "guard")?),
                other => Err(Error::Parse(format!("unknown number kind {other:?}"))),
            },
            _ => Err(Error::Parse(format!("expected a number, got {v}"))),
        }
    }
}

impl Serialize for ExactReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ExactReal::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Sorts values ascending by exact comparison.
pub fn sort_exact(v: &mut [ExactReal]) -> Result<()> {
    let mut err = None;
    v.sort_by(|a, b| match a.cmp_exact(b) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
