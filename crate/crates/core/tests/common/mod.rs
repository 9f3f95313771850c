//! Brute-force oracles shared by the integration tests.  They recompute
//! everything from first principles with exact comparisons and never call the
//! index or persistence routines they are used to check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use reebcz::persistence::FilteredComplex;
use reebcz::{BlockPath, ElementaryBlock, ExactReal, ShearForm};

pub fn q(s: &str) -> ExactReal {
    ExactReal::parse(s).unwrap()
}

/// Largest integer `j` with `j <= x`, found by exponential and binary search
/// using only exact comparisons.
pub fn floor_by_search(x: &ExactReal) -> i64 {
    let le = |j: i64| ExactReal::integer(j).le(x).unwrap();
    let (mut lo, mut hi) = (0i64, 1i64);
    if le(0) {
        while le(hi) {
            lo = hi;
            hi *= 2;
        }
    } else {
        lo = -1;
        while !le(lo) {
            hi = lo;
            lo *= 2;
        }
    }
    // le(lo) holds and le(hi) fails
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if le(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Distance to the nearest integer, from the searched floor.
pub fn dist_to_int(x: &ExactReal) -> ExactReal {
    let f = floor_by_search(x);
    let below = x - &ExactReal::integer(f);
    let above = &ExactReal::integer(f + 1) - x;
    below.min(&above).unwrap()
}

/// Nearest integer to `x`; `None` on exact half-integers.
pub fn nearest_int(x: &ExactReal) -> Option<i64> {
    let f = floor_by_search(x);
    let frac = x - &ExactReal::integer(f);
    let half = ExactReal::ratio(1, 2);
    if frac == half {
        None
    } else if frac.lt(&half).unwrap() {
        Some(f)
    } else {
        Some(f + 1)
    }
}

/// Degeneracy data of one iterate, recomputed block by block from the
/// rotation-number formula `sign(x)(2 floor|x| + 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleIndices {
    pub mu_minus: i64,
    pub mu_plus: i64,
    pub nondegenerate: bool,
    pub nu0: usize,
    pub b0: usize,
    pub b_plus: usize,
    pub b_minus: usize,
}

pub fn oracle_indices(path: &BlockPath, k: u64) -> OracleIndices {
    let k = k as i64;
    let mut psi = 2 * path.loop_shift() * k;
    let mut degenerate_mean = 0i64;
    let (mut nu0, mut b0, mut b_plus, mut b_minus) = (0usize, 0usize, 0usize, 0usize);
    for b in path.blocks() {
        match b {
            ElementaryBlock::Rotation { lambda } => {
                let x = lambda.mul_int(k);
                let f = floor_by_search(&x);
                if ExactReal::integer(f) == x {
                    degenerate_mean += 2 * f;
                    nu0 += 1;
                } else {
                    let a = floor_by_search(&x.abs().unwrap());
                    let s = if x.is_positive().unwrap() { 1 } else { -1 };
                    psi += s * (2 * a + 1);
                }
            }
            ElementaryBlock::Hyperbolic { h, .. } => psi += h * k,
            ElementaryBlock::Shear(f) => match f {
                ShearForm::Zero { count } => nu0 += *count as usize,
                ShearForm::Q0 { .. } => b0 += 1,
                ShearForm::QPlus { .. } => b_plus += 1,
                ShearForm::QMinus { .. } => b_minus += 1,
            },
        }
    }
    let base = psi + degenerate_mean;
    OracleIndices {
        mu_minus: base - (nu0 + b0 + b_minus) as i64,
        mu_plus: base + (nu0 + b0 + b_plus) as i64,
        nondegenerate: nu0 + b0 + b_plus + b_minus == 0,
        nu0,
        b0,
        b_plus,
        b_minus,
    }
}

pub fn oracle_mu_pm(path: &BlockPath, k: u64) -> (i64, i64) {
    let o = oracle_indices(path, k);
    (o.mu_minus, o.mu_plus)
}

/// Mean index from the definition: twice the loop shift plus twice every
/// rotation number plus every hyperbolic index.
pub fn oracle_mean_index(path: &BlockPath) -> ExactReal {
    let mut acc = ExactReal::integer(2 * path.loop_shift());
    for b in path.blocks() {
        match b {
            ElementaryBlock::Rotation { lambda } => acc = &acc + &(lambda + lambda),
            ElementaryBlock::Hyperbolic { h, .. } => acc = &acc + &ExactReal::integer(*h),
            ElementaryBlock::Shear(_) => {}
        }
    }
    acc
}

/// All `k <= ceiling` divisible by `divisor` with every `dist(k*lambda, Z) < eps`.
pub fn oracle_torus_returns(
    lambdas: &[ExactReal],
    eps: &ExactReal,
    divisor: u64,
    ceiling: u64,
) -> Vec<u64> {
    (1..=ceiling)
        .filter(|k| k % divisor == 0)
        .filter(|k| {
            lambdas
                .iter()
                .all(|l| dist_to_int(&l.mul_int(*k as i64)).lt(eps).unwrap())
        })
        .collect()
}

/// Field arithmetic for the homology oracle: rationals for characteristic 0,
/// residues for a prime.
#[derive(Clone, Copy)]
enum Coeffs {
    Rational,
    Mod(i64),
}

fn reduce(c: Coeffs, x: BigRational) -> BigRational {
    match c {
        Coeffs::Rational => x,
        Coeffs::Mod(p) => {
            let n = x.numer().clone();
            let p = BigInt::from(p);
            let r = ((n % &p) + &p) % &p;
            BigRational::from_integer(r)
        }
    }
}

fn inverse(c: Coeffs, x: &BigRational) -> BigRational {
    match c {
        Coeffs::Rational => x.recip(),
        Coeffs::Mod(p) => {
            let a = x.numer().clone();
            let p = BigInt::from(p);
            // Fermat: a^(p-2) mod p
            BigRational::from_integer(a.modpow(&(&p - 2), &p))
        }
    }
}

fn matrix_rank(c: Coeffs, mut rows: Vec<Vec<BigRational>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    for r in rows.iter_mut() {
        for x in r.iter_mut() {
            *x = reduce(c, x.clone());
        }
    }
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|i| !rows[*i][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = inverse(c, &rows[rank][col]);
        let pivot: Vec<BigRational> = rows[rank].iter().map(|x| reduce(c, x * &inv)).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x = reduce(c, &*x - &f * y);
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

/// Betti numbers of the subcomplex spanned by generators with filtration
/// strictly below `t`, from ranks of boundary matrices.
pub fn oracle_sublevel_betti(cx: &FilteredComplex, t: &ExactReal) -> BTreeMap<i64, usize> {
    let c = if cx.field == 0 {
        Coeffs::Rational
    } else {
        Coeffs::Mod(cx.field as i64)
    };
    let alive: Vec<usize> = (0..cx.generators.len())
        .filter(|i| cx.generators[*i].filt.lt(t).unwrap())
        .collect();
    let mut by_deg: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in &alive {
        by_deg.entry(cx.generators[*i].deg).or_default().push(*i);
    }
    let index: BTreeMap<&str, usize> = cx
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| (g.id.as_str(), i))
        .collect();
    // rank of the boundary map out of degree m
    let boundary_rank = |m: i64| -> usize {
        let (Some(src), Some(dst)) = (by_deg.get(&m), by_deg.get(&(m - 1))) else {
            return 0;
        };
        let rows: Vec<Vec<BigRational>> = src
            .iter()
            .map(|s| {
                let mut row = vec![BigRational::zero(); dst.len()];
                for term in &cx.generators[*s].boundary {
                    let target = index[term.id.as_str()];
                    if let Some(pos) = dst.iter().position(|d| *d == target) {
                        row[pos] += BigRational::from_integer(BigInt::from(term.coef));
                    }
                }
                row
            })
            .collect();
        matrix_rank(c, rows)
    };
    let mut out = BTreeMap::new();
    for (m, gens) in &by_deg {
        let betti = gens.len() - boundary_rank(*m) - boundary_rank(m + 1);
        if betti > 0 {
            out.insert(*m, betti);
        }
    }
    out
}

/// Every finite endpoint level, midpoints between consecutive levels and one
/// level past the last.
pub fn sample_levels(levels: &[ExactReal]) -> Vec<ExactReal> {
    let mut v: Vec<ExactReal> = levels.to_vec();
    reebcz::exact::sort_exact(&mut v).unwrap();
    v.dedup();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut out = Vec::new();
    let mut prev = ExactReal::integer(-1);
    for s in &v {
        out.push((&prev + s).mul_rational(&half));
        out.push(s.clone());
        prev = s.clone();
    }
    out.push(&prev + &ExactReal::one());
    out.retain(|t| !t.is_negative().unwrap() && !t.is_zero());
    out
}

/// Rational `a/b` with `0 < a/b < hi`, drawn from a deterministic stream.
pub fn rational_below<R: rand::Rng>(rng: &mut R, hi: &ExactReal) -> ExactReal {
    let den = 1_000_003i64;
    let top = (hi.to_f64() * den as f64).floor() as i64;
    loop {
        let t = ExactReal::ratio(rng.gen_range(1..=top.max(1)), den);
        if t.lt(hi).unwrap() || t == *hi {
            return t;
        }
    }
}

pub fn sign_of(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Independent check of a recurrence event: every condition is re-evaluated
/// with the oracle indices.  Orbits whose action to mean-index ratios agree
/// must share `d`, and `d` is the integer nearest to `k` times the mean index.
pub fn oracle_event_check(
    system: &reebcz::OrbitSystem,
    c: &ExactReal,
    d: &[i64],
    k: &[u64],
    eta: &ExactReal,
    ell0: u64,
) -> Result<(), String> {
    let orbits = system.orbits();
    if k.len() != orbits.len() {
        return Err("shape".into());
    }
    let mut per_orbit = Vec::new();
    for (j, o) in orbits.iter().enumerate() {
        let kj = k[j];
        let hmu = oracle_mean_index(&o.path);
        let dj = nearest_int(&hmu.mul_int(kj as i64)).ok_or("half-integer mean index")?;
        if !d.contains(&dj) {
            return Err(format!("orbit {j}: nearest level {dj} not among {d:?}"));
        }
        if !(&hmu.mul_int(kj as i64) - &ExactReal::integer(dj))
            .abs()
            .unwrap()
            .lt(eta)
            .unwrap()
        {
            return Err(format!("orbit {j}: mean index not within eta of {dj}"));
        }
        for path in [o.path.clone(), o.path.nondegenerate_part()] {
            let m = path.half_dim() as i64;
            let (mm, mp) = oracle_mu_pm(&path, kj);
            if !(dj - m <= mm && mm <= mp && mp <= dj + m) {
                return Err(format!("orbit {j}: ({mm},{mp}) outside [d-m,d+m]"));
            }
            for ell in 1..=ell0 {
                let at = oracle_indices(&path, ell);
                if oracle_mu_pm(&path, kj + ell) != (dj + at.mu_minus, dj + at.mu_plus) {
                    return Err(format!("orbit {j}: forward recurrence fails at l={ell}"));
                }
                if ell < kj {
                    let beta_plus = (at.nu0 + at.b0 + at.b_plus) as i64;
                    let beta_minus = (at.nu0 + at.b0 + at.b_minus) as i64;
                    if oracle_mu_pm(&path, kj - ell).1 != dj - at.mu_minus + beta_plus - beta_minus
                    {
                        return Err(format!("orbit {j}: backward recurrence fails at l={ell}"));
                    }
                }
            }
        }
        let a = &o.action;
        let ka = a.mul_int(kj as i64);
        let lower = c - eta;
        if !(lower.lt(&ka).unwrap() && ka.lt(c).unwrap()) {
            return Err(format!("orbit {j}: k*a outside (C-eta, C)"));
        }
        if kj > 1 && !a.mul_int(kj as i64 - 1).lt(&lower).unwrap() {
            return Err(format!("orbit {j}: previous iterate inside the window"));
        }
        if !c.lt(&a.mul_int(kj as i64 + 1)).unwrap() {
            return Err(format!("orbit {j}: next iterate below C"));
        }
        if c.checked_div(a).unwrap().is_integer().unwrap() {
            return Err(format!("orbit {j}: C on the spectrum"));
        }
        per_orbit.push((o.action.checked_div(&hmu).unwrap(), dj));
    }
    for i in 0..per_orbit.len() {
        for j in 0..i {
            if per_orbit[i].0 == per_orbit[j].0 && per_orbit[i].1 != per_orbit[j].1 {
                return Err(format!("orbits {j} and {i} share a ratio but not d"));
            }
        }
    }
    Ok(())
}

/// Index-interval avoidance from the oracle: iterates above the event sit at
/// `mu- >= d+m+2`, iterates below at `mu+ <= d-2`.
pub fn oracle_avoidance(
    system: &reebcz::OrbitSystem,
    k: &[u64],
    ceiling: u64,
) -> Result<(), String> {
    for (j, o) in system.orbits().iter().enumerate() {
        let kj = k[j];
        let dj = nearest_int(&oracle_mean_index(&o.path).mul_int(kj as i64)).unwrap();
        let m = o.path.half_dim() as i64;
        for l in 1..=ceiling {
            let (mm, mp) = oracle_mu_pm(&o.path, l);
            if l > kj && mm < dj + m + 2 {
                return Err(format!("orbit {j}, k={l}: mu-={mm}"));
            }
            if l < kj && mp > dj - 2 {
                return Err(format!("orbit {j}, k={l}: mu+={mp}"));
            }
        }
    }
    Ok(())
}

/// 200 levels for a complex: every filtration value, the midpoints between
/// them, one level past the top, then random rationals up to that level.
pub fn complex_samples<R: rand::Rng>(
    rng: &mut R,
    cx: &FilteredComplex,
    count: usize,
) -> Vec<ExactReal> {
    let levels: Vec<ExactReal> = cx.generators.iter().map(|g| g.filt.clone()).collect();
    let mut out = sample_levels(&levels);
    let top = out.last().cloned().unwrap_or_else(ExactReal::one);
    while out.len() < count {
        out.push(rational_below(rng, &top));
    }
    out.truncate(count);
    out
}

/// One synthetic orbit per endpoint level whose local homology is exactly the
/// bar count there, so the bar/orbit bookkeeping must balance.  The index
/// bounds are `mu- = min` and `mu+ = max(max - 1, min)` of the support.
pub fn synthetic_orbits(bc: &reebcz::Barcode) -> Vec<reebcz::persistence::OrbitHomology> {
    let mut out = Vec::new();
    for (i, a) in bc.spectrum().unwrap().into_iter().enumerate() {
        let zeta = reebcz::persistence::zeta_counts(bc, &a).unwrap();
        let sh: BTreeMap<i64, usize> = zeta
            .iter()
            .filter(|(_, z)| z.total > 0)
            .map(|(m, z)| (*m, z.total))
            .collect();
        let lo = *sh.keys().next().unwrap();
        let hi = *sh.keys().last().unwrap();
        out.push(reebcz::persistence::OrbitHomology {
            label: format!("o{i}"),
            action: a,
            sh,
            mu_minus: lo,
            mu_plus: (hi - 1).max(lo),
        });
    }
    out
}
