//! Index recurrence events: simultaneous returns of all orbit iterates to
//! integer mean index with actions packed just below a common level.
//!
//! The search is exhaustive over an integer range.  Candidates come from the
//! torus return sets `{k : dist(k*lambda, Z) < eps}` of every orbit, are matched
//! in action within `sigma`, and are accepted only after [`verify_event`]
//! recomputes every index condition from scratch.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockpaths::BlockPath;
use crate::error::{Error, Result};
use crate::exact::{sort_exact, ExactReal};
use crate::indices::{is_dynamically_convex, mean_index, IndexEvaluator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub path: BlockPath,
    pub action: ExactReal,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    orbits: Vec<Orbit>,
}

/// A finite collection of prime orbits with positive actions and mean indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct OrbitSystem {
    orbits: Vec<Orbit>,
}

impl TryFrom<RawSystem> for OrbitSystem {
    type Error = Error;
    fn try_from(r: RawSystem) -> Result<Self> {
        OrbitSystem::new(r.orbits)
    }
}

impl From<OrbitSystem> for RawSystem {
    fn from(s: OrbitSystem) -> Self {
        RawSystem { orbits: s.orbits }
    }
}

impl OrbitSystem {
    pub fn new(orbits: Vec<Orbit>) -> Result<Self> {
        if orbits.is_empty() {
            return Err(Error::EmptySystem);
        }
        for (i, o) in orbits.iter().enumerate() {
            if !o.action.is_positive()? {
                return Err(Error::NonpositiveAction { orbit: i });
            }
            if !mean_index(&o.path).is_positive()? {
                return Err(Error::NonpositiveMeanIndex { orbit: i });
            }
        }
        Ok(OrbitSystem { orbits })
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn label(&self, j: usize) -> String {
        self.orbits[j]
            .label
            .clone()
            .unwrap_or_else(|| format!("x{}", j + 1))
    }

    /// The system with orbit `j` removed.
    pub fn without(&self, j: usize) -> Result<Self> {
        let mut o = self.orbits.clone();
        o.remove(j);
        OrbitSystem::new(o)
    }

    /// The system with every action replaced by the mean index.
    pub fn rescaled_to_mean_index(&self) -> Self {
        OrbitSystem {
            orbits: self
                .orbits
                .iter()
                .map(|o| Orbit {
                    label: o.label.clone(),
                    path: o.path.clone(),
                    action: mean_index(&o.path),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    /// Common value of action / mean index.
    pub ratio: ExactReal,
    /// Orbit indices in input order.
    pub members: Vec<usize>,
}

/// Partition by exact equality of action / mean index, ordered by ratio.
pub fn cluster_orbits(system: &OrbitSystem) -> Result<Vec<Cluster>> {
    let mut ratios = Vec::with_capacity(system.len());
    for (i, o) in system.orbits.iter().enumerate() {
        let mi = mean_index(&o.path);
        if !mi.is_positive()? {
            return Err(Error::NonpositiveMeanIndex { orbit: i });
        }
        ratios.push(o.action.checked_div(&mi)?);
    }
    let mut order: Vec<usize> = (0..system.len()).collect();
    let mut err = None;
    order.sort_by(|a, b| match ratios[*a].cmp_exact(&ratios[*b]) {
        Ok(Ordering::Equal) => a.cmp(b),
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for i in order {
        match clusters.last_mut() {
            Some(c) if c.ratio.cmp_exact(&ratios[i])? == Ordering::Equal => c.members.push(i),
            _ => clusters.push(Cluster {
                ratio: ratios[i].clone(),
                members: vec![i],
            }),
        }
    }
    Ok(clusters)
}

/// `(cluster, position)` label of every orbit, both zero-based.
pub fn orbit_labels(clusters: &[Cluster], n: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0); n];
    for (i, c) in clusters.iter().enumerate() {
        for (j, m) in c.members.iter().enumerate() {
            out[*m] = (i, j);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusReturns {
    pub ks: Vec<u64>,
    pub max_gap: u64,
}

/// All `k <= k_ceiling` divisible by `divisor` with `dist(k*lambda, Z) < eps` for every lambda.
pub fn torus_returns(
    lambdas: &[ExactReal],
    eps: &ExactReal,
    divisor: u64,
    k_ceiling: u64,
) -> Result<TorusReturns> {
    if !eps.is_positive()? {
        return Err(Error::InvalidParams("eps must be positive".into()));
    }
    if divisor == 0 {
        return Err(Error::InvalidParams("divisor must be positive".into()));
    }
    let mut ks = Vec::new();
    let mut k = divisor;
    while k <= k_ceiling {
        let mut ok = true;
        for l in lambdas {
            if !l.scaled_dist_lt(k, eps)? {
                ok = false;
                break;
            }
        }
        if ok {
            ks.push(k);
        }
        k += divisor;
    }
    if ks.is_empty() {
        return Err(Error::EmptyWindow { ceiling: k_ceiling });
    }
    let max_gap = ks.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok(TorusReturns { ks, max_gap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiSolutions {
    pub vectors: Vec<Vec<i64>>,
    /// Largest increase of the max-norm between consecutive solutions.
    pub max_gap: i64,
}

fn eval_form(form: &[ExactReal], v: &[i64]) -> ExactReal {
    form.iter().zip(v).map(|(c, k)| c.mul_int(*k)).sum()
}

/// Nonzero integer vectors `K` with `|f_s(K)| < bounds[s]` for every form, all
/// coordinates divisible by `divisor`, in order of increasing max-norm (then
/// lexicographic), normalized so the first nonzero coordinate is positive.
pub fn minkowski_solutions(
    n_vars: usize,
    forms: &[Vec<ExactReal>],
    bounds: &[ExactReal],
    divisor: u64,
    count: usize,
    box_bound: u64,
) -> Result<MinkowskiSolutions> {
    if forms.len() >= n_vars {
        return Err(Error::InvalidParams(
            "need fewer forms than variables".into(),
        ));
    }
    if forms.len() != bounds.len() || forms.iter().any(|f| f.len() != n_vars) {
        return Err(Error::InvalidParams(
            "form and bound shapes disagree".into(),
        ));
    }
    if divisor == 0 {
        return Err(Error::InvalidParams("divisor must be positive".into()));
    }
    let d = divisor as i64;
    let mut vectors = Vec::new();
    let mut norms = Vec::new();
    let mut r = 1i64;
    while r <= box_bound as i64 / d && vectors.len() < count {
        // Shell of max-norm r (in units of the divisor).
        let mut cur = vec![-r; n_vars];
        loop {
            let norm = cur.iter().map(|x| x.abs()).max().unwrap_or(0);
            let first = cur.iter().find(|x| **x != 0).copied().unwrap_or(0);
            if norm == r && first > 0 {
                let v: Vec<i64> = cur.iter().map(|x| x * d).collect();
                let mut ok = true;
                for (f, b) in forms.iter().zip(bounds) {
                    if !eval_form(f, &v).abs()?.lt(b)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    vectors.push(v);
                    norms.push(r * d);
                    if vectors.len() >= count {
                        break;
                    }
                }
            }
            let mut i = n_vars;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if cur[i] < r {
                    cur[i] += 1;
                    for x in cur.iter_mut().skip(i + 1) {
                        *x = -r;
                    }
                    i = usize::MAX;
                    break;
                }
            }
            if i != usize::MAX {
                break;
            }
        }
        r += 1;
    }
    if vectors.is_empty() {
        return Err(Error::EmptyWindow { ceiling: box_bound });
    }
    let max_gap = norms.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok(MinkowskiSolutions { vectors, max_gap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceParams {
    pub eta: ExactReal,
    pub ell0: u64,
    pub divisor: u64,
    pub event_count: usize,
    pub k_ceiling: u64,
    /// Overrides the default torus tolerance.
    #[serde(default)]
    pub epsilon: Option<ExactReal>,
    /// Overrides the default action-matching tolerance.
    #[serde(default)]
    pub sigma: Option<ExactReal>,
    /// Shard the search across the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

impl RecurrenceParams {
    pub fn new(eta: ExactReal, ell0: u64) -> Self {
        RecurrenceParams {
            eta,
            ell0,
            divisor: 1,
            event_count: 1,
            k_ceiling: 100_000,
            epsilon: None,
            sigma: None,
            parallel: false,
        }
    }
}

/// Parameters of an event after defaults are filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    pub eta: ExactReal,
    pub ell0: u64,
    pub epsilon: ExactReal,
    pub sigma: ExactReal,
    pub divisor: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub event: EventParams,
    /// Minimum of `dist(l*lambda, Z)` over `1 <= l <= ell0`, ignoring integral products.
    pub eps0: Option<ExactReal>,
    /// Least common multiple of the root-of-unity degrees of all orbits.
    pub root_lcm: u64,
    /// Search step: lcm of the divisor and `root_lcm`.
    pub step: u64,
    pub max_half_dim_nondegenerate: usize,
}

pub fn resolve_params(system: &OrbitSystem, params: &RecurrenceParams) -> Result<ResolvedParams> {
    let eta = &params.eta;
    if !eta.is_positive()? || !eta.lt(&ExactReal::ratio(1, 2))? {
        return Err(Error::InvalidParams(format!(
            "eta={eta} must lie in (0, 1/2)"
        )));
    }
    if params.ell0 == 0 || params.divisor == 0 || params.event_count == 0 || params.k_ceiling == 0 {
        return Err(Error::InvalidParams(
            "ell0, divisor, event count and ceiling must be positive".into(),
        ));
    }
    let root_lcm = system
        .orbits
        .iter()
        .fold(1u64, |a, o| a.lcm(&o.path.root_of_unity_lcm()));
    if !params.divisor.is_multiple_of(root_lcm) {
        return Err(Error::InvalidParams(format!(
            "divisor {} must be a multiple of the root-of-unity degree lcm {root_lcm}",
            params.divisor
        )));
    }
    let mut eps0: Option<ExactReal> = None;
    for o in &system.orbits {
        for l in o.path.rotation_numbers() {
            for ell in 1..=params.ell0 {
                let x = l.mul_int(ell as i64);
                if x.is_integer()? {
                    continue;
                }
                let dist = x.dist_to_int()?;
                eps0 = Some(match eps0 {
                    Some(e) => e.min(&dist)?,
                    None => dist,
                });
            }
        }
    }
    let mp = system
        .orbits
        .iter()
        .map(|o| o.path.nondegenerate_part().half_dim())
        .max()
        .unwrap_or(0);
    let eps_cap = if mp == 0 {
        None
    } else {
        Some(eta.checked_div(&ExactReal::integer(2 * mp as i64))?)
    };
    let epsilon = match &params.epsilon {
        Some(e) => {
            if !e.is_positive()? {
                return Err(Error::InvalidParams("epsilon must be positive".into()));
            }
            if let Some(e0) = &eps0 {
                if e0.lt(e)? {
                    return Err(Error::InvalidParams(format!(
                        "epsilon={e} exceeds eps0={e0}"
                    )));
                }
            }
            if let Some(c) = &eps_cap {
                if c.lt(e)? {
                    return Err(Error::InvalidParams(format!(
                        "epsilon={e} exceeds eta/(2m')={c}"
                    )));
                }
            }
            e.clone()
        }
        None => {
            let mut e = ExactReal::ratio(1, 2);
            if let Some(e0) = &eps0 {
                e = e.min(e0)?;
            }
            if let Some(c) = &eps_cap {
                e = e.min(c)?;
            }
            e.mul_rational(&BigRational::new(BigInt::one(), BigInt::from(2)))
        }
    };
    let mut min_action = system.orbits[0].action.clone();
    for o in &system.orbits[1..] {
        min_action = min_action.min(&o.action)?;
    }
    let sigma = match &params.sigma {
        Some(s) => {
            if !s.is_positive()? || !s.lt(&min_action)? || eta.lt(s)? {
                return Err(Error::InvalidParams(format!(
                    "sigma={s} must lie in (0, min action) and not exceed eta"
                )));
            }
            s.clone()
        }
        None => min_action
            .min(eta)?
            .mul_rational(&BigRational::new(BigInt::one(), BigInt::from(2))),
    };
    Ok(ResolvedParams {
        event: EventParams {
            eta: eta.clone(),
            ell0: params.ell0,
            epsilon,
            sigma,
            divisor: params.divisor,
        },
        eps0,
        root_lcm,
        step: params.divisor.lcm(&root_lcm),
        max_half_dim_nondegenerate: mp,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyFailure {
    pub item: String,
    #[serde(default)]
    pub orbit: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Avoidance {
    /// The theory guarantees the avoidance for these parameters.
    pub guaranteed: bool,
    pub holds: bool,
    #[serde(default)]
    pub first_violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub k_ceiling: u64,
    pub failures: Vec<VerifyFailure>,
    /// Index-interval avoidance on both sides of the event; present when every orbit is dynamically convex.
    #[serde(default)]
    pub avoidance: Option<Avoidance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEvent {
    #[serde(rename = "C")]
    pub c: ExactReal,
    /// One integer per cluster.
    pub d: Vec<i64>,
    /// One iterate per orbit, in system order.
    pub k: Vec<u64>,
    pub params: EventParams,
    #[serde(default)]
    pub verified: Option<VerifyReport>,
}

/// Independent re-check of an event: index recurrence on both sides, action
/// window, divisibility and (for dynamically convex systems) interval avoidance
/// over `1..=k_ceiling`.
pub fn verify_event(
    system: &OrbitSystem,
    event: &RecurrenceEvent,
    k_ceiling: u64,
) -> Result<VerifyReport> {
    let clusters = cluster_orbits(system)?;
    let labels = orbit_labels(&clusters, system.len());
    let p = &event.params;
    let mut failures = Vec::new();
    let mut fail = |item: &str, orbit: Option<usize>, detail: String| {
        failures.push(VerifyFailure {
            item: item.to_string(),
            orbit,
            detail,
        })
    };
    if event.k.len() != system.len() || event.d.len() != clusters.len() {
        fail(
            "shape",
            None,
            format!(
                "event has {} iterates and {} levels for {} orbits in {} clusters",
                event.k.len(),
                event.d.len(),
                system.len(),
                clusters.len()
            ),
        );
        return Ok(VerifyReport {
            passed: false,
            k_ceiling,
            failures,
            avoidance: None,
        });
    }
    let n_div = p.divisor as i64;
    for (i, d) in event.d.iter().enumerate() {
        if d % n_div != 0 {
            fail(
                "divisibility",
                None,
                format!("d[{i}]={d} not divisible by {}", p.divisor),
            );
        }
    }
    for (j, o) in system.orbits.iter().enumerate() {
        let k = event.k[j];
        let d = event.d[labels[j].0];
        if k == 0 {
            fail("shape", Some(j), "iterate 0".into());
            continue;
        }
        if !k.is_multiple_of(p.divisor) {
            fail(
                "divisibility",
                Some(j),
                format!("k={k} not divisible by {}", p.divisor),
            );
        }
        let mi = mean_index(&o.path);
        if !(mi.mul_int(k as i64) - ExactReal::integer(d))
            .abs()?
            .lt(&p.eta)?
        {
            fail(
                "IR1",
                Some(j),
                format!("|hmu(k={k}) - d| >= eta with d={d}"),
            );
        }
        let parts = [(o.path.clone(), "", o.path.half_dim()), {
            let psi = o.path.nondegenerate_part();
            let m = psi.half_dim();
            (psi, "IR4/", m)
        }];
        for (path, prefix, m) in parts.iter() {
            let m = *m as i64;
            let ev = IndexEvaluator::new(path);
            let (mm, mp) = ev.mu_pm(k)?;
            if !(d - m <= mm && mm <= mp && mp <= d + m) {
                fail(
                    &format!("{prefix}IR1"),
                    Some(j),
                    format!(
                        "mu-={mm}, mu+={mp} outside [d-m, d+m]=[{}, {}]",
                        d - m,
                        d + m
                    ),
                );
            }
            for ell in 1..=p.ell0 {
                let (lm, lp) = ev.mu_pm(ell)?;
                let (km, kp) = ev.mu_pm(k + ell)?;
                if km != d + lm || kp != d + lp {
                    fail(
                        &format!("{prefix}IR2"),
                        Some(j),
                        format!(
                            "mu(k+{ell})=({km},{kp}) != d+mu({ell})=({},{})",
                            d + lm,
                            d + lp
                        ),
                    );
                }
                if ell < k {
                    let (_, bp) = ev.mu_pm(k - ell)?;
                    let b = ev.beta_invariants(ell)?;
                    let expect = d - lm + b.beta_plus() as i64 - b.beta_minus() as i64;
                    if bp != expect {
                        fail(
                            &format!("{prefix}IR3"),
                            Some(j),
                            format!("mu+(k-{ell})={bp} != {expect}"),
                        );
                    }
                }
            }
        }
        let ka = o.action.mul_int(k as i64);
        let lower = &event.c - &p.eta;
        if !(lower.lt(&ka)? && ka.lt(&event.c)?) {
            fail(
                "IR5",
                Some(j),
                format!("k*a={ka} outside (C-eta, C) with C={}", event.c),
            );
        }
        if k > 1 && !o.action.mul_int(k as i64 - 1).lt(&lower)? {
            fail("IR5", Some(j), format!("(k-1)*a not below C-eta for k={k}"));
        }
        if !event.c.lt(&o.action.mul_int(k as i64 + 1))? {
            fail("IR5", Some(j), format!("(k+1)*a not above C for k={k}"));
        }
        if event.c.checked_div(&o.action)?.is_integer()? {
            fail(
                "IR5",
                Some(j),
                format!("C={} lies on the spectrum", event.c),
            );
        }
    }
    let mut all_dc = true;
    for o in &system.orbits {
        all_dc &= is_dynamically_convex(&o.path)?;
    }
    let avoidance = if all_dc {
        let m = system
            .orbits
            .iter()
            .map(|o| o.path.half_dim())
            .max()
            .unwrap_or(0) as i64;
        let mut min_mi = mean_index(&system.orbits[0].path);
        for o in &system.orbits[1..] {
            min_mi = min_mi.min(&mean_index(&o.path))?;
        }
        let guaranteed = !min_mi
            .mul_int(p.ell0 as i64)
            .lt(&ExactReal::integer(3 * (m + 1)))?;
        let mut first_violation = None;
        'outer: for (j, o) in system.orbits.iter().enumerate() {
            let kj = event.k[j];
            let d = event.d[labels[j].0];
            let mj = o.path.half_dim() as i64;
            let ev = IndexEvaluator::new(&o.path);
            for k in 1..=k_ceiling.max(kj + p.ell0) {
                if k == kj {
                    continue;
                }
                let (mm, mp) = ev.mu_pm(k)?;
                if k > kj && mm < d + mj + 2 {
                    first_violation =
                        Some(format!("orbit {j}, k={k}: mu-={mm} < d+m+2={}", d + mj + 2));
                    break 'outer;
                }
                if k < kj && mp > d - 2 {
                    first_violation = Some(format!("orbit {j}, k={k}: mu+={mp} > d-2={}", d - 2));
                    break 'outer;
                }
            }
        }
        Some(Avoidance {
            guaranteed,
            holds: first_violation.is_none(),
            first_violation,
        })
    } else {
        None
    };
    let avoid_ok = avoidance.as_ref().is_none_or(|a| a.holds || !a.guaranteed);
    Ok(VerifyReport {
        passed: failures.is_empty() && avoid_ok,
        k_ceiling,
        failures,
        avoidance,
    })
}

/// Level just above the largest action, off the spectrum and below `min + eta`.
pub fn choose_level(
    actions: &[ExactReal],
    orbit_actions: &[ExactReal],
    eta: &ExactReal,
) -> Result<ExactReal> {
    let mut sorted = actions.to_vec();
    sort_exact(&mut sorted)?;
    let (lo, hi) = (sorted[0].clone(), sorted[sorted.len() - 1].clone());
    let target = &(lo + eta) - &hi;
    // smallest j with 2^-j <= (slack) * 2^-16
    let mut j: u64 = 16;
    while !ExactReal::rational(BigRational::new(BigInt::one(), BigInt::one() << j))
        .mul_int(1 << 16)
        .le(eta)?
    {
        j += 1;
        if j > 4096 {
            return Err(Error::Precision("cannot place level".into()));
        }
    }
    for extra in 0..256 {
        let jj = j + extra;
        let scale = BigInt::one() << jj;
        let fl = hi.mul_big(&scale).floor()?;
        let c = ExactReal::rational(BigRational::new(fl + 1, scale));
        if !(&c - &hi).lt(&target)? {
            continue;
        }
        let mut on_spectrum = false;
        for a in orbit_actions {
            if c.checked_div(a)?.is_integer()? {
                on_spectrum = true;
                break;
            }
        }
        if !on_spectrum {
            return Ok(c);
        }
    }
    Err(Error::ParamTooTight(
        "no admissible level above the actions".into(),
    ))
}

struct OrbitData {
    action: ExactReal,
    mean: ExactReal,
    irrational: Vec<ExactReal>,
    cluster: usize,
}

#[derive(Clone, Debug)]
struct Candidate {
    k: Vec<u64>,
    d: Vec<i64>,
}

fn torus_ok(o: &OrbitData, k: u64, eps: &ExactReal) -> Result<bool> {
    for l in &o.irrational {
        if !l.scaled_dist_lt(k, eps)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn scan(
    data: &[OrbitData],
    n_clusters: usize,
    rp: &ResolvedParams,
    start: u64,
    end: u64,
) -> Result<Vec<Candidate>> {
    let ep = &rp.event;
    let step = rp.step;
    let mut out = Vec::new();
    let mut k0 = start;
    let sig_f = ep.sigma.to_f64();
    'next: while k0 <= end {
        let kref = k0;
        k0 += step;
        if !torus_ok(&data[0], kref, &ep.epsilon)? {
            continue;
        }
        let a0 = data[0].action.mul_int(kref as i64);
        let mut ks = vec![kref];
        for o in &data[1..] {
            let t = a0.to_f64() / o.action.to_f64();
            let w = sig_f / o.action.to_f64();
            let lo = ((t - w).floor() as i64 - 1).max(1) as u64;
            let hi = (t + w).ceil() as u64 + 1;
            let mut found = None;
            let mut kk = lo.div_ceil(step) * step;
            while kk <= hi {
                if torus_ok(o, kk, &ep.epsilon)?
                    && (o.action.mul_int(kk as i64) - &a0).abs()?.lt(&ep.sigma)?
                {
                    found = Some(kk);
                    break;
                }
                kk += step;
            }
            match found {
                Some(kk) => ks.push(kk),
                None => continue 'next,
            }
        }
        let acts: Vec<ExactReal> = data
            .iter()
            .zip(&ks)
            .map(|(o, k)| o.action.mul_int(*k as i64))
            .collect();
        let mut lo = acts[0].clone();
        let mut hi = acts[0].clone();
        for a in &acts[1..] {
            lo = lo.min(a)?;
            hi = hi.max(a)?;
        }
        if !(&hi - &lo).lt(&ep.sigma)? {
            continue;
        }
        let mut d: Vec<Option<i64>> = vec![None; n_clusters];
        for (o, k) in data.iter().zip(&ks) {
            let x = o.mean.mul_int(*k as i64);
            let di = x.nearest_i64()?;
            if !(&x - &ExactReal::integer(di)).abs()?.lt(&ep.eta)? || di % ep.divisor as i64 != 0 {
                continue 'next;
            }
            match d[o.cluster] {
                Some(prev) if prev != di => continue 'next,
                _ => d[o.cluster] = Some(di),
            }
        }
        out.push(Candidate {
            k: ks,
            d: d.into_iter()
                .map(|x| x.expect("every cluster has a member"))
                .collect(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceOutcome {
    pub events: Vec<RecurrenceEvent>,
    pub params: ResolvedParams,
    /// Per orbit, the largest gap between consecutive event iterates.
    pub observed_gaps: Vec<u64>,
    /// Candidates that matched the Diophantine conditions but failed verification or monotonicity.
    pub rejected: usize,
}

const CHUNK_STEPS: u64 = 1 << 14;

/// Finds up to `params.event_count` verified events with strictly increasing level, `d` and `k`.
pub fn find_recurrence_events(
    system: &OrbitSystem,
    params: &RecurrenceParams,
) -> Result<RecurrenceOutcome> {
    let rp = resolve_params(system, params)?;
    let clusters = cluster_orbits(system)?;
    let labels = orbit_labels(&clusters, system.len());
    let data: Vec<OrbitData> = system
        .orbits
        .iter()
        .enumerate()
        .map(|(j, o)| OrbitData {
            action: o.action.clone(),
            mean: mean_index(&o.path),
            irrational: o
                .path
                .rotation_numbers()
                .filter(|l| !l.is_rational())
                .cloned()
                .collect(),
            cluster: labels[j].0,
        })
        .collect();
    let orbit_actions: Vec<ExactReal> = system.orbits.iter().map(|o| o.action.clone()).collect();
    let chunk = CHUNK_STEPS * rp.step;
    let wave = if params.parallel {
        rayon::current_num_threads().max(1) as u64
    } else {
        1
    };
    let mut events: Vec<RecurrenceEvent> = Vec::new();
    let mut rejected = 0usize;
    let mut start = rp.step;
    while start <= params.k_ceiling && events.len() < params.event_count {
        let ranges: Vec<(u64, u64)> = (0..wave)
            .map(|w| start + w * chunk)
            .filter(|s| *s <= params.k_ceiling)
            .map(|s| (s, (s + chunk - rp.step).min(params.k_ceiling)))
            .collect();
        start += wave * chunk;
        let batches: Vec<Result<Vec<Candidate>>> = if params.parallel {
            ranges
                .par_iter()
                .map(|(s, e)| scan(&data, clusters.len(), &rp, *s, *e))
                .collect()
        } else {
            ranges
                .iter()
                .map(|(s, e)| scan(&data, clusters.len(), &rp, *s, *e))
                .collect()
        };
        for batch in batches {
            for cand in batch? {
                if events.len() >= params.event_count {
                    break;
                }
                let acts: Vec<ExactReal> = system
                    .orbits
                    .iter()
                    .zip(&cand.k)
                    .map(|(o, k)| o.action.mul_int(*k as i64))
                    .collect();
                let c = match choose_level(&acts, &orbit_actions, &rp.event.eta) {
                    Ok(c) => c,
                    Err(Error::ParamTooTight(_)) => {
                        rejected += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if let Some(prev) = events.last() {
                    let increasing = prev.c.lt(&c)?
                        && prev.d.iter().zip(&cand.d).all(|(a, b)| a < b)
                        && prev.k.iter().zip(&cand.k).all(|(a, b)| a < b);
                    if !increasing {
                        rejected += 1;
                        continue;
                    }
                }
                let mut ev = RecurrenceEvent {
                    c,
                    d: cand.d,
                    k: cand.k,
                    params: rp.event.clone(),
                    verified: None,
                };
                let kmax = *ev.k.iter().max().expect("nonempty");
                let report = verify_event(system, &ev, 2 * kmax + rp.event.ell0)?;
                if !report.passed {
                    rejected += 1;
                    continue;
                }
                ev.verified = Some(report);
                events.push(ev);
            }
        }
    }
    if events.is_empty() {
        return Err(Error::ParamTooTight(format!(
            "no verified event up to k={} with eps={} and sigma={}",
            params.k_ceiling, rp.event.epsilon, rp.event.sigma
        )));
    }
    let observed_gaps = (0..system.len())
        .map(|j| {
            events
                .windows(2)
                .map(|w| w[1].k[j] - w[0].k[j])
                .max()
                .unwrap_or(0)
        })
        .collect();
    Ok(RecurrenceOutcome {
        events,
        params: rp,
        observed_gaps,
        rejected,
    })
}
