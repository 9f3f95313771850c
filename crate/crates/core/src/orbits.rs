//! Closed orbit records, local homology supports, ellipsoid model systems,
//! staircase barcodes and the multiplicity audit.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::blockpaths::{eigenvalue_summary, is_admissible, BlockPath, ElementaryBlock};
use crate::error::{Error, Result};
use crate::exact::ExactReal;
use crate::indices::{
    cz_index, is_dynamically_convex, is_nondegenerate_iterate, mean_index, mu_pm, IndexEvaluator,
};
use crate::persistence::{check_bars_vs_orbits, Bar, Barcode, Check, OrbitHomology};
use crate::recurrence::{
    cluster_orbits, orbit_labels, verify_event, Orbit, OrbitSystem, RecurrenceEvent,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub k: u64,
    /// The `k`-th iterate has no eigenvalue one.
    pub nondegenerate: bool,
    /// No iterate of the prime is degenerate.
    pub strongly_nondegenerate: bool,
    /// Real eigenvalues of the prime in `(-1, 0)`.
    pub negative_in_unit: usize,
    pub alternating: bool,
    /// Only for nondegenerate iterates.
    pub good: Option<bool>,
}

/// Alternating/good labels of the `k`-th iterate of a prime orbit.
pub fn classify_orbit(prime: &BlockPath, k: u64) -> Result<Classification> {
    let s = eigenvalue_summary(prime, 1)?;
    let degrees = prime.root_of_unity_degrees();
    let strongly_nondegenerate = !prime.has_shear() && degrees.is_empty();
    let alternating = s.negative_real % 2 == 1;
    if alternating && degrees.iter().any(|q| q % 2 == 0) {
        return Err(Error::ClassificationUndefined(format!(
            "alternating prime with roots of unity of even degree {degrees:?}"
        )));
    }
    let nondegenerate = is_nondegenerate_iterate(prime, k)?;
    Ok(Classification {
        k,
        nondegenerate,
        strongly_nondegenerate,
        negative_in_unit: s.negative_real,
        alternating,
        good: nondegenerate.then_some(!(alternating && k.is_multiple_of(2))),
    })
}

/// The `k`-th iterate of a prime orbit together with its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbitRecord {
    pub label: String,
    pub prime: BlockPath,
    pub k: u64,
    /// Path of the iterate.
    pub path: BlockPath,
    pub action: ExactReal,
    /// `None` when the alternating label is refused.
    pub classification: Option<Classification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<i64>,
    /// Rational equivariant local homology supplied by the caller for degenerate orbits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_ch: Option<BTreeMap<i64, usize>>,
}

impl ClosedOrbitRecord {
    pub fn new(
        label: impl Into<String>,
        prime: &BlockPath,
        prime_action: &ExactReal,
        k: u64,
    ) -> Result<Self> {
        let classification = match classify_orbit(prime, k) {
            Ok(c) => Some(c),
            Err(Error::ClassificationUndefined(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(ClosedOrbitRecord {
            label: label.into(),
            prime: prime.clone(),
            k,
            path: prime.iterate(k)?,
            action: prime_action.mul_int(k as i64),
            classification,
            degree: None,
            declared_ch: None,
        })
    }

    pub fn with_degree(mut self, degree: i64) -> Self {
        self.degree = Some(degree);
        self
    }

    /// The `j`-th iterate of this record, as an iterate of the same prime.
    pub fn iterate(&self, j: u64) -> Result<Self> {
        let k = self
            .k
            .checked_mul(j)
            .ok_or_else(|| Error::Overflow(format!("iterate {} * {j}", self.k)))?;
        let prime_action = self
            .action
            .checked_div(&ExactReal::integer(self.k as i64))?;
        ClosedOrbitRecord::new(self.label.clone(), &self.prime, &prime_action, k)
    }

    fn is_nondegenerate(&self) -> Result<bool> {
        is_nondegenerate_iterate(&self.prime, self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Support {
    Exact {
        degrees: Vec<i64>,
    },
    /// Only a bound is known; `hi = None` means unbounded above.
    Bounded {
        lo: i64,
        hi: Option<i64>,
        reason: String,
    },
}

impl Support {
    pub fn is_exact(&self) -> bool {
        matches!(self, Support::Exact { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalHomology {
    pub field: u64,
    pub sh: Support,
    pub ch: Support,
}

/// Supports of local symplectic homology and its equivariant version.
pub fn local_homology(rec: &ClosedOrbitRecord, field: u64) -> Result<LocalHomology> {
    let (mm, mp) = mu_pm(&rec.prime, rec.k)?;
    if !rec.is_nondegenerate()? {
        let ch = if field == 0 {
            Support::Bounded {
                lo: mm,
                hi: Some(mp),
                reason: "degenerate orbit".into(),
            }
        } else {
            Support::Bounded {
                lo: mm,
                hi: None,
                reason: "degenerate orbit in positive characteristic".into(),
            }
        };
        return Ok(LocalHomology {
            field,
            sh: Support::Bounded {
                lo: mm,
                hi: Some(mp + 1),
                reason: "degenerate orbit".into(),
            },
            ch,
        });
    }
    let mu = mm;
    let sh = Support::Exact {
        degrees: vec![mu, mu + 1],
    };
    let ch = match rec.classification.as_ref().and_then(|c| c.good) {
        None => Support::Bounded {
            lo: mu,
            hi: Some(mu),
            reason: "alternating label undefined".into(),
        },
        Some(_) if field != 0 && rec.k.is_multiple_of(field) => Support::Bounded {
            lo: mu,
            hi: None,
            reason: format!(
                "characteristic {field} divides the iteration order {}",
                rec.k
            ),
        },
        Some(true) => Support::Exact { degrees: vec![mu] },
        Some(false) => Support::Exact { degrees: vec![] },
    };
    Ok(LocalHomology { field, sh, ch })
}

/// Equivariant Euler characteristic over the rationals.
pub fn chieq(rec: &ClosedOrbitRecord) -> Result<i64> {
    if let Some(ch) = &rec.declared_ch {
        return Ok(ch
            .iter()
            .map(|(m, d)| {
                if m.rem_euclid(2) == 0 {
                    *d as i64
                } else {
                    -(*d as i64)
                }
            })
            .sum());
    }
    match local_homology(rec, 0)?.ch {
        Support::Exact { degrees } => Ok(degrees
            .iter()
            .map(|m| if m.rem_euclid(2) == 0 { 1 } else { -1 })
            .sum()),
        Support::Bounded { reason, .. } => Err(Error::NotApplicable(format!(
            "equivariant Euler characteristic: {reason}"
        ))),
    }
}

/// The boundary of the ellipsoid with axes `deltas`: orbit `j` has action
/// `deltas[j]` and linearized flow `loop 1 + sum over i != j of R(deltas[j]/deltas[i])`.
pub fn ellipsoid_system(deltas: &[ExactReal]) -> Result<OrbitSystem> {
    if deltas.is_empty() {
        return Err(Error::EmptySystem);
    }
    for (i, d) in deltas.iter().enumerate() {
        if !d.is_positive()? {
            return Err(Error::NonpositiveAction { orbit: i });
        }
        if i > 0 && !deltas[i - 1].lt(d)? {
            return Err(Error::InvalidParams(
                "deltas must be strictly increasing".into(),
            ));
        }
    }
    let mut orbits = Vec::with_capacity(deltas.len());
    for (j, dj) in deltas.iter().enumerate() {
        let mut blocks = Vec::new();
        for (i, di) in deltas.iter().enumerate() {
            if i == j {
                continue;
            }
            let lambda = dj.checked_div(di)?;
            if lambda.is_rational() {
                return Err(Error::RationalRatio { i: i + 1, j: j + 1 });
            }
            blocks.push(ElementaryBlock::rotation(lambda)?);
        }
        orbits.push(Orbit {
            label: Some(format!("y{}", j + 1)),
            path: BlockPath::new(1, blocks)?,
            action: dj.clone(),
        });
    }
    OrbitSystem::new(orbits)
}

/// Half of the ambient dimension: one more than the largest transverse half-dimension.
pub fn ambient_n(system: &OrbitSystem) -> i64 {
    system
        .orbits()
        .iter()
        .map(|o| o.path.half_dim())
        .max()
        .unwrap_or(0) as i64
        + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseOrbit {
    pub label: String,
    pub orbit: usize,
    pub k: u64,
    pub action: ExactReal,
    pub degree: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    pub n: i64,
    pub barcode: Barcode,
    /// Iterates in action order.
    pub orbits: Vec<StaircaseOrbit>,
    /// Local homology per level, starting with the distinguished element at action 0.
    /// The upper generator of the last orbit begins a bar beyond the window and is omitted.
    pub homology: Vec<OrbitHomology>,
}

/// Iterates of all orbits in increasing action order, up to `count` of them.
pub fn iterates_by_action(
    system: &OrbitSystem,
    count: usize,
) -> Result<Vec<(usize, u64, ExactReal)>> {
    let mut next: Vec<u64> = vec![1; system.len()];
    let mut out: Vec<(usize, u64, ExactReal)> = Vec::with_capacity(count);
    while out.len() < count {
        let mut best: Option<(usize, ExactReal)> = None;
        for (j, o) in system.orbits().iter().enumerate() {
            let a = o.action.mul_int(next[j] as i64);
            best = match best {
                None => Some((j, a)),
                Some((bj, ba)) => match a.cmp_exact(&ba)? {
                    Ordering::Less => Some((j, a)),
                    Ordering::Equal => {
                        return Err(Error::HypothesisViolation(format!(
                            "iterates {}^{} and {}^{} share action {ba}",
                            system.label(bj),
                            next[bj],
                            system.label(j),
                            next[j]
                        )))
                    }
                    Ordering::Greater => Some((bj, ba)),
                },
            };
        }
        let (j, a) = best.expect("nonempty system");
        out.push((j, next[j], a));
        next[j] += 1;
    }
    Ok(out)
}

/// Barcode of a dynamically convex nondegenerate system whose iterates have
/// distinct actions: one bar between consecutive spectrum points.
pub fn staircase_barcode(system: &OrbitSystem, count: usize) -> Result<Staircase> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be positive".into()));
    }
    let n = ambient_n(system);
    for (j, o) in system.orbits().iter().enumerate() {
        if !is_dynamically_convex(&o.path)? {
            return Err(Error::HypothesisViolation(format!(
                "{} is not dynamically convex",
                system.label(j)
            )));
        }
    }
    let iterates = iterates_by_action(system, count)?;
    let mut orbits = Vec::with_capacity(count);
    let mut homology = vec![OrbitHomology {
        label: "W".into(),
        action: ExactReal::zero(),
        sh: BTreeMap::from([(n, 1)]),
        mu_minus: n,
        mu_plus: n,
    }];
    let mut bars = Vec::with_capacity(count);
    let mut prev = ExactReal::zero();
    for (i, (j, k, a)) in iterates.into_iter().enumerate() {
        let prime = &system.orbits()[j].path;
        let c = classify_orbit(prime, k)?;
        if c.good != Some(true) {
            return Err(Error::HypothesisViolation(format!(
                "{}^{k} is degenerate or bad",
                system.label(j)
            )));
        }
        let mu = cz_index(prime, k)?;
        let degree = n + 1 + 2 * i as i64;
        if mu != degree {
            return Err(Error::HypothesisViolation(format!(
                "{}^{k} has index {mu}, staircase position needs {degree}",
                system.label(j)
            )));
        }
        bars.push(Bar::finite(prev, a.clone(), degree - 1));
        let mut sh = BTreeMap::from([(mu, 1)]);
        if i + 1 < count {
            sh.insert(mu + 1, 1);
        }
        homology.push(OrbitHomology {
            label: format!("{}^{k}", system.label(j)),
            action: a.clone(),
            sh,
            mu_minus: mu,
            mu_plus: mu,
        });
        orbits.push(StaircaseOrbit {
            label: system.label(j),
            orbit: j,
            k,
            action: a.clone(),
            degree,
        });
        prev = a;
    }
    let barcode = Barcode::new(0, bars)?;
    check_bars_vs_orbits(&barcode, &homology).map_err(|e| {
        Error::HypothesisViolation(format!("bars do not match local homology: {e}"))
    })?;
    Ok(Staircase {
        n,
        barcode,
        orbits,
        homology,
    })
}

/// Which iteration rule predicts the degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftRule {
    /// Totally degenerate orbit: the degree moves by the mean index.
    TotallyDegenerate,
    /// The degree moves with the index of the nondegenerate part.
    NondegeneratePart,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreePrediction {
    pub rule: ShiftRule,
    pub k: u64,
    pub degree: i64,
}

/// Predicted degree of the `k`-th iterate of an orbit with known degree.
pub fn degree_shift_predict(rec: &ClosedOrbitRecord, k: u64) -> Result<DegreePrediction> {
    let deg = rec
        .degree
        .ok_or_else(|| Error::NotApplicable("orbit has no known degree".into()))?;
    if k == 0 {
        return Err(Error::InvalidParams("iterate needs k >= 1".into()));
    }
    if !is_admissible(&rec.path, k) {
        return Err(Error::NotApplicable(format!("k={k} is not admissible")));
    }
    if rec.path.is_totally_degenerate() {
        let h = mean_index(&rec.path);
        let shift = h.mul_int(k as i64 - 1);
        let shift = shift
            .as_rational()
            .filter(|q| q.is_integer())
            .ok_or_else(|| {
                Error::NotApplicable(
                    "mean index of a totally degenerate path is not integral".into(),
                )
            })?;
        let shift: i64 = shift
            .to_integer()
            .try_into()
            .map_err(|_| Error::Overflow("degree shift".into()))?;
        return Ok(DegreePrediction {
            rule: ShiftRule::TotallyDegenerate,
            k,
            degree: deg + shift,
        });
    }
    if k.is_multiple_of(2) {
        return Err(Error::NotApplicable(format!("k={k} is even")));
    }
    let psi = rec.path.nondegenerate_part();
    Ok(DegreePrediction {
        rule: ShiftRule::NondegeneratePart,
        k,
        degree: deg + cz_index(&psi, k)? - cz_index(&psi, 1)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterRange {
    pub from: u64,
    pub to: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRanges {
    pub orbit: usize,
    /// Iterates below the event iterate; empty when `from > to`.
    pub minus: IterRange,
    pub zero: u64,
    pub plus: IterRange,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub degree: i64,
    /// `(orbit, k)` of the event iterates carrying this degree.
    pub filled_by: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotLevel {
    pub cluster: usize,
    pub d: i64,
    pub interval: (i64, i64),
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub event: RecurrenceEvent,
    pub n: i64,
    pub k_ceiling: u64,
    pub groups: Vec<GroupRanges>,
    pub levels: Vec<SlotLevel>,
    pub filled_slots: usize,
    pub distinct_primes: usize,
    /// Least common multiple of the root-of-unity degrees of all primes.
    pub p: u64,
    /// Largest `s` with `s * A(x_j) <= A(x_0)`, `x_0` the prime of least action, per orbit.
    pub s: Vec<u64>,
    #[serde(rename = "N")]
    pub big_n: u64,
    /// Every event iterate divisible by `N` and every level even.
    pub n_divides_event: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn factorial(s: u64) -> Result<u64> {
    if s >= 20 {
        return Err(Error::FactorialOverflow(s));
    }
    Ok((1..=s).product())
}

fn check(name: &str, bad: Option<String>, ok: String) -> Check {
    Check {
        name: name.into(),
        holds: bad.is_none(),
        detail: bad.unwrap_or(ok),
    }
}

/// Sorts every iterate up to `k_ceiling` into the groups below, at and above the
/// event iterate and checks that exactly the event iterates land in the degree
/// window `[d - n + 1, d + n - 1]` and fill its slots of parity `n + 1`.
pub fn multiplicity_audit(
    system: &OrbitSystem,
    event: &RecurrenceEvent,
    k_ceiling: u64,
) -> Result<AuditReport> {
    let report = verify_event(system, event, k_ceiling)?;
    if !report.passed {
        let detail = report
            .failures
            .first()
            .map(|f| format!("{} {}", f.item, f.detail))
            .or_else(|| {
                report
                    .avoidance
                    .as_ref()
                    .and_then(|a| a.first_violation.clone())
            })
            .unwrap_or_default();
        return Err(Error::EventMismatch(detail));
    }
    let kmax = event.k.iter().copied().max().unwrap_or(0);
    if k_ceiling < kmax + event.params.ell0 {
        return Err(Error::InvalidParams(format!(
            "k ceiling {k_ceiling} below max iterate {kmax} + {}",
            event.params.ell0
        )));
    }
    let n = ambient_n(system);
    let clusters = cluster_orbits(system)?;
    let labels = orbit_labels(&clusters, system.len());

    let mut levels: Vec<SlotLevel> = clusters
        .iter()
        .enumerate()
        .map(|(c, _)| {
            let d = event.d[c];
            let interval = (d - n + 1, d + n - 1);
            let slots = (interval.0..=interval.1)
                .filter(|m| (m - n - 1).rem_euclid(2) == 0)
                .map(|degree| Slot {
                    degree,
                    filled_by: Vec::new(),
                })
                .collect();
            SlotLevel {
                cluster: c,
                d,
                interval,
                slots,
            }
        })
        .collect();

    let mut groups = Vec::with_capacity(system.len());
    let mut minus_bad = None;
    let mut plus_bad = None;
    let mut spot_bad = None;
    let mut zero_bad = None;
    let mut alt_bad = None;
    let all_even = event.k.iter().all(|k| k % 2 == 0);
    for (j, o) in system.orbits().iter().enumerate() {
        let kj = event.k[j];
        let level = &mut levels[labels[j].0];
        let d = level.d;
        groups.push(GroupRanges {
            orbit: j,
            minus: IterRange {
                from: 1,
                to: kj - 1,
            },
            zero: kj,
            plus: IterRange {
                from: kj + 1,
                to: k_ceiling,
            },
        });
        let alternating = match classify_orbit(&o.path, 1) {
            Ok(c) => Some(c.alternating),
            Err(Error::ClassificationUndefined(_)) => None,
            Err(e) => return Err(e),
        };
        let ev = IndexEvaluator::new(&o.path);
        for k in 1..=k_ceiling {
            let (mm, mp, nondeg) = ev.mu_pm_nondegenerate(k)?;
            let bad = nondeg && alternating == Some(true) && k % 2 == 0;
            let who = || format!("{}^{k}", system.label(j));
            match k.cmp(&kj) {
                Ordering::Less => {
                    if minus_bad.is_none() && mp > d - 2 {
                        minus_bad = Some(format!("{}: mu+={mp} > d-2={}", who(), d - 2));
                    }
                    if spot_bad.is_none() && !bad && mp > d - n {
                        spot_bad = Some(format!("{}: degree bound {mp} > d-n={}", who(), d - n));
                    }
                }
                Ordering::Greater => {
                    if plus_bad.is_none() && mm < d + n + 1 {
                        plus_bad = Some(format!("{}: mu-={mm} < d+n+1={}", who(), d + n + 1));
                    }
                }
                Ordering::Equal => {
                    if zero_bad.is_none() && (mm < level.interval.0 || mp > level.interval.1) {
                        zero_bad = Some(format!(
                            "{}: [mu-, mu+]=[{mm}, {mp}] outside [{}, {}]",
                            who(),
                            level.interval.0,
                            level.interval.1
                        ));
                    }
                    if nondeg && !bad {
                        if let Some(slot) = level.slots.iter_mut().find(|s| s.degree == mm) {
                            slot.filled_by.push((j, k));
                            if all_even && alt_bad.is_none() && alternating != Some(false) {
                                alt_bad = Some(format!(
                                    "{} fills slot {mm} but its prime is not non-alternating",
                                    who()
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    let mut filled_slots = 0;
    let mut unfilled = Vec::new();
    let mut primes = std::collections::BTreeSet::new();
    for l in &levels {
        for s in &l.slots {
            if s.filled_by.is_empty() {
                unfilled.push(s.degree);
            } else {
                filled_slots += 1;
                primes.extend(s.filled_by.iter().map(|(j, _)| *j));
            }
        }
    }
    let total_slots: usize = levels.iter().map(|l| l.slots.len()).sum();
    let distinct_primes = primes.len();

    let mut checks = vec![
        check(
            "partition",
            None,
            format!(
                "{} orbits split at their event iterates over 1..={k_ceiling}",
                system.len()
            ),
        ),
        check(
            "gamma-minus",
            minus_bad,
            "every lower iterate has mu+ <= d-2".into(),
        ),
        check(
            "gamma-zero",
            zero_bad,
            "every event iterate lies in the window".into(),
        ),
        check(
            "gamma-plus",
            plus_bad,
            format!("every upper iterate has mu- >= d+{}", n + 1),
        ),
        check(
            "spot",
            spot_bad,
            format!("no visible lower iterate reaches degree d-{}", n - 1),
        ),
        check(
            "slots-filled",
            (!unfilled.is_empty()).then(|| format!("unfilled slots {unfilled:?}")),
            format!("{filled_slots} of {total_slots} slots filled"),
        ),
        check(
            "non-alternating",
            alt_bad,
            if all_even {
                "every slot is filled by a non-alternating prime".into()
            } else {
                "not applicable to odd event iterates".into()
            },
        ),
    ];
    if system.len() as i64 == n {
        checks.push(check(
            "exact-count",
            (distinct_primes as i64 != n)
                .then(|| format!("{distinct_primes} distinct primes fill slots, expected {n}")),
            format!("{n} distinct primes"),
        ));
    }

    let mut p = 1u64;
    for o in system.orbits() {
        p = num_integer::lcm(p, o.path.root_of_unity_lcm());
    }
    let mut x0 = 0;
    for (j, o) in system.orbits().iter().enumerate() {
        if o.action.lt(&system.orbits()[x0].action)? {
            x0 = j;
        }
    }
    let a0 = &system.orbits()[x0].action;
    let mut s = Vec::with_capacity(system.len());
    let mut big_n = 2u64
        .checked_mul(p)
        .ok_or_else(|| Error::Overflow("N".into()))?;
    for (j, o) in system.orbits().iter().enumerate() {
        let sj = if j == x0 {
            0
        } else {
            let q = a0.checked_div(&o.action)?.floor()?;
            u64::try_from(q).map_err(|_| Error::Overflow("s_j".into()))?
        };
        if j != x0 {
            big_n = big_n
                .checked_mul(factorial(sj)?)
                .ok_or_else(|| Error::Overflow("N".into()))?;
        }
        s.push(sj);
    }
    let n_divides_event =
        event.k.iter().all(|k| k % big_n == 0) && event.d.iter().all(|d| d % 2 == 0);
    let passed = checks.iter().all(|c| c.holds);
    Ok(AuditReport {
        event: event.clone(),
        n,
        k_ceiling,
        groups,
        levels,
        filled_slots,
        distinct_primes,
        p,
        s,
        big_n,
        n_divides_event,
        checks,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexDiscrepancy {
    pub k: u64,
    pub system: (i64, i64),
    pub ellipsoid: (i64, i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitComparison {
    pub label: String,
    pub delta: ExactReal,
    pub mean_index_system: ExactReal,
    pub mean_index_ellipsoid: ExactReal,
    pub first_index_discrepancy: Option<IndexDiscrepancy>,
    /// Rotation numbers mod 1, sorted.
    pub rotations_system: Vec<ExactReal>,
    pub rotations_ellipsoid: Vec<ExactReal>,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub deltas: Vec<ExactReal>,
    pub reciprocal_sum: ExactReal,
    pub k_max: u64,
    pub orbits: Vec<OrbitComparison>,
    pub passed: bool,
}

fn rotations_mod_one(path: &BlockPath) -> Result<Vec<ExactReal>> {
    let mut v = Vec::new();
    for l in path.rotation_numbers() {
        v.push(l.frac()?);
    }
    crate::exact::sort_exact(&mut v)?;
    Ok(v)
}

/// Pairs `±deltas[j]/deltas[i]`, `i != j`, that agree mod 1.
pub fn resonances(deltas: &[ExactReal]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (j, dj) in deltas.iter().enumerate() {
        let mut vals: Vec<(String, ExactReal)> = Vec::new();
        for (i, di) in deltas.iter().enumerate() {
            if i != j {
                let r = dj.checked_div(di)?;
                vals.push((format!("+{r}"), r.clone()));
                vals.push((format!("-{r}"), -r));
            }
        }
        for a in 0..vals.len() {
            for b in a + 1..vals.len() {
                if (&vals[a].1 - &vals[b].1).is_integer()? {
                    out.push(format!(
                        "orbit {}: {} = {} mod 1",
                        j + 1,
                        vals[a].0,
                        vals[b].0
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Compares a system with exactly `n` primes, scaled so that action equals
/// mean index, against the ellipsoid with the same mean indices.
pub fn ellipsoid_comparison(system: &OrbitSystem, k_max: u64) -> Result<ComparisonReport> {
    let n = ambient_n(system);
    if system.len() as i64 != n {
        return Err(Error::HypothesisViolation(format!(
            "{} primes in ambient dimension {}",
            system.len(),
            2 * n
        )));
    }
    let mut order: Vec<usize> = (0..system.len()).collect();
    let means: Vec<ExactReal> = system
        .orbits()
        .iter()
        .map(|o| mean_index(&o.path))
        .collect();
    for (j, o) in system.orbits().iter().enumerate() {
        if o.path.half_dim() as i64 != n - 1 {
            return Err(Error::HypothesisViolation(format!(
                "{} has the wrong dimension",
                system.label(j)
            )));
        }
        if o.action != means[j] {
            return Err(Error::HypothesisViolation(format!(
                "{} has action {} but mean index {}",
                system.label(j),
                o.action,
                means[j]
            )));
        }
    }
    let mut err = None;
    order.sort_by(|a, b| {
        means[*a].cmp_exact(&means[*b]).unwrap_or_else(|e| {
            err.get_or_insert(e);
            Ordering::Equal
        })
    });
    if let Some(e) = err {
        return Err(e);
    }
    let deltas: Vec<ExactReal> = order.iter().map(|j| means[*j].clone()).collect();
    let res = resonances(&deltas)?;
    if !res.is_empty() {
        return Err(Error::NonResonanceFailed(res.join("; ")));
    }
    let model = ellipsoid_system(&deltas)?;
    let mut reciprocal_sum = ExactReal::zero();
    for d in &deltas {
        reciprocal_sum = reciprocal_sum + d.recip()?;
    }
    let mut orbits = Vec::with_capacity(n as usize);
    for (pos, j) in order.iter().enumerate() {
        let x = &system.orbits()[*j].path;
        let y = &model.orbits()[pos].path;
        let mean_index_ellipsoid = mean_index(y);
        let mut first_index_discrepancy = None;
        let (ex, ey) = (IndexEvaluator::new(x), IndexEvaluator::new(y));
        for k in 1..=k_max {
            let a = ex.mu_pm(k)?;
            let b = ey.mu_pm(k)?;
            if a != b || a.0 != a.1 {
                first_index_discrepancy = Some(IndexDiscrepancy {
                    k,
                    system: a,
                    ellipsoid: b,
                });
                break;
            }
        }
        let rotations_system = rotations_mod_one(x)?;
        let rotations_ellipsoid = rotations_mod_one(y)?;
        let equal = first_index_discrepancy.is_none()
            && means[*j] == mean_index_ellipsoid
            && rotations_system == rotations_ellipsoid;
        orbits.push(OrbitComparison {
            label: system.label(*j),
            delta: deltas[pos].clone(),
            mean_index_system: means[*j].clone(),
            mean_index_ellipsoid,
            first_index_discrepancy,
            rotations_system,
            rotations_ellipsoid,
            equal,
        });
    }
    Ok(ComparisonReport {
        deltas,
        reciprocal_sum,
        k_max,
        passed: orbits.iter().all(|o| o.equal),
        orbits,
    })
}
