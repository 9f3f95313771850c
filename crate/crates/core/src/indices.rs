//! Conley-Zehnder type invariants of block paths and their iterates.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::blockpaths::{BlockPath, ElementaryBlock, ShearForm};
use crate::error::{Error, Result};
use crate::exact::ExactReal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BetaInvariants {
    pub nu0: usize,
    pub b0: usize,
    pub b_plus: usize,
    pub b_minus: usize,
}

impl BetaInvariants {
    pub fn beta_plus(&self) -> usize {
        self.nu0 + self.b0 + self.b_plus
    }

    pub fn beta_minus(&self) -> usize {
        self.nu0 + self.b0 + self.b_minus
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexBundle {
    pub k: u64,
    pub mean_index: ExactReal,
    pub cz_index: Option<i64>,
    pub mu_minus: i64,
    pub mu_plus: i64,
    pub nu0: usize,
    pub b0: usize,
    pub b_plus: usize,
    pub b_minus: usize,
    pub beta_plus: usize,
    pub beta_minus: usize,
    pub half_dim: usize,
}

impl IndexBundle {
    pub fn is_degenerate(&self) -> bool {
        self.cz_index.is_none()
    }

    pub fn betas(&self) -> BetaInvariants {
        BetaInvariants {
            nu0: self.nu0,
            b0: self.b0,
            b_plus: self.b_plus,
            b_minus: self.b_minus,
        }
    }
}

pub fn mean_index(path: &BlockPath) -> ExactReal {
    let mut acc = ExactReal::integer(2 * path.loop_shift());
    for b in path.blocks() {
        match b {
            ElementaryBlock::Rotation { lambda } => acc = acc + lambda.mul_int(2),
            ElementaryBlock::Hyperbolic { h, .. } => acc = acc + ExactReal::integer(*h),
            ElementaryBlock::Shear(_) => {}
        }
    }
    acc
}

/// Per-iterate data of a path, computed blockwise without building the iterate.
struct Split {
    /// Index of the nondegenerate part plus the mean index of the totally degenerate part.
    base: i64,
    betas: BetaInvariants,
}

fn rotation_iterate(lambda: &ExactReal, k: i64) -> Result<Option<i64>> {
    // Some(j) when k*lambda = j is an integer, otherwise None.
    let integral = match lambda.as_rational() {
        Some(q) => (k * q.numer() % q.denom()) == 0.into(),
        // a nonzero multiple of an exact irrational is irrational
        None if !lambda.is_guarded() => false,
        None => lambda.mul_int(k).is_integer()?,
    };
    if integral {
        Ok(Some(lambda.scaled_floor(k)?))
    } else {
        Ok(None)
    }
}

/// A rotation number prepared for repeated evaluation at many iterates.
enum PreparedRotation {
    /// `p/q` in lowest terms with `q > 0`.
    Rational {
        p: i64,
        q: i64,
    },
    /// Exact irrational with a certified floating-point enclosure.
    Irrational {
        approx: f64,
        err: f64,
        value: ExactReal,
    },
    Other(ExactReal),
}

/// Evaluates [`mu_pm`] and related invariants of one path at many iterates,
/// preparing the blocks once.
pub struct IndexEvaluator {
    constant_per_k: i64,
    rotations: Vec<PreparedRotation>,
    shear_betas: BetaInvariants,
}

impl IndexEvaluator {
    pub fn new(path: &BlockPath) -> Self {
        let mut constant_per_k = 2 * path.loop_shift();
        let mut rotations = Vec::new();
        let mut shear_betas = BetaInvariants {
            nu0: 0,
            b0: 0,
            b_plus: 0,
            b_minus: 0,
        };
        for b in path.blocks() {
            match b {
                ElementaryBlock::Rotation { lambda } => {
                    let small = lambda
                        .as_rational()
                        .and_then(|q| Some((q.numer().to_i64()?, q.denom().to_i64()?)));
                    rotations.push(match (small, lambda.certified_approx()) {
                        (Some((p, q)), _) => PreparedRotation::Rational { p, q },
                        (None, Some((approx, err))) if !lambda.is_rational() => {
                            PreparedRotation::Irrational {
                                approx,
                                err,
                                value: lambda.clone(),
                            }
                        }
                        _ => PreparedRotation::Other(lambda.clone()),
                    });
                }
                ElementaryBlock::Hyperbolic { h, .. } => constant_per_k += h,
                ElementaryBlock::Shear(f) => match f {
                    ShearForm::Zero { count } => shear_betas.nu0 += *count as usize,
                    ShearForm::Q0 { .. } => shear_betas.b0 += 1,
                    ShearForm::QPlus { .. } => shear_betas.b_plus += 1,
                    ShearForm::QMinus { .. } => shear_betas.b_minus += 1,
                },
            }
        }
        IndexEvaluator {
            constant_per_k,
            rotations,
            shear_betas,
        }
    }

    fn split(&self, k: u64) -> Result<Split> {
        if k == 0 {
            return Err(Error::InvalidParams("iterate needs k >= 1".into()));
        }
        let ki = i64::try_from(k).map_err(|_| Error::Overflow(format!("iterate {k}")))?;
        let overflow = || Error::Overflow(format!("index of iterate {k}"));
        let mut base = self.constant_per_k.checked_mul(ki).ok_or_else(overflow)?;
        let mut betas = self.shear_betas.clone();
        for r in &self.rotations {
            // Some(j) when k*lambda = j is an integer; otherwise floor(k*lambda).
            let (fl, integral) = match r {
                PreparedRotation::Rational { p, q } => {
                    let n = i128::from(*p) * i128::from(ki);
                    let q = i128::from(*q);
                    let fl = i64::try_from(n.div_euclid(q)).map_err(|_| overflow())?;
                    (fl, n.rem_euclid(q) == 0)
                }
                PreparedRotation::Irrational { approx, err, value } => {
                    let fl = match crate::exact::certified_scaled_floor(*approx, *err, ki) {
                        Some(fl) => fl,
                        None => value.scaled_floor(ki)?,
                    };
                    (fl, false)
                }
                PreparedRotation::Other(lambda) => match rotation_iterate(lambda, ki)? {
                    Some(j) => (j, true),
                    None => (lambda.scaled_floor(ki)?, false),
                },
            };
            if integral {
                base += 2 * fl;
                betas.nu0 += 1;
            } else {
                // sign(x)(2 floor|x| + 1) equals 2 floor(x) + 1 for non-integral x.
                base += 2 * fl + 1;
            }
        }
        Ok(Split { base, betas })
    }

    pub fn mu_pm(&self, k: u64) -> Result<(i64, i64)> {
        let s = self.split(k)?;
        Ok((
            s.base - s.betas.beta_minus() as i64,
            s.base + s.betas.beta_plus() as i64,
        ))
    }

    /// `(mu-, mu+, nondegenerate)` of the `k`-th iterate.
    pub fn mu_pm_nondegenerate(&self, k: u64) -> Result<(i64, i64, bool)> {
        let s = self.split(k)?;
        Ok((
            s.base - s.betas.beta_minus() as i64,
            s.base + s.betas.beta_plus() as i64,
            is_nondegenerate(&s),
        ))
    }

    pub fn is_nondegenerate(&self, k: u64) -> Result<bool> {
        Ok(is_nondegenerate(&self.split(k)?))
    }

    pub fn beta_invariants(&self, k: u64) -> Result<BetaInvariants> {
        Ok(self.split(k)?.betas)
    }
}

fn split(path: &BlockPath, k: u64) -> Result<Split> {
    IndexEvaluator::new(path).split(k)
}

fn is_nondegenerate(s: &Split) -> bool {
    s.betas.beta_plus() == 0 && s.betas.beta_minus() == 0
}

/// All invariants of the `k`-th iterate.
pub fn index_bundle(path: &BlockPath, k: u64) -> Result<IndexBundle> {
    let s = split(path, k)?;
    let bp = s.betas.beta_plus();
    let bm = s.betas.beta_minus();
    Ok(IndexBundle {
        k,
        mean_index: mean_index(path).mul_int(k as i64),
        cz_index: is_nondegenerate(&s).then_some(s.base),
        mu_minus: s.base - bm as i64,
        mu_plus: s.base + bp as i64,
        nu0: s.betas.nu0,
        b0: s.betas.b0,
        b_plus: s.betas.b_plus,
        b_minus: s.betas.b_minus,
        beta_plus: bp,
        beta_minus: bm,
        half_dim: path.half_dim(),
    })
}

/// Conley-Zehnder index of a nondegenerate iterate.
pub fn cz_index(path: &BlockPath, k: u64) -> Result<i64> {
    let s = split(path, k)?;
    if !is_nondegenerate(&s) {
        return Err(Error::DegenerateIterate { k });
    }
    Ok(s.base)
}

/// Lower and upper semicontinuous extensions `(mu-, mu+)` of the `k`-th iterate.
pub fn mu_pm(path: &BlockPath, k: u64) -> Result<(i64, i64)> {
    let s = split(path, k)?;
    Ok((
        s.base - s.betas.beta_minus() as i64,
        s.base + s.betas.beta_plus() as i64,
    ))
}

pub fn beta_invariants(path: &BlockPath, k: u64) -> Result<BetaInvariants> {
    Ok(split(path, k)?.betas)
}

pub fn is_nondegenerate_iterate(path: &BlockPath, k: u64) -> Result<bool> {
    Ok(is_nondegenerate(&split(path, k)?))
}

pub fn is_dynamically_convex(path: &BlockPath) -> Result<bool> {
    let (mm, _) = mu_pm(path, 1)?;
    Ok(mm >= path.half_dim() as i64 + 2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DcViolation {
    pub k: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DcReport {
    pub dynamically_convex: bool,
    pub k_max: u64,
    pub first_violation: Option<DcViolation>,
}

impl DcReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks the growth of `mu-` along iterates up to `k_max`.
pub fn dc_iteration_check(path: &BlockPath, k_max: u64) -> Result<DcReport> {
    let m = path.half_dim() as i64;
    let ev = IndexEvaluator::new(path);
    let (mu1, _) = ev.mu_pm(1)?;
    let dc = mu1 >= m + 2;
    let mut prev = mu1;
    let mut first_violation = None;
    for k in 1..=k_max {
        let cur = if k == 1 { mu1 } else { ev.mu_pm(k)?.0 };
        if k > 1 && cur < prev + (mu1 - m) {
            first_violation = Some(DcViolation {
                k,
                detail: format!("mu-(k)={cur} < mu-(k-1)={prev} + {}", mu1 - m),
            });
            break;
        }
        if dc && cur < 2 * k as i64 + m {
            first_violation = Some(DcViolation {
                k,
                detail: format!("mu-(k)={cur} < 2k+m={}", 2 * k as i64 + m),
            });
            break;
        }
        prev = cur;
    }
    Ok(DcReport {
        dynamically_convex: dc,
        k_max,
        first_violation,
    })
}
