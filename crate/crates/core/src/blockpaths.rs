//! Symbolic paths in the universal cover of the symplectic group.
//!
//! A [`BlockPath`] is a loop shift `s` (a loop of mean index `2s`) followed by a
//! direct sum of elementary blocks.  Everything downstream only needs
//! conjugation-invariant data, so the model keeps rotation numbers, integer
//! indices of hyperbolic blocks and the normal form of degenerate shears.

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactReal;

/// Normal forms of the quadratic form attached to a totally degenerate block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum ShearForm {
    /// Identically zero form on `count` symplectic planes.
    Zero { count: u32 },
    /// Odd-dimensional form with two-dimensional kernel and zero signature.
    Q0 { d: u32 },
    /// Form with one-dimensional kernel and signature +1.
    #[serde(rename = "qplus")]
    QPlus { d: u32 },
    /// Form with one-dimensional kernel and signature -1.
    #[serde(rename = "qminus")]
    QMinus { d: u32 },
}

impl ShearForm {
    pub fn half_dim(&self) -> usize {
        match *self {
            ShearForm::Zero { count } => count as usize,
            ShearForm::Q0 { d } | ShearForm::QPlus { d } | ShearForm::QMinus { d } => d as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ShearForm::Zero { count } if count == 0 => {
                Err(Error::InvalidBlock("zero shear needs count >= 1".into()))
            }
            ShearForm::Q0 { d } if d == 0 || d % 2 == 0 => Err(Error::InvalidBlock(format!(
                "q0 shear needs odd d, got {d}"
            ))),
            ShearForm::QPlus { d } | ShearForm::QMinus { d } if d == 0 => {
                Err(Error::InvalidBlock("signed shear needs d >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ElementaryBlock {
    /// Rotation by `2*pi*lambda`; the sign of `lambda` records the Krein type.
    Rotation {
        lambda: ExactReal,
    },
    /// Hyperbolic block with integer index `h`; `neg` iff the eigenvalues are negative.
    Hyperbolic {
        h: i64,
        neg: bool,
    },
    Shear(ShearForm),
}

impl ElementaryBlock {
    pub fn rotation(lambda: ExactReal) -> Result<Self> {
        let b = ElementaryBlock::Rotation { lambda };
        b.validate()?;
        Ok(b)
    }

    pub fn hyperbolic(h: i64, neg: bool) -> Result<Self> {
        let b = ElementaryBlock::Hyperbolic { h, neg };
        b.validate()?;
        Ok(b)
    }

    pub fn shear(form: ShearForm) -> Result<Self> {
        form.validate()?;
        Ok(ElementaryBlock::Shear(form))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ElementaryBlock::Rotation { lambda } => {
                if lambda.is_integer()? {
                    return Err(Error::InvalidBlock(format!(
                        "rotation number {lambda} is an integer; use the loop shift"
                    )));
                }
                Ok(())
            }
            ElementaryBlock::Hyperbolic { h, neg } => {
                if (h.rem_euclid(2) == 1) != *neg {
                    return Err(Error::InvalidBlock(format!(
                        "hyperbolic index {h} must be odd exactly when eigenvalues are negative"
                    )));
                }
                Ok(())
            }
            ElementaryBlock::Shear(f) => f.validate(),
        }
    }

    pub fn half_dim(&self) -> usize {
        match self {
            ElementaryBlock::Rotation { .. } | ElementaryBlock::Hyperbolic { .. } => 1,
            ElementaryBlock::Shear(f) => f.half_dim(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawBlockPath {
    #[serde(rename = "loop", default)]
    loop_shift: i64,
    #[serde(default)]
    blocks: Vec<ElementaryBlock>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockPath", into = "RawBlockPath")]
pub struct BlockPath {
    loop_shift: i64,
    blocks: Vec<ElementaryBlock>,
}

impl TryFrom<RawBlockPath> for BlockPath {
    type Error = Error;
    fn try_from(r: RawBlockPath) -> Result<Self> {
        BlockPath::new(r.loop_shift, r.blocks)
    }
}

impl From<BlockPath> for RawBlockPath {
    fn from(p: BlockPath) -> Self {
        RawBlockPath {
            loop_shift: p.loop_shift,
            blocks: p.blocks,
        }
    }
}

/// Spectral data of the end-map of an iterate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenSummary {
    pub k: u64,
    /// Algebraic multiplicity of the eigenvalue 1.
    pub eigen_one: usize,
    pub nu0: usize,
    pub b0: usize,
    pub b_plus: usize,
    pub b_minus: usize,
    /// Number of planes on which the end-map is `-1`.
    pub minus_one: usize,
    /// Number of eigenvalues in the open interval `(-1, 0)`.
    pub negative_real: usize,
    /// Elliptic eigenvalues other than `1` and `-1`, as rotation numbers mod 1 with Krein sign.
    pub elliptic: Vec<EllipticEigen>,
    pub hyperbolic_positive: usize,
    pub hyperbolic_negative: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticEigen {
    pub rotation: ExactReal,
    pub krein: i8,
}

impl BlockPath {
    pub fn new(loop_shift: i64, blocks: Vec<ElementaryBlock>) -> Result<Self> {
        for b in &blocks {
            b.validate()?;
        }
        Ok(BlockPath { loop_shift, blocks })
    }

    pub fn empty() -> Self {
        BlockPath {
            loop_shift: 0,
            blocks: Vec::new(),
        }
    }

    pub fn loop_only(s: i64) -> Self {
        BlockPath {
            loop_shift: s,
            blocks: Vec::new(),
        }
    }

    pub fn rotation(lambda: ExactReal) -> Result<Self> {
        Self::new(0, vec![ElementaryBlock::rotation(lambda)?])
    }

    pub fn hyperbolic(h: i64, neg: bool) -> Result<Self> {
        Self::new(0, vec![ElementaryBlock::hyperbolic(h, neg)?])
    }

    pub fn shear(form: ShearForm) -> Result<Self> {
        Self::new(0, vec![ElementaryBlock::shear(form)?])
    }

    pub fn loop_shift(&self) -> i64 {
        self.loop_shift
    }

    pub fn blocks(&self) -> &[ElementaryBlock] {
        &self.blocks
    }

    /// Half-dimension `m`.
    pub fn half_dim(&self) -> usize {
        self.blocks.iter().map(ElementaryBlock::half_dim).sum()
    }

    pub fn dimension(&self) -> usize {
        2 * self.half_dim()
    }

    pub fn with_loop_shift(&self, s: i64) -> Self {
        BlockPath {
            loop_shift: s,
            blocks: self.blocks.clone(),
        }
    }

    pub fn rotation_numbers(&self) -> impl Iterator<Item = &ExactReal> {
        self.blocks.iter().filter_map(|b| match b {
            ElementaryBlock::Rotation { lambda } => Some(lambda),
            _ => None,
        })
    }

    /// Degrees `q >= 2` of the roots of unity among the eigenvalues.
    pub fn root_of_unity_degrees(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .rotation_numbers()
            .filter_map(|l| l.as_rational())
            .filter_map(|q| q.denom().abs().to_u64())
            .filter(|q| *q >= 2)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Least common multiple of [`Self::root_of_unity_degrees`] (1 if none).
    pub fn root_of_unity_lcm(&self) -> u64 {
        self.root_of_unity_degrees()
            .iter()
            .fold(1u64, |a, q| a.lcm(q))
    }

    /// Only shears: every eigenvalue of the end-map equals 1.
    pub fn is_totally_degenerate(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| matches!(b, ElementaryBlock::Shear(_)))
    }

    /// The path with all shear blocks removed (same loop shift).
    pub fn nondegenerate_part(&self) -> Self {
        BlockPath {
            loop_shift: self.loop_shift,
            blocks: self
                .blocks
                .iter()
                .filter(|b| !matches!(b, ElementaryBlock::Shear(_)))
                .cloned()
                .collect(),
        }
    }

    /// The shear blocks alone, with zero loop shift.
    pub fn degenerate_part(&self) -> Self {
        BlockPath {
            loop_shift: 0,
            blocks: self
                .blocks
                .iter()
                .filter(|b| matches!(b, ElementaryBlock::Shear(_)))
                .cloned()
                .collect(),
        }
    }

    pub fn has_shear(&self) -> bool {
        self.blocks
            .iter()
            .any(|b| matches!(b, ElementaryBlock::Shear(_)))
    }

    /// The `k`-th iterate. A rotation whose iterated rotation number is an integer
    /// `j` becomes a loop shift by `j` plus an identity shear on its plane.
    pub fn iterate(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("iterate needs k >= 1".into()));
        }
        let ki = i64::try_from(k).map_err(|_| Error::Overflow(format!("iterate {k}")))?;
        let mut loop_shift = self
            .loop_shift
            .checked_mul(ki)
            .ok_or_else(|| Error::Overflow("loop shift".into()))?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            match b {
                ElementaryBlock::Rotation { lambda } => {
                    let kl = lambda.mul_int(ki);
                    if kl.is_integer()? {
                        loop_shift += kl.floor_i64()?;
                        blocks.push(ElementaryBlock::Shear(ShearForm::Zero { count: 1 }));
                    } else {
                        blocks.push(ElementaryBlock::Rotation { lambda: kl });
                    }
                }
                ElementaryBlock::Hyperbolic { h, neg } => {
                    blocks.push(ElementaryBlock::Hyperbolic {
                        h: h.checked_mul(ki)
                            .ok_or_else(|| Error::Overflow("hyperbolic index".into()))?,
                        neg: *neg && k % 2 == 1,
                    })
                }
                ElementaryBlock::Shear(f) => blocks.push(ElementaryBlock::Shear(*f)),
            }
        }
        Ok(BlockPath { loop_shift, blocks })
    }

    pub fn direct_sum(&self, other: &BlockPath) -> BlockPath {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        BlockPath {
            loop_shift: self.loop_shift + other.loop_shift,
            blocks,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

pub fn iterate(path: &BlockPath, k: u64) -> Result<BlockPath> {
    path.iterate(k)
}

pub fn direct_sum(p1: &BlockPath, p2: &BlockPath) -> BlockPath {
    p1.direct_sum(p2)
}

pub fn eigenvalue_summary(path: &BlockPath, k: u64) -> Result<EigenSummary> {
    let it = path.iterate(k)?;
    let mut s = EigenSummary {
        k,
        eigen_one: 0,
        nu0: 0,
        b0: 0,
        b_plus: 0,
        b_minus: 0,
        minus_one: 0,
        negative_real: 0,
        elliptic: Vec::new(),
        hyperbolic_positive: 0,
        hyperbolic_negative: 0,
    };
    let half = ExactReal::ratio(1, 2);
    for b in it.blocks() {
        match b {
            ElementaryBlock::Rotation { lambda } => {
                if (lambda - &half).is_integer()? {
                    s.minus_one += 1;
                } else {
                    s.elliptic.push(EllipticEigen {
                        rotation: lambda.frac()?,
                        krein: if lambda.is_positive()? { 1 } else { -1 },
                    });
                }
            }
            ElementaryBlock::Hyperbolic { neg, .. } => {
                if *neg {
                    s.hyperbolic_negative += 1;
                    s.negative_real += 1;
                } else {
                    s.hyperbolic_positive += 1;
                }
            }
            ElementaryBlock::Shear(f) => {
                s.eigen_one += 2 * f.half_dim();
                match f {
                    ShearForm::Zero { count } => s.nu0 += *count as usize,
                    ShearForm::Q0 { .. } => s.b0 += 1,
                    ShearForm::QPlus { .. } => s.b_plus += 1,
                    ShearForm::QMinus { .. } => s.b_minus += 1,
                }
            }
        }
    }
    Ok(s)
}

/// `k` is divisible by no degree of a root of unity among the eigenvalues.
pub fn is_admissible(path: &BlockPath, k: u64) -> bool {
    path.root_of_unity_degrees()
        .iter()
        .all(|q| !k.is_multiple_of(*q))
}
