//! Randomized test data: block paths, orbit systems, ellipsoids and filtered complexes.
//!
//! Every generator takes the random source explicitly so callers control seeding.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::blockpaths::{BlockPath, ElementaryBlock, ShearForm};
use crate::error::Result;
use crate::exact::ExactReal;
use crate::persistence::{BoundaryTerm, FilteredComplex, Generator};
use crate::recurrence::{Orbit, OrbitSystem};

const SQUARE_FREE: [u64; 10] = [2, 3, 5, 6, 7, 10, 11, 13, 14, 15];

fn small_rational<R: Rng + ?Sized>(rng: &mut R, num: i64, den: i64) -> BigRational {
    BigRational::new(
        BigInt::from(rng.gen_range(-num..=num)),
        BigInt::from(rng.gen_range(1..=den)),
    )
}

/// A quadratic irrational `a + b*sqrt(d)` with small coefficients and `b != 0`.
pub fn quadratic_irrational<R: Rng + ?Sized>(rng: &mut R) -> ExactReal {
    let d = *SQUARE_FREE.choose(rng).expect("nonempty");
    let a = small_rational(rng, 6, 4);
    let mut b = small_rational(rng, 3, 4);
    if b == BigRational::from_integer(0.into()) {
        b = BigRational::from_integer(1.into());
    }
    ExactReal::quadratic(a, b, d)
}

/// A non-integral rotation number: rational with small denominator or quadratic irrational.
pub fn rotation_number<R: Rng + ?Sized>(rng: &mut R) -> ExactReal {
    if rng.gen_bool(0.4) {
        let q = rng.gen_range(2..=12i64);
        let mut p = rng.gen_range(-3 * q..=3 * q);
        if p % q == 0 {
            p += 1;
        }
        ExactReal::ratio(p, q)
    } else {
        quadratic_irrational(rng)
    }
}

pub fn shear_form<R: Rng + ?Sized>(rng: &mut R, max_half_dim: u32) -> ShearForm {
    let max = max_half_dim.max(1);
    match rng.gen_range(0..4) {
        0 => ShearForm::Zero {
            count: rng.gen_range(1..=max.min(2)),
        },
        1 => ShearForm::Q0 { d: 1 },
        2 => ShearForm::QPlus {
            d: rng.gen_range(1..=max.min(2)),
        },
        _ => ShearForm::QMinus {
            d: rng.gen_range(1..=max.min(2)),
        },
    }
}

/// A random path of transverse half-dimension at most `max_half_dim`.
pub fn block_path<R: Rng + ?Sized>(rng: &mut R, max_half_dim: usize) -> Result<BlockPath> {
    let target = rng.gen_range(0..=max_half_dim);
    let mut blocks = Vec::new();
    let mut dim = 0;
    while dim < target {
        let room = (target - dim) as u32;
        let b = match rng.gen_range(0..10) {
            0..=4 => ElementaryBlock::rotation(rotation_number(rng))?,
            5..=6 => {
                let h = rng.gen_range(-3..=4i64);
                ElementaryBlock::hyperbolic(h, h.rem_euclid(2) == 1)?
            }
            _ => ElementaryBlock::shear(shear_form(rng, room))?,
        };
        dim += b.half_dim();
        blocks.push(b);
    }
    BlockPath::new(rng.gen_range(-2..=2), blocks)
}

/// A nondegenerate, dynamically convex path: one full loop plus rotations in `(0, 1)`.
pub fn dc_path<R: Rng + ?Sized>(rng: &mut R, half_dim: usize) -> Result<BlockPath> {
    let mut blocks = Vec::with_capacity(half_dim);
    for _ in 0..half_dim {
        let l = loop {
            let x = quadratic_irrational(rng);
            let f = x.frac()?;
            if !f.is_zero() {
                break f;
            }
        };
        blocks.push(ElementaryBlock::rotation(l)?);
    }
    BlockPath::new(1, blocks)
}

/// A system of `orbits` dynamically convex orbits with random positive actions.
pub fn dc_system<R: Rng + ?Sized>(
    rng: &mut R,
    orbits: usize,
    half_dim: usize,
) -> Result<OrbitSystem> {
    let mut out = Vec::with_capacity(orbits);
    for j in 0..orbits {
        out.push(Orbit {
            label: Some(format!("x{}", j + 1)),
            path: dc_path(rng, half_dim)?,
            action: ExactReal::ratio(rng.gen_range(4..=40), rng.gen_range(2..=8)),
        });
    }
    OrbitSystem::new(out)
}

/// Strictly increasing ellipsoid axes with pairwise irrational ratios: `1` and
/// rational multiples of `sqrt(d)` for distinct square-free `d > 1`.
pub fn ellipsoid_deltas<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Vec<ExactReal>> {
    let mut ds: Vec<u64> = SQUARE_FREE.to_vec();
    ds.shuffle(rng);
    let mut out = vec![ExactReal::one()];
    for d in ds.into_iter().take(n.saturating_sub(1)) {
        let c = ExactReal::ratio(rng.gen_range(2..=9), rng.gen_range(2..=6));
        out.push(c * ExactReal::sqrt(d));
    }
    crate::exact::sort_exact(&mut out)?;
    Ok(out)
}

/// Like [`ellipsoid_deltas`], but every ratio `Δj/Δi` with `i != j` keeps
/// distance at least `gap` from the integers.  Small gaps force tiny torus
/// tolerances and hence very long recurrence searches.
pub fn separated_ellipsoid_deltas<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    gap: &ExactReal,
) -> Result<Vec<ExactReal>> {
    'retry: loop {
        let deltas = ellipsoid_deltas(rng, n)?;
        for (i, a) in deltas.iter().enumerate() {
            for b in &deltas[i + 1..] {
                for r in [b.checked_div(a)?, a.checked_div(b)?] {
                    if r.dist_to_int()?.lt(gap)? {
                        continue 'retry;
                    }
                }
            }
        }
        return Ok(deltas);
    }
}

/// Ellipsoid axes `1` and `a + b*sqrt(d)` with small integers `a >= 0`,
/// `b >= 1` and one square-free `d` shared by all axes, every ratio kept at
/// distance `gap` from the integers.  All rotation numbers lie in one
/// quadratic field, so simultaneous returns are governed by a single
/// irrational and recurrence events appear at moderate iterates.
pub fn field_ellipsoid_deltas<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    gap: &ExactReal,
) -> Result<Vec<ExactReal>> {
    let span = n as i64 + 1;
    'retry: loop {
        let d = *SQUARE_FREE.choose(rng).expect("nonempty");
        let mut out = vec![ExactReal::one()];
        while out.len() < n {
            let a = BigRational::from_integer(rng.gen_range(0..=span).into());
            let b = BigRational::from_integer(rng.gen_range(1..=span / 2 + 1).into());
            out.push(ExactReal::quadratic(a, b, d));
        }
        crate::exact::sort_exact(&mut out)?;
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                let r = b.checked_div(a)?;
                if r.is_rational() {
                    continue 'retry;
                }
                for r in [r.clone(), r.recip()?] {
                    if r.dist_to_int()?.lt(gap)? {
                        continue 'retry;
                    }
                }
            }
        }
        return Ok(out);
    }
}

/// A filtered complex obtained from a direct sum of cycles and cancelling
/// pairs by filtration-compatible elementary changes of basis.
pub fn filtered_complex<R: Rng + ?Sized>(
    rng: &mut R,
    max_generators: usize,
    field: u64,
) -> FilteredComplex {
    let target = rng.gen_range(1..=max_generators.max(1));
    let mut deg: Vec<i64> = Vec::new();
    let mut filt: Vec<BigRational> = Vec::new();
    // boundary[i] = coefficients of the boundary of generator i
    let mut boundary: Vec<Vec<i64>> = Vec::new();
    let level = |rng: &mut R| {
        BigRational::new(
            BigInt::from(rng.gen_range(0..=12)),
            BigInt::from(rng.gen_range(1..=3)),
        )
    };
    while deg.len() < target {
        let m = rng.gen_range(0..=3i64);
        if deg.len() + 2 <= target && rng.gen_bool(0.6) {
            let lo = level(rng);
            let hi = &lo
                + BigRational::new(
                    BigInt::from(rng.gen_range(0..=6)),
                    BigInt::from(rng.gen_range(1..=2)),
                );
            let h = deg.len();
            deg.push(m);
            filt.push(lo);
            deg.push(m + 1);
            filt.push(hi);
            let mut col = vec![0; target];
            col[h] = *[1, 1, 1, 2, 3, -1].choose(rng).expect("nonempty");
            boundary.push(vec![0; target]);
            boundary.push(col);
        } else {
            deg.push(m);
            filt.push(level(rng));
            boundary.push(vec![0; target]);
        }
    }
    let n = deg.len();
    for _ in 0..rng.gen_range(0..=2 * n) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j || deg[i] != deg[j] || filt[j] > filt[i] {
            continue;
        }
        let c = *[1, -1, 2].choose(rng).expect("nonempty");
        // f_i = e_i + c e_j: column i gains c * column j, row j loses c * row i.
        let cj = boundary[j].clone();
        for (x, y) in boundary[i].iter_mut().zip(&cj) {
            *x += c * y;
        }
        for col in boundary.iter_mut() {
            let ri = col[i];
            col[j] -= c * ri;
        }
    }
    let generators = (0..n)
        .map(|i| Generator {
            id: format!("g{i}"),
            deg: deg[i],
            filt: ExactReal::rational(filt[i].clone()),
            boundary: boundary[i]
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0)
                .map(|(r, c)| BoundaryTerm {
                    id: format!("g{r}"),
                    coef: *c,
                })
                .collect(),
        })
        .collect();
    FilteredComplex { field, generators }
}
