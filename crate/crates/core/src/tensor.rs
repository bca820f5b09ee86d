//! The three-variable tensors `T(x, y, z)` whose slice rank bounds
//! sunflower-free families, their expansion into separable terms, the
//! grouping of those terms into slices, and exact pointwise verification.
//!
//! Binary setting: `T(x,y,z) = prod_i (2 - x_i - y_i - z_i)` on `{0,1}^n`.
//! Mod-D setting: `T(x,y,z) = prod_i ([a=b] + [b=c] + [a=c] - 1)` with
//! `(a, b, c) = (x_i, y_i, z_i)`, expanded through the additive characters
//! `chi_j(a) = zeta_D^(j a)` of `Z/DZ`.
//!
//! Points and factors are packed into `u64` codes. Binary: bit `i` is
//! coordinate `i`. Mod-D: base-`D` digits, coordinate `i` has weight `D^i`.
//! For a binary factor the code is the exponent set of a multilinear
//! monomial; for a mod-D factor digit `i` is the index of the character
//! applied to coordinate `i` (0 = trivial).

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds;
use crate::exactnum::ZetaHistogram;
use crate::setsys::{self, AnyFamily, BinaryFamily, DFamily, Family, Point, Setting};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mod-D tensors need D >= 3, got {0}")]
    AlphabetTooSmall(u32),
    #[error("coordinate {value} out of range for alphabet {alphabet}")]
    CoordinateOutOfRange { value: u32, alphabet: u32 },
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("coefficient overflow while expanding the product")]
    Overflow,
    #[error("no axis of term {0} meets the slice threshold")]
    NoAdmissibleAxis(String),
    #[error("operation not supported on {0}")]
    Unsupported(String),
    #[error("diagonal value at index {0} is zero")]
    ZeroDiagonal(usize),
    #[error("family is not sunflower-free: {} {} {}", .0[0], .0[1], .0[2])]
    NotSunflowerFree([String; 3]),
    #[error("tensor is not diagonal on the family: T({}, {}, {}) != 0", .0[0], .0[1], .0[2])]
    NotDiagonal([String; 3]),
    #[error("decomposition does not reconstruct the tensor at {0:?}")]
    DecompositionMismatch([u64; 3]),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Caps on the sizes the tensor code is willing to materialise.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_binary_n: usize,
    /// Upper bound on the number of separable terms in a mod-D expansion.
    pub max_terms: u64,
    /// Upper bound on points visited by exhaustive verification.
    pub max_points: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_binary_n: 10, max_terms: 1 << 25, max_points: 1 << 21 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two remaining axes, in order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Domain of each of the three tensor variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Binary { n: usize },
    ModD { n: usize, d: u32 },
    /// An abstract finite index set `{0, ..., size-1}` with indicator factors.
    Indicator { size: usize },
}

impl Space {
    pub fn for_setting(setting: Setting, n: usize) -> Result<Space> {
        match setting {
            Setting::Binary => Ok(Space::Binary { n }),
            Setting::ModD(d) if d >= 3 => Ok(Space::ModD { n, d }),
            Setting::ModD(d) => Err(TensorError::AlphabetTooSmall(d)),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Space::Binary { n } | Space::ModD { n, .. } => n,
            Space::Indicator { .. } => 1,
        }
    }

    /// Number of values of one variable, if it fits in a `u64`.
    pub fn axis_size(&self) -> Option<u64> {
        match *self {
            Space::Binary { n } => 1u64.checked_shl(n as u32).filter(|_| n < 64),
            Space::ModD { n, d } => (d as u64).checked_pow(n as u32),
            Space::Indicator { size } => Some(size as u64),
        }
    }

    fn zeta_modulus(&self) -> Option<u32> {
        match *self {
            Space::ModD { d, .. } => Some(d),
            _ => None,
        }
    }

    /// Slice-factor size: monomial degree (binary) or number of nontrivial
    /// characters (mod-D).
    pub fn measure(&self, factor: u64) -> u32 {
        match *self {
            Space::Binary { .. } => factor.count_ones(),
            Space::ModD { n, d } => digits(factor, n, d).filter(|&c| c != 0).count() as u32,
            Space::Indicator { .. } => 0,
        }
    }

    /// Largest admissible slice-factor measure: `floor(n/3)` for binary,
    /// `floor(2n/3)` for mod-D.
    pub fn threshold(&self) -> u32 {
        match *self {
            Space::Binary { n } => (n / 3) as u32,
            Space::ModD { n, .. } => (2 * n / 3) as u32,
            Space::Indicator { .. } => 0,
        }
    }

    pub fn encode(&self, coords: &[u32]) -> Result<u64> {
        let (n, alphabet) = match *self {
            Space::Binary { n } => (n, 2),
            Space::ModD { n, d } => (n, d),
            Space::Indicator { size } => (1, size as u32),
        };
        if coords.len() != n {
            return Err(TensorError::DimensionMismatch { expected: n, got: coords.len() });
        }
        if let Some(&value) = coords.iter().find(|&&c| c >= alphabet) {
            return Err(TensorError::CoordinateOutOfRange { value, alphabet });
        }
        Ok(match *self {
            Space::Binary { .. } => coords.iter().enumerate().fold(0, |acc, (i, &c)| acc | (c as u64) << i),
            Space::ModD { d, .. } => coords.iter().rev().fold(0, |acc, &c| acc * d as u64 + c as u64),
            Space::Indicator { .. } => coords[0] as u64,
        })
    }

    pub fn decode(&self, code: u64) -> Vec<u32> {
        match *self {
            Space::Binary { n } => (0..n).map(|i| (code >> i & 1) as u32).collect(),
            Space::ModD { n, d } => digits(code, n, d).collect(),
            Space::Indicator { .. } => vec![code as u32],
        }
    }

    /// Exact value of `T` at packed points.
    pub fn eval_t_packed(&self, x: u64, y: u64, z: u64) -> i128 {
        let (xs, ys, zs) = (self.decode(x), self.decode(y), self.decode(z));
        match *self {
            Space::Binary { .. } => binary_t(&xs, &ys, &zs),
            Space::ModD { .. } => mod_d_t(&xs, &ys, &zs),
            Space::Indicator { .. } => panic!("indicator spaces carry no product tensor"),
        }
    }
}

fn digits(code: u64, n: usize, d: u32) -> impl Iterator<Item = u32> {
    let d = d as u64;
    let mut rest = code;
    (0..n).map(move |_| {
        let c = rest % d;
        rest /= d;
        c as u32
    })
}

fn binary_t(x: &[u32], y: &[u32], z: &[u32]) -> i128 {
    x.iter().zip(y).zip(z).map(|((&a, &b), &c)| 2 - (a + b + c) as i128).product()
}

fn mod_d_t(x: &[u32], y: &[u32], z: &[u32]) -> i128 {
    x.iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| (a == b) as i128 + (b == c) as i128 + (a == c) as i128 - 1)
        .product()
}

/// Evaluates `T` directly from its product formula.
pub fn eval_t(setting: Setting, x: &[u32], y: &[u32], z: &[u32]) -> Result<i128> {
    let alphabet = match setting {
        Setting::Binary => 2,
        Setting::ModD(d) if d >= 3 => d,
        Setting::ModD(d) => return Err(TensorError::AlphabetTooSmall(d)),
    };
    for v in [y, z] {
        if v.len() != x.len() {
            return Err(TensorError::DimensionMismatch { expected: x.len(), got: v.len() });
        }
    }
    if let Some(&value) = x.iter().chain(y).chain(z).find(|&&c| c >= alphabet) {
        return Err(TensorError::CoordinateOutOfRange { value, alphabet });
    }
    Ok(match setting {
        Setting::Binary => binary_t(x, y, z),
        Setting::ModD(_) => mod_d_t(x, y, z),
    })
}

pub fn eval_t_points<P: Point>(setting: Setting, x: &P, y: &P, z: &P) -> Result<i128> {
    eval_t(setting, &x.coords(), &y.coords(), &z.coords())
}

/// One point decoded for fast factor evaluation.
struct Decoded {
    codes: [u64; 3],
    digits: [Vec<u32>; 3],
}

impl Decoded {
    fn new(space: &Space, codes: [u64; 3]) -> Self {
        let digits = match space {
            Space::ModD { .. } => codes.map(|c| space.decode(c)),
            _ => [vec![], vec![], vec![]],
        };
        Decoded { codes, digits }
    }
}

/// Running sum of term values at one point.
enum Accum {
    Int(i128),
    Zeta(ZetaHistogram),
}

impl Accum {
    fn new(space: &Space) -> Self {
        match space.zeta_modulus() {
            Some(d) => Accum::Zeta(ZetaHistogram::new(d)),
            None => Accum::Int(0),
        }
    }

    fn into_value(self, den_pow: u32, d: Option<u32>) -> Option<BigRational> {
        let (num, d) = match self {
            Accum::Int(v) => (BigInt::from(v), d.unwrap_or(1)),
            Accum::Zeta(h) => (h.to_elem().to_integer()?, d.expect("zeta sums carry a modulus")),
        };
        Some(BigRational::new(num, BigInt::from(d).pow(den_pow)))
    }
}

/// Value of one single-variable factor at a point: `None` when the factor
/// vanishes, otherwise the exponent of `zeta` (always 0 outside mod-D).
#[inline]
fn factor_at(space: &Space, factor: u64, point: &Decoded, axis: usize) -> Option<u64> {
    match *space {
        Space::Binary { .. } => (point.codes[axis] & factor == factor).then_some(0),
        Space::Indicator { .. } => (point.codes[axis] == factor).then_some(0),
        Space::ModD { n, d } => {
            let mut f = factor;
            let mut e = 0u64;
            for &v in &point.digits[axis][..n] {
                e += (f % d as u64) * v as u64;
                f /= d as u64;
            }
            Some(e % d as u64)
        }
    }
}

#[inline]
fn accumulate(acc: &mut Accum, d: Option<u32>, exponent: u64, coeff: i64) {
    match acc {
        Accum::Int(v) => *v += coeff as i128,
        Accum::Zeta(h) => h.add((exponent % d.unwrap() as u64) as usize, coeff as i128),
    }
}

/// `coeff / D^den_pow * fx(x) fy(y) fz(z)`, the denominator being shared by
/// the whole [`TermSum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparableTerm {
    pub coeff: i64,
    pub factors: [u64; 3],
}

/// A tensor written as a sum of separable terms with distinct factor triples.
#[derive(Debug, Clone)]
pub struct TermSum {
    space: Space,
    den_pow: u32,
    terms: Vec<SeparableTerm>,
}

impl TermSum {
    pub fn space(&self) -> Space {
        self.space
    }

    /// Coefficients are divided by `D^den_pow` (mod-D) and are integers otherwise.
    pub fn den_pow(&self) -> u32 {
        self.den_pow
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact value at packed points; `None` if the character sum is not rational.
    pub fn evaluate(&self, x: u64, y: u64, z: u64) -> Option<BigRational> {
        let point = Decoded::new(&self.space, [x, y, z]);
        let d = self.space.zeta_modulus();
        let mut acc = Accum::new(&self.space);
        'terms: for t in &self.terms {
            let mut e = 0;
            for a in 0..3 {
                match factor_at(&self.space, t.factors[a], &point, a) {
                    Some(x) => e += x,
                    None => continue 'terms,
                }
            }
            accumulate(&mut acc, d, e, t.coeff);
        }
        acc.into_value(self.den_pow, d)
    }

    /// Total nontrivial-character count (mod-D) or total degree (binary).
    pub fn total_measure(&self, term: &SeparableTerm) -> u32 {
        term.factors.iter().map(|&f| self.space.measure(f)).sum()
    }
}

/// Per-coordinate expansion of the product: `(coeff, [fx, fy, fz])`.
fn coordinate_options(space: &Space) -> Vec<(i64, [u64; 3])> {
    match *space {
        Space::Binary { .. } => vec![(2, [0, 0, 0]), (-1, [1, 0, 0]), (-1, [0, 1, 0]), (-1, [0, 0, 1])],
        Space::ModD { d, .. } => {
            let d = d as u64;
            let mut opts = Vec::with_capacity(3 * d as usize - 2);
            // All-trivial term: 3/D - 1, stored as (3 - D) over the shared D.
            if d != 3 {
                opts.push((3 - d as i64, [0, 0, 0]));
            }
            for j in 1..d {
                opts.push((1, [j, d - j, 0]));
                opts.push((1, [0, j, d - j]));
                opts.push((1, [j, 0, d - j]));
            }
            opts
        }
        Space::Indicator { .. } => unreachable!(),
    }
}

/// Expands `T` into separable terms.
pub fn build_term_sum(space: Space, limits: &Limits) -> Result<TermSum> {
    let (n, radix, den_pow) = match space {
        Space::Binary { n } => {
            if n > limits.max_binary_n || n > 63 {
                return Err(TensorError::ResourceCap(format!(
                    "binary expansion with n = {n} exceeds the cap n <= {}",
                    limits.max_binary_n
                )));
            }
            (n, 2u64, 0)
        }
        Space::ModD { n, d } => {
            if d < 3 {
                return Err(TensorError::AlphabetTooSmall(d));
            }
            if space.axis_size().is_none() {
                return Err(TensorError::ResourceCap(format!("D^n does not fit in 64 bits (D = {d}, n = {n})")));
            }
            (n, d as u64, n as u32)
        }
        Space::Indicator { .. } => return Err(TensorError::Unsupported("indicator spaces".into())),
    };
    let options = coordinate_options(&space);
    let count = (options.len() as u64).checked_pow(n as u32);
    if count.is_none_or(|c| c > limits.max_terms) {
        return Err(TensorError::ResourceCap(format!(
            "expansion has {}^{n} terms, above the cap {}",
            options.len(),
            limits.max_terms
        )));
    }

    let mut terms = vec![SeparableTerm { coeff: 1, factors: [0; 3] }];
    let mut weight = 1u64;
    for _ in 0..n {
        let mut next = Vec::with_capacity(terms.len() * options.len());
        for t in &terms {
            for &(c, f) in &options {
                let coeff = t.coeff.checked_mul(c).ok_or(TensorError::Overflow)?;
                let factors = [0, 1, 2].map(|a| t.factors[a] + f[a] * weight);
                next.push(SeparableTerm { coeff, factors });
            }
        }
        terms = next;
        weight = weight.wrapping_mul(radix);
    }
    Ok(TermSum { space, den_pow, terms })
}

/// One summand of a slice's residual: `coeff * f1(u) * f2(v)` on the two
/// axes other than the slice axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualTerm {
    pub coeff: i64,
    pub factors: [u64; 2],
}

/// `factor(axis variable) * residual(other two variables)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub axis: Axis,
    pub factor: u64,
    pub residual: Vec<ResidualTerm>,
}

/// What a decomposition claims to reconstruct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    /// The product tensor `T` of the space.
    ProductTensor,
    /// `T(a, b, c) = values[a]` if `a = b = c`, else 0.
    Diagonal(Vec<i64>),
}

#[derive(Debug, Clone)]
pub struct SliceDecomposition {
    space: Space,
    den_pow: u32,
    target: Target,
    slices: Vec<Slice>,
}

impl SliceDecomposition {
    /// Wraps an arbitrary claimed decomposition for verification.
    pub fn new(space: Space, den_pow: u32, target: Target, slices: Vec<Slice>) -> Self {
        SliceDecomposition { space, den_pow, target, slices }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn slices_mut(&mut self) -> &mut [Slice] {
        &mut self.slices
    }

    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    /// Largest factor measure over all slices.
    pub fn max_factor_measure(&self) -> u32 {
        self.slices.iter().map(|s| self.space.measure(s.factor)).max().unwrap_or(0)
    }

    pub fn target_value(&self, x: u64, y: u64, z: u64) -> BigRational {
        match &self.target {
            Target::ProductTensor => BigRational::from_integer(self.space.eval_t_packed(x, y, z).into()),
            Target::Diagonal(values) => {
                if x == y && y == z {
                    BigRational::from_integer(values[x as usize].into())
                } else {
                    BigRational::zero()
                }
            }
        }
    }

    /// Sum of all slices at packed points; `None` if not rational.
    pub fn evaluate(&self, x: u64, y: u64, z: u64) -> Option<BigRational> {
        let point = Decoded::new(&self.space, [x, y, z]);
        let d = self.space.zeta_modulus();
        let mut acc = Accum::new(&self.space);
        for s in &self.slices {
            let Some(e0) = factor_at(&self.space, s.factor, &point, s.axis.index()) else { continue };
            let [a1, a2] = s.axis.others();
            'residual: for r in &s.residual {
                let mut e = e0;
                for (f, a) in r.factors.iter().zip([a1, a2]) {
                    match factor_at(&self.space, *f, &point, a.index()) {
                        Some(x) => e += x,
                        None => continue 'residual,
                    }
                }
                accumulate(&mut acc, d, e, r.coeff);
            }
        }
        acc.into_value(self.den_pow, d)
    }

    fn matches_at(&self, p: [u64; 3]) -> bool {
        self.evaluate(p[0], p[1], p[2]).is_some_and(|v| v == self.target_value(p[0], p[1], p[2]))
    }
}

/// Picks the first axis (x, then y, then z) whose factor measure is within
/// the threshold.
pub fn choose_axis(space: &Space, factors: &[u64; 3]) -> Option<Axis> {
    let threshold = space.threshold();
    Axis::ALL.into_iter().find(|a| space.measure(factors[a.index()]) <= threshold)
}

/// Groups the terms into slices keyed by `(axis, factor)`.
pub fn decompose(ts: TermSum) -> Result<SliceDecomposition> {
    let space = ts.space;
    let mut index: HashMap<(Axis, u64), usize> = HashMap::new();
    let mut slices: Vec<Slice> = Vec::new();
    for t in ts.terms {
        let axis = choose_axis(&space, &t.factors).ok_or_else(|| {
            TensorError::NoAdmissibleAxis(format!("{:?} (coeff {})", t.factors, t.coeff))
        })?;
        let factor = t.factors[axis.index()];
        let [a1, a2] = axis.others();
        let residual = ResidualTerm { coeff: t.coeff, factors: [t.factors[a1.index()], t.factors[a2.index()]] };
        let slot = *index.entry((axis, factor)).or_insert_with(|| {
            slices.push(Slice { axis, factor, residual: Vec::new() });
            slices.len() - 1
        });
        slices[slot].residual.push(residual);
    }
    slices.sort_by_key(|s| (s.axis, s.factor));
    Ok(SliceDecomposition { space, den_pow: ts.den_pow, target: Target::ProductTensor, slices })
}

/// The `|A|`-slice decomposition `sum_a delta_a(x) * (c_a delta_a(y) delta_a(z))`
/// of a diagonal tensor.
pub fn diagonal_decomposition(values: &[i64]) -> Result<SliceDecomposition> {
    if let Some(pos) = values.iter().position(|&v| v == 0) {
        return Err(TensorError::ZeroDiagonal(pos));
    }
    let slices = values
        .iter()
        .enumerate()
        .map(|(a, &c)| Slice {
            axis: Axis::X,
            factor: a as u64,
            residual: vec![ResidualTerm { coeff: c, factors: [a as u64, a as u64] }],
        })
        .collect();
    Ok(SliceDecomposition {
        space: Space::Indicator { size: values.len() },
        den_pow: 0,
        target: Target::Diagonal(values.to_vec()),
        slices,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
    /// Exactly these points, in order.
    Points(Vec<[u64; 3]>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub ok: bool,
    pub checked: u64,
    /// First mismatch in enumeration order.
    pub witness: Option<[u64; 3]>,
}

/// Exact pointwise comparison of a decomposition with its target.
pub fn verify_decomposition(dec: &SliceDecomposition, mode: &VerifyMode, limits: &Limits) -> Result<VerifyOutcome> {
    let size = dec
        .space
        .axis_size()
        .ok_or_else(|| TensorError::ResourceCap("axis size overflows u64".into()))?;
    match mode {
        VerifyMode::Exhaustive => {
            let total = size
                .checked_pow(3)
                .filter(|&t| t <= limits.max_points)
                .ok_or_else(|| {
                    TensorError::ResourceCap(format!(
                        "exhaustive verification over {size}^3 points exceeds the cap {}",
                        limits.max_points
                    ))
                })?;
            let split = |i: u64| [i / (size * size), i / size % size, i % size];
            let witness = (0..total).into_par_iter().find_first(|&i| !dec.matches_at(split(i)));
            Ok(VerifyOutcome { ok: witness.is_none(), checked: total, witness: witness.map(split) })
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let points: Vec<[u64; 3]> = (0..*samples)
                .map(|_| [0; 3].map(|_: u64| if size == 0 { 0 } else { rng.gen_range(0..size) }))
                .collect();
            verify_points(dec, &points, size)
        }
        VerifyMode::Points(points) => verify_points(dec, points, size),
    }
}

fn verify_points(dec: &SliceDecomposition, points: &[[u64; 3]], size: u64) -> Result<VerifyOutcome> {
    if let Some(&bad) = points.iter().flatten().find(|&&c| c >= size) {
        return Err(TensorError::CoordinateOutOfRange { value: bad as u32, alphabet: size as u32 });
    }
    let witness = points.par_iter().find_first(|p| !dec.matches_at(**p)).copied();
    Ok(VerifyOutcome { ok: witness.is_none(), checked: points.len() as u64, witness })
}

/// Result of checking that `T` restricted to `F^3` is diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalVerdict<P> {
    pub ok: bool,
    /// First off-diagonal ordered triple with `T != 0` (or diagonal triple
    /// with `T = 0`), by member index.
    pub witness: Option<[P; 3]>,
    pub diagonal_values: Vec<i128>,
}

/// Checks all `|F|^3` ordered triples: `T != 0` exactly on `x = y = z`.
pub fn assert_diagonal<P: Point>(family: &Family<P>) -> Result<DiagonalVerdict<P>> {
    let setting = family.setting();
    if let Setting::ModD(d) = setting {
        if d < 3 {
            return Err(TensorError::AlphabetTooSmall(d));
        }
    }
    let coords: Vec<Vec<u32>> = family.members().iter().map(Point::coords).collect();
    let m = coords.len();
    let diagonal_values: Vec<i128> = (0..m)
        .map(|i| eval_t(setting, &coords[i], &coords[i], &coords[i]))
        .collect::<Result<_>>()?;
    let idx = (0..m * m * m).into_par_iter().find_first(|&t| {
        let (i, j, k) = (t / (m * m), t / m % m, t % m);
        let v = eval_t(setting, &coords[i], &coords[j], &coords[k]).expect("members validated");
        (i == j && j == k) == (v == 0)
    });
    let witness = idx.map(|t| {
        let ms = family.members();
        [ms[t / (m * m)].clone(), ms[t / m % m].clone(), ms[t % m].clone()]
    });
    Ok(DiagonalVerdict { ok: witness.is_none(), witness, diagonal_values })
}

/// How a certificate's decomposition was checked.
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub limits: Limits,
    /// Also verify on the full domain when `points * terms` is at most this.
    pub exhaustive_work_cap: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { limits: Limits::default(), exhaustive_work_cap: 1 << 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCertificate {
    pub weight: usize,
    pub size: usize,
    pub slice_count: String,
    pub closed_form_bound: String,
}

/// Machine-checkable record behind `|A| <= slice count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub setting: String,
    pub n: usize,
    #[serde(rename = "D")]
    pub d: Option<u32>,
    pub family: String,
    pub family_size: usize,
    pub diagonal_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_witness: Option<[String; 3]>,
    pub slice_count: String,
    pub closed_form_bound: String,
    pub conclusion: String,
    pub lemma: String,
    /// Per weight layer (binary setting only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<LayerCertificate>,
    pub verification: String,
}

impl BoundCertificate {
    pub fn slice_count_int(&self) -> BigUint {
        self.slice_count.parse().expect("decimal slice count")
    }

    pub fn closed_form_int(&self) -> BigUint {
        self.closed_form_bound.parse().expect("decimal bound")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

pub const LEMMA_TAG: &str = "diagonal-slice-rank";

fn to_strings<P: Point>(t: &[P; 3]) -> [String; 3] {
    [t[0].to_string(), t[1].to_string(), t[2].to_string()]
}

/// Builds and verifies the decomposition for `space`, checking it on every
/// point of `domains` and, when cheap enough, on the whole space.
fn verified_decomposition(
    space: Space,
    domains: &[Vec<u64>],
    opts: &CertifyOptions,
) -> Result<(SliceDecomposition, String)> {
    let ts = build_term_sum(space, &opts.limits)?;
    let terms = ts.len() as u64;
    let dec = decompose(ts)?;
    let mut how = Vec::new();
    for dom in domains {
        let points: Vec<[u64; 3]> = dom
            .iter()
            .flat_map(|&x| dom.iter().flat_map(move |&y| dom.iter().map(move |&z| [x, y, z])))
            .collect();
        let out = verify_decomposition(&dec, &VerifyMode::Points(points), &opts.limits)?;
        if let Some(w) = out.witness {
            return Err(TensorError::DecompositionMismatch(w));
        }
    }
    how.push("restricted to family^3".to_string());
    let full = space.axis_size().and_then(|s| s.checked_pow(3));
    if let Some(points) = full.filter(|&p| p <= opts.limits.max_points && p.saturating_mul(terms) <= opts.exhaustive_work_cap) {
        let out = verify_decomposition(&dec, &VerifyMode::Exhaustive, &opts.limits)?;
        if let Some(w) = out.witness {
            return Err(TensorError::DecompositionMismatch(w));
        }
        how.push(format!("exhaustive over {points} points"));
    }
    Ok((dec, how.join("; ")))
}

pub fn certify_binary(family: &BinaryFamily, opts: &CertifyOptions) -> Result<BoundCertificate> {
    if let Some(w) = family.sunflower_witness() {
        return Err(TensorError::NotSunflowerFree(to_strings(&w)));
    }
    let space = Space::Binary { n: family.n() };
    let layers = setsys::layer_split(family);
    let mut domains = Vec::new();
    for layer in layers.values() {
        let verdict = assert_diagonal(layer)?;
        if let Some(w) = verdict.witness {
            return Err(TensorError::NotDiagonal(to_strings(&w)));
        }
        domains.push(layer.members().iter().map(|m| space.encode(&m.coords())).collect::<Result<Vec<_>>>()?);
    }
    let (dec, verification) = verified_decomposition(space, &domains, opts)?;
    let per_layer = BigUint::from(dec.slice_count());
    let per_layer_closed = bounds::per_layer_bound(family.n() as u64);
    let layer_certs: Vec<LayerCertificate> = layers
        .iter()
        .map(|(&weight, l)| LayerCertificate {
            weight,
            size: l.len(),
            slice_count: per_layer.to_string(),
            closed_form_bound: per_layer_closed.to_string(),
        })
        .collect();
    let total = &per_layer * BigUint::from(layers.len());
    Ok(BoundCertificate {
        setting: "binary".into(),
        n: family.n(),
        d: None,
        family: family.to_text(),
        family_size: family.len(),
        diagonal_ok: true,
        diagonal_witness: None,
        slice_count: total.to_string(),
        closed_form_bound: bounds::thm1_bound(family.n() as u64).to_string(),
        conclusion: format!(
            "|F| = {} <= {} = {} weight layers x {} slices",
            family.len(),
            total,
            layers.len(),
            per_layer
        ),
        lemma: LEMMA_TAG.into(),
        layers: layer_certs,
        verification,
    })
}

pub fn certify_mod_d(family: &DFamily, opts: &CertifyOptions) -> Result<BoundCertificate> {
    let d = family.d();
    let space = Space::for_setting(family.setting(), family.n())?;
    if let Some(w) = family.sunflower_witness() {
        return Err(TensorError::NotSunflowerFree(to_strings(&w)));
    }
    let verdict = assert_diagonal(family)?;
    if let Some(w) = verdict.witness {
        return Err(TensorError::NotDiagonal(to_strings(&w)));
    }
    let domain = family.members().iter().map(|m| space.encode(&m.coords())).collect::<Result<Vec<_>>>()?;
    let (dec, verification) = verified_decomposition(space, &[domain], opts)?;
    let count = dec.slice_count();
    Ok(BoundCertificate {
        setting: "mod-D".into(),
        n: family.n(),
        d: Some(d),
        family: family.to_text(),
        family_size: family.len(),
        diagonal_ok: true,
        diagonal_witness: None,
        slice_count: count.to_string(),
        closed_form_bound: bounds::thm2_counts(family.n() as u64, d).to_string(),
        conclusion: format!("|A| = {} <= {}", family.len(), count),
        lemma: LEMMA_TAG.into(),
        layers: Vec::new(),
        verification,
    })
}

/// Runs the full certificate pipeline: freeness, diagonality, verified
/// decomposition, and the slice-rank lemma as the trusted final step.
pub fn certify_family(family: &AnyFamily, opts: &CertifyOptions) -> Result<BoundCertificate> {
    match family {
        AnyFamily::Binary(f) => certify_binary(f, opts),
        AnyFamily::ModD(f) => certify_mod_d(f, opts),
    }
}
