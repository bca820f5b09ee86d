//! Exact arithmetic in the ring of `D`-th cyclotomic integers.
//!
//! Elements are stored as coefficient vectors of length `phi(D)` in the
//! power basis `1, zeta, ..., zeta^(phi(D)-1)`, reduced modulo the cyclotomic
//! polynomial `Phi_D`. Reducing modulo `Phi_D` rather than `X^D - 1` keeps the
//! representation canonical, so equality and zero tests are exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("cyclotomic operands have different moduli ({0} vs {1})")]
    ModulusMismatch(u32, u32),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("index {value} out of range 0..{d}")]
    OutOfRange { value: u64, d: u32 },
    #[error("element is not rational")]
    NotRational,
}

/// Dense integer polynomial, lowest degree first.
pub type IntPoly = Vec<BigInt>;

fn trim(p: &mut IntPoly) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    if a.is_empty() || b.is_empty() {
        return vec![BigInt::zero()];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder of `num` by a monic `den`.
fn poly_divrem_monic(num: &[BigInt], den: &[BigInt]) -> (IntPoly, IntPoly) {
    debug_assert!(den.last().is_some_and(One::is_one));
    let dd = den.len() - 1;
    let mut rem: IntPoly = num.to_vec();
    if rem.len() <= dd {
        rem.resize(dd.max(1), BigInt::zero());
        return (vec![BigInt::zero()], rem);
    }
    let mut quot = vec![BigInt::zero(); rem.len() - dd];
    for top in (dd..rem.len()).rev() {
        let c = std::mem::take(&mut rem[top]);
        if c.is_zero() {
            continue;
        }
        for (k, dk) in den[..dd].iter().enumerate() {
            rem[top - dd + k] -= &c * dk;
        }
        quot[top - dd] = c;
    }
    rem.truncate(dd.max(1));
    trim(&mut quot);
    (quot, rem)
}

/// The `D`-th cyclotomic polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicPoly {
    d: u32,
    coeffs: IntPoly,
}

impl CyclotomicPoly {
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Coefficients, lowest degree first; the polynomial is monic.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

fn divisors(d: u32) -> Vec<u32> {
    (1..=d).filter(|k| d.is_multiple_of(*k)).collect()
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<CyclotomicPoly>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<CyclotomicPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cyclotomic_shared(d: u32) -> Arc<CyclotomicPoly> {
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&d) {
        return p.clone();
    }
    // Phi_D = (X^D - 1) / prod_{k | D, k < D} Phi_k
    let mut num = vec![BigInt::zero(); d as usize + 1];
    num[0] = -BigInt::one();
    num[d as usize] = BigInt::one();
    let mut den: IntPoly = vec![BigInt::one()];
    for k in divisors(d).into_iter().filter(|&k| k < d) {
        den = poly_mul(&den, &cyclotomic_shared(k).coeffs);
    }
    let (quot, rem) = poly_divrem_monic(&num, &den);
    debug_assert!(rem.iter().all(Zero::is_zero), "Phi_{d} division must be exact");
    let poly = Arc::new(CyclotomicPoly { d, coeffs: quot });
    cyclotomic_cache().lock().unwrap().insert(d, poly.clone());
    poly
}

/// Computes `Phi_D` by exact division of `X^D - 1` by the lower cyclotomic
/// polynomials.
pub fn cyclotomic_poly(d: u32) -> Result<CyclotomicPoly, ExactError> {
    if d == 0 {
        return Err(ExactError::ZeroModulus);
    }
    Ok((*cyclotomic_shared(d)).clone())
}

/// Euler's totient, the degree of `Phi_D`.
pub fn totient(d: u32) -> usize {
    let mut n = d;
    let mut result = d;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result as usize
}

/// An element of `Z[zeta_D]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycElem {
    d: u32,
    coeffs: Vec<BigInt>,
}

impl CycElem {
    pub fn zero(d: u32) -> Self {
        CycElem { d, coeffs: vec![BigInt::zero(); totient(d)] }
    }

    pub fn from_int(d: u32, value: impl Into<BigInt>) -> Self {
        let mut e = Self::zero(d);
        e.coeffs[0] = value.into();
        e
    }

    pub fn one(d: u32) -> Self {
        Self::from_int(d, 1)
    }

    /// Reduces `sum_k poly[k] * zeta^k` modulo `Phi_D`. Any length is accepted.
    pub fn from_power_coeffs(d: u32, poly: &[BigInt]) -> Self {
        let phi = cyclotomic_shared(d);
        let (_, mut rem) = poly_divrem_monic(poly, &phi.coeffs);
        rem.resize(phi.degree(), BigInt::zero());
        CycElem { d, coeffs: rem }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Reduced coefficients, length `phi(D)`.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The integer value when every coefficient beyond the constant one vanishes.
    pub fn to_integer(&self) -> Option<BigInt> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn same_modulus(&self, other: &Self) -> Result<(), ExactError> {
        if self.d == other.d {
            Ok(())
        } else {
            Err(ExactError::ModulusMismatch(self.d, other.d))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ExactError> {
        self.same_modulus(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(CycElem { d: self.d, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.same_modulus(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(CycElem { d: self.d, coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.same_modulus(other)?;
        Ok(Self::from_power_coeffs(self.d, &poly_mul(&self.coeffs, &other.coeffs)))
    }

    /// Complex conjugation, `zeta -> zeta^-1`.
    pub fn conj(&self) -> Self {
        let d = self.d as usize;
        let mut poly = vec![BigInt::zero(); d];
        for (j, c) in self.coeffs.iter().enumerate() {
            poly[(d - j) % d] += c;
        }
        Self::from_power_coeffs(self.d, &poly)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        CycElem { d: self.d, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }
}

impl fmt::Debug for CycElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycElem[{}](", self.d)?;
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                _ => write!(f, "{c}*z^{j}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl Add for &CycElem {
    type Output = CycElem;
    fn add(self, rhs: &CycElem) -> CycElem {
        self.try_add(rhs).expect("cyclotomic operands must share D")
    }
}

impl Sub for &CycElem {
    type Output = CycElem;
    fn sub(self, rhs: &CycElem) -> CycElem {
        self.try_sub(rhs).expect("cyclotomic operands must share D")
    }
}

impl Mul for &CycElem {
    type Output = CycElem;
    fn mul(self, rhs: &CycElem) -> CycElem {
        self.try_mul(rhs).expect("cyclotomic operands must share D")
    }
}

impl Neg for &CycElem {
    type Output = CycElem;
    fn neg(self) -> CycElem {
        CycElem { d: self.d, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

/// `zeta_D^e`, with `e` taken modulo `D`.
pub fn zeta_pow(d: u32, e: i64) -> Result<CycElem, ExactError> {
    if d == 0 {
        return Err(ExactError::ZeroModulus);
    }
    let e = e.rem_euclid(d as i64) as usize;
    let mut poly = vec![BigInt::zero(); e + 1];
    poly[e] = BigInt::one();
    Ok(CycElem::from_power_coeffs(d, &poly))
}

pub fn cyc_add(a: &CycElem, b: &CycElem) -> Result<CycElem, ExactError> {
    a.try_add(b)
}

pub fn cyc_mul(a: &CycElem, b: &CycElem) -> Result<CycElem, ExactError> {
    a.try_mul(b)
}

pub fn cyc_conj(a: &CycElem) -> CycElem {
    a.conj()
}

/// The value `chi_j(a) = zeta_D^(j a)` of the `j`-th additive character.
pub fn character_value(d: u32, j: u32, a: u32) -> Result<CycElem, ExactError> {
    if d == 0 {
        return Err(ExactError::ZeroModulus);
    }
    for v in [j, a] {
        if v >= d {
            return Err(ExactError::OutOfRange { value: v as u64, d });
        }
    }
    zeta_pow(d, (j as i64 * a as i64) % d as i64)
}

/// `(1/D) sum_j chi_j(t)`, computed in the cyclotomic ring and then read back
/// as a rational.
pub fn orthogonality_sum(d: u32, t: u32) -> Result<BigRational, ExactError> {
    if d == 0 {
        return Err(ExactError::ZeroModulus);
    }
    let mut acc = CycElem::zero(d);
    for j in 0..d {
        acc = &acc + &character_value(d, j, t)?;
    }
    let sum = acc.to_integer().ok_or(ExactError::NotRational)?;
    Ok(BigRational::new(sum, BigInt::from(d)))
}

/// A cyclotomic integer divided by a power of `D`: `num / D^den_pow`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycFrac {
    pub num: CycElem,
    pub den_pow: u32,
}

impl CycFrac {
    pub fn to_rational(&self) -> Option<BigRational> {
        let num = self.num.to_integer()?;
        let den = BigInt::from(self.num.d()).pow(self.den_pow);
        Some(BigRational::new(num, den))
    }
}

/// Accumulates `sum_e weight[e] * zeta^e` over exponents `e in 0..D` with
/// machine-integer weights, reducing to the canonical basis once at the end.
#[derive(Debug, Clone)]
pub struct ZetaHistogram {
    weights: Vec<i128>,
}

impl ZetaHistogram {
    pub fn new(d: u32) -> Self {
        ZetaHistogram { weights: vec![0; d as usize] }
    }

    #[inline]
    pub fn add(&mut self, exponent: usize, weight: i128) {
        self.weights[exponent] += weight;
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0);
    }

    pub fn to_elem(&self) -> CycElem {
        let poly: Vec<BigInt> = self.weights.iter().map(|&w| BigInt::from(w)).collect();
        CycElem::from_power_coeffs(self.weights.len() as u32, &poly)
    }
}
