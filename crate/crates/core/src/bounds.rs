//! Closed-form bounds and capacities, evaluated exactly where possible.
//!
//! Integer bounds are big integers. Irrational constants such as
//! `c_D = 3 / 2^(2/3) * (D - 1)^(2/3)` are kept as exact radicals
//! (`c_D = cbrt(27 (D-1)^2 / 4)`) and only turned into floats at the end.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Best known capset capacity bound, used as the default `C`.
pub const CAPSET_CAPACITY_DEFAULT: &str = "2.7552";

/// Best known lower bound on the sunflower-free capacity; quoted, not computed.
pub const MU3_LOWER_BOUND: f64 = 1.554;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `sum_{k <= limit} C(n, k) * base^k`.
pub fn weighted_binomial_sum(n: u64, limit: u64, base: u64) -> BigUint {
    let base = BigUint::from(base);
    let mut power = BigUint::one();
    let mut total = BigUint::zero();
    for k in 0..=limit.min(n) {
        total += binomial(n, k) * &power;
        power *= &base;
    }
    total
}

/// `3 * sum_{k <= n/3} C(n, k)`: slices needed for one weight layer.
pub fn per_layer_bound(n: u64) -> BigUint {
    weighted_binomial_sum(n, n / 3, 1) * 3u32
}

/// `3 (n + 1) * sum_{k <= n/3} C(n, k)`.
pub fn thm1_bound(n: u64) -> BigUint {
    per_layer_bound(n) * (n + 1)
}

/// `3 * sum_{k <= 2n/3} C(n, k) (D - 1)^k`, the slice count before amplification.
pub fn thm2_counts(n: u64, d: u32) -> BigUint {
    assert!(d >= 3, "the mod-D bound needs D >= 3");
    weighted_binomial_sum(n, 2 * n / 3, d as u64 - 1) * 3u32
}

/// Checks `sum_{k <= 2n/3} C(n,k) (D-1)^k <= c_D^n` exactly, in the cubed form
/// `lhs^3 * 4^n <= 27^n * (D-1)^(2n)`.
pub fn chain_inequality_check(n: u64, d: u32) -> bool {
    assert!(d >= 3, "the chain inequality needs D >= 3");
    let lhs = weighted_binomial_sum(n, 2 * n / 3, d as u64 - 1);
    let n32 = u32::try_from(n).expect("n fits in u32");
    let left = lhs.pow(3u32) * BigUint::from(4u32).pow(n32);
    let right = BigUint::from(27u32).pow(n32) * BigUint::from(d - 1).pow(2 * n32);
    left <= right
}

/// Checks `size <= 3 c_D^n` exactly: `size^3 * 4^n <= 27^(n+1) * (D-1)^(2n)`.
pub fn within_three_cd_pow(size: &BigUint, n: u64, d: u32) -> bool {
    let n32 = u32::try_from(n).expect("n fits in u32");
    let left = size.pow(3u32) * BigUint::from(4u32).pow(n32);
    let right = BigUint::from(27u32).pow(n32 + 1) * BigUint::from(d - 1).pow(2 * n32);
    left <= right
}

/// `m! (k - 1)^m`.
pub fn erdos_rado_bound(m: u64, k: u64) -> BigUint {
    assert!(k >= 2, "sunflowers have at least two petals");
    let mut fact = BigUint::one();
    for i in 2..=m {
        fact *= i;
    }
    fact * BigUint::from(k - 1).pow(u32::try_from(m).expect("m fits in u32"))
}

/// Exact value carried by a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactValue {
    Integer(BigInt),
    Rational(BigRational),
    /// The real `degree`-th root of a nonnegative rational.
    Root { radicand: BigRational, degree: u32 },
}

impl ExactValue {
    /// Collapses perfect powers: `cbrt(27) = 3`.
    pub fn simplify(self) -> ExactValue {
        match self {
            ExactValue::Root { radicand, degree } => {
                let num = radicand.numer().to_biguint().expect("nonnegative radicand");
                let den = radicand.denom().to_biguint().expect("positive denominator");
                let (rn, rd) = (num.nth_root(degree), den.nth_root(degree));
                if Pow::pow(&rn, degree) == num && Pow::pow(&rd, degree) == den {
                    ExactValue::Rational(BigRational::new(rn.into(), rd.into())).simplify()
                } else {
                    ExactValue::Root { radicand, degree }
                }
            }
            ExactValue::Rational(r) if r.is_integer() => ExactValue::Integer(r.to_integer()),
            other => other,
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            ExactValue::Integer(i) => Some(BigRational::from_integer(i.clone())),
            ExactValue::Rational(r) => Some(r.clone()),
            ExactValue::Root { .. } => match self.clone().simplify() {
                ExactValue::Root { .. } => None,
                other => other.as_rational(),
            },
        }
    }

    /// Decimal expansion truncated (not rounded) to `digits` places.
    pub fn truncated_decimal(&self, digits: u32) -> String {
        let scale = BigUint::from(10u32).pow(digits);
        let (negative, scaled) = match self {
            ExactValue::Integer(i) => (i.is_negative(), i.magnitude() * &scale),
            ExactValue::Rational(r) => {
                let m = r.numer().magnitude() * &scale / r.denom().magnitude();
                (r.is_negative(), m)
            }
            ExactValue::Root { radicand, degree } => {
                // floor(root(p/q) * 10^k) = floor(root(p * 10^(k*deg) / q))
                let p = radicand.numer().magnitude() * scale.pow(*degree);
                (false, (p / radicand.denom().magnitude()).nth_root(*degree))
            }
        };
        let s = scaled.to_str_radix(10);
        let digits = digits as usize;
        let s = format!("{s:0>width$}", width = digits + 1);
        let (int, frac) = s.split_at(s.len() - digits);
        let sign = if negative { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }

    pub fn log2(&self) -> f64 {
        match self {
            ExactValue::Integer(i) => log2_big(i.magnitude()),
            ExactValue::Rational(r) => log2_big(r.numer().magnitude()) - log2_big(r.denom().magnitude()),
            ExactValue::Root { radicand, degree } => {
                (log2_big(radicand.numer().magnitude()) - log2_big(radicand.denom().magnitude()))
                    / *degree as f64
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactValue::Integer(i) => i.to_f64().unwrap_or(f64::INFINITY),
            ExactValue::Rational(r) => {
                let v = r.to_f64().unwrap_or(f64::NAN);
                if v.is_finite() {
                    v
                } else {
                    self.log2().exp2()
                }
            }
            ExactValue::Root { .. } => self.log2().exp2(),
        }
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactValue::Integer(i) => write!(f, "{i}"),
            ExactValue::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ExactValue::Root { radicand, degree } => {
                let name = match degree {
                    2 => "sqrt".to_string(),
                    3 => "cbrt".to_string(),
                    k => format!("root{k}"),
                };
                if radicand.is_integer() {
                    write!(f, "{name}({})", radicand.numer())
                } else {
                    write!(f, "{name}({}/{})", radicand.numer(), radicand.denom())
                }
            }
        }
    }
}

/// `log2` of a big integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().unwrap().log2() + shift as f64
}

/// Formats with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub n: Option<u64>,
    #[serde(rename = "D")]
    pub d: Option<u32>,
    #[serde(serialize_with = "serialize_exact")]
    pub exact: Option<ExactValue>,
    pub float: f64,
    pub log2: f64,
}

fn serialize_exact<S: serde::Serializer>(v: &Option<ExactValue>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(e) => s.serialize_str(&e.to_string()),
        None => s.serialize_str(""),
    }
}

impl BoundReport {
    pub fn from_exact(name: &str, n: Option<u64>, d: Option<u32>, exact: ExactValue) -> Self {
        let exact = exact.simplify();
        BoundReport {
            name: name.to_string(),
            n,
            d,
            float: exact.to_f64(),
            log2: exact.log2(),
            exact: Some(exact),
        }
    }

    pub fn from_float(name: &str, n: Option<u64>, d: Option<u32>, value: f64) -> Self {
        BoundReport { name: name.to_string(), n, d, exact: None, float: value, log2: value.log2() }
    }

    /// `[name, n, D, exact, float, log2]`, the bound-table CSV row.
    pub fn csv_row(&self) -> [String; 6] {
        [
            self.name.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.d.map(|d| d.to_string()).unwrap_or_default(),
            self.exact.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            format_sig12(self.float),
            format_sig12(self.log2),
        ]
    }
}

pub const CSV_HEADER: [&str; 6] = ["name", "n", "D", "exact", "float", "log2"];

/// `c_D = (3 / 2^(2/3)) (D-1)^(2/3)`, kept as `cbrt(27 (D-1)^2 / 4)`.
pub fn c_d(d: u32) -> BoundReport {
    assert!(d >= 3, "c_D is defined for D >= 3");
    let radicand = BigRational::new(BigInt::from(27u64 * (d as u64 - 1).pow(2)), BigInt::from(4));
    BoundReport::from_exact("c_D", None, Some(d), ExactValue::Root { radicand, degree: 3 })
}

/// `3 / 2^(2/3) = cbrt(27/4)`, the upper bound on the sunflower-free capacity.
pub fn mu3_upper() -> ExactValue {
    ExactValue::Root { radicand: BigRational::new(27.into(), 4.into()), degree: 3 }
}

/// Parses a decimal literal such as `2.7552` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// `(1 + C)^n` exactly, plus the per-coordinate capacity `sqrt(1 + C)`.
pub fn capset_reduction(n: u64, capacity: &BigRational) -> (BoundReport, BoundReport) {
    assert!(!capacity.is_negative(), "capacity must be nonnegative");
    let base = BigRational::one() + capacity;
    let power = base.clone().pow(i32::try_from(n).expect("n fits in i32"));
    let total = BoundReport::from_exact("capset_layers_total", Some(n), None, ExactValue::Rational(power));
    let root = BoundReport::from_exact(
        "mu3_upper_via_capset",
        None,
        None,
        ExactValue::Root { radicand: base, degree: 2 },
    );
    (total, root)
}

/// The three capacity constants side by side.
pub fn capacities_summary() -> Vec<BoundReport> {
    let capacity = parse_decimal(CAPSET_CAPACITY_DEFAULT).unwrap();
    vec![
        BoundReport::from_float("mu3_lower_bound", None, None, MU3_LOWER_BOUND),
        BoundReport::from_exact("mu3_upper_bound", None, None, mu3_upper()),
        capset_reduction(1, &capacity).1,
        BoundReport::from_exact("trivial_bound", None, None, ExactValue::Integer(2.into())),
    ]
}

/// The bound table for one `(n, D)` pair.
pub fn bound_table(n: u64, d: Option<u32>) -> Vec<BoundReport> {
    let int = |v: BigUint| ExactValue::Integer(v.into());
    let mut rows = vec![
        BoundReport::from_exact("per_layer_bound", Some(n), None, int(per_layer_bound(n))),
        BoundReport::from_exact("thm1_bound", Some(n), None, int(thm1_bound(n))),
        BoundReport::from_exact("trivial_2^n", Some(n), None, int(BigUint::one() << n)),
    ];
    if let Some(d) = d {
        rows.push(c_d(d));
        rows.push(BoundReport::from_exact("thm2_counts", Some(n), Some(d), int(thm2_counts(n, d))));
        let cd_pow = ExactValue::Root {
            radicand: BigRational::new(
                BigInt::from(27u32).pow(n as u32) * BigInt::from(d - 1).pow(2 * n as u32),
                BigInt::from(4u32).pow(n as u32),
            ),
            degree: 3,
        };
        rows.push(BoundReport::from_exact("c_D^n", Some(n), Some(d), cd_pow));
    }
    rows.extend(capacities_summary());
    rows
}
