//! Set families, vector families and the sunflower / capset predicates.
//!
//! A subset of `{1, ..., n}` is a [`SubsetVector`]: bit `i` is set iff element
//! `i + 1` belongs to the subset. A point of `(Z/DZ)^n` is a [`DVector`].
//! Three distinct binary vectors form a sunflower iff no coordinate carries
//! exactly two ones; three distinct vectors over `Z/DZ` form a sunflower iff
//! every coordinate is all-equal or all-distinct.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetsysError {
    #[error("a sunflower needs at least 2 sets, got {0}")]
    TooFewSets(usize),
    #[error("duplicate member {0}")]
    Duplicate(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("alphabet mismatch: expected D = {expected}, got D = {got}")]
    AlphabetMismatch { expected: u32, got: u32 },
    #[error("coordinate {value} out of range for D = {d}")]
    CoordinateOutOfRange { value: u32, d: u32 },
    #[error("alphabet size must be at least 2, got {0}")]
    BadAlphabet(u32),
    #[error("triple members must be pairwise distinct")]
    NotDistinct,
    #[error("capset test requires D = 3, got D = {0}")]
    NotTernary(u32),
    #[error("pair encoding needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("encoded symbol {0} outside 0..=3")]
    BadSymbol(u8),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, SetsysError>;

/// Common interface of family members.
pub trait Point: Clone + Eq + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync {
    fn dim(&self) -> usize;
    /// Alphabet size of every coordinate (2 for binary vectors).
    fn alphabet(&self) -> u32;
    fn coord(&self, i: usize) -> u32;

    /// Sunflower test on three vectors already known to be distinct and of
    /// equal dimension.
    fn is_sunflower_unchecked(x: &Self, y: &Self, z: &Self) -> bool;

    fn coords(&self) -> Vec<u32> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }
}

/// Element of `{0,1}^n`, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubsetVector {
    n: usize,
    words: Vec<u64>,
}

impl SubsetVector {
    pub fn empty(n: usize) -> Self {
        SubsetVector { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Builds the subset from 1-based elements.
    pub fn from_elements(n: usize, elements: &[usize]) -> Result<Self> {
        let mut v = Self::empty(n);
        for &e in elements {
            if e == 0 || e > n {
                return Err(SetsysError::CoordinateOutOfRange { value: e as u32, d: n as u32 });
            }
            v.set(e - 1, true);
        }
        Ok(v)
    }

    /// `n <= 64`; bits of `word` above `n` are ignored.
    pub fn from_word(n: usize, word: u64) -> Self {
        assert!(n <= 64, "single-word vectors hold at most 64 coordinates");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        SubsetVector { n, words: if n == 0 { vec![] } else { vec![word & mask] } }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.n);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.n);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The packed word, if the vector fits in one.
    pub fn to_word(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        SubsetVector { n: self.n, words }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// 1-based elements of the subset.
    pub fn elements(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i)).map(|i| i + 1).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Binary vectors are ordered by dimension, then by the integer whose bit `i`
/// is coordinate `i`. Under this order `{} < {1} < {2} < {1,2}`.
impl Ord for SubsetVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for SubsetVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SubsetVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SubsetVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.elements().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl Point for SubsetVector {
    fn dim(&self) -> usize {
        self.n
    }

    fn alphabet(&self) -> u32 {
        2
    }

    fn coord(&self, i: usize) -> u32 {
        self.get(i) as u32
    }

    fn is_sunflower_unchecked(x: &Self, y: &Self, z: &Self) -> bool {
        // A coordinate with exactly two ones breaks the sunflower.
        x.words.iter().zip(&y.words).zip(&z.words).all(|((&a, &b), &c)| {
            let exactly_two = (a & b & !c) | (a & !b & c) | (!a & b & c);
            exactly_two == 0
        })
    }
}

/// Element of `(Z/DZ)^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DVector {
    d: u32,
    coords: Vec<u32>,
}

impl DVector {
    pub fn new(d: u32, coords: Vec<u32>) -> Result<Self> {
        if d < 2 {
            return Err(SetsysError::BadAlphabet(d));
        }
        if let Some(&value) = coords.iter().find(|&&c| c >= d) {
            return Err(SetsysError::CoordinateOutOfRange { value, d });
        }
        Ok(DVector { d, coords })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.coords
    }
}

impl fmt::Display for DVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl Point for DVector {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn alphabet(&self) -> u32 {
        self.d
    }

    fn coord(&self, i: usize) -> u32 {
        self.coords[i]
    }

    fn is_sunflower_unchecked(x: &Self, y: &Self, z: &Self) -> bool {
        x.coords.iter().zip(&y.coords).zip(&z.coords).all(|((a, b), c)| {
            let equal_pairs = (a == b) as u8 + (b == c) as u8 + (a == c) as u8;
            equal_pairs != 1
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Setting {
    Binary,
    ModD(u32),
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Binary => f.write_str("binary"),
            Setting::ModD(d) => write!(f, "mod-{d}"),
        }
    }
}

/// A finite family of pairwise-distinct vectors of common dimension, kept in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family<P> {
    setting: Setting,
    n: usize,
    members: Vec<P>,
}

pub type BinaryFamily = Family<SubsetVector>;
pub type DFamily = Family<DVector>;

impl<P: Point> Family<P> {
    fn build(setting: Setting, n: usize, members: Vec<P>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(members.len());
        for m in &members {
            if m.dim() != n {
                return Err(SetsysError::DimensionMismatch { expected: n, got: m.dim() });
            }
            if let Setting::ModD(d) = setting {
                if m.alphabet() != d {
                    return Err(SetsysError::AlphabetMismatch { expected: d, got: m.alphabet() });
                }
            }
            if !seen.insert(m) {
                return Err(SetsysError::Duplicate(m.to_string()));
            }
        }
        let mut members = members;
        members.sort();
        Ok(Family { setting, n, members })
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[P] {
        &self.members
    }

    pub fn contains(&self, p: &P) -> bool {
        self.members.binary_search(p).is_ok()
    }

    /// Adds a member, rejecting duplicates and dimension mismatches.
    pub fn insert(&mut self, p: P) -> Result<()> {
        if p.dim() != self.n {
            return Err(SetsysError::DimensionMismatch { expected: self.n, got: p.dim() });
        }
        match self.members.binary_search(&p) {
            Ok(_) => Err(SetsysError::Duplicate(p.to_string())),
            Err(pos) => {
                self.members.insert(pos, p);
                Ok(())
            }
        }
    }

    /// The lexicographically least sunflower `x < y < z`, if any.
    pub fn sunflower_witness(&self) -> Option<[P; 3]> {
        let m = &self.members;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                for k in j + 1..m.len() {
                    if P::is_sunflower_unchecked(&m[i], &m[j], &m[k]) {
                        return Some([m[i].clone(), m[j].clone(), m[k].clone()]);
                    }
                }
            }
        }
        None
    }

    /// Serializes in the family text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Setting::ModD(d) = self.setting {
            out.push_str(&format!("D={d}\n"));
        }
        if self.members.is_empty() {
            out.push_str(&format!("n={}\n", self.n));
        }
        for m in &self.members {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }
}

impl BinaryFamily {
    pub fn binary(n: usize, members: Vec<SubsetVector>) -> Result<Self> {
        Family::build(Setting::Binary, n, members)
    }
}

impl DFamily {
    pub fn mod_d(d: u32, n: usize, members: Vec<DVector>) -> Result<Self> {
        if d < 2 {
            return Err(SetsysError::BadAlphabet(d));
        }
        Family::build(Setting::ModD(d), n, members)
    }

    pub fn d(&self) -> u32 {
        match self.setting {
            Setting::ModD(d) => d,
            Setting::Binary => unreachable!("DFamily always carries a mod-D setting"),
        }
    }

    /// Convenience constructor from raw coordinate rows.
    pub fn from_rows(d: u32, n: usize, rows: &[&[u32]]) -> Result<Self> {
        let members = rows.iter().map(|r| DVector::new(d, r.to_vec())).collect::<Result<_>>()?;
        Self::mod_d(d, n, members)
    }
}

/// Either kind of family, as read from a family file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyFamily {
    Binary(BinaryFamily),
    ModD(DFamily),
}

impl AnyFamily {
    pub fn len(&self) -> usize {
        match self {
            AnyFamily::Binary(f) => f.len(),
            AnyFamily::ModD(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> usize {
        match self {
            AnyFamily::Binary(f) => f.n(),
            AnyFamily::ModD(f) => f.n(),
        }
    }

    pub fn setting(&self) -> Setting {
        match self {
            AnyFamily::Binary(f) => f.setting(),
            AnyFamily::ModD(f) => f.setting(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyFamily::Binary(f) => f.to_text(),
            AnyFamily::ModD(f) => f.to_text(),
        }
    }
}

/// Returns true iff all pairwise intersections of `sets` coincide.
pub fn is_sunflower_sets(sets: &[SubsetVector]) -> Result<bool> {
    if sets.len() < 2 {
        return Err(SetsysError::TooFewSets(sets.len()));
    }
    let n = sets[0].len();
    let mut seen = HashSet::new();
    for s in sets {
        if s.len() != n {
            return Err(SetsysError::DimensionMismatch { expected: n, got: s.len() });
        }
        if !seen.insert(s) {
            return Err(SetsysError::Duplicate(s.to_string()));
        }
    }
    let core = sets[0].intersection(&sets[1]);
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].intersection(&sets[j]) != core {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Coordinate-wise sunflower test for three pairwise-distinct vectors.
pub fn triple_sunflower_coordinate_test<P: Point>(x: &P, y: &P, z: &P) -> Result<bool> {
    for v in [y, z] {
        if v.dim() != x.dim() {
            return Err(SetsysError::DimensionMismatch { expected: x.dim(), got: v.dim() });
        }
        if v.alphabet() != x.alphabet() {
            return Err(SetsysError::AlphabetMismatch { expected: x.alphabet(), got: v.alphabet() });
        }
    }
    if x == y || y == z || x == z {
        return Err(SetsysError::NotDistinct);
    }
    Ok(P::is_sunflower_unchecked(x, y, z))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreenessVerdict<P> {
    pub free: bool,
    pub witness: Option<[P; 3]>,
}

pub fn family_is_sunflower_free<P: Point>(family: &Family<P>) -> FreenessVerdict<P> {
    let witness = family.sunflower_witness();
    FreenessVerdict { free: witness.is_none(), witness }
}

/// Partitions a binary family by weight. Every layer is an antichain.
pub fn layer_split(family: &BinaryFamily) -> BTreeMap<usize, BinaryFamily> {
    let mut layers: BTreeMap<usize, Vec<SubsetVector>> = BTreeMap::new();
    for m in family.members() {
        layers.entry(m.weight()).or_default().push(m.clone());
    }
    layers
        .into_iter()
        .map(|(w, ms)| (w, Family { setting: Setting::Binary, n: family.n(), members: ms }))
        .collect()
}

/// `x + y + z = 0` coordinate-wise in `F_3^n`, the three-term progression test
/// for distinct ternary vectors.
pub fn is_progression(x: &DVector, y: &DVector, z: &DVector) -> bool {
    x.coords.iter().zip(&y.coords).zip(&z.coords).all(|((a, b), c)| (a + b + c) % 3 == 0)
}

/// Capset test over `F_3^n`: no distinct `x, y, z` with `x + y + z = 0`.
pub fn is_capset(family: &DFamily) -> Result<FreenessVerdict<DVector>> {
    if family.d() != 3 {
        return Err(SetsysError::NotTernary(family.d()));
    }
    let m = family.members();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            for k in j + 1..m.len() {
                if is_progression(&m[i], &m[j], &m[k]) {
                    return Ok(FreenessVerdict {
                        free: false,
                        witness: Some([m[i].clone(), m[j].clone(), m[k].clone()]),
                    });
                }
            }
        }
    }
    Ok(FreenessVerdict { free: true, witness: None })
}

/// A binary family over `2n` coordinates rewritten over `{0,1,2,3}^n`:
/// the pair `(a, b)` becomes the symbol `a + 2b`, so `u_0 = [0,0]`,
/// `u_1 = [1,0]`, `u_2 = [0,1]`, `u_3 = [1,1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFamily {
    n: usize,
    members: Vec<Vec<u8>>,
}

impl EncodedFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[Vec<u8>] {
        &self.members
    }

    pub fn from_symbols(n: usize, members: Vec<Vec<u8>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &members {
            if m.len() != n {
                return Err(SetsysError::DimensionMismatch { expected: n, got: m.len() });
            }
            if let Some(&s) = m.iter().find(|&&s| s > 3) {
                return Err(SetsysError::BadSymbol(s));
            }
            if !seen.insert(m) {
                return Err(SetsysError::Duplicate(format!("{m:?}")));
            }
        }
        let mut members = members;
        members.sort();
        Ok(EncodedFamily { n, members })
    }

    /// Inverse of [`pair_encode`].
    pub fn decode(&self) -> BinaryFamily {
        let members = self
            .members
            .iter()
            .map(|m| {
                let bits: Vec<bool> =
                    m.iter().flat_map(|&s| [s & 1 == 1, s & 2 == 2]).collect();
                SubsetVector::from_bits(&bits)
            })
            .collect();
        BinaryFamily::binary(2 * self.n, members).expect("decoding is injective")
    }
}

pub fn encode_pairs(v: &SubsetVector) -> Result<Vec<u8>> {
    if !v.len().is_multiple_of(2) {
        return Err(SetsysError::OddDimension(v.len()));
    }
    Ok((0..v.len() / 2)
        .map(|i| v.get(2 * i) as u8 + 2 * v.get(2 * i + 1) as u8)
        .collect())
}

pub fn pair_encode(family: &BinaryFamily) -> Result<EncodedFamily> {
    if !family.n().is_multiple_of(2) {
        return Err(SetsysError::OddDimension(family.n()));
    }
    let members = family.members().iter().map(encode_pairs).collect::<Result<Vec<_>>>()?;
    EncodedFamily::from_symbols(family.n() / 2, members)
}

/// Members whose symbol-3 positions are exactly the support of `x`, with those
/// positions removed; the result lives in `F_3^(n - weight(x))`.
pub fn layer_extract(encoded: &EncodedFamily, x: &SubsetVector) -> Result<DFamily> {
    if x.len() != encoded.n() {
        return Err(SetsysError::DimensionMismatch { expected: encoded.n(), got: x.len() });
    }
    let rest = encoded.n() - x.weight();
    let members = encoded
        .members()
        .iter()
        .filter(|m| m.iter().enumerate().all(|(i, &s)| (s == 3) == x.get(i)))
        .map(|m| {
            let coords = m.iter().filter(|&&s| s != 3).map(|&s| s as u32).collect();
            DVector::new(3, coords)
        })
        .collect::<Result<Vec<_>>>()?;
    DFamily::mod_d(3, rest, members)
}

/// Parses the family text format.
///
/// One member per line: binary members are `0`/`1` strings, mod-D members are
/// comma-separated integers. `#` starts a comment and blank lines are
/// ignored. A `D=<d>` line (or `d_override`) selects the mod-D setting; an
/// `n=<n>` line fixes the dimension, which is needed for empty families.
pub fn parse_family(text: &str, d_override: Option<u32>) -> Result<AnyFamily> {
    let mut d = d_override;
    let mut n: Option<usize> = None;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| SetsysError::Parse { line: line_no, msg };
        if let Some(v) = line.strip_prefix("D=").or_else(|| line.strip_prefix("d=")) {
            let parsed: u32 = v.trim().parse().map_err(|_| parse_err(format!("bad D value {v:?}")))?;
            if parsed < 2 {
                return Err(parse_err(format!("D must be at least 2, got {parsed}")));
            }
            if d_override.is_none() {
                d = Some(parsed);
            }
            continue;
        }
        if let Some(v) = line.strip_prefix("n=") {
            n = Some(v.trim().parse().map_err(|_| parse_err(format!("bad n value {v:?}")))?);
            continue;
        }
        rows.push((line_no, line));
    }

    let check_dim = |line: usize, len: usize, n: &mut Option<usize>| -> Result<()> {
        match *n {
            Some(expected) if expected != len => Err(SetsysError::Parse {
                line,
                msg: format!("expected {expected} coordinates, found {len}"),
            }),
            _ => {
                *n = Some(len);
                Ok(())
            }
        }
    };

    match d {
        None => {
            let mut members = Vec::with_capacity(rows.len());
            for (line, row) in rows {
                let mut bits = Vec::with_capacity(row.len());
                for ch in row.chars() {
                    match ch {
                        '0' => bits.push(false),
                        '1' => bits.push(true),
                        other => {
                            return Err(SetsysError::Parse {
                                line,
                                msg: format!("unexpected character {other:?} in binary member"),
                            })
                        }
                    }
                }
                check_dim(line, bits.len(), &mut n)?;
                members.push((line, SubsetVector::from_bits(&bits)));
            }
            let n = n.unwrap_or(0);
            let mut seen = HashSet::new();
            for (line, m) in &members {
                if !seen.insert(m.clone()) {
                    return Err(SetsysError::Parse { line: *line, msg: format!("duplicate member {m}") });
                }
            }
            let members = members.into_iter().map(|(_, m)| m).collect();
            Ok(AnyFamily::Binary(BinaryFamily::binary(n, members)?))
        }
        Some(d) => {
            let mut members = Vec::with_capacity(rows.len());
            let mut seen = HashSet::new();
            for (line, row) in rows {
                let coords = row
                    .split(',')
                    .map(|t| t.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| SetsysError::Parse { line, msg: format!("bad coordinate: {e}") })?;
                check_dim(line, coords.len(), &mut n)?;
                let v = DVector::new(d, coords)
                    .map_err(|e| SetsysError::Parse { line, msg: e.to_string() })?;
                if !seen.insert(v.clone()) {
                    return Err(SetsysError::Parse { line, msg: format!("duplicate member {v}") });
                }
                members.push(v);
            }
            Ok(AnyFamily::ModD(DFamily::mod_d(d, n.unwrap_or(0), members)?))
        }
    }
}
