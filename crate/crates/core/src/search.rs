//! Exact extremal search for sunflower-free families and capsets, greedy
//! lower-bound witnesses, and Cartesian powers of families.
//!
//! The exact search is a depth-first branch and bound over candidate vectors
//! in ascending order. Each pair of chosen members forbids the vectors that
//! would complete a bad triple with it, kept as a bitmask per pair. With
//! symmetry reduction on, only families that are lexicographically least in
//! their orbit are extended; canonical families stay canonical after their
//! largest member is removed, so every orbit keeps exactly one reachable
//! representative.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds;
use crate::setsys::{self, AnyFamily, BinaryFamily, DFamily, DVector, Family, Point, SetsysError, SubsetVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("{0} candidates exceed the bitset width of 128")]
    TooManyCandidates(u64),
    #[error("symmetry group of order {0} is too large to enumerate")]
    GroupTooLarge(u64),
    #[error("mod-D search needs D >= 2, got {0}")]
    BadAlphabet(u32),
    #[error("tensor powers are only defined for mod-D families and capsets")]
    BinaryPower,
    #[error("tensor power would have {0} members, above the cap")]
    PowerTooLarge(String),
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error(transparent)]
    Family(#[from] SetsysError),
}

pub type Result<T> = std::result::Result<T, SearchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchMode {
    /// Sunflower-free subsets of `{1..n}`.
    Binary,
    /// Sunflower-free subsets of `(Z/DZ)^n`.
    ModD(u32),
    /// Progression-free subsets of `F_3^n`.
    Capset,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub n: usize,
    pub node_budget: u64,
    pub time_budget: Option<Duration>,
    pub symmetry: bool,
    pub workers: usize,
}

impl SearchConfig {
    pub fn new(mode: SearchMode, n: usize) -> Self {
        SearchConfig { mode, n, node_budget: 1 << 32, time_budget: None, symmetry: true, workers: 1 }
    }

    pub fn with_symmetry(mut self, on: bool) -> Self {
        self.symmetry = on;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub mode: SearchMode,
    pub n: usize,
    pub max: usize,
    /// False when a budget ran out before the search space was exhausted.
    pub optimal: bool,
    pub witness: AnyFamily,
    pub nodes: u64,
}

#[derive(Serialize)]
struct SearchReportJson<'a> {
    mode: String,
    n: usize,
    #[serde(rename = "D")]
    d: Option<u32>,
    max: usize,
    optimal: bool,
    nodes: u64,
    witness: Vec<String>,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

impl SearchResult {
    pub fn to_json(&self) -> String {
        let (mode, d) = match self.mode {
            SearchMode::Binary => ("binary".to_string(), None),
            SearchMode::ModD(d) => ("mod-d".to_string(), Some(d)),
            SearchMode::Capset => ("capset".to_string(), Some(3)),
        };
        let witness = match &self.witness {
            AnyFamily::Binary(f) => f.members().iter().map(|m| m.to_string()).collect(),
            AnyFamily::ModD(f) => f.members().iter().map(|m| m.to_string()).collect(),
        };
        let report = SearchReportJson {
            mode,
            n: self.n,
            d,
            max: self.max,
            optimal: self.optimal,
            nodes: self.nodes,
            witness,
            _marker: std::marker::PhantomData,
        };
        serde_json::to_string_pretty(&report).expect("search report serializes")
    }
}

type Mask = u128;

/// Bit-parallel hypergraph of forbidden triples over indexed candidates.
struct Instance {
    size: usize,
    /// `forbid[u * size + v]`: candidates `w` making `{u, v, w}` a bad triple.
    forbid: Vec<Mask>,
    /// One candidate permutation per group element, identity excluded.
    group: Vec<Vec<u8>>,
}

fn above(v: usize) -> Mask {
    if v >= 127 {
        0
    } else {
        Mask::MAX << (v + 1)
    }
}

fn build_instance<P: Point>(
    candidates: &[P],
    bad: impl Fn(&P, &P, &P) -> bool + Sync,
    group: Vec<Vec<u8>>,
) -> Instance {
    let size = candidates.len();
    let forbid: Vec<Mask> = (0..size * size)
        .into_par_iter()
        .map(|uv| {
            let (u, v) = (uv / size, uv % size);
            let mut m = 0;
            if u != v {
                for w in 0..size {
                    if w != u && w != v && bad(&candidates[u], &candidates[v], &candidates[w]) {
                        m |= 1 << w;
                    }
                }
            }
            m
        })
        .collect();
    Instance { size, forbid, group }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

const MAX_GROUP_TABLE: u64 = 1 << 24;

/// Candidate permutations induced by coordinate permutations and, when
/// `alphabet_perms` is set, independent alphabet permutations per coordinate.
fn symmetry_group<P: Point>(
    candidates: &[P],
    n: usize,
    alphabet: u32,
    alphabet_perms: bool,
    rebuild: impl Fn(Vec<u32>) -> P,
) -> Result<Vec<Vec<u8>>> {
    let coord_perms = permutations(n);
    let letter_perms: Vec<Vec<usize>> =
        if alphabet_perms { permutations(alphabet as usize) } else { vec![(0..alphabet as usize).collect()] };
    let order = (coord_perms.len() as u64).saturating_mul((letter_perms.len() as u64).saturating_pow(n as u32));
    if order.saturating_mul(candidates.len() as u64) > MAX_GROUP_TABLE {
        return Err(SearchError::GroupTooLarge(order));
    }
    let index: HashMap<&P, usize> = candidates.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let coords: Vec<Vec<u32>> = candidates.iter().map(Point::coords).collect();
    let mut group = Vec::with_capacity(order as usize);
    let mut choice = vec![0usize; n];
    for sigma in &coord_perms {
        loop {
            let table: Vec<u8> = coords
                .iter()
                .map(|c| {
                    let mut img = vec![0u32; n];
                    for i in 0..n {
                        img[sigma[i]] = letter_perms[choice[i]][c[i] as usize] as u32;
                    }
                    index[&rebuild(img)] as u8
                })
                .collect();
            if table.iter().enumerate().any(|(i, &t)| i != t as usize) {
                group.push(table);
            }
            // advance the mixed-radix counter over alphabet permutations
            let mut i = 0;
            while i < n {
                choice[i] += 1;
                if choice[i] < letter_perms.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    group.sort();
    group.dedup();
    Ok(group)
}

/// True iff no group element maps `chosen` (ascending) to a smaller sorted set.
fn is_canonical(chosen: &[u8], group: &[Vec<u8>], buf: &mut Vec<u8>) -> bool {
    for g in group {
        buf.clear();
        buf.extend(chosen.iter().map(|&c| g[c as usize]));
        buf.sort_unstable();
        if buf.as_slice() < chosen {
            return false;
        }
    }
    true
}

struct Shared<'a> {
    inst: &'a Instance,
    symmetry: bool,
    global_best: AtomicUsize,
    nodes: AtomicU64,
    aborted: AtomicBool,
    node_budget: u64,
    deadline: Option<Instant>,
}

struct Subtree {
    best: usize,
    witness: Vec<u8>,
    chosen: Vec<u8>,
    buf: Vec<u8>,
}

impl Shared<'_> {
    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.node_budget {
            self.aborted.store(true, Ordering::Relaxed);
        }
        if n.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() > d) {
            self.aborted.store(true, Ordering::Relaxed);
        }
        !self.aborted.load(Ordering::Relaxed)
    }

    fn hopeless(&self, bound: usize, local: &Subtree) -> bool {
        bound <= local.best || bound < self.global_best.load(Ordering::Relaxed)
    }

    /// Extends `local.chosen`, whose admissible next members are `allowed`.
    fn dfs(&self, local: &mut Subtree, allowed: Mask) {
        if !self.tick() {
            return;
        }
        if local.chosen.len() > local.best {
            local.best = local.chosen.len();
            local.witness = local.chosen.clone();
            self.global_best.fetch_max(local.best, Ordering::Relaxed);
        }
        let mut rest = allowed;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.hopeless(local.chosen.len() + 1 + rest.count_ones() as usize, local) {
                return;
            }
            local.chosen.push(v as u8);
            if !self.symmetry || is_canonical(&local.chosen, &self.inst.group, &mut local.buf) {
                let mut next = rest;
                for &u in &local.chosen[..local.chosen.len() - 1] {
                    next &= !self.inst.forbid[u as usize * self.inst.size + v];
                }
                self.dfs(local, next);
            }
            local.chosen.pop();
            if self.aborted.load(Ordering::Relaxed) {
                return;
            }
        }
    }
}

/// Returns the maximum size, the lexicographically least maximum family (as
/// candidate indices), the node count and whether the search completed.
fn branch_and_bound(inst: &Instance, cfg: &SearchConfig) -> (usize, Vec<u8>, u64, bool) {
    let shared = Shared {
        inst,
        symmetry: cfg.symmetry,
        global_best: AtomicUsize::new(0),
        nodes: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
        node_budget: cfg.node_budget,
        deadline: cfg.time_budget.map(|t| Instant::now() + t),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build().expect("thread pool");
    let results: Vec<(usize, Vec<u8>)> = pool.install(|| {
        (0..inst.size)
            .into_par_iter()
            .map(|first| {
                let mut local = Subtree { best: 0, witness: vec![], chosen: vec![first as u8], buf: vec![] };
                if shared.hopeless(inst.size - first, &local) {
                    return (0, vec![]);
                }
                if shared.symmetry && !is_canonical(&local.chosen, &inst.group, &mut local.buf) {
                    return (0, vec![]);
                }
                shared.dfs(&mut local, above(first) & full_mask(inst.size));
                (local.best, local.witness)
            })
            .collect()
    });
    let mut best = (0, vec![]);
    for (size, witness) in results {
        if size > best.0 {
            best = (size, witness);
        }
    }
    let nodes = shared.nodes.load(Ordering::Relaxed);
    (best.0, best.1, nodes, !shared.aborted.load(Ordering::Relaxed))
}

fn full_mask(size: usize) -> Mask {
    if size >= 128 {
        Mask::MAX
    } else {
        (1 << size) - 1
    }
}

pub fn binary_candidates(n: usize) -> Vec<SubsetVector> {
    assert!(n < 64);
    (0..1u64 << n).map(|w| SubsetVector::from_word(n, w)).collect()
}

/// All of `(Z/DZ)^n` in lexicographic order.
pub fn mod_d_candidates(d: u32, n: usize) -> Vec<DVector> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                (0..d).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(|c| DVector::new(d, c).expect("coordinates in range")).collect()
}

fn check_candidate_count(alphabet: u32, n: usize) -> Result<()> {
    let count = (alphabet as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if count > 128 {
        return Err(SearchError::TooManyCandidates(count));
    }
    Ok(())
}

fn run<P: Point>(
    candidates: Vec<P>,
    bad: impl Fn(&P, &P, &P) -> bool + Sync,
    group: Vec<Vec<u8>>,
    cfg: &SearchConfig,
) -> (Vec<P>, u64, bool) {
    let inst = build_instance(&candidates, bad, group);
    let (_, witness, nodes, optimal) = branch_and_bound(&inst, cfg);
    (witness.into_iter().map(|i| candidates[i as usize].clone()).collect(), nodes, optimal)
}

/// Finds a maximum sunflower-free family (or capset) by exhaustive search.
pub fn max_free_family(cfg: &SearchConfig) -> Result<SearchResult> {
    let n = cfg.n;
    let (witness, nodes, optimal) = match cfg.mode {
        SearchMode::Binary => {
            check_candidate_count(2, n)?;
            let cands = binary_candidates(n);
            let group = if cfg.symmetry {
                symmetry_group(&cands, n, 2, false, |c| SubsetVector::from_bits(&c.iter().map(|&b| b == 1).collect::<Vec<_>>()))?
            } else {
                vec![]
            };
            let (w, nodes, opt) = run(cands, SubsetVector::is_sunflower_unchecked, group, cfg);
            (AnyFamily::Binary(BinaryFamily::binary(n, w)?), nodes, opt)
        }
        SearchMode::ModD(_) | SearchMode::Capset => {
            let d = match cfg.mode {
                SearchMode::ModD(d) => d,
                _ => 3,
            };
            if d < 2 {
                return Err(SearchError::BadAlphabet(d));
            }
            check_candidate_count(d, n)?;
            let cands = mod_d_candidates(d, n);
            let group = if cfg.symmetry {
                symmetry_group(&cands, n, d, true, |c| DVector::new(d, c).expect("in range"))?
            } else {
                vec![]
            };
            let (w, nodes, opt) = if cfg.mode == SearchMode::Capset {
                run(cands, setsys::is_progression, group, cfg)
            } else {
                run(cands, DVector::is_sunflower_unchecked, group, cfg)
            };
            (AnyFamily::ModD(DFamily::mod_d(d, n, w)?), nodes, opt)
        }
    };
    Ok(SearchResult { mode: cfg.mode, n, max: witness.len(), optimal, witness, nodes })
}

/// Seeded randomized greedy construction of a sunflower-free family.
pub fn greedy_witness(mode: SearchMode, n: usize, seed: u64) -> Result<AnyFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fn greedy<P: Point>(mut cands: Vec<P>, rng: &mut ChaCha8Rng, bad: impl Fn(&P, &P, &P) -> bool) -> Vec<P> {
        cands.shuffle(rng);
        let mut chosen: Vec<P> = Vec::new();
        for c in cands {
            let clash = (0..chosen.len())
                .any(|i| (i + 1..chosen.len()).any(|j| bad(&chosen[i], &chosen[j], &c)));
            if !clash {
                chosen.push(c);
            }
        }
        chosen
    }
    Ok(match mode {
        SearchMode::Binary => {
            if n >= 24 {
                return Err(SearchError::TooManyCandidates(1 << n.min(63)));
            }
            let members = greedy(binary_candidates(n), &mut rng, SubsetVector::is_sunflower_unchecked);
            AnyFamily::Binary(BinaryFamily::binary(n, members)?)
        }
        SearchMode::ModD(d) => {
            if d < 2 {
                return Err(SearchError::BadAlphabet(d));
            }
            let count = (d as u64).checked_pow(n as u32).filter(|&c| c <= 1 << 20);
            count.ok_or(SearchError::TooManyCandidates(u64::MAX))?;
            let members = greedy(mod_d_candidates(d, n), &mut rng, DVector::is_sunflower_unchecked);
            AnyFamily::ModD(DFamily::mod_d(d, n, members)?)
        }
        SearchMode::Capset => {
            let count = 3u64.checked_pow(n as u32).filter(|&c| c <= 1 << 20);
            count.ok_or(SearchError::TooManyCandidates(u64::MAX))?;
            let members = greedy(mod_d_candidates(3, n), &mut rng, setsys::is_progression);
            AnyFamily::ModD(DFamily::mod_d(3, n, members)?)
        }
    })
}

const MAX_POWER_MEMBERS: u64 = 1 << 20;

/// Cartesian power `F^k` with coordinates concatenated.
pub fn tensor_power(family: &AnyFamily, k: u32) -> Result<DFamily> {
    let AnyFamily::ModD(f) = family else {
        return Err(SearchError::BinaryPower);
    };
    if k == 0 {
        return Err(SearchError::ZeroExponent);
    }
    let size = (f.len() as u64).checked_pow(k).filter(|&s| s <= MAX_POWER_MEMBERS);
    if size.is_none() {
        return Err(SearchError::PowerTooLarge(format!("{}^{k}", f.len())));
    }
    let mut rows: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..k {
        rows = rows
            .iter()
            .flat_map(|prefix| {
                f.members().iter().map(move |m| {
                    let mut r = prefix.clone();
                    r.extend_from_slice(m.as_slice());
                    r
                })
            })
            .collect();
    }
    let members = rows.into_iter().map(|r| DVector::new(f.d(), r)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(DFamily::mod_d(f.d(), f.n() * k as usize, members)?)
}

/// One line of a bound comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub max: usize,
    pub checks: Vec<BoundCheck>,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<24} {:>12} {:>8}\n", "bound", "value", "holds");
        for c in &self.checks {
            out.push_str(&format!("{:<24} {:>12} {:>8}\n", c.name, c.bound, c.holds));
        }
        out
    }
}

/// Compares a search maximum with the proved upper bounds.
pub fn validate_against_bounds(result: &SearchResult) -> ValidationReport {
    let max = BigUint::from(result.max);
    let n = result.n as u64;
    let check = |name: &str, bound: BigUint| BoundCheck {
        name: name.to_string(),
        holds: max <= bound,
        bound: bound.to_string(),
    };
    let mut checks = Vec::new();
    match result.mode {
        SearchMode::Binary => {
            checks.push(check("thm1_bound", bounds::thm1_bound(n)));
            checks.push(check("trivial_2^n", BigUint::from(1u32) << n));
        }
        SearchMode::ModD(d) if d >= 3 => {
            checks.push(check("thm2_counts", bounds::thm2_counts(n, d)));
            checks.push(BoundCheck {
                name: "3*c_D^n".into(),
                bound: format!("{:.6}", 3.0 * bounds::c_d(d).float.powi(n as i32)),
                holds: bounds::within_three_cd_pow(&max, n, d),
            });
        }
        SearchMode::ModD(d) => {
            checks.push(check("trivial_D^n", BigUint::from(d).pow(n as u32)));
        }
        SearchMode::Capset => {
            checks.push(check("trivial_3^n", BigUint::from(3u32).pow(n as u32)));
            checks.push(check("thm2_counts(D=3)", bounds::thm2_counts(n, 3)));
        }
    }
    ValidationReport { max: result.max, checks }
}

/// Post-hoc freeness check through the family-level predicates, independent
/// of the search's incremental bitmasks.
pub fn witness_is_valid(result: &SearchResult) -> bool {
    match (&result.witness, result.mode) {
        (AnyFamily::ModD(f), SearchMode::Capset) => setsys::is_capset(f).map(|v| v.free).unwrap_or(false),
        (AnyFamily::ModD(f), _) => setsys::family_is_sunflower_free(f).free,
        (AnyFamily::Binary(f), _) => setsys::family_is_sunflower_free(f).free,
    }
}

/// Shorthand used by tests and the CLI.
pub fn family_of<P: Point>(f: &Family<P>) -> &[P] {
    f.members()
}
