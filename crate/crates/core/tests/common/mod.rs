#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sunflower_core::{BinaryFamily, DFamily, DVector, SubsetVector};

/// Three distinct sets form a sunflower iff all pairwise intersections agree.
pub fn sets_form_sunflower(a: &[bool], b: &[bool], c: &[bool]) -> bool {
    let meet = |p: &[bool], q: &[bool]| -> Vec<bool> { p.iter().zip(q).map(|(x, y)| *x && *y).collect() };
    let ab = meet(a, b);
    ab == meet(b, c) && ab == meet(a, c)
}

pub fn digits_form_sunflower(a: &[u32], b: &[u32], c: &[u32]) -> bool {
    (0..a.len()).all(|i| {
        let (x, y, z) = (a[i], b[i], c[i]);
        (x == y && y == z) || (x != y && y != z && x != z)
    })
}

pub fn digits_form_progression(a: &[u32], b: &[u32], c: &[u32]) -> bool {
    (0..a.len()).all(|i| (a[i] + b[i] + c[i]).is_multiple_of(3))
}

pub fn bits(v: &SubsetVector) -> Vec<bool> {
    (0..v.len()).map(|i| v.get(i)).collect()
}

pub fn free_under<T>(members: &[T], bad: impl Fn(&T, &T, &T) -> bool) -> bool {
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            for k in j + 1..members.len() {
                if bad(&members[i], &members[j], &members[k]) {
                    return false;
                }
            }
        }
    }
    true
}

/// `prod_i (2 - x_i - y_i - z_i)`.
pub fn t_binary(x: &[u32], y: &[u32], z: &[u32]) -> i128 {
    (0..x.len()).map(|i| 2 - (x[i] + y[i] + z[i]) as i128).product()
}

/// `prod_i ([a=b] + [b=c] + [a=c] - 1)`.
pub fn t_mod_d(x: &[u32], y: &[u32], z: &[u32]) -> i128 {
    (0..x.len())
        .map(|i| (x[i] == y[i]) as i128 + (y[i] == z[i]) as i128 + (x[i] == z[i]) as i128 - 1)
        .product()
}

/// All points of `{0..base}^n` in lexicographic order.
pub fn cube(base: u32, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..base).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

fn greedy_pick<T: Clone>(mut pool: Vec<T>, rng: &mut ChaCha8Rng, target: usize, bad: impl Fn(&T, &T, &T) -> bool) -> Vec<T> {
    pool.shuffle(rng);
    let mut chosen: Vec<T> = Vec::new();
    for c in pool {
        if chosen.len() >= target {
            break;
        }
        let clash = (0..chosen.len()).any(|i| (i + 1..chosen.len()).any(|j| bad(&chosen[i], &chosen[j], &c)));
        if !clash {
            chosen.push(c);
        }
    }
    chosen
}

/// A random sunflower-free family over `n` coordinates, optionally of constant weight.
pub fn random_free_binary(rng: &mut ChaCha8Rng, n: usize, weight: Option<usize>, target: usize) -> BinaryFamily {
    let pool: Vec<Vec<bool>> = cube(2, n)
        .into_iter()
        .map(|p| p.into_iter().map(|b| b == 1).collect::<Vec<bool>>())
        .filter(|p| weight.is_none_or(|w| p.iter().filter(|&&b| b).count() == w))
        .collect();
    let chosen = greedy_pick(pool, rng, target, |a, b, c| sets_form_sunflower(a, b, c));
    BinaryFamily::binary(n, chosen.iter().map(|b| SubsetVector::from_bits(b)).collect()).unwrap()
}

pub fn random_free_mod_d(rng: &mut ChaCha8Rng, d: u32, n: usize, target: usize) -> DFamily {
    let chosen = greedy_pick(cube(d, n), rng, target, |a, b, c| digits_form_sunflower(a, b, c));
    DFamily::mod_d(d, n, chosen.into_iter().map(|c| DVector::new(d, c).unwrap()).collect()).unwrap()
}

pub fn random_capset(rng: &mut ChaCha8Rng, n: usize, target: usize) -> DFamily {
    let chosen = greedy_pick(cube(3, n), rng, target, |a, b, c| digits_form_progression(a, b, c));
    DFamily::mod_d(3, n, chosen.into_iter().map(|c| DVector::new(3, c).unwrap()).collect()).unwrap()
}

pub fn random_target(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi)
}
