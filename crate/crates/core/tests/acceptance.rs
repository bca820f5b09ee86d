//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sunflower_core::bounds::{self, ExactValue};
use sunflower_core::exactnum::{self, CycElem};
use sunflower_core::search::{self, SearchConfig, SearchMode};
use sunflower_core::setsys::{self, AnyFamily, BinaryFamily, SubsetVector};
use sunflower_core::tensor::{self, CertifyOptions, Limits, Space, VerifyMode};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_constants() -> Outcome {
    let mu = bounds::mu3_upper().truncated_decimal(9);
    ensure(mu == "1.889881574", || format!("mu3 upper = {mu}"))?;
    let c3 = bounds::c_d(3);
    ensure(c3.exact == Some(ExactValue::Integer(3.into())), || format!("c_3 = {:?}", c3.exact))?;
    let capacity = bounds::parse_decimal(bounds::CAPSET_CAPACITY_DEFAULT).unwrap();
    let (_, root) = bounds::capset_reduction(1, &capacity);
    let ExactValue::Root { radicand, degree: 2 } = root.exact.clone().unwrap() else {
        return Err(format!("unexpected form {:?}", root.exact));
    };
    let cap = BigRational::new(1938.into(), 1000.into());
    ensure(radicand <= &cap * &cap, || format!("1 + C = {radicand} exceeds 1.938^2"))?;
    Ok(format!("mu3 <= {mu}, c_3 = 3, sqrt(1+C) = {:.6} <= 1.938", root.float))
}

fn instances() -> Vec<Space> {
    let mut v: Vec<Space> = (1..=4).map(|n| Space::Binary { n }).collect();
    v.extend([Space::ModD { n: 3, d: 3 }, Space::ModD { n: 2, d: 4 }, Space::ModD { n: 2, d: 5 }]);
    v
}

fn oracle_t(space: &Space, x: &[u32], y: &[u32], z: &[u32]) -> i128 {
    match space {
        Space::Binary { .. } => t_binary(x, y, z),
        _ => t_mod_d(x, y, z),
    }
}

fn all_points(space: &Space) -> Vec<[u64; 3]> {
    let size = space.axis_size().unwrap();
    (0..size * size * size).map(|i| [i / (size * size), i / size % size, i % size]).collect()
}

fn c2_term_sum() -> Outcome {
    let mut total = 0usize;
    for space in instances() {
        let ts = tensor::build_term_sum(space, &Limits::default()).map_err(|e| e.to_string())?;
        let points = all_points(&space);
        let bad = points.par_iter().find_first(|p| {
            let [x, y, z] = p.map(|c| space.decode(c));
            let oracle = oracle_t(&space, &x, &y, &z);
            let direct = space.eval_t_packed(p[0], p[1], p[2]);
            let expanded = ts.evaluate(p[0], p[1], p[2]);
            direct != oracle || expanded != Some(BigRational::from(BigInt::from(oracle)))
        });
        if let Some(p) = bad {
            return Err(format!("{space:?}: mismatch at {p:?}"));
        }
        total += points.len();
    }
    Ok(format!("{total} points, exact equality on {} instances", instances().len()))
}

fn c3_decompose() -> Outcome {
    let limits = Limits::default();
    for space in instances() {
        let dec = tensor::decompose(tensor::build_term_sum(space, &limits).unwrap()).map_err(|e| e.to_string())?;
        let out = tensor::verify_decomposition(&dec, &VerifyMode::Exhaustive, &limits).map_err(|e| e.to_string())?;
        ensure(out.ok && out.checked == all_points(&space).len() as u64, || {
            format!("{space:?}: reconstruction failed at {:?}", out.witness)
        })?;
    }
    let mut checked = 0;
    for n in 0..=10usize {
        let dec = tensor::decompose(tensor::build_term_sum(Space::Binary { n }, &limits).unwrap()).unwrap();
        let bound: BigUint = (0..=n / 3).map(|k| oracle_binomial(n, k)).sum::<BigUint>() * 3u32;
        ensure(BigUint::from(dec.slice_count()) <= bound, || {
            format!("binary n={n}: {} slices > {bound}", dec.slice_count())
        })?;
        ensure(dec.max_factor_measure() as usize <= n / 3, || format!("binary n={n}: factor too large"))?;
        checked += 1;
    }
    for d in 3..=6u32 {
        for n in 0..=6usize {
            let dec = tensor::decompose(tensor::build_term_sum(Space::ModD { n, d }, &limits).unwrap()).unwrap();
            let bound: BigUint = (0..=2 * n / 3)
                .map(|k| oracle_binomial(n, k) * BigUint::from(d - 1).pow(k as u32))
                .sum::<BigUint>()
                * 3u32;
            ensure(BigUint::from(dec.slice_count()) <= bound, || {
                format!("mod-{d} n={n}: {} slices > {bound}", dec.slice_count())
            })?;
            checked += 1;
        }
    }
    Ok(format!("exhaustive reconstruction on {} instances, {checked} slice-count bounds", instances().len()))
}

fn oracle_binomial(n: usize, k: usize) -> BigUint {
    // Pascal's rule, independent of the library's binomial
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::one(); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row.get(k).cloned().unwrap_or_default()
}

fn c4_chain() -> Outcome {
    let mut count = 0;
    for n in 0..=50u64 {
        for d in 3..=20u32 {
            ensure(bounds::chain_inequality_check(n, d), || format!("fails at n={n}, D={d}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} (n, D) pairs"))
}

fn c5_certify() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let opts = CertifyOptions::default();
    let mut families: Vec<AnyFamily> = Vec::new();
    for i in 0..100 {
        if i % 2 == 0 {
            let d = [3, 4, 5][(i / 2) % 3];
            let n = 1 + (i / 6) % 3;
            let target = random_target(&mut rng, 1, 12);
            families.push(AnyFamily::ModD(random_free_mod_d(&mut rng, d, n, target)));
        } else {
            let n = 1 + (i / 2) % 6;
            let weight = random_target(&mut rng, 0, n);
            let target = random_target(&mut rng, 1, 20);
            families.push(AnyFamily::Binary(random_free_binary(&mut rng, n, Some(weight), target)));
        }
    }
    for (i, fam) in families.iter().enumerate() {
        let cert = tensor::certify_family(fam, &opts).map_err(|e| format!("family {i}: {e}"))?;
        let size = BigUint::from(fam.len());
        let (slices, closed) = (cert.slice_count_int(), cert.closed_form_int());
        ensure(cert.diagonal_ok && size <= slices && slices <= closed, || {
            format!("family {i}: |A|={size}, slices={slices}, bound={closed}")
        })?;
    }
    Ok(format!("{} families certified", families.len()))
}

fn c6_obstruction() -> Outcome {
    let a = SubsetVector::from_elements(2, &[1]).unwrap();
    let ab = SubsetVector::from_elements(2, &[1, 2]).unwrap();
    let fam = BinaryFamily::binary(2, vec![a.clone(), ab.clone()]).unwrap();
    let verdict = tensor::assert_diagonal(&fam).map_err(|e| e.to_string())?;
    let expected = [a.clone(), a.clone(), ab.clone()];
    ensure(!verdict.ok && verdict.witness.as_ref() == Some(&expected), || {
        format!("verdict {:?}", verdict.witness)
    })?;
    // T({1},{1},{1,2}) = (2-3)(2-1) = -1, off the diagonal
    ensure(t_binary(&[1, 0], &[1, 0], &[1, 1]) == -1, || "oracle value".into())?;
    // certification only goes through after splitting into weight layers
    let cert = tensor::certify_family(&AnyFamily::Binary(fam), &CertifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(cert.layers.len() == 2 && cert.layers.iter().all(|l| l.size == 1), || format!("layers {:?}", cert.layers))?;
    Ok("witness ({1},{1},{1,2})".into())
}

/// Largest free subfamily by enumerating every subfamily.
fn brute_max<T>(cands: &[T], bad: impl Fn(&T, &T, &T) -> bool + Sync) -> usize
where
    T: Sync,
{
    let m = cands.len();
    assert!(m <= 20);
    (0u32..1 << m)
        .into_par_iter()
        .filter(|mask| {
            let chosen: Vec<&T> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &cands[i]).collect();
            free_under(&chosen, |a, b, c| bad(a, b, c))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn c7_search() -> Outcome {
    let mut lines = Vec::new();
    let mut run = |mode: SearchMode, n: usize, oracle: Option<usize>| -> Result<usize, String> {
        let on = search::max_free_family(&SearchConfig::new(mode, n)).map_err(|e| e.to_string())?;
        let off = search::max_free_family(&SearchConfig::new(mode, n).with_symmetry(false)).map_err(|e| e.to_string())?;
        ensure(on.optimal && off.optimal, || format!("{mode:?} n={n}: not proved optimal"))?;
        ensure(on.max == off.max, || format!("{mode:?} n={n}: symmetry {} vs {}", on.max, off.max))?;
        ensure(search::witness_is_valid(&on) && search::witness_is_valid(&off), || {
            format!("{mode:?} n={n}: invalid witness")
        })?;
        ensure(on.witness.len() == on.max, || "witness size".into())?;
        let report = search::validate_against_bounds(&on);
        ensure(report.all_hold(), || format!("{mode:?} n={n}: bound violated\n{}", report.table()))?;
        if let Some(o) = oracle {
            ensure(on.max == o, || format!("{mode:?} n={n}: search {} vs oracle {o}", on.max))?;
        }
        lines.push(format!("{mode:?}(n={n})={}", on.max));
        Ok(on.max)
    };
    let bin = |n: usize| {
        let c: Vec<Vec<bool>> = cube(2, n).into_iter().map(|p| p.into_iter().map(|b| b == 1).collect()).collect();
        brute_max(&c, |a, b, c| sets_form_sunflower(a, b, c))
    };
    let dig = |d: u32, n: usize, bad: fn(&[u32], &[u32], &[u32]) -> bool| {
        brute_max(&cube(d, n), |a: &Vec<u32>, b: &Vec<u32>, c: &Vec<u32>| bad(a, b, c))
    };
    ensure(bin(1) == 2 && bin(2) == 3, || "oracle disagrees with F(1)=2, F(2)=3".into())?;
    let mut binary = Vec::new();
    for n in 0..=4 {
        binary.push(run(SearchMode::Binary, n, Some(bin(n)))?);
    }
    binary.push(run(SearchMode::Binary, 5, None)?);
    ensure(binary.windows(2).all(|w| w[0] <= w[1]), || format!("not monotone: {binary:?}"))?;
    ensure(binary[1] == 2 && binary[2] == 3, || format!("{binary:?}"))?;
    for n in 1..=2 {
        run(SearchMode::ModD(3), n, Some(dig(3, n, digits_form_sunflower)))?;
        run(SearchMode::Capset, n, Some(dig(3, n, digits_form_progression)))?;
    }
    run(SearchMode::ModD(3), 3, None)?;
    run(SearchMode::ModD(4), 2, Some(dig(4, 2, digits_form_sunflower)))?;
    let parallel = search::max_free_family(&SearchConfig::new(SearchMode::Binary, 4).with_workers(4)).unwrap();
    let serial = search::max_free_family(&SearchConfig::new(SearchMode::Binary, 4)).unwrap();
    ensure(parallel.witness == serial.witness, || "witness depends on worker count".into())?;
    Ok(lines.join(", "))
}

fn c8_capset_layers() -> Outcome {
    let v = SubsetVector::from_bits(&[true, false, true, true]);
    ensure(setsys::encode_pairs(&v).unwrap() == vec![1, 3], || "[1,0,1,1]".into())?;
    let w = SubsetVector::from_bits(&[false, true, false, false]);
    ensure(setsys::encode_pairs(&w).unwrap() == vec![2, 0], || "[0,1,0,0]".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut layers = 0;
    for i in 0..50 {
        let n = 1 + i % 5;
        let target = random_target(&mut rng, 1, 40);
        let fam = random_free_binary(&mut rng, 2 * n, None, target);
        ensure(setsys::family_is_sunflower_free(&fam).free, || format!("generator produced a sunflower ({i})"))?;
        let enc = setsys::pair_encode(&fam).unwrap();
        ensure(enc.decode() == fam, || "pair encoding does not round-trip".into())?;
        for x in 0..1u64 << n {
            let x = SubsetVector::from_word(n, x);
            let layer = setsys::layer_extract(&enc, &x).unwrap();
            let rows: Vec<Vec<u32>> = layer.members().iter().map(|m| m.as_slice().to_vec()).collect();
            ensure(free_under(&rows, |a, b, c| digits_form_progression(a, b, c)), || {
                format!("family {i}, layer {x}: oracle finds a progression")
            })?;
            ensure(setsys::is_capset(&layer).unwrap().free, || format!("family {i}, layer {x} not a capset"))?;
            layers += 1;
        }
    }
    Ok(format!("50 families, {layers} layers, encodings [1,3] and [2,0]"))
}

fn c9_cyclotomic() -> Outcome {
    let mut checks = 0u64;
    for d in 1..=12u32 {
        // prod over t | d of Phi_t equals x^d - 1
        let mut prod = vec![BigInt::one()];
        for t in (1..=d).filter(|t| d % t == 0) {
            let phi = exactnum::cyclotomic_poly(t).unwrap();
            let mut next = vec![BigInt::zero(); prod.len() + phi.coeffs().len() - 1];
            for (i, a) in prod.iter().enumerate() {
                for (j, b) in phi.coeffs().iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            prod = next;
        }
        let mut expect = vec![BigInt::zero(); d as usize + 1];
        expect[0] = BigInt::from(-1);
        expect[d as usize] = BigInt::one();
        ensure(prod == expect, || format!("Phi product identity fails for D={d}"))?;

        let powers: Vec<CycElem> = (0..d as i64).map(|e| exactnum::zeta_pow(d, e).unwrap()).collect();
        ensure(exactnum::zeta_pow(d, d as i64).unwrap() == CycElem::one(d), || format!("zeta^{d} != 1"))?;
        let elems: Vec<CycElem> = powers
            .iter()
            .enumerate()
            .map(|(i, p)| &p.scale(&BigInt::from(i as i64 - 3)) + &CycElem::from_int(d, i as i64 % 4))
            .collect();
        for a in &elems {
            ensure(a.conj().conj() == *a, || format!("conj involution D={d}"))?;
            for b in &elems {
                ensure(a + b == b + a && a * b == b * a, || format!("commutativity D={d}"))?;
                ensure(&(a - b) + b == *a, || format!("subtraction D={d}"))?;
                ensure((a * b).conj() == &a.conj() * &b.conj(), || format!("conj hom D={d}"))?;
                for c in elems.iter().step_by(3) {
                    ensure(&(a * b) * c == a * &(b * c), || format!("associativity D={d}"))?;
                    ensure(a * &(b + c) == &(a * b) + &(a * c), || format!("distributivity D={d}"))?;
                    checks += 1;
                }
            }
        }
        for t in 0..d {
            let s = exactnum::orthogonality_sum(d, t).unwrap();
            let expect = if t == 0 { BigRational::one() } else { BigRational::zero() };
            ensure(s == expect, || format!("orthogonality D={d}, t={t}: {s}"))?;
            // the same sum through character values
            let mut acc = CycElem::zero(d);
            for j in 0..d {
                acc = &acc + &exactnum::character_value(d, j, t).unwrap();
            }
            let expect_int = if t == 0 { Some(BigInt::from(d)) } else { Some(BigInt::zero()) };
            ensure(acc.to_integer() == expect_int, || format!("character sum D={d}, t={t}"))?;
        }
    }
    Ok(format!("D <= 12, {checks} ring-law triples"))
}

fn c10_capacity() -> Outcome {
    let b = bounds::per_layer_bound(300);
    let root = (bounds::log2_big(&b) / 300.0).exp2();
    let target = 3.0 / 2f64.powf(2.0 / 3.0);
    ensure((root - target).abs() < 0.01, || format!("root {root} vs {target}"))?;
    Ok(format!("per_layer_bound(300)^(1/300) = {root:.6}, limit {target:.6}"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 constants", c1_constants),
        ("2 tensor soundness", c2_term_sum),
        ("3 decomposition verification", c3_decompose),
        ("4 chain inequality", c4_chain),
        ("5 certification end-to-end", c5_certify),
        ("6 diagonality obstruction", c6_obstruction),
        ("7 extremal search vs bounds", c7_search),
        ("8 capset-layer property", c8_capset_layers),
        ("9 orthogonality and cyclotomic suite", c9_cyclotomic),
        ("10 capacity convergence", c10_capacity),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.2}s) {detail}"),
            Err(why) => {
                println!("criterion {name}: FAIL ({secs:.2}s) {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
