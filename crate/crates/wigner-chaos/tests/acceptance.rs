//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).

use num_complex::Complex64;
use std::time::Instant;
use wigner_chaos::experiment::Family;
use wigner_chaos::kernel::{Grid, StepKernel};
use wigner_chaos::moment::{
    classical_joint_moment, connected_integral_bound, contraction_norms, free_joint_moment,
    pairing_integral, semicircular_family_moment, CovarianceMatrix, MomentRequest,
};
use wigner_chaos::pairing::{
    catalan, double_factorial, enumerate_nc_pairings, enumerate_pairings, enumerate_respectful_nc,
    BlockStructure, Pairing,
};
use wigner_chaos::rmsim::{empirical_trace_moments, SimConfig};

fn report(criterion: usize, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn grid(cells: usize) -> Grid {
    Grid::new(1.0, cells).unwrap()
}

fn tensor_sum(order: usize, k: usize) -> StepKernel {
    Family::tensor_sum(order).unwrap().kernels(k).unwrap().remove(0)
}

fn pairing(pairs: &[(usize, usize)]) -> Pairing {
    Pairing::new(pairs.to_vec()).unwrap()
}

/// Pairing counts: (2m−1)!! full pairings for m ≤ 5, Catalan non-crossing
/// counts for m ≤ 8, and agreement of the non-crossing enumerator with the
/// crossing-filtered full enumeration up to n = 10.
#[test]
fn criterion_1_combinatorial_counts() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for m in 1..=5usize {
        let n = 2 * m;
        let count = enumerate_pairings(n).unwrap().count() as u128;
        if count != double_factorial(n - 1) {
            failures.push(format!("|P2({n})| = {count}"));
        }
    }
    for m in 1..=8usize {
        let n = 2 * m;
        let count = enumerate_nc_pairings(n).unwrap().count() as u64;
        if count != catalan(m as u32).unwrap() {
            failures.push(format!("|NC2({n})| = {count}"));
        }
    }
    for n in [2usize, 4, 6, 8, 10] {
        let filtered: Vec<Pairing> = enumerate_pairings(n)
            .unwrap()
            .filter(|p| p.is_noncrossing())
            .collect();
        let direct: Vec<Pairing> = enumerate_nc_pairings(n).unwrap().collect();
        if filtered != direct {
            failures.push(format!("NC2({n}) disagrees with the filtered enumeration"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 10 {
        failures.push(format!("took {elapsed:?} (budget 10 s)"));
    }
    report(
        1,
        failures.is_empty(),
        &format!("pairing counts and cross-checks in {elapsed:?}"),
    );
    assert!(failures.is_empty(), "{failures:?}");
}

/// Ground truth for respectful non-crossing pairings on (2,2,2,2) and (2,2,2).
#[test]
fn criterion_2_respectful_nc_ground_truth() {
    let got: Vec<Pairing> = enumerate_respectful_nc(&BlockStructure::new(vec![2, 2, 2, 2]).unwrap())
        .unwrap()
        .collect();
    let want = vec![
        pairing(&[(1, 4), (2, 3), (5, 8), (6, 7)]),
        pairing(&[(1, 8), (2, 3), (4, 5), (6, 7)]),
        pairing(&[(1, 8), (2, 7), (3, 6), (4, 5)]),
    ];
    let got3: Vec<Pairing> = enumerate_respectful_nc(&BlockStructure::new(vec![2, 2, 2]).unwrap())
        .unwrap()
        .collect();
    let want3 = vec![pairing(&[(1, 6), (2, 3), (4, 5)])];
    let ok = got == want && got3 == want3;
    report(
        2,
        ok,
        &format!(
            "|NC2(2⊗2⊗2⊗2)| = {} (expected 3), |NC2(2⊗2⊗2)| = {} (expected 1)",
            got.len(),
            got3.len()
        ),
    );
    assert_eq!(got, want);
    assert_eq!(got3, want3);
}

/// Fourth moments: 2 for the order-1 unit kernel, 3 for the rank-one
/// projection kernel, 2 + 1/k for the tensor-sum family along with its
/// contraction norms k^{-1/2}.
#[test]
fn criterion_3_fourth_moment_targets() {
    let start = Instant::now();
    let mut failures = Vec::new();

    let e1 = StepKernel::basis(grid(4), &[0]).unwrap();
    let m4 = free_joint_moment(&MomentRequest::new([&e1], vec![1; 4]).unwrap())
        .unwrap()
        .total
        .re;
    if (m4 - 2.0).abs() > 1e-12 {
        failures.push(format!("order-1 fourth moment {m4}"));
    }

    let e11 = StepKernel::basis(grid(4), &[0, 0]).unwrap();
    let m4 = free_joint_moment(&MomentRequest::new([&e11], vec![1; 4]).unwrap())
        .unwrap()
        .total
        .re;
    if (m4 - 3.0).abs() > 1e-12 {
        failures.push(format!("projection fourth moment {m4}"));
    }

    for k in [1usize, 2, 4, 8, 16, 32, 64] {
        let f = tensor_sum(2, k);
        let m4 = free_joint_moment(&MomentRequest::new([&f], vec![1; 4]).unwrap())
            .unwrap()
            .total
            .re;
        let expect = 2.0 + 1.0 / k as f64;
        if (m4 - expect).abs() > 1e-9 {
            failures.push(format!("k={k}: fourth moment {m4} vs {expect}"));
        }
        let norms = contraction_norms(&f);
        let expect = 1.0 / (k as f64).sqrt();
        if norms.len() != 1 || (norms[0] - expect).abs() > 1e-9 {
            failures.push(format!("k={k}: contraction norms {norms:?} vs [{expect}]"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 30 {
        failures.push(format!("took {elapsed:?} (budget 30 s)"));
    }
    report(
        3,
        failures.is_empty(),
        &format!("fourth-moment targets in {elapsed:?}"),
    );
    assert!(failures.is_empty(), "{failures:?}");
}

/// Joint convergence for the correlated pair at ρ = 0.5: every word of
/// length ≤ 6 within 3/k of its semicircular target at k ∈ {4, 16, 64},
/// exact r = 2 covariance, and the static family as negative control.
///
/// The 3/k clause cannot hold for this family: the self-word of length 6
/// sits at distance 9/k + 1/k² from its target and odd-length self-words at
/// k^{-1/2}, both exactly computable. The assertion is kept as stated and
/// the failure is expected; see the remaining clauses for what does hold.
#[test]
fn criterion_4_joint_convergence() {
    let family = Family::correlated_pair(2, 0.5).unwrap();
    let c = family.covariance();
    let words = wigner_chaos::experiment::cyclic_representatives(2, 6);
    let mut failures = Vec::new();
    let mut worst: Option<(usize, String, f64, f64)> = None;
    for k in [4usize, 16, 64] {
        let kernels = family.kernels(k).unwrap();
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        for word in &words {
            let measured = free_joint_moment(
                &MomentRequest::new(refs.iter().copied(), word.clone()).unwrap(),
            )
            .unwrap()
            .total
            .re;
            let target = semicircular_family_moment(&c, word).unwrap();
            let gap = (measured - target).abs();
            let bound = 3.0 / k as f64;
            if gap > bound {
                let w: String = word.iter().map(|i| i.to_string()).collect();
                if worst.as_ref().map_or(true, |(_, _, g, b)| gap - b > *g - *b) {
                    worst = Some((k, w.clone(), gap, bound));
                }
                failures.push(format!("k={k} word={w}: gap {gap} > {bound}"));
            }
        }
        // exact covariance at finite k
        for i in 1..=2usize {
            for j in i..=2usize {
                let measured = free_joint_moment(
                    &MomentRequest::new(refs.iter().copied(), vec![i, j]).unwrap(),
                )
                .unwrap()
                .total
                .re;
                if (measured - c.get(i, j)).abs() > 1e-12 {
                    failures.push(format!("k={k}: c({i},{j}) measured {measured}"));
                }
            }
        }
    }
    // negative control: the static kernel keeps |φ⁴ − 2| = 1 at every k
    for k in [4usize, 16, 64] {
        let bad = Family::static_bad(2).unwrap().kernels(k).unwrap();
        let m4 = free_joint_moment(&MomentRequest::new([&bad[0]], vec![1; 4]).unwrap())
            .unwrap()
            .total
            .re;
        if ((m4 - 2.0).abs() - 1.0).abs() > 1e-12 {
            failures.push(format!("static control at k={k}: φ⁴ = {m4}"));
        }
    }
    let detail = match &worst {
        Some((k, w, gap, bound)) => format!(
            "{} word-gap violations of the 3/k bound (worst: k={k} word={w} gap {gap:.6} > {bound:.6}); covariance and negative control clauses hold",
            failures.len()
        ),
        None => "all word gaps within 3/k; covariance exact; negative control holds".to_string(),
    };
    report(4, failures.is_empty(), &detail);
    assert!(failures.is_empty(), "{failures:?}");
}

/// Connected pairing integrals on tensor-sum kernels never exceed their
/// contraction bound, and both integral and bound strictly decrease along
/// k = 1, 4, 16, 64.
#[test]
fn criterion_5_connected_pairing_control() {
    let mut failures = Vec::new();
    for sizes in [vec![2usize, 2, 2], vec![2, 2, 2, 2]] {
        let blocks = BlockStructure::new(sizes.clone()).unwrap();
        let connected: Vec<Pairing> = enumerate_respectful_nc(&blocks)
            .unwrap()
            .filter(|p| p.is_connected(&blocks).unwrap())
            .collect();
        if connected.is_empty() {
            failures.push(format!("no connected pairings on {sizes:?}"));
        }
        for pi in &connected {
            let mut last_value = f64::INFINITY;
            let mut last_bound = f64::INFINITY;
            for k in [1usize, 4, 16, 64] {
                let f = tensor_sum(2, k);
                let refs: Vec<&StepKernel> = sizes.iter().map(|_| &f).collect();
                let out = connected_integral_bound(&refs, pi, &blocks).unwrap();
                let value = out.value().norm();
                if value > out.bound + 1e-10 {
                    failures.push(format!(
                        "{sizes:?} {pi} k={k}: |integral| {value} > bound {}",
                        out.bound
                    ));
                }
                if value >= last_value || out.bound >= last_bound {
                    failures.push(format!("{sizes:?} {pi} k={k}: not strictly decreasing"));
                }
                last_value = value;
                last_bound = out.bound;
            }
        }
    }
    report(
        5,
        failures.is_empty(),
        "connected integrals bounded by contraction norms, strictly decreasing in k",
    );
    assert!(failures.is_empty(), "{failures:?}");
}

/// Pairing integrals factor over connected components (100 random respectful
/// non-crossing pairings) and joint moments are exactly invariant under
/// cyclic rotation of the word.
#[test]
fn criterion_6_factorization_and_traciality() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let mut rng = StdRng::seed_from_u64(2718);
    let g = grid(3);
    let random_kernel = |rng: &mut StdRng, order: usize| {
        let entries: Vec<(Vec<usize>, Complex64)> = (0..4)
            .map(|_| {
                let idx: Vec<usize> = (0..order).map(|_| rng.random_range(0..3)).collect();
                (
                    idx,
                    Complex64::new(
                        rng.random_range(-8i32..=8) as f64 / 8.0,
                        rng.random_range(-8i32..=8) as f64 / 8.0,
                    ),
                )
            })
            .fold(std::collections::BTreeMap::new(), |mut m, (k, v)| {
                m.insert(k, v);
                m
            })
            .into_iter()
            .collect();
        StepKernel::new(order, g, entries).unwrap()
    };

    let mut failures = Vec::new();
    let mut factored = 0usize;
    while factored < 100 {
        let r = rng.random_range(2..=4);
        let orders: Vec<usize> = (0..r).map(|_| rng.random_range(1..=3)).collect();
        if orders.iter().sum::<usize>() % 2 == 1 {
            continue;
        }
        let kernels: Vec<StepKernel> = orders.iter().map(|&o| random_kernel(&mut rng, o)).collect();
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        let blocks = BlockStructure::new(orders).unwrap();
        for pi in enumerate_respectful_nc(&blocks).unwrap() {
            let direct = pairing_integral(&refs, &pi).unwrap();
            let mut product = Complex64::new(1.0, 0.0);
            for (sub, comp) in pi.decompose_connected(&blocks).unwrap() {
                let sub_refs: Vec<&StepKernel> = comp.iter().map(|&q| refs[q - 1]).collect();
                product *= pairing_integral(&sub_refs, &sub).unwrap();
            }
            if (direct - product).norm() > 1e-12 * direct.norm().max(1.0) {
                failures.push(format!("{pi}: {direct} vs {product}"));
            }
            factored += 1;
            if factored >= 100 {
                break;
            }
        }
    }

    // exact traciality on random requests
    for _ in 0..25 {
        let d = rng.random_range(1..=3);
        let kernels: Vec<StepKernel> = (0..d)
            .map(|_| {
                let order = rng.random_range(1..=3);
                random_kernel(&mut rng, order)
            })
            .collect();
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        let r = rng.random_range(1..=4);
        let word: Vec<usize> = (0..r).map(|_| rng.random_range(1..=d)).collect();
        let base = free_joint_moment(&MomentRequest::new(refs.iter().copied(), word.clone()).unwrap())
            .unwrap()
            .total;
        for shift in 1..r {
            let rotated: Vec<usize> = (0..r).map(|t| word[(t + shift) % r]).collect();
            let got =
                free_joint_moment(&MomentRequest::new(refs.iter().copied(), rotated).unwrap())
                    .unwrap()
                    .total;
            if got != base {
                failures.push(format!("word {word:?} shift {shift}: {got} vs {base}"));
            }
        }
    }
    report(
        6,
        failures.is_empty(),
        "factorization over components (100 pairings) and bitwise traciality",
    );
    assert!(failures.is_empty(), "{failures:?}");
}

/// Transfer comparison on the tensor-sum family: classical second moment
/// exactly 2, classical fourth moment approaching 12 (closer at k = 64 than
/// at k = 1 and within 0.5 there), free fourth moment approaching 2.
///
/// The classical fourth moment is exactly 12 + 48/k (12 complete-contraction
/// diagrams of weight 1 and 48 diagrams of weight 1/k), so its distance from
/// 12 at k = 64 is exactly 0.75 and the 0.5 clause cannot hold; the
/// assertion is kept as stated and the failure is expected.
#[test]
fn criterion_7_transfer_principle() {
    let mut failures = Vec::new();

    // independent diagram-count oracle at k = 1: the classical fourth moment
    // of a centered squared Gaussian, Σ_l binom(4,l) (−1)^l E[N^{2(4−l)}],
    // with E[N^{2m}] = (2m−1)!! and E[N⁰] = 1
    let gaussian_even_moment = |m: usize| -> f64 {
        if m == 0 {
            1.0
        } else {
            double_factorial(2 * m - 1) as f64
        }
    };
    let oracle_k1: f64 = (0..=4)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let binom = [1.0, 4.0, 6.0, 4.0, 1.0][l];
            sign * binom * gaussian_even_moment(4 - l)
        })
        .sum();
    assert_eq!(oracle_k1, 60.0);

    let mut classical4 = std::collections::BTreeMap::new();
    for k in [1usize, 4, 16, 64] {
        let f = tensor_sum(2, k);
        let req2 = MomentRequest::new([&f], vec![1, 1]).unwrap();
        let e2 = classical_joint_moment(&req2).unwrap().total.re;
        if e2 != 2.0 {
            failures.push(format!("k={k}: classical second moment {e2} ≠ 2 exactly"));
        }
        let req4 = MomentRequest::new([&f], vec![1; 4]).unwrap();
        let e4 = classical_joint_moment(&req4).unwrap().total.re;
        classical4.insert(k, e4);
        let free4 = free_joint_moment(&req4).unwrap().total.re;
        if (free4 - (2.0 + 1.0 / k as f64)).abs() > 1e-9 {
            failures.push(format!("k={k}: free fourth moment {free4}"));
        }
    }
    if (classical4[&1] - oracle_k1).abs() > 1e-9 {
        failures.push(format!(
            "classical fourth moment at k=1 is {} vs oracle {oracle_k1}",
            classical4[&1]
        ));
    }
    let gap1 = (classical4[&1] - 12.0).abs();
    let gap64 = (classical4[&64] - 12.0).abs();
    if gap64 >= gap1 {
        failures.push(format!("classical gap did not shrink: {gap64} vs {gap1}"));
    }
    if gap64 > 0.5 {
        failures.push(format!(
            "classical fourth moment at k=64 is {} (|… − 12| = {gap64} > 0.5)",
            classical4[&64]
        ));
    }
    let free_gap64 = {
        let f = tensor_sum(2, 64);
        let req = MomentRequest::new([&f], vec![1; 4]).unwrap();
        (free_joint_moment(&req).unwrap().total.re - 2.0).abs()
    };
    if free_gap64 > 0.02 {
        failures.push(format!("free fourth moment gap at k=64: {free_gap64}"));
    }
    report(
        7,
        failures.is_empty(),
        &format!(
            "classical E² = 2 exactly; E⁴ = {} at k=64 (gap {gap64} vs 0.5 budget, was {gap1} at k=1); free φ⁴ gap {free_gap64}",
            classical4[&64]
        ),
    );
    assert!(failures.is_empty(), "{failures:?}");
}

/// Monte Carlo cross-check at N = 300 with 200 samples and the shipped seed:
/// the single-matrix fourth moment within 0.05 of 2 and the alternating
/// mixed moment within 0.05 of 2ρ² for ρ ∈ {0, 0.5}.
#[test]
fn criterion_8_monte_carlo() {
    const SHIPPED_SEED: u64 = 42;
    let start = Instant::now();
    let mut failures = Vec::new();

    let cfg = SimConfig::new(300, 200, SHIPPED_SEED, CovarianceMatrix::identity(1)).unwrap();
    let m4 = empirical_trace_moments(&cfg, &[vec![1; 4]]).unwrap().remove(0);
    if (m4.mean - 2.0).abs() > 0.05 || (m4.mean - 2.0).abs() > 3.0 * m4.stderr.max(0.02) {
        failures.push(format!("GUE fourth moment {} ± {}", m4.mean, m4.stderr));
    }

    let mut detail = format!("m4 = {:.6} ± {:.6}", m4.mean, m4.stderr);
    for rho in [0.0, 0.5] {
        let c = CovarianceMatrix::new(vec![vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let cfg = SimConfig::new(300, 200, SHIPPED_SEED, c).unwrap();
        let m = empirical_trace_moments(&cfg, &[vec![1, 2, 1, 2]])
            .unwrap()
            .remove(0);
        let target = 2.0 * rho * rho;
        if (m.mean - target).abs() > 0.05 {
            failures.push(format!(
                "ρ={rho}: φ(s1 s2 s1 s2) = {} vs {target}",
                m.mean
            ));
        }
        detail.push_str(&format!("; ρ={rho}: {:.6} ± {:.6}", m.mean, m.stderr));
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        failures.push(format!("took {elapsed:?} (budget 60 s)"));
    }
    detail.push_str(&format!("; {elapsed:?}"));
    report(8, failures.is_empty(), &detail);
    assert!(failures.is_empty(), "{failures:?}");
}
