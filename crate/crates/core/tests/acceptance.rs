//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::cmp::Ordering;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bairelab::baire::{
    baire_norm, baire_norm_oracle, baire_norm_zero, check_branch_isometry,
    check_incomparable_additivity, check_root_decomposition, BaireVector, ExponentP,
};
use bairelab::basis::{BasisKind, NormValue, TOLERANCE};
use bairelab::checkers::{
    bs_obstruction_check, convex_block_min, delta_family, weak_null_probe, BlockMethod, Status,
    VectorFamily, Witness,
};
use bairelab::rational::{as_small_natural, int, pow, ratio};
use bairelab::step::{bush_check, rademacher_bush, BushCondition};
use bairelab::tree::{generate_tree, order_index, subtree_at, FiniteTree, TreeFamily, TreeNode};
use bairelab::Exec;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const EXACT_PAIRS: [(BasisKind, u32); 5] = [
    (BasisKind::Lp1, 1),
    (BasisKind::C0, 1),
    (BasisKind::Lp1, 2),
    (BasisKind::Lp2, 2),
    (BasisKind::C0, 2),
];

fn exact_pairs() -> Vec<(BasisKind, ExponentP)> {
    EXACT_PAIRS
        .iter()
        .map(|&(k, p)| (k, ExponentP::new(int(p as i64)).unwrap()))
        .collect()
}

fn random_coef(rng: &mut ChaCha8Rng, allow_zero: bool) -> BigRational {
    loop {
        let a: i64 = rng.gen_range(-5..=5);
        if a != 0 || allow_zero {
            return ratio(a, rng.gen_range(1..=6));
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, tree: &Arc<FiniteTree>) -> BaireVector {
    let entries: Vec<_> = tree
        .nodes()
        .map(|n| (n.clone(), random_coef(rng, true)))
        .collect();
    BaireVector::new(tree.clone(), entries).unwrap()
}

/// Every prefix-closed tree with at most `max_nodes` nodes and entries `< k`,
/// built by choosing a child subset for each node in breadth-first order.
fn all_trees(max_nodes: usize, k: u32) -> Vec<Vec<TreeNode>> {
    fn grow(
        nodes: &mut Vec<TreeNode>,
        next: usize,
        max: usize,
        k: u32,
        out: &mut Vec<Vec<TreeNode>>,
    ) {
        if next == nodes.len() {
            out.push(nodes.clone());
            return;
        }
        let parent = nodes[next].clone();
        for mask in 0u32..1 << k {
            let count = mask.count_ones() as usize;
            if nodes.len() + count > max {
                continue;
            }
            let before = nodes.len();
            nodes.extend(
                (0..k)
                    .filter(|e| mask >> e & 1 == 1)
                    .map(|e| parent.child(e)),
            );
            grow(nodes, next + 1, max, k, out);
            nodes.truncate(before);
        }
    }
    let mut out = vec![Vec::new()];
    grow(&mut vec![TreeNode::root()], 0, max_nodes, k, &mut out);
    out
}

fn oracle_equivalence() -> Outcome {
    let pairs = exact_pairs();
    let trees = all_trees(8, 3);
    let pool: Vec<BigRational> = (-5..=5)
        .flat_map(|a| (1..=6).map(move |b| ratio(a, b)))
        .collect();
    let checks: usize = trees
        .par_iter()
        .enumerate()
        .map(|(t, nodes)| -> Result<usize, String> {
            let tree = Arc::new(FiniteTree::new(nodes.iter().cloned()).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
            for _ in 0..200 {
                let entries = nodes
                    .iter()
                    .map(|n| (n.clone(), pool[rng.gen_range(0..pool.len())].clone()));
                let x = BaireVector::new(tree.clone(), entries).unwrap();
                for (kind, p) in &pairs {
                    let dp = baire_norm(&x, *kind, p);
                    let oracle = baire_norm_oracle(&x, *kind, p).map_err(|e| e.to_string())?;
                    ensure(
                        dp.is_exact() && dp.power_base() == oracle.power_base(),
                        || format!("{kind} p={p} on {:?}: dp {dp} oracle {oracle}", x.coeffs()),
                    )?;
                }
            }
            Ok(200 * pairs.len())
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(format!("{} trees, {checks} comparisons", trees.len()))
}

fn rank_laws() -> Outcome {
    for k in 1..=3 {
        for d in 0..=4 {
            let o = order_index(&generate_tree(TreeFamily::FullKary { k, d }).unwrap());
            ensure(o == d + 1, || {
                format!("full_kary({k},{d}) has order index {o}")
            })?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut inequalities = 0;
    for seed in 0..1000u64 {
        let n = rng.gen_range(1..=30);
        let tree = generate_tree(TreeFamily::Random { n, seed }).unwrap();
        let o = order_index(&tree);
        let expected = tree.height().map_or(0, |h| h + 1);
        ensure(o == expected, || {
            format!("seed {seed}: order index {o}, height-based {expected}")
        })?;
        for k in tree.root_children() {
            let sub = order_index(&subtree_at(&tree, k));
            ensure(sub < o, || {
                format!("seed {seed}, child {k}: {sub} not below {o}")
            })?;
            inequalities += 1;
        }
    }
    Ok(format!(
        "15 full trees, {inequalities} root-child inequalities"
    ))
}

/// A random tree with at least two root children.
fn branching_tree(rng: &mut ChaCha8Rng) -> Arc<FiniteTree> {
    loop {
        let n = rng.gen_range(4..=16);
        let tree = generate_tree(TreeFamily::Random { n, seed: rng.gen() }).unwrap();
        if tree.root_children().len() >= 2 {
            return Arc::new(tree);
        }
    }
}

fn exact_identities() -> Outcome {
    let pairs = exact_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..500 {
        let (kind, p) = &pairs[i % pairs.len()];
        let tree = branching_tree(&mut rng);
        let children = tree.root_children();
        let ys: Vec<BaireVector> = children
            .iter()
            .map(|&c| {
                let entries: Vec<_> = tree
                    .nodes()
                    .filter(|n| n.entries().first() == Some(&c))
                    .map(|n| (n.clone(), random_coef(&mut rng, true)))
                    .collect();
                BaireVector::new(tree.clone(), entries).unwrap()
            })
            .collect();
        let coeffs: Vec<BigRational> = ys.iter().map(|_| random_coef(&mut rng, false)).collect();
        let report =
            check_incomparable_additivity(&ys, &coeffs, *kind, p).map_err(|e| e.to_string())?;
        ensure(
            report.passed
                && report.lhs.is_exact()
                && report.lhs.compare(&report.rhs) == Ordering::Equal,
            || format!("additivity {i}: {} vs {}", report.lhs, report.rhs),
        )?;

        let entries: Vec<_> = tree
            .nodes()
            .filter(|n| !n.is_root())
            .map(|n| (n.clone(), random_coef(&mut rng, true)))
            .collect();
        let x = BaireVector::new(tree.clone(), entries).unwrap();
        let report = check_root_decomposition(&x, *kind, p).map_err(|e| e.to_string())?;
        ensure(
            report.passed
                && report.lhs.is_exact()
                && report.lhs.compare(&report.rhs) == Ordering::Equal,
            || format!("root decomposition {i}: {} vs {}", report.lhs, report.rhs),
        )?;

        let nodes: Vec<&TreeNode> = tree.nodes().collect();
        let end = nodes[rng.gen_range(0..nodes.len())].clone();
        let entries: Vec<_> = end
            .prefixes()
            .map(|n| (n, random_coef(&mut rng, true)))
            .collect();
        let chain = BaireVector::new(tree.clone(), entries).unwrap();
        let report = check_branch_isometry(&chain, *kind, p).map_err(|e| e.to_string())?;
        ensure(
            report.passed && report.lhs.compare(&report.rhs) == Ordering::Equal,
            || format!("branch isometry {i}: {} vs {}", report.lhs, report.rhs),
        )?;
    }
    Ok("500 instances of each identity".into())
}

fn banach_saks_witness() -> Outcome {
    for n in 2..=6u32 {
        let l1 = delta_family(n, BasisKind::Lp1, ExponentP::one()).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let v = bs_obstruction_check(&l1, &int(1), exec).map_err(|e| e.to_string())?;
            ensure(v.status == Status::Pass, || {
                format!("l1 family of size {n}: {v:?}")
            })?;
        }
        let l2 = delta_family(n, BasisKind::Lp2, ExponentP::two()).unwrap();
        let v = bs_obstruction_check(&l2, &int(1), Exec::Sequential).map_err(|e| e.to_string())?;
        let Some(Witness::BanachSaks { value, .. }) = &v.witness else {
            return Err(format!("l2 family of size {n}: {v:?}"));
        };
        // value = power_base^(1/inverse_exponent); its square must be 1/2.
        let square = match (value.power_base(), exponent(value)) {
            (Some(base), Some(2)) => base.clone(),
            (Some(base), Some(1)) => base * base,
            _ => return Err(format!("inexact witness {value}")),
        };
        ensure(
            v.status == Status::Violated && square == ratio(1, 2),
            || format!("l2 family of size {n}: square {square}"),
        )?;
    }
    Ok("sizes 2..=6, witness square 1/2".into())
}

/// Independent dense recomputation of the Rademacher bush conditions.
fn bush_quantities(k_max: u32) -> Vec<BigRational> {
    (1..=k_max)
        .map(|k| {
            let width = ratio(1, 1 << k);
            let height = int(1 << k);
            (0..1u64 << k).fold(BigRational::zero(), |acc, _| acc + &height * &width)
        })
        .collect()
}

fn bush() -> Outcome {
    let b = rademacher_bush(8).unwrap();
    let v = bush_check(&b, &ratio(1, 2), &int(1));
    ensure(v.status == Status::Pass, || format!("delta 1/2: {v:?}"))?;
    let seps = bush_quantities(8);
    for (k, sep) in seps.iter().enumerate() {
        let lib = bairelab::step::separation(&b, k + 1);
        ensure(
            &lib == sep && sep > &(int(1 << (k + 1)) * ratio(1, 2)),
            || format!("level {}: separation {lib}, expected {sep}", k + 1),
        )?;
    }
    let v = bush_check(&b, &int(1), &int(1));
    match &v.witness {
        Some(Witness::Bush {
            condition: BushCondition::Separation,
            k: 1,
            value,
            ..
        }) if v.status == Status::Violated && value == "2" => {
            Ok("K = 8 passes; delta 1 violated at k = 1 with 2".into())
        }
        _ => Err(format!("delta 1: {v:?}")),
    }
}

/// Minimum of the norm over convex coefficients with a common denominator `≤ 6`.
fn grid_min(family: &VectorFamily, start: usize, len: usize) -> NormValue {
    fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|first| {
                compositions(total - first, parts - 1)
                    .into_iter()
                    .map(move |mut rest| {
                        rest.insert(0, first);
                        rest
                    })
            })
            .collect()
    }
    let mut best: Option<NormValue> = None;
    for d in 1..=6u32 {
        for parts in compositions(d, len) {
            let terms: Vec<(usize, BigRational)> = parts
                .iter()
                .enumerate()
                .map(|(i, &a)| (start + i, ratio(a as i64, d as i64)))
                .collect();
            let value = family.norm(&family.combination(&terms));
            if best
                .as_ref()
                .map_or(true, |b| value.compare(b) == Ordering::Less)
            {
                best = Some(value);
            }
        }
    }
    best.unwrap()
}

fn antichain_families() -> Vec<VectorFamily> {
    let polyhedral = [
        (BasisKind::Lp1, ExponentP::one()),
        (BasisKind::C0, ExponentP::one()),
        (BasisKind::Lp1, ExponentP::Zero),
        (BasisKind::C0, ExponentP::Zero),
    ];
    let mut out = Vec::new();
    for (kind, p) in &polyhedral {
        out.push(delta_family(4, *kind, p.clone()).unwrap());
        // Signed deltas on the leaves of a full binary tree.
        let tree = Arc::new(generate_tree(TreeFamily::FullKary { k: 2, d: 2 }).unwrap());
        let spots = [
            (vec![0, 0], int(1)),
            (vec![0, 1], int(-1)),
            (vec![1, 0], int(1)),
            (vec![1, 1], int(-1)),
        ];
        let vectors = spots
            .iter()
            .map(|(n, c)| {
                BaireVector::unit(tree.clone(), TreeNode::new(n.clone()), c.clone()).unwrap()
            })
            .collect();
        out.push(VectorFamily::baire(vectors, *kind, p.clone()).unwrap());
        // Mixed depths.
        let vectors = [vec![0, 0], vec![0, 1], vec![1]]
            .into_iter()
            .map(|n| BaireVector::unit(tree.clone(), TreeNode::new(n), int(1)).unwrap())
            .collect();
        out.push(VectorFamily::baire(vectors, *kind, p.clone()).unwrap());
    }
    out
}

fn convex_block_lp() -> Outcome {
    let mut windows = 0;
    for family in antichain_families() {
        for len in 1..=family.len().min(4) {
            for start in 0..=family.len() - len {
                let lp = convex_block_min(&family, start, len).map_err(|e| e.to_string())?;
                let grid = grid_min(&family, start, len);
                ensure(lp.method == BlockMethod::ExactLp, || {
                    "not solved exactly".into()
                })?;
                ensure(lp.value.compare(&grid) == Ordering::Equal, || {
                    format!("window {start}+{len}: lp {} grid {grid}", lp.value)
                })?;
                windows += 1;
            }
        }
    }
    let c0 = delta_family(8, BasisKind::C0, ExponentP::Zero).unwrap();
    let v = weak_null_probe(&c0, &ratio(1, 3)).map_err(|e| e.to_string())?;
    let quarter = NormValue::exact(ratio(1, 4), 1);
    match &v.witness {
        Some(Witness::Blocks { blocks, .. })
            if v.status == Status::Pass
                && blocks.len() == 2
                && blocks
                    .iter()
                    .all(|b| b.len == 4 && b.value.compare(&quarter) == Ordering::Equal) => {}
        _ => return Err(format!("c0 context: {v:?}")),
    }
    let l1 = delta_family(8, BasisKind::Lp1, ExponentP::one()).unwrap();
    let v = weak_null_probe(&l1, &ratio(1, 2)).map_err(|e| e.to_string())?;
    ensure(v.status == Status::Inconclusive, || {
        format!("l1 context: {v:?}")
    })?;
    Ok(format!(
        "{windows} windows match the grid; weak-null verdicts as expected"
    ))
}

fn exponent(v: &NormValue) -> Option<u32> {
    match v {
        NormValue::Exact {
            inverse_exponent, ..
        } => as_small_natural(inverse_exponent),
        NormValue::Approx(_) => None,
    }
}

/// `a ≤ b + c` for norm values, exactly when all three are exact.
fn triangle_holds(a: &NormValue, b: &NormValue, c: &NormValue) -> bool {
    let exps = [a, b, c].map(exponent);
    match exps {
        [Some(1), Some(1), Some(1)] => {
            a.power_base().unwrap() <= &(b.power_base().unwrap() + c.power_base().unwrap())
        }
        [Some(2), Some(2), Some(2)] => {
            // √A ≤ √B + √C  ⇔  A − B − C ≤ 0  or  (A − B − C)² ≤ 4BC
            let (aa, bb, cc) = (
                a.power_base().unwrap(),
                b.power_base().unwrap(),
                c.power_base().unwrap(),
            );
            let d = aa - bb - cc;
            !d.is_positive() || &d * &d <= int(4) * bb * cc
        }
        _ => {
            let rhs = b.to_f64() + c.to_f64();
            a.to_f64() - rhs <= TOLERANCE * rhs.max(1.0)
        }
    }
}

fn homogeneous(scaled: &NormValue, base: &NormValue, q: &BigRational) -> bool {
    match (
        scaled.power_base(),
        base.power_base(),
        exponent(scaled),
        exponent(base),
    ) {
        (Some(s), Some(b), Some(k), Some(k2)) if k == k2 => s == &(pow(&q.abs(), k) * b),
        _ => {
            let expected = base.to_f64() * bairelab::rational::to_f64(&q.abs());
            (scaled.to_f64() - expected).abs() <= TOLERANCE * expected.max(1.0)
        }
    }
}

fn norm_axioms() -> Outcome {
    let mut settings = exact_pairs();
    for (kind, p) in [
        (BasisKind::Lp2, int(1)),
        (BasisKind::Lp1, ratio(3, 2)),
        (BasisKind::C0, int(3)),
        (BasisKind::Lp2, int(3)),
    ] {
        settings.push((kind, ExponentP::new(p).unwrap()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exact = 0;
    for i in 0..10_000 {
        let (kind, p) = &settings[i % settings.len()];
        let n = rng.gen_range(1..=14);
        let tree = Arc::new(generate_tree(TreeFamily::Random { n, seed: rng.gen() }).unwrap());
        let x = random_vector(&mut rng, &tree);
        let y = random_vector(&mut rng, &tree);
        let sum = bairelab::baire::vector_combine(&int(1), &x, &int(1), &y).unwrap();
        let (nx, ny, ns) = (
            baire_norm(&x, *kind, p),
            baire_norm(&y, *kind, p),
            baire_norm(&sum, *kind, p),
        );
        ensure(triangle_holds(&ns, &nx, &ny), || {
            format!("triangle {i}: {ns} > {nx} + {ny}")
        })?;
        let q = random_coef(&mut rng, true);
        let nq = baire_norm(&x.scale(&q), *kind, p);
        ensure(homogeneous(&nq, &nx, &q), || {
            format!("homogeneity {i}: {nq} vs {q} * {nx}")
        })?;
        for v in [&x, &y, &sum] {
            let zero = baire_norm_zero(v, *kind);
            let full = baire_norm(v, *kind, p);
            ensure(zero.compare(&full) != Ordering::Greater, || {
                format!("dominance {i}: {zero} > {full}")
            })?;
        }
        if ns.is_exact() {
            exact += 1;
        }
    }
    Ok(format!("10000 pairs ({exact} exact)"))
}

fn bairelab_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bairelab"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

/// Runs a command twice and under `--parallel`, requiring identical bytes.
fn stable(args: &[&str]) -> Result<serde_json::Value, String> {
    let first = bairelab_cli(args)?;
    let second = bairelab_cli(args)?;
    let mut par_args = vec!["--parallel"];
    par_args.extend_from_slice(args);
    let parallel = bairelab_cli(&par_args)?;
    ensure(first == second && first == parallel, || {
        format!("{args:?} is not deterministic")
    })?;
    serde_json::from_slice(&first).map_err(|e| e.to_string())
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let write = |name: &str, text: &str| {
        std::fs::write(Path::new(&path(name)), text).map_err(|e| e.to_string())
    };

    let (t, b3, b4) = (path("t.json"), path("b3.json"), path("b4.json"));
    let full = stable(&[
        "gen",
        "--family",
        "full-kary",
        "--k",
        "2",
        "--d",
        "2",
        "--out",
        &t,
    ])?;
    ensure(full["nodes"].as_array().map(Vec::len) == Some(7), || {
        format!("full-kary: {full}")
    })?;
    let rank = stable(&["rank", "--tree", &t])?;
    ensure(rank == serde_json::json!({"order_index": 3}), || {
        format!("rank: {rank}")
    })?;

    write("t2.json", r#"{"nodes":[[],[0],[1]]}"#)?;
    write(
        "x.json",
        r#"{"entries":[{"node":[0],"coef":"3/4"},{"node":[1],"coef":"1"}]}"#,
    )?;
    let norm = stable(&[
        "norm",
        "--tree",
        &path("t2.json"),
        "--vector",
        &path("x.json"),
        "--basis",
        "l1",
        "--p",
        "2",
    ])?;
    ensure(
        norm["exact"] == serde_json::json!({"power_base": "25/16", "inv_exp": "2"})
            && norm["approx"] == 1.25,
        || format!("norm: {norm}"),
    )?;

    stable(&[
        "gen",
        "--family",
        "rademacher-bush",
        "--K",
        "3",
        "--out",
        &b3,
    ])?;
    let check = stable(&[
        "check-bush",
        "--bush",
        &b3,
        "--delta",
        "1/2",
        "--bound",
        "1",
    ])?;
    ensure(check["status"] == "pass", || format!("check-bush: {check}"))?;

    let random = stable(&["gen", "--family", "random", "--n", "10", "--seed", "42"])?;
    ensure(random["nodes"].as_array().map(Vec::len) == Some(10), || {
        format!("random: {random}")
    })?;
    let spine = stable(&["gen", "--family", "spine", "--d", "3"])?;
    ensure(spine["nodes"].as_array().map(Vec::len) == Some(4), || {
        format!("spine: {spine}")
    })?;

    stable(&[
        "gen",
        "--family",
        "rademacher-bush",
        "--K",
        "4",
        "--out",
        &b4,
    ])?;
    let check = stable(&[
        "check-bush",
        "--bush",
        &b4,
        "--delta",
        "1/2",
        "--bound",
        "1",
    ])?;
    ensure(check["status"] == "pass", || {
        format!("check-bush K=4: {check}")
    })?;
    Ok("9 example commands byte-identical".into())
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 8] = [
        ("oracle equivalence", 60, oracle_equivalence),
        ("rank laws", 10, rank_laws),
        ("exact identities", 30, exact_identities),
        ("banach-saks witness", 10, banach_saks_witness),
        ("rademacher bush", 5, bush),
        ("convex-block lp", 30, convex_block_lp),
        ("norm axioms", 60, norm_axioms),
        ("cli determinism", 10, cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > Duration::from_secs(*limit) {
                Err(format!(
                    "took {:.1} s, limit {limit} s",
                    elapsed.as_secs_f64()
                ))
            } else {
                Ok(detail)
            }
        });
        let (tag, text) = match &result {
            Ok(detail) => ("PASS", detail.clone()),
            Err(why) => {
                failed += 1;
                ("FAIL", why.clone())
            }
        };
        println!(
            "{tag} {} {name} ({:.2} s): {text}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
