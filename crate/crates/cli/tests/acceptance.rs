//! One line per acceptance criterion, then a single assertion over all of them.
//!
//! Run with `cargo test -p rankone-cli --test acceptance -- --nocapture` to
//! see the table.

use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankone::criteria::{
    check_isomorphic_to_odometer, cyclic_discrepancy, symmetric_difference_fit, total_ergodicity_probe,
    FitRequirement, IsomorphismCheck, Status,
};
use rankone::measure::{
    build_approximating_maps, containment_fraction, is_eps_contained, ApproximationPlan, EtaSchedule, LevelSet,
    MassFloor,
};
use rankone::odometer::{odometers_isomorphic, supernatural_of, OdometerSpec, Supernatural};
use rankone::presets::{afp, chacon, cyclic_embedding, dyadic, example51};
use rankone::tower::{residue, CuttingSpacerSpec, Stage};
use rankone::words::canonical_occurrences;
use rankone_cli::report::to_json;
use rankone_cli::{run, RunConfig};

const LIMIT: usize = 1_000_000;

/// Lower bound on the odd-modulus discrepancy of the central-gap example.
const ODD_DELTA_FLOOR: (i64, i64) = (1, 4);
/// Lower bound on the best fit of `B_1` by residue classes mod `2^a`.
const FIT_FLOOR: (i64, i64) = (1, 1);
/// Lower bound on Chacon's smallest proper-window discrepancy.
const CHACON_DELTA_FLOOR: (i64, i64) = (1, 10);
const RANDOM_FITS: usize = 200;
const RANDOM_CONTAINMENTS: usize = 500;
const SEED: u64 = 0x5eed_0f7a_11ee;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q((n, d): (i64, i64)) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn afp4() -> rankone::presets::Preset {
    afp(&OdometerSpec::powers(4).unwrap()).unwrap()
}

fn all_presets() -> Vec<(&'static str, CuttingSpacerSpec)> {
    vec![
        ("chacon", chacon().spec),
        ("example51", example51().spec),
        ("afp(4)", afp4().spec),
        ("cyclic_embedding(6)", cyclic_embedding(6, true).unwrap().spec),
        ("dyadic", dyadic().spec),
    ]
}

/// Every `(m, n)` with `h_n <= 10^5`.
fn small_windows(spec: &CuttingSpacerSpec) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut n = 0;
    while spec.height(n).unwrap() <= BigUint::from(100_000u32) {
        out.extend((0..=n).map(|m| (m, n)));
        n += 1;
    }
    out
}

fn heights_identity() -> Outcome {
    let spec = example51().spec;
    for n in 0..=20u32 {
        let expected = (BigUint::one() << n) * ((BigUint::one() << (n + 1)) - 1u32);
        let h = spec.height(n as usize).map_err(|e| e.to_string())?;
        ensure(h == expected, || format!("h_{n} = {h}, expected {expected}"))?;
    }
    Ok("h_n = 2^n(2^(n+1)-1) for n <= 20".into())
}

fn words_match_offsets() -> Outcome {
    let mut checked = 0;
    for (name, spec) in all_presets() {
        for (m, n) in small_windows(&spec) {
            let from_words = canonical_occurrences(&spec, m, n, LIMIT).map_err(|e| e.to_string())?;
            let from_offsets = spec.index_set(m, n, LIMIT).map_err(|e| e.to_string())?.indices;
            ensure(from_words == from_offsets, || format!("{name} (m,n)=({m},{n})"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} windows across 5 presets"))
}

fn histograms_match_sets() -> Outcome {
    let mut checked = 0;
    for (name, spec) in all_presets() {
        for (m, n) in small_windows(&spec) {
            let set = spec.index_set(m, n, LIMIT).map_err(|e| e.to_string())?.indices;
            for k in 2..=12u64 {
                let mut expected = vec![BigUint::zero(); k as usize];
                for i in &set {
                    expected[residue(i, k) as usize] += 1u32;
                }
                let hist = spec.residue_histogram(m, n, k).map_err(|e| e.to_string())?;
                ensure(hist.counts() == expected, || format!("{name} (m,n)=({m},{n}) k={k}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} histograms"))
}

fn dyadic_factor() -> Outcome {
    let spec = example51().spec;
    let mut checked = 0;
    for a in 1..=4u32 {
        let k = 1u64 << a;
        for m in a as usize..=20 {
            for n in m..=m + 10 {
                let d = cyclic_discrepancy(&spec, m, n, k).map_err(|e| e.to_string())?;
                ensure(d.delta.is_zero(), || format!("k={k} (m,n)=({m},{n}) delta {}", d.delta))?;
                checked += 1;
            }
        }
    }
    Ok(format!("delta = 0 on {checked} windows, k in 2,4,8,16, m <= 20"))
}

fn odd_obstruction() -> Outcome {
    let spec = example51().spec;
    let floor = q(ODD_DELTA_FLOOR);
    let mut worst: Option<BigRational> = None;
    for k in [3u64, 5, 7, 9] {
        for n in 3..=8 {
            for m in 2..n {
                let set = spec.index_set(m, n, LIMIT).map_err(|e| e.to_string())?.indices;
                let outside = (0..k)
                    .map(|j| set.iter().filter(|i| residue(i, k) != j).count())
                    .min()
                    .unwrap();
                let explicit = BigRational::new(outside.into(), set.len().into());
                let d = cyclic_discrepancy(&spec, m, n, k).map_err(|e| e.to_string())?;
                ensure(d.delta == explicit, || format!("k={k} (m,n)=({m},{n}) oracle mismatch"))?;
            }
        }
        for n in 3..=16 {
            for m in 2..n {
                let d = cyclic_discrepancy(&spec, m, n, k).map_err(|e| e.to_string())?;
                ensure(d.delta >= floor, || format!("k={k} (m,n)=({m},{n}) delta {}", d.delta))?;
                if worst.as_ref().is_none_or(|w| d.delta < *w) {
                    worst = Some(d.delta);
                }
            }
        }
    }
    Ok(format!("min delta {} >= {}", worst.unwrap(), floor))
}

/// Minimum over all `2^k` unions of residue classes, counted from the explicit set.
fn brute_force_fit(spec: &CuttingSpacerSpec, l: usize, m: usize, k: u64) -> BigRational {
    let h = spec.height(m).unwrap();
    let mut inside = vec![BigUint::zero(); k as usize];
    for i in spec.index_set(l, m, LIMIT).unwrap().indices {
        inside[residue(&i, k) as usize] += 1u32;
    }
    let levels: Vec<BigUint> = (0..k)
        .map(|c| {
            if BigUint::from(c) >= h {
                BigUint::zero()
            } else {
                (&h - 1u32 - c) / k + 1u32
            }
        })
        .collect();
    let size: BigUint = inside.iter().sum();
    let best = (0u64..1 << k)
        .map(|mask| {
            (0..k as usize)
                .map(|c| {
                    if mask >> c & 1 == 1 {
                        &levels[c] - &inside[c]
                    } else {
                        inside[c].clone()
                    }
                })
                .sum::<BigUint>()
        })
        .min()
        .unwrap();
    BigRational::new(best.into(), size.into())
}

fn fit_obstruction() -> Outcome {
    let spec = example51().spec;
    let floor = q(FIT_FLOOR);
    for a in 2..=4u32 {
        let k = 1u64 << a;
        for m in 4..=8 {
            let fit = symmetric_difference_fit(&spec, 1, m, k).map_err(|e| e.to_string())?;
            let brute = brute_force_fit(&spec, 1, m, k);
            ensure(fit.eps_star == brute, || format!("k={k} m={m} fit {} brute {brute}", fit.eps_star))?;
            ensure(fit.eps_star >= floor, || format!("k={k} m={m} eps_star {}", fit.eps_star))?;
        }
    }
    Ok(format!("eps_star >= {floor} for k in 4,8,16, 4 <= m <= 8, brute force agrees"))
}

fn afp_control() -> Outcome {
    let preset = afp4();
    let spec = &preset.spec;
    let target = preset.target.clone().unwrap();
    ensure(target == Supernatural::infinite(&[2]).unwrap(), || format!("target {target}"))?;
    let check = IsomorphismCheck {
        probes: target.prime_power_ladder(64),
        eta: BigRational::new(1.into(), 100.into()),
        start: 3,
        depth: 7,
        schedule: (0..=2)
            .map(|l| FitRequirement {
                l,
                eps: BigRational::new(1.into(), 10.into()),
                candidates: vec![4096],
                start: 3,
                depth: 7,
            })
            .collect(),
    };
    let v = check_isomorphic_to_odometer(spec, &target, &check).map_err(|e| e.to_string())?;
    ensure(v.status == Status::PassAtDepth, || format!("status {}", v.status.as_str()))?;
    for a in 1..=3u32 {
        let k = 4u64.pow(a);
        for m in a as usize..=7 {
            for n in m..=7 {
                let d = cyclic_discrepancy(spec, m, n, k).map_err(|e| e.to_string())?;
                ensure(d.delta.is_zero(), || format!("k={k} (m,n)=({m},{n}) delta {}", d.delta))?;
            }
        }
    }
    for m in 3..=7usize {
        // sum_{j >= m} 4^-(j+1) = 4^-m / 3
        let tail = BigRational::new(1.into(), (BigUint::from(3u32) << (2 * m)).into());
        let k = spec.height(m).unwrap().to_u64().unwrap();
        for l in 0..=2 {
            let fit = symmetric_difference_fit(spec, l, m, k).map_err(|e| e.to_string())?;
            ensure(fit.eps_star <= tail, || format!("l={l} m={m} eps_star {}", fit.eps_star))?;
        }
    }
    Ok("isomorphism check passes; windows and fits within bounds".into())
}

fn cyclic_embedding_exact() -> Outcome {
    let spec = cyclic_embedding(6, true).map_err(|e| e.to_string())?.spec;
    for n in 1..=12 {
        for m in 1..=n {
            let d = cyclic_discrepancy(&spec, m, n, 6).map_err(|e| e.to_string())?;
            ensure(d.delta.is_zero(), || format!("(m,n)=({m},{n}) delta {}", d.delta))?;
        }
    }
    let plan = ApproximationPlan {
        modulus: 6,
        maps: 4,
        depth: 12,
        eta: EtaSchedule::Halving,
        mass_floor: MassFloor::Halving,
    };
    let maps = build_approximating_maps(&spec, &plan).map_err(|e| e.to_string())?;
    ensure(maps.len() == 4, || format!("{} maps", maps.len()))?;
    ensure(maps.iter().all(|m| m.defect.is_zero()), || "nonzero defect".into())?;
    Ok("delta = 0 for 1 <= m <= n <= 12; 4 maps, all defects 0".into())
}

fn chacon_control() -> Outcome {
    let floor = q(CHACON_DELTA_FLOOR);
    let probe = total_ergodicity_probe(&chacon().spec, 12, &floor, 0, 15).map_err(|e| e.to_string())?;
    ensure(probe.len() == 11, || format!("{} moduli", probe.len()))?;
    let mut worst: Option<BigRational> = None;
    for (k, v) in &probe {
        let min = v.windows[0].min_proper_delta.clone().ok_or(format!("k={k} no proper window"))?;
        ensure(min >= floor, || format!("k={k} min delta {min}"))?;
        if worst.as_ref().is_none_or(|w| min < *w) {
            worst = Some(min);
        }
    }
    Ok(format!("min window delta {} >= {} for k = 2..12", worst.unwrap(), floor))
}

fn odometer_classification() -> Outcome {
    let of = |base| {
        supernatural_of(&OdometerSpec::powers(base).unwrap(), 16).map_err(|e| e.to_string())
    };
    let (two, four, six) = (of(2)?, of(4)?, of(6)?);
    ensure(two == four, || format!("{two} != {four}"))?;
    ensure(two != six, || format!("{two} == {six}"))?;
    ensure(odometers_isomorphic(&two, &four) == Ok(true), || "2 vs 4 not isomorphic".into())?;
    ensure(odometers_isomorphic(&two, &six) == Ok(false), || "2 vs 6 isomorphic".into())?;
    Ok(format!("{two} = {four} != {six}"))
}

fn random_spec(rng: &mut ChaCha8Rng, max_height: u64) -> (CuttingSpacerSpec, usize) {
    loop {
        let stages = rng.gen_range(1..=4);
        let rows: Vec<Vec<u64>> = (0..stages)
            .map(|_| (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let spec = CuttingSpacerSpec::table(rows.iter().map(|r| Stage::new(r).unwrap()).collect());
        if spec.height(stages).unwrap() <= BigUint::from(max_height) {
            return (spec, stages);
        }
    }
}

fn majority_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for t in 0..RANDOM_FITS {
        let (spec, m) = random_spec(&mut rng, 10_000);
        let l = rng.gen_range(0..=m);
        let k = rng.gen_range(2..=8u64);
        let fit = symmetric_difference_fit(&spec, l, m, k).map_err(|e| e.to_string())?;
        let brute = brute_force_fit(&spec, l, m, k);
        ensure(fit.eps_star == brute, || format!("instance {t}: fit {} brute {brute}", fit.eps_star))?;
    }
    Ok(format!("{RANDOM_FITS} random instances match brute force"))
}

fn random_levels(rng: &mut ChaCha8Rng, h: usize, densities: std::ops::Range<f64>) -> Vec<usize> {
    let density = rng.gen_range(densities);
    (0..h).filter(|_| rng.gen_bool(density)).collect()
}

fn containment_facts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut exercised = [0usize; 3];
    for t in 0..RANDOM_CONTAINMENTS {
        let (spec, depth) = random_spec(&mut rng, 2_000);
        let h = spec.height(depth).unwrap().to_usize().unwrap();
        let a_levels = random_levels(&mut rng, h, 0.05..0.9);
        if a_levels.is_empty() {
            continue;
        }
        let b_depth = rng.gen_range(0..=depth);
        let b_h = spec.height(b_depth).unwrap().to_usize().unwrap();
        let b = LevelSet::from_levels(&spec, b_depth, random_levels(&mut rng, b_h, 0.1..0.95), LIMIT)
            .unwrap();
        let a = LevelSet::from_levels(&spec, depth, a_levels.iter().copied(), LIMIT).unwrap();
        let eps = BigRational::new(rng.gen_range(1..20).into(), 20.into());
        let r = rng.gen_range(1..=4usize);
        let parts: Vec<LevelSet> = (0..r)
            .map(|p| a_levels.iter().copied().filter(|i| i % r == p).collect::<Vec<_>>())
            .filter(|levels| !levels.is_empty())
            .map(|levels| LevelSet::from_levels(&spec, depth, levels, LIMIT).unwrap())
            .collect();
        let whole = is_eps_contained(&spec, &a, &b, &eps, LIMIT).unwrap();
        let contained: Vec<bool> = parts
            .iter()
            .map(|p| is_eps_contained(&spec, p, &b, &eps, LIMIT).unwrap())
            .collect();
        if whole {
            exercised[0] += 1;
            ensure(contained.iter().any(|&c| c), || format!("fixture {t}: no part is contained"))?;
        }
        if contained.iter().all(|&c| c) {
            exercised[1] += 1;
            ensure(whole, || format!("fixture {t}: parts contained, whole is not"))?;
        }
        let lo = -(*a_levels.first().unwrap() as i64);
        let hi = (h - 1 - a_levels.last().unwrap()) as i64;
        let z = rng.gen_range(lo..=hi);
        let b_fine = b.refine(&spec, depth, LIMIT).unwrap();
        let (az, bz) = (a.shift(z, LIMIT).unwrap(), b_fine.shift(z, LIMIT).unwrap());
        let before = containment_fraction(&spec, &a, &b, LIMIT).unwrap();
        let after = containment_fraction(&spec, &az, &bz, LIMIT).unwrap();
        ensure(before == after, || format!("fixture {t}: shift by {z} moved {before} to {after}"))?;
        ensure(is_eps_contained(&spec, &az, &bz, &eps, LIMIT).unwrap() == whole, || {
            format!("fixture {t}: shift by {z} changed containment")
        })?;
        exercised[2] += 1;
    }
    ensure(exercised.iter().all(|&c| c > 50), || format!("too few nontrivial cases {exercised:?}"))?;
    Ok(format!(
        "partition facts on {} and {} fixtures, shift fact on {}",
        exercised[0], exercised[1], exercised[2]
    ))
}

fn mass_check() -> Outcome {
    let report = example51().spec.mass_check(20).map_err(|e| e.to_string())?;
    ensure(report.partial_sums.windows(2).all(|w| w[0] <= w[1]), || "partial sums decrease".into())?;
    ensure(report.partial_sums.iter().all(|s| *s <= BigRational::one()), || "partial sum above 1".into())?;
    let dyadic = dyadic().spec.mass_check(20).map_err(|e| e.to_string())?;
    ensure(dyadic.partial_sums.iter().all(|s| s.is_zero()), || "dyadic mass nonzero".into())?;
    let total = report.total();
    Ok(format!(
        "example51 sum to 20 = {:.6} <= 1; dyadic sum 0",
        total.numer().to_f64().unwrap() / total.denom().to_f64().unwrap()
    ))
}

fn determinism() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    for name in ["example51.toml", "chacon.toml", "afp.toml"] {
        let text = std::fs::read_to_string(dir.join(name)).map_err(|e| e.to_string())?;
        let config = RunConfig::from_toml(&text).map_err(|e| e.to_string())?;
        let first = to_json(&run(&config, Some(1)).map_err(|e| e.to_string())?);
        let second = to_json(&run(&config, Some(4)).map_err(|e| e.to_string())?);
        ensure(first == second, || format!("{name} reports differ"))?;
        names.push(name);
    }
    Ok(format!("byte-identical JSON for {}", names.join(", ")))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 14] = [
        ("heights identity", heights_identity),
        ("words match offsets", words_match_offsets),
        ("histograms match sets", histograms_match_sets),
        ("dyadic factor", dyadic_factor),
        ("odd-modulus obstruction", odd_obstruction),
        ("fit obstruction", fit_obstruction),
        ("afp positive control", afp_control),
        ("cyclic embedding exact", cyclic_embedding_exact),
        ("chacon control", chacon_control),
        ("odometer classification", odometer_classification),
        ("majority rule", majority_rule),
        ("containment facts", containment_facts),
        ("mass check", mass_check),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("criterion {:>2}: PASS {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(why) => {
                println!("criterion {:>2}: FAIL {name} ({why}) [{secs:.2}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
