//! Acceptance checks, one line per criterion:
//!
//! 1. worked voting and labeling examples
//! 2. signal length of a 26-point trajectory
//! 3. synthetic benchmark ordering
//! 4. brute-force oracle equivalences
//! 5. invariant suites
//! 6. byte-identical `compare` reruns

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsii::algorithms::{Algorithm, CbSmotAlgorithm, OwsAlgorithm, SpdAlgorithm, WsIiAlgorithm};
use wsii::baselines::{CbSmotParams, OwsParams, SpdParams};
use wsii::eval::{compare, generate_synthetic, mann_whitney_u, score, SynthSpec};
use wsii::forest::{fit, ForestModel, ForestParams};
use wsii::geo::haversine_m;
use wsii::segment::{decide, tally, WsIi};
use wsii::signal::{error_signal, ErrorSignal};
use wsii::training::{build_training_set, GroundTruthSplits, TrainingSample};
use wsii::{GeoPoint, KernelKind, SegmentationResult, Segmenter, TimedPoint, Trajectory};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn signal_of(values: &[f64], first: usize) -> ErrorSignal {
    ErrorSignal {
        trajectory_id: "t".into(),
        window: 7,
        values: values.iter().enumerate().map(|(i, &e)| (first + i, e)).collect(),
        too_short: false,
    }
}

fn track(id: &str, pts: &[(f64, f64, f64)], labels: Option<Vec<String>>) -> Trajectory {
    let points = pts
        .iter()
        .map(|&(lat, lon, t)| TimedPoint::new(lat, lon, t).unwrap())
        .collect();
    Trajectory::new(id, points, labels).unwrap()
}

fn criterion_1() -> Check {
    // voting: ten window predictions, q = 7, signal starting at point 3
    let b_cls = [false, true, false, false, false, true, true, true, true, true];
    let sig = signal_of(&[1.0; 16], 3);
    let table = tally(&sig, &b_cls, 7);
    let at = |p: usize| table.entries.iter().find(|e| e.point_index == p).unwrap();
    let (first, second) = (at(3 + 6), at(3 + 7));
    ensure((first.cast, first.positive) == (7, 3), || format!("first vote set {first:?}"))?;
    ensure((second.cast, second.positive) == (7, 4), || format!("second vote set {second:?}"))?;
    let decided = decide(&table);
    ensure(!decided.contains(&9), || "(0,1,0,0,0,1,1) decided 1".into())?;
    ensure(decided.contains(&10), || "(1,0,0,0,1,1,1) decided 0".into())?;

    // labeling: 11 windows over 17 error values, split point in window 4..10
    let values: Vec<f64> = (0..17).map(|i| if i == 9 { 560.0 } else { 20.0 + i as f64 }).collect();
    let sig = signal_of(&values, 3);
    let splits = GroundTruthSplits {
        trajectory_id: "t".into(),
        split_indices: vec![3 + 9],
    };
    let samples = build_training_set(&sig, &splits, 7).map_err(|e| e.to_string())?;
    let labels: Vec<u8> = samples.iter().map(|s| u8::from(s.label)).collect();
    ensure(labels == [0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0], || format!("labels {labels:?}"))?;
    ensure(samples[3].features[6] == 560.0, || "w4 does not end on the jump".into())?;
    Ok("votes 3/7 -> 0 and 4/7 -> 1; labels 0x3 1x7 0x1".into())
}

fn criterion_2() -> Check {
    let pts: Vec<(f64, f64, f64)> = (0..26)
        .map(|i| (44.0 + 0.0004 * i as f64, -63.0 + 0.0001 * (i * i) as f64, 10.0 * i as f64))
        .collect();
    let t = track("t26", &pts, None);
    let s = error_signal(&t, 7, KernelKind::RandomWalk).map_err(|e| e.to_string())?;
    ensure(s.len() == 20, || format!("{} values", s.len()))?;
    ensure(s.values.first().unwrap().0 == 3 && s.values.last().unwrap().0 == 22, || {
        "indices not 3..=22".into()
    })?;
    Ok("26 points, w = 7 -> 20 values".into())
}

fn criterion_3() -> Check {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = pool.install(|| {
        let data = generate_synthetic(&SynthSpec {
            seed: 42,
            n_trajectories: 30,
            points_per_segment: (40, 80),
            segments_per_trajectory: (4, 8),
            gps_noise_m: 5.0,
            ..SynthSpec::default()
        })?;
        let wsii = WsIiAlgorithm {
            window: 7,
            q: 7,
            kernel: KernelKind::RandomWalk,
            forest: ForestParams::default(),
        };
        let (ows, spd, cbsmot) = (OwsAlgorithm::default(), SpdAlgorithm, CbSmotAlgorithm);
        let algos: [&dyn Algorithm; 4] = [&wsii, &ows, &spd, &cbsmot];
        compare(&data, &algos, 10, 42)
    });
    let elapsed = start.elapsed();
    let report = report.map_err(|e| e.to_string())?;
    let mean = |name: &str| report.get(name).unwrap().mean;
    let summary = format!(
        "wsii {:.3}, ows {:.3}, spd {:.3}, cbsmot {:.3} in {:.1?}",
        mean("wsii"),
        mean("ows"),
        mean("spd"),
        mean("cbsmot"),
        elapsed
    );
    ensure(mean("wsii") >= 0.80, || format!("wsii below 0.80: {summary}"))?;
    for b in ["ows", "spd", "cbsmot"] {
        ensure(mean("wsii") >= mean(b), || format!("{b} beats wsii: {summary}"))?;
    }
    ensure(elapsed < Duration::from_secs(60), || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn brute_decide(n_values: usize, first: usize, preds: &[bool], q: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for p in 0..n_values {
        let (mut cast, mut pos) = (0, 0);
        for (start, &pred) in preds.iter().enumerate() {
            if start <= p && p < start + q {
                cast += 1;
                pos += usize::from(pred);
            }
        }
        if pos * 2 > cast {
            out.push(first + p);
        }
    }
    out
}

fn brute_score(labels: &[&str], splits: &[usize]) -> (f64, f64) {
    let n = labels.len();
    let mut run = vec![0usize; n];
    for i in 1..n {
        run[i] = run[i - 1] + usize::from(labels[i] != labels[i - 1]);
    }
    let mut bounds = vec![0];
    bounds.extend(splits.iter().map(|s| s + 1));
    bounds.push(n);
    let (mut p, mut c) = (0.0, 0.0);
    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a) as f64;
        let modal = (a..b)
            .map(|i| (a..b).filter(|&j| labels[j] == labels[i]).count())
            .max()
            .unwrap();
        // truth run with the most points in the segment, lowest run id on ties
        let mut best = (0, usize::MAX);
        for g in run[a]..=run[b - 1] {
            let inside = (a..b).filter(|&i| run[i] == g).count();
            if inside > best.0 {
                best = (inside, g);
            }
        }
        let g_len = run.iter().filter(|&&r| r == best.1).count();
        p += len * modal as f64 / len;
        c += len * best.0 as f64 / g_len as f64;
    }
    (p / n as f64, c / n as f64)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // majority vote against window membership
    for case in 0..100 {
        let q = 2 * rng.random_range(1..6) + 1;
        let n_values = rng.random_range(q..q + 40);
        let first = rng.random_range(0..5);
        let preds: Vec<bool> = (0..n_values + 1 - q).map(|_| rng.random_bool(0.4)).collect();
        let sig = signal_of(&vec![1.0; n_values], first);
        let fast = decide(&tally(&sig, &preds, q));
        let slow = brute_decide(n_values, first, &preds, q);
        ensure(fast == slow, || format!("vote case {case}: {fast:?} vs {slow:?}"))?;
    }

    // scoring against point-by-point counting, all segmentations up to 3 splits
    let mut segmentations = 0usize;
    for n in 1..=30 {
        let alphabet = ["a", "b", "c"];
        let labels: Vec<&str> = (0..n).map(|_| alphabet[rng.random_range(0..3)]).collect();
        let pts: Vec<(f64, f64, f64)> = (0..n).map(|i| (0.0, 0.0, i as f64)).collect();
        let truth = track("s", &pts, Some(labels.iter().map(|s| s.to_string()).collect()));
        for k in 0..=3.min(n - 1) {
            for splits in combinations(n - 1, k) {
                let r = SegmentationResult::from_splits("s", n, splits.clone()).map_err(|e| e.to_string())?;
                let got = score(&r, &truth).map_err(|e| e.to_string())?;
                let (p, c) = brute_score(&labels, &splits);
                ensure((got.purity - p).abs() < 1e-12 && (got.coverage - c).abs() < 1e-12, || {
                    format!("score n={n} splits={splits:?}: ({}, {}) vs ({p}, {c})", got.purity, got.coverage)
                })?;
                segmentations += 1;
            }
        }
    }

    // exact Mann-Whitney p against enumeration of every rank assignment
    let mut mw_cases = 0usize;
    for total in 2..=10usize {
        for m in 1..total {
            let assignments = combinations(total, m);
            let u_of = |a: &[usize]| -> usize {
                let rank_sum: usize = a.iter().map(|r| r + 1).sum();
                rank_sum - m * (m + 1) / 2
            };
            let all_u: Vec<usize> = assignments.iter().map(|a| u_of(a)).collect();
            for a_ranks in &assignments {
                let a: Vec<f64> = a_ranks.iter().map(|&r| r as f64).collect();
                let b: Vec<f64> = (0..total).filter(|r| !a_ranks.contains(r)).map(|r| r as f64).collect();
                let u = u_of(a_ranks);
                let le = all_u.iter().filter(|&&x| x <= u).count();
                let ge = all_u.iter().filter(|&&x| x >= u).count();
                let expected = (2.0 * le.min(ge) as f64 / all_u.len() as f64).min(1.0);
                let r = mann_whitney_u(&a, &b).map_err(|e| e.to_string())?;
                ensure(r.exact && (r.p_value - expected).abs() < 1e-12 && r.u == u as f64, || {
                    format!("mann-whitney {a:?} vs {b:?}: {r:?}, expected p {expected}")
                })?;
                mw_cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 vote instances, {segmentations} segmentations, {mw_cases} rank assignments in {elapsed:.1?}"
    ))
}

fn random_track(rng: &mut ChaCha8Rng, id: usize) -> Trajectory {
    let n = rng.random_range(1..60);
    let (mut lat, mut lon) = (rng.random_range(-60.0..60.0), rng.random_range(-170.0..170.0));
    let mut t = rng.random_range(0.0..1e6f64).floor();
    let dwell = rng.random_bool(0.3);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        pts.push((lat, lon, t));
        let scale = if dwell && (n / 3..2 * n / 3).contains(&i) { 1e-6 } else { 5e-4 };
        lat += rng.random_range(-scale..scale);
        lon += rng.random_range(-scale..scale);
        t += rng.random_range(1.0..60.0f64).floor();
    }
    track(&format!("r{id}"), &pts, None)
}

fn trained_model(seed: u64) -> Result<ForestModel, String> {
    let data = generate_synthetic(&SynthSpec {
        n_trajectories: 6,
        ..SynthSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let params = ForestParams {
        n_trees: 15,
        ..ForestParams::default()
    };
    wsii::algorithms::train_model(&data, 7, 7, KernelKind::RandomWalk, &params, seed).map_err(|e| e.to_string())
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // partition contract
    let model = trained_model(1)?;
    let segmenters: Vec<(&str, Box<dyn Segmenter>)> = vec![
        ("wsii", Box::new(WsIi::new(model, 7, 7, KernelKind::RandomWalk).map_err(|e| e.to_string())?)),
        ("ows", Box::new(OwsParams::new(7, KernelKind::Linear, 20.0).map_err(|e| e.to_string())?)),
        ("spd", Box::new(SpdParams::new(30.0, 120.0).map_err(|e| e.to_string())?)),
        ("cbsmot", Box::new(CbSmotParams::new(30.0, 60.0).map_err(|e| e.to_string())?)),
    ];
    for i in 0..1000 {
        let t = random_track(&mut rng, i);
        for (name, s) in &segmenters {
            let r = s.segment(&t).map_err(|e| format!("{name} on {}: {e}", t.id()))?;
            r.check_partition(t.len()).map_err(|e| format!("{name} on {}: {e}", t.id()))?;
        }
    }

    // noiseless linear tracks under the Linear kernel
    for _ in 0..200 {
        let n = rng.random_range(7..40);
        let (lat0, lon0) = (rng.random_range(-70.0..70.0), rng.random_range(-170.0..170.0));
        let (vlat, vlon) = (rng.random_range(-1e-5..1e-5), rng.random_range(-1e-5..1e-5));
        let mut t = 0.0;
        let mut pts = Vec::new();
        for _ in 0..n {
            pts.push((lat0 + vlat * t, lon0 + vlon * t, t));
            t += rng.random_range(1.0..30.0f64).floor();
        }
        let s = error_signal(&track("lin", &pts, None), 7, KernelKind::Linear).map_err(|e| e.to_string())?;
        let worst = s.errors().fold(0.0, f64::max);
        ensure(worst <= 1e-6, || format!("linear track error {worst} m"))?;
    }

    // forest determinism and monotone-transform stability
    let samples: Vec<TrainingSample> = (0..400)
        .map(|i| {
            let features: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..200.0)).collect();
            let label = features[3] + rng.random_range(0.0..80.0) > 150.0;
            TrainingSample {
                features,
                label,
                trajectory_id: format!("f{}", i / 50),
                start_index: i,
            }
        })
        .collect();
    let params = ForestParams {
        n_trees: 30,
        ..ForestParams::default()
    };
    let a = fit(&samples, &params, 11).map_err(|e| e.to_string())?;
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?
        .install(|| fit(&samples, &params, 11))
        .map_err(|e| e.to_string())?;
    ensure(a == b, || "forest differs between runs".into())?;
    let transform = |x: f64| x.powi(3) + (x / 10.0).exp();
    let transformed: Vec<TrainingSample> = samples
        .iter()
        .map(|s| TrainingSample {
            features: s.features.iter().map(|&x| transform(x)).collect(),
            ..s.clone()
        })
        .collect();
    let c = fit(&transformed, &params, 11).map_err(|e| e.to_string())?;
    for _ in 0..500 {
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-10.0..250.0)).collect();
        let tx: Vec<f64> = x.iter().map(|&v| transform(v)).collect();
        let (pa, pc) = (a.predict(&x).unwrap(), c.predict(&tx).unwrap());
        ensure(pa == pc, || format!("monotone transform changed prediction at {x:?}"))?;
    }

    // haversine metric properties
    let random_point = |rng: &mut ChaCha8Rng| GeoPoint::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0)).unwrap();
    for _ in 0..2000 {
        let (p, q, r) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        ensure(haversine_m(p, p) == 0.0, || format!("d(p, p) != 0 at {p:?}"))?;
        ensure((haversine_m(p, q) - haversine_m(q, p)).abs() < 1e-6, || "asymmetric".into())?;
        ensure(haversine_m(p, r) <= haversine_m(p, q) + haversine_m(q, r) + 1e-6, || {
            "triangle inequality".into()
        })?;
    }

    // OWS with an unreachable threshold equals WS-II with an always-negative model
    let never = ForestModel::constant(7, 0.0, ForestParams::default(), 0).map_err(|e| e.to_string())?;
    let wsii = WsIi::new(never, 7, 7, KernelKind::RandomWalk).map_err(|e| e.to_string())?;
    let ows = OwsParams::new(7, KernelKind::RandomWalk, f64::MAX).map_err(|e| e.to_string())?;
    for i in 0..200 {
        let t = random_track(&mut rng, i);
        let (x, y) = (wsii.segment(&t).unwrap(), ows.segment(&t).unwrap());
        ensure(x == y, || format!("OWS(max) != WS-II(never) on {}", t.id()))?;
    }

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "partition 1000x4, linear 200, forest 500 probes, haversine 2000 triples in {elapsed:.1?}"
    ))
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let code = wsii::cli::run_command(["wsii", "synth", "--trajectories", "12", "--out", &path("pts.csv")]);
    ensure(code == 0, || format!("synth exit {code}"))?;
    let mut reports = Vec::new();
    for run in 0..2 {
        let (out, folds) = (path(&format!("report{run}.txt")), path(&format!("folds{run}.csv")));
        let code = wsii::cli::run_command([
            "wsii",
            "compare",
            "--algorithms",
            "wsii,ows,spd,cbsmot",
            "--folds",
            "4",
            "--seed",
            "42",
            "--input",
            &path("pts.csv"),
            "--out",
            &out,
            "--fold-csv",
            &folds,
        ]);
        ensure(code == 0, || format!("compare exit {code}"))?;
        reports.push((std::fs::read(&out).unwrap(), std::fs::read(&folds).unwrap()));
    }
    ensure(reports[0] == reports[1], || "reports differ between runs".into())?;
    Ok(format!("{} byte report identical across runs", reports[0].0.len()))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("worked examples", criterion_1),
        ("signal count", criterion_2),
        ("synthetic benchmark", criterion_3),
        ("oracle equivalences", criterion_4),
        ("invariant suites", criterion_5),
        ("end-to-end reproducibility", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(panic) => Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let line = match &outcome {
            Ok(detail) => format!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                format!("criterion {} ({name}): FAIL - {detail}", i + 1)
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
