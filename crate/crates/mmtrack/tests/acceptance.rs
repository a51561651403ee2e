//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.
//!
//! Oracles here are deliberately independent of the library: brute-force
//! assignment, exhaustive NMS with a polygon-clipping IoU, closed-form
//! damping scores and hand-counted evaluation scenes.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mmtrack::config::RunConfig;
use mmtrack::eval::{self, EvalBox, EvalFrame};
use mmtrack::scene::to_jsonl;
use mmtrack::synth::{self, preset};
use mmtrack::{generate_scenario, track_and_evaluate, track_scene, ConfigFile, SceneFile};
use mmtrack_core::association::{assign, AssignMethod, CostMatrix};
use mmtrack_core::filter::{self, NoiseConfig, Observation};
use mmtrack_core::imm::{self, ImmConfig};
use mmtrack_core::lifecycle::{dw_score, AssociationHistory};
use mmtrack_core::motion::{jacobian, transition};
use mmtrack_core::preprocess::{dbse_weight, nms, DbseFunction};
use mmtrack_core::{Detection, ModelKind, ModelState, ObjectClass, PerClass, UnifiedState};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 filter correctness", c1_filter),
        ("2 mode probabilities on the simplex", c2_simplex),
        ("3 maneuver adaptation", c3_adaptation),
        ("4 bank vs single models", c4_bank_rmse),
        ("5 damping-window score", c5_damping),
        ("6 damping window lowers FN", c6_dw_fn),
        ("7 distance-based score enhancement", c7_dbse),
        ("8 assignment optimality", c8_assignment),
        ("9 rotated NMS", c9_nms),
        ("10 noiseless end to end", c10_noiseless),
        ("11 identity switch accounting", c11_id_switch),
    ];
    // Honour a name filter so `cargo test -- <name>` still works.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {verdict} ({:.2?}) {}", start.elapsed(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

// Criterion 1

fn random_state(kind: ModelKind, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut s = DVector::zeros(kind.dim());
    s[0] = rng.random_range(-50.0..50.0);
    s[1] = rng.random_range(-50.0..50.0);
    s[2] = rng.random_range(-1.0..2.0);
    s[3] = rng.random_range(0.5..3.0);
    s[4] = rng.random_range(0.5..12.0);
    s[5] = rng.random_range(1.0..4.0);
    let theta = rng.random_range(-3.1..3.1);
    let omega = rng.random_range(0.1..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    match kind {
        ModelKind::Cv => {
            s[6] = rng.random_range(-15.0..15.0);
            s[7] = rng.random_range(-15.0..15.0);
            s[8] = rng.random_range(-0.5..0.5);
            s[9] = theta;
        }
        ModelKind::Ca => {
            s[6] = rng.random_range(-15.0..15.0);
            s[7] = rng.random_range(-15.0..15.0);
            s[8] = rng.random_range(-0.5..0.5);
            s[9] = rng.random_range(-3.0..3.0);
            s[10] = rng.random_range(-3.0..3.0);
            s[11] = rng.random_range(-0.3..0.3);
            s[12] = theta;
        }
        ModelKind::Ctrv => {
            s[6] = rng.random_range(0.5..20.0);
            s[7] = theta;
            s[8] = omega;
        }
        ModelKind::Ctra => {
            s[6] = rng.random_range(0.5..20.0);
            s[7] = rng.random_range(-3.0..3.0);
            s[8] = theta;
            s[9] = omega;
        }
    }
    s
}

fn numeric_jacobian(kind: ModelKind, s: &DVector<f64>, dt: f64) -> DMatrix<f64> {
    let n = kind.dim();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let h = 1e-6 * s[c].abs().max(1.0);
        let (mut hi, mut lo) = (s.clone(), s.clone());
        hi[c] += h;
        lo[c] -= h;
        let d = (transition(kind, &hi, dt).unwrap() - transition(kind, &lo, dt).unwrap()) / (2.0 * h);
        j.set_column(c, &d);
    }
    j
}

fn is_psd(p: &DMatrix<f64>) -> bool {
    let asym = (p - p.transpose()).amax();
    let eig = SymmetricEigen::new((p + p.transpose()) * 0.5).eigenvalues;
    let scale = eig.amax().max(1.0);
    asym <= 1e-9 * scale && eig.min() >= -1e-9 * scale
}

fn c1_filter() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for kind in ModelKind::ALL {
        for _ in 0..100 {
            let s = random_state(kind, &mut rng);
            let dt = rng.random_range(0.05..1.0);
            let a = jacobian(kind, &s, dt).unwrap();
            let n = numeric_jacobian(kind, &s, dt);
            for (x, y) in a.iter().zip(n.iter()) {
                worst = worst.max((x - y).abs() / x.abs().max(1.0));
            }
        }
    }
    let jac_ok = worst <= 1e-5;

    let noise = NoiseConfig::default();
    let mut psd_failures = 0;
    for kind in ModelKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + kind as u64);
        let seed = UnifiedState {
            x: 0.0,
            y: 0.0,
            z: 0.8,
            w: 1.9,
            l: 4.6,
            h: 1.7,
            ..UnifiedState::default()
        };
        let mut m = ModelState::new(
            kind,
            mmtrack_core::motion::from_unified(kind, &seed),
            noise.initial(kind).clone(),
        )
        .unwrap();
        for _ in 0..1000 {
            m = filter::predict(&m, &noise, rng.random_range(0.05..1.0)).unwrap();
            psd_failures += usize::from(!is_psd(&m.covariance));
            let u = m.to_unified();
            let obs = Observation::pose(
                [
                    u.x + rng.random_range(-1.0..1.0),
                    u.y + rng.random_range(-1.0..1.0),
                    u.z + rng.random_range(-0.2..0.2),
                ],
                [
                    1.9 + rng.random_range(-0.1..0.1),
                    4.6 + rng.random_range(-0.1..0.1),
                    1.7,
                ],
                u.theta + rng.random_range(-0.2..0.2),
                0.0,
            );
            m = filter::update(&m, &obs, &noise).unwrap().posterior;
            psd_failures += usize::from(!is_psd(&m.covariance));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        jac_ok && psd_failures == 0 && elapsed < Duration::from_secs(5),
        format!("max rel jacobian error {worst:.2e}, {psd_failures} non-PSD covariances over 4x1000 cycles"),
    )
}

// Criterion 2

fn c2_simplex() -> Outcome {
    let noise = NoiseConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut negative = 0;
    for seq in 0..10_000 {
        let cfg = ImmConfig {
            mixing: seq % 2 == 1,
            ..ImmConfig::default()
        };
        let mut state = imm::imm_init([0.0, 0.0, 0.8], [1.9, 4.6, 1.7], 0.0, &cfg, &noise).unwrap();
        for _ in 0..4 {
            let (pred, fused) = imm::imm_predict(&state, 0.5, &cfg, &noise).unwrap();
            // One in five observations is a gross outlier.
            let spread = if rng.random::<f64>() < 0.2 { 80.0 } else { 0.7 };
            let obs = Observation::pose(
                [
                    fused.x + rng.random_range(-spread..spread),
                    fused.y + rng.random_range(-spread..spread),
                    fused.z,
                ],
                [1.9, 4.6, 1.7],
                fused.theta + rng.random_range(-0.3..0.3),
                0.0,
            );
            state = imm::imm_update(&pred, &obs, &cfg, &noise).unwrap();
            worst = worst.max((state.probabilities.sum() - 1.0).abs());
            negative += state.probabilities.iter().filter(|&&p| p < 0.0).count();
        }
    }
    outcome(
        worst <= 1e-9 && negative == 0,
        format!("max |sum-1| {worst:.1e} over 10000 sequences, {negative} negative entries"),
    )
}

// Criteria 3 and 4: the filter alone on a single target's detections.

struct Run {
    fused: Vec<[f64; 2]>,
    dominant: Vec<ModelKind>,
}

fn filter_single_target(scene: &SceneFile, cfg: &ImmConfig, noise: &NoiseConfig) -> Run {
    let dt = 1.0 / scene.header.frame_rate;
    let mut state = None;
    let mut run = Run {
        fused: Vec::new(),
        dominant: Vec::new(),
    };
    for frame in &scene.frames {
        let det = &frame.detections[0];
        let obs = Observation::pose(det.center, det.extent, det.yaw, frame.timestamp);
        let next = match state.take() {
            None => imm::imm_init(det.center, det.extent, det.yaw, cfg, noise).unwrap(),
            Some(s) => {
                let (pred, _) = imm::imm_predict(&s, dt, cfg, noise).unwrap();
                imm::imm_update(&pred, &obs, cfg, noise).unwrap()
            }
        };
        run.fused.push([next.fused.x, next.fused.y]);
        run.dominant.push(next.dominant_kind());
        state = Some(next);
    }
    run
}

fn truth_xy(scene: &SceneFile) -> Vec<[f64; 2]> {
    scene
        .frames
        .iter()
        .map(|f| {
            let g = &f.ground_truth.as_ref().unwrap()[0];
            [g.center[0], g.center[1]]
        })
        .collect()
}

fn c3_adaptation() -> Outcome {
    let start = Instant::now();
    // The turn input starts after this frame.
    let onset = 20;
    let cfg = ImmConfig::default();
    let noise = NoiseConfig::default();
    let mut within = 0;
    let mut latencies = Vec::new();
    for seed in 0..100 {
        let scene = generate_scenario(&preset("cruise_turn", seed).unwrap()).unwrap();
        let run = filter_single_target(&scene, &cfg, &noise);
        let turning = |k: ModelKind| matches!(k, ModelKind::Ctrv | ModelKind::Ctra);
        let first = (onset + 1..run.dominant.len()).find(|&f| turning(run.dominant[f]));
        if let Some(f) = first {
            latencies.push(f - onset);
            within += usize::from(f - onset <= 5);
        }
    }
    let elapsed = start.elapsed();
    latencies.sort_unstable();
    let median = latencies.get(latencies.len() / 2).copied();
    outcome(
        within >= 95 && elapsed < Duration::from_secs(30),
        format!("{within}/100 seeds switch to a turning model within 5 frames (median latency {median:?})"),
    )
}

fn rmse(est: &[[f64; 2]], truth: &[[f64; 2]]) -> f64 {
    let sq: f64 = est
        .iter()
        .zip(truth)
        .map(|(e, t)| (e[0] - t[0]).powi(2) + (e[1] - t[1]).powi(2))
        .sum();
    (sq / est.len() as f64).sqrt()
}

fn c4_bank_rmse() -> Outcome {
    let noise = NoiseConfig::default();
    let mut configs = vec![("IMM", ImmConfig::default())];
    configs.extend(ModelKind::ALL.iter().map(|&k| (k.name(), ImmConfig::single(k))));
    let mut totals = vec![0.0; configs.len()];
    let seeds = 50;
    for seed in 0..seeds {
        let scene = generate_scenario(&preset("regime_switch", seed).unwrap()).unwrap();
        let truth = truth_xy(&scene);
        for (i, (_, cfg)) in configs.iter().enumerate() {
            totals[i] += rmse(&filter_single_target(&scene, cfg, &noise).fused, &truth) / seeds as f64;
        }
    }
    let bank = totals[0];
    let best = totals[1..].iter().copied().fold(f64::INFINITY, f64::min);
    let worst = totals[1..].iter().copied().fold(0.0, f64::max);
    let table: Vec<String> = configs
        .iter()
        .zip(&totals)
        .map(|((n, _), r)| format!("{n} {r:.5}"))
        .collect();
    outcome(
        bank <= 1.05 * best && bank <= 0.9 * worst,
        format!(
            "mean position RMSE [{}], bank/best {:.4}, bank/worst {:.4}",
            table.join(", "),
            bank / best,
            bank / worst
        ),
    )
}

// Criterion 5

fn closed_form_dw(flags: &[bool], lambda: f64) -> f64 {
    let t = flags.len() - 1;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &hit) in flags.iter().enumerate() {
        let w = (lambda * (k as f64 - t as f64)).exp();
        den += w;
        if hit {
            num += w;
        }
    }
    num / den
}

fn c5_damping() -> Outcome {
    let lambda = 0.4;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();
    let score = |flags: &[bool]| {
        dw_score(
            &AssociationHistory::from_flags(0, flags.to_vec()),
            flags.len() as i64 - 1,
            lambda,
        )
    };
    let mut max_diff = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(1..80);
        let flags: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.5).collect();
        let s = score(&flags);
        if !(0.0..=1.0).contains(&s) {
            bad.push("score outside [0, 1]");
        }
        max_diff = max_diff.max((s - closed_form_dw(&flags, lambda)).abs());
    }
    if max_diff > 1e-12 {
        bad.push("disagrees with the closed form");
    }
    if (1..60).any(|n| (score(&vec![true; n]) - 1.0).abs() > 1e-12) {
        bad.push("all-associated history does not score 1");
    }
    // 1 / (1 + e^{0.4})
    if (score(&[true, false]) - 0.401_312_339_887_548).abs() > 1e-12 {
        bad.push("[hit, miss] spot value");
    }
    let curves = mmtrack::curves::dw_conditions(20, lambda);
    let flags: Vec<Vec<bool>> = (1..=5).map(|c| mmtrack::curves::condition_flags(c, 20)).collect();
    if !(3..20).all(|t| curves[1][t] > curves[0][t]) {
        bad.push("three hits do not outscore one");
    }
    if !(1..20).all(|t| curves[0][t] < curves[0][t - 1]) {
        bad.push("no monotone decay without hits");
    }
    for c in 2..5 {
        // A hit strictly raises any score below 1 and keeps 1 at 1.
        let raised = |t: usize| curves[c][t] > curves[c][t - 1] || (curves[c][t - 1] == 1.0 && curves[c][t] == 1.0);
        if !(1..20).filter(|&t| flags[c][t]).all(raised) {
            bad.push("re-association does not raise the score");
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("10000 random histories agree with the closed form to {max_diff:.1e}")
        } else {
            bad.join("; ")
        },
    )
}

// Criteria 6 and 7

fn ablation(base: &str, toggles: &str) -> RunConfig {
    ConfigFile::parse(&format!("{base}\n[ablation]\n{toggles}\n"))
        .unwrap()
        .resolve()
        .unwrap()
}

fn summed(preset_name: &str, cfg: &RunConfig, seeds: u64) -> eval::Counts {
    let mut total = eval::Counts::default();
    for seed in 0..seeds {
        let scene = generate_scenario(&preset(preset_name, seed).unwrap()).unwrap();
        let (_, report) = track_and_evaluate(&scene, cfg, eval::DEFAULT_MATCH_DISTANCE).unwrap();
        total.add(report.counts());
    }
    total
}

fn c6_dw_fn() -> Outcome {
    let on = summed("benchmark", &ablation("", "dw = true"), 20);
    let off = summed("benchmark", &ablation("", "dw = false"), 20);
    outcome(
        on.fn_ <= off.fn_,
        format!(
            "FN with damping window {} vs count-based {} (FP {} vs {})",
            on.fn_, off.fn_, on.fp, off.fp
        ),
    )
}

fn c7_dbse() -> Outcome {
    let mut bad = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let (alpha, beta) = (rng.random_range(0.001..100.0), rng.random_range(0.0..1.0));
        let d = rng.random_range(0.1..200.0);
        let gap = rng.random_range(0.01..50.0);
        for f in [
            DbseFunction::Power { alpha, beta },
            DbseFunction::Exponential { alpha, beta },
        ] {
            if dbse_weight(&f, d).unwrap() < dbse_weight(&f, d + gap).unwrap() {
                bad.push("weight increases with distance".to_string());
            }
        }
    }
    let spot = dbse_weight(&DbseFunction::Exponential { alpha: 70.0, beta: 0.1 }, 70.0).unwrap();
    if (spot - ((-1.0f64).exp() + 0.1)).abs() > 1e-12 {
        bad.push(format!("spot value {spot}"));
    }
    let on = summed("long_range_clutter", &ablation("", "dbse = true"), 20);
    let off = summed("long_range_clutter", &ablation("", "dbse = false"), 20);
    if on.fp > off.fp {
        bad.push("enhancement raises FP".into());
    }
    outcome(
        bad.is_empty(),
        format!(
            "FP with enhancement {} vs without {} (FN {} vs {}){}",
            on.fp,
            off.fp,
            on.fn_,
            off.fn_,
            if bad.is_empty() {
                String::new()
            } else {
                format!("; {}", bad.join("; "))
            }
        ),
    )
}

// Criterion 8

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn c8_assignment() -> Outcome {
    let start = Instant::now();
    let perms = permutations(7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    let mut greedy_better = 0;
    for _ in 0..200 {
        let costs = DMatrix::from_fn(7, 7, |_, _| rng.random_range(0.0..10.0));
        let best = perms
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| costs[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let m = CostMatrix::dense(costs);
        let opt = assign(&m, AssignMethod::Optimal);
        if opt.matches.len() != 7 || (opt.matched_cost(&m) - best).abs() > 1e-9 {
            mismatches += 1;
        }
        if assign(&m, AssignMethod::Greedy).total_cost(&m) < opt.total_cost(&m) - 1e-9 {
            greedy_better += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && greedy_better == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches}/200 differ from brute force, greedy beat optimal {greedy_better} times"),
    )
}

// Criterion 9: exhaustive NMS over polygon-clipped IoU.

type P = (f64, f64);

fn corners(d: &Detection) -> Vec<P> {
    let (c, s) = (d.yaw.cos(), d.yaw.sin());
    let (hl, hw) = (d.extent[1] / 2.0, d.extent[0] / 2.0);
    [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
        .iter()
        .map(|&(u, v)| (d.center[0] + u * c - v * s, d.center[1] + u * s + v * c))
        .collect()
}

fn polygon_area(poly: &[P]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| poly[i].0 * poly[(i + 1) % n].1 - poly[(i + 1) % n].0 * poly[i].1)
        .sum::<f64>()
        .abs()
}

/// Sutherland-Hodgman clipping of `subject` by the convex `clip`.
fn clip(subject: &[P], clip: &[P]) -> Vec<P> {
    let orient = {
        let (a, b, c) = (clip[0], clip[1], clip[2]);
        ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
    };
    let side = |a: P, b: P, p: P| orient * ((b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0));
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let (p, q) = (input[j], input[(j + 1) % input.len()]);
            let (sp, sq) = (side(a, b, p), side(a, b, q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

fn reference_iou(a: &Detection, b: &Detection) -> f64 {
    let inter = clip(&corners(a), &corners(b));
    let inter = if inter.len() < 3 { 0.0 } else { polygon_area(&inter) };
    inter / (a.extent[0] * a.extent[1] + b.extent[0] * b.extent[1] - inter)
}

fn exhaustive_nms(dets: &[Detection], threshold: f64) -> Option<Vec<usize>> {
    let n = dets.len();
    let higher = |a: usize, b: usize| dets[a].score > dets[b].score || (dets[a].score == dets[b].score && a < b);
    let fixed: Vec<u32> = (0u32..1 << n)
        .filter(|mask| {
            (0..n).all(|i| {
                let blocked = (0..n).any(|j| {
                    j != i
                        && mask & (1 << j) != 0
                        && higher(j, i)
                        && dets[j].class == dets[i].class
                        && reference_iou(&dets[j], &dets[i]) > threshold
                });
                (mask & (1 << i) != 0) == !blocked
            })
        })
        .collect();
    (fixed.len() == 1).then(|| (0..n).filter(|&i| fixed[0] & (1 << i) != 0).collect())
}

fn c9_nms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..200 {
        let dets: Vec<Detection> = (0..6)
            .map(|_| Detection {
                center: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0],
                extent: [rng.random_range(1.0..2.5), rng.random_range(2.0..5.0), 1.5],
                yaw: rng.random_range(-3.2..3.2),
                velocity: None,
                score: rng.random_range(0.0..1.0),
                class: if rng.random::<f64>() < 0.8 {
                    ObjectClass::Car
                } else {
                    ObjectClass::Truck
                },
                sensor_origin: None,
            })
            .collect();
        let threshold = rng.random_range(0.05..0.6);
        let kept = nms(&dets, &PerClass::uniform(threshold));
        let expected: Option<Vec<Detection>> =
            exhaustive_nms(&dets, threshold).map(|ix| ix.into_iter().map(|i| dets[i].clone()).collect());
        if expected.as_ref() != Some(&kept) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/200 six-box instances differ from the exhaustive reference"),
    )
}

// Criterion 10

fn c10_noiseless() -> Outcome {
    let scene = generate_scenario(&synth::noiseless()).unwrap();
    let cfg = RunConfig::default();
    let (tracks, report) = track_and_evaluate(&scene, &cfg, eval::DEFAULT_MATCH_DISTANCE).unwrap();
    let again = track_scene(&scene, &cfg).unwrap();
    let bytes = |t: &mmtrack::TrackFile| to_jsonl(&t.header, &t.frames).into_bytes();
    let identical = bytes(&tracks) == bytes(&again);
    let c = report.counts();
    let mota = c.mota().unwrap_or(f64::NAN);
    outcome(
        mota == 1.0 && c.ids == 0 && identical,
        format!("MOTA {mota}, IDS {}, byte-identical rerun {identical}", c.ids),
    )
}

// Criterion 11

fn b(id: u64, x: f64) -> EvalBox {
    EvalBox {
        id,
        class: ObjectClass::Car,
        x,
        y: 0.0,
        score: 0.9,
    }
}

fn c11_id_switch() -> Outcome {
    // Truth: A (id 1) at x=0 and B (id 2) at x=10 for three frames.
    // Predictions: track 1 follows A for two frames, then track 3 takes it
    // over (one switch). Track 2 follows B but is missing in frame 2 (one
    // miss). Track 9 is a stray box in frame 1 (one false positive).
    let truth: Vec<EvalFrame> = (0..3).map(|f| EvalFrame::new(f, vec![b(1, 0.0), b(2, 10.0)])).collect();
    let pred = vec![
        EvalFrame::new(0, vec![b(1, 0.1), b(2, 10.1)]),
        EvalFrame::new(1, vec![b(1, 0.1), b(2, 10.1), b(9, 50.0)]),
        EvalFrame::new(2, vec![b(3, 0.1)]),
    ];
    let report = eval::evaluate(&pred, &truth, 2.0).unwrap();
    let c = report.counts();
    let ok = c.tp == 5 && c.fp == 1 && c.fn_ == 1 && c.ids == 1 && c.gt == 6 && c.mota() == Some(0.5);
    outcome(
        ok,
        format!(
            "TP {} FP {} FN {} IDS {} GT {} MOTA {:?}",
            c.tp,
            c.fp,
            c.fn_,
            c.ids,
            c.gt,
            c.mota()
        ),
    )
}
