//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset with `cargo test -p wavefp-cli --test acceptance -- 2 5 9`.

use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;
use wavefp_cli::commands::cmd_compare;
use wavefp_cli::{Reporter, RunConfig};
use wavefp_core::data::{apportion, assign_splits, Label, SplitSpec};
use wavefp_core::experiment::{compare, SplitData, COMPARE_DOMAINS};
use wavefp_core::image::ImageTensor;
use wavefp_core::metrics::{auc, average_precision, roc_curve};
use wavefp_core::nn::{
    build_model, decode_model, encode_model, load_model, loss_and_gradients, save_model, ModelConfig,
    FORMAT_VERSION,
};
use wavefp_core::rng::rng_from;
use wavefp_core::wavelet::{dwt1d, dwt2d, idwt2d, BoundaryMode, FilterBank, Wavelet};
use wavefp_core::Error;

const WAVELETS: [Wavelet; 2] = [Wavelet::Haar, Wavelet::Db2];
const MODES: [BoundaryMode; 2] = [BoundaryMode::Periodization, BoundaryMode::Symmetric];

/// Pinned tolerances and budgets.
const ROUND_TRIP_TOL: f64 = 1e-9;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(30);
const PARSEVAL_TOL: f64 = 1e-9;
const FILTER_TOL: f64 = 1e-12;
const HAAR_CONST_TOL: f64 = 1e-12;
const DB2_RAMP_TOL: f64 = 1e-9;
const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
const GRAD_FLOOR: f64 = 1e-6;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const E2E_SEEDS: [u64; 3] = [0, 1, 2];
const E2E_MIN_DB2_AUC: f64 = 0.90;
const E2E_MIN_MARGIN: f64 = 0.05;
const E2E_BUDGET: Duration = Duration::from_secs(15 * 60);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_plane(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn c1_reference_statement() -> Verdict {
    verdict(
        true,
        "full-scale reference values are documented on Comparison, not reproduced; criteria 2-11 are the substitutes",
    )
}

fn c2_round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from(&[2]);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let plane = random_plane(&mut rng, 64, 64);
        for w in WAVELETS {
            let fb = w.filter_bank();
            for mode in MODES {
                let back = idwt2d(&dwt2d(plane.view(), &fb, mode).unwrap(), &fb, mode).unwrap();
                let err = (&back - &plane).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max(err);
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst < ROUND_TRIP_TOL && t < ROUND_TRIP_BUDGET,
        format!("max err {worst:.2e} (< {ROUND_TRIP_TOL:e}), {:.1}s (< 30s)", t.as_secs_f64()),
    )
}

fn c3_parseval() -> Verdict {
    let mut rng = rng_from(&[3]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let plane = random_plane(&mut rng, 64, 64);
        let e: f64 = plane.iter().map(|v| v * v).sum();
        for w in WAVELETS {
            let q = dwt2d(plane.view(), &w.filter_bank(), BoundaryMode::Periodization).unwrap();
            worst = worst.max((q.energy() - e).abs() / e);
        }
    }
    verdict(worst < PARSEVAL_TOL, format!("max relative mismatch {worst:.2e} (< {PARSEVAL_TOL:e})"))
}

fn filter_defects(fb: &FilterBank) -> f64 {
    let h = &fb.dec_lo;
    let l = h.len();
    let mut defects = vec![
        (h.iter().sum::<f64>() - 2f64.sqrt()).abs(),
        (h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs(),
    ];
    for shift in (2..l).step_by(2) {
        defects.push((0..l - shift).map(|k| h[k] * h[k + shift]).sum::<f64>().abs());
    }
    for k in 0..l {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        defects.push((fb.dec_hi[k] - sign * h[l - 1 - k]).abs());
        defects.push((fb.rec_lo[k] - h[l - 1 - k]).abs());
        defects.push((fb.rec_hi[k] - fb.dec_hi[l - 1 - k]).abs());
    }
    defects.into_iter().fold(0.0, f64::max)
}

fn c4_filter_identities() -> Verdict {
    let haar = filter_defects(&Wavelet::Haar.filter_bank());
    let db2 = Wavelet::Db2.filter_bank();
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    let closed = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
    let closed_err = db2.dec_lo.iter().zip(closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let worst = haar.max(filter_defects(&db2)).max(closed_err);
    verdict(
        worst < FILTER_TOL && db2.dec_lo.len() == 4,
        format!("haar {haar:.1e}, db2 identities {:.1e}, db2 closed form {closed_err:.1e} (< {FILTER_TOL:e})", filter_defects(&db2)),
    )
}

fn c5_vanishing_moments() -> Verdict {
    let haar = Wavelet::Haar.filter_bank();
    let mut haar_worst = 0.0f64;
    for len in [2, 7, 16, 33, 64] {
        for c in [-3.5, 0.0, 0.25, 1e3] {
            for mode in MODES {
                let (_, d) = dwt1d(&vec![c; len], &haar, mode).unwrap();
                haar_worst = d.iter().fold(haar_worst, |m, v| m.max(v.abs()));
            }
        }
    }
    let db2 = Wavelet::Db2.filter_bank();
    let taps = db2.len();
    let mut db2_worst = 0.0f64;
    let mut checked = 0;
    for (slope, offset) in [(1.0, 0.0), (-0.37, 5.0), (12.5, -40.0)] {
        let ramp: Vec<f64> = (0..64).map(|i| offset + slope * i as f64).collect();
        for mode in MODES {
            let (_, d) = dwt1d(&ramp, &db2, mode).unwrap();
            // Coefficient i reads samples 2i-(taps-2) ..= 2i+1; interior ones
            // never touch the extension.
            for (i, v) in d.iter().enumerate() {
                let first = 2 * i as isize - (taps as isize - 2);
                if first >= 0 && first as usize + taps <= ramp.len() {
                    db2_worst = db2_worst.max(v.abs());
                    checked += 1;
                }
            }
        }
    }
    verdict(
        haar_worst < HAAR_CONST_TOL && db2_worst < DB2_RAMP_TOL && checked > 0,
        format!(
            "haar constant detail {haar_worst:.1e} (< {HAAR_CONST_TOL:e}), db2 interior ramp detail {db2_worst:.1e} (< {DB2_RAMP_TOL:e}) over {checked} coefficients"
        ),
    )
}

fn c6_gradient_check() -> Verdict {
    let start = Instant::now();
    let cfg = ModelConfig {
        input_side: 8,
        seed: 6,
        ..Default::default()
    };
    let model = build_model(&cfg).unwrap();
    let mut rng = rng_from(&[6]);
    let batch: Vec<ImageTensor> = (0..2)
        .map(|_| ImageTensor::new(8, 8, 3, (0..192).map(|_| rng.random()).collect()).unwrap())
        .collect();
    let labels = [0.0, 1.0];
    let mut params = model.params_f64();
    let (_, analytic) = loss_and_gradients(&cfg, &params, &batch, &labels).unwrap();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + GRAD_STEP;
        let (up, _) = loss_and_gradients(&cfg, &params, &batch, &labels).unwrap();
        params[i] = orig - GRAD_STEP;
        let (down, _) = loss_and_gradients(&cfg, &params, &batch, &labels).unwrap();
        params[i] = orig;
        let numeric = (up - down) / (2.0 * GRAD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(GRAD_FLOOR);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    let t = start.elapsed();
    verdict(
        worst < GRAD_TOL && t < GRAD_BUDGET,
        format!(
            "{} parameters, max relative error {worst:.2e} (< {GRAD_TOL:e}), {:.1}s (< 60s)",
            params.len(),
            t.as_secs_f64()
        ),
    )
}

/// Mann-Whitney statistic with half-credit ties, by enumerating pairs.
fn pairwise_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut twice = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            p += 1;
        } else {
            n += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

/// AP by enumerating each distinct threshold as a prefix of the ranking.
fn prefix_ap(labels: &[u8], scores: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut ap = 0.0;
    let mut prev_tp = 0.0;
    for t in thresholds {
        let (mut tp, mut fp) = (0.0, 0.0);
        for (l, s) in labels.iter().zip(scores) {
            if *s >= t {
                if *l == 1 {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        if tp > prev_tp {
            ap += (tp - prev_tp) / positives * (tp / (tp + fp));
        }
        prev_tp = tp;
    }
    ap
}

fn c7_metric_oracles() -> Verdict {
    let mut rng = rng_from(&[7]);
    let (mut auc_bad, mut ap_bad, mut sets) = (0, 0, 0);
    while sets < 500 {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(2..=20);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        sets += 1;
        let curve = roc_curve(&labels, &scores).unwrap();
        if auc(&curve).to_bits() != pairwise_auc(&labels, &scores).to_bits() {
            auc_bad += 1;
        }
        if average_precision(&labels, &scores).unwrap().to_bits() != prefix_ap(&labels, &scores).to_bits() {
            ap_bad += 1;
        }
    }
    verdict(
        auc_bad == 0 && ap_bad == 0,
        format!("{sets} tied score sets: {auc_bad} AUC and {ap_bad} AP bitwise mismatches"),
    )
}

fn c8_split_exactness() -> Verdict {
    let keys: Vec<(Label, String)> = (0..10_000)
        .map(|i| (if i % 2 == 0 { Label::Real } else { Label::Fake }, "synthetic".to_string()))
        .collect();
    let mut failures = Vec::new();
    for seed in 0..10 {
        let spec = SplitSpec::new(0.70, 0.15, 0.15, seed).unwrap();
        let splits = assign_splits(&keys, &spec).unwrap();
        let mut counts = [[0usize; 3]; 2];
        for (k, s) in keys.iter().zip(&splits) {
            counts[k.0.as_u8() as usize][*s as usize] += 1;
        }
        let totals = [0, 1, 2].map(|s| counts[0][s] + counts[1][s]);
        if totals != [7000, 1500, 1500] || counts != [[3500, 750, 750]; 2] {
            failures.push(format!("seed {seed}: {totals:?} {counts:?}"));
        }
    }
    let ok = failures.is_empty() && apportion(5000, [0.7, 0.15, 0.15]) == [3500, 750, 750];
    verdict(
        ok,
        if ok {
            "10 seeds: 7000/1500/1500 with 3500/750/750 per label".to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// The end-to-end configuration for one seed: default synthetic data and
/// training, 500 images per class split 600/200/200.
fn e2e_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.set_seed(seed);
    cfg.n_per_class = 500;
    cfg.split = SplitSpec::new(0.6, 0.2, 0.2, seed).unwrap();
    cfg.finalize().unwrap();
    cfg
}

fn c9_end_to_end() -> Verdict {
    let start = Instant::now();
    let mut aucs: [Vec<f64>; 3] = Default::default();
    let mut rows = Vec::new();
    for seed in E2E_SEEDS {
        let cfg = e2e_config(seed);
        let data = SplitData::from_synth(cfg.n_per_class, &cfg.synth, cfg.seed, &cfg.split).unwrap();
        assert_eq!((data.train.len(), data.val.len(), data.test.len()), (600, 200, 200));
        let cmp = compare(&data, &cfg.model, &cfg.train, |_, _| {}).unwrap();
        let row: Vec<String> = COMPARE_DOMAINS
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let a = cmp.get(*d).unwrap().report.auc;
                aucs[i].push(a);
                format!("{d} {a:.4}")
            })
            .collect();
        rows.push(format!("seed {seed}: {}", row.join(", ")));
        println!("    {} ({:.0}s elapsed)", rows.last().unwrap(), start.elapsed().as_secs_f64());
    }
    let t = start.elapsed();
    let [spatial, haar, db2] = aucs.map(median);
    let checks = [
        (db2 >= E2E_MIN_DB2_AUC, format!("median db2 {db2:.4} >= {E2E_MIN_DB2_AUC}")),
        (db2 - spatial >= E2E_MIN_MARGIN, format!("db2 - spatial {:.4} >= {E2E_MIN_MARGIN}", db2 - spatial)),
        (db2 >= haar, format!("db2 {db2:.4} >= haar {haar:.4}")),
        (haar > spatial, format!("haar {haar:.4} > spatial {spatial:.4}")),
        (t < E2E_BUDGET, format!("{:.0}s < 900s", t.as_secs_f64())),
    ];
    let pass = checks.iter().all(|c| c.0);
    let detail = checks
        .iter()
        .map(|(ok, s)| format!("{}{s}", if *ok { "" } else { "NOT " }))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(pass, detail)
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.set_seed(10);
    cfg.n_per_class = 20;
    cfg.train.max_epochs = 3;
    cfg.finalize().unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        cfg.output_dir = tmp.path().join(name);
        cmd_compare(&cfg, Reporter { quiet: true }).unwrap();
        runs.push(files_in(&cfg.output_dir));
    }
    let names: Vec<&str> = runs[0].iter().map(|f| f.0.as_str()).collect();
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let has_outputs = names.iter().filter(|n| n.starts_with("history_")).count() == 3
        && names.iter().filter(|n| n.starts_with("report_") && n.ends_with(".json")).count() == 3;
    let ok = differing.is_empty() && runs[0].len() == runs[1].len() && has_outputs;
    verdict(
        ok,
        format!("{} files compared, {} differ {differing:?}", names.len(), differing.len()),
    )
}

fn c11_weight_file() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut model = build_model(&ModelConfig {
        seed: 11,
        dense_hidden: 4,
        ..Default::default()
    })
    .unwrap();
    model.training_seed = Some(11);
    let path = tmp.path().join("m.wgfd");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let bit_exact = back.config() == model.config()
        && back.training_seed == model.training_seed
        && back.params().iter().zip(model.params()).all(|(a, b)| a.to_bits() == b.to_bits())
        && back.param_count() == model.param_count();

    let bytes = encode_model(&model);
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x10;
    let corrupted = matches!(decode_model(&flipped), Err(Error::Corrupted(_)));
    let truncated = matches!(decode_model(&bytes[..bytes.len() - 9]), Err(Error::Corrupted(_)));
    let mut bumped = bytes.clone();
    bumped[4] = FORMAT_VERSION + 1;
    let version = matches!(decode_model(&bumped), Err(Error::VersionMismatch(_)));
    let mut magic = bytes;
    magic[0] = b'X';
    let bad_magic = matches!(decode_model(&magic), Err(Error::VersionMismatch(_)));
    verdict(
        bit_exact && corrupted && truncated && version && bad_magic,
        format!(
            "bit-exact {bit_exact}, flipped byte -> Corrupted {corrupted}, truncated -> Corrupted {truncated}, version bump -> VersionMismatch {version}, bad magic -> VersionMismatch {bad_magic}"
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 11] = [
    (1, "reference numbers", c1_reference_statement),
    (2, "DWT round trip", c2_round_trip),
    (3, "Parseval", c3_parseval),
    (4, "filter identities", c4_filter_identities),
    (5, "vanishing moments", c5_vanishing_moments),
    (6, "gradient check", c6_gradient_check),
    (7, "AUC/AP oracles", c7_metric_oracles),
    (8, "split exactness", c8_split_exactness),
    (9, "end-to-end comparison", c9_end_to_end),
    (10, "determinism", c10_determinism),
    (11, "weight-file round trip", c11_weight_file),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {status} {name} [{:.1}s]: {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

