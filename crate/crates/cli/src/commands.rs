use std::path::Path;

use lbcbeam::beams::{beam_pattern, build_plan, pattern_csv, Side};
use lbcbeam::channel::Path as ChannelPath;
use lbcbeam::codes::matched_code;
use lbcbeam::discovery::{table_sufficiency, DiscoveryTables, SufficiencyReport, TablesJson};
use lbcbeam::eval::{
    measurement_count, EvalError, MeasurementCount, Simulator, TrialRecord,
    QUOTED_15X15_EXHAUSTIVE, QUOTED_15X15_REDUCTION_PCT,
};
use lbcbeam::json::ComplexJson;
use lbcbeam::measure::AdcConfig;
use lbcbeam::{ArrayGeometry, SimConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{provenance, run_dir, write_json, write_text};

pub fn codes(n: usize, l: usize, out: Option<&Path>) -> Result<(), CliError> {
    let code = matched_code(n, l)?;
    let mut matrix = code.parity_check().to_text();
    if !matrix.ends_with('\n') {
        matrix.push('\n');
    }
    print!(
        "code {} k={} d={} e_n={} m={}\nH:\n{matrix}",
        code.label(),
        code.k(),
        code.d(),
        code.error_capability(),
        code.redundancy(),
    );
    if let Some(path) = out {
        write_text(path, &matrix)?;
    }
    Ok(())
}

fn count_lines(m: &MeasurementCount, geom: &ArrayGeometry) -> String {
    let mut s = format!(
        "measurements m1={} m2={} total={} exhaustive={} reduction={:.2}%\n",
        m.m1, m.m2, m.m_total, m.m_exhaustive, m.reduction_pct
    );
    if geom.n_t == 15 && geom.n_r == 15 {
        let quoted = 100.0 * (1.0 - m.m_total as f64 / QUOTED_15X15_EXHAUSTIVE as f64);
        s.push_str(&format!(
            "note: published 15x15 figures are {QUOTED_15X15_EXHAUSTIVE} exhaustive measurements \
             and ~{QUOTED_15X15_REDUCTION_PCT}% reduction; {QUOTED_15X15_EXHAUSTIVE} gives \
             {quoted:.1}% and 15*15 gives {:.1}%, so the published pair is inconsistent\n",
            m.reduction_pct
        ));
    }
    s
}

pub fn beams(cfg: &SimConfig, samples: usize) -> Result<(), CliError> {
    let geom = cfg.geometry();
    let plan = build_plan(&geom, cfg.paths)?;
    let dir = run_dir(&cfg.output_dir, "beams")?;
    write_json(&dir.join("plan.json"), &plan.to_json())?;
    for (i, w) in plan.combiners.iter().enumerate() {
        let p = beam_pattern(w, &geom, Side::Rx, samples);
        write_text(&dir.join(format!("rx_beam_{i}.csv")), &pattern_csv(&p))?;
    }
    for (j, f) in plan.precoders.iter().enumerate() {
        let p = beam_pattern(f, &geom, Side::Tx, samples);
        write_text(&dir.join(format!("tx_beam_{j}.csv")), &pattern_csv(&p))?;
    }
    println!(
        "rx code {} tx code {}",
        plan.code_rx.label(),
        plan.code_tx
            .as_ref()
            .map_or("none".to_string(), |c| c.label())
    );
    print!("{}", count_lines(&measurement_count(&plan), &geom));
    println!("wrote {}", dir.display());
    Ok(())
}

/// Builds the simulator, reusing the table cache when it matches.
fn simulator(cfg: &SimConfig) -> Result<Simulator, CliError> {
    let Some(path) = &cfg.table_cache else {
        return Ok(Simulator::new(cfg.clone())?);
    };
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let json: TablesJson = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let tables = DiscoveryTables::from_json(json)?;
        match Simulator::with_tables(cfg.clone(), tables) {
            Ok(sim) => return Ok(sim),
            Err(EvalError::StaleTables) => {
                eprintln!(
                    "warning: {} does not match this configuration; rebuilding",
                    path.display()
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    let sim = Simulator::new(cfg.clone())?;
    let text = serde_json::to_string(&sim.tables().to_json())
        .map_err(|e| CliError::Other(e.to_string()))?;
    write_text(path, &text)?;
    Ok(sim)
}

#[derive(Serialize)]
struct TableSummary {
    side: &'static str,
    code: String,
    entries: usize,
    sufficiency: SufficiencyReport,
}

pub fn table(cfg: &SimConfig) -> Result<(), CliError> {
    let sim = simulator(cfg)?;
    let plan = sim.plan();
    let tables = sim.tables();
    let mut summaries = vec![TableSummary {
        side: "rx",
        code: plan.code_rx.label(),
        entries: tables.rx.len(),
        sufficiency: table_sufficiency(&tables.rx),
    }];
    if let (Some(code), Some(tx)) = (&plan.code_tx, &tables.tx) {
        let sufficiency = if tx.parity_check() == tables.rx.parity_check() {
            summaries[0].sufficiency.clone()
        } else {
            table_sufficiency(tx)
        };
        summaries.push(TableSummary {
            side: "tx",
            code: code.label(),
            entries: tx.len(),
            sufficiency,
        });
    }
    let dir = run_dir(&cfg.output_dir, "table")?;
    write_json(&dir.join("config.json"), cfg)?;
    write_json(&dir.join("sufficiency.json"), &summaries)?;
    let text =
        serde_json::to_string(&tables.to_json()).map_err(|e| CliError::Other(e.to_string()))?;
    write_text(&dir.join("tables.json"), &text)?;
    for s in &summaries {
        let delta = s
            .sufficiency
            .min_delta
            .map_or("n/a".to_string(), |d| format!("{d}"));
        println!(
            "{} table {}: {} entries, min pairwise delta {} (unit step), {}",
            s.side,
            s.code,
            s.entries,
            delta,
            if s.sufficiency.passed {
                "distinct"
            } else {
                "COLLISION"
            }
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct EntryJson {
    rx_bin: usize,
    tx_bin: usize,
    re: f64,
    im: f64,
}

fn nonzero(m: &DMatrix<Complex64>) -> Vec<EntryJson> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z.norm() != 0.0 {
                out.push(EntryJson {
                    rx_bin: i,
                    tx_bin: j,
                    re: z.re,
                    im: z.im,
                });
            }
        }
    }
    out
}

fn vector(v: &DVector<Complex64>) -> Vec<ComplexJson> {
    v.iter().map(|&z| z.into()).collect()
}

#[derive(Serialize)]
struct TxSyndromeJson {
    rx_bin: usize,
    syndrome: Vec<ComplexJson>,
}

#[derive(Serialize)]
struct TrialDump<'a> {
    config: &'a SimConfig,
    provenance: Option<String>,
    point: usize,
    trial: usize,
    snr_db: f64,
    seed: u64,
    adc: AdcConfig,
    quantized: bool,
    paths: &'a [ChannelPath],
    rx_syndromes: Vec<Vec<ComplexJson>>,
    rx_estimates: Vec<Vec<ComplexJson>>,
    tx_syndromes: Vec<TxSyndromeJson>,
    qa_true: Vec<EntryJson>,
    qa_hat: Vec<EntryJson>,
    true_detectable: Vec<(usize, usize)>,
    estimated: Vec<(usize, usize)>,
    score: lbcbeam::eval::TrialScore,
}

pub fn simulate(cfg: &SimConfig, point: usize, trial: usize) -> Result<(), CliError> {
    if point >= cfg.snr_grid_db.len() {
        return Err(CliError::Config(format!(
            "point {point} outside an SNR grid of {} values",
            cfg.snr_grid_db.len()
        )));
    }
    let sim = simulator(cfg)?;
    let r: TrialRecord = sim.run_trial(point, trial)?;
    let d = &r.discovery;
    let dump = TrialDump {
        config: cfg,
        provenance: provenance(),
        point,
        trial,
        snr_db: r.snr_db,
        seed: r.seed,
        adc: r.adc,
        quantized: !cfg.no_adc,
        paths: &r.paths,
        rx_syndromes: d.rx_syndromes.iter().map(vector).collect(),
        rx_estimates: d.rx_estimates.iter().map(vector).collect(),
        tx_syndromes: d
            .tx_syndromes
            .iter()
            .map(|(p, y)| TxSyndromeJson {
                rx_bin: *p,
                syndrome: vector(y),
            })
            .collect(),
        qa_true: nonzero(&r.outcome.qa_true),
        qa_hat: nonzero(&r.outcome.qa_hat),
        true_detectable: r.outcome.true_detectable.iter().copied().collect(),
        estimated: r.outcome.estimated.iter().copied().collect(),
        score: r.score,
    };
    let dir = run_dir(&cfg.output_dir, "simulate")?;
    write_json(&dir.join("config.json"), cfg)?;
    write_json(&dir.join("trial.json"), &dump)?;
    println!(
        "snr {} dB trial {}: truth {:?} estimate {:?} perfect={} incorrect={} mse={}",
        r.snr_db,
        trial,
        dump.true_detectable,
        dump.estimated,
        r.score.perfect,
        r.score.incorrect,
        r.score.mse
    );
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn sweep(cfg: &SimConfig) -> Result<(), CliError> {
    let sim = simulator(cfg)?;
    let mut report = sim.run()?;
    report.provenance = provenance();
    let dir = run_dir(&cfg.output_dir, "sweep")?;
    write_json(&dir.join("config.json"), cfg)?;
    write_json(&dir.join("report.json"), &report)?;
    write_text(&dir.join("summary.csv"), &report.summary_csv())?;
    write_text(&dir.join("histogram.csv"), &report.histogram_csv())?;
    println!(
        "codes rx {} tx {}",
        report.code_rx,
        report.code_tx.as_deref().unwrap_or("none")
    );
    print!("{}", count_lines(&report.measurements, &cfg.geometry()));
    println!("snr_db  p_perfect  p_all   p_partial  p0_incorrect  mse_mean");
    for p in &report.points {
        println!(
            "{:>6}  {:>9.4}  {:>6.4}  {:>9.4}  {:>12.4}  {:.4e}",
            p.snr_db,
            p.perfect.p,
            p.all.p,
            p.partial.p,
            p.p_zero_incorrect(),
            p.mse_mean
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}
