//! Batch drivers for each mode.
//!
//! Images are processed on a pool of `workers` threads; each image's result
//! (or failure) is collected, then everything is sorted by image id before
//! any report is written, so output does not depend on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sgrif::decloud::{decloud, decloud_guided, Declouded};
use sgrif::metrics::{cdr_error, evaluate, MetricsReport};
use sgrif::raster::{load_image, save_image};
use sgrif::sdc::{build_feature, estimate_cdr, similarity_cost, solve_sdc, ReferenceSet};
use sgrif::Rgb64;

use crate::config::{Mode, RunConfig};
use crate::corpus::{list_images, read_cdr_table, ImageEntry};
use crate::error::CliError;
use crate::report::{num, opt_num, Report};

/// Outcome of a batch that ran to completion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub processed: usize,
    /// `(image id, message)` for every image that failed.
    pub failures: Vec<(String, String)>,
    pub reports: Vec<PathBuf>,
}

impl RunSummary {
    /// 0 when every image went through, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

pub const DECLOUD_REPORT: &str = "decloud_report.csv";
pub const GIF_REPORT: &str = "gif_report.csv";
pub const METRICS_REPORT: &str = "metrics_report.csv";
pub const COMPARE_REPORT: &str = "compare_report.csv";
pub const CDR_REPORT: &str = "cdr_report.csv";
pub const FAILURES: &str = "failures.csv";

pub const COMPARE_COLUMNS: [&str; 7] = ["image_id", "scenario", "hfm", "hs", "vll", "wall_time", "status"];
pub const SCENARIOS: [&str; 3] = ["original", "gif", "sgrif"];

/// Validates `config` and runs its mode.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let mode = config.mode.ok_or_else(|| CliError::Config("no mode selected".into()))?;
    config.validate()?;
    let input = config.input.as_deref().expect("validated");
    let entries = list_images(input)?;
    if entries.is_empty() {
        warn!("no .png or .ppm images in {}", input.display());
    }
    let output = config
        .output
        .clone()
        .unwrap_or_else(|| input.to_path_buf());
    fs::create_dir_all(&output).map_err(|source| CliError::Io {
        path: output.clone(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    info!("{} images, {} workers, mode {}", entries.len(), config.workers, mode.name());
    let summary = pool.install(|| match mode {
        Mode::Decloud | Mode::Gif => run_restore(config, mode, &entries, &output),
        Mode::Metrics => run_metrics(config, &entries, &output),
        Mode::Compare => run_compare(config, &entries, &output),
        Mode::Cdr => run_cdr(config, &entries, &output),
    })?;
    if !summary.failures.is_empty() {
        let mut report = Report::new(&["image_id", "error"]);
        for (id, msg) in &summary.failures {
            warn!("{id}: {msg}");
            report.push(vec![id.clone(), msg.clone()]);
        }
        report.write(&output.join(FAILURES), &config.digest())?;
    }
    Ok(summary)
}

/// Runs `f` over all entries on the current pool, returning results in id order.
fn map_entries<R: Send>(
    entries: &[ImageEntry],
    f: impl Fn(&ImageEntry) -> Result<R, String> + Sync,
) -> Vec<(String, Result<R, String>)> {
    let mut out: Vec<(String, Result<R, String>)> =
        entries.par_iter().map(|e| (e.id.clone(), f(e))).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn load(entry: &ImageEntry) -> Result<Rgb64, String> {
    load_image(&entry.path).map_err(|e| e.to_string())
}

fn metric_cells(m: &MetricsReport) -> [String; 3] {
    [num(m.hfm), num(m.hs), num(m.vll)]
}

#[derive(Serialize)]
struct Sidecar<'a> {
    image_id: &'a str,
    scenario: &'a str,
    height: usize,
    width: usize,
    lens_light: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn restore_one(config: &RunConfig, mode: Mode, img: &Rgb64) -> sgrif::Result<Declouded<f64>> {
    let d = &config.decloud;
    match mode {
        Mode::Gif => decloud_guided(img, d.kappa, &config.gif.params(), d.t_min, d.alpha),
        _ => decloud(img, &d.params()),
    }
}

fn run_restore(
    config: &RunConfig,
    mode: Mode,
    entries: &[ImageEntry],
    output: &Path,
) -> Result<RunSummary, CliError> {
    let options = config.metrics.options();
    let scenario = if mode == Mode::Gif { "gif" } else { "sgrif" };
    let results = map_entries(entries, |entry| {
        let img = load(entry)?;
        let start = Instant::now();
        let out = restore_one(config, mode, &img).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        let before = evaluate(&img, &options).map_err(|e| format!("input metrics: {e}"))?;
        let after = evaluate(&out.restored, &options).map_err(|e| format!("output metrics: {e}"))?;
        let save = |img: &Rgb64, suffix: &str| {
            save_image(img, output.join(format!("{}_{suffix}.png", entry.id))).map_err(|e| e.to_string())
        };
        save(&out.restored, "restored")?;
        save(&Rgb64::gray(out.transmission.plane().clone()), "transmission")?;
        let sidecar = Sidecar {
            image_id: &entry.id,
            scenario,
            height: img.height(),
            width: img.width(),
            lens_light: out.light.channels(),
            wall_time_s: config.timing.then_some(elapsed),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        fs::write(output.join(format!("{}.json", entry.id)), json + "\n").map_err(|e| e.to_string())?;
        Ok((before, after))
    });

    let mut report = Report::new(&["image_id", "stage", "hfm", "hs", "vll"]);
    let mut summary = RunSummary::default();
    for (id, result) in results {
        match result {
            Ok((before, after)) => {
                for (stage, m) in [("input", before), ("output", after)] {
                    let [hfm, hs, vll] = metric_cells(&m);
                    report.push(vec![id.clone(), stage.into(), hfm, hs, vll]);
                }
                summary.processed += 1;
            }
            Err(msg) => summary.failures.push((id, msg)),
        }
    }
    let path = output.join(if mode == Mode::Gif { GIF_REPORT } else { DECLOUD_REPORT });
    report.write(&path, &config.digest())?;
    summary.reports.push(path);
    Ok(summary)
}

fn run_metrics(config: &RunConfig, entries: &[ImageEntry], output: &Path) -> Result<RunSummary, CliError> {
    let options = config.metrics.options();
    let results = map_entries(entries, |entry| evaluate(&load(entry)?, &options).map_err(|e| e.to_string()));
    let mut report = Report::new(&["image_id", "channel", "hfm", "hs", "vll"]);
    let mut summary = RunSummary::default();
    for (id, result) in results {
        match result {
            Ok(m) => {
                let [hfm, hs, vll] = metric_cells(&m);
                report.push(vec![id, config.metrics.channel.name().into(), hfm, hs, vll]);
                summary.processed += 1;
            }
            Err(msg) => summary.failures.push((id, msg)),
        }
    }
    let path = output.join(METRICS_REPORT);
    report.write(&path, &config.digest())?;
    summary.reports.push(path);
    Ok(summary)
}

type ScenarioResult = Result<(MetricsReport, f64), String>;

fn run_compare(config: &RunConfig, entries: &[ImageEntry], output: &Path) -> Result<RunSummary, CliError> {
    let options = config.metrics.options();
    let results = map_entries(entries, |entry| {
        let img = load(entry)?;
        let mut rows: Vec<ScenarioResult> = Vec::with_capacity(3);
        rows.push(evaluate(&img, &options).map(|m| (m, 0.0)).map_err(|e| e.to_string()));
        for mode in [Mode::Gif, Mode::Decloud] {
            let start = Instant::now();
            let row = restore_one(config, mode, &img).and_then(|out| {
                let elapsed = start.elapsed().as_secs_f64();
                evaluate(&out.restored, &options).map(|m| (m, elapsed))
            });
            rows.push(row.map_err(|e| e.to_string()));
        }
        Ok(rows)
    });

    let mut report = Report::new(&COMPARE_COLUMNS);
    let mut summary = RunSummary::default();
    let mut sums = [[0.0f64; 4]; 3];
    let mut counts = [0usize; 3];
    for (id, result) in results {
        let rows = match result {
            Ok(rows) => rows,
            Err(msg) => {
                summary.failures.push((id, msg));
                continue;
            }
        };
        let mut failed = None;
        for (k, (scenario, row)) in SCENARIOS.iter().zip(rows).enumerate() {
            match row {
                Ok((m, t)) => {
                    let [hfm, hs, vll] = metric_cells(&m);
                    let time = if config.timing { num(t) } else { String::new() };
                    report.push(vec![id.clone(), scenario.to_string(), hfm, hs, vll, time, "ok".into()]);
                    for (acc, v) in sums[k].iter_mut().zip([m.hfm, m.hs, m.vll, t]) {
                        *acc += v;
                    }
                    counts[k] += 1;
                }
                Err(msg) => {
                    let cells = vec![String::new(); 4];
                    let mut row = vec![id.clone(), scenario.to_string()];
                    row.extend(cells);
                    row.push(format!("error: {msg}"));
                    report.push(row);
                    failed.get_or_insert(format!("{scenario}: {msg}"));
                }
            }
        }
        match failed {
            Some(msg) => summary.failures.push((id, msg)),
            None => summary.processed += 1,
        }
    }
    for (k, scenario) in SCENARIOS.iter().enumerate() {
        if counts[k] == 0 {
            continue;
        }
        let n = counts[k] as f64;
        let mean = |j: usize| num(sums[k][j] / n);
        let time = if config.timing { mean(3) } else { String::new() };
        report.push(vec!["mean".into(), scenario.to_string(), mean(0), mean(1), mean(2), time, format!("n={}", counts[k])]);
    }
    let path = output.join(COMPARE_REPORT);
    report.write(&path, &config.digest())?;
    summary.reports.push(path);
    Ok(summary)
}

fn run_cdr(config: &RunConfig, entries: &[ImageEntry], output: &Path) -> Result<RunSummary, CliError> {
    let refs_dir = config.references.as_deref().expect("validated");
    let refs: ReferenceSet<f64> = ReferenceSet::load(refs_dir)
        .map_err(|e| CliError::Config(format!("reference set {}: {e}", refs_dir.display())))?;
    let truth_path = config.truth.clone().or_else(|| {
        let default = config.input.as_ref().expect("validated").join("cdrs.csv");
        default.is_file().then_some(default)
    });
    let truth: BTreeMap<String, f64> = match &truth_path {
        Some(p) => read_cdr_table(p)?,
        None => {
            info!("no ground-truth table; error columns left empty");
            BTreeMap::new()
        }
    };
    let params = config.sdc.params();
    let side = config.sdc.side;
    if side * side != refs.dim() {
        return Err(CliError::Config(format!(
            "sdc.side = {side} gives {} features but the reference set has {}",
            side * side,
            refs.dim()
        )));
    }
    let code = |img: &Rgb64| -> sgrif::Result<f64> {
        let y = build_feature(img, side)?;
        let d = similarity_cost(&y, &refs)?;
        let w = solve_sdc(&y, &refs, &d, &params)?;
        estimate_cdr(&w, &refs)
    };
    let results = map_entries(entries, |entry| {
        let img = load(entry)?;
        let mut estimates = Vec::with_capacity(3);
        estimates.push(code(&img).map_err(|e| e.to_string()));
        for mode in [Mode::Gif, Mode::Decloud] {
            estimates.push(restore_one(config, mode, &img).and_then(|out| code(&out.restored)).map_err(|e| e.to_string()));
        }
        Ok(estimates)
    });

    let mut report = Report::new(&["image_id", "scenario", "cdr_estimate", "cdr_truth", "abs_error"]);
    let mut summary = RunSummary::default();
    let mut pairs: [(Vec<f64>, Vec<f64>); 3] = Default::default();
    for (id, result) in results {
        let estimates = match result {
            Ok(e) => e,
            Err(msg) => {
                summary.failures.push((id, msg));
                continue;
            }
        };
        let known = truth.get(&id).copied();
        let mut failed = None;
        for (k, (scenario, est)) in SCENARIOS.iter().zip(estimates).enumerate() {
            match est {
                Ok(r) => {
                    let err = known.map(|t| (r - t).abs());
                    report.push(vec![id.clone(), scenario.to_string(), num(r), opt_num(known), opt_num(err)]);
                    if let Some(t) = known {
                        pairs[k].0.push(r);
                        pairs[k].1.push(t);
                    }
                }
                Err(msg) => {
                    failed.get_or_insert(format!("{scenario}: {msg}"));
                }
            }
        }
        match failed {
            Some(msg) => summary.failures.push((id, msg)),
            None => summary.processed += 1,
        }
    }
    for (scenario, (pred, known)) in SCENARIOS.iter().zip(&pairs) {
        if let Ok(e) = cdr_error(pred, known) {
            report.push(vec!["mean".into(), scenario.to_string(), String::new(), String::new(), num(e)]);
        }
    }
    let path = output.join(CDR_REPORT);
    report.write(&path, &config.digest())?;
    summary.reports.push(path);
    Ok(summary)
}
