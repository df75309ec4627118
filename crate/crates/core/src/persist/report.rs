//! Plot-data tables aggregated over every run log under a directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use walkdir::WalkDir;

use super::logs::{read_log, LogPayload};
use crate::error::{Error, Result};
use crate::trainer::{EvalReport, IterationRecord};

pub const REWARD_BIN_WIDTH: f64 = 0.25;
pub const REWARD_MIN: f64 = -1.0;
pub const REWARD_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub log_files: usize,
    pub eval_runs: usize,
    pub training_runs: usize,
    pub files: Vec<PathBuf>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

struct Runs {
    /// (label, source file, report)
    evals: Vec<(String, PathBuf, EvalReport)>,
    training: Vec<Vec<IterationRecord>>,
    files: usize,
}

fn collect(log_dir: &Path) -> Result<Runs> {
    if !log_dir.is_dir() {
        return Err(Error::Data(format!("{} is not a directory", log_dir.display())));
    }
    let mut paths: Vec<PathBuf> = WalkDir::new(log_dir)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "jsonl"))
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    let mut runs = Runs {
        evals: Vec::new(),
        training: Vec::new(),
        files: paths.len(),
    };
    for path in &paths {
        let mut iterations = Vec::new();
        for line in read_log(path)? {
            match line.payload {
                LogPayload::Iteration(r) => iterations.push(r),
                LogPayload::Eval { label, report } => runs.evals.push((label, path.clone(), *report)),
                _ => {}
            }
        }
        if !iterations.is_empty() {
            runs.training.push(iterations);
        }
    }
    if runs.evals.is_empty() && runs.training.is_empty() {
        return Err(Error::Data(format!("no run logs under {}", log_dir.display())));
    }
    Ok(runs)
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct CurveRow {
    label: String,
    cycle: usize,
    runs: usize,
    sa_mean: f64,
    sa_std: f64,
    pc_mean: f64,
    pc_std: f64,
    joint_pct_mean: f64,
    joint_pct_std: f64,
}

#[derive(Serialize)]
struct HistogramRow {
    label: String,
    bin_lo: f64,
    bin_hi: f64,
    count: usize,
}

#[derive(Serialize)]
struct PassRow {
    label: String,
    source: String,
    kind: String,
    episodes: usize,
    sa_pass_pct: f64,
    pc_pass_pct: f64,
    joint_pass_pct: f64,
    mean_best_sa: f64,
    mean_best_pc: f64,
    mean_reward: f64,
}

#[derive(Serialize)]
struct TrainingRow {
    iteration: usize,
    runs: usize,
    mean_reward_mean: f64,
    mean_reward_std: f64,
    joint_pass_rate_mean: f64,
    joint_pass_rate_std: f64,
    kl_mean: f64,
    entropy_mean: f64,
}

/// Writes `best_so_far.csv`, `reward_histogram.csv`, `pass_rates.csv` and
/// `training.csv` into `out_dir`. Curves are mean ± population std across
/// runs sharing a label.
pub fn cmd_report(log_dir: &Path, out_dir: &Path) -> Result<ReportSummary> {
    let runs = collect(log_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut by_label: BTreeMap<&str, Vec<&EvalReport>> = BTreeMap::new();
    for (label, _, r) in &runs.evals {
        by_label.entry(label).or_default().push(r);
    }

    let mut curves = Vec::new();
    for (label, reports) in &by_label {
        let cycles = reports.iter().map(|r| r.cycles).min().unwrap_or(0);
        for t in 0..cycles {
            let col = |f: &dyn Fn(&EvalReport) -> f64| mean_std(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (sa_mean, sa_std) = col(&|r| r.curves.sa[t]);
            let (pc_mean, pc_std) = col(&|r| r.curves.pc[t]);
            let (joint_pct_mean, joint_pct_std) = col(&|r| r.curves.joint_pct[t]);
            curves.push(CurveRow {
                label: label.to_string(),
                cycle: t + 1,
                runs: reports.len(),
                sa_mean,
                sa_std,
                pc_mean,
                pc_std,
                joint_pct_mean,
                joint_pct_std,
            });
        }
    }

    let n_bins = ((REWARD_MAX - REWARD_MIN) / REWARD_BIN_WIDTH).round() as usize + 1;
    let mut histogram = Vec::new();
    for (label, reports) in &by_label {
        let mut counts = vec![0usize; n_bins];
        for e in reports.iter().flat_map(|r| &r.episodes) {
            let b = ((e.reward - REWARD_MIN) / REWARD_BIN_WIDTH).floor();
            counts[(b.max(0.0) as usize).min(n_bins - 1)] += 1;
        }
        for (i, count) in counts.into_iter().enumerate() {
            let lo = REWARD_MIN + i as f64 * REWARD_BIN_WIDTH;
            histogram.push(HistogramRow {
                label: label.to_string(),
                bin_lo: lo,
                bin_hi: lo + REWARD_BIN_WIDTH,
                count,
            });
        }
    }

    let mut pass = Vec::new();
    for (label, source, r) in &runs.evals {
        let rows = std::iter::once(("all".to_string(), &r.overall))
            .chain(r.per_kind.iter().map(|(k, v)| (k.to_string(), v)));
        for (kind, p) in rows {
            pass.push(PassRow {
                label: label.clone(),
                source: source.display().to_string(),
                kind,
                episodes: p.episodes,
                sa_pass_pct: p.sa_pass_pct,
                pc_pass_pct: p.pc_pass_pct,
                joint_pass_pct: p.joint_pass_pct,
                mean_best_sa: p.mean_best_sa,
                mean_best_pc: p.mean_best_pc,
                mean_reward: p.mean_reward,
            });
        }
    }

    let max_iter = runs.training.iter().map(Vec::len).min().unwrap_or(0);
    let training: Vec<TrainingRow> = (0..max_iter)
        .map(|i| {
            let col = |f: &dyn Fn(&IterationRecord) -> f64| {
                mean_std(&runs.training.iter().map(|r| f(&r[i])).collect::<Vec<_>>())
            };
            let (mean_reward_mean, mean_reward_std) = col(&|r| r.mean_reward);
            let (joint_pass_rate_mean, joint_pass_rate_std) = col(&|r| r.joint_pass_rate);
            TrainingRow {
                iteration: i,
                runs: runs.training.len(),
                mean_reward_mean,
                mean_reward_std,
                joint_pass_rate_mean,
                joint_pass_rate_std,
                kl_mean: col(&|r| r.kl).0,
                entropy_mean: col(&|r| r.entropy).0,
            }
        })
        .collect();

    let files = vec![
        out_dir.join("best_so_far.csv"),
        out_dir.join("reward_histogram.csv"),
        out_dir.join("pass_rates.csv"),
        out_dir.join("training.csv"),
    ];
    write_csv(&files[0], &curves)?;
    write_csv(&files[1], &histogram)?;
    write_csv(&files[2], &pass)?;
    write_csv(&files[3], &training)?;
    Ok(ReportSummary {
        log_files: runs.files,
        eval_runs: runs.evals.len(),
        training_runs: runs.training.len(),
        files,
    })
}
