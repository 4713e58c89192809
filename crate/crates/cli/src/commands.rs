use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use spectral_fic::detrend::{detrend_pipeline, TrendDesign};
use spectral_fic::estimation::{fit_whittle, OptimizerOptions};
use spectral_fic::fic::{afic_scores, fic_scores, AficWeights, CandidateModel, FicReport};
use spectral_fic::focus::{rule_for_foci, FocusFunctional};
use spectral_fic::periodogram::TimeSeries;
use spectral_fic::simulate::{least_false_table, run_mc, sample_gaussian, Comparator, SimSpec};
use spectral_fic::spectral::{autocovariances, default_node_count, QuadratureRule};
use spectral_fic::TOOLKIT_VERSION;

use crate::config::RunConfig;
use crate::io::{ingest_csv, OutDir};
use crate::{reproduce, Command, Outcome};

const DEFAULT_OUT: &str = "sfic-out";
const DEFAULT_SEED: u64 = 1;
const DEFAULT_REPLICATIONS: usize = 2000;
const DEFAULT_N: usize = 100;
const DEFAULT_MAX_LAG: usize = 10;

pub fn dispatch(command: &Command, cfg: RunConfig) -> Result<Outcome> {
    match command {
        Command::Fit => cmd_fit(cfg),
        Command::Fic => cmd_fic(cfg),
        Command::Afic => cmd_afic(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Mc => cmd_mc(cfg),
        Command::LeastFalse => cmd_least_false(cfg),
        Command::Reproduce { figure } => reproduce::run(figure, cfg),
    }
}

#[derive(Serialize)]
struct Resolved<'a> {
    toolkit_version: &'a str,
    config: &'a RunConfig,
}

/// Creates the output directory and echoes the resolved configuration into it.
pub fn open_out(cfg: &mut RunConfig) -> Result<OutDir> {
    let root = cfg
        .out
        .get_or_insert_with(|| DEFAULT_OUT.to_string())
        .clone();
    let out = OutDir::create(Path::new(&root))?;
    out.write_json(
        "resolved_config.json",
        &Resolved {
            toolkit_version: TOOLKIT_VERSION,
            config: cfg,
        },
    )?;
    Ok(out)
}

fn load_series(cfg: &RunConfig) -> Result<TimeSeries> {
    let y = ingest_csv(Path::new(cfg.require_input()?))?;
    match &cfg.detrend {
        Some(kind) => {
            let design = TrendDesign::build(kind, y.len()).context("cannot build trend design")?;
            Ok(detrend_pipeline(&y, &design)?)
        }
        None => Ok(y),
    }
}

fn candidates(cfg: &RunConfig) -> Result<Vec<CandidateModel>> {
    if cfg.candidates.is_empty() {
        bail!("config lists no candidates");
    }
    Ok(cfg.candidates.iter().map(|c| c.build()).collect())
}

fn foci(cfg: &RunConfig) -> Result<Vec<FocusFunctional>> {
    let specs = cfg.focus_specs()?;
    if specs.is_empty() {
        bail!("config lists no foci");
    }
    specs
        .iter()
        .map(|s| s.build().map_err(anyhow::Error::from))
        .collect()
}

fn plain_rule(cfg: &RunConfig, n: usize) -> QuadratureRule {
    QuadratureRule::composite(cfg.quad_nodes.unwrap_or_else(|| default_node_count(n)), &[])
}

#[derive(Serialize)]
struct FitRow {
    label: String,
    theta_hat: Option<Vec<f64>>,
    whittle_loglik: Option<f64>,
    converged: Option<bool>,
    iterations: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct FitReport {
    toolkit_version: &'static str,
    n: usize,
    quadrature_nodes: usize,
    fits: Vec<FitRow>,
}

fn cmd_fit(mut cfg: RunConfig) -> Result<Outcome> {
    let y = load_series(&cfg)?;
    let cands = candidates(&cfg)?;
    let q = plain_rule(&cfg, y.len());
    cfg.quad_nodes = Some(q.len());
    let out = open_out(&mut cfg)?;
    let opts = OptimizerOptions::default();

    let mut fits = Vec::new();
    for c in cands.iter() {
        let Some(family) = c.family() else { continue };
        fits.push(match fit_whittle(&y, family, &q, &opts) {
            Ok(f) => FitRow {
                label: c.label.clone(),
                theta_hat: Some(f.theta().to_vec()),
                whittle_loglik: Some(f.whittle_loglik),
                converged: Some(f.converged),
                iterations: Some(f.diagnostics.iterations),
                error: None,
            },
            Err(e) => FitRow {
                label: c.label.clone(),
                theta_hat: None,
                whittle_loglik: None,
                converged: None,
                iterations: None,
                error: Some(e.to_string()),
            },
        });
    }
    if fits.is_empty() {
        bail!("fit needs at least one parametric candidate");
    }
    let mut rows = Vec::new();
    for f in &fits {
        if let Some(theta) = &f.theta_hat {
            for (i, t) in theta.iter().enumerate() {
                rows.push(long("_fit", &f.label, &format!("theta_{i}"), *t));
            }
        }
        if let Some(l) = f.whittle_loglik {
            rows.push(long("_fit", &f.label, "whittle_loglik", l));
        }
    }
    let failed = fits.iter().any(|f| f.error.is_some());
    for f in &fits {
        match (&f.theta_hat, &f.error) {
            (Some(t), _) => println!("{:<12} {}", f.label, fmt_vec(t)),
            (_, Some(e)) => println!("{:<12} error: {e}", f.label),
            _ => {}
        }
    }
    out.write_json(
        "fit.json",
        &FitReport {
            toolkit_version: TOOLKIT_VERSION,
            n: y.len(),
            quadrature_nodes: q.len(),
            fits,
        },
    )?;
    out.write_long_csv("fit.csv", &rows)?;
    Ok(if failed {
        Outcome::Partial
    } else {
        Outcome::Success
    })
}

fn cmd_fic(mut cfg: RunConfig) -> Result<Outcome> {
    let y = load_series(&cfg)?;
    let cands = candidates(&cfg)?;
    let foci = foci(&cfg)?;
    if foci.len() != 1 {
        bail!("fic takes exactly one focus; use afic for several");
    }
    let q = rule_for_foci(y.len(), &foci, cfg.quad_nodes);
    cfg.quad_nodes = Some(q.len());
    let out = open_out(&mut cfg)?;
    let report = fic_scores(&y, &cands, &foci[0], &q, &OptimizerOptions::default())?;
    finish_report(&out, &report)
}

fn cmd_afic(mut cfg: RunConfig) -> Result<Outcome> {
    let y = load_series(&cfg)?;
    let cands = candidates(&cfg)?;
    let foci = foci(&cfg)?;
    if cfg.weights.is_empty() {
        cfg.weights = vec![1.0; foci.len()];
    }
    if cfg.weights.len() != foci.len() {
        bail!(
            "{} weights given for {} foci",
            cfg.weights.len(),
            foci.len()
        );
    }
    let q = rule_for_foci(y.len(), &foci, cfg.quad_nodes);
    cfg.quad_nodes = Some(q.len());
    let weights = AficWeights::new(foci.into_iter().zip(cfg.weights.iter().copied()).collect())?;
    let out = open_out(&mut cfg)?;
    let report = afic_scores(&y, &cands, &weights, &q, &OptimizerOptions::default())?;
    finish_report(&out, &report)
}

fn finish_report(out: &OutDir, report: &FicReport) -> Result<Outcome> {
    out.write_with("fic_report.json", |buf| {
        buf.extend_from_slice(report.to_json().as_bytes());
        buf.push(b'\n');
        Ok(())
    })?;
    out.write_with("fic_report.csv", |buf| Ok(report.write_csv(buf)?))?;
    print_ranking(report);
    Ok(if report.has_errors() {
        Outcome::Partial
    } else {
        Outcome::Success
    })
}

fn print_ranking(report: &FicReport) {
    println!(
        "{:>4}  {:<10} {:>14}  theta_hat",
        "rank", "candidate", "score"
    );
    for (i, label) in report.ranking.iter().enumerate() {
        let Some(row) = report.row(label) else {
            continue;
        };
        let theta = row.theta_hat.as_deref().map(fmt_vec).unwrap_or_default();
        println!(
            "{:>4}  {:<10} {:>14.6e}  {theta}",
            i + 1,
            row.label,
            row.fic.unwrap_or(f64::NAN)
        );
    }
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        println!(
            "   -  {:<10} error: {}",
            row.label,
            row.error.as_deref().unwrap_or("")
        );
    }
}

fn cmd_simulate(mut cfg: RunConfig) -> Result<Outcome> {
    let truth = cfg.require_truth()?.clone();
    let n = *cfg.n.get_or_insert(DEFAULT_N);
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let q = plain_rule(&cfg, n);
    cfg.quad_nodes = Some(q.len());
    let family = truth.family();
    let theta = truth.theta();
    family.check_admissible(&theta)?;
    let y = sample_gaussian(&family.spectrum(&theta), n, seed, &q)?;
    let out = open_out(&mut cfg)?;
    out.write_with("series.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["value"])?;
        for v in y.values() {
            w.write_record([v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!("wrote {n} values to {}", out.path("series.csv").display());
    Ok(Outcome::Success)
}

/// Monte Carlo design described by a run config, with defaults filled in.
pub fn sim_spec(cfg: &mut RunConfig) -> Result<SimSpec> {
    let truth = cfg.require_truth()?.clone();
    let candidates = candidates(cfg)?;
    let foci = foci(cfg)?;
    if cfg.comparators.is_empty() {
        let has_np = candidates.iter().any(|c| c.family().is_none());
        let has_pm = candidates.iter().any(|c| c.family().is_some());
        cfg.comparators = Comparator::ALL
            .into_iter()
            .filter(|c| match c {
                Comparator::AlwaysNp => has_np,
                Comparator::Aic | Comparator::Bic => has_pm,
                Comparator::Fic => true,
            })
            .collect();
    }
    let spec = SimSpec {
        truth_family: truth.family(),
        truth_theta: truth.theta(),
        n: *cfg.n.get_or_insert(DEFAULT_N),
        replications: *cfg.replications.get_or_insert(DEFAULT_REPLICATIONS),
        seed: *cfg.seed.get_or_insert(DEFAULT_SEED),
        candidates,
        foci,
        comparators: cfg.comparators.clone(),
        workers: *cfg.workers.get_or_insert(0),
        quad_nodes: cfg.quad_nodes,
        optimizer: OptimizerOptions::default(),
    };
    spec.validate()?;
    cfg.quad_nodes = Some(spec.quadrature().len());
    Ok(spec)
}

fn cmd_mc(mut cfg: RunConfig) -> Result<Outcome> {
    let spec = sim_spec(&mut cfg)?;
    let out = open_out(&mut cfg)?;
    let result = run_mc(&spec)?;
    out.write_with("mc_result.json", |buf| {
        buf.extend_from_slice(result.to_json().as_bytes());
        buf.push(b'\n');
        Ok(())
    })?;
    out.write_with("mc_result.csv", |buf| Ok(result.write_csv(buf)?))?;
    for focus in result.foci() {
        let order: Vec<String> = result
            .rmse_order(focus)
            .iter()
            .map(|(c, r)| format!("{c}={r:.4}"))
            .collect();
        println!("{focus:<24} {}", order.join("  "));
    }
    let failed =
        result.aborted_replications > 0 || result.candidate_failures.iter().any(|c| c.count > 0);
    Ok(if failed {
        Outcome::Partial
    } else {
        Outcome::Success
    })
}

fn cmd_least_false(mut cfg: RunConfig) -> Result<Outcome> {
    let truth = cfg.require_truth()?.clone();
    let cands = candidates(&cfg)?;
    let families: Vec<_> = cands.iter().filter_map(|c| c.family().cloned()).collect();
    if families.is_empty() {
        bail!("least-false needs at least one parametric candidate");
    }
    let max_lag = *cfg.max_lag.get_or_insert(DEFAULT_MAX_LAG);
    let q = plain_rule(&cfg, cfg.n.unwrap_or(DEFAULT_N));
    cfg.quad_nodes = Some(q.len());
    let out = open_out(&mut cfg)?;
    let tf = truth.family();
    let theta = truth.theta();
    tf.check_admissible(&theta)?;
    let spectrum = tf.spectrum(&theta);
    let table = least_false_table(
        &spectrum,
        &families,
        max_lag,
        &q,
        &OptimizerOptions::default(),
    )?;
    let truth_acov = autocovariances(&spectrum, max_lag, &q);
    write_least_false(&out, &table, &truth_acov, &q)?;
    Ok(if table.iter().any(|r| r.error.is_some()) {
        Outcome::Partial
    } else {
        Outcome::Success
    })
}

#[derive(Serialize)]
struct LeastFalseReport<'a> {
    toolkit_version: &'static str,
    quadrature_nodes: usize,
    truth_autocovariances: &'a [f64],
    rows: &'a [spectral_fic::simulate::LeastFalseRow],
}

pub fn write_least_false(
    out: &OutDir,
    table: &[spectral_fic::simulate::LeastFalseRow],
    truth_acov: &[f64],
    q: &QuadratureRule,
) -> Result<()> {
    out.write_json(
        "least_false.json",
        &LeastFalseReport {
            toolkit_version: TOOLKIT_VERSION,
            quadrature_nodes: q.len(),
            truth_autocovariances: truth_acov,
            rows: table,
        },
    )?;
    let mut rows = Vec::new();
    for (k, c) in truth_acov.iter().enumerate() {
        rows.push(long(&format!("C({k})"), "truth", "autocovariance", *c));
    }
    for r in table {
        if let Some(acov) = &r.autocovariances {
            for (k, c) in acov.iter().enumerate() {
                rows.push(long(&format!("C({k})"), &r.family, "autocovariance", *c));
            }
        }
        if let Some(d) = r.discrepancy {
            rows.push(long("_fit", &r.family, "discrepancy", d));
        }
    }
    out.write_long_csv("least_false.csv", &rows)?;
    for r in table {
        match (&r.theta, &r.error) {
            (Some(t), _) => println!("{:<10} theta={}", r.family, fmt_vec(t)),
            (_, Some(e)) => println!("{:<10} error: {e}", r.family),
            _ => {}
        }
    }
    Ok(())
}

pub fn long(focus: &str, candidate: &str, metric: &str, value: f64) -> [String; 4] {
    [
        focus.to_string(),
        candidate.to_string(),
        metric.to_string(),
        value.to_string(),
    ]
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.5}")).collect();
    format!("({})", parts.join(", "))
}
