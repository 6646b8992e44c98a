//! Orchestration of a configured run.

use std::path::{Path, PathBuf};

use crate::analysis::{self, Experiment};
use crate::config::{Emit, ExperimentConfig};
use crate::error::{Error, Result};
use crate::femsolve;
use crate::forcing::ForcingField;
use crate::output::{self, sci, CsvDoc};
use crate::stargraph::PRNG_NAME;
use crate::upscale;

/// Overrides the directory that output files are written to.
pub const OUTPUT_DIR_ENV: &str = "RADHOMOG_OUTPUT_DIR";

pub fn experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let field = ForcingField::builtin(config.example, config.field_params(), config.seed)?;
    Ok(Experiment::new(
        field,
        config.coefficient_source(),
        config.h,
        config.mesh,
        config.load_rule,
    ))
}

pub fn header_comment(config: &ExperimentConfig) -> String {
    format!(
        "radhomog {} config: {} prng={}",
        config.emit.as_str(),
        config.normalized(),
        PRNG_NAME
    )
}

/// Where the output of `config` goes, taking [`OUTPUT_DIR_ENV`] into account.
pub fn output_path(config: &ExperimentConfig) -> PathBuf {
    let default = PathBuf::from(format!("{}.csv", config.emit.as_str()));
    let path = config.output.clone().unwrap_or(default);
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            let name = path.file_name().map(PathBuf::from).unwrap_or(path);
            Path::new(&dir).join(name)
        }
        _ => path,
    }
}

/// The CSV document for `config`, without touching the file system.
pub fn render(config: &ExperimentConfig) -> Result<Vec<u8>> {
    config.validate()?;
    let comment = header_comment(config);
    match config.emit {
        Emit::Table => {
            let exp = experiment(config)?;
            let rows =
                analysis::convergence_table(&exp, &config.stages, config.reference(), config.norm)?;
            output::table_csv(&comment, &rows, config.timing)
        }
        Emit::Cauchy => {
            let exp = experiment(config)?;
            let rows = analysis::cauchy_diagnostics(&exp, &config.centers, config.window, config.norm)?;
            output::cauchy_csv(&comment, &rows)
        }
        Emit::Solution => {
            let exp = experiment(config)?;
            let n = *config.stages.last().expect("validated nonempty");
            output::solution_csv(&comment, &exp.stage_solution(n)?)
        }
        Emit::Upscaled => {
            let exp = experiment(config)?;
            let sol = upscale::solve_upscaled(&exp.upscaled_problem()?, config.mesh, config.load_rule)?;
            output::upscaled_csv(&comment, &sol)
        }
        Emit::Weyl => {
            let (lo, hi) = config.weyl_interval;
            let fraction = analysis::weyl_fraction(config.weyl_n, lo, hi)?;
            let mut doc = CsvDoc::new(&comment, &["n", "c", "d", "fraction", "cos_mean"])?;
            doc.row([
                config.weyl_n.to_string(),
                sci(lo),
                sci(hi),
                sci(fraction),
                sci(analysis::cos_mean(config.weyl_n)),
            ])?;
            doc.into_bytes()
        }
        Emit::Identity => {
            let exp = experiment(config)?;
            let mut doc = CsvDoc::new(
                &comment,
                &[
                    "n",
                    "mesh",
                    "center_value",
                    "center_residual",
                    "max_edge_residual",
                    "flux_sum_plus_h",
                ],
            )?;
            for &n in &config.stages {
                let sol = exp.stage_solution(n)?;
                let h = config.h.at(n);
                let center = femsolve::center_identity_residual(&sol, &exp.field, h);
                let edge = (1..=n)
                    .map(|l| femsolve::edge_identity_residual(&sol, &exp.field, l))
                    .fold(0.0, f64::max);
                doc.row([
                    n.to_string(),
                    config.mesh.to_string(),
                    sci(sol.center_value()),
                    sci(center),
                    sci(edge),
                    sci(sol.total_center_flux() + h),
                ])?;
            }
            doc.into_bytes()
        }
        Emit::Rate => {
            let exp = experiment(config)?;
            let mut doc = CsvDoc::new(&comment, &["n", "group", "alpha_l2", "alpha_h1"])?;
            let fmt = |r: &Result<f64>| match r {
                Ok(a) => sci(*a),
                Err(_) => "undefined".to_string(),
            };
            for &n in &config.stages {
                for (g, (l2, h1)) in analysis::rate_at(&exp, n, config.norm)?.iter().enumerate() {
                    doc.row([n.to_string(), (g + 1).to_string(), fmt(l2), fmt(h1)])?;
                }
            }
            doc.into_bytes()
        }
    }
}

/// Runs `config` and writes its CSV; returns the path written.
pub fn run(config: &ExperimentConfig) -> Result<PathBuf> {
    let bytes = render(config)?;
    let path = output_path(config);
    output::write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::InvalidArgument(_) => 2,
        Error::NumericalBreakdown(_) | Error::EmptyGroup { .. } | Error::UndefinedRate(_) => 3,
        Error::Io { .. } => 4,
    }
}
