//! One benchmark run: load or generate frames, solve `repeat` times, extract
//! masks, score them and write outputs.

use std::time::Instant;

use bgsub_core::metrics::evaluate;
use bgsub_core::video::{
    background_frames, emit_frames, emit_masks, extract_foreground, ingest, ingest_masks, to_observation_matrix,
    FrameFormat, FrameSequence, MaskSequence,
};
use bgsub_core::{solve_frmc, solve_rmc, solve_rpca, DenseMatrix, LowRankFactorization, SolverReport, Termination};

use crate::config::{Input, RunConfig, SolverKind};
use crate::report::{BenchReport, Timing, SCHEMA_VERSION};
use crate::synth::generate;
use crate::CliError;

pub const NO_TRUTH_WARNING: &str = "no ground truth available; metrics omitted";

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: BenchReport,
    pub background: LowRankFactorization,
    pub masks: MaskSequence,
    pub frames: FrameSequence,
}

/// Background and trace from one solve.
pub fn solve(kind: SolverKind, v: &DenseMatrix, config: &RunConfig) -> Result<(LowRankFactorization, SolverReport), CliError> {
    let mut fw = config.fw.clone();
    fw.seed = config.seed;
    Ok(match kind {
        SolverKind::Frmc => solve_frmc(v, &fw, None)?,
        SolverKind::RpcaIalm => {
            let r = solve_rpca(v, &config.ialm)?;
            (r.background, r.report)
        }
        SolverKind::RmcIalm => {
            let r = solve_rmc(v, &config.ialm)?;
            (r.background, r.report)
        }
    })
}

/// Median of a nonempty list.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Whether a run stopped short of its tolerance by more than a factor 10.
pub fn converged(kind: SolverKind, report: &SolverReport, config: &RunConfig) -> bool {
    if report.termination != Termination::MaxIter {
        return true;
    }
    let Some(last) = report.last() else {
        return false;
    };
    match kind {
        SolverKind::Frmc => {
            let f0 = report.per_iteration.first().map_or(0.0, |r| r.objective);
            let target = config.fw.gap_tol * f0.max(1.0);
            last.bound_gap.is_some_and(|g| g <= 10.0 * target)
        }
        SolverKind::RpcaIalm | SolverKind::RmcIalm => {
            last.residual.is_some_and(|r| r <= 10.0 * config.ialm.primal_tol)
        }
    }
}

fn load(config: &RunConfig) -> Result<(FrameSequence, Option<MaskSequence>, Vec<String>), CliError> {
    match &config.input {
        Input::Synthetic(spec) => {
            let scene = generate(spec, config.seed)?;
            Ok((scene.frames, Some(scene.truth), Vec::new()))
        }
        Input::Frames { path, format, truth } => {
            let frames = ingest(path, *format)?;
            match truth {
                Some(dir) => Ok((frames, Some(ingest_masks(dir)?), Vec::new())),
                None => Ok((frames, None, vec![NO_TRUTH_WARNING.to_string()])),
            }
        }
    }
}

/// Runs the configured benchmark without writing anything.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let (frames, truth, mut warnings) = load(config)?;
    let v = to_observation_matrix(&frames);

    let mut seconds = Vec::with_capacity(config.repeat);
    let mut result = None;
    for _ in 0..config.repeat {
        let start = Instant::now();
        let solved = solve(config.solver, &v, config)?;
        seconds.push(start.elapsed().as_secs_f64());
        result = Some(solved);
    }
    let (background, trace) = result.expect("repeat >= 1");

    let (w, h) = (frames.width(), frames.height());
    let masks = extract_foreground(&v, &background, w, h, config.threshold, config.cleanup)?;
    let metrics = match &truth {
        Some(t) => Some(evaluate(&masks, t)?),
        None => None,
    };
    let converged = converged(config.solver, &trace, config);
    if !converged {
        warnings.push("iteration cap reached with the stopping measure above 10x tolerance".into());
    }
    let last = trace.last().cloned();
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        config: config.echo(),
        solver: config.solver.name().to_string(),
        width: w,
        height: h,
        frames: frames.len(),
        timing: Timing {
            repeat: config.repeat,
            median_seconds: median(&seconds),
            seconds,
        },
        iterations: trace.iterations(),
        termination: trace.termination,
        converged,
        final_rank: background.rank(),
        final_objective: last.as_ref().map_or(0.0, |r| r.objective),
        final_bound_gap: last.as_ref().and_then(|r| r.bound_gap),
        final_residual: last.as_ref().and_then(|r| r.residual),
        metrics,
        warnings,
        trace: trace.per_iteration,
    };
    Ok(RunOutcome {
        report,
        background,
        masks,
        frames,
    })
}

/// Writes `masks/`, `background/` and `report.{json,csv}` under the output
/// directory.
pub fn write_outputs(outcome: &RunOutcome, config: &RunConfig) -> Result<(), CliError> {
    let Some(out) = &config.out else {
        return Ok(());
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    emit_masks(&outcome.masks, &out.join("masks"), FrameFormat::PgmDir)?;
    let bg = background_frames(&outcome.background, outcome.frames.width(), outcome.frames.height())?;
    emit_frames(&bg, &out.join("background"), FrameFormat::PgmDir)?;
    let name = match config.format {
        crate::config::ReportFormat::Json => "report.json",
        crate::config::ReportFormat::Csv => "report.csv",
    };
    outcome.report.emit(&out.join(name), config.format)
}
