//! Run orchestration and file output: `audit.csv`, `snap_<t>.csv`,
//! `summary.json`, `failure.json`, `mms_report.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{InitialSelection, MmsConfig, RunConfig};
use crate::diagnostics::{csv_header, AuditRecord, FieldBounds};
use crate::error::{Error, Result};
use crate::integrate::{Model, Trajectory};
use crate::state::{make_grid, FluidState, MassGrid, ProblemSetup, SetupKind};
use crate::verification::{
    build_initial_data, check_compatibility, convergence_study, ConvergenceReport,
    ManufacturedSolution, MmsForcing,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INTEGRATION: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;
pub const EXIT_MMS_FAIL: i32 = 4;

/// Fraction of the domain, at each far-field end, inspected by the
/// truncation audit.
pub const TRUNCATION_FRACTION: f64 = 0.05;

/// Largest deviation from `(1, 0, 1)` in the outermost cells next to the
/// far-field end(s).
pub fn truncation_deviation(state: &FluidState, grid: &MassGrid, setup: ProblemSetup) -> f64 {
    let n = grid.n_cells;
    let k = ((TRUNCATION_FRACTION * n as f64).ceil() as usize).clamp(1, n);
    let dev = |j: usize| {
        (state.v[j] - 1.0)
            .abs()
            .max((state.theta[j] - 1.0).abs())
            .max(state.u_cell(j).abs())
    };
    let right = (n - k..n).map(dev).fold(0.0, f64::max);
    match setup.kind {
        SetupKind::Cauchy => (0..k).map(dev).fold(right, f64::max),
        _ => right,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayVerdict {
    pub linf_max: f64,
    pub linf_final: f64,
    /// `(v_x, u_x, theta_x)` L2 maxima over the run.
    pub h1_max: [f64; 3],
    pub h1_final: [f64; 3],
    /// Final values below `DECAY_FRACTION` of their maxima.
    pub decayed: bool,
    /// The last `TAIL_FRACTION` of records is nonincreasing in the sup norm,
    /// allowing `TAIL_JITTER` relative upticks.
    pub tail_monotone: bool,
}

pub const DECAY_FRACTION: f64 = 0.1;
pub const TAIL_FRACTION: f64 = 0.2;
pub const TAIL_JITTER: f64 = 0.01;

fn tail_start(len: usize) -> usize {
    len - ((TAIL_FRACTION * len as f64).ceil() as usize).clamp(1, len)
}

pub fn decay_verdict(records: &[AuditRecord]) -> DecayVerdict {
    let h1 = |r: &AuditRecord| [r.now.h1.vx, r.now.h1.ux, r.now.h1.thetax];
    let mut h1_max = [0.0f64; 3];
    let mut linf_max = 0.0f64;
    for r in records {
        linf_max = linf_max.max(r.now.linf);
        for (m, x) in h1_max.iter_mut().zip(h1(r)) {
            *m = m.max(x);
        }
    }
    let last = records.last().expect("at least one record");
    let h1_final = h1(last);
    let decayed = last.now.linf <= DECAY_FRACTION * linf_max
        && h1_final
            .iter()
            .zip(&h1_max)
            .all(|(f, m)| *f <= DECAY_FRACTION * m);
    let tail = &records[tail_start(records.len())..];
    let tail_monotone = tail
        .windows(2)
        .all(|w| w[1].now.linf <= w[0].now.linf * (1.0 + TAIL_JITTER));
    DecayVerdict {
        linf_max,
        linf_final: last.now.linf,
        h1_max,
        h1_final,
        decayed,
        tail_monotone,
    }
}

/// Relative growth of a cumulative column over the last `TAIL_FRACTION` of
/// records.
pub fn tail_growth(records: &[AuditRecord], column: impl Fn(&AuditRecord) -> f64) -> f64 {
    let start = &records[tail_start(records.len()).saturating_sub(1)];
    let end = records.last().expect("at least one record");
    let (a, b) = (column(start), column(end));
    if b == 0.0 {
        0.0
    } else {
        (b - a) / b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationAudit {
    pub max_deviation: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub setup: String,
    pub n_cells: usize,
    pub half_length: f64,
    pub t_final: f64,
    pub steps: u64,
    pub records: usize,
    pub bounds: FieldBounds,
    pub decay: DecayVerdict,
    pub truncation: TruncationAudit,
    pub energy_balance_residual: f64,
    /// Largest `E(t) + cum_D(t) - E(0)` over the records.
    pub entropy_excess: f64,
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
struct Failure<'a> {
    t: Option<f64>,
    cause: String,
    records_written: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<&'a crate::state::Violation>,
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Option<Summary>,
    pub records: Vec<AuditRecord>,
    pub error: Option<Error>,
}

fn write_snapshot(dir: &Path, grid: &MassGrid, state: &FluidState) -> Result<()> {
    let path = dir.join(format!("snap_{:.6}.csv", state.t));
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_center,v,theta,x_node,u")?;
    for i in 0..grid.n_nodes() {
        if i < grid.n_cells {
            write!(
                w,
                "{:e},{:e},{:e},",
                grid.cell_center(i),
                state.v[i],
                state.theta[i]
            )?;
        } else {
            write!(w, ",,,")?;
        }
        writeln!(w, "{:e},{:e}", grid.node(i), state.u[i])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// Executes one run, writing all outputs into `out`. Integration failures
/// are reported through the outcome (with `failure.json` on disk) rather
/// than as `Err`; `Err` is reserved for setup and I/O problems.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let setup = ProblemSetup::new(cfg.setup);
    let grid = make_grid(setup, cfg.half_length, cfg.n_cells)?;
    let ms = ManufacturedSolution::for_setup(cfg.setup);
    let forcing = MmsForcing {
        ms,
        params: cfg.gas,
    };
    let (state, model) = match &cfg.initial {
        InitialSelection::Data(spec) => (
            build_initial_data(spec, setup, &grid)?,
            Model::new(&grid, &cfg.gas, setup, &cfg.step),
        ),
        InitialSelection::Manufactured => {
            let centers = grid.cell_centers();
            let s = FluidState {
                t: 0.0,
                v: centers.iter().map(|&x| ms.eval(x, 0.0).v).collect(),
                u: grid
                    .nodes()
                    .into_iter()
                    .map(|x| ms.eval(x, 0.0).u)
                    .collect(),
                theta: centers.iter().map(|&x| ms.eval(x, 0.0).theta).collect(),
            };
            (
                s,
                Model::new(&grid, &cfg.gas, setup, &cfg.step).with_forcing(&forcing),
            )
        }
    };
    check_compatibility(&state, setup)?;

    let mut audit = BufWriter::new(File::create(out.join("audit.csv"))?);
    writeln!(audit, "{}", csv_header(&cfg.excess_levels))?;

    let mut traj = Trajectory::new(model, state, &cfg.excess_levels)?;
    let mut io_error: Option<std::io::Error> = None;
    let mut bounds: Option<FieldBounds> = None;
    let mut max_trunc = 0.0f64;
    let mut entropy0: Option<f64> = None;
    let mut entropy_excess = f64::NEG_INFINITY;
    let mut next_snap = 0.0;
    let mut last_snap = f64::NEG_INFINITY;
    let mut written = 0usize;
    let result = traj.advance_with(cfg.t_end, cfg.cadence, |s, rec| {
        let mut write = || -> std::io::Result<()> {
            writeln!(audit, "{}", rec.csv_row())?;
            written += 1;
            let due = cfg
                .snapshot_every
                .map_or(rec.t == 0.0, |_| rec.t >= next_snap - 1e-12);
            if due {
                write_snapshot(out, &grid, s).map_err(|e| std::io::Error::other(e.to_string()))?;
                last_snap = rec.t;
                if let Some(every) = cfg.snapshot_every {
                    while next_snap <= rec.t + 1e-12 {
                        next_snap += every;
                    }
                }
            }
            Ok(())
        };
        if io_error.is_none() {
            if let Err(e) = write() {
                io_error = Some(e);
            }
        }
        bounds = Some(bounds.map_or(rec.now.bounds, |b| b.hull(rec.now.bounds)));
        max_trunc = max_trunc.max(truncation_deviation(s, &grid, setup));
        let e0 = *entropy0.get_or_insert(rec.now.entropy);
        entropy_excess = entropy_excess.max(rec.now.entropy + rec.cum_d - e0);
    });
    audit.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }

    let records = match result {
        Ok(records) => records,
        Err(err) => {
            let violation = match &err {
                Error::Integration { violation, .. } => Some(violation),
                _ => None,
            };
            let failure = Failure {
                t: err.failure_time(),
                cause: err.to_string(),
                records_written: written,
                violation,
            };
            write_json(&out.join("failure.json"), &failure)?;
            return Ok(RunOutcome {
                exit_code: EXIT_INTEGRATION,
                summary: None,
                records: Vec::new(),
                error: Some(err),
            });
        }
    };
    let final_state = traj.state();
    if last_snap != final_state.t {
        write_snapshot(out, &grid, final_state)?;
    }

    let truncation = TruncationAudit {
        max_deviation: max_trunc,
        threshold: cfg.truncation_threshold,
        pass: max_trunc <= cfg.truncation_threshold,
    };
    let exit_code = if truncation.pass {
        EXIT_OK
    } else {
        EXIT_TRUNCATION
    };
    let summary = Summary {
        setup: cfg.setup.to_string(),
        n_cells: cfg.n_cells,
        half_length: cfg.half_length,
        t_final: final_state.t,
        steps: traj.steps(),
        records: records.len(),
        bounds: bounds.expect("at least one record"),
        decay: decay_verdict(&records),
        truncation,
        energy_balance_residual: records.last().map_or(0.0, |r| r.energy_balance_residual),
        entropy_excess,
        exit_code,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(RunOutcome {
        exit_code,
        summary: Some(summary),
        records,
        error: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsReport {
    pub reports: Vec<ConvergenceReport>,
    pub pass: bool,
}

pub fn mms(cfg: &MmsConfig, out: &Path) -> Result<(i32, MmsReport)> {
    fs::create_dir_all(out)?;
    let reports = cfg
        .setups
        .iter()
        .map(|&kind| {
            let ms = if cfg.steady {
                ManufacturedSolution::steady(kind)
            } else {
                ManufacturedSolution::for_setup(kind)
            };
            convergence_study(
                &ms,
                kind.into(),
                &cfg.gas,
                &cfg.step,
                &cfg.n_list,
                cfg.t_end,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let report = MmsReport { reports, pass };
    write_json(&out.join("mms_report.json"), &report)?;
    Ok((if pass { EXIT_OK } else { EXIT_MMS_FAIL }, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub value: serde_json::Value,
    pub output_dir: PathBuf,
    pub exit_code: i32,
    pub error: Option<String>,
}

/// Runs one config per value of `param`, concurrently, each in
/// `out/<param>=<value>`.
pub fn sweep(
    base: &serde_json::Value,
    param: &str,
    values: &[serde_json::Value],
    out: &Path,
) -> Result<(i32, Vec<SweepEntry>)> {
    fs::create_dir_all(out)?;
    let jobs: Vec<serde_json::Value> = values.to_vec();
    let entries = crate::exec::map_jobs(jobs, |value| {
        let label = match &value {
            serde_json::Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        let dir = out.join(format!("{param}={label}"));
        let outcome = (|| -> Result<i32> {
            let mut doc = base.clone();
            crate::config::apply_overrides(&mut doc, &[format!("{param}={value}")])?;
            let cfg = crate::config::run_config_from_value(doc)?;
            Ok(run(&cfg, &dir)?.exit_code)
        })();
        match outcome {
            Ok(code) => SweepEntry {
                value,
                output_dir: dir,
                exit_code: code,
                error: None,
            },
            Err(e) => SweepEntry {
                value,
                output_dir: dir,
                exit_code: EXIT_CONFIG,
                error: Some(e.to_string()),
            },
        }
    });
    write_json(&out.join("sweep.json"), &entries)?;
    let code = entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK);
    Ok((code, entries))
}
