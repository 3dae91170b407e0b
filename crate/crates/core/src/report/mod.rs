//! Command implementations behind the CLI and their CSV/JSON renderings.

mod config;
mod table;
mod verify;

pub use config::{
    parse_kappa_list, parse_rho_list, CommandKind, ConfigError, Figure, OutputFormat, RunConfig,
    MAX_GRID_POINTS,
};
pub use table::{format_number, Cell, Table};
pub use verify::{verify_report, VerifyCheck, VerifyOptions, VerifyReport};

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::double_double::DoubleDouble;
use crate::evolution::{propagate_nonstationary, PropagationRecord, StateVector};
use crate::linalg::{eig_general, DEFAULT_CLASSIFY_TOL};
use crate::metric::Reweighted;
use crate::models::{Model, ToyModel};
use crate::scalar::Real;
use crate::scan::{
    boundary_scan_with, ep_probe, scan, unitarity_limit, Boundary, EpReport, RegimeClassification,
    RegimeKind, ScanOptions, ScanReport,
};

/// Default tolerance of `ep-probe`.
pub const DEFAULT_EP_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

/// Rendered command output. `success` is false when a verification fails.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub success: bool,
}

fn to_json<S: Serialize>(value: &S) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(value).map_err(runtime)?;
    s.push('\n');
    Ok(s)
}

/// Runs one validated command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let ok = |text| {
        Ok(RunOutput {
            text,
            success: true,
        })
    };
    match cfg.command {
        CommandKind::Spectrum => {
            let table = spectrum_table(&cfg.model, &cfg.grid(), classify_tol(cfg))?;
            match cfg.format {
                OutputFormat::Csv => ok(table.to_csv()),
                OutputFormat::Json => ok(to_json(&NamedTable {
                    model: cfg.model.id().to_string(),
                    table,
                })?),
            }
        }
        CommandKind::MetricScan => {
            let trace = cmd_metric_scan(cfg)?;
            match cfg.format {
                OutputFormat::Csv => ok(trace.table.to_csv()),
                OutputFormat::Json => ok(to_json(&trace.json_view())?),
            }
        }
        CommandKind::Boundary => {
            let report = cmd_boundary(cfg)?;
            ok(to_json(&report)?)
        }
        CommandKind::EpProbe => {
            let tol = cfg.tol.unwrap_or(DEFAULT_EP_TOL);
            let report =
                with_model(cfg, |m| ep_probe(m, cfg.center, cfg.radius, tol)).map_err(runtime)?;
            match cfg.format {
                OutputFormat::Json => ok(to_json(&report)?),
                OutputFormat::Csv => ok(ep_table(&report).to_csv()),
            }
        }
        CommandKind::Evolve => {
            let records = cmd_evolve(cfg)?;
            match cfg.format {
                OutputFormat::Json => ok(to_json(&records)?),
                OutputFormat::Csv => ok(evolution_table(&records).to_csv()),
            }
        }
        CommandKind::Verify => {
            let opts = VerifyOptions {
                threshold_override: cfg.tol,
                inject_identity_metric: cfg.inject_identity_metric,
            };
            let report = verify_report(&opts);
            Ok(RunOutput {
                text: to_json(&report)?,
                success: report.pass,
            })
        }
    }
}

fn classify_tol(cfg: &RunConfig) -> f64 {
    cfg.tol.unwrap_or(DEFAULT_CLASSIFY_TOL)
}

/// Calls `f` with the configured model, reweighted when `--kappa` is set.
fn with_model<T: Real, R>(cfg: &RunConfig, f: impl FnOnce(&dyn Model<T>) -> R) -> R
where
    ToyModel: Model<T>,
{
    match &cfg.kappa {
        None => f(&cfg.model),
        Some(k) => f(&Reweighted {
            inner: cfg.model,
            kappa: k.iter().map(|&x| T::lit(x)).collect(),
            tol: T::lit(crate::linalg::DEFAULT_TOL),
        }),
    }
}

#[derive(Serialize)]
struct NamedTable {
    model: String,
    #[serde(flatten)]
    table: Table,
}

/// Real part when the imaginary part is negligible against `scale`, NaN otherwise.
fn real_or_nan(z: Complex<f64>, scale: f64, tol: f64) -> f64 {
    if z.im.abs() <= tol * scale.max(f64::MIN_POSITIVE) {
        z.re
    } else {
        f64::NAN
    }
}

/// Energies of `H(t)`: columns `t, E1..EN` in ascending order.
pub fn spectrum_table<M: Model<f64> + ?Sized>(
    model: &M,
    grid: &[f64],
    tol: f64,
) -> Result<Table, RunError> {
    let n = model.dim();
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|k| format!("E{k}")));
    let mut table = Table::new(columns);
    for &t in grid {
        let eig = eig_general(&model.hamiltonian(t), tol).map_err(runtime)?;
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let mut row = vec![Cell::Num(t)];
        row.extend(
            eig.eigenvalues
                .iter()
                .map(|&z| Cell::Num(real_or_nan(z, scale, tol))),
        );
        table.push(row);
    }
    Ok(table)
}

/// Rescaled metric-eigenvalue traces for one or more `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureTrace {
    pub figure: Option<Figure>,
    pub model: String,
    pub rhos: Vec<u32>,
    /// `C_rho`, applied to every eigenvalue column of that `rho`.
    pub rescale: Vec<f64>,
    pub table: Table,
    pub scans: Vec<ScanReport<f64>>,
}

#[derive(Serialize)]
struct FigureJson<'a> {
    figure: Option<Figure>,
    model: &'a str,
    rhos: &'a [u32],
    rescale: &'a [f64],
    scans: &'a [ScanReport<f64>],
}

impl FigureTrace {
    fn json_view(&self) -> FigureJson<'_> {
        FigureJson {
            figure: self.figure,
            model: &self.model,
            rhos: &self.rhos,
            rescale: &self.rescale,
            scans: &self.scans,
        }
    }
}

fn report_to_f64<T: Real>(r: ScanReport<T>) -> ScanReport<f64> {
    let c = |z: Complex<T>| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
    ScanReport {
        model: r.model,
        rho: r.rho,
        t_grid: r.t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        eigen_traces: r
            .eigen_traces
            .into_iter()
            .map(|v| v.into_iter().map(c).collect())
            .collect(),
        classifications: r
            .classifications
            .into_iter()
            .map(|k| RegimeClassification {
                kind: k.kind,
                witness: k.witness.into_iter().map(c).collect(),
                hermitian: k.hermitian,
            })
            .collect(),
        boundaries: r
            .boundaries
            .into_iter()
            .map(|b| Boundary {
                t: b.t.to_f64_lossy(),
                from: b.from,
                to: b.to,
            })
            .collect(),
    }
}

/// Scans every `rho` on `grid` in precision `T` and assembles the table.
///
/// Columns are `t`, then for each `rho` its (top `top` or all) sorted
/// eigenvalues times `C_rho`, then a regime label. Non-real eigenvalues are
/// written as NaN. `C_rho` is chosen so the largest eigenvalue of every
/// `rho` equals that of the first `rho` at the first grid point; the first
/// trace is left unscaled.
pub fn figure_trace<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rhos: &[u32],
    grid: &[f64],
    tol: f64,
    top: Option<usize>,
) -> Result<FigureTrace, RunError> {
    let grid_t: Vec<T> = grid.iter().map(|&t| T::lit(t)).collect();
    let scans: Vec<ScanReport<f64>> = rhos
        .iter()
        .map(|&rho| scan(model, rho, &grid_t, T::lit(tol)).map(report_to_f64))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    let n = model.dim();
    let keep = top.unwrap_or(n).min(n);

    let top_at_start = |s: &ScanReport<f64>| -> f64 {
        s.eigen_traces
            .first()
            .and_then(|e| e.iter().map(|z| z.re).reduce(f64::max))
            .unwrap_or(f64::NAN)
    };
    let reference = scans.first().map(top_at_start).unwrap_or(f64::NAN);
    let rescale: Vec<f64> = scans
        .iter()
        .map(|s| {
            let c = reference / top_at_start(s);
            if c.is_finite() && c > 0.0 {
                c
            } else {
                1.0
            }
        })
        .collect();

    let mut columns = vec!["t".to_string()];
    for &rho in rhos {
        columns.extend((n - keep + 1..=n).map(|k| format!("rho{rho}_e{k}")));
        columns.push(format!("rho{rho}_regime"));
    }
    let mut table = Table::new(columns);
    for (i, &t) in grid.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for (s, &c) in scans.iter().zip(&rescale) {
            let eigs = &s.eigen_traces[i];
            let scale = eigs.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            row.extend(
                eigs[n - keep..]
                    .iter()
                    .map(|&z| Cell::Num(c * real_or_nan(z, scale, tol))),
            );
            row.push(Cell::Text(s.classifications[i].kind.label().to_string()));
        }
        table.push(row);
    }
    Ok(FigureTrace {
        figure: None,
        model: model.name().to_string(),
        rhos: rhos.to_vec(),
        rescale,
        table,
        scans,
    })
}

/// Metric scan for the configured grid. Figure 2 tracks an eigenvalue of
/// order `t^6`, so the four-level model is scanned in double-double.
pub fn cmd_metric_scan(cfg: &RunConfig) -> Result<FigureTrace, RunError> {
    let grid = cfg.grid();
    let tol = classify_tol(cfg);
    let top = cfg.figure.and_then(Figure::top_branches);
    let high_precision = cfg.model == ToyModel::FourLevel;
    let mut trace = if high_precision {
        with_model::<DoubleDouble, _>(cfg, |m| figure_trace(m, &cfg.rhos, &grid, tol, top))?
    } else {
        with_model::<f64, _>(cfg, |m| figure_trace(m, &cfg.rhos, &grid, tol, top))?
    };
    trace.figure = cfg.figure;
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    /// End of the unitarity interval.
    pub t: f64,
    pub from: RegimeKind,
    pub to: RegimeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub model: String,
    pub t_min: f64,
    pub t_max: f64,
    pub tol_t: f64,
    /// `t_rho` per `rho`; `None` when the scan finds no exit from the unitary regime.
    pub t_rho: BTreeMap<u32, Option<BoundaryEntry>>,
    /// Every located transition per `rho`.
    pub transitions: BTreeMap<u32, Vec<Boundary<f64>>>,
}

/// Boundary scans in double-double, so that higher-order zeros are located
/// to well below `1e-9`.
pub fn cmd_boundary(cfg: &RunConfig) -> Result<BoundaryReport, RunError> {
    let opts = ScanOptions {
        tol: classify_tol(cfg),
        ..ScanOptions::default()
    };
    let dd = DoubleDouble::new;
    let mut t_rho = BTreeMap::new();
    let mut transitions = BTreeMap::new();
    for &rho in &cfg.rhos {
        let found = with_model::<DoubleDouble, _>(cfg, |m| {
            boundary_scan_with(m, rho, dd(cfg.t_min), dd(cfg.t_max), dd(cfg.tol_t), &opts)
        })
        .map_err(runtime)?;
        let found: Vec<Boundary<f64>> = found
            .into_iter()
            .map(|b| Boundary {
                t: b.t.to_f64_lossy(),
                from: b.from,
                to: b.to,
            })
            .collect();
        let limit = unitarity_limit(&found).map(|b| BoundaryEntry {
            t: b.t,
            from: b.from,
            to: b.to,
        });
        t_rho.insert(rho, limit);
        transitions.insert(rho, found);
    }
    Ok(BoundaryReport {
        model: cfg.model.id().to_string(),
        t_min: cfg.t_min,
        t_max: cfg.t_max,
        tol_t: cfg.tol_t,
        t_rho,
        transitions,
    })
}

fn ep_table(r: &EpReport<f64>) -> Table {
    let mut t = Table::new(
        [
            "t_ep",
            "eigvec_condition",
            "min_gap",
            "metric_rank",
            "is_ep",
        ]
        .map(String::from)
        .to_vec(),
    );
    t.push(vec![
        Cell::Num(r.t_ep),
        Cell::Num(r.eigvec_condition),
        Cell::Num(r.min_gap),
        Cell::Text(r.metric_rank.to_string()),
        Cell::Text(r.is_ep.to_string()),
    ]);
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRun {
    pub rho: u32,
    pub record: PropagationRecord<f64>,
}

/// Non-stationary propagation of the first basis vector for every `rho`.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<Vec<EvolutionRun>, RunError> {
    cfg.rhos
        .iter()
        .map(|&rho| {
            with_model::<f64, _>(cfg, |m| {
                let psi0 = StateVector::basis(m.dim(), 0);
                propagate_nonstationary(m, rho, cfg.t_min, cfg.t_max, cfg.steps, &psi0)
            })
            .map(|record| EvolutionRun { rho, record })
            .map_err(runtime)
        })
        .collect()
}

fn evolution_table(runs: &[EvolutionRun]) -> Table {
    let n = runs.first().map_or(0, |r| r.record.states[0].dim());
    let mut columns = vec![
        "rho".to_string(),
        "t".to_string(),
        "physical_norm".to_string(),
    ];
    for k in 1..=n {
        columns.push(format!("re_psi{k}"));
        columns.push(format!("im_psi{k}"));
    }
    let mut table = Table::new(columns);
    for run in runs {
        let r = &run.record;
        for ((t, psi), norm) in r.samples.iter().zip(&r.states).zip(&r.physical_norms) {
            let mut row = vec![
                Cell::Text(run.rho.to_string()),
                Cell::Num(*t),
                Cell::Num(*norm),
            ];
            for z in psi.amplitudes() {
                row.push(Cell::Num(z.re));
                row.push(Cell::Num(z.im));
            }
            table.push(row);
        }
    }
    table
}
