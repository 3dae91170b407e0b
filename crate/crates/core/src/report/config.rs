use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ToyModel;

/// Grids larger than this are rejected as a configuration error.
pub const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Spectrum,
    MetricScan,
    Boundary,
    EpProbe,
    Evolve,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(config_err(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

/// Preset grids reproducing the published metric-spectrum figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }

    pub fn model(self) -> ToyModel {
        match self {
            Figure::Fig1 => ToyModel::TwoLevel,
            Figure::Fig2 | Figure::Fig3 => ToyModel::FourLevel,
        }
    }

    pub fn rhos(self) -> Vec<u32> {
        match self {
            Figure::Fig1 => (0..=4).collect(),
            Figure::Fig2 => vec![0],
            Figure::Fig3 => vec![1, 2, 3],
        }
    }

    /// `(t_min, t_max, t_step)`.
    pub fn grid(self) -> (f64, f64, f64) {
        match self {
            Figure::Fig1 => (0.01, 4.5, 0.01),
            Figure::Fig2 => (0.001, 1.2, 0.001),
            Figure::Fig3 => (0.01, 1.2, 0.005),
        }
    }

    /// Number of largest eigenvalues kept per rho; `None` keeps all.
    pub fn top_branches(self) -> Option<usize> {
        match self {
            Figure::Fig3 => Some(2),
            Figure::Fig1 | Figure::Fig2 => None,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "fig1" => Ok(Figure::Fig1),
            "2" | "fig2" => Ok(Figure::Fig2),
            "3" | "fig3" => Ok(Figure::Fig3),
            other => Err(config_err(format!(
                "unknown figure `{other}` (expected 1, 2 or 3)"
            ))),
        }
    }
}

/// Parses `0,1,3` and inclusive ranges such as `0..4` or `0..2,5`.
pub fn parse_rho_list(s: &str) -> Result<Vec<u32>, ConfigError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || config_err(format!("invalid rho entry `{part}`"));
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(config_err("rho list is empty"));
    }
    Ok(out)
}

/// Parses a comma-separated list of positive weights.
pub fn parse_kappa_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let kappa: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("invalid kappa entry `{p}`")))
        })
        .collect::<Result<_, _>>()?;
    if kappa.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(config_err("kappa weights must be positive and finite"));
    }
    Ok(kappa)
}

/// Fully resolved settings for one CLI invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub model: ToyModel,
    pub rhos: Vec<u32>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    /// Classification tolerance (or, for `verify`, an override for every threshold).
    pub tol: Option<f64>,
    pub tol_t: f64,
    pub figure: Option<Figure>,
    pub kappa: Option<Vec<f64>>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub steps: usize,
    pub center: f64,
    pub radius: f64,
    /// `verify` only: replace the two-level metric at `t = 0.5` by the identity.
    pub inject_identity_metric: bool,
}

impl RunConfig {
    /// Defaults for `command`; figure presets are applied by the caller.
    pub fn defaults(command: CommandKind) -> Self {
        let (t_min, t_max, t_step) = match command {
            CommandKind::Boundary => (0.0, 5.0, 0.01),
            CommandKind::Evolve => (0.3, 0.8, 0.01),
            _ => (0.0, 1.0, 0.05),
        };
        Self {
            command,
            model: ToyModel::TwoLevel,
            rhos: match command {
                CommandKind::Boundary => (0..=4).collect(),
                _ => vec![0],
            },
            t_min,
            t_max,
            t_step,
            tol: None,
            tol_t: 1e-12,
            figure: None,
            kappa: None,
            format: OutputFormat::Csv,
            out: None,
            threads: None,
            steps: 2000,
            center: 0.0,
            radius: 0.1,
            inject_identity_metric: false,
        }
    }

    /// Loads the model, rho list and grid of `figure`.
    pub fn apply_figure(&mut self, figure: Figure) {
        let (a, b, s) = figure.grid();
        self.figure = Some(figure);
        self.model = figure.model();
        self.rhos = figure.rhos();
        self.t_min = a;
        self.t_max = b;
        self.t_step = s;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            self.t_min,
            self.t_max,
            self.t_step,
            self.tol_t,
            self.center,
            self.radius,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(config_err("numeric options must be finite"));
        }
        if self.rhos.is_empty() {
            return Err(config_err("rho list is empty"));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(config_err("tol must be positive"));
            }
        }
        match self.command {
            CommandKind::Spectrum | CommandKind::MetricScan => {
                if self.t_min > self.t_max {
                    return Err(config_err("t-min must not exceed t-max"));
                }
                if !(self.t_step > 0.0) {
                    return Err(config_err("t-step must be positive"));
                }
                if self.grid_points() > MAX_GRID_POINTS {
                    return Err(config_err("grid too large"));
                }
            }
            CommandKind::Boundary | CommandKind::Evolve => {
                if self.t_min >= self.t_max {
                    return Err(config_err("t-min must be below t-max"));
                }
                if !(self.tol_t > 0.0) {
                    return Err(config_err("tol-t must be positive"));
                }
                if self.command == CommandKind::Evolve && self.steps == 0 {
                    return Err(config_err("steps must be positive"));
                }
            }
            CommandKind::EpProbe => {
                if !(self.radius > 0.0) {
                    return Err(config_err("radius must be positive"));
                }
            }
            CommandKind::Verify => {}
        }
        if let Some(k) = &self.kappa {
            let dim = crate::models::Model::<f64>::dim(&self.model);
            if k.len() != dim {
                return Err(config_err(format!(
                    "kappa has {} weights, model `{}` needs {dim}",
                    k.len(),
                    self.model
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(config_err("threads must be positive"));
        }
        Ok(())
    }

    fn grid_points(&self) -> usize {
        ((self.t_max - self.t_min) / self.t_step + 1.5).floor() as usize
    }

    /// `t_min + k * t_step` up to `t_max`, with a half-step allowance so
    /// the end point survives rounding.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_points())
            .map(|k| self.t_min + k as f64 * self.t_step)
            .filter(|&t| t <= self.t_max + 0.5 * self.t_step)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_lists() {
        assert_eq!(parse_rho_list("0..2,5").unwrap(), vec![0, 1, 2, 5]);
        assert_eq!(parse_rho_list(" 3 ").unwrap(), vec![3]);
        assert!(parse_rho_list("").is_err());
        assert!(parse_rho_list("2..1").is_err());
        assert!(parse_rho_list("x").is_err());
    }

    #[test]
    fn figure_grids_hit_end_points() {
        for fig in [Figure::Fig1, Figure::Fig2, Figure::Fig3] {
            let mut cfg = RunConfig::defaults(CommandKind::MetricScan);
            cfg.apply_figure(fig);
            let g = cfg.grid();
            let (a, b, s) = fig.grid();
            assert_eq!(g[0], a);
            assert!((g[g.len() - 1] - b).abs() < 1e-9);
            assert_eq!(g.len(), ((b - a) / s).round() as usize + 1);
        }
    }
}
