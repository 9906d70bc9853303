use std::path::PathBuf;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    VerifyPaper,
    MatrixAction,
    TorusAction,
    PalatiniCheck,
    PalatiniSolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Records,
}

/// Noncommutative Riemannian geometry on matrix algebras: checks and experiments.
#[derive(Debug, Clone, Parser)]
#[command(name = "ncgeom", version)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Matrix size of the quantum factor M_n(R).
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Torus dimension.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Grid points per torus axis.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Builtin metric family, `<family>[:params]`.
    #[arg(long, conflicts_with = "metric_file")]
    pub metric: Option<String>,
    /// Tabulated torus metric fields.
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides every check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricFamily {
    Identity,
    PaperG0,
    PaperCounterexample,
    RandomSpd,
    /// `(1 + amplitude · sin(k x_1)) · G` with `G` random SPD.
    FourierPerturbed { amplitude: f64, wave: i32 },
}

impl MetricFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MetricFamily::Identity => "identity",
            MetricFamily::PaperG0 => "paper-g0",
            MetricFamily::PaperCounterexample => "paper-counterexample-8x8",
            MetricFamily::RandomSpd => "random-spd",
            MetricFamily::FourierPerturbed { .. } => "fourier-perturbed",
        }
    }

    pub fn parse(spec: &str) -> Result<Self, String> {
        let (name, params) = match spec.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (spec, None),
        };
        let no_params = |f: MetricFamily| match params {
            None => Ok(f),
            Some(_) => Err(format!("metric family `{name}` takes no parameters")),
        };
        match name {
            "identity" => no_params(MetricFamily::Identity),
            "paper-g0" => no_params(MetricFamily::PaperG0),
            "paper-counterexample-8x8" => no_params(MetricFamily::PaperCounterexample),
            "random-spd" => no_params(MetricFamily::RandomSpd),
            "fourier-perturbed" => {
                let mut amplitude: f64 = 0.5;
                let mut wave = 1;
                if let Some(p) = params {
                    let parts: Vec<&str> = p.split(',').collect();
                    if parts.len() > 2 {
                        return Err("fourier-perturbed takes `amplitude[,wave]`".into());
                    }
                    amplitude = parts[0].trim().parse().map_err(|e| format!("amplitude `{}`: {e}", parts[0]))?;
                    if let Some(k) = parts.get(1) {
                        wave = k.trim().parse().map_err(|e| format!("wave number `{k}`: {e}"))?;
                    }
                }
                if !(amplitude.abs() < 1.0) {
                    return Err(format!("amplitude {amplitude} must lie in (-1, 1) to keep the metric invertible"));
                }
                Ok(MetricFamily::FourierPerturbed { amplitude, wave })
            }
            other => Err(format!(
                "unknown metric family `{other}` (expected identity, paper-g0, paper-counterexample-8x8, random-spd, fourier-perturbed)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSource {
    Default,
    Family(MetricFamily),
    File(PathBuf),
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub m: usize,
    pub grid: usize,
    pub metric: MetricSource,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, String> {
        if !(2..=3).contains(&cli.n) {
            return Err(format!("--n must be 2 or 3, got {}", cli.n));
        }
        if !(1..=3).contains(&cli.m) {
            return Err(format!("--m must be 1, 2 or 3, got {}", cli.m));
        }
        if cli.grid < 8 {
            return Err(format!("--grid must be at least 8, got {}", cli.grid));
        }
        if let Some(t) = cli.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("--tol must be positive, got {t}"));
            }
        }
        let metric = match (&cli.metric, &cli.metric_file) {
            (Some(spec), _) => MetricSource::Family(MetricFamily::parse(spec)?),
            (None, Some(path)) => MetricSource::File(path.clone()),
            (None, None) => MetricSource::Default,
        };
        let allowed: &[&str] = match cli.command {
            Command::VerifyPaper => &[],
            Command::MatrixAction => &["identity", "random-spd"],
            Command::TorusAction => &["identity", "random-spd", "fourier-perturbed"],
            Command::PalatiniCheck | Command::PalatiniSolve => {
                &["identity", "paper-g0", "paper-counterexample-8x8", "random-spd"]
            }
        };
        match &metric {
            MetricSource::Family(f) if !allowed.contains(&f.name()) => {
                return Err(format!("metric family `{}` is not available for {:?}", f.name(), cli.command));
            }
            MetricSource::File(_) if cli.command != Command::TorusAction => {
                return Err("--metric-file only applies to torus-action".into());
            }
            _ => {}
        }
        Ok(Self {
            command: cli.command,
            n: cli.n,
            m: cli.m,
            grid: cli.grid,
            metric,
            seed: cli.seed,
            tol: cli.tol,
            out: cli.out,
            format: cli.format,
        })
    }

    /// The configured tolerance, or `default` when none was given.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Result<RunConfig, String> {
        let mut full = vec!["ncgeom"];
        full.extend_from_slice(args);
        RunConfig::from_cli(Cli::try_parse_from(full).map_err(|e| e.to_string())?)
    }

    #[test]
    fn families_parse() {
        assert_eq!(MetricFamily::parse("paper-g0").unwrap(), MetricFamily::PaperG0);
        assert_eq!(
            MetricFamily::parse("fourier-perturbed:0.25,2").unwrap(),
            MetricFamily::FourierPerturbed { amplitude: 0.25, wave: 2 }
        );
        assert!(MetricFamily::parse("fourier-perturbed:1.5").is_err());
        assert!(MetricFamily::parse("identity:3").is_err());
        assert!(MetricFamily::parse("sphere").is_err());
    }

    #[test]
    fn validation() {
        assert!(cli(&["--command", "matrix-action", "--n", "3"]).is_ok());
        assert!(cli(&["--command", "matrix-action", "--n", "4"]).is_err());
        assert!(cli(&["--command", "torus-action", "--grid", "4"]).is_err());
        assert!(cli(&["--command", "verify-paper", "--tol", "-1"]).is_err());
        assert!(cli(&["--command", "matrix-action", "--metric", "paper-g0"]).is_err());
        assert!(cli(&["--command", "palatini-check", "--metric-file", "x"]).is_err());
        assert!(cli(&["--command", "torus-action", "--metric", "identity", "--metric-file", "x"]).is_err());
        assert!(cli(&["--command", "nonsense"]).is_err());
    }
}
