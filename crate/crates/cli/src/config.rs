//! Command-line flags, JSON configuration files and their merge.
//!
//! Every flag has a config key of the same name with dashes replaced by
//! underscores. Precedence, lowest first: config file, `--set key=value`
//! overrides, flags. The `FB_SEED` environment variable beats `--seed`.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "FB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Run the tests on a CSV data set.
    Test,
    /// Monte Carlo rejection rates for one design.
    Simulate,
    /// Regenerate a named table or figure.
    Reproduce,
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "fitest", version, about = "Forecast instability tests with extreme-value critical values")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Data file for test mode.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSON file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config override as key=value; the value is parsed as JSON when possible.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// fixed, recursive or rolling.
    #[arg(long)]
    pub scheme: Option<String>,
    /// quadratic or linex.
    #[arg(long)]
    pub loss: Option<String>,
    /// Statistic to compute; repeat for several.
    #[arg(long = "stat")]
    pub stat: Vec<String>,
    /// q1, nu2, nu3, nu4 or nuL.
    #[arg(long)]
    pub variance: Option<String>,
    /// Significance level in (0, 1); default 0.05.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// In-sample size.
    #[arg(long)]
    pub tm: Option<usize>,
    /// Forecast horizon.
    #[arg(long)]
    pub tau: Option<usize>,
    /// lipschitz or ito.
    #[arg(long = "block-rule")]
    pub block_rule: Option<String>,
    /// Shrinks the block-length exponent; default 0.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// length-first (block length from the rule) or count-first (block
    /// count from the rule, length stretched to cover the sample).
    #[arg(long)]
    pub sizing: Option<String>,
    /// Monte Carlo replications; default 5000.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; the FB_SEED environment variable takes precedence.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Named experiment for reproduce mode.
    #[arg(long)]
    pub preset: Option<String>,
    /// Data-generating process for simulate mode.
    #[arg(long)]
    pub family: Option<String>,
    /// Total sample size for simulate mode.
    #[arg(long = "total")]
    pub total: Option<usize>,
    /// Break magnitude.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fractional break date.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Length of a short-lived break.
    #[arg(long)]
    pub duration: Option<usize>,
    /// Comma-separated break magnitudes for a power curve.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Print JSON instead of a text summary.
    #[arg(long)]
    pub json: bool,
}

/// Fully merged settings. Unset fields take mode-specific defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub mode: Option<Mode>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub scheme: Option<String>,
    pub loss: Option<String>,
    pub stat: Vec<String>,
    pub variance: Option<String>,
    pub alpha: Option<f64>,
    pub tm: Option<usize>,
    pub tau: Option<usize>,
    pub block_rule: Option<String>,
    pub epsilon: Option<f64>,
    pub sizing: Option<String>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub preset: Option<String>,
    pub family: Option<String>,
    pub total: Option<usize>,
    pub delta: Option<f64>,
    pub lambda0: Option<f64>,
    pub duration: Option<usize>,
    pub grid: Vec<f64>,
    pub json: bool,
    /// A complete experiment description for simulate mode; the flags
    /// above still override its replications, seed and level.
    pub experiment: Option<Value>,
    #[serde(skip)]
    pub config_path: Option<PathBuf>,
}

fn apply_override(root: &mut Value, item: &str) -> CliResult<()> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| CliError::Usage(format!("override `{item}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node.as_object_mut().ok_or_else(|| CliError::Usage(format!("override `{key}` descends into a non-object")))?;
        let part = part.replace('-', "_");
        if i + 1 == parts.len() {
            map.insert(part, value);
            return Ok(());
        }
        node = map.entry(part).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn read_config(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: Value = serde_json::from_str(&text)?;
    if !v.is_object() {
        return Err(CliError::Usage(format!("{}: configuration must be a JSON object", path.display())));
    }
    Ok(v)
}

/// Merges config file, overrides, flags and environment.
pub fn resolve(cli: &Cli, env_seed: Option<&str>) -> CliResult<Settings> {
    let mut root = match &cli.config {
        Some(p) => read_config(p)?,
        None => Value::Object(Default::default()),
    };
    for item in &cli.overrides {
        apply_override(&mut root, item)?;
    }
    let mut s: Settings = serde_json::from_value(root)?;
    s.config_path = cli.config.clone();

    macro_rules! overlay {
        ($($field:ident),*) => {$(
            if cli.$field.is_some() {
                s.$field = cli.$field.clone();
            }
        )*};
    }
    overlay!(
        mode, input, out, scheme, loss, variance, alpha, tm, tau, block_rule, epsilon, sizing, reps, seed, threads, preset,
        family, total, delta, lambda0, duration
    );
    if !cli.stat.is_empty() {
        s.stat = cli.stat.clone();
    }
    if !cli.grid.is_empty() {
        s.grid = cli.grid.clone();
    }
    s.json |= cli.json;
    if let Some(raw) = env_seed {
        let seed = raw.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{raw}` is not an unsigned integer")))?;
        s.seed = Some(seed);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("fitest").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"mode":"test","alpha":0.1,"stat":["bmax"],"tm":40,"scheme":"rolling"}}"#).unwrap();
        let path = f.path().to_str().unwrap();
        let s = resolve(&parse(&["--config", path, "--alpha", "0.01", "--stat", "qmax", "--stat", "mqmax"]), None).unwrap();
        assert_eq!(s.alpha, Some(0.01));
        assert_eq!(s.stat, vec!["qmax", "mqmax"]);
        assert_eq!(s.tm, Some(40));
        assert_eq!(s.scheme.as_deref(), Some("rolling"));
        assert_eq!(s.mode, Some(Mode::Test));
    }

    #[test]
    fn overrides_sit_between_config_and_flags() {
        let s = resolve(&parse(&["--set", "tm=30", "--set", "block-rule=ito", "--set", "experiment.replications=200"]), None)
            .unwrap();
        assert_eq!(s.tm, Some(30));
        assert_eq!(s.block_rule.as_deref(), Some("ito"));
        assert_eq!(s.experiment.unwrap()["replications"], 200);
        let s = resolve(&parse(&["--set", "tm=30", "--tm", "50"]), None).unwrap();
        assert_eq!(s.tm, Some(50));
    }

    #[test]
    fn environment_seed_wins() {
        let s = resolve(&parse(&["--seed", "3"]), Some("17")).unwrap();
        assert_eq!(s.seed, Some(17));
        assert!(resolve(&parse(&[]), Some("abc")).is_err());
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(resolve(&parse(&["--set", "colour=red"]), None).is_err());
        assert!(resolve(&parse(&["--set", "novalue"]), None).is_err());
    }

    #[test]
    fn grid_is_comma_separated() {
        assert_eq!(parse(&["--grid", "0,0.5,1"]).grid, vec![0.0, 0.5, 1.0]);
    }
}
