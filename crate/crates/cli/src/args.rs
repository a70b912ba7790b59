use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncdist_core::torus::Index;
use ncdist_core::StateSpec;

#[derive(Parser, Debug)]
#[command(name = "ncdist", version, about = "Spectral distances on the Moyal plane and the noncommutative torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bracket the distance between two pure states of the Moyal plane
    MoyalDistance(MoyalArgs),
    /// Distance between a Φ_M vector state and τ (or a second Φ_N) on the torus
    TorusDistance(TorusArgs),
    /// Log-log growth of the certificate sequence B(m0) for a pair of states
    Probe(ProbeArgs),
    /// Run the randomized property suites
    Verify(VerifyArgs),
    /// Test an element against the Lipschitz unit ball
    BallCheck(BallArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Deformation parameter
    #[arg(long)]
    pub theta: Option<f64>,

    /// Truncation order of the optimizer
    #[arg(long)]
    pub order: Option<usize>,

    /// Fixed box radius for torus operator norms
    #[arg(long = "box")]
    pub box_radius: Option<usize>,

    /// Optimizer stopping tolerance
    #[arg(long)]
    pub tol: Option<f64>,

    /// Optimizer iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON file with inputs; command-line flags take precedence
    #[arg(long)]
    pub spec_file: Option<PathBuf>,

    /// Add wall-clock time to the report
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct MoyalArgs {
    /// First state: basis:m | zeta:s[:cutoff] | finite:w0,w1,...
    #[arg(long)]
    pub a: Option<StateSpec>,

    /// Second state
    #[arg(long)]
    pub b: Option<StateSpec>,

    /// Attach a divergence fit to the report
    #[arg(long)]
    pub probe: bool,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TorusArgs {
    /// Mode of the first Φ state, e.g. 3,4
    #[arg(long, value_parser = parse_index, allow_hyphen_values = true)]
    pub m: Option<Index>,

    /// Mode of a second Φ state; the tracial state when omitted
    #[arg(long, value_parser = parse_index, allow_hyphen_values = true)]
    pub n: Option<Index>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    /// Two state specs separated by a comma, e.g. zeta:1.2,basis:0
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(StateSpec, StateSpec)>,

    /// Range of m0, e.g. 1e3:1e6
    #[arg(long, value_parser = parse_range, default_value = "1e2:1e6")]
    pub grid: (u64, u64),

    #[arg(long, default_value_t = 12)]
    pub points_per_decade: usize,

    /// Fit over the top decades of the grid, e.g. 1.5dec
    #[arg(long, value_parser = parse_decades, default_value = "1.5dec")]
    pub fit_top: f64,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite name, or `all`
    #[arg(long, default_value = "all")]
    pub suite: String,

    /// Random instances per check
    #[arg(long, default_value_t = 200)]
    pub instances: usize,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BallArgs {
    /// Element: ahat:m0 | step:n | basis:m,n
    #[arg(long)]
    pub element: Option<String>,

    /// Multiply the element by this factor first
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,

    #[command(flatten)]
    pub common: Common,
}

pub fn parse_index(text: &str) -> Result<Index, String> {
    let (a, b) = text.split_once(',').ok_or_else(|| format!("expected m1,m2, got `{text}`"))?;
    let p = |s: &str| s.trim().parse::<i64>().map_err(|e| format!("`{s}`: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Splits at the comma that starts the second spec, so finite weights may contain commas.
pub fn parse_pair(text: &str) -> Result<(StateSpec, StateSpec), String> {
    let starts: Vec<usize> = text
        .match_indices(',')
        .map(|(i, _)| i)
        .filter(|&i| ["basis:", "zeta:", "finite:"].iter().any(|k| text[i + 1..].starts_with(k)))
        .collect();
    let [split] = starts[..] else {
        return Err(format!("expected two state specs separated by a comma, got `{text}`"));
    };
    let a = text[..split].parse::<StateSpec>().map_err(|e| e.to_string())?;
    let b = text[split + 1..].parse::<StateSpec>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_count(text: &str) -> Result<u64, String> {
    let v: f64 = text.trim().parse().map_err(|e| format!("`{text}`: {e}"))?;
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("`{text}` is not a nonnegative integer"))
    }
}

pub fn parse_range(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{text}`"))?;
    let (lo, hi) = (parse_count(lo)?, parse_count(hi)?);
    if lo >= hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_decades(text: &str) -> Result<f64, String> {
    let v: f64 = text.trim().trim_end_matches("dec").parse().map_err(|e| format!("`{text}`: {e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("fit window must be positive, got `{text}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_split_at_second_spec() {
        let (a, b) = parse_pair("zeta:1.2,basis:0").unwrap();
        assert_eq!(a, StateSpec::Zeta { s: 1.2, cutoff: None });
        assert_eq!(b, StateSpec::Basis { m: 0 });
        let (a, b) = parse_pair("finite:1,0.5i,zeta:1.3:1e5").unwrap();
        assert_eq!(a, StateSpec::Finite { weights: vec![(1.0, 0.0), (0.0, 0.5)] });
        assert_eq!(b, StateSpec::Zeta { s: 1.3, cutoff: Some(100_000) });
        assert!(parse_pair("basis:0").is_err());
        assert!(parse_pair("basis:0,basis:1,basis:2").is_err());
    }

    #[test]
    fn ranges_and_windows() {
        assert_eq!(parse_range("1e3:1e6").unwrap(), (1000, 1_000_000));
        assert!(parse_range("1e6:1e3").is_err());
        assert!(parse_range("1.5:10").is_err());
        assert_eq!(parse_decades("1.5dec").unwrap(), 1.5);
        assert_eq!(parse_decades("2").unwrap(), 2.0);
        assert!(parse_decades("-1dec").is_err());
        assert_eq!(parse_index("-3,4").unwrap(), (-3, 4));
        assert!(parse_index("3").is_err());
    }
}
