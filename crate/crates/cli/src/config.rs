//! Run configuration: a `key = value` file plus flag overrides.
//!
//! Both sources go through [`RunConfig::set`], so a flag and the matching
//! file key accept exactly the same syntax.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hmt_core::extremal::Mode;
use hmt_core::Grading;

use crate::CliError;

pub const DEFAULT_SEED: u64 = hmt_core::profiles::DEFAULT_SEED;

pub const KEYS: [&str; 12] = [
    "tmax",
    "n",
    "grading",
    "epsilons",
    "cert_epsilons",
    "window",
    "mode",
    "seed",
    "profiles",
    "moser_alpha",
    "hardy_lambda",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` leaves the choice to the suite.
    pub t_max: Option<f64>,
    pub n: Option<usize>,
    pub grading: Option<Grading>,
    /// Extremal ladder; `None` selects the suite default for `mode`.
    pub epsilons: Option<Vec<f64>>,
    pub cert_epsilons: Vec<f64>,
    /// Alternative `C_G` fit window compared against the default one.
    pub window: Option<(f64, f64)>,
    pub mode: Mode,
    pub seed: u64,
    /// Random profiles per inequality suite.
    pub profiles: usize,
    pub moser_alpha: f64,
    pub hardy_lambda: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_max: None,
            n: None,
            grading: None,
            epsilons: None,
            cert_epsilons: hmt_core::blowup_lab::DEFAULT_CERT_EPSILONS.to_vec(),
            window: None,
            mode: Mode::Hardy,
            seed: DEFAULT_SEED,
            profiles: 100,
            moser_alpha: 1.1 * 4.0 * PI,
            hardy_lambda: 1.5,
            out: PathBuf::from("hmt-out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value, got {line:?}", k + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("line {}: {}", k + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Usage(format!("{key}: {what} (got {value:?})"));
        match key {
            "tmax" => self.t_max = Some(parse_f64(value).ok_or_else(|| bad("expected a number"))?),
            "n" => self.n = Some(value.parse().map_err(|_| bad("expected a positive integer"))?),
            "grading" => {
                self.grading = match value {
                    "uniform" | "uniform_t" => Some(Grading::UniformT),
                    "geometric" | "geometric_t" => Some(Grading::GeometricT),
                    "auto" => None,
                    _ => return Err(bad("expected uniform, geometric or auto")),
                }
            }
            "epsilons" => self.epsilons = Some(parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?),
            "cert_epsilons" => {
                self.cert_epsilons = parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?
            }
            "window" => {
                let w = parse_list(value).ok_or_else(|| bad("expected LO,HI"))?;
                if w.len() != 2 {
                    return Err(bad("expected LO,HI"));
                }
                self.window = Some((w[0], w[1]));
            }
            "mode" => {
                self.mode = match value {
                    "hardy" => Mode::Hardy,
                    "dirichlet" => Mode::Dirichlet,
                    _ => return Err(bad("expected hardy or dirichlet")),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "profiles" => self.profiles = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "moser_alpha" => self.moser_alpha = parse_f64(value).ok_or_else(|| bad("expected a number"))?,
            "hardy_lambda" => self.hardy_lambda = parse_f64(value).ok_or_else(|| bad("expected a number"))?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(CliError::Usage(format!("unknown key {key:?} (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Checks that do not need a grid; grid preconditions surface when the
    /// suite builds it.
    pub fn validate(&self) -> Result<(), CliError> {
        if matches!(&self.epsilons, Some(e) if e.is_empty()) {
            return Err(CliError::Usage("epsilons: empty ladder".into()));
        }
        if self.cert_epsilons.is_empty() {
            return Err(CliError::Usage("cert_epsilons: empty ladder".into()));
        }
        if self.profiles == 0 {
            return Err(CliError::Precondition("profiles must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo > 0.0 && lo < hi && hi < 1.0) {
                return Err(CliError::Precondition(format!("window ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
            }
        }
        Ok(())
    }
}

/// A number, or a multiple of pi such as `pi`, `3pi`, `pi/2`, `0.5*pi`.
pub fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim_end_matches('*').trim();
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    Some(c * PI / den)
}

/// Comma-separated [`parse_f64`] values; an empty string is an empty list.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_multiples_of_pi() {
        assert_eq!(parse_f64("pi"), Some(PI));
        assert_eq!(parse_f64("3pi"), Some(3.0 * PI));
        assert_eq!(parse_f64("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_f64("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_f64("1e-3"), Some(1e-3));
        assert_eq!(parse_f64("tau"), None);
        assert_eq!(parse_list("3pi, 2pi,pi"), Some(vec![3.0 * PI, 2.0 * PI, PI]));
        assert_eq!(parse_list(""), Some(vec![]));
    }

    #[test]
    fn file_keys_and_comments() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# grid\nn = 2048\ntmax=40 # trailing\n\nmode = dirichlet\nwindow = 1e-5,1e-3\n").unwrap();
        assert_eq!(cfg.n, Some(2048));
        assert_eq!(cfg.t_max, Some(40.0));
        assert_eq!(cfg.mode, Mode::Dirichlet);
        assert_eq!(cfg.window, Some((1e-5, 1e-3)));
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.apply_text("nodes = 10"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.apply_text("n 10"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.apply_text("n = ten"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.apply_text("window = 1e-3"), Err(CliError::Usage(_))));
    }

    #[test]
    fn empty_ladder_is_a_usage_error() {
        let mut cfg = RunConfig::default();
        cfg.set("epsilons", "").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }
}
