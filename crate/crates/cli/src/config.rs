use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use surjlab_core::Exponent;

use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ball,
    Spectrum,
    ApproxKernel,
    Willis,
    Herz,
    Nclp,
    Probe,
    Finite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ball => "ball",
            Command::Spectrum => "spectrum",
            Command::ApproxKernel => "approx-kernel",
            Command::Willis => "willis",
            Command::Herz => "herz",
            Command::Nclp => "nclp",
            Command::Probe => "probe",
            Command::Finite => "finite",
        }
    }
}

/// One experiment run. Every field mirrors a command-line flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elem: Option<String>,
    /// Trial element names or expressions for `probe`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Relative stopping tolerance of the LP refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            group: None,
            elem: None,
            trials: Vec::new(),
            p: None,
            radii: None,
            r: None,
            n: None,
            seed: 0,
            ta: None,
            tb: None,
            samples: None,
            cp: None,
            restarts: None,
            lp_tol: None,
            matrix: None,
            out: None,
            csv: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, UsageError> {
        toml::from_str(text).map_err(|e| UsageError(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(group, elem, p, radii, r, n, ta, tb, samples, cp, restarts, lp_tol, matrix, out, csv);
        if !other.trials.is_empty() {
            self.trials = other.trials;
        }
        if other.seed != 0 {
            self.seed = other.seed;
        }
        self.command = other.command;
        self
    }

    /// Fills every unset parameter the command reads with its default.
    pub fn resolved(mut self) -> Self {
        let c = self.command;
        if self.group.is_none() && c == Command::Willis {
            self.group = Some("F2".into());
        }
        let needs_p = matches!(
            c,
            Command::Spectrum | Command::Willis | Command::Herz | Command::Nclp | Command::Probe
        );
        if needs_p && self.p.is_none() {
            self.p = Some(match c {
                Command::Willis | Command::Probe => Exponent::ONE,
                _ => Exponent::TWO,
            });
        }
        if matches!(c, Command::Willis | Command::Nclp | Command::Probe) && self.radii.is_none() {
            self.radii = Some(match c {
                Command::Willis => (2..=5).collect(),
                Command::Nclp => (2..=6).collect(),
                _ => (1..=3).collect(),
            });
        }
        if matches!(c, Command::Ball | Command::Spectrum | Command::ApproxKernel | Command::Herz)
            && self.r.is_none()
        {
            self.r = Some(if c == Command::ApproxKernel { 64 } else { 4 });
        }
        if c == Command::ApproxKernel && self.n.is_none() {
            self.n = Some(vec![1, 10, 100]);
        }
        if c == Command::Willis {
            self.ta.get_or_insert_with(|| "w".into());
            self.tb.get_or_insert_with(|| "w2".into());
        }
        if c == Command::Herz {
            self.samples.get_or_insert(100);
            self.cp.get_or_insert(1.0);
        }
        if matches!(c, Command::Willis | Command::Probe) {
            self.restarts.get_or_insert(4);
            self.lp_tol.get_or_insert(1e-9);
        }
        self
    }
}

/// `"2..5"` and `"2..=5"` are inclusive ranges; otherwise a comma list.
pub fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start in {text:?}"))?;
        let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end in {text:?}"))?;
        if lo > hi {
            return Err(format!("empty range {text:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad integer {s:?}")))
        .collect()
}
