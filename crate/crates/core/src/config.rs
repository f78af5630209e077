//! Run configuration: TOML parsing, validation, presets.
//!
//! ```toml
//! scheme = "average"        # explicit | implicit | average | reference
//! dt = 0.01
//! t_final = 5.0
//!
//! [grid]
//! n_modes = 256
//! alpha = 1.0
//!
//! [scenario]
//! kind = "gaussian"         # gaussian | peakon | peakon_pair | sine
//! amplitude = 1.0
//! sigma = 1.0
//!
//! [solver]                  # optional
//! tolerance = 1e-12
//!
//! [reference]               # optional; used by scheme = "reference" and compare
//! dt = 1e-4
//! dealias = true
//!
//! [output]                  # optional
//! directory = "out"
//! stride = 10
//! formats = ["csv", "json", "plot"]
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{SchemeKind, SolverOptions};
use crate::scenarios::ScenarioSpec;

/// Largest `n_modes` accepted for the variational schemes, whose Newton
/// solves are dense `P × P`.
pub const MAX_VARIATIONAL_MODES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid value for '{field}': {message}")]
    Validation { field: String, message: String },

    #[error("unknown preset '{0}' (available: {list})", list = PRESETS.join(", "))]
    UnknownPreset(String),
}

impl ConfigError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation { field: field.to_string(), message: message.into() }
    }
}

/// Which integrator a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeChoice {
    Variational(SchemeKind),
    Reference,
}

impl FromStr for SchemeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("reference") {
            return Ok(SchemeChoice::Reference);
        }
        s.parse::<SchemeKind>().map(SchemeChoice::Variational).map_err(|e| match e {
            crate::Error::Unsupported(m) | crate::Error::InvalidArgument(m) => m,
            other => other.to_string(),
        })
    }
}

impl TryFrom<String> for SchemeChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SchemeChoice> for String {
    fn from(s: SchemeChoice) -> String {
        s.to_string()
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeChoice::Variational(k) => write!(f, "{k}"),
            SchemeChoice::Reference => f.write_str("reference"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_modes: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub dt: f64,
    pub dealias: bool,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { dt: 1e-4, dealias: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub stride: usize,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            stride: 10,
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Plot],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: SchemeChoice,
    pub dt: f64,
    pub t_final: f64,
    pub grid: GridConfig,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides; `None` keeps the configured value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scheme: Option<SchemeChoice>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_modes: Option<usize>,
    pub alpha: Option<f64>,
    pub directory: Option<PathBuf>,
}

pub const PRESETS: &[&str] = &[
    "paper-gaussian",
    "desk-gaussian",
    "desk-gaussian-explicit",
    "desk-gaussian-implicit",
    "smooth-convergence",
    "single-peakon",
    "peakon-collision",
];

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }

    /// TOML text that [`RunConfig::parse`] maps back to `self`.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    pub fn n_points(&self) -> usize {
        2 * self.grid.n_modes + 1
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    pub fn reference_steps(&self) -> usize {
        ((self.t_final / self.reference.dt).round() as usize).max(1)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(s) = o.scheme {
            self.scheme = s;
        }
        if let Some(v) = o.dt {
            self.dt = v;
        }
        if let Some(v) = o.t_final {
            self.t_final = v;
        }
        if let Some(v) = o.n_modes {
            self.grid.n_modes = v;
        }
        if let Some(v) = o.alpha {
            self.grid.alpha = v;
        }
        if let Some(d) = &o.directory {
            self.output.directory = d.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::field(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        if self.dt > self.t_final {
            return Err(ConfigError::field("dt", format!("must not exceed t_final ({})", self.t_final)));
        }
        if self.grid.n_modes == 0 {
            return Err(ConfigError::field("grid.n_modes", "must be at least 1"));
        }
        if matches!(self.scheme, SchemeChoice::Variational(_)) && self.grid.n_modes > MAX_VARIATIONAL_MODES {
            return Err(ConfigError::field(
                "grid.n_modes",
                format!("at most {MAX_VARIATIONAL_MODES} for the variational schemes (dense Newton solves)"),
            ));
        }
        if !(self.grid.alpha >= 0.0) || !self.grid.alpha.is_finite() {
            return Err(ConfigError::field("grid.alpha", "must be finite and non-negative"));
        }
        positive("solver.tolerance", self.solver.tolerance)?;
        if self.solver.max_iterations == 0 {
            return Err(ConfigError::field("solver.max_iterations", "must be at least 1"));
        }
        positive("solver.newton_fd_epsilon", self.solver.newton_fd_epsilon)?;
        positive("reference.dt", self.reference.dt)?;
        if self.output.stride == 0 {
            return Err(ConfigError::field("output.stride", "must be at least 1"));
        }
        if self.output.directory.as_os_str().is_empty() {
            return Err(ConfigError::field("output.directory", "must not be empty"));
        }
        self.scenario.normalized().map_err(|e| {
            let field = match &self.scenario {
                ScenarioSpec::Gaussian { .. } => "scenario.sigma",
                _ => "scenario",
            };
            ConfigError::field(field, e.to_string())
        })?;
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let gaussian = ScenarioSpec::Gaussian { amplitude: 1.0, center: 0.0, sigma: 1.0 };
        let base = |scheme: SchemeKind, n_modes: usize, dt: f64, t_final: f64, scenario: ScenarioSpec| RunConfig {
            scheme: SchemeChoice::Variational(scheme),
            dt,
            t_final,
            grid: GridConfig { n_modes, alpha: 1.0 },
            scenario,
            solver: SolverOptions::default(),
            reference: ReferenceConfig::default(),
            output: OutputConfig { directory: PathBuf::from(format!("out/{name}")), ..OutputConfig::default() },
        };
        let config = match name {
            "paper-gaussian" => base(SchemeKind::Average, 1000, 0.01, 5.0, gaussian),
            "desk-gaussian" => base(SchemeKind::Average, 256, 0.01, 5.0, gaussian),
            "desk-gaussian-explicit" => base(SchemeKind::Explicit, 256, 0.01, 5.0, gaussian),
            "desk-gaussian-implicit" => base(SchemeKind::Implicit, 256, 0.01, 5.0, gaussian),
            "smooth-convergence" => {
                let mut c = base(
                    SchemeKind::Explicit,
                    64,
                    0.01,
                    1.0,
                    ScenarioSpec::Sine { amplitude: 0.1, wavenumber: 1, phase: 0.0 },
                );
                c.output.stride = 1;
                c
            }
            "single-peakon" => base(
                SchemeKind::Average,
                256,
                0.01,
                1.0,
                ScenarioSpec::Peakon { amplitude: 1.0, center: -PI / 2.0 },
            ),
            "peakon-collision" => base(
                SchemeKind::Average,
                256,
                0.005,
                3.0,
                ScenarioSpec::PeakonPair { amplitudes: [1.0, -1.0], centers: [-PI / 2.0, PI / 2.0] },
            ),
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
scheme = "average"
dt = 0.01
t_final = 1.0

[grid]
n_modes = 16
alpha = 1.0

[scenario]
kind = "gaussian"
"#;

    #[test]
    fn minimal_document_uses_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.scheme, SchemeChoice::Variational(SchemeKind::Average));
        assert_eq!(c.scenario, ScenarioSpec::default());
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.n_steps(), 100);
        assert_eq!(c.n_points(), 33);
    }

    #[test]
    fn paper_preset() {
        let c = RunConfig::preset("paper-gaussian").unwrap();
        assert_eq!(c.grid, GridConfig { n_modes: 1000, alpha: 1.0 });
        assert_eq!(c.dt, 0.01);
        assert!(matches!(c.scenario, ScenarioSpec::Gaussian { .. }));
        for name in PRESETS {
            RunConfig::preset(name).unwrap();
        }
        assert!(matches!(RunConfig::preset("nope"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn validation_names_the_field() {
        let text = MINIMAL.replace("dt = 0.01", "dt = 0");
        match RunConfig::parse(&text) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "dt"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("kind = \"gaussian\"", "kind = \"gaussian\"\nsigma = -1");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Validation { .. })));
        let text = MINIMAL.replace("t_final = 1.0", "t_final = 0.001");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Validation { field, .. }) if field == "dt"));
    }

    #[test]
    fn midpoint_rejected_with_reason() {
        let text = MINIMAL.replace("\"average\"", "\"midpoint\"");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("third-order"), "{err}");
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in ["\nbogus = 1\n", "\n[solver]\ntolerence = 1e-12\n", "\n[output]\nstride = 1\nfoo = 2\n"] {
            let text = format!("{MINIMAL}{extra}");
            assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Parse { .. })), "{extra}");
        }
        let text = MINIMAL.replace("kind = \"gaussian\"", "kind = \"gaussian\"\nwidth = 2");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn parse_error_position() {
        let text = "scheme = \"average\"\ndt = = 0.01\n";
        match RunConfig::parse(text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column >= 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_revalidate() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.apply(&Overrides { dt: Some(0.02), n_modes: Some(8), ..Default::default() }).unwrap();
        assert_eq!((c.dt, c.grid.n_modes), (0.02, 8));
        assert!(c.apply(&Overrides { alpha: Some(-1.0), ..Default::default() }).is_err());
    }

    fn scenario_strategy() -> impl Strategy<Value = ScenarioSpec> {
        prop_oneof![
            (-2.0f64..2.0, -3.0f64..3.0, 0.1f64..2.0)
                .prop_map(|(amplitude, center, sigma)| ScenarioSpec::Gaussian { amplitude, center, sigma }),
            (-2.0f64..2.0, -3.0f64..3.0).prop_map(|(amplitude, center)| ScenarioSpec::Peakon { amplitude, center }),
            (-2.0f64..2.0, -2.0f64..2.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c, d)| {
                ScenarioSpec::PeakonPair { amplitudes: [a, b], centers: [c, d] }
            }),
            (-2.0f64..2.0, 1u32..4, -3.0f64..3.0)
                .prop_map(|(amplitude, wavenumber, phase)| ScenarioSpec::Sine { amplitude, wavenumber, phase }),
        ]
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(
            scheme in prop_oneof![
                Just(SchemeChoice::Reference),
                Just(SchemeChoice::Variational(SchemeKind::Explicit)),
                Just(SchemeChoice::Variational(SchemeKind::Implicit)),
                Just(SchemeChoice::Variational(SchemeKind::Average)),
            ],
            dt in 1e-4f64..0.1,
            extra in 0.0f64..10.0,
            n_modes in 4usize..600,
            alpha in 0.0f64..3.0,
            scenario in scenario_strategy(),
            stride in 1usize..50,
            tol in 1e-14f64..1e-8,
        ) {
            let config = RunConfig {
                scheme,
                dt,
                t_final: dt + extra,
                grid: GridConfig { n_modes, alpha },
                scenario,
                solver: SolverOptions { tolerance: tol, ..Default::default() },
                reference: ReferenceConfig::default(),
                output: OutputConfig { stride, ..Default::default() },
            };
            let back = RunConfig::parse(&config.emit()).unwrap();
            prop_assert_eq!(back, config);
        }
    }
}
