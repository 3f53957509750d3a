//! JSON run configuration.

use std::path::{Path, PathBuf};

use gammares::model::preset_system;
use gammares::{
    Corrections, Envelope, Field64, Method, Params64, Parity, ResonanceParams, System64,
};
use serde::Deserialize;

use crate::CliError;

/// Preset name or inline parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset(String),
    Inline(System64),
}

impl SystemSpec {
    pub fn resolve(&self) -> Result<System64, CliError> {
        let sys = match self {
            SystemSpec::Preset(name) => preset_system(name)?,
            SystemSpec::Inline(sys) => sys.clone(),
        };
        sys.validate()?;
        Ok(sys)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceDirective {
    pub order: u32,
    pub parity: Option<Parity>,
    pub ratio_r: f64,
}

/// Either an explicit `(e0, omega0)` or a resonance directive. `order` and
/// `parity` on an explicit field name the resonance the analytic branch uses.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub e0: Option<f64>,
    pub omega0: Option<f64>,
    pub order: Option<u32>,
    pub parity: Option<Parity>,
    pub resonance: Option<ResonanceDirective>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: Option<PathBuf>,
    pub spectrum: Option<PathBuf>,
    pub peaks: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn default_envelope() -> Envelope<f64> {
    Envelope::Square
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub field: FieldSpec,
    #[serde(default = "default_envelope")]
    pub envelope: Envelope<f64>,
    pub duration_cycles: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub two_level: bool,
    pub steps_per_cycle: Option<usize>,
    #[serde(default)]
    pub corrections: Corrections,
    #[serde(default)]
    pub output: Outputs,
}

fn default_method() -> Method {
    Method::Numeric
}

/// Everything a run needs, with the field fixed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub system: System64,
    pub field: Field64,
    /// `(order, parity)` when the config names a resonance.
    pub resonance: Option<(u32, Parity)>,
    pub config: RunConfig,
}

impl Resolved {
    /// Analytic parameters at the configured field.
    pub fn params(&self) -> Result<Params64, CliError> {
        let (order, parity) = self.resonance.ok_or_else(|| {
            CliError::config("the analytic branch needs `order` in the field section")
        })?;
        Ok(ResonanceParams::compute(
            order,
            parity,
            &self.system,
            &self.field,
            self.config.corrections,
        )?)
    }

    /// Same field with a square envelope, as the analytic branch requires.
    pub fn square_field(&self) -> Result<Field64, CliError> {
        Ok(Field64::new(
            self.field.e0,
            self.field.omega0,
            Envelope::Square,
            self.field.duration_cycles,
        )?)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("bad config: {e}")))
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let system = self.system.resolve()?;
        if self.method != Method::Numeric && !self.envelope.is_square() {
            return Err(CliError::config(
                "methods rwa and avetissian require a square envelope",
            ));
        }
        let f = &self.field;
        let explicit = f.e0.is_some() || f.omega0.is_some();
        let (e0, omega0, resonance) = match (&f.resonance, explicit) {
            (Some(_), true) => {
                return Err(CliError::config(
                    "give either e0/omega0 or a resonance directive, not both",
                ))
            }
            (None, false) => {
                return Err(CliError::config(
                    "field needs e0/omega0 or a resonance directive",
                ))
            }
            (Some(d), false) => {
                if f.order.is_some() || f.parity.is_some() {
                    return Err(CliError::config(
                        "order/parity belong inside the resonance directive",
                    ));
                }
                let parity = d.parity.unwrap_or(Parity::of(d.order));
                let sol = gammares::solve_resonance(
                    &system,
                    d.order,
                    parity,
                    d.ratio_r,
                    self.corrections,
                )?;
                (sol.e0, sol.omega0, Some((d.order, parity)))
            }
            (None, true) => {
                let (Some(e0), Some(omega0)) = (f.e0, f.omega0) else {
                    return Err(CliError::config(
                        "an explicit field needs both e0 and omega0",
                    ));
                };
                let res = f.order.map(|k| (k, f.parity.unwrap_or(Parity::of(k))));
                (e0, omega0, res)
            }
        };
        if let Some((order, parity)) = resonance {
            parity.check(order)?;
        }
        let field = Field64::new(e0, omega0, self.envelope, self.duration_cycles)?;
        Ok(Resolved {
            system,
            field,
            resonance,
            config: self,
        })
    }
}
