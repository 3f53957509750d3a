use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown preset system `{0}` (known: hydrogen, ion_a2_4plus)")]
    UnknownPreset(String),

    #[error("Bessel J_{order}({arg}) outside the supported domain (order <= 200, |x| <= 100)")]
    BesselDomain { order: i64, arg: f64 },

    #[error("order {order} does not match {parity} parity")]
    ParityMismatch { order: u32, parity: &'static str },

    #[error("analytic solutions require a square envelope")]
    NonSquareEnvelope,

    #[error("run of {requested} steps exceeds the resource guard of {limit} steps")]
    ResourceGuard { requested: f64, limit: f64 },

    #[error(
        "norm drift {max_deviation:.3e} exceeds {limit:.1e}; increase steps_per_cycle (currently {steps_per_cycle})"
    )]
    IntegrationQuality {
        max_deviation: f64,
        limit: f64,
        steps_per_cycle: usize,
    },

    #[error("effective Rabi frequency is zero; no resonance to traverse")]
    NoResonance,

    #[error("unphysical resonance solve: K + sigma(r) = {0} <= 0")]
    Unphysical(f64),

    #[error("time samples are not uniformly spaced (sample {index})")]
    NonUniformGrid { index: usize },

    #[error(
        "doublet splitting {splitting:.3e} spans {bins:.2} frequency bins; at least 3 are required"
    )]
    Unresolved { splitting: f64, bins: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
