use thiserror::Error;

/// Errors surfaced by the simulator. Conditions that merely degrade a result
/// (feed near the aperture edge, grating lobes) are reported as warnings on
/// the result instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("lens size index {0} is outside 1..=3")]
    LensSizeIndex(u32),

    #[error("angle {theta_deg:.2} deg is outside the hyperbola asymptote cone (+-{limit_deg:.2} deg)")]
    OutsideAsymptote { theta_deg: f64, limit_deg: f64 },

    #[error("radius {rho_m:.4} m is outside the aperture [0, {max_m:.4} m]")]
    OutsideAperture { rho_m: f64, max_m: f64 },

    #[error("port {port} does not exist on this array ({count} ports)")]
    UnknownPort { port: u32, count: u32 },

    #[error("aperture pitch {pitch_mm:.3} mm exceeds lambda/4 = {limit_mm:.3} mm; the far-field sum would alias")]
    UndersampledAperture { pitch_mm: f64, limit_mm: f64 },

    #[error("angular grid is invalid: {0}")]
    BadGrid(String),

    #[error("steering map is degenerate (spread {spread_deg:.3} deg); port selection is meaningless")]
    DegenerateSteering { spread_deg: f64 },

    #[error("no -3 dB crossing on both sides of the peak; beamwidth is unbounded on this cut")]
    UnboundedBeamwidth,

    #[error("config: {0}")]
    Config(String),

    #[error("empty user drop: {0}")]
    EmptyDrop(String),

    #[error("numerical contract violated: {0}")]
    ContractViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ContractViolation(_) => 3,
            _ => 2,
        }
    }
}
