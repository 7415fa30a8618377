use crate::scheme::SchemeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {stage} at x = {x}")]
    NumericOverflow {
        scheme: Option<SchemeId>,
        stage: &'static str,
        x: f64,
    },

    #[error("step {step} failed: {source}")]
    PathStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("moment recurrence overflowed at step {step}")]
    RecurrenceOverflow { step: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("driftless multiplicative equation (beta = 0, delta != 0, alpha = 0) has no reduced form")]
    UnclassifiedDegenerate,

    #[error("{scheme} is not contractive for moment {moment} at eta = {eta}, h = {h}")]
    Unstable {
        scheme: SchemeId,
        moment: u8,
        eta: f64,
        h: f64,
    },

    #[error("no sign change of the threshold difference on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("all {n_traj} trajectories blew up")]
    EnsembleCollapse { n_traj: u64 },

    #[error("strong-order level h = {h} blew up on trajectory {trajectory}")]
    LevelBlowup { h: f64, trajectory: u64 },

    #[error("diffusion is not positive at x = {x} (g = {g})")]
    DiffusionSign { x: f64, g: f64 },

    #[error("density tail not negligible: p(lo) = {p_lo:e}, p(hi) = {p_hi:e}")]
    DomainTooSmall { p_lo: f64, p_hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::PathStep {
            step,
            source: Box::new(self),
        }
    }
}
