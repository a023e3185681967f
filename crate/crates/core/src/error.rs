use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state space too large: q^sites = {q}^{sites} = {size} exceeds cap {cap}")]
    StateSpaceTooLarge {
        q: u8,
        sites: usize,
        size: u128,
        cap: u64,
    },

    #[error("site index {site} outside volume of {volume} sites")]
    SiteOutsideVolume { site: usize, volume: usize },

    #[error("local state {value} outside alphabet of size {q}")]
    StateOutsideAlphabet { value: u8, q: u8 },

    #[error("exhaustive scan too large: {work} work units exceed cap {cap}")]
    ScanTooLarge { work: u128, cap: u64 },

    #[error(
        "generator is reducible: state {inside} belongs to a closed class of {class_size} states \
         (first members {class_head:?}) that never reaches state {outside}"
    )]
    Reducible {
        inside: u64,
        outside: u64,
        class_size: usize,
        class_head: Vec<u64>,
    },

    #[error("negative time {t}")]
    NegativeTime { t: f64 },

    #[error("negative resolvent parameter {lambda}")]
    NegativeResolventParameter { lambda: f64 },

    #[error("measure entry {value:e} at state {state} is not strictly positive")]
    NonPositiveMeasureEntry { state: u64, value: f64 },

    #[error("value {value} outside the domain {domain} of Phi = {phi}")]
    PhiDomain {
        value: f64,
        domain: String,
        phi: String,
    },

    #[error(
        "generator/measure pair is not reversible: detailed-balance residual {residual:.3e} at \
         state pair ({x}, {y}); use the tail-fit decay-rate estimate for non-reversible dynamics"
    )]
    NotReversible { residual: f64, x: u64, y: u64 },

    #[error("update region {region:?} is not listed in the rate family")]
    UnlistedRegion { region: Vec<usize> },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("{0}")]
    Invalid(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
