use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The straight line between two platforms dips below the ground.
    #[error("path obstructed by the Earth's curvature (h_min = {min_altitude_km:.3} km){}", hop_suffix(.hop_index))]
    ObstructedPath {
        min_altitude_km: f64,
        hop_index: Option<usize>,
    },

    #[error("waist at {requested_m:.1} m is unreachable, maximum is {max_m:.1} m")]
    UnreachableWaist { requested_m: f64, max_m: f64 },

    /// Beam wander exceeds the long-term spot, outside the validity of the weak-turbulence model.
    #[error("negative short-term spot: <r_c^2> = {wander_m2:.3e} m^2 > W_LT^2 = {long_term_m2:.3e} m^2")]
    NegativeShortTerm { wander_m2: f64, long_term_m2: f64 },

    #[error("quadrature did not converge: estimate {estimate:.6e}, error {error:.3e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("no relay count in the requested range avoids obstruction")]
    EmptyFeasibleSet,

    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("trial {trial} exceeded {clocks} clocks")]
    TrialTimeout { trial: usize, clocks: u64 },
}

fn hop_suffix(hop: &Option<usize>) -> String {
    match hop {
        Some(i) => format!(" at hop {i}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the index of the hop that produced an obstruction.
    pub fn at_hop(self, index: usize) -> Self {
        match self {
            Error::ObstructedPath {
                min_altitude_km, ..
            } => Error::ObstructedPath {
                min_altitude_km,
                hop_index: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}
