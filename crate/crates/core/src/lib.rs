//! Design engine for preplanned multi-stage platform trials: joint
//! distribution of stagewise test statistics under staggered arm entry,
//! error-controlling stopping boundaries, power-based sizing, expected
//! sample size, a separate-trials comparator, and a Monte Carlo check.

pub mod boundary;
pub mod comparator;
pub mod error;
pub mod matrix;
pub mod model;
pub mod mvn;
pub mod oc;
pub mod sim;
pub mod sizer;

pub use error::{DesignError, Result};
pub use matrix::Matrix;
pub use model::{
    build_schedule, correlation_entry, correlation_matrix, drift, information,
    schedule_from_counts, AddingTimes, AllocationSchedule, BoundaryMatrix, BoundaryShape,
    DesignSpec, OutcomeCell, PowerMode, ScenarioTheta,
};
pub use mvn::{mvn_prob, MvnResult, MvnSettings, Rectangle};
