//! Signed particle Monte Carlo.

pub mod ensemble;
pub mod init;
pub mod observable;
pub mod rates;
pub mod trajectory;
pub mod treap;

pub use ensemble::{run_ensemble, Correlator, EnsembleConfig, EnsembleResult};
pub use init::InitialState;
pub use observable::{ObservableTracker, PauliString};
pub use rates::{RateTable, Transition};
pub use trajectory::{run_trajectory, RunConfig, Trajectory, TrajectoryRecord, DEFAULT_OMEGA_MAX};
pub use treap::ParticleEnsemble;
