//! Exact closed-system relaxation of a two-level system coupled to a
//! two-band environment, and the rate theory that predicts it.
//!
//! The crate is organized as:
//!
//! * [`model`]: parameters, Hamiltonian, random coupling, initial states;
//! * [`propagator`]: exact evolution and the truncated Dyson step;
//! * [`observables`]: sector probabilities, purities, correlation measures;
//! * [`hsa`]: rate constant, regime conditions, rate-equation solution and
//!   Monte-Carlo checks of the averaged step quantities;
//! * [`experiment`]: runs, size sweeps and their CSV/JSON output.
//!
//! Data-parallel loops go through [`par`]; disabling the default `parallel`
//! feature makes everything sequential with identical results.

pub mod error;
pub mod experiment;
pub mod fit;
pub mod hsa;
pub mod model;
pub mod observables;
pub mod par;
pub mod propagator;
pub mod seed;

pub use error::{Error, Result};
pub use model::{build_hamiltonian, initial_state, sample_coupling, CouplingKind, Hamiltonian, ModelParams, PureState};
pub use observables::{correlation_measures, reduced_states, sector_probabilities, ObservableRecord};
pub use par::Execution;
pub use propagator::{build_u1, dyson_step, evolve_exact, DysonOperators, Propagator, Trajectory};
