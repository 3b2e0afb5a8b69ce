//! Simulation and error-floor analysis of asynchronous contention resolution
//! diversity ALOHA with successive interference cancellation.
//!
//! Time is measured in packet durations. Each user sends several replicas of
//! one packet inside its own virtual frame. A sliding-window receiver decodes
//! replicas whose average mutual information under interference reaches the
//! code rate, then cancels every replica of each decoded user.
//!
//! * [`model`]: system parameters, degree distributions and transmissions.
//! * [`traffic`]: Poisson arrivals and replica placement.
//! * [`channel`]: interference timelines and mutual-information decodability.
//! * [`receiver`]: window-based iterative interference cancellation.
//! * [`floor`]: the analytic loss-rate floor and its pattern catalog.
//! * [`harness`]: seeded Monte Carlo sweeps and CSV output.

pub mod channel;
pub mod floor;
pub mod harness;
pub mod model;
pub mod receiver;
pub mod traffic;

pub use channel::{build_timeline, symbol_mutual_information, InterferenceTimeline};
pub use floor::{plr_floor, FloorError, FloorModel, FloorParams, UcpDescriptor};
pub use harness::{Experiment, ExperimentConfig, HarnessError, PlrCurve};
pub use model::{DegreeDistribution, ModelError, SystemConfig, TimeInterval, UserTransmission};
pub use receiver::{run_receiver, Outcome, Receiver, ReceiverResult, SicOrder};
pub use traffic::{generate_trace, TrafficError, TrafficTrace};
