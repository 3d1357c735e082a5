//! Cell DTX/DRX energy saving: a TTI-level downlink cell simulator with
//! sleep-mode power accounting, and a contextual-bandit DQN agent that picks
//! the DTX cycle length and on-duration of each cell.

pub mod actionspace;
pub mod agent;
pub mod cellsim;
pub mod harness;
pub mod metrics;
pub mod neural;
pub mod rewards;
pub mod traffic;

pub use actionspace::{ActionSpace, DtxAction, DtxConfig};
pub use agent::{Experience, ReplayBuffer, Trainer};
pub use cellsim::{CellScenario, SimResult};
pub use metrics::{Observation, PeriodMetrics};
pub use rewards::RewardSpec;
