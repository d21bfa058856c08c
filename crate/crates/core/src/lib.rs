//! Four-party replicated secret sharing engine: ring arithmetic, sharing,
//! transport with accounting, linear and nonlinear protocols, oblivious array
//! access, graph preprocessing, secure GCN training/inference and a cloud
//! cost estimator.

pub mod bench;
pub mod codec;
pub mod cost;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod oracle;
pub mod params;
pub mod party;
pub mod protocols;
pub mod ring;
pub mod session;
pub mod sharing;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use params::{CmpWindow, DreluParams, IterParams, ProtocolParams};
pub use party::{Party, SessionSeeds};
pub use ring::{decode_fixed, encode_fixed, FixedPoint, Modulus, RingParams, RingValue, Z64};
pub use session::{run_party, run_session, Backend, PartyRun, SessionConfig, SessionOutput};
pub use sharing::{AddShare, RepShare, SeededPrg};
pub use tensor::SecureTensor;
pub use transport::{tag, CommStats, NetProfile, PartyId};
