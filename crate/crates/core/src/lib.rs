//! Hybrid analog/digital beamforming for wideband mmWave MIMO-OFDM links.
//!
//! The crate covers the clustered channel generator ([`channel`]), dense
//! complex kernels ([`numerics`]), single-user hybrid transceiver design
//! ([`hybrid_su`]), multiuser MISO precoding ([`mu_miso`]) and rate
//! evaluation with a paired Monte Carlo harness ([`eval`]).

pub mod channel;
pub mod error;
pub mod eval;
pub mod hybrid_su;
pub mod mu_miso;
pub mod numerics;

pub use channel::{ChannelRealization, ClusterParams, CellParams, MultiuserChannel, PathSet};
pub use error::{BeamError, Result};
pub use hybrid_su::{ArchitectureSpec, HybridBeamformer, Structure, StructureMask};
pub use mu_miso::{MuArchitecture, MuPrecoder};
pub use numerics::{CMatrix, CVector, PhaseResolution, C64};
