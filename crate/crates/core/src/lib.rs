//! Joint AP precoding and self-sustainable IRS mode scheduling for multiuser
//! MISO downlink sum-rate maximization.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] draws scenario geometry and Rician channels.
//! * [`system`] evaluates rates, harvested power and constraint slacks.
//! * [`convex`] is a small barrier interior-point solver for the two
//!   subproblem shapes used by the alternating scheme.
//! * [`precoder`] and [`irs`] are the two SCA subproblem loops.
//! * [`schemes`] wires them into the proposed alternating algorithm and the
//!   comparison baselines.
//! * [`oracle`] holds brute-force and finite-difference reference checks.
//!
//! All numerics are generic over [`Real`]; the `*64` aliases below fix the
//! scalar to `f64`, which is what the optimizers are tuned for.

pub mod channel;
pub mod convex;
pub mod error;
pub mod irs;
pub mod oracle;
pub mod precoder;
pub mod scalar;
pub mod schemes;
pub mod system;

pub use error::{Error, Result};
pub use scalar::{abs2, cis, inner, lit, log2, norm2, outer, to_f64, CMatrix, CVector, Cx, Real};

pub type Channel64 = channel::ChannelRealization<f64>;
pub type Schedule64 = system::IrsSchedule<f64>;
pub type Precoders64 = system::PrecoderSet<f64>;
