//! Rate-1/2 binary turbo codes with random, high-spread and block
//! interleavers, with and without the odd-even constraint.
//!
//! The crate covers the pieces needed to study how the interleaver shapes
//! performance: constituent trellises ([`poly`]), interleaver construction and
//! metrics ([`interleave`]), the punctured encoder and log-MAP decoder
//! ([`codec`]), the BPSK/AWGN channel ([`channel`]), the low-weight distance
//! spectrum ([`spectrum`]), union-bound asymptotes ([`bounds`]) and the
//! experiment drivers behind the command-line tool ([`harness`]).

pub mod bounds;
pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod interleave;
pub mod plot;
pub mod poly;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
