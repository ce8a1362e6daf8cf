//! Joint local laws of the number-of-prime-factors function over values of
//! coprime irreducible integer polynomials.
//!
//! The crate is `no_std` (it needs `alloc`) and purely computational:
//!
//! * [`polyarith`]: exact integer polynomials, resultants, discriminants and
//!   validation of polynomial systems.
//! * [`rootcount`]: roots modulo primes, prime powers and composite moduli.
//! * [`asymptotics`]: Mertens-type profiles, `phi_rho` and the pairwise
//!   independence bound together with the theorem auditor.
//! * [`window`]: segmented computation of `omega(Q_j(n))` over short
//!   intervals, joint histograms, canonical decompositions and class audits.
//! * [`selberg`]: Selberg Lambda-squared upper-bound sieve for polynomial
//!   congruence sets.
//!
//! Throughout, `log2 x` means the iterated logarithm `ln ln x`, never the
//! base-2 logarithm.
#![cfg_attr(not(test), no_std)]
// `!(a > b)` is how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod asymptotics;
pub mod polyarith;
pub mod primes;
pub mod rootcount;
pub mod selberg;
pub mod window;

pub use asymptotics::{MertensProfile, TheoremParams, VerifyReport, YRule};
pub use polyarith::{IntPoly, PolyError, PolySystem, SystemError};
pub use rootcount::{RootConfig, RootError, RootSet};
pub use selberg::{SieveInstance, SieveResult};
pub use window::{FactorizationRecord, JointHistogram, WindowSpec};
