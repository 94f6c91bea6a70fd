//! Quantum states over time for finite-dimensional systems.
//!
//! This crate models quantum processes (a channel together with an input
//! state) and the temporal correlations they generate:
//!
//! - [`linalg`]: dense complex matrices with a Hermitian eigensolver sized
//!   for small operator algebras,
//! - [`channel`]: Kraus channels, Choi/Jamiołkowski transforms and CPTP
//!   validation,
//! - [`observable`]: Hermitian observables, spectral projectors and
//!   light-touch bases,
//! - [`spacetime`]: spatiotemporal products and two-time expectation values,
//! - [`bayes`]: Bayesian inverses of processes, operational time-symmetry
//!   checks and the Petz recovery map,
//! - [`adc`]: the amplitude-damping worked example (closed-form inverse,
//!   expectation-value tables, Bloch-ball image data, robustness region),
//! - [`circuit`]: measurement circuits realizing the forward and reversed
//!   protocols, simulated exactly or with sampled shots.

pub mod adc;
pub mod bayes;
pub mod channel;
pub mod circuit;
pub mod linalg;
pub mod observable;
pub mod random;
pub mod spacetime;

pub use channel::{ChoiMap, DensityMatrix, KrausChannel, Process};
pub use linalg::{Complex, Matrix, SpectralDecomposition};
pub use observable::{LightTouchBasis, Observable};
pub use spacetime::StateOverTime;

/// Default relative tolerance for Hermiticity, positivity and trace checks.
///
/// All quantities handled by this crate are O(1), so a single global value
/// is adequate; every check that uses it also accepts an explicit override.
pub const EPS_NUM: f64 = 1e-9;
