//! Default tolerances. Every operation that makes a verdict takes its
//! tolerance as a parameter; these are only the defaults callers reach for.

/// Residual verdicts (symmetry conditions, cone membership, reconstruction).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative singular-value cutoff for nullspace extraction.
pub const SVD_CUTOFF: f64 = 1e-10;

/// Relative step for central finite differences: `h_i = FD_STEP * max(1, |x_i|)`.
pub const FD_STEP: f64 = 1e-6;

/// Relative agreement required between an analytic gradient and finite differences.
pub const GRADIENT_CHECK: f64 = 1e-4;

/// Noninteraction checks at registration and along trajectories.
pub const NONINTERACTION_TOL: f64 = 1e-10;

/// Number of pseudorandom unit directions in the PSD sample.
pub const PSD_RANDOM_DIRECTIONS: usize = 200;

/// Seed of the PSD direction sample.
pub const PSD_SEED: u64 = 0x00C1_5EED;
