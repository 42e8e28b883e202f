//! Harmonic analysis on projective toric Kahler varieties built from
//! lattice polytopes.
//!
//! The pipeline runs from a single geometric input, an integral convex
//! polytope P in the positive quadrant of R^m (m <= 3):
//!
//! - [`polytope`]: V/H representations, lattice point enumeration, the
//!   Delzant determinant test, exact volumes and Ehrhart counts.
//! - [`partition`]: exact counts of length-N lattice-point sequences with a
//!   prescribed sum; the expansion coefficients of kernel powers.
//! - [`geometry`]: the convex log potential on the open orbit, moment map,
//!   Hessian volume density, lifted monomials, and homogenized weights.
//! - [`norming`]: squared L^2 norms of monomial sections by Laplace-window
//!   quadrature, with exact closed forms on projective space.
//! - [`kernels`]: Szego kernel evaluation, the diagonal Fourier multiplier
//!   with eigenvalues `1 / (P_N Q_N)`, the exact factorization check
//!   against the pulled-back projective kernel power, and symbol ratio
//!   asymptotics along interior rays.
//! - [`characters`]: torus characters of the section spaces via the exact
//!   lattice sum, the kernel trace integral, and the leading-order
//!   oscillatory approximation.
//!
//! Everything combinatorial is exact (big integers, big rationals);
//! floating point enters only at the kernel and quadrature boundary.
//!
//! ```
//! use toric_szego::{
//!     multiplier_table, norm_table, partition_counts, LatticePolytope, QuadratureConfig,
//! };
//!
//! let square = LatticePolytope::from_vertices(
//!     2,
//!     vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
//! )?;
//! let counts = partition_counts(&square, 2)?;
//! assert_eq!(counts.total().to_string(), "16"); // 4 lattice points, length-2 sequences
//!
//! let norms = norm_table(&square, 2, &QuadratureConfig::default())?;
//! let mult = multiplier_table(&counts, &norms)?;
//! assert!(mult.excluded().is_empty()); // the square is Delzant
//! # Ok::<(), toric_szego::Error>(())
//! ```

pub mod characters;
pub mod error;
pub mod geometry;
pub mod kernels;
mod linalg;
pub mod norming;
pub mod partition;
pub mod polytope;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{homogenize, HomogenizedWeight, KahlerPotential, OrbitPoint};
pub use kernels::{
    multiplier_table, projective_szego, pullback_base, pullback_kernel_n, random_orbit_points,
    symbol_ratio, szego_kernel, verify_factorization, verify_factorization_with,
    KernelReport, KernelSample,
    MultiplierEntry, MultiplierTable, SymbolRatioPoint,
};
pub use norming::{
    closed_form_projective_norm, monomial_norm, norm_table, total_volume_check, NormEntry,
    NormMethod, NormTable, QuadratureConfig, VolumeCheck,
};
pub use partition::{
    decomposability_check, partition_counts, power_expansion_coefficients, PartitionTable,
};
pub use polytope::{
    max_degree, DelzantCertificate, Facet, LatticePointSet, LatticePolytope, VertexCheck,
};

pub use characters::{
    character_exact, character_leading, character_trace, character_value, CharacterValue,
    PathValue,
};
