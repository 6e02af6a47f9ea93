//! Unconditional exact tests for comparing two binomial proportions, built
//! as 0-1 knapsack programs over convex rejection regions.
//!
//! The one-sided problem is `H0: theta_D <= g0(theta_C)` against larger
//! treatment rates. A region `d` over the outcome grid `(s_C, s_D)` is
//! chosen to maximize a power objective (uniform or beta-weighted average
//! power, or maximin power over alternative points) while the type-I error
//! stays at most `alpha` along the whole null boundary. Grid probability
//! rows and Lipschitz slack rows make that constraint finite and exact.
//!
//! Modules:
//! - [`prob`]: binomial, beta and hypergeometric numerics.
//! - [`space`]: the outcome grid, decision vectors, convexity.
//! - [`boundary`]: null boundaries, grids and the type-I rows.
//! - [`power`]: objective coefficients and alternative rows.
//! - [`ilp`]: the branch-and-bound solver and MPS export.
//! - [`knapsack`]: test construction, p-value ladders, the region cache.
//! - [`classical`]: Fisher, Boschloo, Berger-Boos and related comparators.
//! - [`eval`]: profiles, power tables, comparisons and the case study.
//!
//! ```
//! use binomial_knapsack::ilp::SolveOptions;
//! use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
//! use binomial_knapsack::prob::Design;
//!
//! let spec = KnapsackTestSpec::apk(Design::new(4, 4)?, 0.05)?;
//! let r = construct(&spec, &SolveOptions::default())?;
//! assert!(r.objective_value > 0.0);
//! # Ok::<(), binomial_knapsack::Error>(())
//! ```
//!
//! Runnable examples live in `examples/`: `fisher_merck`, `berger_boos`,
//! `apk_construct`, `mpk_construct`, `weighted_prior`, `pvalue_ladder`,
//! `type1_profile`, `power_table`, `compare_tests`, `margin_superiority`,
//! `export_mps` and `case_study`.

pub mod boundary;
pub mod classical;
pub mod error;
pub mod eval;
pub mod ilp;
pub mod knapsack;
pub mod power;
pub mod prob;
pub mod quad;
pub mod space;

pub use error::{Error, Result};
