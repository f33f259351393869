//! Exact harmonic analysis over the p-adic numbers.
//!
//! The library computes with Bruhat–Schwartz functions on p-adic vector
//! spaces, oscillator (Weil) factors, the metaplectic cover of the
//! symplectic group, Cauchy Harish-Chandra kernels attached to small dual
//! pairs, rank-stratified invariant measures, and a cell-based p-adic
//! notion of wavefront sets.  Two value tracks coexist everywhere:
//!
//! * an **exact track**: cyclotomic numbers with big-rational coefficients
//!   ([`cyclo::Cyc`]), closed under the eighth roots of unity, `sqrt(p)`,
//!   and every character sum the library forms, so that identities are
//!   decided bit-for-bit;
//! * a **float track**: complex doubles with a fixed `1e-9` tolerance,
//!   used for rendering and for data that enters through float JSON.
//!
//! Integrals over the (non-compact) field are improper: shell sums that
//! must vanish identically for three consecutive shells before the
//! accumulated value is accepted, with the stabilization radius reported
//! alongside the value.

pub mod cartan;
pub mod cyclo;
pub mod dualpair;
pub mod error;
pub mod gauss;
pub mod grid;
pub mod linalg;
pub mod measures;
pub mod microlocal;
pub mod padic;
pub mod pairs;
pub mod report;
pub mod sample;
pub mod schwartz;
pub mod suite;
pub mod symplectic;

pub use cyclo::{Cyc, CycSum, Rat, Value};
pub use error::{Error, Result};
pub use grid::{sphere_facets, CosetGrid, SphereCells};
pub use linalg::QMat;
pub use padic::{PPhase, PadicScalar};
pub use schwartz::SBFunction;
