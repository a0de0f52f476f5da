//! Numerical spectral toolkit for two-dimensional Schrödinger operators with
//! folded ("super honeycomb") lattice potentials: the fourfold Γ-point
//! degeneracy and its double Dirac cone, the bifurcation coefficients that
//! govern gap opening under folding-breaking perturbations, the effective
//! one-dimensional Dirac model across a domain wall, the ribbon edge spectrum
//! with its two gapped edge states, and the local topological diagnostics
//! (winding charges and parities) that tell the two perturbation signs apart.

pub mod bessel;
pub mod bifurcation;
pub mod bloch;
pub mod dirac;
pub mod lattice;
pub mod linalg;
pub mod par;
pub mod potential;
pub mod ribbon;
pub mod topo;
pub mod vec2;

pub use bloch::{DegenerateQuartet, PlaneWaveBasis};
pub use lattice::{LatticeBasis, RationalEdge};
pub use potential::FourierPotential;
pub use vec2::Vec2;
