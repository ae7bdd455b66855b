//! Exact computations with finitary matrices over the residue rings `Z/p^k`.
//!
//! The crate models `GL(n, Z/p^k)` as windows into the group of infinite invertible
//! matrices that differ from the identity in finitely many entries, and builds on it:
//! double cosets by the stabilizers `K^m = diag(1_m, *)`, the train product of
//! double cosets of tuples, coset metrics, and orbit counts.

pub mod coset;
pub mod equivalence;
pub mod error;
pub mod factor;
pub mod format;
pub mod group;
pub mod linear;
pub mod matrix;
pub mod orbits;
pub mod residue;
pub mod selftest;
pub mod train;

pub use coset::{
    coset_dist, coset_eq, localize_conjugators, normalize_to_window, CosetSpace, DistanceMethod, DoubleCoset,
    ReductionCertificate,
};
pub use equivalence::{Decision, Witness};
pub use error::{Error, Result};
pub use factor::{generator_factorization, Factor, FactorKind};
pub use group::{enumerate_gl, gl_order, GroupElement, SubgroupSpec};
pub use matrix::ResidueMatrix;
pub use orbits::{act, orbit_count, orbit_stabilization, OrbitState, StateKind, VectorFin};
pub use residue::{Modulus, Norm, Residue, RingOp};
pub use train::{
    associativity_check, circ_representative, stabilization_limit, train_coset_eq, train_product, train_product_with,
    Interleave, Stabilization, TrainCoset, TupleElement,
};
