//! Exact computations for permutation-twisted modules of lattice vertex
//! operator algebras.
//!
//! For an even positive-definite lattice `K` and the cyclic permutation `ν`
//! of the `k` tensor factors of `V_K^{⊗k}`, the crate builds the twisted
//! module in two ways: as a lattice-twisted module `S[ν] ⊗ U_T` over
//! `V_L`, `L = K^{⊕k}` (the "space-time" side), and as the module `V_K`
//! with operators conjugated by the change of variables `E_f` (the
//! "worldsheet" side). The map [`isomap::F`] identifies the two.
//!
//! All scalars are exact; see [`exact`].

pub mod exact;
pub mod lattice;
pub mod cocycle;
pub mod fock;
pub mod coeffs;
pub mod vertexops;
pub mod isomap;
pub mod characters;
pub mod cli;
