//! Exact homology of metabelian groups `G = M ⋊ C` (C infinite cyclic) and of
//! their Z-, Z/p- and Q-completions.
//!
//! Everything here is pure and allocation-only; IO, file formats and the CLI
//! live in the `mgc` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod abgrp;
pub mod chainres;
pub mod cmod;
pub mod fuzz;
pub mod homfun;
pub mod linalg;
pub mod specseq;
pub mod verify;

pub use num_bigint::BigInt;
