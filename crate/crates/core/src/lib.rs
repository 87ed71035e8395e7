#![no_std]

extern crate alloc;

pub mod bundle;
pub mod classify;
pub mod corpus;
pub mod links;
pub mod patchlang;
mod porter;
pub mod recommend;
pub mod rng;
pub mod textprep;
pub mod topics;

pub use porter::stem as porter_stem;
