#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod hypothesis;
pub mod kdtree;
pub mod knn;
pub mod mad;
pub mod rng;
pub mod scenario;

pub use error::Error;
