#![no_std]
extern crate alloc;

pub mod bounds;
pub mod error;
pub mod families;
pub mod measure;
pub mod quad;
pub mod roots;
pub mod rng;
pub mod simulate;
