#![allow(dead_code)]

pub mod brute;
pub mod clusters;
pub mod fuzz;
pub mod invariants;
