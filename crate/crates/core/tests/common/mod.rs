#![allow(dead_code)]

#[path = "../../examples/common/toy.rs"]
pub mod toy;

pub mod golden;
