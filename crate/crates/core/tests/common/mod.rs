//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod canny_oracle;
pub mod corpus;
pub mod fs_tree;
pub mod herding_oracle;
