#![allow(dead_code)]

pub mod bfs;
pub mod checks;
pub mod corpus;
pub mod gradcheck;
pub mod vi;
