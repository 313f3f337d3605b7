//! Independent oracles shared by integration tests.
#![allow(dead_code)]

pub mod niw_quadrature;
pub mod toy_posterior;
