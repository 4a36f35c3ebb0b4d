// SPDX-License-Identifier: Apache-2.0

pub mod error;
pub mod linalg;
pub mod local;
pub mod pauli;
pub mod encoding;
pub mod schedule;
pub mod dynamics;
pub mod spectrum;
pub mod optimize;
pub mod cd;
pub mod runner;

pub use error::{Error, Result};
