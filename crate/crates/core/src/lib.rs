// SPDX-License-Identifier: Apache-2.0

pub mod acceptance;
pub mod electron_phonon;
pub mod error;
pub mod flow;
pub mod matrix;
pub mod pauli;
pub mod quadratic;
pub mod scenario;
pub mod spins;
pub mod three_boson;
