//! Temporal question answering over long conversation histories.

pub mod bench;
pub mod corpus;
pub mod data;
pub mod eval;
pub mod gateway;
pub mod memory;
pub mod prompts;
pub mod question;
pub mod reasoner;
pub mod tel;
pub mod temporal;
