//! XOR-based source routing.
//!
//! A source encodes a whole path as one label `P` such that each router
//! recovers its own output interface as `P · M_r` over GF(2), where `M_r` is
//! a matrix chosen from the router's private filter bank. Routers never
//! rewrite the header.

pub mod analysis;
pub mod deployment;
pub mod gf2;
pub mod netmodel;
pub mod pathencoder;
pub mod routerplane;
pub mod sim;
