//! Toolchain for PLP quantum programs: parsing, static checks, a
//! statevector interpreter, program inversion and compilation to circuits.

pub mod analysis;
pub mod ast;
pub mod circuit;
pub mod cli;
pub mod compiler;
pub mod fuzz;
pub mod interpreter;
pub mod inverse;
pub mod parser;
pub mod state;
