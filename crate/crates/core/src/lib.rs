pub mod constraint;
pub mod corpus;
pub mod entail;
pub mod farkas;
pub mod io;
pub mod poly;
pub mod program;
pub mod simplex;
pub mod abstraction;
pub mod cfr;
pub mod invariants;
pub mod semantics;
pub mod bounds;
pub mod gen;
