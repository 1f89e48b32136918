//! Programs shipped with the crate.

use crate::io::parse::parse;
use crate::program::Pip;

pub const FIG1: &str = include_str!("../examples/fig1.pip");
pub const FIG2: &str = include_str!("../examples/fig2.pip");
pub const FIG1_CONFIG: &str = include_str!("../examples/fig1.cfr.json");

pub fn fig1() -> Pip {
    parse(FIG1).expect("fig1.pip is valid")
}

pub fn fig2() -> Pip {
    parse(FIG2).expect("fig2.pip is valid")
}
