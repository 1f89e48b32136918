//! Canonical program text. `parse(print(p)) == p` for every valid program.

use std::fmt::Write;

use num::One;

use crate::program::{GeneralTransition, Pip};

pub fn print_program(p: &Pip) -> String {
    let mut out = String::new();
    if !p.program_vars.is_empty() {
        let vs: Vec<&str> = p.program_vars.iter().map(|v| v.name()).collect();
        writeln!(out, "vars {};", vs.join(", ")).unwrap();
    }
    writeln!(out, "start {};", p.initial).unwrap();
    let ls: Vec<&str> = p.locations.iter().map(|l| l.name()).collect();
    writeln!(out, "locations {};", ls.join(", ")).unwrap();
    for g in &p.gts {
        out.push('\n');
        print_gt(&mut out, g);
    }
    out
}

fn print_gt(out: &mut String, g: &GeneralTransition) {
    if g.is_singleton() && g.members[0].name == g.name && g.members[0].prob.is_one() {
        let t = &g.members[0];
        write!(out, "trans {}: {} -> {}", t.name, g.source, t.target).unwrap();
        if !g.guard.is_true() {
            write!(out, " when {}", g.guard).unwrap();
        }
        if !t.update.is_identity() {
            write!(out, " {{ {} }}", t.update).unwrap();
        }
        out.push_str(";\n");
        return;
    }
    writeln!(out, "gt {} {{", g.name).unwrap();
    writeln!(out, "    from {};", g.source).unwrap();
    if !g.guard.is_true() {
        writeln!(out, "    guard {};", g.guard).unwrap();
    }
    for t in &g.members {
        write!(out, "    branch {} p={}", t.name, t.prob).unwrap();
        if !t.update.is_identity() {
            write!(out, " {{ {} }}", t.update).unwrap();
        }
        writeln!(out, " -> {};", t.target).unwrap();
    }
    out.push_str("}\n");
}
