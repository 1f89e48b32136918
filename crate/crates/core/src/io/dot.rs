//! Graphviz export. Members of a general transition with several branches
//! are drawn dashed and share a colour.

use std::fmt::Write;

use crate::program::Pip;

const PALETTE: &[&str] = &["purple", "darkorange", "teal", "crimson", "olive", "navy"];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

pub fn print_dot(p: &Pip) -> String {
    let mut out = String::from("digraph pip {\n");
    for l in &p.locations {
        let shape = if *l == p.initial { "doublecircle" } else { "circle" };
        writeln!(out, "    {} [shape={shape}];", quote(l.name())).unwrap();
    }
    let mut colour = 0;
    for g in &p.gts {
        let style = if g.is_singleton() {
            String::new()
        } else {
            let c = PALETTE[colour % PALETTE.len()];
            colour += 1;
            format!(", style=dashed, color={c}")
        };
        for t in &g.members {
            let mut label = t.name.clone();
            if !g.guard.is_true() {
                write!(label, "\\n{}", g.guard).unwrap();
            }
            if !g.is_singleton() {
                write!(label, "\\np = {}", t.prob).unwrap();
            }
            if !t.update.is_identity() {
                write!(label, "\\n{}", t.update).unwrap();
            }
            writeln!(
                out,
                "    {} -> {} [label={}{style}];",
                quote(g.source.name()),
                quote(t.target.name()),
                quote(&label)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
