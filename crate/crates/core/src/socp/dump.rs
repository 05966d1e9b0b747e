use std::fmt::Write as _;

use super::{Cone, ConeProgram};

/// Renders a program as plain text for cross-checking with external solvers.
///
/// Layout, one record per line:
///
/// ```text
/// vars <n>
/// rows <m>
/// blocks <count>
/// objective <j>:<q_j> ...            (nonzero coefficients only)
/// block <index> <ZERO|NONNEG|SOC|RSOC> <dim>
/// row <r> <c_r> <j>:<a_rj> ...      (dim lines per block)
/// ```
///
/// Each block row states `c_r + Σ a_rj x_j`, and the block vector must lie in
/// the named cone. Numbers use Rust's shortest round-trip float formatting.
pub fn write_standard_form(program: &ConeProgram) -> String {
    let mut out = String::new();
    writeln!(out, "vars {}", program.num_vars).unwrap();
    writeln!(out, "rows {}", program.num_rows()).unwrap();
    writeln!(out, "blocks {}", program.blocks.len()).unwrap();
    out.push_str("objective");
    for (j, q) in program.objective.iter().enumerate() {
        if *q != 0.0 {
            write!(out, " {j}:{q:?}").unwrap();
        }
    }
    out.push('\n');
    for (i, block) in program.blocks.iter().enumerate() {
        let tag = match block.cone {
            Cone::Zero(_) => "ZERO",
            Cone::Nonneg(_) => "NONNEG",
            Cone::Soc(_) => "SOC",
            Cone::Rsoc(_) => "RSOC",
        };
        writeln!(out, "block {i} {tag} {}", block.cone.dim()).unwrap();
        for (r, (row, c)) in block.rows.iter().zip(&block.constant).enumerate() {
            write!(out, "row {r} {c:?}").unwrap();
            for (j, a) in row {
                write!(out, " {j}:{a:?}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}
