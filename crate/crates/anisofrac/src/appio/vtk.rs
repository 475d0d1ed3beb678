//! Legacy ASCII VTK output of meshes and nodal/element fields.
//!
//! The writer emits an unstructured grid with quad cells (type 9), nodal
//! `displacement` vectors and `phi` scalars, and element-level `history_max`
//! and `sigma_vm` scalars. Section order and number formatting are fixed, so
//! snapshots of frozen jobs are stable golden files.

use super::csvout::fmt_g9;
use crate::fem::mesh::Mesh;
use crate::fem::FieldState;
use std::io::{self, Write};

pub fn write_vtk<W: Write>(mesh: &Mesh, fields: &FieldState, mut out: W) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "anisofrac fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

    let nn = mesh.n_nodes();
    writeln!(out, "POINTS {nn} double")?;
    for p in &mesh.nodes {
        writeln!(out, "{} {} 0", fmt_g9(p[0]), fmt_g9(p[1]))?;
    }

    let ne = mesh.n_elems();
    writeln!(out, "CELLS {ne} {}", 5 * ne)?;
    for e in &mesh.elems {
        writeln!(out, "4 {} {} {} {}", e[0], e[1], e[2], e[3])?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(out, "9")?;
    }

    writeln!(out, "POINT_DATA {nn}")?;
    writeln!(out, "VECTORS displacement double")?;
    for n in 0..nn {
        writeln!(
            out,
            "{} {} 0",
            fmt_g9(fields.u[2 * n]),
            fmt_g9(fields.u[2 * n + 1])
        )?;
    }
    writeln!(out, "SCALARS phi double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for n in 0..nn {
        writeln!(out, "{}", fmt_g9(fields.phi[n]))?;
    }

    writeln!(out, "CELL_DATA {ne}")?;
    writeln!(out, "SCALARS history_max double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for e in 0..ne {
        let h = (0..4)
            .map(|gp| fields.gp[4 * e + gp].history)
            .fold(0.0f64, f64::max);
        writeln!(out, "{}", fmt_g9(h))?;
    }
    writeln!(out, "SCALARS sigma_vm double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for e in 0..ne {
        let vm = (0..4).map(|gp| fields.gp_vm[4 * e + gp]).sum::<f64>() / 4.0;
        writeln!(out, "{}", fmt_g9(vm))?;
    }
    Ok(())
}
