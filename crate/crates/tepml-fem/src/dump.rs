//! Legacy-VTK text dump of a mesh and a nodal field: unstructured grid with
//! hexahedra (cell type 12), node coordinates, and the real and imaginary
//! parts of the four components as point data. Unused nodes are written too,
//! so point indices equal mesh node indices.

use crate::mesh::HexMesh;
use crate::problem::DiscreteField;
use std::io::{self, Write};

const NAMES: [&str; 4] = ["u1", "u2", "u3", "p"];

pub fn write_vtk(out: &mut impl Write, mesh: &HexMesh, field: Option<&DiscreteField>, title: &str) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for n in 0..mesh.n_nodes() {
        let x = mesh.coord(n);
        writeln!(out, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    let cells: Vec<_> = mesh.cells().collect();
    writeln!(out, "CELLS {} {}", cells.len(), 9 * cells.len())?;
    // VTK hexahedron order: bottom face counter-clockwise, then top face
    const ORDER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];
    for c in &cells {
        write!(out, "8")?;
        for k in ORDER {
            write!(out, " {}", c.nodes[k])?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(out, "12")?;
    }
    if let Some(f) = field {
        writeln!(out, "POINT_DATA {}", mesh.n_nodes())?;
        for (c, name) in NAMES.iter().enumerate() {
            for (part, get) in [("re", (|z: num_complex::Complex64| z.re) as fn(_) -> f64), ("im", |z| z.im)] {
                writeln!(out, "SCALARS {name}_{part} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for v in &f.values {
                    writeln!(out, "{:e}", get(v[c]))?;
                }
            }
        }
    }
    Ok(())
}
