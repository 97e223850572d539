//! CSV tables with 17 significant digits.

use std::fmt::Write;

use crate::mesh::StencilMesh;
use crate::profiles::{PlanarProfile, RadialProfile};

/// Round-trip formatting used in every table.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn table<'a>(header: &str, rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&number(*v));
        }
        out.push('\n');
    }
    out
}

pub fn profile_csv(profile: &PlanarProfile) -> String {
    let rows: Vec<[f64; 4]> = profile.points().iter().map(|p| [p.s, p.y, p.z, p.phi]).collect();
    table("s,y,z,phi", rows.iter().map(|r| &r[..]))
}

pub fn bowl_csv(bowl: &RadialProfile) -> String {
    table("r,b,bp", bowl.samples().iter().map(|r| &r[..]))
}

/// Node coordinates and values in mesh order (row-major for rectangles).
pub fn field_csv(mesh: &StencilMesh, values: &[f64]) -> String {
    let mut out = String::from("x,y,u\n");
    for (n, v) in mesh.nodes.iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", number(n.x), number(n.y), number(*v));
    }
    out
}
