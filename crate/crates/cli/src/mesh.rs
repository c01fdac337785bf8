//! Wavefront OBJ export of a reconstructed polyhedron.

use std::fmt::Write as _;

use koebe_core::koebe::{EuclideanPolyhedron, KoebeCapSystem};

/// Polyhedron vertices and faces (in input cycle order), followed by the edge
/// tangency points as a separate object holding a point group.
pub fn to_obj(system: &KoebeCapSystem, poly: &EuclideanPolyhedron) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "o polyhedron");
    for v in &poly.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for face in system.combinatorics().faces() {
        let idx: Vec<String> = face.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(out, "f {}", idx.join(" "));
    }
    let _ = writeln!(out, "o tangency_points");
    let _ = writeln!(out, "g tangency_points");
    let base = poly.vertices.len();
    for t in &poly.tangency_points {
        let _ = writeln!(out, "v {} {} {}", t.x, t.y, t.z);
    }
    let idx: Vec<String> = (0..poly.tangency_points.len())
        .map(|k| (base + k + 1).to_string())
        .collect();
    let _ = writeln!(out, "p {}", idx.join(" "));
    out
}

/// Vertex positions read back from OBJ text (first object only).
pub fn obj_vertices(text: &str) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with("o ") && !out.is_empty() {
            break;
        }
        if let Some(rest) = line.strip_prefix("v ") {
            let xs: Vec<f64> = rest
                .split_whitespace()
                .filter_map(|s| s.parse().ok())
                .collect();
            if xs.len() == 3 {
                out.push([xs[0], xs[1], xs[2]]);
            }
        }
    }
    out
}
