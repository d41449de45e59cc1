//! The ASCII `SHRNK` mesh format.
//!
//! ```text
//! SHRNK n N V S B
//! <V lines of N floats>
//! <S lines of n+1 vertex indices, 0-based>
//! <B lines of n vertex indices, one boundary facet each>
//! ```
//! Floats are written with 17 significant digits so a write/read cycle is exact.

use std::io::{BufRead, Write};

use nalgebra::Vector3;

use crate::error::{Error, MeshError, Result};
use crate::mesh::DiscreteHypersurface;

pub fn write_shrnk<W: Write>(mesh: &DiscreteHypersurface, mut out: W) -> std::io::Result<()> {
    let n = mesh.dim();
    let ambient = mesh.ambient_dim();
    writeln!(
        out,
        "SHRNK {} {} {} {} {}",
        n,
        ambient,
        mesh.vertex_count(),
        mesh.simplex_count(),
        mesh.boundary_facet_count()
    )?;
    for v in mesh.vertices() {
        let coords: Vec<String> = v.iter().take(ambient).map(|c| format!("{c:.16e}")).collect();
        writeln!(out, "{}", coords.join(" "))?;
    }
    for simplex in mesh.simplices() {
        writeln!(out, "{}", join(simplex))?;
    }
    for facet in mesh.boundary_facets() {
        writeln!(out, "{}", join(facet))?;
    }
    Ok(())
}

fn join(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn parse_shrnk<R: BufRead>(input: R) -> Result<DiscreteHypersurface> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, Ok(text))) => Ok((no, text)),
            Some((no, Err(e))) => Err(MeshError::Malformed { line: no, reason: e.to_string() }.into()),
            None => Err(MeshError::Malformed { line: 0, reason: format!("unexpected end of file, expected {what}") }.into()),
        }
    };

    let (_, header) = next_line("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = |reason: &str| -> Error { MeshError::MalformedHeader { line: 1, reason: reason.into() }.into() };
    if fields.len() != 6 || fields[0] != "SHRNK" {
        return Err(bad_header("expected `SHRNK n N V S B`"));
    }
    let nums: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad_header("counts must be non-negative integers"))?;
    let (n, ambient, nv, ns, nb) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    if !(1..=2).contains(&n) {
        return Err(bad_header("n must be 1 or 2"));
    }
    if ambient != n + 1 {
        return Err(bad_header("N must equal n + 1"));
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, text) = next_line("vertex")?;
        let coords: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| MeshError::Malformed { line: no, reason: format!("bad coordinate: {e}") })?;
        if coords.len() != ambient || coords.iter().any(|c| !c.is_finite()) {
            return Err(MeshError::Malformed { line: no, reason: format!("expected {ambient} finite coordinates") }.into());
        }
        let mut v = Vector3::zeros();
        for (i, c) in coords.iter().enumerate() {
            v[i] = *c;
        }
        vertices.push(v);
    }

    let first_simplex_line = 2 + nv;
    let mut simplices = Vec::with_capacity(ns * (n + 1));
    for _ in 0..ns {
        let (no, text) = next_line("simplex")?;
        simplices.extend(parse_indices(no, &text, n + 1, nv)?);
    }
    let mut boundary = Vec::with_capacity(nb * n);
    for _ in 0..nb {
        let (no, text) = next_line("boundary facet")?;
        boundary.extend(parse_indices(no, &text, n, nv)?);
    }
    DiscreteHypersurface::new_with_lines(n, vertices, simplices, boundary, |s| first_simplex_line + s)
}

fn parse_indices(line: usize, text: &str, arity: usize, count: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = text
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| MeshError::Malformed { line, reason: format!("bad index: {e}") })?;
    if idx.len() != arity {
        return Err(MeshError::Malformed { line, reason: format!("expected {arity} indices") }.into());
    }
    if let Some(&index) = idx.iter().find(|&&i| i >= count) {
        return Err(MeshError::IndexOutOfRange { line, index, count }.into());
    }
    Ok(idx)
}
