//! Snapshot serialization for forms and field bundles.
//!
//! The binary layout is deliberately plain so other tools can read it:
//!
//! ```text
//! magic   4 bytes  b"DFRM"
//! version u32 LE   1
//! n       u32 LE   mesh dimension
//! degree  u32 LE   form degree
//! per axis: cells u64 LE, spacing f64 LE, periodic u8
//! ncomp   u32 LE   number of components
//! then each component as row-major f64 LE over the mesh nodes
//! ```
//!
//! State checkpoints (`b"FST1"`) concatenate named sections in a fixed
//! order; each section is a form or vector field in the same layout minus
//! the mesh header, which is written once.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::ArrayD;

use crate::error::{Error, Result};
use crate::form::{DiscreteForm, VectorField};
use crate::mesh::GridMesh;

const FORM_MAGIC: &[u8; 4] = b"DFRM";
const STATE_MAGIC: &[u8; 4] = b"FST1";
const VERSION: u32 = 1;

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn write_mesh(w: &mut impl Write, mesh: &GridMesh) -> Result<()> {
    write_u32(w, mesh.dim() as u32)?;
    for ax in 0..mesh.dim() {
        write_u64(w, mesh.dims()[ax] as u64)?;
        write_f64(w, mesh.spacing()[ax])?;
        w.write_all(&[mesh.periodic()[ax] as u8])?;
    }
    Ok(())
}

fn read_mesh(r: &mut impl Read) -> Result<Arc<GridMesh>> {
    let n = read_u32(r)? as usize;
    if !(n == 2 || n == 3) {
        return Err(Error::Snapshot(format!("mesh dimension {n}")));
    }
    let mut dims = Vec::with_capacity(n);
    let mut spacing = Vec::with_capacity(n);
    let mut periodic = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(read_u64(r)? as usize);
        spacing.push(read_f64(r)?);
        let mut b = [0u8];
        r.read_exact(&mut b)?;
        periodic.push(b[0] != 0);
    }
    GridMesh::new(dims, spacing, periodic)
}

fn write_array(w: &mut impl Write, arr: &ArrayD<f64>) -> Result<()> {
    // Components are allocated row-major; fall back to an iterator copy if a
    // view ever arrives in another layout.
    if let Some(slice) = arr.as_slice() {
        let mut buf = Vec::with_capacity(slice.len() * 8);
        for v in slice {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    } else {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array(r: &mut impl Read, mesh: &GridMesh) -> Result<ArrayD<f64>> {
    let count = mesh.node_total();
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    let data: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ArrayD::from_shape_vec(mesh.node_shape(), data)
        .map_err(|e| Error::Snapshot(format!("component shape: {e}")))
}

/// Write one form to a binary snapshot file.
pub fn write_form(path: &Path, a: &DiscreteForm) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FORM_MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_mesh(&mut w, a.mesh())?;
    write_u32(&mut w, a.degree() as u32)?;
    write_u32(&mut w, a.components().len() as u32)?;
    for c in a.components() {
        write_array(&mut w, c)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a form snapshot, reconstructing its mesh.
pub fn read_form(path: &Path) -> Result<DiscreteForm> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FORM_MAGIC {
        return Err(Error::Snapshot("bad magic, not a form snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let mesh = read_mesh(&mut r)?;
    let degree = read_u32(&mut r)? as usize;
    let ncomp = read_u32(&mut r)? as usize;
    if ncomp != crate::alt::binomial(mesh.dim(), degree) {
        return Err(Error::Snapshot(format!(
            "degree {degree} with {ncomp} components"
        )));
    }
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        comps.push(read_array(&mut r, &mesh)?);
    }
    DiscreteForm::from_components(&mesh, degree, comps)
}

/// CSV dump of a form for small grids: node coordinates, then one column
/// per component labeled by its multi-index. Floats use Rust's shortest
/// round-trip formatting, so rereads are exact.
pub fn write_form_csv(path: &Path, a: &DiscreteForm) -> Result<()> {
    let mesh = a.mesh();
    let n = mesh.dim();
    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = (0..n).map(|ax| format!("x{ax}")).collect();
    for idx in a.multi_indices() {
        let label: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        header.push(format!("c{}", label.join("")));
    }
    writeln!(w, "{}", header.join(","))?;
    let counts = mesh.node_counts();
    let mut idx = vec![0usize; n];
    loop {
        let mut row: Vec<String> = (0..n).map(|ax| format!("{}", mesh.coord(ax, idx[ax]))).collect();
        for c in a.components() {
            row.push(format!("{}", c[idx.as_slice()]));
        }
        writeln!(w, "{}", row.join(","))?;
        let mut ax = n;
        loop {
            if ax == 0 {
                w.flush()?;
                return Ok(());
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < counts[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// A named bundle of fields written as one checkpoint.
pub struct StateSnapshot<'a> {
    pub time: f64,
    pub vectors: Vec<(&'a str, &'a VectorField)>,
    pub forms: Vec<(&'a str, &'a DiscreteForm)>,
}

/// Loaded counterpart of [`StateSnapshot`].
pub struct LoadedState {
    pub mesh: Arc<GridMesh>,
    pub time: f64,
    pub vectors: Vec<(String, VectorField)>,
    pub forms: Vec<(String, DiscreteForm)>,
}

impl LoadedState {
    pub fn form(&self, name: &str) -> Result<&DiscreteForm> {
        self.forms
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Snapshot(format!("missing form section {name}")))
    }

    pub fn vector(&self, name: &str) -> Result<&VectorField> {
        self.vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Snapshot(format!("missing vector section {name}")))
    }
}

fn write_name(w: &mut impl Write, name: &str) -> Result<()> {
    write_u32(w, name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    Ok(())
}

fn read_name(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    if len > 256 {
        return Err(Error::Snapshot(format!("section name length {len}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Snapshot("section name not utf-8".into()))
}

/// Write a checkpoint containing several named fields on one mesh.
pub fn write_state(path: &Path, snap: &StateSnapshot) -> Result<()> {
    let mesh = if let Some((_, v)) = snap.vectors.first() {
        v.mesh()
    } else if let Some((_, f)) = snap.forms.first() {
        f.mesh()
    } else {
        return Err(Error::Snapshot("empty state snapshot".into()));
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(STATE_MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_mesh(&mut w, mesh)?;
    write_f64(&mut w, snap.time)?;
    write_u32(&mut w, (snap.vectors.len() + snap.forms.len()) as u32)?;
    for (name, v) in &snap.vectors {
        if !v.mesh().same_mesh(mesh) {
            return Err(Error::MeshMismatch);
        }
        w.write_all(&[1u8])?;
        write_name(&mut w, name)?;
        write_u32(&mut w, v.components().len() as u32)?;
        for c in v.components() {
            write_array(&mut w, c)?;
        }
    }
    for (name, f) in &snap.forms {
        if !f.mesh().same_mesh(mesh) {
            return Err(Error::MeshMismatch);
        }
        w.write_all(&[0u8])?;
        write_name(&mut w, name)?;
        write_u32(&mut w, f.degree() as u32)?;
        for c in f.components() {
            write_array(&mut w, c)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a checkpoint written by [`write_state`].
pub fn read_state(path: &Path) -> Result<LoadedState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != STATE_MAGIC {
        return Err(Error::Snapshot("bad magic, not a state snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let mesh = read_mesh(&mut r)?;
    let time = read_f64(&mut r)?;
    let sections = read_u32(&mut r)? as usize;
    let mut out = LoadedState {
        mesh: Arc::clone(&mesh),
        time,
        vectors: Vec::new(),
        forms: Vec::new(),
    };
    for _ in 0..sections {
        let mut kind = [0u8];
        r.read_exact(&mut kind)?;
        let name = read_name(&mut r)?;
        match kind[0] {
            1 => {
                let ncomp = read_u32(&mut r)? as usize;
                if ncomp != mesh.dim() {
                    return Err(Error::Snapshot(format!(
                        "vector section {name} with {ncomp} components"
                    )));
                }
                let comps: Result<Vec<_>> = (0..ncomp).map(|_| read_array(&mut r, &mesh)).collect();
                out.vectors
                    .push((name, VectorField::from_components(&mesh, comps?)?));
            }
            0 => {
                let degree = read_u32(&mut r)? as usize;
                let ncomp = crate::alt::binomial(mesh.dim(), degree);
                let comps: Result<Vec<_>> = (0..ncomp).map(|_| read_array(&mut r, &mesh)).collect();
                out.forms
                    .push((name, DiscreteForm::from_components(&mesh, degree, comps?)?));
            }
            k => return Err(Error::Snapshot(format!("unknown section kind {k}"))),
        }
    }
    Ok(out)
}
