//! Binary field dumps ("BQFL") and CSV exports.
//!
//! Layout of a BQFL file (little-endian):
//!
//! ```text
//! magic   [u8;4]  = "BQFL"
//! version u32     = 1
//! kind    u32     (0 = x-node scalar, 1 = cell scalar, 2/3/4 = u1/u2/u3)
//! dims    3×u32   (value counts per axis, x-major)
//! origin  3×f64   (coordinate of the first value location)
//! spacing 3×f64   (hx, hy, hz)
//! payload dims.product() × f64, row-major with x outermost:
//!         index = (ix·dy + iy)·dz + iz
//! ```

use super::scalar::{ScalarField, ScalarLayout};
use super::vector::VectorField;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const BQFL_MAGIC: [u8; 4] = *b"BQFL";
pub const BQFL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    ScalarNodes = 0,
    ScalarCells = 1,
    U1 = 2,
    U2 = 3,
    U3 = 4,
}

impl FieldKind {
    fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            0 => FieldKind::ScalarNodes,
            1 => FieldKind::ScalarCells,
            2 => FieldKind::U1,
            3 => FieldKind::U2,
            4 => FieldKind::U3,
            _ => return Err(Error::Dump(format!("unknown field kind {v}"))),
        })
    }
}

pub struct RawField {
    pub kind: FieldKind,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub data: Vec<f64>,
}

pub fn write_raw(path: &Path, f: &RawField) -> Result<()> {
    let mut buf = Vec::with_capacity(48 + f.data.len() * 8);
    buf.extend_from_slice(&BQFL_MAGIC);
    buf.extend_from_slice(&BQFL_VERSION.to_le_bytes());
    buf.extend_from_slice(&(f.kind as u32).to_le_bytes());
    for d in f.dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in f.origin.iter().chain(f.spacing.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &f.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<RawField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 60 || bytes[0..4] != BQFL_MAGIC {
        return Err(Error::Dump(format!("{}: not a BQFL file", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != BQFL_VERSION {
        return Err(Error::Dump(format!("unsupported BQFL version {version}")));
    }
    let kind = FieldKind::from_u32(u32_at(8))?;
    let dims = [u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize];
    let origin = [f64_at(24), f64_at(32), f64_at(40)];
    let spacing = [f64_at(48), f64_at(56), f64_at(64)];
    let n = dims[0] * dims[1] * dims[2];
    let payload = &bytes[72..];
    if payload.len() != n * 8 {
        return Err(Error::Dump(format!(
            "payload size {} does not match dims {:?}",
            payload.len(),
            dims
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawField {
        kind,
        dims,
        origin,
        spacing,
        data,
    })
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    let kind = match f.layout {
        ScalarLayout::XNodes => FieldKind::ScalarNodes,
        ScalarLayout::XCells => FieldKind::ScalarCells,
    };
    write_raw(
        path,
        &RawField {
            kind,
            dims: [f.nxv, f.ny, f.nz],
            origin: [f.x0, 0.5 * f.hy, 0.5 * f.hz],
            spacing: [f.hx, f.hy, f.hz],
            data: f.data.clone(),
        },
    )
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let raw = read_raw(path)?;
    let layout = match raw.kind {
        FieldKind::ScalarNodes => ScalarLayout::XNodes,
        FieldKind::ScalarCells => ScalarLayout::XCells,
        k => return Err(Error::Dump(format!("expected a scalar dump, got {k:?}"))),
    };
    Ok(ScalarField {
        layout,
        nxv: raw.dims[0],
        ny: raw.dims[1],
        nz: raw.dims[2],
        x0: raw.origin[0],
        hx: raw.spacing[0],
        hy: raw.spacing[1],
        hz: raw.spacing[2],
        data: raw.data,
    })
}

/// Writes the three MAC components as `<stem>.u1.bqfl`, `.u2.bqfl`, `.u3.bqfl`.
pub fn write_vector(dir: &Path, stem: &str, v: &VectorField) -> Result<()> {
    let comps: [(&str, FieldKind, [usize; 3], &Vec<f64>); 3] = [
        ("u1", FieldKind::U1, [v.nx + 1, v.ny, v.nz], &v.u1),
        ("u2", FieldKind::U2, [v.nx, v.ny + 1, v.nz], &v.u2),
        ("u3", FieldKind::U3, [v.nx, v.ny, v.nz + 1], &v.u3),
    ];
    for (name, kind, dims, data) in comps {
        write_raw(
            &dir.join(format!("{stem}.{name}.bqfl")),
            &RawField {
                kind,
                dims,
                origin: [v.x0, 0.0, 0.0],
                spacing: [v.hx, v.hy, v.hz],
                data: data.clone(),
            },
        )?;
    }
    Ok(())
}

pub fn read_vector(dir: &Path, stem: &str) -> Result<VectorField> {
    let r1 = read_raw(&dir.join(format!("{stem}.u1.bqfl")))?;
    let r2 = read_raw(&dir.join(format!("{stem}.u2.bqfl")))?;
    let r3 = read_raw(&dir.join(format!("{stem}.u3.bqfl")))?;
    if r1.kind != FieldKind::U1 || r2.kind != FieldKind::U2 || r3.kind != FieldKind::U3 {
        return Err(Error::Dump("vector component kinds disagree".into()));
    }
    let nx = r1.dims[0] - 1;
    let (ny, nz) = (r1.dims[1], r1.dims[2]);
    if r2.dims != [nx, ny + 1, nz] || r3.dims != [nx, ny, nz + 1] {
        return Err(Error::Dump("vector component dims disagree".into()));
    }
    Ok(VectorField {
        nx,
        ny,
        nz,
        x0: r1.origin[0],
        hx: r1.spacing[0],
        hy: r1.spacing[1],
        hz: r1.spacing[2],
        u1: r1.data,
        u2: r2.data,
        u3: r3.data,
    })
}

/// CSV table of axial profiles with full 17-significant-digit decimals.
pub fn write_axial_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut s = String::new();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::ChannelGrid;
    use crate::geometry::CrossSection;
    use std::sync::Arc;

    #[test]
    fn scalar_roundtrip() {
        let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 4, 4).unwrap());
        let g = ChannelGrid::new(cross, 1.0, 8, 1.0).unwrap();
        let mut f = ScalarField::nodes_on_temp(&g);
        f.fill_from(|x, y, z| x * 1.5 - y + z * z);
        let dir = std::env::temp_dir().join("bqfl_scalar_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.bqfl");
        write_scalar(&path, &f).unwrap();
        let g2 = read_scalar(&path).unwrap();
        assert_eq!(f.data, g2.data);
        assert_eq!(f.nxv, g2.nxv);
        assert_eq!(f.x0, g2.x0);
    }

    #[test]
    fn vector_roundtrip() {
        let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 4, 4).unwrap());
        let g = ChannelGrid::new(cross, 1.0, 8, 1.0).unwrap();
        let mut v = VectorField::zeros_on_flow(&g);
        v.fill_from(|x, y, _| x + y, |x, _, z| x - z, |_, y, z| y * z);
        let dir = std::env::temp_dir().join("bqfl_vector_test");
        std::fs::create_dir_all(&dir).unwrap();
        write_vector(&dir, "v", &v).unwrap();
        let w = read_vector(&dir, "v").unwrap();
        assert_eq!(v.u1, w.u1);
        assert_eq!(v.u2, w.u2);
        assert_eq!(v.u3, w.u3);
    }

    #[test]
    fn rejects_garbage() {
        let dir = std::env::temp_dir().join("bqfl_garbage_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.bqfl");
        std::fs::write(&path, b"not a field").unwrap();
        assert!(read_raw(&path).is_err());
    }
}
