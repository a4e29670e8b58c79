//! Field file I/O.
//!
//! Format "HFLD1": a single ASCII header line
//! `HFLD1 <nx> <ny> <Lx> <Ly>\n` followed by `nx*ny` little-endian IEEE
//! f64 values, row-major with x fastest. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{make_grid, GridSpec, RField};

const MAGIC: &str = "HFLD1";

pub fn write_field(path: &Path, field: &RField, grid: &GridSpec) -> Result<()> {
    grid.check_shape_r(field)?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MAGIC} {} {} {} {}", grid.nx, grid.ny, grid.lx, grid.ly)?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            w.write_all(&field[[j, i]].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(GridSpec, RField)> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)
            .map_err(|_| Error::BadFieldFile("truncated header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        if header.len() > 256 {
            return Err(Error::BadFieldFile("header too long".into()));
        }
        header.push(byte[0]);
    }
    let header = String::from_utf8(header)
        .map_err(|_| Error::BadFieldFile("header is not valid ASCII".into()))?;
    let mut parts = header.split_whitespace();
    let magic = parts.next().unwrap_or("");
    if magic != MAGIC {
        return Err(Error::BadFieldFile(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let nx: usize = parse_field(parts.next(), "nx")?;
    let ny: usize = parse_field(parts.next(), "ny")?;
    let lx: f64 = parse_field(parts.next(), "Lx")?;
    let ly: f64 = parse_field(parts.next(), "Ly")?;
    let grid = make_grid(nx, ny, lx, ly)?;

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != nx * ny * 8 {
        return Err(Error::BadFieldFile(format!(
            "payload holds {} values but header says {}",
            payload.len() / 8,
            nx * ny
        )));
    }
    let mut field = RField::zeros(grid.shape());
    for j in 0..ny {
        for i in 0..nx {
            let o = (j * nx + i) * 8;
            field[[j, i]] = f64::from_le_bytes(payload[o..o + 8].try_into().unwrap());
        }
    }
    Ok((grid, field))
}

fn parse_field<T: std::str::FromStr>(s: Option<&str>, name: &str) -> Result<T> {
    s.ok_or_else(|| Error::BadFieldFile(format!("missing header field {name}")))?
        .parse()
        .map_err(|_| Error::BadFieldFile(format!("unparseable header field {name}")))
}

/// Optional CSV export (`x,y,value`) for plotting.
pub fn write_field_csv(path: &Path, field: &RField, grid: &GridSpec) -> Result<()> {
    grid.check_shape_r(field)?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,y,value")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = grid.pos(i, j);
            writeln!(w, "{x},{y},{}", field[[j, i]])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::rng::SplitMix64;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("hfld-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn roundtrip_bit_exact() {
        let grid = make_grid(16, 8, 2.0, 1.0).unwrap();
        let mut rng = SplitMix64::new(1);
        let field = RField::from_shape_fn(grid.shape(), |_| rng.normal_pair().0);
        let path = tmpdir().join("roundtrip.hfld");
        write_field(&path, &field, &grid).unwrap();
        let (g2, f2) = read_field(&path).unwrap();
        assert_eq!(g2, grid);
        for (a, b) in field.iter().zip(f2.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupted_magic_rejected() {
        let grid = make_grid(8, 8, 1.0, 1.0).unwrap();
        let field = RField::zeros(grid.shape());
        let path = tmpdir().join("magic.hfld");
        write_field(&path, &field, &grid).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::BadFieldFile(_))));
    }

    #[test]
    fn size_mismatch_rejected() {
        let grid = make_grid(8, 8, 1.0, 1.0).unwrap();
        let field = RField::zeros(grid.shape());
        let path = tmpdir().join("short.hfld");
        write_field(&path, &field, &grid).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::BadFieldFile(_))));
    }
}
