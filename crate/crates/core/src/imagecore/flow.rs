//! Middlebury-style `.flo` files plus a text sidecar for sparse grids.

use std::fs;
use std::path::{Path, PathBuf};

use super::DisplacementField;
use crate::error::{Error, Result};

/// Little-endian float whose bytes spell "PIEH".
pub const FLOW_MAGIC: f32 = 202021.25;

/// Sidecar that records grid layout for sparse fields: `cc.flo` -> `cc.grid.txt`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("grid.txt")
}

pub fn write_flow(field: &DisplacementField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = field.dims();
    let mut buf = Vec::with_capacity(12 + 8 * w * h);
    buf.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    buf.extend_from_slice(&(w as i32).to_le_bytes());
    buf.extend_from_slice(&(h as i32).to_le_bytes());
    for (u, v) in field.u().iter().zip(field.v()) {
        buf.extend_from_slice(&u.to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))?;

    let sidecar = sidecar_path(path);
    if !field.is_dense() {
        let (ox, oy) = field.origin();
        let text = format!(
            "grid_step={}\norigin_x={ox}\norigin_y={oy}\n",
            field.grid_step()
        );
        fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    } else if sidecar.exists() {
        // stale layout from an earlier sparse write would be misread later
        fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

pub fn read_flow(path: impl AsRef<Path>) -> Result<DisplacementField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 {
        return Err(Error::corrupt(path, "truncated flow header"));
    }
    let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().unwrap() };
    let magic = f32::from_le_bytes(word(0));
    if magic != FLOW_MAGIC {
        return Err(Error::FlowMagic {
            path: path.into(),
            found: magic,
        });
    }
    let w = i32::from_le_bytes(word(4));
    let h = i32::from_le_bytes(word(8));
    if w <= 0 || h <= 0 {
        return Err(Error::corrupt(path, format!("non-positive dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::corrupt(path, "dimensions overflow"))?;
    let payload = &bytes[12..];
    if payload.len() < expected {
        return Err(Error::corrupt(
            path,
            format!("truncated payload: {} of {expected} bytes", payload.len()),
        ));
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for pair in payload[..expected].chunks_exact(8) {
        u.push(f32::from_le_bytes(pair[..4].try_into().unwrap()));
        v.push(f32::from_le_bytes(pair[4..].try_into().unwrap()));
    }

    let sidecar = sidecar_path(path);
    let (step, origin) = if sidecar.exists() {
        read_sidecar(&sidecar)?
    } else {
        (1, (0, 0))
    };
    DisplacementField::sparse(w, h, u, v, step, origin).map_err(|e| match e {
        Error::InvalidData(reason) => Error::corrupt(path, reason),
        other => other,
    })
}

fn read_sidecar(path: &Path) -> Result<(usize, (usize, usize))> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut step = None;
    let mut ox = None;
    let mut oy = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::corrupt(path, format!("bad sidecar line `{line}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::corrupt(path, format!("bad value in `{line}`")))?;
        match key.trim() {
            "grid_step" => step = Some(value),
            "origin_x" => ox = Some(value),
            "origin_y" => oy = Some(value),
            other => return Err(Error::corrupt(path, format!("unknown key `{other}`"))),
        }
    }
    match (step, ox, oy) {
        (Some(s), Some(x), Some(y)) if s >= 1 => Ok((s, (x, y))),
        _ => Err(Error::corrupt(path, "sidecar needs grid_step>=1, origin_x, origin_y")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_spells_pieh() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.flo");
        write_flow(&DisplacementField::zeros(3, 2), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(read_flow(&p).unwrap(), DisplacementField::zeros(3, 2));
    }

    #[test]
    fn two_by_one_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.flo");
        let f = DisplacementField::dense(2, 1, vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        write_flow(&f, &p).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 12 + 16);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.flo");
        let mut bytes = 1.0f32.to_le_bytes().to_vec();
        bytes.extend_from_slice(&1i32.to_le_bytes());
        bytes.extend_from_slice(&1i32.to_le_bytes());
        bytes.extend_from_slice(&[0; 8]);
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_flow(&p), Err(Error::FlowMagic { .. })));

        bytes[..4].copy_from_slice(&FLOW_MAGIC.to_le_bytes());
        fs::write(&p, &bytes[..16]).unwrap();
        assert!(matches!(read_flow(&p), Err(Error::Corrupt { .. })));

        bytes[4..8].copy_from_slice(&0i32.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_flow(&p), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn sparse_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cc.flo");
        let f = DisplacementField::sparse(2, 2, vec![0.5; 4], vec![-1.0; 4], 16, (26, 26)).unwrap();
        write_flow(&f, &p).unwrap();
        let text = fs::read_to_string(dir.path().join("cc.grid.txt")).unwrap();
        assert_eq!(text, "grid_step=16\norigin_x=26\norigin_y=26\n");
        let back = read_flow(&p).unwrap();
        assert_eq!(back.grid_step(), 16);
        assert_eq!(back.origin(), (26, 26));
        assert_eq!(back.u(), f.u());

        // rewriting as dense drops the stale sidecar
        write_flow(&DisplacementField::zeros(2, 2), &p).unwrap();
        assert!(read_flow(&p).unwrap().is_dense());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_bit_exact(
            w in 1usize..12,
            h in 1usize..12,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let field = DisplacementField::from_fn(w, h, |_, _| {
                ((rng.next_f64() * 200.0 - 100.0) as f32, (rng.next_f64() * 2e-3) as f32)
            });
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.flo");
            write_flow(&field, &p).unwrap();
            let back = read_flow(&p).unwrap();
            let bits = |s: &[f32]| s.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back.u()), bits(field.u()));
            prop_assert_eq!(bits(back.v()), bits(field.v()));
        }
    }
}
