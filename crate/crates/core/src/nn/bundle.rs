//! Flat weight files: a text header naming each matrix, then raw
//! little-endian f64 data in header order.
//!
//! ```text
//! cotlab-bundle 1
//! <name> <rows> <cols>
//! ...
//! end
//! <rows*cols f64 values per matrix, row-major>
//! ```

use super::tensor::Matrix;
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub const MAGIC: &str = "cotlab-bundle 1";

pub fn write_bundle<W: Write>(mut w: W, items: &[(String, Matrix)]) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    for (name, m) in items {
        if name.contains(char::is_whitespace) || name.is_empty() {
            return Err(Error::Invalid(format!("bad matrix name {name:?}")));
        }
        writeln!(w, "{name} {} {}", m.rows, m.cols)?;
    }
    writeln!(w, "end")?;
    for (_, m) in items {
        for v in &m.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_bundle<R: BufRead>(mut r: R) -> Result<Vec<(String, Matrix)>> {
    let bad = |m: &str| Error::Parse { pos: 0, msg: m.to_string() };
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(bad("missing bundle header"));
    }
    let mut shapes = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("unterminated header"));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["end"] => break,
            [name, rows, cols] => {
                let rows: usize = rows.parse().map_err(|_| bad("bad row count"))?;
                let cols: usize = cols.parse().map_err(|_| bad("bad column count"))?;
                shapes.push((name.to_string(), rows, cols));
            }
            _ => return Err(bad("bad header line")),
        }
    }
    let mut out = Vec::with_capacity(shapes.len());
    let mut buf = [0u8; 8];
    for (name, rows, cols) in shapes {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data.iter_mut() {
            r.read_exact(&mut buf).map_err(|_| bad("truncated data"))?;
            *v = f64::from_le_bytes(buf);
        }
        out.push((name, m));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let items = vec![
            ("a".to_string(), Matrix::from_rows(&[vec![1.5, -2.0]]).unwrap()),
            ("b.c".to_string(), Matrix::identity(3)),
        ];
        let mut buf = Vec::new();
        write_bundle(&mut buf, &items).unwrap();
        assert_eq!(read_bundle(&buf[..]).unwrap(), items);
        assert!(read_bundle(&buf[..10]).is_err());
    }
}
