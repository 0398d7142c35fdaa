//! Text serialization of fields and CSV export.
//!
//! ```text
//! tmdisk-field 1
//! convention paper-metric-no-4
//! kind polar            (or: radial)
//! rho_max 12
//! n_rho 512
//! n_theta 256           (absent for radial fields)
//! rho_nodes
//! <n_rho lines>
//! values
//! <n_rho lines of n_theta space-separated values>   (radial: one value per line)
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so a write/read cycle is
//! lossless.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, RadialField};
use crate::geom::DiskPoint;
use crate::grid::{PolarGrid, RadialGrid};

pub const MAGIC: &str = "tmdisk-field";
pub const FORMAT_VERSION: u32 = 1;
/// Tags the metric normalization `g = δ/(1 − |x|²)²`.
pub const CONVENTION_TAG: &str = "paper-metric-no-4";

fn write_header<W: Write>(w: &mut W, kind: &str, grid: &RadialGrid, n_theta: Option<usize>) -> Result<()> {
    writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "convention {CONVENTION_TAG}")?;
    writeln!(w, "kind {kind}")?;
    writeln!(w, "rho_max {}", grid.rho_max())?;
    writeln!(w, "n_rho {}", grid.len())?;
    if let Some(nt) = n_theta {
        writeln!(w, "n_theta {nt}")?;
    }
    writeln!(w, "rho_nodes")?;
    for x in grid.nodes() {
        writeln!(w, "{x}")?;
    }
    writeln!(w, "values")?;
    Ok(())
}

pub fn write_field<W: Write>(u: &Field, mut w: W) -> Result<()> {
    let g = u.grid();
    write_header(&mut w, "polar", &g.radial, Some(g.n_theta))?;
    for i in 0..g.n_rho() {
        let row = u.row(i);
        let mut line = String::with_capacity(row.len() * 24);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_radial<W: Write>(u: &RadialField, mut w: W) -> Result<()> {
    write_header(&mut w, "radial", u.grid(), None)?;
    for v in u.values() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line_no += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t.to_string());
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format(format!("line {}: {msg}", self.line_no))
    }

    fn key_value(&mut self, key: &str) -> Result<String> {
        let l = self.next_line()?;
        let mut it = l.splitn(2, ' ');
        if it.next() != Some(key) {
            return Err(self.err(&format!("expected `{key}`")));
        }
        Ok(it.next().unwrap_or("").trim().to_string())
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(&format!("invalid number `{s}`")))
    }
}

struct Header {
    kind: String,
    radial: RadialGrid,
    n_theta: Option<usize>,
}

fn read_header<R: BufRead>(lines: &mut Lines<R>) -> Result<Header> {
    let magic = lines.next_line()?;
    let version = magic
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| lines.err("not a tmdisk field file"))?;
    if lines.number::<u32>(version)? != FORMAT_VERSION {
        return Err(lines.err(&format!("unsupported format version {version}")));
    }
    let conv = lines.key_value("convention")?;
    if conv != CONVENTION_TAG {
        return Err(lines.err(&format!("metric convention `{conv}` differs from `{CONVENTION_TAG}`")));
    }
    let kind = lines.key_value("kind")?;
    let rho_max: f64 = {
        let s = lines.key_value("rho_max")?;
        lines.number(&s)?
    };
    let n_rho: usize = {
        let s = lines.key_value("n_rho")?;
        lines.number(&s)?
    };
    let n_theta = match kind.as_str() {
        "polar" => {
            let s = lines.key_value("n_theta")?;
            Some(lines.number(&s)?)
        }
        "radial" => None,
        other => return Err(lines.err(&format!("unknown field kind `{other}`"))),
    };
    if lines.next_line()? != "rho_nodes" {
        return Err(lines.err("expected `rho_nodes`"));
    }
    let mut nodes = Vec::with_capacity(n_rho);
    for _ in 0..n_rho {
        let l = lines.next_line()?;
        nodes.push(lines.number(&l)?);
    }
    if nodes.last() != Some(&rho_max) {
        return Err(lines.err("last radial node differs from rho_max"));
    }
    if lines.next_line()? != "values" {
        return Err(lines.err("expected `values`"));
    }
    Ok(Header {
        kind,
        radial: RadialGrid::from_nodes(nodes)?,
        n_theta,
    })
}

pub fn read_field<R: BufRead>(r: R) -> Result<Field> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    let h = read_header(&mut lines)?;
    let nt = match (h.kind.as_str(), h.n_theta) {
        ("polar", Some(nt)) => nt,
        _ => return Err(Error::Format("expected a polar field".into())),
    };
    let n_rho = h.radial.len();
    let grid = Arc::new(PolarGrid::new(h.radial, nt)?);
    let mut values = Vec::with_capacity(n_rho * nt);
    for _ in 0..n_rho {
        let l = lines.next_line()?;
        let before = values.len();
        for tok in l.split_whitespace() {
            values.push(lines.number(tok)?);
        }
        if values.len() - before != nt {
            return Err(lines.err(&format!("expected {nt} values in row")));
        }
    }
    Field::from_values(grid, values)
}

pub fn read_radial<R: BufRead>(r: R) -> Result<RadialField> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    let h = read_header(&mut lines)?;
    if h.kind != "radial" {
        return Err(Error::Format("expected a radial field".into()));
    }
    let mut values = Vec::with_capacity(h.radial.len());
    for _ in 0..h.radial.len() {
        let l = lines.next_line()?;
        values.push(lines.number(&l)?);
    }
    RadialField::from_values(Arc::new(h.radial), values)
}

/// One row per node: `rho,theta,re,im,value`.
pub fn write_field_csv<W: Write>(u: &Field, mut w: W) -> Result<()> {
    writeln!(w, "rho,theta,re,im,value")?;
    let g = u.grid();
    for i in 0..g.n_rho() {
        for j in 0..g.n_theta {
            let (rho, th) = (g.rho(i), g.theta(j));
            let z = DiskPoint::from_polar_capped(rho, th, g.rho_max())?;
            writeln!(w, "{rho},{th},{},{},{}", z.re(), z.im(), u.get(i, j))?;
        }
    }
    Ok(())
}

/// `rho,r,value`.
pub fn write_radial_csv<W: Write>(u: &RadialField, mut w: W) -> Result<()> {
    writeln!(w, "rho,r,value")?;
    for (rho, v) in u.grid().nodes().iter().zip(u.values()) {
        writeln!(w, "{rho},{},{v}", rho.tanh())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_round_trip_is_lossless() {
        let g = Arc::new(PolarGrid::uniform(20, 8, 3.0).unwrap());
        let u = Field::from_fn(g, |rho, th| (1.0 / 3.0) * (-rho).exp() * (th.sin() + 0.1)).unwrap();
        let mut buf = Vec::new();
        write_field(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("convention paper-metric-no-4"));
        let back = read_field(&buf[..]).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn radial_round_trip_is_lossless() {
        let g = Arc::new(RadialGrid::uniform(17, 2.5).unwrap());
        let u = RadialField::from_fn(g, |rho| (0.7 * rho).cos() / 7.0).unwrap();
        let mut buf = Vec::new();
        write_radial(&u, &mut buf).unwrap();
        assert_eq!(read_radial(&buf[..]).unwrap(), u);
        assert!(read_field(&buf[..]).is_err());
    }

    #[test]
    fn rejects_foreign_convention_and_truncation() {
        let g = Arc::new(PolarGrid::uniform(4, 8, 1.0).unwrap());
        let mut buf = Vec::new();
        write_field(&Field::zeros(g), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let other = text.replace("paper-metric-no-4", "factor-4");
        assert!(matches!(read_field(other.as_bytes()), Err(Error::Format(_))));
        let cut = &text[..text.len() - 10];
        assert!(read_field(cut.as_bytes()).is_err());
    }

    #[test]
    fn csv_has_one_line_per_node() {
        let g = Arc::new(PolarGrid::uniform(4, 8, 1.0).unwrap());
        let mut buf = Vec::new();
        write_field_csv(&Field::zeros(g), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 32);
    }
}
