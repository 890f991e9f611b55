//! Text and binary file formats.
//!
//! All floating-point text is written with 17 significant digits so that
//! values survive a write/read cycle unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::optimize::InversionState;
use crate::propagate::WaveRecording;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("invalid number '{s}' in {what}")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("invalid integer '{s}' in {what}")))
}

/// Nodal coefficients together with the grid they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub name: String,
    pub dimension: usize,
    pub degree: usize,
    pub counts: [usize; 2],
    pub element_size: [f64; 2],
    pub origin: [f64; 2],
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(grid: &Grid, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "field '{name}' has {} values for {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self {
            name: name.to_string(),
            dimension: grid.dimension(),
            degree: grid.degree(),
            counts: grid.element_counts(),
            element_size: grid.element_size(),
            origin: grid.origin(),
            values,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        let d = self.dimension;
        let extents: Vec<f64> = (0..d)
            .map(|a| self.counts[a] as f64 * self.element_size[a])
            .collect();
        let g = Grid::with_origin(d, self.origin, &extents, self.element_size[0], self.degree)?;
        if g.element_counts() != self.counts {
            return Err(Error::Format("grid header is inconsistent".into()));
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# voidfwi nodal field");
        let _ = writeln!(s, "name {}", self.name);
        let _ = writeln!(s, "dimension {}", self.dimension);
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "counts {} {}", self.counts[0], self.counts[1]);
        let _ = writeln!(
            s,
            "element_size_m {} {}",
            num(self.element_size[0]),
            num(self.element_size[1])
        );
        let _ = writeln!(
            s,
            "origin_m {} {}",
            num(self.origin[0]),
            num(self.origin[1])
        );
        let _ = writeln!(s, "values {}", self.values.len());
        for v in &self.values {
            s.push_str(&num(*v));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing '{key}' line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Format(format!("expected '{key}', found '{line}'")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let name = header("name")?.join(" ");
        let dimension = parse_usize(&header("dimension")?.concat(), "dimension")?;
        let degree = parse_usize(&header("degree")?.concat(), "degree")?;
        let pair = |v: Vec<String>, what: &str| -> Result<[String; 2]> {
            <[String; 2]>::try_from(v)
                .map_err(|_| Error::Format(format!("'{what}' needs two entries")))
        };
        let [cx, cy] = pair(header("counts")?, "counts")?;
        let [hx, hy] = pair(header("element_size_m")?, "element_size_m")?;
        let [ox, oy] = pair(header("origin_m")?, "origin_m")?;
        let count = parse_usize(&header("values")?.concat(), "values")?;
        let values = lines
            .map(|l| parse_f64(l, "values"))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != count {
            return Err(Error::Format(format!(
                "expected {count} values, found {}",
                values.len()
            )));
        }
        if !(1..=2).contains(&dimension) {
            return Err(Error::Format(format!(
                "dimension {dimension} is not supported"
            )));
        }
        let field = Self {
            name,
            dimension,
            degree,
            counts: [parse_usize(&cx, "counts")?, parse_usize(&cy, "counts")?],
            element_size: [
                parse_f64(&hx, "element_size_m")?,
                parse_f64(&hy, "element_size_m")?,
            ],
            origin: [parse_f64(&ox, "origin_m")?, parse_f64(&oy, "origin_m")?],
            values,
        };
        let grid = field.grid()?;
        if grid.num_nodes() != field.values.len() {
            return Err(Error::Format(format!(
                "{} values for a grid with {} nodes",
                field.values.len(),
                grid.num_nodes()
            )));
        }
        Ok(field)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Header row of x-coordinates, then one row per y-coordinate with the
    /// nodal values along x.
    pub fn to_csv_grid(&self) -> Result<String> {
        let grid = self.grid()?;
        let xs = grid.axis_coordinates(0);
        let ys = if self.dimension == 2 {
            grid.axis_coordinates(1)
        } else {
            vec![0.0]
        };
        let mut s = String::from("y_m\\x_m");
        for x in &xs {
            s.push(',');
            s.push_str(&num(*x));
        }
        s.push('\n');
        for (j, y) in ys.iter().enumerate() {
            s.push_str(&num(*y));
            for i in 0..xs.len() {
                s.push(',');
                s.push_str(&num(self.values[j * xs.len() + i]));
            }
            s.push('\n');
        }
        Ok(s)
    }

    /// Legacy VTK structured-points dataset sampled on a uniform lattice with
    /// spacing `h / p`.
    pub fn to_vtk(&self) -> Result<String> {
        let grid = self.grid()?;
        let p = self.degree;
        let n = [
            self.counts[0] * p + 1,
            if self.dimension == 2 {
                self.counts[1] * p + 1
            } else {
                1
            },
        ];
        let spacing = [
            self.element_size[0] / p as f64,
            self.element_size[1] / p as f64,
        ];
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "voidfwi {}", self.name);
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {} {} 1", n[0], n[1]);
        let _ = writeln!(
            s,
            "ORIGIN {} {} {}",
            num(self.origin[0]),
            num(self.origin[1]),
            num(0.0)
        );
        let _ = writeln!(
            s,
            "SPACING {} {} {}",
            num(spacing[0]),
            num(if self.dimension == 2 { spacing[1] } else { 1.0 }),
            num(1.0)
        );
        let _ = writeln!(s, "POINT_DATA {}", n[0] * n[1]);
        let _ = writeln!(
            s,
            "SCALARS {} double 1",
            self.name.replace(char::is_whitespace, "_")
        );
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for j in 0..n[1] {
            for i in 0..n[0] {
                let v = if p == 1 {
                    self.values[j * n[0] + i]
                } else {
                    let x = self.origin[0] + i as f64 * spacing[0];
                    let y = self.origin[1] + j as f64 * spacing[1];
                    grid.interpolate(&self.values, [x, y])?
                };
                s.push_str(&num(v));
                s.push('\n');
            }
        }
        Ok(s)
    }
}

/// CSV with `#` header lines for the source index, Δt and receiver positions,
/// then `step,r0,r1,...`.
pub fn recording_to_csv(rec: &WaveRecording) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# source_index {}", rec.source_index);
    let _ = writeln!(s, "# delta_t_s {}", num(rec.dt));
    let xs: Vec<String> = rec.positions.iter().map(|p| num(p[0] * 1e3)).collect();
    let ys: Vec<String> = rec.positions.iter().map(|p| num(p[1] * 1e3)).collect();
    let _ = writeln!(s, "# receiver_x_mm {}", xs.join(" "));
    let _ = writeln!(s, "# receiver_y_mm {}", ys.join(" "));
    s.push_str("step");
    for r in 0..rec.receivers() {
        let _ = write!(s, ",r{r}");
    }
    s.push('\n');
    for n in 0..rec.sample_count() {
        let _ = write!(s, "{n}");
        for r in 0..rec.receivers() {
            s.push(',');
            s.push_str(&num(rec.value(n, r)));
        }
        s.push('\n');
    }
    s
}

pub fn recording_from_csv(text: &str) -> Result<WaveRecording> {
    let mut source_index = None;
    let mut dt = None;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut samples = Vec::new();
    let mut columns = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("source_index") => {
                    source_index = Some(parse_usize(&parts.collect::<String>(), "source_index")?)
                }
                Some("delta_t_s") => dt = Some(parse_f64(&parts.collect::<String>(), "delta_t_s")?),
                Some("receiver_x_mm") => {
                    xs = parts
                        .map(|p| parse_f64(p, "receiver_x_mm"))
                        .collect::<Result<_>>()?
                }
                Some("receiver_y_mm") => {
                    ys = parts
                        .map(|p| parse_f64(p, "receiver_y_mm"))
                        .collect::<Result<_>>()?
                }
                _ => {}
            }
            continue;
        }
        if line.starts_with("step") {
            columns = Some(line.split(',').count() - 1);
            continue;
        }
        let mut cells = line.split(',');
        cells.next();
        for c in cells {
            samples.push(parse_f64(c, "recording")?);
        }
    }
    let nr = columns.ok_or_else(|| Error::Format("missing column header".into()))?;
    if xs.len() != nr || ys.len() != nr || (nr > 0 && samples.len() % nr != 0) {
        return Err(Error::Format(
            "receiver header does not match the columns".into(),
        ));
    }
    Ok(WaveRecording {
        positions: xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| [x * 1e-3, y * 1e-3])
            .collect(),
        dt: dt.ok_or_else(|| Error::Format("missing delta_t_s".into()))?,
        source_index: source_index.ok_or_else(|| Error::Format("missing source_index".into()))?,
        samples,
    })
}

const MAGIC: &[u8; 8] = b"VFWIREC1";

/// Binary layout (little endian): magic `VFWIREC1`, receivers `u64`, samples
/// `u64`, source index `u64`, Δt `f64`, receiver positions (x, y in metres)
/// as `f64` pairs, then the samples row by row as `f64`.
pub fn recording_to_bytes(rec: &WaveRecording) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + 16 * rec.receivers() + 8 * rec.samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(rec.receivers() as u64).to_le_bytes());
    out.extend_from_slice(&(rec.sample_count() as u64).to_le_bytes());
    out.extend_from_slice(&(rec.source_index as u64).to_le_bytes());
    out.extend_from_slice(&rec.dt.to_le_bytes());
    for p in &rec.positions {
        out.extend_from_slice(&p[0].to_le_bytes());
        out.extend_from_slice(&p[1].to_le_bytes());
    }
    for v in &rec.samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn recording_from_bytes(bytes: &[u8]) -> Result<WaveRecording> {
    let corrupt = || Error::Format("truncated or corrupt binary recording".into());
    if bytes.len() < 40 || &bytes[..8] != MAGIC {
        return Err(corrupt());
    }
    let word = |k: usize| -> [u8; 8] { bytes[k..k + 8].try_into().expect("eight bytes") };
    let nr = u64::from_le_bytes(word(8)) as usize;
    let ns = u64::from_le_bytes(word(16)) as usize;
    let source_index = u64::from_le_bytes(word(24)) as usize;
    let dt = f64::from_le_bytes(word(32));
    let expected = nr
        .checked_mul(ns)
        .and_then(|n| n.checked_add(2 * nr))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(40))
        .ok_or_else(corrupt)?;
    if bytes.len() != expected {
        return Err(corrupt());
    }
    let mut k = 40;
    let mut next = || {
        let v = f64::from_le_bytes(word(k));
        k += 8;
        v
    };
    let positions = (0..nr).map(|_| [next(), next()]).collect();
    let samples = (0..nr * ns).map(|_| next()).collect();
    Ok(WaveRecording {
        positions,
        dt,
        source_index,
        samples,
    })
}

/// `iteration,chi,chi_normalized,grad_norm,step_size`; the state trace holds
/// `χ/χ⁰`, `initial_misfit` restores absolute values.
pub fn convergence_csv(state: &InversionState, initial_misfit: f64) -> String {
    let mut s = String::from("iteration,chi,chi_normalized,grad_norm,step_size\n");
    for (k, ((f, g), a)) in state
        .objective
        .iter()
        .zip(&state.gradient_norm)
        .zip(&state.step_size)
        .enumerate()
    {
        let _ = writeln!(
            s,
            "{k},{},{},{},{}",
            num(f * initial_misfit),
            num(*f),
            num(*g),
            num(*a)
        );
    }
    s
}
