use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::branching::BranchingTriplet;
use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;

/// Condition imposed at a Dirichlet or reflecting end of the radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// `u = 0`.
    Zero,
    /// `u = value`.
    Value { value: f64 },
    /// `u = value * (alpha(r) * length^2)^(-1/(p-1))`, a height measured in
    /// units of the large-solution scale at distance `length`.
    Scaled {
        value: f64,
        #[serde(default = "unit")]
        length: f64,
    },
    /// Zero flux.
    Reflecting,
}

impl BoundaryCondition {
    /// `ln u` on the boundary, or `None` for a reflecting end.
    pub fn ln_value(&self, ln_alpha: f64, p: f64) -> Option<f64> {
        match *self {
            BoundaryCondition::Zero => Some(f64::NEG_INFINITY),
            BoundaryCondition::Value { value } => Some(value.ln()),
            BoundaryCondition::Scaled { value, length } => {
                Some(value.ln() - (ln_alpha + 2.0 * length.ln()) / (p - 1.0))
            }
            BoundaryCondition::Reflecting => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundaryCondition::Value { value } => check_height(value),
            BoundaryCondition::Scaled { value, length } => {
                check_height(value)?;
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::Precondition(format!("boundary length {length} must be positive")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn unit() -> f64 {
    1.0
}

fn check_height(value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::Precondition(format!("boundary value {value} must be finite and >= 0")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: GeneratorSpec,
    pub triplet: BranchingTriplet,
}

/// Radial space-time samples of a nonnegative solution, stored as `ln u`
/// so that values far outside the `f64` range survive.
///
/// `log_values[j * r_nodes.len() + i]` is `ln u(r_i, t_j)`; `-inf` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub r_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub log_values: Vec<f64>,
    pub outer: BoundaryCondition,
    pub inner: Option<BoundaryCondition>,
    /// Nodes clipped to zero; the log-space scheme cannot produce negative
    /// values, so this stays at zero.
    pub clipped: usize,
    pub steps: usize,
    pub metadata: Option<Provenance>,
}

const MAGIC: &[u8; 8] = b"SCSPGF01";

impl GridFunction {
    pub fn ln_at(&self, i: usize, j: usize) -> f64 {
        self.log_values[j * self.r_nodes.len() + i]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.ln_at(i, j).exp()
    }

    /// `ln u` at time index `j` for all radii.
    pub fn ln_row(&self, j: usize) -> &[f64] {
        let n = self.r_nodes.len();
        &self.log_values[j * n..(j + 1) * n]
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.ln_row(j).iter().map(|v| v.exp()).collect()
    }

    /// `ln u(r, t_j)`, linear in `u` between nodes and flat outside.
    pub fn ln_interp(&self, j: usize, r: f64) -> f64 {
        let row = self.ln_row(j);
        let x = &self.r_nodes;
        if r <= x[0] {
            return row[0];
        }
        if r >= x[x.len() - 1] {
            return row[x.len() - 1];
        }
        let k = x.partition_point(|&v| v <= r);
        let w = (r - x[k - 1]) / (x[k] - x[k - 1]);
        if w == 0.0 {
            return row[k - 1];
        }
        let (a, b) = (row[k - 1], row[k]);
        crate::tridiag::logaddexp(a + (1.0 - w).ln(), b + w.ln())
    }

    pub fn interp(&self, j: usize, r: f64) -> f64 {
        self.ln_interp(j, r).exp()
    }

    /// Index of the time node closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (j, &s) in self.t_nodes.iter().enumerate() {
            if (s - t).abs() < (self.t_nodes[best] - t).abs() {
                best = j;
            }
        }
        best
    }

    /// Long-format CSV with columns `r,t,u,ln_u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,t,u,ln_u")?;
        for (j, &t) in self.t_nodes.iter().enumerate() {
            for (i, &r) in self.r_nodes.iter().enumerate() {
                let v = self.ln_at(i, j);
                writeln!(w, "{r:.16e},{t:.16e},{:.16e},{v:.16e}", v.exp())?;
            }
        }
        Ok(())
    }

    /// Raw little-endian dump of the grid and values. Boundary and
    /// provenance data are not stored; the cache key is expected to
    /// identify them.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [&self.r_nodes, &self.t_nodes] {
            w.write_all(&(v.len() as u64).to_le_bytes())?;
        }
        for x in self.r_nodes.iter().chain(&self.t_nodes).chain(&self.log_values) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, outer: BoundaryCondition, inner: Option<BoundaryCondition>) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a grid function cache".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let nr = next_u64(&mut r)? as usize;
        let nt = next_u64(&mut r)? as usize;
        let mut read = |count: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            let mut b = [0u8; 8];
            for _ in 0..count {
                r.read_exact(&mut b)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let r_nodes = read(nr)?;
        let t_nodes = read(nt)?;
        let log_values = read(nr * nt)?;
        Ok(GridFunction { r_nodes, t_nodes, log_values, outer, inner, clipped: 0, steps: 0, metadata: None })
    }

    /// Writes `<dir>/<key>.gfbin`.
    pub fn save_cache(&self, dir: &Path, key: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = std::fs::File::create(dir.join(format!("{key}.gfbin")))?;
        self.write_binary(std::io::BufWriter::new(f))
    }

    pub fn load_cache(
        dir: &Path,
        key: &str,
        outer: BoundaryCondition,
        inner: Option<BoundaryCondition>,
    ) -> Result<Option<Self>> {
        let path = dir.join(format!("{key}.gfbin"));
        if !path.exists() {
            return Ok(None);
        }
        let f = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(f), outer, inner).map(Some)
    }
}
