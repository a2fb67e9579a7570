//! File formats: solution CSV with a JSON sidecar, grid dumps and
//! dictionary dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use pluriflow_core::{GridFunction, Hermitian, HermitianDictionary, NodeKind, SpaceGrid, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

const COORDS: [&str; 4] = ["x1", "y1", "x2", "y2"];

/// Grid metadata stored next to a solution CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub h_x: f64,
    pub horizon: f64,
    pub time_nodes: Vec<f64>,
    pub space_nodes: usize,
    pub boundary_hits: usize,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `(k, t_k, node_index, x..., value)` rows and the sidecar.
pub fn write_solution(path: &Path, u: &GridFunction) -> Result<()> {
    let grid = u.space();
    let dim = grid.dim();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k", "t_k", "node_index"];
    header.extend(&COORDS[..dim]);
    header.push("value");
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (k, &t) in u.time().nodes().iter().enumerate() {
        for i in 0..grid.len() {
            row.clear();
            row.push(k.to_string());
            row.push(format!("{t:e}"));
            row.push(i.to_string());
            row.extend(grid.point(i).iter().map(|x| format!("{x:e}")));
            row.push(format!("{:e}", u.value(k, i)));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(RunError::io(path))?;
    let sidecar = Sidecar {
        n: grid.n(),
        h_x: grid.spacing(),
        horizon: u.time().horizon(),
        time_nodes: u.time().nodes().to_vec(),
        space_nodes: grid.len(),
        boundary_hits: grid.hits().len(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads node values back onto the given grids. Boundary traces are not
/// stored; `trace(t)` supplies them.
pub fn read_solution(
    path: &Path,
    space: Arc<SpaceGrid>,
    time: Arc<TimeGrid>,
    trace: impl Fn(f64) -> Vec<f64>,
) -> Result<GridFunction> {
    let side: Sidecar = read_json(&sidecar_path(path))?;
    if side.n != space.n()
        || side.space_nodes != space.len()
        || (side.h_x - space.spacing()).abs() > 1e-15
        || side.time_nodes.len() != time.len()
        || side.time_nodes.iter().zip(time.nodes()).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(RunError::Schema(format!(
            "{} was written on different grids than the scenario",
            path.display()
        )));
    }
    let mut values = vec![f64::NAN; time.len() * space.len()];
    let mut r = csv::Reader::from_path(path)?;
    let value_col = 3 + space.dim();
    for rec in r.records() {
        let rec = rec?;
        let parse = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| RunError::Schema(format!("{}: bad field {j} in {:?}", path.display(), rec)))
        };
        let k = parse(0)? as usize;
        let i = parse(2)? as usize;
        if k >= time.len() || i >= space.len() {
            return Err(RunError::Schema(format!("{}: row index out of range", path.display())));
        }
        values[k * space.len() + i] = parse(value_col)?;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(RunError::Schema(format!("{}: missing rows", path.display())));
    }
    let traces: Vec<f64> = time.nodes().iter().flat_map(|&t| trace(t)).collect();
    GridFunction::new(space, time, values, traces).map_err(RunError::Data)
}

#[derive(Serialize, Deserialize)]
struct HitDump {
    node: usize,
    direction: [i32; 4],
    theta: f64,
    point: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridDump {
    n: usize,
    h_x: f64,
    nodes: Vec<Vec<f64>>,
    mask: Vec<NodeKind>,
    boundary_hits: Vec<HitDump>,
}

/// `{n, h_x, nodes, mask, boundary_hits}`.
pub fn write_grid(path: &Path, grid: &SpaceGrid) -> Result<()> {
    let dim = grid.dim();
    let dump = GridDump {
        n: grid.n(),
        h_x: grid.spacing(),
        nodes: (0..grid.len()).map(|i| grid.point(i).to_vec()).collect(),
        mask: grid.kinds().to_vec(),
        boundary_hits: grid
            .hits()
            .iter()
            .map(|h| HitDump {
                node: h.node,
                direction: grid.signed_direction(h.direction),
                theta: h.theta,
                point: h.point[..dim].to_vec(),
            })
            .collect(),
    };
    write_json(path, &dump)
}

#[derive(Serialize, Deserialize)]
struct DictionaryDump {
    n: usize,
    radius: f64,
    resolution: f64,
    /// Row-major `(re, im)` pairs, `2n²` reals per matrix.
    matrices: Vec<Vec<f64>>,
}

pub fn write_dictionary(path: &Path, dict: &HermitianDictionary) -> Result<()> {
    let n = dict.n();
    let matrices = dict
        .matrices()
        .iter()
        .map(|a| {
            let mut v = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for k in 0..n {
                    let z = a.get(j, k);
                    v.push(z.re);
                    v.push(z.im);
                }
            }
            v
        })
        .collect();
    write_json(
        path,
        &DictionaryDump {
            n,
            radius: dict.coverage_radius(),
            resolution: dict.resolution(),
            matrices,
        },
    )
}

pub fn read_dictionary(path: &Path) -> Result<HermitianDictionary> {
    let dump: DictionaryDump = read_json(path)?;
    let n = dump.n;
    let matrices = dump
        .matrices
        .iter()
        .map(|v| {
            if v.len() != 2 * n * n {
                return Err(RunError::Schema(format!("matrix with {} reals, expected {}", v.len(), 2 * n * n)));
            }
            let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
            for j in 0..n {
                for k in 0..n {
                    let p = 2 * (j * n + k);
                    e[j][k] = Complex64::new(v[p], v[p + 1]);
                }
            }
            Ok(Hermitian::from_entries(n, &e))
        })
        .collect::<Result<Vec<_>>>()?;
    HermitianDictionary::from_matrices(n, matrices, dump.radius).map_err(|e| RunError::Schema(e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(RunError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(RunError::io(path))?;
    w.flush().map_err(RunError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(RunError::io(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
}
