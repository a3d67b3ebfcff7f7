use std::collections::BTreeMap;
use std::path::Path;

use drpkit_core::coverage::{JointSampleSet, ParameterPrior, Simulation, StoredSamples};
use drpkit_core::numerics::{DenseMatrix, SeededRng};

use crate::error::{CliError, Result};
use crate::output::{atomic_write, fmt_f64};

fn header(prefix: &[&str], stem: &str, n: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|i| format!("{stem}_{i}")))
        .collect()
}

fn write_rows(path: &Path, head: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    w.write_record(&head).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

/// `sim_id, theta_0..theta_{D-1}`.
pub fn write_joint(path: &Path, dataset: &JointSampleSet) -> Result<()> {
    write_rows(
        path,
        header(&["sim_id"], "theta", dataset.dim_theta()),
        dataset.iter().map(|s| {
            std::iter::once(s.sim_id.to_string())
                .chain(s.theta.iter().map(|v| fmt_f64(*v)))
                .collect()
        }),
    )
}

/// `sim_id, x_0..x_{M-1}`.
pub fn write_obs(path: &Path, dataset: &JointSampleSet) -> Result<()> {
    let m = dataset.sims().first().map_or(0, |s| s.x.len());
    write_rows(
        path,
        header(&["sim_id"], "x", m),
        dataset.iter().map(|s| {
            std::iter::once(s.sim_id.to_string())
                .chain(s.x.iter().map(|v| fmt_f64(*v)))
                .collect()
        }),
    )
}

/// `sim_id, sample_id, theta_0..theta_{D-1}`.
pub fn write_posterior(path: &Path, samples: &BTreeMap<usize, DenseMatrix>, dim: usize) -> Result<()> {
    write_rows(
        path,
        header(&["sim_id", "sample_id"], "theta", dim),
        samples.iter().flat_map(|(sim, m)| {
            (0..m.rows()).map(move |j| {
                [sim.to_string(), j.to_string()]
                    .into_iter()
                    .chain(m.row(j).iter().map(|v| fmt_f64(*v)))
                    .collect()
            })
        }),
    )
}

/// Parsed rows: (line, leading integer ids, float values).
type Rows = Vec<(u64, Vec<usize>, Vec<f64>)>;

fn read_table(path: &Path, ids: &[&str], stem: &str) -> Result<(usize, Rows)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::Runtime(format!("{}: {other:?}", path.display())),
        })?;
    let head = rdr
        .headers()
        .map_err(|e| CliError::schema(path, 1, e.to_string()))?
        .clone();
    let width = head.len();
    if width <= ids.len() {
        return Err(CliError::schema(
            path,
            1,
            format!("header needs {} and at least one {stem}_i column", ids.join(", ")),
        ));
    }
    let n = width - ids.len();
    let expected = header(ids, stem, n);
    for (i, (got, want)) in head.iter().zip(&expected).enumerate() {
        if got != want {
            return Err(CliError::schema(
                path,
                1,
                format!("column {i} is `{got}`, expected `{want}`"),
            ));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::schema(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut id_vals = Vec::with_capacity(ids.len());
        for (k, name) in ids.iter().enumerate() {
            let v = rec[k].parse::<usize>().map_err(|_| {
                CliError::schema(path, line, format!("{name} `{}` is not a nonnegative integer", &rec[k]))
            })?;
            id_vals.push(v);
        }
        let mut vals = Vec::with_capacity(n);
        for k in ids.len()..width {
            let v = rec[k].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::schema(path, line, format!("`{}` in column {} is not a finite number", &rec[k], &head[k]))
            })?;
            vals.push(v);
        }
        rows.push((line, id_vals, vals));
    }
    Ok((n, rows))
}

/// Reads a joint file; observation payloads are left empty.
pub fn read_joint(path: &Path) -> Result<JointSampleSet> {
    let (dim, rows) = read_table(path, &["sim_id"], "theta")?;
    if rows.is_empty() {
        return Err(CliError::schema(path, 1, "joint file has no simulations"));
    }
    let n = rows.len();
    let mut seen = vec![false; n];
    let mut sims = Vec::with_capacity(n);
    for (line, ids, theta) in rows {
        let id = ids[0];
        if id >= n {
            return Err(CliError::schema(
                path,
                line,
                format!("sim_id {id} outside the dense range [0, {n})"),
            ));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(CliError::schema(path, line, format!("duplicate sim_id {id}")));
        }
        sims.push(Simulation {
            sim_id: id,
            theta,
            x: vec![],
        });
    }
    sims.sort_by_key(|s| s.sim_id);
    JointSampleSet::new(dim, sims).map_err(|e| CliError::schema(path, 1, e.to_string()))
}

/// Reads posterior samples and checks them against the joint file.
pub fn read_posterior(path: &Path, joint: &JointSampleSet) -> Result<StoredSamples> {
    let (dim, rows) = read_table(path, &["sim_id", "sample_id"], "theta")?;
    if dim != joint.dim_theta() {
        return Err(CliError::schema(
            path,
            1,
            format!("{dim} parameter columns, joint file has {}", joint.dim_theta()),
        ));
    }
    let mut by_sim: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (line, ids, theta) in rows {
        let id = ids[0];
        if id >= joint.n_sims() {
            return Err(CliError::schema(
                path,
                line,
                format!("sim_id {id} does not appear in the joint file"),
            ));
        }
        by_sim.entry(id).or_default().extend(theta);
    }
    if let Some(missing) = (0..joint.n_sims()).find(|i| !by_sim.contains_key(i)) {
        return Err(CliError::schema(
            path,
            1,
            format!("sim_id {missing} from the joint file has no posterior samples"),
        ));
    }
    let mut stored = StoredSamples::new();
    for (id, data) in by_sim {
        let rows = data.len() / dim;
        let m = DenseMatrix::from_row_major(rows, dim, data)
            .map_err(|e| CliError::schema(path, 1, e.to_string()))?;
        stored.insert(id, m);
    }
    Ok(stored)
}

/// Attaches observation rows to the matching simulations.
pub fn attach_obs(path: &Path, joint: JointSampleSet) -> Result<JointSampleSet> {
    let (_, rows) = read_table(path, &["sim_id"], "x")?;
    let mut obs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (line, ids, x) in rows {
        if ids[0] >= joint.n_sims() {
            return Err(CliError::schema(
                path,
                line,
                format!("sim_id {} does not appear in the joint file", ids[0]),
            ));
        }
        if obs.insert(ids[0], x).is_some() {
            return Err(CliError::schema(path, line, format!("duplicate sim_id {}", ids[0])));
        }
    }
    let dim = joint.dim_theta();
    let sims = joint
        .sims()
        .iter()
        .map(|s| {
            let x = obs.remove(&s.sim_id).ok_or_else(|| {
                CliError::schema(path, 1, format!("no observation for sim_id {}", s.sim_id))
            })?;
            Ok(Simulation { x, ..s.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    JointSampleSet::new(dim, sims).map_err(|e| CliError::schema(path, 1, e.to_string()))
}

/// One `lo:hi` line per parameter dimension.
pub fn read_bounds(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line.split_once(':').and_then(|(a, b)| {
            Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo < hi => out.push((lo, hi)),
            _ => {
                return Err(CliError::schema(
                    path,
                    i as u64 + 1,
                    format!("expected `lo:hi` with lo < hi, got `{line}`"),
                ))
            }
        }
    }
    Ok(out)
}

pub fn write_bounds(path: &Path, bounds: &[(f64, f64)]) -> Result<()> {
    let text: String = bounds
        .iter()
        .map(|(lo, hi)| format!("{}:{}\n", fmt_f64(*lo), fmt_f64(*hi)))
        .collect();
    atomic_write(path, text.as_bytes())
}

/// Metric weights separated by commas or newlines.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        for tok in raw.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let w = tok.parse::<f64>().map_err(|_| {
                CliError::schema(path, i as u64 + 1, format!("`{tok}` is not a number"))
            })?;
            out.push(w);
        }
    }
    Ok(out)
}

/// Reference points drawn uniformly from a file of prior samples
/// (`theta_0..theta_{D-1}` columns).
#[derive(Debug, Clone)]
pub struct EmpiricalPrior {
    draws: Vec<Vec<f64>>,
}

impl EmpiricalPrior {
    pub fn read(path: &Path) -> Result<Self> {
        let (_, rows) = read_table(path, &[], "theta").or_else(|_| {
            // Allow a leading id column, e.g. a joint file reused as prior draws.
            read_table(path, &["sim_id"], "theta")
        })?;
        if rows.is_empty() {
            return Err(CliError::schema(path, 1, "prior file has no draws"));
        }
        Ok(Self {
            draws: rows.into_iter().map(|(_, _, v)| v).collect(),
        })
    }
}

impl ParameterPrior for EmpiricalPrior {
    fn dim(&self) -> usize {
        self.draws[0].len()
    }

    fn draw(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.draws[rng.index(self.draws.len())].clone()
    }
}
