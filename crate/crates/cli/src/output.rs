use std::io::Write;
use std::path::{Path, PathBuf};

use drpkit_core::coverage::CoverageCurve;

use crate::error::{CliError, Result};

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const COVERAGE_HEADER: &str = "credibility,alpha,ecp,band_lo,band_hi";

/// One parsed coverage CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCsv {
    pub credibility: Vec<f64>,
    pub alpha: Vec<f64>,
    pub ecp: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    /// `# key=value` rows in file order.
    pub metadata: Vec<(String, String)>,
}

impl CoverageCsv {
    pub fn from_curve(curve: &CoverageCurve, seed: u64) -> Self {
        let bounds = curve.band_bounds();
        let mut metadata = vec![
            ("method".to_string(), curve.method.to_string()),
            ("n_sims".to_string(), curve.n_sims.to_string()),
            ("n_post".to_string(), curve.n_post.to_string()),
            ("seed".to_string(), seed.to_string()),
            (
                "policy".to_string(),
                curve.policy.clone().unwrap_or_else(|| "none".into()),
            ),
            (
                "metric".to_string(),
                curve.metric.clone().unwrap_or_else(|| "none".into()),
            ),
            ("band_z".to_string(), curve.band.z.to_string()),
        ];
        if curve.ranks.len() != curve.n_sims {
            metadata.push(("n_ranks".to_string(), curve.ranks.len().to_string()));
        }
        Self {
            credibility: curve.levels.clone(),
            alpha: curve.alphas(),
            ecp: curve.ecp.clone(),
            band_lo: bounds.iter().map(|b| b.0).collect(),
            band_hi: bounds.iter().map(|b| b.1).collect(),
            metadata,
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = format!("{COVERAGE_HEADER}\n");
        for i in 0..self.credibility.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(self.credibility[i]),
                fmt_f64(self.alpha[i]),
                fmt_f64(self.ecp[i]),
                fmt_f64(self.band_lo[i]),
                fmt_f64(self.band_hi[i])
            ));
        }
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.render().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == COVERAGE_HEADER => {}
            _ => {
                return Err(CliError::schema(
                    path,
                    1,
                    format!("expected header `{COVERAGE_HEADER}`"),
                ))
            }
        }
        let mut csv = CoverageCsv {
            credibility: vec![],
            alpha: vec![],
            ecp: vec![],
            band_lo: vec![],
            band_hi: vec![],
            metadata: vec![],
        };
        for (i, raw) in lines {
            let line_no = i as u64 + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.trim().split_once('=').ok_or_else(|| {
                    CliError::schema(path, line_no, "metadata rows must be `# key=value`")
                })?;
                csv.metadata.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if !csv.metadata.is_empty() {
                return Err(CliError::schema(path, line_no, "data row after metadata"));
            }
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| CliError::schema(path, line_no, format!("bad number: {e}")))?;
            if vals.len() != 5 || vals.iter().any(|v| !v.is_finite()) {
                return Err(CliError::schema(
                    path,
                    line_no,
                    "expected 5 finite numbers per data row",
                ));
            }
            if let Some(prev) = csv.credibility.last() {
                if vals[0] <= *prev {
                    return Err(CliError::schema(
                        path,
                        line_no,
                        "credibility levels must increase",
                    ));
                }
            }
            csv.credibility.push(vals[0]);
            csv.alpha.push(vals[1]);
            csv.ecp.push(vals[2]);
            csv.band_lo.push(vals[3]);
            csv.band_hi.push(vals[4]);
        }
        if csv.credibility.is_empty() {
            return Err(CliError::schema(path, 1, "no data rows"));
        }
        Ok(csv)
    }
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
