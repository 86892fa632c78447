//! Plain-text experiment configuration: flat `key = value` pairs plus
//! repeated `[atom]` sections. Diff-friendly, no schema dependency; parse
//! errors carry line numbers.

use crate::connection::{BallAtom, BumpAtom, ConnectionForm};
use crate::group::FuchsianRep;
use crate::hyp2::DiskPoint;
use crate::lie::{LieAlgebraElement, Target};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Connection(#[from] crate::connection::ConnectionError),
    #[error(transparent)]
    Hyp(#[from] crate::hyp2::HypError),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// A ball atom as written in a config `[atom]` section.
#[derive(Debug, Clone)]
pub struct AtomSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub covector: [f64; 2],
    pub value: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub target: Target,
    pub words: Vec<String>,
    pub atoms: Vec<AtomSpec>,
    /// integration tolerance
    pub tol: f64,
    /// report-level tolerance for certificates
    pub report_tol: f64,
    pub sample_len: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// experiment-specific keys, passed through verbatim
    pub extra: HashMap<String, String>,
    /// raw text, hashed into the run manifest
    pub raw: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "holonomy".into(),
            target: Target::Su2,
            words: Vec::new(),
            atoms: Vec::new(),
            tol: 1e-9,
            report_tol: 1e-6,
            sample_len: 6,
            sample_count: 100,
            seed: 1,
            out_dir: PathBuf::from("out"),
            extra: HashMap::new(),
            raw: String::new(),
        }
    }
}

fn parse_floats(line: usize, s: &str, want: Option<usize>) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        s.split_whitespace().map(str::parse::<f64>).collect();
    let vals = vals.map_err(|e| ConfigError::Parse {
        line,
        msg: format!("bad number in `{s}`: {e}"),
    })?;
    if let Some(n) = want {
        if vals.len() != n {
            return Err(ConfigError::Parse {
                line,
                msg: format!("expected {n} numbers, got {}", vals.len()),
            });
        }
    }
    Ok(vals)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            raw: text.to_string(),
            ..Default::default()
        };
        // fields of the [atom] section currently being read
        let mut atom: Option<HashMap<String, (usize, String)>> = None;
        let flush_atom = |atom: &mut Option<HashMap<String, (usize, String)>>,
                              atoms: &mut Vec<AtomSpec>,
                              line: usize|
         -> Result<()> {
            if let Some(fields) = atom.take() {
                let get = |k: &str| -> Result<(usize, String)> {
                    fields.get(k).cloned().ok_or(ConfigError::Parse {
                        line,
                        msg: format!("[atom] section is missing `{k}`"),
                    })
                };
                let (l, v) = get("center")?;
                let c = parse_floats(l, &v, Some(2))?;
                let (l, v) = get("radius")?;
                let r = parse_floats(l, &v, Some(1))?;
                let (l, v) = get("covector")?;
                let cv = parse_floats(l, &v, Some(2))?;
                let (l, v) = get("value")?;
                let val = parse_floats(l, &v, None)?;
                atoms.push(AtomSpec {
                    center: [c[0], c[1]],
                    radius: r[0],
                    covector: [cv[0], cv[1]],
                    value: val,
                });
            }
            Ok(())
        };
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw_line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            if t.starts_with('[') {
                flush_atom(&mut atom, &mut cfg.atoms, line)?;
                match t {
                    "[atom]" => atom = Some(HashMap::new()),
                    other => {
                        return Err(ConfigError::Parse {
                            line,
                            msg: format!("unknown section `{other}`"),
                        })
                    }
                }
                continue;
            }
            let Some((key, value)) = t.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("expected `key = value`, got `{t}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if let Some(fields) = atom.as_mut() {
                fields.insert(key.to_string(), (line, value.to_string()));
                continue;
            }
            match key {
                "experiment" => cfg.experiment = value.to_string(),
                "target" => {
                    cfg.target = match value {
                        "abelian" => Target::Abelian,
                        "su2" => Target::Su2,
                        "heisenberg" => Target::Heisenberg,
                        other => {
                            return Err(ConfigError::Parse {
                                line,
                                msg: format!(
                                    "unknown target `{other}` (abelian|su2|heisenberg)"
                                ),
                            })
                        }
                    }
                }
                "words" => {
                    cfg.words = value
                        .split(',')
                        .map(|w| w.trim().to_string())
                        .filter(|w| !w.is_empty())
                        .collect()
                }
                "tol" | "report_tol" | "seed" | "sample_len" | "sample_count" => {
                    let parse_err = |e: &dyn std::fmt::Display| ConfigError::Parse {
                        line,
                        msg: format!("bad value for {key}: {e}"),
                    };
                    match key {
                        "tol" => cfg.tol = value.parse().map_err(|e| parse_err(&e))?,
                        "report_tol" => {
                            cfg.report_tol = value.parse().map_err(|e| parse_err(&e))?
                        }
                        "seed" => cfg.seed = value.parse().map_err(|e| parse_err(&e))?,
                        "sample_len" => {
                            cfg.sample_len = value.parse().map_err(|e| parse_err(&e))?
                        }
                        _ => cfg.sample_count = value.parse().map_err(|e| parse_err(&e))?,
                    }
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                _ => {
                    cfg.extra.insert(key.to_string(), value.to_string());
                }
            }
        }
        let last = text.lines().count();
        flush_atom(&mut atom, &mut cfg.atoms, last)?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?)?)
    }

    fn algebra_value(&self, v: &[f64], line_hint: usize) -> Result<LieAlgebraElement> {
        match self.target {
            Target::Abelian => Ok(LieAlgebraElement::Abelian(v.to_vec())),
            Target::Su2 | Target::Heisenberg => {
                if v.len() != 3 {
                    return Err(ConfigError::Parse {
                        line: line_hint,
                        msg: format!("{} atom values need 3 coordinates", self.target),
                    });
                }
                let c = [v[0], v[1], v[2]];
                Ok(match self.target {
                    Target::Su2 => LieAlgebraElement::Su2(c),
                    _ => LieAlgebraElement::Heisenberg(c),
                })
            }
        }
    }

    /// Abelian coordinate dimension implied by the atom values (1 if none).
    pub fn dim(&self) -> usize {
        if self.target == Target::Abelian {
            self.atoms.iter().map(|a| a.value.len()).max().unwrap_or(1)
        } else {
            1
        }
    }

    /// Assemble the connection form described by the `[atom]` sections.
    pub fn build_form(&self, rep: Arc<FuchsianRep>) -> Result<ConnectionForm> {
        let mut form = ConnectionForm::new(rep, self.target, self.dim());
        for (i, spec) in self.atoms.iter().enumerate() {
            let value = self.algebra_value(&spec.value, 0)?;
            form.add_atom(BumpAtom::Ball(BallAtom {
                center: DiskPoint::new(spec.center[0], spec.center[1])?,
                radius: spec.radius,
                covector: spec.covector,
                value,
            }))
            .map_err(|e| ConfigError::Parse {
                line: 0,
                msg: format!("atom {} rejected: {e}", i + 1),
            })?;
        }
        Ok(form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# demo experiment
experiment = defect-scan
target = heisenberg
seed = 42
tol = 1e-10
words = ab, aBc , d
sample_len = 8
m0 = 4

[atom]
center = 0.0 0.12
radius = 0.4
covector = 0.9 0.3
value = 1.0 0.2 0.1

[atom]
center = 0.15 -0.25
radius = 0.35
covector = 0.4 -1.0
value = 0.3 1.0 -0.2
";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.experiment, "defect-scan");
        assert_eq!(cfg.target, Target::Heisenberg);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.words, vec!["ab", "aBc", "d"]);
        assert_eq!(cfg.sample_len, 8);
        assert_eq!(cfg.atoms.len(), 2);
        assert_eq!(cfg.atoms[1].covector, [0.4, -1.0]);
        assert_eq!(cfg.extra["m0"], "4");
    }

    #[test]
    fn error_carries_line_number() {
        let bad = "experiment = x\ntarget = so3\n";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
        let bad2 = "tol = fast\n";
        let err2 = ExperimentConfig::parse(bad2).unwrap_err();
        assert!(matches!(err2, ConfigError::Parse { line: 1, .. }), "{err2}");
    }

    #[test]
    fn atom_sections_require_fields() {
        let bad = "[atom]\ncenter = 0 0\n";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn builds_form() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let rep = Arc::new(FuchsianRep::standard());
        let form = cfg.build_form(rep).unwrap();
        assert_eq!(form.atoms().len(), 2);
    }
}
