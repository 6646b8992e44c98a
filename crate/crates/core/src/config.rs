//! Flat `key=value` experiment configuration.
//!
//! One pair per line; blank lines and lines starting with `#` are skipped,
//! and a `#` after a value starts a trailing comment. Unknown keys are
//! rejected. Lists are comma separated.
//!
//! ```text
//! example=ex1
//! stages=10,20,100,1000
//! mesh=100
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::{CenterDatum, NormKind, Reference};
use crate::error::{Error, Result};
use crate::femsolve::LoadRule;
use crate::forcing::{ExampleId, FieldParams, Orientation};
use crate::stargraph::{CoefficientSource, EXPERIMENT_PROBS, EXPERIMENT_VALUES};

/// Output produced by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Table,
    Cauchy,
    Solution,
    Upscaled,
    Weyl,
    Identity,
    Rate,
}

impl Emit {
    pub fn as_str(self) -> &'static str {
        match self {
            Emit::Table => "table",
            Emit::Cauchy => "cauchy",
            Emit::Solution => "solution",
            Emit::Upscaled => "upscaled",
            Emit::Weyl => "weyl",
            Emit::Identity => "identity",
            Emit::Rate => "rate",
        }
    }
}

impl FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table" => Emit::Table,
            "cauchy" => Emit::Cauchy,
            "solution" => Emit::Solution,
            "upscaled" => Emit::Upscaled,
            "weyl" => Emit::Weyl,
            "identity" => Emit::Identity,
            "rate" => Emit::Rate,
            _ => return Err(Error::invalid(format!("unknown emit `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    Deterministic,
    Random,
}

/// Which reference a table is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    Oracle,
    Upscaled,
    Printed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: ExampleId,
    pub stages: Vec<usize>,
    pub centers: Vec<usize>,
    pub mesh: usize,
    pub coeff: CoefficientMode,
    pub probs: Vec<f64>,
    pub seed: u64,
    pub h: CenterDatum,
    pub reference: ReferenceMode,
    pub reference_mesh: usize,
    pub output: Option<PathBuf>,
    pub emit: Emit,
    pub load_rule: LoadRule,
    pub orientation: Orientation,
    pub norm: NormKind,
    pub constant: f64,
    pub amplitude: f64,
    pub window: usize,
    pub weyl_n: usize,
    pub weyl_interval: (f64, f64),
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults for `example`: 100 elements per edge, `h = 0`,
    /// deterministic coefficients (random for `ex2`).
    pub fn new(example: ExampleId) -> Self {
        let coeff = if example == ExampleId::Ex2 {
            CoefficientMode::Random
        } else {
            CoefficientMode::Deterministic
        };
        ExperimentConfig {
            example,
            stages: vec![10, 20, 100, 1000],
            centers: vec![10, 20, 100, 1000],
            mesh: 100,
            coeff,
            probs: EXPERIMENT_PROBS.to_vec(),
            seed: 0,
            h: CenterDatum::Constant(0.0),
            reference: ReferenceMode::Oracle,
            reference_mesh: 400,
            output: None,
            emit: Emit::Table,
            load_rule: LoadRule::Gauss3,
            orientation: Orientation::Center,
            norm: NormKind::Seminorm,
            constant: 1.0,
            amplitude: 100.0,
            window: 10,
            weyl_n: 100_000,
            weyl_interval: (0.0, std::f64::consts::PI),
            timing: false,
        }
    }

    pub fn coefficient_source(&self) -> CoefficientSource {
        match self.coeff {
            CoefficientMode::Deterministic => CoefficientSource::Deterministic,
            CoefficientMode::Random => CoefficientSource::Random {
                seed: self.seed,
                probs: self.probs.clone(),
                values: EXPERIMENT_VALUES.to_vec(),
            },
        }
    }

    pub fn field_params(&self) -> FieldParams {
        FieldParams {
            constant: self.constant,
            amplitude: self.amplitude,
            orientation: self.orientation,
            ..FieldParams::default()
        }
    }

    pub fn reference(&self) -> Reference {
        match self.reference {
            ReferenceMode::Oracle => Reference::Oracle,
            ReferenceMode::Printed => Reference::Printed,
            ReferenceMode::Upscaled => Reference::Upscaled {
                m: self.reference_mesh,
            },
        }
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.mesh < 2 {
            return Err(Error::invalid(format!("mesh must be >= 2, got {}", self.mesh)));
        }
        if self.reference == ReferenceMode::Upscaled
            && (self.reference_mesh < 2 || self.reference_mesh % self.mesh != 0)
        {
            return Err(Error::invalid(format!(
                "reference_mesh {} must be a multiple of mesh {}",
                self.reference_mesh, self.mesh
            )));
        }
        if self.stages.is_empty() || self.stages.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("stages must be a nonempty increasing list"));
        }
        if self.stages[0] < 2 {
            return Err(Error::invalid("stages must be >= 2"));
        }
        if self.centers.is_empty() || self.centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("centers must be a nonempty increasing list"));
        }
        if self.probs.len() != EXPERIMENT_VALUES.len() {
            return Err(Error::invalid("probs needs one entry per coefficient group (2)"));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 || self.probs.iter().any(|p| *p < 0.0) {
            return Err(Error::invalid("probs must be >= 0 and sum to 1"));
        }
        let (lo, hi) = self.weyl_interval;
        if !(0.0 <= lo && lo < hi && hi <= std::f64::consts::TAU) {
            return Err(Error::invalid("weyl_interval must satisfy 0 <= c < d <= 2π"));
        }
        if self.weyl_n == 0 {
            return Err(Error::invalid("weyl_n must be >= 1"));
        }
        Ok(())
    }

    /// All settings as `key=value` pairs joined by `;`, in a fixed order.
    pub fn normalized(&self) -> String {
        let list = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let h = match self.h {
            CenterDatum::Constant(c) => format!("{c}"),
            CenterDatum::PerEdge(c) => format!("{c}*n"),
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "example={};stages={};centers={};mesh={};coeff={};probs={};seed={};h={};\
             reference={};reference_mesh={};emit={};load_rule={};orientation={};norm={};\
             constant={};amplitude={};window={};weyl_n={};weyl_interval={},{}",
            self.example,
            list(&self.stages),
            list(&self.centers),
            self.mesh,
            match self.coeff {
                CoefficientMode::Deterministic => "deterministic",
                CoefficientMode::Random => "random",
            },
            self.probs
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.seed,
            h,
            match self.reference {
                ReferenceMode::Oracle => "oracle",
                ReferenceMode::Upscaled => "upscaled",
                ReferenceMode::Printed => "printed",
            },
            self.reference_mesh,
            self.emit.as_str(),
            self.load_rule.as_str(),
            self.orientation.as_str(),
            self.norm.as_str(),
            self.constant,
            self.amplitude,
            self.window,
            self.weyl_n,
            self.weyl_interval.0,
            self.weyl_interval.1,
        );
        s
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list entry `{}`", x.trim())))
        .collect()
}

fn parse_scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse::<T>().map_err(|_| format!("bad value `{value}`"))
}

fn parse_h(value: &str) -> std::result::Result<CenterDatum, String> {
    let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(c) = compact.strip_suffix("*n") {
        return parse_scalar::<f64>(c).map(CenterDatum::PerEdge);
    }
    parse_scalar::<f64>(&compact).map(CenterDatum::Constant)
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("bad boolean `{value}`")),
    }
}

/// Parses and validates a configuration. Errors name the offending line;
/// cross-field validation failures report line 0.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    let mut example = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if pairs.iter().any(|(_, k, _)| *k == key) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
        if key == "example" {
            example = Some(value.parse::<ExampleId>().map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?);
        }
        pairs.push((line_no, key, value));
    }
    let example = example.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing required key `example`".into(),
    })?;
    let mut cfg = ExperimentConfig::new(example);
    for (line, key, value) in pairs {
        let v = value.as_str();
        let res: std::result::Result<(), String> = (|| {
            match key.as_str() {
                "example" => {}
                "stages" => cfg.stages = parse_list(v)?,
                "centers" => cfg.centers = parse_list(v)?,
                "mesh" => {
                    cfg.mesh = parse_scalar(v)?;
                    if cfg.mesh < 2 {
                        return Err(format!("mesh must be >= 2, got {}", cfg.mesh));
                    }
                }
                "coeff" => {
                    cfg.coeff = match v {
                        "deterministic" => CoefficientMode::Deterministic,
                        "random" => CoefficientMode::Random,
                        _ => return Err(format!("unknown coefficient mode `{v}`")),
                    }
                }
                "probs" => cfg.probs = parse_list(v)?,
                "seed" => cfg.seed = parse_scalar(v)?,
                "h" => cfg.h = parse_h(v)?,
                "reference" => {
                    cfg.reference = match v {
                        "oracle" => ReferenceMode::Oracle,
                        "upscaled" => ReferenceMode::Upscaled,
                        "printed" => ReferenceMode::Printed,
                        _ => return Err(format!("unknown reference `{v}`")),
                    }
                }
                "reference_mesh" => cfg.reference_mesh = parse_scalar(v)?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                "emit" => cfg.emit = v.parse().map_err(|e: Error| e.to_string())?,
                "load_rule" => cfg.load_rule = v.parse().map_err(|e: Error| e.to_string())?,
                "orientation" => cfg.orientation = v.parse().map_err(|e: Error| e.to_string())?,
                "norm" => cfg.norm = v.parse().map_err(|e: Error| e.to_string())?,
                "constant" => cfg.constant = parse_scalar(v)?,
                "amplitude" => cfg.amplitude = parse_scalar(v)?,
                "window" => cfg.window = parse_scalar(v)?,
                "weyl_n" => cfg.weyl_n = parse_scalar(v)?,
                "weyl_interval" => {
                    let xs: Vec<f64> = parse_list(v)?;
                    if xs.len() != 2 {
                        return Err("weyl_interval needs two numbers".into());
                    }
                    cfg.weyl_interval = (xs[0], xs[1]);
                }
                "timing" => cfg.timing = parse_bool(v)?,
                _ => return Err(format!("unknown key `{key}`")),
            }
            Ok(())
        })();
        res.map_err(|msg| Error::Parse { line, msg })?;
    }
    cfg.validate().map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let c = parse_config("example=ex1\nstages=10,20,100,1000").unwrap();
        assert_eq!(c.mesh, 100);
        assert_eq!(c.stages, vec![10, 20, 100, 1000]);
        assert_eq!(c.h, CenterDatum::Constant(0.0));
        assert_eq!(c.coeff, CoefficientMode::Deterministic);
    }

    #[test]
    fn ex2_defaults_to_random() {
        let c = parse_config("example=ex2\nseed=42\ncoeff=random").unwrap();
        assert_eq!(c.coeff, CoefficientMode::Random);
        assert_eq!(c.seed, 42);
        assert_eq!(c.probs, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn errors_name_lines() {
        match parse_config("example=ex1\nmesh=1") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_config("# comment\nexample=ex1\n\ncolour=blue") {
            Err(Error::Parse { line: 4, msg }) => assert!(msg.contains("colour")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("mesh=10"), Err(Error::Parse { line: 0, .. })));
        assert!(matches!(parse_config("example=ex1\nstages=10,x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("example=ex1\njunk"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("example=ex1\nseed=1\nseed=2"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_config("example=ex1\nstages=20,10").is_err());
        assert!(parse_config("example=ex1\nprobs=0.5,0.6").is_err());
    }

    #[test]
    fn center_datum_forms() {
        assert_eq!(
            parse_config("example=ex1\nh=0.5*n").unwrap().h,
            CenterDatum::PerEdge(0.5)
        );
        assert_eq!(
            parse_config("example=ex1\nh = 3 # trailing").unwrap().h,
            CenterDatum::Constant(3.0)
        );
    }

    #[test]
    fn normalized_round_trips() {
        let text = "example=ex5\nemit=cauchy\ncenters=500,1000\nmesh=1000\nload_rule=nodal\norientation=rim\nh=2*n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.normalized().replace(';', "\n")).unwrap();
        assert_eq!(c, again);
    }
}
