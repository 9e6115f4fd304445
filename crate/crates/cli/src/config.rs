use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use mindisk::disk_pde::DiskGrid;
use mindisk::{MetricField, Vec3};

use crate::GlobalArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] mindisk::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Run(_) | Self::Io { .. } => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key = value` lines; `#` and `;` start comments.
pub fn parse_ini(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(format!("config line {}: expected `key = value`", n + 1)));
        };
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        let value = v.trim().trim_matches('"').to_string();
        if key.is_empty() || value.is_empty() {
            return Err(config_err(format!("config line {}: empty key or value", n + 1)));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(config_err(format!("config line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(out)
}

fn long_names(cmd: &clap::Command) -> impl Iterator<Item = String> + '_ {
    cmd.get_arguments().filter_map(|a| a.get_long().map(str::to_string))
}

/// Flag values with the config file as fallback.
pub struct Settings {
    global: GlobalArgs,
    file: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(global: &GlobalArgs, root: &clap::Command, command: &str) -> CliResult<Self> {
        let file = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
                parse_ini(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut allowed: BTreeSet<String> = long_names(root).collect();
        if let Some(sub) = root.find_subcommand(command) {
            allowed.extend(long_names(sub));
        }
        for k in ["config", "help", "version"] {
            allowed.remove(k);
        }
        if let Some(bad) = file.keys().find(|k| !allowed.contains(*k)) {
            return Err(config_err(format!("unknown config key `{bad}` for `{command}`")));
        }
        Ok(Self { global: global.clone(), file })
    }

    /// The flag value if given, else the parsed config value.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(s) => s.parse().map(Some).map_err(|e| config_err(format!("invalid value for `{key}`: {e}"))),
            None => Ok(None),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(key, flag)?.ok_or_else(|| config_err(format!("missing required `--{key}`")))
    }

    pub fn or<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(key, flag)?.unwrap_or(default))
    }

    pub fn vec3(&self, key: &str, flag: &Option<String>) -> CliResult<Option<Vec3>> {
        self.pick(key, flag.clone())?.map(|s: String| parse_vec3(key, &s)).transpose()
    }

    pub fn list(&self, key: &str, flag: &Option<String>) -> CliResult<Option<Vec<f64>>> {
        self.pick(key, flag.clone())?.map(|s: String| parse_list(key, &s)).transpose()
    }

    pub fn r(&self) -> CliResult<Option<f64>> {
        self.pick("r", self.global.r)
    }

    pub fn eps(&self) -> CliResult<Option<f64>> {
        self.pick("eps", self.global.eps)
    }

    pub fn tol(&self) -> CliResult<Option<f64>> {
        let t = self.pick("tol", self.global.tol)?;
        if let Some(t) = t {
            if !(t > 0.0) {
                return Err(config_err(format!("--tol must be positive, got {t}")));
            }
        }
        Ok(t)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.or("seed", self.global.seed, 0)
    }

    pub fn out_dir(&self) -> CliResult<PathBuf> {
        let dir = self.or("out", self.global.out.clone(), PathBuf::from("."))?;
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        Ok(dir)
    }

    pub fn grid(&self) -> CliResult<Arc<DiskGrid>> {
        let nr = self.or("nr", self.global.nr, 64)?;
        let nt = self.or("ntheta", self.global.ntheta, 128)?;
        DiskGrid::new(nr, nt).map_err(|e| config_err(e.to_string()))
    }

    pub fn ball_radius(&self) -> CliResult<Option<f64>> {
        let r = self.pick("ball-radius", self.global.ball_radius)?;
        if let Some(r) = r {
            if !(r >= 1.0) {
                return Err(config_err(format!("--ball-radius must be at least 1, got {r}")));
            }
        }
        Ok(r)
    }

    /// The base metric, without the ball rescaling.
    pub fn base_metric(&self) -> CliResult<MetricField> {
        let name = self.or("metric", self.global.metric.clone(), "euclidean".to_string())?;
        let field = match name.as_str() {
            "euclidean" => Ok(MetricField::euclidean()),
            "schwarzschild" => MetricField::schwarzschild(self.or("mass", self.global.mass, 0.1)?),
            "conformal_bump" => {
                MetricField::conformal_bump(self.r()?.unwrap_or(4.0), self.eps()?.unwrap_or(0.05))
            }
            "conical" => MetricField::conical(self.or("alpha", self.global.alpha, 0.95)?),
            other => return Err(config_err(format!("unknown metric `{other}`"))),
        };
        field.map_err(|e| config_err(e.to_string()))
    }

    /// The metric seen in the unit ball.
    pub fn metric(&self) -> CliResult<MetricField> {
        let base = self.base_metric()?;
        match self.ball_radius()? {
            Some(r) => base.scaled(r).map_err(|e| config_err(e.to_string())),
            None => Ok(base),
        }
    }
}

pub fn parse_list(key: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| config_err(format!("invalid value for `{key}`: {e}"))))
        .collect()
}

pub fn parse_vec3(key: &str, s: &str) -> CliResult<Vec3> {
    match parse_list(key, s)?[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(config_err(format!("`{key}` expects three comma-separated numbers"))),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))
}
