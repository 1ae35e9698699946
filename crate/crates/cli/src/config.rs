//! Flat `key = value` run configuration.
//!
//! Paths are resolved against the directory holding the config file. The
//! config hash covers every effective entry except `out`, so the same
//! experiment written to two directories hashes the same.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use stockcast::harness::Mode;
use stockcast::lstm::TrainConfig;
use stockcast::market_data::parse_date;
use stockcast::models::{Algo, ModelSpec, Task};
use stockcast::sofnn::SofnnConfig;

use crate::error::{CliError, CliResult};

const PLAIN_KEYS: &[&str] = &[
    "prices", "features", "holidays", "moods", "tweets", "lexicon", "reference", "train_end", "test_end", "mode", "models",
    "seed", "out", "granger.lags",
];

const LSTM_KEYS: &[&str] =
    &["epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "seq_len", "hidden", "clip", "refit"];

const SOFNN_KEYS: &[&str] = &[
    "delta", "phi_min", "sigma0", "sigma_min", "kappa", "prune_threshold", "prune_every", "max_neurons", "epochs", "ridge",
    "min_improvement",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    base: PathBuf,
}

/// One entry of the `models` list.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Shallow(ModelSpec),
    Lstm { config: TrainConfig, refit: bool },
}

impl Job {
    pub fn label(&self) -> String {
        match self {
            Job::Shallow(s) => format!("{}_{}", s.algo, s.task.name()),
            Job::Lstm { .. } => "lstm_regress".into(),
        }
    }
}

impl RunConfig {
    pub fn empty(base: PathBuf) -> Self {
        Self { entries: BTreeMap::new(), base }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base, &path.display().to_string())
    }

    pub fn parse(text: &str, base: PathBuf, origin: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Config { origin: origin.to_string(), line: n + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !known_key(k) {
                return Err(bad(format!("unknown key {k:?}")));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self { entries, base })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|p| self.base.join(p))
    }

    pub fn require_path(&self, key: &str) -> CliResult<PathBuf> {
        self.path(key).ok_or_else(|| CliError::Usage(format!("config key `{key}` is required")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.path("out").unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.get("seed").map_or(Ok(0), |s| s.parse().map_err(|_| invalid("seed", s)))
    }

    pub fn mode(&self) -> CliResult<Mode> {
        self.get("mode").map_or(Ok(Mode::Contemporaneous), |s| s.parse().map_err(|_| invalid("mode", s)))
    }

    pub fn date(&self, key: &str, default: &str) -> CliResult<NaiveDate> {
        let s = self.get(key).unwrap_or(default);
        parse_date(s).map_err(|_| invalid(key, s))
    }

    pub fn lags(&self) -> CliResult<Vec<usize>> {
        let Some(s) = self.get("granger.lags") else {
            return Ok((1..=5).collect());
        };
        s.split(',').map(|p| p.trim().parse().ok().filter(|&l: &usize| l > 0).ok_or_else(|| invalid("granger.lags", s))).collect()
    }

    /// sha256 over the sorted effective entries, `out` excluded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries.iter().filter(|(k, _)| k.as_str() != "out") {
            h.update(format!("{k} = {v}\n"));
        }
        hex::encode(h.finalize())
    }

    pub fn sofnn(&self) -> CliResult<SofnnConfig> {
        let mut c = SofnnConfig { seed: self.seed()?, ..SofnnConfig::default() };
        for key in SOFNN_KEYS {
            let full = format!("sofnn.{key}");
            let Some(s) = self.get(&full) else { continue };
            let v: f64 = s.parse().map_err(|_| invalid(&full, s))?;
            let count = || if v >= 0.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(invalid(&full, s)) };
            match *key {
                "delta" => c.delta = v,
                "phi_min" => c.phi_min = v,
                "sigma0" => c.sigma0 = v,
                "sigma_min" => c.sigma_min = v,
                "kappa" => c.kappa = v,
                "prune_threshold" => c.prune_threshold = v,
                "prune_every" => c.prune_every = count()?,
                "max_neurons" => c.max_neurons = count()?,
                "epochs" => c.epochs = count()?,
                "ridge" => c.ridge = v,
                _ => c.min_improvement = v,
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn lstm(&self, seed: u64) -> CliResult<Job> {
        let mut c = TrainConfig { seed, ..TrainConfig::default() };
        let mut refit = false;
        for key in LSTM_KEYS {
            let full = format!("models.lstm.{key}");
            let Some(s) = self.get(&full) else { continue };
            if *key == "refit" {
                refit = s.parse().map_err(|_| invalid(&full, s))?;
                continue;
            }
            let v: f64 = s.parse().map_err(|_| invalid(&full, s))?;
            let count = || if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(invalid(&full, s)) };
            match *key {
                "epochs" => c.epochs = count()?,
                "batch_size" => c.batch_size = count()?,
                "seq_len" => c.seq_len = count()?,
                "hidden" => c.hidden = count()?,
                "learning_rate" => c.learning_rate = v,
                "beta1" => c.beta1 = v,
                "beta2" => c.beta2 = v,
                "epsilon" => c.epsilon = v,
                _ => c.clip = v,
            }
        }
        c.validate()?;
        Ok(Job::Lstm { config: c, refit })
    }

    /// Expands the `models` list. Entries are `name`, `name:task` or `all`;
    /// a bare name means every task the algorithm supports.
    pub fn jobs(&self) -> CliResult<Vec<Job>> {
        let list = self.get("models").unwrap_or("");
        let seed = self.seed()?;
        let mut jobs: Vec<Job> = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, task) = match item.split_once(':') {
                Some((n, t)) => (n, Some(t.parse::<Task>().map_err(|_| invalid("models", item))?)),
                None => (item, None),
            };
            let mut add = |job: Job| {
                if !jobs.contains(&job) {
                    jobs.push(job);
                }
            };
            match name {
                "all" => {
                    for task in [Task::Classify, Task::Regress] {
                        for algo in Algo::ALL.into_iter().filter(|a| a.supports(task)) {
                            add(Job::Shallow(self.spec(algo, task, seed)?));
                        }
                    }
                    add(self.lstm(seed)?);
                }
                "lstm" => {
                    if task == Some(Task::Classify) {
                        return Err(invalid("models", item));
                    }
                    add(self.lstm(seed)?);
                }
                _ => {
                    let algo: Algo = name.parse().map_err(|_| invalid("models", item))?;
                    let tasks: Vec<Task> = match task {
                        Some(t) if algo.supports(t) => vec![t],
                        Some(_) => return Err(invalid("models", item)),
                        None => [Task::Classify, Task::Regress].into_iter().filter(|t| algo.supports(*t)).collect(),
                    };
                    for t in tasks {
                        add(Job::Shallow(self.spec(algo, t, seed)?));
                    }
                }
            }
        }
        if jobs.is_empty() {
            return Err(CliError::Usage("the model list is empty".into()));
        }
        Ok(jobs)
    }

    /// `models.<algo>.<param>` applies to both tasks; `models.<algo>:<task>.<param>` to one.
    fn spec(&self, algo: Algo, task: Task, seed: u64) -> CliResult<ModelSpec> {
        let mut spec = ModelSpec::new(algo, task, seed)?;
        for scope in [algo.name().to_string(), format!("{}:{}", algo.name(), task.name())] {
            for param in algo.hyperparameters() {
                let key = format!("models.{scope}.{param}");
                if let Some(s) = self.get(&key) {
                    let v = if *param == "bootstrap" {
                        match s {
                            "true" => 1.0,
                            "false" => 0.0,
                            _ => s.parse().map_err(|_| invalid(&key, s))?,
                        }
                    } else {
                        s.parse().map_err(|_| invalid(&key, s))?
                    };
                    spec.set(param, v)?;
                }
            }
        }
        Ok(spec)
    }
}

fn invalid(key: &str, value: &str) -> CliError {
    CliError::Usage(format!("invalid value {value:?} for `{key}`"))
}

fn known_key(k: &str) -> bool {
    if PLAIN_KEYS.contains(&k) {
        return true;
    }
    if let Some(rest) = k.strip_prefix("sofnn.") {
        return SOFNN_KEYS.contains(&rest);
    }
    let Some(rest) = k.strip_prefix("models.") else {
        return false;
    };
    let Some((scope, param)) = rest.rsplit_once('.') else {
        return false;
    };
    if scope == "lstm" {
        return LSTM_KEYS.contains(&param);
    }
    let (name, task) = match scope.split_once(':') {
        Some((n, t)) => (n, Some(t)),
        None => (scope, None),
    };
    let Ok(algo) = name.parse::<Algo>() else {
        return false;
    };
    if let Some(t) = task {
        match t.parse::<Task>() {
            Ok(t) if algo.supports(t) => {}
            _ => return false,
        }
    }
    algo.hyperparameters().contains(&param)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text, PathBuf::from("/base"), "test").unwrap()
    }

    #[test]
    fn parses_and_resolves_paths() {
        let c = cfg("# comment\nprices = data/p.csv\nseed = 7 # trailing\n");
        assert_eq!(c.path("prices").unwrap(), PathBuf::from("/base/data/p.csv"));
        assert_eq!(c.seed().unwrap(), 7);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(RunConfig::parse("colour = red\n", PathBuf::new(), "t").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2\n", PathBuf::new(), "t").is_err());
        assert!(RunConfig::parse("models.cart.learning_rate = 1\n", PathBuf::new(), "t").is_err());
        assert!(RunConfig::parse("models.logistic:regress.l2 = 1\n", PathBuf::new(), "t").is_err());
    }

    #[test]
    fn hash_ignores_out_and_order() {
        let a = cfg("seed = 1\nmodels = cart\nout = a\n");
        let b = cfg("models = cart\nseed = 1\nout = b\n");
        let c = cfg("models = cart\nseed = 2\n");
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn model_list_expansion() {
        assert_eq!(cfg("models = all\n").jobs().unwrap().len(), 16);
        assert_eq!(cfg("models = cart\n").jobs().unwrap().len(), 2);
        assert_eq!(cfg("models = cart:classify, logistic\n").jobs().unwrap().len(), 2);
        assert_eq!(cfg("models = cart, cart:regress\n").jobs().unwrap().len(), 2);
        assert!(cfg("models = \n").jobs().is_err());
        assert!(cfg("models = logistic:regress\n").jobs().is_err());
        assert!(cfg("models = prophet\n").jobs().is_err());
    }

    #[test]
    fn overrides_reach_specs() {
        let jobs = cfg("models = adaboost:classify, lstm\nmodels.adaboost.rounds = 1000\nmodels.lstm.epochs = 3\nmodels.lstm.refit = true\n")
            .jobs()
            .unwrap();
        match &jobs[0] {
            Job::Shallow(s) => assert_eq!(s.hyperparameters["rounds"], 1000.0),
            j => panic!("{j:?}"),
        }
        match &jobs[1] {
            Job::Lstm { config, refit } => assert!(config.epochs == 3 && *refit),
            j => panic!("{j:?}"),
        }
    }
}
