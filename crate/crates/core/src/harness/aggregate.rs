use crate::agent::TrialResult;
use crate::error::{Error, Result};

/// Number of trailing samples averaged into a final-performance number.
pub const FINAL_WINDOW: usize = 5;

/// Mean and standard error (sample standard deviation over `√n`; zero for a
/// single value). Values are summed in sorted order so the result does not
/// depend on their order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    let var = sq.iter().sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregatePoint {
    pub step: u64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Learning curve averaged over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateCurve {
    /// Only steps at which every trial had finished at least one episode.
    pub points: Vec<AggregatePoint>,
    pub config_hash: String,
}

pub const AGGREGATE_HEADER: &str = "step,mean,stderr,trials,config_hash";

impl AggregateCurve {
    pub fn from_trials(trials: &[TrialResult]) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::Report("cannot aggregate zero trials".into()))?;
        for t in trials {
            if t.config_hash != first.config_hash {
                return Err(Error::Report(format!(
                    "trials from different configs ({} vs {})",
                    first.config_hash, t.config_hash
                )));
            }
            if t.samples.len() != first.samples.len()
                || t.samples
                    .iter()
                    .zip(&first.samples)
                    .any(|(a, b)| a.step != b.step)
            {
                return Err(Error::Report(
                    "trials were sampled at different steps".into(),
                ));
            }
        }
        let mut points = Vec::new();
        for (i, s) in first.samples.iter().enumerate() {
            let values: Vec<f64> = trials.iter().map(|t| t.samples[i].mean_return).collect();
            if values.iter().all(|v| v.is_finite()) {
                let (mean, stderr) = mean_stderr(&values);
                points.push(AggregatePoint {
                    step: s.step,
                    mean,
                    stderr,
                    trials: values.len(),
                });
            }
        }
        Ok(Self {
            points,
            config_hash: first.config_hash.clone(),
        })
    }

    /// Mean of the last [`FINAL_WINDOW`] sample means.
    pub fn final_performance(&self) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let tail = &self.points[self.points.len().saturating_sub(FINAL_WINDOW)..];
        Some(tail.iter().map(|p| p.mean).sum::<f64>() / tail.len() as f64)
    }

    pub fn last(&self) -> Option<&AggregatePoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.step, p.mean, p.stderr, p.trials, self.config_hash
            ));
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == AGGREGATE_HEADER => {}
            _ => {
                return Err(Error::parse(
                    origin,
                    1,
                    format!("expected header `{AGGREGATE_HEADER}`"),
                ))
            }
        }
        let mut points = Vec::new();
        let mut hash: Option<String> = None;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(origin, lineno, "expected 5 fields"));
            }
            let bad = |what: &str| Error::parse(origin, lineno, format!("bad {what}"));
            match &hash {
                None => hash = Some(f[4].to_string()),
                Some(h) if h != f[4] => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        "config hash changes within the file",
                    ))
                }
                _ => {}
            }
            points.push(AggregatePoint {
                step: f[0].parse().map_err(|_| bad("step"))?,
                mean: f[1].parse().map_err(|_| bad("mean"))?,
                stderr: f[2].parse().map_err(|_| bad("stderr"))?,
                trials: f[3].parse().map_err(|_| bad("trial count"))?,
            });
        }
        let config_hash = hash.ok_or_else(|| Error::parse(origin, 2, "no data rows"))?;
        Ok(Self {
            points,
            config_hash,
        })
    }
}
