use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::aggregate::AggregateCurve;
use super::config::{Architecture, HiddenMode};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

/// One aggregate curve found on disk.
#[derive(Clone, Debug)]
pub struct FoundCurve {
    pub env: EnvKind,
    pub architecture: Architecture,
    pub mode: HiddenMode,
    pub path: PathBuf,
    pub curve: AggregateCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub env: EnvKind,
    pub architecture: Architecture,
    pub mode: HiddenMode,
    /// Mean over the last few samples.
    pub final_mean: f64,
    /// Mean and standard error at the last sample.
    pub last_mean: f64,
    pub last_stderr: f64,
    /// Last-sample mean of the frozen run of the same architecture, if any.
    pub frozen_baseline: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub fingerprint: String,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

fn parse_stem(stem: &str) -> Option<(Architecture, HiddenMode)> {
    let (arch, mode) = stem.rsplit_once('_')?;
    Some((arch.parse().ok()?, mode.parse().ok()?))
}

/// Finds `<dir>/<env>/<architecture>_<mode>.csv` files.
pub fn find_curves(dir: &Path) -> Result<Vec<FoundCurve>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut found = Vec::new();
    let mut env_dirs: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    env_dirs.sort_by_key(|e| e.file_name());
    for e in env_dirs {
        let Ok(env) = e.file_name().to_string_lossy().parse::<EnvKind>() else {
            continue;
        };
        if !e.path().is_dir() {
            continue;
        }
        let mut files: Vec<_> = fs::read_dir(e.path())?.collect::<std::io::Result<Vec<_>>>()?;
        files.sort_by_key(|f| f.file_name());
        for f in files {
            let path = f.path();
            if path.extension().and_then(|x| x.to_str()) != Some("csv") {
                continue;
            }
            let stem = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .to_string();
            let Some((architecture, mode)) = parse_stem(&stem) else {
                continue;
            };
            let text = fs::read_to_string(&path)?;
            let curve = AggregateCurve::from_csv(&text, &path.display().to_string())?;
            found.push(FoundCurve {
                env,
                architecture,
                mode,
                path,
                curve,
            });
        }
    }
    Ok(found)
}

fn figure_data(curves: &[&FoundCurve], fingerprint: &str) -> String {
    let mut out = String::new();
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!(
            "# config_hash: {fingerprint}\n# architecture: {}\n# step mean lower upper\n",
            c.architecture
        ));
        for p in &c.curve.points {
            out.push_str(&format!(
                "{} {} {} {}\n",
                p.step,
                p.mean,
                p.mean - p.stderr,
                p.mean + p.stderr
            ));
        }
    }
    out
}

/// True when the ±1 standard-error bands at the last sample do not overlap.
pub fn distinguishable(a: &AggregateCurve, b: &AggregateCurve) -> Option<bool> {
    let (pa, pb) = (a.last()?, b.last()?);
    Some(pa.mean + pa.stderr < pb.mean - pb.stderr || pb.mean + pb.stderr < pa.mean - pa.stderr)
}

/// Reads the aggregate curves under `dir` and writes plot data, a summary
/// table and pairwise comparisons to `<dir>/report/`.
pub fn report(dir: impl AsRef<Path>) -> Result<Report> {
    let dir = dir.as_ref();
    let curves = find_curves(dir)?;
    if curves.is_empty() {
        return Err(Error::Report(format!(
            "no aggregate curves under {}; expected files named <env>/<architecture>_<mode>.csv, \
             for example breakout/dense_frozen.csv or space_invaders/spatial_learned.csv",
            dir.display()
        )));
    }
    let fingerprint = curves[0].curve.config_hash.clone();
    if let Some(other) = curves.iter().find(|c| c.curve.config_hash != fingerprint) {
        return Err(Error::Report(format!(
            "{} has config fingerprint {} but {} has {}; results from different configs cannot be mixed",
            other.path.display(),
            other.curve.config_hash,
            curves[0].path.display(),
            fingerprint
        )));
    }

    let out_dir = dir.join("report");
    let mut files = Vec::new();
    let mut groups: BTreeMap<(EnvKind, HiddenMode), Vec<&FoundCurve>> = BTreeMap::new();
    for c in &curves {
        groups.entry((c.env, c.mode)).or_default().push(c);
    }
    for ((env, mode), group) in &mut groups {
        group.sort_by_key(|c| c.architecture);
        let path = out_dir.join(format!("{env}_{mode}.dat"));
        write_atomic(&path, figure_data(group, &fingerprint).as_bytes())?;
        files.push(path);
    }

    let frozen_last = |env: EnvKind, arch: Architecture| {
        curves
            .iter()
            .find(|c| c.env == env && c.architecture == arch && c.mode == HiddenMode::Frozen)
            .and_then(|c| c.curve.last())
            .map(|p| p.mean)
    };
    let mut summary: Vec<SummaryRow> = curves
        .iter()
        .filter_map(|c| {
            let last = c.curve.last()?;
            Some(SummaryRow {
                env: c.env,
                architecture: c.architecture,
                mode: c.mode,
                final_mean: c.curve.final_performance()?,
                last_mean: last.mean,
                last_stderr: last.stderr,
                frozen_baseline: frozen_last(c.env, c.architecture),
            })
        })
        .collect();
    summary.sort_by_key(|r| (r.env, r.mode, r.architecture));

    let mut table = String::from(
        "env,architecture,mode,final_mean,last_mean,last_stderr,frozen_baseline,config_hash\n",
    );
    for r in &summary {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.env,
            r.architecture,
            r.mode,
            r.final_mean,
            r.last_mean,
            r.last_stderr,
            r.frozen_baseline.map(|b| b.to_string()).unwrap_or_default(),
            fingerprint
        ));
    }
    let path = out_dir.join("summary.csv");
    write_atomic(&path, table.as_bytes())?;
    files.push(path);

    let mut cmp = String::from("env,mode,a,b,distinguishable,config_hash\n");
    for ((env, mode), group) in &groups {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                if let Some(d) = distinguishable(&a.curve, &b.curve) {
                    cmp.push_str(&format!(
                        "{env},{mode},{},{},{d},{fingerprint}\n",
                        a.architecture, b.architecture
                    ));
                }
            }
        }
    }
    let path = out_dir.join("comparisons.csv");
    write_atomic(&path, cmp.as_bytes())?;
    files.push(path);

    Ok(Report {
        fingerprint,
        summary,
        files,
    })
}
