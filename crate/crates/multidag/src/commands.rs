//! The score / fit / sweep / simulate / export pipeline behind the
//! `multidag` binary.
//!
//! Every command validates its inputs completely before the first
//! write, writes files atomically (temp-then-rename), embeds the
//! resolved configuration and tool version in each output, and never
//! mutates an input. Reruns with an identical embedded configuration
//! produce byte-identical files regardless of the thread count.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_result_from_estimate, ClusterResult};
use crate::dag::{Dag, SubjectNetwork};
use crate::diagnostics::{eta_sweep, lambda_sweep, SweepResult, SweptParam};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::runconfig::{ModeName, ResolvedConfig};
use crate::score::{build_score_table, cache_to_string, read_cache, ScoreTable};
use crate::solver::{
    encode, solve, Certificate, ClusterSpec, MapEstimate, SolveMode, SolveStats,
};
use crate::synthetic::{generate_full, SyntheticSpec, RNG_ALGORITHM};
use crate::timeseries::{manifest_string, read_manifest, ManifestEntry, TimeSeries};

/// Whether a fit ended with a proof or hit a limit; drives the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommandOutcome {
    pub gap_limited: bool,
}

/// Writes a file atomically: the content lands under the final name
/// only when complete, so interrupted runs never leave corrupt files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(format!("creating temp file in {}", dir.display()), e))?;
    tmp.write_all(bytes)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(format!("renaming into {}", path.display()), e.error))?;
    Ok(())
}

fn run_in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::internal(format!("building thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn load_series(cfg: &ResolvedConfig) -> Result<Vec<TimeSeries>> {
    let manifest = read_manifest(cfg.require_manifest()?)?;
    let mut series = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        series.push(TimeSeries::from_csv(&entry.subject, &entry.path)?);
    }
    let p = series[0].p();
    for s in &series {
        if s.p() != p {
            return Err(Error::input(format!(
                "subject {} has {} variables, expected {p}",
                s.subject(),
                s.p()
            )));
        }
    }
    Ok(series)
}

/// Builds one score cache per subject. All inputs are read and scored
/// before anything is written, so a failing subject leaves no partial
/// caches behind.
pub fn cmd_score(cfg: &ResolvedConfig) -> Result<()> {
    let cache_dir = cfg.require_cache_dir()?.to_path_buf();
    let series = load_series(cfg)?;
    let p = series[0].p();
    if cfg.d_max > p - 1 {
        return Err(Error::input(format!(
            "d_max {} exceeds p-1 = {}",
            cfg.d_max,
            p - 1
        )));
    }
    cfg.dlm.validate()?;
    let tables: Vec<ScoreTable> = run_in_pool(cfg.threads, || {
        series
            .iter()
            .map(|s| build_score_table(s, cfg.d_max, &cfg.dlm))
            .collect::<Result<Vec<_>>>()
    })??;
    for table in &tables {
        let mut text = cache_to_string(table, &cfg.dlm);
        text = format!("{}{}", config_comment(cfg), text);
        write_atomic(&cache_dir.join(format!("{}.scores", table.subject())), text.as_bytes())?;
    }
    Ok(())
}

fn config_comment(cfg: &ResolvedConfig) -> String {
    format!(
        "#%config {}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn load_tables(cfg: &ResolvedConfig) -> Result<(Vec<ManifestEntry>, Vec<ScoreTable>)> {
    let manifest = read_manifest(cfg.require_manifest()?)?;
    let cache_dir = cfg.require_cache_dir()?;
    let mut tables = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        let path = cache_dir.join(format!("{}.scores", entry.subject));
        let (table, _config) = read_cache(&path)?;
        if table.subject() != entry.subject {
            return Err(Error::input(format!(
                "cache {} is for subject {:?}",
                path.display(),
                table.subject()
            )));
        }
        tables.push(table);
    }
    Ok((manifest, tables))
}

fn load_hyper(cfg: &ResolvedConfig, tables: &[ScoreTable]) -> Result<Hyperparameters> {
    match &cfg.hyper {
        Some(path) => Hyperparameters::from_toml_file(path),
        None => Ok(Hyperparameters::scalar(0.0, 0.0, tables[0].d_max())),
    }
}

fn load_network(path: &Path, k_total: usize) -> Result<SubjectNetwork> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading network {display}"), e))?;
    let net: SubjectNetwork = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: display.clone(),
        record: 0,
        message: e.to_string(),
    })?;
    if net.k_total() != k_total {
        return Err(Error::input(format!(
            "network {display} covers {} subjects, expected {k_total}",
            net.k_total()
        )));
    }
    Ok(net)
}

/// Region labels for DOT output: the header row of the first readable
/// series file, falling back to v1..vP.
fn region_labels(manifest: &[ManifestEntry], p: usize) -> Vec<String> {
    for entry in manifest {
        if let Ok(ts) = TimeSeries::from_csv(&entry.subject, &entry.path) {
            if ts.p() == p {
                return ts.names().to_vec();
            }
        }
    }
    (1..=p).map(|i| format!("v{i}")).collect()
}

/// The solution file schema.
#[derive(Serialize, Deserialize)]
pub struct SolutionFile {
    pub tool_version: String,
    #[serde(skip_deserializing)]
    pub config: Option<serde_json::Value>,
    pub mode: ModeName,
    pub subjects: Vec<String>,
    pub objective: f64,
    pub certificate: Certificate,
    pub stats: SolveStats,
    pub dags: Vec<Dag>,
    pub network: SubjectNetwork,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prototypes: Option<Vec<Dag>>,
}

fn solution_json(cfg: &ResolvedConfig, file: &SolutionFile) -> String {
    // embed the config by serializing the file with the config value
    // injected; serde_json keeps struct field order, so this is stable
    let mut value = serde_json::to_value(file).expect("solution serializes");
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    let mut out = serde_json::to_string_pretty(&value).expect("solution serializes");
    out.push('\n');
    out
}

/// Exact MAP fit in the configured mode; writes `solution.json` plus a
/// DOT rendering per subject (and per prototype when clustering).
pub fn cmd_fit(cfg: &ResolvedConfig) -> Result<CommandOutcome> {
    let (manifest, tables) = load_tables(cfg)?;
    let hp = load_hyper(cfg, &tables)?;
    let limits = cfg.limits();
    let mode_name = cfg.require_mode()?;
    let labels = region_labels(&manifest, tables[0].p());
    let subjects: Vec<String> = manifest.iter().map(|e| e.subject.clone()).collect();

    let (estimate, cluster): (MapEstimate, Option<ClusterResult>) = match mode_name {
        ModeName::Fixed => {
            let net_path = cfg
                .network
                .as_deref()
                .ok_or_else(|| Error::input("fixed mode requires --network"))?;
            let network = load_network(net_path, tables.len())?;
            let model = encode(&tables, &hp, SolveMode::FixedNetwork(network))?;
            (solve(&model, &limits)?, None)
        }
        ModeName::Joint => {
            let model = encode(&tables, &hp, SolveMode::JointNetwork)?;
            (solve(&model, &limits)?, None)
        }
        ModeName::Cluster => {
            let l_clusters = cfg
                .clusters
                .ok_or_else(|| Error::input("cluster mode requires --clusters"))?;
            let spec = ClusterSpec {
                l_clusters,
                subject_count: tables.len(),
            };
            let model = encode(&tables, &hp, SolveMode::Clustering(spec))?;
            let estimate = solve(&model, &limits)?;
            let result = cluster_result_from_estimate(&estimate, spec)?;
            (estimate, Some(result))
        }
    };

    let gap_limited = !estimate.is_proven_optimal();
    let file = match &cluster {
        None => SolutionFile {
            tool_version: crate::VERSION.to_string(),
            config: None,
            mode: mode_name,
            subjects: subjects.clone(),
            objective: estimate.objective,
            certificate: estimate.certificate,
            stats: estimate.stats,
            dags: estimate.dags.clone(),
            network: estimate.network.clone(),
            assignment: None,
            prototypes: None,
        },
        Some(result) => SolutionFile {
            tool_version: crate::VERSION.to_string(),
            config: None,
            mode: mode_name,
            subjects: subjects.clone(),
            objective: result.objective,
            certificate: result.certificate,
            stats: result.stats,
            dags: result.subject_dags.clone(),
            network: estimate.network.clone(),
            assignment: Some(result.assignment.clone()),
            prototypes: Some(result.prototypes.clone()),
        },
    };
    write_atomic(
        &cfg.out.join("solution.json"),
        solution_json(cfg, &file).as_bytes(),
    )?;
    write_dots(cfg, &file, &labels)?;
    Ok(CommandOutcome { gap_limited })
}

fn write_dots(cfg: &ResolvedConfig, file: &SolutionFile, labels: &[String]) -> Result<()> {
    let header = format!(
        "// {}\n// config: {}\n",
        crate::VERSION,
        serde_json::to_string(cfg).expect("config serializes")
    );
    for (subject, dag) in file.subjects.iter().zip(&file.dags) {
        let dot = format!("{header}{}", dag.to_dot(subject, labels)?);
        write_atomic(&cfg.out.join(format!("{subject}.dot")), dot.as_bytes())?;
    }
    if let Some(prototypes) = &file.prototypes {
        for (c, dag) in prototypes.iter().enumerate() {
            let name = format!("prototype_{}", c + 1);
            let dot = format!("{header}{}", dag.to_dot(&name, labels)?);
            write_atomic(&cfg.out.join(format!("{name}.dot")), dot.as_bytes())?;
        }
    }
    Ok(())
}

/// Hyperparameter sweep: fixed mode sweeps λ over the grid against the
/// given network; joint mode sweeps η with λ taken from the
/// hyperparameter file. Emits `sweep.csv` and `sweep.gnuplot`.
pub fn cmd_sweep(cfg: &ResolvedConfig) -> Result<()> {
    let (_manifest, tables) = load_tables(cfg)?;
    let hp = load_hyper(cfg, &tables)?;
    let limits = cfg.limits();
    let grid = cfg
        .grid
        .as_deref()
        .ok_or_else(|| Error::input("a sweep requires --grid"))?;
    let result: SweepResult = match cfg.require_mode()? {
        ModeName::Fixed => {
            let net_path = cfg
                .network
                .as_deref()
                .ok_or_else(|| Error::input("fixed mode requires --network"))?;
            let network = load_network(net_path, tables.len())?;
            lambda_sweep(&tables, &network, grid, cfg.metric, &hp, &limits)?
        }
        ModeName::Joint => eta_sweep(&tables, &hp, grid, cfg.metric, &limits)?,
        ModeName::Cluster => {
            return Err(Error::input(
                "sweeps run in fixed (lambda) or joint (eta) mode",
            ))
        }
    };
    let param_name = match result.param {
        SweptParam::Lambda => "lambda",
        SweptParam::Eta => "eta",
    };
    let metric_name = match cfg.metric {
        crate::diagnostics::DistanceMetric::Shd => "shd",
        crate::diagnostics::DistanceMetric::Xor => "xor",
    };
    let csv = format!(
        "{}#%param {param_name}\n#%metric {metric_name}\n{}",
        config_comment(cfg),
        result.to_csv()
    );
    write_atomic(&cfg.out.join("sweep.csv"), csv.as_bytes())?;
    let script = result.gnuplot_script("sweep.csv");
    write_atomic(&cfg.out.join("sweep.gnuplot"), script.as_bytes())?;
    Ok(())
}

/// Ground-truth file schema for simulated data.
#[derive(Serialize, Deserialize)]
pub struct TruthFile {
    pub tool_version: String,
    #[serde(skip_deserializing)]
    pub config: Option<serde_json::Value>,
    pub rng_algorithm: String,
    pub seed: u64,
    pub truth: Vec<Dag>,
}

/// Generates synthetic multi-subject data: per-subject CSVs, a manifest
/// and the ground-truth graphs.
pub fn cmd_simulate(cfg: &ResolvedConfig) -> Result<()> {
    let params = cfg.synthetic;
    let spec = SyntheticSpec {
        p: params.p,
        k_subjects: params.subjects,
        n_steps: params.steps,
        base_dag: None,
        d_max: cfg.d_max.min(params.p.saturating_sub(1)),
        divergence: params.divergence,
        dynamics: params.dynamics(),
        seed: cfg.seed,
    };
    let data = generate_full(&spec)?;
    let mut entries = Vec::new();
    for series in &data.series {
        let name = format!("{}.csv", series.subject());
        write_atomic(
            &cfg.out.join(&name),
            series.to_csv_string().as_bytes(),
        )?;
        entries.push((series.subject().to_string(), name));
    }
    write_atomic(
        &cfg.out.join("manifest.csv"),
        manifest_string(&entries).as_bytes(),
    )?;
    let truth = TruthFile {
        tool_version: crate::VERSION.to_string(),
        config: None,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        seed: cfg.seed,
        truth: data.truth,
    };
    let mut value = serde_json::to_value(&truth).expect("truth serializes");
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("truth serializes");
    text.push('\n');
    write_atomic(&cfg.out.join("truth.json"), text.as_bytes())?;
    Ok(())
}

/// Re-renders existing outputs: DOT files from a solution, or a gnuplot
/// script from a sweep CSV.
pub fn cmd_export(cfg: &ResolvedConfig) -> Result<()> {
    match (&cfg.solution, &cfg.sweep) {
        (Some(path), None) => export_solution(cfg, path),
        (None, Some(path)) => export_sweep(cfg, path),
        _ => Err(Error::input(
            "export needs exactly one of --solution or --sweep",
        )),
    }
}

fn export_solution(cfg: &ResolvedConfig, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading solution {display}"), e))?;
    let file: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: display,
        record: 0,
        message: e.to_string(),
    })?;
    let p = file.dags.first().map_or(0, |d| d.p());
    let labels: Vec<String> = match &cfg.manifest {
        Some(m) => region_labels(&read_manifest(m)?, p),
        None => (1..=p).map(|i| format!("v{i}")).collect(),
    };
    write_dots(cfg, &file, &labels)
}

fn export_sweep(cfg: &ResolvedConfig, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading sweep {display}"), e))?;
    let mut param = SweptParam::Lambda;
    let mut ycol = 2;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("#%param ") {
            param = match rest.trim() {
                "eta" => SweptParam::Eta,
                _ => SweptParam::Lambda,
            };
        }
        if let Some(rest) = line.strip_prefix("#%metric ") {
            ycol = if rest.trim() == "xor" { 3 } else { 2 };
        }
    }
    let xlabel = match param {
        SweptParam::Lambda => "lambda",
        SweptParam::Eta => "eta",
    };
    let csv_name = path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "sweep.csv".to_string());
    let script = format!(
        "set datafile separator ','\n\
         set xlabel '{xlabel}'\n\
         set ylabel 'distance over linked pairs'\n\
         set y2label 'MAP objective'\n\
         set y2tics\n\
         set grid\n\
         plot '{csv_name}' every ::1 using 1:{ycol} with linespoints axes x1y1 title 'distance', \\\n\
         \x20    '{csv_name}' every ::1 using 1:4 with linespoints axes x1y2 title 'objective'\n"
    );
    write_atomic(&cfg.out.join("sweep.gnuplot"), script.as_bytes())?;
    Ok(())
}

/// The sweep CSV re-parsed (comment lines skipped); used by tests and
/// downstream tooling.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<(f64, u64, u64, f64, String)>> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading sweep {display}"), e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("value,") || line.is_empty() {
            continue;
        }
        let parse_err = |m: String| Error::Parse {
            path: display.clone(),
            record: idx + 1,
            message: m,
        };
        let mut parts = line.splitn(5, ',');
        let value: f64 = parts
            .next()
            .ok_or_else(|| parse_err("missing value".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad value: {e}")))?;
        let shd: u64 = parts
            .next()
            .ok_or_else(|| parse_err("missing shd".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad shd: {e}")))?;
        let xor: u64 = parts
            .next()
            .ok_or_else(|| parse_err("missing xor".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad xor: {e}")))?;
        let objective: f64 = parts
            .next()
            .ok_or_else(|| parse_err("missing objective".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad objective: {e}")))?;
        let partition = parts
            .next()
            .unwrap_or_default()
            .trim_matches('"')
            .to_string();
        rows.push((value, shd, xor, objective, partition));
    }
    Ok(rows)
}
