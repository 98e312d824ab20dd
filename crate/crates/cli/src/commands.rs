use std::path::{Path, PathBuf};

use qmedley::datasets::PreparedDataset;
use qmedley::evaluation::{run_ablation, run_benchmark, AblationOptions, DatasetSpec, EvalResult, TruthSource};
use qmedley::hqml::train_hqml;
use qmedley::viz::{render_bar_chart, render_multipanel, render_text_chart, xml_escape, ChartSpec};
use qmedley::{ExplainerConfig, FeatureMapSpec, HqmlModel, Hyperparams, ImportanceReport, LearnerKind, ModelType, TOOL_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    load_table, parse_seeds, split_list, DataConfig, FileConfig, DEFAULT_NOISE, DEFAULT_REDUNDANT, DEFAULT_TARGET,
};
use crate::error::CliError;
use crate::{CommonArgs, ExplainArgs};

const DEFAULT_OUT: &str = "qmedley-out";
const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

/// Metadata stored alongside every output. Thread counts and output
/// locations are left out so that reruns compare byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub resolved_config: Value,
    pub seed: u64,
}

impl Provenance {
    fn new(resolved_config: Value, seed: u64) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            resolved_config,
            seed,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub provenance: Provenance,
    pub model: HqmlModel,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn resolve_data(common: &CommonArgs, file: &FileConfig, fallback: Option<DataConfig>) -> Result<DataConfig, CliError> {
    let fb = fallback.as_ref();
    let data = common
        .data
        .clone()
        .or_else(|| file.data.clone())
        .or_else(|| fb.map(|f| f.data.clone()))
        .ok_or_else(|| CliError::usage("--data is required"))?;
    let test_fraction = common
        .test_fraction
        .or(file.test_fraction)
        .or(fb.map(|f| f.test_fraction))
        .unwrap_or(qmedley::datasets::DEFAULT_TEST_FRACTION);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::usage(format!("--test-fraction must lie in (0, 1), got {test_fraction}")));
    }
    Ok(DataConfig {
        data,
        target: common
            .target
            .clone()
            .or_else(|| file.target.clone())
            .or_else(|| fb.map(|f| f.target.clone()))
            .unwrap_or_else(|| DEFAULT_TARGET.to_string()),
        noise: common.noise.or(file.noise).or(fb.map(|f| f.noise)).unwrap_or(DEFAULT_NOISE),
        redundant: common.redundant.or(file.redundant).or(fb.map(|f| f.redundant)).unwrap_or(DEFAULT_REDUNDANT),
        test_fraction,
        binarize_target: common.binarize_target || file.binarize_target.unwrap_or(false) || fb.is_some_and(|f| f.binarize_target),
        max_rows: common.max_rows.or(file.max_rows).or(fb.and_then(|f| f.max_rows)),
    })
}

fn dataset_spec(dc: &DataConfig, seed: u64) -> Result<DatasetSpec, CliError> {
    let table = load_table(dc, seed)?;
    Ok(DatasetSpec::new(dc.data.clone(), table, dc.noise, dc.redundant).with_test_fraction(dc.test_fraction))
}

fn prepare(dc: &DataConfig, seed: u64) -> Result<PreparedDataset, CliError> {
    dataset_spec(dc, seed)?.prepare(seed).map_err(CliError::data)
}

fn out_path(common: &CommonArgs, file: &FileConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn out_dir(common: &CommonArgs, file: &FileConfig) -> Result<PathBuf, CliError> {
    let dir = out_path(common, file);
    ensure_dir(&dir)?;
    Ok(dir)
}

fn hyperparams(file: &FileConfig) -> Result<Hyperparams, CliError> {
    let hp = file.hyperparams.clone().unwrap_or_default();
    hp.validate().map_err(CliError::usage)?;
    Ok(hp)
}

/// Run `f` on a pool capped at the requested worker count.
fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(CliError::run)?.install(f)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn svg_with_metadata(svg: &str, prov: &Provenance) -> String {
    let meta = format!("\n<metadata>{}</metadata>", xml_escape(&serde_json::to_string(prov).expect("provenance serializes")));
    let open = svg.find("<svg").expect("svg root");
    let end = open + svg[open..].find('>').expect("svg root closes");
    format!("{}{meta}{}", &svg[..=end], &svg[end + 1..])
}

fn csv_with_provenance(csv: &str, prov: &Provenance) -> String {
    format!("# provenance: {}\n{csv}", serde_json::to_string(prov).expect("provenance serializes"))
}

pub fn train(common: CommonArgs, model: Option<String>, model_type: Option<String>) -> Result<(), CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let data = resolve_data(&common, &file, None)?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let kind_name = model
        .or_else(|| file.model.clone())
        .ok_or_else(|| CliError::usage(format!("--model is required; valid kinds: {}", LearnerKind::valid_names())))?;
    let kind: LearnerKind = kind_name.parse().map_err(CliError::usage)?;
    let model_type: ModelType = match model_type.or_else(|| file.model_type.clone()) {
        Some(s) => s.parse().map_err(CliError::usage)?,
        None if kind == LearnerKind::KnnPrecomputed => ModelType::KernelBased,
        None => ModelType::AmplitudeBased,
    };
    let hp = hyperparams(&file)?;
    let out = out_dir(&common, &file)?;
    let threads = common.threads.or(file.threads);

    in_pool(threads, || {
        let p = prepare(&data, seed)?;
        let map = FeatureMapSpec::rx(p.n_features()).map_err(CliError::data)?;
        if model_type == ModelType::AmplitudeBased {
            map.check_amplitude_feasible().map_err(CliError::data)?;
        }
        let model = train_hqml(&p.x_train, &p.y_train, kind, model_type, map, &hp, seed, Some(p.feature_labels.clone()))
            .map_err(CliError::run)?;
        let acc = model.score_accuracy(&p.x_test, &p.y_test).map_err(CliError::run)?;
        println!("Accuracy for {}: {acc:.4}", kind.hybrid_name());

        let resolved = json!({
            "command": "train",
            "data": to_value(&data),
            "model": kind,
            "model_type": model_type,
            "hyperparams": to_value(&hp),
        });
        let path = out.join("model.json");
        write(
            &path,
            &pretty(&ModelFile {
                provenance: Provenance::new(resolved, seed),
                model,
            }),
        )?;
        println!("model written to {}", path.display());
        Ok(())
    })
}

pub fn explain(common: CommonArgs, args: ExplainArgs, model_file: Option<PathBuf>, no_chart: bool) -> Result<(), CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let out = out_path(&common, &file);
    let model_path = model_file
        .or_else(|| file.model_file.clone())
        .unwrap_or_else(|| out.join("model.json"));
    let text = std::fs::read_to_string(&model_path)
        .map_err(|e| CliError::data(format!("cannot read model file {}: {e}", model_path.display())))?;
    let mf: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("invalid model file {}: {e}", model_path.display())))?;
    if mf.model.format_version != qmedley::hqml::MODEL_FORMAT_VERSION {
        return Err(CliError::data(format!("unsupported model format version {}", mf.model.format_version)));
    }

    let trained_with: Option<DataConfig> = mf
        .provenance
        .resolved_config
        .get("data")
        .and_then(|v| serde_json::from_value(v.clone()).ok());
    let data = resolve_data(&common, &file, trained_with)?;
    let seed = common.seed.or(file.seed).unwrap_or(mf.provenance.seed);
    let cfg = ExplainerConfig {
        repeats: args.repeats.or(file.repeats).unwrap_or(5),
        seed,
        adaptive_weighting: args.adaptive || file.adaptive.unwrap_or(false),
        interaction_pi: args.interaction_pi || file.interaction_pi.unwrap_or(false),
        interaction_partners: file.interaction_partners.unwrap_or(2),
        neutral_value: 0.0,
    };
    let no_chart = no_chart || file.no_chart.unwrap_or(false);
    let threads = common.threads.or(file.threads);

    in_pool(threads, || {
        let p = prepare(&data, seed)?;
        if p.n_features() != mf.model.map.n_qubits {
            return Err(CliError::data(format!(
                "model expects {} features but the dataset has {}",
                mf.model.map.n_qubits,
                p.n_features()
            )));
        }
        let mut report = qmedley::qmedley::explain(&mf.model, &p.x_train, &p.y_train, &cfg).map_err(CliError::run)?;
        ensure_dir(&out)?;
        let prov = Provenance::new(
            json!({
                "command": "explain",
                "data": to_value(&data),
                "explainer": to_value(&cfg),
                "model": report.model_descriptor,
                "model_provenance": to_value(&mf.provenance),
            }),
            seed,
        );
        report.provenance = Some(to_value(&prov));
        let path = out.join("report.json");
        write(&path, &pretty(&report))?;
        println!("report written to {}", path.display());
        if !no_chart {
            let svg = render_bar_chart(&report, &ChartSpec::default()).map_err(CliError::run)?;
            let svg_path = out.join("report.svg");
            write(&svg_path, &svg_with_metadata(&svg, &prov))?;
            print!("{}", render_text_chart(&report).map_err(CliError::run)?);
            println!("chart written to {}", svg_path.display());
        }
        Ok(())
    })
}

fn dataset_list(flag: Option<String>, file: &FileConfig) -> Vec<String> {
    flag.map(|s| split_list(&s))
        .or_else(|| file.datasets.clone())
        .unwrap_or_else(|| vec!["iris".into(), "wine".into()])
}

fn seed_list(flag: Option<String>, file: &FileConfig) -> Result<Vec<u64>, CliError> {
    let seeds = match flag {
        Some(s) => parse_seeds(&s)?,
        None => file.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
    };
    if seeds.is_empty() {
        return Err(CliError::usage("at least one seed is required"));
    }
    Ok(seeds)
}

fn data_configs(names: &[String], common: &CommonArgs, file: &FileConfig) -> Result<Vec<DataConfig>, CliError> {
    names
        .iter()
        .map(|n| {
            let c = CommonArgs {
                data: Some(n.clone()),
                ..common.clone()
            };
            resolve_data(&c, file, None)
        })
        .collect()
}

fn write_eval(result: &mut EvalResult, prov: Provenance, out: &Path, stem: &str) -> Result<(), CliError> {
    result.provenance = Some(to_value(&prov));
    let csv = result.to_csv().map_err(CliError::run)?;
    write(&out.join(format!("{stem}.json")), &pretty(result))?;
    write(&out.join(format!("{stem}.csv")), &csv_with_provenance(&csv, &prov))?;
    print!("{}", result.to_table());
    for cell_failure in result
        .ablation
        .iter()
        .flat_map(|c| c.failures.iter())
        .chain(result.benchmark.iter().flat_map(|c| c.failures.iter()))
    {
        eprintln!("cell failure: {cell_failure}");
    }
    println!("results written to {}", out.join(format!("{stem}.json")).display());
    if result.all_failed() {
        return Err(CliError::run("every cell failed"));
    }
    Ok(())
}

pub fn ablate(common: CommonArgs, repeats: Option<usize>, datasets: Option<String>, seeds: Option<String>) -> Result<(), CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let names = dataset_list(datasets, &file);
    let seeds = seed_list(seeds, &file)?;
    let configs = data_configs(&names, &common, &file)?;
    let base_seed = common.seed.or(file.seed).unwrap_or(0);
    let opts = AblationOptions {
        repeats: repeats.or(file.repeats).unwrap_or(5),
        k: 3,
        truth: TruthSource::Intrinsic,
        hyperparams: hyperparams(&file)?,
    };
    if opts.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    let out = out_dir(&common, &file)?;
    let threads = common.threads.or(file.threads);

    in_pool(threads, || {
        let specs = configs.iter().map(|dc| dataset_spec(dc, base_seed)).collect::<Result<Vec<_>, _>>()?;
        let mut result = run_ablation(&specs, &seeds, &opts).map_err(CliError::run)?;
        eprintln!("ablation finished in {:.2} s", result.runtime.as_secs_f64());
        let prov = Provenance::new(
            json!({
                "command": "ablate",
                "datasets": to_value(&configs),
                "seeds": seeds,
                "options": to_value(&opts),
            }),
            base_seed,
        );
        write_eval(&mut result, prov, &out, "ablation")
    })
}

pub fn benchmark(common: CommonArgs, datasets: Option<String>, models: Option<String>, seeds: Option<String>) -> Result<(), CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let names = dataset_list(datasets, &file);
    let seeds = seed_list(seeds, &file)?;
    let kinds: Vec<LearnerKind> = models
        .map(|s| split_list(&s))
        .or_else(|| file.models.clone())
        .unwrap_or_else(|| vec!["dt".into(), "rf".into()])
        .iter()
        .map(|m| m.parse().map_err(CliError::usage))
        .collect::<Result<_, _>>()?;
    if let Some(k) = kinds.iter().find(|k| **k == LearnerKind::KnnPrecomputed) {
        return Err(CliError::usage(format!("{k} has no amplitude-based twin")));
    }
    let configs = data_configs(&names, &common, &file)?;
    let base_seed = common.seed.or(file.seed).unwrap_or(0);
    let hp = hyperparams(&file)?;
    let out = out_dir(&common, &file)?;
    let threads = common.threads.or(file.threads);

    in_pool(threads, || {
        let specs = configs.iter().map(|dc| dataset_spec(dc, base_seed)).collect::<Result<Vec<_>, _>>()?;
        let mut result = run_benchmark(&specs, &kinds, &seeds, &hp).map_err(CliError::run)?;
        eprintln!("benchmark finished in {:.2} s", result.runtime.as_secs_f64());
        let prov = Provenance::new(
            json!({
                "command": "benchmark",
                "datasets": to_value(&configs),
                "models": kinds,
                "seeds": seeds,
                "hyperparams": to_value(&hp),
            }),
            base_seed,
        );
        write_eval(&mut result, prov, &out, "benchmark")
    })
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::usage(format!("invalid grid '{s}'; expected ROWSxCOLS"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

pub fn plot(reports: Vec<PathBuf>, out: Option<PathBuf>, title: Option<String>, grid: Option<String>, text: bool) -> Result<(), CliError> {
    let spec = ChartSpec {
        title,
        panel_grid: grid.as_deref().map(parse_grid).transpose()?,
        ..ChartSpec::default()
    };
    let loaded = reports
        .iter()
        .map(|p| {
            let s = std::fs::read_to_string(p).map_err(|e| CliError::data(format!("cannot read {}: {e}", p.display())))?;
            ImportanceReport::from_json(&s).map_err(|e| CliError::data(format!("invalid report {}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let svg = if loaded.len() == 1 {
        render_bar_chart(&loaded[0], &spec)
    } else {
        render_multipanel(&loaded, &spec)
    }
    .map_err(CliError::run)?;
    let out = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    ensure_dir(&out)?;
    let prov = Provenance::new(
        json!({
            "command": "plot",
            "reports": reports.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "chart": to_value(&spec),
        }),
        loaded[0].config.seed,
    );
    let path = out.join("plot.svg");
    write(&path, &svg_with_metadata(&svg, &prov))?;
    if text {
        for r in &loaded {
            println!("{}", r.model_descriptor);
            print!("{}", render_text_chart(r).map_err(CliError::run)?);
        }
    }
    println!("chart written to {}", path.display());
    Ok(())
}
