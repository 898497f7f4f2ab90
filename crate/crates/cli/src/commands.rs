//! Subcommand implementations. Each resolves its settings, writes the
//! manifest, computes, writes its artifacts and returns the stdout summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eafo_core::activation::inverse_branch;
use eafo_core::density::linspace;
use eafo_core::entropy::{entropy_mc, entropy_quadrature, entropy_spacing, sample_pushforward};
use eafo_core::json::{fmt17, to_json_string};
use eafo_core::trainer::{
    compare_activations, run_dir_name, train, Dataset, Init, LrSchedule, MLPConfig, OptimizerKind, TrainConfig,
};
use eafo_core::variational::{
    correction_term, entropy_descent_check, fact_bounds_check, optimized_inverse, prop2_check, wafbc_curve,
    wafbc_curve_compare, WafbcSpec,
};
use eafo_core::{ActivationKind, ActivationParams, Density1D, Interval};
use serde_json::{json, Value};

use crate::config::{Config, Resolver};
use crate::error::{CliError, Result};
use crate::grammar::{parse_activation, parse_dataset, parse_density, parse_grid, parse_interval, parse_list};
use crate::manifest::RunManifest;
use crate::{
    CommonArgs, CompareArgs, CrreluVerifyArgs, DataArgs, EafoArgs, EntropyArgs, ModelArgs, TrainArgs, WafbcArgs,
};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "EAFO_OUT";
const DEFAULT_OUT_ROOT: &str = "runs";

fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

fn resolver(section: &str, common: &CommonArgs) -> Result<Resolver> {
    let config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    Ok(Resolver::new(section, config))
}

/// `--out` (or the `out` key) verbatim, else `$EAFO_OUT/<name>`.
fn output_dir(r: &Resolver, common: &CommonArgs, name: impl FnOnce() -> String) -> Result<PathBuf> {
    if let Some(dir) = r.unrecorded::<PathBuf>("out", common.out.clone())? {
        return Ok(dir);
    }
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
    Ok(root.join(name()))
}

fn write(dir: &Path, file: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(file);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

/// The density's support when bounded, else the whole line.
fn default_branch(p: &Density1D) -> Interval {
    let s = p.support();
    if s.is_bounded() {
        s
    } else {
        Interval::real_line()
    }
}

fn branch(r: &mut Resolver, flag: Option<String>, p: &Density1D) -> Result<Interval> {
    let d = default_branch(p);
    let spec = r.value("branch", flag, format!("{}:{}", d.lo, d.hi))?;
    parse_interval(&spec)
}

pub fn entropy(args: EntropyArgs) -> Result<Value> {
    let mut r = resolver("entropy", &args.common)?;
    let density_spec = r.value("density", args.density, "gaussian:0,1".into())?;
    let activation_spec = r.value("activation", args.activation, "identity".into())?;
    let p = parse_density(&density_spec)?;
    let a = parse_activation(&activation_spec)?;
    let branch = branch(&mut r, args.branch, &p)?;
    let method = r.value("method", args.method, "quadrature".to_string())?;
    let default_n = match method.as_str() {
        "quadrature" => None,
        "mc" | "monte-carlo" => Some(1_000_000),
        "spacing" => Some(100_000),
        other => return Err(CliError::Usage(format!("unknown method `{other}` (quadrature, mc or spacing)"))),
    };
    let sampling = match default_n {
        Some(n) => {
            let n = r.value("n", args.n, n)?;
            let seed = r.value("seed", args.seed, 0u64)?;
            let workers = r.value("workers", args.common.workers, 1usize)?;
            let window = if method == "spacing" { r.optional("window", args.window)? } else { None };
            Some((n, seed, workers, window))
        }
        None => None,
    };
    let dir = output_dir(&r, &args.common, || format!("entropy-{}", timestamp()))?;
    let seeds = sampling.map(|s| vec![s.1]).unwrap_or_default();
    let mut manifest = RunManifest::new(&r, seeds, &["estimate.json"]);
    manifest.write(&dir)?;

    // checks strict monotonicity on the branch for every method
    let inv = inverse_branch(&a, branch)?;
    let estimate = match (method.as_str(), sampling) {
        ("quadrature", _) => entropy_quadrature(&p, &inv)?,
        ("spacing", Some((n, seed, _, window))) => {
            let samples = sample_pushforward(&p, &a, n, seed);
            entropy_spacing(&samples, window)?
        }
        (_, Some((n, seed, workers, _))) => entropy_mc(&p, &a, n, seed, workers)?,
        _ => unreachable!("sampling settings exist for sampling methods"),
    };
    let mut out = serde_json::to_value(estimate).map_err(eafo_core::Error::from)?;
    out["density"] = json!(p.describe());
    out["activation"] = json!(a.describe());
    out["branch"] = json!(format!("{}:{}", branch.lo, branch.hi));
    let file = write(&dir, "estimate.json", &to_json_string(&out)?)?;
    manifest.finish(&dir)?;
    out["output"] = path_value(&file);
    Ok(out)
}

pub fn wafbc(args: WafbcArgs) -> Result<Value> {
    let mut r = resolver("wafbc", &args.common)?;
    let density_spec = r.value("density", args.density, "gaussian:0,1".into())?;
    let c1 = r.value("c1", args.c1, 1.0)?;
    let c2 = r.value("c2", args.c2, 0.0)?;
    let grid_spec = r.value("grid", args.grid, "-6:6:4801".into())?;
    let reference_spec = r.optional("reference", args.reference)?;
    let spec = WafbcSpec::new(parse_density(&density_spec)?, c1, c2)?;
    let (lo, hi, count) = parse_grid(&grid_spec)?;
    let reference = reference_spec.as_deref().map(parse_activation).transpose()?;
    let dir = output_dir(&r, &args.common, || format!("wafbc-{}", timestamp()))?;
    let mut manifest = RunManifest::new(&r, Vec::new(), &["curve.csv"]);
    manifest.write(&dir)?;

    let mut out = json!({ "activation": spec.activation().describe(), "grid": [lo, hi, count] });
    let csv = match &reference {
        Some(reference) => {
            let c = wafbc_curve_compare(&spec, reference, lo, hi, count)?;
            out["reference"] = json!(c.reference);
            out["sup_norm"] = json!(c.sup_norm);
            out["argmax"] = json!(c.argmax);
            c.to_csv()
        }
        None => wafbc_curve(&spec, lo, hi, count)?,
    };
    let file = write(&dir, "curve.csv", &csv)?;
    manifest.finish(&dir)?;
    out["curve"] = path_value(&file);
    Ok(out)
}

pub fn eafo(args: EafoArgs) -> Result<Value> {
    let mut r = resolver("eafo", &args.common)?;
    let density_spec = r.value("density", args.density, "gaussian:0,1".into())?;
    let activation_spec = r.value("activation", args.activation, "identity".into())?;
    let p = parse_density(&density_spec)?;
    let a = parse_activation(&activation_spec)?;
    let branch = branch(&mut r, args.branch, &p)?;
    let scale = r.value("scale", args.scale, eafo_core::variational::DEFAULT_SCALE)?;
    let points = r.value("points", args.points, 201usize)?;
    if points < 2 {
        return Err(CliError::Usage(format!("points must be at least 2, got {points}")));
    }
    let dir = output_dir(&r, &args.common, || format!("eafo-{}", timestamp()))?;
    let mut manifest = RunManifest::new(&r, Vec::new(), &["eta.csv", "optimized.csv", "eafo.json"]);
    manifest.write(&dir)?;

    let inv = inverse_branch(&a, branch)?;
    let field = correction_term(&p, &inv)?;
    let record = entropy_descent_check(&p, &inv, scale)?;

    let mut eta_csv = String::from("x,eta\n");
    let d = field.domain();
    for x in linspace(d.lo, d.hi, points) {
        let _ = writeln!(eta_csv, "{},{}", fmt17(x), fmt17(field.eta(x)));
    }
    let signed = if record.descent_sign < 0 { -scale } else { scale };
    let optimized = optimized_inverse(&inv, &field, signed)?;
    let z = p.effective_support().intersect(&branch).unwrap_or(branch);
    let mut opt_csv = String::from("z,activation,optimized\n");
    for t in linspace(z.lo, z.hi, points) {
        let _ = writeln!(opt_csv, "{},{},{}", fmt17(t), fmt17(a.value(t)), fmt17(optimized.forward(t)));
    }

    let mut out = serde_json::to_value(record).map_err(eafo_core::Error::from)?;
    out["density"] = json!(p.describe());
    out["activation"] = json!(a.describe());
    out["branch"] = json!(format!("{}:{}", branch.lo, branch.hi));
    out["optimized_scale"] = json!(signed);
    let eta_file = write(&dir, "eta.csv", &eta_csv)?;
    let opt_file = write(&dir, "optimized.csv", &opt_csv)?;
    write(&dir, "eafo.json", &to_json_string(&out)?)?;
    manifest.finish(&dir)?;
    out["eta_table"] = path_value(&eta_file);
    out["optimized_table"] = path_value(&opt_file);
    Ok(out)
}

pub fn crrelu_verify(args: CrreluVerifyArgs) -> Result<Value> {
    let mut r = resolver("crrelu-verify", &args.common)?;
    let eps_spec = r.value("epsilon", args.epsilon, "0.001,0.01,0.1,0.5".into())?;
    let grid_spec = r.value("grid", args.grid, "0:10:100001".into())?;
    let epsilons: Vec<f64> = parse_list(&eps_spec, "epsilon")?;
    if epsilons.is_empty() {
        return Err(CliError::Usage("no epsilon values given".into()));
    }
    let (lo, hi, count) = parse_grid(&grid_spec)?;
    let dir = output_dir(&r, &args.common, || format!("crrelu-verify-{}", timestamp()))?;
    let mut manifest = RunManifest::new(&r, Vec::new(), &["verify.json"]);
    manifest.write(&dir)?;

    let bounds = epsilons.iter().map(|&e| prop2_check(e, lo, hi, count)).collect::<eafo_core::Result<Vec<_>>>()?;
    let facts = fact_bounds_check()?;
    let all_hold = bounds.iter().all(|b| b.holds);
    let mut out = json!({ "grid": [lo, hi, count], "bounds": bounds, "all_hold": all_hold, "facts": facts });
    let file = write(&dir, "verify.json", &to_json_string(&out)?)?;
    manifest.finish(&dir)?;
    out["output"] = path_value(&file);
    Ok(out)
}

struct Experiment {
    train: Dataset,
    val: Dataset,
    mlp: MLPConfig,
    tc: TrainConfig,
}

fn resolve_data(r: &mut Resolver, d: DataArgs) -> Result<(Dataset, Dataset)> {
    let spec = r.value("dataset", d.dataset, "blobs:2000,4".into())?;
    let data_seed = r.value("data-seed", d.data_seed, 0u64)?;
    let val_fraction = r.value("val-fraction", d.val_fraction, 0.25)?;
    let split_seed = r.value("split-seed", d.split_seed, 0u64)?;
    let data = parse_dataset(&spec, data_seed)?;
    Ok(data.split(val_fraction, split_seed)?)
}

fn resolve_model(r: &mut Resolver, m: ModelArgs, kind: ActivationKind, seed: u64) -> Result<(MLPConfig, TrainConfig)> {
    let widths_spec = r.value("widths", m.widths, "2,16,16,2".into())?;
    let defaults = ActivationParams::for_kind(kind);
    let params = ActivationParams {
        epsilon: r.value("epsilon", m.epsilon, defaults.epsilon)?,
        alpha: r.value("alpha", m.alpha, defaults.alpha)?,
    };
    let init = r.value("init", m.init, Init::default())?;
    let base = TrainConfig::default();
    let tc = TrainConfig {
        epochs: r.value("epochs", m.epochs, base.epochs)?,
        batch_size: r.value("batch-size", m.batch_size, base.batch_size)?,
        learning_rate: r.value("lr", m.lr, base.learning_rate)?,
        optimizer: r.value("optimizer", m.optimizer, OptimizerKind::default())?,
        weight_decay: r.value("weight-decay", m.weight_decay, base.weight_decay)?,
        schedule: r.value("schedule", m.schedule, LrSchedule::default())?,
        seed,
        probe_every: r.value("probe-every", m.probe_every, base.probe_every)?,
    };
    let mlp =
        MLPConfig { layer_widths: parse_list(&widths_spec, "layer width")?, activation: kind, params, seed, init };
    mlp.validate()?;
    tc.validate()?;
    Ok((mlp, tc))
}

fn kind(spec: &str) -> Result<ActivationKind> {
    spec.parse().map_err(|_| CliError::Usage(format!("unknown activation kind `{spec}`")))
}

pub fn train_cmd(args: TrainArgs) -> Result<Value> {
    let mut r = resolver("train", &args.common)?;
    let (train_set, val) = resolve_data(&mut r, args.data)?;
    let activation = kind(&r.value("activation", args.activation, "crrelu".into())?)?;
    let seed = r.value("seed", args.seed, 0u64)?;
    let (mlp, tc) = resolve_model(&mut r, args.model, activation, seed)?;
    let exp = Experiment { train: train_set, val, mlp, tc };
    let dir = output_dir(&r, &args.common, || run_dir_name(&timestamp(), seed))?;
    let mut manifest = RunManifest::new(&r, vec![seed], &["run.json", "epochs.csv"]);
    manifest.write(&dir)?;

    let record = train(&exp.train, &exp.val, &exp.mlp, &exp.tc)?;
    let (json_path, csv_path) = record.save(&dir)?;
    manifest.finish(&dir)?;
    Ok(json!({
        "run_dir": path_value(&dir),
        "run_record": path_value(&json_path),
        "epochs_table": path_value(&csv_path),
        "activation": activation.name(),
        "param_count": record.param_count,
        "final_val_accuracy": record.final_val_accuracy(),
        "final_train_loss": record.epochs.last().map(|e| e.train_loss),
        "final_params": record.final_params,
    }))
}

/// `N` means seeds `1..=N`; a comma list names the seeds.
fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    if spec.contains(',') {
        return parse_list(spec, "seed");
    }
    let n: u64 = spec.trim().parse().map_err(|_| CliError::Usage(format!("`{spec}` is not a seed count")))?;
    if n == 0 {
        return Err(CliError::Usage("need at least one seed".into()));
    }
    Ok((1..=n).collect())
}

pub fn compare(args: CompareArgs) -> Result<Value> {
    let mut r = resolver("compare", &args.common)?;
    let (train_set, val) = resolve_data(&mut r, args.data)?;
    let all: Vec<&str> = ActivationKind::ALL.iter().map(|k| k.name()).collect();
    let kinds_spec = r.value("kinds", args.kinds, all.join(","))?;
    let kinds = parse_list::<ActivationKind>(&kinds_spec, "activation kind")?;
    let seeds = parse_seeds(&r.value("seeds", args.seeds, "5".into())?)?;
    let workers = r.value("workers", args.common.workers, 1usize)?;
    let template_kind = *kinds.first().ok_or_else(|| CliError::Usage("no activation kinds given".into()))?;
    let (template, tc) = resolve_model(&mut r, args.model, template_kind, 0)?;
    let dir = output_dir(&r, &args.common, || format!("compare-{}", timestamp()))?;
    let mut manifest = RunManifest::new(&r, seeds.clone(), &["compare.csv", "compare.json"]);
    manifest.write(&dir)?;

    let table = compare_activations(&train_set, &val, &template, &tc, &kinds, &seeds, workers)?;
    let csv = write(&dir, "compare.csv", &table.to_csv())?;
    write(&dir, "compare.json", &to_json_string(&table)?)?;
    manifest.finish(&dir)?;
    Ok(json!({ "table": path_value(&csv), "seeds": seeds, "summary": table.summary }))
}
