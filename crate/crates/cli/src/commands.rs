use dro_core::baselines::{classification_error, fit_baseline, BaselineConfig};
use dro_core::conic::{build_continuous_model, DroConfig, ModelParams};
use dro_core::cutgen::{run, EngineConfig};
use dro_core::data::{
    generate_synthetic, ingest_csv, write_csv_to, Dataset, DatasetSchema, PositiveClass, Role,
};
use dro_core::experiments::{
    benchmark, cross_validate, runtime_study, stylized_comparison, write_runtime_csv,
    ExperimentConfig, GridSpec, Method, RuntimeConfig, StylizedConfig,
};
use dro_core::metric::{GroundMetricConfig, Norm};
use dro_core::solver::SolverConfig;
use serde::Serialize;

use crate::options::{Command, Options};
use crate::output::Outputs;
use crate::Failure;

pub fn dispatch(command: Command, opts: &Options) -> Result<(), Failure> {
    match command {
        Command::Eval => return eval(opts),
        Command::Train
        | Command::Cv
        | Command::Bench
        | Command::Synth
        | Command::Runtime
        | Command::Stylized => {}
    }
    let mut out = Outputs::new(Options::require(&opts.out, "out")?)?;
    match command {
        Command::Train => train(opts, &mut out)?,
        Command::Cv => cv(opts, &mut out)?,
        Command::Bench => bench(opts, &mut out)?,
        Command::Synth => synth(opts, &mut out)?,
        Command::Runtime => runtime(opts, &mut out)?,
        Command::Stylized => stylized(opts, &mut out)?,
        Command::Eval => unreachable!(),
    }
    out.finish(command, opts)
}

fn load_data(opts: &Options) -> Result<(Dataset, DatasetSchema), Failure> {
    let schema = DatasetSchema::load(Options::require(&opts.schema, "schema")?)?;
    let data = ingest_csv(Options::require(&opts.data, "data")?, &schema)?;
    Ok((data, schema))
}

fn metric(opts: &Options) -> Result<GroundMetricConfig, Failure> {
    let norm: Norm = opts.norm.as_deref().unwrap_or("l1").parse()?;
    Ok(GroundMetricConfig::new(
        norm,
        opts.p.unwrap_or(1.0),
        opts.kappa.unwrap_or(1.0),
    )?)
}

fn engine(opts: &Options) -> EngineConfig {
    EngineConfig {
        time_limit: opts.time_cap,
        ..EngineConfig::default()
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    method: &'a str,
    rows: usize,
    objective: f64,
    training_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    termination: Option<String>,
}

fn train(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let (data, _) = load_data(opts)?;
    let method = opts.method.as_deref().unwrap_or("lr");
    let gamma = opts.gamma.unwrap_or(0.0);
    let baseline = |gamma| {
        fit_baseline(
            &data,
            &BaselineConfig {
                gamma,
                ..BaselineConfig::default()
            },
        )
    };
    let (params, objective, termination) = match method {
        "lr" => {
            let fit = baseline(0.0)?;
            (fit.params, fit.objective, None)
        }
        "rlr" | "r-lr" => {
            let fit = baseline(gamma)?;
            (fit.params, fit.objective, None)
        }
        "dro" => {
            let config = DroConfig {
                epsilon: *Options::require(&opts.epsilon, "epsilon")?,
                metric: metric(opts)?,
                lasso: gamma,
                ..DroConfig::default()
            };
            let result = run(&data, &config, &engine(opts))?;
            let term = format!("{:?}", result.termination);
            (result.params.clone(), result.objective(), Some(term))
        }
        "dro-continuous" => {
            let epsilon = *Options::require(&opts.epsilon, "epsilon")?;
            let sol = build_continuous_model(&data, epsilon, opts.kappa.unwrap_or(1.0), None)?
                .solve(&SolverConfig {
                    time_limit: opts.time_cap,
                    ..SolverConfig::default()
                })?;
            (sol.beta, sol.objective, None)
        }
        other => {
            return Err(Failure::config(format!(
                "unknown method `{other}`; expected lr, rlr, dro or dro-continuous"
            )))
        }
    };
    out.write("model.json", format!("{}\n", params.to_json()).as_bytes())?;
    out.write_json(
        "fit.json",
        &FitSummary {
            method,
            rows: data.len(),
            objective,
            training_error: classification_error(&params, &data),
            termination,
        },
    )
}

fn eval(opts: &Options) -> Result<(), Failure> {
    let params = ModelParams::load(Options::require(&opts.model, "model")?)?;
    let (data, _) = load_data(opts)?;
    params.check_dims(&data)?;
    println!("{:.4}", classification_error(&params, &data));
    Ok(())
}

fn experiment_config(opts: &Options, schema: &DatasetSchema) -> Result<ExperimentConfig, Failure> {
    let mut grid = GridSpec::log_spaced(opts.points_per_decade.unwrap_or(1));
    if let Some(e) = &opts.epsilons {
        grid.epsilons = e.clone();
    }
    if let Some(g) = &opts.gammas {
        grid.gammas = g.clone();
    }
    let config = ExperimentConfig {
        grid,
        folds: opts.folds.unwrap_or(5),
        dro: DroConfig {
            metric: metric(opts)?,
            ..DroConfig::default()
        },
        engine: engine(opts),
        standardize: schema.standardize,
        ..ExperimentConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn cv(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let (data, schema) = load_data(opts)?;
    let config = experiment_config(opts, &schema)?;
    let method: Method = opts.method.as_deref().unwrap_or("dro-k1").parse()?;
    let outcome = cross_validate(&data, method, &config, opts.seed.unwrap_or(0))?;
    println!(
        "{method}: epsilon {} gamma {}",
        outcome.chosen.epsilon, outcome.chosen.gamma
    );
    out.write_json("cv.json", &outcome)
}

fn bench(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let (data, schema) = load_data(opts)?;
    let config = experiment_config(opts, &schema)?;
    let methods: Vec<Method> = match &opts.methods {
        Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?,
        None => Method::standard(),
    };
    let report = benchmark(
        &data,
        &methods,
        opts.splits.unwrap_or(20),
        opts.seed.unwrap_or(0),
        &config,
    )?;
    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    print!("{}", String::from_utf8_lossy(&summary));
    let mut splits = Vec::new();
    report.write_splits_csv(&mut splits)?;
    out.write("bench_summary.csv", &summary)?;
    out.write("bench_splits.csv", &splits)?;
    out.write_json("bench.json", &report)
}

fn synth(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let n = *Options::require(&opts.n, "n")?;
    let m = *Options::require(&opts.m, "m")?;
    let s = generate_synthetic(n, m, opts.seed.unwrap_or(0))?;
    let mut csv = Vec::new();
    write_csv_to(&s.dataset, &mut csv)?;
    out.write("data.csv", &csv)?;
    out.write_json("truth.json", &s.truth)?;
    let mut schema = DatasetSchema::new(s.dataset.names().label.clone());
    schema.positive = PositiveClass::Value("1".into());
    schema.default_role = Role::Categorical;
    out.write("schema.toml", schema.to_toml_string().as_bytes())
}

fn runtime(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let defaults = RuntimeConfig::default();
    let config = RuntimeConfig {
        ns: opts.ns.clone().unwrap_or(defaults.ns),
        ms: opts.ms.clone().unwrap_or(defaults.ms),
        repetitions: opts.repetitions.unwrap_or(defaults.repetitions),
        epsilon: opts.epsilon.unwrap_or(defaults.epsilon),
        time_cap: opts.time_cap.unwrap_or(defaults.time_cap),
        group_cap: opts.group_cap.unwrap_or(defaults.group_cap),
        ..defaults
    };
    let rows = runtime_study(&config, opts.seed.unwrap_or(0))?;
    let mut csv = Vec::new();
    write_runtime_csv(&rows, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    out.write("runtime.csv", &csv)?;
    out.write_json("runtime.json", &rows)
}

fn stylized(opts: &Options, out: &mut Outputs) -> Result<(), Failure> {
    let defaults = StylizedConfig::default();
    let config = StylizedConfig {
        ns: opts.ns.clone().unwrap_or(defaults.ns),
        runs: opts.runs.unwrap_or(defaults.runs),
        radius_constant: opts.radius_constant.unwrap_or(defaults.radius_constant),
        ..defaults
    };
    let summaries = stylized_comparison(&config, opts.seed.unwrap_or(0))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "model", "epsilon", "mean", "q15", "q85"])
        .map_err(Failure::config)?;
    for s in &summaries {
        w.write_record([
            s.n.to_string(),
            s.model.name().to_string(),
            format!("{:.6}", s.epsilon),
            format!("{:.6}", s.mean),
            format!("{:.6}", s.q15),
            format!("{:.6}", s.q85),
        ])
        .map_err(Failure::config)?;
    }
    let csv = w.into_inner().map_err(Failure::config)?;
    print!("{}", String::from_utf8_lossy(&csv));
    out.write("stylized.csv", &csv)?;
    out.write_json("stylized.json", &summaries)
}
