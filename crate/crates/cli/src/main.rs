//! `tubepose`: synthesise scenes, estimate rack and tube poses, score them.

mod debug;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tubepose_core::bench::{run_bench, BenchScene};
use tubepose_core::io::{
    read_json, read_ply, to_json_string, write_json, write_ply, DetectionsFile, GroundTruthFile, PlyEncoding,
    RackModelFile, ResultsFile,
};
use tubepose_core::synthetic::{random_scene_config, RandomSceneSpec, TubePlacement};
use tubepose_core::tube::{feasibility_check, ResidualMode};
use tubepose_core::{
    evaluate_errors, generate_scene, run_pipeline, Error, PipelineOptions, PointCloud, RackModel, SceneConfig,
    TiltAngles, TubeDetection,
};

use error::{reading, writing, CliError};

#[derive(Parser)]
#[command(name = "tubepose", version, about = "Pose estimation for test tubes in a slotted rack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene with ground truth from a scene config.
    Synth(SynthArgs),
    /// Estimate rack and tube poses for a scene.
    Estimate(EstimateArgs),
    /// Compare estimated tube poses with ground truth.
    Eval(EvalArgs),
    /// Time rack and tube estimation over a set of scenes.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the config's sensor noise, m.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write scene.ply as ASCII instead of binary little-endian.
    #[arg(long)]
    ascii: bool,
}

#[derive(clap::Args)]
struct EstimationFlags {
    /// ICP iteration cap per hypothesis.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Voxel edge for downsampling, m. No downsampling when absent.
    #[arg(long)]
    voxel: Option<f64>,
    #[arg(long, value_enum)]
    residual_mode: Option<ResidualArg>,
    /// Tubes whose mean radial residual exceeds this are rejected, m.
    #[arg(long)]
    max_residual: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResidualArg {
    L1,
    L2,
}

#[derive(clap::Args)]
struct EstimateArgs {
    scene: PathBuf,
    detections: PathBuf,
    rack_model: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    flags: EstimationFlags,
    /// Also write a coloured PLY of the inputs and fitted cylinders.
    #[arg(long)]
    debug_cloud: Option<PathBuf>,
    /// Leave stage timings out of the results.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(clap::Args)]
struct EvalArgs {
    results: PathBuf,
    groundtruth: PathBuf,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Directories holding scene.ply, detections.json and rack-model.json.
    /// Random synthetic scenes are used when none are given.
    scenes: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    /// Number of random scenes to generate.
    #[arg(long, default_value_t = 10)]
    synthetic: usize,
    /// Tubes per random scene.
    #[arg(long, default_value_t = 8)]
    tubes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    flags: EstimationFlags,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return CliError::input("E_USAGE", e.kind().to_string()).report();
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => estimate(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut config: SceneConfig = read_json(&args.config).map_err(reading(&args.config, "E_CONFIG_PARSE"))?;
    if let Some(sigma) = args.noise_sigma {
        config.noise_sigma = sigma;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let scene = generate_scene(&config).map_err(|e| match e {
        Error::InfeasibleConfig(_) => {
            let mut err = CliError::input("E_CONFIG_INFEASIBLE", e.to_string()).at(&args.config);
            err.tube = first_infeasible(&config).and_then(|t| serde_json::to_value(t).ok());
            err
        }
        _ => CliError::input("E_CONFIG_INVALID", e.to_string()).at(&args.config),
    })?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::input("E_IO", e.to_string()).at(dir))?;
    let encoding = if args.ascii {
        PlyEncoding::Ascii
    } else {
        PlyEncoding::BinaryLittleEndian
    };
    let ply = dir.join("scene.ply");
    write_ply(&ply, &scene.cloud, None, encoding).map_err(writing(&ply))?;
    let model = RackModelFile {
        rack: config.rack.clone(),
        tube_classes: config.tube_classes.iter().map(|c| c.spec.clone()).collect(),
    };
    save(dir, "detections.json", &DetectionsFile::from_scene(&scene))?;
    save(dir, "groundtruth.json", &GroundTruthFile::from_scene(&scene, config.seed))?;
    save(dir, "rack-model.json", &model)?;
    Ok(())
}

fn save<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let path = dir.join(name);
    write_json(&path, value).map_err(writing(&path))
}

/// The first tube entry whose tilt does not fit its slot.
fn first_infeasible(config: &SceneConfig) -> Option<&TubePlacement> {
    let model = RackModel::new(config.rack.clone()).ok()?;
    config.tubes.iter().find(|t| {
        let Some(class) = config.class(&t.class_id) else {
            return false;
        };
        !matches!(
            feasibility_check(TiltAngles::new(t.alpha, t.beta), class.spec.radius, &model),
            Ok(true)
        )
    })
}

fn pipeline_options(flags: &EstimationFlags) -> Result<PipelineOptions, CliError> {
    let mut options = PipelineOptions::default();
    if let Some(n) = flags.max_iterations {
        options.icp.max_iterations = n;
    }
    if let Some(v) = flags.voxel {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::input("E_OPTIONS", format!("--voxel must be positive, got {v}")));
        }
        options.preprocess.voxel = Some(v);
    }
    if let Some(mode) = flags.residual_mode {
        options.tubes.fit.residual_mode = match mode {
            ResidualArg::L1 => ResidualMode::L1,
            ResidualArg::L2 => ResidualMode::L2,
        };
    }
    if let Some(r) = flags.max_residual {
        if !(r > 0.0) {
            return Err(CliError::input("E_OPTIONS", format!("--max-residual must be positive, got {r}")));
        }
        options.tubes.max_residual = r;
    }
    options
        .icp
        .validate()
        .map_err(|e| CliError::input("E_OPTIONS", e.to_string()))?;
    Ok(options)
}

/// Scene cloud, rack model and the detections resolved against both.
struct LoadedScene {
    model: RackModel,
    rack_cloud: PointCloud,
    detections: Vec<TubeDetection>,
}

fn load_scene(scene: &Path, detections: &Path, rack_model: &Path) -> Result<LoadedScene, CliError> {
    let cloud = read_ply(scene).map_err(reading(scene, "E_SCENE_PARSE"))?;
    let dets: DetectionsFile = read_json(detections).map_err(reading(detections, "E_DETECTIONS_PARSE"))?;
    let model_file: RackModelFile = read_json(rack_model).map_err(reading(rack_model, "E_RACK_MODEL_PARSE"))?;
    let invalid_model = |e: Error| CliError::input("E_RACK_MODEL_INVALID", e.to_string()).at(rack_model);
    model_file.validate().map_err(invalid_model)?;
    let model = RackModel::new(model_file.rack.clone()).map_err(invalid_model)?;
    let (rack_cloud, detections_resolved) = dets.resolve(&cloud, &model_file).map_err(|e| {
        match e {
            Error::IndexOutOfRange { index, count } => CliError::input(
                "E_DETECTIONS_RANGE",
                format!("point index {index} out of range, the scene has {count} points"),
            ),
            _ => CliError::input("E_DETECTIONS_INVALID", e.to_string()),
        }
        .at(detections)
    })?;
    Ok(LoadedScene {
        model,
        rack_cloud,
        detections: detections_resolved,
    })
}

fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let options = pipeline_options(&args.flags)?;
    let scene = load_scene(&args.scene, &args.detections, &args.rack_model)?;
    let output = run_pipeline(&scene.rack_cloud, &scene.detections, &scene.model, &options)
        .map_err(|e| CliError::estimation("E_RACK_ESTIMATION", e.to_string()))?;

    let mut results = ResultsFile::from_output(&output, &scene.detections);
    if args.no_timings {
        results.timings_ms = None;
    }
    write_json(&args.output, &results).map_err(writing(&args.output))?;

    if let Some(path) = &args.debug_cloud {
        let (cloud, colors) = debug::debug_cloud(&scene.rack_cloud, &scene.detections, &output)
            .map_err(|e| CliError::estimation("E_DEBUG_CLOUD", e.to_string()))?;
        write_ply(path, &cloud, Some(&colors), PlyEncoding::BinaryLittleEndian).map_err(writing(path))?;
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let results: ResultsFile = read_json(&args.results).map_err(reading(&args.results, "E_RESULTS_PARSE"))?;
    let truth: GroundTruthFile =
        read_json(&args.groundtruth).map_err(reading(&args.groundtruth, "E_GROUNDTRUTH_PARSE"))?;
    let estimates = results
        .pose_records()
        .map_err(|e| CliError::input("E_RESULTS_INVALID", e.to_string()).at(&args.results))?;
    let truth_records = truth
        .pose_records()
        .map_err(|e| CliError::input("E_GROUNDTRUTH_INVALID", e.to_string()).at(&args.groundtruth))?;
    let report = evaluate_errors(&estimates, &truth_records)
        .map_err(|e| CliError::input("E_IDENTITY_MISMATCH", e.to_string()))?;

    if let Some(path) = &args.json {
        write_json(path, &report).map_err(writing(path))?;
    }
    match args.format {
        Format::Table => print!("{}", report.to_table()),
        Format::Json => print!("{}", to_json_string(&report).map_err(|e| CliError::input("E_IO", e.to_string()))?),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let options = pipeline_options(&args.flags)?;
    let mut scenes = Vec::new();
    let mut model = None;
    if args.scenes.is_empty() {
        for i in 0..args.synthetic {
            let spec = RandomSceneSpec {
                n_tubes: args.tubes,
                seed: args.seed.wrapping_add(i as u64),
                ..RandomSceneSpec::default()
            };
            let scene = random_scene_config(&spec)
                .and_then(|c| generate_scene(&c))
                .map_err(|e| CliError::input("E_OPTIONS", e.to_string()))?;
            scenes.push(BenchScene {
                rack_cloud: scene.rack_cloud(),
                detections: scene.detections(),
            });
            model = Some(scene.model);
        }
    } else {
        for dir in &args.scenes {
            let s = load_scene(
                &dir.join("scene.ply"),
                &dir.join("detections.json"),
                &dir.join("rack-model.json"),
            )?;
            if model.as_ref().is_some_and(|m: &RackModel| m.params != s.model.params) {
                return Err(CliError::input("E_OPTIONS", "bench scenes must share one rack model").at(dir));
            }
            scenes.push(BenchScene {
                rack_cloud: s.rack_cloud,
                detections: s.detections,
            });
            model = Some(s.model);
        }
    }
    let model = model.ok_or_else(|| CliError::input("E_OPTIONS", "no scenes to time"))?;
    let report = run_bench(&scenes, &model, &options, args.repetitions).map_err(|e| match e {
        Error::InvalidParameter(_) => CliError::input("E_OPTIONS", e.to_string()),
        _ => CliError::estimation("E_RACK_ESTIMATION", e.to_string()),
    })?;
    match args.format {
        Format::Table => print!("{}", report.to_text()),
        Format::Json => print!("{}", to_json_string(&report).map_err(|e| CliError::input("E_IO", e.to_string()))?),
    }
    Ok(())
}
