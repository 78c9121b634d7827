use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maskprop::io::{self, load_input, load_scenario, write_run_output, write_sequence};
use maskprop::metrics::{aggregate, score_frame};
use maskprop::pipeline::{run_sequence, sweep, write_sweep_csv, Input, RunConfig};
use maskprop::render::render_overlays;
use maskprop::simulator::{generate_scenario, scenario_by_name, Scenario, SUITE};
use maskprop::{Error, Result};

#[derive(Parser)]
#[command(name = "maskprop", version, about = "Motion-prompted mask propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scenario to frames, ground-truth masks and a manifest.
    Simulate {
        /// Built-in scenario name or manifest path.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Propagate the first-frame mask through a sequence.
    Run(RunArgs),
    /// Score predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// CSV path; a JSON summary is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Leave out frames whose ground-truth mask is empty.
        #[arg(long)]
        exclude_occluded: bool,
    },
    /// Score the scenario suite for each value of one hyperparameter.
    Sweep {
        /// keypoints | flow_interval | tau_iou | tau_occ | tau_rank
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
        /// Scenarios to average over; defaults to the whole suite.
        #[arg(long = "scenarios", value_delimiter = ',')]
        scenarios: Vec<String>,
    },
    /// Draw predicted and ground-truth boundaries over the frames.
    Render {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with RunConfig fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    segmenter: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, requires = "masks")]
    frames: Option<PathBuf>,
    #[arg(long, requires = "frames")]
    masks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mgp_sparse: Option<bool>,
    #[arg(long)]
    mgp_dense: Option<bool>,
    #[arg(long)]
    stms_temporal: Option<bool>,
    #[arg(long)]
    stms_spatial: Option<bool>,
    #[arg(long)]
    keypoints: Option<usize>,
    #[arg(long)]
    flow_interval: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = &self.segmenter {
            cfg.segmenter = s.clone();
        }
        if let Some(s) = &self.scenario {
            cfg.input = Some(Input::Scenario { scenario: s.clone() });
        }
        if let (Some(frames), Some(masks)) = (&self.frames, &self.masks) {
            cfg.input = Some(Input::Directories {
                frames: frames.clone(),
                masks: masks.clone(),
            });
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        let overrides = [
            (self.mgp_sparse, &mut cfg.mgp_sparse),
            (self.mgp_dense, &mut cfg.mgp_dense),
            (self.stms_temporal, &mut cfg.stms_temporal),
            (self.stms_spatial, &mut cfg.stms_spatial),
        ];
        for (flag, field) in overrides {
            if let Some(v) = flag {
                *field = v;
            }
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.keypoints {
            cfg.keypoint_count = k;
        }
        if let Some(i) = self.flow_interval {
            cfg.flow_interval = i;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no input: pass --scenario or --frames/--masks".into()))?;
    let loaded = load_input(input)?;
    let out = run_sequence(&loaded.frames, &loaded.first_mask, loaded.ground_truth.as_deref(), &cfg)?;
    if let Some(dir) = &cfg.output {
        write_run_output(dir, &cfg, &out)?;
    }
    match &out.report {
        Some(r) => println!(
            "frames {} mean_j {:.4} mean_f {:.4} j_and_f {:.4}",
            out.outputs.len(),
            r.mean_j,
            r.mean_f,
            r.j_and_f
        ),
        None => println!("frames {}", out.outputs.len()),
    }
    Ok(())
}

fn eval(pred: &Path, gt: &Path, out: &Path, exclude_occluded: bool) -> Result<()> {
    let preds = io::read_masks(pred)?;
    let gts = io::ground_truth_from_masks(io::read_masks(gt)?);
    if preds.len() != gts.len() {
        return Err(Error::CountMismatch(preds.len(), gts.len()));
    }
    // frame 0 is the prompt itself
    let per_frame = preds
        .iter()
        .zip(&gts)
        .skip(1)
        .map(|(p, g)| score_frame(g.frame_index, p, &g.mask, g.occluded))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&per_frame, !exclude_occluded)?;
    let file = std::fs::File::create(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    report.write_csv(file)?;
    io::write_text(&out.with_extension("json"), &report.summary_json()?)?;
    println!("mean_j {:.4} mean_f {:.4} j_and_f {:.4}", report.mean_j, report.mean_f, report.j_and_f);
    Ok(())
}

fn sweep_cmd(param: &str, values: &[f64], args: &RunArgs, names: &[String]) -> Result<()> {
    let cfg = args.config()?;
    let scenarios: Vec<Scenario> = if names.is_empty() {
        SUITE.iter().map(|n| scenario_by_name(n)).collect::<Result<_>>()?
    } else {
        names.iter().map(|n| load_scenario(n)).collect::<Result<_>>()?
    };
    let scenarios: Vec<Scenario> = scenarios
        .into_iter()
        .map(|s| Scenario { seed: cfg.seed, ..s })
        .collect();
    let rows = sweep(&cfg, param, values, &scenarios)?;
    match &cfg.output {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            write_sweep_csv(file, param, &rows)
        }
        None => write_sweep_csv(std::io::stdout().lock(), param, &rows),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario, out, seed } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let seq = generate_scenario(&s)?;
            write_sequence(&out, &s, &seq)?;
            println!("wrote {} frames of `{}` to {}", seq.len(), s.name, out.display());
            Ok(())
        }
        Command::Run(args) => run(&args),
        Command::Eval {
            pred,
            gt,
            out,
            exclude_occluded,
        } => eval(&pred, &gt, &out, exclude_occluded),
        Command::Sweep {
            param,
            values,
            run,
            scenarios,
        } => sweep_cmd(&param, &values, &run, &scenarios),
        Command::Render { run, frames, gt, out } => {
            let n = render_overlays(&run, &frames, gt.as_deref(), &out)?;
            println!("rendered {n} overlays to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
