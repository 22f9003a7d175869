use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use shiftflow::audit;
use shiftflow::binning::Axis;
use shiftflow::eval::render::RenderOptions;
use shiftflow::eval::sweep as sweep_grid;
use shiftflow::eval::sweep::{cells_to_csv, cells_to_svg, Scored};
use shiftflow::eval::{
    cost_model, directional_accuracy, load_segments, oracle_equivalence, render_flow,
    scene_accuracy, CostParams,
};
use shiftflow::events::{read_events, write_events, Event, EventReader, SensorGeometry};
use shiftflow::par::Execution;
use shiftflow::pipeline::{
    detections, read_detections_csv, write_detections_csv, BinOutput, Detection, FlowEstimator,
    PipelineConfig, ScorerVariant,
};
use shiftflow::synth::{write_ground_truth_csv, GroundTruthSegment, Scene, SynthError};

use crate::params::{ParamArgs, VariantArg};
use crate::{
    config_err, CostArgs, Estimator, Failure, OracleArgs, RenderArgs, RunArgs, SweepArgs, SynthArgs,
};

type Outcome = Result<(), Failure>;

fn resolve(est: &Estimator, timing: bool) -> Result<PipelineConfig, Failure> {
    let params = match &est.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let file: ParamArgs = toml::from_str(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            est.params.clone().over(file)
        }
        None => est.params.clone(),
    };
    let cfg = params.resolve(timing).map_err(config_err)?;
    if let Some(w) = cfg.hypotheses.j_bound_warning(usize::from(cfg.geometry.nx)) {
        eprintln!("warning: {w}");
    }
    if cfg.execution == Execution::Parallel && !Execution::parallel_available() {
        eprintln!("warning: built without the `parallel` feature; running sequentially");
    }
    audit::global().set_enabled(est.audit);
    Ok(cfg)
}

fn finish_audit(est: &Estimator) -> Outcome {
    if !est.audit {
        return Ok(());
    }
    let r = audit::global().report();
    eprintln!(
        "audit: {} width checks, {} violations",
        r.checks, r.violations
    );
    if r.violations > 0 {
        return Err(anyhow::anyhow!("{} datapath width violations", r.violations).into());
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn svg_for_bin(dir: &Path, bin: &BinOutput, events: &[Event], geometry: SensorGeometry) -> Outcome {
    let in_bin: Vec<Event> = events
        .iter()
        .filter(|e| (bin.t_start_us..bin.t_end_us).contains(&e.t))
        .copied()
        .collect();
    let svg = render_flow(&in_bin, &bin.detections, geometry, RenderOptions::default());
    let path = dir.join(format!("bin_{:06}.svg", bin.bin_index));
    fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Loads ground truth and rejects overlapping segments on either axis.
/// Multi-object scenes overlap by nature; `sweep --scene` scores those.
fn segments_file(path: &Path) -> Result<Vec<GroundTruthSegment>, Failure> {
    let segs = load_segments(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    for axis in [Axis::X, Axis::Y] {
        directional_accuracy(&[], &segs, axis)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    }
    Ok(segs)
}

pub fn run(args: RunArgs) -> Outcome {
    let cfg = resolve(&args.estimator, true)?;
    let segments = match &args.segments {
        Some(p) => Some(segments_file(p)?),
        None => None,
    };
    if let Some(dir) = &args.svg_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let reader = EventReader::open(&args.input, cfg.geometry)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let mut est = FlowEstimator::new(cfg.clone()).map_err(config_err)?;
    let mut bins = Vec::new();
    let mut pending: Vec<Event> = Vec::new();
    for ev in reader {
        let ev = ev.with_context(|| format!("reading {}", args.input.display()))?;
        let closed = est.push(&ev)?;
        if let Some(dir) = &args.svg_dir {
            for b in closed.iter().filter(|b| !b.detections.is_empty()) {
                svg_for_bin(dir, b, &pending, cfg.geometry)?;
            }
            if let Some(last) = closed.last() {
                pending.retain(|e| e.t >= last.t_end_us);
            }
            pending.push(ev);
        }
        bins.extend(closed);
    }

    let mut comments = vec![format!("input = {}", args.input.display())];
    comments.extend(cfg.describe());
    match &args.output {
        Some(p) => {
            let mut w = create(p)?;
            write_detections_csv(&mut w, &comments, detections(&bins))?;
            w.flush()?;
        }
        None => write_detections_csv(io::stdout().lock(), &comments, detections(&bins))?,
    }
    let n = detections(&bins).count();
    eprintln!("{} bins, {n} detections", bins.len());

    if let Some(segs) = segments {
        let dets: Vec<Detection> = detections(&bins).cloned().collect();
        for axis in [Axis::X, Axis::Y] {
            if segs.iter().any(|s| s.axis == axis) {
                let report = directional_accuracy(&dets, &segs, axis).map_err(config_err)?;
                eprint!("{}", report.to_text());
            }
        }
    }
    finish_audit(&args.estimator)
}

pub fn synth(args: SynthArgs) -> Outcome {
    let mut scene = Scene::load(&args.scene).map_err(|e| match e {
        SynthError::Io(e) => config_err(format!("{}: {e}", args.scene.display())),
        e => config_err(e),
    })?;
    if let Some(seed) = args.seed {
        scene.noise.seed = seed;
    }
    let out = scene.generate().map_err(config_err)?;
    match &args.events {
        Some(p) => {
            let mut w = create(p)?;
            write_events(&mut w, &out.events)?;
            w.flush()?;
        }
        None => write_events(BufWriter::new(io::stdout().lock()), &out.events)?,
    }
    if let Some(gt) = &args.gt {
        let mut w = create(gt)?;
        write_ground_truth_csv(&mut w, &out.segments)?;
        w.flush()?;
    }
    eprintln!(
        "{} events ({} signal, {} noise), {} ground-truth segments",
        out.events.len(),
        out.signal_count,
        out.noise_count,
        out.segments.len()
    );
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Outcome {
    let mut base = resolve(&args.estimator, false)?;
    if args.dt_us_list.is_empty() || args.theta_e_list.is_empty() {
        return Err(config_err(
            "--dt-us-list and --theta-e-list need at least one value",
        ));
    }
    let exec = base.execution;
    // cells are the unit of parallel work; each cell runs sequentially
    base.execution = Execution::Sequential;
    let cells = if let Some(scene_path) = &args.scene {
        let scene = Scene::load(scene_path).map_err(config_err)?;
        base.geometry = scene.geometry;
        let out = scene.generate().map_err(config_err)?;
        let depth = u64::from(base.hypotheses.depth);
        let eval = |bins: &[BinOutput]| {
            let a = scene_accuracy(&scene.objects, bins, depth, 1.0);
            Scored {
                correct: a.clean_correct + a.overlap_correct,
                total: a.clean_total + a.overlap_total,
            }
        };
        sweep_grid::sweep(
            &out.events,
            &args.dt_us_list,
            &args.theta_e_list,
            &base,
            eval,
            exec,
        )
        .map_err(config_err)?
    } else {
        let input = args
            .input
            .as_ref()
            .expect("clap requires --input or --scene");
        let seg_path = args
            .segments
            .as_ref()
            .expect("clap requires --segments with --input");
        let segs = segments_file(seg_path)?;
        let events = read_events(input, base.geometry)
            .with_context(|| format!("reading {}", input.display()))?;
        let eval = |bins: &[BinOutput]| {
            let dets: Vec<Detection> = detections(bins).cloned().collect();
            let r = directional_accuracy(&dets, &segs, Axis::X)
                .expect("segments checked by segments_file");
            Scored {
                correct: r.correct(),
                total: r.total(),
            }
        };
        sweep_grid::sweep(
            &events,
            &args.dt_us_list,
            &args.theta_e_list,
            &base,
            eval,
            exec,
        )
        .map_err(config_err)?
    };
    let table = cells_to_csv(&cells);
    match &args.csv {
        Some(p) => fs::write(p, table).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{table}"),
    }
    if let Some(p) = &args.svg {
        fs::write(p, cells_to_svg(&cells)).with_context(|| format!("writing {}", p.display()))?;
    }
    finish_audit(&args.estimator)
}

pub fn cost(args: CostArgs) -> Outcome {
    let params = CostParams {
        nx: args.nx,
        ny: args.ny,
        depth: args.depth,
        j_max: args.j_max,
        clock_hz: args.clock_hz,
        variant: match args.variant {
            VariantArg::Trace => ScorerVariant::Trace,
            VariantArg::Incremental => ScorerVariant::Incremental,
        },
    };
    params.validate().map_err(config_err)?;
    let report = cost_model(params);
    print!("{}", report.to_text());
    if let Some(p) = &args.csv {
        fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn oracle_check(args: OracleArgs) -> Outcome {
    if args.cases == 0 {
        return Err(config_err("--cases must be positive"));
    }
    let exec = if args.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let report = oracle_equivalence(args.cases, args.seed, exec);
    println!(
        "{} cases, {} comparisons, {} mismatches",
        report.cases, report.comparisons, report.mismatch_count
    );
    for m in &report.mismatches {
        println!("  {m}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(anyhow::anyhow!(
            "scorer disagrees with the reference in {} comparisons",
            report.mismatch_count
        )
        .into())
    }
}

/// Reads `delta_t_us = N` from the comment block of a detections file.
fn dt_from_comments(path: &Path) -> Result<Option<u64>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            l.trim_start_matches('#')
                .trim()
                .strip_prefix("delta_t_us = ")
        })
        .find_map(|v| v.trim().parse().ok()))
}

pub fn render(args: RenderArgs) -> Outcome {
    let geometry = SensorGeometry::new(args.nx, args.ny).map_err(config_err)?;
    let dt = match args.dt_us {
        Some(d) => d,
        None => dt_from_comments(&args.detections)?.ok_or_else(|| {
            config_err("no --dt-us given and no delta_t_us comment in the detections file")
        })?,
    };
    let dets: Vec<Detection> = read_detections_csv(&args.detections)
        .with_context(|| format!("reading {}", args.detections.display()))?
        .into_iter()
        .filter(|d| d.bin_index == args.bin)
        .collect();
    // detections carry the bin end; without any, fall back to index * dt
    let t_end = dets.first().map_or((args.bin + 1) * dt, |d| d.t_end_us);
    let t_start = t_end.saturating_sub(dt);
    let events: Vec<Event> = read_events(&args.events, geometry)
        .with_context(|| format!("reading {}", args.events.display()))?
        .into_iter()
        .filter(|e| (t_start..t_end).contains(&e.t))
        .collect();
    fs::write(
        &args.output,
        render_flow(&events, &dets, geometry, RenderOptions::default()),
    )
    .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!(
        "bin {}: {} events, {} detections",
        args.bin,
        events.len(),
        dets.len()
    );
    Ok(())
}
