use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use se2ot::io::{read_field_csv, read_pgm, read_se2f, write_field_csv, write_pgm, write_se2f, PgmEncoding, Se2Field};
use se2ot::lifting::{
    build_cake_wavelets, interpolate_images, lift_image, lift_orientation_field, project_score, project_signed,
    reconstruct_orientation_field, CakeWaveletBank, SignedScorePair,
};
use se2ot::oracles::GeodesicGraph;
use se2ot::ot::{
    barycenter, interpolate, jko_step, porous_energy, sinkhorn, so2_counterexample, BarycenterConfig,
    GradientFlowConfig, SinkhornConfig,
};
use se2ot::{Error, GibbsKernel, GridMeasure, GroupElement, MetricParams, Se2Grid};

use crate::args::*;
use crate::failure::{at, Failure};
use crate::manifest::{manifest_path, Manifest};

type Outcome = Result<(), Failure>;

/// Everything a command needs besides its own arguments.
pub struct Run {
    /// Command line without the program name, as recorded in manifests.
    pub argv: Vec<String>,
    pub threads: Option<usize>,
    started: Instant,
}

impl Run {
    pub fn new(argv: Vec<String>, threads: Option<usize>) -> Self {
        Run {
            argv,
            threads,
            started: Instant::now(),
        }
    }

    fn manifest(&self, command: &str) -> Manifest {
        let mut m = Manifest::new(command, &self.argv);
        m.set("threads", self.threads.map_or("default".to_string(), |t| t.to_string()));
        m
    }

    fn finish(&self, mut m: Manifest, primary_output: &Path) -> Outcome {
        m.set("wall_clock_s", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        m.write(&manifest_path(primary_output))
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn not_converged(what: &str, converged: bool) -> Outcome {
    if converged {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("{what} did not converge; outputs were written with converged=false")))
    }
}

fn metric(args: &MetricArgs) -> Result<MetricParams, Failure> {
    let [w1, w2, w3] = args.weights[..] else {
        return Err(Failure::usage("--weights takes three values"));
    };
    Ok(MetricParams::new(w1, w2, w3)?)
}

fn grid(args: &GridArgs) -> Result<Se2Grid, Failure> {
    let [x0, x1, y0, y1] = args.window[..] else {
        return Err(Failure::usage("--window takes four values"));
    };
    Ok(Se2Grid::new(args.nx, args.ny, args.ntheta, [x0, x1, y0, y1])?)
}

fn parse_element(s: &str) -> Result<GroupElement, Failure> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::usage(format!("--source {s:?}: {e}")))?;
    match parts[..] {
        [x, y, theta] => Ok(GroupElement::new(x, y, theta)),
        _ => Err(Failure::usage(format!("--source expects \"x,y,theta\", got {s:?}"))),
    }
}

fn sinkhorn_config(s: &SolverArgs) -> Result<SinkhornConfig, Failure> {
    let cfg = SinkhornConfig::new(s.eps).with_p(s.p).with_max_iters(s.max_iters).with_tol(s.tol);
    cfg.validate()?;
    Ok(cfg)
}

fn kernel(grid: &Se2Grid, s: &SolverArgs) -> Result<GibbsKernel, Failure> {
    let k = GibbsKernel::build(grid, &metric(&s.metric)?, s.eps, s.p, s.kernel_cutoff)?;
    if k.too_wide() {
        warn("kernel stencil is wider than the grid; it was clipped to the window");
    }
    Ok(k)
}

fn record_solver(m: &mut Manifest, grid: &Se2Grid, s: &SolverArgs) {
    record_grid(m, grid);
    m.set("weights", s.metric.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" "));
    m.set("eps", s.eps);
    m.set("p", s.p);
    m.set("max_iters", s.max_iters);
    m.set("tol", s.tol);
    m.set("kernel_cutoff", s.kernel_cutoff);
}

fn record_grid(m: &mut Manifest, grid: &Se2Grid) {
    let [nx, ny, nt] = grid.dims();
    m.set("nx", nx);
    m.set("ny", ny);
    m.set("ntheta", nt);
    m.set("window", grid.window().map(|v| v.to_string()).join(" "));
}

fn load_measure(path: &Path) -> Result<GridMeasure, Failure> {
    let f = read_se2f(path).map_err(at(path))?;
    GridMeasure::new(f.grid, f.values).map_err(|e| match e {
        Error::ZeroMass => Failure::usage(format!("{}: field has zero mass", path.display())),
        e => Failure::from(e),
    })
}

fn save_measure(path: &Path, mu: &GridMeasure) -> Outcome {
    let field = Se2Field::new(*mu.grid(), mu.density().to_vec())?;
    write_se2f(path, &field).map_err(at(path))
}

fn same_grid(a: &GridMeasure, b: &GridMeasure, which: &Path) -> Outcome {
    if a.grid() != b.grid() {
        return Err(Failure::usage(format!("{} lives on a different grid", which.display())));
    }
    Ok(())
}

fn encoding(ascii: bool) -> PgmEncoding {
    if ascii {
        PgmEncoding::Ascii
    } else {
        PgmEncoding::Binary
    }
}

pub fn distance(run: &Run, a: &DistanceArgs) -> Outcome {
    let grid = grid(&a.grid)?;
    let metric = metric(&a.metric)?;
    let source = grid.nearest_site(&parse_element(&a.source)?)?;
    let s = grid.site(source);
    let values: Vec<f64> = match a.approx {
        Approx::RhoB => (0..grid.len()).map(|i| metric.rho_b(&s.relative_to(&grid.site(i)))).collect(),
        Approx::RhoC => {
            let mut boundary = 0;
            let v = (0..grid.len())
                .map(|i| match metric.rho_c(&s.relative_to(&grid.site(i))) {
                    Ok(d) => Ok(d),
                    Err(Error::Domain { .. }) => {
                        boundary += 1;
                        Ok(f64::INFINITY)
                    }
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if boundary > 0 {
                warn(format!("rho_c is undefined at {boundary} sites a half turn from the source; wrote +inf there"));
            }
            v
        }
        Approx::Dijkstra => GeodesicGraph::new(grid, metric, a.radius)?.distance_map(source),
    };
    write_se2f(&a.out, &Se2Field::new(grid, values)?).map_err(at(&a.out))?;

    let mut m = run.manifest("distance");
    record_grid(&mut m, &grid);
    m.set("weights", a.metric.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" "));
    m.set("approx", format!("{:?}", a.approx));
    m.set("radius", a.radius);
    m.set("source_site", source);
    m.set("source", format!("{},{},{}", s.x, s.y, s.theta));
    run.finish(m, &a.out)
}

pub fn sinkhorn_cmd(run: &Run, a: &SinkhornArgs) -> Outcome {
    let mu = load_measure(&a.mu)?;
    let nu = load_measure(&a.nu)?;
    same_grid(&mu, &nu, &a.nu)?;
    let k = kernel(mu.grid(), &a.solver)?;
    let mut cfg = sinkhorn_config(&a.solver)?;
    cfg.log_every = a.log_every;
    let file = File::create(&a.report).map_err(|e| Failure::io(&a.report, e))?;
    let mut report = BufWriter::new(file);
    let out = sinkhorn(&mu, &nu, &k, &cfg, Some(&mut report))?;
    report.flush().map_err(|e| Failure::io(&a.report, e))?;
    println!(
        "value={} distance={} converged={} iterations={} marginal_err={:e} guard_hits={}",
        out.value, out.distance, out.converged, out.state.iter, out.state.marginal_err, out.guard_hits
    );

    let mut m = run.manifest("sinkhorn");
    record_solver(&mut m, mu.grid(), &a.solver);
    m.set("log_every", a.log_every);
    m.set("value", out.value);
    m.set("distance", out.distance);
    m.set("converged", out.converged);
    m.set("iterations", out.state.iter);
    m.set("marginal_err", out.state.marginal_err);
    m.set("guard_hits", out.guard_hits);
    run.finish(m, &a.report)?;
    not_converged("sinkhorn", out.converged)
}

pub fn interpolate_cmd(run: &Run, a: &InterpolateArgs) -> Outcome {
    let mu = load_measure(&a.mu)?;
    let nu = load_measure(&a.nu)?;
    same_grid(&mu, &nu, &a.nu)?;
    let k = kernel(mu.grid(), &a.solver)?;
    let out = interpolate(&mu, &nu, a.t, &sinkhorn_config(&a.solver)?, &k)?;
    save_measure(&a.out, &out.measure)?;

    let mut m = run.manifest("interpolate");
    record_solver(&mut m, mu.grid(), &a.solver);
    m.set("t", a.t);
    m.set("converged", out.converged);
    m.set("iterations", out.iters);
    m.set("change", out.change);
    m.set("guard_hits", out.guard_hits);
    run.finish(m, &a.out)?;
    not_converged("interpolation", out.converged)
}

pub fn barycenter_cmd(run: &Run, a: &BarycenterArgs) -> Outcome {
    if a.inputs.len() != a.lambdas.len() {
        return Err(Failure::usage(format!(
            "{} inputs but {} weights; pass one --lambda per --input",
            a.inputs.len(),
            a.lambdas.len()
        )));
    }
    let inputs = a.inputs.iter().map(|p| load_measure(p)).collect::<Result<Vec<_>, _>>()?;
    for (mu, p) in inputs.iter().zip(&a.inputs).skip(1) {
        same_grid(&inputs[0], mu, p)?;
    }
    let k = kernel(inputs[0].grid(), &a.solver)?;
    let cfg = BarycenterConfig::new(a.lambdas.clone(), sinkhorn_config(&a.solver)?);
    let out = barycenter(&inputs, &cfg, &k)?;
    save_measure(&a.out, &out.measure)?;

    let mut m = run.manifest("barycenter");
    record_solver(&mut m, inputs[0].grid(), &a.solver);
    m.set("lambdas", a.lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "));
    m.set("converged", out.converged);
    m.set("iterations", out.iters);
    m.set("change", out.change);
    m.set("guard_hits", out.guard_hits);
    run.finish(m, &a.out)?;
    not_converged("barycenter", out.converged)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn gradient_flow(run: &Run, a: &GradientFlowArgs) -> Outcome {
    let mut mu = load_measure(&a.init)?;
    let k = kernel(mu.grid(), &a.solver)?;
    let mut cfg = GradientFlowConfig::new(a.m, a.tau, sinkhorn_config(&a.solver)?);
    cfg.steps = a.steps;
    cfg.validate()?;

    let mut m = run.manifest("gradient-flow");
    record_solver(&mut m, mu.grid(), &a.solver);
    m.set("m", a.m);
    m.set("tau", a.tau);
    m.set("steps", a.steps);
    m.set("newton_tol", cfg.newton_tol);
    m.set("newton_max", cfg.newton_max);

    let write_step = |k: usize, mu: &GridMeasure| -> Outcome {
        save_measure(&with_suffix(&a.out_prefix, &format!("_{k}.se2f")), mu)?;
        let pgm = with_suffix(&a.out_prefix, &format!("_{k}.pgm"));
        write_pgm(&pgm, &project_score(mu), PgmEncoding::Binary).map_err(at(&pgm))
    };
    write_step(0, &mu)?;
    m.set("energy_0", porous_energy(&mu, a.m));
    let mut converged = true;
    for step in 1..=a.steps {
        let out = jko_step(&mu, &cfg, &k)?;
        converged &= out.converged;
        m.set(&format!("step_{step}"), format!(
            "energy={} mass_drift={:e} iterations={} converged={} marginal_err={:e} prox_residual={:e} prox_fallbacks={} guard_hits={}",
            porous_energy(&out.measure, a.m),
            out.mass_drift,
            out.iters,
            out.converged,
            out.marginal_err,
            out.prox.max_residual,
            out.prox.fallbacks,
            out.guard_hits
        ));
        mu = out.measure;
        write_step(step, &mu)?;
    }
    m.set("converged", converged);
    run.finish(m, &a.out_prefix)?;
    not_converged("at least one JKO step", converged)
}

fn wavelet_bank(w: &WaveletArgs, width: usize, height: usize) -> Result<CakeWaveletBank, Failure> {
    let size = w.size.unwrap_or_else(|| {
        let s = width.min(height).min(33);
        if s % 2 == 0 {
            s - 1
        } else {
            s
        }
    });
    Ok(build_cake_wavelets(w.ntheta, size, w.spline_order, w.radial_cut)?)
}

fn record_wavelets(m: &mut Manifest, w: &WaveletArgs, bank: &CakeWaveletBank) {
    m.set("wavelet_ntheta", w.ntheta);
    m.set("spline_order", w.spline_order);
    m.set("radial_cut", w.radial_cut);
    m.set("wavelet_size", bank.size());
}

fn zero_field(grid: Se2Grid) -> Result<Se2Field, Failure> {
    Ok(Se2Field::new(grid, vec![0.0; grid.len()])?)
}

pub fn lift(run: &Run, a: &LiftArgs) -> Outcome {
    let img = read_pgm(&a.image).map_err(at(&a.image))?;
    let grid = Se2Grid::pixels(img.width(), img.height(), a.wavelets.ntheta)?;
    let bank = wavelet_bank(&a.wavelets, img.width(), img.height())?;
    let pair = lift_image(&img, &bank, &grid)?;
    for (part, path, name) in [(&pair.pos, &a.out_pos, "positive"), (&pair.neg, &a.out_neg, "negative")] {
        let field = match part {
            Some(mu) => Se2Field::new(grid, mu.density().to_vec())?,
            None => {
                warn(format!("{name} score component is empty; wrote an all-zero field"));
                zero_field(grid)?
            }
        };
        write_se2f(path, &field).map_err(at(path))?;
    }
    let masses = format!("mass_pos={}\nmass_neg={}\n", pair.mass_pos, pair.mass_neg);
    fs::write(&a.masses, masses).map_err(|e| Failure::io(&a.masses, e))?;

    let mut m = run.manifest("lift");
    record_grid(&mut m, &grid);
    record_wavelets(&mut m, &a.wavelets, &bank);
    m.set("mass_pos", pair.mass_pos);
    m.set("mass_neg", pair.mass_neg);
    m.set("partition_residual", bank.partition_residual());
    run.finish(m, &a.out_pos)
}

fn read_masses(path: &Path) -> Result<(f64, f64), Failure> {
    let m = Manifest::read(path)?;
    let get = |key: &str| -> Result<f64, Failure> {
        m.values(key)
            .next()
            .ok_or_else(|| Failure::Io(format!("{}: missing {key}", path.display())))?
            .parse()
            .map_err(|e| Failure::Io(format!("{}: {key}: {e}", path.display())))
    };
    Ok((get("mass_pos")?, get("mass_neg")?))
}

fn optional_component(path: &Path, name: &str) -> Result<Option<GridMeasure>, Failure> {
    let f = read_se2f(path).map_err(at(path))?;
    match GridMeasure::new(f.grid, f.values) {
        Ok(mu) => Ok(Some(mu)),
        Err(Error::ZeroMass) => {
            warn(format!("{name} component {} is empty; projecting without it", path.display()));
            Ok(None)
        }
        Err(e) => Err(at(path)(e)),
    }
}

pub fn project(run: &Run, a: &ProjectArgs) -> Outcome {
    let pos = optional_component(&a.pos, "positive")?;
    let neg = optional_component(&a.neg, "negative")?;
    if let (Some(p), Some(n)) = (&pos, &neg) {
        same_grid(p, n, &a.neg)?;
    }
    let (mass_pos, mass_neg) = read_masses(&a.masses)?;
    let pair = SignedScorePair {
        pos,
        neg,
        mass_pos,
        mass_neg,
    };
    let img = project_signed(&pair, mass_pos, mass_neg)?;
    write_pgm(&a.out, &img, encoding(a.ascii)).map_err(at(&a.out))?;

    let mut m = run.manifest("project");
    m.set("mass_pos", mass_pos);
    m.set("mass_neg", mass_neg);
    run.finish(m, &a.out)
}

pub fn lift_field(run: &Run, a: &LiftFieldArgs) -> Outcome {
    let grid = grid(&a.grid)?;
    let field = read_field_csv(&a.field).map_err(at(&a.field))?;
    let mu = lift_orientation_field(&field, &grid)?;
    save_measure(&a.out, &mu)?;

    let mut m = run.manifest("lift-field");
    record_grid(&mut m, &grid);
    m.set("records", field.len());
    run.finish(m, &a.out)
}

pub fn project_field(run: &Run, a: &ProjectFieldArgs) -> Outcome {
    let mu = load_measure(&a.input)?;
    let field = reconstruct_orientation_field(&mu, a.threshold);
    write_field_csv(&a.out, &field).map_err(at(&a.out))?;

    let mut m = run.manifest("project-field");
    record_grid(&mut m, mu.grid());
    m.set("threshold", a.threshold);
    m.set("records", field.len());
    run.finish(m, &a.out)
}

pub fn interpolate_image(run: &Run, a: &InterpolateImageArgs) -> Outcome {
    let ia = read_pgm(&a.image_a).map_err(at(&a.image_a))?;
    let ib = read_pgm(&a.image_b).map_err(at(&a.image_b))?;
    if (ia.width(), ia.height()) != (ib.width(), ib.height()) {
        return Err(Failure::usage(format!(
            "images differ in size: {}×{} vs {}×{}",
            ia.width(),
            ia.height(),
            ib.width(),
            ib.height()
        )));
    }
    let grid = Se2Grid::pixels(ia.width(), ia.height(), a.wavelets.ntheta)?;
    let bank = wavelet_bank(&a.wavelets, ia.width(), ia.height())?;
    let k = kernel(&grid, &a.solver)?;
    let out = interpolate_images(&ia, &ib, a.t, &bank, &grid, &k, &sinkhorn_config(&a.solver)?)?;
    write_pgm(&a.out, &out.image, encoding(a.ascii)).map_err(at(&a.out))?;

    let mut m = run.manifest("interpolate-image");
    record_solver(&mut m, &grid, &a.solver);
    record_wavelets(&mut m, &a.wavelets, &bank);
    m.set("t", a.t);
    m.set("mass_pos", out.scores.mass_pos);
    m.set("mass_neg", out.scores.mass_neg);
    m.set("iterations_pos", out.iters[0]);
    m.set("iterations_neg", out.iters[1]);
    m.set("converged", out.converged);
    run.finish(m, &a.out)?;
    not_converged("image interpolation", out.converged)
}

pub fn counterexample(a: &CounterexampleArgs) -> Outcome {
    let (translation, optimal) = so2_counterexample(a.epsilon_angle, a.p)?;
    println!("translation_cost={translation} optimal_cost={optimal}");
    Ok(())
}

/// Re-reads the arguments of a recorded run.
pub fn replay_args(a: &ReplayArgs) -> Result<Vec<String>, Failure> {
    let m = Manifest::read(&a.manifest)?;
    let args = m.args();
    if args.is_empty() {
        return Err(Failure::Io(format!("{}: manifest records no arguments", a.manifest.display())));
    }
    if args.first().map(String::as_str) == Some("replay") {
        return Err(Failure::usage("a manifest cannot record a replay"));
    }
    Ok(args)
}
