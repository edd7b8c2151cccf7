use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::json;
use westervelt::cascade::{h_bound_holds, h_sequence, mode_residuals, run_cascade, TruncationReason};
use westervelt::error::Error;
use westervelt::estimates::{
    cascades_for, mu_asymptotics_sweep, run_decay_sweep, run_lemma1_sweep, run_lemma2_sweep, run_stability_sweep, Quantity,
    SweepReport,
};
use westervelt::helmholtz::solve_fundamental;
use westervelt::inverse::{
    distinguishability_test, liouville_check, potential_deviation, recover_alpha, recover_mu, AlphaOptions, MuProblem, MuStage,
    PixelBasis, ReconstructionResult, RtDDataset, SynthesisOptions,
};
use westervelt::time_oracle::{extract_harmonics, timestep_to_periodic};
use westervelt::{norms, ComplexField, Grid};

use crate::config::Sweep;
use crate::{write_json, Command, Context, Failure};

pub const ORACLE_U1_TOL: f64 = 1e-2;
pub const ORACLE_U2_TOL: f64 = 5e-2;
/// Accepted band for the ratio of asymptotic deviations across one ω-doubling.
pub const HALVING_BAND: [f64; 2] = [0.4, 0.6];

pub fn dispatch(ctx: &Context, command: &Command) -> Result<(), Failure> {
    match command {
        Command::Forward => forward(ctx),
        Command::OracleCompare => oracle_compare(ctx),
        Command::Bounds => bounds(ctx),
        Command::Hseq { count } => hseq(ctx, *count),
        Command::MakeData => make_data(ctx),
        Command::InvertAlpha { dataset, mu_result, known_mu } => invert_alpha(ctx, dataset, mu_result.as_deref(), *known_mu),
        Command::InvertMu { dataset } => invert_mu(ctx, dataset),
        Command::LiouvilleCheck => liouville(ctx),
        Command::Distinguish => distinguish(ctx),
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::write(dir.join(name), text).map_err(Error::from)?;
    Ok(())
}

fn forward(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium, source) = (cfg.grid()?, cfg.medium()?, cfg.source()?);
    let (stack, diag) = run_cascade(&grid, &medium, &source, cfg.cascade.k_max, cfg.cascade.tol)?;
    let residuals = mode_residuals(&grid, &medium, &stack)?;
    if cfg.output.csv() {
        stack.write_to_dir(&grid, &diag, &ctx.out.join("stack"))?;
    }
    write_json(
        &ctx.out,
        "diagnostics.json",
        &json!({
            "omega": stack.omega,
            "K": stack.k(),
            "truncation_reason": stack.truncation_reason,
            "norms": stack.norms,
            "diagnostics": diag,
        }),
    )?;
    let mut table = String::from("k,relative_residual\n");
    for (k, r) in residuals.iter().enumerate() {
        writeln!(table, "{},{r:.16e}", k + 1).unwrap();
    }
    write_text(&ctx.out, "mode_residuals.csv", &table)?;
    println!(
        "forward: omega {} K {} r {:.4} max residual {:.2e} ({:?})",
        stack.omega,
        stack.k(),
        diag.empirical_r,
        residuals.iter().copied().fold(0.0, f64::max),
        stack.truncation_reason
    );
    if stack.truncation_reason == TruncationReason::DivergenceDetected {
        return Err(Failure::Divergence(format!("cascade diverged (empirical r = {:.3})", diag.empirical_r)));
    }
    Ok(())
}

/// `‖a − b‖ / ‖b‖`, or relative to `fallback` when `b` vanishes.
fn relative_difference(grid: &Grid, a: &ComplexField, b: &ComplexField, fallback: f64) -> f64 {
    let d = norms::l2(grid, &(a - b));
    let s = norms::l2(grid, b);
    if s > 0.0 {
        d / s
    } else if fallback > 0.0 {
        d / fallback
    } else {
        d
    }
}

fn oracle_compare(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium, source) = (cfg.grid()?, cfg.medium()?, cfg.source()?);
    let (stack, _) = run_cascade(&grid, &medium, &source, cfg.cascade.k_max, cfg.cascade.tol)?;
    let (buffer, report) = timestep_to_periodic(&grid, &medium, &source, &cfg.oracle)?;
    let hats = extract_harmonics(&buffer, source.omega, 2)?;
    let n1 = stack.norms[1].l2;
    let d1 = relative_difference(&grid, &hats[1], &stack.harmonics[1], n1);
    let d2 = relative_difference(&grid, &hats[2], &stack.harmonics[2], n1);
    let passed = d1 <= ORACLE_U1_TOL && d2 <= ORACLE_U2_TOL;
    if cfg.output.csv() {
        let dir = ctx.out.join("oracle_harmonics");
        std::fs::create_dir_all(&dir).map_err(Error::from)?;
        for (k, u) in hats.iter().enumerate() {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("u_hat_{k}.csv"))).map_err(Error::from)?);
            u.write_csv(&grid, &mut w)?;
        }
    }
    write_json(
        &ctx.out,
        "oracle_compare.json",
        &json!({
            "u0_hat_max_abs": hats[0].max_abs(),
            "u1_difference": d1,
            "u2_difference": d2,
            "u1_tolerance": ORACLE_U1_TOL,
            "u2_tolerance": ORACLE_U2_TOL,
            "convergence": report,
            "passed": passed,
        }),
    )?;
    println!("oracle-compare: u1 {d1:.3e} u2 {d2:.3e} periods {} periodic {}", report.periods_run, report.periodic);
    if !passed {
        return Err(Failure::Tolerance(format!(
            "oracle differences u1 {d1:.3e} (tol {ORACLE_U1_TOL:e}), u2 {d2:.3e} (tol {ORACLE_U2_TOL:e})"
        )));
    }
    Ok(())
}

fn bounds(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let b = &cfg.bounds;
    let mut reports: Vec<(&str, SweepReport)> = Vec::new();
    if b.sweeps.contains(&Sweep::Lemma1) {
        reports.push(("lemma1", run_lemma1_sweep(&cfg.sweep_spec(b.lemma1_resolution, Quantity::LEMMA1.to_vec()))?));
    }
    if b.sweeps.contains(&Sweep::Lemma2) {
        let spec = cfg.sweep_spec(b.lemma2_resolution, Quantity::LEMMA2.to_vec());
        reports.push(("lemma2", run_lemma2_sweep(&spec, &b.interior_source)?));
    }
    let want_stab = b.sweeps.contains(&Sweep::Stability);
    let want_decay = b.sweeps.contains(&Sweep::Decay);
    if want_stab || want_decay {
        let mut qs = Quantity::STABILITY.to_vec();
        qs.push(Quantity::Decay);
        let spec = cfg.sweep_spec(b.stability_resolution, qs);
        let cascades = cascades_for(&spec)?;
        if want_stab {
            reports.push(("stability", run_stability_sweep(&spec, &cascades)?));
        }
        if want_decay {
            reports.push(("decay", run_decay_sweep(&spec, &cascades)));
        }
    }
    let mut summary = serde_json::Map::new();
    for (name, rep) in &reports {
        rep.write_to_dir(&ctx.out.join(name))?;
        for a in &rep.assertions {
            let tag = match (a.passed, a.enforced) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "fail (informational)",
            };
            println!("{name}: {} = {:.4} in [{}, {}] {tag}", a.name, a.value, a.lower, a.upper);
        }
        summary.insert((*name).into(), json!(rep.passed()));
    }
    let passed = reports.iter().all(|(_, r)| r.passed());
    summary.insert("passed".into(), json!(passed));
    write_json(&ctx.out, "bounds_summary.json", &summary)?;
    if ctx.strict && !passed {
        return Err(Failure::Tolerance("enforced sweep assertions failed".into()));
    }
    Ok(())
}

fn hseq(ctx: &Context, count: usize) -> Result<(), Failure> {
    if count == 0 {
        return Err(Failure::Input("hseq needs a positive count".into()));
    }
    let mut table = String::from("k,h_k,bound,margin,holds\n");
    let mut all = true;
    for (i, hk) in h_sequence(count).iter().enumerate() {
        let k = i + 1;
        let bound = BigUint::from(5u32).pow(i as u32);
        // bound / (k² h_k); both sides are exact integers
        let margin = bound.to_f64().unwrap_or(f64::INFINITY) / ((k * k) as f64 * hk.to_f64().unwrap_or(f64::INFINITY));
        let holds = h_bound_holds(k, hk);
        all &= holds;
        let bound_f = bound.to_f64().unwrap_or(f64::INFINITY) / (k * k) as f64;
        println!("h_{k:<2} = {hk:<20} bound {bound_f:.6e} margin {margin:.4e} {}", if holds { "ok" } else { "VIOLATED" });
        writeln!(table, "{k},{hk},{bound_f:.16e},{margin:.16e},{holds}").unwrap();
    }
    write_text(&ctx.out, "hseq.csv", &table)?;
    if !all {
        return Err(Failure::Tolerance("h-sequence bound violated".into()));
    }
    Ok(())
}

fn make_data(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium) = (cfg.grid()?, cfg.medium()?);
    let opts = SynthesisOptions {
        noise_level: cfg.inverse.noise_level,
        seed: cfg.inverse.seed,
        k_max: cfg.cascade.k_max,
        tol: cfg.cascade.tol,
        medium_tag: format!("config:{}", &ctx.config_hash[..16]),
    };
    let data = westervelt::inverse::synthesize_rtd(&grid, &medium, &cfg.sources(&grid), cfg.excitation.omega, &opts)?;
    data.save(&ctx.out.join("dataset.json"))?;
    println!("make-data: {} records at omega {} (noise {})", data.records.len(), data.omega, data.noise_level);
    Ok(())
}

fn load_dataset(grid: &Grid, path: &Path) -> Result<RtDDataset, Failure> {
    let data = RtDDataset::load(path).map_err(|e| Failure::Input(format!("dataset {}: {e}", path.display())))?;
    data.check(grid)?;
    Ok(data)
}

fn invert_mu(ctx: &Context, dataset: &Path) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium) = (cfg.grid()?, cfg.medium()?);
    let data = load_dataset(&grid, dataset)?;
    let inv = &cfg.inverse;
    let basis = PixelBasis::new(&grid, inv.mu_px, inv.mu_py)?;
    let problem = MuProblem::new(&grid, &data, medium.lambda.clone(), medium.eta.clone(), &basis)?;
    let [b0, g0] = inv.mu_initial.unwrap_or_else(|| {
        let [x, y] = grid.origin;
        [cfg.medium.beta.eval(x, y), cfg.medium.gamma.eval(x, y)]
    });
    let p = basis.cells();
    let theta0: Vec<f64> = std::iter::repeat(b0).take(p).chain(std::iter::repeat(g0).take(p)).collect();
    let result = recover_mu(&problem, &theta0, &inv.mu_options, Some((&medium.beta, &medium.gamma)))?;
    result.write_to_dir(&grid, &ctx.out.join("mu"))?;
    println!(
        "invert-mu: {} iterations, misfit {:.3e}, relative error {}",
        result.iterations,
        result.misfit_history.last().copied().unwrap_or(f64::NAN),
        fmt_opt(result.relative_error)
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4e}"))
}

fn invert_alpha(ctx: &Context, dataset: &Path, mu_result: Option<&Path>, known_mu: bool) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium) = (cfg.grid()?, cfg.medium()?);
    let stage = match (mu_result, known_mu) {
        (_, true) => MuStage::provided(&grid, &medium)?,
        (Some(dir), false) => {
            let r = ReconstructionResult::read_from_dir(&grid, dir, &["beta", "gamma"])
                .map_err(|e| Failure::Input(format!("μ result {}: {e}", dir.display())))?;
            MuStage::from_result(&grid, &r, medium.lambda.clone(), medium.eta.clone())?
        }
        (None, false) => {
            return Err(Failure::PipelineOrder(
                "α inversion needs (β, γ): pass --known-mu or --mu-result DIR from invert-mu".into(),
            ))
        }
    };
    let data = load_dataset(&grid, dataset)?;
    let inv = &cfg.inverse;
    let basis = PixelBasis::new(&grid, inv.px, inv.py)?;
    let opts = AlphaOptions { reg_weight: inv.reg_weight, truth: Some(medium.alpha.clone()) };
    let result = recover_alpha(&grid, &data, &stage, &cfg.probes(&grid), &basis, &opts)?;
    result.write_to_dir(&grid, &ctx.out.join("alpha"))?;
    let below = result.max_abs <= inv.zero_threshold;
    write_json(
        &ctx.out,
        "alpha_summary.json",
        &json!({
            "mu_stage": if stage.is_recovered() { "recovered" } else { "provided" },
            "max_abs": result.max_abs,
            "zero_threshold": inv.zero_threshold,
            "below_zero_threshold": below,
            "relative_error": result.relative_error,
            "reg_weight": result.reg_weight,
        }),
    )?;
    println!(
        "invert-alpha: max |alpha| {:.3e}{}, relative error {}",
        result.max_abs,
        if below { " (below zero threshold)" } else { "" },
        fmt_opt(result.relative_error)
    );
    Ok(())
}

fn liouville(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium, source) = (cfg.grid()?, cfg.medium()?, cfg.source()?);
    let (u1, _) = solve_fundamental(&grid, &medium, &source)?;
    let report = liouville_check(&grid, &medium, source.omega, &u1)?;
    let omegas = &cfg.bounds.omega_values;
    let potential: Vec<f64> = omegas.iter().map(|&w| potential_deviation(&grid, &medium, w)).collect::<Result<_, _>>()?;
    let (rows, mu_ratios) = mu_asymptotics_sweep(&medium, omegas);
    let p_ratios: Vec<f64> = potential.windows(2).map(|p| p[1] / p[0]).collect();
    let in_band = |r: &f64| *r >= HALVING_BAND[0] && *r <= HALVING_BAND[1];
    let doubling = omegas.windows(2).all(|w| (w[1] - 2.0 * w[0]).abs() <= 1e-12 * w[1]);
    let ratios_ok = !doubling || (p_ratios.iter().all(in_band) && mu_ratios.iter().flatten().all(in_band));
    write_json(
        &ctx.out,
        "liouville.json",
        &json!({
            "liouville": report,
            "omegas": omegas,
            "potential_deviation": potential,
            "potential_ratios": p_ratios,
            "mu_asymptotics": rows,
            "mu_ratios": mu_ratios,
            "ratios_checked": doubling,
            "ratios_in_band": ratios_ok,
        }),
    )?;
    println!(
        "liouville-check: residual {:.3e} (bound {:.3e}), potential ratios {:?}",
        report.relative_residual, report.bound, p_ratios
    );
    if !report.passed || !ratios_ok {
        return Err(Failure::Tolerance("Liouville residual or asymptotic ratios out of tolerance".into()));
    }
    Ok(())
}

fn distinguish(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (grid, medium, tilde) = (cfg.grid()?, cfg.medium()?, cfg.medium_tilde()?);
    let report = distinguishability_test(&grid, &medium, &tilde, &cfg.sources(&grid), cfg.excitation.omega)?;
    write_json(&ctx.out, "distinguish.json", &report)?;
    println!(
        "distinguish: trace1 difference {:.3e}, trace2 difference {:.3e}",
        report.trace1_difference, report.trace2_difference
    );
    Ok(())
}
