use anyhow::{anyhow, bail, Context, Result};

use dspstab::fit::log_spaced;
use dspstab::green::{decomposition_residual, derivative_decay, eigenvector_v, green_column, leading_coefficient, EigenV};
use dspstab::linop::{
    check_dissipativity, check_hyp_inv, count_unit_roots, extract_diffusion, limit_symbol, linearize, spectral_probe, Side,
    SymbolData,
};
use dspstab::profile::{delta_grid, family_lipschitz_check, localization_rates, mass_function, ProfileFamily, SolveOptions};
use dspstab::scheme::{burgers, check_cfl, check_consistency, make_mlf, shock_pair, SchemeSpec, ShockPair, DEFAULT_SAMPLES};
use dspstab::stability::bounds::{check_inq_bounds_seeded, duhamel_check, insum_bound_check};
use dspstab::stability::{default_reg_window, preset, run_experiment, ExperimentConfig, Verdict};
use dspstab::svg::{loglog_plot, reference_line, Series};
use dspstab::{mass, TailedSeq};

use crate::config::RunConfig;
use crate::output::{num, render_table, OutDir};

/// Result of a command: whether every verdict passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub pass: bool,
}

pub struct Setup {
    pub scheme: SchemeSpec,
    pub shock: ShockPair,
    pub family: ProfileFamily,
}

pub fn build_scheme(cfg: &RunConfig) -> Result<SchemeSpec> {
    let s = &cfg.scheme;
    let (f, fp) = match s.flux.as_str() {
        "burgers" => burgers(),
        other => bail!("unsupported flux `{other}`"),
    };
    make_mlf(s.nu, s.d, f, fp, s.state_lo, s.state_hi).context("building the scheme")
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    let scheme = build_scheme(cfg)?;
    let shock = shock_pair(&scheme, cfg.shock.u_minus, cfg.shock.u_plus).context("shock states")?;
    let opts = SolveOptions {
        tol: cfg.profile.tol,
        half_width: cfg.profile.half_width,
        ..SolveOptions::default()
    };
    let grid = delta_grid(cfg.profile.delta_lo, cfg.profile.delta_hi, cfg.profile.delta_n);
    let family = ProfileFamily::solve(&scheme, &shock, &grid, &opts).context("solving the profile family")?;
    Ok(Setup { scheme, shock, family })
}

struct Check {
    name: String,
    value: String,
    threshold: String,
    pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: impl Into<String>, threshold: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            threshold: threshold.into(),
            pass,
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn emit_checks(out: &OutDir, file: &str, checks: &[Check]) -> Result<Outcome> {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), c.value.clone(), c.threshold.clone(), verdict(c.pass).to_string()])
        .collect();
    let header = ["check", "value", "threshold", "verdict"];
    print!("{}", render_table(&header, &rows));
    if out.csv {
        let mut w = out.csv_writer(file)?;
        w.write_record(header)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(Outcome {
        pass: checks.iter().all(|c| c.pass),
    })
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn symbols(st: &Setup) -> Result<(SymbolData, SymbolData)> {
    let sm = limit_symbol(&st.scheme, st.shock.u_minus, Side::Left)?;
    let sp = limit_symbol(&st.scheme, st.shock.u_plus, Side::Right)?;
    Ok((sm, sp))
}

pub fn hypotheses(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let st = setup(cfg)?;
    let s = &st.scheme;
    let mut checks = Vec::new();
    let cons = check_consistency(s, DEFAULT_SAMPLES);
    checks.push(Check::new("consistency", num(cons.max_residual), "<= 1e-12", cons.pass));
    let cfl = check_cfl(s, DEFAULT_SAMPLES);
    checks.push(Check::new("cfl", format!("[{}, {}]", num(cfl.min_speed), num(cfl.max_speed)), "in [0, 1]", cfl.pass));
    checks.push(Check::new("rankine_hugoniot", num(st.shock.rh_residual), "<= 1e-12", st.shock.rh_residual.abs() <= 1e-12));
    checks.push(Check::new("lax", st.shock.lax_ok.to_string(), "f'(u+) < 0 < f'(u-)", st.shock.lax_ok));
    let (sm, sp) = symbols(&st)?;
    for sym in [&sm, &sp] {
        let side = side_name(sym.side);
        let d = check_dissipativity(sym, 4096);
        checks.push(Check::new(format!("dissipativity_{side}"), num(d.max_modulus), "< 1 off xi = 0", d.pass));
        let alpha_gap = (sym.alpha - sym.alpha_from_symbol).abs();
        checks.push(Check::new(format!("drift_{side}"), num(sym.alpha), "|alpha + F'(1)| <= 1e-8", alpha_gap <= 1e-8));
        match extract_diffusion(sym) {
            Ok(dif) => checks.push(Check::new(
                format!("diffusion_{side}"),
                format!("mu={} beta={:.10}{:+.1e}i", dif.mu, dif.beta.re, dif.beta.im),
                "Re beta > 0",
                dif.beta.re > 0.0,
            )),
            Err(e) => checks.push(Check::new(format!("diffusion_{side}"), e.to_string(), "Re beta > 0", false)),
        }
        match count_unit_roots(sym) {
            Ok(r) => checks.push(Check::new(
                format!("unit_roots_{side}"),
                format!("{} roots, distinct={}, one={}", r.roots.len(), r.distinct, r.contains_one),
                "distinct, includes 1",
                r.pass,
            )),
            Err(e) => checks.push(Check::new(format!("unit_roots_{side}"), e.to_string(), "distinct, includes 1", false)),
        }
    }
    let op = linearize(s, st.family.reference())?;
    let inv = check_hyp_inv(&op, &sm, &sp);
    checks.push(Check::new("band_edges", num(inv.min_abs), "> 1e-12", inv.pass));
    let loc = localization_rates(st.family.reference())?;
    checks.push(Check::new(
        "localization",
        format!("{}/{}", num(loc.left.rate), num(loc.right.rate)),
        "exponential on both sides",
        loc.ok(),
    ));
    let v = eigenvector_v(&op, &st.family, cfg.profile.half_width)?;
    checks.push(Check::new("eigenvector_residual", num(v.eig_residual), "<= 1e-10", v.eig_residual <= 1e-10));
    checks.push(Check::new("eigenvector_agreement", num(v.cosine), "> 1 - 1e-6", v.cosine > 1.0 - 1e-6));
    let probe = spectral_probe(&op, Some(&v.seq), cfg.profile.half_width, 2000)?;
    checks.push(Check::new("spectral_probe", num(probe.estimate), "< 1", probe.estimate < 1.0));
    emit_checks(out, "hypotheses.csv", &checks)
}

pub fn profile(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let st = setup(cfg)?;
    let fam = &st.family;
    if out.csv {
        out.write_text("profile.csv", &fam.reference().seq.to_csv())?;
        let mut w = out.csv_writer("family.csv")?;
        w.write_record(["delta", "mass", "residual", "iterations"])?;
        for m in fam.members() {
            let mass = mass_function(fam, m.delta, false)?;
            w.write_record([num(m.delta), num(mass), num(m.residual), m.iterations.to_string()])?;
        }
        w.flush()?;
    }
    let mut checks = Vec::new();
    let worst = fam.members().iter().map(|m| m.residual).fold(0.0, f64::max);
    checks.push(Check::new("max_residual", num(worst), "<= 1e-8", worst <= 1e-8));
    let masses = fam
        .members()
        .iter()
        .map(|m| mass_function(fam, m.delta, false))
        .collect::<dspstab::Result<Vec<_>>>()?;
    let increasing = masses.windows(2).all(|w| w[1] > w[0]);
    checks.push(Check::new("mass_monotone", increasing.to_string(), "strictly increasing", increasing));
    let dev = fam
        .members()
        .iter()
        .zip(&masses)
        .map(|(m, x)| (x - m.delta).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new("mass_vs_delta", num(dev), "informational", true));
    let loc = localization_rates(fam.reference())?;
    checks.push(Check::new("rate_left", num(loc.left.rate), "exponential", loc.left.exponential));
    checks.push(Check::new("rate_right", num(loc.right.rate), "exponential", loc.right.exponential));
    let lip = family_lipschitz_check(fam)?;
    checks.push(Check::new(
        "lipschitz",
        format!("{}..{}", num(lip.min_ratio), num(lip.max_ratio)),
        "no anomalies",
        lip.pass,
    ));
    emit_checks(out, "profile_checks.csv", &checks)
}

#[derive(Debug, Clone, Default)]
pub struct GreenArgs {
    pub n: Option<usize>,
    pub j0: Option<i64>,
    pub decompose: bool,
    pub csv: Option<String>,
}

fn leading_term(v: &EigenV, sm: &SymbolData, sp: &SymbolData, n: usize, j0: i64) -> Result<TailedSeq> {
    Ok(v.seq.scale(leading_coefficient(sm, sp, n, j0)?))
}

pub fn green(cfg: &RunConfig, args: &GreenArgs, out: &OutDir) -> Result<Outcome> {
    let n = args.n.unwrap_or(cfg.green.n);
    let j0 = args.j0.unwrap_or(cfg.green.j0);
    let decompose = args.decompose || cfg.green.decompose;
    let st = setup(cfg)?;
    let op = linearize(&st.scheme, st.family.reference())?;
    let (sm, sp) = symbols(&st)?;
    let v = eigenvector_v(&op, &st.family, cfg.profile.half_width)?;
    let col = green_column(&op, n, j0);
    let lead = leading_term(&v, &sm, &sp, n, j0)?;
    let resid = col.seq.sub(&lead);
    let csv_name = args.csv.clone().unwrap_or_else(|| "green.csv".into());
    if out.csv || args.csv.is_some() {
        let mut w = out.csv_writer(&csv_name)?;
        w.write_record(["n", "j0", "j", "green", "leading_term", "residual"])?;
        let (lo, hi) = col.seq.window().unwrap_or((j0, j0));
        let (lo, hi) = match lead.window() {
            Some((a, b)) => (lo.min(a), hi.max(b)),
            None => (lo, hi),
        };
        for j in lo..=hi {
            w.write_record([
                n.to_string(),
                j0.to_string(),
                j.to_string(),
                num(col.seq.get(j)),
                num(lead.get(j)),
                num(resid.get(j)),
            ])?;
        }
        w.flush()?;
    }
    let mut checks = Vec::new();
    let m = mass(&col.seq)?;
    let tol = 1e-12 * (1.0 + n as f64);
    checks.push(Check::new("green_mass", num(m), format!("|m - 1| <= {tol:e}"), (m - 1.0).abs() <= tol));
    let (p, q) = (op.p() as i64, op.q() as i64);
    let support_ok = col.seq.window().is_none_or(|(lo, hi)| lo >= j0 - q * n as i64 && hi <= j0 + p * n as i64);
    checks.push(Check::new("green_support", format!("{:?}", col.seq.window()), "within [j0 - qn, j0 + pn]", support_ok));
    checks.push(Check::new("residual_sup", num(resid.sup_abs()), "informational", true));
    if decompose {
        let ns = log_spaced(100.min(n.max(4)), n.max(400), 16);
        let mu = sp.mu.unwrap_or(1);
        let target = 1.0 / (2.0 * mu as f64) - 0.1;
        let dec = decomposition_residual(&op, &v, &sm, &sp, &ns, j0)?;
        checks.push(Check::new("decomposition_exponent", num(dec.fit.exponent), format!(">= {target}"), dec.fit.exponent >= target));
        let der = derivative_decay(&op, j0, &ns)?;
        checks.push(Check::new("derivative_exponent", num(der.fit.exponent), format!(">= {target}"), der.fit.exponent >= target));
        if out.csv {
            let mut w = out.csv_writer("decomposition.csv")?;
            w.write_record(["n", "e_factor", "linf", "l1"])?;
            for r in &dec.rows {
                w.write_record([r.n.to_string(), num(r.e_factor), num(r.linf), num(r.l1)])?;
            }
            w.flush()?;
        }
    }
    emit_checks(out, "green_checks.csv", &checks)
}

fn mu_of(st: &Setup) -> Result<u32> {
    let (sm, sp) = symbols(st)?;
    let a = extract_diffusion(&sm)?;
    let b = extract_diffusion(&sp)?;
    if a.mu != b.mu {
        bail!("diffusion orders differ across the shock ({} vs {})", a.mu, b.mu);
    }
    Ok(a.mu)
}

pub fn experiment(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let st = setup(cfg)?;
    let mu = mu_of(&st)?;
    let dp = preset(e.choice, e.p, mu).with_context(|| format!("preset choice {} with p = {}", e.choice, e.p))?;
    if !dp.all_conditions() {
        let msg = format!("conditions C1..C4 = {} {} {} {}", dp.c1, dp.c2, dp.c3, dp.c4);
        if e.strict {
            bail!("{msg}");
        }
        eprintln!("warning: {msg}; continuing");
    }
    let (lo, hi) = default_reg_window(e.j_max, e.n_max);
    let mut ecfg = ExperimentConfig::new(e.j_max, e.n_max);
    ecfg.reg_window = (e.reg_lo.unwrap_or(lo), e.reg_hi.unwrap_or(hi));
    ecfg.require_conditions = e.strict;
    let r = run_experiment(&st.scheme, &st.family, &dp, &ecfg)?;
    if out.csv {
        let mut w = out.csv_writer("norms.csv")?;
        w.write_record(["n", "J", "l1_norm", "linf_norm"])?;
        for t in &r.trajectories {
            for (n, (a, b)) in t.norms.iter().enumerate() {
                w.write_record([n.to_string(), t.label.to_string(), num(*a), num(*b)])?;
            }
        }
        w.flush()?;
        let mut w = out.csv_writer("envelope.csv")?;
        w.write_record(["n", "log_env_l1", "log_env_linf"])?;
        for n in 0..=e.n_max {
            w.write_record([n.to_string(), num(r.envelope_l1[n]), num(r.envelope_linf[n])])?;
        }
        w.flush()?;
        let mut w = out.csv_writer("slopes.csv")?;
        w.write_record(["norm", "fitted", "target", "verdict"])?;
        for (name, s) in [("l1", &r.slope_l1), ("linf", &r.slope_linf)] {
            w.write_record([name.to_string(), s.fitted.map_or("nan".into(), num), num(s.target), s.verdict.as_str().into()])?;
        }
        w.flush()?;
    }
    if out.svg {
        for (name, env, s) in [("l1", &r.envelope_l1, &r.slope_l1), ("linf", &r.envelope_linf, &r.slope_linf)] {
            let pts: Vec<(f64, f64)> = env.iter().enumerate().skip(1).map(|(n, &y)| ((n as f64).ln(), y)).collect();
            let (a, b) = ecfg.reg_window;
            let (xa, xb) = ((a as f64).ln(), (b as f64).ln());
            let series = [
                Series {
                    label: "envelope".into(),
                    color: "#1f4e79".into(),
                    points: pts,
                    dashed: false,
                },
                reference_line(&format!("slope {}", s.target), xa, xb, env[a], s.target),
            ];
            let title = format!("{name} envelope, choice {} p = {}", e.choice, e.p);
            out.write_text(&format!("envelope_{name}.svg"), &loglog_plot(&title, "n", "log envelope", &series))?;
        }
    }
    let mut checks = Vec::new();
    for (name, s) in [("slope_l1", &r.slope_l1), ("slope_linf", &r.slope_linf)] {
        checks.push(Check::new(
            name,
            s.fitted.map_or("degenerate".into(), num),
            format!("<= {} + {}", num(s.target), s.slack),
            s.verdict == Verdict::Pass,
        ));
    }
    checks.push(Check::new("mass_drift", num(r.max_mass_drift), "<= 1e-10", r.max_mass_drift <= 1e-10));
    checks.push(Check::new("regression_window", format!("{:?}", ecfg.reg_window), "informational", true));
    emit_checks(out, "experiment_checks.csv", &checks)
}

/// Triplets satisfying (H) whose running sup settles within the checked range.
pub const INSUM_TRIPLETS: [(f64, f64, f64); 5] = [(2.0, 2.0, 2.0), (0.5, 1.0, 0.5), (1.0, 2.0, 1.0), (2.0, 1.5, 1.5), (0.3, 1.2, 0.5)];

pub fn bounds(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let b = &cfg.bounds;
    let e = &cfg.experiment;
    let st = setup(cfg)?;
    let mut checks = Vec::new();
    for (a, bb, c) in INSUM_TRIPLETS {
        let r = insum_bound_check(a, bb, c, b.insum_n_max)?;
        checks.push(Check::new(
            format!("insum({a},{bb},{c})"),
            format!("sup={} growth={}", num(r.sup), num(r.growth)),
            "growth < 1e-3",
            r.pass,
        ));
    }
    let mu = mu_of(&st)?;
    let dp = preset(e.choice, e.p, mu)?;
    let inq = check_inq_bounds_seeded(&st.scheme, st.family.reference(), dp.gamma1, dp.gamma_inf, b.trials, e.seed)?;
    checks.push(Check::new(
        "inq_ratios",
        format!("{}/{}", num(inq.max_ratio_l1), num(inq.max_ratio_linf)),
        "finite, settled under scaling",
        inq.pass,
    ));
    checks.push(Check::new("q_identity", num(inq.max_identity_residual), "<= 1e-12", inq.max_identity_residual <= 1e-12));
    let h = TailedSeq::from_sparse(&[(-1, 1e-3), (2, -1e-3), (4, 5e-4)]).map_err(|e| anyhow!(e))?;
    let hw = cfg.profile.half_width + 4 * b.n_check as i64;
    for delta in [0.0, b.duhamel_delta] {
        let r = duhamel_check(&st.scheme, &st.family, delta, &h, b.n_check, hw)?;
        checks.push(Check::new(format!("duhamel(delta={delta})"), num(r.residual), "<= 1e-10", r.residual <= 1e-10));
    }
    emit_checks(out, "bounds.csv", &checks)
}
