//! Browser bindings: a shock profile, a Green's function column and the
//! decay envelope, each returned as a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dspstab::green::{eigenvector_v, green_column, leading_coefficient};
use dspstab::linop::{limit_symbol, linearize, Side};
use dspstab::profile::{default_delta_grid, ProfileFamily, SolveOptions};
use dspstab::scheme::{burgers, make_mlf, shock_pair, SchemeSpec, ShockPair};
use dspstab::stability::{preset, run_experiment, ExperimentConfig};
use dspstab::{mass, TailedSeq};

const HALF_WIDTH: i64 = 60;
/// Keeps a single call responsive in the browser.
const N_MAX_CAP: usize = 4000;

fn scheme(nu: f64, d: f64) -> Result<(SchemeSpec, ShockPair), String> {
    let (f, fp) = burgers();
    let s = make_mlf(nu, d, f, fp, -1.5, 1.5).map_err(|e| e.to_string())?;
    let sh = shock_pair(&s, 1.0, -1.0).map_err(|e| e.to_string())?;
    Ok((s, sh))
}

fn family(nu: f64, d: f64) -> Result<(SchemeSpec, ProfileFamily), String> {
    let (s, sh) = scheme(nu, d)?;
    let fam = ProfileFamily::solve(&s, &sh, &default_delta_grid(), &SolveOptions::default()).map_err(|e| e.to_string())?;
    Ok((s, fam))
}

fn dense(seq: &TailedSeq, lo: i64, hi: i64) -> (Vec<i64>, Vec<f64>) {
    ((lo..=hi).collect(), seq.dense(lo, hi))
}

#[derive(Serialize)]
struct ProfileOut {
    j: Vec<i64>,
    u: Vec<f64>,
    delta: f64,
    mass: f64,
    residual: f64,
    iterations: usize,
}

pub fn profile_json(nu: f64, d: f64, delta: f64) -> Result<String, String> {
    let (_, fam) = family(nu, d)?;
    let pr = fam.member_or_solve(delta).map_err(|e| e.to_string())?;
    let m = mass(&pr.seq.sub(&fam.reference().seq)).map_err(|e| e.to_string())?;
    let (j, u) = dense(&pr.seq, -25, 25);
    serde_json::to_string(&ProfileOut {
        j,
        u,
        delta,
        mass: m,
        residual: pr.residual,
        iterations: pr.iterations,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct GreenOut {
    j: Vec<i64>,
    green: Vec<f64>,
    leading: Vec<f64>,
    mass: f64,
}

pub fn green_json(nu: f64, d: f64, j0: i32, n: u32) -> Result<String, String> {
    let n = (n as usize).min(N_MAX_CAP);
    let (s, fam) = family(nu, d)?;
    let op = linearize(&s, fam.reference()).map_err(|e| e.to_string())?;
    let v = eigenvector_v(&op, &fam, HALF_WIDTH).map_err(|e| e.to_string())?;
    let sm = limit_symbol(&s, 1.0, Side::Left).map_err(|e| e.to_string())?;
    let sp = limit_symbol(&s, -1.0, Side::Right).map_err(|e| e.to_string())?;
    let col = green_column(&op, n, j0 as i64);
    let c = leading_coefficient(&sm, &sp, n, j0 as i64).map_err(|e| e.to_string())?;
    let (lo, hi) = col.seq.window().unwrap_or((j0 as i64, j0 as i64));
    let (lo, hi) = (lo.max(-150), hi.min(150));
    let (j, green) = dense(&col.seq, lo, hi);
    let leading = v.seq.scale(c).dense(lo, hi);
    let m = mass(&col.seq).map_err(|e| e.to_string())?;
    serde_json::to_string(&GreenOut { j, green, leading, mass: m }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DecayOut {
    n: Vec<usize>,
    env_l1: Vec<Option<f64>>,
    env_linf: Vec<Option<f64>>,
    window: (usize, usize),
    slope_l1: Option<f64>,
    slope_linf: Option<f64>,
    target_l1: f64,
    target_linf: f64,
    verdict_l1: &'static str,
    verdict_linf: &'static str,
}

pub fn decay_json(choice: u32, p: f64, j_max: u32, n_max: u32) -> Result<String, String> {
    let (s, fam) = family(0.5, 0.8)?;
    let dp = preset(choice, p, 1).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::new((j_max as usize).clamp(1, 200), (n_max as usize).clamp(2, N_MAX_CAP));
    let r = run_experiment(&s, &fam, &dp, &cfg).map_err(|e| e.to_string())?;
    let finite = |v: &[f64]| v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    serde_json::to_string(&DecayOut {
        n: (0..=cfg.n_max).collect(),
        env_l1: finite(&r.envelope_l1),
        env_linf: finite(&r.envelope_linf),
        window: cfg.reg_window,
        slope_l1: r.slope_l1.fitted,
        slope_linf: r.slope_linf.fitted,
        target_l1: r.slope_l1.target,
        target_linf: r.slope_linf.target,
        verdict_l1: r.slope_l1.verdict.as_str(),
        verdict_linf: r.slope_linf.verdict.as_str(),
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn profile(nu: f64, d: f64, delta: f64) -> Result<String, JsValue> {
    profile_json(nu, d, delta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn green(nu: f64, d: f64, j0: i32, n: u32) -> Result<String, JsValue> {
    green_json(nu, d, j0, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decay(choice: u32, p: f64, j_max: u32, n_max: u32) -> Result<String, JsValue> {
    decay_json(choice, p, j_max, n_max).map_err(|e| JsValue::from_str(&e))
}
