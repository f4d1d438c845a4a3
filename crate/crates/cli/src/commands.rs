//! The six subcommands as library calls returning a report and an exit code.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use qinfra::forms::to_positive_rep;
use qinfra::oracle::{enumerate_cycle, order_and_s, principal_test_bruteforce};
use qinfra::qsim::{
    estimate_qubits, target_set_1d, target_set_2d, verify_probability_bounds_1d, verify_probability_bounds_2d,
    BoundReport, DualDistribution, DualParams1D, DualParams2D, PipDual, RegulatorDual, ResourceReport, Which,
    DENSE_2D_CAP,
};
use qinfra::recover::{pip_pipeline, regulator_pipeline, Kind, Path};
use qinfra::{Discriminant, Error, PositiveReducedForm, PrecisionBudget, RecoverConfig, ReducedForm, Result};
use rand::SeedableRng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig};
use crate::lemmas::{verify_lemmas, LemmaConfig};
use crate::report::{Exit, Outcome, Provenance};

const CYCLE_SOURCE: &str = "enumerate_cycle: exhaustive ρ walk of the principal cycle";

fn run(command: &'static str, cfg: &impl Serialize, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    f().unwrap_or_else(|e| Outcome::error(command, cfg, &e))
}

#[derive(Serialize)]
struct RegulatorOut {
    verdict: Kind,
    r_prime: Option<f64>,
    r_prime_exact: Option<Value>,
    path: Path,
    q: Option<u64>,
    attempts: u32,
    success_rate: Option<f64>,
    oracle: Option<Value>,
    diagnostics: Value,
}

pub fn cmd_regulator(cfg: &RunConfig) -> Outcome {
    run("regulator", cfg, || {
        let res = regulator_pipeline(&cfg.disc, &cfg.recover())?;
        let agrees = res.oracle.as_ref().map_or(true, |o| o.agrees);
        let exit = if res.kind == Kind::Regulator && agrees { Exit::Success } else { Exit::Fail };
        let mut prov = vec![Provenance::new(
            "r_prime",
            match res.path {
                Path::Classical => "regulator_pipeline: classical walk (R⁺ < 32 ln Δ)",
                Path::Quantum => "regulator_pipeline: simulated Regulator-Dual samples and continued fractions",
            },
        )];
        if res.oracle.is_some() {
            prov.push(Provenance::new("oracle", CYCLE_SOURCE));
        }
        let out = RegulatorOut {
            verdict: res.kind,
            r_prime: res.value.as_ref().map(|v| v.to_f64()),
            r_prime_exact: res.value.as_ref().map(|v| serde_json::to_value(v).unwrap()),
            path: res.path,
            q: res.q,
            attempts: res.attempts,
            success_rate: res.success_rate(),
            oracle: res.oracle.as_ref().map(|o| serde_json::to_value(o).unwrap()),
            diagnostics: serde_json::to_value(&res.diagnostics).unwrap(),
        };
        Ok(Outcome::new("regulator", cfg, exit, prov, out))
    })
}

fn parse_form(disc: &Discriminant, text: &str) -> Result<ReducedForm> {
    let text = text.trim();
    let full = if text.contains(':') { text.to_string() } else { format!("{disc}:{text}") };
    let f: ReducedForm = full.parse()?;
    if f.disc() != disc {
        return Err(Error::DiscriminantMismatch(f.disc().to_string(), disc.to_string()));
    }
    Ok(f)
}

pub fn cmd_pip(cfg: &RunConfig, form: &str) -> Outcome {
    run("pip", cfg, || {
        let g = parse_form(&cfg.disc, form)?;
        let rc = cfg.recover();
        // R⁺ first, by the same pipeline and seed
        let reg = regulator_pipeline(&cfg.disc, &RecoverConfig { oracle: false, ..rc.clone() })?;
        let Some(r_plus) = reg.value.clone().filter(|_| reg.kind == Kind::Regulator) else {
            let out = json!({"verdict": "fail", "stage": "regulator", "regulator": reg});
            return Ok(Outcome::new("pip", cfg, Exit::Fail, vec![], out));
        };
        let res = pip_pipeline(&g, &r_plus, &rc)?;
        let agrees = res.oracle.as_ref().map_or(true, |o| o.agrees);
        let exit = if res.kind != Kind::Fail && agrees { Exit::Success } else { Exit::Fail };
        let mut prov = vec![
            Provenance::new("r_plus", format!("regulator_pipeline ({:?} path)", reg.path).to_lowercase()),
            Provenance::new(
                "s_prime",
                match res.path {
                    Path::Classical => "pip_pipeline: classical lap of the principal cycle",
                    Path::Quantum => "pip_pipeline: simulated AlgPIP-Dual samples and extended gcd",
                },
            ),
        ];
        if res.oracle.is_some() {
            prov.push(Provenance::new("oracle", format!("{CYCLE_SOURCE}; principal_test_bruteforce")));
        }
        let out = json!({
            "form": to_positive_rep(&g).to_text(),
            "verdict": res.kind,
            "s_prime": res.value.as_ref().map(|v| v.to_f64()),
            "s_prime_exact": res.value,
            "r_plus": r_plus.to_f64(),
            "path": res.path,
            "q": res.q,
            "attempts": res.attempts,
            "success_rate": res.success_rate(),
            "oracle": res.oracle,
            "diagnostics": res.diagnostics,
        });
        Ok(Outcome::new("pip", cfg, exit, prov, out))
    })
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subroutine {
    Regulator,
    Pip,
}

/// Options of `simulate` beyond the run configuration.
#[derive(Clone, Debug, Default)]
pub struct SimulateOpts {
    /// Measured form for `pip`.
    pub form: Option<String>,
    /// Bound reports for at most this many measured forms in full mode.
    pub max_forms: usize,
    /// Also write the first measured form's distribution here.
    pub dist_path: Option<std::path::PathBuf>,
}

#[derive(Serialize)]
struct DistFile {
    dimension: u8,
    disc: String,
    q: u64,
    seed: u64,
    measured_form: String,
    p: u64,
    m_min: u64,
    m_max: u64,
    r_plus_source: &'static str,
    probabilities: BTreeMap<String, f64>,
}

fn dist_entries(d: &DualDistribution) -> BTreeMap<String, f64> {
    let n = d.modulus;
    d.iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(i, p)| (if d.dimension == 1 { i.to_string() } else { format!("{},{}", i / n, i % n) }, p))
        .collect()
}

fn write_dist(path: &std::path::Path, file: &DistFile) -> Result<()> {
    let s = serde_json::to_string(file).expect("distribution serializes");
    std::fs::write(path, s).map_err(|e| Error::InvalidArgument(format!("writing {}: {e}", path.display())))
}

pub fn cmd_simulate(cfg: &RunConfig, which: Subroutine, opts: &SimulateOpts) -> Outcome {
    run("simulate", cfg, || match which {
        Subroutine::Regulator => simulate_regulator(cfg, opts),
        Subroutine::Pip => simulate_pip(cfg, opts),
    })
}

fn simulate_regulator(cfg: &RunConfig, opts: &SimulateOpts) -> Result<Outcome> {
    let params = match cfg.q_override {
        Some(q) => DualParams1D::with_q(&cfg.disc, q, cfg.relaxed)?,
        None => DualParams1D::new(&cfg.disc)?,
    };
    let budget = PrecisionBudget::with_x_limit(&cfg.disc, BigInt::from(params.q));
    let sim = RegulatorDual::new(&params, &budget, cfg.cycle_cap)?;
    let prov = vec![
        Provenance::new("distribution", "exact FFT of the tabulated Reg indicator"),
        Provenance::new("r_plus (target set)", CYCLE_SOURCE),
    ];
    if cfg.mode == Mode::Sample {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let s = sim.sample(&mut rng);
        let out = json!({
            "mode": "sample", "q": params.q, "modulus": sim.modulus(),
            "x": s.x, "measured_form": sim.table.forms()[s.form_id].to_text(), "y": s.y,
        });
        return Ok(Outcome::new("simulate", cfg, Exit::Success, prov, out));
    }
    let cycle = enumerate_cycle(&cfg.disc, cfg.cycle_cap)?;
    let mut reports: Vec<BoundReport> = Vec::new();
    let mut measured = sim.measured_forms();
    measured.sort_by_key(|&(j, p)| (std::cmp::Reverse(p), j));
    for &(j, _) in measured.iter().take(opts.max_forms.max(1)) {
        let dist = sim.conditional(j);
        let target = target_set_1d(&sim, j, &cycle.regulator_narrow);
        let support: Vec<u64> = sim.table.runs_of(j).flat_map(|r| r.start..r.start + r.len as u64).collect();
        let rep = verify_probability_bounds_1d(&dist, &target, &support, cfg.relaxed);
        if reports.is_empty() {
            if let Some(path) = &opts.dist_path {
                write_dist(
                    path,
                    &DistFile {
                        dimension: 1,
                        disc: cfg.disc.to_string(),
                        q: params.q,
                        seed: cfg.seed,
                        measured_form: dist.measured_form.to_text(),
                        p: dist.support_size,
                        m_min: target.stats.m_min,
                        m_max: target.stats.m_max,
                        r_plus_source: CYCLE_SOURCE,
                        probabilities: dist_entries(&dist),
                    },
                )?;
            }
        }
        reports.push(rep);
    }
    Ok(bounds_outcome(cfg, params.q, sim.modulus(), measured.len(), reports, prov))
}

fn bounds_outcome(cfg: &RunConfig, q: u64, modulus: u64, forms: usize, reports: Vec<BoundReport>, prov: Vec<Provenance>) -> Outcome {
    let failed = reports.iter().any(|r| r.any_failed());
    let min_mass = reports.iter().map(|r| r.y_mass).fold(f64::INFINITY, f64::min);
    let out = json!({
        "mode": "full", "q": q, "modulus": modulus, "measured_forms": forms,
        "reported_forms": reports.len(), "min_y_mass": min_mass, "bounds": reports,
    });
    Outcome::new("simulate", cfg, if failed { Exit::Fail } else { Exit::Success }, prov, out)
}

fn simulate_pip(cfg: &RunConfig, opts: &SimulateOpts) -> Result<Outcome> {
    let text = opts.form.as_deref().ok_or_else(|| Error::InvalidArgument("simulate pip needs --form".into()))?;
    let g: PositiveReducedForm = to_positive_rep(&parse_form(&cfg.disc, text)?);
    let params = match cfg.q_override {
        Some(q) => DualParams2D::with_q(&cfg.disc, &g, q, cfg.relaxed)?,
        None => DualParams2D::new(&cfg.disc, &g)?,
    };
    let q = params.q;
    let budget = PrecisionBudget::with_x_limit(&cfg.disc, BigInt::from(q));
    let sim = PipDual::new(&params, &budget, cfg.cycle_cap)?;
    let mut prov = vec![
        Provenance::new("distribution", if q <= DENSE_2D_CAP { "dense 2-D FFT" } else { "exact run sums at the target set" }),
        Provenance::new("r_plus (target set)", CYCLE_SOURCE),
        Provenance::new("n, S (target set)", "order_and_s: powers of g until principal"),
    ];
    if cfg.mode == Mode::Sample {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let s = sim.sample(&mut rng)?;
        prov.truncate(1);
        let out = json!({
            "mode": "sample", "q": q, "modulus": sim.modulus(),
            "x": s.x, "measured_form": sim.rows.form(s.form_id).to_text(), "y": s.y,
        });
        return Ok(Outcome::new("simulate", cfg, Exit::Success, prov, out));
    }
    let cycle = enumerate_cycle(&cfg.disc, cfg.cycle_cap)?;
    let (n, s) = order_and_s(g.reduced(), &cycle, cfg.cycle_cap)?;
    let measured: Vec<(usize, u64)> = if q <= DENSE_2D_CAP {
        let mut m = sim.measured_forms();
        m.sort_by_key(|&(j, p)| (std::cmp::Reverse(p), j));
        m
    } else {
        // a full census of the table is out of reach; take forms in lap order
        prov.push(Provenance::new("measured forms", "every form of every class lap; not censused"));
        (0..sim.rows.form_count()).map(|id| (id, 0)).collect()
    };
    let mut reports = Vec::new();
    for &(id, _) in measured.iter().take(opts.max_forms.max(1)) {
        let target = target_set_2d(&sim, id, n, &s, &cycle.regulator_narrow);
        let (dist, support) = if q <= DENSE_2D_CAP {
            let mut sup = Vec::new();
            for x1 in 0..q {
                sim.rows.for_each_run_of(id, x1, |st, l, _| sup.extend((st..st + l).map(|x2| (x1, x2))));
            }
            (sim.conditional(id)?, Some(sup))
        } else {
            (sim.restricted(id, &target.ys()), None)
        };
        let rep = verify_probability_bounds_2d(&dist, &target, support.as_deref(), cfg.relaxed);
        if reports.is_empty() {
            if let Some(path) = &opts.dist_path {
                write_dist(
                    path,
                    &DistFile {
                        dimension: 2,
                        disc: cfg.disc.to_string(),
                        q,
                        seed: cfg.seed,
                        measured_form: dist.measured_form.to_text(),
                        p: dist.support_size,
                        m_min: target.stats.m_min,
                        m_max: target.stats.m_max,
                        r_plus_source: CYCLE_SOURCE,
                        probabilities: dist_entries(&dist),
                    },
                )?;
            }
        }
        reports.push(rep);
    }
    Ok(bounds_outcome(cfg, q, sim.modulus(), measured.len(), reports, prov))
}

pub fn cmd_verify_lemmas(cfg: &RunConfig, lemma: &LemmaConfig) -> Outcome {
    run("verify-lemmas", cfg, || {
        let lc = LemmaConfig { relaxed: cfg.relaxed || lemma.relaxed, cycle_cap: cfg.cycle_cap, ..lemma.clone() };
        let rep = verify_lemmas(&cfg.disc, &lc)?;
        let exit = if rep.failed() { Exit::Fail } else { Exit::Success };
        let prov = vec![
            Provenance::new("δ(g), R⁺", CYCLE_SOURCE),
            Provenance::new("n, S", "order_and_s: powers of g until principal"),
            Provenance::new("Reg, PIP", "Infra::form_left_of and Infra::pip_eval at every scanned point"),
        ];
        Ok(Outcome::new("verify-lemmas", cfg, exit, prov, rep))
    })
}

#[derive(Serialize)]
struct ResourcesCfg<'a> {
    delta: &'a str,
    which: Vec<Which>,
}

/// Register breakdown for a discriminant size; `delta` need not be a discriminant.
pub fn cmd_resources(delta: &str, which: Option<Subroutine>) -> Outcome {
    let ws = match which {
        Some(Subroutine::Regulator) => vec![Which::Regulator],
        Some(Subroutine::Pip) => vec![Which::Pip],
        None => vec![Which::Regulator, Which::Pip],
    };
    let cfg = ResourcesCfg { delta, which: ws.clone() };
    let parsed = delta
        .trim()
        .parse::<BigInt>()
        .ok()
        .or_else(|| parse_power(delta))
        .filter(|v| v > &BigInt::from(2));
    let Some(v) = parsed else {
        return Outcome::error("resources", &cfg, &Error::InvalidArgument(format!("Δ = {delta:?} must be an integer above 2 (or 2^k)")));
    };
    let reports: Vec<ResourceReport> = ws.iter().map(|&w| estimate_qubits(&v, w)).collect();
    let prov = vec![Provenance::new("N", "footnote bound N < 10.5 log Δ with lower-order terms dropped")];
    Outcome::new("resources", &cfg, Exit::Success, prov, reports)
}

fn parse_power(s: &str) -> Option<BigInt> {
    let (b, e) = s.trim().split_once('^')?;
    let b: BigInt = b.trim().parse().ok()?;
    let e: u32 = e.trim().parse().ok()?;
    Some(num_traits::pow(b, e as usize))
}

#[derive(Clone, Debug, Serialize)]
pub struct FindDiscOpts {
    pub min_ratio: f64,
    pub start: u64,
    pub count: usize,
    /// Stop scanning at this Δ.
    pub max: u64,
    pub cycle_cap: u64,
}

#[derive(Serialize)]
pub struct Found {
    pub disc: u64,
    pub r_plus: f64,
    pub ratio: f64,
}

/// Discriminants in `[start, max]` with `R⁺ / ln Δ > min_ratio`, by the cycle oracle.
pub fn find_disc(opts: &FindDiscOpts) -> Result<Vec<Found>> {
    let mut out = Vec::new();
    for v in opts.start.max(5)..=opts.max {
        if out.len() >= opts.count {
            break;
        }
        let Ok(d) = Discriminant::new(v) else { continue };
        let c = enumerate_cycle(&d, opts.cycle_cap)?;
        let ratio = c.r_f64() / d.ln_f64();
        if ratio > opts.min_ratio {
            out.push(Found { disc: v, r_plus: c.r_f64(), ratio });
        }
    }
    Ok(out)
}

pub fn cmd_find_disc(opts: &FindDiscOpts) -> Outcome {
    run("find-disc", opts, || {
        let found = find_disc(opts)?;
        let exit = if found.len() >= opts.count { Exit::Success } else { Exit::Fail };
        Ok(Outcome::new("find-disc", opts, exit, vec![Provenance::new("r_plus", CYCLE_SOURCE)], json!({"found": found})))
    })
}

/// Oracle certificate for a PIP input: principal flag and the true distance.
pub fn oracle_principal(g: &ReducedForm, cap: u64) -> Result<(bool, Option<f64>)> {
    let cycle = enumerate_cycle(g.disc(), cap)?;
    let (p, d) = principal_test_bruteforce(g, &cycle);
    Ok((p, d.map(|x| x.to_f64())))
}
