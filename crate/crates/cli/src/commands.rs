use conehj::{
    b_invariance, check_lower_bound, check_nonneg_definite, first_order_residual, hopf_lax_measure,
    k_convergence, project_measure, r_independence, run_suite, run_suite_with, solve, DyadicGrid,
    Error, ExtendedHamiltonian64, Hamiltonian, HopfLax, HopfLaxOptions, KernelMatrix64,
    LatticeDomain, LimitOptions, Method, Property, SolveOptions, SuiteConfig,
};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Fault, Hypothesis, MethodChoice};
use crate::error::CliError;
use crate::fault::NonMonotone;

/// Scales checked for non-negative definiteness.
const DEFINITENESS_SCALES: [u32; 5] = [0, 1, 2, 3, 4];

/// What a command produced: the primary artifact for stdout, extra files, and a verdict.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    pub passed: bool,
    /// Lines for stderr.
    pub messages: Vec<String>,
}

impl Report {
    fn passing(stdout: String) -> Self {
        Self {
            stdout,
            passed: true,
            ..Self::default()
        }
    }

    fn file(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Provenance columns leading every CSV row.
fn prov(method: &str, k: u32, r: f64, seed: u64) -> String {
    format!("{method},{k},{},{seed}", num(r))
}

fn hl_options(cfg: &ExperimentConfig) -> HopfLaxOptions<f64> {
    HopfLaxOptions {
        starts: cfg.tolerances.starts,
        seed: cfg.seed(),
        tol: cfg.tolerances.hopf_lax,
        max_iter: cfg.tolerances.max_iter,
    }
}

fn limit_options(cfg: &ExperimentConfig) -> LimitOptions<f64> {
    LimitOptions {
        dx: cfg.tolerances.dx,
        solve: SolveOptions::default(),
        hopf_lax: hl_options(cfg),
    }
}

fn stalled(k: u32, t: f64, kkt: f64) -> CliError {
    CliError::Solver(Error::OptimizerFailed(format!(
        "Hopf-Lax search at K={k}, t={t} stalled with KKT residual {kkt}"
    )))
}

pub fn validate_kernel(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate_common()?;
    let g = &cfg.kernel;
    let lower = check_lower_bound(g);
    let definite = check_nonneg_definite(g, &DEFINITENESS_SCALES)?;
    let mut failures = Vec::new();
    if cfg.hypotheses.contains(&Hypothesis::LowerBound) && !lower.ok {
        failures.push(format!(
            "lower_bound: g is not bounded away from zero (certified minimum {}, sampled minimum {})",
            lower.m, lower.min_sampled
        ));
    }
    if cfg.hypotheses.contains(&Hypothesis::NonnegDefinite) {
        for s in definite.scales.iter().filter(|s| !s.ok) {
            failures.push(format!(
                "nonneg_definite: K={} minimum eigenvalue {} below {}",
                s.k, s.min_eigenvalue, s.threshold
            ));
        }
    }
    let passed = failures.is_empty();
    let body = json!({
        "kernel": g,
        "requested": cfg.hypotheses,
        "lower_bound": lower,
        "nonneg_definite": definite,
        "failures": failures,
        "passed": passed,
    });
    let mut rep = Report::passing(pretty(&body));
    rep.passed = passed;
    rep.messages = failures;
    rep.file("validate_kernel.json", rep.stdout.clone());
    Ok(rep)
}

pub fn solve_cmd(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let psi = cfg.validate_run(cfg.method)?;
    let mu = cfg.measure()?;
    let (g, k, r, seed) = (&cfg.kernel, cfg.k, cfg.r, cfg.seed());
    let grid = DyadicGrid::new(k)?;
    let d = grid.len() as f64;
    let x = project_measure(mu, grid)?.into_weights();
    let gm = KernelMatrix64::new(g, grid);
    let proj = psi.at_scale(g, grid)?;
    let methods = cfg.method.methods();
    let hl = if methods.contains(&Method::Hopflax) {
        Some(HopfLax::new(proj.clone(), gm.clone())?.with_options(hl_options(cfg)))
    } else {
        None
    };
    let h = if methods.contains(&Method::Pde) {
        Some(ExtendedHamiltonian64::new(&gm, g, r)?)
    } else {
        None
    };
    let slope = 8.0 * r * g.upper() / (g.m() * g.m());
    let mut csv = String::from("method,K,R,seed,t,pde,hopflax,gap,bound\n");
    let mut rows = Vec::new();
    for &t in &cfg.times {
        let mut pde = None;
        let mut diag = None;
        if let Some(h) = &h {
            let qm = x.iter().fold(0.0f64, |m, &v| m.max(v));
            let dom = LatticeDomain::covering(k, cfg.tolerances.dx, qm, h.lip_bound(), t)?;
            let sol = solve(&proj, h, t, &dom, &SolveOptions::default())?;
            pde = Some(sol.query(t, &x)?);
            diag = Some(sol.diagnostics().clone());
        }
        let mut hres = None;
        if let Some(hl) = &hl {
            let res = hl.value(t, &x)?;
            if !res.converged {
                return Err(stalled(k, t, res.kkt_residual));
            }
            hres = Some(res);
        }
        let hv = hres.as_ref().map(|r| r.value);
        let (gap, bound) = match (pde, hv) {
            (Some(p), Some(q)) => (
                Some((p - q).abs()),
                Some(t / d.sqrt() * (r + psi.mass() + slope)),
            ),
            _ => (None, None),
        };
        let tag = match cfg.method {
            MethodChoice::Pde => "pde",
            MethodChoice::Hopflax => "hopflax",
            MethodChoice::Both => "both",
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            prov(tag, k, r, seed),
            num(t),
            opt_num(pde),
            opt_num(hv),
            opt_num(gap),
            opt_num(bound)
        ));
        rows.push(json!({"t": t, "pde": pde, "pde_diagnostics": diag, "hopflax": hres, "gap": gap, "bound": bound}));
    }
    let mut rep = Report::passing(csv.clone());
    rep.file("solve.csv", csv);
    rep.file(
        "solve.json",
        pretty(&json!({"K": k, "R": r, "seed": seed, "method": cfg.method, "rows": rows})),
    );
    Ok(rep)
}

pub fn hopf_lax_cmd(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let psi = cfg.validate_run(MethodChoice::Hopflax)?;
    let mu = cfg.measure()?;
    let (g, r, seed) = (&cfg.kernel, cfg.r, cfg.seed());
    let opts = hl_options(cfg);
    let mut csv = String::from(
        "method,K,R,seed,t,value,kkt_residual,first_order_residual,search_radius,mass\n",
    );
    let mut rows = Vec::new();
    for k in cfg.scales() {
        for &t in &cfg.times {
            let res = hopf_lax_measure(&psi, g, k, t, mu, cfg.mass, &opts)?;
            if !res.converged {
                return Err(stalled(k, t, res.kkt_residual));
            }
            let fo = match first_order_residual(&psi, g, &res, mu, t) {
                Ok(v) => Some(v),
                Err(Error::DensityUnavailable) => None,
                Err(e) => return Err(e.into()),
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                prov("hopflax", k, r, seed),
                num(t),
                num(res.value),
                num(res.kkt_residual),
                opt_num(fo),
                num(res.search_radius_used),
                opt_num(cfg.mass)
            ));
            rows.push(json!({"K": k, "t": t, "result": res, "first_order_residual": fo}));
        }
    }
    let mut rep = Report::passing(csv.clone());
    rep.file("hopf_lax.csv", csv);
    rep.file(
        "hopf_lax.json",
        pretty(&json!({"R": r, "seed": seed, "mass": cfg.mass, "rows": rows})),
    );
    Ok(rep)
}

pub fn converge(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let psi = cfg.validate_run(cfg.method)?;
    let mu = cfg.measure()?;
    let (g, r, seed) = (&cfg.kernel, cfg.r, cfg.seed());
    let ks = cfg.scales();
    let opts = limit_options(cfg);
    let mut csv = String::from("method,K,R,seed,t,value,diff,E_K\n");
    let mut reports = Vec::new();
    let mut constrained = Vec::new();
    if let Some(a) = cfg.mass {
        // the mass-constrained formula has no grid route and no E_K estimate
        if cfg.method.includes_pde() {
            return Err(CliError::Config("`mass` requires method hopflax".into()));
        }
        for &t in &cfg.times {
            let mut prev = None;
            let mut values = Vec::new();
            for &k in &ks {
                let res = hopf_lax_measure(&psi, g, k, t, mu, Some(a), &opts.hopf_lax)?;
                if !res.converged {
                    return Err(stalled(k, t, res.kkt_residual));
                }
                let diff = prev.map(|p: f64| (res.value - p).abs());
                csv.push_str(&format!(
                    "{},{},{},{},\n",
                    prov("hopflax", k, r, seed),
                    num(t),
                    num(res.value),
                    opt_num(diff)
                ));
                prev = Some(res.value);
                values.push(res.value);
            }
            constrained.push(json!({"t": t, "mass": a, "ks": ks, "values": values}));
        }
    } else {
        for method in cfg.method.methods() {
            for &t in &cfg.times {
                let rep = k_convergence(&psi, g, mu, t, &ks, r, method, &opts)?;
                for (i, &k) in rep.ks.iter().enumerate() {
                    let diff = if i == 0 { None } else { Some(rep.diffs[i - 1]) };
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        prov(&rep.methods[i].to_string(), k, r, seed),
                        num(t),
                        num(rep.values[i]),
                        opt_num(diff),
                        num(rep.error_terms[i])
                    ));
                }
                reports.push(rep);
            }
        }
    }
    let mut out = Report::passing(csv.clone());
    out.file("convergence.csv", csv);
    let mut extra = serde_json::Map::new();
    if let Some(rc) = &cfg.r_independence {
        let mut csv = String::from("method,K,R,seed,t,value,R2,value_R2,discrepancy\n");
        let mut reps = Vec::new();
        for method in cfg.method.methods() {
            let rep = r_independence(&psi, g, mu, &cfg.times, ks[0], r, rc.r2, method, &opts)?;
            for (i, &t) in rep.times.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    prov(&method.to_string(), ks[0], r, seed),
                    num(t),
                    num(rep.values_r1[i]),
                    num(rc.r2),
                    num(rep.values_r2[i]),
                    num((rep.values_r1[i] - rep.values_r2[i]).abs())
                ));
            }
            reps.push(rep);
        }
        out.file("r_independence.csv", csv);
        extra.insert("r_independence".into(), json!(reps));
    }
    if let Some(bc) = &cfg.b_invariance {
        let mut csv = String::from("method,K,R,seed,t,b1,b2,f_b1,f_b2,discrepancy,error_term\n");
        let mut reps = Vec::new();
        for &k in &ks {
            for &t in &cfg.times {
                let rep = b_invariance(g, &psi, bc.b1, bc.b2, t, mu, k, &opts.hopf_lax)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    prov("hopflax", k, r, seed),
                    num(t),
                    num(bc.b1),
                    num(bc.b2),
                    num(rep.f_b1),
                    num(rep.f_b2),
                    num(rep.discrepancy),
                    num(rep.error_term)
                ));
                reps.push(json!({"K": k, "t": t, "report": rep}));
            }
        }
        out.file("b_invariance.csv", csv);
        extra.insert("b_invariance".into(), json!(reps));
    }
    extra.insert("convergence".into(), json!(reports));
    if !constrained.is_empty() {
        extra.insert("mass_constrained".into(), json!(constrained));
    }
    extra.insert("seed".into(), json!(seed));
    out.file("converge.json", pretty(&Value::Object(extra)));
    Ok(out)
}

pub fn invariants(cfg: &ExperimentConfig, fault: Option<Fault>) -> Result<Report, CliError> {
    cfg.validate_common()?;
    let properties = cfg
        .suite
        .properties
        .clone()
        .unwrap_or_else(|| Property::ALL.to_vec());
    if properties.is_empty() {
        return Err(CliError::Config("the property selection is empty".into()));
    }
    let mut sc = SuiteConfig::new(cfg.kernel.clone(), cfg.r, cfg.seeds.clone());
    sc.properties = properties;
    sc.samples = cfg.suite.samples;
    let suite = match fault.unwrap_or(cfg.suite.fault) {
        Fault::None => run_suite(&sc)?,
        Fault::NonMonotone => run_suite_with(&sc, &NonMonotone::new(sc.hamiltonian()?))?,
    };
    let mut csv = String::from("method,K,R,seed,property,passed,measure,threshold,detail\n");
    let mut rep = Report::default();
    for o in &suite.outcomes {
        csv.push_str(&format!(
            "{},{},{},{},{},\"{}\"\n",
            prov("suite", 0, cfg.r, o.seed),
            o.property,
            o.passed,
            num(o.measure),
            num(o.threshold),
            o.detail.replace('"', "'")
        ));
        if !o.passed {
            rep.messages.push(format!(
                "violated property {} (seed {}): {}",
                o.property, o.seed, o.detail
            ));
        }
    }
    rep.passed = suite.passed;
    rep.stdout = csv.clone();
    rep.file("invariants.csv", csv);
    rep.file("invariants.json", pretty(&json!(suite)));
    Ok(rep)
}
