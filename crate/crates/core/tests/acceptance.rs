//! End-to-end acceptance run. Prints one line per criterion and exits non-zero on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use conehj::{
    b_invariance, first_order_residual, hopf_lax_finite, hopf_lax_measure, k_convergence,
    project_measure, r_independence, run_suite, solve, value_at_scale, DyadicGrid,
    ExtendedHamiltonian, Hamiltonian, HopfLaxOptions, InitialCondition, Kernel, KernelMatrix,
    LatticeDomain, LimitOptions, MeasureSpec, Method, SolveOptions, SuiteConfig,
};

type Outcome = Result<String, String>;

/// Name, check and runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn quad() -> Kernel<f64> {
    Kernel::quadratic(2.0)
}

fn worked() -> InitialCondition<f64> {
    InitialCondition::linear(MeasureSpec::atom(-1.0, 1.0))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Best value of `p·w − ½ w·G w` over weight vectors whose mass `Σw/d` lies on the
/// 0.05-lattice of `[0, 1.5]`.
fn simplex_grid_max(p: &[f64], g: &KernelMatrix<f64>) -> f64 {
    const UNITS: usize = 30;
    let d = p.len();
    let step = 0.05 * d as f64;
    let cols: Vec<Vec<f64>> = (0..d).map(|k| g.matrix().column(k)).collect();
    // level k holds the partial sums over coordinates < k, rebuilt from the parent each time
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        left: usize,
        w: &mut [Vec<f64>],
        gw: &mut [Vec<f64>],
        p: &[f64],
        cols: &[Vec<f64>],
        step: f64,
        best: &mut f64,
    ) {
        let d = p.len();
        if k == d {
            let lin: f64 = p.iter().zip(&w[d]).map(|(a, b)| a * b).sum();
            let quad: f64 = w[d].iter().zip(&gw[d]).map(|(a, b)| a * b).sum();
            *best = best.max(lin - 0.5 * quad);
            return;
        }
        for n in 0..=left {
            let amount = step * n as f64;
            let (lo, hi) = w.split_at_mut(k + 1);
            hi[0].copy_from_slice(&lo[k]);
            hi[0][k] = amount;
            let (lo, hi) = gw.split_at_mut(k + 1);
            for ((v, base), c) in hi[0].iter_mut().zip(&lo[k]).zip(&cols[k]) {
                *v = base + amount * c;
            }
            rec(k + 1, left - n, w, gw, p, cols, step, best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut w = vec![vec![0.0; d]; d + 1];
    let mut gw = vec![vec![0.0; d]; d + 1];
    rec(0, UNITS, &mut w, &mut gw, p, &cols, step, &mut best);
    best
}

fn analytic_oracle() -> Outcome {
    let mu = MeasureSpec::atom(0.0, 1.0);
    let opts = HopfLaxOptions::default();
    let mut worst = 0.0f64;
    let mut worst_brute = 0.0f64;
    for k in 0..=3 {
        let grid = DyadicGrid::new(k).map_err(err)?;
        let gm = KernelMatrix::new(&quad(), grid);
        let psi = worked().at_scale(&quad(), grid).map_err(err)?;
        let x = project_measure(&mu, grid).map_err(err)?.into_weights();
        // ψ is affine: ψ(x + tw) = ψ(x) + t p·w
        let base = psi.value(&x);
        let p: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut e = x.clone();
                e[i] += 1.0;
                psi.value(&e) - base
            })
            .collect();
        let brute = if k <= 2 {
            Some(simplex_grid_max(&p, &gm))
        } else {
            None
        };
        for t in [0.5, 1.0, 2.0] {
            let r = hopf_lax_measure(&worked(), &quad(), k, t, &mu, None, &opts).map_err(err)?;
            let oracle = 2.0 + 1.5 * t;
            worst = worst.max((r.value - oracle).abs());
            if let Some(b) = brute {
                let v = base + t * b;
                ensure(
                    v <= r.value + 1e-9,
                    format!("K={k} t={t}: brute force {v} beats {}", r.value),
                )?;
                worst_brute = worst_brute.max((v - r.value).abs());
            }
        }
    }
    ensure(worst <= 1e-6, format!("max |f − (2 + 1.5t)| = {worst:.3e}"))?;
    ensure(
        worst_brute <= 1e-6,
        format!("brute-force gap {worst_brute:.3e}"),
    )?;
    Ok(format!(
        "max |f − (2 + 1.5t)| = {worst:.3e}, simplex-grid gap {worst_brute:.3e}"
    ))
}

fn pde_hopf_lax_agreement() -> Outcome {
    let mu = MeasureSpec::atom(0.0, 1.0);
    let (t, r, a, m, big_m) = (0.5, 4.0, 1.0, 2.0, 3.0);
    let opts = LimitOptions {
        dx: 0.05,
        ..LimitOptions::default()
    };
    let pde = value_at_scale(&worked(), &quad(), &mu, t, 0, r, Method::Pde, &opts).map_err(err)?;
    let grid = DyadicGrid::new(0).map_err(err)?;
    let psi = worked().at_scale(&quad(), grid).map_err(err)?;
    let hl =
        hopf_lax_finite(&psi, &KernelMatrix::new(&quad(), grid), t, &[0.0, 2.0]).map_err(err)?;
    let gap = (pde - hl.value).abs();
    let bound = t / 2f64.sqrt() * (r + a + 8.0 * r * big_m / (m * m));
    ensure(gap <= bound, format!("gap {gap:.3e} exceeds {bound:.4}"))?;
    ensure(gap <= 0.05, format!("gap {gap:.3e} exceeds 0.05"))?;
    Ok(format!(
        "pde {pde:.12}, hopf-lax {:.12}, gap {gap:.3e} (bound {bound:.4})",
        hl.value
    ))
}

fn lipschitz_preservation() -> Outcome {
    let mut lines = Vec::new();
    let cases = [
        ("worked d=2", worked(), 0u32, 0.05, 0.05),
        ("worked d=4", worked(), 1, 0.2, 0.01),
    ];
    for (name, ic, k, dx, t) in cases {
        let grid = DyadicGrid::new(k).map_err(err)?;
        let psi = ic.at_scale(&quad(), grid).map_err(err)?;
        let h = ExtendedHamiltonian::new(&KernelMatrix::new(&quad(), grid), &quad(), 4.0)
            .map_err(err)?;
        let v = h.lip_bound();
        let dom = LatticeDomain::covering(k, dx, 0.4, v, t).map_err(err)?;
        let sol = solve(&psi, &h, t, &dom, &SolveOptions::default()).map_err(err)?;
        let profile = sol.lipschitz_profile();
        let l0 = profile[0].1;
        let hi = l0 + 2.0 * dx * v;
        for &(s, l) in &profile {
            ensure(
                l >= l0 - 1e-9 && l <= hi,
                format!("{name}: L({s}) = {l} outside [{l0} − 1e-9, {hi}]"),
            )?;
        }
        let top = profile
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        lines.push(format!("{name}: L0 {l0:.6}, max {top:.6}"));
    }
    Ok(lines.join("; "))
}

fn k_convergence_uniform() -> Outcome {
    let rho = MeasureSpec::uniform(-1.0, 1.0, 0.5);
    let psi = InitialCondition::linear(rho.clone());
    let t = 1.0;
    let oracle = 19.0 / 9.0 + 19.0 / 18.0 * t;
    let ks = [0, 1, 2, 3, 4];
    let rep = k_convergence(
        &psi,
        &quad(),
        &rho,
        t,
        &ks,
        4.0,
        Method::Hopflax,
        &LimitOptions::default(),
    )
    .map_err(err)?;
    for (&k, v) in ks.iter().zip(&rep.values) {
        let tol = 3.0 * 0.5f64.powi(k as i32);
        ensure(
            (v - oracle).abs() <= tol,
            format!("K={k}: |{v} − {oracle}| > {tol}"),
        )?;
    }
    let fit = rep.fit_exponent.ok_or("no fitted exponent")?;
    ensure(fit <= -0.4, format!("fitted exponent {fit} > −0.4"))?;
    Ok(format!(
        "K=4 error {:.3e}, fitted exponent {fit:.3}",
        (rep.values[4] - oracle).abs()
    ))
}

fn r_independence_pde() -> Outcome {
    let mu = MeasureSpec::atom(0.0, 1.0);
    let opts = LimitOptions {
        dx: 0.1,
        ..LimitOptions::default()
    };
    let rep = r_independence(
        &worked(),
        &quad(),
        &mu,
        &[0.25],
        0,
        4.0,
        6.0,
        Method::Pde,
        &opts,
    )
    .map_err(err)?;
    ensure(
        rep.max_discrepancy <= 1e-8,
        format!("discrepancy {:.3e}", rep.max_discrepancy),
    )?;
    ensure(
        rep.max_discrepancy <= rep.bound,
        format!("discrepancy above bound {}", rep.bound),
    )?;
    Ok(format!(
        "discrepancy {:.3e} (E_K bound {:.3})",
        rep.max_discrepancy, rep.bound
    ))
}

fn b_invariance_affine() -> Outcome {
    let g = Kernel::affine(0.0);
    let opts = HopfLaxOptions::default();
    let mut worst_disc = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for k in 0..=2 {
        // -1/2 is a grid point from K = 1 on
        for loc in [0.0, -0.5].into_iter().filter(|&l| k > 0 || l == 0.0) {
            let mu = MeasureSpec::atom(loc, 1.0);
            for t in [0.5, 1.0] {
                let rep = b_invariance(&g, &worked(), 2.0, 3.0, t, &mu, k, &opts).map_err(err)?;
                worst_disc = worst_disc.max(rep.discrepancy);
                worst_oracle = worst_oracle.max((rep.f_b1 - (-loc + 0.5 * t)).abs());
            }
        }
    }
    ensure(
        worst_disc <= 1e-6,
        format!("|f_2 − f_3| = {worst_disc:.3e}"),
    )?;
    ensure(
        worst_oracle <= 1e-6,
        format!("oracle gap {worst_oracle:.3e}"),
    )?;
    Ok(format!(
        "|f_2 − f_3| ≤ {worst_disc:.3e}, oracle gap {worst_oracle:.3e}"
    ))
}

fn first_order_condition() -> Outcome {
    let opts = HopfLaxOptions::default();
    let mu = MeasureSpec::atom(0.0, 1.0);
    let mut worst = 0.0f64;
    for k in 0..=3 {
        for t in [0.5, 1.0, 2.0] {
            let r = hopf_lax_measure(&worked(), &quad(), k, t, &mu, None, &opts).map_err(err)?;
            worst = worst.max(first_order_residual(&worked(), &quad(), &r, &mu, t).map_err(err)?);
        }
        let g = Kernel::affine(0.0);
        let r = hopf_lax_measure(&worked(), &g, k, 1.0, &mu, Some(1.0), &opts).map_err(err)?;
        worst = worst.max(first_order_residual(&worked(), &g, &r, &mu, 1.0).map_err(err)?);
    }
    ensure(worst <= 1e-6, format!("residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.3e}"))
}

fn property_suite() -> Outcome {
    let cfg = SuiteConfig::new(quad(), 4.0, vec![1, 2, 3]);
    let rep = run_suite(&cfg).map_err(err)?;
    let failed: Vec<String> = rep
        .failures()
        .map(|o| format!("{} (seed {}): {}", o.property, o.seed, o.detail))
        .collect();
    ensure(failed.is_empty(), failed.join("; "))?;
    Ok(format!("{} property checks", rep.outcomes.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("analytic oracle", analytic_oracle, Some(5)),
        ("pde / hopf-lax agreement", pde_hopf_lax_agreement, Some(30)),
        ("lipschitz preservation", lipschitz_preservation, None),
        ("K-convergence", k_convergence_uniform, Some(60)),
        ("R-independence", r_independence_pde, None),
        ("b-invariance", b_invariance_affine, None),
        ("first-order condition", first_order_condition, None),
        ("property suite", property_suite, Some(300)),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let took = start.elapsed();
        if let (Ok(msg), Some(b)) = (&out, budget) {
            if took > Duration::from_secs(b) {
                out = Err(format!(
                    "{msg}; runtime {:.1}s over {b}s",
                    took.as_secs_f64()
                ));
            }
        }
        let (tag, msg) = match out {
            Ok(m) => ("PASS", m),
            Err(m) => {
                all = false;
                ("FAIL", m)
            }
        };
        println!(
            "criterion {} {name}: {tag} [{:.2}s] {msg}",
            i + 1,
            took.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
