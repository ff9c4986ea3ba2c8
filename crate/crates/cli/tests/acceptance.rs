//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mmfield::binaural::{binaural_ne, log_frequencies, BinauralMethod, Ear};
use mmfield::evaluation::{direction_sweep, nre, SweepReport, NRE_FLOOR_DB};
use mmfield::field::{green_free, interior_expansion_point_source, synthesize_from_coefficients};
use mmfield::mode_matching::{
    compute_lambda, solve_conventional, solve_doa, Method, ModeMatcher, SolverInputs,
};
use mmfield::{Complex64, Position, Wavenumber};
use mmfield_cli::{Resolved, Scenario};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn reference() -> Resolved {
    Scenario::load(&scenario_path("reference.json"))
        .and_then(|s| s.resolve())
        .expect("bundled scenario is valid")
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Position {
    loop {
        let p = Position::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = p.norm();
        if n > 0.1 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn expansion_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = reference().wavenumber();
    let order = 20;
    let kr_max = 0.5 * order as f64;
    let (mut worst, mut failing, mut first_failing_kr) = (0.0f64, 0, f64::INFINITY);
    for _ in 0..200 {
        let origin = Position::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        let src = origin + unit_vector(&mut rng) * rng.random_range(1.0..3.0);
        let kr = kr_max * rng.random::<f64>().cbrt();
        let obs = origin + unit_vector(&mut rng) * (kr / k.value());
        let coeffs = interior_expansion_point_source(k, src, origin, order).unwrap();
        let got = synthesize_from_coefficients(&coeffs, k, obs);
        let expected = green_free(k, src, obs).unwrap();
        let err = (got - expected).norm() / expected.norm();
        worst = worst.max(err);
        if err > 1e-8 {
            failing += 1;
            first_failing_kr = first_failing_kr.min(kr);
        }
    }
    let elapsed = start.elapsed();
    let mut detail = format!(
        "N = 20, k·r ≤ {kr_max}: worst relative error {worst:.2e}, {failing}/200 above 1e-8"
    );
    if failing > 0 {
        detail.push_str(&format!(" (smallest failing k·r = {first_failing_kr:.2})"));
    }
    detail.push_str(&format!(", {:.2} s", elapsed.as_secs_f64()));
    Check {
        id: 1,
        name: "expansion oracle",
        pass: failing == 0 && within(elapsed, 10),
        detail,
    }
}

/// `d = W^{-1/2} V diag(s/(s²+λ)) Uᴴ b` from the SVD `C W^{-1/2} = U S Vᴴ`.
fn svd_solve(
    c: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    lambda: f64,
    w: &[f64],
) -> DVector<Complex64> {
    let scale: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut scaled = c.clone();
    for (l, s) in scale.iter().enumerate() {
        scaled.column_mut(l).scale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let utb = u.adjoint() * b;
    let filtered = DVector::from_iterator(
        utb.len(),
        svd.singular_values
            .iter()
            .zip(utb.iter())
            .map(|(s, x)| x * (s / (s * s + lambda))),
    );
    let mut d = v_t.adjoint() * filtered;
    for (l, s) in scale.iter().enumerate() {
        d[l] *= *s;
    }
    d
}

fn normal_residual(
    c: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    lambda: f64,
    w: &[f64],
    d: &DVector<Complex64>,
) -> (f64, f64) {
    let chb = c.adjoint() * b;
    let mut lhs = c.adjoint() * (c * d);
    for (l, wl) in w.iter().enumerate() {
        lhs[l] += d[l] * (lambda * wl);
    }
    ((lhs - &chb).norm(), chb.norm())
}

fn solver_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_oracle, mut worst_residual) = (0.0f64, 0.0f64);
    let mut pass = true;
    for _ in 0..20 {
        let c = DMatrix::from_fn(98, 121, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let b = DVector::from_fn(98, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let lambda = compute_lambda(&c, 1e-3).unwrap();
        let sigma: Vec<f64> = (0..121)
            .map(|_| 1.0 / rng.random_range(1e-3..1.0))
            .collect();
        let ones = vec![1.0; 121];
        let conv =
            solve_conventional(&SolverInputs::new(c.clone(), b.clone(), lambda, None).unwrap())
                .unwrap()
                .values;
        let doa = solve_doa(
            &SolverInputs::new(c.clone(), b.clone(), lambda, Some(sigma.clone())).unwrap(),
        )
        .unwrap()
        .values;
        for (d, w) in [(&conv, &ones), (&doa, &sigma)] {
            let oracle = svd_solve(&c, &b, lambda, w);
            let rel = (d - &oracle).norm() / oracle.norm();
            let (res, bound) = normal_residual(&c, &b, lambda, w, d);
            worst_oracle = worst_oracle.max(rel);
            worst_residual = worst_residual.max(res / bound);
            pass &= rel <= 1e-9 && res <= 1e-9 * bound;
        }
    }
    let elapsed = start.elapsed();
    Check {
        id: 2,
        name: "solver oracle",
        pass: pass && within(elapsed, 30),
        detail: format!(
            "20 systems 98×121: worst SVD mismatch {worst_oracle:.2e}, worst residual/‖Cᴴb‖ {worst_residual:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn reduction_identity(r: &Resolved) -> Check {
    let matcher = ModeMatcher::new(
        r.array.clone(),
        r.zones.clone(),
        r.wavenumber(),
        r.scenario.lambda_factor,
        r.scenario.doa(),
    )
    .unwrap();
    let mut worst = 0.0f64;
    for dir in r.directions.iter().step_by(9) {
        let primary = dir.point_at(r.scenario.primary.distance);
        let mut inputs = matcher.inputs_for(primary, Method::Conventional).unwrap();
        let conv = solve_conventional(&inputs).unwrap().values;
        inputs.sigma = Some(vec![1.0; r.array.len()]);
        let doa = solve_doa(&inputs).unwrap().values;
        worst = worst.max((&doa - &conv).norm() / conv.norm());
    }
    Check {
        id: 3,
        name: "reduction identity",
        pass: worst <= 1e-12,
        detail: format!(
            "Σ = I on the 121-loudspeaker setup, 8 directions: max relative difference {worst:.2e}"
        ),
    }
}

fn sweep_trend(report: &SweepReport, elapsed: Duration) -> Check {
    let diffs = |factor: f64| -> Vec<f64> {
        let mut out = Vec::new();
        for q in 0..2 {
            let conv = report.series(Method::Conventional, q, factor);
            let doa = report.series(Method::Doa, q, factor);
            out.extend(conv.iter().zip(&doa).map(|(c, d)| c - d));
        }
        out
    };
    let outside = mean(&diffs(1.2));
    let inside = mean(&diffs(0.8));
    let complete = report.failures.is_empty() && report.rows.len() == 2 * 72 * 3 * 2;
    Check {
        id: 4,
        name: "region-size trend",
        pass: complete && outside > 0.0 && inside.abs() < 3.0 && within(elapsed, 600),
        detail: format!(
            "mean(NRE_conv − NRE_doa): {outside:+.2} dB at 1.2·N/k (need > 0), {inside:+.2} dB at 0.8·N/k (need |·| < 3), {:.1} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn opposite_side_suppression(r: &Resolved) -> Check {
    let matcher = ModeMatcher::new(
        r.array.clone(),
        r.zones.clone(),
        r.wavenumber(),
        r.scenario.lambda_factor,
        r.scenario.doa(),
    )
    .unwrap();
    let limit = 30f64.to_radians();
    let mut suppressed = 0;
    let mut worst_ratio = 0.0f64;
    for dir in &r.directions {
        let primary = dir.point_at(r.scenario.primary.distance);
        let anti = -primary;
        let behind: Vec<bool> = r
            .array
            .positions()
            .iter()
            .map(|p| p.angle_to(anti) <= limit)
            .collect();
        let conv = matcher.solve(primary, Method::Conventional).unwrap();
        let doa = matcher.solve(primary, Method::Doa).unwrap();
        let (ec, ed) = (
            conv.energy_where(|l| behind[l]),
            doa.energy_where(|l| behind[l]),
        );
        if ed < ec {
            suppressed += 1;
        }
        worst_ratio = worst_ratio.max(ed / ec);
    }
    Check {
        id: 5,
        name: "opposite-side suppression",
        pass: suppressed == r.directions.len(),
        detail: format!(
            "DoA energy within 30° of the anti-source direction lower in {suppressed}/{} directions, worst doa/conv ratio {:.2e}",
            r.directions.len(),
            worst_ratio
        ),
    }
}

fn binaural_trend(r: &Resolved) -> Check {
    let start = Instant::now();
    let mut scenario = r.binaural().unwrap();
    scenario.primary = Position::new(r.scenario.primary.distance, 0.0, 0.0);
    let frequencies = log_frequencies(100.0, 8000.0, 50).unwrap();
    let report = binaural_ne(&scenario, &frequencies).unwrap();
    let upper = |m: BinauralMethod| -> f64 {
        let series = report.series(m, Ear::Left);
        let half: Vec<f64> = series[series.len() / 2..]
            .iter()
            .map(|(_, ne)| *ne)
            .collect();
        mean(&half)
    };
    let (mm, conv, doa) = (
        upper(BinauralMethod::Mm),
        upper(BinauralMethod::BcmmConv),
        upper(BinauralMethod::BcmmDoa),
    );
    let elapsed = start.elapsed();
    Check {
        id: 6,
        name: "binaural trend",
        pass: report.failures.is_empty() && doa < conv && doa < mm && within(elapsed, 900),
        detail: format!(
            "left ear, frontal source, mean NE over 25 highest of 50 frequencies: BCMM_doa {doa:.2} dB, BCMM_conv {conv:.2} dB, MM {mm:.2} dB (need doa < conv and doa < MM), {:.1} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn metric_identities(report: &SweepReport) -> Check {
    let p = [
        Complex64::new(1.0, -2.0),
        Complex64::new(0.3, 0.7),
        Complex64::new(-1.5, 0.0),
    ];
    let zeros = [Complex64::new(0.0, 0.0); 3];
    let doubled: Vec<Complex64> = p.iter().map(|v| v * 2.0).collect();
    let identities = nre(&p, &p).unwrap() == NRE_FLOOR_DB
        && nre(&zeros, &p).unwrap() == 0.0
        && nre(&doubled, &p).unwrap() == 0.0;

    let mut monotone = true;
    let mut medians = Vec::new();
    for q in 0..2 {
        let m: Vec<f64> = [0.8, 1.0, 1.2]
            .iter()
            .map(|&f| median(report.series(Method::Conventional, q, f)))
            .collect();
        monotone &= m[0] <= m[1] && m[1] <= m[2];
        medians.push(format!("zone {q}: {:.2}/{:.2}/{:.2}", m[0], m[1], m[2]));
    }
    Check {
        id: 7,
        name: "metric identities",
        pass: identities && monotone,
        detail: format!(
            "clamp/zero/scale {}; conventional median NRE (dB) at 0.8/1.0/1.2·N/k {}",
            if identities { "exact" } else { "wrong" },
            medians.join(", ")
        ),
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_path("quick.json");
    let mut outputs = Vec::new();
    let mut ok = true;
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let output = Command::new(env!("CARGO_BIN_EXE_mmfield"))
            .args(["sweep", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("binary runs");
        ok &= output.status.success();
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap_or_default());
    }
    let identical = ok && !outputs[0].is_empty() && outputs[0] == outputs[1];
    Check {
        id: 8,
        name: "determinism",
        pass: identical,
        detail: format!(
            "two `mmfield sweep` runs on quick.json: {} ({} bytes)",
            if identical {
                "byte-identical"
            } else {
                "differ"
            },
            outputs[0].len()
        ),
    }
}

fn main() -> ExitCode {
    let r = reference();
    let k = Wavenumber::from_frequency(r.scenario.frequency_hz, r.scenario.speed_of_sound).unwrap();
    println!(
        "acceptance: 121 loudspeakers, zones at ±0.5 m, k = {:.4} rad/m",
        k.value()
    );

    let mut checks = vec![expansion_oracle(), solver_oracle(), reduction_identity(&r)];
    let start = Instant::now();
    let report = direction_sweep(&r.sweep()).expect("sweep runs");
    let sweep_time = start.elapsed();
    checks.push(sweep_trend(&report, sweep_time));
    checks.push(opposite_side_suppression(&r));
    checks.push(binaural_trend(&r));
    checks.push(metric_identities(&report));
    checks.push(determinism());

    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {}: {}", c.id, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!(
        "acceptance: {}/{} criteria pass",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
