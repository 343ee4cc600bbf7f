//! Acceptance suite: one pass/fail line per criterion, then a single assert.

use std::process::Command;

use memeflow::bubble::detect_inflection;
use memeflow::dynamics::{integrate, logistic_closed_form, LogisticParams};
use memeflow::linalg::Matrix;
use memeflow::noise::{add_gaussian_noise, standard_normals, uniforms};
use memeflow::synthetic::{exponential_family, logistic_family, with_relative_noise};
use memeflow::{
    classify, column_entropy, fit_logistic, integrate_competition, interior_equilibrium, normalize,
    BubbleConfig, BubbleLabel, CompetitionSystem, StateVector, TimeSeries,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference() -> LogisticParams<f64> {
    LogisticParams::new(1.0, 1.0, 0.01).unwrap()
}

fn rk4_matches_closed_form() -> Check {
    let p = reference();
    let s = integrate(&p, 20.0, 0.01).map_err(|e| e.to_string())?;
    let err = s
        .iter()
        .map(|(t, y)| (y - logistic_closed_form(t, &p)).abs())
        .fold(0.0, f64::max);
    ensure(err < 1e-8, format!("max abs error {err:.3e}"))
}

fn saturates_at_delta_e() -> Check {
    let s = integrate(&reference(), 40.0, 0.01).map_err(|e| e.to_string())?;
    let (_, y) = s.last().unwrap();
    let gap = (y - 1.0).abs();
    ensure(gap < 1e-6, format!("|y(40) - dE| = {gap:.3e}"))
}

fn inflection_at_half() -> Check {
    let s = integrate(&reference(), 20.0, 0.01).map_err(|e| e.to_string())?;
    let inf = detect_inflection(&s)
        .map_err(|e| e.to_string())?
        .ok_or("no inflection found")?;
    let rel = (inf.y - 0.5).abs() / 0.5;
    ensure(rel <= 0.02, format!("y* = {:.6}, relative miss {rel:.3e}", inf.y))
}

fn fit_recovery() -> Check {
    let p = LogisticParams::<f64>::new(0.8, 5.0, 0.05).unwrap();
    let clean: TimeSeries<f64> = TimeSeries::sample(0.0, 15.0, 200, |t| logistic_closed_form(t, &p)).unwrap();
    let mut hits = 0;
    for seed in 0..100 {
        let noisy: TimeSeries<f64> = add_gaussian_noise(&clean, 0.05, seed).unwrap();
        // The fit is defined on positive data only.
        let floored = noisy.map_values(|_, y: f64| y.max(1e-6)).unwrap();
        let Ok(fit) = fit_logistic(&floored) else { continue };
        let q = fit.logistic_params().unwrap();
        if (q.affinity - 0.8).abs() / 0.8 <= 0.05 && (q.delta_e - 5.0).abs() / 5.0 <= 0.02 {
            hits += 1;
        }
    }
    ensure(hits >= 95, format!("{hits}/100 within tolerance"))
}

fn bubble_discrimination() -> Check {
    let cfg = BubbleConfig::default();
    let count = |make: &dyn Fn(u64) -> TimeSeries<f64>, want: BubbleLabel| {
        (0..100u64).filter(|&s| classify(&make(s), &cfg).label == want).count()
    };
    let clean_log = count(&|s| logistic_family(s).series, BubbleLabel::Stable);
    let clean_exp = count(&|s| exponential_family(s).series, BubbleLabel::Bubble);
    let noisy_log = count(
        &|s| with_relative_noise(&logistic_family(s), 0.02, s).series,
        BubbleLabel::Stable,
    );
    let noisy_exp = count(
        &|s| with_relative_noise(&exponential_family(s), 0.02, s).series,
        BubbleLabel::Bubble,
    );
    ensure(
        clean_log == 100 && clean_exp == 100 && noisy_log >= 95 && noisy_exp >= 95,
        format!(
            "noiseless {clean_log}/100 stable, {clean_exp}/100 bubble; noisy {noisy_log}/100, {noisy_exp}/100"
        ),
    )
}

fn max_gap(a: &[TimeSeries<f64>], b: &[TimeSeries<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.times(), y.times());
            x.values().iter().zip(y.values()).map(|(u, v)| (u - v).abs())
        })
        .fold(0.0, f64::max)
}

fn normalization_equivalence() -> Check {
    let alpha: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 0.6], vec![0.4, 1.0]]).unwrap();
    let raw = CompetitionSystem::new(vec![1.0, 1.5], vec![2.0, 3.0], alpha).map_err(|e| e.to_string())?;
    let norm = normalize(&raw).map_err(|e| e.to_string())?;
    let y0 = StateVector::new(vec![0.1, 0.2]).unwrap();
    let a = integrate_competition(&raw, &y0, 50.0, 0.01).map_err(|e| e.to_string())?;
    let b = integrate_competition(&norm, &y0, 50.0, 0.01).map_err(|e| e.to_string())?;
    let gap = max_gap(&a, &b);
    ensure(gap < 1e-9, format!("max abs difference {gap:.3e}"))
}

fn interior_equilibrium_reached() -> Check {
    let alpha: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let sys = normalize(&CompetitionSystem::new(vec![1.0, 1.0], vec![1.0, 1.0], alpha).unwrap()).unwrap();
    let eq: StateVector<f64> = interior_equilibrium(&sys)
        .map_err(|e| e.to_string())?
        .ok_or("no interior equilibrium")?;
    let solve_gap = eq.as_slice().iter().map(|v| (v - 2.0 / 3.0).abs()).fold(0.0, f64::max);
    let y0 = StateVector::new(vec![0.1, 0.1]).unwrap();
    let paths: Vec<TimeSeries<f64>> = integrate_competition(&sys, &y0, 200.0, 0.01).map_err(|e| e.to_string())?;
    let run_gap = paths
        .iter()
        .map(|p| (p.last().unwrap().1 - 2.0 / 3.0).abs())
        .fold(0.0, f64::max);
    ensure(
        solve_gap < 1e-10 && run_gap < 1e-3,
        format!("solve miss {solve_gap:.3e}, trajectory miss at t=200 {run_gap:.3e}"),
    )
}

fn decoupling() -> Check {
    let (a, de, y0) = ([0.7, 1.3], [2.0, 0.5], [0.05, 0.01]);
    let sys = CompetitionSystem::new(a.to_vec(), de.to_vec(), Matrix::identity(2)).map_err(|e| e.to_string())?;
    let paths = integrate_competition(&sys, &StateVector::new(y0.to_vec()).unwrap(), 30.0, 0.01)
        .map_err(|e| e.to_string())?;
    let single: Vec<_> = (0..2)
        .map(|i| integrate(&LogisticParams::new(a[i], de[i], y0[i]).unwrap(), 30.0, 0.01).unwrap())
        .collect();
    let gap = max_gap(&paths, &single);
    ensure(gap < 1e-10, format!("max componentwise difference {gap:.3e}"))
}

fn entropy_bounds() -> Check {
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    for seed in 0..1000u64 {
        let n = 2 + (seed as usize * 37) % 500;
        let bins = 2 + (seed as usize) % 31;
        let col: Vec<f64> = if seed % 2 == 0 {
            standard_normals(seed, n)
        } else {
            uniforms(seed, n).iter().map(|u| u.powi(3) * 100.0).collect()
        };
        let h = column_entropy(&col, bins).map_err(|e| e.to_string())?;
        worst_low = worst_low.min(h);
        worst_high = worst_high.max(h - (bins as f64).log2());
    }
    let constant = column_entropy(&[3.5; 64], 16).map_err(|e| e.to_string())?;
    let uniform = column_entropy(&uniforms(42, 10_000), 16).map_err(|e| e.to_string())?;
    ensure(
        worst_low >= 0.0 && worst_high <= 0.0 && constant == 0.0 && (uniform - 4.0).abs() <= 0.05,
        format!("min h {worst_low:.4}, max h - log2(bins) {worst_high:.2e}, constant {constant}, uniform {uniform:.4}"),
    )
}

/// First time the integrated path reaches `target`, by linear interpolation.
fn crossing(s: &TimeSeries<f64>, target: f64) -> Option<f64> {
    s.iter().zip(s.iter().skip(1)).find_map(|((t0, y0), (t1, y1))| {
        (y0 < target && y1 >= target).then(|| t0 + (target - y0) / (y1 - y0) * (t1 - t0))
    })
}

fn monotone_affinity() -> Check {
    let mut times = Vec::new();
    for a in [0.5, 1.0, 2.0, 4.0] {
        let p = LogisticParams::new(a, 1.0, 0.01).unwrap();
        let s = integrate(&p, 40.0, 0.01).map_err(|e| e.to_string())?;
        times.push(crossing(&s, 0.9).ok_or(format!("A={a} never reaches 0.9"))?);
    }
    let ok = times.windows(2).all(|w| w[1] < w[0]);
    ensure(ok, format!("t(0.9 dE) = {times:.4?}"))
}

fn memeflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_memeflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cli_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("sim.csv");
    let data = data.to_str().unwrap();
    let sim = memeflow(&["simulate", "--A", "0.8", "--deltaE", "5", "--y0", "0.05", "--t-end", "15", "--output", data]);
    if !sim.status.success() {
        return Err(format!("simulate failed: {}", String::from_utf8_lossy(&sim.stderr)));
    }
    let fit = memeflow(&["fit", data]);
    if !fit.status.success() {
        return Err(format!("fit exit {:?}", fit.status.code()));
    }
    let json: serde_json::Value = serde_json::from_slice(&fit.stdout).map_err(|e| e.to_string())?;
    let rel = |key: &str, want: f64| (json["params"][key].as_f64().unwrap_or(f64::NAN) - want).abs() / want;
    let worst = rel("affinity", 0.8).max(rel("delta_e", 5.0)).max(rel("y0", 0.05));
    let noisy = ["simulate", "--noise", "0.01", "--seed", "11"];
    let same = memeflow(&noisy).stdout == memeflow(&noisy).stdout;
    let other = memeflow(&["simulate", "--noise", "0.01", "--seed", "12"]).stdout != memeflow(&noisy).stdout;
    ensure(
        worst <= 1e-4 && same && other,
        format!("worst relative parameter miss {worst:.3e}; seeded runs identical: {same}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("rk4 matches closed form", rk4_matches_closed_form),
        ("saturation at deltaE", saturates_at_delta_e),
        ("inflection at half amplitude", inflection_at_half),
        ("noisy fit recovery", fit_recovery),
        ("bubble discrimination", bubble_discrimination),
        ("normalization equivalence", normalization_equivalence),
        ("interior equilibrium", interior_equilibrium_reached),
        ("decoupling under identity interaction", decoupling),
        ("entropy bounds", entropy_bounds),
        ("monotone affinity effect", monotone_affinity),
        ("cli determinism and round trip", cli_round_trip),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
