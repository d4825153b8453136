use eigmit::error_models::{trotter_delta_set, TrotterSplit};
use eigmit::experiments::{
    fit_power_law, run_noise_floor_sweep, run_qubitisation_histogram, run_trotter_sweep, run_vary_m, NoiseFloorConfig,
    QubitHistogramConfig, Strategy, TrotterSweepConfig, VaryMConfig,
};
use eigmit::extrapolate::{design_matrix, solve_lambda_min_l2};
use eigmit::hamiltonian::Model;
use eigmit::linalg::{CMatrix, DEFAULT_RANK_TOL};
use eigmit::pe_sim::{NoiseEntry, NoiseTable};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn small_sweep() -> TrotterSweepConfig {
    TrotterSweepConfig { n: 4, trotter_steps: vec![8, 16, 32], ..TrotterSweepConfig::default() }
}

#[test]
fn commuting_parts_have_no_trotter_error() {
    let diag = |v: &[f64]| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))));
    let split = TrotterSplit::new(&diag(&[0.3, -0.1, 0.2, 0.0]), &diag(&[-0.4, 0.1, 0.05, 0.2])).unwrap();
    let exact = -0.1;
    for p in [0usize, 2, 4] {
        let steps = trotter_delta_set(p, 0.1).unwrap();
        let energies: Vec<f64> = steps.iter().map(|&dt| split.effective(dt).unwrap().ground_energy().unwrap()).collect();
        let deltas = DMatrix::from_row_slice(1, steps.len(), &steps);
        let (x, b) = design_matrix(&deltas, p).unwrap();
        let w = solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL).unwrap();
        assert!((w.apply(&energies).unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn sweep_orders_improve_convergence() {
    let rec = run_trotter_sweep(&small_sweep()).unwrap();
    let alphas: Vec<f64> = rec.summary.fits.iter().map(|f| f.fit.unwrap().alpha).collect();
    assert!(alphas[0] > 1.7 && alphas[1] > alphas[0] + 1.5 && alphas[2] > alphas[1] + 1.5, "{alphas:?}");
    assert_eq!(rec.rows.len(), 9);
    assert!(rec.rows.iter().all(|r| r.exact == rec.summary.exact_energy));
}

#[test]
fn odd_orders_are_rejected() {
    let config = TrotterSweepConfig { orders: vec![1], ..small_sweep() };
    assert!(run_trotter_sweep(&config).is_err());
}

#[test]
fn noiseless_table_reproduces_the_sweep() {
    let sweep = small_sweep();
    let clean = run_trotter_sweep(&sweep).unwrap();
    let table = NoiseTable::new(vec![NoiseEntry::exact(0.0, 0.0)]).unwrap();
    let config = NoiseFloorConfig { sweep, noise_table: table, noise_strengths: vec![0.0], runs: 3 };
    let noisy = run_noise_floor_sweep(&config).unwrap();
    for row in &noisy.rows {
        let want = clean.rows.iter().find(|r| r.p == row.p && r.n_trotter_max == row.n_trotter_max).unwrap();
        assert_eq!(row.estimate, want.estimate);
    }
    for pt in &noisy.summary.points {
        assert_eq!(pt.floor, 0.0);
    }
}

#[test]
fn missing_noise_strength_is_an_error() {
    let table = NoiseTable::new(vec![NoiseEntry::exact(1.0, 0.01)]).unwrap();
    let config = NoiseFloorConfig { sweep: small_sweep(), noise_table: table, noise_strengths: vec![2.0], runs: 3 };
    assert!(matches!(run_noise_floor_sweep(&config), Err(eigmit::Error::MissingNoiseEntry(_))));
}

fn small_histogram() -> QubitHistogramConfig {
    QubitHistogramConfig {
        model: Model::Ising,
        n: 3,
        seed: 5,
        mus: vec![8],
        strategies: Strategy::ALL.to_vec(),
        runs: 200,
        q: 12,
        draws: Some(4),
        attempts_per_m: 20,
        max_extra_m: 40,
    }
}

#[test]
fn histogram_replays_exactly() {
    let a = run_qubitisation_histogram(&small_histogram()).unwrap();
    let b = run_qubitisation_histogram(&small_histogram()).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.summary.groups.len(), Strategy::ALL.len());
    assert_eq!(a.rows.len(), 200 * Strategy::ALL.len());
    let c = run_qubitisation_histogram(&QubitHistogramConfig { seed: 6, ..small_histogram() }).unwrap();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn nonnegative_strategy_keeps_positive_weights() {
    let rec = run_qubitisation_histogram(&QubitHistogramConfig { strategies: vec![Strategy::FirstOrderNonneg], ..small_histogram() }).unwrap();
    let g = &rec.summary.groups[0];
    assert!((g.mean_lambda_l1 - 1.0).abs() < 1e-9);
}

#[test]
fn strategy_names_parse() {
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        assert_eq!(serde_json::to_value(s).unwrap(), s.name());
    }
    assert!("third_order".parse::<Strategy>().is_err());
}

#[test]
fn vary_m_thresholds_follow_the_rank() {
    let config = VaryMConfig { n_values: vec![3], m_max: 30, runs: 50, q: 14, max_order: 2, ..VaryMConfig::default() };
    let rec = run_vary_m(&config).unwrap();
    assert_eq!(rec.rows.len(), 30);
    for t in &rec.summary.thresholds {
        assert_eq!(t.first_m, t.structural_m_min, "{t:?}");
    }
    let again = run_vary_m(&config).unwrap();
    assert_eq!(rec.rows, again.rows);
}

#[test]
fn records_write_csv_and_json() {
    let rec = run_trotter_sweep(&small_sweep()).unwrap();
    let dir = std::env::temp_dir().join(format!("eigmit-records-{}", std::process::id()));
    let (csv_path, json_path) = rec.write_to_dir(&dir).unwrap();
    assert_eq!(csv_path.file_name().unwrap(), "trotter-sweep-1.csv");
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(header["config"]["n"], 4);
    assert_eq!(lines.next().unwrap(), "p,n_trotter_max,dt_min,m,estimate,exact,error,lambda_l1,lambda_l2");
    assert_eq!(lines.count(), 9);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(json["experiment"], "trotter-sweep");
    assert_eq!(json["summary"]["fits"].as_array().unwrap().len(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn power_law_recovers_noisy_slope() {
    let pts: Vec<(f64, f64)> = (0..8).map(|i| {
        let x = 10.0 * 1.4f64.powi(i);
        (x, 2.0 * x.powf(-4.0) * (1.0 + 0.01 * (i as f64).sin()))
    }).collect();
    assert!((fit_power_law(&pts).unwrap().alpha - 4.0).abs() < 0.05);
}
