//! Implementations of the four subcommands.
//!
//! Every command derives per-stage seeds from the run seed with stable
//! labels, so output is a pure function of the resolved configuration.
//! Files are written with shortest-round-trip float formatting, making
//! reruns byte-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use superext::domain::Grid;
use superext::empirical::{block_count, partial_maxima, CadlagMaxProcess};
use superext::fdd::{exponent_measure, fdd_empirical, fdd_probability, FddQuery};
use superext::gauss::{lognormal_process, sample_cov, CovarianceFamily};
use superext::ppp::{
    running_max, sample_point_measure, BrownResnickSampler, DegenerateSampler, SpectralSampler,
};
use superext::rng::{derive, substream};
use superext::stattest::{
    test_markov, test_max_stability, test_order_stats_limit, test_self_similarity, TestReport,
};

use crate::config::{RunConfig, ThresholdSet};
use crate::error::{CliError, Result};

const STAGE_SIMULATE_LIMIT: u64 = 1;
const STAGE_SIMULATE_PRELIMIT: u64 = 2;
const STAGE_CONVERGENCE_MEASURE: u64 = 10;
const STAGE_CONVERGENCE_ARRAY: u64 = 11;
const STAGE_CONVERGENCE_DIAG: u64 = 12;
const STAGE_TEST_BASE: u64 = 30;
const STAGE_FDD_THEORY: u64 = 50;
const STAGE_FDD_EMPIRICAL: u64 = 51;

/// Pair draws used for the correlation diagnostics of `convergence`.
const DIAGNOSTIC_DRAWS: usize = 20_000;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_grid_csv(path: &Path, grid: &Grid) -> Result<()> {
    let mut w = create(path)?;
    if grid.dimension() == 1 {
        writeln!(w, "site,x")?;
        for s in 0..grid.len() {
            writeln!(w, "{s},{}", grid.coord(s)[0])?;
        }
    } else {
        writeln!(w, "site,x,y")?;
        for s in 0..grid.len() {
            let c = grid.coord(s);
            writeln!(w, "{s},{},{}", c[0], c[1])?;
        }
    }
    Ok(())
}

fn write_paths_csv(path: &Path, paths: &[CadlagMaxProcess]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "realization,time,site,value")?;
    for (r, p) in paths.iter().enumerate() {
        for (ti, &u) in p.times().iter().enumerate() {
            for site in 0..p.sites() {
                writeln!(w, "{r},{u},{site},{}", p.value(ti, site))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    grid_sites: usize,
    time_points: usize,
    atoms_per_measure: usize,
    limit_realizations: usize,
    truncation_bound_max: Option<f64>,
    prelimit_realizations: usize,
    prelimit_array_size: Option<u64>,
}

/// `simulate`: realize paths of the limit process and/or the triangular
/// array on the configured time grid.
///
/// Writes `grid.csv`, `limit.csv` / `prelimit.csv` (side-dependent),
/// `atoms.jsonl` (the first realized point measure), and
/// `simulate_report.json`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<bool> {
    cfg.validate_common()?;
    if cfg.simulate_side.includes_prelimit() {
        cfg.require_unit_alpha("simulating the triangular array")?;
    }
    let seed = cfg.seed()?;
    let grid = cfg.build_grid()?;
    write_grid_csv(&out.join("grid.csv"), &grid)?;

    let mut report = SimulateReport {
        grid_sites: grid.len(),
        time_points: cfg.time_grid.len(),
        atoms_per_measure: cfg.truncation_atoms,
        limit_realizations: 0,
        truncation_bound_max: None,
        prelimit_realizations: 0,
        prelimit_array_size: None,
    };

    if cfg.simulate_side.includes_limit() {
        let sampler = cfg.build_sampler(&grid)?;
        let stage = derive(seed, STAGE_SIMULATE_LIMIT);
        let mut paths = Vec::with_capacity(cfg.realizations);
        let mut bound_max = 0.0f64;
        for r in 0..cfg.realizations {
            let mut rng = substream(stage, r as u64);
            let pm =
                sample_point_measure(&*sampler, cfg.horizon, cfg.truncation_atoms, &mut rng)?;
            bound_max = bound_max.max(pm.truncation_bound());
            if r == 0 {
                pm.write_jsonl(create(&out.join("atoms.jsonl"))?)?;
            }
            paths.push(running_max(&pm, &cfg.time_grid)?);
        }
        write_paths_csv(&out.join("limit.csv"), &paths)?;
        report.limit_realizations = cfg.realizations;
        report.truncation_bound_max = Some(bound_max);
    }

    if cfg.simulate_side.includes_prelimit() {
        let family = CovarianceFamily::new(cfg.build_variogram()?, cfg.prelimit_n)?;
        let cov = family.matrix(&grid);
        let max_u = *cfg.time_grid.last().expect("validated nonempty");
        let members = block_count(cfg.prelimit_n, max_u);
        let stage = derive(seed, STAGE_SIMULATE_PRELIMIT);
        let mut paths = Vec::with_capacity(cfg.realizations);
        for r in 0..cfg.realizations {
            let batch_seed = derive(stage, r as u64);
            let raw = sample_cov(&cov, members, batch_seed)?;
            let batch = raw
                .iter()
                .map(|z| lognormal_process(z, cfg.prelimit_n))
                .collect::<superext::Result<Vec<_>>>()?;
            paths.push(partial_maxima(&batch, cfg.prelimit_n, &cfg.time_grid)?);
        }
        write_paths_csv(&out.join("prelimit.csv"), &paths)?;
        report.prelimit_realizations = cfg.realizations;
        report.prelimit_array_size = Some(cfg.prelimit_n);
    }

    let mut w = create(&out.join("simulate_report.json"))?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    println!(
        "simulate: wrote {} realization(s) to {}",
        cfg.realizations,
        out.display()
    );
    Ok(true)
}

fn validate_set(set: &ThresholdSet, grid: &Grid, index: usize) -> Result<()> {
    if set.sites.is_empty() || set.sites.len() != set.thresholds.len() {
        return Err(CliError::config(format!(
            "convergence set {index}: {} sites with {} thresholds",
            set.sites.len(),
            set.thresholds.len()
        )));
    }
    for &s in &set.sites {
        if s >= grid.len() {
            return Err(CliError::config(format!(
                "convergence set {index}: site {s} out of range for a {}-site grid",
                grid.len()
            )));
        }
    }
    for &z in &set.thresholds {
        if !(z.is_finite() && z > 0.0) {
            return Err(CliError::config(format!(
                "convergence set {index}: thresholds must be positive, got {z}"
            )));
        }
    }
    Ok(())
}

/// `convergence`: compare `n * P[array exceeds the thresholds somewhere]`
/// against the exponent measure of the limit, per array size and threshold
/// set.
///
/// The triangular array's limit carries variogram-driven spectral profiles,
/// so the exponent measure is always computed under those, regardless of the
/// configured spectral model. Writes `convergence.csv` and
/// `correlation_diagnostics.csv`.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<bool> {
    cfg.validate_common()?;
    cfg.require_unit_alpha("the convergence comparison")?;
    if cfg.n_list.is_empty() {
        return Err(CliError::config("n_list must be nonempty"));
    }
    if cfg.convergence_sets.is_empty() {
        return Err(CliError::config("convergence_sets must be nonempty"));
    }
    if cfg.prelimit_draws < 2 || cfg.measure_draws < 2 {
        return Err(CliError::config(
            "prelimit_draws and measure_draws must be at least 2",
        ));
    }
    let seed = cfg.seed()?;
    let grid = cfg.build_grid()?;
    let vario = cfg.build_variogram()?;
    let sampler = BrownResnickSampler::new(&grid, &vario, 1.0)?;

    let mut w = create(&out.join("convergence.csv"))?;
    writeln!(
        w,
        "set,n,scaled_probability,scaled_se,exponent_measure,measure_se,abs_gap,combined_se"
    )?;
    for (set_idx, set) in cfg.convergence_sets.iter().enumerate() {
        validate_set(set, &grid, set_idx)?;
        let measure_stage = derive(derive(seed, STAGE_CONVERGENCE_MEASURE), set_idx as u64);
        let nu = exponent_measure(
            &sampler,
            &set.sites,
            &set.thresholds,
            cfg.measure_draws,
            measure_stage,
        )?;
        for (n_idx, &n) in cfg.n_list.iter().enumerate() {
            let family = CovarianceFamily::new(vario, n)
                .map_err(|e| CliError::config(format!("n_list entry {n}: {e}")))?;
            let cov = family.matrix_on(&grid, &set.sites)?;
            let stage = derive(
                derive(seed, STAGE_CONVERGENCE_ARRAY),
                (set_idx * 1024 + n_idx) as u64,
            );
            let draws = sample_cov(&cov, cfg.prelimit_draws, stage)?;
            let mut hits = 0u64;
            for z in &draws {
                let x = lognormal_process(z, n)?;
                if x.iter().zip(set.thresholds.iter()).any(|(v, t)| v >= t) {
                    hits += 1;
                }
            }
            let count = cfg.prelimit_draws as f64;
            let p = hits as f64 / count;
            let scaled = n as f64 * p;
            let scaled_se = n as f64 * (p * (1.0 - p) / count).sqrt();
            let gap = (scaled - nu.value).abs();
            let combined_se = (scaled_se * scaled_se + nu.se * nu.se).sqrt();
            writeln!(
                w,
                "{set_idx},{n},{scaled},{scaled_se},{},{},{gap},{combined_se}",
                nu.value, nu.se
            )?;
        }
    }
    drop(w);

    let mut d = create(&out.join("correlation_diagnostics.csv"))?;
    writeln!(d, "n,site_a,site_b,model_correlation,sample_correlation")?;
    if grid.len() > 1 {
        let far = grid.len() - 1;
        let origin = grid.origin();
        let site_a = origin.min(far);
        let site_b = origin.max(far);
        for (n_idx, &n) in cfg.n_list.iter().enumerate() {
            let family = CovarianceFamily::new(vario, n)
                .map_err(|e| CliError::config(format!("n_list entry {n}: {e}")))?;
            let cov = family.matrix_on(&grid, &[site_a, site_b])?;
            let stage = derive(derive(seed, STAGE_CONVERGENCE_DIAG), n_idx as u64);
            let pairs = sample_cov(&cov, DIAGNOSTIC_DRAWS, stage)?;
            let count = pairs.len() as f64;
            let mean0: f64 = pairs.iter().map(|p| p[0]).sum::<f64>() / count;
            let mean1: f64 = pairs.iter().map(|p| p[1]).sum::<f64>() / count;
            let (mut c00, mut c11, mut c01) = (0.0f64, 0.0f64, 0.0f64);
            for p in &pairs {
                c00 += (p[0] - mean0) * (p[0] - mean0);
                c11 += (p[1] - mean1) * (p[1] - mean1);
                c01 += (p[0] - mean0) * (p[1] - mean1);
            }
            let sample_corr = c01 / (c00 * c11).sqrt();
            writeln!(
                d,
                "{n},{site_a},{site_b},{},{sample_corr}",
                family.correlation(&grid, site_a, site_b)
            )?;
        }
    }
    println!("convergence: wrote comparison tables to {}", out.display());
    Ok(true)
}

/// `test`: run the distributional verification suite and report pass/fail.
///
/// Property tests (max stability, self-similarity, restart decomposition)
/// run under both spectral laws; the order-statistics convergence tests run
/// under the configured one. Writes `test_reports.jsonl`; the process exits
/// nonzero when any test fails.
pub fn cmd_test(cfg: &RunConfig, out: &Path) -> Result<bool> {
    cfg.validate_common()?;
    if !cfg.order_ranks.is_empty() {
        cfg.require_unit_alpha("the order-statistics comparison")?;
    }
    if cfg.test_samples < 25 {
        return Err(CliError::config(format!(
            "test_samples must be at least 25, got {}",
            cfg.test_samples
        )));
    }
    let seed = cfg.seed()?;
    let grid = cfg.build_grid()?;
    let vario = cfg.build_variogram()?;
    let far = grid.len() - 1;
    let u = cfg.horizon;
    let half = cfg.horizon / 2.0;
    let atoms = cfg.truncation_atoms;

    let degenerate = DegenerateSampler::new(grid.len(), cfg.alpha)?;
    let variogram_driven = BrownResnickSampler::new(&grid, &vario, cfg.alpha)?;
    let samplers: [(&str, &dyn SpectralSampler); 2] = [
        ("constant profiles", &degenerate),
        ("variogram profiles", &variogram_driven),
    ];

    let mut reports: Vec<TestReport> = Vec::new();
    let mut stage = STAGE_TEST_BASE;
    let mut next_seed = || {
        let s = derive(seed, stage);
        stage += 1;
        s
    };
    for (name, sampler) in samplers {
        for m in [2usize, 3] {
            let mut r =
                test_max_stability(sampler, atoms, m, u, far, cfg.test_samples, next_seed())?;
            r.description = format!("{name}: {}", r.description);
            reports.push(r);
        }
        for c in [0.5f64, 2.0] {
            let mut r =
                test_self_similarity(sampler, atoms, c, u, far, cfg.test_samples, next_seed())?;
            r.description = format!("{name}: {}", r.description);
            reports.push(r);
        }
        let mut r = test_markov(sampler, atoms, half, half, far, cfg.test_samples, next_seed())?;
        r.description = format!("{name}: {}", r.description);
        reports.push(r);
    }

    if !cfg.order_ranks.is_empty() {
        let sampler = cfg.build_sampler(&grid)?;
        for &rank in &cfg.order_ranks {
            let batch = test_order_stats_limit(
                &*sampler,
                atoms,
                &cfg.n_list,
                rank,
                u,
                far,
                cfg.test_samples,
                next_seed(),
            )?;
            reports.extend(batch);
        }
    }

    let mut w = create(&out.join("test_reports.jsonl"))?;
    let mut all_pass = true;
    for report in &reports {
        serde_json::to_writer(&mut w, report).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(b"\n")?;
        all_pass &= report.pass;
        println!(
            "{} {} (statistic {:.5} vs threshold {:.5}, {} samples)",
            if report.pass { "PASS" } else { "FAIL" },
            report.description,
            report.statistic,
            report.threshold,
            report.n_samples
        );
    }
    println!(
        "test: {} of {} checks passed",
        reports.iter().filter(|r| r.pass).count(),
        reports.len()
    );
    Ok(all_pass)
}

#[derive(Serialize)]
struct FddResult {
    query: FddQuery,
    theoretical: superext::fdd::FddProbability,
    empirical: superext::fdd::Estimate,
    abs_gap: f64,
    combined_se: f64,
}

/// `fdd`: evaluate one joint lower-orthant query both ways — through the
/// exponent-measure factorization and by counting realized paths — and
/// report the gap. Writes `fdd_result.json`.
pub fn cmd_fdd(cfg: &RunConfig, out: &Path, query_path: &Path) -> Result<bool> {
    cfg.validate_common()?;
    if cfg.realizations < 2 {
        return Err(CliError::config(
            "fdd needs at least 2 realizations for the empirical side",
        ));
    }
    if cfg.measure_draws < 2 {
        return Err(CliError::config("measure_draws must be at least 2"));
    }
    let seed = cfg.seed()?;
    let grid = cfg.build_grid()?;
    let query: FddQuery = serde_json::from_reader(BufReader::new(
        File::open(query_path).map_err(|e| {
            CliError::config(format!("cannot read query {}: {e}", query_path.display()))
        })?,
    ))
    .map_err(|e| CliError::config(format!("cannot parse query {}: {e}", query_path.display())))?;
    query.validate(grid.len())?;
    if let Some(&last) = query.times.last() {
        if last > cfg.horizon {
            return Err(CliError::config(format!(
                "query time {last} beyond the horizon {}",
                cfg.horizon
            )));
        }
    }

    let sampler = cfg.build_sampler(&grid)?;
    let theoretical = fdd_probability(
        &*sampler,
        &query,
        cfg.measure_draws,
        derive(seed, STAGE_FDD_THEORY),
    )?;
    let stage = derive(seed, STAGE_FDD_EMPIRICAL);
    let mut paths = Vec::with_capacity(cfg.realizations);
    for r in 0..cfg.realizations {
        let mut rng = substream(stage, r as u64);
        let pm = sample_point_measure(&*sampler, cfg.horizon, cfg.truncation_atoms, &mut rng)?;
        paths.push(running_max(&pm, &query.times)?);
    }
    let empirical = fdd_empirical(&paths, &query)?;

    let result = FddResult {
        abs_gap: (empirical.value - theoretical.probability).abs(),
        combined_se: (empirical.se * empirical.se + theoretical.se * theoretical.se).sqrt(),
        query,
        theoretical,
        empirical,
    };
    let mut w = create(&out.join("fdd_result.json"))?;
    serde_json::to_writer_pretty(&mut w, &result).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    println!(
        "fdd: theoretical {} +- {}, empirical {} +- {} (gap {})",
        result.theoretical.probability,
        result.theoretical.se,
        result.empirical.value,
        result.empirical.se,
        result.abs_gap
    );
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Side, SpectralModel};
    use std::fs;

    fn small_config(seed: u64) -> RunConfig {
        RunConfig {
            seed: Some(seed),
            grid_resolution: 3,
            truncation_atoms: 100,
            realizations: 20,
            test_samples: 400,
            measure_draws: 2000,
            prelimit_draws: 2000,
            n_list: vec![10, 100],
            // Low ranks: their distance to the limit shrinks fast enough in
            // n to stand clear of two-sample noise at these sample counts.
            order_ranks: vec![1, 2],
            time_grid: vec![0.0, 0.5, 1.0],
            ..RunConfig::default()
        }
    }

    #[test]
    fn simulate_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(5);
        cfg.simulate_side = Side::Both;
        assert!(cmd_simulate(&cfg, dir.path()).unwrap());
        for name in [
            "grid.csv",
            "limit.csv",
            "prelimit.csv",
            "atoms.jsonl",
            "simulate_report.json",
        ] {
            let path = dir.path().join(name);
            assert!(path.exists(), "{name} missing");
            assert!(fs::metadata(&path).unwrap().len() > 0, "{name} empty");
        }
        let limit = fs::read_to_string(dir.path().join("limit.csv")).unwrap();
        let lines: Vec<&str> = limit.lines().collect();
        assert_eq!(lines[0], "realization,time,site,value");
        // 20 realizations x 3 times x 3 sites data rows.
        assert_eq!(lines.len(), 1 + 20 * 3 * 3);
    }

    #[test]
    fn simulate_prelimit_requires_unit_alpha() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(5);
        cfg.simulate_side = Side::Prelimit;
        cfg.alpha = 2.0;
        let err = cmd_simulate(&cfg, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
        // The limit side is fine with any positive alpha.
        cfg.simulate_side = Side::Limit;
        assert!(cmd_simulate(&cfg, dir.path()).is_ok());
    }

    #[test]
    fn convergence_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(6);
        assert!(cmd_convergence(&cfg, dir.path()).unwrap());
        let table = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "set,n,scaled_probability,scaled_se,exponent_measure,measure_se,abs_gap,combined_se"
        );
        assert_eq!(lines.len(), 1 + 2, "one row per (set, n) pair");
        let diag =
            fs::read_to_string(dir.path().join("correlation_diagnostics.csv")).unwrap();
        assert_eq!(diag.lines().count(), 1 + 2, "one diagnostic row per n");
    }

    #[test]
    fn test_command_reports_and_passes_on_small_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(3);
        let all_pass = cmd_test(&cfg, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("test_reports.jsonl")).unwrap();
        let reports: Vec<TestReport> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        // 5 property tests per sampler, plus (1 + 2 sizes) per rank.
        assert_eq!(reports.len(), 10 + 2 * 3);
        assert!(
            all_pass,
            "expected the suite to pass at this seed; failures: {:?}",
            reports
                .iter()
                .filter(|r| !r.pass)
                .map(|r| &r.description)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn fdd_computes_both_sides() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(8);
        cfg.spectral_model = SpectralModel::Degenerate;
        cfg.realizations = 400;
        let query_path = dir.path().join("query.json");
        fs::write(
            &query_path,
            "{\"times\": [0.5, 1.0], \"sites\": [0, 2], \
             \"thresholds\": [[1.0, 1.2], [0.8, 1.5]]}",
        )
        .unwrap();
        assert!(cmd_fdd(&cfg, dir.path(), &query_path).unwrap());
        let text = fs::read_to_string(dir.path().join("fdd_result.json")).unwrap();
        let result: serde_json::Value = serde_json::from_str(&text).unwrap();
        let theo = result["theoretical"]["probability"].as_f64().unwrap();
        let emp = result["empirical"]["value"].as_f64().unwrap();
        let se = result["combined_se"].as_f64().unwrap();
        assert!(theo > 0.0 && theo < 1.0);
        assert!(
            (theo - emp).abs() <= 5.0 * se.max(0.01),
            "sides disagree: theoretical {theo}, empirical {emp}"
        );
    }

    #[test]
    fn fdd_rejects_queries_beyond_the_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(9);
        let query_path = dir.path().join("query.json");
        fs::write(
            &query_path,
            "{\"times\": [2.5], \"sites\": [0], \"thresholds\": [[1.0]]}",
        )
        .unwrap();
        let err = cmd_fdd(&cfg, dir.path(), &query_path).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }
}
