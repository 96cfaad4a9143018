//! Dev-only calibration sweep; not part of the deliverable surface.
use spillover_core::*;

fn toy(seed: u64) -> Dataset {
    let specs = vec![
        GaussianSpec::new(vec![1.0, 0.0], 1.45, 100).unwrap(),
        GaussianSpec::new(vec![5.0, 0.0], 0.75, 100).unwrap(),
    ];
    synth_gaussians(&specs, seed).unwrap()
}

/// Dense grid scan of the attack objective over the auto box: attainable
/// minimum and the fraction of the grid containing a spill (f < single-point
/// plateau).
fn grid_scan(seed: u64) {
    let data = toy(seed);
    let model = cluster(&data, Backend::KMeans, seed).unwrap();
    let source = model.assignment.label(0);
    let target = select_target(&data, &model, source);
    let boxed = match select_delta(&data, &model.assignment, target, 0.1, None) {
        Ok(b) => b,
        Err(e) => {
            println!("seed {seed:2}: select_delta ERR {e}");
            return;
        }
    };
    let clusterer = cluster_fn(Backend::KMeans, seed);
    let obj = objective(&data, &clusterer, &model.assignment, target);
    let n1 = model.assignment.cluster_sizes()[source as usize] as f64;
    let n2 = data.n() as f64 - n1;
    let single = -((2.0 * (n1 - 1.0) + 2.0 * n2) as f64).sqrt();

    let (gx, gy) = (60usize, 30usize);
    let (dx, dy) = (boxed.delta()[0], boxed.delta()[1]);
    let mut best = f64::INFINITY;
    let mut best_eps = (0.0, 0.0);
    let mut win = 0usize;
    for ix in 0..gx {
        for iy in 0..gy {
            let ex = -dx + (ix as f64 + 0.5) * 2.0 * dx / gx as f64;
            let ey = -dy + (iy as f64 + 0.5) * 2.0 * dy / gy as f64;
            let f = obj.eval(&[ex, ey]).unwrap();
            if f < best {
                best = f;
                best_eps = (ex, ey);
            }
            if f < single - 1e-9 {
                win += 1;
            }
        }
    }
    println!(
        "seed {seed:2}: single={single:.3} grid_min={best:.3} at {best_eps:?} win_cells={win}/{}",
        gx * gy
    );
}

fn attack_hit_rate(data_seed: u64, budget_total: usize, opt_seeds: std::ops::Range<u64>) {
    let data = toy(data_seed);
    let mut hits = 0;
    let total = opt_seeds.end - opt_seeds.start;
    let t0 = std::time::Instant::now();
    for s in opt_seeds {
        let model = cluster(&data, Backend::KMeans, s).unwrap();
        let source = model.assignment.label(0);
        let mut config = AttackConfig::new(Backend::KMeans, s);
        config.source_cluster = source;
        config.target_cluster = 1 - source;
        config.budget = Some(OptimBudget::default_for_dim(2, s).with_total(budget_total));
        match run_attack(&data, &config) {
            Ok(r) => {
                let ok = !r.spillover.is_empty() && !r.outlier_risk;
                if ok {
                    hits += 1;
                }
            }
            Err(e) => println!("  opt seed {s}: ERR {e}"),
        }
    }
    println!(
        "data_seed {data_seed}: budget {budget_total}: hits {hits}/{total} ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

fn digits_attack(budget_total: usize, seed: u64, source: u8) {
    let t0 = std::time::Instant::now();
    let data = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/digits_1v4.csv"),
        false,
    )
    .unwrap();
    let model = cluster(&data, Backend::Ward, seed).unwrap();
    println!(
        "ward sizes {:?} ({:.2}s)",
        model.assignment.cluster_sizes(),
        t0.elapsed().as_secs_f64()
    );
    let mut config = AttackConfig::new(Backend::Ward, seed);
    config.source_cluster = source;
    config.target_cluster = 1 - source;
    config.budget = Some(OptimBudget::default_for_dim(data.m(), seed).with_total(budget_total));
    match run_attack(&data, &config) {
        Ok(r) => println!(
            "digits source {source} budget {budget_total}: n_s={} rev={} moved={} delta={:.3} depth={:.4} q={:.3} risk={} ({:.1}s)",
            r.spillover.len(),
            r.reverse_spillover.len(),
            r.target_moved,
            r.delta_value,
            r.depth_of_perturbed,
            r.depth_quantile,
            r.outlier_risk,
            t0.elapsed().as_secs_f64()
        ),
        Err(e) => println!("digits source {source}: ERR {e} ({:.1}s)", t0.elapsed().as_secs_f64()),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("all");

    if mode == "digits" {
        for source in [0u8, 1u8] {
            digits_attack(200, 0, source);
        }
    }

    if mode == "grid" || mode == "all" {
        println!("== attainable objective per toy data seed ==");
        for seed in 0..16u64 {
            grid_scan(seed);
        }
    }

    if mode == "hits" || mode == "all" {
        println!("\n== attack hit rate across optimizer seeds (fixed dataset) ==");
        for data_seed in [7u64, 10, 18] {
            for budget in [60usize, 150, 300] {
                attack_hit_rate(data_seed, budget, 0..10);
            }
        }
    }

    if mode == "t1" || mode == "all" {
        println!("\n== theorem1 predicted-spill scan over toy seeds ==");
        let mut found = Vec::new();
        for seed in 0..200u64 {
            let data = toy(seed);
            let model = cluster(&data, Backend::KMeans, seed).unwrap();
            if let Ok(cert) = theorem1_certify(&data, &model) {
                if !cert.predicted_spill.is_empty() {
                    found.push((seed, cert.predicted_spill.len()));
                }
            }
        }
        println!("toy seeds with predicted spill: {found:?}");
    }

    if mode == "t2" || mode == "all" {
        println!("\n== theorem2 calibration ==");
        for (count, gap, std, zeta) in [
            (8usize, 3.0f64, 1.0f64, 0.05f64),
            (8, 3.0, 1.0, 0.1),
            (8, 3.0, 1.0, 0.15),
            (10, 3.0, 1.2, 0.05),
            (10, 3.0, 1.2, 0.1),
            (10, 3.0, 1.2, 0.15),
            (6, 3.0, 1.2, 0.1),
            (6, 2.5, 1.2, 0.1),
            (10, 2.5, 1.2, 0.1),
            (10, 2.5, 1.2, 0.05),
            (12, 2.5, 1.2, 0.05),
            (12, 3.0, 1.2, 0.125),
        ] {
            let mut spilled_runs = 0;
            let mut persisted_runs = 0;
            let mut all_spilled_persisted = 0usize;
            let mut total_spilled_pts = 0usize;
            let mut violations = 0;
            let mut errs = 0;
            for seed in 0..50u64 {
                let specs = vec![
                    GaussianSpec::new(vec![0.0, 0.0], std, count).unwrap(),
                    GaussianSpec::new(vec![gap, 0.0], std, count).unwrap(),
                ];
                let data = synth_gaussians(&specs, seed).unwrap();
                let config = NoisyMetricConfig::new(zeta, seed ^ 0xFEED).unwrap();
                match theorem2_experiment(&data, &config, seed) {
                    Ok(r) => {
                        if !r.spilled_noisy.is_empty() {
                            spilled_runs += 1;
                            total_spilled_pts += r.spilled_noisy.len();
                            let persisted = r.persistence.iter().filter(|p| p.persisted).count();
                            all_spilled_persisted += persisted;
                            if persisted == r.persistence.len() {
                                persisted_runs += 1;
                            }
                            violations +=
                                r.persistence.iter().filter(|p| !p.inequality_holds).count();
                        }
                    }
                    Err(_) => errs += 1,
                }
            }
            println!(
                "count {count:2} gap {gap:.1} std {std:.1} zeta {zeta:.3}: spilled_runs {spilled_runs:2}/50 runs_all_persisted {persisted_runs:2} pts_persisted {all_spilled_persisted}/{total_spilled_pts} ineq_viol {violations} errs {errs}"
            );
        }
    }

    if mode == "t1dbg" {
        for seed in 0..10u64 {
            let specs = vec![
                GaussianSpec::new(vec![1.0, 0.0], 1.45, 25).unwrap(),
                GaussianSpec::new(vec![5.0, 0.0], 0.75, 25).unwrap(),
            ];
            let data = synth_gaussians(&specs, seed).unwrap();
            let model = cluster(&data, Backend::KMeans, seed).unwrap();
            let cert = theorem1_certify(&data, &model).unwrap();
            let sizes = model.assignment.cluster_sizes();
            let mut cands: Vec<_> = cert.candidates.clone();
            cands.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
            println!(
                "seed {seed}: sizes {:?} source_centroid {:?} target {} shift {:?}",
                sizes, cert.source_centroid, cert.target_index, cert.center_shift
            );
            for c in cands.iter().take(3) {
                println!(
                    "   y={} alpha={:.4} bound={:.4} acute={:.4}",
                    c.index, c.alpha, c.bound, c.acute
                );
            }
        }
    }

    if mode == "a2" {
        // Criterion-2 style: random 2-cluster Gaussians, m in {2,5,10},
        // n <= 400; models alternate between kmeans fits and generating
        // labels. Count non-vacuous certificates and verify one-pass.
        use rand::prelude::*;
        let mut nonvacuous = 0;
        let mut total_predicted = 0;
        let mut failures = 0;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = *[2usize, 5, 10].choose(&mut rng).unwrap();
            let n1 = rng.random_range(8..=200);
            let n2 = rng.random_range(8..=200);
            let gap = rng.random_range(2.5..5.0);
            let mut c2 = vec![0.0; m];
            c2[0] = gap;
            let specs = vec![
                GaussianSpec::new(vec![0.0; m], 1.0, n1).unwrap(),
                GaussianSpec::new(c2, rng.random_range(0.6..1.4), n2).unwrap(),
            ];
            let data = synth_gaussians(&specs, seed).unwrap();
            let model = if seed % 2 == 0 {
                cluster(&data, Backend::KMeans, seed).unwrap()
            } else {
                let labels: Vec<u8> = (0..n1).map(|_| 0).chain((0..n2).map(|_| 1)).collect();
                ClusterModel::from_assignment(
                    &data,
                    ClusterAssignment::from_labels(labels).unwrap(),
                )
            };
            match theorem1_certify(&data, &model) {
                Ok(cert) => {
                    if !cert.predicted_spill.is_empty() {
                        nonvacuous += 1;
                        total_predicted += cert.predicted_spill.len();
                    }
                    let v = theorem1_validate(&data, &cert, seed).unwrap();
                    if !v.predicted_all_realized {
                        failures += 1;
                        println!("  seed {seed}: NOT realized {:?}", v.predicted_not_realized);
                    }
                }
                Err(e) => println!("  seed {seed}: ERR {e}"),
            }
        }
        println!(
            "criterion-2 style: nonvacuous {nonvacuous}/100, predicted points {total_predicted}, one-pass failures {failures}"
        );
    }

    if mode == "t2final" {
        for (count, gap, std, zeta, seeds) in [
            (10usize, 3.0f64, 1.2f64, 0.02f64, 400u64),
            (10, 3.0, 1.2, 0.03, 400),
            (10, 3.0, 1.2, 0.04, 400),
            (10, 3.0, 1.2, 0.05, 400),
        ] {
            let mut spilled_runs = 0;
            let mut runs_all_persisted = 0;
            let mut pts_total = 0usize;
            let mut pts_persisted = 0usize;
            let mut violations = 0;
            let mut spilled_in_first_50 = 0;
            for seed in 0..seeds {
                let specs = vec![
                    GaussianSpec::new(vec![0.0, 0.0], std, count).unwrap(),
                    GaussianSpec::new(vec![gap, 0.0], std, count).unwrap(),
                ];
                let data = synth_gaussians(&specs, seed).unwrap();
                let config = NoisyMetricConfig::new(zeta, seed ^ 0xFEED).unwrap();
                if let Ok(r) = theorem2_experiment(&data, &config, seed) {
                    if !r.spilled_noisy.is_empty() {
                        spilled_runs += 1;
                        if seed < 50 {
                            spilled_in_first_50 += 1;
                        }
                        pts_total += r.persistence.len();
                        pts_persisted += r.persistence.iter().filter(|p| p.persisted).count();
                        if r.persistence.iter().all(|p| p.persisted) {
                            runs_all_persisted += 1;
                        }
                        violations += r.persistence.iter().filter(|p| !p.inequality_holds).count();
                    }
                }
            }
            println!(
                "count {count} gap {gap} std {std} zeta {zeta}: spilled {spilled_runs}/{seeds} (first50: {spilled_in_first_50}) all_persisted {runs_all_persisted} pts {pts_persisted}/{pts_total} violations {violations}"
            );
        }
    }

    if mode == "t1small" || mode == "all" {
        println!("\n== theorem1 predicted-spill scan over configurations ==");
        for (count, c2x, s1, s2) in [
            (8usize, 5.0f64, 1.45f64, 0.75f64),
            (12, 5.0, 1.45, 0.75),
            (16, 5.0, 1.45, 0.75),
            (25, 5.0, 1.45, 0.75),
            (12, 4.0, 1.3, 0.9),
            (16, 4.0, 1.3, 0.9),
            (25, 4.0, 1.3, 0.9),
            (40, 4.0, 1.3, 0.9),
            (25, 3.5, 1.2, 1.0),
            (40, 3.5, 1.2, 1.0),
        ] {
            let mut found = Vec::new();
            for seed in 0..300u64 {
                let specs = vec![
                    GaussianSpec::new(vec![1.0, 0.0], s1, count).unwrap(),
                    GaussianSpec::new(vec![c2x, 0.0], s2, count).unwrap(),
                ];
                let data = synth_gaussians(&specs, seed).unwrap();
                let model = cluster(&data, Backend::KMeans, seed).unwrap();
                if let Ok(cert) = theorem1_certify(&data, &model) {
                    if !cert.predicted_spill.is_empty() {
                        let v = theorem1_validate(&data, &cert, seed).unwrap();
                        found.push((seed, cert.predicted_spill.len(), v.predicted_all_realized));
                    }
                }
            }
            println!(
                "count {count:2} c2x {c2x:.1} stds ({s1},{s2}): {} seeds with predicted spill, first: {:?}",
                found.len(),
                found.iter().take(5).collect::<Vec<_>>()
            );
        }
    }
}
