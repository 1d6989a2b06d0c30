use std::f64::consts::PI;

use noma_meta::model::{nn_distance_cdf, DistanceLaw, Rayleigh};
use noma_meta::simulator::*;
use noma_meta::{effective_alloc, moment, Allocation, MomentMethod, NetworkParams, Scheme};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

fn defaults() -> (NetworkParams, Allocation) {
    (
        NetworkParams::default(),
        Allocation::new(vec![0.5, 0.5], vec![1.0, 0.5]).unwrap(),
    )
}

#[test]
fn point_count_is_poisson_mean() {
    let p = NetworkParams::default();
    let sim = SimConfig {
        window_radius: 6.0,
        ..SimConfig::default()
    };
    let draws = 10_000;
    let total: usize = (0..draws)
        .map(|k| gen_network(&p, &sim, k).unwrap().interferers.len() + 1)
        .sum();
    let mean = total as f64 / draws as f64;
    let expected = 36.0 * PI;
    assert!(
        (mean - expected).abs() / expected < 0.01,
        "mean count {mean}"
    );
}

#[test]
fn contact_distance_is_rayleigh() {
    let p = NetworkParams::default();
    let sim = SimConfig::default();
    let d: Vec<f64> = (0..10_000)
        .map(|k| {
            let net = gen_network(&p, &sim, k).unwrap();
            net.tagged_bs.dist(&Point::default())
        })
        .collect();
    let ks = ks_distance(&d, |r| Rayleigh { lambda: 10.0 }.cdf(r));
    assert!(ks < 0.02, "ks {ks}");
}

// A BS picked uniformly among those in the inner half of the window is a
// typical point, so its nearest-neighbour distance follows f_ρ.
#[test]
fn typical_bs_neighbour_distance() {
    let p = NetworkParams::default();
    let sim = SimConfig::default();
    let half = 0.5 * sim.window(&p);
    let mut rng = realization_rng(99, 0);
    let mut rho = Vec::new();
    for k in 0..10_000 {
        let net = gen_network(&p, &sim, k).unwrap();
        let mut all = net.interferers.clone();
        all.push(net.tagged_bs);
        let inner: Vec<usize> = (0..all.len())
            .filter(|&j| all[j].dist(&Point::default()) < half)
            .collect();
        let pick = inner[rng.random_range(0..inner.len())];
        let d = (0..all.len())
            .filter(|&j| j != pick)
            .map(|j| all[j].dist(&all[pick]))
            .fold(f64::INFINITY, f64::min);
        rho.push(d);
    }
    let ks = ks_distance(&rho, |x| nn_distance_cdf(&p, x));
    assert!(ks < 0.02, "ks {ks}");
}

// The tagged BS covers the window centre, which favours large cells: its
// neighbour distance is stochastically larger than f_ρ.
#[test]
fn tagged_bs_neighbour_distance_is_size_biased() {
    let p = NetworkParams::default();
    let sim = SimConfig::default();
    let rho: Vec<f64> = (0..10_000)
        .map(|k| gen_network(&p, &sim, k).unwrap().rho)
        .collect();
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let typical = 0.5 / p.lambda().sqrt();
    assert!(mean > 1.05 * typical, "mean {mean} vs {typical}");
}

#[test]
fn enoma_link_distances() {
    let p = NetworkParams::default();
    let sim = SimConfig::default();
    let mut pooled = Vec::new();
    let mut first = Vec::new();
    for k in 0..10_000 {
        let mut rng = realization_rng(sim.rng_seed, k);
        let net = gen_network_with(&p, &sim, &mut rng).unwrap();
        let ues = place_ues_enoma(&net, 2, &mut rng).unwrap();
        let (_, d) = order_ues(&net.tagged_bs, ues);
        pooled.extend_from_slice(&d);
        first.push(d[0]);
    }
    let ray = Rayleigh { lambda: 10.0 };
    let ks = ks_distance(&pooled, |r| ray.cdf(r));
    assert!(ks < 0.02, "pooled ks {ks}");
    // Two users sharing one cell are not independent, so the minimum is
    // only close to the i.i.d. order-statistic law.
    let ks1 = ks_distance(&first, |r| 1.0 - (-2.0 * PI * 10.0 * r * r).exp());
    println!("E-NOMA R_1 vs i.i.d. minimum: KS = {ks1:.4}");
    assert!(ks1 < 0.05, "R_1 ks {ks1}");
}

#[test]
fn cnoma_link_distances_given_rho() {
    let p = NetworkParams::default();
    let sim = SimConfig::default();
    let mut scaled = Vec::new();
    let mut ratio_sum = 0.0;
    let mut count = 0.0;
    for k in 0..10_000 {
        let mut rng = realization_rng(sim.rng_seed, k);
        let net = gen_network_with(&p, &sim, &mut rng).unwrap();
        let ues = place_ues_cnoma(&net, 2, &mut rng);
        let (_, d) = order_ues(&net.tagged_bs, ues);
        assert!(d.iter().all(|&r| r <= 0.5 * net.rho));
        scaled.push(d[0] / net.rho);
        ratio_sum += (d[0] + d[1]) / net.rho;
        count += 2.0;
    }
    // R_1/ρ has cdf 1 − (1 − 4s²)² on [0, ½]
    let ks = ks_distance(&scaled, |s| 1.0 - (1.0 - 4.0 * s * s).powi(2));
    assert!(ks < 0.02, "ks {ks}");
    let mean = ratio_sum / count;
    assert!((mean - 1.0 / 3.0).abs() < 0.005, "mean R/ρ {mean}");
}

#[test]
fn joint_event_matches_product_form() {
    let mut rng = realization_rng(7, 1);
    for &(beta, n) in &[(0.0, 1usize), (0.0, 2), (0.1, 2), (0.2, 2), (0.1, 3)] {
        let p = NetworkParams::new(10.0, 4.0, beta, n).unwrap();
        let a = match n {
            1 => Allocation::new(vec![1.0], vec![1.0]).unwrap(),
            2 => Allocation::new(vec![0.3, 0.7], vec![0.7, 0.4]).unwrap(),
            _ => Allocation::new(vec![0.15, 0.3, 0.55], vec![0.5, 0.4, 0.3]).unwrap(),
        };
        let eff = effective_alloc(&p, &a).unwrap();
        let sim = SimConfig::default();
        for k in 0..3 {
            let real = sample_realization(&p, &sim, Scheme::ENoma, &eff, k).unwrap();
            for i in 1..=n {
                let c = validate_joint_event(&real, &a, &p, i, 10_000, &mut rng).unwrap();
                assert!(
                    (c.empirical - c.reduced).abs() <= 3.0 * c.std_err + 1e-12,
                    "beta={beta} n={n} i={i}: {c:?}"
                );
                assert!((c.reduced - real.ccp[i - 1]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn infeasible_joint_event_never_happens() {
    let p = NetworkParams::default();
    let feasible = Allocation::new(vec![0.5, 0.5], vec![1.0, 0.5]).unwrap();
    let eff = effective_alloc(&p, &feasible).unwrap();
    let real = sample_realization(&p, &SimConfig::default(), Scheme::CNoma, &eff, 3).unwrap();
    let bad = Allocation::new(vec![0.1, 0.9], vec![1.0, 10.0]).unwrap();
    let mut rng = realization_rng(1, 2);
    for i in 1..=2 {
        let c = validate_joint_event(&real, &bad, &p, i, 10_000, &mut rng).unwrap();
        assert_eq!(c.empirical, 0.0);
        assert_eq!(c.reduced, 0.0);
    }
}

#[test]
fn single_user_matches_closed_form() {
    let p = NetworkParams::default().with_n_users(1).unwrap();
    let a = Allocation::new(vec![1.0], vec![1.0]).unwrap();
    let eff = effective_alloc(&p, &a).unwrap();
    let out = simulate(&p, Scheme::ENoma, &eff, &SimConfig::default()).unwrap();
    for b in [1.0, 2.0] {
        let e = empirical_moment(out.rank(1), b).unwrap();
        let an = moment(&p, &a, Scheme::ENoma, MomentMethod::Exact, 1, b).unwrap();
        assert!(
            (e.value - an).abs() <= 3.0 * e.std_err,
            "b={b}: {e:?} vs {an}"
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (p, a) = defaults();
    let eff = effective_alloc(&p, &a).unwrap();
    let sim = SimConfig {
        n_realizations: 600,
        ..SimConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&p, Scheme::ENoma, &eff, &sim).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let mean = |o: &SimOutput| empirical_moment(o.rank(1), 1.0).unwrap().value.to_bits();
    assert_eq!(mean(&one), mean(&run(2)));
}

#[test]
fn empirical_moment_pairs_are_ordered() {
    let (p, a) = defaults();
    let eff = effective_alloc(&p, &a).unwrap();
    let sim = SimConfig {
        n_realizations: 2_000,
        ..SimConfig::default()
    };
    for s in Scheme::ALL {
        let out = simulate(&p, s, &eff, &sim).unwrap();
        for i in 1..=2 {
            let m1 = empirical_moment(out.rank(i), 1.0).unwrap().value;
            let m2 = empirical_moment(out.rank(i), 2.0).unwrap().value;
            assert!(m1 * m1 <= m2 && m2 <= m1);
        }
    }
}

#[test]
fn empirical_helpers() {
    let s = vec![0.7; 1000];
    assert_eq!(empirical_md(&s, &[0.5]).unwrap()[0].value, 1.0);
    assert!((empirical_moment(&s, 2.0).unwrap().value - 0.49).abs() < 1e-12);
    assert!(empirical_moment(&[], 1.0).is_err());
    assert!(empirical_md(&[], &[0.5]).is_err());
    assert!(SimConfig {
        window_radius: 3.0,
        ..SimConfig::default()
    }
    .validate()
    .is_err());
    assert!(SimConfig {
        n_realizations: 0,
        ..SimConfig::default()
    }
    .validate()
    .is_err());
}

// Doubling the window only adds BSs in the annulus [w, 2w]; the inner
// snapshot and the users are kept, so the change in mean CCP is the edge
// effect alone.
fn edge_effect(scheme: Scheme, window_radius: f64, n: u64) -> Vec<(f64, f64)> {
    let (p, a) = defaults();
    let eff = effective_alloc(&p, &a).unwrap();
    let sim = SimConfig {
        window_radius,
        ..SimConfig::default()
    };
    let w = sim.window(&p);
    let ring = Poisson::new(p.lambda() * PI * 3.0 * w * w).unwrap();
    let mut base = vec![Vec::new(); 2];
    let mut wide = vec![Vec::new(); 2];
    for k in 0..n {
        let real = sample_realization(&p, &sim, scheme, &eff, k).unwrap();
        let mut rng = realization_rng(0xabc, k);
        let count = ring.sample(&mut rng) as usize;
        let extra: Vec<Point> = (0..count)
            .map(|_| {
                let r = (w * w * (1.0 + 3.0 * rng.random::<f64>())).sqrt();
                let t = 2.0 * PI * rng.random::<f64>();
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        for i in 0..2 {
            let u = real.ue_positions[i];
            let r = real.ordered_distances[i];
            let outer = ccp_given_network(&extra, &u, r, eff.m_factors[i], p.eta());
            base[i].push(real.ccp[i]);
            wide[i].push(real.ccp[i] * outer);
        }
    }
    (0..2)
        .map(|i| {
            let b = empirical_moment(&base[i], 1.0).unwrap();
            let d = b.value - empirical_moment(&wide[i], 1.0).unwrap().value;
            (d, b.std_err)
        })
        .collect()
}

#[test]
fn doubling_the_window_changes_little() {
    for s in Scheme::ALL {
        for (i, (d, se)) in edge_effect(s, SimConfig::default().window_radius, 20_000)
            .into_iter()
            .enumerate()
        {
            println!("{s} UE{}: edge effect {d:.5} vs SE {se:.5}", i + 1);
            assert!(d >= 0.0 && d < se, "{s} UE{}: {d} vs {se}", i + 1);
        }
    }
}
