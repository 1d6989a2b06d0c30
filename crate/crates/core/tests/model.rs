use approx::assert_relative_eq;
use noma_meta::model::*;
use noma_meta::quad::{integrate, QuadConfig};
use noma_meta::Error;
use proptest::prelude::*;

fn grid(max: f64) -> impl Iterator<Item = f64> {
    (0..100).map(move |k| max * (k as f64 + 0.5) / 100.0)
}

#[test]
fn ordered_pdf_expansions_agree() {
    let ray = Rayleigh { lambda: 10.0 };
    let disk = InDisk { rho: 0.4 };
    for n in 1..=6 {
        for i in 1..=n {
            for r in grid(0.5) {
                let direct = ordered_pdf(i, n, &ray, r).unwrap();
                let weak = ordered_pdf_weak_expansion(i, n, &ray, r).unwrap();
                let strong = ordered_pdf_strong_expansion(i, n, &ray, r).unwrap();
                assert!((direct - weak).abs() <= 1e-10, "weak n={n} i={i} r={r}");
                assert!((direct - strong).abs() <= 1e-10, "strong n={n} i={i} r={r}");
            }
            for r in grid(0.2) {
                let direct = ordered_pdf(i, n, &disk, r).unwrap();
                let weak = ordered_pdf_weak_expansion(i, n, &disk, r).unwrap();
                let strong = ordered_pdf_strong_expansion(i, n, &disk, r).unwrap();
                let cnoma = ordered_pdf_cnoma(i, n, disk.rho, r).unwrap();
                assert!((direct - weak).abs() <= 1e-10);
                assert!((direct - strong).abs() <= 1e-10);
                assert!((direct - cnoma).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn ordered_pdfs_partition_the_base_density() {
    let ray = Rayleigh { lambda: 10.0 };
    for n in 1..=6 {
        for r in grid(0.5) {
            let total: f64 = (1..=n).map(|i| ordered_pdf(i, n, &ray, r).unwrap()).sum();
            assert_relative_eq!(total, n as f64 * ray.pdf(r), max_relative = 1e-12);
        }
    }
}

#[test]
fn cnoma_density_integrates_to_one() {
    let cfg = QuadConfig::default();
    for n in 1..=4 {
        for i in 1..=n {
            let mass = integrate(
                |r| ordered_pdf_cnoma(i, n, 0.3, r).unwrap(),
                0.0,
                0.15,
                &cfg,
            )
            .unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-10);
        }
    }
    assert_eq!(ordered_pdf_cnoma(1, 2, 0.3, 0.2).unwrap(), 0.0);
}

#[test]
fn nearest_neighbour_law() {
    let p = NetworkParams::default();
    let q = nn_distance_quantile(&p, 0.7).unwrap();
    assert_relative_eq!(nn_distance_cdf(&p, q), 0.7, max_relative = 1e-13);
    assert!(nn_distance_pdf(&p, -1.0).is_err());
}

#[test]
fn allocation_validation() {
    assert!(Allocation::new(vec![0.5, 0.4], vec![1.0, 1.0]).is_err());
    assert!(Allocation::new(vec![0.5, 0.5], vec![1.0]).is_err());
    assert!(Allocation::new(vec![1.5, -0.5], vec![1.0, 1.0]).is_err());
    assert!(Allocation::new(vec![0.5, 0.5], vec![0.0, 1.0]).is_err());
    let a = Allocation::from_db(vec![0.5, 0.5], &[0.0, -3.0]).unwrap();
    assert_relative_eq!(
        a.thresholds()[1],
        0.501_187_233_627_272_2,
        max_relative = 1e-12
    );
    assert!(NetworkParams::new(0.0, 4.0, 0.0, 2).is_err());
    assert!(NetworkParams::new(10.0, 2.0, 0.0, 2).is_err());
    assert!(NetworkParams::new(10.0, 4.0, 1.5, 2).is_err());
    assert!(NetworkParams::new(10.0, 4.0, 0.0, 0).is_err());
}

#[test]
fn infeasible_margin_is_reported() {
    let p = NetworkParams::default();
    let a = Allocation::new(vec![0.1, 0.9], vec![1.0, 10.0]).unwrap();
    match effective_alloc(&p, &a) {
        Err(Error::InfeasibleAllocation { rank, margin }) => {
            assert_eq!(rank, 2);
            assert_relative_eq!(margin, -0.1, max_relative = 1e-12);
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

fn allocation_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=5).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.01f64..3.0, n),
            0.0f64..0.5,
        )
    })
}

proptest! {
    #[test]
    fn decoding_factors_nonincreasing((n, raw, th, beta) in allocation_strategy()) {
        let s: f64 = raw.iter().sum();
        let powers: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let a = Allocation::new(powers, th).unwrap();
        let p = NetworkParams::new(10.0, 4.0, beta, n).unwrap();
        if let Ok(e) = effective_alloc(&p, &a) {
            for i in 1..n {
                prop_assert!(e.m_factor(i) >= e.m_factor(i + 1));
            }
            for i in 1..=n {
                prop_assert_eq!(decoding_factor(&p, &a, i).unwrap(), e.m_factor(i));
            }
        }
    }

    #[test]
    fn shrinking_thresholds_keeps_feasibility((n, raw, th, beta) in allocation_strategy(), k in 0.01f64..1.0) {
        let s: f64 = raw.iter().sum();
        let powers: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let p = NetworkParams::new(10.0, 4.0, beta, n).unwrap();
        let a = Allocation::new(powers.clone(), th.clone()).unwrap();
        let scaled = Allocation::new(powers, th.iter().map(|t| t * k).collect()).unwrap();
        if effective_alloc(&p, &a).is_ok() {
            prop_assert!(effective_alloc(&p, &scaled).is_ok());
        }
    }

    #[test]
    fn residual_sic_never_helps((n, raw, th, beta) in allocation_strategy()) {
        let s: f64 = raw.iter().sum();
        let powers: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let a = Allocation::new(powers, th).unwrap();
        let perfect = effective_margins(0.0, &a);
        let imperfect = effective_margins(beta, &a);
        for (p0, pb) in perfect.iter().zip(&imperfect) {
            prop_assert!(pb <= p0);
        }
        prop_assert_eq!(perfect[n - 1], imperfect[n - 1]);
    }
}
