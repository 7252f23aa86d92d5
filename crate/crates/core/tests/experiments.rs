// SPDX-License-Identifier: MIT OR Apache-2.0

use onecp::experiments::{run_experiment, ExperimentId, ExperimentRequest, Overrides, ResultTable};

const SEED: u64 = 0x5EED_0003;

fn run(id: ExperimentId, o: Overrides) -> ResultTable {
    run_experiment(&ExperimentRequest::new(id, SEED).with(o)).unwrap()
}

fn small(id: ExperimentId) -> Overrides {
    use ExperimentId::*;
    let mut o = Overrides::default();
    match id {
        E1 | E3 => {
            o.n = Some(200);
            o.calib_reps = Some(200);
        }
        E2 => {
            o.n = Some(500);
            o.reps = Some(300);
            o.calib_reps = Some(200);
        }
        E4 => {
            o.n = Some(100);
            o.reps = Some(20);
            o.calib_reps = Some(200);
        }
        E5 => o.reps = Some(30),
        E6 | E10 => {
            o.reps = Some(100);
            o.calib_reps = Some(200);
        }
        E7 => {}
        E8 | E9 | E11 => {
            o.n = Some(100);
            o.reps = Some(100);
            o.calib_reps = Some(200);
        }
        E12 => {
            o.reps = Some(100);
            o.calib_reps = Some(200);
            o.rho = Some(0.5);
        }
        E13 => o.n = Some(200),
    }
    o
}

#[test]
fn every_experiment_is_reproducible_and_rectangular() {
    for id in ExperimentId::ALL {
        let a = run(id, small(id));
        let b = run(id, small(id));
        assert_eq!(
            a.to_csv_string().unwrap(),
            b.to_csv_string().unwrap(),
            "{id}"
        );
        assert!(!a.rows().is_empty(), "{id}");
        assert!(a.rows().iter().all(|r| r.len() == a.columns().len()));
        assert_eq!(a.footer_value("experiment"), Some(id.to_string().as_str()));
        assert!(a.footer_value("version").is_some());
    }
}

#[test]
fn illegal_overrides_are_rejected() {
    let bad = [
        (
            ExperimentId::E1,
            Overrides {
                rho: Some(0.2),
                ..Default::default()
            },
        ),
        (
            ExperimentId::E4,
            Overrides {
                q0: Some(1.5),
                ..Default::default()
            },
        ),
        (
            ExperimentId::E8,
            Overrides {
                rho: Some(-1.0),
                ..Default::default()
            },
        ),
        (
            ExperimentId::E11,
            Overrides {
                minseg: Some(1),
                n: Some(50),
                reps: Some(10),
                calib_reps: Some(100),
                ..Default::default()
            },
        ),
        (
            ExperimentId::E6,
            Overrides {
                calib_reps: Some(10),
                ..Default::default()
            },
        ),
    ];
    for (id, o) in bad {
        assert!(
            run_experiment(&ExperimentRequest::new(id, 1).with(o)).is_err(),
            "{id}"
        );
    }
}

#[test]
fn null_false_positives_sit_near_the_ends() {
    let t = run(
        ExperimentId::E2,
        Overrides {
            reps: Some(45_000),
            ..Default::default()
        },
    );
    let mut edge = 0.0;
    let mut total = 0.0;
    for row in t.rows() {
        let lo = t.get_f64(row, "bin_lo").unwrap();
        let k = t.get_f64(row, "count").unwrap();
        total += k;
        if !(0.1 - 1e-9..0.9 - 1e-9).contains(&lo) {
            edge += k;
        }
    }
    assert!(total >= 2000.0, "only {total} detections");
    assert!(edge / total > 0.4, "edge fraction {}", edge / total);
}

#[test]
fn mean_and_variance_null_detections_crowd_the_ends() {
    let t = run(
        ExperimentId::E11,
        Overrides {
            reps: Some(20_000),
            ..Default::default()
        },
    );
    let edge = t.rows_where("section", "edge_fraction").next().unwrap();
    let f = t.get_f64(edge, "empirical").unwrap();
    assert!((f - 0.6).abs() <= 0.1, "edge fraction {f}");
    let rate = t
        .get_f64(
            t.rows_where("section", "fp_rate").next().unwrap(),
            "empirical",
        )
        .unwrap();
    assert!((rate - 0.05).abs() < 0.01, "false-positive rate {rate}");
    // Mid-series LR is close to chi-squared with two degrees of freedom.
    for row in t.rows_where("section", "qq") {
        let tau = t.get_f64(row, "tau").unwrap();
        let p = t.get_f64(row, "prob").unwrap();
        if tau == 500.0 && (0.1..=0.9).contains(&p) {
            let (e, r) = (
                t.get_f64(row, "empirical").unwrap(),
                t.get_f64(row, "reference").unwrap(),
            );
            assert!((e - r).abs() < 0.15 * r + 0.05, "p={p}: {e} vs {r}");
        }
    }
}

#[test]
fn ar1_likelihood_ratio_and_cusum_part_only_for_strong_dependence() {
    let t = run(ExperimentId::E12, Overrides::default());
    for row in t.rows() {
        let rho = t.get_f64(row, "rho").unwrap();
        let gap =
            (t.get_f64(row, "power_lr").unwrap() - t.get_f64(row, "power_cusum").unwrap()).abs();
        if rho <= 0.5 + 1e-9 {
            assert!(gap <= 0.05, "rho={rho} gap={gap}");
        }
        if rho >= 0.8 - 1e-9 {
            assert!(gap > 0.10, "rho={rho} gap={gap}");
        }
    }
}

#[test]
fn power_bound_is_below_simulated_power() {
    let t = run(
        ExperimentId::E4,
        Overrides {
            reps: Some(400),
            ..Default::default()
        },
    );
    for row in t.rows() {
        let bound = t.get_f64(row, "power_bound").unwrap();
        let emp = t.get_f64(row, "empirical_power").unwrap();
        assert!(bound <= emp + 0.05, "{bound} > {emp}");
    }
}

#[test]
fn slope_scan_is_smoother_than_mean_scan() {
    let t = run(ExperimentId::E13, Overrides::default());
    let r = t.rows_where("section", "roughness").next().unwrap();
    assert!(t.get_f64(r, "a").unwrap() < 0.5 * t.get_f64(r, "b").unwrap());
}
