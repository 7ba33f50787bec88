//! Cluster structure of a cw pair line from two slightly mismatched cavity
//! combs. With mean free spectral range F̄ and mismatch ΔF, doubly resonant
//! mode pairs recur every 2F̄ in ω−, and groups of such pairs (clusters)
//! recur every 2F̄²/ΔF. The expected peak and cluster layout below was frozen
//! from an independent reimplementation of the comb product and the same
//! parabolic peak refinement in numpy.

use ahc_core::grid::{Axis, FrequencyGrid};
use ahc_core::spectral::{
    build_cespdc_jsa, cluster_report, ClusterOptions, ModeCombSpec, PhaseMatchingEnvelope,
    PumpSpectrum,
};
use ahc_core::TWO_PI;

const GAMMA: f64 = TWO_PI * 7.6e6;
const FSR_SIGNAL: f64 = TWO_PI * 501.75e6;
const FSR_IDLER: f64 = TWO_PI * 498.25e6;

fn mismatched_comb_report() -> ahc_core::spectral::ClusterReport {
    let signal = ModeCombSpec {
        center: 0.0,
        linewidth: GAMMA,
        fsr: FSR_SIGNAL,
        m_range: (-205, 205),
    };
    let idler = ModeCombSpec {
        center: 0.0,
        linewidth: GAMMA,
        fsr: FSR_IDLER,
        m_range: (-205, 205),
    };
    let grid = FrequencyGrid::cw(
        0.0,
        Axis::new(0.0, TWO_PI * 400.0e9, 1 << 19).expect("axis"),
    )
    .expect("grid");
    let jsa = build_cespdc_jsa(
        &PumpSpectrum::Monochromatic { omega: 0.0 },
        &signal,
        &idler,
        &PhaseMatchingEnvelope::Flat,
        &grid,
    )
    .expect("pair line");
    cluster_report(
        &jsa,
        &ClusterOptions {
            global_threshold: 0.05,
            per_cluster_threshold: 0.2,
            cluster_gap: Some(TWO_PI * 10.0e9),
        },
    )
    .expect("cluster report")
}

fn heights_descending(cluster: &ahc_core::spectral::Cluster) -> Vec<f64> {
    let mut h: Vec<f64> = cluster.peaks.iter().map(|p| p.relative_height).collect();
    h.sort_by(|a, b| b.partial_cmp(a).unwrap());
    h
}

#[test]
fn mismatched_combs_form_three_clusters_with_five_strong_modes() {
    let report = mismatched_comb_report();

    assert_eq!(report.peaks.len(), 41, "retained peaks");
    assert_eq!(report.clusters.len(), 3, "clusters");
    for cluster in &report.clusters {
        assert_eq!(cluster.mode_count, 5, "strong modes per cluster");
    }

    let centers_ghz: Vec<f64> = report
        .clusters
        .iter()
        .map(|c| c.center / TWO_PI / 1.0e9)
        .collect();
    let expected_ghz = [-142.918, 0.0, 142.918];
    for (got, want) in centers_ghz.iter().zip(expected_ghz) {
        assert!(
            (got - want).abs() < 0.05,
            "cluster center {got:.4} GHz, expected {want:.4}"
        );
    }

    let central = &report.clusters[1];
    assert_eq!(central.peaks.len(), 13);
    let central_heights = heights_descending(central);
    let mismatch = FSR_SIGNAL - FSR_IDLER;
    let neighbor = 1.0 / (1.0 + (mismatch / GAMMA).powi(2));
    let expected_central = [
        1.0,
        neighbor * neighbor,
        neighbor * neighbor,
        0.2926,
        0.2926,
    ];
    for (got, want) in central_heights.iter().zip(expected_central) {
        assert!(
            (got - want).abs() < 0.02,
            "central cluster height {got:.4}, expected {want:.4}"
        );
    }

    for side in [&report.clusters[0], &report.clusters[2]] {
        assert_eq!(side.peaks.len(), 14);
        let heights = heights_descending(side);
        let expected_side = [0.9486, 0.8461, 0.5175, 0.4054, 0.2171];
        for (got, want) in heights.iter().zip(expected_side) {
            assert!(
                (got - want).abs() < 0.02,
                "side cluster height {got:.4}, expected {want:.4}"
            );
        }
    }
}

#[test]
fn peak_and_cluster_spacings_follow_the_comb_arithmetic() {
    let report = mismatched_comb_report();

    let mean_fsr = 0.5 * (FSR_SIGNAL + FSR_IDLER);
    let central = &report.clusters[1];

    let tallest = central
        .peaks
        .iter()
        .map(|p| p.relative_height)
        .fold(0.0, f64::max);
    let strong: Vec<f64> = central
        .peaks
        .iter()
        .filter(|p| p.relative_height >= 0.2 * tallest)
        .map(|p| p.omega_minus)
        .collect();
    assert_eq!(strong.len(), 5);
    for (k, &pos) in strong.iter().enumerate() {
        let expected = (k as f64 - 2.0) * 2.0 * mean_fsr;
        assert!(
            (pos - expected).abs() < TWO_PI * 3.0e6,
            "strong mode at {:.4} GHz, expected {:.4} GHz",
            pos / TWO_PI / 1.0e9,
            expected / TWO_PI / 1.0e9
        );
    }

    let mut gaps: Vec<f64> = central
        .peaks
        .windows(2)
        .map(|w| w[1].omega_minus - w[0].omega_minus)
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let doublet_expected = [6.0, 6.0, 8.0, 8.0].map(|m| m * (FSR_SIGNAL - FSR_IDLER));
    for (got, want) in gaps.iter().take(4).zip(doublet_expected) {
        assert!(
            (got - want).abs() < TWO_PI * 2.0e6,
            "doublet splitting {:.1} MHz, expected {:.1} MHz",
            got / TWO_PI / 1.0e6,
            want / TWO_PI / 1.0e6
        );
    }

    let mismatch = FSR_SIGNAL - FSR_IDLER;
    let cluster_spacing_expected = 2.0 * mean_fsr * mean_fsr / mismatch;
    let left = report.clusters[1].center - report.clusters[0].center;
    let right = report.clusters[2].center - report.clusters[1].center;
    for got in [left, right] {
        assert!(
            (got / cluster_spacing_expected - 1.0).abs() < 0.01,
            "cluster spacing {:.3} GHz, expected {:.3} GHz",
            got / TWO_PI / 1.0e9,
            cluster_spacing_expected / TWO_PI / 1.0e9
        );
    }
}
