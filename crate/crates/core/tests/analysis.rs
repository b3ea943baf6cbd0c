use peakcap::analysis::*;
use peakcap::channel::ConstraintKind::{Box, Circular};
use peakcap::Error;

fn cfg() -> AnalysisConfig {
    AnalysisConfig::default()
}

#[test]
fn envelope_picks_qpsk_then_16qam() {
    let mods = named_constellations("qpsk,16qam").unwrap();
    let grid = [2.0, 10.0];
    let (table, failed) = rate_sweep(&mods, Box, 1.0, &grid, &cfg()).unwrap();
    assert!(failed.is_empty());
    let cols: Vec<(&str, &[f64])> = table.columns().iter().take(2).map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    let env = adaptive_envelope(&cols).unwrap();
    assert_eq!(env.choice, vec!["qpsk", "16qam"]);
    let cap = table.column("capacity").unwrap();
    for (i, v) in env.values.iter().enumerate() {
        assert!(*v <= cap[i] + 1e-6);
        assert!(cols.iter().all(|(_, c)| *v >= c[i]));
    }
    let single = adaptive_envelope(&cols[..1]).unwrap();
    assert_eq!(single.values, cols[0].1);
}

#[test]
fn qpsk_matches_capacity_at_low_psnr() {
    let mods = named_constellations("qpsk").unwrap();
    let (t, _) = rate_sweep(&mods, Box, 1.0, &[0.1], &cfg()).unwrap();
    let ratio = t.column("qpsk").unwrap()[0] / t.column("capacity").unwrap()[0];
    assert!(ratio >= 0.99, "{ratio}");
}

#[test]
fn crossover_is_stable_under_bracket_shrinking() {
    let a = named_constellation("qpsk").unwrap();
    let b = named_constellation("16qam").unwrap();
    let wide = crossover(&a, &b, Box, 1.0, (2.0, 20.0), &cfg()).unwrap();
    let p = wide.psnr_star;
    let narrow = crossover(&a, &b, Box, 1.0, (0.9 * p, 1.1 * p), &cfg()).unwrap();
    assert!((narrow.psnr_star - p).abs() <= 2e-3 * p);
    assert_eq!(wide.pair, ("qpsk".to_string(), "16qam".to_string()));
    assert!(matches!(crossover(&a, &a, Box, 1.0, (2.0, 20.0), &cfg()), Err(Error::NoCrossover { .. })));
}

#[test]
fn gap_of_capacity_to_itself_is_zero() {
    let grid = log_grid(0.1, 100.0, 16).unwrap();
    for r in [0.5, 2.0, 4.0] {
        let g = db_gap_at_rate(&RateCurve::Capacity, &RateCurve::Capacity, Box, 1.0, r, &grid, &cfg()).unwrap();
        assert!(g.abs() < 1e-3, "rate {r}: {g}");
    }
}

#[test]
fn gap_out_of_range() {
    let grid = log_grid(0.1, 1000.0, 16).unwrap();
    let qpsk = RateCurve::Envelope(named_constellations("qpsk").unwrap());
    let r = db_gap_at_rate(&qpsk, &RateCurve::Capacity, Box, 1.0, 3.0, &grid, &cfg());
    assert!(matches!(r, Err(Error::OutOfRange(_))));
    let r = invert_rate(&qpsk, Box, 1.0, 1e-3, &grid, &cfg());
    assert!(matches!(r, Err(Error::OutOfRange(_))));
}

#[test]
fn box_cad_sweep_below_first_transition_is_binary() {
    let grid = log_grid(0.1, 2.5, 6).unwrap();
    for e in cad_sweep(Box, 2.0, &grid, &cfg()).unwrap() {
        assert!(e.converged && e.error.is_none());
        assert_eq!(e.support, vec![-1.0, 1.0]);
        assert!(e.kkt_max_violation <= 1e-6);
    }
}

#[test]
fn circular_cad_sweep_support_is_normalized() {
    for e in cad_sweep(Circular, 4.0, &[1.0, 16.0], &cfg()).unwrap() {
        assert!(e.support.iter().all(|&r| (0.0..=1.0).contains(&r)));
        assert!((e.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if e.psnr == 16.0 {
            assert!(e.support.len() >= 2);
        }
    }
}

#[test]
fn sweep_table_rejects_misaligned_input() {
    assert!(rate_sweep(&[], Box, 1.0, &[1.0], &cfg()).is_err());
    let mods = named_constellations("qpsk").unwrap();
    assert!(rate_sweep(&mods, Box, 1.0, &[2.0, 1.0], &cfg()).is_err());
    assert!(rate_sweep(&mods, Box, 1.0, &[], &cfg()).is_err());
}
