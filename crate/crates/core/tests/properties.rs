use num_complex::Complex64;
use proptest::prelude::*;

use regge_ics::data::{format_energy_file, format_series, parse_energy_file, parse_series, SMatrixRecord, SeriesPoint};
use regge_ics::ics::{geometric_identity_residual, subtract_trajectories};
use regge_ics::pade::build_rational_interpolant;
use regge_ics::poles::{remove_froissart, CamRegion};
use regge_ics::trajectory::Choice;

fn complex(range: std::ops::Range<f64>) -> impl Strategy<Value = Complex64> {
    (range.clone(), range).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn froissart_removal_is_idempotent(
        poles in prop::collection::vec(complex(-5.0..5.0), 0..8),
        zeros in prop::collection::vec(complex(-5.0..5.0), 0..8),
        eps in 0.0f64..2.0,
    ) {
        let (p1, z1) = remove_froissart(&poles, &zeros, eps);
        let (p2, z2) = remove_froissart(&p1, &z1, eps);
        prop_assert_eq!(&p1, &p2);
        prop_assert_eq!(&z1, &z2);
        // Removal is pairwise.
        prop_assert_eq!(poles.len() - p1.len(), zeros.len() - z1.len());
    }

    #[test]
    fn froissart_removes_planted_doublets(
        keep in complex(0.0..10.0),
        spurious in complex(20.0..30.0),
        offset in complex(-1e-9..1e-9),
    ) {
        let (p, z) = remove_froissart(&[keep, spurious], &[spurious + offset], 1e-6);
        prop_assert_eq!(p, vec![keep]);
        prop_assert!(z.is_empty());
    }

    #[test]
    fn energy_files_round_trip(
        vals in prop::collection::vec(complex(-2.0..2.0), 4..31),
        energy in 0.1f64..500.0,
        niter in 1usize..5,
        sht in -20.0f64..20.0,
        dxl in 0.01f64..2.0,
        inv in -3i64..3,
    ) {
        let n = vals.len();
        let r = SMatrixRecord { energy, s_values: vals, nread: n, niter, sht, jstart: 1, jfin: n - 1, inv, dxl };
        prop_assert_eq!(parse_energy_file(&format_energy_file(&r)).unwrap(), r);
    }

    #[test]
    fn series_round_trip(rows in prop::collection::vec((0.0f64..1e3, prop::collection::vec(-1e6f64..1e6, 3)), 0..20)) {
        let pts: Vec<SeriesPoint> = rows.into_iter().map(|(e, v)| SeriesPoint::new(e, v)).collect();
        prop_assert_eq!(parse_series(&format_series("E/meV a b c", &pts)).unwrap(), pts);
    }

    #[test]
    fn smooth_plus_mulholland_is_exact(
        exact in prop::collection::vec(0.0f64..100.0, 1..30),
        mulls in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 30), 0..4),
        start in 0usize..10,
    ) {
        let ex: Vec<SeriesPoint> = exact.iter().enumerate().map(|(i, s)| SeriesPoint::new(i as f64 + 1.0, vec![*s])).collect();
        // Each trajectory covers a tail of the grid.
        let ms: Vec<Vec<SeriesPoint>> = mulls
            .iter()
            .map(|m| ex.iter().skip(start.min(ex.len())).zip(m).map(|(p, v)| SeriesPoint::new(p.energy, vec![*v])).collect())
            .collect();
        let smooth = subtract_trajectories(&ex, &ms).unwrap();
        for (i, s) in smooth.iter().enumerate() {
            let added: f64 = ms.iter().filter_map(|m| m.iter().find(|p| p.energy == s.energy)).map(|p| p.values[0]).sum();
            let back = s.values[0] + added;
            prop_assert!((back - ex[i].values[0]).abs() <= 1e-12 * ex[i].values[0].abs().max(1.0));
        }
    }

    #[test]
    fn off_grid_mulholland_energies_are_rejected(e in 0.5f64..0.9) {
        let ex = vec![SeriesPoint::new(1.0, vec![1.0])];
        prop_assert!(subtract_trajectories(&ex, &[vec![SeriesPoint::new(e, vec![0.1])]]).is_err());
    }

    #[test]
    fn geometric_series_identity(re in -10.0f64..10.0, im in 0.2f64..3.0) {
        prop_assert!(geometric_identity_residual(Complex64::new(re, im), 40) < 1e-10);
    }

    #[test]
    fn interpolant_reproduces_its_nodes(vals in prop::collection::vec(complex(-1.0..1.0), 5..12), sht in 0.0f64..10.0) {
        let pts: Vec<(f64, Complex64)> = vals.iter().enumerate().map(|(j, s)| (j as f64, *s)).collect();
        // Random data may be rank deficient, which the builder reports.
        if let Ok(m) = build_rational_interpolant(&pts, sht, 15) {
            let worst = m.max_fit_residual().unwrap();
            prop_assert!(worst < 1e-6, "{worst:e}");
        }
    }

    #[test]
    fn index_choices_parse(i in 0usize..1000) {
        prop_assert_eq!(i.to_string().parse::<Choice>().unwrap(), Choice::Index(i));
    }

    #[test]
    fn region_contains_its_interior(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let r = CamRegion::new(-1.0, 3.0, 0.5, 2.0).unwrap();
        let z = Complex64::new(-1.0 + 4.0 * x, 0.5 + 1.5 * y);
        prop_assert!(r.contains(z));
        prop_assert!(!r.contains(Complex64::new(z.re, -z.im)));
    }
}

#[test]
fn words_parse_to_choices() {
    assert_eq!("auto".parse::<Choice>().unwrap(), Choice::Auto);
    assert_eq!("skip".parse::<Choice>().unwrap(), Choice::Skip);
    assert!("left".parse::<Choice>().is_err());
}
