use captrade_core::tradeoff::*;
use proptest::prelude::*;

fn pt(label: &str, acc: f64, div: f64) -> TradeoffPoint {
    TradeoffPoint::new(label, acc, div).unwrap()
}

fn human() -> TradeoffPoint {
    pt("human", 87.8, 88.6)
}

#[test]
fn tpr_against_human() {
    // hand: ((130.3 − 87.8)/87.8 + (44.9 − 88.6)/88.6) / 2
    //     = (0.484055 − 0.493228) / 2 = −0.004586
    let msc = tpr(&pt("msc", 130.3, 44.9), &human()).unwrap();
    assert!((100.0 * msc - -0.459).abs() <= 0.005, "{msc}");
    // hand: (0.494305 − 0.511287) / 2 = −0.008491
    let nsc = tpr(&pt("nsc", 131.2, 43.3), &human()).unwrap();
    assert!((100.0 * nsc - -0.849).abs() <= 0.005, "{nsc}");
}

#[test]
fn tcr_ce_to_rl() {
    // hand: (51.3 / 38.5) / (16.1 / 130.1) = 1.332468 / 0.123751 = 10.7673
    let t = tcr(&pt("ce", 114.0, 89.8), &pt("rl", 130.1, 38.5)).unwrap();
    assert!((t - 10.77).abs() <= 0.01, "{t}");
    // hand: (46.9 / 44.9) / (15.9 / 130.3) = 1.044543 / 0.122026 = 8.5600
    let t = tcr(&pt("ce", 114.4, 91.8), &pt("rl", 130.3, 44.9)).unwrap();
    assert!((t - 8.56).abs() <= 0.01, "{t}");
    assert_eq!(tcr(&pt("ce", 100.0, 50.0), &pt("rl", 120.0, 50.0)).unwrap(), 0.0);
    assert!(tcr(&pt("ce", 100.0, 50.0), &pt("rl", 100.0, 40.0)).is_err());
}

#[test]
fn boundary_through_human_point() {
    let b = zero_tpr_boundary(&human(), &[87.8, 175.6, 130.3]).unwrap();
    assert_eq!(b[0], (87.8, 88.6));
    assert!(b[1].1.abs() < 1e-12);
    assert!((b[2].1 - 45.71).abs() < 0.005, "{:?}", b[2]);
    assert!((b[2].1 - 44.9 - 0.81).abs() < 0.005);
}

#[test]
fn accurate_models_rank_with_vat_closest() {
    let points = [
        pt("Att2in", 119.5, 27.3),
        pt("UpDown", 123.8, 31.9),
        pt("AoA", 127.0, 32.4),
        pt("Transformer", 130.1, 38.5),
        pt("M2Transformer", 129.0, 38.2),
        pt("VaT_msc", 130.3, 44.9),
        pt("VaT_nsc", 131.2, 43.3),
    ];
    let report = tradeoff_report(&points, &human(), &[]).unwrap();
    assert_eq!(&report.ranking[..2], ["VaT_msc", "VaT_nsc"]);
    assert!(report.tcr.is_empty());
    assert_eq!(report.boundary.len(), BOUNDARY_SAMPLES);
    assert_eq!(
        report.tpr.iter().map(|e| e.label.as_str()).collect::<Vec<_>>()[0],
        "Att2in"
    );
}

#[test]
fn report_errors_name_the_point() {
    let err = tradeoff_report(
        &[
            pt("ok", 1.0, 1.0),
            TradeoffPoint {
                label: "bad".into(),
                acc: 1.0,
                div: 0.0,
            },
        ],
        &human(),
        &[],
    )
    .unwrap_err();
    assert!(err.to_string().contains("bad"), "{err}");
    let single = tradeoff_report(&[human()], &human(), &[]).unwrap();
    assert_eq!(single.tpr[0].tpr, 0.0);
}

#[test]
fn report_round_trips_through_json() {
    let pair = CeRlPair {
        label: "t".into(),
        ce: pt("ce", 114.0, 89.8),
        rl: pt("rl", 130.1, 38.5),
    };
    let report = tradeoff_report(&[pt("a", 100.0, 50.0)], &human(), &[pair]).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<TradeoffReport>(&json).unwrap(), report);
    assert!(report.boundary_csv().starts_with("acc,div\n"));
    assert_eq!(report.boundary_csv().lines().count(), BOUNDARY_SAMPLES + 1);
}

proptest! {
    #[test]
    fn boundary_points_have_zero_tpr(bacc in 1.0f64..200.0, bdiv in 1.0f64..200.0, accs in prop::collection::vec(0.5f64..300.0, 1..20)) {
        let b = pt("b", bacc, bdiv);
        for (acc, div) in zero_tpr_boundary(&b, &accs).unwrap() {
            let a = TradeoffPoint { label: "a".into(), acc, div };
            prop_assert!(tpr(&a, &b).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn tpr_is_affine_per_coordinate(
        bacc in 1.0f64..200.0, bdiv in 1.0f64..200.0,
        acc in 1.0f64..200.0, div in 1.0f64..200.0, step in -50.0f64..50.0,
    ) {
        let b = pt("b", bacc, bdiv);
        let base = tpr(&pt("a", acc, div), &b).unwrap();
        let moved_acc = tpr(&TradeoffPoint { label: "a".into(), acc: acc + step, div }, &b).unwrap();
        let moved_div = tpr(&TradeoffPoint { label: "a".into(), acc, div: div + step }, &b).unwrap();
        prop_assert!((moved_acc - base - step / (2.0 * bacc)).abs() <= 1e-12);
        prop_assert!((moved_div - base - step / (2.0 * bdiv)).abs() <= 1e-12);
    }

    #[test]
    fn tcr_scale_invariant(
        a1 in 1.0f64..200.0, a2 in 1.0f64..200.0, d1 in 1.0f64..200.0, d2 in 1.0f64..200.0,
        sa in 0.01f64..100.0, sd in 0.01f64..100.0,
    ) {
        prop_assume!((a1 - a2).abs() > 1e-3);
        let t = tcr(&pt("ce", a1, d1), &pt("rl", a2, d2)).unwrap();
        let scaled = tcr(&pt("ce", a1 * sa, d1 * sd), &pt("rl", a2 * sa, d2 * sd)).unwrap();
        prop_assert!((t - scaled).abs() <= 1e-9 * t.max(1.0), "{} vs {}", t, scaled);
    }

    #[test]
    fn tpr_zero_at_identity(acc in 1.0f64..200.0, div in 1.0f64..200.0) {
        let b = pt("b", acc, div);
        prop_assert_eq!(tpr(&b, &b).unwrap(), 0.0);
    }
}
