mod common;

use common::{random_channel, random_source, rng, Table};
use hbrd_core::fixtures;
use hbrd_core::model::{compose, optimal_phi};
use hbrd_core::prob::{binary_entropy, Axis};
use hbrd_core::rd_eval::{self, CaseTag, LossyTarget};
use hbrd_core::{
    AuxChannel, ChannelKind, CondPmf, DistortionTable, Error, JointSourcePmf, Pmf, SearchConfig,
    Strategy,
};

fn example1() -> JointSourcePmf {
    fixtures::source("example1").unwrap()
}

fn u0_only(ch: &AuxChannel) -> AuxChannel {
    let s = ch.output_sizes();
    let probs = ch
        .probs()
        .chunks(s[0] * s[1])
        .flat_map(|r| r.chunks(s[1]).map(|c| c.iter().sum::<f64>()).collect::<Vec<_>>())
        .collect();
    AuxChannel::from_u0(ch.source_sizes(), s[0], probs).unwrap()
}

#[test]
fn example1_layered_rates() {
    let src = example1();
    let h = DistortionTable::hamming(4);
    let x3 = rd_eval::eval_theorem1(&src, &fixtures::channel("channel_u0_x3").unwrap(), &h, 0.0).unwrap();
    assert!((x3.rate - 2.0).abs() < 1e-12);
    assert!(x3.feasible);
    assert_eq!(x3.distortion1, 0.0);
    let empty =
        rd_eval::eval_theorem1(&src, &fixtures::channel("channel_u0_empty").unwrap(), &h, 0.0).unwrap();
    assert!((empty.rate - 3.0).abs() < 1e-12);
    assert!((empty.term_decoder2 - 2.0).abs() < 1e-12);
    assert!((empty.individual_layer - 1.0).abs() < 1e-12);
}

#[test]
fn example1_lossless_objective() {
    let src = example1();
    let s1 = fixtures::channel("channel_u0_s1").unwrap();
    assert!((rd_eval::eval_corollary1(&src, &s1).unwrap() - 3.0).abs() < 1e-12);
    let x3 = u0_only(&fixtures::channel("channel_u0_x3").unwrap());
    assert!((rd_eval::eval_corollary1(&src, &x3).unwrap() - 2.0).abs() < 1e-12);
    let b = rd_eval::eval_corollary1_breakdown(&src, &x3).unwrap();
    assert!((b.rate - 2.0).abs() < 1e-12);
}

#[test]
fn lossless_objective_rejects_individual_layer() {
    let src = example1();
    let err = rd_eval::eval_corollary1(&src, &fixtures::channel("channel_u0_x3").unwrap()).unwrap_err();
    assert!(matches!(err, Error::ChannelKind(_)));
}

#[test]
fn layered_terms_match_reference() {
    let mut r = rng(11);
    for _ in 0..40 {
        let src = random_source(&mut r, [2, 3, 2, 2]);
        let ch = random_channel(&mut r, ChannelKind::OneDistortion, [2, 3], &[3, 2]);
        let t = Table::compose(&src, &ch, &["U0", "U1"]);
        let h = DistortionTable::hamming(2);
        let got = rd_eval::eval_theorem1(&src, &ch, &h, 1.0).unwrap();
        let t1 = t.hc(&["S1", "S2"], &["Y1"]) - t.hc(&["S1"], &["U0", "S2", "Y1"]);
        let t2 = t.hc(&["S1", "S2"], &["Y2"]) - t.hc(&["S1"], &["U0", "S2", "Y2"]);
        let layer = t.mi(&["U1"], &["S1"], &["U0", "S2", "Y1"]);
        assert!((got.term_decoder1 - t1).abs() < 1e-10);
        assert!((got.term_decoder2 - t2).abs() < 1e-10);
        assert!((got.individual_layer - layer).abs() < 1e-10);
        assert!((got.rate - (t1.max(t2) + layer)).abs() < 1e-10);
    }
}

#[test]
fn common_reconstruction_terms_match_reference() {
    let mut r = rng(12);
    for _ in 0..30 {
        let src = random_source(&mut r, [2, 2, 2, 2]);
        let ch = random_channel(&mut r, ChannelKind::CommonReconstruction, [2, 2], &[2, 2, 2]);
        let t = Table::compose(&src, &ch, &["U0", "U1", "S2hat"]);
        let h = DistortionTable::hamming(2);
        let got = rd_eval::eval_theorem3(&src, &ch, &h, &h, 1.0, 1.0).unwrap();
        let t1 = t.mi(&["U0", "S2hat"], &["S1", "S2"], &["Y1"]);
        let t2 = t.mi(&["U0", "S2hat"], &["S1", "S2"], &["Y2"]);
        let layer = t.mi(&["U1"], &["S1", "S2"], &["Y1", "S2hat", "U0"]);
        assert!((got.rate - (t1.max(t2) + layer)).abs() < 1e-10);
        // P(S2 != S2hat) by direct summation.
        let mut d2 = 0.0;
        for (idx, p) in &t.cells {
            if idx[1] != idx[6] {
                d2 += p;
            }
        }
        assert!((got.distortion2.unwrap() - d2).abs() < 1e-12);
    }
}

#[test]
fn optimal_reconstruction_beats_every_map() {
    let mut r = rng(13);
    for _ in 0..10 {
        let src = random_source(&mut r, [3, 2, 2, 1]);
        let ch = random_channel(&mut r, ChannelKind::OneDistortion, [3, 2], &[1, 2]);
        let d = DistortionTable::new(3, 3, (0..9).map(|i| ((i * 7) % 5) as f64).collect()).unwrap();
        let joint = compose(&src, &ch).unwrap();
        let (_, best) = optimal_phi(&joint, &d).unwrap();
        // Every map (u1, s2, y1) -> s1_hat: 3^(2*2*2) of them.
        let t = Table::compose(&src, &ch, &["U0", "U1"]);
        for code in 0..3usize.pow(8) {
            let map: Vec<usize> = (0..8).map(|k| code / 3usize.pow(k) % 3).collect();
            let mut cost = 0.0;
            for (idx, p) in &t.cells {
                let key = (idx[5] * 2 + idx[1]) * 2 + idx[2];
                cost += p * d.get(idx[0], map[key]);
            }
            assert!(best <= cost + 1e-12);
        }
    }
}

#[test]
fn comp_delivery_closed_form_and_restriction() {
    let src = fixtures::source("comp-delivery").unwrap();
    let cf = rd_eval::closed_form(&src, CaseTag::CompDelivery, None).unwrap();
    assert!((cf.value - 1.0).abs() < 1e-12);
    // The induced channel attains the closed form.
    let ch = cf.channel.unwrap();
    assert!((rd_eval::eval_corollary1(&src, &ch).unwrap() - 1.0).abs() < 1e-12);
    let empty = AuxChannel::from_u0([2, 2], 1, vec![1.0; 4]).unwrap();
    assert!((rd_eval::eval_corollary1(&src, &empty).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn lossless_closed_forms_on_fixtures() {
    let cases = [
        ("y1-absent", CaseTag::Y1Absent, 1.0 + binary_entropy(0.25)),
        ("degraded-bsc", CaseTag::DegradedLossless, binary_entropy(0.375) + binary_entropy(0.25)),
        ("functional-y2", CaseTag::FuncY2Lossless, 1.0 + binary_entropy(0.25) + binary_entropy(0.125)),
    ];
    for (name, case, expected) in cases {
        let src = fixtures::source(name).unwrap();
        let cf = rd_eval::closed_form(&src, case, None).unwrap();
        assert!((cf.value - expected).abs() < 1e-12, "{name}: {}", cf.value);
        // The lossless rate of the induced channel equals the closed form.
        let rate = rd_eval::eval_corollary1(&src, cf.channel.as_ref().unwrap()).unwrap();
        assert!((rate - expected).abs() < 1e-12, "{name}: channel gives {rate}");
    }
}

#[test]
fn hypothesis_violations_are_reported() {
    let src = example1();
    for case in [CaseTag::Degraded, CaseTag::DegradedLossless, CaseTag::Y1Absent, CaseTag::Y2Absent] {
        assert!(matches!(rd_eval::check_hypothesis(&src, case), Err(Error::Hypothesis(_))), "{case}");
    }
    let err = rd_eval::closed_form(&src, CaseTag::DegradedLossless, None).unwrap_err();
    assert!(err.to_string().contains("Y2"), "{err}");
}

#[test]
fn lossy_closed_form_needs_target() {
    let src = fixtures::source("degraded-bsc").unwrap();
    assert!(matches!(
        rd_eval::closed_form(&src, CaseTag::Degraded, None),
        Err(Error::InvalidArgument(_))
    ));
    let target = LossyTarget {
        d1: DistortionTable::hamming(2),
        max_d1: 0.0,
        search: SearchConfig {
            u1_card: 2,
            grid_step: hbrd_core::optimizer::GridStep::new(4).unwrap(),
            ..SearchConfig::default()
        },
        strategy: Strategy::GridOracle,
    };
    // At zero distortion the lossy form reduces to the lossless one.
    let cf = rd_eval::closed_form(&src, CaseTag::Degraded, Some(&target)).unwrap();
    let lossless = rd_eval::closed_form(&src, CaseTag::DegradedLossless, None).unwrap();
    assert!((cf.value - lossless.value).abs() < 1e-9);
}

#[test]
fn case_tags_parse() {
    for c in CaseTag::ALL {
        assert_eq!(c.name().parse::<CaseTag>().unwrap(), c);
        assert_eq!(c.name().to_lowercase().parse::<CaseTag>().unwrap(), c);
    }
    assert!("Nope".parse::<CaseTag>().is_err());
}

/// Fair `S` observed through a BSC(q).
fn bsc_side(q: f64) -> Pmf {
    let axes = vec![Axis::new("S", 2), Axis::new("Y", 2)];
    Pmf::from_fn(axes, |i| 0.5 * if i[0] == i[1] { 1.0 - q } else { q }).unwrap()
}

#[test]
fn wyner_ziv_baseline_binary() {
    // V = S through BSC(a); Y = S through BSC(q). I(V;S|Y) = h(a * q) - h(a).
    let (a, q) = (0.1, 0.25);
    let src = bsc_side(q);
    let ch = CondPmf::new(
        vec![Axis::new("S", 2)],
        vec![Axis::new("V", 2)],
        vec![1.0 - a, a, a, 1.0 - a],
    )
    .unwrap();
    let b = rd_eval::eval_wyner_ziv(&src, &ch, &DistortionTable::hamming(2), 0.1).unwrap();
    let conv = a * (1.0 - q) + q * (1.0 - a);
    assert!((b.rate - (binary_entropy(conv) - binary_entropy(a))).abs() < 1e-12);
    assert!((b.distortion - a).abs() < 1e-12);
    assert!(b.feasible);
}

#[test]
fn common_reconstruction_baseline_binary() {
    // Shat = S through BSC(a), reconstruction ignores Y.
    let (a, q) = (0.2, 0.25);
    let src = bsc_side(q);
    let ch = CondPmf::new(
        vec![Axis::new("S", 2)],
        vec![Axis::new("Shat", 2)],
        vec![1.0 - a, a, a, 1.0 - a],
    )
    .unwrap();
    let b = rd_eval::eval_common_reconstruction(&src, &ch, &DistortionTable::hamming(2), 0.1).unwrap();
    let conv = a * (1.0 - q) + q * (1.0 - a);
    assert!((b.rate - (binary_entropy(conv) - binary_entropy(a))).abs() < 1e-12);
    assert!((b.distortion - a).abs() < 1e-12);
    assert!(!b.feasible);
}
