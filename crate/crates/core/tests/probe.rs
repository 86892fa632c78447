use qmlab::group::{random_reduced_word, FuchsianRep};
use qmlab::lie::Target;
use qmlab::qm::{demo_form, Mode, QuasimorphismEngine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[test]
fn probe_per_length() {
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in 2..=10 {
        for _ in 0..60 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    for target in [Target::Su2, Target::Heisenberg] {
        let engine = QuasimorphismEngine::new(demo_form(rep.clone(), target), Mode::Bg, 1e-9);
        let report = engine.ulam_defect(&pairs, 515).unwrap();
        let mut by_len: std::collections::BTreeMap<usize, (f64, f64, usize)> = Default::default();
        for s in &report.samples {
            let e = by_len.entry(s.length).or_insert((0.0, 0.0, 0));
            e.0 = e.0.max(s.ulam);
            e.1 += s.ulam;
            e.2 += 1;
        }
        eprintln!("== {target:?} slope {:.3e} ci {:?}", report.slope, report.slope_ci);
        for (l, (mx, sum, n)) in by_len {
            eprintln!("len {l}: max {mx:.4} mean {:.4} (n={n})", sum / n as f64);
        }
    }
}

#[test]
fn probe_ray_vs_segment() {
    use qmlab::hyp2::{DiskPoint, GeodesicSegment};
    let rep = Arc::new(FuchsianRep::standard());
    let form = demo_form(rep.clone(), Target::Su2);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for len in [4usize, 7, 9, 10] {
        for _ in 0..8 {
            let w = random_reduced_word(&mut rng, len);
            let m = rep.rep_matrix(&w);
            let (l, dir) = m.origin_displacement();
            let end = m.apply(DiskPoint::ORIGIN);
            let seg = GeodesicSegment::between(DiskPoint::ORIGIN, end);
            if !seg.length.is_finite() || seg.length > 34.0 { continue; }
            let a = form.holonomy_ray(dir, l, 1e-10).unwrap().value;
            let b = form.holonomy(&[seg], 1e-10).unwrap().value;
            let gap: f64 = a.entries().iter().zip(b.entries()).map(|(x,y)|(x-y).abs()).fold(0.0,f64::max);
            let lgap = (l - seg.length).abs();
            if gap > worst { worst = gap; }
            eprintln!("len {len} d {:7.3} len-gap {lgap:.2e} entry gap {gap:.3e}", l);
        }
    }
    eprintln!("worst {worst:.3e}");
}

#[test]
fn probe_hot_form() {
    use qmlab::connection::{BallAtom, BumpAtom, ConnectionForm};
    use qmlab::hyp2::DiskPoint;
    use qmlab::lie::LieAlgebraElement;
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in 2..=10 {
        for _ in 0..60 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    for scale in [4.0f64, 8.0] {
        for target in [Target::Su2, Target::Heisenberg] {
            let mut form = ConnectionForm::new(rep.clone(), target, 1);
            let vals: [LieAlgebraElement; 2] = match target {
                Target::Su2 => [
                    LieAlgebraElement::Su2([0.5 * scale, -0.3 * scale, 0.7 * scale]),
                    LieAlgebraElement::Su2([-0.2 * scale, 0.6 * scale, 0.1 * scale]),
                ],
                Target::Heisenberg => [
                    LieAlgebraElement::Heisenberg([1.0 * scale, 0.2 * scale, 0.1 * scale]),
                    LieAlgebraElement::Heisenberg([0.3 * scale, 1.0 * scale, -0.2 * scale]),
                ],
                _ => unreachable!(),
            };
            let mut it = vals.into_iter();
            form.add_atom(BumpAtom::Ball(BallAtom {
                center: DiskPoint::new(0.0, 0.12).unwrap(),
                radius: 0.4,
                covector: [0.9, 0.3],
                value: it.next().unwrap(),
            })).unwrap();
            form.add_atom(BumpAtom::Ball(BallAtom {
                center: DiskPoint::new(0.15, -0.25).unwrap(),
                radius: 0.35,
                covector: [0.4, -1.0],
                value: it.next().unwrap(),
            })).unwrap();
            let engine = QuasimorphismEngine::new(form, Mode::Bg, 1e-9);
            let report = engine.ulam_defect(&pairs, 515).unwrap();
            let mut by_len: std::collections::BTreeMap<usize, f64> = Default::default();
            for s in &report.samples {
                let e = by_len.entry(s.length).or_insert(0.0);
                *e = e.max(s.ulam);
            }
            let maxima: Vec<String> = by_len.values().map(|v| format!("{v:.3}")).collect();
            eprintln!(
                "scale {scale} {target:?}: slope {:.2e} ci ({:.2e},{:.2e}) bound {:.2e} maxdef {:.3} maxima {}",
                report.slope, report.slope_ci.0, report.slope_ci.1,
                report.bound_estimate, report.max_ulam_defect, maxima.join(" ")
            );
        }
    }
}

#[test]
fn probe_more_pairs() {
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in 2..=10 {
        for _ in 0..150 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    for target in [Target::Su2, Target::Heisenberg] {
        let engine = QuasimorphismEngine::new(demo_form(rep.clone(), target), Mode::Bg, 1e-9);
        let report = engine.ulam_defect(&pairs, 515).unwrap();
        let mut by_len: std::collections::BTreeMap<usize, f64> = Default::default();
        for s in &report.samples {
            let e = by_len.entry(s.length).or_insert(0.0);
            *e = e.max(s.ulam);
        }
        let maxima: Vec<String> = by_len.values().map(|v| format!("{v:.3}")).collect();
        eprintln!(
            "{target:?}: slope {:.2e} ci ({:.2e},{:.2e}) maxima {}",
            report.slope, report.slope_ci.0, report.slope_ci.1, maxima.join(" ")
        );
    }
}

#[test]
fn probe_saturating_forms() {
    use qmlab::connection::{BallAtom, BumpAtom, ConnectionForm};
    use qmlab::hyp2::DiskPoint;
    use qmlab::lie::LieAlgebraElement;
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in 2..=10 {
        for _ in 0..60 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    let cases: Vec<(&str, Target, [LieAlgebraElement; 2])> = vec![
        ("su2 hot", Target::Su2, [
            LieAlgebraElement::Su2([10.0, -6.0, 14.0]),
            LieAlgebraElement::Su2([-4.0, 12.0, 2.0]),
        ]),
        ("su2 hotter", Target::Su2, [
            LieAlgebraElement::Su2([25.0, -15.0, 35.0]),
            LieAlgebraElement::Su2([-10.0, 30.0, 5.0]),
        ]),
        ("heis central", Target::Heisenberg, [
            LieAlgebraElement::Heisenberg([0.05, 0.02, 1.2]),
            LieAlgebraElement::Heisenberg([0.02, -0.05, -1.5]),
        ]),
        ("heis central2", Target::Heisenberg, [
            LieAlgebraElement::Heisenberg([0.0, 0.0, 2.0]),
            LieAlgebraElement::Heisenberg([0.0, 0.0, -1.4]),
        ]),
    ];
    for (name, target, vals) in cases {
        let mut form = ConnectionForm::new(rep.clone(), target, 1);
        let mut it = vals.into_iter();
        form.add_atom(BumpAtom::Ball(BallAtom {
            center: DiskPoint::new(0.0, 0.12).unwrap(),
            radius: 0.4,
            covector: [0.9, 0.3],
            value: it.next().unwrap(),
        })).unwrap();
        form.add_atom(BumpAtom::Ball(BallAtom {
            center: DiskPoint::new(0.15, -0.25).unwrap(),
            radius: 0.35,
            covector: [0.4, -1.0],
            value: it.next().unwrap(),
        })).unwrap();
        let engine = QuasimorphismEngine::new(form, Mode::Bg, 1e-9);
        let report = engine.ulam_defect(&pairs, 515).unwrap();
        let mut by_len: std::collections::BTreeMap<usize, f64> = Default::default();
        for s in &report.samples {
            let e = by_len.entry(s.length).or_insert(0.0);
            *e = e.max(s.ulam);
        }
        let maxima: Vec<String> = by_len.values().map(|v| format!("{v:.3}")).collect();
        eprintln!(
            "{name}: slope {:.2e} ci ({:.2e},{:.2e}) bound {:.2e} maxdef {:.3} maxima {}",
            report.slope, report.slope_ci.0, report.slope_ci.1,
            report.bound_estimate, report.max_ulam_defect, maxima.join(" ")
        );
    }
}

#[test]
fn probe_heis_plateau() {
    use qmlab::connection::{BallAtom, BumpAtom, ConnectionForm};
    use qmlab::hyp2::DiskPoint;
    use qmlab::lie::LieAlgebraElement;
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in [2usize, 4, 6, 8, 10, 14, 18, 24, 30] {
        for _ in 0..40 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    let mut form = ConnectionForm::new(rep.clone(), Target::Heisenberg, 1);
    form.add_atom(BumpAtom::Ball(BallAtom {
        center: DiskPoint::new(0.0, 0.12).unwrap(),
        radius: 0.4,
        covector: [0.9, 0.3],
        value: LieAlgebraElement::Heisenberg([0.0, 0.0, 2.0]),
    })).unwrap();
    form.add_atom(BumpAtom::Ball(BallAtom {
        center: DiskPoint::new(0.15, -0.25).unwrap(),
        radius: 0.35,
        covector: [0.4, -1.0],
        value: LieAlgebraElement::Heisenberg([0.0, 0.0, -1.4]),
    })).unwrap();
    let engine = QuasimorphismEngine::new(form, Mode::Bg, 1e-9);
    let report = engine.ulam_defect(&pairs, 515).unwrap();
    let mut by_len: std::collections::BTreeMap<usize, f64> = Default::default();
    for s in &report.samples {
        let e = by_len.entry(s.length).or_insert(0.0);
        *e = e.max(s.ulam);
    }
    for (l, mx) in by_len {
        eprintln!("len {l}: max {mx:.4}");
    }
}

#[test]
fn probe_hbg_slope() {
    let rep = Arc::new(FuchsianRep::standard());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = Vec::new();
    for len in 2..=10 {
        for _ in 0..60 {
            pairs.push((
                random_reduced_word(&mut rng, len),
                random_reduced_word(&mut rng, len),
            ));
        }
    }
    for target in [Target::Su2, Target::Heisenberg] {
        let engine = QuasimorphismEngine::new(demo_form(rep.clone(), target), Mode::Hbg, 1e-9);
        let report = engine.ulam_defect(&pairs, 515).unwrap();
        let mut by_len: std::collections::BTreeMap<usize, f64> = Default::default();
        for s in &report.samples {
            let e = by_len.entry(s.length).or_insert(0.0);
            *e = e.max(s.ulam);
        }
        let maxima: Vec<String> = by_len.values().map(|v| format!("{v:.3}")).collect();
        eprintln!(
            "hbg {target:?}: slope {:.2e} ci ({:.2e},{:.2e}) bound {:.2e} maxdef {:.3} maxima {}",
            report.slope, report.slope_ci.0, report.slope_ci.1,
            report.bound_estimate, report.max_ulam_defect, maxima.join(" ")
        );
    }
}
