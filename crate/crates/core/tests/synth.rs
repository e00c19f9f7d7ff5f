mod common;

use std::collections::BTreeSet;

use copymove_lbp::raster::Point;
use copymove_lbp::region::{boundary_band, connected_components, Region};
use copymove_lbp::synth::{
    base_images, corpus, sample_id, synthesize, write_corpus, Blend, ForgerySpec, GroundTruth, Shape,
    SpecDistribution,
};
use copymove_lbp::Error;

use common::{desk_corpus, feather};

fn spec(blend: Blend) -> ForgerySpec {
    ForgerySpec {
        shape: Shape::Ellipse { rx: 18.0, ry: 12.5 },
        position: (8, 10),
        offset: (70, 50),
        blend,
        seed: 3,
    }
}

#[test]
fn mask_matches_construction() {
    let base = base_images(1, 150, 120, 1).unwrap().remove(0);
    for blend in [Blend::None, feather()] {
        let s = spec(blend);
        let f = synthesize(&base, &s).unwrap();
        let source: BTreeSet<Point> = s.source_pixels().into_iter().collect();
        let pasted: BTreeSet<Point> = source.iter().map(|&(u, v)| (u + 70, v + 50)).collect();
        let marked: BTreeSet<Point> = f.mask().points().into_iter().collect();
        assert_eq!(marked, source.union(&pasted).copied().collect());
        let comps = connected_components(f.mask(), 1);
        assert_eq!(comps.len(), 2);
        let pasted_region = comps.iter().find(|r| r.label() == f.truth.pasted_label).unwrap();
        assert_eq!(pasted_region.pixels().iter().copied().collect::<BTreeSet<_>>(), pasted);
        let (cu, cv) = f.truth.pasted_centroid;
        let (su, sv) = f.truth.source_centroid;
        assert!((cu - su - 70.0).abs() < 1e-9 && (cv - sv - 50.0).abs() < 1e-9);
    }
}

#[test]
fn feathering_only_touches_the_pasted_band() {
    let base = base_images(1, 150, 120, 2).unwrap().remove(0);
    let plain = synthesize(&base, &spec(Blend::None)).unwrap();
    let soft = synthesize(&base, &spec(feather())).unwrap();
    let pasted = Region::from_points(
        9,
        spec(Blend::None).source_pixels().iter().map(|&(u, v)| (u + 70, v + 50)).collect(),
    )
    .unwrap();
    let pasted_mask = pasted.to_mask(150, 120).unwrap();
    let band: BTreeSet<Point> = boundary_band(&pasted, &pasted_mask, None, 4, 0)
        .unwrap()
        .pixels()
        .iter()
        .copied()
        .collect();
    let feathered: BTreeSet<Point> = soft.feathered.iter().copied().collect();
    assert_eq!(feathered, band);
    assert!(plain.feathered.is_empty());
    let mut changed = 0;
    for v in 0..120 {
        for u in 0..150 {
            if soft.image.get(u, v) != plain.image.get(u, v) {
                assert!(band.contains(&(u, v)), "({u}, {v}) changed outside the band");
                changed += 1;
            }
        }
    }
    assert!(changed > band.len() / 2, "feathering changed only {changed} pixels");
    // The source region and its surroundings are untouched.
    for (u, v) in spec(Blend::None).source_pixels() {
        assert_eq!(soft.image.get(u, v), base.get(u, v));
    }
}

#[test]
fn geometry_violations() {
    let base = base_images(1, 100, 80, 3).unwrap().remove(0);
    let mut s = spec(Blend::None);
    s.offset = (10, 0);
    assert!(matches!(synthesize(&base, &s), Err(Error::GeometryViolation(_))));
    s.offset = (90, 0);
    assert!(matches!(synthesize(&base, &s), Err(Error::GeometryViolation(_))));
    let roomy = base_images(1, 150, 120, 3).unwrap().remove(0);
    let bad = spec(Blend::GaussianFeather { sigma: 0.0, band: 4 });
    assert!(matches!(synthesize(&roomy, &bad), Err(Error::InvalidConfig(_))));
}

#[test]
fn corpus_is_seeded_and_schedule_independent() {
    let (_, a) = desk_corpus(feather(), 6);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (_, b) = pool.install(|| desk_corpus(feather(), 6));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.id, y.id);
        assert_eq!(x.forgery.image, y.forgery.image);
        assert_eq!(x.forgery.truth, y.forgery.truth);
    }
    // Blend does not change the drawn geometry.
    let (_, plain) = desk_corpus(Blend::None, 6);
    for (x, y) in a.iter().zip(&plain) {
        assert_eq!(x.forgery.truth.spec.shape, y.forgery.truth.spec.shape);
        assert_eq!(x.forgery.truth.spec.offset, y.forgery.truth.spec.offset);
        assert_eq!(x.forgery.mask(), y.forgery.mask());
    }
}

#[test]
fn corpus_respects_area_range() {
    let bases = base_images(2, 200, 200, 4).unwrap();
    let dist = SpecDistribution { area: (500, 900), ..SpecDistribution::with_blend(Blend::None) };
    for s in corpus(&bases, 10, &dist, 4).unwrap() {
        let n = s.forgery.truth.spec.source_pixels().len();
        assert!((500..=900).contains(&n), "area {n}");
    }
}

#[test]
fn impossible_corpus_is_exhausted() {
    let bases = base_images(1, 40, 40, 0).unwrap();
    let dist = SpecDistribution { area: (1000, 1200), ..SpecDistribution::default() };
    assert!(matches!(
        corpus(&bases, 1, &dist, 0),
        Err(Error::SampleExhausted { index: 0, attempts: 100 })
    ));
}

#[test]
fn corpus_files_round_trip() {
    let (_, samples) = desk_corpus(feather(), 3);
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &samples).unwrap();
    for s in &samples {
        let img = copymove_lbp::raster::read_gray(&dir.path().join(format!("images/{}.png", s.id))).unwrap();
        assert_eq!(img, s.forgery.image);
        let mask = copymove_lbp::raster::read_mask(&dir.path().join(format!("masks/{}.png", s.id))).unwrap();
        assert_eq!(&mask, s.forgery.mask());
        let text = std::fs::read_to_string(dir.path().join(format!("truth/{}.json", s.id))).unwrap();
        let truth = GroundTruth::from_json(&text).unwrap();
        assert_eq!(truth.spec, s.forgery.truth.spec);
        assert_eq!(truth.pasted_label, s.forgery.truth.pasted_label);
    }
    assert_eq!(sample_id(7, 50), "007");
    assert_eq!(sample_id(7, 5000), "0007");
}
