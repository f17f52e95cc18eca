use optomech::coefficients::{classify, closed_form_set, f_quadrature_set, Entry};
use optomech::mechanics::wrap_angle;
use optomech::params::{DriveSpec, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(entry: Entry, rng: &mut ChaCha8Rng) -> ModelSpec {
    let g = rng.gen_range(-1.5..1.5);
    let off_resonance = |rng: &mut ChaCha8Rng| loop {
        let w: f64 = rng.gen_range(0.1..3.0);
        if (w - 1.0).abs() > 0.1 {
            break w;
        }
    };
    let none = DriveSpec::default();
    match entry {
        Entry::ConstantCoupling => ModelSpec::coupling_only(g),
        Entry::ModulatedCoupling => {
            let w = off_resonance(rng);
            ModelSpec::new(DriveSpec::offset_sin(g, rng.gen_range(0.0..1.0), w), none, none)
        }
        Entry::ResonantCoupling => ModelSpec::new(DriveSpec::offset_sin(g, rng.gen_range(0.0..1.0), 1.0), none, none),
        Entry::ConstantDisplacement => ModelSpec::new(DriveSpec::constant(g), DriveSpec::constant(rng.gen_range(-2.0..2.0)), none),
        Entry::ModulatedDisplacement => {
            let w = off_resonance(rng);
            ModelSpec::new(DriveSpec::constant(g), DriveSpec::cosine(rng.gen_range(-2.0..2.0), w), none)
        }
        Entry::ResonantDisplacement => {
            ModelSpec::new(DriveSpec::constant(g), DriveSpec::cosine(rng.gen_range(-2.0..2.0), 1.0), none)
        }
        Entry::ConstantSqueezing | Entry::ConstantSqueezingApprox => {
            ModelSpec::new(DriveSpec::constant(g), none, DriveSpec::constant(rng.gen_range(0.0..1.0)))
        }
        Entry::ResonantSqueezingApprox => {
            ModelSpec::new(DriveSpec::constant(g), none, DriveSpec::cosine(rng.gen_range(0.0..0.05), 2.0))
        }
    }
}

#[test]
fn exact_entries_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for entry in Entry::ALL.into_iter().filter(|e| !e.is_approximate()) {
        let mut worst = 0.0f64;
        for _ in 0..40 {
            let spec = draw(entry, &mut rng);
            assert_eq!(classify(&spec, false).unwrap().0, entry);
            let tau = rng.gen_range(0.0..4.0 * std::f64::consts::PI);
            let (_, a) = closed_form_set(&spec, tau, false).unwrap();
            let b = f_quadrature_set(&spec, tau).unwrap();
            worst = worst.max(a.f.max_abs_diff(&b.f));
            worst = worst.max(wrap_angle(a.j.jb - b.j.jb).abs()).max((a.j.jp - b.j.jp).abs()).max((a.j.jm - b.j.jm).abs());
        }
        assert!(worst < 1e-8, "{entry:?}: max deviation {worst:e}");
    }
}

#[test]
fn approximate_entries_track_quadrature_for_small_squeezing() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for entry in [Entry::ConstantSqueezingApprox, Entry::ResonantSqueezingApprox] {
        for _ in 0..20 {
            let g: f64 = rng.gen_range(0.2..1.0);
            let d2: f64 = rng.gen_range(0.001..0.01);
            let spec = match entry {
                Entry::ConstantSqueezingApprox => ModelSpec::new(DriveSpec::constant(g), DriveSpec::default(), DriveSpec::constant(d2)),
                _ => ModelSpec::new(DriveSpec::constant(g), DriveSpec::default(), DriveSpec::cosine(d2, 2.0)),
            };
            let tau = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let (_, a) = closed_form_set(&spec, tau, true).unwrap();
            let b = f_quadrature_set(&spec, tau).unwrap();
            // leading neglected terms are first order in d2 at fixed d2 tau
            assert!(a.f.max_abs_diff(&b.f) < 20.0 * d2 * g.max(g * g) * (1.0 + tau), "{entry:?} g={g} d2={d2} tau={tau}");
        }
    }
}
