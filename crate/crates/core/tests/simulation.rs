use specem_core::numeric::{argmax, mean, population_variance};
use specem_core::sim::{generate, series_rng, ClassSpec, SimSpec};
use specem_core::spectral::pmf_spectra;

fn lag1(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (num, den)
}

fn pooled_lag1(class: ClassSpec) -> f64 {
    let spec = SimSpec {
        classes: vec![class],
        n_per_class: 1000,
        series_len: 200,
        seed: 21,
    };
    let data = generate(&spec).unwrap();
    let (num, den) = data
        .set
        .iter()
        .map(|s| lag1(s.values()))
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    num / den
}

#[test]
fn white_noise_is_uncorrelated() {
    assert!(pooled_lag1(ClassSpec::WhiteNoise).abs() < 0.05);
    assert!(pooled_lag1(ClassSpec::Ar1 { phi: 0.0 }).abs() < 0.05);
}

#[test]
fn ar1_autocorrelation_matches_phi() {
    for phi in [0.5, 0.75] {
        let r = pooled_lag1(ClassSpec::Ar1 { phi });
        assert!((r - phi).abs() < 0.05, "phi {phi}: {r}");
    }
}

#[test]
fn ar1_stationary_variance() {
    for phi in [0.5, 0.75] {
        let class = ClassSpec::Ar1 { phi };
        let var = (0..1000)
            .map(|i| population_variance(&class.sample(200, &mut series_rng(4, i))))
            .sum::<f64>()
            / 1000.0;
        let expected = 1.0 / (1.0 - phi * phi);
        // Sample variance about the sample mean is biased low by roughly (1+phi)/((1-phi) T).
        assert!((var / expected - 1.0).abs() < 0.10, "phi {phi}: {var} vs {expected}");
    }
}

#[test]
fn sine_peaks_at_its_bin() {
    for (freq, bin) in [(0.1, 5), (0.2, 10)] {
        let spec = SimSpec {
            classes: vec![ClassSpec::NoisySine { freq, noise_sd: None }],
            n_per_class: 100,
            series_len: 50,
            seed: 2,
        };
        let spectra = pmf_spectra(&generate(&spec).unwrap().set).unwrap();
        let bins = spectra[0].bins();
        let avg: Vec<f64> = (0..bins)
            .map(|j| spectra.iter().map(|s| s.power()[j]).sum::<f64>() / 100.0)
            .collect();
        assert_eq!(spectra[0].bin_index(argmax(&avg)), bin);
    }
}

#[test]
fn five_class_design_is_standardized_and_deterministic() {
    let a = generate(&SimSpec::five_class(8)).unwrap();
    let b = generate(&SimSpec::five_class(8)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.set.len(), 500);
    assert_eq!(a.set.series_len(), 50);
    for s in a.set.iter() {
        assert!(mean(s.values()).abs() < 1e-12);
        assert!((population_variance(s.values()) - 1.0).abs() < 1e-12);
    }
    let c = generate(&SimSpec::five_class(9)).unwrap();
    assert_ne!(a.set, c.set);
}
