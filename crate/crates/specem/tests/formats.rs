use proptest::prelude::*;
use specem::io;
use specem_core::spectral::periodograms;
use specem_core::TimeSeriesSet;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1e-6..1e-6f64, Just(0.0), Just(1.0 / 3.0), Just(f64::MIN_POSITIVE)]
}

proptest! {
    #[test]
    fn series_round_trip_is_exact(cols in prop::collection::vec(prop::collection::vec(finite(), 8), 1..5)) {
        let set = TimeSeriesSet::from_columns(cols.clone()).unwrap();
        let names = io::series_names(&set);
        let mut buf = Vec::new();
        io::write_series_csv(&set, &names, &mut buf).unwrap();
        let back = io::parse_series_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.labels().unwrap(), names.as_slice());
        for (a, b) in back.iter().zip(&cols) {
            prop_assert_eq!(a.values(), b.as_slice());
        }
    }

    #[test]
    fn spectra_round_trip_is_exact(cols in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 20), 1..4)) {
        let set = TimeSeriesSet::from_columns(cols).unwrap();
        let spectra = periodograms(&set).unwrap();
        let names = io::series_names(&set);
        let mut buf = Vec::new();
        io::write_spectra_csv(&names, &spectra, &mut buf).unwrap();
        let back = io::parse_spectra_csv(buf.as_slice(), 20).unwrap();
        prop_assert_eq!(back.len(), spectra.len());
        for ((name, s), (n0, s0)) in back.iter().zip(names.iter().zip(&spectra)) {
            prop_assert_eq!(name, n0);
            prop_assert_eq!(s.power(), s0.power());
        }
    }
}
