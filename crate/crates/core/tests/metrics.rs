use hybrid_precoding::digital::Structure;
use hybrid_precoding::metrics::{power_consumption, spectral_efficiency, PowerParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn structure_power_differences(nt_blocks in 1usize..32, n_rf in 1usize..32, sw in 0.0f64..1.0, aps in 0.0f64..1.0) {
        let params = PowerParams { switch: sw, phase_shifter: aps, ..PowerParams::default() };
        let nt = nt_blocks * n_rf;
        let full = power_consumption(Structure::Full, nt, n_rf, &params);
        let sub = power_consumption(Structure::Sub, nt, n_rf, &params);
        let adaptive = power_consumption(Structure::Adaptive, nt, n_rf, &params);
        let tol = 1e-12 * full.max(1.0);
        prop_assert!((adaptive - sub - nt as f64 * sw).abs() <= tol);
        prop_assert!((full - sub - (n_rf - 1) as f64 * nt as f64 * aps).abs() <= tol);
    }

    #[test]
    fn rate_grows_with_each_sinr(sinrs in prop::collection::vec(0.0f64..1e6, 1..10), k in 0usize..10, bump in 0.0f64..10.0) {
        let k = k % sinrs.len();
        let base = spectral_efficiency(&sinrs).unwrap();
        let mut raised = sinrs.clone();
        raised[k] += bump;
        prop_assert!(spectral_efficiency(&raised).unwrap() >= base);
    }
}

#[test]
fn rate_rejects_negative_or_nan_sinr() {
    assert!(spectral_efficiency(&[1.0, -0.5]).is_err());
    assert!(spectral_efficiency(&[f64::NAN]).is_err());
    assert_eq!(spectral_efficiency(&[]).unwrap(), 0.0);
}
