use ond_web::{convergence, default_mu, energy_rate, identify};

#[test]
fn convergence_traces_line_up() {
    let c = convergence(100.0, default_mu(), 1.0, 0.0, 1.0).unwrap();
    let n = c.t().len();
    assert!(n > 100);
    for v in [c.ond_x1(), c.ond_x2(), c.pd_x1(), c.pd_x2()] {
        assert_eq!(v.len(), n);
    }
    // PD from (1, 0) with the double pole at -10: (1 + 10 t) e^(-10 t)
    let i = n / 2;
    let t = c.t()[i];
    let exact = (1.0 + 10.0 * t) * (-10.0 * t).exp();
    assert!((c.pd_x1()[i] - exact).abs() < 1e-6 * exact.max(1e-3));
    assert_eq!(c.ond_x1()[0], 1.0);
}

#[test]
fn convergence_rejects_bad_input() {
    assert!(convergence(100.0, 1e-4, 1.0, 0.0, 0.0).is_err());
    assert!(convergence(-1.0, 1e-4, 1.0, 0.0, 1.0).is_err());
}

#[test]
fn energy_rate_grid_layout() {
    let v = energy_rate(100.0, 1e-4, 1.0, 2.0, 3, 5).unwrap();
    assert_eq!(v.len(), 15);
    // middle row e1 = 0, column e2 = 2: 8 / mu
    assert!((v[5 + 4] - 8e4).abs() < 1e-6);
    // e2 = 0 column is zero
    assert!((0..3).all(|i| v[i * 5 + 2] == 0.0));
    assert!(energy_rate(100.0, 1e-4, 1.0, 1.0, 1, 5).is_err());
}

#[test]
fn identify_linear_voice_coil() {
    let id = identify(0.0, 0.0, 1000.0, 12).unwrap();
    assert_eq!(id.omega().len(), 12);
    assert!(
        (id.gain / id.true_gain - 1.0).abs() < 1e-3,
        "{} vs {}",
        id.gain,
        id.true_gain
    );
    assert!((id.tau / id.true_tau - 1.0).abs() < 1e-3);
    assert!((id.omega_c / (id.gain * 1000.0) - 1.0).abs() < 0.05);
    assert!(identify(0.0, 0.0, 1000.0, 1).is_err());
}
