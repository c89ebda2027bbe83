use proptest::prelude::*;

use thermoform::empirical::{start_points, OrbitSample, DEFAULT_SEED};
use thermoform::equilibria::{bernoulli_measure, check_gibbs};
use thermoform::numeric::linspace;
use thermoform::pressure::{pressure_curve, pressure_matrix, pressure_periodic, Method, PotentialFamily};
use thermoform::spectra::{legendre_lyapunov, lyapunov_spectrum, temperature_curve};
use thermoform::symbolic::{enumerate_cylinders, itinerary, locate_periodic};
use thermoform::{MapSpec, Potential};

fn breakpoints() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.08f64..0.92, 1..4).prop_filter_map("breakpoints too close", |mut b| {
        b.sort_by(f64::total_cmp);
        let mut full = vec![0.0];
        full.extend(&b);
        full.push(1.0);
        full.windows(2).all(|w| w[1] - w[0] > 0.05).then_some(b)
    })
}

fn probs(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, m).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

fn lengths(b: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0];
    full.extend(b);
    full.push(1.0);
    full.windows(2).map(|w| w[1] - w[0]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn cylinders_tile_the_interval(b in breakpoints(), k in 1usize..6) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let total: f64 = enumerate_cylinders(&m, k).unwrap().iter().map(|c| c.interval.len()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn periodic_points_reproduce_their_words(b in breakpoints(), n in 1usize..6) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let orbits = locate_periodic(&m, n).unwrap();
        prop_assert_eq!(orbits.len(), m.branch_count().pow(n as u32));
        for o in &orbits {
            prop_assert_eq!(&itinerary(&m, o.point, n), &o.word);
        }
    }

    #[test]
    fn pressure_is_convex_and_nonincreasing(b in breakpoints()) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let c = pressure_curve(
            &m,
            &PotentialFamily::geometric(m.branch_count()),
            &linspace(-3.0, 3.0, 25),
            Method::CylinderMatrix { depth: 1 },
        )
        .unwrap();
        prop_assert!(c.is_discretely_convex(1e-9));
        prop_assert!(c.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!((c.values[12] - (m.branch_count() as f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn methods_agree_on_linear_maps(b in breakpoints(), t in -2.0f64..2.0) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let phi = Potential::geometric(t);
        let exact = lengths(&b).iter().map(|l| l.powf(t)).sum::<f64>().ln();
        prop_assert!((pressure_matrix(&m, &phi, 1).unwrap() - exact).abs() < 1e-10);
        prop_assert!((pressure_periodic(&m, &phi, 5, 0).unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn periodic_orbit_measures_lie_below_pressure(b in breakpoints(), t in -2.0f64..2.0) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let p = pressure_matrix(&m, &Potential::geometric(t), 1).unwrap();
        for o in locate_periodic(&m, 4).unwrap() {
            prop_assert!(p >= -t * o.birkhoff_log_deriv / 4.0 - 1e-9);
        }
    }

    #[test]
    fn variational_inequality(p in probs(3), v in prop::collection::vec(-2.0f64..2.0, 3)) {
        let d = MapSpec::piecewise_linear(&[0.25, 0.6]).unwrap();
        let mu = bernoulli_measure(&d, &Potential::bernoulli(&p)).unwrap();
        let phi = Potential::locally_constant(v.clone());
        let pressure = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!(mu.entropy + mu.integrate(&phi).unwrap() <= pressure + 1e-6);
    }

    #[test]
    fn gibbs_constant_is_depth_independent(p in probs(2)) {
        let d = MapSpec::doubling();
        let phi = Potential::bernoulli(&p);
        let mu = bernoulli_measure(&d, &phi).unwrap();
        let c1 = check_gibbs(&mu, &phi, 0.0, 1).unwrap().best_constant;
        let c8 = check_gibbs(&mu, &phi, 0.0, 8).unwrap().best_constant;
        prop_assert!((c1 - c8).abs() < 1e-9);
    }

    #[test]
    fn temperature_decreases_and_is_convex(p in probs(2)) {
        let q = linspace(-3.0, 3.0, 25);
        let c = temperature_curve(&MapSpec::doubling(), &Potential::bernoulli(&p), &q, Method::CylinderMatrix { depth: 1 })
            .unwrap();
        let t: Vec<f64> = c.t_values.iter().map(|x| x.finite().unwrap()).collect();
        prop_assert!(t.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(t.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9));
        prop_assert!(t[16].abs() < 1e-10);
        prop_assert!((t[12] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lyapunov_spectrum_stays_in_unit_range(b in breakpoints()) {
        let m = MapSpec::piecewise_linear(&b).unwrap();
        let curve = pressure_curve(
            &m,
            &PotentialFamily::geometric(m.branch_count()),
            &linspace(-12.0, 12.0, 97),
            Method::CylinderMatrix { depth: 1 },
        )
        .unwrap();
        let ls = lengths(&b);
        let (lo, hi) = curve.slope_range();
        let lambdas = linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 11);
        let spec = lyapunov_spectrum(&curve, &lambdas).unwrap();
        prop_assert!(spec.values.iter().all(|&v| (0.0..=1.0 + 1e-6).contains(&v)));
        // Lebesgue is invariant, so its exponent is where L reaches 1
        let acip: f64 = ls.iter().map(|l| -l * l.ln()).sum();
        prop_assert!((legendre_lyapunov(&curve, acip).unwrap().value - 1.0).abs() < 1e-5);
    }
}

#[test]
fn doubling_finite_time_exponent_is_exact() {
    let d = MapSpec::doubling();
    let o = OrbitSample::new(&d, 0.1234, 200, 0).unwrap();
    for k in [1, 7, 50, 200] {
        assert!((o.exponent_at(k) - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

// Ensemble RMS deviation of finite-time exponents from the acip exponent;
// the central limit theorem gives a factor sqrt 2 per doubling of n.
#[test]
fn finite_time_exponent_error_shrinks_with_n() {
    let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
    let lambda = (3f64.ln() + 2.0 * 1.5f64.ln()) / 3.0;
    let ns = [5_000, 10_000, 20_000];
    let orbits: Vec<OrbitSample> = start_points(200, DEFAULT_SEED)
        .into_iter()
        .map(|x| OrbitSample::new(&m, x, ns[2], DEFAULT_SEED).unwrap())
        .collect();
    let rms: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let s: f64 = orbits.iter().map(|o| (o.exponent_at(n) - lambda).powi(2)).sum();
            (s / orbits.len() as f64).sqrt()
        })
        .collect();
    for w in rms.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "rms {rms:?}");
    }
}
