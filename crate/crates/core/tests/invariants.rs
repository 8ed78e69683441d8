use ep_transonic::model::{g_of_n, n_star_closed_form};
use ep_transonic::numerics::linspace;
use ep_transonic::shock::ShockProblem;
use ep_transonic::smooth::{
    assemble_smooth_solution, build_tilde_trajectory, stability_probe_smooth, x_of_n, Direction,
    SmoothCase, SmoothSeed,
};
use ep_transonic::stability::{find_growth_rate, linearized_coeffs, ModeSearch};
use ep_transonic::{DopingProfile, Execution, FlowParams, Options};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn tilde_trajectory_is_monotone_in_x(alpha in 0.0_f64..2.0, bf in 0.2_f64..0.8) {
        let p = FlowParams::new(1.0, alpha, 1.0).unwrap();
        let opts = Options::default();
        let n_lo = if alpha == 0.0 { n_star_closed_form(&p, bf).unwrap() + 0.05 } else { 0.6 };
        let t = match build_tilde_trajectory(&p, bf, Direction::SupToSub, n_lo.max(0.6), 2.0, &opts) {
            Ok(t) => t,
            Err(ep_transonic::Error::BranchExhausted { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let m = x_of_n(&t, 1.0, 0.0).unwrap();
        let xs: Vec<f64> = linspace(t.n_range().0, t.n_range().1, 100).into_iter().map(|n| m.x(n).unwrap()).collect();
        prop_assert!(xs.windows(2).all(|w| w[1] > w[0]));
        // Ẽ has the sign of n − J on the sup-to-sub branch
        for n in linspace(t.n_range().0, t.n_range().1, 50) {
            let e = t.e_tilde(n).unwrap();
            prop_assert!(e == 0.0 || e.signum() == (n - 1.0).signum());
        }
    }

    #[test]
    fn smooth_alpha_zero_stays_on_first_integral(n0 in 0.45_f64..0.95, bf in 0.3_f64..0.7) {
        let p = FlowParams::new(1.0, 0.0, 1.0).unwrap();
        prop_assume!(n0 > n_star_closed_form(&p, bf).unwrap() + 0.02);
        let d = DopingProfile::constant(bf).unwrap();
        let opts = Options { grid_points: 256, ..Options::default() };
        match assemble_smooth_solution(&p, &d, SmoothSeed::InitialData { n0, e0: None }, &opts) {
            Ok(s) => {
                for q in s.branch.samples(None).unwrap() {
                    prop_assert!((q.e * q.e - g_of_n(q.n, &p, bf)).abs() < 1e-7);
                }
                prop_assert!((s.crossing.e_at).abs() < 1e-6);
            }
            Err(ep_transonic::Error::DomainTooShort { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn shocks_satisfy_entropy_and_flux(x_s in 0.02_f64..0.75) {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let prob = ShockProblem::new(&p, &b, 0.5, 0.5, &Options::default()).unwrap();
        match prob.solution_at(x_s) {
            Ok(s) => {
                prop_assert!(s.jump.entropy_ok);
                prop_assert!(s.rh_residuals().flux < 1e-10);
                prop_assert_eq!(s.rh_residuals().field, 0.0);
                let (sup_max, sub_min) = s.regime_extrema(200).unwrap();
                prop_assert!(sup_max < 1.0 && sub_min > 1.0);
            }
            Err(ep_transonic::Error::Degeneracy { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn boundary_map_decreases_pairwise(a in 0.02_f64..0.5, b in 0.02_f64..0.5) {
        prop_assume!((a - b).abs() > 1e-6);
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let d = DopingProfile::constant(0.5).unwrap();
        let prob = ShockProblem::new(&p, &d, 0.5, 0.5, &Options::default()).unwrap();
        let (x1, x2) = (a.min(b), a.max(b));
        prop_assert!(prob.boundary_map(x1).unwrap() > prob.boundary_map(x2).unwrap());
    }

    #[test]
    fn smooth_probe_is_symmetric(db in -1e-3_f64..1e-3) {
        let p = FlowParams::new(1.0, 1.0, 2.0).unwrap();
        let opts = Options { grid_points: 512, ..Options::default() };
        let c1 = SmoothCase { b0: 0.5, n0: 0.5 };
        let c2 = SmoothCase { b0: 0.5 + db, n0: 0.5 };
        let a = stability_probe_smooth(&p, c1, c2, &opts).unwrap();
        let b = stability_probe_smooth(&p, c2, c1, &opts).unwrap();
        prop_assert_eq!(a.delta0, b.delta0);
        prop_assert!((a.n_c1 - b.n_c1).abs() <= 1e-12 * (1.0 + a.n_c1));
    }
}

#[test]
fn growth_rate_bracket_moves_with_field() {
    // a more negative field at the shock widens (0, −Ē/ū)
    let p = FlowParams::new(1.0, 0.0, 0.5).unwrap();
    let b = DopingProfile::constant(0.5).unwrap();
    let opts = Options::default();
    let mut last = 0.0;
    for e_l in [-0.1, -0.2, -0.3] {
        let s = ShockProblem::new(&p, &b, 0.5, e_l, &opts).unwrap().solution_at(0.15).unwrap();
        let c = linearized_coeffs(&s.subsonic, &p).unwrap();
        let nu_max = c.nu_max().unwrap();
        assert!(nu_max > last);
        last = nu_max;
        let r = find_growth_rate(&c, 1.0, &opts).unwrap();
        assert!(r.signs.holds());
        if let ModeSearch::Found(m) = r.search {
            assert!(m.nu > 0.0 && m.nu < nu_max);
        }
    }
}

#[test]
fn execution_modes_give_identical_tables() {
    let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
    let b = DopingProfile::constant(0.5).unwrap();
    let par = ShockProblem::new(&p, &b, 0.5, 0.5, &Options::default()).unwrap();
    let seq = ShockProblem::new(&p, &b, 0.5, 0.5, &Options::default().with_execution(Execution::Sequential))
        .unwrap();
    assert_eq!(par.map_table(0.05, 0.5, 16), seq.map_table(0.05, 0.5, 16));
}
