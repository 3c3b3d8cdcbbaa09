use rank2_cli::config::*;
use rank2_cli::generator::*;
use rank2_cli::Suite;

fn base() -> String {
    "seed = 9\n[lattice]\nomega1 = [1.0, 0.0]\nomega2 = [0.3, 1.1]\n".into()
}

fn key_of(text: &str, suite: Suite) -> String {
    resolve(parse(text).unwrap(), suite, None, &[]).unwrap_err().key
}

#[test]
fn tau_form_matches_half_periods() {
    let a = resolve(parse(&base()).unwrap(), Suite::EllipticCheck, None, &[]).unwrap();
    let b = resolve(
        parse("seed = 9\n[lattice]\ntau = [0.3, 1.1]\n").unwrap(),
        Suite::EllipticCheck,
        None,
        &[],
    )
    .unwrap();
    assert_eq!((a.lattice.g2, a.lattice.g3), (b.lattice.g2, b.lattice.g3));
    assert_eq!(key_of("seed = 1\n[lattice]\ntau = [0.3, 1.1]\nomega1 = [1.0, 0.0]\n", Suite::EllipticCheck), "lattice.tau");
}

#[test]
fn parse_errors_point_at_keys() {
    assert_eq!(parse("[lattice]\nomega = [1.0, 0.0]\n").unwrap_err().key, "omega");
    assert_eq!(parse("seed = 1\n").unwrap_err().key, "lattice");
    assert_eq!(parse("seed = \"x\"\n[lattice]\n").unwrap_err().key, "<document>");
}

#[test]
fn tolerance_flags() {
    assert_eq!(parse_tol("ba.fit=1e-6").unwrap(), ("ba.fit".to_string(), 1e-6));
    assert_eq!(parse_tol("ba.fit").unwrap_err().key, "--tol");
    let r = resolve(parse(&base()).unwrap(), Suite::FlowRun, Some(2), &[("ba.fit".into(), 3.0)]).unwrap();
    assert_eq!(r.tol("ba.fit"), 3.0);
    assert_eq!(r.seed, Some(2));
    assert_eq!(r.config.tolerances.len(), default_tolerances().len());
}

#[test]
fn seed_requirements_follow_the_subcommand() {
    let no_seed = "[lattice]\ntau = [0.3, 1.1]\n";
    for s in [Suite::EllipticCheck, Suite::FlowRun, Suite::CommuteScan, Suite::BaVerify, Suite::FullSuite] {
        assert_eq!(key_of(no_seed, s), "seed", "{s:?}");
    }
}

#[test]
fn window_must_fit_the_ba_sites() {
    let text = base() + "[data]\nwindow = 16\n";
    assert_eq!(key_of(&text, Suite::BaVerify), "ba.sites");
    assert!(resolve(parse(&text).unwrap(), Suite::CommuteScan, None, &[]).is_ok());
}

#[test]
fn generator_is_deterministic_and_seed_sensitive() {
    let l = rank2::elliptic::make_lattice(rank2::C64::new(1.0, 0.0), rank2::C64::new(0.3, 1.1)).unwrap();
    let p = GeneratorParams { window: 16, ..Default::default() };
    let a = generate_inverse_data(&l, &p, 1).unwrap();
    let b = generate_inverse_data(&l, &p, 1).unwrap();
    let c = generate_inverse_data(&l, &p, 2).unwrap();
    assert_eq!(a.gamma, b.gamma);
    assert_eq!(a.v, b.v);
    assert_ne!(a.gamma, c.gamma);
    for n in a.window().sites() {
        let g = a.gamma.at(n) - p.gamma_centre;
        assert!(g.re.abs() <= p.gamma_radius && g.im.abs() <= p.gamma_radius);
    }
    let none = GeneratorParams { max_attempts: 0, ..p };
    assert!(generate_inverse_data(&l, &none, 1).is_err());
}

#[test]
fn random_lattices_are_oriented() {
    let mut rng = stream(4, 1);
    for _ in 0..20 {
        let l = random_lattice(&mut rng).unwrap();
        assert!(l.tau.im > 0.0);
        for z in cell_points(&l, &mut rng, 10) {
            assert!(l.reduce(z).dist_to_lattice > 1e-3);
        }
    }
}

#[test]
fn toda_states_stay_in_range() {
    let s = toda_state(12, (0.5, 1.5), (-0.5, 0.5), 3).unwrap();
    assert_eq!(s.window().len(), 12);
    assert!(s.c.values.iter().all(|c| (0.5..=1.5).contains(&c.re) && c.im == 0.0));
    assert!(s.v.values.iter().all(|v| (-0.5..=0.5).contains(&v.re)));
}
