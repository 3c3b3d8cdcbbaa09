//! The verification suites behind each subcommand.

use std::collections::BTreeMap;
use std::time::Instant;

use rank2::baker::*;
use rank2::construction::*;
use rank2::diffop::{compose, lincomb, BandedOp, Seq, Window};
use rank2::elliptic::{eval_special, laurent_at_origin, JetKind, LatticeSpec, Special};
use rank2::flows::*;
use rank2::C64;
use serde::Serialize;

use crate::config::{cx, KappaMode, Resolved};
use crate::generator::{cell_points, random_lattice, stream, toda_state};
use crate::report::{Cell, Check, Table};

const ONE: C64 = C64::new(1.0, 0.0);

/// Everything one suite contributes to a report.
#[derive(Default)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub details: BTreeMap<String, serde_json::Value>,
    pub timings: BTreeMap<String, f64>,
}

impl SuiteOutput {
    fn detail(&mut self, key: &str, v: &impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
    }

    fn merge(&mut self, o: SuiteOutput) {
        self.checks.extend(o.checks);
        self.tables.extend(o.tables);
        self.details.extend(o.details);
        self.timings.extend(o.timings);
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    // NaN-propagating, so an undefined entry cannot hide.
    xs.into_iter().fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn min_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) })
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn f(x: f64) -> Cell {
    Cell::Float(x)
}

/// Runs `body`; an error becomes a failing `{stage}.completed` check.
fn stage(name: &str, out: &mut SuiteOutput, body: impl FnOnce(&mut SuiteOutput) -> rank2::Result<()>) {
    let t0 = Instant::now();
    if let Err(e) = body(out) {
        out.checks.push(Check::failed(&format!("{name}.completed"), e.to_string()));
    }
    out.timings.insert(name.into(), t0.elapsed().as_secs_f64());
}

// ---------------------------------------------------------------------------

pub fn elliptic_check(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    stage("elliptic", &mut out, |out| {
        let cfg = &r.config.elliptic;
        let mut rng = stream(r.seed.unwrap_or(0), 1);
        let mut lattices = vec![r.lattice.clone()];
        for _ in 0..cfg.lattices {
            lattices.push(random_lattice(&mut rng)?);
        }
        let mut t = Table::new(
            "elliptic.csv",
            &["lattice", "omega1_re", "omega1_im", "omega2_re", "omega2_im", "g2_re", "g2_im", "g3_re", "g3_im", "ode", "legendre", "quasi_period", "jet"],
        );
        let (mut ode, mut leg, mut quasi, mut jet) = (vec![], vec![], vec![], vec![]);
        for (i, l) in lattices.iter().enumerate() {
            let pts = cell_points(l, &mut rng, cfg.points);
            let e = lattice_residuals(l, &pts)?;
            t.push(vec![
                Cell::Int(i as i64),
                f(l.omega1.re),
                f(l.omega1.im),
                f(l.omega2.re),
                f(l.omega2.im),
                f(l.g2.re),
                f(l.g2.im),
                f(l.g3.re),
                f(l.g3.im),
                f(e[0]),
                f(e[1]),
                f(e[2]),
                f(e[3]),
            ]);
            ode.push(e[0]);
            leg.push(e[1]);
            quasi.push(e[2]);
            jet.push(e[3]);
        }
        out.checks.push(Check::below("elliptic.ode", max_of(ode), r.tol("elliptic.ode")));
        out.checks.push(Check::below("elliptic.legendre", max_of(leg), r.tol("elliptic.legendre")));
        out.checks.push(Check::below("elliptic.quasi_period", max_of(quasi), r.tol("elliptic.quasi_period")));
        out.checks.push(Check::below("elliptic.jet", max_of(jet), r.tol("elliptic.jet")));
        let l = &r.lattice;
        let scale = l.g2.norm().max(l.g3.norm()).max(1.0);
        for (name, want, got) in [("elliptic.g2_expected", cfg.expect_g2, l.g2), ("elliptic.g3_expected", cfg.expect_g3, l.g3)] {
            if let Some(w) = want {
                out.checks.push(Check::below(name, (got - cx(w)).norm() / scale, r.tol("elliptic.invariant")));
            }
        }
        out.tables.push(t);
        Ok(())
    });
    out
}

/// Worst ODE, Legendre, quasi-periodicity and jet residuals on one lattice, all relative.
fn lattice_residuals(l: &LatticeSpec, pts: &[C64]) -> rank2::Result<[f64; 4]> {
    let mut ode: f64 = 0.0;
    let mut quasi: f64 = 0.0;
    for &z in pts {
        let (p, pp, zt) = l.eval_all(z)?;
        let terms = [pp * pp, 4.0 * p * p * p, l.g2 * p, l.g3];
        let scale: f64 = terms.iter().map(|t| t.norm()).sum();
        ode = ode.max((terms[0] - terms[1] + terms[2] + terms[3]).norm() / scale);
        for (w, eta) in [(l.omega1, l.eta1), (l.omega2, l.eta2)] {
            let d = l.zeta(z + 2.0 * w)? - zt - 2.0 * eta;
            quasi = quasi.max(d.norm() / zt.norm().max((2.0 * eta).norm()));
        }
    }
    let legendre = (l.eta1 * l.omega2 - l.eta2 * l.omega1 - C64::new(0.0, std::f64::consts::FRAC_PI_2)).norm()
        / std::f64::consts::FRAC_PI_2;
    let mut jet: f64 = 0.0;
    let r = 0.05 * l.min_period();
    for (kind, which) in [(JetKind::Wp, Special::Wp), (JetKind::WpPrime, Special::WpPrime), (JetKind::Zeta, Special::Zeta)] {
        let j = laurent_at_origin(l, kind, 16)?;
        for k in 0..8 {
            let z = C64::from_polar(r, 0.3 + 0.7 * k as f64);
            jet = jet.max(rel(j.eval(z), eval_special(l, which, z)?));
        }
    }
    Ok([ode, legendre, quasi, jet])
}

// ---------------------------------------------------------------------------

pub fn build_operators(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    stage("operators", &mut out, |out| {
        let d = r.inverse_data(r.data_seed())?;
        let set = r.config.data.formula_set.set();
        let dc = derive(&d, set)?;
        let l4 = build_llambda(&d, &dc)?;
        let l = &d.lattice;
        let mut t = Table::new(
            "coefficients.csv",
            &["n", "gamma_re", "gamma_im", "v_re", "v_im", "alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im", "c_re", "c_im", "u_re", "u_im"],
        );
        let nan = C64::new(f64::NAN, f64::NAN);
        let get = |s: &Seq, n: i64| s.get(n).unwrap_or(nan);
        for n in d.window().sites() {
            let mut row = vec![Cell::Int(n)];
            for z in [d.gamma.at(n), d.v.at(n), get(&dc.alpha1, n), get(&dc.alpha2, n), get(&dc.c_coeff, n), get(&dc.u, n)] {
                row.extend([f(z.re), f(z.im)]);
            }
            t.push(row);
        }
        out.tables.push(t);
        let nonfinite = l4.coeffs.iter().flatten().filter(|z| !z.is_finite()).count();
        out.checks.push(Check::equal("operators.l4_nonfinite", nonfinite as f64, 0.0));
        let vw = dc.valid_window;
        match set {
            FormulaSet::TransferCompatible => {
                // X_m vanishes at γ_{m+1} and Y_m(±γ_{m+1}) = −1/α_{m+1}.
                let mut worst: f64 = 0.0;
                for m in vw.lo..vw.hi {
                    let ct = ClosedTransfer::new(&d, &dc, m)?;
                    let g = d.gamma.at(m + 1);
                    worst = worst
                        .max(ct.x(l, g)?.norm())
                        .max((ct.y(l, g)? * dc.alpha1.at(m + 1) + 1.0).norm())
                        .max((ct.y(l, -g)? * dc.alpha2.at(m + 1) + 1.0).norm());
                }
                out.checks.push(Check::below("operators.transfer_identity", worst, r.tol("operators.identity")));
            }
            FormulaSet::Printed => {
                let worst = max_of(vw.sites().filter(|&n| n > vw.lo).map(|n| {
                    let s = dc.alpha1.at(n) + dc.alpha2.at(n) + 2.0 * d.v.at(n);
                    s.norm() / (2.0 * d.v.at(n)).norm().max(1.0)
                }));
                out.checks.push(Check::below("operators.printed_sum_rule", worst, r.tol("operators.identity")));
            }
        }
        out.detail("operators.data", &d);
        out.detail("operators.coefficients", &dc);
        out.detail("operators.l4", &l4);
        Ok(())
    });
    out
}

// ---------------------------------------------------------------------------

/// `L2² + u` with constant `v`, `c`, `u`: its commutant is seven-dimensional.
fn constant_l4(window: usize) -> rank2::Result<BandedOp> {
    let w = Window::new(0, window as i64 - 1)?;
    let (v0, c0, u0) = (C64::new(0.3, -0.2), C64::new(0.8, 0.1), C64::new(-0.5, 0.4));
    let l2 = BandedOp::from_fn(w, 1, 1, |p, _| match p {
        1 => ONE,
        0 => v0,
        _ => c0,
    });
    let sq = compose(&l2, &l2)?;
    lincomb(&[(ONE, &sq), (u0, &BandedOp::identity(sq.window).widen(2, 2))])
}

pub fn commute_scan(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    stage("commute", &mut out, |out| {
        let cfg = &r.config.commute;
        let bands = (cfg.bands[0], cfg.bands[1]);
        let sets = match r.data {
            crate::config::DataSource::Explicit(_) => 1,
            crate::config::DataSource::Generated(_) => cfg.seeds,
        };
        let mut t = Table::new(
            "commute.csv",
            &["seed", "basis_dim", "gap", "commutator_residual", "g2_rel_err", "g3_rel_err", "curve_residual"],
        );
        let (mut dims, mut gaps, mut comm, mut g2e, mut g3e, mut res) = (vec![], vec![], vec![], vec![], vec![], vec![]);
        for i in 0..sets {
            let seed = r.data_seed().wrapping_add(i as u64);
            let d = r.inverse_data(seed)?;
            let dc = derive(&d, r.config.data.formula_set.set())?;
            let l4 = build_llambda(&d, &dc)?;
            let p = find_commuting_partner(&l4, bands)?;
            let fit = fit_spectral_curve(&l4, &p.l6)?;
            let row = [
                p.basis_dim as f64,
                p.gap,
                p.commutator_residual,
                rel(fit.g2_hat, d.lattice.g2),
                rel(fit.g3_hat, d.lattice.g3),
                fit.residual,
            ];
            let mut cells = vec![Cell::Text(seed.to_string()), Cell::Int(p.basis_dim as i64)];
            cells.extend(row[1..].iter().map(|&x| f(x)));
            t.push(cells);
            dims.push(row[0]);
            gaps.push(row[1]);
            comm.push(row[2]);
            g2e.push(row[3]);
            g3e.push(row[4]);
            res.push(row[5]);
        }
        out.checks.push(Check::equal("commute.basis_dim_min", min_of(dims.clone()), 3.0));
        out.checks.push(Check::equal("commute.basis_dim_max", max_of(dims), 3.0));
        out.checks.push(Check::at_least("commute.gap_min", min_of(gaps), r.tol("commute.gap")));
        out.checks.push(Check::below("commute.l6_commutator", max_of(comm), r.tol("commute.commutator")));
        out.checks.push(Check::below("curve.g2_rel_err", max_of(g2e), r.tol("curve.invariants")));
        out.checks.push(Check::below("curve.g3_rel_err", max_of(g3e), r.tol("curve.invariants")));
        out.checks.push(Check::below("curve.residual", max_of(res), r.tol("curve.residual")));
        if cfg.control {
            let s = commutant(&constant_l4(40)?, bands)?;
            out.checks.push(Check::equal("commute.control_nullity", s.nullity as f64, 7.0));
        }
        out.tables.push(t);
        Ok(())
    });
    out
}

// ---------------------------------------------------------------------------

pub fn ba_verify(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    stage("ba", &mut out, |out| ba_inner(r, out));
    out
}

fn ba_inner(r: &Resolved, out: &mut SuiteOutput) -> rank2::Result<()> {
    let cfg = &r.config.ba;
    let s = cfg.sites as i64;
    let d = r.inverse_data(r.data_seed())?;
    let l = &d.lattice;
    // The background always comes from the transfer-compatible set; the
    // configured set only matters for the closed-form comparison.
    let dc = derive(&d, FormulaSet::TransferCompatible)?;
    let bg = Background::matched(&d, &dc, s + 6)?;
    let eta0 = [cx(cfg.eta0[0]), cx(cfg.eta0[1])];
    let family = ba_family(&d, &bg, s + 3, eta0, cfg.k_tail)?;
    let deeper = ba_family(&d, &bg, s + 2, eta0, cfg.k_tail + 4)?;
    let chis = (0..=s + 1).map(|n| transfer_matrix(&family, &bg, n)).collect::<rank2::Result<Vec<_>>>()?;
    let g0 = d.gamma.at(d.window().lo);
    let avoid = [g0, -g0];
    let train = sample_points(l, &avoid, cfg.train_points, 1);
    let fresh = sample_points(l, &avoid, cfg.fresh_points, 99);
    let fit4 = fit_operator(&family, l, Special::Wp, &train, (2, 2))?;
    let fit6 = fit_operator(&family, l, Special::WpPrime, &train, (3, 3))?;
    let l4 = build_llambda(&d, &dc)?;
    let al = detect_site_offset(&fit4.op, &l4, -2..=2)?;
    let reads = (0..=s)
        .map(|n| tyurin_from_chi(&chis[n as usize], Some(&chis[n as usize + 1]), l, d.c_sum))
        .collect::<rank2::Result<Vec<_>>>()?;
    let oracle = oracle_coefficients(&d, &chis, &fit4.op, &reads)?;

    let mut t = Table::new(
        "ba_verify.csv",
        &["n", "solve_residual", "uniqueness_gap", "eigen_residual_wp", "eigen_residual_wpp", "kappa_re", "kappa_im", "gamma_hat_err", "alpha_hat_err"],
    );
    let (mut kappa_bad, mut kappa_drift) = (0usize, Vec::new());
    let (mut tsum, mut talpha, mut tratio, mut tcount) = (vec![], vec![], vec![], 0usize);
    for n in 0..=s {
        let i = n as usize;
        let b = &family[i];
        // A site's residual needs every neighbour in the operator's band.
        let local = |op: &BandedOp, off: i64| -> rank2::Result<f64> {
            let (m, k) = (op.m_lower, op.n_upper);
            if i < m || i + k >= family.len() {
                return Ok(f64::NAN);
            }
            eigen_residual(op, &family[i - m..=i + k], l, Special::Wp, &fresh, off)
        };
        let e4 = local(&l4, al.offset)?;
        let e6 = if i >= 3 && i + 3 < family.len() {
            eigen_residual(&fit6.op, &family[i - 3..=i + 3], l, Special::WpPrime, &fresh, 0)?
        } else {
            f64::NAN
        };
        let k = extract_kappa(&chis[i])?;
        let kd = extract_kappa(&transfer_matrix(&deeper, &bg, n)?)?;
        if !k.is_finite() {
            kappa_bad += 1;
        }
        kappa_drift.push((k - kd).norm() / k.norm().max(1.0));
        let rd = &reads[i];
        if rd.points.len() != 2 {
            tcount += 1;
        }
        tsum.push(rd.sum_error);
        let (mut gerr, mut aerr): (f64, f64) = (0.0, 0.0);
        for (p, m) in rd.points.iter().zip(match_tyurin(rd, &d)) {
            gerr = gerr.max(m.gamma_err);
            let alpha = if m.sign > 0 { dc.alpha1.get(m.data_site) } else { dc.alpha2.get(m.data_site) };
            let e = alpha.map(|a| (p.alpha_hat - a).norm() / a.norm().max(1.0)).unwrap_or(f64::NAN);
            aerr = aerr.max(e);
            talpha.push(e);
            tratio.push(match p.residue_ratio {
                Some(q) => (q - p.alpha_hat).norm() / p.alpha_hat.norm().max(1.0),
                None => f64::NAN,
            });
        }
        t.push(vec![
            Cell::Int(n),
            f(b.solve_residual),
            f(b.uniqueness_gap),
            f(e4),
            f(e6),
            f(k.re),
            f(k.im),
            f(gerr),
            f(aerr),
        ]);
    }
    let sites = &family[..=s as usize];
    out.checks.push(Check::below("ba.solve_residual", max_of(sites.iter().map(|b| b.solve_residual)), r.tol("ba.solve_residual")));
    out.checks.push(Check::new(
        "ba.uniqueness_gap",
        min_of(sites.iter().map(|b| b.uniqueness_gap)),
        crate::report::Relation::AtLeast,
        r.tol("ba.uniqueness_gap"),
    ));
    let eig = eigen_residual(&l4, &family, l, Special::Wp, &fresh, al.offset)?;
    out.checks.push(
        Check::below("ba.eigen_residual_wp", eig, r.tol("ba.eigen_residual"))
            .with_note(format!("closed-form L4 on {} fresh points, site offset {}", fresh.len(), al.offset)),
    );
    let eig6 = eigen_residual(&fit6.op, &family, l, Special::WpPrime, &fresh, 0)?;
    out.checks.push(Check::below("ba.eigen_residual_wpp", eig6, r.tol("ba.eigen_residual")).with_note("fitted operator on fresh points"));
    out.checks.push(Check::below("ba.fit_vs_closed", al.max_rel_err, r.tol("ba.fit")));

    let mut disc = Table::new(
        "discrepancy.csv",
        &["coefficient", "formula_set", "err_at_zero_offset", "best_offset", "best_err", "sites", "agrees"],
    );
    let printed = derive(&d, FormulaSet::Printed)?;
    let mut rows = localize_discrepancy(&d, &dc, &oracle);
    let transfer_err = max_of(rows.iter().map(|x| x.err_at_zero_offset));
    rows.extend(localize_discrepancy(&d, &printed, &oracle));
    for x in &rows {
        disc.push(vec![
            Cell::Text(x.coefficient.clone()),
            Cell::Text(format!("{:?}", x.formula_set)),
            f(x.err_at_zero_offset),
            Cell::Int(x.best_offset),
            f(x.best_err),
            Cell::Int(x.sites as i64),
            Cell::Text(x.agrees.to_string()),
        ]);
    }
    out.checks.push(Check::below("ba.discrepancy_transfer_set", transfer_err, r.tol("ba.discrepancy")));
    out.checks.push(Check::at_least("ba.discrepancy_rows", rows.len() as f64, 1.0));
    out.detail("ba.discrepancy", &rows);
    out.detail(
        "ba.offsets",
        &BTreeMap::from([("chi", oracle.chi_offset), ("fitted_l4", oracle.op_offset), ("closed_l4", al.offset)]),
    );

    out.checks.push(Check::equal("tyurin.sites_without_two_points", tcount as f64, 0.0));
    out.checks.push(Check::below("tyurin.sum", max_of(tsum), r.tol("tyurin.sum")));
    out.checks.push(Check::below("tyurin.alpha", max_of(talpha), r.tol("tyurin.alpha")));
    out.checks.push(Check::below("tyurin.residue_ratio", max_of(tratio), r.tol("tyurin.residue_ratio")));
    out.checks.push(Check::equal("kappa.nonfinite", kappa_bad as f64, 0.0));
    out.checks.push(Check::below("kappa.stability", max_of(kappa_drift), r.tol("kappa.stability")));

    hierarchy(r, &d, &dc, &chis, s, out)?;
    out.tables.push(t);
    out.tables.push(disc);
    Ok(())
}

/// Rank-2 matrices built from the data and compared with the transfer jets,
/// plus a seeded rank-3 instance for the structural pattern alone.
fn hierarchy(
    r: &Resolved,
    d: &InverseData,
    dc: &DerivedCoefficients,
    chis: &[TransferMatrix],
    s: i64,
    out: &mut SuiteOutput,
) -> rank2::Result<()> {
    use rand::Rng;
    let sites = Window::new(0, s)?;
    // BA χ_n leads with −c_{n+2} and k − v_{n+2}.
    let a: Vec<Vec<Vec<C64>>> = sites.sites().map(|n| vec![vec![-dc.c_coeff.at(n + 2)], vec![-d.v.at(n + 2), ONE]]).collect();
    let w: Vec<Vec<C64>> = sites.sites().map(|n| vec![d.v.at(n + 1), d.v.at(n + 2)]).collect();
    let cq = vec![vec![ONE; 2]; sites.len()];
    let h = build_hierarchy_matrices(2, sites, &a, &w, &cq)?;
    let mut violations = validate_hierarchy(&h, &a, &w, &cq);
    let consistency = max_of(sites.sites().map(|n| {
        let i = n as usize;
        m_matrix_consistency(&chis[i], &h.m_plus[i], (w[i][0], w[i][1]))
    }));

    let mut rng = stream(r.data_seed(), 2);
    let mut z = || C64::new(rng.random_range(0.2..1.0), rng.random_range(-1.0..1.0));
    let n3 = 5;
    let a3: Vec<Vec<Vec<C64>>> = (0..n3)
        .map(|_| vec![vec![z()], vec![z(), z()], vec![z(), ONE]])
        .collect();
    let w3: Vec<Vec<C64>> = (0..n3).map(|_| (0..3).map(|_| z()).collect()).collect();
    let c3: Vec<Vec<C64>> = (0..n3).map(|_| (0..3).map(|_| z()).collect()).collect();
    let h3 = build_hierarchy_matrices(3, Window::new(0, n3 as i64 - 1)?, &a3, &w3, &c3)?;
    violations.extend(validate_hierarchy(&h3, &a3, &w3, &c3));

    out.checks.push(Check::equal("hierarchy.pattern_violations", violations.len() as f64, 0.0));
    out.checks.push(Check::below("hierarchy.m_consistency", consistency, r.tol("hierarchy.m_consistency")));
    if !violations.is_empty() {
        out.detail("hierarchy.violations", &violations);
    }
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn flow_run(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    stage("flow", &mut out, |out| {
        let cfg = &r.config.flow;
        let s0 = toda_state(
            cfg.period,
            (cfg.c_range[0], cfg.c_range[1]),
            (cfg.v_range[0], cfg.v_range[1]),
            r.seed.unwrap_or(0),
        )?;
        let kp = match cfg.kappa {
            KappaMode::Zero => KappaProvider::Zero,
            KappaMode::Table => {
                let tab = cfg.kappa_table.as_deref().unwrap_or_default();
                KappaProvider::Table(Seq::new(s0.window(), tab.iter().map(|&z| cx(z)).collect())?)
            }
        };
        let steps = (cfg.t_end / cfg.dt).round() as usize;
        let (_, samples) = integrate(&s0, cfg.dt, steps, &kp, cfg.sample_every)?;
        let mut t = Table::new("flow.csv", &["t", "I1", "I2", "monodromy_trace", "max|c|", "max|v|"]);
        for x in &samples {
            t.push(vec![f(x.t), f(x.i1.re), f(x.i2.re), f(x.monodromy_trace.re), f(x.max_c), f(x.max_v)]);
        }
        let first = &samples[0];
        let drift = |g: &dyn Fn(&FlowSample) -> C64| max_of(samples.iter().map(|x| (g(x) - g(first)).norm()));
        out.checks.push(Check::below("flow.delta_i1", drift(&|x| x.i1), r.tol("flow.invariants")));
        if cfg.kappa == KappaMode::Zero {
            out.checks.push(Check::below("flow.delta_i2", drift(&|x| x.i2), r.tol("flow.invariants")));
            out.checks.push(Check::below("flow.delta_monodromy", drift(&|x| x.monodromy_trace), r.tol("flow.monodromy")));
        }
        let finite = samples.iter().all(|x| x.max_c.is_finite() && x.max_v.is_finite());
        out.checks.push(Check::equal("flow.finite", finite as u8 as f64, 1.0));
        let o = convergence_order(&s0, cfg.order_t_end, cfg.order_dt, cfg.order_dt_ref, &kp)?;
        out.checks.push(Check::at_least("flow.rk4_order_low", o.order, r.tol("flow.order_min")));
        out.checks.push(Check::new("flow.rk4_order_high", o.order, crate::report::Relation::AtMost, r.tol("flow.order_max")));
        out.detail("flow.monodromy_probe", &MONODROMY_PROBE);
        out.detail("flow.convergence", &o);
        out.tables.push(t);
        Ok(())
    });
    out
}

pub fn full_suite(r: &Resolved) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    for s in [elliptic_check, build_operators, commute_scan, ba_verify, flow_run] {
        out.merge(s(r));
    }
    out
}
