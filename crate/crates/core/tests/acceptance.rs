//! Acceptance run: one PASS/FAIL line per criterion with its clauses
//! listed underneath. Exits non-zero when a clause outside
//! `KNOWN_UNATTAINABLE` fails.

use ohara::flow::{distance_to_circle, flow_step, FlowOptions, FlowState};
use ohara::kernels::{m_alpha, EnergyParams};
use ohara::norms::{product_seminorm_check, sobolev_linf_norm};
use ohara::numeric::richardson;
use ohara::quadrature::{
    density_grid, energy, first_variation, holder_chain_check, second_variation, GridKind, QuadratureOptions,
};
use ohara::synth::{circle, ellipse, random_curve, random_field};
use ohara::variations::{first_variation_density, second_variation_density, Perturbation, PerturbationPair};
use ohara::verify::{
    circle_energy_reference, circle_weighted, diagonal_limit, fd_energy_gradient, fd_energy_hessian,
    fd_first_variation_density, LimitKind, LimitOptions,
};
use ohara::{ClosedCurve, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

/// Clauses that fail by construction; see the README.
const KNOWN_UNATTAINABLE: [&str; 2] = ["3a", "4b"];

const PARAMS: [(f64, f64); 4] = [(2.0, 1.0), (2.4, 1.0), (2.0, 2.0), (1.2, 2.0)];

struct Clause {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn clause(id: &'static str, pass: bool, detail: String) -> Clause {
    Clause { id, pass, detail }
}

fn params(a: f64, p: f64) -> EnergyParams {
    EnergyParams::new(a, p).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rotation(axis: [f64; 3], angle: f64) -> Vec<Vec<f64>> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    vec![
        vec![t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        vec![t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        vec![t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn rotate_field(u: &Field, r: &[Vec<f64>]) -> Field {
    u.map_rows(|x, out| {
        for (o, row) in out.iter_mut().zip(r) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    })
}

fn density_identity() -> Vec<Clause> {
    let band = QuadratureOptions::default().band;
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let c = random_curve(256, 100 + seed, 5, 0.2).unwrap();
        let m = c.len();
        for (a, p) in PARAMS {
            let par = params(a, p);
            for j in 0..m {
                for k in band as isize + 1..=(m / 2) as isize {
                    let fr = c.frame_steps(j, k);
                    let lib = m_alpha(&c, &fr, &par).unwrap();
                    // |Δf|^-a - D^-a = |Δf|^-a (1 - (|Δf| / D)^a)
                    let oracle = -(a * (fr.chord_norm / fr.d).ln()).exp_m1() / fr.chord_norm.powf(a);
                    worst = worst.max(rel(lib, oracle));
                }
            }
        }
    }
    vec![clause("1", worst <= 1e-11, format!("max rel gap {worst:.2e} (tol 1e-11)"))]
}

fn test_curve(m: usize) -> ClosedCurve {
    random_curve(m, 7, 5, 0.15).unwrap()
}

fn first_variation_check() -> Vec<Clause> {
    let c = test_curve(128);
    let phi = random_field(&c, 11, 4, 0.3);
    let pert = Perturbation::new(&c, &phi).unwrap();
    let opts = QuadratureOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pairs: Vec<(usize, usize)> = (0..20)
        .map(|_| {
            let i = rng.gen_range(0..c.len());
            let k = rng.gen_range(1..c.len());
            (i, (i + k) % c.len())
        })
        .collect();
    let (mut int_gap, mut pt_gap) = (0.0f64, 0.0f64);
    for (a, p) in PARAMS {
        let par = params(a, p);
        let g = first_variation(&c, &phi, &par).unwrap().value;
        let fd = fd_energy_gradient(&c, &phi, &par, None, &opts).unwrap().richardson;
        int_gap = int_gap.max(rel(g, fd));
        for &(i, j) in &pairs {
            let pair = c.pair_frame(i, j).unwrap();
            let g = first_variation_density(&c, &pert, &pair, &par).unwrap().sum;
            let fd = fd_first_variation_density(&c, &phi, i, j, &par, 4e-3).unwrap().richardson;
            pt_gap = pt_gap.max(rel(g, fd));
        }
    }
    vec![
        clause("2a", int_gap <= 1e-6, format!("∬G vs FD of E: max rel gap {int_gap:.2e} (tol 1e-6)")),
        clause("2b", pt_gap <= 1e-6, format!("pointwise G vs FD at 20 pairs: max rel gap {pt_gap:.2e} (tol 1e-6)")),
    ]
}

fn second_variation_check() -> Vec<Clause> {
    let c = test_curve(128);
    let phi = random_field(&c, 11, 4, 0.3);
    let psi = random_field(&c, 12, 4, 0.3);
    let pp = PerturbationPair::from_fields(&c, &phi, &psi).unwrap();
    let swapped = pp.swapped();
    let opts = QuadratureOptions::default();
    let (mut lit, mut full, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    for (a, p) in PARAMS {
        let par = params(a, p);
        let h = second_variation(&c, &phi, &psi, &par).unwrap().value;
        let j = ohara::quadrature::antipodal_term(&c, &phi, &psi, &par).unwrap();
        let fd = fd_energy_hessian(&c, &phi, &psi, &par, None, &opts).unwrap().richardson;
        lit = lit.max(rel(h, fd));
        full = full.max(rel(h + j, fd));
        for i in 0..c.len() {
            for k in 1..=(c.len() / 2) as isize {
                let fr = c.frame_steps(i, k);
                let x = second_variation_density(&c, &pp, &fr, &par).unwrap().sum;
                let y = second_variation_density(&c, &swapped, &fr, &par).unwrap().sum;
                sym = sym.max((x - y).abs() / x.abs().max(1e-300));
            }
        }
    }
    vec![
        clause("3a", lit <= 1e-4, format!("∬H vs mixed FD of E: max rel gap {lit:.2e} (tol 1e-4)")),
        clause("3b", full <= 1e-4, format!("∬H + antipodal term vs mixed FD of E: max rel gap {full:.2e} (tol 1e-4)")),
        clause("3c", sym <= 1e-10, format!("H(phi, psi) vs H(psi, phi): max rel gap {sym:.2e} (tol 1e-10)")),
    ]
}

fn circle_asymptotics() -> Vec<Clause> {
    let mut worst = 0.0f64;
    for a in [2.0, 2.4, 3.0] {
        for p in [1.0, 2.0] {
            let vals: Vec<f64> = (0..8).map(|k| circle_weighted(a, p, (a - 2.0) * p, 0.2 / 2f64.powi(k))).collect();
            let ext = richardson(&vals, 2.0, 2.0, 2.0);
            worst = worst.max(rel(ext, (a / 24.0).powf(p)));
        }
    }
    let w = circle_weighted(3.0, 1.0, 0.9, 1e-3);
    vec![
        clause(
            "4a",
            worst <= 1e-5,
            format!("weighted circle density -> (alpha/24)^p: max rel gap {worst:.2e} (tol 1e-5)"),
        ),
        clause("4b", w > 1e3, format!("weight exponent 0.9 at Δs = 1e-3, (3,1): {w:.4e} (needs > 1e3)")),
    ]
}

fn diagonal_limits() -> Vec<Clause> {
    let mut out = Vec::new();
    for (id, name, c) in
        [("5a", "unit circle", circle(256, 1.0, 2).unwrap()), ("5b", "ellipse (2,1)", ellipse(256, 2.0, 1.0).unwrap())]
    {
        let phi = random_field(&c, 21, 4, 0.3);
        let psi = random_field(&c, 22, 4, 0.3);
        let mut worst = (0.0f64, "");
        for (a, p) in [(2.0, 1.0), (2.4, 1.0), (2.0, 2.0)] {
            let par = params(a, p).with_beta(1.0).unwrap();
            for i in (0..8).map(|k| k * c.len() / 8 + 3) {
                for which in LimitKind::ALL {
                    let r = diagonal_limit(&c, &phi, &psi, &par, i, which, &LimitOptions::default()).unwrap();
                    if r.gap > worst.0 {
                        worst = (r.gap, r.which);
                    }
                }
            }
        }
        out.push(clause(
            id,
            worst.0 <= 1e-4,
            format!("{name}: 11 limits at 8 points, max rel gap {:.2e} ({}) (tol 1e-4)", worst.0, worst.1),
        ));
    }
    out
}

fn holder_chain() -> Vec<Clause> {
    let mut worst = (f64::INFINITY, "");
    for (k, a) in [2.0, 2.1, 2.2, 2.3, 2.45].into_iter().enumerate() {
        let c = random_curve(128, 300 + k as u64, 5, 0.2).unwrap();
        let phi = random_field(&c, 400 + k as u64, 5, 0.3);
        let psi = random_field(&c, 500 + k as u64, 5, 0.3);
        let rep = holder_chain_check(&c, &phi, &psi, &params(a, 2.0), 2).unwrap();
        for e in &rep.entries {
            if e.margin < worst.0 {
                worst = (e.margin, e.name);
            }
        }
    }
    vec![clause("6", worst.0 >= -1e-10, format!("min margin {:.3e} ({}) (needs >= -1e-10)", worst.0, worst.1))]
}

fn product_estimate() -> Vec<Clause> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::INFINITY;
    for k in 0..20u64 {
        let c = random_curve(128, 600 + k, 6, 0.25).unwrap();
        let phi = random_field(&c, 700 + k, 6, 0.3);
        let beta = rng.gen_range(0.05..=1.0);
        worst = worst.min(product_seminorm_check(&c, &phi, beta, None).unwrap().margin);
    }
    vec![clause("7", worst >= -1e-10, format!("min margin {worst:.3e} over 20 instances (needs >= -1e-10)"))]
}

fn invariances() -> Vec<Clause> {
    let c = test_curve(128);
    let phi = random_field(&c, 31, 4, 0.3);
    let psi = random_field(&c, 32, 4, 0.3);
    let r = rotation([0.3, -1.0, 0.7], 1.1);
    let b = [0.4, -2.0, 1.5];
    let moved = c.rigid_motion(&r, &b).unwrap();
    let (mphi, mpsi) = (rotate_field(&phi, &r), rotate_field(&psi, &r));
    let shift = 17;
    let shifted = c.shifted(shift).unwrap();
    let (sphi, spsi) = (phi.shifted(shift), psi.shifted(shift));
    let (mut rigid, mut scale, mut dil) = (0.0f64, 0.0f64, 0.0f64);
    for (a, p) in PARAMS {
        let par = params(a, p);
        let eval = |c: &ClosedCurve, u: &Field, v: &Field| {
            [
                energy(c, &par).unwrap().value,
                first_variation(c, u, &par).unwrap().value,
                second_variation(c, u, v, &par).unwrap().value,
            ]
        };
        let base = eval(&c, &phi, &psi);
        for other in [eval(&moved, &mphi, &mpsi), eval(&shifted, &sphi, &spsi)] {
            for (x, y) in base.iter().zip(other) {
                rigid = rigid.max(rel(y, *x));
            }
        }
        let e2 = energy(&c.scaled(2.0).unwrap(), &par).unwrap().value;
        scale = scale.max(rel(e2, 2f64.powf(2.0 - a * p) * base[0]));
    }
    let par = params(2.0, 1.0);
    let e = energy(&c, &par).unwrap().value;
    let f = c.positions().clone();
    let g = first_variation(&c, &f, &par).unwrap().value;
    let h = second_variation(&c, &f, &f, &par).unwrap().value;
    dil = dil.max(g.abs() / e).max(h.abs() / e);
    vec![
        clause(
            "8a",
            rigid <= 1e-12,
            format!("E, ∬G, ∬H under rigid motion and shift: max rel gap {rigid:.2e} (tol 1e-12)"),
        ),
        clause("8b", scale <= 1e-8, format!("E(2f) vs 2^(2-alpha p) E(f): max rel gap {scale:.2e} (tol 1e-8)")),
        clause("8c", dil <= 1e-6, format!("(2,1) δE[f], δ²E[f,f] relative to E: {dil:.2e} (tol 1e-6)")),
    ]
}

fn circle_energy() -> Vec<Clause> {
    let par = params(2.0, 1.0);
    let reference = circle_energy_reference(2.0, 1.0, 1.0);
    let e512 = energy(&circle(512, 1.0, 2).unwrap(), &par).unwrap().value;
    let e1024 = energy(&circle(1024, 1.0, 2).unwrap(), &par).unwrap().value;
    vec![
        clause(
            "9a",
            rel(e512, reference) <= 1e-8 && rel(reference, 4.0) <= 1e-12,
            format!(
                "M = 512: E = {e512:.15}, 1D reference {reference:.15}, rel gap {:.2e} (tol 1e-8)",
                rel(e512, reference)
            ),
        ),
        clause(
            "9b",
            rel(e1024, e512) <= 1e-6,
            format!("M = 1024 vs 512: rel change {:.2e} (tol 1e-6)", rel(e1024, e512)),
        ),
    ]
}

fn flow_descent() -> Vec<Clause> {
    let m = 256;
    let pts: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            let r = 1.0 + 0.05 * (3.0 * t).cos();
            vec![r * t.cos(), r * t.sin(), 0.0]
        })
        .collect();
    let c = ClosedCurve::from_samples(&pts, true).unwrap();
    let d0 = distance_to_circle(&c);
    let par = params(2.0, 1.0);
    let opts = FlowOptions::default();
    let mut st = FlowState::new(c, &par, 0.05, &opts).unwrap();
    let mut accepted = 0;
    let mut halted = None;
    while accepted < 50 && st.step < 200 {
        match flow_step(&st, &par, &opts) {
            Ok(next) => {
                if next.dts.last().is_some_and(|d| *d > 0.0) {
                    accepted += 1;
                }
                st = next;
            }
            Err(e) => {
                halted = Some(e.to_string());
                break;
            }
        }
    }
    let monotone = st.energies.windows(2).all(|w| w[1] <= w[0]);
    let d1 = distance_to_circle(&st.curve);
    let pass = monotone && accepted >= 50 && d1 < d0 && halted.is_none();
    vec![clause(
        "10",
        pass,
        format!(
            "{accepted} accepted steps, monotone {monotone}, E {:.10} -> {:.10}, distance {d0:.3e} -> {d1:.3e}{}",
            st.energies[0],
            st.energy(),
            halted.map(|h| format!(", {h}")).unwrap_or_default()
        ),
    )]
}

fn boundedness_ratio() -> Vec<Clause> {
    let c = test_curve(128);
    let par = params(2.0, 1.0);
    let l = c.length();
    let ratios: Vec<f64> = (0..20u64)
        .map(|k| {
            let phi = random_field(&c, 800 + k, 2 + (k as usize % 6), 0.3);
            let g = density_grid(&c, &par, &GridKind::FirstVariation(phi.clone()), None, 2).unwrap();
            let norm = sobolev_linf_norm(&c, &phi.derivative(l), par.sigma(), 2.0 * par.p()).unwrap().value;
            (g.l1 + g.band_l1) / norm
        })
        .collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    vec![clause("11", hi / lo <= 10.0, format!("ratio range [{lo:.3e}, {hi:.3e}], spread {:.2} (tol 10)", hi / lo))]
}

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    type Criterion = (&'static str, fn() -> Vec<Clause>);
    let criteria: [Criterion; 11] = [
        ("density identity", density_identity),
        ("first variation", first_variation_check),
        ("second variation", second_variation_check),
        ("circle asymptotics", circle_asymptotics),
        ("diagonal limits", diagonal_limits),
        ("Hölder chain", holder_chain),
        ("product estimate", product_estimate),
        ("invariances", invariances),
        ("circle energy", circle_energy),
        ("flow descent", flow_descent),
        ("boundedness ratio", boundedness_ratio),
    ];
    let mut unexpected = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let clauses = run();
        let pass = clauses.iter().all(|c| c.pass);
        println!(
            "criterion {:>2} {:<20} {}  ({:.1}s)",
            n + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        for c in &clauses {
            let known = KNOWN_UNATTAINABLE.contains(&c.id);
            let tag = match (c.pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("    {:<4} {:<12} {}", c.id, tag, c.detail);
            if !c.pass && !known {
                unexpected.push(c.id);
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all clauses pass except the known-unattainable {KNOWN_UNATTAINABLE:?}");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
