//! End-to-end acceptance run: one line per criterion, non-zero exit on any failure.

use flatdiff::hodge::{anti_invariant_basis, constant_form, holomorphic_basis, OneForm};
use flatdiff::norms::{self, complex_saddle_connections, qd_from_basis, saddle_connections, systole};
use flatdiff::pairing::{self, PairingOptions};
use flatdiff::suites::{self, Status, Suite, VerifyConfig, VerifyReport};
use flatdiff::{catalog, DoubleCover, Mesh, QDElement, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;

const ROUNDOFF: f64 = 1e-10;

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn combine(forms: &[OneForm], c: &[C64]) -> OneForm {
    OneForm::combine(&forms.iter().collect::<Vec<_>>(), c)
}

fn suite_outcome(rep: &VerifyReport) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for s in &rep.suites {
        parts.push(format!("{} {:?}: {} checks, {} violations", s.suite, s.status, s.checks.len(), s.violations()));
        ok &= s.status == Status::Pass;
    }
    if ok {
        Ok(parts.join("; "))
    } else {
        Err(parts.join("; "))
    }
}

fn run_suite(name: &str, suite: Suite, cfg: &VerifyConfig) -> Outcome {
    let s = catalog::by_name(name).ok_or("unknown surface")?;
    let rep = suites::verify(name, &s, &[suite], cfg).map_err(|e| e.to_string())?;
    suite_outcome(&rep).map(|m| format!("{name}: {m}")).map_err(|m| format!("{name}: {m}"))
}

fn torus_oracle() -> Outcome {
    let t = Instant::now();
    let m = Mesh::triangulate(&catalog::square_torus_marked(), 0.02).map_err(|e| e.to_string())?;
    let q = QDElement::omega_squared(&m);
    let mut worst: f64 = 0.0;
    for b in [cx(1.0, 0.0), cx(0.0, 1.0), cx(0.3, -0.7)] {
        let eta = constant_form(&m, cx(0.0, 0.0), b);
        let r = pairing::pairing_closed(&m, &eta, &q, &PairingOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max((r.value - b).norm() / b.norm());
    }
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("max relative error {worst:.2e} at h = 0.02, {secs:.1} s");
    if worst <= 1e-3 && secs < 60.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn double_cover_bookkeeping() -> Outcome {
    let d = DoubleCover::new(&catalog::pillowcase()).map_err(|e| e.to_string())?;
    let m = Mesh::triangulate_cover(&d, 0.1).map_err(|e| e.to_string())?;
    let (b, c) = (cx(0.4, -1.1), cx(-0.2, 0.5));
    let eta = constant_form(&m, cx(0.0, 0.0), b);
    let p = pairing::pairing_principal(&d, &m, &eta, &QDElement::constant(&m, c)).map_err(|e| e.to_string())?;
    let pillow = (p - c * b).norm() / (c * b).norm();

    let d = DoubleCover::new(&catalog::q1111()).map_err(|e| e.to_string())?;
    let m = Mesh::triangulate_cover(&d, 0.1).map_err(|e| e.to_string())?;
    let basis = anti_invariant_basis(&m).map_err(|e| e.to_string())?;
    let k = basis.holomorphic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let eta = combine(&basis.harmonic, &random_coeffs(&mut rng, basis.harmonic.len()));
        // a random differential c₀ω² + Σ c_k 2ωβ_k pulled back from the base
        let c = random_coeffs(&mut rng, k + 1);
        let base = qd_from_basis(&m, &basis.holomorphic, &c[1..]).map_err(|e| e.to_string())?;
        let mut mat = base.coefficient_matrix().clone();
        mat[(0, 0)] = c[0];
        let q = base.with_coefficients(mat).map_err(|e| e.to_string())?;
        let pp = pairing::pairing_principal(&d, &m, &eta, &q).map_err(|e| e.to_string())?;
        let ph = pairing::pairing_halftranslation(&m, &eta, &q, &PairingOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max((ph.value - pp).norm() / pp.norm());
    }
    let msg = format!("pillowcase relative error {pillow:.2e}; Q(1,1,1,1) half-translation vs principal max relative difference {worst:.2e} over 10 seeds");
    if pillow <= 1e-3 && worst <= 1e-2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn witness_identity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, h) in [("pillowcase", 0.1), ("q1111", 0.2), ("octagon_quotient", 0.2)] {
        let d = DoubleCover::new(&catalog::by_name(name).unwrap()).map_err(|e| e.to_string())?;
        let m = Mesh::triangulate_cover(&d, h).map_err(|e| e.to_string())?;
        let hol = anti_invariant_basis(&m).map_err(|e| e.to_string())?.holomorphic;
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let beta = combine(&hol, &random_coeffs(&mut rng, hol.len()));
            let w = norms::lower_bound_witness(&m, &beta).map_err(|e| e.to_string())?;
            worst = worst.max((w.pairing - cx(w.beta_norm_sq, 0.0)).norm() / w.beta_norm_sq);
            ok &= w.l1_norm <= w.omega_norm * w.beta_norm_sq.sqrt() * (1.0 + 1e-12);
        }
        ok &= worst <= 1e-2;
        parts.push(format!("{name} max relative error {worst:.2e}"));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn disk_bounds() -> Outcome {
    let mv = norms::mean_value_check(0, 1000);
    let cfg = VerifyConfig { h: 0.1, trials: Some(20), ..VerifyConfig::default() };
    let s = catalog::octagon_quotient();
    let rep = suites::verify("octagon_quotient", &s, &[Suite::IntBeta], &cfg).map_err(|e| e.to_string())?;
    let n2 = rep.suites[0].checks.iter().filter(|c| c.name.starts_with("n2-bound")).count();
    let suite = suite_outcome(&rep);
    let msg = format!("mean-value: {} violations in {} trials; octagon cover: {}; {n2} n = 2 checks", mv.violations, mv.trials, suite.as_ref().unwrap_or_else(|e| e));
    if mv.violations == 0 && suite.is_ok() && n2 > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lattice_systole(l: f64) -> f64 {
    let n = l.ceil() as i64;
    let mut best = f64::INFINITY;
    for p in -n..=n {
        for q in -n..=n {
            if (p, q) != (0, 0) && gcd(p.abs(), q.abs()) == 1 {
                best = best.min(((p * p + q * q) as f64).sqrt());
            }
        }
    }
    best
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn systoles() -> Outcome {
    let e = |e: flatdiff::Error| e.to_string();
    let torus = systole(&catalog::square_torus_marked()).map_err(e)?;
    let oracle = lattice_systole(3.0);
    let oct = catalog::octagon();
    let coarse = saddle_connections(&oct, 2.0).map_err(e)?;
    // the same search over a different triangulation of the same surface
    let fine = Mesh::triangulate(&oct, 0.3).map_err(e)?;
    let other = complex_saddle_connections(&fine.fine, &fine.vertices, 2.0);
    let mut a: Vec<f64> = coarse.iter().map(|s| s.length).collect();
    let mut b: Vec<f64> = other.iter().map(|s| s.length).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let same = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9);
    let oct_sys = systole(&oct).map_err(e)?;
    let two_by_one = systole(&catalog::two_by_one_torus()).map_err(e)?;
    let msg = format!(
        "square torus {torus} (lattice {oracle}); octagon {} connections up to L = 2 on both triangulations ({}), systole {oct_sys}; 2x1 torus {two_by_one}",
        a.len(),
        b.len()
    );
    if torus == oracle && same && (oct_sys - 1.0).abs() < 1e-12 && (oct_sys - a[0]).abs() < 1e-12 && (two_by_one - 0.5).abs() < 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn discretization() -> Outcome {
    let e = |e: flatdiff::Error| e.to_string();
    let mut taus = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let m = Mesh::triangulate(&catalog::octagon(), h).map_err(e)?;
        let hb = holomorphic_basis(&m).map_err(e)?;
        taus.push(hb.normalized_periods(&m.homology()).map_err(e)?);
    }
    let d1 = (&taus[1] - &taus[0]).norm() / taus[1].norm();
    let d2 = (&taus[2] - &taus[1]).norm() / taus[2].norm();
    let mut torus_err: f64 = 0.0;
    for h in [0.5, 0.2, 0.1, 0.05] {
        let m = Mesh::triangulate(&catalog::square_torus_marked(), h).map_err(e)?;
        let hb = holomorphic_basis(&m).map_err(e)?;
        let tau = hb.normalized_periods(&m.homology()).map_err(e)?;
        // τ = i up to the choice of symplectic basis, i.e. up to τ ↦ τ + n
        let t = tau[(0, 0)];
        torus_err = torus_err.max((t.im - 1.0).abs()).max((t.re - t.re.round()).abs());
        let cov = hb.forms[0].covectors[0];
        torus_err = torus_err.max(hb.forms[0].covectors.iter().map(|c| (c[0] - cov[0]).norm() + c[1].norm()).fold(0.0, f64::max));
    }
    let msg = format!("octagon period change {d1:.2e} (h 0.2 -> 0.1), {d2:.2e} (0.1 -> 0.05); flat torus max error {torus_err:.1e}");
    // exact-to-rounding periods count as converged
    let decreasing = d2 < d1 || d1.max(d2) <= ROUNDOFF;
    if d1 <= 0.02 && decreasing && torus_err <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_flatdiff");
    let dir = std::env::temp_dir().join(format!("flatdiff-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (surface, extra) in [("builtin:pillowcase", vec![]), ("builtin:octagon", vec!["--h", "0.2"])] {
        let mut runs = Vec::new();
        for i in 0..2 {
            let out = dir.join(format!("{}-{i}.json", surface.trim_start_matches("builtin:")));
            let status = Command::new(bin)
                .args(["verify", surface, "all", "--seed", "7", "--out"])
                .arg(&out)
                .args(&extra)
                .stderr(std::process::Stdio::null())
                .status()
                .map_err(|e| e.to_string())?;
            if status.code() != Some(0) {
                return Err(format!("verify all on {surface} exited with {status}"));
            }
            runs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        outputs.push((surface, runs[0].len(), runs[0] == runs[1]));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let msg = outputs.iter().map(|(s, n, same)| format!("{s}: {n} bytes, identical = {same}")).collect::<Vec<_>>().join("; ");
    if outputs.iter().all(|o| o.2) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let octagon = &VerifyConfig { h: 0.1, ..VerifyConfig::default() };
    let covers = &VerifyConfig { h: 0.2, ..VerifyConfig::default() };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("torus pairing oracle", Box::new(torus_oracle)),
        ("Stokes invariance", Box::new(move || run_suite("octagon", Suite::Stokes, octagon))),
        ("residue-formula consistency", Box::new(move || run_suite("octagon", Suite::ResidueDecay, octagon))),
        ("double-cover bookkeeping", Box::new(double_cover_bookkeeping)),
        (
            "kernel property",
            Box::new(move || {
                let a = run_suite("pillowcase", Suite::Kernel, covers)?;
                let b = run_suite("q1111", Suite::Kernel, covers)?;
                Ok(format!("{a}; {b}"))
            }),
        ),
        (
            "Hodge-Teichmuller sandwich",
            Box::new(move || {
                let a = run_suite("pillowcase", Suite::HodgeTeich, covers)?;
                let b = run_suite("q1111", Suite::HodgeTeich, covers)?;
                Ok(format!("{a}; {b}"))
            }),
        ),
        ("witness identity", Box::new(witness_identity)),
        ("mean-value and disk bounds", Box::new(disk_bounds)),
        ("systole", Box::new(systoles)),
        ("discretization sanity", Box::new(discretization)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, msg) = match run() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {tag} [{name}] ({:.1} s) {msg}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
