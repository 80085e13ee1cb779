//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use deltaclose_core::construct::{
    certify_prop7, corner_witness, make_antidifference, make_fm, make_prop7_phi, make_triangle_wave,
};
use deltaclose_core::exppoly::ExpPolynomial;
use deltaclose_core::groups::{frame_build, group_closure, GroupClosure, HyperplaneFrame};
use deltaclose_core::opalg::{telescope_expand, GridAxis, GridGeometry, TranslationPolynomial};
use deltaclose_core::scalar::{AlgebraicScalar, ComplexAlgebraic, ExpCoefficient};
use deltaclose_core::solver::{coset_fit, solver_solve, DifferenceSystem, SliceGrid};
use deltaclose_core::subspace::FunctionSubspace;
use deltaclose_core::vector::{self, FieldVector};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn telescoping() -> Outcome {
    let k = k2();
    let mut r = rng(1);
    let mut summands = 0;
    for case in 0..100 {
        let d = r.gen_range(1..=2);
        let t = r.gen_range(1..=3);
        let n = r.gen_range(0..=4);
        let h: Vec<FieldVector> = (0..t).map(|_| random_nonzero_vector(&mut r, &k, d, 3)).collect();
        let m: Vec<i64> = (0..t).map(|_| r.gen_range(-3..=3)).collect();
        let ex = telescope_expand(&k, &h, &m, n).map_err(|e| e.to_string())?;
        let mut y = vector::zeros(&k, d);
        for (v, &c) in h.iter().zip(&m) {
            y = vector::add(&y, &vector::scale_int(v, c));
        }
        let mut sum = TranslationPolynomial::zero(&k, d);
        for s in &ex.summands {
            sum = sum.add(&s.op).map_err(|e| e.to_string())?;
        }
        ensure!(sum == binomial_power(&k, &y, n), "case {case}: summands differ from (τ_y − 1)^{n}");
        summands += ex.summands.len();
    }
    Ok(format!("100 instances, {summands} summands, exact group-ring equality"))
}

fn divisibility() -> Outcome {
    let k = k2();
    let mut r = rng(2);
    let mut steps: Vec<FieldVector> = vec![vec![int(&k, 1)], vec![theta(&k)]];
    steps.extend((0..4).map(|_| random_nonzero_vector(&mut r, &k, 2, 3)));
    let mut checked = 0;
    for h in &steps {
        for p in (-3..=3).filter(|&p| p != 0) {
            for n in 0..=3 {
                let q = TranslationPolynomial::divisibility_factor(&k, h, p, n).map_err(|e| e.to_string())?;
                let lhs = binomial_power(&k, &vector::scale_int(h, p), n);
                ensure!(q.compose(&binomial_power(&k, h, n)).unwrap() == lhs, "p={p} n={n} h={h:?}");
                checked += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let f = make_fm(m, &int(&k, 1)).map_err(|e| e.to_string())?;
        for p in (-3..=3).filter(|&p| p != 0) {
            for i in 0..10_000 {
                let x = -20.0 + 40.0 * i as f64 / 9_999.0;
                worst = worst.max(f.difference_at(&[x], &[p as f64], m).norm());
            }
        }
    }
    ensure!(worst <= 1e-9, "max |Δ_ph^m f_m| = {worst:e}");
    Ok(format!("{checked} exact factorizations; max |Δ_ph^m f_m| = {worst:.1e} over 10^4 points"))
}

fn diamond() -> Outcome {
    let mut r = rng(3);
    let mut dims = Vec::new();
    for case in 0..50 {
        let (v, ops) = random_diamond_instance(&mut r);
        let dia = v.diamond(&ops).map_err(|e| format!("case {case}: {e}"))?;
        let plain: Vec<TranslationPolynomial> = ops.iter().map(|(op, _)| op.clone()).collect();
        ensure!(dia.same_span(&saturation_oracle(&v, &plain)), "case {case}: differs from saturation");
        ensure!(dia.contains_space(&v), "case {case}: does not contain V");
        for (i, op) in plain.iter().enumerate() {
            ensure!(dia.is_invariant(op).unwrap(), "case {case}: not invariant under L_{i}");
        }
        let mut shuffled = ops.clone();
        shuffled.shuffle(&mut r);
        ensure!(
            dia.same_span(&v.diamond(&shuffled).map_err(|e| e.to_string())?),
            "case {case}: depends on operator order"
        );
        dims.push(dia.dim());
    }
    Ok(format!("50 instances, closure dimensions {}..={}", dims.iter().min().unwrap(), dims.iter().max().unwrap()))
}

fn round_trip() -> Outcome {
    let k = k2();
    let mut r = rng(4);
    let start = Instant::now();
    let mut kernel_dims = 0;
    for case in 0..100 {
        let d = r.gen_range(1..=2);
        let f = random_exp_poly(&mut r, &k, d, 4, 3);
        let steps = if d == 1 {
            dense_steps_1d(&k, &[r.gen_range(1..=3), r.gen_range(1..=3)])
        } else {
            dense_steps_2d(&k, &[r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2)])
        };
        let sys = DifferenceSystem::from_function(&f, steps.clone()).map_err(|e| e.to_string())?;
        let sol = solver_solve(&sys).map_err(|e| format!("case {case}: {e}"))?;
        for ((h, m), g) in steps.iter().zip(&sys.rhs) {
            ensure!(sol.particular.forward_difference(h, *m).unwrap() == *g, "case {case}: nonzero forward residual");
        }
        for b in &sol.kernel_basis {
            ensure!(
                steps.iter().all(|(h, m)| b.forward_difference(h, *m).unwrap().is_zero()),
                "case {case}: kernel element not annihilated"
            );
        }
        let span = FunctionSubspace::span(&k, d, &sol.kernel_basis).unwrap();
        ensure!(
            span.contains(&sol.particular.try_sub(&f).unwrap()),
            "case {case}: recovered function differs outside the kernel"
        );
        kernel_dims += sol.kernel_basis.len();
    }
    let took = start.elapsed();
    ensure!(took <= Duration::from_secs(120), "took {took:?}");
    Ok(format!(
        "100 systems recovered exactly modulo kernels (total kernel dim {kernel_dims}) in {:.2}s",
        took.as_secs_f64()
    ))
}

fn constructions() -> Outcome {
    let k = k2();
    let mut r = rng(5);
    let mut worst_anti: f64 = 0.0;
    for h in [int(&k, 1), theta(&k)] {
        let hf = h.to_f64();
        let g = make_triangle_wave(&h).map_err(|e| e.to_string())?;
        let f = make_antidifference(g.clone(), &h).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let x = r.gen_range(-20.0..20.0) * hf;
            worst_anti = worst_anti.max((f.difference_at(&[x], &[hf], 1) - g.eval(&[x])).norm());
        }
    }
    ensure!(worst_anti <= 1e-10, "antidifference error {worst_anti:e}");

    let mut worst_fm: f64 = 0.0;
    for m in 1..=4 {
        let f = make_fm(m, &int(&k, 1)).map_err(|e| e.to_string())?;
        for i in 0..10_000 {
            let x = -20.0 + 40.0 * i as f64 / 9_999.0;
            worst_fm = worst_fm.max(f.difference_at(&[x], &[1.0], m).norm());
        }
    }
    ensure!(worst_fm <= 1e-9, "Δ^m f_m error {worst_fm:e}");

    let phi = make_triangle_wave(&int(&k, 1)).unwrap();
    let c = corner_witness(&phi, &[(-0.4, 0.4)], &[]).ok_or("no corner for ϕ")?;
    ensure!(c.point[0].abs() < 1e-3, "ϕ corner found at {}", c.point[0]);
    ensure!((c.gap() - 2.0).abs() <= 0.01, "ϕ corner gap {}", c.gap());
    let mut gaps = Vec::new();
    for m in 1..=4 {
        let f = make_fm(m, &int(&k, 1)).unwrap();
        let cm = corner_witness(&f, &[(-2.0, 2.0)], &[]).ok_or(format!("no corner for f_{m}"))?;
        gaps.push(format!("{:.2}", cm.gap()));
    }
    Ok(format!(
        "antidifference {worst_anti:.1e}, Δ^m f_m {worst_fm:.1e}, ϕ gap {:.4} at 0, f_1..f_4 gaps [{}]",
        c.gap(),
        gaps.join(", ")
    ))
}

struct Instance {
    closure: GroupClosure,
    frame: HyperplaneFrame,
    generators: Vec<FieldVector>,
    e: ExpPolynomial,
    m: u32,
}

fn plane_instance() -> Instance {
    let k = k2();
    let z = AlgebraicScalar::zero(&k);
    let generators = vec![vec![int(&k, 1), z.clone()], vec![theta(&k), z.clone()], vec![z, int(&k, 1)]];
    let e = ExpPolynomial::power(&k, &[2, 0]).try_add(&ExpPolynomial::power(&k, &[0, 1])).unwrap();
    instance(generators, e, 2)
}

fn space_instance() -> Instance {
    let k = k2();
    let z = AlgebraicScalar::zero(&k);
    let generators = vec![
        vec![int(&k, 1), z.clone(), z.clone()],
        vec![theta(&k), z.clone(), z.clone()],
        vec![z.clone(), int(&k, 1), int(&k, 1)],
        vec![z.clone(), z.clone(), int(&k, 2)],
    ];
    let wave = ExpPolynomial::exponential(
        &k,
        vec![ComplexAlgebraic::i(&k), ComplexAlgebraic::zero(&k), ComplexAlgebraic::zero(&k)],
    );
    let e = ExpPolynomial::power(&k, &[1, 1, 0])
        .try_add(&ExpPolynomial::power(&k, &[0, 0, 1]).scale(&ExpCoefficient::from_int(&k, 2)))
        .unwrap()
        .try_add(&wave)
        .unwrap();
    instance(generators, e, 2)
}

fn instance(generators: Vec<FieldVector>, e: ExpPolynomial, m: u32) -> Instance {
    let closure = group_closure(&generators).unwrap();
    let frame = frame_build(&closure).unwrap();
    Instance { closure, frame, generators, e, m }
}

fn cube_grid(d: usize, n: usize) -> GridGeometry {
    let axis = GridAxis::new(q(-1), q(1), n).unwrap();
    GridGeometry::new(vec![axis; d])
}

fn prop7_certificate() -> Outcome {
    let mut report = Vec::new();
    for inst in [plane_instance(), space_instance()] {
        let d = inst.closure.dim;
        ensure!(!inst.closure.dense, "d={d} instance is dense");
        let p = make_prop7_phi(&inst.frame, &inst.e, inst.m).map_err(|e| e.to_string())?;
        let cert = certify_prop7(&p, &inst.frame, &inst.generators, &cube_grid(d, 41)).map_err(|e| e.to_string())?;
        ensure!(cert.invariance.iter().all(|&b| b), "d={d}: H not invariant {:?}", cert.invariance);
        let worst = max_abs_f64(cert.membership_residuals.iter().copied());
        ensure!(worst <= 1e-8, "d={d}: membership residual {worst:e}");
        let corner = cert.corner.as_ref().ok_or(format!("d={d}: no corner witness"))?;
        report.push(format!("d={d}: dim H={}, residual {worst:.1e}, corner gap {:.2}", p.h_space.dim(), corner.gap()));
    }
    Ok(report.join("; "))
}

fn group_closures() -> Outcome {
    let k = k2();
    let z = AlgebraicScalar::zero(&k);
    let quarter = AlgebraicScalar::from_ratio(&k, 1, 4);
    let dyadic = group_closure(&[vec![int(&k, 1)], vec![AlgebraicScalar::from_ratio(&k, 1, 2)], vec![quarter.clone()]])
        .map_err(|e| e.to_string())?;
    ensure!(
        dyadic.v_basis.is_empty() && dyadic.lambda_basis == vec![vec![quarter]],
        "{{1, 1/2, 1/4}} gave V={:?} Λ={:?}",
        dyadic.v_basis,
        dyadic.lambda_basis
    );
    ensure!(group_closure(&[vec![int(&k, 1)], vec![theta(&k)]]).unwrap().dense, "{{1, √2}} not dense");
    let plane =
        group_closure(&[vec![int(&k, 1), z.clone()], vec![theta(&k), z.clone()], vec![z.clone(), int(&k, 1)]]).unwrap();
    ensure!(
        plane.v_basis == vec![vec![int(&k, 1), z.clone()]] && plane.lambda_basis == vec![vec![z.clone(), int(&k, 1)]],
        "plane example gave V={:?} Λ={:?}",
        plane.v_basis,
        plane.lambda_basis
    );

    let mut r = rng(7);
    let (mut dense, mut discrete) = (0, 0);
    for case in 0..30 {
        let gens = random_group_instance(&mut r);
        let d = gens[0].len();
        let c = group_closure(&gens).map_err(|e| e.to_string())?;
        let oracle = duality_search(&gens, 20);
        ensure!(
            c.dense == oracle.dense(d),
            "case {case}: closure says dense={} but duality search gives {:?} for {:?}",
            c.dense,
            oracle,
            gens
        );
        if c.dense {
            dense += 1;
        } else {
            discrete += 1;
        }
    }
    Ok(format!("named examples exact; 30 random cases agree with duality search ({dense} dense, {discrete} not)"))
}

fn slices() -> Outcome {
    let inst = plane_instance();
    let k = inst.closure.field.clone();
    let p = make_prop7_phi(&inst.frame, &inst.e, inst.m).map_err(|e| e.to_string())?;
    let orders: Vec<(FieldVector, u32)> = inst.generators.iter().map(|g| (g.clone(), inst.m)).collect();
    let lambdas = vec![vector::zeros(&k, 2), inst.frame.lattice_step()];
    let grid = SliceGrid { min: -1.0, max: 1.0, n: 21 };
    let fit = coset_fit(&p.phi, &inst.closure, &orders, &p.h_space, &lambdas, grid).map_err(|e| e.to_string())?;
    ensure!(fit.slices.len() == 2, "expected two slices");
    let worst = max_abs_f64(fit.slices.iter().map(|s| s.heldout_residual));
    ensure!(worst <= 1e-8, "held-out residual {worst:e}");
    let expected = make_fm(inst.m, &AlgebraicScalar::one(&k)).unwrap().eval(&[1.0]);
    let mut spread: f64 = 0.0;
    for x in &fit.heldout_points {
        let d = fit.slices[1].eval(x) - fit.slices[0].eval(x);
        spread = spread.max((d - expected).norm());
    }
    ensure!(spread <= 1e-8, "slices differ from f_m(1) by up to {spread:e}");
    Ok(format!("held-out residual {worst:.1e}; e_λ − e_0 = f_{}(1) = {} within {spread:.1e}", inst.m, expected.re))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("telescoping identity", telescoping),
        ("divisibility", divisibility),
        ("diamond closure", diamond),
        ("solver round trip", round_trip),
        ("antidifference and f_m constructions", constructions),
        ("coset construction certificate", prop7_certificate),
        ("group closure", group_closures),
        ("coset slices", slices),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
