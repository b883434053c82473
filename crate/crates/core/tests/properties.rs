use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use twophoton::analysis::{fidelity, moment, moment_bound, trace_distance};
use twophoton::cat_qubit::{
    embed_to_fock, project_to_qubit, sigma_x, sigma_y, sigma_z, slow_basis, solve_bloch, BlochVector, CatBasis,
    QubitDensity, SlowGenerator,
};
use twophoton::fock::{
    annihilation, cat_norms, cat_state, coherent_state, creation, identity_op, number_op, two_photon_jump, CatSign,
};
use twophoton::integrator::{step_kraus, step_rk4};
use twophoton::lindblad::{cat_model, drive_form_model, drive_from_alpha};
use twophoton::linalg;
use twophoton::random::{random_density, random_hermitian, random_qubit, random_unitary, rng};
use twophoton::reduction::vectorize::vectorize_generator;
use twophoton::reduction::{conserved_functionals, random_block_system, reduce_direct, reduce_dual};
use twophoton::{DensityMatrix, FockOperator, FockSpace};

fn space(n: usize) -> FockSpace {
    FockSpace::new(n).unwrap()
}

fn dist(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    linalg::frobenius(&(a - b))
}

fn operator(rho: &DensityMatrix) -> FockOperator {
    rho.to_operator()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_commutator_below_top_level(n in 2usize..30) {
        let s = space(n);
        let a = annihilation(s);
        let c = a.commutator(&creation(s)).sub(&identity_op(s));
        prop_assert!(c.block_norm(n - 1) < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalised_and_reflect(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let s = space(40);
        let alpha = C64::new(re, im);
        let k = coherent_state(s, alpha).unwrap();
        prop_assert!((k.norm() - 1.0).abs() < 1e-12);
        let m = coherent_state(s, -alpha).unwrap();
        for (n, (x, y)) in k.amplitudes().iter().zip(m.amplitudes()).enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((x * sign - y).norm() < 1e-14);
        }
    }

    #[test]
    fn cat_flip_identities(alpha in 0.3f64..2.0) {
        let s = space(40);
        let a = annihilation(s);
        let plus = cat_state(s, alpha, CatSign::Plus).unwrap();
        let minus = cat_state(s, alpha, CatSign::Minus).unwrap();
        prop_assert!((plus.norm() - 1.0).abs() < 1e-12 && (minus.norm() - 1.0).abs() < 1e-12);
        let (gp, gm) = cat_norms(alpha);
        let ap = a.apply(&plus);
        let want = minus.scale(C64::new(alpha * gm / gp, 0.0));
        prop_assert!((ap.amplitudes() - want.amplitudes()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9);
        let am = a.apply(&minus);
        let want = plus.scale(C64::new(alpha * gp / gm, 0.0));
        prop_assert!((am.amplitudes() - want.amplitudes()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9);
    }

    #[test]
    fn generator_output_is_hermitian_and_traceless(
        seed in any::<u64>(), alpha in 0.5f64..1.5, eps in 0.0f64..0.5, drive in any::<bool>()
    ) {
        let s = space(16);
        let model = if drive {
            drive_form_model(s, drive_from_alpha(alpha, 1.0), 1.0, eps).unwrap()
        } else {
            cat_model(s, alpha, 1.0, eps).unwrap()
        };
        let mut r = rng(seed);
        let x = random_hermitian(s, &mut r);
        let out = model.rhs(&x).unwrap();
        prop_assert!(out.is_hermitian(1e-12));
        prop_assert!(out.trace().norm() < 1e-11 * (1.0 + x.frobenius_norm()));
    }

    #[test]
    fn generator_is_linear(seed in any::<u64>(), c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let s = space(14);
        let model = cat_model(s, 1.0, 1.0, 0.1).unwrap();
        let mut r = rng(seed);
        let x = random_hermitian(s, &mut r);
        let y = random_hermitian(s, &mut r);
        let combo = x.scale(C64::new(c1, 0.0)).add(&y.scale(C64::new(c2, 0.0)));
        let lhs = model.rhs(&combo).unwrap();
        let rhs = model.rhs(&x).unwrap().scale(C64::new(c1, 0.0))
            .add(&model.rhs(&y).unwrap().scale(C64::new(c2, 0.0)));
        prop_assert!(dist(lhs.matrix(), rhs.matrix()) < 1e-10);
    }

    /// tr(L 𝔏_L(ρ) L†) ≤ −2 tr(LρL†) away from the truncation edge.
    #[test]
    fn lyapunov_inequality_pointwise(seed in any::<u64>(), alpha in 0.5f64..1.5) {
        let n = 24;
        let s = space(n);
        let model = cat_model(s, alpha, 1.0, 0.0).unwrap();
        let l = two_photon_jump(s, alpha);
        let rho = random_density(s, n - 5, &mut rng(seed));
        let d = model.rhs(&operator(&rho)).unwrap();
        let lhs = l.dot(&d).dot(&l.dagger()).trace().re;
        let v = rho.expectation(&l.dagger().dot(&l));
        prop_assert!(lhs <= -2.0 * v + 1e-9, "{lhs} vs {}", -2.0 * v);
    }

    /// tr(𝔏_L(ρ)N) ≤ −tr(ρN)² + μ at unit rate.
    #[test]
    fn first_moment_inequality(seed in any::<u64>(), support in 2usize..15) {
        let s = space(24);
        let model = cat_model(s, 1.0, 1.0, 0.0).unwrap();
        let mu = moment_bound(1.0, 1).unwrap().mu;
        let rho = random_density(s, support, &mut rng(seed));
        let d = model.rhs(&operator(&rho)).unwrap();
        let slope = d.dot(&number_op(s)).trace().re;
        let m = moment(&rho, 1);
        prop_assert!(slope <= -m * m + mu + 1e-9);
    }

    #[test]
    fn kraus_step_keeps_states_physical(seed in any::<u64>(), dt in 1e-4f64..2e-2, eps in 0.0f64..0.3) {
        let s = space(16);
        let model = cat_model(s, 1.0, 1.0, eps).unwrap();
        let mut rho = random_density(s, 12, &mut rng(seed));
        for _ in 0..20 {
            rho = step_kraus(&model, &rho, dt);
            prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
            prop_assert!(linalg::hermiticity_defect(rho.matrix()) < 1e-12);
            prop_assert!(rho.min_eigenvalue().unwrap() >= -1e-9);
        }
    }

    /// Two trajectories of one model never move apart in trace distance.
    #[test]
    fn trace_distance_contracts(seed in any::<u64>(), eps in 0.0f64..0.1, rk4 in any::<bool>()) {
        let s = space(14);
        let model = cat_model(s, 1.0, 1.0, eps).unwrap();
        let mut r = rng(seed);
        let mut rho = random_density(s, 10, &mut r);
        let mut sigma = random_density(s, 10, &mut r);
        let dt = 1e-3;
        let mut d = trace_distance(&rho, &sigma).unwrap();
        for _ in 0..50 {
            if rk4 {
                rho = step_rk4(&model, &rho, dt);
                sigma = step_rk4(&model, &sigma, dt);
            } else {
                rho = step_kraus(&model, &rho, dt);
                sigma = step_kraus(&model, &sigma, dt);
            }
            let next = trace_distance(&rho, &sigma).unwrap();
            prop_assert!(next <= d + 1e-8, "{next} > {d}");
            d = next;
        }
    }

    #[test]
    fn fidelity_and_trace_distance_relations(seed in any::<u64>(), sa in 1usize..12, sb in 1usize..12) {
        let s = space(12);
        let mut r = rng(seed);
        let rho = random_density(s, sa, &mut r);
        let sigma = random_density(s, sb, &mut r);
        let f = fidelity(&rho, &sigma).unwrap();
        let d = trace_distance(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&f));
        prop_assert!((0.0..=1.0 + 1e-9).contains(&d));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-10);
        prop_assert!(1.0 - f <= d + 1e-9);
        prop_assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);

        let u = random_unitary(s, &mut r);
        let rot = |x: &DensityMatrix| {
            DensityMatrix::normalized(s, u.matrix().dot(x.matrix()).dot(&linalg::dagger(u.matrix()))).unwrap()
        };
        prop_assert!((fidelity(&rot(&rho), &rot(&sigma)).unwrap() - f).abs() < 1e-9);
    }

    #[test]
    fn moments_increase_with_order(seed in any::<u64>(), lo in 2usize..6, nu in 1u32..4) {
        let s = space(16);
        // support on levels lo..16 only
        let base = random_density(s, 16 - lo, &mut rng(seed));
        let mut m = Array2::zeros((16, 16));
        for i in 0..(16 - lo) {
            for j in 0..(16 - lo) {
                m[[i + lo, j + lo]] = base.matrix()[[i, j]];
            }
        }
        let rho = DensityMatrix::new(s, m).unwrap();
        prop_assert!(moment(&rho, nu + 1) >= moment(&rho, nu));
    }

    #[test]
    fn qubit_embedding_round_trips(seed in any::<u64>(), alpha in 0.5f64..2.0) {
        let basis = CatBasis::new(space(40), alpha).unwrap();
        let q = QubitDensity::new(random_qubit(&mut rng(seed))).unwrap();
        let back = project_to_qubit(&embed_to_fock(&q, &basis), &basis).normalized().unwrap();
        prop_assert!(dist(back.entries(), q.entries()) < 1e-10);

        let b = q.bloch();
        prop_assert!(b.radius() <= 1.0 + 1e-9);
        let half = C64::new(0.5, 0.0);
        let affine = (Array2::<C64>::eye(2) + sigma_x() * b.x + sigma_y() * b.y + sigma_z() * b.z).mapv(|z| z * half);
        prop_assert!(dist(&affine, q.entries()) < 1e-12);
        prop_assert!(dist(QubitDensity::from_bloch(b).entries(), q.entries()) < 1e-12);
    }

    #[test]
    fn bloch_flow_stays_in_ball(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
        alpha in 0.5f64..2.0, t in 0.0f64..500.0
    ) {
        let r = (x * x + y * y + z * z).sqrt().max(1.0);
        let b0 = BlochVector::new(x / r, y / r, z / r).unwrap();
        let b = solve_bloch(b0, alpha, 0.01, t).unwrap();
        prop_assert!(b.radius() <= 1.0 + 1e-9);
    }

    #[test]
    fn closed_form_matches_qubit_flow(seed in any::<u64>(), alpha in 0.5f64..1.5) {
        let q = QubitDensity::new(random_qubit(&mut rng(seed))).unwrap();
        let gen = SlowGenerator::new(alpha, 0.05).unwrap();
        let traj = gen.integrate(&q, 1e-2, 20.0, 500).unwrap();
        for (t, state) in traj {
            let b = solve_bloch(q.bloch(), alpha, 0.05, t).unwrap();
            let got = state.bloch();
            prop_assert!((got.x - b.x).abs() + (got.y - b.y).abs() + (got.z - b.z).abs() < 1e-9);
        }
    }

    #[test]
    fn conserved_functionals_and_reductions(seed in any::<u64>(), m in 1usize..5, n in 2usize..20) {
        let mut r = rng(seed);
        let sys = random_block_system(m, n, 1e-2, &mut r).unwrap();
        let set = conserved_functionals(&sys.nominal(), m).unwrap();
        for f in &set.functionals {
            let p = f.concat();
            prop_assert!(f.residual(&sys) <= 1e-9 * p.dot(&p).sqrt());
        }
        let direct = reduce_direct(&sys).unwrap();
        let dual = reduce_dual(&sys, &set).unwrap();
        let scale = linalg::frobenius_real(&direct.q).max(1.0);
        prop_assert!(linalg::frobenius_real(&(&dual.q - &direct.q)) <= 1e-9 * scale);
        prop_assert_eq!(&direct.generator, &((&sys.b0 + &direct.q) * sys.epsilon));
    }

    #[test]
    fn vectorized_generator_preserves_trace(alpha in 0.5f64..1.5, eps in 0.0f64..0.5) {
        let s = space(8);
        let model = cat_model(s, alpha, 1.0, eps).unwrap();
        let v = vectorize_generator(s, |x| {
            model.rhs(&FockOperator::new(s, x.clone()).unwrap()).unwrap().into_matrix()
        });
        prop_assert!(v.trace_defect() < 1e-9);
    }
}

#[test]
fn slow_basis_is_orthonormal() {
    let basis = CatBasis::new(space(40), 1.0).unwrap();
    let ops = slow_basis(&basis);
    for (i, a) in ops.iter().enumerate() {
        assert!(a.is_hermitian(1e-14));
        for (j, b) in ops.iter().enumerate() {
            let ip = a.dot(b).trace();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - C64::new(want, 0.0)).norm() < 1e-12, "{i} {j} {ip}");
        }
    }
    // the off-diagonal elements are |c+><c-| + |c-><c+| and i(|c+><c-| - |c-><c+|) over √2
    let (p, m) = (basis.plus(), basis.minus());
    let sx = p.outer(m).add(&m.outer(p));
    let sy = p.outer(m).sub(&m.outer(p)).scale(C64::new(0.0, 1.0));
    let r = C64::new(2f64.sqrt(), 0.0);
    assert!(dist(ops[2].scale(r).matrix(), sx.matrix()) < 1e-12);
    assert!(dist(ops[3].scale(r).matrix(), sy.matrix()) < 1e-12);
}
